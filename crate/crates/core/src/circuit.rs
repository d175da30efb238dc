//! Trees of noisy box gates.
//!
//! Every gate has arity `k` and carries a box with `k - 1` input bits per
//! side, used with the case-A encoding: a gate receiving bits
//! `c_0 .. c_(k-1)` feeds `x_i = c_0 + c_i` to Alice's half and passes
//! `c_0 + A` to its parent. Bob, asked for leaf `b`, feeds each gate on the
//! path from the root to `b` the query for the slot his leaf sits in and
//! answers `beta = alpha + sum B`, with `alpha` the root's upward bit. Gates
//! off Bob's path only contribute Alice's marginal.
//!
//! [`exact_circuit_information`] computes `sum_b I(a_b; beta | b)` exactly for
//! uniform databases; [`evans_schulman_check`] evaluates the reliability
//! conditions for complete trees.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{binary_entropy, mutual_information, JointPmf};
use crate::nsbox::{sign, NsBox};
use crate::rac::{coding_noise, RacProtocol};

/// Exact enumeration limits.
pub const MAX_EXACT_LEAVES: usize = 8;
pub const MAX_EXACT_GATES: usize = 8;

/// Computational noise of a gate: `eps[x,y] = 2 Pr[A + B = x.y | x, y] - 1`
/// on every input pair, and its average over `x` for each query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateNoise {
    pub n_a: usize,
    pub n_b: usize,
    /// Row-major over zero-based `(x, y)`.
    pub eps: Vec<f64>,
    /// `eps_y[b]`: mean over `x` of `eps[x, y(b)]`.
    pub eps_y: Vec<f64>,
}

impl GateNoise {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.eps[x * (1 << self.n_b) + y]
    }

    pub fn epsilon_sq_sum(&self) -> f64 {
        self.eps_y.iter().map(|e| e * e).sum()
    }

    /// Largest spread of `eps[x, y(b)]` over `x`, zero for isotropic gates.
    pub fn anisotropy(&self, protocol: &RacProtocol) -> f64 {
        (0..protocol.k())
            .map(|b| {
                let y = protocol.bob_input(b);
                (0..protocol.num_x())
                    .map(|x| (self.get(x, y) - self.eps_y[b]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

pub fn computational_noise(nsbox: &NsBox, protocol: &RacProtocol) -> Result<GateNoise> {
    protocol.check_box(nsbox)?;
    nsbox.validate()?;
    let mut eps = Vec::with_capacity(nsbox.num_x() * nsbox.num_y());
    for x in 0..nsbox.num_x() {
        for y in 0..nsbox.num_y() {
            eps.push(2.0 * nsbox.parity_prob(x, y, protocol.task(x, y)) - 1.0);
        }
    }
    let nx = protocol.num_x();
    let ny = nsbox.num_y();
    let eps_y = (0..protocol.k())
        .map(|b| {
            let y = protocol.bob_input(b);
            (0..nx).map(|x| eps[x * ny + y]).sum::<f64>() / nx as f64
        })
        .collect();
    Ok(GateNoise {
        n_a: nsbox.n_a(),
        n_b: nsbox.n_b(),
        eps,
        eps_y,
    })
}

/// One gate of a circuit. Its inputs are `k` child gates, or `k` database
/// bits when `children` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateNode {
    pub id: usize,
    pub children: Vec<usize>,
    pub box_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Leaf(usize),
    Gate(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeCircuit {
    k: usize,
    depth: usize,
    nodes: Vec<GateNode>,
    boxes: BTreeMap<String, NsBox>,
    // Derived, indexed by position in `nodes`.
    slots: Vec<Vec<Slot>>,
    gate_box: Vec<String>,
    root: usize,
    leaf_paths: Vec<Vec<(usize, usize)>>,
}

impl TreeCircuit {
    /// Validates the tree: unique ids, one root, every other gate with exactly
    /// one parent, all gates reachable from the root, `k` or zero children per
    /// gate, and every `box_ref` resolving to a box with `k - 1` input bits.
    pub fn new(k: usize, nodes: Vec<GateNode>, boxes: BTreeMap<String, NsBox>) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("gate arity k={k} must be at least 2")));
        }
        if nodes.is_empty() {
            return Err(Error::domain("circuit has no gates"));
        }
        for (name, b) in &boxes {
            if b.n_a() != k - 1 || b.n_b() != k - 1 {
                return Err(Error::dims(format!(
                    "box {name:?} has inputs ({}, {}), arity {k} gates need ({}, {})",
                    b.n_a(),
                    b.n_b(),
                    k - 1,
                    k - 1
                )));
            }
        }
        let mut position = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if position.insert(node.id, i).is_some() {
                return Err(Error::domain(format!("duplicate gate id {}", node.id)));
            }
            if !boxes.contains_key(&node.box_ref) {
                return Err(Error::domain(format!(
                    "gate {} refers to unknown box {:?}",
                    node.id, node.box_ref
                )));
            }
            if !node.children.is_empty() && node.children.len() != k {
                return Err(Error::domain(format!(
                    "gate {} has {} children, expected 0 or {k}",
                    node.id,
                    node.children.len()
                )));
            }
        }
        let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            for c in &node.children {
                let &ci = position
                    .get(c)
                    .ok_or_else(|| Error::domain(format!("gate {} has unknown child {c}", node.id)))?;
                if parent[ci].replace(i).is_some() {
                    return Err(Error::domain(format!("gate {c} has more than one parent")));
                }
            }
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::domain(format!(
                "circuit needs exactly one root, found {}",
                roots.len()
            )));
        }
        let root = roots[0];

        // Depth-first from the root assigns leaves left to right and catches cycles.
        let mut slots = vec![Vec::new(); nodes.len()];
        let mut leaf_paths = Vec::new();
        let mut visited = vec![false; nodes.len()];
        let mut depth = 0;
        let mut stack: Vec<(usize, Vec<(usize, usize)>)> = vec![(root, Vec::new())];
        // Explicit stack visiting children in reverse keeps the left-to-right leaf order.
        let mut order = Vec::new();
        while let Some((g, path)) = stack.pop() {
            if visited[g] {
                return Err(Error::domain("circuit contains a cycle"));
            }
            visited[g] = true;
            order.push((g, path.clone()));
            let node = &nodes[g];
            for (j, c) in node.children.iter().enumerate().rev() {
                let mut p = path.clone();
                p.push((g, j));
                stack.push((position[c], p));
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(Error::domain("circuit has gates unreachable from the root"));
        }
        for (g, path) in order {
            let node = &nodes[g];
            depth = depth.max(path.len() + 1);
            if node.children.is_empty() {
                for j in 0..k {
                    let mut p = path.clone();
                    p.push((g, j));
                    slots[g].push(Slot::Leaf(leaf_paths.len()));
                    leaf_paths.push(p);
                }
            } else {
                slots[g] = node.children.iter().map(|c| Slot::Gate(position[c])).collect();
            }
        }
        let gate_box = nodes.iter().map(|n| n.box_ref.clone()).collect();
        Ok(TreeCircuit {
            k,
            depth,
            nodes,
            boxes,
            slots,
            gate_box,
            root,
            leaf_paths,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Longest leaf-to-root path, counted in gates.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of database bits.
    pub fn n(&self) -> usize {
        self.leaf_paths.len()
    }

    pub fn gate_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[GateNode] {
        &self.nodes
    }

    pub fn boxes(&self) -> &BTreeMap<String, NsBox> {
        &self.boxes
    }

    pub fn root_id(&self) -> usize {
        self.nodes[self.root].id
    }

    /// Gate ids from the root down to leaf `b`, with the slot taken at each.
    pub fn bob_path(&self, b: usize) -> Vec<(usize, usize)> {
        self.leaf_paths[b]
            .iter()
            .map(|&(g, j)| (self.nodes[g].id, j))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.leaf_paths.iter().all(|p| p.len() == self.depth)
    }

    fn gate_box(&self, g: usize) -> &NsBox {
        &self.boxes[&self.gate_box[g]]
    }

    pub fn to_json(&self) -> Result<String> {
        let boxes = self
            .boxes
            .iter()
            .map(|(name, b)| Ok((name.clone(), serde_json::from_str(&b.to_json()?)?)))
            .collect::<Result<BTreeMap<String, serde_json::Value>>>()?;
        let doc = CircuitJson {
            k: self.k,
            l: self.depth,
            nodes: self.nodes.clone(),
            boxes,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses a circuit description. `box_ref` names resolve against the
    /// document's `boxes` map first, then the builtins `pr`, `uniform` and
    /// `quantum-optimal` for arity `k`.
    pub fn from_json(json: &str) -> Result<Self> {
        let doc: CircuitJson = serde_json::from_str(json)?;
        if doc.k < 2 {
            return Err(Error::domain(format!("gate arity k={} must be at least 2", doc.k)));
        }
        let mut boxes = BTreeMap::new();
        for (name, value) in &doc.boxes {
            let b = NsBox::from_json(&value.to_string())
                .map_err(|e| Error::Parse(format!("boxes.{name}: {e}")))?;
            boxes.insert(name.clone(), b);
        }
        for node in &doc.nodes {
            if !boxes.contains_key(&node.box_ref) {
                if let Some(b) = builtin_gate(&node.box_ref, doc.k)? {
                    boxes.insert(node.box_ref.clone(), b);
                }
            }
        }
        let circuit = TreeCircuit::new(doc.k, doc.nodes, boxes)?;
        if circuit.depth != doc.l {
            return Err(Error::domain(format!(
                "declared depth l={} but the tree has depth {}",
                doc.l, circuit.depth
            )));
        }
        Ok(circuit)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CircuitJson {
    k: usize,
    l: usize,
    nodes: Vec<GateNode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    boxes: BTreeMap<String, serde_json::Value>,
}

/// Builtin gate boxes for arity `k`: `pr`, `uniform`, `quantum-optimal`.
pub fn builtin_gate(name: &str, k: usize) -> Result<Option<NsBox>> {
    let protocol = RacProtocol::new(k, crate::rac::Case::A)?;
    Ok(match name {
        "pr" => Some(protocol.pr_box()?),
        "uniform" => Some(protocol.uniform_box()?),
        "quantum-optimal" => Some(protocol.quantum_optimal_box()?),
        _ => None,
    })
}

/// Largest `l` with `k^l = n`, if `n` is a positive power of `k`.
fn exact_log(n: usize, k: usize) -> Option<usize> {
    let (mut m, mut l) = (n, 0);
    while m > 1 && m % k == 0 {
        m /= k;
        l += 1;
    }
    (m == 1 && l >= 1).then_some(l)
}

/// Complete `k`-ary pyramid over `n = k^l` leaves, every gate using `gate`.
/// Gate ids run layer by layer from the root (`0`).
pub fn build_rac_circuit(n: usize, k: usize, gate: &NsBox) -> Result<TreeCircuit> {
    if k < 2 {
        return Err(Error::domain(format!("gate arity k={k} must be at least 2")));
    }
    let l = exact_log(n, k)
        .ok_or_else(|| Error::domain(format!("n={n} is not a positive power of k={k}")))?;
    let mut nodes = Vec::new();
    let mut layer_start = 0;
    let mut layer_size = 1;
    for layer in 0..l {
        let next_start = layer_start + layer_size;
        for i in 0..layer_size {
            let id = layer_start + i;
            let children = if layer + 1 < l {
                (0..k).map(|j| next_start + i * k + j).collect()
            } else {
                Vec::new()
            };
            nodes.push(GateNode {
                id,
                children,
                box_ref: "gate".to_string(),
            });
        }
        layer_start = next_start;
        layer_size *= k;
    }
    let mut boxes = BTreeMap::new();
    boxes.insert("gate".to_string(), gate.clone());
    TreeCircuit::new(k, nodes, boxes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitInformation {
    #[serde(rename = "I_total")]
    pub i_total: f64,
    pub per_bit: Vec<f64>,
}

/// Case-A query input for slot `j` of a gate.
fn slot_query(j: usize) -> usize {
    if j == 0 {
        0
    } else {
        1 << (j - 1)
    }
}

struct Evaluator<'a> {
    circuit: &'a TreeCircuit,
    database: usize,
}

impl Evaluator<'_> {
    fn bit_dist(&self, slot: Slot) -> [f64; 2] {
        match slot {
            Slot::Leaf(i) => {
                if (self.database >> i) & 1 == 1 {
                    [0.0, 1.0]
                } else {
                    [1.0, 0.0]
                }
            }
            Slot::Gate(g) => self.off_path(g),
        }
    }

    /// Distribution of the upward bit of a gate Bob does not query.
    fn off_path(&self, g: usize) -> [f64; 2] {
        let k = self.circuit.k;
        let gate = self.circuit.gate_box(g);
        let inputs: Vec<[f64; 2]> = self.circuit.slots[g].iter().map(|&s| self.bit_dist(s)).collect();
        let mut out = [0.0; 2];
        for bits in 0..(1usize << k) {
            let weight: f64 = (0..k).map(|j| inputs[j][(bits >> j) & 1]).product();
            if weight == 0.0 {
                continue;
            }
            let (c0, x) = alice_input(bits, k);
            let marginal = gate.alice_marginal(x);
            for a in 0..2 {
                out[c0 ^ a] += weight * marginal[a];
            }
        }
        out
    }

    /// Joint distribution of `(upward bit, parity of Bob's outcomes)` for the
    /// path below and including `path[0]`, indexed `2u + s`.
    fn on_path(&self, path: &[(usize, usize)]) -> [f64; 4] {
        let (g, slot) = path[0];
        let k = self.circuit.k;
        let gate = self.circuit.gate_box(g);
        let y = slot_query(slot);
        let inputs: Vec<[f64; 2]> = self.circuit.slots[g]
            .iter()
            .enumerate()
            .map(|(j, &s)| if j == slot { [0.0; 2] } else { self.bit_dist(s) })
            .collect();
        // The queried child either is a database bit (parity 0) or continues the path.
        let queried: [f64; 4] = match self.circuit.slots[g][slot] {
            Slot::Leaf(i) => {
                let bit = (self.database >> i) & 1;
                let mut d = [0.0; 4];
                d[2 * bit] = 1.0;
                d
            }
            Slot::Gate(_) => self.on_path(&path[1..]),
        };
        let mut out = [0.0; 4];
        for bits in 0..(1usize << k) {
            let cj = (bits >> slot) & 1;
            let others: f64 = (0..k)
                .filter(|&j| j != slot)
                .map(|j| inputs[j][(bits >> j) & 1])
                .product();
            if others == 0.0 {
                continue;
            }
            let (c0, x) = alice_input(bits, k);
            let outcomes = gate.outcomes(x, y);
            for s in 0..2 {
                let w = others * queried[2 * cj + s];
                if w == 0.0 {
                    continue;
                }
                for (ab, &p) in outcomes.iter().enumerate() {
                    let (a, b) = (ab >> 1, ab & 1);
                    out[2 * (c0 ^ a) + (s ^ b)] += w * p;
                }
            }
        }
        out
    }
}

/// `(c_0, x)` for gate input bits packed as bit `j` = `c_j`.
fn alice_input(bits: usize, k: usize) -> (usize, usize) {
    let c0 = bits & 1;
    let mut x = 0;
    for i in 1..k {
        x |= (c0 ^ ((bits >> i) & 1)) << (i - 1);
    }
    (c0, x)
}

/// `sum_b I(a_b; beta | b)` for uniform databases, by exact marginalization
/// over databases and every gate outcome.
pub fn exact_circuit_information(circuit: &TreeCircuit) -> Result<CircuitInformation> {
    let n = circuit.n();
    if n > MAX_EXACT_LEAVES || circuit.gate_count() > MAX_EXACT_GATES {
        return Err(Error::TooLarge(format!(
            "circuit with n={n} leaves and {} gates exceeds the exact limits (n <= {MAX_EXACT_LEAVES}, gates <= {MAX_EXACT_GATES})",
            circuit.gate_count()
        )));
    }
    let weight = 1.0 / (1u64 << n) as f64;
    let per_bit = (0..n)
        .map(|b| {
            let dists: Vec<[f64; 4]> = (0..(1usize << n))
                .into_par_iter()
                .map(|database| Evaluator { circuit, database }.on_path(&circuit.leaf_paths[b]))
                .collect();
            // Summed in database order so the result does not depend on scheduling.
            let mut joint = [0.0f64; 4];
            for (database, d) in dists.iter().enumerate() {
                let target = (database >> b) & 1;
                for (us, &p) in d.iter().enumerate() {
                    let beta = (us >> 1) ^ (us & 1);
                    joint[2 * target + beta] += weight * p;
                }
            }
            JointPmf::new(2, 2, joint.to_vec()).map(|j| mutual_information(&j))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CircuitInformation {
        i_total: per_bit.iter().sum(),
        per_bit,
    })
}

/// Coding noise of a gate used with the case-A encoding; equals the
/// per-query average of [`computational_noise`].
pub fn gate_coding_noise(gate: &NsBox, k: usize) -> Result<Vec<f64>> {
    let protocol = RacProtocol::new(k, crate::rac::Case::A)?;
    Ok(coding_noise(gate, &protocol)?.xi)
}

/// `Delta(delta) = 1 + delta log2 delta + (1 - delta) log2 (1 - delta)`,
/// i.e. `1 - H2(delta)`.
pub fn reliability_margin(delta: f64) -> f64 {
    1.0 - binary_entropy(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityQuery {
    pub delta: f64,
    /// `sum_y eps_y^2` of the gates.
    pub epsilon_sq_sum: f64,
    pub n: u64,
    /// Depth; needed only when `epsilon_sq_sum > 1`.
    pub l: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EsCondition {
    /// `sum eps^2 > 1`: depth must reach `log(n Delta) / log(sum eps^2)`.
    #[serde(rename = "i")]
    DepthBound,
    /// `sum eps^2 <= 1`: at most `1 / Delta` inputs.
    #[serde(rename = "ii")]
    InputBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsVerdict {
    pub feasible: bool,
    pub which_condition: EsCondition,
    pub required_l: Option<f64>,
    pub required_l_ceil: Option<u64>,
    pub max_n: Option<f64>,
    #[serde(rename = "Delta")]
    pub delta_margin: f64,
    /// Condition (i) with `n Delta <= 1` imposes nothing.
    pub vacuous: bool,
}

pub fn evans_schulman_check(q: &ReliabilityQuery) -> Result<EsVerdict> {
    if !(q.delta > 0.0 && q.delta < 0.5) {
        return Err(Error::domain(format!(
            "reliability delta={} must lie in (0, 1/2); Delta there is {}",
            q.delta,
            reliability_margin(q.delta.clamp(0.0, 1.0))
        )));
    }
    if !(q.epsilon_sq_sum >= 0.0) || !q.epsilon_sq_sum.is_finite() {
        return Err(Error::domain(format!(
            "epsilon_sq_sum={} must be a finite non-negative number",
            q.epsilon_sq_sum
        )));
    }
    if q.n == 0 {
        return Err(Error::domain("circuit must have at least one input"));
    }
    let margin = reliability_margin(q.delta);
    if q.epsilon_sq_sum > 1.0 {
        let required = (q.n as f64 * margin).log2() / q.epsilon_sq_sum.log2();
        let vacuous = required <= 0.0;
        let l = q.l.ok_or_else(|| {
            Error::domain("condition (i) applies (sum eps^2 > 1); the depth l is required")
        })?;
        Ok(EsVerdict {
            feasible: vacuous || l as f64 >= required,
            which_condition: EsCondition::DepthBound,
            required_l: Some(required),
            required_l_ceil: Some(required.max(0.0).ceil() as u64),
            max_n: None,
            delta_margin: margin,
            vacuous,
        })
    } else {
        let max_n = 1.0 / margin;
        Ok(EsVerdict {
            feasible: q.n as f64 <= max_n,
            which_condition: EsCondition::InputBound,
            required_l: None,
            required_l_ceil: None,
            max_n: Some(max_n),
            delta_margin: margin,
            vacuous: false,
        })
    }
}

/// `eps_y` of the sign-scaled gate `C = s (-1)^(x.y)`: `s` for every query.
pub fn isotropic_gate(k: usize, s: f64) -> Result<NsBox> {
    let protocol = RacProtocol::new(k, crate::rac::Case::A)?;
    NsBox::from_correlators(&crate::nsbox::CorrelatorTable::from_fn(
        protocol.n_a(),
        protocol.n_b(),
        |x, y| s * sign(x, y),
    )?)
}
