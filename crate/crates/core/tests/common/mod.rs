#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng as _;
use tsirelson_lab::circuit::TreeCircuit;
use tsirelson_lab::nsbox::{CorrelatorTable, NsBox};
use tsirelson_lab::rng;

/// Frozen from a float64 reference evaluation.
pub const ONE_MINUS_H2_Q3: f64 = 0.2559924487509986; // 1 - H2((1 + 1/sqrt 3) / 2)
pub const ONE_MINUS_H2_Q2: f64 = 0.39912396330714384; // 1 - H2((1 + 1/sqrt 2) / 2)
pub const ONE_MINUS_H2_08: f64 = 0.2780719051126377;
pub const H2_075: f64 = 0.8112781244591328;
pub const DELTA_025: f64 = 0.18872187554086717;
pub const MAX_N_025: f64 = 5.2988027865558855;
pub const DELTA_01: f64 = 0.5310044064107188;
pub const REQUIRED_L_01: f64 = 3.086795738045109;

pub const TABLE_A: [(usize, f64); 7] = [
    (2, 2.8284),
    (3, 6.9282),
    (4, 16.0000),
    (5, 35.7771),
    (6, 78.3837),
    (7, 169.3281),
    (8, 362.0387),
];

pub const TABLE_B: [(usize, f64); 6] = [
    (3, 13.8564),
    (4, 32.0000),
    (5, 71.5542),
    (6, 156.7673),
    (7, 338.6562),
    (8, 724.0773),
];

/// The k = 3 optimal X as printed, four decimals.
pub fn printed_x() -> Vec<Vec<f64>> {
    let a = 0.5774;
    let t = 0.3333;
    vec![
        vec![1.0, t, t, -t, a, a, a],
        vec![t, 1.0, -t, t, a, -a, a],
        vec![t, -t, 1.0, t, a, a, -a],
        vec![-t, t, t, 1.0, a, -a, -a],
        vec![a, a, a, a, 1.0, 0.0, 0.0],
        vec![a, -a, a, -a, 0.0, 1.0, 0.0],
        vec![a, a, -a, -a, 0.0, 0.0, 1.0],
    ]
}

pub fn h2(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// `H(X) + H(Y) - H(X,Y)` of a 2 x 2 table.
pub fn mi_by_entropies(p: &[[f64; 2]; 2]) -> f64 {
    let h = |v: &[f64]| v.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.log2()).sum::<f64>();
    let px = [p[0][0] + p[0][1], p[1][0] + p[1][1]];
    let py = [p[0][0] + p[1][0], p[0][1] + p[1][1]];
    h(&px) + h(&py) - h(&[p[0][0], p[0][1], p[1][0], p[1][1]])
}

/// `A = f(x)`, `B = g(y)` with certainty.
pub fn deterministic_box(n_a: usize, n_b: usize, f: &[u8], g: &[u8]) -> NsBox {
    NsBox::from_fn(n_a, n_b, |x, y, a, b| if a == f[x] && b == g[y] { 1.0 } else { 0.0 }).unwrap()
}

/// A mixture of an arbitrary unbiased box with a local deterministic one.
pub fn random_box(n_a: usize, n_b: usize, seed: u64) -> NsBox {
    let mut r = rng::seeded(seed);
    let c = CorrelatorTable::from_fn(n_a, n_b, |_, _| 0.0).unwrap();
    let values: Vec<f64> = c.values().iter().map(|_| r.random_range(-1.0..=1.0)).collect();
    let unbiased = NsBox::from_correlators(&CorrelatorTable::new(n_a, n_b, values).unwrap()).unwrap();
    let f: Vec<u8> = (0..1 << n_a).map(|_| r.random_range(0..2)).collect();
    let g: Vec<u8> = (0..1 << n_b).map(|_| r.random_range(0..2)).collect();
    let lambda = r.random_range(0.0..=1.0);
    unbiased.mix(&deterministic_box(n_a, n_b, &f, &g), lambda).unwrap()
}

/// Unbiased gate for arity `k` whose per-query noise satisfies `sum eps_y^2 <= 1`:
/// random correlators, rescaled so the worst case `sum_y max_x |C|^2` is at most one.
pub fn random_ic_gate(k: usize, seed: u64) -> NsBox {
    let mut r = rng::seeded(seed);
    let n = k - 1;
    let (nx, ny) = (1usize << n, 1usize << n);
    let mut values: Vec<f64> = (0..nx * ny).map(|_| r.random_range(-1.0..=1.0)).collect();
    let queries: Vec<usize> = (0..k).map(|j| if j == 0 { 0 } else { 1 << (j - 1) }).collect();
    let worst: f64 = queries
        .iter()
        .map(|&y| (0..nx).map(|x| values[x * ny + y].abs()).fold(0.0, f64::max).powi(2))
        .sum();
    let target = r.random_range(0.0..=1.0);
    if worst > 0.0 {
        let scale = (target / worst).sqrt().min(1.0);
        for v in &mut values {
            *v *= scale;
        }
    }
    NsBox::from_correlators(&CorrelatorTable::new(n, n, values).unwrap()).unwrap()
}

/// `I(a_b; beta | b)` for every leaf, by summing over every database and every
/// joint outcome `(A, B)` of every gate. Off-path gates receive Bob input 0.
pub fn brute_force_information(circuit: &TreeCircuit) -> Vec<f64> {
    let k = circuit.k();
    let nodes = circuit.nodes();
    let index: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let root = index[&circuit.root_id()];

    // Post-order and leaf numbering, left to right.
    enum In {
        Leaf(usize),
        Gate(usize),
    }
    let mut inputs: Vec<Vec<In>> = (0..nodes.len()).map(|_| Vec::new()).collect();
    let mut post = Vec::new();
    let mut paths: Vec<Vec<(usize, usize)>> = Vec::new();
    fn walk(
        g: usize,
        path: &mut Vec<(usize, usize)>,
        nodes: &[tsirelson_lab::circuit::GateNode],
        index: &HashMap<usize, usize>,
        k: usize,
        inputs: &mut Vec<Vec<In>>,
        post: &mut Vec<usize>,
        paths: &mut Vec<Vec<(usize, usize)>>,
    ) {
        for j in 0..k {
            path.push((g, j));
            if nodes[g].children.is_empty() {
                inputs[g].push(In::Leaf(paths.len()));
                paths.push(path.clone());
            } else {
                let c = index[&nodes[g].children[j]];
                inputs[g].push(In::Gate(c));
                walk(c, path, nodes, index, k, inputs, post, paths);
            }
            path.pop();
        }
        post.push(g);
    }
    walk(root, &mut Vec::new(), nodes, &index, k, &mut inputs, &mut post, &mut paths);

    let n = paths.len();
    let gates = nodes.len();
    let boxes: Vec<&NsBox> = nodes.iter().map(|g| &circuit.boxes()[&g.box_ref]).collect();
    let weight = 1.0 / (1u64 << n) as f64;
    (0..n)
        .map(|b| {
            let mut bob_y = vec![None; gates];
            for &(g, j) in &paths[b] {
                bob_y[g] = Some(if j == 0 { 0 } else { 1usize << (j - 1) });
            }
            let mut joint = [[0.0f64; 2]; 2];
            for db in 0..(1usize << n) {
                for branch in 0..(1usize << (2 * gates)) {
                    let mut up = vec![0usize; gates];
                    let mut prob = 1.0;
                    let mut parity = 0;
                    for &g in &post {
                        let bits: Vec<usize> = inputs[g]
                            .iter()
                            .map(|i| match *i {
                                In::Leaf(l) => (db >> l) & 1,
                                In::Gate(c) => up[c],
                            })
                            .collect();
                        let x = (1..k).fold(0, |acc, i| acc | ((bits[0] ^ bits[i]) << (i - 1)));
                        let ab = (branch >> (2 * g)) & 3;
                        let (a, bb) = ((ab >> 1) as u8, (ab & 1) as u8);
                        prob *= boxes[g].prob(x, bob_y[g].unwrap_or(0), a, bb);
                        up[g] = bits[0] ^ a as usize;
                        if bob_y[g].is_some() {
                            parity ^= bb as usize;
                        }
                    }
                    if prob == 0.0 {
                        continue;
                    }
                    let beta = up[root] ^ parity;
                    joint[(db >> b) & 1][beta] += weight * prob;
                }
            }
            mi_by_entropies(&joint)
        })
        .collect()
}
