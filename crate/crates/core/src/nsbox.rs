//! No-signaling boxes over binary outcomes.
//!
//! Inputs are bit strings `x_1 .. x_N`. Internally an input is addressed by
//! its zero-based index `sum 2^(i-1) x_i`; the JSON format uses the
//! one-based canonical index (zero-based plus one).

use serde::{Deserialize, Serialize};

use crate::error::{BoxInvariant, Error, Result};

/// Tolerance used by [`NsBox::validate`].
pub const VALIDATION_TOL: f64 = 1e-9;

/// Largest supported input length; keeps dense tables in memory.
pub const MAX_INPUT_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::domain("bit string must have at least one bit"));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::domain(format!("bit value {bad} is not 0 or 1")));
        }
        Ok(BitString(bits))
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![0; len.max(1)])
    }

    /// Inverse of [`BitString::index`].
    pub fn from_index(index: usize, len: usize) -> Self {
        BitString((0..len).map(|i| ((index >> i) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Zero-based index, `x_1` is the least significant bit.
    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    /// `1 + sum 2^(i-1) x_i`, ranging over `1..=2^N`.
    pub fn canonical_index(&self) -> usize {
        self.index() + 1
    }

    pub fn dot(&self, other: &BitString) -> u8 {
        dot(self.index(), other.index())
    }
}

/// Inner product mod 2 of two zero-based bit-string indices.
pub fn dot(x: usize, y: usize) -> u8 {
    ((x & y).count_ones() & 1) as u8
}

/// `(-1)^(x.y)`.
pub fn sign(x: usize, y: usize) -> f64 {
    if dot(x, y) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Table of correlators `C[x,y]` indexed by zero-based input indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable {
    n_a: usize,
    n_b: usize,
    c: Vec<f64>,
}

impl CorrelatorTable {
    pub fn new(n_a: usize, n_b: usize, c: Vec<f64>) -> Result<Self> {
        check_input_bits(n_a, n_b)?;
        let expected = (1usize << n_a) * (1usize << n_b);
        if c.len() != expected {
            return Err(Error::dims(format!(
                "correlator table needs {expected} entries, got {}",
                c.len()
            )));
        }
        Ok(CorrelatorTable { n_a, n_b, c })
    }

    pub fn from_fn(n_a: usize, n_b: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        check_input_bits(n_a, n_b)?;
        let (nx, ny) = (1usize << n_a, 1usize << n_b);
        let mut c = Vec::with_capacity(nx * ny);
        for x in 0..nx {
            for y in 0..ny {
                c.push(f(x, y));
            }
        }
        Ok(CorrelatorTable { n_a, n_b, c })
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn num_x(&self) -> usize {
        1 << self.n_a
    }

    pub fn num_y(&self) -> usize {
        1 << self.n_b
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.c[x * self.num_y() + y]
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Conditional distribution `p(A,B | x,y)` over binary outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct NsBox {
    n_a: usize,
    n_b: usize,
    // [(x * num_y + y) * 4 + 2A + B]
    p: Vec<f64>,
}

impl NsBox {
    /// Builds a box and checks every invariant.
    pub fn new(n_a: usize, n_b: usize, p: Vec<f64>) -> Result<Self> {
        let table = Self::from_raw(n_a, n_b, p)?;
        table.validate()?;
        Ok(table)
    }

    /// Builds a probability table, checking only its shape.
    pub fn from_raw(n_a: usize, n_b: usize, p: Vec<f64>) -> Result<Self> {
        check_input_bits(n_a, n_b)?;
        let expected = (1usize << n_a) * (1usize << n_b) * 4;
        if p.len() != expected {
            return Err(Error::dims(format!(
                "box table needs {expected} entries, got {}",
                p.len()
            )));
        }
        Ok(NsBox { n_a, n_b, p })
    }

    pub fn from_fn(
        n_a: usize,
        n_b: usize,
        f: impl Fn(usize, usize, u8, u8) -> f64,
    ) -> Result<Self> {
        check_input_bits(n_a, n_b)?;
        let (nx, ny) = (1usize << n_a, 1usize << n_b);
        let mut p = Vec::with_capacity(nx * ny * 4);
        for x in 0..nx {
            for y in 0..ny {
                for ab in 0..4u8 {
                    p.push(f(x, y, ab >> 1, ab & 1));
                }
            }
        }
        Self::new(n_a, n_b, p)
    }

    /// Box with `A + B = x.y (mod 2)` with certainty and uniform marginals.
    pub fn pr(n_a: usize, n_b: usize) -> Result<Self> {
        Self::from_fn(n_a, n_b, |x, y, a, b| {
            if (a ^ b) == dot(x, y) {
                0.5
            } else {
                0.0
            }
        })
    }

    pub fn uniform(n_a: usize, n_b: usize) -> Result<Self> {
        Self::from_fn(n_a, n_b, |_, _, _, _| 0.25)
    }

    /// Unbiased-marginal box with the given correlators:
    /// `p(A,B|x,y) = (1 + (-1)^(A+B) C[x,y]) / 4`.
    pub fn from_correlators(c: &CorrelatorTable) -> Result<Self> {
        for x in 0..c.num_x() {
            for y in 0..c.num_y() {
                let v = c.get(x, y);
                if !(v.abs() <= 1.0) {
                    return Err(Error::domain(format!(
                        "correlator {v} at (x={}, y={}) outside [-1, 1]",
                        x + 1,
                        y + 1
                    )));
                }
            }
        }
        let mut p = Vec::with_capacity(c.values().len() * 4);
        for &v in c.values() {
            p.extend_from_slice(&[(1.0 + v) / 4.0, (1.0 - v) / 4.0, (1.0 - v) / 4.0, (1.0 + v) / 4.0]);
        }
        Self::new(c.n_a(), c.n_b(), p)
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn num_x(&self) -> usize {
        1 << self.n_a
    }

    pub fn num_y(&self) -> usize {
        1 << self.n_b
    }

    pub fn prob(&self, x: usize, y: usize, a: u8, b: u8) -> f64 {
        self.p[self.offset(x, y) + 2 * a as usize + b as usize]
    }

    /// The four outcome probabilities for `(x, y)` ordered `(0,0),(0,1),(1,0),(1,1)`.
    pub fn outcomes(&self, x: usize, y: usize) -> [f64; 4] {
        let o = self.offset(x, y);
        [self.p[o], self.p[o + 1], self.p[o + 2], self.p[o + 3]]
    }

    /// Alice's marginal `p(A|x)`, read at `y = 0`.
    pub fn alice_marginal(&self, x: usize) -> [f64; 2] {
        let o = self.outcomes(x, 0);
        [o[0] + o[1], o[2] + o[3]]
    }

    /// `Pr[A + B = bit | x, y]`.
    pub fn parity_prob(&self, x: usize, y: usize, bit: u8) -> f64 {
        let o = self.outcomes(x, y);
        if bit == 0 {
            o[0] + o[3]
        } else {
            o[1] + o[2]
        }
    }

    fn offset(&self, x: usize, y: usize) -> usize {
        (x * self.num_y() + y) * 4
    }

    /// `C[x,y] = sum (-1)^(A+B) p(A,B|x,y)`.
    pub fn correlator(&self) -> Result<CorrelatorTable> {
        self.validate()?;
        let c = self
            .p
            .chunks_exact(4)
            .map(|o| o[0] - o[1] - o[2] + o[3])
            .collect();
        CorrelatorTable::new(self.n_a, self.n_b, c)
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &NsBox, lambda: f64) -> Result<NsBox> {
        if self.n_a != other.n_a || self.n_b != other.n_b {
            return Err(Error::dims("cannot mix boxes with different input lengths"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::domain(format!("mixing weight {lambda} outside [0, 1]")));
        }
        let p = self
            .p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        NsBox::new(self.n_a, self.n_b, p)
    }

    pub fn report(&self) -> NoSignalingReport {
        validate_no_signaling(self)
    }

    /// Fails with the first violated invariant at the worst offending input pair.
    pub fn validate(&self) -> Result<()> {
        let r = self.report();
        let checks = [
            (
                BoxInvariant::NonNegativity,
                (-r.min_probability).max(0.0),
                r.min_probability_at,
            ),
            (
                BoxInvariant::Normalization,
                r.max_normalization_deviation,
                r.max_normalization_at,
            ),
            (
                BoxInvariant::NoSignalingToAlice,
                r.max_alice_marginal_deviation,
                r.max_alice_marginal_at,
            ),
            (
                BoxInvariant::NoSignalingToBob,
                r.max_bob_marginal_deviation,
                r.max_bob_marginal_at,
            ),
        ];
        for (invariant, deviation, (x, y)) in checks {
            if !(deviation <= VALIDATION_TOL) {
                return Err(Error::InvalidBox {
                    invariant,
                    x,
                    y,
                    deviation,
                });
            }
        }
        Ok(())
    }
}

fn check_input_bits(n_a: usize, n_b: usize) -> Result<()> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::domain("input lengths must be at least one bit"));
    }
    if n_a > MAX_INPUT_BITS || n_b > MAX_INPUT_BITS {
        return Err(Error::domain(format!(
            "input lengths ({n_a}, {n_b}) exceed the supported maximum {MAX_INPUT_BITS}"
        )));
    }
    Ok(())
}

/// Deviations of a probability table from the box invariants.
///
/// Locations are canonical (1-based) `(x, y)` pairs. Marginal deviations are
/// measured against the first input of the other party.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignalingReport {
    pub max_normalization_deviation: f64,
    pub max_normalization_at: (usize, usize),
    pub min_probability: f64,
    pub min_probability_at: (usize, usize),
    pub max_alice_marginal_deviation: f64,
    pub max_alice_marginal_at: (usize, usize),
    pub max_bob_marginal_deviation: f64,
    pub max_bob_marginal_at: (usize, usize),
    pub passes: bool,
}

pub fn validate_no_signaling(table: &NsBox) -> NoSignalingReport {
    let (nx, ny) = (table.num_x(), table.num_y());
    let mut norm = (0.0f64, (1, 1));
    let mut minp = (f64::INFINITY, (1, 1));
    let mut alice = (0.0f64, (1, 1));
    let mut bob = (0.0f64, (1, 1));

    fn bump(slot: &mut (f64, (usize, usize)), dev: f64, at: (usize, usize)) {
        // NaN must register as a violation.
        if dev > slot.0 || dev.is_nan() && !slot.0.is_nan() {
            *slot = (dev, at);
        }
    }

    for x in 0..nx {
        let ref_a = table.outcomes(x, 0);
        for y in 0..ny {
            let o = table.outcomes(x, y);
            let at = (x + 1, y + 1);
            bump(&mut norm, (o.iter().sum::<f64>() - 1.0).abs(), at);
            for &v in &o {
                if v < minp.0 || v.is_nan() {
                    minp = (v, at);
                }
            }
            for a in 0..2 {
                let dev = (o[2 * a] + o[2 * a + 1] - ref_a[2 * a] - ref_a[2 * a + 1]).abs();
                bump(&mut alice, dev, at);
            }
            let ref_b = table.outcomes(0, y);
            for b in 0..2 {
                let dev = (o[b] + o[2 + b] - ref_b[b] - ref_b[2 + b]).abs();
                bump(&mut bob, dev, at);
            }
        }
    }

    let ok = |d: f64| d <= VALIDATION_TOL;
    let passes = ok(norm.0) && minp.0 >= -VALIDATION_TOL && ok(alice.0) && ok(bob.0);
    NoSignalingReport {
        max_normalization_deviation: norm.0,
        max_normalization_at: norm.1,
        min_probability: minp.0,
        min_probability_at: minp.1,
        max_alice_marginal_deviation: alice.0,
        max_alice_marginal_at: alice.1,
        max_bob_marginal_deviation: bob.0,
        max_bob_marginal_at: bob.1,
        passes,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BoxEntry {
    x: usize,
    y: usize,
    #[serde(rename = "A")]
    a: u8,
    #[serde(rename = "B")]
    b: u8,
    prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoxJson {
    n_a: usize,
    n_b: usize,
    p: Vec<BoxEntry>,
}

impl NsBox {
    pub fn to_json(&self) -> Result<String> {
        let mut p = Vec::with_capacity(self.p.len());
        for x in 0..self.num_x() {
            for y in 0..self.num_y() {
                for ab in 0..4u8 {
                    let (a, b) = (ab >> 1, ab & 1);
                    p.push(BoxEntry {
                        x: x + 1,
                        y: y + 1,
                        a,
                        b,
                        prob: self.prob(x, y, a, b),
                    });
                }
            }
        }
        Ok(serde_json::to_string_pretty(&BoxJson {
            n_a: self.n_a,
            n_b: self.n_b,
            p,
        })?)
    }

    /// Parses the JSON table format without validating the invariants.
    ///
    /// Every `(x, y, A, B)` must appear exactly once.
    pub fn from_json_unchecked(json: &str) -> Result<NsBox> {
        let raw: BoxJson = serde_json::from_str(json)?;
        check_input_bits(raw.n_a, raw.n_b)?;
        let (nx, ny) = (1usize << raw.n_a, 1usize << raw.n_b);
        let mut p = vec![f64::NAN; nx * ny * 4];
        for (i, e) in raw.p.iter().enumerate() {
            if e.x == 0 || e.x > nx || e.y == 0 || e.y > ny || e.a > 1 || e.b > 1 {
                return Err(Error::Parse(format!(
                    "p[{i}]: entry (x={}, y={}, A={}, B={}) out of range",
                    e.x, e.y, e.a, e.b
                )));
            }
            let slot = ((e.x - 1) * ny + (e.y - 1)) * 4 + 2 * e.a as usize + e.b as usize;
            if !p[slot].is_nan() {
                return Err(Error::Parse(format!(
                    "p[{i}]: duplicate entry (x={}, y={}, A={}, B={})",
                    e.x, e.y, e.a, e.b
                )));
            }
            p[slot] = e.prob;
        }
        if let Some(slot) = p.iter().position(|v| v.is_nan()) {
            let (xy, ab) = (slot / 4, slot % 4);
            return Err(Error::Parse(format!(
                "p: missing entry (x={}, y={}, A={}, B={})",
                xy / ny + 1,
                xy % ny + 1,
                ab >> 1,
                ab & 1
            )));
        }
        NsBox::from_raw(raw.n_a, raw.n_b, p)
    }

    pub fn from_json(json: &str) -> Result<NsBox> {
        let table = Self::from_json_unchecked(json)?;
        table.validate()?;
        Ok(table)
    }
}
