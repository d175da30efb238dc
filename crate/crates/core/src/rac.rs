//! Random access codes built on a single no-signaling box.
//!
//! Two encodings of a `k`-bit database are supported:
//!
//! - [`Case::A`]: Alice inputs `x_i = a_0 + a_i` (`k - 1` bits), Bob inputs
//!   `y_i = [i == b]` for `b != 0` and the zero string for `b = 0`. Alice sends
//!   `alpha = a_0 + A`.
//! - [`Case::B`]: Alice inputs the database itself (`k` bits), Bob inputs
//!   `y_i = [i == b + 1]`. Alice sends `alpha = A`.
//!
//! In both cases the task function is `f(x, y) = x.y mod 2` and Bob answers
//! `beta = alpha + B`, which equals `a_b` exactly when `A + B = f(x, y)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nsbox::{dot, sign, BitString, CorrelatorTable, NsBox};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::A => "a",
            Case::B => "b",
        })
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Case::A),
            "b" | "B" => Ok(Case::B),
            _ => Err(Error::domain(format!("unknown case {s:?}, expected a or b"))),
        }
    }
}

/// Largest database size; case B at this size needs 2^12-entry tables.
pub const MAX_K: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RacProtocol {
    k: usize,
    case: Case,
}

impl RacProtocol {
    pub fn new(k: usize, case: Case) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("database size k={k} must be at least 2")));
        }
        if k > MAX_K {
            return Err(Error::domain(format!("database size k={k} exceeds {MAX_K}")));
        }
        Ok(RacProtocol { k, case })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn case(&self) -> Case {
        self.case
    }

    /// Alice's input length.
    pub fn n_a(&self) -> usize {
        match self.case {
            Case::A => self.k - 1,
            Case::B => self.k,
        }
    }

    pub fn n_b(&self) -> usize {
        self.n_a()
    }

    /// Number of Alice inputs reachable by the encoding (`N_x`).
    pub fn num_x(&self) -> usize {
        1 << self.n_a()
    }

    pub fn task(&self, x: usize, y: usize) -> u8 {
        dot(x, y)
    }

    /// Zero-based index of Alice's input for database `a` (bit `i` is `a_i`).
    pub fn alice_input(&self, database: usize) -> usize {
        match self.case {
            Case::A => {
                let a0 = database & 1;
                let rest = database >> 1;
                if a0 == 1 {
                    !rest & (self.num_x() - 1)
                } else {
                    rest
                }
            }
            Case::B => database,
        }
    }

    /// Zero-based index of Bob's input for query `b`.
    pub fn bob_input(&self, b: usize) -> usize {
        debug_assert!(b < self.k);
        match self.case {
            Case::A if b == 0 => 0,
            Case::A => 1 << (b - 1),
            Case::B => 1 << b,
        }
    }

    /// Inverse of [`RacProtocol::bob_input`].
    pub fn query_of_input(&self, y: usize) -> Option<usize> {
        (0..self.k).find(|&b| self.bob_input(b) == y)
    }

    pub fn encode_alice(&self, database: &BitString) -> Result<BitString> {
        if database.len() != self.k {
            return Err(Error::domain(format!(
                "database has {} bits, protocol expects {}",
                database.len(),
                self.k
            )));
        }
        let bits = database.bits();
        let x = match self.case {
            Case::A => bits[1..].iter().map(|&ai| bits[0] ^ ai).collect(),
            Case::B => bits.to_vec(),
        };
        BitString::new(x)
    }

    pub fn encode_bob(&self, b: usize) -> Result<BitString> {
        self.check_query(b)?;
        Ok(BitString::from_index(self.bob_input(b), self.n_b()))
    }

    /// Bob's guess given the database and the box outcomes.
    pub fn guess(&self, database: usize, a: u8, b: u8) -> u8 {
        let alpha = match self.case {
            Case::A => (database & 1) as u8 ^ a,
            Case::B => a,
        };
        alpha ^ b
    }

    pub fn check_query(&self, b: usize) -> Result<()> {
        if b >= self.k {
            return Err(Error::domain(format!(
                "query b={b} outside 0..{}",
                self.k - 1
            )));
        }
        Ok(())
    }

    pub fn check_box(&self, nsbox: &NsBox) -> Result<()> {
        if nsbox.n_a() != self.n_a() || nsbox.n_b() != self.n_b() {
            return Err(Error::dims(format!(
                "box inputs ({}, {}) do not match case {} with k={} (expects ({}, {}))",
                nsbox.n_a(),
                nsbox.n_b(),
                self.case,
                self.k,
                self.n_a(),
                self.n_b()
            )));
        }
        Ok(())
    }

    pub fn check_table(&self, c: &CorrelatorTable) -> Result<()> {
        if c.n_a() != self.n_a() || c.n_b() != self.n_b() {
            return Err(Error::dims(format!(
                "correlator table inputs ({}, {}) do not match case {} with k={}",
                c.n_a(),
                c.n_b(),
                self.case,
                self.k
            )));
        }
        Ok(())
    }

    /// Correlators `s * (-1)^(x.y)` on every input pair.
    pub fn scaled_sign_correlators(&self, s: f64) -> Result<CorrelatorTable> {
        CorrelatorTable::from_fn(self.n_a(), self.n_b(), |x, y| s * sign(x, y))
    }

    /// The box with `C = M / sqrt(k)`, saturating the quadratic bound.
    pub fn quantum_optimal_box(&self) -> Result<NsBox> {
        NsBox::from_correlators(&self.scaled_sign_correlators(1.0 / (self.k as f64).sqrt())?)
    }

    pub fn pr_box(&self) -> Result<NsBox> {
        NsBox::pr(self.n_a(), self.n_b())
    }

    pub fn uniform_box(&self) -> Result<NsBox> {
        NsBox::uniform(self.n_a(), self.n_b())
    }
}

/// Coding noise `xi[b] = 2 Pr[beta = a_b | b] - 1`, one entry per query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseVector {
    pub xi: Vec<f64>,
}

impl NoiseVector {
    pub fn sum(&self) -> f64 {
        self.xi.iter().sum()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.xi.iter().map(|v| v * v).sum()
    }
}

/// `Pr[beta = a_b | b]`: average over Alice's inputs of `Pr[A + B = f | x, y(b)]`.
pub fn success_probability(nsbox: &NsBox, protocol: &RacProtocol, b: usize) -> Result<f64> {
    protocol.check_box(nsbox)?;
    protocol.check_query(b)?;
    let y = protocol.bob_input(b);
    let total: f64 = (0..protocol.num_x())
        .map(|x| nsbox.parity_prob(x, y, protocol.task(x, y)))
        .sum();
    Ok(total / protocol.num_x() as f64)
}

/// `xi[y] = (1/N_x) sum_x (-1)^f(x,y) C[x,y]`, computed from the correlators.
pub fn coding_noise(nsbox: &NsBox, protocol: &RacProtocol) -> Result<NoiseVector> {
    protocol.check_box(nsbox)?;
    let c = nsbox.correlator()?;
    Ok(coding_noise_from_correlators(&c, protocol))
}

pub(crate) fn coding_noise_from_correlators(c: &CorrelatorTable, protocol: &RacProtocol) -> NoiseVector {
    let nx = protocol.num_x();
    let xi = (0..protocol.k())
        .map(|b| {
            let y = protocol.bob_input(b);
            (0..nx).map(|x| sign(x, y) * c.get(x, y)).sum::<f64>() / nx as f64
        })
        .collect();
    NoiseVector { xi }
}

/// One protocol run: Bob's guess and the bit he is after.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RacOutcome {
    pub guess: u8,
    pub target: u8,
}

impl RacOutcome {
    pub fn success(&self) -> bool {
        self.guess == self.target
    }
}

pub fn simulate_rac(
    nsbox: &NsBox,
    protocol: &RacProtocol,
    database: &BitString,
    b: usize,
    seed: u64,
) -> Result<RacOutcome> {
    protocol.check_box(nsbox)?;
    protocol.check_query(b)?;
    if database.len() != protocol.k() {
        return Err(Error::domain(format!(
            "database has {} bits, protocol expects {}",
            database.len(),
            protocol.k()
        )));
    }
    let mut rng = rng::seeded(seed);
    Ok(run_once(nsbox, protocol, database.index(), b, &mut rng))
}

fn run_once(
    nsbox: &NsBox,
    protocol: &RacProtocol,
    database: usize,
    b: usize,
    rng: &mut rng::Rng,
) -> RacOutcome {
    let x = protocol.alice_input(database);
    let y = protocol.bob_input(b);
    let (a_out, b_out) = sample_outcome(&nsbox.outcomes(x, y), rng.random::<f64>());
    RacOutcome {
        guess: protocol.guess(database, a_out, b_out),
        target: ((database >> b) & 1) as u8,
    }
}

/// Inverse-CDF draw over the four outcomes `(0,0),(0,1),(1,0),(1,1)`.
fn sample_outcome(p: &[f64; 4], u: f64) -> (u8, u8) {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return ((i >> 1) as u8, (i & 1) as u8);
        }
    }
    // Rounding left a sliver above the cumulative sum; take the last outcome with mass.
    let last = p.iter().rposition(|&v| v > 0.0).unwrap_or(3);
    ((last >> 1) as u8, (last & 1) as u8)
}

/// Monte Carlo estimate of the success probability for query `b` with uniform
/// databases. Trial `i` uses the stream `seed + i`.
pub fn estimate_success(
    nsbox: &NsBox,
    protocol: &RacProtocol,
    b: usize,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    protocol.check_box(nsbox)?;
    protocol.check_query(b)?;
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let mask = (1usize << protocol.k()) - 1;
    let hits = (0..trials)
        .filter(|&i| {
            let mut rng = rng::stream(seed, i);
            let database = rng.random::<u64>() as usize & mask;
            run_once(nsbox, protocol, database, b, &mut rng).success()
        })
        .count();
    Ok(hits as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(v: &[u8]) -> BitString {
        BitString::new(v.to_vec()).unwrap()
    }

    #[test]
    fn encode_alice_case_a() {
        let p = RacProtocol::new(3, Case::A).unwrap();
        assert_eq!(p.encode_alice(&bits(&[0, 0, 0])).unwrap(), bits(&[0, 0]));
        assert_eq!(p.encode_alice(&bits(&[1, 0, 1])).unwrap(), bits(&[1, 0]));
        assert!(p.encode_alice(&bits(&[1, 0])).is_err());
    }

    #[test]
    fn encode_alice_case_b_is_identity() {
        let p = RacProtocol::new(3, Case::B).unwrap();
        assert_eq!(p.encode_alice(&bits(&[1, 0, 1])).unwrap(), bits(&[1, 0, 1]));
    }

    #[test]
    fn index_encoding_agrees_with_bit_encoding() {
        for case in [Case::A, Case::B] {
            for k in 2..=5 {
                let p = RacProtocol::new(k, case).unwrap();
                for d in 0..(1usize << k) {
                    let db = BitString::from_index(d, k);
                    assert_eq!(p.encode_alice(&db).unwrap().index(), p.alice_input(d));
                }
            }
        }
    }

    #[test]
    fn encode_bob_examples() {
        let a = RacProtocol::new(3, Case::A).unwrap();
        assert_eq!(a.encode_bob(0).unwrap(), bits(&[0, 0]));
        assert_eq!(a.encode_bob(2).unwrap(), bits(&[0, 1]));
        assert!(a.encode_bob(3).is_err());
        let b = RacProtocol::new(3, Case::B).unwrap();
        assert_eq!(b.encode_bob(0).unwrap(), bits(&[1, 0, 0]));
        for b_ in 0..3 {
            assert_eq!(b.query_of_input(b.bob_input(b_)), Some(b_));
        }
    }

    #[test]
    fn success_of_reference_boxes() {
        let p = RacProtocol::new(3, Case::A).unwrap();
        let pr = p.pr_box().unwrap();
        let uni = p.uniform_box().unwrap();
        let q = p.quantum_optimal_box().unwrap();
        let expected_q = (1.0 + 1.0 / 3f64.sqrt()) / 2.0;
        for b in 0..3 {
            assert_eq!(success_probability(&pr, &p, b).unwrap(), 1.0);
            assert_eq!(success_probability(&uni, &p, b).unwrap(), 0.5);
            assert!((success_probability(&q, &p, b).unwrap() - expected_q).abs() < 1e-12);
        }
        assert!((expected_q - 0.788675).abs() < 1e-6);
    }

    #[test]
    fn coding_noise_of_reference_boxes() {
        let p = RacProtocol::new(3, Case::A).unwrap();
        let xi_pr = coding_noise(&p.pr_box().unwrap(), &p).unwrap();
        assert!(xi_pr.xi.iter().all(|&v| v == 1.0));
        let xi_u = coding_noise(&p.uniform_box().unwrap(), &p).unwrap();
        assert!(xi_u.xi.iter().all(|&v| v == 0.0));
        let xi_q = coding_noise(&p.quantum_optimal_box().unwrap(), &p).unwrap();
        for v in xi_q.xi {
            assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = RacProtocol::new(3, Case::B).unwrap();
        let wrong = NsBox::uniform(2, 2).unwrap();
        assert!(matches!(
            success_probability(&wrong, &p, 0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(coding_noise(&wrong, &p), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn pr_box_simulation_always_succeeds() {
        for case in [Case::A, Case::B] {
            let p = RacProtocol::new(4, case).unwrap();
            let pr = p.pr_box().unwrap();
            for d in 0..16 {
                for b in 0..4 {
                    let out = simulate_rac(&pr, &p, &BitString::from_index(d, 4), b, d as u64 * 7 + b as u64)
                        .unwrap();
                    assert!(out.success(), "case {case} database {d} query {b}");
                }
            }
        }
    }

    #[test]
    fn sampler_handles_rounding_tail() {
        assert_eq!(sample_outcome(&[0.5, 0.0, 0.0, 0.5], 0.999_999_999_999), (1, 1));
        assert_eq!(sample_outcome(&[0.5, 0.5, 0.0, 0.0], 1.0), (0, 1));
        assert_eq!(sample_outcome(&[0.25; 4], 0.3), (0, 1));
    }
}
