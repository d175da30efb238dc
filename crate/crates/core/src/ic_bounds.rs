//! Information-causality quantities for a box used in a random access code.
//!
//! For every query `i` the joint law of `(a_i, beta)` under `b = i` is
//! obtained by exact enumeration over all `2^k` uniform databases and the
//! four box outcomes. The report compares
//!
//! - `I = sum_i I(a_i; beta | b = i)` against one bit,
//! - `I <= sum xi^2` (per-query signal decay) and `sum xi^2 <= 1`,
//! - `|sum xi| <= sqrt(k)`, equivalently `|sum (-1)^f C| <= N_x sqrt(k)`.

use serde::Serialize;

use crate::error::Result;
use crate::infotheory::{mutual_information, JointPmf};
use crate::nsbox::{sign, CorrelatorTable, NsBox};
use crate::rac::{coding_noise_from_correlators, NoiseVector, RacProtocol};

/// One-sided tolerance above a bound before it counts as violated.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Satisfied {
    /// `I_total <= 1`.
    pub information_causality: bool,
    /// `I_total <= sum xi^2`.
    pub signal_decay: bool,
    /// `sum xi^2 <= 1`.
    pub quadratic: bool,
    /// `|sum xi| <= sqrt(k)`.
    pub linear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcReport {
    #[serde(rename = "I_total")]
    pub i_total: f64,
    pub per_bit: Vec<f64>,
    pub xi: NoiseVector,
    pub quadratic_sum: f64,
    pub linear_sum: f64,
    pub lhs_correlator_form: f64,
    pub bound_linear: f64,
    pub bound_quadratic: f64,
    pub satisfied: Satisfied,
}

impl IcReport {
    /// Any of the quadratic or linear Tsirelson-type bounds is exceeded.
    pub fn super_quantum(&self) -> bool {
        !self.satisfied.quadratic || !self.satisfied.linear
    }
}

/// Joint law of `(a_b, beta)` for query `b`, exact over uniform databases.
pub fn query_joint(nsbox: &NsBox, protocol: &RacProtocol, b: usize) -> Result<JointPmf> {
    protocol.check_box(nsbox)?;
    protocol.check_query(b)?;
    let k = protocol.k();
    let weight = 1.0 / (1u64 << k) as f64;
    let y = protocol.bob_input(b);
    let mut p = [0.0f64; 4];
    for database in 0..(1usize << k) {
        let x = protocol.alice_input(database);
        let target = (database >> b) & 1;
        let outcomes = nsbox.outcomes(x, y);
        for (ab, &prob) in outcomes.iter().enumerate() {
            let guess = protocol.guess(database, (ab >> 1) as u8, (ab & 1) as u8) as usize;
            p[2 * target + guess] += weight * prob;
        }
    }
    JointPmf::new(2, 2, p.to_vec())
}

pub fn ic_quantity(nsbox: &NsBox, protocol: &RacProtocol) -> Result<IcReport> {
    protocol.check_box(nsbox)?;
    let c = nsbox.correlator()?;
    let per_bit = (0..protocol.k())
        .map(|b| query_joint(nsbox, protocol, b).map(|j| mutual_information(&j)))
        .collect::<Result<Vec<_>>>()?;
    let i_total: f64 = per_bit.iter().sum();
    let xi = coding_noise_from_correlators(&c, protocol);
    let quadratic_sum = xi.sum_of_squares();
    let linear_sum = xi.sum().abs();
    let lhs_correlator_form = tsirelson_lhs(&c, protocol)?;
    let bound_linear = (protocol.k() as f64).sqrt();
    let bound_quadratic = 1.0;
    let satisfied = Satisfied {
        information_causality: i_total <= 1.0 + VIOLATION_TOL,
        signal_decay: i_total <= quadratic_sum + VIOLATION_TOL,
        quadratic: quadratic_sum <= bound_quadratic + VIOLATION_TOL,
        linear: linear_sum <= bound_linear + VIOLATION_TOL,
    };
    Ok(IcReport {
        i_total,
        per_bit,
        xi,
        quadratic_sum,
        linear_sum,
        lhs_correlator_form,
        bound_linear,
        bound_quadratic,
        satisfied,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalDecayBoundReport {
    pub per_bit: Vec<f64>,
    pub xi_squared: Vec<f64>,
    /// `xi^2 - I(a_i; beta | b = i)`, non-negative when the bound holds.
    pub slack: Vec<f64>,
    pub pass: bool,
}

/// Checks `I(a_i; beta | b = i) <= xi_i^2` for every query.
pub fn check_signal_decay_bound(nsbox: &NsBox, protocol: &RacProtocol) -> Result<SignalDecayBoundReport> {
    let report = ic_quantity(nsbox, protocol)?;
    let xi_squared: Vec<f64> = report.xi.xi.iter().map(|v| v * v).collect();
    let slack: Vec<f64> = xi_squared
        .iter()
        .zip(&report.per_bit)
        .map(|(bound, i)| bound - i)
        .collect();
    let pass = slack.iter().all(|&s| s >= -1e-10);
    Ok(SignalDecayBoundReport {
        per_bit: report.per_bit,
        xi_squared,
        slack,
        pass,
    })
}

/// `|sum_{x, y(b)} (-1)^(x.y) C[x,y]|` over the protocol's inputs.
pub fn tsirelson_lhs(c: &CorrelatorTable, protocol: &RacProtocol) -> Result<f64> {
    protocol.check_table(c)?;
    let total: f64 = (0..protocol.k())
        .map(|b| {
            let y = protocol.bob_input(b);
            (0..protocol.num_x())
                .map(|x| sign(x, y) * c.get(x, y))
                .sum::<f64>()
        })
        .sum();
    Ok(total.abs())
}

/// `N_x sqrt(k)`: `2^(k-1) sqrt(k)` for case A, `2^k sqrt(k)` for case B.
pub fn tsirelson_bound(protocol: &RacProtocol) -> f64 {
    protocol.num_x() as f64 * (protocol.k() as f64).sqrt()
}
