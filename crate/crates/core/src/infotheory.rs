//! Shannon entropy and mutual information in bits, binary symmetric
//! channels, and the signal-decay check `I(X;Z) <= eps^2 I(X;Y)`.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{Error, Result};

const PMF_TOL: f64 = 1e-12;

fn check_pmf(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::domain("empty distribution"));
    }
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::domain(format!("negative or NaN probability {v}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PMF_TOL {
        return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub fn entropy(p: &[f64]) -> Result<f64> {
    check_pmf(p)?;
    Ok(entropy_unchecked(p))
}

fn entropy_unchecked(p: &[f64]) -> f64 {
    (-p.iter().map(|&v| plogp(v)).sum::<f64>()).max(0.0)
}

/// Binary entropy `H2(p)`.
pub fn binary_entropy(p: f64) -> f64 {
    -plogp(p) - plogp(1.0 - p)
}

/// Joint distribution of two discrete variables, `p[x][y]` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    n_x: usize,
    n_y: usize,
    p: Vec<f64>,
}

impl JointPmf {
    pub fn new(n_x: usize, n_y: usize, p: Vec<f64>) -> Result<Self> {
        if n_x == 0 || n_y == 0 || p.len() != n_x * n_y {
            return Err(Error::dims(format!(
                "joint table of {} entries does not fit {n_x} x {n_y}",
                p.len()
            )));
        }
        check_pmf(&p)?;
        Ok(JointPmf { n_x, n_y, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_y = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_y) {
            return Err(Error::dims("ragged joint table"));
        }
        Self::new(rows.len(), n_y, rows.concat())
    }

    /// `p(x, y) = p_x(x) p_y(y)`.
    pub fn product(px: &[f64], py: &[f64]) -> Result<Self> {
        check_pmf(px)?;
        check_pmf(py)?;
        let p = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
        Self::new(px.len(), py.len(), p)
    }

    /// Uniform bit `X` copied to `Y`.
    pub fn perfectly_correlated_bits() -> Self {
        JointPmf {
            n_x: 2,
            n_y: 2,
            p: vec![0.5, 0.0, 0.0, 0.5],
        }
    }

    /// Draws a joint table uniformly from the probability simplex.
    pub fn random<R: rand::Rng + ?Sized>(n_x: usize, n_y: usize, rng: &mut R) -> Result<Self> {
        let draws: Vec<f64> = (0..n_x * n_y).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        let mut p: Vec<f64> = draws.iter().map(|d| d / total).collect();
        // Absorb the rounding residue so the table sums to one to the last bit we can manage.
        let residue = 1.0 - p.iter().sum::<f64>();
        if let Some(m) = p.iter_mut().max_by(|a, b| a.total_cmp(b)) {
            *m += residue;
        }
        Self::new(n_x, n_y, p)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.n_y + y]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.p.chunks_exact(self.n_y).map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_y];
        for row in self.p.chunks_exact(self.n_y) {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        m
    }

    pub fn transpose(&self) -> JointPmf {
        let mut p = Vec::with_capacity(self.p.len());
        for y in 0..self.n_y {
            for x in 0..self.n_x {
                p.push(self.get(x, y));
            }
        }
        JointPmf {
            n_x: self.n_y,
            n_y: self.n_x,
            p,
        }
    }
}

/// `I(X;Y)` in bits.
///
/// Evaluated as `sum p log(p / (p_x p_y))`, which equals
/// `H(X) + H(Y) - H(X,Y)` but keeps its relative accuracy when the
/// dependence is weak.
pub fn mutual_information(j: &JointPmf) -> f64 {
    let px = j.marginal_x();
    let py = j.marginal_y();
    let mut total = 0.0;
    for x in 0..j.n_x {
        for y in 0..j.n_y {
            let p = j.get(x, y);
            if p > 0.0 {
                total += p * (p / (px[x] * py[y])).log2();
            }
        }
    }
    total.max(0.0)
}

/// `H(X) + H(Y) - H(X,Y)`.
pub fn mutual_information_from_entropies(j: &JointPmf) -> f64 {
    entropy_unchecked(&j.marginal_x()) + entropy_unchecked(&j.marginal_y())
        - entropy_unchecked(&j.p)
}

/// Binary symmetric channel keeping its input with probability `(1 + eps) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bsc {
    epsilon: f64,
}

impl Bsc {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.abs() <= 1.0) {
            return Err(Error::domain(format!("noise parameter {epsilon} outside [-1, 1]")));
        }
        Ok(Bsc { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn flip_probability(&self) -> f64 {
        (1.0 - self.epsilon) / 2.0
    }

    /// Transition matrix `[[keep, flip], [flip, keep]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let keep = (1.0 + self.epsilon) / 2.0;
        let flip = (1.0 - self.epsilon) / 2.0;
        [[keep, flip], [flip, keep]]
    }
}

/// Passes `Y` of a joint `(X, Y)` through the channel, giving `(X, Z)`.
pub fn cascade(j: &JointPmf, channel: &Bsc) -> Result<JointPmf> {
    if j.n_y != 2 {
        return Err(Error::domain(format!(
            "cascade needs a binary Y, got {} outcomes",
            j.n_y
        )));
    }
    let m = channel.matrix();
    let mut p = Vec::with_capacity(j.p.len());
    for x in 0..j.n_x {
        for z in 0..2 {
            p.push(j.get(x, 0) * m[0][z] + j.get(x, 1) * m[1][z]);
        }
    }
    Ok(JointPmf { n_x: j.n_x, n_y: 2, p })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalDecayReport {
    pub epsilon: f64,
    pub i_xy: f64,
    pub i_xz: f64,
    /// `None` when `I(X;Y) = 0` and the bound is vacuous.
    pub ratio: Option<f64>,
    pub bound: f64,
    pub data_processing: bool,
    pub pass: bool,
}

const DECAY_TOL: f64 = 1e-12;

/// Evaluates `I(X;Z) <= eps^2 I(X;Y)` and `I(X;Z) <= I(X;Y)` for the cascade.
pub fn verify_signal_decay(j: &JointPmf, channel: &Bsc) -> Result<SignalDecayReport> {
    let i_xy = mutual_information(j);
    let i_xz = mutual_information(&cascade(j, channel)?);
    let bound = channel.epsilon() * channel.epsilon();
    let data_processing = i_xz <= i_xy + DECAY_TOL;
    let ratio = (i_xy > 0.0).then(|| i_xz / i_xy);
    let pass = i_xz <= bound * i_xy + DECAY_TOL && data_processing;
    Ok(SignalDecayReport {
        epsilon: channel.epsilon(),
        i_xy,
        i_xz,
        ratio,
        bound,
        data_processing,
        pass,
    })
}

/// One row of a randomized signal-decay sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub trial: usize,
    pub n_x: usize,
    #[serde(flatten)]
    pub report: SignalDecayReport,
}

/// Random joint tables with `|X|` in `2..=4` and binary `Y`, through random
/// channels. Every tenth trial uses `eps = 1` and the one after it `eps = 0`.
/// Trial `i` draws from the stream `seed + i`.
pub fn signal_decay_sweep(trials: usize, seed: u64) -> Result<Vec<SweepRow>> {
    (0..trials)
        .map(|trial| {
            let mut rng = crate::rng::stream(seed, trial as u64);
            let n_x = rng.random_range(2..=4);
            let j = JointPmf::random(n_x, 2, &mut rng)?;
            let epsilon = match trial % 10 {
                0 => 1.0,
                1 => 0.0,
                _ => rng.random_range(-1.0..=1.0),
            };
            let report = verify_signal_decay(&j, &Bsc::new(epsilon)?)?;
            Ok(SweepRow { trial, n_x, report })
        })
        .collect()
}
