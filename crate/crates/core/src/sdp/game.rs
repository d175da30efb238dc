use serde::Serialize;

use super::matrix::SymmetricMatrix;
use crate::error::{Error, Result};
use crate::nsbox::sign;
use crate::rac::RacProtocol;

/// Payoff matrix `m[x][y]` of an XOR-type game; rows are Alice's settings,
/// columns Bob's. Games built from a protocol have entries `(-1)^(x.y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameMatrix {
    rows: usize,
    cols: usize,
    m: Vec<f64>,
}

impl GameMatrix {
    pub fn new(rows: usize, cols: usize, m: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || m.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} payoff entries do not fit {rows} x {cols}",
                m.len()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("payoff entries must be finite"));
        }
        Ok(GameMatrix { rows, cols, m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dims("ragged payoff matrix"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Number of Alice settings (`t`).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of Bob settings (`v`).
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.m[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.m[x * self.cols..(x + 1) * self.cols]
    }

    pub fn is_sign_matrix(&self) -> bool {
        self.m.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    pub fn scaled(&self, factor: f64) -> GameMatrix {
        GameMatrix {
            rows: self.rows,
            cols: self.cols,
            m: self.m.iter().map(|v| v * factor).collect(),
        }
    }

    /// `sum m[x][y] alpha_x . beta_y` for the given vectors.
    pub fn bilinear_value(&self, alpha: &[Vec<f64>], beta: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (x, a) in alpha.iter().enumerate() {
            for (y, b) in beta.iter().enumerate() {
                total += self.get(x, y) * super::matrix::dot(a, b);
            }
        }
        total
    }
}

/// Sign matrix of the protocol: row `x` is Alice's input index, column `b`
/// is Bob's query, both zero-based.
pub fn build_game_matrix(protocol: &RacProtocol) -> GameMatrix {
    let (rows, cols) = (protocol.num_x(), protocol.k());
    let mut m = Vec::with_capacity(rows * cols);
    for x in 0..rows {
        for b in 0..cols {
            m.push(sign(x, protocol.bob_input(b)));
        }
    }
    GameMatrix { rows, cols, m }
}

/// The constraint matrix `D_q = e_q e_q^T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagonalIndicator {
    pub dim: usize,
    pub q: usize,
}

impl DiagonalIndicator {
    /// `Trace(D_q^T X) = X_qq`.
    pub fn trace_product(&self, x: &SymmetricMatrix) -> f64 {
        x.get(self.q, self.q)
    }

    pub fn to_matrix(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(self.dim);
        m.set(self.q, self.q, 1.0);
        m
    }
}

/// Standard-form SDP: minimize `Trace(C^T X)` subject to
/// `Trace(D_q^T X) = b_q`, `X` positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub c: SymmetricMatrix,
    pub constraints: Vec<(DiagonalIndicator, f64)>,
}

impl SdpProblem {
    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn objective(&self, x: &SymmetricMatrix) -> f64 {
        self.c.inner(x)
    }

    /// Largest `|Trace(D_q^T X) - b_q|`.
    pub fn constraint_violation(&self, x: &SymmetricMatrix) -> f64 {
        self.constraints
            .iter()
            .map(|(d, b)| (d.trace_product(x) - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `C = -(1/2) [[0, M], [M^T, 0]]`, unit diagonal constraints.
pub fn assemble_sdp(game: &GameMatrix) -> SdpProblem {
    let t = game.rows();
    let n = t + game.cols();
    let c = SymmetricMatrix::from_fn(n, |i, j| {
        // from_fn visits the lower triangle, so i >= j.
        if i >= t && j < t {
            -0.5 * game.get(j, i - t)
        } else {
            0.0
        }
    });
    let constraints = (0..n)
        .map(|q| (DiagonalIndicator { dim: n, q }, 1.0))
        .collect();
    SdpProblem { c, constraints }
}
