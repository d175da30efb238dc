//! Tsirelson-type bounds as a Gram-matrix SDP.
//!
//! A game `M` (rows: Alice settings, columns: Bob settings) asks for
//! `max sum M[x][y] alpha_x . beta_y` over real unit vectors. In standard form
//! this is `min Trace(C^T X)` with `C = -(1/2) [[0, M], [M^T, 0]]`,
//! `X = P^T P` and unit-diagonal constraints; its dual minimizes `sum y_q`
//! subject to `sum y_q D_q - C` being positive semidefinite.

mod game;
mod matrix;
mod solver;
mod table;

pub use game::{assemble_sdp, build_game_matrix, DiagonalIndicator, GameMatrix, SdpProblem};
pub use matrix::{sym_eigenvalues, SymmetricMatrix, JACOBI_MAX_SWEEPS, JACOBI_REL_TOL};
pub use solver::{
    dual_certificate, solve_primal, DualCertificate, GramSolution, SolverParams, GAP_REL_TOL,
    MIN_EIG_TOL,
};
pub use table::{bound_table, parse_k_range, write_csv, write_json, BoundRow, CSV_HEADER};
