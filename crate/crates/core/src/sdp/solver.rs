//! Gram-factorized ascent for `max sum m[x][y] alpha_x . beta_y` over unit
//! vectors, followed by an a-posteriori dual certificate.
//!
//! Each sweep sets every `alpha_x` to the normalized `sum_y m[x][y] beta_y`
//! and then every `beta_y` to the normalized `sum_x m[x][y] alpha_x`. Both
//! half-steps are exact block maximizers, so the objective never decreases.
//! Vectors live in `R^(t+v)`, enough for any Gram matrix of `t + v` vectors.

use log::debug;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::game::{assemble_sdp, GameMatrix};
use super::matrix::{norm, sym_eigenvalues, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverParams {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            restarts: 32,
            max_iter: 10_000,
            tol: 1e-12,
            seed: 42,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::domain("at least one restart is required"));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }
}

/// Minimum slack eigenvalue accepted by the certificate.
pub const MIN_EIG_TOL: f64 = -1e-8;
/// Relative duality gap accepted by the certificate.
pub const GAP_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    /// Multipliers of the unit-norm constraints, Alice's settings first.
    pub dual_y: Vec<f64>,
    pub dual_value: f64,
    /// Smallest eigenvalue of `S = sum y_q D_q - C`.
    pub min_eig_s: f64,
    /// `sum y_q - primal_value`.
    pub gap: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramSolution {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub primal_value: f64,
    pub dual_y: Vec<f64>,
    pub dual_value: f64,
    pub min_eig_s: f64,
    pub gap: f64,
    pub certified: bool,
    /// Sweeps taken by the winning restart.
    pub iterations: usize,
    pub restarts_used: usize,
    /// Index of the winning restart.
    pub best_restart: usize,
    /// Vectors re-drawn because their update direction vanished, over all restarts.
    pub rerandomized: usize,
    /// Objective before the first sweep and after each sweep, winning restart.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl GramSolution {
    /// `X = P^T P` with columns `(alpha_1..alpha_t, beta_1..beta_v)`.
    pub fn gram_matrix(&self) -> SymmetricMatrix {
        let cols: Vec<Vec<f64>> = self.alpha.iter().chain(&self.beta).cloned().collect();
        SymmetricMatrix::gram(&cols)
    }
}

struct Restart {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    value: f64,
    iterations: usize,
    rerandomized: usize,
    trace: Vec<f64>,
}

fn random_unit(dim: usize, rng: &mut rng::Rng, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let n = norm(out);
        if n > 1e-8 {
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
        debug_assert_eq!(out.len(), dim);
    }
}

/// Overwrites each `target` row with the normalized combination of `source`
/// rows weighted by `weight(row, source_row)`. Returns
/// `(sum_i target_i . g_i, max |change|, rerandomized)` where `g_i` is the
/// unnormalized combination.
#[allow(clippy::too_many_arguments)]
fn block_update(
    target: &mut [f64],
    source: &[f64],
    count: usize,
    source_count: usize,
    dim: usize,
    weight: impl Fn(usize, usize) -> f64,
    degenerate_scale: f64,
    rng: &mut rng::Rng,
) -> (f64, f64, usize) {
    let mut g = vec![0.0; dim];
    let mut value = 0.0;
    let mut step = 0.0f64;
    let mut rerandomized = 0;
    for i in 0..count {
        g.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..source_count {
            let w = weight(i, j);
            if w != 0.0 {
                let src = &source[j * dim..(j + 1) * dim];
                g.iter_mut().zip(src).for_each(|(acc, s)| *acc += w * s);
            }
        }
        let n = norm(&g);
        let row = &mut target[i * dim..(i + 1) * dim];
        if n <= 1e-14 * degenerate_scale {
            debug!("update direction for vector {i} vanished (norm {n:e}); re-drawing it");
            let old = row.to_vec();
            random_unit(dim, rng, row);
            rerandomized += 1;
            for (a, b) in row.iter().zip(&old) {
                step = step.max((a - b).abs());
            }
            value += super::matrix::dot(row, &g);
            continue;
        }
        for (r, gv) in row.iter_mut().zip(&g) {
            let new = gv / n;
            step = step.max((new - *r).abs());
            *r = new;
        }
        value += n;
    }
    (value, step, rerandomized)
}

fn ascend(game: &GameMatrix, params: &SolverParams, restart: usize) -> Restart {
    let (t, v) = (game.rows(), game.cols());
    let dim = t + v;
    let mut rng = rng::stream(params.seed, restart as u64);
    let mut alpha = vec![0.0; t * dim];
    let mut beta = vec![0.0; v * dim];
    for i in 0..t {
        random_unit(dim, &mut rng, &mut alpha[i * dim..(i + 1) * dim]);
    }
    for j in 0..v {
        random_unit(dim, &mut rng, &mut beta[j * dim..(j + 1) * dim]);
    }
    let scale = (0..t)
        .flat_map(|x| game.row(x).iter())
        .fold(0.0f64, |m, w| m.max(w.abs()))
        .max(f64::MIN_POSITIVE);

    let rows_of = |buf: &[f64], count: usize| -> Vec<Vec<f64>> {
        (0..count).map(|i| buf[i * dim..(i + 1) * dim].to_vec()).collect()
    };
    let mut value = game.bilinear_value(&rows_of(&alpha, t), &rows_of(&beta, v));
    let mut trace = vec![value];
    let mut rerandomized = 0;
    let mut iterations = 0;

    while iterations < params.max_iter {
        let (_, step_a, ra) =
            block_update(&mut alpha, &beta, t, v, dim, |x, y| game.get(x, y), scale, &mut rng);
        let (new_value, step_b, rb) =
            block_update(&mut beta, &alpha, v, t, dim, |y, x| game.get(x, y), scale, &mut rng);
        iterations += 1;
        rerandomized += ra + rb;

        let slack = 1e-9 * value.abs().max(1.0);
        debug_assert!(
            ra + rb > 0 || new_value >= value - slack,
            "objective decreased from {value} to {new_value} in sweep {iterations}"
        );
        let improvement = new_value - value;
        value = new_value;
        trace.push(value);
        // Objective stalls long before the vectors do; the dual certificate
        // is first-order in the vector error, so require both.
        if improvement < params.tol * value.abs().max(1.0) && step_a.max(step_b) < params.tol {
            break;
        }
    }

    Restart {
        alpha,
        beta,
        value,
        iterations,
        rerandomized,
        trace,
    }
}

/// Maximizes the signed objective over unit vectors, keeping the best of
/// `params.restarts` random starts (ties go to the lower restart index), and
/// attaches the dual certificate.
pub fn solve_primal(game: &GameMatrix, params: &SolverParams) -> Result<GramSolution> {
    params.validate()?;
    let runs: Vec<Restart> = (0..params.restarts)
        .into_par_iter()
        .map(|r| ascend(game, params, r))
        .collect();
    let rerandomized = runs.iter().map(|r| r.rerandomized).sum();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|acc, cur| if cur.1.value > acc.1.value { cur } else { acc })
        .expect("at least one restart");

    let dim = game.rows() + game.cols();
    let split = |buf: &[f64]| -> Vec<Vec<f64>> { buf.chunks_exact(dim).map(<[f64]>::to_vec).collect() };
    let alpha = split(&best.alpha);
    let beta = split(&best.beta);
    let primal_value = game.bilinear_value(&alpha, &beta);
    let cert = dual_certificate(game, &alpha, &beta, primal_value)?;

    Ok(GramSolution {
        alpha,
        beta,
        primal_value,
        dual_y: cert.dual_y,
        dual_value: cert.dual_value,
        min_eig_s: cert.min_eig_s,
        gap: cert.gap,
        certified: cert.passes,
        iterations: best.iterations,
        restarts_used: params.restarts,
        best_restart,
        rerandomized,
        objective_trace: best.trace,
    })
}

/// Builds `y_x = |(1/2) sum_y m[x][y] beta_y|`, `y_(t+b) = |(1/2) sum_x m[x][b] alpha_x|`
/// and checks `S = sum y_q D_q - C` for positive semidefiniteness.
///
/// `S` here is `diag(y) + (1/2) [[0, M], [M^T, 0]]`, which is similar to
/// `diag(y) - (1/2) [[0, M], [M^T, 0]]` under the sign flip of Bob's block,
/// so both conventions share one spectrum.
pub fn dual_certificate(
    game: &GameMatrix,
    alpha: &[Vec<f64>],
    beta: &[Vec<f64>],
    primal_value: f64,
) -> Result<DualCertificate> {
    let (t, v) = (game.rows(), game.cols());
    if alpha.len() != t || beta.len() != v {
        return Err(Error::dims(format!(
            "{} x {} vectors for a {t} x {v} game",
            alpha.len(),
            beta.len()
        )));
    }
    let dim = alpha.first().or(beta.first()).map_or(0, Vec::len);
    let half_norm = |weights: &mut dyn Iterator<Item = (f64, &Vec<f64>)>| {
        let mut g = vec![0.0; dim];
        for (w, vec) in weights {
            g.iter_mut().zip(vec).for_each(|(acc, s)| *acc += 0.5 * w * s);
        }
        norm(&g)
    };
    let mut dual_y = Vec::with_capacity(t + v);
    for x in 0..t {
        dual_y.push(half_norm(&mut (0..v).map(|y| (game.get(x, y), &beta[y]))));
    }
    for y in 0..v {
        dual_y.push(half_norm(&mut (0..t).map(|x| (game.get(x, y), &alpha[x]))));
    }

    let sdp = assemble_sdp(game);
    let mut s = sdp.c.scaled(-1.0);
    for (q, &yq) in dual_y.iter().enumerate() {
        s.set(q, q, s.get(q, q) + yq);
    }
    let eig = sym_eigenvalues(&s)?;
    let min_eig_s = eig[0];
    let dual_value: f64 = dual_y.iter().sum();
    let gap = dual_value - primal_value;
    let passes = min_eig_s >= MIN_EIG_TOL && gap <= GAP_REL_TOL * primal_value.abs().max(1.0);
    Ok(DualCertificate {
        dual_y,
        dual_value,
        min_eig_s,
        gap,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rac::{Case, RacProtocol};
    use crate::sdp::build_game_matrix;

    fn quick() -> SolverParams {
        SolverParams {
            restarts: 4,
            ..SolverParams::default()
        }
    }

    #[test]
    fn chsh_value() {
        let g = build_game_matrix(&RacProtocol::new(2, Case::A).unwrap());
        let sol = solve_primal(&g, &quick()).unwrap();
        assert!((sol.primal_value - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!(sol.certified, "{sol:?}");
        assert!(sol.gap <= 1e-6 && sol.gap >= -1e-8);
    }

    #[test]
    fn objective_trace_is_monotone() {
        let g = build_game_matrix(&RacProtocol::new(4, Case::B).unwrap());
        let sol = solve_primal(&g, &quick()).unwrap();
        assert_eq!(sol.objective_trace.len(), sol.iterations + 1);
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn vectors_are_unit_and_gram_is_psd() {
        let g = build_game_matrix(&RacProtocol::new(3, Case::A).unwrap());
        let sol = solve_primal(&g, &quick()).unwrap();
        for v in sol.alpha.iter().chain(&sol.beta) {
            assert!((norm(v) - 1.0).abs() < 1e-10);
            assert_eq!(v.len(), 7);
        }
        let x = sol.gram_matrix();
        let eig = sym_eigenvalues(&x).unwrap();
        assert!(eig[0] >= -1e-10, "{eig:?}");
        let sdp = assemble_sdp(&g);
        assert!(sdp.constraint_violation(&x) < 1e-10);
        assert!((sdp.objective(&x) + sol.primal_value).abs() < 1e-9);
    }

    #[test]
    fn flipping_beta_negates_the_signed_value() {
        let g = build_game_matrix(&RacProtocol::new(3, Case::B).unwrap());
        let sol = solve_primal(&g, &quick()).unwrap();
        let flipped: Vec<Vec<f64>> = sol.beta.iter().map(|b| b.iter().map(|v| -v).collect()).collect();
        let v = g.bilinear_value(&sol.alpha, &flipped);
        assert!((v + sol.primal_value).abs() < 1e-12);
        assert!((v.abs() - sol.primal_value).abs() < 1e-12);
    }

    #[test]
    fn dual_multipliers_are_homogeneous() {
        let g = build_game_matrix(&RacProtocol::new(3, Case::A).unwrap());
        let sol = solve_primal(&g, &quick()).unwrap();
        let g2 = g.scaled(2.0);
        let cert = dual_certificate(&g2, &sol.alpha, &sol.beta, 2.0 * sol.primal_value).unwrap();
        for (a, b) in cert.dual_y.iter().zip(&sol.dual_y) {
            assert_eq!(*a, 2.0 * b);
        }
        let sol2 = solve_primal(&g2, &quick()).unwrap();
        for (a, b) in sol2.dual_y.iter().zip(&sol.dual_y) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn degenerate_game_rerandomizes() {
        // Bob's two columns cancel for every row, so alpha's direction vanishes
        // whenever beta_1 = beta_2.
        let g = GameMatrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 0.0]]).unwrap();
        let sol = solve_primal(&g, &quick()).unwrap();
        assert!(sol.rerandomized > 0);
        assert!((sol.primal_value - 2.0).abs() < 1e-9, "{}", sol.primal_value);
        for v in sol.alpha.iter().chain(&sol.beta) {
            assert!((norm(v) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let g = build_game_matrix(&RacProtocol::new(2, Case::A).unwrap());
        for p in [
            SolverParams { restarts: 0, ..quick() },
            SolverParams { tol: 0.0, ..quick() },
            SolverParams { max_iter: 0, ..quick() },
        ] {
            assert!(matches!(solve_primal(&g, &p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn same_seed_same_solution() {
        let g = build_game_matrix(&RacProtocol::new(4, Case::A).unwrap());
        let a = solve_primal(&g, &quick()).unwrap();
        let b = solve_primal(&g, &quick()).unwrap();
        assert_eq!(a, b);
    }
}
