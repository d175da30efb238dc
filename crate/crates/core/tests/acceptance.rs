//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits non-zero when a criterion fails, except those listed in
//! `KNOWN_UNATTAINABLE`, which are still evaluated and reported as they are.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use common::*;
use tsirelson_lab::circuit::{
    build_rac_circuit, builtin_gate, evans_schulman_check, exact_circuit_information,
    isotropic_gate, reliability_margin, ReliabilityQuery,
};
use tsirelson_lab::error::Error;
use tsirelson_lab::ic_bounds::{ic_quantity, tsirelson_lhs};
use tsirelson_lab::infotheory::signal_decay_sweep;
use tsirelson_lab::rac::{coding_noise, estimate_success, success_probability, Case, RacProtocol};
use tsirelson_lab::sdp::{
    build_game_matrix, solve_primal, sym_eigenvalues, GramSolution, SolverParams, SymmetricMatrix,
    GAP_REL_TOL, MIN_EIG_TOL,
};

/// The printed k = 3 matrix carries four decimals; rounding alone moves its
/// eigenvalues by up to 7 * 5e-5.
const KNOWN_UNATTAINABLE: &[&str] = &["3b"];

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn check(id: &'static str, title: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, title, pass, detail }
}

fn closed_form(case: Case, k: usize) -> f64 {
    let base = match case {
        Case::A => 2f64.powi(k as i32 - 1),
        Case::B => 2f64.powi(k as i32),
    };
    base * (k as f64).sqrt()
}

fn solve_table(case: Case, table: &[(usize, f64)]) -> Vec<(usize, f64, GramSolution)> {
    let params = SolverParams::default();
    table
        .iter()
        .map(|&(k, printed)| {
            let sol = solve_primal(&build_game_matrix(&RacProtocol::new(k, case).unwrap()), &params).unwrap();
            (k, printed, sol)
        })
        .collect()
}

fn table_outcome(
    id: &'static str,
    title: &'static str,
    case: Case,
    rows: &[(usize, f64, GramSolution)],
    secs: f64,
) -> Outcome {
    let mut worst = 0.0f64;
    let mut pass = true;
    for (k, printed, sol) in rows {
        let rel_printed = (sol.primal_value - printed).abs() / printed;
        let rel_closed = (sol.primal_value - closed_form(case, *k)).abs() / closed_form(case, *k);
        worst = worst.max(rel_printed).max(rel_closed);
        pass &= rel_printed <= 1e-3 && rel_closed <= 1e-3;
    }
    pass &= secs < 60.0;
    check(id, title, pass, format!("worst relative error {worst:.2e}, {secs:.2}s"))
}

fn criterion_3a(rows: &[&(usize, f64, GramSolution)]) -> Outcome {
    let mut pass = true;
    let (mut worst_gap, mut worst_eig) = (0.0f64, 0.0f64);
    for (_, _, sol) in rows {
        let rel_gap = sol.gap.abs() / sol.primal_value.max(1.0);
        worst_gap = worst_gap.max(rel_gap);
        worst_eig = worst_eig.min(sol.min_eig_s);
        pass &= rel_gap <= GAP_REL_TOL && sol.min_eig_s >= MIN_EIG_TOL;
    }
    check(
        "3a",
        "dual certificates",
        pass,
        format!("{} instances, worst gap/value {worst_gap:.2e}, lowest min eig(S) {worst_eig:.2e}", rows.len()),
    )
}

fn criterion_3b() -> Outcome {
    let x = SymmetricMatrix::from_rows(&printed_x(), 0.0).unwrap();
    let eig = sym_eigenvalues(&x).unwrap();
    check(
        "3b",
        "printed k=3 optimal X is PSD",
        eig[0] >= -1e-6,
        format!("min eigenvalue {:.4e}, threshold -1e-6", eig[0]),
    )
}

fn criterion_4() -> Outcome {
    let steps = (2.0 * std::f64::consts::PI / 1e-3) as usize;
    let grid = (0..=steps)
        .map(|i| {
            let t = i as f64 * 1e-3;
            let plus = ((1.0 + t.cos()).powi(2) + t.sin().powi(2)).sqrt();
            let minus = ((1.0 - t.cos()).powi(2) + t.sin().powi(2)).sqrt();
            plus + minus
        })
        .fold(f64::MIN, f64::max);
    let game = build_game_matrix(&RacProtocol::new(2, Case::A).unwrap());
    let sol = solve_primal(&game, &SolverParams::default()).unwrap();
    let diff = (grid - sol.primal_value).abs();
    check("4", "k=2 grid oracle", diff <= 1e-4, format!("grid {grid:.8}, solver {:.8}, diff {diff:.2e}", sol.primal_value))
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_z = 0.0f64;
    for k in 2..=4 {
        let p = RacProtocol::new(k, Case::A).unwrap();
        for i in 0..100 {
            let b = random_box(p.n_a(), p.n_b(), 1000 * k as u64 + i);
            let xi = coding_noise(&b, &p).unwrap();
            for q in 0..k {
                let s = success_probability(&b, &p, q).unwrap();
                worst = worst.max((xi.xi[q] - (2.0 * s - 1.0)).abs());
            }
        }
        let b = random_box(p.n_a(), p.n_b(), 7 * k as u64);
        for q in 0..k {
            let exact = success_probability(&b, &p, q).unwrap();
            let est = estimate_success(&b, &p, q, 100_000, 42 + q as u64).unwrap();
            let sigma = (exact * (1.0 - exact) / 1e5).sqrt();
            worst_z = worst_z.max((est - exact).abs() / sigma);
        }
    }
    check(
        "5",
        "RAC consistency",
        worst <= 1e-12 && worst_z <= 3.0,
        format!("max |xi - (2P - 1)| {worst:.2e}, worst Monte Carlo deviation {worst_z:.2} sigma"),
    )
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for k in 2..=4 {
        let p = RacProtocol::new(k, Case::A).unwrap();
        let q = p.quantum_optimal_box().unwrap();
        let r = ic_quantity(&q, &p).unwrap();
        let lhs = tsirelson_lhs(&q.correlator().unwrap(), &p).unwrap();
        let pr = ic_quantity(&p.pr_box().unwrap(), &p).unwrap();
        pass &= (r.quadratic_sum - 1.0).abs() <= 1e-9
            && (lhs - closed_form(Case::A, k)).abs() <= 1e-6
            && pr.i_total == k as f64;
        detail.push(format!("k={k}: sum xi^2 {:.12}, PR I_total {}", r.quadratic_sum, pr.i_total));
    }
    check("6", "information causality saturation", pass, detail.join("; "))
}

fn criterion_7() -> Outcome {
    let first = signal_decay_sweep(10_000, 42).unwrap();
    let second = signal_decay_sweep(10_000, 42).unwrap();
    let violations = first
        .iter()
        .filter(|r| !r.report.pass || r.report.i_xz > r.report.bound * r.report.i_xy + 1e-12)
        .count();
    let edges = first.iter().any(|r| r.report.epsilon == 1.0) && first.iter().any(|r| r.report.epsilon == 0.0);
    check(
        "7",
        "signal decay sweep",
        violations == 0 && first == second && edges,
        format!("{} instances, {violations} violations, deterministic {}", first.len(), first == second),
    )
}

fn criterion_8() -> Outcome {
    let mut worst = f64::MIN;
    let mut instances = 0;
    for &(n, k) in &[(2usize, 2usize), (4, 2), (3, 3)] {
        let mut gates = vec![
            builtin_gate("quantum-optimal", k).unwrap().unwrap(),
            isotropic_gate(k, 0.5 / (k as f64).sqrt()).unwrap(),
            builtin_gate("uniform", k).unwrap().unwrap(),
        ];
        gates.extend((0..50).map(|s| random_ic_gate(k, s + 100 * n as u64)));
        for g in &gates {
            let info = exact_circuit_information(&build_rac_circuit(n, k, g).unwrap()).unwrap();
            worst = worst.max(info.i_total);
            instances += 1;
        }
    }
    let mut pr_exact = true;
    for k in 2..=3 {
        let c = build_rac_circuit(k, k, &builtin_gate("pr", k).unwrap().unwrap()).unwrap();
        pr_exact &= exact_circuit_information(&c).unwrap().i_total == k as f64;
    }
    check(
        "8",
        "gate trees carry at most one bit",
        worst <= 1.0 + 1e-9 && pr_exact,
        format!("{instances} IC-compatible pyramids, max I_total {worst:.9}; PR depth-1 exact {pr_exact}"),
    )
}

fn criterion_9() -> Outcome {
    let q = |delta, eps, n, l| ReliabilityQuery { delta, epsilon_sq_sum: eps, n, l };
    let boundary = reliability_margin(0.5) == 0.0
        && matches!(evans_schulman_check(&q(0.5, 0.9, 4, None)), Err(Error::Domain(_)));
    let v5 = evans_schulman_check(&q(0.25, 0.9, 5, None)).unwrap();
    let v6 = evans_schulman_check(&q(0.25, 0.9, 6, None)).unwrap();
    let l3 = evans_schulman_check(&q(0.1, 2.0, 16, Some(3))).unwrap();
    let l4 = evans_schulman_check(&q(0.1, 2.0, 16, Some(4))).unwrap();
    let values = (v5.delta_margin - DELTA_025).abs() <= 1e-6
        && (v5.max_n.unwrap() - MAX_N_025).abs() <= 1e-6
        && (l3.delta_margin - DELTA_01).abs() <= 1e-6
        && (l3.required_l.unwrap() - REQUIRED_L_01).abs() <= 1e-6;
    let verdicts = v5.feasible && !v6.feasible && !l3.feasible && l4.feasible;
    check(
        "9",
        "reliability conditions",
        boundary && values && verdicts,
        format!(
            "Delta(0.25) {:.6}, max_n {:.6}, Delta(0.1) {:.6}, required_l {:.6}",
            v5.delta_margin,
            v5.max_n.unwrap(),
            l3.delta_margin,
            l3.required_l.unwrap()
        ),
    )
}

fn criterion_10() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_tsirelson-lab"))
            .args(["bounds", "--case", "a", "--k", "2..8", "--seed", "42"])
            .env_remove("TSIRELSON_LAB_SEED")
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let same = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    check("10", "CLI determinism", same, format!("{} bytes, identical {}", a.stdout.len(), a.stdout == b.stdout))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let rows_a = solve_table(Case::A, &TABLE_A);
    let secs_a = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let rows_b = solve_table(Case::B, &TABLE_B);
    let secs_b = start.elapsed().as_secs_f64();
    let all: Vec<_> = rows_a.iter().chain(&rows_b).collect();

    let outcomes = vec![
        table_outcome("1", "SDP bound table, case a", Case::A, &rows_a, secs_a),
        table_outcome("2", "SDP bound table, case b", Case::B, &rows_b, secs_b),
        criterion_3a(&all),
        criterion_3b(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];

    let mut unexpected = 0;
    for o in &outcomes {
        let known = KNOWN_UNATTAINABLE.contains(&o.id);
        let note = if !o.pass && known { " (known unattainable)" } else { "" };
        println!("{} [{}] {}: {}{note}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.title, o.detail);
        if !o.pass && !known {
            unexpected += 1;
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} passed, {unexpected} unexpected failures", outcomes.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
