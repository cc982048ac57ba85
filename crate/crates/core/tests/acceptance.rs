//! One test per acceptance criterion; each prints a PASS/FAIL line.

use std::sync::OnceLock;

use thinspectra::verify::{criteria, run_criterion, Context};

fn context() -> &'static Context {
    static CTX: OnceLock<Context> = OnceLock::new();
    CTX.get_or_init(Context::default)
}

fn criterion(id: usize) {
    let all = criteria();
    let c = all.iter().find(|c| c.id == id).expect("criterion exists");
    let outcome = run_criterion(c, context());
    println!("{}", outcome.line());
    assert!(outcome.passed, "{}", outcome.line());
}

#[test]
fn c01_coupled_spectrum_symmetric_interval() {
    criterion(1);
}

#[test]
fn c02_coupled_roots_asymmetric_interval() {
    criterion(2);
}

#[test]
fn c03_determinant_equivalence() {
    criterion(3);
}

#[test]
fn c04_gathered_worked_examples() {
    criterion(4);
}

#[test]
fn c05_fem_convergence() {
    criterion(5);
}

#[test]
fn c06_regime_discrimination() {
    criterion(6);
}

#[test]
fn c07_min_max_bound() {
    criterion(7);
}

#[test]
fn c08_solver_cross_validation() {
    criterion(8);
}

#[test]
fn c09_corrector_trend() {
    criterion(9);
}

#[test]
fn c10_three_dimensional_q_independence() {
    criterion(10);
}
