//! The acceptance suite: numbered criteria with PASS/FAIL outcomes, shared by
//! the `verify` subcommand and the integration tests.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use crate::assembly::build_pencil;
use crate::eigensolve::{max_principal_angle, EigenOptions, Spectrum};
use crate::geometry::{make_geometry, CrossSection, Geometry, Regime, ThinParams};
use crate::limit::{gathered_spectrum, JunctionProblem, LimitSpectrum};
use crate::mesh::{make_mesh, Grading, Levels};
use crate::study::{bound_flags, run_convergence_study, StudyConfig, StudyReport};

/// Deliberate perturbations for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fixture {
    /// Added to `q` in the closed form of the asymmetric-interval roots.
    pub closed_form_q_shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: usize,
    pub group: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    /// `PASS  C1 [limit] title: detail (0.012 s)`.
    pub fn line(&self) -> String {
        format!(
            "{}  C{} [{}] {}: {} ({:.3} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.group,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub struct Criterion {
    pub id: usize,
    pub group: &'static str,
    pub title: &'static str,
    run: fn(&Context) -> (bool, String),
    budget: Duration,
}

impl Criterion {
    pub fn matches(&self, filter: &str) -> bool {
        filter.is_empty() || self.group == filter || filter.trim_start_matches('C') == self.id.to_string()
    }
}

/// Expensive intermediate results, computed once and shared between criteria.
#[derive(Default)]
pub struct Context {
    pub fixture: Fixture,
    sweep: OnceLock<Timed<Result<StudyReport<f64>, String>>>,
    regimes: OnceLock<Timed<Result<[StudyReport<f64>; 2], String>>>,
    cross_checks: OnceLock<Timed<Result<Vec<CrossCheck>, String>>>,
}

struct Timed<T> {
    value: T,
    elapsed: Duration,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let start = Instant::now();
    let value = f();
    Timed { value, elapsed: start.elapsed() }
}

/// Iterative and dense solutions of one coarse pencil.
pub struct CrossCheck {
    pub label: String,
    pub iterative: Spectrum<f64>,
    pub dense: Spectrum<f64>,
    pub value_error: f64,
    pub angle: f64,
}

impl Context {
    pub fn new(fixture: Fixture) -> Self {
        Self { fixture, ..Self::default() }
    }

    /// The default convergence sweep: `q = 1`, `omega = (-1, 1)`, `n = 2..5`.
    pub fn sweep(&self) -> (&Result<StudyReport<f64>, String>, Duration) {
        let t = self.sweep.get_or_init(|| timed(|| run_convergence_study(&StudyConfig::default()).map_err(|e| e.to_string())));
        (&t.value, t.elapsed)
    }

    /// The finest member of the sweep rerun under the Zero and Infinite schedules.
    pub fn regimes(&self) -> (&Result<[StudyReport<f64>; 2], String>, Duration) {
        let t = self.regimes.get_or_init(|| {
            timed(|| {
                let base = StudyConfig::<f64>::default();
                let last = base.first + base.count - 1;
                let run = |regime| {
                    run_convergence_study(&StudyConfig { regime, first: last, count: 1, ..base.clone() })
                        .map_err(|e| e.to_string())
                };
                Ok([run(Regime::Zero)?, run(Regime::Infinite)?])
            })
        });
        (&t.value, t.elapsed)
    }

    pub fn cross_checks(&self) -> (&Result<Vec<CrossCheck>, String>, Duration) {
        let t = self.cross_checks.get_or_init(|| timed(run_cross_checks));
        (&t.value, t.elapsed)
    }
}

fn interval(c: f64, d: f64) -> Geometry<f64> {
    make_geometry(2, CrossSection::Interval { c, d }).expect("valid interval")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn check_pattern(s: &LimitSpectrum<f64>, expected: &[(f64, usize)], tol: f64) -> Result<(), String> {
    if s.entries.len() < expected.len() {
        return Err(format!("only {} values", s.entries.len()));
    }
    for (i, (e, &(v, m))) in s.entries.iter().zip(expected).enumerate() {
        if rel(e.value, v) > tol || e.multiplicity != m {
            return Err(format!("value {}: {:.12}({}) vs {:.12}({m})", i + 1, e.value, e.multiplicity, v));
        }
    }
    Ok(())
}

fn half_pi_pattern(count: usize) -> Vec<(f64, usize)> {
    (1..=count).map(|k| ((k as f64 * std::f64::consts::FRAC_PI_2).powi(2), if k % 2 == 1 { 1 } else { 2 })).collect()
}

fn c1_coupled_symmetric(_: &Context) -> (bool, String) {
    match gathered_spectrum(Regime::Finite(1.0), &interval(-1.0, 1.0), 6) {
        Ok(s) => match check_pattern(&s, &half_pi_pattern(6), 1e-10) {
            Ok(()) => (true, "(k pi/2)^2, multiplicities 1,2,1,2,1,2".into()),
            Err(e) => (false, e),
        },
        Err(e) => (false, e.to_string()),
    }
}

/// `{k pi} U {+-arccos(+-sqrt(q/(4q + 2|omega|))) + 2k pi}`, positive, ascending, distinct.
pub fn asymmetric_closed_form(q: f64, measure: f64, count: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let a = (q / (4.0 * q + 2.0 * measure)).sqrt();
    let mut roots = Vec::new();
    for k in 0..=count {
        let shift = 2.0 * pi * k as f64;
        roots.push(pi * k as f64);
        for outer in [1.0, -1.0] {
            for inner in [1.0, -1.0] {
                roots.push(outer * (inner * a).acos() + shift);
            }
        }
    }
    roots.retain(|&s| s > 1e-12);
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    roots.truncate(count);
    roots
}

fn c2_coupled_asymmetric(ctx: &Context) -> (bool, String) {
    let mut worst = 0.0f64;
    for q in [0.5, 2.0, 10.0] {
        let roots = match JunctionProblem::new(-1.0, 2.0, 3.0, q).and_then(|p| p.roots(10)) {
            Ok(r) => r,
            Err(e) => return (false, format!("q = {q}: {e}")),
        };
        let expected = asymmetric_closed_form(q + ctx.fixture.closed_form_q_shift, 3.0, 10);
        for (r, e) in roots.iter().zip(&expected) {
            worst = worst.max((r.s - e).abs());
        }
        if roots.len() != expected.len() {
            return (false, format!("q = {q}: {} roots vs {}", roots.len(), expected.len()));
        }
    }
    (worst <= 1e-8, format!("max |sqrt(lambda) - closed form| = {worst:.2e} over q = 0.5, 2, 10"))
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn c3_determinant(_: &Context) -> (bool, String) {
    let p = match JunctionProblem::new(-1.0, 1.0, 2.0, 1.0) {
        Ok(p) => p,
        Err(e) => return (false, e.to_string()),
    };
    let s: Vec<f64> = (1..=20).map(|i| (100.0 * i as f64 / 21.0).sqrt()).collect();
    let det: Vec<f64> = s.iter().map(|&x| det3(&p.matrix(x))).collect();
    let f: Vec<f64> = s.iter().map(|&x| p.f(x)).collect();
    let kappa = det.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() / f.iter().map(|b| b * b).sum::<f64>();
    let max_f = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let resid = det.iter().zip(&f).fold(0.0f64, |m, (a, b)| m.max((a - kappa * b).abs()));
    (resid <= 1e-9 * max_f, format!("kappa = {kappa:.12}, residual / max|F| = {:.2e}", resid / max_f))
}

fn c4_worked_examples(_: &Context) -> (bool, String) {
    let pi = std::f64::consts::PI;
    let cases: [(&str, Regime<f64>, Geometry<f64>, Vec<(f64, usize)>); 4] = [
        ("zero (-1,1)", Regime::Zero, interval(-1.0, 1.0), half_pi_pattern(6)),
        ("infinite (-1,1)", Regime::Infinite, interval(-1.0, 1.0), half_pi_pattern(6)),
        ("infinite (-1/2,1/2)", Regime::Infinite, interval(-0.5, 0.5), (1..=5).map(|k| ((k as f64 * pi).powi(2), 2)).collect()),
        (
            "infinite (-pi/2,pi/2)",
            Regime::Infinite,
            interval(-pi / 2.0, pi / 2.0),
            [1.0, 4.0, 9.0, pi * pi, 16.0, 25.0, 36.0, 4.0 * pi * pi].iter().map(|&v| (v, 1)).collect(),
        ),
    ];
    for (name, regime, g, expected) in cases {
        let result = gathered_spectrum(regime, &g, expected.len()).map_err(|e| e.to_string());
        if let Err(e) = result.and_then(|s| check_pattern(&s, &expected, 1e-10)) {
            return (false, format!("{name}: {e}"));
        }
    }
    // Wide interval in the Zero regime: the gathering oracle gives 2 for even k, 3 for odd k.
    let wide: Vec<(f64, usize)> = (1..=6).map(|k| ((k as f64 * pi / 2.0).powi(2), if k % 2 == 0 { 2 } else { 3 })).collect();
    let result = gathered_spectrum(Regime::Zero, &interval(-2.0, 2.0), 6).map_err(|e| e.to_string());
    if let Err(e) = result.and_then(|s| check_pattern(&s, &wide, 1e-10)) {
        return (false, format!("zero (-2,2): {e}"));
    }
    (true, "all examples match; zero (-2,2) even k has multiplicity 2".into())
}

fn c10_q_independence(_: &Context) -> (bool, String) {
    let g = match make_geometry(3, CrossSection::Rect { wx: 0.5, wy: 0.5 }) {
        Ok(g) => g,
        Err(e) => return (false, e.to_string()),
    };
    let lists: Result<Vec<Vec<(f64, usize)>>, String> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&q| {
            gathered_spectrum(Regime::Finite(q), &g, 8)
                .map(|s| s.entries.iter().map(|e| (e.value, e.multiplicity)).collect())
                .map_err(|e| e.to_string())
        })
        .collect();
    let lists = match lists {
        Ok(l) => l,
        Err(e) => return (false, e),
    };
    let mut worst = 0.0f64;
    let mut same_mult = true;
    for other in &lists[1..] {
        same_mult &= other.len() == lists[0].len();
        for (a, b) in lists[0].iter().zip(other) {
            worst = worst.max((a.0 - b.0).abs());
            same_mult &= a.1 == b.1;
        }
    }
    (worst <= 1e-12 && same_mult, format!("max difference {worst:.1e} over 8 values, q = 0.5, 1, 2"))
}

fn sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", items.join(", "))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn last_three<T: Copy>(v: &[T]) -> &[T] {
    &v[v.len().saturating_sub(3)..]
}

fn c5_fem_convergence(ctx: &Context) -> (bool, String) {
    let (report, _) = ctx.sweep();
    let report = match report {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    if !report.warnings().is_empty() {
        return (false, report.warnings().join("; "));
    }
    let mut failures = Vec::new();
    for k in 1..=4 {
        let errors: Vec<f64> = report.errors(k).into_iter().map(|(_, e)| e).collect();
        if errors.len() < 3 || !strictly_decreasing(last_three(&errors)) {
            failures.push(format!("e_{k} {}", sci(&errors)));
        }
    }
    let lambda1 = report.limit.entries[0].value;
    let final_e1 = report.errors(1).last().map(|p| p.1).unwrap_or(f64::INFINITY);
    let tol = report.config.tolerances.final_error;
    if final_e1 > tol * lambda1 {
        failures.push(format!("final e_1 = {final_e1:.3e} > {tol} lambda_1"));
    }
    if failures.is_empty() {
        (true, format!("errors decrease for k = 1..4; final e_1 / lambda_1 = {:.2e}", final_e1 / lambda1))
    } else {
        (false, failures.join("; "))
    }
}

fn c6_regime_discrimination(ctx: &Context) -> (bool, String) {
    let (sweep, _) = ctx.sweep();
    let (regimes, _) = ctx.regimes();
    let (sweep, regimes) = match (sweep, regimes) {
        (Ok(s), Ok(r)) => (s, r),
        (Err(e), _) | (_, Err(e)) => return (false, e.clone()),
    };
    let pi2 = std::f64::consts::PI.powi(2);
    let window = sweep.config.tolerances.window;
    let count_near = |values: &[f64], target: f64| {
        values.iter().filter(|&&v| v >= target * (1.0 - window) && v <= target * (1.0 + window)).count()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for report in regimes {
        let Some(rec) = report.records.last().filter(|r| r.is_complete()) else {
            return (false, format!("{}: no complete record", report.config.regime.name()));
        };
        let lambda2 = rec.values[1];
        let dev = (lambda2 - pi2).abs() / pi2;
        let near_pi2 = count_near(&rec.values, pi2);
        ok &= dev <= 0.05 && near_pi2 == 2;
        parts.push(format!("{}: lambda_2 {:+.1}% window(pi^2) {near_pi2}", report.config.regime.name(), 100.0 * (lambda2 - pi2) / pi2));
    }
    let finest: Vec<&[f64]> = std::iter::once(sweep.records.last().map(|r| r.values.as_slice()).unwrap_or(&[]))
        .chain(regimes.iter().map(|r| r.records.last().map(|x| x.values.as_slice()).unwrap_or(&[])))
        .collect();
    let near_first: Vec<usize> = finest.iter().map(|v| count_near(v, pi2 / 4.0)).collect();
    ok &= near_first.iter().all(|&c| c == 1);
    parts.push(format!("window((pi/2)^2) finite/zero/infinite {near_first:?}"));
    (ok, parts.join("; "))
}

fn c7_min_max_bound(ctx: &Context) -> (bool, String) {
    let mut lists: Vec<(String, Vec<f64>)> = Vec::new();
    let collect = |report: &StudyReport<f64>, lists: &mut Vec<(String, Vec<f64>)>| {
        for rec in &report.records {
            lists.push((format!("{} n={}", report.config.regime.name(), rec.n), rec.values.clone()));
        }
    };
    match ctx.sweep().0 {
        Ok(r) => collect(r, &mut lists),
        Err(e) => return (false, e.clone()),
    }
    match ctx.regimes().0 {
        Ok(rs) => rs.iter().for_each(|r| collect(r, &mut lists)),
        Err(e) => return (false, e.clone()),
    }
    match ctx.cross_checks().0 {
        Ok(cs) => {
            for c in cs {
                lists.push((format!("{} iterative", c.label), c.iterative.values.clone()));
                lists.push((format!("{} dense", c.label), c.dense.values.clone()));
            }
        }
        Err(e) => return (false, e.clone()),
    }
    let mut checked = 0;
    for (label, values) in &lists {
        let head = &values[..values.len().min(6)];
        checked += head.len();
        if let Some(k) = bound_flags(head, 1e-12).iter().position(|&b| !b) {
            return (false, format!("BOUND_VIOLATION {label} k={}: {}", k + 1, head[k]));
        }
        if head.iter().any(|&v| v <= 0.0) {
            return (false, format!("{label}: non-positive eigenvalue"));
        }
    }
    (true, format!("{checked} eigenvalues from {} solves satisfy 0 < lambda_k <= 2^k k^2 pi^2", lists.len()))
}

fn run_cross_checks() -> Result<Vec<CrossCheck>, String> {
    let cases: [(&str, usize, CrossSection<f64>, Regime<f64>, f64, usize); 3] = [
        ("N=2 (-1,1) q=1", 2, CrossSection::Interval { c: -1.0, d: 1.0 }, Regime::Finite(1.0), 0.25, 8),
        ("N=2 (-1,2) zero", 2, CrossSection::Interval { c: -1.0, d: 2.0 }, Regime::Zero, 0.25, 9),
        ("N=3 square q=1", 3, CrossSection::Rect { wx: 0.5, wy: 0.5 }, Regime::Finite(1.0), 0.5, 4),
    ];
    let nev = 6;
    cases
        .iter()
        .map(|&(label, dim, omega, regime, r, m)| {
            let g = make_geometry(dim, omega).map_err(|e| e.to_string())?;
            let mesh = make_mesh(&g, Levels::uniform(m), Grading::none()).map_err(|e| e.to_string())?;
            let params = ThinParams::new(r, regime.thickness_for(dim, r)).map_err(|e| e.to_string())?;
            let pencil = build_pencil(&mesh, &params).map_err(|e| e.to_string())?;
            let iterative = pencil.smallest_eigenpairs(nev, &EigenOptions::default()).map_err(|e| e.to_string())?;
            let dense = pencil.dense_oracle().map_err(|e| e.to_string())?;
            let value_error = iterative.values.iter().zip(&dense.values).fold(0.0f64, |m, (a, b)| m.max(rel(*a, *b)));
            // Compare eigenspaces cluster by cluster; a cluster cut by the truncation is skipped.
            let mut angle = 0.0f64;
            let mut start = 0;
            while start < nev {
                let mut end = start + 1;
                while end < dense.values.len() && rel(dense.values[end], dense.values[start]) < 1e-6 {
                    end += 1;
                }
                if end <= nev {
                    let a = max_principal_angle(&pencil.m, &iterative.vectors[start..end], &dense.vectors[start..end]);
                    angle = angle.max(a);
                }
                start = end;
            }
            Ok(CrossCheck { label: format!("{label} ({} dofs)", pencil.order()), iterative, dense, value_error, angle })
        })
        .collect()
}

fn c8_solver_cross_validation(ctx: &Context) -> (bool, String) {
    match ctx.cross_checks().0 {
        Ok(checks) => {
            let value = checks.iter().fold(0.0f64, |m, c| m.max(c.value_error));
            let angle = checks.iter().fold(0.0f64, |m, c| m.max(c.angle));
            let labels: Vec<&str> = checks.iter().map(|c| c.label.as_str()).collect();
            (value <= 1e-8 && angle <= 1e-6, format!("value {value:.1e}, angle {angle:.1e} on {}", labels.join(", ")))
        }
        Err(e) => (false, e.clone()),
    }
}

fn c9_corrector_trend(ctx: &Context) -> (bool, String) {
    let report = match ctx.sweep().0 {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let norms: Vec<_> = report.records.iter().filter_map(|r| r.correctors.first().copied().flatten()).collect();
    if norms.len() < 3 {
        return (false, "fewer than three corrector records for k = 1".into());
    }
    let ga: Vec<f64> = norms.iter().map(|c| c.ga).collect();
    let gb: Vec<f64> = norms.iter().map(|c| c.gb).collect();
    let ok = strictly_decreasing(last_three(&ga)) && strictly_decreasing(last_three(&gb));
    (ok, format!("ga {}, gb {}", sci(last_three(&ga)), sci(last_three(&gb))))
}

/// All criteria in order.
pub fn criteria() -> Vec<Criterion> {
    let s = Duration::from_secs;
    vec![
        Criterion { id: 1, group: "limit", title: "coupled spectrum on (-1,1), q=1", run: c1_coupled_symmetric, budget: s(1) },
        Criterion { id: 2, group: "limit", title: "coupled roots on (-1,2) vs arccos closed form", run: c2_coupled_asymmetric, budget: s(1) },
        Criterion { id: 3, group: "limit", title: "det J = kappa F", run: c3_determinant, budget: s(1) },
        Criterion { id: 4, group: "limit", title: "gathered spectra worked examples", run: c4_worked_examples, budget: s(1) },
        Criterion { id: 5, group: "fem", title: "FEM convergence, q=1, n=2..5", run: c5_fem_convergence, budget: s(120) },
        Criterion { id: 6, group: "fem", title: "regime discrimination at the finest n", run: c6_regime_discrimination, budget: s(120) },
        Criterion { id: 7, group: "bound", title: "min-max bound on every computed eigenvalue", run: c7_min_max_bound, budget: s(300) },
        Criterion { id: 8, group: "solver", title: "iterative vs dense oracle", run: c8_solver_cross_validation, budget: s(30) },
        Criterion { id: 9, group: "fem", title: "corrector trend for k=1", run: c9_corrector_trend, budget: s(120) },
        Criterion { id: 10, group: "limit", title: "N=3 limit independent of q", run: c10_q_independence, budget: s(1) },
    ]
}

/// Runs one criterion; time spent building shared results counts toward the
/// first criterion that needs them.
pub fn run_criterion(c: &Criterion, ctx: &Context) -> Outcome {
    let start = Instant::now();
    let (mut passed, mut detail) = (c.run)(ctx);
    let elapsed = start.elapsed();
    if elapsed > c.budget {
        passed = false;
        detail = format!("{detail}; runtime {:.1} s exceeds {} s", elapsed.as_secs_f64(), c.budget.as_secs());
    }
    Outcome { id: c.id, group: c.group, title: c.title, passed, detail, elapsed }
}

/// Runs the criteria selected by `filter` (a group name, a number, or empty for all).
pub fn run_all(filter: &str, ctx: &Context) -> Vec<Outcome> {
    criteria().iter().filter(|c| c.matches(filter)).map(|c| run_criterion(c, ctx)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_list() {
        let pi = std::f64::consts::PI;
        let a = (0.5f64 / 8.0).sqrt().acos();
        let r = asymmetric_closed_form(0.5, 3.0, 6);
        let expect = [a, pi - a, pi, pi + a, 2.0 * pi - a, 2.0 * pi];
        for (x, y) in r.iter().zip(expect) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn filtering() {
        let all = criteria();
        assert_eq!(all.iter().filter(|c| c.matches("limit")).count(), 5);
        assert_eq!(all.iter().filter(|c| c.matches("7")).count(), 1);
        assert_eq!(all.iter().filter(|c| c.matches("C10")).count(), 1);
        assert_eq!(all.iter().filter(|c| c.matches("")).count(), 10);
    }

    #[test]
    fn wrong_q_fails_the_arccos_criterion() {
        let ctx = Context::new(Fixture { closed_form_q_shift: 0.5 });
        let out = run_all("2", &ctx);
        assert_eq!(out.len(), 1);
        assert!(!out[0].passed && out[0].line().starts_with("FAIL  C2"));
        assert!(run_all("2", &Context::default())[0].passed);
    }

    #[test]
    fn limit_group_passes() {
        let out = run_all("limit", &Context::default());
        assert!(out.iter().all(|o| o.passed), "{out:#?}");
    }
}
