//! The acceptance suite: thirteen numbered checks, each with its tolerance
//! pinned below. [`run_all`] is what `levlab check` and the acceptance test
//! target execute.

use std::fmt;

use leverage::bounds::{bound_t1, delta_q_exact, delta_q_first_order, rdot_rinv};
use leverage::gen::{
    gaussian_matrix, gen_randsvd, random_orthonormal, random_orthonormal_complement,
};
use leverage::linalg::{householder_qr, upper_triangular_inverse};
use leverage::perturb::perturb_rotation;
use leverage::{
    leverage_from_basis, leverage_qr, leverage_svd, measure, principal_angles,
    sin_theta_max_projector, Matrix, RngState,
};

use crate::config::{ExperimentConfig, FigureId};
use crate::error::Result;
use crate::figures::{median, run_figure, FigureRun, FIG4_ROWS};
use crate::report::to_csv;

pub const LEVERAGE_ENSEMBLE: usize = 200;
pub const LEVERAGE_RANGE_TOL: f64 = 1e-13;
pub const LEVERAGE_SUM_TOL: f64 = 1e-12;
pub const QR_SVD_TOL: f64 = 1e-12;
pub const BASIS_ROTATION_TOL: f64 = 1e-13;
pub const ANGLE_PAIRS: usize = 100;
pub const ANGLE_TOL: f64 = 1e-10;
pub const SANDWICH_INSTANCES: usize = 50;
pub const COMPLEMENT_TOL: f64 = 1e-12;
/// Block-max targets for the sin θₙ = 1e-8 panel of figure 1 and the
/// ε_F = 1e-8 panel of figure 3; each must lie within one decade.
pub const DECADE_TARGETS: [f64; 4] = [1e-5, 1e-7, 1e-8, 1e-9];
pub const PANEL_RATIO: (f64, f64) = (10.0, 1000.0);
pub const LOST_ACCURACY: f64 = 0.1;
pub const LOCALITY_FACTOR: f64 = 10.0;
/// Decades allowed between the 5th and 95th percentile of figure 4(b).
pub const UNIFORM_DECADES: f64 = 2.0;
pub const MEDIAN_FACTOR: f64 = 10.0;
pub const RDOT_PAIRS: usize = 100;
pub const RDOT_REL_TOL: f64 = 1e-12;
pub const DECAY_RANGE: (f64, f64) = (30.0, 300.0);
pub const FD_MIN_ORDER: f64 = 0.9;
pub const COUNTEREXAMPLE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<34} {}  {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn result(id: u8, name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        id,
        name,
        passed,
        detail,
    }
}

/// The five figure runs at one seed, with bound assertions off so that the
/// checks can report on them.
pub struct FigureSet {
    pub runs: Vec<FigureRun>,
}

impl FigureSet {
    pub fn run(seed: u64) -> Result<Self> {
        let runs = FigureId::ALL
            .iter()
            .map(|&f| run_figure(&ExperimentConfig::new(f, seed), false))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { runs })
    }

    pub fn get(&self, f: FigureId) -> &FigureRun {
        &self.runs[f as usize]
    }
}

/// Runs every check. Errors from the numerical components count as failures
/// of the check that hit them.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    let figures = FigureSet::run(seed);
    let with_figs =
        |id: u8, name: &'static str, f: &dyn Fn(&FigureSet) -> CheckResult| match &figures {
            Ok(set) => f(set),
            Err(e) => result(id, name, false, format!("figure runs failed: {e}")),
        };
    let guard = |id: u8, name: &'static str, r: Result<CheckResult>| {
        r.unwrap_or_else(|e| result(id, name, false, format!("error: {e}")))
    };
    vec![
        guard(1, "leverage axioms", check_leverage_axioms(seed)),
        guard(2, "qr/svd oracle and basis", check_oracle_equivalence(seed)),
        guard(
            3,
            "angle formula equivalence",
            check_angle_equivalence(seed),
        ),
        with_figs(4, "exact bounds", &check_exact_bounds),
        guard(5, "m = 2n sandwich", check_sandwich(seed)),
        with_figs(6, "first-order bounds", &check_first_order),
        with_figs(7, "figure 1 brackets", &check_fig1),
        with_figs(8, "figure 3 brackets", &check_fig3),
        with_figs(9, "figure 4 locality", &check_fig4),
        with_figs(10, "figure 5 kappa/ell independence", &check_fig5),
        guard(11, "first-order machinery", check_machinery(seed)),
        guard(12, "row counterexample", check_counterexample()),
        guard(13, "determinism", check_determinism(seed)),
    ]
}

/// Random-size matrices with geometric singular values, κ log-uniform in
/// `[1, 1e6]`; every tenth is full size 1000×25.
fn leverage_ensemble(seed: u64) -> Result<Vec<Matrix>> {
    let root = RngState::new(seed);
    (0..LEVERAGE_ENSEMBLE)
        .map(|i| {
            let mut rng = root.derive(10_000 + i as u64);
            let (m, n) = if i % 10 == 0 {
                (1000, 25)
            } else {
                let n = 1 + (rng.uniform(0.0, 24.999) as usize);
                let m = n + (rng.uniform(0.0, (1000 - n) as f64 - 1e-9) as usize);
                (m, n)
            };
            let kappa = 10f64.powf(rng.uniform(0.0, 6.0));
            Ok(gen_randsvd(m, n, kappa, &mut rng)?)
        })
        .collect()
}

pub fn check_leverage_axioms(seed: u64) -> Result<CheckResult> {
    let (mut worst_range, mut worst_sum) = (0.0_f64, 0.0_f64);
    for a in leverage_ensemble(seed)? {
        let lev = leverage_qr(&a)?;
        for l in lev.iter() {
            worst_range = worst_range.max(-l).max(l - 1.0);
        }
        worst_sum = worst_sum.max((lev.sum() - lev.n as f64).abs() / lev.n as f64);
    }
    Ok(result(
        1,
        "leverage axioms",
        worst_range <= LEVERAGE_RANGE_TOL && worst_sum <= LEVERAGE_SUM_TOL,
        format!(
            "{LEVERAGE_ENSEMBLE} matrices: max excursion outside [0,1] {worst_range:.2e} (tol {LEVERAGE_RANGE_TOL:e}), max |sum-n|/n {worst_sum:.2e} (tol {LEVERAGE_SUM_TOL:e})"
        ),
    ))
}

fn max_abs_diff(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn check_oracle_equivalence(seed: u64) -> Result<CheckResult> {
    let root = RngState::new(seed);
    let (mut qr_svd, mut rotated) = (0.0_f64, 0.0_f64);
    for (i, a) in leverage_ensemble(seed)?.into_iter().enumerate() {
        let lq = leverage_qr(&a)?;
        qr_svd = qr_svd.max(max_abs_diff(lq.iter(), leverage_svd(&a)?.iter()));
        let q = householder_qr(&a)?.q;
        let w = random_orthonormal(a.cols(), a.cols(), &mut root.derive(20_000 + i as u64))?;
        let base = leverage_from_basis(&q)?;
        let turned = leverage_from_basis(&(&q * &w))?;
        rotated = rotated.max(max_abs_diff(base.iter(), turned.iter()));
    }
    Ok(result(
        2,
        "qr/svd oracle and basis",
        qr_svd <= QR_SVD_TOL && rotated <= BASIS_ROTATION_TOL,
        format!(
            "max |qr-svd| {qr_svd:.2e} (tol {QR_SVD_TOL:e}), max |Q - QW| scores {rotated:.2e} (tol {BASIS_ROTATION_TOL:e})"
        ),
    ))
}

pub fn check_angle_equivalence(seed: u64) -> Result<CheckResult> {
    let root = RngState::new(seed);
    let (m, n) = (40, 4);
    let mut worst = 0.0_f64;
    let mut smallest = f64::INFINITY;
    for k in 0..ANGLE_PAIRS {
        let mut rng = root.derive(30_000 + k as u64);
        let q = random_orthonormal(m, n, &mut rng)?;
        let half = ANGLE_PAIRS / 2;
        let qt = if k < half {
            // Equal angles from 1e-9 up to about 0.8.
            let target = 10f64.powf(-9.0 + 8.9 * k as f64 / (half - 1) as f64);
            perturb_rotation(&q, target, &mut rng)?
        } else {
            // Unequal angles: Q plus a Gaussian of size 1e-9 .. 1.
            let scale = 10f64.powf(-9.0 + 9.0 * (k - half) as f64 / (half - 1) as f64);
            let g = gaussian_matrix(m, n, &mut rng).scaled(scale);
            householder_qr(&(&q + &g))?.q
        };
        let svd = principal_angles(&q, &qt)?.sin_theta_max_angle();
        let proj = sin_theta_max_projector(&q, &qt)?;
        worst = worst.max((svd - proj).abs());
        smallest = smallest.min(proj);
    }
    Ok(result(
        3,
        "angle formula equivalence",
        worst <= ANGLE_TOL,
        format!(
            "{ANGLE_PAIRS} pairs, smallest sin(theta_n) {smallest:.1e}: max |svd - projector| {worst:.2e} (tol {ANGLE_TOL:e})"
        ),
    ))
}

fn bound_summary(set: &FigureSet, first_order: bool) -> (bool, usize, String) {
    let mut failures = Vec::new();
    let mut count = 0;
    let mut worst = (0.0_f64, String::new());
    for run in &set.runs {
        for p in run
            .reports
            .iter()
            .filter(|p| p.report.theorem.is_first_order() == first_order)
        {
            count += 1;
            let v = p.report.verdict();
            if v.worst_ratio > worst.0 {
                worst = (
                    v.worst_ratio,
                    format!("{} {} {}", run.figure, p.panel, p.report.theorem),
                );
            }
            if !v.passed {
                failures.push(format!(
                    "{} {} {} ({} violations)",
                    run.figure, p.panel, p.report.theorem, v.violations
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!(
            "{count} panel/bound pairs, worst observed/bound {:.3} at {}",
            worst.0, worst.1
        )
    } else {
        format!("failing: {}", failures.join(", "))
    };
    (failures.is_empty() && count > 0, count, detail)
}

pub fn check_exact_bounds(set: &FigureSet) -> CheckResult {
    let (passed, _, detail) = bound_summary(set, false);
    result(4, "exact bounds", passed, detail)
}

pub fn check_first_order(set: &FigureSet) -> CheckResult {
    let (mut passed, _, detail) = bound_summary(set, true);
    let mut missing = Vec::new();
    for t in [
        leverage::Theorem::T3_2,
        leverage::Theorem::T3_3,
        leverage::Theorem::T3_4,
    ] {
        let seen = set
            .runs
            .iter()
            .any(|r| r.reports.iter().any(|p| p.report.theorem == t));
        if !seen {
            missing.push(t.tag());
        }
    }
    passed &= missing.is_empty();
    let detail = if missing.is_empty() {
        detail
    } else {
        format!("{detail}; never evaluated: {}", missing.join(", "))
    };
    result(6, "first-order bounds", passed, detail)
}

pub fn check_sandwich(seed: u64) -> Result<CheckResult> {
    let root = RngState::new(seed);
    let (m, n) = (50, 25);
    let mut failures = 0;
    for k in 0..SANDWICH_INSTANCES {
        let mut rng = root.derive(40_000 + k as u64);
        let q = random_orthonormal(m, n, &mut rng)?;
        let target = 10f64.powf(rng.uniform(-8.0, -0.01));
        let qt = perturb_rotation(&q, target, &mut rng)?;
        let lev = leverage_from_basis(&q)?;
        let lev_t = leverage_qr(&qt)?;
        let sandwich = bound_t1(&lev, &principal_angles(&q, &qt)?)
            .sandwich
            .expect("m = 2n");
        if !sandwich
            .compare(lev_t.iter().map(Some).collect())?
            .verdict()
            .passed
        {
            failures += 1;
        }
    }
    let mut rng = root.derive(40_999);
    let q = random_orthonormal(m, n, &mut rng)?;
    let perp = random_orthonormal_complement(&q, n, &mut rng)?;
    let lev = leverage_from_basis(&q)?;
    let lev_t = leverage_qr(&perp)?;
    let flip = max_abs_diff(lev_t.iter(), lev.iter().map(|l| 1.0 - l));
    Ok(result(
        5,
        "m = 2n sandwich",
        failures == 0 && flip <= COMPLEMENT_TOL,
        format!(
            "{failures}/{SANDWICH_INSTANCES} rotated 50x25 instances outside the sandwich; orthogonal complement max |l~ - (1-l)| {flip:.2e} (tol {COMPLEMENT_TOL:e})"
        ),
    ))
}

/// Largest defined value in each block of one panel.
fn block_max(run: &FigureRun, panel: &str) -> Vec<f64> {
    let rel = run.rel_diffs(panel);
    run.blocks
        .iter()
        .map(|b| rel[b.clone()].iter().flatten().copied().fold(0.0, f64::max))
        .collect()
}

fn block_median(run: &FigureRun, panel: &str) -> Vec<f64> {
    let rel = run.rel_diffs(panel);
    run.blocks
        .iter()
        .map(|b| {
            let v: Vec<f64> = rel[b.clone()].iter().flatten().copied().collect();
            median(&v).unwrap_or(f64::NAN)
        })
        .collect()
}

fn within_decade(values: &[f64], targets: &[f64]) -> bool {
    values.len() == targets.len()
        && values
            .iter()
            .zip(targets)
            .all(|(v, t)| *v >= t / 10.0 && *v <= t * 10.0)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.1e}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn check_fig1(set: &FigureSet) -> CheckResult {
    let run = set.get(FigureId::Fig1);
    let b = block_max(run, "b");
    let c = block_max(run, "c");
    let ratios: Vec<f64> = c.iter().zip(&b).map(|(c, b)| c / b).collect();
    let profile = within_decade(&b, &DECADE_TARGETS);
    let scaling = ratios
        .iter()
        .all(|r| *r >= PANEL_RATIO.0 && *r <= PANEL_RATIO.1);
    result(
        7,
        "figure 1 brackets",
        profile && scaling,
        format!(
            "block max at sin=1e-8 {} vs targets {} (one decade); (c)/(b) ratios {} in [{}, {}]",
            sci(&b),
            sci(&DECADE_TARGETS),
            sci(&ratios),
            PANEL_RATIO.0,
            PANEL_RATIO.1
        ),
    )
}

pub fn check_fig3(set: &FigureSet) -> CheckResult {
    let run = set.get(FigureId::Fig3);
    let a = block_max(run, "a");
    let b = block_max(run, "b");
    let profile = within_decade(&a, &DECADE_TARGETS);
    let lost = b.first().copied().unwrap_or(0.0);
    result(
        8,
        "figure 3 brackets",
        profile && lost >= LOST_ACCURACY,
        format!(
            "block max at eps_F=1e-8 {} vs targets {}; smallest block max at eps_F=1e-5 {lost:.3e} (need >= {LOST_ACCURACY})",
            sci(&a),
            sci(&DECADE_TARGETS)
        ),
    )
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

pub fn check_fig4(set: &FigureSet) -> CheckResult {
    let run = set.get(FigureId::Fig4);
    let a = run.rel_diffs("a");
    let (mut inside, mut outside) = (0.0_f64, 0.0_f64);
    for (j, v) in a.iter().enumerate() {
        if let Some(v) = v {
            if FIG4_ROWS.contains(&j) {
                inside = inside.max(*v);
            } else {
                outside = outside.max(*v);
            }
        }
    }
    let locality = inside >= LOCALITY_FACTOR * outside;

    let mut b: Vec<f64> = run
        .rel_diffs("b")
        .into_iter()
        .flatten()
        .filter(|v| *v > 0.0)
        .collect();
    b.sort_by(f64::total_cmp);
    let (span, full) = if b.is_empty() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (
            (percentile(&b, 0.95) / percentile(&b, 0.05)).log10(),
            (b[b.len() - 1] / b[0]).log10(),
        )
    };
    result(
        9,
        "figure 4 locality",
        locality && span <= UNIFORM_DECADES,
        format!(
            "(a) perturbed-row max {inside:.2e} vs other rows {outside:.2e} (ratio {:.0}, need >= {LOCALITY_FACTOR}); (b) 5-95% span {span:.2} decades (max {UNIFORM_DECADES}), full min-max span {full:.2}",
            inside / outside
        ),
    )
}

pub fn check_fig5(set: &FigureSet) -> CheckResult {
    let run = set.get(FigureId::Fig5);
    let all = |p: &str| -> f64 {
        let v: Vec<f64> = run.rel_diffs(p).into_iter().flatten().collect();
        median(&v).unwrap_or(f64::NAN)
    };
    let (ma, mb) = (all("a"), all("b"));
    let ratio = (ma / mb).max(mb / ma);
    let spread = |p: &str| -> (Vec<f64>, f64) {
        let m = block_median(run, p);
        let hi = m.iter().copied().fold(0.0, f64::max);
        let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
        (m, hi / lo)
    };
    let (block_a, spread_a) = spread("a");
    let (block_b, spread_b) = spread("b");
    let kappa_b = run.summary.get("B.kappa2").copied().unwrap_or(f64::NAN);
    result(
        10,
        "figure 5 kappa/ell independence",
        ratio <= MEDIAN_FACTOR && spread_a <= MEDIAN_FACTOR && spread_b <= MEDIAN_FACTOR,
        format!(
            "median A {ma:.2e}, B {mb:.2e} (kappa(B) {kappa_b:.2e}), factor {ratio:.2}; block medians A {} B {} (max/min {spread_a:.2}, {spread_b:.2}; limit {MEDIAN_FACTOR})",
            sci(&block_a),
            sci(&block_b)
        ),
    )
}

fn fd_error(a: &Matrix, direction: &Matrix, t: f64) -> Result<f64> {
    let r0 = householder_qr(a)?.r;
    let rt = householder_qr(&(a + &direction.scaled(t)))?.r;
    let fd = &(&rt - &r0).scaled(1.0 / t) * &upper_triangular_inverse(&r0)?;
    let exact = rdot_rinv(a, direction)?.matrix;
    Ok((&fd - &exact).frobenius_norm() / exact.frobenius_norm())
}

pub fn check_machinery(seed: u64) -> Result<CheckResult> {
    let root = RngState::new(seed);
    let mut worst_rr = 0.0_f64;
    for k in 0..RDOT_PAIRS {
        let mut rng = root.derive(50_000 + k as u64);
        let kappa = 10f64.powf(rng.uniform(0.0, 4.0));
        let scales: Vec<f64> = (0..60).map(|_| 10f64.powf(rng.uniform(0.0, 3.0))).collect();
        let a = gen_randsvd(60, 5, kappa, &mut rng)?.scale_rows(&scales);
        let d = gaussian_matrix(60, 5, &mut rng).scaled(10f64.powf(rng.uniform(-10.0, -2.0)));
        let r = rdot_rinv(&a, &d)?;
        worst_rr = worst_rr.max(r.fro_norm / r.bound);
    }
    let rr_ok = worst_rr <= 1.0 + RDOT_REL_TOL;

    let mut rng = root.derive(51_000);
    let scales: Vec<f64> = (0..200)
        .map(|i| [1.0, 10.0, 100.0, 1000.0][i / 50])
        .collect();
    let a = gaussian_matrix(200, 10, &mut rng).scale_rows(&scales);
    let g = gaussian_matrix(200, 10, &mut rng);
    let direction = g.scaled(a.frobenius_norm() / g.frobenius_norm());
    let residual = |eps: f64| -> Result<f64> {
        let d = direction.scaled(eps);
        Ok((&delta_q_exact(&a, &d)? - &delta_q_first_order(&a, &d)?).frobenius_norm())
    };
    let decay = residual(1e-4)? / residual(1e-5)?;
    let decay_ok = decay >= DECAY_RANGE.0 && decay <= DECAY_RANGE.1;

    let (e1, e2) = (
        fd_error(&a, &direction, 1e-3)?,
        fd_error(&a, &direction, 1e-4)?,
    );
    let order = (e1 / e2).log10();
    Ok(result(
        11,
        "first-order machinery",
        rr_ok && decay_ok && order >= FD_MIN_ORDER,
        format!(
            "max ||RdotRinv||_F / (sqrt2 sr^1/2 kappa) {worst_rr:.3} over {RDOT_PAIRS} pairs; dQ residual ratio 1e-4/1e-5 {decay:.1} in [{}, {}]; finite-difference order {order:.2} (need >= {FD_MIN_ORDER})",
            DECAY_RANGE.0, DECAY_RANGE.1
        ),
    ))
}

pub fn check_counterexample() -> Result<CheckResult> {
    let a = Matrix::from_rows(&[[0.5, 0.5], [0.5, -0.5], [0.5, 0.5], [0.5, -0.5]])?;
    let d = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])?;
    let m = measure(&a, &d)?;
    let (e3, p3) = (
        m.eps_row[2].unwrap_or(f64::NAN),
        m.eps_row_perp[2].unwrap_or(f64::NAN),
    );
    Ok(result(
        12,
        "row counterexample",
        e3.abs() <= COUNTEREXAMPLE_TOL && (p3 - 1.0).abs() <= COUNTEREXAMPLE_TOL,
        format!("eps_3 = {e3:e}, eps_perp_3 = {p3:e}"),
    ))
}

pub fn check_determinism(seed: u64) -> Result<CheckResult> {
    let mut differing = Vec::new();
    for f in FigureId::ALL {
        let cfg = ExperimentConfig::new(f, seed);
        let first = to_csv(&run_figure(&cfg, false)?.rows);
        let second = to_csv(&run_figure(&cfg, false)?.rows);
        if first != second {
            differing.push(f.tag());
        }
    }
    Ok(result(
        13,
        "determinism",
        differing.is_empty(),
        if differing.is_empty() {
            format!("figures 1-5 at seed {seed}: identical CSV bytes across two runs")
        } else {
            format!("CSV differs for {}", differing.join(", "))
        },
    ))
}
