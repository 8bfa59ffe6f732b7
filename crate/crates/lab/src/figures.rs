//! The five figure experiments.
//!
//! Every run draws its matrices and perturbations from sub-streams of the
//! configured seed, evaluates the figure's bound per row, and checks every
//! bound it evaluated against the slack policy before returning.
//!
//! | figure | matrices | perturbation                          | plotted bound |
//! |--------|----------|---------------------------------------|---------------|
//! | 1      | A        | rotation, sin θₙ = 1e-8, 1e-6, 1e-4   | `c1_rel`      |
//! | 2      | A, B     | ε = 1e-8, mostly inside the range     | `t2_gen`, `t2_perp` |
//! | 3      | A        | Gaussian, ε_F = 1e-8, 1e-5            | `t3_1`        |
//! | 4      | A        | rows 500..750 only; same row scaling  | `t3_2`        |
//! | 5      | A, B     | component-wise rows, η_j = 1e-8       | `t3_4`        |

use std::collections::BTreeMap;
use std::ops::Range;

use leverage::bounds::{
    bound_c1, bound_t1, bound_t2, bound_t3_1, bound_t3_2, bound_t3_3, bound_t3_4,
};
use leverage::gen::generate;
use leverage::leverage::absolute_diffs;
use leverage::linalg::householder_qr;
use leverage::{
    leverage_qr, matrix_stats, measure, principal_angles, relative_diffs, BoundReport, GenSpec,
    LeverageScores, Matrix, MatrixStats, PerturbationKind, PerturbationMetrics, PerturbationSpec,
    RngState, Theorem,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, FigureId};
use crate::error::{LabError, Result};

/// Row range perturbed in panel (a) of figure 4.
pub const FIG4_ROWS: Range<usize> = 500..750;

/// One plotted point: row `j` of one panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub panel: String,
    pub j: usize,
    pub ell: f64,
    pub ell_tilde: Option<f64>,
    /// `|ℓ̃ − ℓ|/ℓ`; `None` where `ℓ = 0`.
    pub rel_diff: Option<f64>,
    pub bound: Option<f64>,
    pub theorem: Option<Theorem>,
}

/// A bound evaluated for one panel, with observed values attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelReport {
    pub panel: String,
    /// Whether this bound is the one drawn in the panel.
    pub plotted: bool,
    pub report: BoundReport,
}

/// Output of one figure run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRun {
    pub figure: FigureId,
    pub seed: u64,
    pub rows: Vec<FigureRow>,
    pub reports: Vec<PanelReport>,
    /// Scalars worth reporting: condition numbers, measured magnitudes.
    pub summary: BTreeMap<String, f64>,
    /// Row ranges of the leverage plateaus, for per-block statistics.
    pub blocks: Vec<Range<usize>>,
}

impl FigureRun {
    fn new(cfg: &ExperimentConfig, blocks: Vec<Range<usize>>) -> Self {
        Self {
            figure: cfg.figure,
            seed: cfg.seed,
            rows: Vec::new(),
            reports: Vec::new(),
            summary: BTreeMap::new(),
            blocks,
        }
    }

    pub fn panel_rows<'a>(&'a self, panel: &'a str) -> impl Iterator<Item = &'a FigureRow> + 'a {
        self.rows.iter().filter(move |r| r.panel == panel)
    }

    /// Relative differences of one panel, indexed by row (`None` where undefined).
    pub fn rel_diffs(&self, panel: &str) -> Vec<Option<f64>> {
        self.panel_rows(panel).map(|r| r.rel_diff).collect()
    }

    pub fn panels(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.panel) {
                seen.push(r.panel.clone());
            }
        }
        seen
    }

    /// Panels and theorems whose reports fail the slack policy.
    pub fn failures(&self) -> Vec<String> {
        self.reports
            .iter()
            .filter_map(|p| {
                let v = p.report.verdict();
                (!v.passed).then(|| {
                    format!(
                        "{} panel {} {}: {} of {} rows violate, worst ratio {:.3e}",
                        self.figure,
                        p.panel,
                        p.report.theorem,
                        v.violations,
                        v.checked,
                        v.worst_ratio
                    )
                })
            })
            .collect()
    }

    fn push_leverage(&mut self, panel: &str, lev: &LeverageScores) {
        self.rows
            .extend(lev.iter().enumerate().map(|(j, l)| FigureRow {
                panel: panel.to_string(),
                j,
                ell: l,
                ell_tilde: None,
                rel_diff: None,
                bound: None,
                theorem: None,
            }));
    }

    fn push_panel(&mut self, panel: &str, cmp: &Comparison, plotted: &BoundReport) {
        self.rows.extend((0..cmp.lev.len()).map(|j| FigureRow {
            panel: panel.to_string(),
            j,
            ell: cmp.lev[j],
            ell_tilde: Some(cmp.lev_tilde[j]),
            rel_diff: cmp.rel[j],
            bound: plotted.bound[j],
            theorem: Some(plotted.theorem),
        }));
    }

    fn add_report(&mut self, panel: &str, report: BoundReport, plotted: bool) {
        self.reports.push(PanelReport {
            panel: panel.to_string(),
            plotted,
            report,
        });
    }
}

/// Leverage scores of `A` and `A + ΔA` with everything the bounds need.
pub struct Comparison {
    pub lev: LeverageScores,
    pub lev_tilde: LeverageScores,
    pub rel: Vec<Option<f64>>,
    pub stats: MatrixStats,
    pub metrics: PerturbationMetrics,
    pub angles: leverage::PrincipalAngles,
}

impl Comparison {
    pub fn new(a: &Matrix, delta: &Matrix) -> Result<Self> {
        let perturbed = a + delta;
        let lev = leverage_qr(a)?;
        let lev_tilde = leverage_qr(&perturbed)?;
        let rel = relative_diffs(&lev, &lev_tilde, 0.0)?;
        let q = householder_qr(a)?.q;
        let q_tilde = householder_qr(&perturbed)?.q;
        Ok(Self {
            angles: principal_angles(&q, &q_tilde)?,
            stats: matrix_stats(a)?,
            metrics: measure(a, delta)?,
            lev,
            lev_tilde,
            rel,
        })
    }

    fn observe(&self, report: BoundReport) -> Result<BoundReport> {
        let observed = if report.theorem.is_relative() {
            self.rel.clone()
        } else {
            absolute_diffs(&self.lev, &self.lev_tilde)?
                .into_iter()
                .map(Some)
                .collect()
        };
        Ok(report.compare(observed)?)
    }

    /// Bounds that need only angles, plus every norm-wise bound whose
    /// hypothesis holds for this pair.
    fn exact_reports(&self) -> Result<Vec<BoundReport>> {
        let mut out = vec![
            self.observe(bound_t1(&self.lev, &self.angles).absolute)?,
            self.observe(bound_c1(&self.lev, &self.angles))?,
        ];
        if let Ok((perp, general)) = bound_t2(&self.lev, &self.stats, &self.metrics) {
            out.push(self.observe(perp)?);
            out.push(self.observe(general)?);
        }
        if let Ok(r) = bound_t3_1(&self.lev, &self.stats, &self.metrics) {
            out.push(self.observe(r)?);
        }
        Ok(out)
    }

    /// The row-wise first-order bounds whose hypotheses hold.
    fn first_order_reports(&self) -> Result<Vec<BoundReport>> {
        let mut out = Vec::new();
        if let Ok(r) = bound_t3_2(&self.stats, &self.metrics) {
            out.push(self.observe(r)?);
        }
        if let Ok(r) = bound_t3_3(&self.stats, &self.metrics) {
            out.push(self.observe(r)?);
        }
        Ok(out)
    }
}

/// Records every report for `panel`, marking `plotted` and returning a copy
/// of it.
fn record(
    run: &mut FigureRun,
    panel: &str,
    cmp: &Comparison,
    plotted: Theorem,
    first_order: bool,
) -> Result<BoundReport> {
    let mut reports = cmp.exact_reports()?;
    if first_order {
        reports.extend(cmp.first_order_reports()?);
    }
    let chosen = reports
        .iter()
        .find(|r| r.theorem == plotted)
        .cloned()
        .ok_or_else(|| {
            LabError::Assertion(format!(
                "{} panel {panel}: hypothesis of {plotted} not satisfied",
                run.figure
            ))
        })?;
    for r in reports {
        let is_plotted = r.theorem == plotted;
        run.add_report(panel, r, is_plotted);
    }
    run.push_panel(panel, cmp, &chosen);
    Ok(chosen)
}

fn finish(run: FigureRun, assert_bounds: bool) -> Result<FigureRun> {
    if assert_bounds {
        let failures = run.failures();
        if !failures.is_empty() {
            return Err(LabError::Assertion(failures.join("; ")));
        }
    }
    Ok(run)
}

fn spec(kind: PerturbationKind, rng: &RngState, label: u64) -> PerturbationSpec {
    PerturbationSpec {
        kind,
        seed: rng.derive(label).seed(),
    }
}

// Sub-stream labels. Matrices and perturbations never share a stream.
const STREAM_A: u64 = 1;
const STREAM_B: u64 = 2;
const STREAM_PERTURB: u64 = 100;

/// Dispatches on `cfg.figure`.
pub fn run_figure(cfg: &ExperimentConfig, assert_bounds: bool) -> Result<FigureRun> {
    cfg.validate()?;
    match cfg.figure {
        FigureId::Fig1 => run_fig1(cfg, assert_bounds),
        FigureId::Fig2 => run_fig2(cfg, assert_bounds),
        FigureId::Fig3 => run_fig3(cfg, assert_bounds),
        FigureId::Fig4 => run_fig4(cfg, assert_bounds),
        FigureId::Fig5 => run_fig5(cfg, assert_bounds),
    }
}

fn matrix_a(cfg: &ExperimentConfig, rng: &RngState) -> Result<Matrix> {
    Ok(generate(&cfg.gen_a(), &mut rng.derive(STREAM_A))?)
}

fn matrix_b(cfg: &ExperimentConfig, rng: &RngState) -> Result<Matrix> {
    Ok(generate(&cfg.gen_b(), &mut rng.derive(STREAM_B))?)
}

/// Rotations of `range(A)` with all principal angles equal; the Corollary
/// bound on relative differences.
pub fn run_fig1(cfg: &ExperimentConfig, assert_bounds: bool) -> Result<FigureRun> {
    let rng = RngState::new(cfg.seed);
    let mut run = FigureRun::new(cfg, cfg.gen_a().block_ranges());
    let a = matrix_a(cfg, &rng)?;
    // The rotation acts on an orthonormal basis; A itself is one unless
    // the recipe was overridden.
    let q = householder_qr(&a)?.q;
    run.push_leverage("a", &leverage_qr(&a)?);
    for (k, (panel, target)) in ["b", "c", "d"]
        .into_iter()
        .zip(cfg.magnitudes())
        .enumerate()
    {
        let p = spec(
            PerturbationKind::Rotation {
                target_sin_theta_n: target,
            },
            &rng,
            STREAM_PERTURB + k as u64,
        )
        .apply(&q)?;
        let cmp = Comparison::new(&a, &(&p.perturbed - &a))?;
        run.summary.insert(
            format!("{panel}.sin_theta_n"),
            cmp.angles.sin_theta_max_angle(),
        );
        record(&mut run, panel, &cmp, Theorem::C1Rel, false)?;
    }
    finish(run, assert_bounds)
}

/// Two-norm perturbations of A and B that lie mostly inside the column
/// space: panels (c, d) plot the general bound, (e, f) the projected one.
pub fn run_fig2(cfg: &ExperimentConfig, assert_bounds: bool) -> Result<FigureRun> {
    let rng = RngState::new(cfg.seed);
    let mut run = FigureRun::new(cfg, cfg.gen_a().block_ranges());
    let mags = cfg.magnitudes();
    let (eps, eps_perp) = (mags[0], mags[1]);
    let mats = [("A", matrix_a(cfg, &rng)?), ("B", matrix_b(cfg, &rng)?)];
    let lev_panels = ["a", "b"];
    let general_panels = ["c", "d"];
    let perp_panels = ["e", "f"];
    for (k, (name, m)) in mats.iter().enumerate() {
        run.push_leverage(lev_panels[k], &leverage_qr(m)?);
        let p = spec(
            PerturbationKind::RangeDominant { eps, eps_perp },
            &rng,
            STREAM_PERTURB + k as u64,
        )
        .apply(m)?;
        let cmp = Comparison::new(m, &p.delta)?;
        run.summary
            .insert(format!("{name}.kappa2"), cmp.stats.kappa2);
        run.summary
            .insert(format!("{name}.eps_two"), cmp.metrics.eps_two);
        run.summary
            .insert(format!("{name}.eps_two_perp"), cmp.metrics.eps_two_perp);

        let general = record(&mut run, general_panels[k], &cmp, Theorem::T2Gen, true)?;
        // The projected panel shows the same differences against the other bound.
        let perp = run
            .reports
            .iter()
            .find(|r| r.panel == general_panels[k] && r.report.theorem == Theorem::T2Perp)
            .map(|r| r.report.clone())
            .ok_or_else(|| {
                LabError::Assertion(format!("fig2 {name}: projected bound hypothesis failed"))
            })?;
        run.push_panel(perp_panels[k], &cmp, &perp);
        let ratio = median_ratio(&perp.bound, &general.bound);
        run.summary
            .insert(format!("{name}.perp_over_general"), ratio);
    }
    finish(run, assert_bounds)
}

/// Median of `num_j / den_j` over rows where both are positive.
fn median_ratio(num: &[Option<f64>], den: &[Option<f64>]) -> f64 {
    let ratios: Vec<f64> = num
        .iter()
        .zip(den)
        .filter_map(|(n, d)| match (n, d) {
            (Some(n), Some(d)) if *d > 0.0 => Some(n / d),
            _ => None,
        })
        .collect();
    median(&ratios).unwrap_or(f64::NAN)
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

/// Gaussian Frobenius-norm perturbations of A.
pub fn run_fig3(cfg: &ExperimentConfig, assert_bounds: bool) -> Result<FigureRun> {
    let rng = RngState::new(cfg.seed);
    let mut run = FigureRun::new(cfg, cfg.gen_a().block_ranges());
    let a = matrix_a(cfg, &rng)?;
    for (k, (panel, eps_f)) in ["a", "b"].into_iter().zip(cfg.magnitudes()).enumerate() {
        let p = spec(
            PerturbationKind::NormwiseFro { eps_f },
            &rng,
            STREAM_PERTURB + k as u64,
        )
        .apply(&a)?;
        let cmp = Comparison::new(&a, &p.delta)?;
        run.summary
            .insert(format!("{panel}.eps_fro"), cmp.metrics.eps_fro);
        record(&mut run, panel, &cmp, Theorem::T3_1, eps_f <= 1e-8)?;
    }
    finish(run, assert_bounds)
}

/// Row-wise perturbations of A: (a) only rows 500..750, (b) with the same
/// row scaling as A.
pub fn run_fig4(cfg: &ExperimentConfig, assert_bounds: bool) -> Result<FigureRun> {
    let rng = RngState::new(cfg.seed);
    let gen = cfg.gen_a();
    let mut run = FigureRun::new(cfg, gen.block_ranges());
    let a = matrix_a(cfg, &rng)?;
    let eps_f = cfg.magnitudes()[0];
    if FIG4_ROWS.end > a.rows() {
        return Err(LabError::Config(format!(
            "figure 4 perturbs rows {FIG4_ROWS:?} but A has {} rows",
            a.rows()
        )));
    }
    let kinds = [
        PerturbationKind::RowSubset {
            start: FIG4_ROWS.start,
            end: FIG4_ROWS.end,
            eps_f,
        },
        PerturbationKind::SameRowScaling {
            eps_f,
            // A fresh draw of the un-orthonormalized template, so the
            // perturbation shares A's row scaling but not its column space.
            recipe: Some(GenSpec {
                orthonormalize: false,
                ..gen.clone()
            }),
        },
    ];
    for (k, (panel, kind)) in ["a", "b"].into_iter().zip(kinds).enumerate() {
        let p = spec(kind, &rng, STREAM_PERTURB + k as u64).apply(&a)?;
        let cmp = Comparison::new(&a, &p.delta)?;
        run.summary
            .insert(format!("{panel}.eps_fro"), cmp.metrics.eps_fro);
        record(&mut run, panel, &cmp, Theorem::T3_2, true)?;
    }
    finish(run, assert_bounds)
}

/// Component-wise row-scaled perturbations of A and B with equal η_j.
pub fn run_fig5(cfg: &ExperimentConfig, assert_bounds: bool) -> Result<FigureRun> {
    let rng = RngState::new(cfg.seed);
    let mut run = FigureRun::new(cfg, cfg.gen_a().block_ranges());
    let eta_value = cfg.magnitudes()[0];
    let mats = [
        ("A", "a", matrix_a(cfg, &rng)?),
        ("B", "b", matrix_b(cfg, &rng)?),
    ];
    for (k, (name, panel, m)) in mats.iter().enumerate() {
        let eta = vec![eta_value; m.rows()];
        let p = spec(
            PerturbationKind::ComponentwiseRows { eta: eta.clone() },
            &rng,
            STREAM_PERTURB + k as u64,
        )
        .apply(m)?;
        let cmp = Comparison::new(m, &p.delta)?;
        run.summary
            .insert(format!("{name}.kappa2"), cmp.stats.kappa2);

        let t34 = cmp.observe(bound_t3_4(&eta, m.cols(), cmp.stats.kappa2)?)?;
        for r in cmp.exact_reports()? {
            run.add_report(panel, r, false);
        }
        for r in cmp.first_order_reports()? {
            run.add_report(panel, r, false);
        }
        run.add_report(panel, t34.clone(), true);
        run.push_panel(panel, &cmp, &t34);
    }
    finish(run, assert_bounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(figure: FigureId) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(figure, 9);
        let gen = leverage::GenSpec {
            m: 80,
            n: 4,
            block_sizes: vec![20; 4],
            block_scales: vec![1.0, 10.0, 100.0, 1000.0],
            kappa: 1.0,
            sv_mode: leverage::SvMode::Gaussian,
            orthonormalize: true,
        };
        cfg.overrides.gen_b = Some(leverage::GenSpec {
            kappa: 1e3,
            sv_mode: leverage::SvMode::Geometric,
            orthonormalize: false,
            ..gen.clone()
        });
        cfg.overrides.gen = Some(gen);
        cfg
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn small_runs_have_expected_shape() {
        for (fig, panels) in [
            (FigureId::Fig1, vec!["a", "b", "c", "d"]),
            (FigureId::Fig2, vec!["a", "c", "e", "b", "d", "f"]),
            (FigureId::Fig3, vec!["a", "b"]),
            (FigureId::Fig5, vec!["a", "b"]),
        ] {
            let run = run_figure(&small_cfg(fig), true).unwrap();
            assert_eq!(run.panels(), panels, "{fig}");
            assert_eq!(run.rows.len(), 80 * panels.len());
            assert!(run.failures().is_empty());
            assert!(run.reports.iter().any(|r| r.plotted));
        }
    }

    #[test]
    fn same_seed_same_run() {
        let a = run_figure(&small_cfg(FigureId::Fig3), true).unwrap();
        let b = run_figure(&small_cfg(FigureId::Fig3), true).unwrap();
        assert_eq!(a, b);
        let mut other = small_cfg(FigureId::Fig3);
        other.seed = 10;
        assert_ne!(run_figure(&other, true).unwrap().rows, a.rows);
    }

    #[test]
    fn fig4_needs_enough_rows() {
        assert!(matches!(
            run_figure(&small_cfg(FigureId::Fig4), true),
            Err(LabError::Config(_))
        ));
    }

    #[test]
    fn zero_eta_control_is_roundoff_only() {
        let mut cfg = small_cfg(FigureId::Fig5);
        cfg.overrides.magnitudes = Some(vec![0.0]);
        let run = run_figure(&cfg, false).unwrap();
        for r in run.rows.iter().filter(|r| r.panel == "a") {
            assert!(r.rel_diff.unwrap() <= 1e-12, "{r:?}");
        }
    }
}
