//! Per-row evaluators for the leverage-score perturbation bounds.
//!
//! Every evaluator returns a [`BoundReport`] holding the right-hand side for
//! each row. Attach the measured differences with [`BoundReport::compare`]
//! and read the pass/fail summary from [`BoundReport::verdict`].
//!
//! | tag           | observed quantity | needs                              |
//! |---------------|-------------------|------------------------------------|
//! | `t1_abs`      | `|ℓ̃ − ℓ|`         | principal angles                   |
//! | `t1_sandwich` | `ℓ̃` (m = 2n)      | principal angles                   |
//! | `c1_rel`      | `|ℓ̃ − ℓ|/ℓ`       | principal angles                   |
//! | `t2_perp`     | `|ℓ̃ − ℓ|/ℓ`       | κ₂, ε⊥, `ε κ ≤ ½`                  |
//! | `t2_gen`      | `|ℓ̃ − ℓ|/ℓ`       | κ₂, ε, `ε κ ≤ ½`                   |
//! | `t3_1`        | `|ℓ̃ − ℓ|/ℓ`       | κ₂, sr, ε_F, `ε κ ≤ ½`             |
//! | `t3_2`        | `|ℓ̃ − ℓ|/ℓ`       | κ₂, sr, ε_j, ε_F, `ε κ < 1` (1st order) |
//! | `t3_3`        | `|ℓ̃ − ℓ|/ℓ`       | κ₂, sr, ε⊥_j, ε⊥_F, `ε κ ≤ ½` (1st order) |
//! | `t3_4`        | `|ℓ̃ − ℓ|/ℓ`       | η_j, n, `η κ < 1` (1st order)      |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angles::PrincipalAngles;
use crate::error::{Error, Result};
use crate::leverage::{check_full_rank, LeverageScores, MatrixStats};
use crate::linalg::Matrix;
use crate::linalg::{householder_qr, singular_values, two_norm, up, upper_triangular_inverse};
use crate::perturb::PerturbationMetrics;

/// Relative slack on non-asymptotic bounds (floating-point evaluation only).
pub const EXACT_REL_SLACK: f64 = 1e-3;
/// Absolute slack on non-asymptotic bounds.
pub const EXACT_ABS_SLACK: f64 = 1e-12;
/// Fraction of rows that must satisfy a first-order bound outright.
pub const FIRST_ORDER_FRACTION: f64 = 0.99;
/// Every row must stay below this multiple of a first-order bound.
pub const FIRST_ORDER_CAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "t1_abs")]
    T1Abs,
    #[serde(rename = "t1_sandwich")]
    T1Sandwich,
    #[serde(rename = "c1_rel")]
    C1Rel,
    #[serde(rename = "t2_perp")]
    T2Perp,
    #[serde(rename = "t2_gen")]
    T2Gen,
    #[serde(rename = "t3_1")]
    T3_1,
    #[serde(rename = "t3_2")]
    T3_2,
    #[serde(rename = "t3_3")]
    T3_3,
    #[serde(rename = "t3_4")]
    T3_4,
}

impl Theorem {
    pub const ALL: [Theorem; 9] = [
        Theorem::T1Abs,
        Theorem::T1Sandwich,
        Theorem::C1Rel,
        Theorem::T2Perp,
        Theorem::T2Gen,
        Theorem::T3_1,
        Theorem::T3_2,
        Theorem::T3_3,
        Theorem::T3_4,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Theorem::T1Abs => "t1_abs",
            Theorem::T1Sandwich => "t1_sandwich",
            Theorem::C1Rel => "c1_rel",
            Theorem::T2Perp => "t2_perp",
            Theorem::T2Gen => "t2_gen",
            Theorem::T3_1 => "t3_1",
            Theorem::T3_2 => "t3_2",
            Theorem::T3_3 => "t3_3",
            Theorem::T3_4 => "t3_4",
        }
    }

    /// Bounds that drop second-order terms and are checked with the
    /// outlier allowance.
    pub fn is_first_order(self) -> bool {
        matches!(self, Theorem::T3_2 | Theorem::T3_3 | Theorem::T3_4)
    }

    /// Whether the observed quantity is the relative difference.
    pub fn is_relative(self) -> bool {
        !matches!(self, Theorem::T1Abs | Theorem::T1Sandwich)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Theorem::ALL
            .into_iter()
            .find(|t| t.tag() == lower)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown theorem tag '{s}'")))
    }
}

/// Right-hand sides of one bound for every row, optionally with the
/// observed values and the per-row outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: Theorem,
    /// Upper bound per row; `None` where the bound is undefined (`ℓ_j = 0`).
    pub bound: Vec<Option<f64>>,
    /// Lower bound per row, only for the sandwich.
    pub lower: Option<Vec<Option<f64>>>,
    /// Scalars that entered the bound.
    pub inputs: BTreeMap<String, f64>,
    pub observed: Vec<Option<f64>>,
    /// `None` where either side is undefined.
    pub holds: Vec<Option<bool>>,
}

/// Outcome of checking a report against its slack policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub checked: usize,
    /// Rows where the observed value exceeds the bound (after exact slack,
    /// for non-asymptotic bounds).
    pub violations: usize,
    /// Largest observed/bound ratio among checked rows with a positive bound.
    pub worst_ratio: f64,
    /// Rows beyond [`FIRST_ORDER_CAP`] times the bound.
    pub beyond_cap: usize,
    pub passed: bool,
}

impl BoundReport {
    fn new(theorem: Theorem, bound: Vec<Option<f64>>, inputs: &[(&str, f64)]) -> Self {
        let len = bound.len();
        Self {
            theorem,
            bound,
            lower: None,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            observed: vec![None; len],
            holds: vec![None; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bound.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bound.is_empty()
    }

    /// Attaches observed values and fills in the per-row outcome.
    ///
    /// Non-asymptotic bounds hold at a row when
    /// `observed ≤ bound·(1 + EXACT_REL_SLACK) + EXACT_ABS_SLACK`;
    /// first-order bounds when `observed ≤ bound`. The sandwich checks
    /// `lower − EXACT_ABS_SLACK ≤ observed ≤ upper + EXACT_ABS_SLACK`.
    pub fn compare(mut self, observed: Vec<Option<f64>>) -> Result<Self> {
        if observed.len() != self.bound.len() {
            return Err(Error::Dimension(format!(
                "{} observed values for {} bounds",
                observed.len(),
                self.bound.len()
            )));
        }
        let first_order = self.theorem.is_first_order();
        self.holds = observed
            .iter()
            .enumerate()
            .map(|(j, obs)| {
                let (obs, upper) = (obs.as_ref()?, self.bound[j]?);
                if let Some(lower) = &self.lower {
                    let lower = lower[j]?;
                    return Some(
                        *obs >= lower - EXACT_ABS_SLACK && *obs <= upper + EXACT_ABS_SLACK,
                    );
                }
                Some(if first_order {
                    *obs <= upper
                } else {
                    *obs <= upper * (1.0 + EXACT_REL_SLACK) + EXACT_ABS_SLACK
                })
            })
            .collect();
        self.observed = observed;
        Ok(self)
    }

    /// Applies the slack policy: no violations for non-asymptotic bounds;
    /// for first-order bounds at least [`FIRST_ORDER_FRACTION`] of rows
    /// within the bound and all rows within [`FIRST_ORDER_CAP`] times it.
    pub fn verdict(&self) -> Verdict {
        let checked = self.holds.iter().flatten().count();
        let violations = self.holds.iter().flatten().filter(|h| !**h).count();
        let mut worst_ratio = 0.0_f64;
        let mut beyond_cap = 0;
        for (obs, b) in self.observed.iter().zip(&self.bound) {
            if let (Some(o), Some(b)) = (obs, b) {
                if *b > 0.0 {
                    worst_ratio = worst_ratio.max(o / b);
                } else if *o > 0.0 {
                    worst_ratio = f64::INFINITY;
                }
                if *o > FIRST_ORDER_CAP * b {
                    beyond_cap += 1;
                }
            }
        }
        let passed = if self.theorem.is_first_order() {
            checked > 0
                && (checked - violations) as f64 >= FIRST_ORDER_FRACTION * checked as f64
                && beyond_cap == 0
        } else {
            violations == 0
        };
        Verdict {
            checked,
            violations,
            worst_ratio,
            beyond_cap,
            passed,
        }
    }
}

fn clamp_unit(l: f64) -> f64 {
    l.clamp(0.0, 1.0)
}

/// Absolute-difference bound and, when `m = 2n`, the two-sided sandwich.
#[derive(Debug, Clone, PartialEq)]
pub struct T1Reports {
    pub absolute: BoundReport,
    pub sandwich: Option<BoundReport>,
}

/// `|ℓ̃_j − ℓ_j| ≤ 2√(ℓ_j(1−ℓ_j)) cos θ₁ sin θₙ + sin²θₙ`, plus for `m = 2n`
/// `1 − (sin θₙ √ℓ_j + cos θ₁ √(1−ℓ_j))² ≤ ℓ̃_j ≤ (cos θ₁ √ℓ_j + sin θₙ √(1−ℓ_j))²`.
pub fn bound_t1(lev: &LeverageScores, angles: &PrincipalAngles) -> T1Reports {
    let c = angles.cos_theta_min_angle();
    let s = angles.sin_theta_max_angle();
    let inputs = [("cos_theta_1", c), ("sin_theta_n", s), ("n", lev.n as f64)];
    let absolute: Vec<Option<f64>> = lev
        .iter()
        .map(|l| {
            let l = clamp_unit(l);
            Some(2.0 * (l * (1.0 - l)).sqrt() * c * s + s * s)
        })
        .collect();
    let absolute = BoundReport::new(Theorem::T1Abs, absolute, &inputs);

    let sandwich = (lev.len() == 2 * lev.n).then(|| {
        let (lower, upper): (Vec<_>, Vec<_>) = lev
            .iter()
            .map(|l| {
                let l = clamp_unit(l);
                let (r, rc) = (l.sqrt(), (1.0 - l).sqrt());
                let lo = 1.0 - (s * r + c * rc).powi(2);
                let hi = (c * r + s * rc).powi(2);
                (Some(lo), Some(hi))
            })
            .unzip();
        let mut report = BoundReport::new(Theorem::T1Sandwich, upper, &inputs);
        report.lower = Some(lower);
        report
    });

    T1Reports { absolute, sandwich }
}

/// `|ℓ̃_j − ℓ_j|/ℓ_j ≤ 2√((1−ℓ_j)/ℓ_j) cos θ₁ sin θₙ + sin²θₙ/ℓ_j`.
pub fn bound_c1(lev: &LeverageScores, angles: &PrincipalAngles) -> BoundReport {
    let c = angles.cos_theta_min_angle();
    let s = angles.sin_theta_max_angle();
    let bound = lev
        .iter()
        .map(|l| {
            (l > 0.0).then(|| {
                let l = l.min(1.0);
                2.0 * ((1.0 - l) / l).sqrt() * c * s + s * s / l
            })
        })
        .collect();
    BoundReport::new(
        Theorem::C1Rel,
        bound,
        &[("cos_theta_1", c), ("sin_theta_n", s), ("n", lev.n as f64)],
    )
}

/// `‖ΔA‖₂ ‖A†‖₂ = ε κ₂(A)`.
fn perturbation_times_pinv(stats: &MatrixStats, metrics: &PerturbationMetrics) -> f64 {
    metrics.eps_two * stats.kappa2
}

fn require(
    theorem: &'static str,
    quantity: &'static str,
    value: f64,
    requirement: &'static str,
    ok: bool,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Hypothesis {
            theorem,
            quantity,
            value,
            requirement,
        })
    }
}

fn require_half(
    theorem: &'static str,
    stats: &MatrixStats,
    metrics: &PerturbationMetrics,
) -> Result<()> {
    let v = perturbation_times_pinv(stats, metrics);
    require(theorem, "||dA||_2 ||A^+||_2", v, "<= 1/2", v <= 0.5)
}

/// Projected and general two-norm bounds:
/// `4(√((1−ℓ)/ℓ) + κε⊥/ℓ) κ ε⊥` and `(2√((1−ℓ)/ℓ) + κε/ℓ) κ ε`.
///
/// Both require `‖ΔA‖₂‖A†‖₂ ≤ ½`.
pub fn bound_t2(
    lev: &LeverageScores,
    stats: &MatrixStats,
    metrics: &PerturbationMetrics,
) -> Result<(BoundReport, BoundReport)> {
    require_half("t2", stats, metrics)?;
    let k = stats.kappa2;
    let (e, ep) = (metrics.eps_two, metrics.eps_two_perp);
    let per_row = |f: &dyn Fn(f64) -> f64| -> Vec<Option<f64>> {
        lev.iter()
            .map(|l| (l > 0.0).then(|| f(l.min(1.0))))
            .collect()
    };
    let perp = per_row(&|l| 4.0 * (((1.0 - l) / l).sqrt() + k * ep / l) * k * ep);
    let general = per_row(&|l| (2.0 * ((1.0 - l) / l).sqrt() + k * e / l) * k * e);
    Ok((
        BoundReport::new(
            Theorem::T2Perp,
            perp,
            &[("kappa2", k), ("eps_two_perp", ep)],
        ),
        BoundReport::new(Theorem::T2Gen, general, &[("kappa2", k), ("eps_two", e)]),
    ))
}

/// `12(√((1−ℓ)/ℓ) + 3κ sr^½ ε_F/ℓ) κ sr^½ ε_F`, requiring `‖ΔA‖₂‖A†‖₂ ≤ ½`.
pub fn bound_t3_1(
    lev: &LeverageScores,
    stats: &MatrixStats,
    metrics: &PerturbationMetrics,
) -> Result<BoundReport> {
    require_half("t3_1", stats, metrics)?;
    let k = stats.kappa2;
    let g = k * stats.stable_rank.sqrt() * metrics.eps_fro;
    let bound = lev
        .iter()
        .map(|l| {
            (l > 0.0).then(|| {
                let l = l.min(1.0);
                12.0 * (((1.0 - l) / l).sqrt() + 3.0 * g / l) * g
            })
        })
        .collect();
    Ok(BoundReport::new(
        Theorem::T3_1,
        bound,
        &[
            ("kappa2", k),
            ("stable_rank", stats.stable_rank),
            ("eps_fro", metrics.eps_fro),
        ],
    ))
}

/// First order: `2(ε_j + √2 sr^½ ε_F) κ`, requiring `‖ΔA‖₂‖A†‖₂ < 1`.
pub fn bound_t3_2(stats: &MatrixStats, metrics: &PerturbationMetrics) -> Result<BoundReport> {
    let v = perturbation_times_pinv(stats, metrics);
    require("t3_2", "||dA||_2 ||A^+||_2", v, "< 1", v < 1.0)?;
    let k = stats.kappa2;
    let global = std::f64::consts::SQRT_2 * stats.stable_rank.sqrt() * metrics.eps_fro;
    let bound = metrics
        .eps_row
        .iter()
        .map(|e| e.map(|e| 2.0 * (e + global) * k))
        .collect();
    Ok(BoundReport::new(
        Theorem::T3_2,
        bound,
        &[
            ("kappa2", k),
            ("stable_rank", stats.stable_rank),
            ("eps_fro", metrics.eps_fro),
        ],
    ))
}

/// First order, projected: `4(ε⊥_j + √2 sr^½ ε⊥_F) κ`, requiring
/// `‖ΔA‖₂‖A†‖₂ ≤ ½`.
pub fn bound_t3_3(stats: &MatrixStats, metrics: &PerturbationMetrics) -> Result<BoundReport> {
    require_half("t3_3", stats, metrics)?;
    let k = stats.kappa2;
    let global = std::f64::consts::SQRT_2 * stats.stable_rank.sqrt() * metrics.eps_fro_perp;
    let bound = metrics
        .eps_row_perp
        .iter()
        .map(|e| e.map(|e| 4.0 * (e + global) * k))
        .collect();
    Ok(BoundReport::new(
        Theorem::T3_3,
        bound,
        &[
            ("kappa2", k),
            ("stable_rank", stats.stable_rank),
            ("eps_fro_perp", metrics.eps_fro_perp),
        ],
    ))
}

/// First order, component-wise row scaling: `2(η_j + √2 n η)` with
/// `η = max_j η_j`, requiring `η κ₂(A) < 1`. The value does not depend on κ.
pub fn bound_t3_4(eta: &[f64], n: usize, kappa2: f64) -> Result<BoundReport> {
    if let Some(e) = eta.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "eta entries must be nonnegative, got {e}"
        )));
    }
    let eta_max = eta.iter().copied().fold(0.0, f64::max);
    let v = eta_max * kappa2;
    require("t3_4", "eta * kappa2", v, "< 1", v < 1.0)?;
    let global = std::f64::consts::SQRT_2 * n as f64 * eta_max;
    let bound = eta.iter().map(|e| Some(2.0 * (e + global))).collect();
    Ok(BoundReport::new(
        Theorem::T3_4,
        bound,
        &[("eta", eta_max), ("n", n as f64)],
    ))
}

/// `ṘR⁻¹` along the path `A + tΔA/ε_F` at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdotRinv {
    pub matrix: Matrix,
    pub fro_norm: f64,
    /// `√2 · sr(A)^½ · κ₂(A)`, the a-priori bound on `fro_norm`.
    pub bound: f64,
}

struct Factored {
    q: Matrix,
    r_inv: Matrix,
    kappa2: f64,
    stable_rank: f64,
}

fn factor(a: &Matrix) -> Result<Factored> {
    let qr = householder_qr(a)?;
    let sigma = singular_values(&qr.r)?;
    check_full_rank(a.rows(), &sigma)?;
    let two = sigma[0];
    Ok(Factored {
        r_inv: upper_triangular_inverse(&qr.r)?,
        q: qr.q,
        kappa2: two / sigma[sigma.len() - 1],
        stable_rank: (a.frobenius_norm() / two).powi(2),
    })
}

/// `up(QᵀΔA R⁻¹ + (QᵀΔA R⁻¹)ᵀ)`, which equals `ε_F ṘR⁻¹`.
fn scaled_rdot_rinv(f: &Factored, delta: &Matrix) -> Result<Matrix> {
    let x = &f.q.tr_mul(delta) * &f.r_inv;
    up(&(&x + &x.transpose()))
}

/// `ṘR⁻¹ = (1/ε_F) up(QᵀΔA R⁻¹ + (QᵀΔA R⁻¹)ᵀ)` with `Q, R` the Householder
/// factors of `A` and `ε_F = ‖ΔA‖_F/‖A‖_F`.
pub fn rdot_rinv(a: &Matrix, delta: &Matrix) -> Result<RdotRinv> {
    if a.shape() != delta.shape() {
        return Err(Error::Dimension(format!(
            "A is {:?} but the perturbation is {:?}",
            a.shape(),
            delta.shape()
        )));
    }
    let eps_f = delta.frobenius_norm() / a.frobenius_norm();
    if eps_f == 0.0 {
        return Err(Error::InvalidArgument(
            "rdot_rinv needs a nonzero perturbation".into(),
        ));
    }
    let f = factor(a)?;
    let matrix = scaled_rdot_rinv(&f, delta)?.scaled(1.0 / eps_f);
    Ok(RdotRinv {
        fro_norm: matrix.frobenius_norm(),
        bound: std::f64::consts::SQRT_2 * f.stable_rank.sqrt() * f.kappa2,
        matrix,
    })
}

/// First-order change of the Q factor, `ΔA R⁻¹ − ε_F Q ṘR⁻¹`; requires
/// `‖ΔA‖₂ ‖A†‖₂ < 1`.
pub fn delta_q_first_order(a: &Matrix, delta: &Matrix) -> Result<Matrix> {
    if a.shape() != delta.shape() {
        return Err(Error::Dimension(format!(
            "A is {:?} but the perturbation is {:?}",
            a.shape(),
            delta.shape()
        )));
    }
    let f = factor(a)?;
    let v = two_norm(delta)? * two_norm(&f.r_inv)?;
    require("first-order dQ", "||dA||_2 ||A^+||_2", v, "< 1", v < 1.0)?;
    let correction = &f.q * &scaled_rdot_rinv(&f, delta)?;
    Ok(&(delta * &f.r_inv) - &correction)
}

/// `Q(A + ΔA) − Q(A)` with the columns of the perturbed factor sign-aligned
/// to the diagonal of `QᵀQ̃`.
pub fn delta_q_exact(a: &Matrix, delta: &Matrix) -> Result<Matrix> {
    let q = householder_qr(a)?.q;
    let mut qt = householder_qr(&(a + delta))?.q;
    let overlap = q.tr_mul(&qt);
    for k in 0..qt.cols() {
        if overlap[(k, k)] < 0.0 {
            qt.col_mut(k).iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(&qt - &q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gaussian_matrix, RngState};

    fn lev(v: &[f64], n: usize) -> LeverageScores {
        LeverageScores {
            values: v.to_vec(),
            n,
        }
    }

    fn angles(c1: f64, sn: f64) -> PrincipalAngles {
        PrincipalAngles {
            cosines: vec![c1, (1.0 - sn * sn).sqrt()],
            sines: vec![(1.0 - c1 * c1).sqrt(), sn],
        }
    }

    fn stats(kappa2: f64, stable_rank: f64) -> MatrixStats {
        MatrixStats {
            kappa2,
            stable_rank,
            two_norm: 1.0,
            frobenius_norm: stable_rank.sqrt(),
            sigma_min: 1.0 / kappa2,
        }
    }

    fn metrics(m: usize, eps: f64, eps_f: f64, row: f64) -> PerturbationMetrics {
        PerturbationMetrics {
            eps_two: eps,
            eps_fro: eps_f,
            eps_two_perp: eps,
            eps_fro_perp: eps_f,
            eps_row: vec![Some(row); m],
            eps_row_perp: vec![Some(row); m],
        }
    }

    #[test]
    fn t1_zero_angle_gives_zero() {
        let r = bound_t1(&lev(&[0.3, 0.7, 0.5, 0.5], 2), &angles(1.0, 0.0));
        assert!(r.absolute.bound.iter().all(|b| *b == Some(0.0)));
    }

    #[test]
    fn t1_endpoint_scores() {
        let s: f64 = 1e-3;
        let r = bound_t1(&lev(&[0.0, 1.0, 0.0], 1), &angles(1.0, s));
        for b in &r.absolute.bound {
            assert!((b.unwrap() - s * s).abs() < 1e-20);
        }
    }

    #[test]
    fn t1_sandwich_only_when_m_is_2n() {
        let a = angles(0.9, 0.5);
        assert!(bound_t1(&lev(&[0.5, 0.5, 0.5, 0.5], 2), &a)
            .sandwich
            .is_some());
        assert!(bound_t1(&lev(&[0.5, 0.5, 0.5, 0.5, 0.0], 2), &a)
            .sandwich
            .is_none());
    }

    #[test]
    fn t1_sandwich_pins_orthogonal_complement() {
        // cos θ₁ = 0, sin θₙ = 1: both sides collapse to 1 − ℓ.
        let l = [0.1, 0.9, 0.25, 0.75];
        let r = bound_t1(&lev(&l, 2), &angles(0.0, 1.0));
        let sw = r.sandwich.unwrap();
        for (j, lj) in l.iter().enumerate() {
            assert!((sw.bound[j].unwrap() - (1.0 - lj)).abs() < 1e-15);
            assert!((sw.lower.as_ref().unwrap()[j].unwrap() - (1.0 - lj)).abs() < 1e-15);
        }
    }

    #[test]
    fn c1_substitutions() {
        let s: f64 = 1e-4;
        let r = bound_c1(&lev(&[1.0], 1), &angles(1.0, s));
        assert!((r.bound[0].unwrap() - s * s).abs() < 1e-24);

        let r = bound_c1(&lev(&[1e-10, 0.0], 1), &angles(1.0, 1e-8));
        let expected = 2.0 * ((1.0 - 1e-10_f64) / 1e-10).sqrt() * 1e-8 + 1e-16 / 1e-10;
        assert!((r.bound[0].unwrap() - expected).abs() < 1e-15);
        assert!((r.bound[0].unwrap() - 2.001e-3).abs() < 1e-7);
        assert_eq!(r.bound[1], None);
    }

    #[test]
    fn t2_substitutions() {
        let st = stats(1.0, 1.0);
        let mut me = metrics(2, 1e-8, 1e-8, 0.0);
        let (_, general) = bound_t2(&lev(&[1.0, 0.0], 1), &st, &me).unwrap();
        assert!((general.bound[0].unwrap() - 1e-16).abs() < 1e-30);
        assert_eq!(general.bound[1], None);

        me.eps_two_perp = 0.0;
        let (perp, _) = bound_t2(&lev(&[0.2, 0.8], 1), &st, &me).unwrap();
        assert!(perp.bound.iter().all(|b| *b == Some(0.0)));
    }

    #[test]
    fn t2_hypothesis_guard() {
        let me = metrics(1, 0.6, 0.6, 0.0);
        match bound_t2(&lev(&[0.5], 1), &stats(1.0, 1.0), &me) {
            Err(Error::Hypothesis { theorem, .. }) => assert_eq!(theorem, "t2"),
            other => panic!("unexpected {other:?}"),
        }
        let me = metrics(1, 1e-6, 1e-6, 0.0);
        assert!(bound_t2(&lev(&[0.5], 1), &stats(1e6, 1.0), &me).is_err());
        assert!(bound_t3_1(&lev(&[0.5], 1), &stats(1e6, 1.0), &me).is_err());
        assert!(bound_t3_3(&stats(1e6, 1.0), &me).is_err());
        assert!(bound_t3_2(&stats(0.9e6, 1.0), &me).is_ok());
        assert!(bound_t3_2(&stats(1e6, 1.0), &me).is_err());
    }

    #[test]
    fn t3_1_substitution() {
        let r = bound_t3_1(
            &lev(&[0.5], 1),
            &stats(1.0, 25.0),
            &metrics(1, 1e-8, 1e-8, 0.0),
        )
        .unwrap();
        let g = 5.0 * 1e-8;
        let expected = 12.0 * (1.0 + 3.0 * g / 0.5) * g;
        assert!((r.bound[0].unwrap() - expected).abs() < 1e-22);
        assert!((r.bound[0].unwrap() - 6.0e-7).abs() < 1e-12);

        let zero = bound_t3_1(
            &lev(&[0.5], 1),
            &stats(3.0, 2.0),
            &metrics(1, 0.0, 0.0, 0.0),
        )
        .unwrap();
        assert_eq!(zero.bound[0], Some(0.0));
    }

    #[test]
    fn t3_2_and_t3_3_substitutions() {
        let st = stats(2.0, 4.0);
        let zero = bound_t3_2(&st, &metrics(3, 0.0, 0.0, 0.0)).unwrap();
        assert!(zero.bound.iter().all(|b| *b == Some(0.0)));

        let mut me = metrics(2, 1e-8, 1e-8, 0.0);
        me.eps_row = vec![Some(0.0), None];
        let r = bound_t3_2(&st, &me).unwrap();
        let global = 2.0 * std::f64::consts::SQRT_2 * 2.0 * 1e-8 * 2.0;
        assert!((r.bound[0].unwrap() - global).abs() < 1e-22);
        assert_eq!(r.bound[1], None);

        // Halving every projected quantity makes the projected bound equal
        // the unprojected one: 4·(x/2) = 2·x.
        let me = PerturbationMetrics {
            eps_two: 1e-8,
            eps_fro: 2e-8,
            eps_two_perp: 0.5e-8,
            eps_fro_perp: 1e-8,
            eps_row: vec![Some(4e-8), Some(6e-9)],
            eps_row_perp: vec![Some(2e-8), Some(3e-9)],
        };
        let a = bound_t3_2(&st, &me).unwrap();
        let b = bound_t3_3(&st, &me).unwrap();
        assert_eq!(a.bound, b.bound);
    }

    #[test]
    fn t3_4_substitution_and_kappa_independence() {
        let eta = vec![1e-8; 4];
        let a = bound_t3_4(&eta, 25, 1.0).unwrap();
        let b = bound_t3_4(&eta, 25, 1e5).unwrap();
        assert_eq!(a.bound, b.bound);
        let expected = 2.0 * (1e-8 + std::f64::consts::SQRT_2 * 25.0 * 1e-8);
        assert!((a.bound[0].unwrap() - expected).abs() < 1e-22);
        assert!((expected - 7.271e-7).abs() < 1e-10);
        assert!(bound_t3_4(&[0.0; 3], 2, 1.0)
            .unwrap()
            .bound
            .iter()
            .all(|b| *b == Some(0.0)));
        assert!(bound_t3_4(&eta, 25, 1e8).is_err());
        assert!(bound_t3_4(&[-1.0], 1, 1.0).is_err());
    }

    #[test]
    fn monotone_in_magnitudes() {
        let l = lev(&[1e-6, 0.3, 0.9], 1);
        let st = stats(10.0, 3.0);
        for (lo, hi) in [(1e-10, 1e-8), (1e-6, 1e-3)] {
            let c_lo = bound_c1(&l, &angles(1.0, lo));
            let c_hi = bound_c1(&l, &angles(1.0, hi));
            let t_lo = bound_t1(&l, &angles(1.0, lo)).absolute;
            let t_hi = bound_t1(&l, &angles(1.0, hi)).absolute;
            let (p_lo, g_lo) = bound_t2(&l, &st, &metrics(3, lo, lo, lo)).unwrap();
            let (p_hi, g_hi) = bound_t2(&l, &st, &metrics(3, hi, hi, hi)).unwrap();
            let s_lo = bound_t3_1(&l, &st, &metrics(3, lo, lo, lo)).unwrap();
            let s_hi = bound_t3_1(&l, &st, &metrics(3, hi, hi, hi)).unwrap();
            let r_lo = bound_t3_2(&st, &metrics(3, lo, lo, lo)).unwrap();
            let r_hi = bound_t3_2(&st, &metrics(3, hi, hi, hi)).unwrap();
            let q_lo = bound_t3_3(&st, &metrics(3, lo, lo, lo)).unwrap();
            let q_hi = bound_t3_3(&st, &metrics(3, hi, hi, hi)).unwrap();
            let e_lo = bound_t3_4(&[lo; 3], 1, 1.0).unwrap();
            let e_hi = bound_t3_4(&[hi; 3], 1, 1.0).unwrap();
            for (a, b) in [
                (c_lo, c_hi),
                (t_lo, t_hi),
                (p_lo, p_hi),
                (g_lo, g_hi),
                (s_lo, s_hi),
                (r_lo, r_hi),
                (q_lo, q_hi),
                (e_lo, e_hi),
            ] {
                for (x, y) in a.bound.iter().zip(&b.bound) {
                    assert!(x.unwrap() <= y.unwrap(), "{}: {x:?} > {y:?}", a.theorem);
                }
            }
        }
    }

    #[test]
    fn compare_and_verdict_exact() {
        let r = bound_c1(&lev(&[0.5, 0.5, 0.0], 1), &angles(1.0, 1e-3));
        let b = r.bound[0].unwrap();
        let ok = r
            .clone()
            .compare(vec![Some(b * 1.0005), Some(0.0), Some(1.0)])
            .unwrap();
        assert_eq!(ok.holds, vec![Some(true), Some(true), None]);
        assert!(ok.verdict().passed);
        let bad = r.compare(vec![Some(b * 1.01), Some(0.0), None]).unwrap();
        let v = bad.verdict();
        assert!(!v.passed);
        assert_eq!(v.violations, 1);
        assert!((v.worst_ratio - 1.01).abs() < 1e-12);
    }

    #[test]
    fn verdict_first_order_policy() {
        let eta = vec![1e-8; 200];
        let r = bound_t3_4(&eta, 1, 1.0).unwrap();
        let b = r.bound[0].unwrap();
        let mut obs = vec![Some(0.5 * b); 200];
        obs[0] = Some(2.0 * b);
        obs[1] = Some(9.0 * b);
        let v = r.clone().compare(obs.clone()).unwrap().verdict();
        assert_eq!(v.violations, 2);
        assert!(v.passed);
        obs[2] = Some(1.5 * b);
        assert!(!r.clone().compare(obs.clone()).unwrap().verdict().passed);
        obs[2] = Some(0.5 * b);
        obs[1] = Some(11.0 * b);
        let v = r.compare(obs).unwrap().verdict();
        assert_eq!(v.beyond_cap, 1);
        assert!(!v.passed);
    }

    #[test]
    fn sandwich_compare() {
        let r = bound_t1(&lev(&[0.25, 0.75], 1), &angles(0.0, 1.0))
            .sandwich
            .unwrap();
        let ok = r.clone().compare(vec![Some(0.75), Some(0.25)]).unwrap();
        assert!(ok.verdict().passed);
        let bad = r.compare(vec![Some(0.7), Some(0.25)]).unwrap();
        assert!(!bad.verdict().passed);
    }

    #[test]
    fn theorem_tags_roundtrip() {
        for t in Theorem::ALL {
            assert_eq!(t.tag().parse::<Theorem>().unwrap(), t);
            assert_eq!(
                serde_json::to_string(&t).unwrap(),
                format!("\"{}\"", t.tag())
            );
        }
        assert!("T3_4".parse::<Theorem>().is_ok());
        assert!("t9".parse::<Theorem>().is_err());
    }

    #[test]
    fn rdot_rinv_identity_direction() {
        let mut rng = RngState::new(3);
        let a = gaussian_matrix(12, 3, &mut rng);
        let r = rdot_rinv(&a, &a).unwrap();
        assert!((&r.matrix - &Matrix::identity(3)).max_abs() < 1e-13);
        assert!(r.fro_norm <= r.bound);
        assert!(rdot_rinv(&a, &Matrix::zeros(12, 3)).is_err());
    }

    #[test]
    fn rdot_rinv_symmetric_part() {
        let mut rng = RngState::new(4);
        let a = gaussian_matrix(15, 4, &mut rng);
        let d = gaussian_matrix(15, 4, &mut rng).scaled(1e-3);
        let r = rdot_rinv(&a, &d).unwrap();
        assert_eq!(r.matrix[(2, 1)], 0.0);

        let qr = householder_qr(&a).unwrap();
        let x = &qr.q.tr_mul(&d) * &upper_triangular_inverse(&qr.r).unwrap();
        let eps_f = d.frobenius_norm() / a.frobenius_norm();
        let sym = (&x + &x.transpose()).scaled(1.0 / eps_f);
        let rebuilt = &r.matrix + &r.matrix.transpose();
        assert!((&rebuilt - &sym).max_abs() <= 1e-13 * sym.max_abs());
    }

    #[test]
    fn first_order_dq_zero_and_row_chain() {
        let mut rng = RngState::new(6);
        let a = gaussian_matrix(30, 4, &mut rng);
        assert!(delta_q_first_order(&a, &Matrix::zeros(30, 4))
            .unwrap()
            .is_zero());

        let d = gaussian_matrix(30, 4, &mut rng).scaled(1e-6);
        let pred = delta_q_first_order(&a, &d).unwrap();
        let st = crate::leverage::matrix_stats(&a).unwrap();
        let me = crate::perturb::measure(&a, &d).unwrap();
        let l = crate::leverage::leverage_qr(&a).unwrap();
        let global = std::f64::consts::SQRT_2 * st.stable_rank.sqrt() * me.eps_fro;
        for (j, row_norm) in pred.row_norms().iter().enumerate() {
            let rhs = l[j].sqrt() * (me.eps_row[j].unwrap() + global) * st.kappa2;
            assert!(
                *row_norm <= rhs * (1.0 + 1e-10),
                "row {j}: {row_norm} > {rhs}"
            );
        }
        let big = gaussian_matrix(30, 4, &mut rng).scaled(100.0);
        assert!(matches!(
            delta_q_first_order(&a, &big),
            Err(Error::Hypothesis { .. })
        ));
    }
}
