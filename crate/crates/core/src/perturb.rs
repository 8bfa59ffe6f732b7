//! Perturbation generators and the perturbation magnitudes that enter the
//! bounds.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::{gaussian_matrix, generate, random_orthonormal, random_orthonormal_complement};
use crate::gen::{GenSpec, RngState};
use crate::leverage::{check_full_rank, ORTHONORMAL_TOL};
use crate::linalg::{householder_qr, project_complement, singular_values, two_norm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Two,
    Fro,
}

/// How a perturbation is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Rotate an orthonormal basis so every principal angle has the given sine.
    Rotation { target_sin_theta_n: f64 },
    /// Gaussian direction with `‖ΔA‖₂/‖A‖₂ = eps`.
    NormwiseTwo { eps: f64 },
    /// Gaussian direction with `‖ΔA‖_F/‖A‖_F = eps_f`.
    NormwiseFro { eps_f: f64 },
    /// Gaussian direction supported on rows `start..end`.
    RowSubset {
        start: usize,
        end: usize,
        eps_f: f64,
    },
    /// `eps_f · A1/‖A1‖_F` for a fresh draw `A1` of a row-scaled recipe.
    SameRowScaling {
        eps_f: f64,
        #[serde(default)]
        recipe: Option<GenSpec>,
    },
    /// Row `j` is `ζⱼ ηⱼ` times row `j` of `A`, `ζⱼ` uniform on `[−1, 1]`.
    ComponentwiseRows { eta: Vec<f64> },
    /// Mostly inside `range(A)`: `‖ΔA‖₂/‖A‖₂ = eps` with a complement part
    /// of relative size `eps_perp`.
    RangeDominant { eps: f64, eps_perp: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    pub seed: u64,
}

/// A generated perturbation: `perturbed = a + delta`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub perturbed: Matrix,
    pub delta: Matrix,
}

fn check_magnitude(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

impl PerturbationSpec {
    pub fn validate(&self, m: usize) -> Result<()> {
        match &self.kind {
            PerturbationKind::Rotation { target_sin_theta_n } => {
                check_magnitude("target_sin_theta_n", *target_sin_theta_n)
            }
            PerturbationKind::NormwiseTwo { eps } => check_magnitude("eps", *eps),
            PerturbationKind::NormwiseFro { eps_f } => check_magnitude("eps_f", *eps_f),
            PerturbationKind::RowSubset { start, end, eps_f } => {
                if start >= end || *end > m {
                    return Err(Error::InvalidArgument(format!(
                        "row range {start}..{end} is empty or exceeds {m} rows"
                    )));
                }
                check_magnitude("eps_f", *eps_f)
            }
            PerturbationKind::SameRowScaling { eps_f, .. } => check_magnitude("eps_f", *eps_f),
            PerturbationKind::ComponentwiseRows { eta } => {
                if eta.len() != m {
                    return Err(Error::Dimension(format!(
                        "eta has {} entries for {m} rows",
                        eta.len()
                    )));
                }
                eta.iter().try_for_each(|&e| check_magnitude("eta_j", e))
            }
            PerturbationKind::RangeDominant { eps, eps_perp } => {
                check_magnitude("eps", *eps)?;
                check_magnitude("eps_perp", *eps_perp)?;
                if eps_perp > eps {
                    return Err(Error::InvalidArgument(format!(
                        "eps_perp = {eps_perp} exceeds eps = {eps}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Builds the perturbation for `a` from this spec's own seed.
    pub fn apply(&self, a: &Matrix) -> Result<Perturbation> {
        self.validate(a.rows())?;
        let mut rng = RngState::new(self.seed);
        let delta = match &self.kind {
            PerturbationKind::Rotation { target_sin_theta_n } => {
                let perturbed = perturb_rotation(a, *target_sin_theta_n, &mut rng)?;
                let delta = &perturbed - a;
                return Ok(Perturbation { perturbed, delta });
            }
            PerturbationKind::NormwiseTwo { eps } => {
                perturb_normwise(a, *eps, NormKind::Two, &mut rng)?
            }
            PerturbationKind::NormwiseFro { eps_f } => {
                perturb_normwise(a, *eps_f, NormKind::Fro, &mut rng)?
            }
            PerturbationKind::RowSubset { start, end, eps_f } => {
                perturb_row_subset(a, *start..*end, *eps_f, &mut rng)?
            }
            PerturbationKind::SameRowScaling { eps_f, recipe } => {
                let recipe = recipe.clone().unwrap_or_else(GenSpec::stepped_raw);
                if (recipe.m, recipe.n) != a.shape() {
                    return Err(Error::Dimension(format!(
                        "row-scaling recipe is {}x{} but A is {}x{}",
                        recipe.m,
                        recipe.n,
                        a.rows(),
                        a.cols()
                    )));
                }
                let a1 = generate(&recipe, &mut rng)?;
                perturb_same_row_scaling(a, &a1, *eps_f)?
            }
            PerturbationKind::ComponentwiseRows { eta } => {
                perturb_componentwise_rows(a, eta, &mut rng)?
            }
            PerturbationKind::RangeDominant { eps, eps_perp } => {
                perturb_range_dominant(a, *eps, *eps_perp, &mut rng)?
            }
        };
        Ok(Perturbation {
            perturbed: a + &delta,
            delta,
        })
    }
}

/// Rotates `range(q)` so that all n principal angles equal `asin(target_sin)`.
///
/// With `Q⊥` a random orthonormal basis of an n-dimensional subspace of the
/// complement and `W` a random orthogonal n×n matrix, returns
/// `Q̃ = Q cos θ + Q⊥ W sin θ`, which is orthonormal and satisfies
/// `QᵀQ̃ = cos θ · I`.
pub fn perturb_rotation(q: &Matrix, target_sin: f64, rng: &mut RngState) -> Result<Matrix> {
    let (m, n) = q.shape();
    if !(0.0..1.0).contains(&target_sin) {
        return Err(Error::InvalidArgument(format!(
            "target sin(theta_n) must lie in [0, 1), got {target_sin}"
        )));
    }
    if m < 2 * n {
        return Err(Error::InvalidArgument(format!(
            "rotation needs m >= 2n, got {m}x{n}"
        )));
    }
    let residual = q.gram_residual();
    if !(residual <= ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal {
            residual,
            tolerance: ORTHONORMAL_TOL,
        });
    }
    let cos = (1.0 - target_sin * target_sin).sqrt();
    let complement = random_orthonormal_complement(q, n, rng)?;
    let w = random_orthonormal(n, n, rng)?;
    let turned = (&complement * &w).scaled(target_sin);
    Ok(&q.scaled(cos) + &turned)
}

/// `ΔA = eps · ‖A‖ · G/‖G‖` for a Gaussian `G`, in the chosen norm.
pub fn perturb_normwise(
    a: &Matrix,
    eps: f64,
    norm: NormKind,
    rng: &mut RngState,
) -> Result<Matrix> {
    check_magnitude("eps", eps)?;
    let g = gaussian_matrix(a.rows(), a.cols(), rng);
    let measure = |x: &Matrix| -> Result<f64> {
        match norm {
            NormKind::Two => two_norm(x),
            NormKind::Fro => Ok(x.frobenius_norm()),
        }
    };
    Ok(g.scaled(eps * measure(a)? / measure(&g)?))
}

/// Frobenius-normalized Gaussian perturbation supported on `rows`.
pub fn perturb_row_subset(
    a: &Matrix,
    rows: Range<usize>,
    eps_f: f64,
    rng: &mut RngState,
) -> Result<Matrix> {
    check_magnitude("eps_f", eps_f)?;
    if rows.is_empty() || rows.end > a.rows() {
        return Err(Error::InvalidArgument(format!(
            "row range {}..{} is empty or exceeds {} rows",
            rows.start,
            rows.end,
            a.rows()
        )));
    }
    let block = gaussian_matrix(rows.len(), a.cols(), rng);
    let scale = eps_f * a.frobenius_norm() / block.frobenius_norm();
    Ok(Matrix::from_fn(a.rows(), a.cols(), |i, j| {
        if rows.contains(&i) {
            scale * block[(i - rows.start, j)]
        } else {
            0.0
        }
    }))
}

/// `ΔA = eps_f · ‖A‖_F · A1/‖A1‖_F`, so that `‖ΔA‖_F/‖A‖_F = eps_f`.
pub fn perturb_same_row_scaling(a: &Matrix, a1: &Matrix, eps_f: f64) -> Result<Matrix> {
    check_magnitude("eps_f", eps_f)?;
    if a.shape() != a1.shape() {
        return Err(Error::Dimension(format!(
            "A is {:?} but the row-scaling template is {:?}",
            a.shape(),
            a1.shape()
        )));
    }
    let f = a1.frobenius_norm();
    if f == 0.0 {
        return Err(Error::InvalidArgument(
            "row-scaling template must be nonzero".into(),
        ));
    }
    Ok(a1.scaled(eps_f * a.frobenius_norm() / f))
}

/// Row `j` of `ΔA` is `ζⱼ ηⱼ` times row `j` of `A`, one uniform `ζⱼ ∈ [−1, 1]`
/// per row.
pub fn perturb_componentwise_rows(a: &Matrix, eta: &[f64], rng: &mut RngState) -> Result<Matrix> {
    if eta.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "eta has {} entries for {} rows",
            eta.len(),
            a.rows()
        )));
    }
    if let Some(e) = eta.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "eta entries must be nonnegative, got {e}"
        )));
    }
    let factors: Vec<f64> = eta.iter().map(|&e| rng.uniform(-1.0, 1.0) * e).collect();
    Ok(a.scale_rows(&factors))
}

/// `ΔA = c · (eps R̂ + eps_perp Ĉ) ‖A‖₂` with `R̂ = AM/‖AM‖₂` inside
/// `range(A)`, `Ĉ = (I − AA†)G/‖(I − AA†)G‖₂` outside it, and `c ≈ 1` fixing
/// `‖ΔA‖₂ = eps ‖A‖₂` exactly. The measured projected magnitude is
/// `eps_perp` to relative order `(eps_perp/eps)²`.
pub fn perturb_range_dominant(
    a: &Matrix,
    eps: f64,
    eps_perp: f64,
    rng: &mut RngState,
) -> Result<Matrix> {
    check_magnitude("eps", eps)?;
    check_magnitude("eps_perp", eps_perp)?;
    if eps_perp > eps {
        return Err(Error::InvalidArgument(format!(
            "eps_perp = {eps_perp} exceeds eps = {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(Matrix::zeros(a.rows(), a.cols()));
    }
    let qr = householder_qr(a)?;
    check_full_rank(a.rows(), &singular_values(&qr.r)?)?;
    let a_norm = two_norm(a)?;

    let mixing = gaussian_matrix(a.cols(), a.cols(), rng);
    let inside = a * &mixing;
    let inside = inside.scaled(eps / two_norm(&inside)?);
    let outside = project_complement(&qr.q, &gaussian_matrix(a.rows(), a.cols(), rng))?;
    let outside = outside.scaled(eps_perp / two_norm(&outside)?);

    let direction = &inside + &outside;
    Ok(direction.scaled(eps * a_norm / two_norm(&direction)?))
}

/// Every perturbation magnitude used by the bounds.
///
/// Row ratios are `None` where the row of `A` is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationMetrics {
    /// `‖ΔA‖₂/‖A‖₂`
    pub eps_two: f64,
    /// `‖ΔA‖_F/‖A‖_F`
    pub eps_fro: f64,
    /// `‖(I − AA†)ΔA‖₂/‖A‖₂`
    pub eps_two_perp: f64,
    /// `‖(I − AA†)ΔA‖_F/‖A‖_F`
    pub eps_fro_perp: f64,
    /// `‖e_jᵀΔA‖₂/‖e_jᵀA‖₂`
    pub eps_row: Vec<Option<f64>>,
    /// `‖e_jᵀ(I − AA†)ΔA‖₂/‖e_jᵀA‖₂`
    pub eps_row_perp: Vec<Option<f64>>,
}

pub fn measure(a: &Matrix, delta: &Matrix) -> Result<PerturbationMetrics> {
    if a.shape() != delta.shape() {
        return Err(Error::Dimension(format!(
            "A is {}x{} but the perturbation is {}x{}",
            a.rows(),
            a.cols(),
            delta.rows(),
            delta.cols()
        )));
    }
    if a.rows() < a.cols() {
        return Err(Error::Dimension(format!(
            "A must be tall, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    delta.check_finite()?;
    let qr = householder_qr(a)?;
    let sigma = singular_values(&qr.r)?;
    check_full_rank(a.rows(), &sigma)?;
    let a_two = sigma[0];
    let a_fro = a.frobenius_norm();

    let perp = project_complement(&qr.q, delta)?;
    let a_rows = a.row_norms();
    let ratios = |num: Vec<f64>| -> Vec<Option<f64>> {
        num.into_iter()
            .zip(&a_rows)
            .map(|(d, &r)| (r > 0.0).then(|| d / r))
            .collect()
    };

    Ok(PerturbationMetrics {
        eps_two: two_norm(delta)? / a_two,
        eps_fro: delta.frobenius_norm() / a_fro,
        eps_two_perp: two_norm(&perp)? / a_two,
        eps_fro_perp: perp.frobenius_norm() / a_fro,
        eps_row: ratios(delta.row_norms()),
        eps_row_perp: ratios(perp.row_norms()),
    })
}
