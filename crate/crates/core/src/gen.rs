//! Seeded test-matrix generators.
//!
//! All randomness flows through [`RngState`], a ChaCha8 counter-based
//! stream seeded from a 64-bit integer. Normal deviates use `rand_distr`'s
//! ziggurat `StandardNormal`; both are portable, so a seed reproduces the
//! same matrices on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, Matrix};

/// Row count of the stepped recipe.
pub const STEPPED_ROWS: usize = 1000;
/// Column count of the stepped recipe.
pub const STEPPED_COLS: usize = 25;
/// Per-block row multipliers of the stepped recipe.
pub const STEPPED_SCALES: [f64; 4] = [1.0, 1e2, 1e3, 1e4];
/// Target condition number of the core of the ill-conditioned recipe.
pub const B_CORE_KAPPA: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream for a labelled sub-task, derived from the seed
    /// only, so sub-streams do not depend on how much of the parent was used.
    pub fn derive(&self, label: u64) -> RngState {
        let mut mix = ChaCha8Rng::seed_from_u64(self.seed);
        mix.set_stream(label.wrapping_add(1));
        RngState::new(mix.random())
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }
}

/// Shape of the singular-value profile of a generated matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvMode {
    /// I.i.d. standard normal entries.
    Gaussian,
    /// `U diag(σ) Vᵀ` with geometrically spaced σ from 1 down to 1/κ.
    Geometric,
}

/// Recipe for a row-block-scaled test matrix:
/// `diag(s₁ I, s₂ I, …) · base`, optionally replaced by its Q factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    pub block_sizes: Vec<usize>,
    pub block_scales: Vec<f64>,
    #[serde(default = "one")]
    pub kappa: f64,
    pub sv_mode: SvMode,
    #[serde(default)]
    pub orthonormalize: bool,
}

fn one() -> f64 {
    1.0
}

impl GenSpec {
    /// 1000×25 Gaussian with rows scaled by 1, 10², 10³, 10⁴ in blocks of
    /// 250, then orthonormalized.
    pub fn stepped() -> Self {
        Self {
            m: STEPPED_ROWS,
            n: STEPPED_COLS,
            block_sizes: vec![STEPPED_ROWS / 4; 4],
            block_scales: STEPPED_SCALES.to_vec(),
            kappa: 1.0,
            sv_mode: SvMode::Gaussian,
            orthonormalize: true,
        }
    }

    /// Same row scaling applied to a geometric-profile matrix with κ = 10⁶.
    pub fn ill_conditioned() -> Self {
        Self {
            m: STEPPED_ROWS,
            n: STEPPED_COLS,
            block_sizes: vec![STEPPED_ROWS / 4; 4],
            block_scales: STEPPED_SCALES.to_vec(),
            kappa: B_CORE_KAPPA,
            sv_mode: SvMode::Geometric,
            orthonormalize: false,
        }
    }

    /// The scaled Gaussian before orthonormalization.
    pub fn stepped_raw() -> Self {
        Self {
            orthonormalize: false,
            ..Self::stepped()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        if self.block_sizes.len() != self.block_scales.len() {
            return Err(Error::InvalidArgument(
                "block_sizes and block_scales differ in length".into(),
            ));
        }
        if self.block_sizes.iter().sum::<usize>() != self.m {
            return Err(Error::InvalidArgument(format!(
                "block sizes sum to {} but m = {}",
                self.block_sizes.iter().sum::<usize>(),
                self.m
            )));
        }
        if self
            .block_scales
            .iter()
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "block scales must be positive".into(),
            ));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be >= 1, got {}",
                self.kappa
            )));
        }
        if self.orthonormalize && self.m < self.n {
            return Err(Error::InvalidArgument(
                "orthonormalization needs m >= n".into(),
            ));
        }
        if self.sv_mode == SvMode::Geometric && self.m < self.n {
            return Err(Error::InvalidArgument(
                "geometric profile needs m >= n".into(),
            ));
        }
        Ok(())
    }

    /// Per-row multipliers.
    pub fn row_scales(&self) -> Vec<f64> {
        self.block_sizes
            .iter()
            .zip(&self.block_scales)
            .flat_map(|(&len, &s)| std::iter::repeat_n(s, len))
            .collect()
    }

    /// Half-open row ranges of the blocks.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.block_sizes
            .iter()
            .map(|&len| {
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    }
}

/// Builds the matrix a [`GenSpec`] describes.
pub fn generate(spec: &GenSpec, rng: &mut RngState) -> Result<Matrix> {
    spec.validate()?;
    let base = match spec.sv_mode {
        SvMode::Gaussian => gaussian_matrix(spec.m, spec.n, rng),
        SvMode::Geometric => gen_randsvd(spec.m, spec.n, spec.kappa, rng)?,
    };
    let scaled = base.scale_rows(&spec.row_scales());
    if spec.orthonormalize {
        Ok(householder_qr(&scaled)?.q)
    } else {
        Ok(scaled)
    }
}

/// I.i.d. standard normal entries, filled column by column.
pub fn gaussian_matrix(m: usize, n: usize, rng: &mut RngState) -> Matrix {
    let data: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
    Matrix::from_col_major(m, n, data).expect("normal deviates are finite")
}

/// Q factor of a Gaussian matrix.
pub fn random_orthonormal(m: usize, n: usize, rng: &mut RngState) -> Result<Matrix> {
    if m < n {
        return Err(Error::Dimension(format!(
            "random_orthonormal needs m >= n, got {m}x{n}"
        )));
    }
    Ok(householder_qr(&gaussian_matrix(m, n, rng))?.q)
}

/// `k` random orthonormal columns orthogonal to the columns of `q`.
///
/// A Gaussian block is projected onto the complement twice (one pass loses
/// orthogonality to rounding when the block has a large component in
/// `range(q)`), then orthonormalized, then projected and orthonormalized
/// once more.
pub fn random_orthonormal_complement(q: &Matrix, k: usize, rng: &mut RngState) -> Result<Matrix> {
    let (m, n) = q.shape();
    if k == 0 || n + k > m {
        return Err(Error::Dimension(format!(
            "cannot fit {k} complement columns next to {n} columns in dimension {m}"
        )));
    }
    let project = |x: &Matrix| {
        let once = x - &(q * &q.tr_mul(x));
        &once - &(q * &q.tr_mul(&once))
    };
    let g = project(&gaussian_matrix(m, k, rng));
    let first = householder_qr(&g)?.q;
    Ok(householder_qr(&project(&first))?.q)
}

/// `U diag(σ) Vᵀ` with random orthonormal `U` (m×n), `V` (n×n) and
/// `σᵢ = κ^(−(i−1)/(n−1))`, the geometric ("mode 3") profile.
pub fn gen_randsvd(m: usize, n: usize, kappa: f64, rng: &mut RngState) -> Result<Matrix> {
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "kappa must be >= 1, got {kappa}"
        )));
    }
    let u = random_orthonormal(m, n, rng)?;
    let v = random_orthonormal(n, n, rng)?;
    let sigma = geometric_profile(n, kappa);
    Ok(&u.scale_cols(&sigma) * &v.transpose())
}

/// Geometrically spaced singular values from 1 down to `1/kappa`.
pub fn geometric_profile(n: usize, kappa: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| kappa.powf(-(i as f64) / (n as f64 - 1.0)))
        .collect()
}

/// Orthonormal 1000×25 matrix whose leverage scores rise in four plateaus.
#[allow(non_snake_case)]
pub fn gen_stepped_A(rng: &mut RngState) -> Result<Matrix> {
    generate(&GenSpec::stepped(), rng)
}

/// Row-scaled version of a κ = 10⁶ geometric matrix, with leverage scores
/// like those of [`gen_stepped_A`].
#[allow(non_snake_case)]
pub fn gen_B(rng: &mut RngState) -> Result<Matrix> {
    generate(&GenSpec::ill_conditioned(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = gaussian_matrix(20, 3, &mut RngState::new(7));
        let b = gaussian_matrix(20, 3, &mut RngState::new(7));
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ_everywhere() {
        let a = gaussian_matrix(100, 10, &mut RngState::new(1));
        let b = gaussian_matrix(100, 10, &mut RngState::new(2));
        let same = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .filter(|(x, y)| x == y)
            .count();
        assert!(same <= 10, "{same} equal entries");
    }

    #[test]
    fn derived_streams_are_stable_and_distinct() {
        let root = RngState::new(42);
        let mut used = root.clone();
        used.normal();
        assert_eq!(root.derive(3).seed(), used.derive(3).seed());
        assert_ne!(root.derive(3).seed(), root.derive(4).seed());
    }

    #[test]
    fn gaussian_moments() {
        for seed in [0, 1, 42] {
            let g = gaussian_matrix(1000, 25, &mut RngState::new(seed));
            let n = g.as_slice().len() as f64;
            let mean = g.as_slice().iter().sum::<f64>() / n;
            let var = g.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() <= 0.02, "mean {mean}");
            assert!((0.95..=1.05).contains(&var), "variance {var}");
        }
    }

    #[test]
    fn uniform_in_range() {
        let mut rng = RngState::new(3);
        for _ in 0..1000 {
            let u = rng.uniform(-1.0, 1.0);
            assert!((-1.0..=1.0).contains(&u));
        }
    }

    #[test]
    fn geometric_profile_ratio() {
        let s = geometric_profile(25, 1e6);
        assert_eq!(s[0], 1.0);
        assert!((s[1] / s[0] - 1e6_f64.powf(-1.0 / 24.0)).abs() < 1e-15);
        assert!((s[24] - 1e-6).abs() < 1e-20);
        assert_eq!(geometric_profile(1, 10.0), vec![1.0]);
    }

    #[test]
    fn spec_validation() {
        let mut s = GenSpec::stepped();
        assert!(s.validate().is_ok());
        s.block_sizes = vec![250, 250, 250];
        s.block_scales = vec![1.0, 1.0, 1.0];
        assert!(s.validate().is_err());
        let mut s = GenSpec::ill_conditioned();
        s.kappa = 0.5;
        assert!(s.validate().is_err());
        let mut s = GenSpec::ill_conditioned();
        s.block_scales[0] = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_json_roundtrip() {
        let s = GenSpec::ill_conditioned();
        let json = serde_json::to_string(&s).unwrap();
        let back: GenSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn block_ranges_partition_rows() {
        let r = GenSpec::stepped().block_ranges();
        assert_eq!(r, vec![0..250, 250..500, 500..750, 750..1000]);
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = RngState::new(11);
        let q = random_orthonormal(30, 5, &mut rng).unwrap();
        let c = random_orthonormal_complement(&q, 5, &mut rng).unwrap();
        assert!(c.gram_residual() < 1e-14);
        assert!(q.tr_mul(&c).max_abs() < 1e-15);
        assert!(random_orthonormal_complement(&q, 26, &mut rng).is_err());
    }
}
