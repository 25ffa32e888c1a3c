//! Seeded Gaussian samplers: plain sphericals, the subspace-Gaussian family,
//! the noisy-orthogonal-complement family G(V^⊥, σ²), and total-variation
//! bounds/estimates used to validate the statistical-distance lemmas.

use crate::error::{Result, SketchError};
use crate::linalg::{project, project_rows_onto_complement, subspace_distance, Subspace};
use crate::rng::normal;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

/// Default variance of the additive noise term g₂.
pub const DEFAULT_NOISE_VAR: f64 = 0.25;

/// Specification of the noisy-orthogonal-complement distribution
/// G(V^⊥, σ²): samples are P_{V^⊥} g₁ + g₂ with g₁ ∼ N(0, σ²)ⁿ and
/// g₂ ∼ N(0, noise_var)ⁿ independent.
#[derive(Debug, Clone)]
pub struct ComplementGaussianSpec {
    pub subspace_v: Subspace,
    pub sigma_sq: f64,
    pub noise_var: f64,
}

impl ComplementGaussianSpec {
    pub fn new(subspace_v: Subspace, sigma_sq: f64) -> Result<Self> {
        Self::with_noise_var(subspace_v, sigma_sq, DEFAULT_NOISE_VAR)
    }

    pub fn with_noise_var(subspace_v: Subspace, sigma_sq: f64, noise_var: f64) -> Result<Self> {
        if sigma_sq < 0.0 {
            return Err(SketchError::Domain("sigma_sq must be ≥ 0".into()));
        }
        if !(noise_var > 0.0) {
            return Err(SketchError::Domain("noise_var must be > 0".into()));
        }
        Ok(ComplementGaussianSpec {
            subspace_v,
            sigma_sq,
            noise_var,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.subspace_v.ambient_dim()
    }
}

/// One i.i.d. N(0, var)ⁿ vector; var = 0 yields the zero vector.
pub fn sample_gaussian(n: usize, var: f64, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
    if var < 0.0 {
        return Err(SketchError::Domain("variance must be ≥ 0".into()));
    }
    if var == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let sd = var.sqrt();
    Ok(DVector::from_fn(n, |_, _| sd * normal(rng)))
}

/// One sample of G(V^⊥, σ²).
pub fn sample_complement(spec: &ComplementGaussianSpec, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let n = spec.ambient_dim();
    let mut g1 = if spec.sigma_sq > 0.0 {
        let sd = spec.sigma_sq.sqrt();
        DVector::from_fn(n, |_, _| sd * normal(rng))
    } else {
        DVector::zeros(n)
    };
    if spec.subspace_v.dim() > 0 && spec.sigma_sq > 0.0 {
        let pv = project(&g1, &spec.subspace_v).expect("dims match");
        g1 -= pv;
    }
    let sd2 = spec.noise_var.sqrt();
    for i in 0..n {
        g1[i] += sd2 * normal(rng);
    }
    g1
}

/// `m` samples of G(V^⊥, σ²) as rows of an m×n matrix (batch form used by the
/// attack's sweep).
pub fn sample_complement_batch(
    spec: &ComplementGaussianSpec,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let n = spec.ambient_dim();
    let sd1 = spec.sigma_sq.sqrt();
    let mut g1 = DMatrix::from_fn(m, n, |_, _| sd1 * normal(rng));
    project_rows_onto_complement(&mut g1, &spec.subspace_v);
    let sd2 = spec.noise_var.sqrt();
    for v in g1.iter_mut() {
        *v += sd2 * normal(rng);
    }
    g1
}

/// A sample g_τ of the subspace-Gaussian family for the designated subspace
/// `u` (dimension d): E ‖P_U g_τ‖² = τ, with a τ-independent component in
/// U^⊥.
///
/// When τ/d > noise_var the sample is drawn from G(V^⊥, τ/d − noise_var) with
/// V = `spec_v`; otherwise the U component is a plain N(0, τ/d) Gaussian and
/// the U^⊥ component is the fixed N(0, noise_var) noise.
pub fn sample_subspace_gaussian(
    u: &Subspace,
    tau: f64,
    spec_v: &Subspace,
    rng: &mut ChaCha8Rng,
) -> Result<DVector<f64>> {
    if !(tau > 0.0) {
        return Err(SketchError::Domain("tau must be > 0".into()));
    }
    let d = u.dim();
    if d == 0 {
        return Err(SketchError::Domain("designated subspace is trivial".into()));
    }
    let n = u.ambient_dim();
    let per_coord = tau / d as f64;
    if per_coord > DEFAULT_NOISE_VAR {
        let spec = ComplementGaussianSpec::new(spec_v.clone(), per_coord - DEFAULT_NOISE_VAR)?;
        Ok(sample_complement(&spec, rng))
    } else {
        let g1 = sample_gaussian(n, per_coord, rng)?;
        let g2 = sample_gaussian(n, DEFAULT_NOISE_VAR, rng)?;
        let p1 = project(&g1, u)?;
        let p2 = project(&g2, u)?;
        Ok(p1 + (g2 - p2))
    }
}

/// Total-variation bound between two equal-covariance Gaussians whose means
/// differ by a vector of norm `v_norm`: min(1, ‖v‖/σ).
pub fn tv_bound_shifted(v_norm: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(SketchError::Domain("sigma must be > 0".into()));
    }
    if v_norm < 0.0 {
        return Err(SketchError::Domain("v_norm must be ≥ 0".into()));
    }
    Ok((v_norm / sigma).min(1.0))
}

/// Analytic bound on TV(G(V^⊥,σ²), G(W^⊥,σ²)) for σ² ∈ (0, B]:
/// 20 √(Bn log(Bn)) · d(V,W) + (Bn)^{−5}.
pub fn tv_bound_complements(
    v: &Subspace,
    w: &Subspace,
    sigma_sq: f64,
    b: f64,
    n: usize,
) -> Result<f64> {
    if !(sigma_sq > 0.0 && sigma_sq <= b) {
        return Err(SketchError::Domain(format!(
            "sigma_sq must lie in (0, B]; got {sigma_sq} with B = {b}"
        )));
    }
    let dist = subspace_distance(v, w)?;
    let bn = b * n as f64;
    Ok(20.0 * (bn * bn.ln()).sqrt() * dist + bn.powi(-5))
}

/// Exact TV distance between N(μ₁, σ²I) and N(μ₂, σ²I) with ‖μ₁−μ₂‖ = delta:
/// 2Φ(δ/2σ) − 1.
pub fn gaussian_shift_tv(delta: f64, sigma: f64) -> f64 {
    let z = delta / (2.0 * sigma);
    // Φ(z) − Φ(−z) = erf(z/√2)
    statrs::function::erf::erf(z / std::f64::consts::SQRT_2)
}

/// Coupling-based empirical estimate of TV(G(V^⊥,σ²), G(W^⊥,σ²)):
/// the two samples share g₁; conditioned on g₁ they are Gaussians with means
/// P_{V^⊥}g₁ and P_{W^⊥}g₁ and covariance noise_var·I, whose conditional TV
/// is exactly 2Φ(‖(P_V−P_W)g₁‖ / 2σ₂) − 1. Averaging over g₁ draws gives an
/// unbiased estimate of the coupled-disagreement rate.
pub fn estimate_tv_coupled(
    v: &Subspace,
    w: &Subspace,
    sigma_sq: f64,
    noise_var: f64,
    couples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if v.ambient_dim() != w.ambient_dim() {
        return Err(SketchError::DimensionMismatch {
            expected: v.ambient_dim(),
            got: w.ambient_dim(),
        });
    }
    let n = v.ambient_dim();
    let sigma2 = noise_var.sqrt();
    let mut acc = 0.0;
    for _ in 0..couples {
        let g1 = sample_gaussian(n, sigma_sq, rng)?;
        let pv = project(&g1, v)?;
        let pw = project(&g1, w)?;
        let delta = (pv - pw).norm();
        acc += gaussian_shift_tv(delta, sigma2);
    }
    Ok(acc / couples as f64)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> (f64, f64) {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len(), b.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / na as f64;
        let fb = j as f64 / nb as f64;
        d = d.max((fa - fb).abs());
    }
    let ne = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    // Kolmogorov survival function Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}
    let mut p = 0.0;
    for k in 1..101 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
    }
    (d, p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    #[test]
    fn ks_same_distribution_high_p() {
        let t = SeedTree::new(5);
        let mut rng = t.stream(0);
        let mut a: Vec<f64> = (0..2000).map(|_| normal(&mut rng)).collect();
        let mut b: Vec<f64> = (0..2000).map(|_| normal(&mut rng)).collect();
        let (_, p) = ks_two_sample(&mut a, &mut b);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn ks_shifted_distribution_low_p() {
        let t = SeedTree::new(5);
        let mut rng = t.stream(0);
        let mut a: Vec<f64> = (0..2000).map(|_| normal(&mut rng)).collect();
        let mut b: Vec<f64> = (0..2000).map(|_| normal(&mut rng) + 0.5).collect();
        let (_, p) = ks_two_sample(&mut a, &mut b);
        assert!(p < 1e-6, "p = {p}");
    }
}
