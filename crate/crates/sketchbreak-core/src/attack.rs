//! The round-by-round reconstruction attack: σ² grid sweep, empirical
//! label-rate estimation, certificate detection and verification, correlation
//! boosting via the top singular vector of the positively labeled samples,
//! and a ladder-refinement step that sharpens each boosted direction with an
//! extra non-adaptive batch of scale queries. Also the strong-certificate
//! path through the q-fold majority direct product.

use crate::dist::{sample_complement_batch, ComplementGaussianSpec};
use crate::error::{Result, SketchError};
use crate::linalg::{
    extend_orthonormal, top_eigenpair_symmetric, top_eigenvectors, top_singular_vector,
    SampleMatrix, Subspace,
};
use crate::oracle::BinaryOracle;
use crate::rng::SeedTree;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// 99% two-sided normal quantile, used for binomial confidence intervals in
/// certificate verification.
pub const Z_99: f64 = 2.5758293035489004;

/// Configuration of one attack run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Gap factor B of the GapNorm promise.
    pub b: f64,
    /// Ambient dimension n.
    pub n: usize,
    /// Assumed bound r on the sketch dimension; the attack runs r+1 rounds by
    /// default.
    pub r_bound: usize,
    /// Samples per (round, σ²) cell.
    pub m: usize,
    /// Grid spacing and certificate tolerance ε: the sweep runs over
    /// S = [3/4, B] ∩ εℤ and certificates fire at rate ≤ 1−ε (high branch)
    /// or ≥ ε (low branch).
    pub epsilon: f64,
    /// Relative acceptance gain: a boosted direction is accepted when its
    /// objective exceeds the sample-covariance edge level
    /// (σ²+1/4)(1+√(n/m′))² by `delta_gain`·(σ²+1/4).
    pub delta_gain: f64,
    /// Minimum m′/m for the boosting step to engage.
    pub min_positive_fraction: f64,
    /// Maximum positive rate for the boosting step: cells answering mostly
    /// positive carry (almost) no conditioning signal and are skipped.
    pub max_positive_rate: f64,
    /// Override for the low-branch firing rate. The grid and high branch keep
    /// using ε, but deciders promised to be correct with high probability
    /// (rather than up to an ε error) are already refuted by a much smaller
    /// positive rate at σ² ≤ 2, so reductions may set this below ε.
    pub low_rate_threshold: Option<f64>,
    /// Round budget (default r_bound + 1).
    pub max_rounds: usize,
    pub seed: u64,
    /// Dimension of the refinement eigenspace; 0 disables ladder refinement
    /// (pure top-singular-vector boosting).
    pub refine_dim: usize,
    /// Cap on the number of grid cells; above it the grid keeps every σ² ≤ 2
    /// and log-subsamples the rest.
    pub max_grid: usize,
    /// Fresh samples drawn to verify a certificate candidate.
    pub verify_samples: usize,
    /// When set, each accepted direction's true row-space alignment is
    /// recorded in the trace via the oracle's diagnostics interface.
    pub diagnostics: bool,
}

impl AttackConfig {
    pub fn new(n: usize, r_bound: usize, b: f64) -> Self {
        AttackConfig {
            b,
            n,
            r_bound,
            m: 4000,
            epsilon: 0.5,
            delta_gain: 0.25,
            min_positive_fraction: 0.0625,
            max_positive_rate: 1.0,
            low_rate_threshold: None,
            max_rounds: r_bound + 1,
            seed: 0,
            refine_dim: 10,
            max_grid: 64,
            verify_samples: 2000,
            diagnostics: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 8.0 {
            return Err(SketchError::Config("B must be ≥ 8".into()));
        }
        if self.m < 100 {
            return Err(SketchError::Config("m must be ≥ 100".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SketchError::Config("epsilon must lie in (0,1)".into()));
        }
        if !(self.delta_gain > 0.0) {
            return Err(SketchError::Config("delta_gain must be > 0".into()));
        }
        if !(self.max_positive_rate > 0.0 && self.max_positive_rate <= 1.0) {
            return Err(SketchError::Config(
                "max_positive_rate must lie in (0,1]".into(),
            ));
        }
        if let Some(t) = self.low_rate_threshold {
            if !(t > 0.0 && t <= self.epsilon) {
                return Err(SketchError::Config(
                    "low_rate_threshold must lie in (0, epsilon]".into(),
                ));
            }
        }
        Ok(())
    }

    /// The σ² grid S = [3/4, B] ∩ εℤ, capped at `max_grid` cells by keeping
    /// all cells ≤ 2 (the low-certificate window) and log-subsampling the
    /// rest.
    pub fn sigma_grid(&self) -> Vec<f64> {
        let eps = self.epsilon;
        let kmin = (0.75 / eps - 1e-9).ceil() as i64;
        let kmax = (self.b / eps + 1e-9).floor() as i64;
        let full: Vec<f64> = (kmin..=kmax).map(|k| k as f64 * eps).collect();
        if full.len() <= self.max_grid {
            return full;
        }
        let low: Vec<f64> = full.iter().cloned().filter(|&s| s <= 2.0).collect();
        let hi: Vec<f64> = full.iter().cloned().filter(|&s| s > 2.0).collect();
        let want = self.max_grid - low.len();
        let mut picks: Vec<usize> = (0..want)
            .map(|i| {
                let frac = i as f64 / (want.max(2) - 1) as f64;
                ((hi.len() as f64).powf(frac) - 1.0).round() as usize
            })
            .collect();
        picks.dedup();
        let mut grid = low;
        for p in picks {
            grid.push(hi[p.min(hi.len() - 1)]);
        }
        grid.dedup();
        grid
    }
}

/// Which side of the promise the certificate contradicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateBranch {
    /// σ² ∈ [B/2, 50B] but the oracle rejects too often.
    HighNormRejected,
    /// σ² ≤ 2 but the oracle accepts too often.
    LowNormAccepted,
}

/// A failure certificate (V, σ²): the oracle's answer rate on G(V^⊥, σ²)
/// contradicts correctness on the stated branch.
#[derive(Debug, Clone)]
pub struct FailureCertificate {
    pub subspace_v: Subspace,
    pub sigma_sq: f64,
    pub branch: CertificateBranch,
    pub strong: bool,
    pub empirical_rate: f64,
    pub verify_samples: usize,
}

impl FailureCertificate {
    pub fn check_invariants(&self, b: f64) -> Result<()> {
        match self.branch {
            CertificateBranch::HighNormRejected => {
                if !(self.sigma_sq >= b / 2.0 && self.sigma_sq <= 50.0 * b) {
                    return Err(SketchError::Precondition(format!(
                        "high-branch σ² = {} outside [B/2, 50B]",
                        self.sigma_sq
                    )));
                }
            }
            CertificateBranch::LowNormAccepted => {
                if self.sigma_sq > 2.0 {
                    return Err(SketchError::Precondition(format!(
                        "low-branch σ² = {} exceeds 2",
                        self.sigma_sq
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One trace record per (round, σ²) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub t: usize,
    pub sigma_sq: f64,
    pub rate: f64,
    pub m_prime: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proj_onto_a: Option<f64>,
}

/// Outcome of a run: a verified certificate or exhaustion of the round
/// budget.
#[derive(Debug)]
pub enum AttackOutcome {
    Certificate(FailureCertificate),
    Exhausted,
}

impl AttackOutcome {
    pub fn certificate(&self) -> Option<&FailureCertificate> {
        match self {
            AttackOutcome::Certificate(c) => Some(c),
            AttackOutcome::Exhausted => None,
        }
    }
}

/// Queries the oracle on m fresh samples of G(V^⊥, σ²); returns the positive
/// rate and the positively labeled rows.
pub fn estimate_label_rate(
    oracle: &dyn BinaryOracle,
    spec: &ComplementGaussianSpec,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, SampleMatrix)> {
    if m == 0 {
        return Err(SketchError::Precondition("m must be ≥ 1".into()));
    }
    let xs = sample_complement_batch(spec, m, rng);
    let answers = oracle.query_batch(&xs);
    let mp = answers.iter().filter(|&&a| a).count();
    let mut pos = DMatrix::zeros(mp, spec.ambient_dim());
    let mut row = 0;
    for (i, &a) in answers.iter().enumerate() {
        if a {
            pos.set_row(row, &xs.row(i));
            row += 1;
        }
    }
    Ok((mp as f64 / m as f64, SampleMatrix::new(pos)))
}

/// The certificate firing condition on an observed rate.
pub fn check_certificate_condition(
    rate: f64,
    sigma_sq: f64,
    b: f64,
    epsilon: f64,
) -> Option<CertificateBranch> {
    if sigma_sq >= b / 2.0 && rate <= 1.0 - epsilon {
        Some(CertificateBranch::HighNormRejected)
    } else if sigma_sq <= 2.0 && rate >= epsilon {
        Some(CertificateBranch::LowNormAccepted)
    } else {
        None
    }
}

/// Top-singular-vector boosting: accepts the direction iff its objective
/// clears (σ² + 1/4) + delta_gain (delta_gain in absolute objective units).
/// The second slot carries the measured objective whenever the power
/// iteration converged, even for rejected directions, so a sweep can log it.
pub fn boost_direction(
    positives: &SampleMatrix,
    sigma_sq: f64,
    delta_gain: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Option<DVector<f64>>, Option<f64>)> {
    if positives.nrows() == 0 {
        return Err(SketchError::Precondition(
            "positives must be nonempty".into(),
        ));
    }
    // Near-tied leading eigenvalues stall the power iteration: a spectrum so
    // flat that thousands of iterations cannot separate it carries no
    // dominating direction worth boosting, so non-convergence means "none"
    // rather than an error.
    let (v, objective) = match top_singular_vector(positives, 1e-7, 4000, rng) {
        Ok(x) => x,
        Err(SketchError::NoConvergence { .. }) => return Ok((None, None)),
        Err(e) => return Err(e),
    };
    if objective >= sigma_sq + 0.25 + delta_gain {
        Ok((Some(v), Some(objective)))
    } else {
        Ok((None, Some(objective)))
    }
}

/// The absolute acceptance gain used by the sweep: the distance from σ²+1/4
/// to the sample-covariance edge level (σ²+1/4)(1+√(n/m′))² plus the
/// configured relative margin.
pub fn edge_gain(sigma_sq: f64, n: usize, m_prime: usize, delta_gain: f64) -> f64 {
    let v0 = sigma_sq + 0.25;
    let edge = (1.0 + (n as f64 / m_prime as f64).sqrt()).powi(2);
    v0 * (edge - 1.0) + delta_gain * v0
}

/// Draws fresh G(V^⊥, σ²) samples, measures the oracle's positive rate, and
/// decides whether the certificate's branch condition holds with a 99%
/// binomial confidence margin.
pub fn verify_certificate(
    cert: &FailureCertificate,
    oracle: &dyn BinaryOracle,
    samples: usize,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, bool)> {
    if samples < 100 {
        return Err(SketchError::Precondition("samples must be ≥ 100".into()));
    }
    let spec = ComplementGaussianSpec::new(cert.subspace_v.clone(), cert.sigma_sq)?;
    let xs = sample_complement_batch(&spec, samples, rng);
    let answers = oracle.query_batch(&xs);
    let rate = answers.iter().filter(|&&a| a).count() as f64 / samples as f64;
    let ci = Z_99 * ((rate * (1.0 - rate) / samples as f64) + 1e-12).sqrt();
    // Strong certificates assert constant error (≤ 2/3 / ≥ 1/3); weak ones
    // use the ε thresholds of the firing condition.
    let (hi_thr, lo_thr) = if cert.strong {
        (2.0 / 3.0, 1.0 / 3.0)
    } else {
        (1.0 - epsilon, epsilon)
    };
    let violated = match cert.branch {
        CertificateBranch::HighNormRejected => rate + ci <= hi_thr,
        CertificateBranch::LowNormAccepted => rate - ci >= lo_thr,
    };
    Ok((rate, violated))
}

/// Robust readout of a monotone 0→1 answer pattern over an ascending scale
/// ladder: returns the index of the crossing that minimizes step-function
/// disagreement, or `len` when the pattern never turns on.
fn fit_crossing(answers: &[bool]) -> usize {
    let l = answers.len();
    let mut ones_left = vec![0usize; l + 1];
    for i in 0..l {
        ones_left[i + 1] = ones_left[i] + answers[i] as usize;
    }
    let total_ones = ones_left[l];
    let mut best_err = usize::MAX;
    let mut best_j = l;
    for j in 0..=l {
        // answers before j should be 0, answers from j on should be 1
        let err = ones_left[j] + (l - j) - (total_ones - ones_left[j]);
        if err < best_err {
            best_err = err;
            best_j = j;
        }
    }
    best_j
}

struct LadderSettings {
    wide_cells: usize,
    narrow_cells: usize,
    rho_lo: f64,
    rho_hi: f64,
}

const LADDER: LadderSettings = LadderSettings {
    wide_cells: 96,
    narrow_cells: 384,
    rho_lo: 0.12,
    rho_hi: 1.35,
};

/// Ladder refinement of an accepted direction. Measures the quadratic form
/// c ↦ answers of the oracle on c·u over scale ladders, self-calibrated on
/// the raw boosted direction, and returns the top eigenvector of the
/// estimated k×k form on the top-k eigenspace of the positives. All queries
/// in this step form non-adaptive batches.
#[allow(clippy::too_many_arguments)]
fn refine_direction(
    oracle: &dyn BinaryOracle,
    positives: &SampleMatrix,
    v_subspace: &Subspace,
    v_star: &DVector<f64>,
    k: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Option<DVector<f64>> {
    // Top-k eigenvectors of the positives, orthonormalized against V.
    let eigvecs = top_eigenvectors(positives, k);
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for mut u in eigvecs {
        if v_subspace.dim() > 0 {
            let pv = crate::linalg::project(&u, v_subspace).ok()?;
            u -= pv;
        }
        for b in &ortho {
            let cval = b.dot(&u);
            u -= b * cval;
        }
        let norm = u.norm();
        if norm > 1e-8 {
            ortho.push(u / norm);
        }
    }
    if ortho.len() < 2 {
        return None;
    }
    let k = ortho.len();

    // Stage 1: wide self-calibration ladder on the raw direction. The
    // crossing scale c̄ defines the measurement unit (the oracle's effective
    // threshold in units where the raw direction has sketch mass 1).
    let lo = (n as f64 / 8.0).sqrt();
    let hi = (64.0 * n as f64).sqrt();
    let wide: Vec<f64> = (0..LADDER.wide_cells)
        .map(|i| lo * (hi / lo).powf(i as f64 / (LADDER.wide_cells - 1) as f64))
        .collect();
    let mut xs = DMatrix::zeros(wide.len(), n);
    for (i, &c) in wide.iter().enumerate() {
        xs.set_row(i, &(v_star * c).transpose());
    }
    let answers = oracle.query_batch(&xs);
    let bj = fit_crossing(&answers);
    if bj >= wide.len() {
        return None; // direction never triggers in range: skip refinement
    }
    let cbar = if bj == 0 {
        wide[0]
    } else {
        (wide[bj] * wide[bj - 1]).sqrt()
    };
    let t_hat = cbar * cbar;

    // Stage 2: narrow ladders over relative sketch mass ρ ∈ [rho_lo, rho_hi]
    // for the k basis directions and all pairwise mixtures (u_i+u_j)/√2.
    let rhos: Vec<f64> = (0..LADDER.narrow_cells)
        .map(|i| {
            LADDER.rho_hi
                * (LADDER.rho_lo / LADDER.rho_hi).powf(i as f64 / (LADDER.narrow_cells - 1) as f64)
        })
        .collect();
    let scales: Vec<f64> = rhos.iter().map(|r| (t_hat / r).sqrt()).collect();
    let mut dirs: Vec<DVector<f64>> = ortho.clone();
    for i in 0..k {
        for j in (i + 1)..k {
            dirs.push((&ortho[i] + &ortho[j]) / std::f64::consts::SQRT_2);
        }
    }
    let l = scales.len();
    let mut batch = DMatrix::zeros(dirs.len() * l, n);
    for (di, d) in dirs.iter().enumerate() {
        for (si, &c) in scales.iter().enumerate() {
            batch.set_row(di * l + si, &(d * c).transpose());
        }
    }
    let answers = oracle.query_batch(&batch);
    let mut est = Vec::with_capacity(dirs.len());
    for di in 0..dirs.len() {
        let row = &answers[di * l..(di + 1) * l];
        let bj = fit_crossing(row);
        if bj >= l {
            est.push(LADDER.rho_lo);
        } else {
            let c = if bj == 0 {
                scales[0]
            } else {
                (scales[bj] * scales[bj - 1]).sqrt()
            };
            est.push((t_hat / (c * c)).min(LADDER.rho_hi));
        }
    }

    // Assemble the k×k quadratic form and take its top eigenvector.
    let mut q = DMatrix::zeros(k, k);
    for i in 0..k {
        q[(i, i)] = est[i];
    }
    let mut idx = k;
    for i in 0..k {
        for j in (i + 1)..k {
            let val = est[idx] - 0.5 * est[i] - 0.5 * est[j];
            q[(i, j)] = val;
            q[(j, i)] = val;
            idx += 1;
        }
    }
    let (_, w) = top_eigenpair_symmetric(&q);
    let mut u = DVector::zeros(n);
    for (i, b) in ortho.iter().enumerate() {
        u += b * w[i];
    }
    let norm = u.norm();
    if norm < 1e-8 {
        return None;
    }
    let _ = rng; // rng reserved for future randomized readouts
    Some(u / norm)
}

/// Runs the reconstruction attack. Every returned certificate has already
/// passed `verify_certificate` at `cfg.verify_samples` samples.
pub fn run_attack(
    oracle: &dyn BinaryOracle,
    cfg: &AttackConfig,
) -> Result<(AttackOutcome, Vec<RoundMetrics>)> {
    cfg.validate()?;
    if oracle.ambient_dim() != cfg.n {
        return Err(SketchError::DimensionMismatch {
            expected: cfg.n,
            got: oracle.ambient_dim(),
        });
    }
    let seeds = SeedTree::new(cfg.seed);
    let mut sample_rng = seeds.stream(1);
    let mut verify_rng = seeds.stream(2);
    let mut power_rng = seeds.stream(3);
    let grid = cfg.sigma_grid();
    let rowspace = if cfg.diagnostics {
        oracle.reveal_rowspace()
    } else {
        None
    };

    let mut v = Subspace::zero(cfg.n);
    let mut trace: Vec<RoundMetrics> = Vec::new();

    for t in 1..=cfg.max_rounds {
        oracle.observe_subspace(&v)?;
        let mut accepted_this_round = false;
        for &sigma_sq in &grid {
            let spec = ComplementGaussianSpec::new(v.clone(), sigma_sq)?;
            let (rate, positives) = estimate_label_rate(oracle, &spec, cfg.m, &mut sample_rng)?;
            let mut record = RoundMetrics {
                t,
                sigma_sq,
                rate,
                m_prime: positives.nrows(),
                objective: None,
                accepted: false,
                proj_onto_a: None,
            };

            // Certificate check precedes boosting within each σ². The low
            // branch may fire at a reduced rate threshold when configured.
            let low_eps = cfg.low_rate_threshold.unwrap_or(cfg.epsilon);
            let fired =
                check_certificate_condition(rate, sigma_sq, cfg.b, cfg.epsilon).or_else(|| {
                    check_certificate_condition(rate, sigma_sq, cfg.b, low_eps)
                        .filter(|&b| b == CertificateBranch::LowNormAccepted)
                });
            if let Some(branch) = fired {
                let cert = FailureCertificate {
                    subspace_v: v.clone(),
                    sigma_sq,
                    branch,
                    strong: false,
                    empirical_rate: rate,
                    verify_samples: cfg.verify_samples,
                };
                let verify_eps = match branch {
                    CertificateBranch::LowNormAccepted => low_eps,
                    CertificateBranch::HighNormRejected => cfg.epsilon,
                };
                let (vrate, violated) = verify_certificate(
                    &cert,
                    oracle,
                    cfg.verify_samples,
                    verify_eps,
                    &mut verify_rng,
                )?;
                trace.push(record);
                if violated {
                    let cert = FailureCertificate {
                        empirical_rate: vrate,
                        ..cert
                    };
                    return Ok((AttackOutcome::Certificate(cert), trace));
                }
                continue;
            }

            let mp = positives.nrows();
            // Conditioning carries signal only when both labels occur: a cell
            // answering (almost) all-positive has positives distributed like
            // the unconditioned family, and its near-flat spectrum only
            // stalls the power iteration.
            if accepted_this_round
                || (mp as f64) < cfg.min_positive_fraction * cfg.m as f64
                || rate > cfg.max_positive_rate
                || v.dim() >= cfg.n
            {
                trace.push(record);
                continue;
            }

            let gain = edge_gain(sigma_sq, cfg.n, mp, cfg.delta_gain);
            let (boosted, objective) = boost_direction(&positives, sigma_sq, gain, &mut power_rng)?;
            record.objective = objective;
            let v_star = match boosted {
                Some(x) => x,
                None => {
                    trace.push(record);
                    continue;
                }
            };

            // Gram-Schmidt the raw direction against V; skip degenerate ones
            // and continue the sweep ("if no such v was found").
            let raw_resid = {
                let pv = crate::linalg::project(&v_star, &v)?;
                let r = &v_star - pv;
                let norm = r.norm();
                if norm <= 1e-8 {
                    trace.push(record);
                    continue;
                }
                r / norm
            };

            let k = cfg.refine_dim.min(cfg.n - v.dim());
            let direction = if cfg.refine_dim > 0 && k >= 2 {
                refine_direction(oracle, &positives, &v, &raw_resid, k, cfg.n, &mut power_rng)
                    .unwrap_or(raw_resid)
            } else {
                raw_resid
            };

            match extend_orthonormal(&v, &direction) {
                Ok(next) => {
                    v = next;
                    record.accepted = true;
                    accepted_this_round = true;
                    if let Some(space) = &rowspace {
                        let proj = crate::linalg::project(&direction, space)?;
                        record.proj_onto_a = Some(proj.norm_squared());
                    }
                }
                Err(SketchError::DegenerateDirection { .. }) => {}
                Err(e) => return Err(e),
            }
            trace.push(record);
        }
    }
    Ok((AttackOutcome::Exhausted, trace))
}

/// Restricts a product certificate on ℝ^{qn} to a uniformly random block,
/// producing an n-dimensional strong-certificate candidate: the block
/// restriction of V is re-orthonormalized by SVD and inherits σ² and the
/// branch.
pub fn extract_strong_certificate(
    product_cert: &FailureCertificate,
    q: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(FailureCertificate, usize)> {
    if product_cert.subspace_v.ambient_dim() != q * n {
        return Err(SketchError::Precondition(format!(
            "certificate lives in dimension {}, expected q·n = {}",
            product_cert.subspace_v.ambient_dim(),
            q * n
        )));
    }
    let block = crate::rng::uniform_below(rng, q as u64) as usize;
    let big = product_cert.subspace_v.basis();
    let t = big.nrows();
    let restriction = big.view((0, block * n), (t, n)).into_owned();
    // Orthonormalize the block restriction (rows may be small or dependent).
    let vi = Subspace::from_rows(&restriction)?;
    let cert = FailureCertificate {
        subspace_v: vi,
        sigma_sq: product_cert.sigma_sq,
        branch: product_cert.branch,
        strong: true,
        empirical_rate: f64::NAN,
        verify_samples: 0,
    };
    Ok((cert, block))
}

/// Sum of the per-round query batches recorded in a trace, assuming the
/// configured m per cell (used by the exact-accounting property test).
pub fn trace_query_count(trace: &[RoundMetrics], m: usize) -> u64 {
    trace.len() as u64 * m as u64
}
