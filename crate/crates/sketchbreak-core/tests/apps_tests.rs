//! Application-reduction tests: tail norms, the ℓp bracket attack, and the
//! sparse-recovery probe decider gates.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchbreak_core::{
    attack_lp, build_recovery_gapnorm, expected_recovery_branch, lp_norm,
    make_countsketch_recovery_oracle, make_lp_oracle, tail_norm, AttackConfig, BinaryOracle,
    CertificateBranch, LpViolationSide, Subspace, ViolationRecord,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn tail_norm_drops_largest_magnitudes() {
    let x = DVector::from_vec(vec![3.0, -5.0, 1.0, 4.0]);
    assert!((tail_norm(&x, 0).unwrap() - x.norm()).abs() < 1e-12);
    // k=1 removes −5; k=2 removes −5 and 4.
    let t1 = (9.0_f64 + 1.0 + 16.0).sqrt();
    assert!((tail_norm(&x, 1).unwrap() - t1).abs() < 1e-12);
    let t2 = (9.0_f64 + 1.0).sqrt();
    assert!((tail_norm(&x, 2).unwrap() - t2).abs() < 1e-12);
    assert_eq!(tail_norm(&x, 4).unwrap(), 0.0);
    assert!(tail_norm(&x, 5).is_err());
}

#[test]
fn tail_norm_breaks_ties_by_lowest_index() {
    // Two coordinates with equal magnitude: the lower index is the one kept
    // in the "head", so the tail keeps the higher index's value.
    let x = DVector::from_vec(vec![2.0, -2.0, 1.0]);
    let t = tail_norm(&x, 1).unwrap();
    assert!((t - (4.0_f64 + 1.0).sqrt()).abs() < 1e-12);
}

#[test]
fn lp_norm_matches_closed_forms() {
    let x = DVector::from_vec(vec![3.0, -4.0]);
    assert!((lp_norm(&x, 2.0) - 5.0).abs() < 1e-12);
    assert!((lp_norm(&x, 1.0) - 7.0).abs() < 1e-12);
}

#[test]
fn lp_attack_finds_bracket_violation() {
    let n = 64;
    let r = 16;
    let c = 4.0;
    let mut r_oracle = rng(31);
    let oracle = make_lp_oracle(n, r, 2.0, c, &mut r_oracle).unwrap();
    let mut cfg = AttackConfig::new(n, r, 8.0);
    cfg.seed = 31;
    cfg.refine_dim = 0;
    let (violation, trace) = attack_lp(&oracle, c, 2.0, 100_000, &cfg).unwrap();
    let v = violation.expect("the rank-deficient estimator must violate its bracket");
    assert!(!trace.is_empty());
    assert!(v.recheck(&oracle), "violation must recheck independently");
    // The certificate route produces low-norm inputs that the estimator
    // overestimates or high-norm inputs it underestimates; both sides encode
    // lhs > rhs in the violation record.
    let rec = ViolationRecord::from(&v);
    assert!(rec.lhs > rec.rhs);
    match v.side {
        LpViolationSide::UnderEstimate => assert!(v.z_value < lp_norm(&v.x, 2.0)),
        LpViolationSide::OverEstimate => assert!(v.z_value > c * lp_norm(&v.x, 2.0)),
    }
}

#[test]
fn recovery_gapnorm_initial_state_and_markov_gate() {
    let n = 256;
    let mut r = rng(33);
    let cs = make_countsketch_recovery_oracle(n, 24, 1, 2.0, &mut r).unwrap();
    let f = build_recovery_gapnorm(&cs, 2.0, 2.0, 8, rng(34)).unwrap();
    // With V = 0 every coordinate is probe-eligible before the clean
    // restriction, and the eligible set is nonempty.
    assert_eq!(f.s_size(), n);
    assert!(f.eligible() > 0);
    assert!(f.eligible() <= cs.clean_coords().len());
    // Honest behavior at tiny inputs: recovery keeps spiked probes large, so
    // f answers 0.
    let xs = DMatrix::zeros(16, n);
    let answers = f.query_batch(&xs);
    assert!(answers.iter().all(|&a| !a));
    assert_eq!(f.queries_used(), 16);
}

#[test]
fn recovery_gapnorm_rejects_dense_subspaces() {
    let n = 256;
    let mut r = rng(35);
    let cs = make_countsketch_recovery_oracle(n, 24, 1, 2.0, &mut r).unwrap();
    // κ = 1 < C gives a strict eligibility cutoff √(1 − κ²/C²) > 0.
    let f = build_recovery_gapnorm(&cs, 2.0, 1.0, 8, rng(36)).unwrap();
    // A subspace containing most standard basis vectors wipes out the
    // eligible set: the Markov-count gate must fail loudly.
    let k = n - n / 4;
    let rows = DMatrix::from_fn(k, n, |i, j| if i == j { 1.0 } else { 0.0 });
    let v = Subspace::from_rows(&rows).unwrap();
    assert!(f.observe_subspace(&v).is_err());
}

#[test]
fn recovery_probe_failures_empty_on_honest_inputs() {
    let n = 256;
    let mut r = rng(37);
    let cs = make_countsketch_recovery_oracle(n, 24, 1, 2.0, &mut r).unwrap();
    let f = build_recovery_gapnorm(&cs, 2.0, 2.0, 8, rng(38)).unwrap();
    let x = DVector::zeros(n);
    assert!(f.probe_failures(&x).is_empty());
}

#[test]
fn recovery_branch_expectation() {
    assert_eq!(
        expected_recovery_branch(),
        CertificateBranch::LowNormAccepted
    );
}

/// Samples `m` fresh vectors from G({0}^⊥, σ²), keeps those whose squared norm
/// lands in [lo, hi], and returns (kept, f = 0 count among kept).
fn zero_rate_in_window(
    f: &sketchbreak_core::RecoveryGapNorm<'_>,
    n: usize,
    sigma_sq: f64,
    lo: f64,
    hi: f64,
    m: usize,
    seed: u64,
) -> (usize, usize) {
    use sketchbreak_core::{sample_complement_batch, ComplementGaussianSpec};
    let spec = ComplementGaussianSpec::new(Subspace::zero(n), sigma_sq).unwrap();
    let mut srng = rng(seed);
    let xs = sample_complement_batch(&spec, m, &mut srng);
    let answers = f.query_batch(&xs);
    let mut kept = 0;
    let mut zeros = 0;
    for (row, &ans) in answers.iter().enumerate() {
        let sq = xs.row(row).norm_squared();
        if sq < lo || sq > hi {
            continue;
        }
        kept += 1;
        if !ans {
            zeros += 1;
        }
    }
    (kept, zeros)
}

#[test]
fn recovery_case1_low_norm_answers_zero() {
    // Case 1 gate: on fresh x with ‖x‖² < 4n the constructed f answers 0
    // with frequency ≥ 0.99 against the honest count-sketch oracle.
    let n = 256;
    let mut r = rng(41);
    let cs = make_countsketch_recovery_oracle(n, 24, 1, 4.0, &mut r).unwrap();
    let f = build_recovery_gapnorm(&cs, 4.0, 0.1, 32, rng(42)).unwrap();
    // σ² = 2 puts ‖x‖² ≈ n(σ² + 1/4) = 576 well below 4n = 1024.
    let (kept, zeros) = zero_rate_in_window(&f, n, 2.0, 0.0, 4.0 * n as f64, 400, 43);
    assert!(kept >= 350, "window should capture most draws, got {kept}");
    let freq = zeros as f64 / kept as f64;
    assert!(freq >= 0.99, "Case-1 zero frequency {freq} below 0.99");
}

#[test]
fn recovery_case2_high_norm_answers_one() {
    // Case 2 gate: on fresh x with Bn/4 ≤ ‖x‖² ≤ 100Bn (B = γ²n, γ = 2,
    // sampled at σ² = B where the high branch of a certificate operates),
    // f answers 0 with frequency < 0.2.
    let n = 256;
    let b = 4.0 * n as f64;
    let mut r = rng(44);
    let cs = make_countsketch_recovery_oracle(n, 24, 1, 4.0, &mut r).unwrap();
    let f = build_recovery_gapnorm(&cs, 4.0, 0.1, 32, rng(45)).unwrap();
    let n_f = n as f64;
    let (kept, zeros) = zero_rate_in_window(&f, n, b, b * n_f / 4.0, 100.0 * b * n_f, 400, 46);
    assert!(kept >= 350, "window should capture most draws, got {kept}");
    let freq = zeros as f64 / kept as f64;
    assert!(freq < 0.2, "Case-2 zero frequency {freq} not below 0.2");
}
