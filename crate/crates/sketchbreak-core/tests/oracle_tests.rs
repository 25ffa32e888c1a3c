//! Oracle implementation tests: GapNorm promise behavior, query counting,
//! negative-control oracles, randomized wrapping, majority amplification,
//! the ℓp oracle calibration bracket, count-sketch recovery, and the
//! external-process protocol.

use nalgebra::{DMatrix, DVector};
use sketchbreak_core::dist::{sample_complement_batch, ComplementGaussianSpec};
use sketchbreak_core::linalg::Subspace;
use sketchbreak_core::oracle::{
    amplify_majority, make_countsketch_recovery_oracle, make_gapnorm_oracle, make_lp_oracle,
    wrap_randomized, BinaryOracle, ConstantOracle, FullSpaceOracle, ProcessOracle,
};
use sketchbreak_core::rng::SeedTree;

fn gapnorm_rate(oracle: &dyn BinaryOracle, sigma_sq: f64, m: usize, seed: u64) -> f64 {
    let spec = ComplementGaussianSpec::new(Subspace::zero(oracle.ambient_dim()), sigma_sq).unwrap();
    let mut rng = SeedTree::new(seed).stream(0);
    let batch = sample_complement_batch(&spec, m, &mut rng);
    let answers = oracle.query_batch(&batch);
    answers.iter().filter(|&&a| a).count() as f64 / m as f64
}

#[test]
fn gapnorm_oracle_separates_low_and_high_variance() {
    let mut rng = SeedTree::new(1).stream(0);
    let oracle = make_gapnorm_oracle(64, 16, 8.0, &mut rng, None).unwrap();
    // on fresh (subspace-free) inputs the promise holds with large margin
    let low = gapnorm_rate(&oracle, 1.0, 2000, 10);
    let high = gapnorm_rate(&oracle, 6.0, 2000, 11);
    assert!(low < 0.15, "accept rate at sigma_sq=1: {low}");
    assert!(high > 0.85, "accept rate at sigma_sq=6: {high}");
}

#[test]
fn gapnorm_query_counter_counts_batches() {
    let mut rng = SeedTree::new(2).stream(0);
    let oracle = make_gapnorm_oracle(32, 8, 8.0, &mut rng, None).unwrap();
    assert_eq!(oracle.queries_used(), 0);
    let x = DVector::from_element(32, 0.1);
    oracle.query(&x);
    let batch = DMatrix::zeros(5, 32);
    oracle.query_batch(&batch);
    assert_eq!(oracle.queries_used(), 6);
}

#[test]
#[should_panic]
fn gapnorm_dimension_mismatch_panics() {
    let mut rng = SeedTree::new(3).stream(0);
    let oracle = make_gapnorm_oracle(16, 4, 8.0, &mut rng, None).unwrap();
    let x = DVector::from_element(8, 1.0);
    oracle.query(&x);
}

#[test]
fn gapnorm_calibration_gate_fails_loudly_when_infeasible() {
    // at rank 16 the promise error cannot reach 1e-3; the constructor must
    // return a calibration error rather than silently passing
    let mut rng = SeedTree::new(4).stream(0);
    assert!(make_gapnorm_oracle(64, 16, 8.0, &mut rng, Some(1e-3)).is_err());
}

#[test]
fn full_space_oracle_reveals_everything_and_thresholds_truth() {
    let oracle = FullSpaceOracle::new(32, 8.0);
    let revealed = oracle.reveal_rowspace().unwrap();
    assert_eq!(revealed.dim(), 32);
    // small and large vectors are classified by the true norm with no gap
    let small = DVector::from_element(32, 0.01);
    assert!(!oracle.query(&small));
    let large = DVector::from_element(32, 100.0);
    assert!(oracle.query(&large));
}

#[test]
fn constant_oracle_is_constant() {
    for value in [false, true] {
        let oracle = ConstantOracle::new(16, value);
        let batch = DMatrix::from_element(64, 16, 0.5);
        let answers = oracle.query_batch(&batch);
        assert!(answers.iter().all(|&a| a == value));
    }
}

#[test]
fn randomized_wrapper_flips_at_the_configured_rate() {
    let base = ConstantOracle::new(8, true);
    let seeds = SeedTree::new(5);
    let noisy = wrap_randomized(base, 0.1, seeds.stream(0)).unwrap();
    let batch = DMatrix::zeros(20000, 8);
    let answers = noisy.query_batch(&batch);
    let flipped = answers.iter().filter(|&&a| !a).count() as f64 / 20000.0;
    assert!(
        (flipped - 0.1).abs() < 0.01,
        "observed flip rate {flipped}, want 0.1"
    );
    // noise must be below 1/2
    let base = ConstantOracle::new(8, true);
    assert!(wrap_randomized(base, 0.5, seeds.stream(1)).is_err());
}

#[test]
fn majority_amplification_suppresses_noise() {
    // majority over q = 5 independent copies of a 10%-noisy constant oracle
    // answers true with noticeably higher probability than a single copy
    let seeds = SeedTree::new(6);
    let base = ConstantOracle::new(8, true);
    let noisy = wrap_randomized(base, 0.2, seeds.stream(0)).unwrap();
    let maj = amplify_majority(&noisy, 5).unwrap();
    assert_eq!(maj.ambient_dim(), 40);
    let batch = DMatrix::zeros(4000, 40);
    let answers = maj.query_batch(&batch);
    let rate = answers.iter().filter(|&&a| a).count() as f64 / 4000.0;
    // P(majority of 5 at p=0.8) ≈ 0.942
    assert!(rate > 0.92, "amplified accept rate {rate}");
    assert!(amplify_majority(&ConstantOracle::new(8, true), 4).is_err());
}

#[test]
fn lp_oracle_calibration_bracket_holds() {
    let mut rng = SeedTree::new(7).stream(0);
    let c = 4.0;
    let oracle = make_lp_oracle(64, 16, 2.0, c, &mut rng).unwrap();
    // the estimate must bracket the true ℓ2 norm within factor C on Gaussians
    let mut ok = 0;
    let spec = ComplementGaussianSpec::new(Subspace::zero(64), 2.0).unwrap();
    let batch = sample_complement_batch(&spec, 2000, &mut rng);
    let zs = oracle.query_real_batch(&batch);
    for (i, z) in zs.iter().enumerate() {
        let norm = batch.row(i).norm();
        if *z >= norm / c && *z <= c * norm {
            ok += 1;
        }
    }
    assert!(ok >= 1980, "bracket held on {ok}/2000");
}

#[test]
fn countsketch_recovers_sparse_vectors_exactly() {
    let mut rng = SeedTree::new(8).stream(0);
    let oracle = make_countsketch_recovery_oracle(256, 24, 1, 4.0, &mut rng).unwrap();
    // a pure spike on a clean coordinate is recovered exactly
    let i = oracle.clean_coords()[0];
    let mut x = DVector::zeros(256);
    x[i] = 42.0;
    let z = oracle.recover(&x);
    assert!((z[i] - 42.0).abs() < 1e-12);
    assert_eq!(z.iter().filter(|v| **v != 0.0).count(), 1);
}

#[test]
fn countsketch_top_k_tie_breaks_to_lower_index() {
    let mut rng = SeedTree::new(9).stream(0);
    let oracle = make_countsketch_recovery_oracle(256, 24, 1, 4.0, &mut rng).unwrap();
    let clean = oracle.clean_coords();
    let (i, j) = (clean[0].min(clean[1]), clean[0].max(clean[1]));
    let mut x = DVector::zeros(256);
    x[i] = 7.0;
    x[j] = 7.0;
    let z = oracle.recover(&x);
    assert!(z[i] != 0.0, "tie must keep the lower index");
    assert_eq!(z[j], 0.0);
}

#[test]
fn countsketch_row_budget_gate() {
    let mut rng = SeedTree::new(10).stream(0);
    // far fewer rows than 2k·ln(n/k) must be rejected
    assert!(make_countsketch_recovery_oracle(256, 2, 8, 4.0, &mut rng).is_err());
}

#[test]
fn process_oracle_roundtrip() {
    // child: accepts iff the squared norm of the query exceeds 1
    let script = "import sys, json\nfor line in sys.stdin:\n    q = json.loads(line)['query']\n    print(json.dumps({'answer': 1 if sum(v*v for v in q) > 1.0 else 0}))\n    sys.stdout.flush()\n";
    let argv = vec!["python3".to_string(), "-c".to_string(), script.to_string()];
    let oracle = ProcessOracle::spawn(&argv, 3).unwrap();
    let small = DVector::from_vec(vec![0.1, 0.1, 0.1]);
    let large = DVector::from_vec(vec![2.0, 0.0, 0.0]);
    assert!(!oracle.query(&small));
    assert!(oracle.query(&large));
    assert_eq!(oracle.queries_used(), 2);
}
