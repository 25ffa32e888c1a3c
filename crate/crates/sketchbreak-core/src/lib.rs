//! Adaptive reconstruction attacks against linear sketches for ℓ2-norm
//! estimation, with applications to ℓp estimation and sparse recovery.
//!
//! The core loop learns the row space of an unknown sketching matrix from
//! binary accept/reject answers alone, then produces a failure certificate:
//! a subspace and variance at which the sketch's decision rule is provably
//! miscalibrated. Supporting modules provide the χ² advantage machinery,
//! subspace linear algebra, the conditional Gaussian samplers, reference
//! oracle implementations, and campaign orchestration.

pub mod apps;
pub mod attack;
pub mod chi2;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod oracle;
pub mod rng;

pub use apps::{
    attack_lp, attack_sparse_recovery, build_recovery_gapnorm, expected_recovery_branch,
    recovery_attack_config, tail_norm, LpViolation, LpViolationSide, RecoveryGapNorm,
    RecoveryViolation, ViolationRecord,
};
pub use attack::{
    boost_direction, check_certificate_condition, edge_gain, estimate_label_rate,
    extract_strong_certificate, run_attack, trace_query_count, verify_certificate, AttackConfig,
    AttackOutcome, CertificateBranch, FailureCertificate, RoundMetrics,
};
pub use chi2::{
    check_h_soundness_inequality, delta_advantage, gamma_interval_mass, nu_density,
    weighted_interval_integrals, ChiSquareParams, HSoundnessReport, QuadratureSpec, TabulatedH,
};
pub use dist::{
    sample_complement, sample_complement_batch, sample_gaussian, sample_subspace_gaussian,
    tv_bound_complements, tv_bound_shifted, ComplementGaussianSpec,
};
pub use error::{Result, SketchError};
pub use experiment::{
    chi2_table, run_campaign, validate_lemmas, validate_lemmas_with_fault_check, write_chi2_csv,
    write_jsonl, write_summary_csv, CampaignResult, CheckResult, ExperimentConfig, Scenario,
    Summary, TrialRecord,
};
pub use linalg::{
    extend_orthonormal, orthogonal_complement, project, subspace_distance, top_singular_vector,
    SampleMatrix, Subspace,
};
pub use oracle::{
    amplify_majority, lp_norm, make_countsketch_recovery_oracle, make_gapnorm_oracle,
    make_lp_oracle, wrap_randomized, BinaryOracle, ConstantOracle, FullSpaceOracle, GapNormOracle,
    LpOracle, MajorityOracle, ProcessOracle, RandomizedOracle, SparseRecoveryOracle,
};
pub use rng::SeedTree;
