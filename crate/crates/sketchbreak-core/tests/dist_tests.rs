//! Conditional Gaussian sampler tests: moment checks for the complement
//! distribution, the designated-subspace sampler, and the TV-distance bounds
//! against Monte Carlo estimates.

use nalgebra::DMatrix;
use sketchbreak_core::dist::{
    estimate_tv_coupled, gaussian_shift_tv, sample_complement, sample_complement_batch,
    sample_gaussian, sample_subspace_gaussian, tv_bound_complements, tv_bound_shifted,
    ComplementGaussianSpec,
};
use sketchbreak_core::linalg::{project, Subspace};
use sketchbreak_core::rng::{normal, SeedTree};

fn random_subspace(n: usize, t: usize, seed: u64) -> Subspace {
    let mut rng = SeedTree::new(seed).stream(0);
    let rows = DMatrix::from_fn(t, n, |_, _| normal(&mut rng));
    Subspace::from_rows(&rows).unwrap()
}

#[test]
fn sample_gaussian_moments() {
    let mut rng = SeedTree::new(1).stream(0);
    let n = 50;
    let m = 4000;
    let var = 3.0;
    let mut sum_sq = 0.0;
    for _ in 0..m {
        let x = sample_gaussian(n, var, &mut rng).unwrap();
        sum_sq += x.norm_squared();
    }
    let per_coord = sum_sq / (m * n) as f64;
    assert!(
        (per_coord - var).abs() < 0.1,
        "per-coordinate second moment {per_coord}, want {var}"
    );
    let zeros = sample_gaussian(n, 0.0, &mut rng).unwrap();
    assert_eq!(zeros.norm(), 0.0);
}

#[test]
fn complement_samples_have_projected_signal_and_full_noise() {
    // G(V^⊥, σ²): signal component lives in V^⊥ with per-coordinate variance
    // σ², plus isotropic N(0, 1/4) noise everywhere.
    let n = 24;
    let v = random_subspace(n, 6, 2);
    let sigma_sq = 4.0;
    let spec = ComplementGaussianSpec::new(v.clone(), sigma_sq).unwrap();
    let mut rng = SeedTree::new(3).stream(0);
    let m = 6000;
    let mut on_v = 0.0;
    let mut off_v = 0.0;
    for _ in 0..m {
        let x = sample_complement(&spec, &mut rng);
        let pv = project(&x, &v).unwrap();
        on_v += pv.norm_squared();
        off_v += (&x - &pv).norm_squared();
    }
    // on V only the 1/4-variance noise remains: expect dim(V)·1/4 per sample
    let on_per_dim = on_v / (m * v.dim()) as f64;
    assert!(
        (on_per_dim - 0.25).abs() < 0.03,
        "on-V second moment per dim {on_per_dim}, want 0.25"
    );
    // off V: σ² + 1/4 per dimension
    let off_per_dim = off_v / (m * (n - v.dim())) as f64;
    assert!(
        (off_per_dim - (sigma_sq + 0.25)).abs() < 0.2,
        "off-V second moment per dim {off_per_dim}, want {}",
        sigma_sq + 0.25
    );
}

#[test]
fn batch_sampler_matches_single_sampler_distribution() {
    let n = 16;
    let v = random_subspace(n, 4, 4);
    let spec = ComplementGaussianSpec::new(v, 2.0).unwrap();
    let mut rng = SeedTree::new(5).stream(0);
    let batch = sample_complement_batch(&spec, 3000, &mut rng);
    assert_eq!(batch.nrows(), 3000);
    assert_eq!(batch.ncols(), n);
    let mean_sq = batch.iter().map(|x| x * x).sum::<f64>() / (3000 * n) as f64;
    // average per-coordinate variance: (σ²·(n−t) + n/4)/n
    let want = (2.0 * 12.0 + 16.0 * 0.25) / 16.0;
    assert!(
        (mean_sq - want).abs() < 0.1,
        "batch second moment {mean_sq}, want {want}"
    );
}

#[test]
fn subspace_gaussian_total_mass_matches_tau() {
    // The designated-subspace sampler produces E‖P_U x‖² ≈ τ·dim(U)/d when
    // scaled per the sampler contract.
    let n = 32;
    let d = 8;
    let u = random_subspace(n, d, 6);
    let v = Subspace::zero(n);
    let mut rng = SeedTree::new(7).stream(0);
    for tau in [d as f64, 4.0 * d as f64] {
        let m = 4000;
        let mut mass = 0.0;
        for _ in 0..m {
            let x = sample_subspace_gaussian(&u, tau, &v, &mut rng).unwrap();
            mass += project(&x, &u).unwrap().norm_squared();
        }
        let per = mass / m as f64;
        assert!(
            (per - tau).abs() < 0.1 * tau,
            "tau={tau}: designated mass {per}"
        );
    }
}

#[test]
fn tv_bound_shifted_formula() {
    assert!((tv_bound_shifted(5.0, 10.0).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(tv_bound_shifted(5.0, 1.0).unwrap(), 1.0); // clamped at 1
    assert!(tv_bound_shifted(5.0, 0.0).is_err());
}

#[test]
fn gaussian_shift_tv_matches_closed_form() {
    // TV(N(0,σ²), N(δ,σ²)) = erf(δ / (2σ√2))
    let tv = gaussian_shift_tv(1.0, 1.0);
    assert!((tv - 0.38292492254802624).abs() < 1e-10, "tv = {tv}");
    assert!(gaussian_shift_tv(0.0, 1.0).abs() < 1e-15);
}

#[test]
fn coupled_tv_estimate_within_analytic_bound() {
    let n = 48;
    let b = 8.0;
    let mut rng = SeedTree::new(8).stream(0);
    for angle in [0.002, 0.01, 0.05] {
        let mut a_rows = DMatrix::zeros(2, n);
        a_rows[(0, 0)] = 1.0;
        a_rows[(1, 2)] = 1.0;
        let va = Subspace::from_orthonormal_rows(a_rows).unwrap();
        let mut b_rows = DMatrix::zeros(2, n);
        b_rows[(0, 0)] = f64::cos(angle);
        b_rows[(0, 1)] = f64::sin(angle);
        b_rows[(1, 2)] = 1.0;
        let vb = Subspace::from_orthonormal_rows(b_rows).unwrap();
        for sigma_sq in [1.0, 4.0] {
            let emp = estimate_tv_coupled(&va, &vb, sigma_sq, 0.25, 2000, &mut rng).unwrap();
            let bound = tv_bound_complements(&va, &vb, sigma_sq, b, n).unwrap();
            assert!(
                emp <= bound,
                "angle={angle} sigma_sq={sigma_sq}: empirical {emp} above bound {bound}"
            );
        }
    }
}

#[test]
fn tv_bound_complements_rejects_out_of_range_sigma() {
    let v = random_subspace(8, 2, 9);
    let w = random_subspace(8, 2, 10);
    assert!(tv_bound_complements(&v, &w, 0.0, 8.0, 8).is_err());
    assert!(tv_bound_complements(&v, &w, 9.0, 8.0, 8).is_err());
}

#[test]
fn identical_subspaces_give_zero_tv() {
    let v = random_subspace(16, 4, 11);
    let mut rng = SeedTree::new(12).stream(0);
    let emp = estimate_tv_coupled(&v, &v.clone(), 2.0, 0.25, 500, &mut rng).unwrap();
    assert!(emp.abs() < 1e-12, "tv between identical subspaces {emp}");
}
