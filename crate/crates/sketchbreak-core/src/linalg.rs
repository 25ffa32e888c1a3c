//! Dense subspace arithmetic: orthonormal bases, projections, complements,
//! the projector-operator-norm subspace distance, and top-singular-vector
//! extraction by power iteration (the correlation-boosting primitive).

use crate::error::{Result, SketchError};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

/// An orthonormal basis of a subspace of ℝⁿ. Basis vectors are rows of
/// `basis` (a t×n matrix, t possibly 0).
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
}

/// Pairwise inner products of basis rows must match δ_ij to this tolerance.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Residual norms below this are treated as "direction already inside the
/// subspace".
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

impl Subspace {
    /// The zero subspace {0} ⊆ ℝⁿ.
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::zeros(0, ambient_dim),
        }
    }

    /// The full space ℝⁿ.
    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Builds a subspace from candidate spanning rows, orthonormalizing them
    /// by modified Gram-Schmidt and dropping near-dependent rows.
    pub fn from_rows(rows: &DMatrix<f64>) -> Result<Self> {
        let n = rows.ncols();
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for i in 0..rows.nrows() {
            let mut v: DVector<f64> = rows.row(i).transpose();
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
            // second pass for numerical stability
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
            let norm = v.norm();
            if norm > DEGENERACY_THRESHOLD {
                basis.push(v / norm);
            }
        }
        let t = basis.len();
        let mut m = DMatrix::zeros(t, n);
        for (i, b) in basis.iter().enumerate() {
            m.set_row(i, &b.transpose());
        }
        Ok(Subspace {
            ambient_dim: n,
            basis: m,
        })
    }

    /// Wraps an already-orthonormal row matrix, validating the invariant.
    pub fn from_orthonormal_rows(rows: DMatrix<f64>) -> Result<Self> {
        let t = rows.nrows();
        let gram = &rows * rows.transpose();
        for i in 0..t {
            for j in 0..t {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - expect).abs() > 1e-8 {
                    return Err(SketchError::Precondition(format!(
                        "rows not orthonormal: gram[{i},{j}] = {:.3e}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        Ok(Subspace {
            ambient_dim: rows.ncols(),
            basis: rows,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        self.basis.row(i).transpose()
    }

    /// The n×n orthogonal projector onto this subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        if self.dim() == 0 {
            return DMatrix::zeros(self.ambient_dim, self.ambient_dim);
        }
        self.basis.transpose() * &self.basis
    }

    /// Maximum deviation of the basis Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let t = self.dim();
        if t == 0 {
            return 0.0;
        }
        let gram = &self.basis * self.basis.transpose();
        let mut worst: f64 = 0.0;
        for i in 0..t {
            for j in 0..t {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - expect).abs());
            }
        }
        worst
    }

    /// Re-orthonormalizes in place when drift exceeds the given tolerance.
    pub fn reorthonormalize_if_needed(&mut self, tol: f64) {
        if self.orthonormality_defect() > tol {
            if let Ok(s) = Subspace::from_rows(&self.basis) {
                self.basis = s.basis;
            }
        }
    }
}

/// Orthogonal projection P_s v.
pub fn project(v: &DVector<f64>, s: &Subspace) -> Result<DVector<f64>> {
    if v.len() != s.ambient_dim() {
        return Err(SketchError::DimensionMismatch {
            expected: s.ambient_dim(),
            got: v.len(),
        });
    }
    if s.dim() == 0 {
        return Ok(DVector::zeros(v.len()));
    }
    let coeffs = &s.basis * v;
    Ok(s.basis.transpose() * coeffs)
}

/// Removes the P_s component from every row of `rows` in place.
pub fn project_rows_onto_complement(rows: &mut DMatrix<f64>, s: &Subspace) {
    if s.dim() == 0 {
        return;
    }
    let coeffs = &*rows * s.basis.transpose();
    *rows -= coeffs * &s.basis;
}

/// An orthonormal basis of the orthogonal complement s^⊥, of dimension n − t.
pub fn orthogonal_complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim();
    let t = s.dim();
    if t == 0 {
        return Subspace::full(n);
    }
    if t == n {
        return Subspace::zero(n);
    }
    // Gram-Schmidt the standard basis against s, keeping n − t survivors.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        if basis.len() == n - t {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        let pv = project(&v, s).expect("dims match");
        v -= pv;
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > DEGENERACY_THRESHOLD {
            basis.push(v / norm);
        }
    }
    let mut m = DMatrix::zeros(basis.len(), n);
    for (i, b) in basis.iter().enumerate() {
        m.set_row(i, &b.transpose());
    }
    Subspace {
        ambient_dim: n,
        basis: m,
    }
}

/// Gram-Schmidt extension: appends the normalized component of `v` orthogonal
/// to `s`. Fails with `DegenerateDirection` when `v` lies in `s` up to the
/// degeneracy threshold.
pub fn extend_orthonormal(s: &Subspace, v: &DVector<f64>) -> Result<Subspace> {
    if v.len() != s.ambient_dim() {
        return Err(SketchError::DimensionMismatch {
            expected: s.ambient_dim(),
            got: v.len(),
        });
    }
    let mut resid = v.clone() - project(v, s)?;
    // second projection pass for stability
    let second = project(&resid, s)?;
    resid -= second;
    let norm = resid.norm();
    if norm <= DEGENERACY_THRESHOLD {
        return Err(SketchError::DegenerateDirection {
            residual: norm,
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let unit = resid / norm;
    let mut basis = DMatrix::zeros(s.dim() + 1, s.ambient_dim());
    basis
        .view_mut((0, 0), (s.dim(), s.ambient_dim()))
        .copy_from(&s.basis);
    basis.set_row(s.dim(), &unit.transpose());
    let mut out = Subspace {
        ambient_dim: s.ambient_dim(),
        basis,
    };
    out.reorthonormalize_if_needed(1e-9);
    Ok(out)
}

/// d(V, W) = ‖P_V − P_W‖₂, the largest singular value of the explicit n×n
/// projector difference.
pub fn subspace_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(SketchError::DimensionMismatch {
            expected: a.ambient_dim(),
            got: b.ambient_dim(),
        });
    }
    let diff = a.projector() - b.projector();
    let svals = diff.singular_values();
    Ok(svals.iter().cloned().fold(0.0f64, f64::max))
}

/// Positively labeled query vectors, one per row.
#[derive(Debug, Clone)]
pub struct SampleMatrix {
    rows: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(rows: DMatrix<f64>) -> Self {
        SampleMatrix { rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Second-moment objective z(v) = (1/m') Σ ⟨v, g'_i⟩².
    pub fn objective(&self, v: &DVector<f64>) -> f64 {
        let prods = &self.rows * v;
        prods.norm_squared() / self.nrows() as f64
    }

    /// Empirical second-moment matrix GᵀG / m'.
    pub fn second_moment(&self) -> DMatrix<f64> {
        self.rows.transpose() * &self.rows / self.nrows() as f64
    }
}

/// Top singular direction of the sample matrix by power iteration on GᵀG,
/// with convergence declared on Rayleigh-quotient stagnation. Returns the
/// unit maximizer and its objective value z(u*).
pub fn top_singular_vector(
    g: &SampleMatrix,
    tol: f64,
    max_iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(DVector<f64>, f64)> {
    if g.nrows() == 0 {
        return Err(SketchError::Precondition(
            "top_singular_vector requires at least one row".into(),
        ));
    }
    let n = g.ambient_dim();
    let m = g.nrows() as f64;
    let mut v = DVector::from_fn(n, |_, _| crate::rng::normal(rng));
    let norm = v.norm();
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        v /= norm;
    }
    let mut lambda = g.objective(&v);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        // w = (GᵀG/m) v computed as Gᵀ(G v)/m: O(m n) per iteration.
        let gv = g.rows() * &v;
        let mut w = g.rows().transpose() * gv / m;
        let wn = w.norm();
        if wn <= 1e-300 {
            // G v = 0: v is in the kernel; objective 0 is already maximal
            // only if G = 0. Restart from a fresh random direction.
            v = DVector::from_fn(n, |_, _| crate::rng::normal(rng));
            let nv = v.norm();
            if nv == 0.0 {
                v[0] = 1.0;
            } else {
                v /= nv;
            }
            lambda = g.objective(&v);
            continue;
        }
        w /= wn;
        let new_lambda = g.objective(&w);
        residual = (new_lambda - lambda).abs() / new_lambda.max(1e-300);
        v = w;
        lambda = new_lambda;
        if residual <= tol {
            return Ok((v, lambda));
        }
    }
    Err(SketchError::NoConvergence {
        iters: max_iters,
        residual,
    })
}

/// Top-k eigenvectors of the empirical second-moment matrix of `g`, ordered
/// by decreasing eigenvalue. Used by the attack's refinement step.
pub fn top_eigenvectors(g: &SampleMatrix, k: usize) -> Vec<DVector<f64>> {
    let sm = g.second_moment();
    let eig = nalgebra::SymmetricEigen::new(sm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
        .into_iter()
        .take(k)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect()
}

/// Largest eigenvalue of a small symmetric matrix together with its
/// eigenvector.
pub fn top_eigenpair_symmetric(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (
        eig.eigenvalues[best],
        eig.eigenvectors.column(best).into_owned(),
    )
}
