//! The black-box side: oracle contracts and concrete sketches to attack —
//! a GapNorm decider on a random linear sketch, an ℓp estimator, a
//! count-sketch sparse-recovery oracle, a randomized-answer wrapper, a
//! majority direct product, and an external-process oracle speaking
//! newline-delimited JSON.

use crate::error::{Result, SketchError};
use crate::linalg::Subspace;
use crate::rng::{normal, uniform_below};
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// A binary sketch oracle. Answers depend on the query only through its
/// projection onto the hidden row space; the counter increments once per
/// query vector.
pub trait BinaryOracle: Sync + Send {
    fn ambient_dim(&self) -> usize;

    /// Answers one query.
    fn query(&self, x: &DVector<f64>) -> bool {
        let m = DMatrix::from_rows(&[x.transpose()]);
        self.query_batch(&m)[0]
    }

    /// Answers a batch; each row of `xs` is one query.
    fn query_batch(&self, xs: &DMatrix<f64>) -> Vec<bool>;

    fn queries_used(&self) -> u64;

    /// Ground-truth row space, exposed for diagnostics only; the attack path
    /// never calls this.
    fn reveal_rowspace(&self) -> Option<Subspace> {
        None
    }

    /// Notifies the oracle of the attack's current subspace V_t. Most oracles
    /// ignore this; deciders that are allowed to depend on V_t^⊥ (the
    /// sparse-recovery reduction) rebuild their probe sets here.
    fn observe_subspace(&self, _v: &Subspace) -> Result<()> {
        Ok(())
    }
}

/// Draws an r×n matrix with i.i.d. N(0, 1/n) entries and orthonormalizes its
/// rows.
pub fn random_orthonormal_rows(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let sd = (1.0 / n as f64).sqrt();
    let raw = DMatrix::from_fn(r, n, |_, _| sd * normal(rng));
    let sub = Subspace::from_rows(&raw)?;
    if sub.dim() < r {
        return Err(SketchError::Domain(
            "random sketch rows were linearly dependent".into(),
        ));
    }
    Ok(sub.basis().clone())
}

/// GapNorm decider on a random linear sketch: answer 1 iff the norm estimate
/// (n/r)·‖Ax‖² clears the threshold.
pub struct GapNormOracle {
    rows: DMatrix<f64>, // r×n, orthonormal rows
    /// Threshold on the estimator (n/r)·‖Ax‖².
    threshold: f64,
    pub b: f64,
    counter: AtomicU64,
}

impl GapNormOracle {
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn r(&self) -> usize {
        self.rows.nrows()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Builds an honest GapNorm oracle.
///
/// The threshold is the geometric mean of the honest promise levels of the
/// estimator under the attack's query distribution: queries at the low
/// promise have E(n/r)‖Ax‖² = (2 + 1/4)·n and at the high promise
/// (B/2 + 1/4)·n, so the estimator threshold is n·√(2.25·(B/2+0.25)).
///
/// `max_promise_error` is checked empirically with 10⁴ fresh probes per side
/// at construction; pass `None` to skip the check (the calibration achievable
/// at small r is documented in the calibration tests).
pub fn make_gapnorm_oracle(
    n: usize,
    r: usize,
    b: f64,
    rng: &mut ChaCha8Rng,
    max_promise_error: Option<f64>,
) -> Result<GapNormOracle> {
    if r >= n {
        return Err(SketchError::Domain("requires r < n".into()));
    }
    if b < 8.0 {
        return Err(SketchError::Domain("requires B ≥ 8".into()));
    }
    let rows = random_orthonormal_rows(n, r, rng)?;
    let low = 2.0 + 0.25;
    let high = b / 2.0 + 0.25;
    let threshold = n as f64 * (low * high).sqrt();
    let oracle = GapNormOracle {
        rows,
        threshold,
        b,
        counter: AtomicU64::new(0),
    };
    if let Some(target) = max_promise_error {
        let probes = 10_000usize;
        let mut err_low = 0usize;
        let mut err_high = 0usize;
        for _ in 0..probes {
            let xl = DVector::from_fn(n, |_, _| low.sqrt() * normal(rng));
            let xh = DVector::from_fn(n, |_, _| high.sqrt() * normal(rng));
            if oracle.query(&xl) {
                err_low += 1;
            }
            if !oracle.query(&xh) {
                err_high += 1;
            }
        }
        oracle.counter.store(0, Ordering::SeqCst);
        let worst = (err_low.max(err_high)) as f64 / probes as f64;
        if worst > target {
            return Err(SketchError::Calibration(format!(
                "GapNorm promise error {worst:.4} exceeds target {target:.4} \
                 (n={n}, r={r}, B={b})"
            )));
        }
    }
    Ok(oracle)
}

impl BinaryOracle for GapNormOracle {
    fn ambient_dim(&self) -> usize {
        self.rows.ncols()
    }

    fn query_batch(&self, xs: &DMatrix<f64>) -> Vec<bool> {
        self.counter.fetch_add(xs.nrows() as u64, Ordering::Relaxed);
        let scale = xs.ncols() as f64 / self.rows.nrows() as f64;
        let sk = xs * self.rows.transpose(); // m×r
        (0..sk.nrows())
            .map(|i| scale * sk.row(i).norm_squared() >= self.threshold)
            .collect()
    }

    fn queries_used(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    fn reveal_rowspace(&self) -> Option<Subspace> {
        Subspace::from_orthonormal_rows(self.rows.clone()).ok()
    }
}

/// A decider that sees the full input and thresholds the true norm — the
/// r = n negative control: the attack's preconditions are violated and no
/// certificate should survive verification.
pub struct FullSpaceOracle {
    pub n: usize,
    pub threshold_norm_sq: f64,
    counter: AtomicU64,
}

impl FullSpaceOracle {
    pub fn new(n: usize, b: f64) -> Self {
        // Same promise geometry as the honest GapNorm oracle, but computed on
        // the exact norm.
        let low = 2.0 + 0.25;
        let high = b / 2.0 + 0.25;
        FullSpaceOracle {
            n,
            threshold_norm_sq: n as f64 * (low * high).sqrt(),
            counter: AtomicU64::new(0),
        }
    }
}

impl BinaryOracle for FullSpaceOracle {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn query_batch(&self, xs: &DMatrix<f64>) -> Vec<bool> {
        self.counter.fetch_add(xs.nrows() as u64, Ordering::Relaxed);
        (0..xs.nrows())
            .map(|i| xs.row(i).norm_squared() >= self.threshold_norm_sq)
            .collect()
    }

    fn queries_used(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    fn reveal_rowspace(&self) -> Option<Subspace> {
        Some(Subspace::full(self.n))
    }
}

/// A constant-answer oracle (used by tests and as a degenerate control).
pub struct ConstantOracle {
    pub n: usize,
    pub answer: bool,
    counter: AtomicU64,
}

impl ConstantOracle {
    pub fn new(n: usize, answer: bool) -> Self {
        ConstantOracle {
            n,
            answer,
            counter: AtomicU64::new(0),
        }
    }
}

impl BinaryOracle for ConstantOracle {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn query_batch(&self, xs: &DMatrix<f64>) -> Vec<bool> {
        self.counter.fetch_add(xs.nrows() as u64, Ordering::Relaxed);
        vec![self.answer; xs.nrows()]
    }

    fn queries_used(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    fn reveal_rowspace(&self) -> Option<Subspace> {
        Some(Subspace::zero(self.n))
    }
}

/// Wraps a binary oracle so that each answer is flipped independently with
/// probability `answer_noise`, using oracle-private randomness.
pub struct RandomizedOracle<O: BinaryOracle> {
    inner: O,
    answer_noise: f64,
    rng: Mutex<ChaCha8Rng>,
}

pub fn wrap_randomized<O: BinaryOracle>(
    oracle: O,
    answer_noise: f64,
    rng: ChaCha8Rng,
) -> Result<RandomizedOracle<O>> {
    if !(0.0..0.5).contains(&answer_noise) {
        return Err(SketchError::Domain(
            "answer_noise must lie in [0, 1/2)".into(),
        ));
    }
    Ok(RandomizedOracle {
        inner: oracle,
        answer_noise,
        rng: Mutex::new(rng),
    })
}

impl<O: BinaryOracle> RandomizedOracle<O> {
    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: BinaryOracle> BinaryOracle for RandomizedOracle<O> {
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    fn query_batch(&self, xs: &DMatrix<f64>) -> Vec<bool> {
        let mut answers = self.inner.query_batch(xs);
        if self.answer_noise > 0.0 {
            let mut rng = self.rng.lock().unwrap();
            let cut = (self.answer_noise * 2.0f64.powi(64)) as u64;
            for a in answers.iter_mut() {
                if rng.next_u64() < cut {
                    *a = !*a;
                }
            }
        }
        answers
    }

    fn queries_used(&self) -> u64 {
        self.inner.queries_used()
    }

    fn reveal_rowspace(&self) -> Option<Subspace> {
        self.inner.reveal_rowspace()
    }
}

/// The q-fold majority direct product f^{⊗q} on ℝ^{qn}: a query splits into q
/// blocks of n coordinates, each goes to the base oracle, and the answer is
/// the majority vote. Its row space is the q-fold block direct product of the
/// base row space.
pub struct MajorityOracle<'a> {
    base: &'a dyn BinaryOracle,
    pub q: usize,
    counter: AtomicU64,
}

pub fn amplify_majority(base: &dyn BinaryOracle, q: usize) -> Result<MajorityOracle<'_>> {
    if q == 0 || q % 2 == 0 {
        return Err(SketchError::Domain("q must be odd and ≥ 1".into()));
    }
    Ok(MajorityOracle {
        base,
        q,
        counter: AtomicU64::new(0),
    })
}

impl BinaryOracle for MajorityOracle<'_> {
    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim() * self.q
    }

    fn query_batch(&self, xs: &DMatrix<f64>) -> Vec<bool> {
        self.counter.fetch_add(xs.nrows() as u64, Ordering::Relaxed);
        let n = self.base.ambient_dim();
        let m = xs.nrows();
        let mut votes = vec![0usize; m];
        for blk in 0..self.q {
            let block = xs.view((0, blk * n), (m, n)).into_owned();
            for (i, a) in self.base.query_batch(&block).into_iter().enumerate() {
                if a {
                    votes[i] += 1;
                }
            }
        }
        votes.into_iter().map(|v| 2 * v > self.q).collect()
    }

    fn queries_used(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    fn reveal_rowspace(&self) -> Option<Subspace> {
        let base_space = self.base.reveal_rowspace()?;
        let n = self.base.ambient_dim();
        let t = base_space.dim();
        let mut rows = DMatrix::zeros(t * self.q, n * self.q);
        for blk in 0..self.q {
            rows.view_mut((blk * t, blk * n), (t, n))
                .copy_from(base_space.basis());
        }
        Subspace::from_orthonormal_rows(rows).ok()
    }
}

/// A real-valued ℓp-norm estimator computed from a linear sketch.
pub struct LpOracle {
    rows: DMatrix<f64>, // r×n, orthonormal rows
    pub p: f64,
    pub c: f64,
    /// Z(x) = scale · ‖Ax‖₂.
    pub scale: f64,
    counter: AtomicU64,
}

impl LpOracle {
    pub fn ambient_dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn query_real(&self, x: &DVector<f64>) -> f64 {
        self.counter.fetch_add(1, Ordering::Relaxed);
        self.scale * (&self.rows * x).norm()
    }

    pub fn query_real_batch(&self, xs: &DMatrix<f64>) -> Vec<f64> {
        self.counter.fetch_add(xs.nrows() as u64, Ordering::Relaxed);
        let sk = xs * self.rows.transpose();
        (0..sk.nrows())
            .map(|i| self.scale * sk.row(i).norm())
            .collect()
    }

    pub fn queries_used(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    pub fn reveal_rowspace(&self) -> Option<Subspace> {
        Subspace::from_orthonormal_rows(self.rows.clone()).ok()
    }
}

/// ℓp norm of a vector (p ≥ 1; `f64::INFINITY` gives the max norm).
pub fn lp_norm(x: &DVector<f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Builds an ℓp estimator on a random sketch, intended to satisfy
/// ‖x‖_p ≤ Z(x) ≤ C‖x‖_p on fresh Gaussian inputs. The scale is calibrated
/// empirically at construction (geometric mean of the observed ‖x‖_p/‖Ax‖₂
/// ratio times √C) and the bracket frequency is validated at ≥ 0.99;
/// construction fails loudly otherwise.
pub fn make_lp_oracle(
    n: usize,
    r: usize,
    p: f64,
    c: f64,
    rng: &mut ChaCha8Rng,
) -> Result<LpOracle> {
    if r >= n {
        return Err(SketchError::Domain("requires r < n".into()));
    }
    if !(p >= 1.0) {
        return Err(SketchError::Domain("requires p ≥ 1".into()));
    }
    if !(c > 1.0) {
        return Err(SketchError::Domain("requires C > 1".into()));
    }
    let rows = random_orthonormal_rows(n, r, rng)?;
    // Calibrate: geometric mean of ‖x‖_p / ‖Ax‖ over fresh Gaussians, shifted
    // to the middle of the bracket [1, C].
    let probes = 2_000usize;
    let mut log_sum = 0.0;
    for _ in 0..probes {
        let x = DVector::from_fn(n, |_, _| normal(rng));
        let ratio = lp_norm(&x, p) / (&rows * &x).norm().max(1e-300);
        log_sum += ratio.ln();
    }
    let scale = (log_sum / probes as f64).exp() * c.sqrt();
    let oracle = LpOracle {
        rows,
        p,
        c,
        scale,
        counter: AtomicU64::new(0),
    };
    let check = 10_000usize;
    let mut ok = 0usize;
    for _ in 0..check {
        let x = DVector::from_fn(n, |_, _| normal(rng));
        let z = oracle.scale * (oracle.rows.clone() * &x).norm();
        let xp = lp_norm(&x, p);
        if z >= xp && z <= c * xp {
            ok += 1;
        }
    }
    let freq = ok as f64 / check as f64;
    if freq < 0.99 {
        return Err(SketchError::Calibration(format!(
            "lp bracket holds with frequency {freq:.4} < 0.99 (n={n}, r={r}, p={p}, C={c})"
        )));
    }
    oracle.counter.store(0, Ordering::SeqCst);
    Ok(oracle)
}

/// Count-sketch based ℓ2/ℓ2 sparse-recovery oracle: `tables` hash tables of
/// `width` buckets with random signs; recovery estimates each coordinate per
/// table and combines the per-table estimates conservatively (for two tables
/// the estimate of smaller magnitude — the conservative reading of the
/// median of two — and the true median for odd table counts), then outputs
/// the top-k coordinates.
pub struct SparseRecoveryOracle {
    pub tables: usize,
    pub width: usize,
    pub k: usize,
    pub c: f64,
    n: usize,
    hash: Vec<Vec<usize>>, // [table][coord] -> bucket
    sign: Vec<Vec<f64>>,   // [table][coord] -> ±1
    rows: DMatrix<f64>,    // (tables·width)×n sketch matrix
    counter: AtomicU64,
    /// Coordinates with no partner colliding in every table (estimates of
    /// these coordinates cannot be corrupted by a single other heavy
    /// coordinate in all tables at once).
    clean: Vec<usize>,
}

impl SparseRecoveryOracle {
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.tables * self.width
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn clean_coords(&self) -> &[usize] {
        &self.clean
    }

    pub fn queries_used(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    pub fn reveal_rowspace(&self) -> Option<Subspace> {
        Subspace::from_rows(&self.rows).ok()
    }

    /// Per-coordinate estimates from the sketch of one query.
    fn estimate(&self, sketch: &DVector<f64>) -> DVector<f64> {
        let mut est = DVector::zeros(self.n);
        let mut vals = [0.0f64; 8];
        for j in 0..self.n {
            for t in 0..self.tables {
                vals[t] = self.sign[t][j] * sketch[t * self.width + self.hash[t][j]];
            }
            let vals = &mut vals[..self.tables];
            est[j] = if self.tables % 2 == 1 {
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vals[self.tables / 2]
            } else {
                // conservative estimate for even table counts: the value of
                // smallest magnitude
                vals.iter()
                    .copied()
                    .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                    .unwrap()
            };
        }
        est
    }

    /// Recovers a k-sparse approximation from a single query vector.
    pub fn recover(&self, x: &DVector<f64>) -> DVector<f64> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        let sketch = &self.rows * x;
        self.recover_from_sketch(&sketch)
    }

    /// Batch recovery; each row of `xs` is one query.
    pub fn recover_batch(&self, xs: &DMatrix<f64>) -> Vec<DVector<f64>> {
        self.counter.fetch_add(xs.nrows() as u64, Ordering::Relaxed);
        let sk = xs * self.rows.transpose();
        (0..xs.nrows())
            .map(|i| self.recover_from_sketch(&sk.row(i).transpose()))
            .collect()
    }

    /// Batch recovery readout of single coordinates: queries are the
    /// *columns* of `xt`, and for column j only `recover(col_j)[idx[j]]` is
    /// returned. Agrees exactly with `recover` (same estimates, same top-k
    /// tie-breaking) but skips materializing the full recovered vectors; used
    /// by the probe decider where each recovery is read at one coordinate.
    pub fn recover_cols_entries(&self, xt: &DMatrix<f64>, idx: &[usize]) -> Vec<f64> {
        assert_eq!(xt.ncols(), idx.len(), "one readout coordinate per query");
        assert_eq!(xt.nrows(), self.n);
        self.counter.fetch_add(idx.len() as u64, Ordering::Relaxed);
        let sk = &self.rows * xt; // r × queries, one sketch per column
        let mut est = vec![0.0f64; self.n];
        let mut vals = [0.0f64; 8];
        let mut out = Vec::with_capacity(idx.len());
        for (q, &i) in idx.iter().enumerate() {
            let sketch = sk.column(q);
            for j in 0..self.n {
                for t in 0..self.tables {
                    vals[t] = self.sign[t][j] * sketch[t * self.width + self.hash[t][j]];
                }
                let v = &mut vals[..self.tables];
                est[j] = if self.tables % 2 == 1 {
                    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    v[self.tables / 2]
                } else {
                    v.iter()
                        .copied()
                        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                        .unwrap()
                };
            }
            // i is in the top-k iff fewer than k coordinates precede it in
            // the (|est| desc, index asc) order.
            let target = est[i].abs();
            let mut ahead = 0usize;
            for (j, e) in est.iter().enumerate() {
                if e.abs() > target || (e.abs() == target && j < i) {
                    ahead += 1;
                    if ahead >= self.k {
                        break;
                    }
                }
            }
            out.push(if ahead < self.k { est[i] } else { 0.0 });
        }
        out
    }

    fn recover_from_sketch(&self, sketch: &DVector<f64>) -> DVector<f64> {
        let est = self.estimate(sketch);
        // top-k by magnitude; ties broken toward the lower index
        let cmp = |&a: &usize, &b: &usize| {
            est[b]
                .abs()
                .partial_cmp(&est[a].abs())
                .unwrap()
                .then(a.cmp(&b))
        };
        let mut out = DVector::zeros(self.n);
        if self.k == 1 {
            let mut best = 0usize;
            for j in 1..self.n {
                if cmp(&j, &best) == std::cmp::Ordering::Less {
                    best = j;
                }
            }
            out[best] = est[best];
        } else {
            let mut idx: Vec<usize> = (0..self.n).collect();
            if self.k < self.n {
                idx.select_nth_unstable_by(self.k - 1, cmp);
            }
            for &j in idx.iter().take(self.k) {
                out[j] = est[j];
            }
        }
        out
    }
}

/// Builds the count-sketch recovery oracle. `r` must be a multiple of the
/// table count chosen (2 tables for r < 36, 3 above), and large enough that
/// fresh Gaussian-plus-spike inputs satisfy the ℓ2/ℓ2 guarantee with
/// frequency ≥ 0.99 (validated at construction with 10³ probes).
pub fn make_countsketch_recovery_oracle(
    n: usize,
    r: usize,
    k: usize,
    c: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SparseRecoveryOracle> {
    let min_rows = (2.0 * k as f64 * ((n as f64 / k as f64).ln())).ceil() as usize;
    if r < min_rows {
        return Err(SketchError::Domain(format!(
            "r = {r} too small to calibrate (needs ≥ {min_rows} for k = {k}, n = {n})"
        )));
    }
    let tables = if r < 36 { 2 } else { 3 };
    let width = r / tables;
    if width * tables != r {
        return Err(SketchError::Domain(format!(
            "r = {r} must be divisible by the table count {tables}"
        )));
    }
    // Redraw hash functions until enough coordinates are collision-clean in
    // all tables (guards the recovery quality of the probes used downstream).
    let min_clean = (n / 6).min(40);
    let mut attempt = 0;
    loop {
        attempt += 1;
        let hash: Vec<Vec<usize>> = (0..tables)
            .map(|_| {
                (0..n)
                    .map(|_| uniform_below(rng, width as u64) as usize)
                    .collect()
            })
            .collect();
        let sign: Vec<Vec<f64>> = (0..tables)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.next_u64() & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        let mut rows = DMatrix::zeros(tables * width, n);
        for t in 0..tables {
            for j in 0..n {
                rows[(t * width + hash[t][j], j)] = sign[t][j];
            }
        }
        let clean: Vec<usize> = (0..n)
            .filter(|&j| !(0..n).any(|o| o != j && (0..tables).all(|t| hash[t][o] == hash[t][j])))
            .collect();
        if clean.len() < min_clean && attempt < 50 {
            continue;
        }
        if clean.len() < min_clean {
            return Err(SketchError::Calibration(format!(
                "could not find a hash family with ≥ {min_clean} clean coordinates"
            )));
        }
        let oracle = SparseRecoveryOracle {
            tables,
            width,
            k,
            c,
            n,
            hash,
            sign,
            rows,
            counter: AtomicU64::new(0),
            clean,
        };
        // Calibration: Gaussian-plus-spike probes must meet the guarantee.
        // Spikes land on collision-clean coordinates: at this sketch width a
        // coordinate with a full-collision partner is indistinguishable from
        // it, and the downstream probe sets are clean-restricted to match.
        let probes = 1_000usize;
        let mut ok = 0usize;
        for _ in 0..probes {
            let mut x = DVector::from_fn(n, |_, _| normal(rng));
            let spike = 10.0 * (n as f64).sqrt();
            let j = oracle.clean[uniform_below(rng, oracle.clean.len() as u64) as usize];
            x[j] += spike;
            let xp = oracle.recover(&x);
            let lhs = (&xp - &x).norm();
            let rhs = c * crate::apps::tail_norm(&x, k)?;
            if lhs <= rhs {
                ok += 1;
            }
        }
        oracle.counter.store(0, Ordering::SeqCst);
        let freq = ok as f64 / probes as f64;
        if freq < 0.99 {
            if attempt < 50 {
                continue;
            }
            return Err(SketchError::Calibration(format!(
                "recovery guarantee frequency {freq:.4} < 0.99 (n={n}, r={r}, k={k}, C={c})"
            )));
        }
        return Ok(oracle);
    }
}

/// An oracle implemented by an external process speaking newline-delimited
/// JSON: each request is `{"query": [floats]}` and each response either
/// `{"answer": 0|1}` (binary oracles) or `{"recovered": [floats]}`.
pub struct ProcessOracle {
    n: usize,
    child: Mutex<(Child, BufReader<std::process::ChildStdout>)>,
    counter: AtomicU64,
}

impl ProcessOracle {
    pub fn spawn(argv: &[String], n: usize) -> Result<Self> {
        if argv.is_empty() {
            return Err(SketchError::Config("empty oracle command".into()));
        }
        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped());
        let mut child = cmd
            .spawn()
            .map_err(|e| SketchError::Oracle(format!("failed to spawn oracle: {e}")))?;
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| SketchError::Oracle("no stdout".into()))?;
        Ok(ProcessOracle {
            n,
            child: Mutex::new((child, BufReader::new(stdout))),
            counter: AtomicU64::new(0),
        })
    }

    fn roundtrip(&self, x: &DVector<f64>) -> Result<serde_json::Value> {
        let mut guard = self.child.lock().unwrap();
        let (child, reader) = &mut *guard;
        let stdin = child
            .stdin
            .as_mut()
            .ok_or_else(|| SketchError::Oracle("oracle stdin closed".into()))?;
        let req = serde_json::json!({ "query": x.as_slice() });
        writeln!(stdin, "{req}")?;
        stdin.flush()?;
        let mut line = String::new();
        reader.read_line(&mut line)?;
        if line.is_empty() {
            return Err(SketchError::Oracle(
                "oracle process closed its stdout".into(),
            ));
        }
        Ok(serde_json::from_str(&line)?)
    }
}

impl BinaryOracle for ProcessOracle {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn query_batch(&self, xs: &DMatrix<f64>) -> Vec<bool> {
        self.counter.fetch_add(xs.nrows() as u64, Ordering::Relaxed);
        (0..xs.nrows())
            .map(|i| {
                let x = xs.row(i).transpose();
                match self.roundtrip(&x) {
                    Ok(v) => v.get("answer").and_then(|a| a.as_i64()).unwrap_or(0) != 0,
                    Err(_) => false,
                }
            })
            .collect()
    }

    fn queries_used(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }
}

impl Drop for ProcessOracle {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.child.lock() {
            let _ = guard.0.kill();
            let _ = guard.0.wait();
        }
    }
}
