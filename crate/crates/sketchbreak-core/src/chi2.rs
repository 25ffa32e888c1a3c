//! Scaled chi-square densities, Gamma interval masses, and the advantage
//! function Δ(s) = ∫ (s−τ) ν_{τ,d}(s) dτ over τ ∈ [d, Bd], together with the
//! quadrature machinery used to validate their closed forms numerically.
//!
//! All densities are evaluated in log-space; Gamma interval masses go through
//! the regularized incomplete gamma function.

use crate::error::{Result, SketchError};
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Parameters of the scaled chi-square family ν_{τ,d} and of Δ.
#[derive(Debug, Clone, Copy)]
pub struct ChiSquareParams {
    /// Degrees of freedom d ≥ 1.
    pub d: u32,
    /// Expectation τ > 0 of the scaled distribution.
    pub tau: f64,
    /// Gap factor B > 4 (used by Δ; the advantage integral runs over
    /// τ ∈ [d, Bd]).
    pub b: f64,
}

impl ChiSquareParams {
    pub fn new(d: u32, tau: f64, b: f64) -> Result<Self> {
        if d < 1 {
            return Err(SketchError::Domain("d must be ≥ 1".into()));
        }
        if !(tau > 0.0) {
            return Err(SketchError::Domain(format!("tau must be > 0, got {tau}")));
        }
        Ok(ChiSquareParams { d, tau, b })
    }
}

/// Tolerances for the adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 60,
        }
    }
}

/// Density ν_{τ,d}(s) of a chi-square with d degrees of freedom rescaled to
/// expectation τ:
///
///   ν_{τ,d}(s) = d (sd/τ)^{d/2−1} e^{−sd/2τ} / (τ 2^{d/2} Γ(d/2)).
pub fn nu_density(s: f64, params: &ChiSquareParams) -> Result<f64> {
    if s < 0.0 {
        return Err(SketchError::Domain(format!("s must be ≥ 0, got {s}")));
    }
    let d = params.d as f64;
    let tau = params.tau;
    if !(tau > 0.0) {
        return Err(SketchError::Domain("tau must be > 0".into()));
    }
    if s == 0.0 {
        // (sd/τ)^{d/2−1} at s=0: 0 for d>2, 1 for d=2, ∞ for d=1 (density
        // blows up; return +∞ faithfully for d=1).
        return Ok(match params.d {
            1 => f64::INFINITY,
            2 => d / (tau * 2.0f64.powf(d / 2.0)),
            _ => 0.0,
        });
    }
    let half = d / 2.0;
    let log_density = d.ln() + (half - 1.0) * ((s * d / tau).ln())
        - s * d / (2.0 * tau)
        - tau.ln()
        - half * std::f64::consts::LN_2
        - ln_gamma(half);
    Ok(log_density.exp())
}

/// Mass Γ_p([a,b]) = ∫_a^b x^{p−1} e^{−x} / Γ(p) dx of the unit-scale Gamma
/// distribution, via the regularized incomplete gamma function. `b` may be
/// `f64::INFINITY`.
pub fn gamma_interval_mass(p: f64, a: f64, b: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(SketchError::Domain(format!("shape must be > 0, got {p}")));
    }
    if a > b {
        return Err(SketchError::Domain(format!("interval [{a}, {b}] is empty")));
    }
    if a < 0.0 {
        return Err(SketchError::Domain("interval must be in [0, ∞)".into()));
    }
    let upper = if b.is_infinite() { 1.0 } else { gamma_lr(p, b) };
    let lower = if a == 0.0 { 0.0 } else { gamma_lr(p, a) };
    Ok((upper - lower).clamp(0.0, 1.0))
}

/// The two closed forms of the weighted τ-interval integrals for 0 ≤ a ≤ b:
///
///   I_s = ∫_a^b s ν_τ(s) dτ = s/(1−2/d) · Γ_{d/2−1}([sd/2b, sd/2a])
///   I_τ = ∫_a^b τ ν_τ(s) dτ = s/(1−6/d+8/d²) · Γ_{d/2−2}([sd/2b, sd/2a])
///
/// Requires d ≥ 5 so the second shape parameter d/2−2 stays positive.
pub fn weighted_interval_integrals(
    s: f64,
    a: f64,
    b: f64,
    params: &ChiSquareParams,
) -> Result<(f64, f64)> {
    if params.d < 5 {
        return Err(SketchError::Domain(
            "weighted_interval_integrals requires d ≥ 5".into(),
        ));
    }
    if a > b || a < 0.0 {
        return Err(SketchError::Domain(format!("bad interval [{a}, {b}]")));
    }
    if s < 0.0 {
        return Err(SketchError::Domain("s must be ≥ 0".into()));
    }
    if s == 0.0 {
        return Ok((0.0, 0.0));
    }
    let d = params.d as f64;
    let lo = if b.is_infinite() {
        0.0
    } else {
        s * d / (2.0 * b)
    };
    let hi = if a == 0.0 {
        f64::INFINITY
    } else {
        s * d / (2.0 * a)
    };
    let m1 = gamma_interval_mass(d / 2.0 - 1.0, lo, hi)?;
    let m2 = gamma_interval_mass(d / 2.0 - 2.0, lo, hi)?;
    let i_s = s / (1.0 - 2.0 / d) * m1;
    let i_tau = s / (1.0 - 6.0 / d + 8.0 / (d * d)) * m2;
    Ok((i_s, i_tau))
}

/// Advantage function Δ(s) = ∫_d^{Bd} (s−τ) ν_τ(s) dτ = I_s − I_τ.
pub fn delta_advantage(s: f64, params: &ChiSquareParams) -> Result<f64> {
    if params.d < 20 {
        return Err(SketchError::Domain(
            "delta_advantage requires d ≥ 20".into(),
        ));
    }
    if !(params.b > 4.0) {
        return Err(SketchError::Domain("delta_advantage requires B > 4".into()));
    }
    let d = params.d as f64;
    let (i_s, i_tau) = weighted_interval_integrals(s, d, params.b * d, params)?;
    Ok(i_s - i_tau)
}

/// Truncation point for integrals over s against ν_{τ,d} with τ ≤ Bd: beyond
/// s = τ(1 + 20/√d)·B the remaining tail mass is negligible at the working
/// tolerances.
pub fn s_truncation(tau: f64, params: &ChiSquareParams) -> f64 {
    let d = params.d as f64;
    tau * (1.0 + 20.0 / d.sqrt()) * params.b.max(2.0)
}

/// Adaptive Simpson quadrature on [a, b] with interval subdivision until the
/// Richardson error estimate meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
        max_depth: usize,
        ok: &mut bool,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol || (b - a) < 1e-14 {
            return left + right + err / 15.0;
        }
        if depth >= max_depth {
            *ok = false;
            return left + right + err / 15.0;
        }
        recurse(
            f,
            a,
            fa,
            m,
            fm,
            left,
            lm,
            flm,
            tol / 2.0,
            depth + 1,
            max_depth,
            ok,
        ) + recurse(
            f,
            m,
            fm,
            b,
            fb,
            right,
            rm,
            frm,
            tol / 2.0,
            depth + 1,
            max_depth,
            ok,
        )
    }
    // Pre-split into fixed panels so a sharply peaked integrand cannot be
    // missed by the three initial probe points of plain adaptive Simpson.
    const PANELS: usize = 64;
    let width = (b - a) / PANELS as f64;
    let mut total = 0.0;
    let mut ok = true;
    let mut fa = f(a);
    for i in 0..PANELS {
        let pa = a + i as f64 * width;
        let pb = if i == PANELS - 1 { b } else { pa + width };
        let fb = f(pb);
        let (whole, m, fm) = simpson(f, pa, fa, pb, fb);
        let tol = (spec.abs_tol / PANELS as f64).max(spec.rel_tol * whole.abs());
        total += recurse(
            f,
            pa,
            fa,
            pb,
            fb,
            whole,
            m,
            fm,
            tol,
            0,
            spec.max_subdivisions,
            &mut ok,
        );
        fa = fb;
    }
    if !ok {
        return Err(SketchError::QuadratureFailure {
            subdivisions: spec.max_subdivisions,
        });
    }
    Ok(total)
}

/// A function on [0, s_max] tabulated as piecewise-constant values on a
/// uniform grid; beyond s_max it continues with the last value.
#[derive(Debug, Clone)]
pub struct TabulatedH {
    pub s_max: f64,
    pub values: Vec<f64>,
}

impl TabulatedH {
    /// Indicator of [threshold, ∞) tabulated on [0, s_max].
    pub fn step(threshold: f64, s_max: f64, cells: usize) -> Self {
        let width = s_max / cells as f64;
        let values = (0..cells)
            .map(|i| {
                let mid = (i as f64 + 0.5) * width;
                if mid >= threshold {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        TabulatedH { s_max, values }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        if s >= self.s_max {
            return *self.values.last().unwrap();
        }
        let idx = ((s / self.s_max) * self.values.len() as f64) as usize;
        self.values[idx.min(self.values.len() - 1)]
    }
}

/// Outcome of the soundness-inequality check ∫ h(s) Δ(s) ds.
#[derive(Debug, Clone)]
pub struct HSoundnessReport {
    /// The computed integral ∫ h Δ.
    pub integral: f64,
    /// Excess of ∫_{Bd/2}^{2Bd} (1−h) over its cap 1/(Bd); ≤ 0 when the
    /// condition holds.
    pub cond1_excess: f64,
    /// Excess of ∫_0^{2d} h over its cap 1/d; ≤ 0 when the condition holds.
    pub cond2_excess: f64,
}

impl HSoundnessReport {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.cond1_excess > 0.0 {
            v.push(format!(
                "condition 1 violated: ∫ upper-window (1−h) exceeds cap by {:.3e}",
                self.cond1_excess
            ));
        }
        if self.cond2_excess > 0.0 {
            v.push(format!(
                "condition 2 violated: ∫ lower-window h exceeds cap by {:.3e}",
                self.cond2_excess
            ));
        }
        v
    }

    pub fn conforming(&self) -> bool {
        self.cond1_excess <= 0.0 && self.cond2_excess <= 0.0
    }
}

/// Computes ∫_0^∞ h(s) Δ(s) ds by quadrature and checks the two admissibility
/// conditions on h:
///   1. ∫_{Bd/2}^{2Bd} (1 − h(s)) ds ≤ 1/(Bd)
///   2. ∫_0^{2d} h(s) ds ≤ 1/d
/// For conforming h and d at least the configured d₀ the integral is ≥ d/4.
pub fn check_h_soundness_inequality(
    h: &TabulatedH,
    params: &ChiSquareParams,
    spec: &QuadratureSpec,
) -> Result<HSoundnessReport> {
    let d = params.d as f64;
    let b = params.b;
    let hh = |s: f64| h.eval(s);
    let cond1 = integrate(&|s| 1.0 - hh(s), b * d / 2.0, 2.0 * b * d, spec)? - 1.0 / (b * d);
    let cond2 = integrate(&|s| hh(s), 0.0, 2.0 * d, spec)? - 1.0 / d;

    // Integrate h·Δ over maximal runs where h is constant, so the quadrature
    // only ever sees the smooth Δ.
    let s_hi = s_truncation(b * d, params);
    let mut breakpoints = vec![0.0];
    if !h.values.is_empty() {
        let width = h.s_max / h.values.len() as f64;
        for i in 1..h.values.len() {
            if (h.values[i] - h.values[i - 1]).abs() > 0.0 {
                let bp = i as f64 * width;
                if bp < s_hi {
                    breakpoints.push(bp);
                }
            }
        }
    }
    breakpoints.push(s_hi);
    let mut total = 0.0;
    for w in breakpoints.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let hv = hh(0.5 * (lo + hi));
        if hv == 0.0 {
            continue;
        }
        let piece = integrate(&|s| delta_advantage(s, params).unwrap_or(0.0), lo, hi, spec)?;
        total += hv * piece;
    }
    Ok(HSoundnessReport {
        integral: total,
        cond1_excess: cond1,
        cond2_excess: cond2,
    })
}
