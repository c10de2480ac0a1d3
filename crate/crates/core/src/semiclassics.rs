//! Phase-space integrals of the radial symbol `p² − Φ(r) + λ²/r²`.
//!
//! * `κ(λ) = π⁻¹ ∫ (Φ − λ²/r²)_+^{1/2} dr`
//! * `n(λ, μ) = π⁻¹ ∫ (Φ − λ²/r² − μ)_+^{1/2} dr`
//! * `e_G(λ, μ) = −(2/3π) ∫ (Φ − λ²/r² − μ)_+^{3/2} dr`
//! * `e(λ, n) = max_{μ ≥ 0} (e_G(λ, μ) − μ n)`
//!
//! The integrands vanish like a square root at both turning points, so every
//! integral is split there and the endpoints are regularised by substitution.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potentials::RadialPotential;
use crate::quadrature::integrate_with_budget;

const QUAD_ABS_TOL: f64 = 1e-14;
const QUAD_REL_TOL: f64 = 1e-13;
const QUAD_BUDGET: usize = 2000;
const SCAN_POINTS: usize = 600;

/// Classically allowed interval `{r : Φ(r) − λ²/r² − μ > 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    /// Exactly zero when `λ = 0`.
    pub inner: f64,
    /// `f64::INFINITY` when `λ = μ = 0`.
    pub outer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalPoint {
    pub lambda: f64,
    pub mu: f64,
    pub e_g: f64,
    pub n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalResult {
    pub lambda: f64,
    pub n_target: f64,
    pub mu_star: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularDistribution {
    pub lambda_grid: Vec<f64>,
    pub kappa_values: Vec<f64>,
    pub lambda_max: f64,
}

impl AngularDistribution {
    /// Trapezoid estimate of `∫ 4λ κ(λ) dλ` over the table.
    pub fn normalization(&self) -> f64 {
        self.lambda_grid
            .windows(2)
            .zip(self.kappa_values.windows(2))
            .map(|(l, k)| 0.5 * (l[1] - l[0]) * (4.0 * l[0] * k[0] + 4.0 * l[1] * k[1]))
            .sum()
    }
}

/// Rejects potentials for which the phase-space integrals diverge.
pub fn check_potential(pot: &dyn RadialPotential) -> Result<()> {
    if !(pot.origin_limit() > 0.0) {
        return Err(Error::Config(format!(
            "{}: origin limit must be positive",
            pot.label()
        )));
    }
    if !(pot.decay_exponent() > 2.0) {
        return Err(Error::Config(format!(
            "{}: semiclassical integrals need decay faster than r^-2 (exponent {})",
            pot.label(),
            pot.decay_exponent()
        )));
    }
    Ok(())
}

fn check_args(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
    }
    Ok(())
}

/// Log-radius window `[lo, hi]` in which turning points are searched.
fn search_window(pot: &dyn RadialPotential, lambda: f64) -> (f64, f64) {
    let l = pot.length_scale();
    let mut lo = 1e-12 * l;
    if lambda > 0.0 {
        lo = lo.min(0.01 * lambda * lambda / pot.origin_limit());
    }
    (lo.ln(), (1e10 * l).ln())
}

/// Maximiser of a unimodal `f` in log radius by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Location and height of the maximum of `r²(Φ(r) − μ)` in log radius.
struct BarrierPeak {
    ln_r: f64,
    height: f64,
}

fn barrier(pot: &dyn RadialPotential, mu: f64, ln_r: f64) -> f64 {
    let r = ln_r.exp();
    r * r * (pot.value(r) - mu)
}

fn barrier_peak(pot: &dyn RadialPotential, mu: f64, window: (f64, f64)) -> Result<BarrierPeak> {
    let (lo, hi) = window;
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let samples: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| barrier(pot, mu, lo + step * i as f64))
        .collect();
    let imax = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    // a unimodal barrier rises monotonically to the peak and falls after it
    let rising = samples[..=imax].windows(2).filter(|w| w[1] < w[0]).count();
    let falling = samples[imax..].windows(2).filter(|w| w[1] > w[0]).count();
    if rising + falling > 0 {
        return Err(Error::Numerical(format!(
            "{}: barrier r²(Φ − μ) is not unimodal (μ = {mu})",
            pot.label()
        )));
    }
    let a = lo + step * imax.saturating_sub(1) as f64;
    let b = lo + step * (imax + 1).min(SCAN_POINTS - 1) as f64;
    let (ln_r, height) = golden_max(|x| barrier(pot, mu, x), a, b);
    Ok(BarrierPeak { ln_r, height })
}

/// Bisection in log radius for `g(ln r) = 0` with `g(a) · g(b) < 0`.
fn log_root(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) || (b - a).abs() < 1e-15 {
            break;
        }
        if (g(m) > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b)).exp()
}

/// Support edge `λ_max = (max_r r²Φ(r))^{1/2}` of `κ`.
pub fn lambda_max(pot: &dyn RadialPotential) -> Result<f64> {
    check_potential(pot)?;
    let peak = barrier_peak(pot, 0.0, search_window(pot, 0.0))?;
    Ok(peak.height.max(0.0).sqrt())
}

/// `max_r (Φ(r) − λ²/r²)`: the smallest μ for which the allowed region is empty.
pub fn barrier_top(pot: &dyn RadialPotential, lambda: f64) -> Result<f64> {
    check_potential(pot)?;
    check_args(lambda, 0.0)?;
    if lambda == 0.0 {
        return Ok(f64::INFINITY);
    }
    let (lo, hi) = search_window(pot, lambda);
    let l2 = lambda * lambda;
    let f = |x: f64| {
        let r = x.exp();
        pot.value(r) - l2 / (r * r)
    };
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let imax = (0..SCAN_POINTS)
        .map(|i| f(lo + step * i as f64))
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap();
    let a = lo + step * imax.saturating_sub(1) as f64;
    let b = lo + step * (imax + 1).min(SCAN_POINTS - 1) as f64;
    Ok(golden_max(f, a, b).1.max(0.0))
}

pub fn turning_points(
    pot: &dyn RadialPotential,
    lambda: f64,
    mu: f64,
) -> Result<Option<TurningPoints>> {
    check_args(lambda, mu)?;
    let l2 = lambda * lambda;
    if lambda == 0.0 && mu == 0.0 {
        return Ok(Some(TurningPoints {
            inner: 0.0,
            outer: f64::INFINITY,
        }));
    }
    let window = search_window(pot, lambda);
    let peak = barrier_peak(pot, mu, window)?;
    if peak.height <= l2 {
        return Ok(None);
    }
    let g = |x: f64| barrier(pot, mu, x) - l2;
    if g(window.1) >= 0.0 {
        return Err(Error::Numerical(format!(
            "{}: allowed region extends past r = {:e}",
            pot.label(),
            window.1.exp()
        )));
    }
    let outer = log_root(g, peak.ln_r, window.1);
    let inner = if lambda == 0.0 {
        0.0
    } else {
        log_root(g, window.0, peak.ln_r)
    };
    Ok(Some(TurningPoints { inner, outer }))
}

/// `∫ F(r)_+^{power} dr` over the allowed interval, `F = Φ − λ²/r² − μ`.
///
/// The interval is cut into an inner piece with `r = r₋ + t²`, an outer
/// piece with `r = r₊ − t²` and a middle piece integrated in `ln r`; for an
/// unbounded outer end the middle piece runs to where `F^{1/2}` is negligible
/// and the power-law remainder is added analytically.
fn allowed_integral(
    pot: &dyn RadialPotential,
    lambda: f64,
    mu: f64,
    power: f64,
    tp: TurningPoints,
) -> f64 {
    let l2 = lambda * lambda;
    let integrand = |r: f64| -> f64 {
        let f = pot.value(r) - l2 / (r * r) - mu;
        if f > 0.0 {
            f.powf(power)
        } else {
            0.0
        }
    };
    let quad = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        integrate_with_budget(f, a, b, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_BUDGET).value
    };
    let (r_lo, r_hi) = (tp.inner, tp.outer);

    let inner_piece = |a: f64, b: f64| -> f64 {
        let f = |t: f64| 2.0 * t * integrand(a + t * t);
        quad(&f, 0.0, (b - a).sqrt())
    };
    let outer_piece = |a: f64, b: f64| -> f64 {
        let f = |t: f64| 2.0 * t * integrand(b - t * t);
        quad(&f, 0.0, (b - a).sqrt())
    };
    let log_piece = |a: f64, b: f64| -> f64 {
        let f = |x: f64| {
            let r = x.exp();
            r * integrand(r)
        };
        quad(&f, a.ln(), b.ln())
    };

    if r_hi.is_infinite() {
        let l = pot.length_scale();
        let a = 1e-3 * l;
        let origin = inner_piece(0.0, a);
        // Beyond r_cut the integrand follows the power-law decay.
        let mut r_cut = 10.0 * l;
        while integrand(r_cut).powf(0.5 / power) > 1e-14 && r_cut < 1e30 * l {
            r_cut *= 2.0;
        }
        let middle = log_piece(a, r_cut);
        let decay = power * pot.decay_exponent();
        let remainder = integrand(r_cut) * r_cut / (decay - 1.0);
        return origin + middle + remainder;
    }

    if r_lo == 0.0 {
        let a = (1e-3 * pot.length_scale()).min(0.25 * r_hi);
        let b = 0.5 * r_hi;
        return inner_piece(0.0, a) + log_piece(a, b) + outer_piece(b, r_hi);
    }
    if r_hi < 4.0 * r_lo {
        let m = 0.5 * (r_lo + r_hi);
        return inner_piece(r_lo, m) + outer_piece(m, r_hi);
    }
    let a = 2.0 * r_lo;
    let b = 0.5 * r_hi;
    inner_piece(r_lo, a) + log_piece(a, b) + outer_piece(b, r_hi)
}

/// Semiclassical counting function `n(λ, μ)`.
pub fn counting_n(pot: &dyn RadialPotential, lambda: f64, mu: f64) -> Result<f64> {
    check_potential(pot)?;
    match turning_points(pot, lambda, mu)? {
        None => Ok(0.0),
        Some(tp) => Ok(allowed_integral(pot, lambda, mu, 0.5, tp) / PI),
    }
}

/// Grand-canonical energy `e_G(λ, μ) ≤ 0`. Requires `λ > 0`: at `λ = 0` the
/// `r^{-3/2}` origin behaviour of the integrand is not integrable.
pub fn e_g(pot: &dyn RadialPotential, lambda: f64, mu: f64) -> Result<f64> {
    check_potential(pot)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "e_G needs lambda > 0 (integrand not integrable at the origin), got {lambda}"
        )));
    }
    match turning_points(pot, lambda, mu)? {
        None => Ok(0.0),
        Some(tp) => Ok(-2.0 / (3.0 * PI) * allowed_integral(pot, lambda, mu, 1.5, tp)),
    }
}

pub fn semiclassical_point(
    pot: &dyn RadialPotential,
    lambda: f64,
    mu: f64,
) -> Result<SemiclassicalPoint> {
    Ok(SemiclassicalPoint {
        lambda,
        mu,
        e_g: e_g(pot, lambda, mu)?,
        n: counting_n(pot, lambda, mu)?,
    })
}

/// Thomas-Fermi angular distribution `κ(λ)`.
///
/// Computed independently of [`counting_n`]: for `λ > 0` the whole interval
/// is mapped by `r = r₋ + (r₊ − r₋)(1 − cos θ)/2`, and for `λ = 0` the half
/// line is mapped by `r = L τ²/(1 − τ)²`, both of which absorb the endpoint
/// behaviour without truncation.
pub fn kappa(pot: &dyn RadialPotential, lambda: f64) -> Result<f64> {
    check_potential(pot)?;
    let Some(tp) = turning_points(pot, lambda, 0.0)? else {
        return Ok(0.0);
    };
    let l2 = lambda * lambda;
    let root = |r: f64| {
        let f = pot.value(r) - l2 / (r * r);
        if f > 0.0 {
            f.sqrt()
        } else {
            0.0
        }
    };
    let value = if lambda == 0.0 {
        let l = pot.length_scale();
        let f = |tau: f64| {
            if tau >= 1.0 {
                return 0.0;
            }
            let q = 1.0 - tau;
            let r = l * tau * tau / (q * q);
            if r == 0.0 {
                // r → 0: 2Lτ/(1−τ)³ · (L τ²)^{-1/2} · √(rΦ) → 2√(L·origin)
                return 2.0 * (l * pot.origin_limit()).sqrt();
            }
            root(r) * 2.0 * l * tau / (q * q * q)
        };
        integrate_with_budget(f, 0.0, 1.0, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_BUDGET).value
    } else {
        let (a, b) = (tp.inner, tp.outer);
        let half = 0.5 * (b - a);
        let f = |theta: f64| {
            let r = a + half * (1.0 - theta.cos());
            root(r) * half * theta.sin()
        };
        integrate_with_budget(f, 0.0, PI, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_BUDGET).value
    };
    Ok(value / PI)
}

/// Canonical energy `e(λ, n) = max_{μ≥0} (e_G(λ, μ) − μ n)` and its maximiser.
pub fn canonical_e(
    pot: &dyn RadialPotential,
    lambda: f64,
    n_target: f64,
) -> Result<CanonicalResult> {
    check_potential(pot)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    if !(n_target >= 0.0 && n_target.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "n must be >= 0, got {n_target}"
        )));
    }
    let n0 = counting_n(pot, lambda, 0.0)?;
    if n_target >= n0 {
        return Ok(CanonicalResult {
            lambda,
            n_target,
            mu_star: 0.0,
            e: e_g(pot, lambda, 0.0)?,
        });
    }
    let top = barrier_top(pot, lambda)?;
    if n_target == 0.0 {
        return Ok(CanonicalResult {
            lambda,
            n_target,
            mu_star: top,
            e: 0.0,
        });
    }
    // n(λ, ·) decreases strictly from n0 at μ = 0 to 0 at the barrier top.
    let (mut lo, mut hi) = (0.0, top);
    if counting_n(pot, lambda, hi)? > n_target {
        return Err(Error::Numerical(format!(
            "chemical potential not bracketed in [0, {top}] for n = {n_target}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * top || mid <= lo || mid >= hi {
            break;
        }
        if counting_n(pot, lambda, mid)? > n_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu_star = 0.5 * (lo + hi);
    Ok(CanonicalResult {
        lambda,
        n_target,
        mu_star,
        e: e_g(pot, lambda, mu_star)? - mu_star * n_target,
    })
}

/// `κ` tabulated on `steps + 1` uniform points of `[lambda_min, lambda_max_hint]`,
/// with values at or beyond the support edge set to zero.
pub fn kappa_table(
    pot: &dyn RadialPotential,
    lambda_min: f64,
    lambda_max_hint: f64,
    steps: usize,
) -> Result<AngularDistribution> {
    if steps < 2 {
        return Err(Error::InvalidArgument(
            "kappa table needs steps >= 2".into(),
        ));
    }
    if !(lambda_min >= 0.0 && lambda_max_hint > lambda_min) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= lambda_min < lambda_max (got {lambda_min}, {lambda_max_hint})"
        )));
    }
    let edge = lambda_max(pot)?;
    let h = (lambda_max_hint - lambda_min) / steps as f64;
    let mut lambda_grid = Vec::with_capacity(steps + 1);
    let mut kappa_values = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let lambda = if i == steps {
            lambda_max_hint
        } else {
            lambda_min + h * i as f64
        };
        lambda_grid.push(lambda);
        kappa_values.push(if lambda >= edge {
            0.0
        } else {
            kappa(pot, lambda)?
        });
    }
    Ok(AngularDistribution {
        lambda_grid,
        kappa_values,
        lambda_max: edge,
    })
}

/// `∫₀^∞ 4λ κ(λ) dλ` by adaptive quadrature up to the support edge.
pub fn kappa_normalization(pot: &dyn RadialPotential) -> Result<f64> {
    let edge = lambda_max(pot)?;
    let failure = std::cell::RefCell::new(None);
    let f = |lambda: f64| match kappa(pot, lambda) {
        Ok(k) => 4.0 * lambda * k,
        Err(e) => {
            failure.borrow_mut().get_or_insert_with(|| e.to_string());
            0.0
        }
    };
    let value = integrate_with_budget(f, 0.0, edge, 1e-10, 1e-10, 400).value;
    match failure.into_inner() {
        Some(msg) => Err(Error::Numerical(msg)),
        None => Ok(value),
    }
}

/// Fermi's shell count `N_ℓ = 4ℓ Z^{1/3} κ(ℓ/Z^{1/3})`.
pub fn fermi_shell_count(pot: &dyn RadialPotential, z: f64, ell: u32) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidArgument(format!("z must be > 0, got {z}")));
    }
    if ell == 0 {
        return Ok(0.0);
    }
    let zc = z.cbrt();
    Ok(4.0 * ell as f64 * zc * kappa(pot, ell as f64 / zc)?)
}
