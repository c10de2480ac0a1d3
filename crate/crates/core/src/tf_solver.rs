//! Neutral-atom Thomas-Fermi screening function.
//!
//! With `Φ₁(r) = y(r/a)/r` and `a = (3π/4)^{2/3}` the Poisson equation for the
//! neutral Thomas-Fermi atom of unit charge becomes
//!
//! ```text
//! y''(x) = y(x)^{3/2} / √x,   y(0) = 1,   y(∞) = 0.
//! ```
//!
//! The initial slope `-y'(0)` is found by shooting from a Baker series start.
//! The forward solution is only trusted up to a join point; beyond it the
//! solution is obtained by integrating inwards from the exact asymptotic family
//! `y = 144 x⁻³ S(F x^{-σ})`, which is stable in that direction, with the
//! amplitude `F` fixed by continuity at the join.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Advance, Dopri5, State};

/// Cache schema version written by [`save_solution`].
pub const SCHEMA_VERSION: u32 = 1;

/// Sommerfeld's exact power solution `y = 144/x³`.
pub const SOMMERFELD_COEFFICIENT: f64 = 144.0;

/// Length scale `a = (3π/4)^{2/3}` relating `r = a·x`.
pub fn length_scale() -> f64 {
    (3.0 * PI / 4.0).powf(2.0 / 3.0)
}

/// Decay exponent of the leading correction to the Sommerfeld tail,
/// the positive root of `σ² + 7σ − 6 = 0`.
pub fn tail_exponent() -> f64 {
    (73f64.sqrt() - 7.0) / 2.0
}

const TAIL_TERMS: usize = 40;
const SHOOT_BRACKET: (f64, f64) = (1.5, 1.7);
const SHOOT_BUDGET: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative tolerance of the adaptive integrator.
    pub tolerance: f64,
    /// Series start of the integration.
    pub x_start: f64,
    /// End of the tabulated grid; the analytic tail is used beyond it.
    pub x_max: f64,
    pub grid_points: usize,
    /// Seam between the forward shooting solution and the inward tail solution.
    pub join_x: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            x_start: 1e-6,
            x_max: 400.0,
            grid_points: 4000,
            join_x: 10.0,
        }
    }
}

/// Solved screening function tabulated on a logarithmic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfSolution {
    pub schema_version: u32,
    pub tolerance: f64,
    pub x_grid: Vec<f64>,
    pub y_values: Vec<f64>,
    pub yprime_values: Vec<f64>,
    /// `-y'(0)`.
    pub slope_b: f64,
    pub length_scale_a: f64,
    pub join_x: f64,
    /// Beyond this abscissa the asymptotic tail series is evaluated.
    pub tail_match_x: f64,
    pub tail_coefficient: f64,
    /// Amplitude `F` of the `x^{-σ}` correction in the tail family.
    pub tail_amplitude: f64,
}

/// Power-series coefficients `s_k` of `S(w) = Σ s_k w^k` for the tail family
/// `y = 144 x⁻³ S(w)`, `w = F x^{-σ}`, normalised by `s_0 = s_1 = 1`.
///
/// Substituting into the ODE gives `D²S − 7DS + 12S = 12 S^{3/2}` with
/// `D = x d/dx`, and `D w^k = −kσ w^k`.
pub fn tail_series_coefficients(terms: usize) -> Vec<f64> {
    let sigma = tail_exponent();
    let alpha = 1.5;
    let mut s = vec![0.0; terms];
    let mut p = vec![0.0; terms];
    s[0] = 1.0;
    p[0] = 1.0;
    if terms > 1 {
        s[1] = 1.0;
        p[1] = alpha;
    }
    for n in 2..terms {
        let nf = n as f64;
        let mut rest = 0.0;
        for k in 1..n {
            rest += ((alpha + 1.0) * k as f64 - nf) * s[k] * p[n - k];
        }
        rest /= nf;
        let lhs = nf * nf * sigma * sigma + 7.0 * nf * sigma - 6.0;
        s[n] = 12.0 * rest / lhs;
        p[n] = rest + alpha * s[n];
    }
    s
}

#[derive(Debug, Clone)]
struct Tail {
    coeffs: Vec<f64>,
    sigma: f64,
    amplitude: f64,
}

impl Tail {
    fn new(amplitude: f64) -> Self {
        Self {
            coeffs: tail_series_coefficients(TAIL_TERMS),
            sigma: tail_exponent(),
            amplitude,
        }
    }

    /// `(y, y')` of the tail family at `x`.
    fn eval(&self, x: f64) -> State {
        let w = self.amplitude * x.powf(-self.sigma);
        let mut s = 0.0;
        let mut ds = 0.0;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            s = s * w + c;
            if k > 0 {
                ds = ds * w + k as f64 * c;
            }
        }
        // ds currently holds S'(w); w·S'(w) below
        let x3 = x * x * x;
        let y = SOMMERFELD_COEFFICIENT * s / x3;
        let yp = SOMMERFELD_COEFFICIENT / (x3 * x) * (-3.0 * s - self.sigma * w * ds);
        [y, yp]
    }
}

/// Baker expansion about the origin, `(y, y')`.
fn baker_series(slope: f64, x: f64) -> State {
    let sx = x.sqrt();
    let y = 1.0 - slope * x + (4.0 / 3.0) * x * sx - 0.4 * slope * x * x * sx + x * x * x / 3.0;
    let yp = -slope + 2.0 * sx - slope * x * sx + x * x;
    [y, yp]
}

fn rhs(x: f64, s: &State) -> State {
    let y = s[0].max(0.0);
    [s[1], y * y.sqrt() / x.sqrt()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    /// `y` reaches zero: initial slope too steep.
    Crosses,
    /// `y'` becomes positive: initial slope too shallow.
    TurnsUp,
    Undecided,
}

fn shoot(slope: f64, settings: &SolverSettings) -> Result<Shot> {
    let start = baker_series(slope, settings.x_start);
    let mut ode = Dopri5::new(
        rhs,
        settings.x_start,
        start,
        settings.x_start,
        settings.tolerance,
        settings.tolerance * 1e-6,
    );
    let mut verdict = Shot::Undecided;
    let cap = settings.x_max.max(400.0);
    ode.advance_to(cap, |_, s| {
        if s[0] <= 0.0 {
            verdict = Shot::Crosses;
            true
        } else if s[1] > 0.0 {
            verdict = Shot::TurnsUp;
            true
        } else {
            false
        }
    })?;
    Ok(verdict)
}

/// Bisection on the initial slope. Returns the final bracket.
fn shoot_slope(settings: &SolverSettings) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = SHOOT_BRACKET;
    if shoot(lo, settings)? != Shot::TurnsUp || shoot(hi, settings)? != Shot::Crosses {
        return Err(Error::ShootingNotConverged {
            lo,
            hi,
            iterations: 0,
        });
    }
    for _ in 0..SHOOT_BUDGET {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok((lo, hi));
        }
        match shoot(mid, settings)? {
            Shot::TurnsUp => lo = mid,
            Shot::Crosses => hi = mid,
            Shot::Undecided => return Ok((mid, mid)),
        }
    }
    Err(Error::ShootingNotConverged {
        lo,
        hi,
        iterations: SHOOT_BUDGET,
    })
}

fn log_grid(x0: f64, x1: f64, n: usize) -> Vec<f64> {
    let step = (x1 / x0).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| x0 * (step * i as f64).exp()).collect();
    grid[0] = x0;
    grid[n - 1] = x1;
    grid
}

/// Integrates inwards from `x_max` on the tail family with amplitude `f`,
/// recording `(y, y')` on the grid nodes down to `nodes[join]`.
fn inward(
    amplitude: f64,
    grid: &[f64],
    join: usize,
    tol: f64,
    record: Option<&mut Vec<State>>,
) -> Result<State> {
    let tail = Tail::new(amplitude);
    let last = grid.len() - 1;
    let mut ode = Dopri5::new(
        rhs,
        grid[last],
        tail.eval(grid[last]),
        -1e-2,
        tol,
        tol * 1e-9,
    );
    let mut out = Vec::new();
    out.push(ode.y);
    let targets: Vec<f64> = match record {
        Some(_) => grid[join..last].iter().rev().copied().collect(),
        None => vec![grid[join]],
    };
    for x in targets {
        ode.advance_to(x, |_, _| false)?;
        out.push(ode.y);
    }
    let value = ode.y;
    if let Some(buf) = record {
        out.reverse();
        *buf = out;
    }
    Ok(value)
}

/// Solves the screening problem with default grid layout.
pub fn solve_tf(tolerance: f64, x_max: f64, grid_points: usize) -> Result<TfSolution> {
    let settings = SolverSettings {
        tolerance,
        x_max,
        grid_points,
        ..SolverSettings::default()
    };
    solve_tf_with(&settings)
}

pub fn solve_tf_with(settings: &SolverSettings) -> Result<TfSolution> {
    if !(settings.tolerance > 0.0 && settings.tolerance < 1e-3) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must lie in (0, 1e-3), got {}",
            settings.tolerance
        )));
    }
    if settings.grid_points < 16 {
        return Err(Error::InvalidArgument(
            "grid_points must be at least 16".into(),
        ));
    }
    if !(settings.x_max >= 100.0)
        || !(settings.join_x > settings.x_start)
        || settings.join_x >= settings.x_max
    {
        return Err(Error::InvalidArgument(format!(
            "need x_start < join_x < x_max and x_max >= 100 (got {}, {}, {})",
            settings.x_start, settings.join_x, settings.x_max
        )));
    }

    let (lo, hi) = shoot_slope(settings)?;
    let slope = 0.5 * (lo + hi);

    let grid = log_grid(settings.x_start, settings.x_max, settings.grid_points);
    let join = grid
        .partition_point(|&x| x < settings.join_x)
        .min(grid.len() - 2);

    // Forward leg on [x_start, grid[join]].
    let mut forward = Vec::with_capacity(join + 1);
    let mut ode = Dopri5::new(
        rhs,
        grid[0],
        baker_series(slope, grid[0]),
        grid[0],
        settings.tolerance,
        settings.tolerance * 1e-6,
    );
    forward.push(ode.y);
    for &x in &grid[1..=join] {
        match ode.advance_to(x, |_, s| s[0] <= 0.0)? {
            Advance::Reached => forward.push(ode.y),
            Advance::Stopped { x } => {
                return Err(Error::Numerical(format!(
                    "forward screening solution crossed zero at x = {x}"
                )))
            }
        }
    }
    let target = forward[join][0];

    // Tail amplitude by bisection on continuity of y at the join. Larger
    // |F| lowers the whole tail, so the mismatch is monotone in F.
    let mismatch = |f: f64| -> Result<f64> {
        Ok(inward(f, &grid, join, settings.tolerance, None)?[0] - target)
    };
    let (mut f_lo, mut f_hi) = (-60.0, 0.0);
    let (m_lo, m_hi) = (mismatch(f_lo)?, mismatch(f_hi)?);
    if !(m_lo < 0.0 && m_hi > 0.0) {
        return Err(Error::Numerical(format!(
            "tail amplitude not bracketed: mismatch {m_lo:e} at F={f_lo}, {m_hi:e} at F={f_hi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (f_lo + f_hi);
        if mid <= f_lo || mid >= f_hi {
            break;
        }
        if mismatch(mid)? < 0.0 {
            f_lo = mid;
        } else {
            f_hi = mid;
        }
    }
    let amplitude = 0.5 * (f_lo + f_hi);
    let mut tail_leg = Vec::new();
    inward(
        amplitude,
        &grid,
        join,
        settings.tolerance,
        Some(&mut tail_leg),
    )?;

    let mut y_values = Vec::with_capacity(grid.len());
    let mut yprime_values = Vec::with_capacity(grid.len());
    for s in forward.iter().take(join) {
        y_values.push(s[0]);
        yprime_values.push(s[1]);
    }
    // The join node takes the inward value; y agrees there by construction.
    for s in &tail_leg {
        y_values.push(s[0]);
        yprime_values.push(s[1]);
    }
    debug_assert_eq!(y_values.len(), grid.len());

    Ok(TfSolution {
        schema_version: SCHEMA_VERSION,
        tolerance: settings.tolerance,
        slope_b: slope,
        length_scale_a: length_scale(),
        join_x: grid[join],
        tail_match_x: settings.x_max,
        tail_coefficient: SOMMERFELD_COEFFICIENT,
        tail_amplitude: amplitude,
        x_grid: grid,
        y_values,
        yprime_values,
    })
}

impl TfSolution {
    /// Screening function and its derivative at `x > 0`.
    pub fn screening(&self, x: f64) -> State {
        let n = self.x_grid.len();
        if x <= self.x_grid[0] {
            return baker_series(self.slope_b, x);
        }
        if x >= self.x_grid[n - 1] {
            return Tail::new(self.tail_amplitude).eval(x);
        }
        let i = self.x_grid.partition_point(|&g| g <= x).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.x_grid[i], self.x_grid[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.y_values[i], self.y_values[i + 1]);
        let (d0, d1) = (self.yprime_values[i] * h, self.yprime_values[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let y = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dy = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1)
            / h;
        [y, dy]
    }

    /// `Φ₁(r) = y(r/a)/r`.
    pub fn phi1(&self, r: f64) -> f64 {
        self.screening(r / self.length_scale_a)[0] / r
    }

    /// `Φ_Z(r) = Z^{4/3} Φ₁(Z^{1/3} r)`.
    pub fn phi_z(&self, z: f64, r: f64) -> f64 {
        z.powf(4.0 / 3.0) * self.phi1(z.cbrt() * r)
    }

    /// Thomas-Fermi density of the unit-charge atom, `Φ₁^{3/2}/(3π²)`.
    pub fn rho1(&self, r: f64) -> f64 {
        let phi = self.phi1(r);
        phi * phi.sqrt() / (3.0 * PI * PI)
    }

    /// Leading constant of `Φ₁(r) r⁴` as `r → ∞`.
    pub fn far_field_constant(&self) -> f64 {
        self.length_scale_a.powi(3) * self.tail_coefficient
    }
}

/// Writes the solution as JSON, atomically (temporary file then rename).
pub fn save_solution(sol: &TfSolution, path: &Path) -> Result<()> {
    let body = serde_json::to_string_pretty(sol)
        .map_err(|e| Error::Schema(format!("serialisation failed: {e}")))?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(body.as_bytes())
        .map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_solution(path: &Path) -> Result<TfSolution> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Schema("missing schema_version".into()))?;
    if version != SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion {
            found: version as u32,
            supported: SCHEMA_VERSION,
        });
    }
    let sol: TfSolution = serde_json::from_value(value)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let n = sol.x_grid.len();
    if n < 2 || sol.y_values.len() != n || sol.yprime_values.len() != n {
        return Err(Error::Schema(
            "grid and value arrays differ in length".into(),
        ));
    }
    if sol.x_grid.windows(2).any(|w| !(w[1] > w[0])) || sol.x_grid[0] <= 0.0 {
        return Err(Error::Schema(
            "x_grid must be positive and strictly ascending".into(),
        ));
    }
    Ok(sol)
}
