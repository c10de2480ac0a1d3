//! Sturm node counting for `h_ℓ = −d²/dr² − Φ(r) + ℓ(ℓ+1)/r²` on the half line.
//!
//! With `r = eᵗ` and `u = e^{t/2} w` the radial equation becomes
//! `w'' = [(ℓ+½)² − r²(Φ(r) + E)] w`, which is integrated outwards with
//! Numerov's method on a uniform `t` grid starting from the regular branch
//! `w ~ e^{(ℓ+½)t}`. The number of sign changes of the regular solution
//! equals the number of eigenvalues below `E`.
//!
//! Integration stops as soon as the solution is provably node-free for the
//! rest of the half line: beyond the maximum of `r²(Φ + E)` the coefficient
//! `Q(t)` only grows, and once the Numerov variable `y = (1 − h²Q/12) w`
//! increases in magnitude there it can never return to zero.

use crate::error::{Error, Result};
use crate::potentials::RadialPotential;

const RENORM: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub r_min: f64,
    pub r_box: f64,
    /// Target for `k_max · h`, with `k_max² = max r²Φ` over the box.
    pub step_factor: f64,
    pub max_step: f64,
    /// Fixed `ln r` step; overrides the estimate from `step_factor`.
    pub step: Option<f64>,
}

impl GridSettings {
    pub fn new(r_min: f64, r_box: f64) -> Self {
        Self {
            r_min,
            r_box,
            step_factor: 0.08,
            max_step: 0.02,
            step: None,
        }
    }

    pub fn with_step_factor(mut self, step_factor: f64) -> Self {
        self.step_factor = step_factor;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }
}

/// `r²Φ(r)` tabulated on a logarithmic grid.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    settings: GridSettings,
    step: f64,
    r2: Vec<f64>,
    v: Vec<f64>,
    v_max: f64,
    /// `max r Φ(r)`: bounds the spectrum from below by `−(max rΦ)²/4`.
    origin_bound: f64,
}

impl RadialProblem {
    pub fn new(pot: &dyn RadialPotential, settings: GridSettings) -> Result<Self> {
        Self::from_fn(|r| pot.value(r), settings)
    }

    /// Builds the table from any positive `Φ(r)`.
    pub fn from_fn(phi: impl Fn(f64) -> f64, settings: GridSettings) -> Result<Self> {
        let GridSettings {
            r_min,
            r_box,
            step_factor,
            max_step,
            step: fixed_step,
        } = settings;
        if !(r_min > 0.0 && r_box > r_min)
            || !(step_factor > 0.0 && max_step > 0.0)
            || fixed_step.is_some_and(|h| !(h > 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "bad radial grid: r_min {r_min}, r_box {r_box}, step factor {step_factor}"
            )));
        }
        let span = (r_box / r_min).ln();
        let step = match fixed_step {
            Some(h) => h,
            None => {
                // estimate the largest local wavenumber on a coarse pass
                let v_coarse = (0..=400)
                    .map(|i| {
                        let r = r_min * (span * i as f64 / 400.0).exp();
                        r * r * phi(r)
                    })
                    .fold(0.0f64, f64::max);
                (step_factor / v_coarse.max(1.0).sqrt()).min(max_step)
            }
        };
        // the box is rounded up to a whole number of steps, so grids with the
        // same r_min and step share their nodes
        let n = ((span / step).ceil() as usize + 1).max(3);
        let mut r2 = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        let mut origin_bound: f64 = 0.0;
        for i in 0..n {
            let r = r_min * (step * i as f64).exp();
            let p = phi(r);
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Numerical(format!(
                    "potential not positive at r = {r:e}: {p}"
                )));
            }
            r2.push(r * r);
            v.push(r * r * p);
            origin_bound = origin_bound.max(r * p);
        }
        let v_max = v.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            settings,
            step,
            r2,
            v,
            v_max,
            origin_bound,
        })
    }

    pub fn settings(&self) -> &GridSettings {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Outermost grid radius (at least the requested box).
    pub fn r_box(&self) -> f64 {
        self.r2.last().map_or(self.settings.r_box, |r2| r2.sqrt())
    }

    /// Lower bound for the spectrum of every channel.
    pub fn spectrum_floor(&self) -> f64 {
        -0.25 * self.origin_bound * self.origin_bound * (1.0 + 1e-9) - f64::MIN_POSITIVE
    }

    /// True when `ℓ(ℓ+1)/r² − Φ ≥ 0` everywhere on the grid (in the Langer
    /// form used here), so the channel has no bound states at all.
    pub fn channel_is_empty(&self, ell: u32) -> bool {
        let l = ell as f64 + 0.5;
        self.v_max <= l * l
    }

    /// Number of eigenvalues of `h_ℓ` strictly below `energy ≤ 0`.
    pub fn count_below(&self, ell: u32, energy: f64) -> Result<usize> {
        if !(energy <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "node counting needs energy <= 0, got {energy}"
            )));
        }
        if self.channel_is_empty(ell) {
            return Ok(0);
        }
        let l = ell as f64 + 0.5;
        let l2 = l * l;
        let c = self.step * self.step / 12.0;
        let n = self.v.len();
        let q = |i: usize| l2 - self.v[i] - self.r2[i] * energy;

        let q0 = q(0);
        let f_prev = 1.0 - c * q0;
        let q1 = q(1);
        let mut f_cur = 1.0 - c * q1;
        let mut y_prev = f_prev;
        let mut y_cur = f_cur * (q0.max(0.0).sqrt() * self.step).exp();
        let mut q_prev = q1;
        let mut nodes = 0usize;

        for i in 1..n - 1 {
            let q_next = q(i + 1);
            let f_next = 1.0 - c * q_next;
            if f_next <= 0.0 {
                return Err(Error::Numerical(format!(
                    "Numerov step too coarse at grid index {i} (ell {ell}, energy {energy:e})"
                )));
            }
            let y_next = (12.0 - 10.0 * f_cur) / f_cur * y_cur - y_prev;
            if (y_cur > 0.0 && y_next <= 0.0) || (y_cur < 0.0 && y_next >= 0.0) {
                nodes += 1;
            }
            y_prev = y_cur;
            y_cur = y_next;
            f_cur = f_next;
            if y_cur.abs() > RENORM {
                y_prev /= RENORM;
                y_cur /= RENORM;
            }
            // past the peak of r²(Φ + E), forbidden, and growing: done
            if q_next > 0.0 && q_next > q_prev && y_cur * y_prev > 0.0 && y_cur.abs() > y_prev.abs()
            {
                return Ok(nodes);
            }
            q_prev = q_next;
        }
        Err(Error::BoxTooSmall {
            r_box: self.r_box(),
            energy,
            ell,
        })
    }

    /// Energy of the state with `radial_index` nodes, by bisection on the
    /// node count to relative width `rel_tol`.
    pub fn eigenvalue(&self, ell: u32, radial_index: usize, rel_tol: f64) -> Result<f64> {
        let lo = self.spectrum_floor();
        let mut hi = lo;
        // walk towards zero until the state is below the ceiling
        let mut available = 0;
        for _ in 0..200 {
            hi *= 0.5;
            available = self.count_below(ell, hi)?;
            if available > radial_index {
                return self.refine(ell, radial_index, lo, hi, rel_tol);
            }
            if hi > -1e-300 {
                break;
            }
        }
        Err(Error::StateNotFound {
            ell,
            radial_index,
            available,
        })
    }

    /// Bisection for the eigenvalue with `k` nodes inside `(lo, hi)` where
    /// `count(lo) ≤ k < count(hi)`.
    pub(crate) fn refine(
        &self,
        ell: u32,
        k: usize,
        mut lo: f64,
        mut hi: f64,
        rel_tol: f64,
    ) -> Result<f64> {
        for _ in 0..400 {
            if (hi - lo).abs() <= rel_tol * hi.abs().min(lo.abs()) {
                break;
            }
            let mid = midpoint(lo, hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(ell, mid)? > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(midpoint(lo, hi))
    }

    /// All eigenvalues of channel `ell` below `ceiling < 0`, ascending.
    pub fn eigenvalues_below(&self, ell: u32, ceiling: f64, rel_tol: f64) -> Result<Vec<f64>> {
        let lo = self.spectrum_floor();
        if ceiling <= lo {
            return Ok(Vec::new());
        }
        let total = self.count_below(ell, ceiling)?;
        let mut out = Vec::with_capacity(total);
        // (lo, hi, count(lo), count(hi)) intervals to split, lowest energies first
        let mut stack = vec![(lo, ceiling, 0usize, total)];
        while let Some((a, b, ca, cb)) = stack.pop() {
            if cb == ca {
                continue;
            }
            if cb - ca == 1 {
                out.push(self.refine(ell, ca, a, b, rel_tol)?);
                continue;
            }
            let m = midpoint(a, b);
            if m <= a || m >= b || (b - a).abs() <= rel_tol * b.abs() {
                // unresolved cluster: report it as degenerate
                let e = midpoint(a, b);
                out.extend(std::iter::repeat_n(e, cb - ca));
                continue;
            }
            let cm = self.count_below(ell, m)?;
            stack.push((m, b, cm, cb));
            stack.push((a, m, ca, cm));
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

/// Midpoint of two negative energies; geometric when they differ by more
/// than a factor two so that deep and shallow states are resolved alike.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    if a < 0.0 && b < 0.0 && (a / b > 2.0 || b / a > 2.0) {
        -(a * b).sqrt()
    } else {
        0.5 * (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::CoulombPotential;

    fn coulomb(c: f64) -> RadialProblem {
        let pot = CoulombPotential { charge: c };
        RadialProblem::new(&pot, GridSettings::new(1e-8 / c, 600.0 / c)).unwrap()
    }

    #[test]
    fn hydrogen_counts() {
        // eigenvalues −c²/(4ν²), ν = k + ℓ + 1
        let p = coulomb(1.0);
        for ell in 0..3u32 {
            for k in 0..4usize {
                let nu = (k as u32 + ell + 1) as f64;
                let e = -1.0 / (4.0 * nu * nu);
                assert_eq!(p.count_below(ell, e * 1.001).unwrap(), k);
                assert_eq!(p.count_below(ell, e * 0.999).unwrap(), k + 1);
            }
        }
    }

    #[test]
    fn ground_state_energy() {
        let p = coulomb(2.0);
        let e = p.eigenvalue(0, 0, 1e-13).unwrap();
        assert!((e / -1.0 - 1.0).abs() < 1e-8, "{e}");
    }

    #[test]
    fn shallow_energy_needs_bigger_box() {
        let p = coulomb(1.0);
        assert!(matches!(
            p.count_below(0, -1e-3),
            Err(Error::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn fixed_step_grids_share_nodes() {
        let pot = CoulombPotential { charge: 1.0 };
        let g = GridSettings::new(1e-6, 50.0).with_step(0.01);
        let a = RadialProblem::new(&pot, g).unwrap();
        let b = RadialProblem::new(&pot, GridSettings { r_box: 500.0, ..g }).unwrap();
        assert!(a.r_box() >= 50.0 && b.r_box() >= 500.0);
        assert_eq!(a.v[..], b.v[..a.len()]);
    }

    #[test]
    fn positive_energy_rejected() {
        assert!(coulomb(1.0).count_below(0, 0.1).is_err());
    }

    #[test]
    fn count_monotone_in_energy() {
        let p = coulomb(1.0);
        let mut last = 0;
        for i in 0..35 {
            let e = -0.3 * 0.9f64.powi(i);
            let c = p.count_below(1, e).unwrap();
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn enumeration_matches_individual_states() {
        let p = coulomb(1.0);
        let all = p
            .eigenvalues_below(1, -1.0 / (4.0 * 36.0) * 0.99, 1e-12)
            .unwrap();
        assert_eq!(all.len(), 5);
        for (k, e) in all.iter().enumerate() {
            let single = p.eigenvalue(1, k, 1e-12).unwrap();
            assert!((e / single - 1.0).abs() < 1e-11);
        }
    }
}
