#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use tf_angular::quadrature::integrate_with_budget;
use tf_angular::{solve_tf, TfSolution};

pub fn solution() -> Arc<TfSolution> {
    static SOL: OnceLock<Arc<TfSolution>> = OnceLock::new();
    SOL.get_or_init(|| Arc::new(solve_tf(1e-12, 400.0, 4000).expect("TF solve")))
        .clone()
}

/// Initial slope of the TF screening function by plain shooting.
///
/// With `x = t²` the equation `y'' = y^{3/2}/√x` becomes the smooth system
/// `dy/dt = 2t p`, `dp/dt = 2 y^{3/2}`, integrated with classical RK4 at a
/// fixed step. A trial slope is too steep if `y` reaches zero and too
/// shallow if `p` turns positive.
pub fn shooting_slope(step: f64, t_max: f64) -> f64 {
    let rhs = |t: f64, y: f64, p: f64| (2.0 * t * p, 2.0 * y.max(0.0).powf(1.5));
    let too_steep = |b: f64| -> Option<bool> {
        let (mut t, mut y, mut p) = (0.0, 1.0, -b);
        while t < t_max {
            let h = step;
            let (k1y, k1p) = rhs(t, y, p);
            let (k2y, k2p) = rhs(t + h / 2.0, y + h / 2.0 * k1y, p + h / 2.0 * k1p);
            let (k3y, k3p) = rhs(t + h / 2.0, y + h / 2.0 * k2y, p + h / 2.0 * k2p);
            let (k4y, k4p) = rhs(t + h, y + h * k3y, p + h * k3p);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            t += h;
            if y <= 0.0 {
                return Some(true);
            }
            if p > 0.0 {
                return Some(false);
            }
        }
        None
    };
    let (mut lo, mut hi) = (1.5, 1.7);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match too_steep(mid) {
            Some(true) => hi = mid,
            Some(false) => lo = mid,
            None => break,
        }
    }
    0.5 * (lo + hi)
}

/// `4π ∫ r² ρ₁ dr` over `(0, ∞)`: quadrature in `ln r` up to `r_cut` plus the
/// tail of the asymptotic density `ρ₁ ≈ (C/r⁴)^{3/2}/(3π²)`.
pub fn total_charge(sol: &TfSolution, r_cut: f64) -> f64 {
    let f = |u: f64| {
        let r = u.exp();
        4.0 * PI * r * r * r * sol.rho1(r)
    };
    let inner = integrate_with_budget(f, (1e-12f64).ln(), r_cut.ln(), 1e-12, 1e-12, 4000).value;
    let c = sol.far_field_constant();
    let tail = 4.0 * PI / (3.0 * PI * PI) * c.powf(1.5) / (3.0 * r_cut.powi(3));
    inner + tail
}

/// First electron of every subshell with `n + 2ℓ ≤ limit`, by walking the
/// `(ℓ, principal)` pairs in `(principal + ℓ, principal)` order and adding up
/// capacities.
pub fn aufbau_starts(limit: u32) -> BTreeMap<(u32, u32), u64> {
    let mut shells = Vec::new();
    for principal in 1..=limit + 2 {
        for ell in 0..principal {
            shells.push((principal + ell, principal, ell));
        }
    }
    shells.sort();
    let mut seen = BTreeMap::<u32, u32>::new();
    let mut electron = 1u64;
    let mut out = BTreeMap::new();
    for (_, _, ell) in shells {
        let n = seen.entry(ell).or_insert(0);
        *n += 1;
        if *n + 2 * ell <= limit {
            out.insert((ell, *n), electron);
        }
        electron += 2 * (2 * ell as u64 + 1);
    }
    out
}
