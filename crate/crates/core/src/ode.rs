//! Adaptive Dormand-Prince 5(4) integration for two-component first-order systems.

use crate::error::{Error, Result};

pub(crate) type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Difference between the fifth and embedded fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Result of advancing towards a target abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Advance {
    Reached,
    /// The event predicate fired after an accepted step ending at `x`.
    Stopped {
        x: f64,
    },
}

pub(crate) struct Dopri5<F> {
    rhs: F,
    pub x: f64,
    pub y: State,
    h: f64,
    rtol: f64,
    atol: f64,
    max_steps: usize,
}

impl<F> Dopri5<F>
where
    F: Fn(f64, &State) -> State,
{
    pub fn new(rhs: F, x: f64, y: State, h_init: f64, rtol: f64, atol: f64) -> Self {
        Self {
            rhs,
            x,
            y,
            h: h_init,
            rtol,
            atol,
            max_steps: 1_000_000,
        }
    }

    fn trial(&self, h: f64) -> (State, f64) {
        let f = &self.rhs;
        let (x, y) = (self.x, self.y);
        let add = |k: &[(f64, State)]| -> State {
            let mut out = y;
            for (c, kk) in k {
                out[0] += h * c * kk[0];
                out[1] += h * c * kk[1];
            }
            out
        };
        let k1 = f(x, &y);
        let k2 = f(x + C2 * h, &add(&[(A21, k1)]));
        let k3 = f(x + C3 * h, &add(&[(A31, k1), (A32, k2)]));
        let k4 = f(x + C4 * h, &add(&[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = f(
            x + C5 * h,
            &add(&[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]),
        );
        let k6 = f(
            x + h,
            &add(&[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]),
        );
        let y_new = add(&[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let k7 = f(x + h, &y_new);

        let mut err: f64 = 0.0;
        for i in 0..2 {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        (y_new, err)
    }

    /// Integrates up to `x_target` (either direction), landing exactly on it.
    /// `stop` is checked after every accepted step.
    pub fn advance_to(
        &mut self,
        x_target: f64,
        mut stop: impl FnMut(f64, &State) -> bool,
    ) -> Result<Advance> {
        let dir = (x_target - self.x).signum();
        if dir == 0.0 {
            return Ok(Advance::Reached);
        }
        self.h = self.h.abs() * dir;
        let mut steps = 0;
        while (x_target - self.x) * dir > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Numerical(format!(
                    "ODE step budget exhausted near x = {}",
                    self.x
                )));
            }
            let remaining = x_target - self.x;
            let last = self.h.abs() >= remaining.abs();
            let h = if last { remaining } else { self.h };
            let (y_new, err) = self.trial(h);
            if !err.is_finite() {
                self.h *= 0.25;
                if self.h.abs() < 1e-300 {
                    return Err(Error::Numerical("ODE step size underflow".into()));
                }
                continue;
            }
            if err <= 1.0 {
                self.x = if last { x_target } else { self.x + h };
                self.y = y_new;
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last {
                    self.h = h * grow;
                } else {
                    self.h = self.h.abs().max(h.abs() * grow) * dir;
                }
                if stop(self.x, &self.y) {
                    return Ok(Advance::Stopped { x: self.x });
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if self.h.abs() < 1e-300 {
                    return Err(Error::Numerical("ODE step size underflow".into()));
                }
            }
        }
        Ok(Advance::Reached)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let mut ode = Dopri5::new(
            |_x, y: &State| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            0.1,
            1e-12,
            1e-14,
        );
        let out = ode
            .advance_to(2.0 * std::f64::consts::PI, |_, _| false)
            .unwrap();
        assert_eq!(out, Advance::Reached);
        assert!(ode.y[0].abs() < 1e-10);
        assert!((ode.y[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn backward_integration_and_event() {
        let mut ode = Dopri5::new(
            |_x, y: &State| [y[0], 0.0],
            1.0,
            [1.0, 0.0],
            0.1,
            1e-12,
            1e-14,
        );
        ode.advance_to(0.0, |_, _| false).unwrap();
        assert!((ode.y[0] - (-1.0f64).exp()).abs() < 1e-11);

        let mut ode = Dopri5::new(
            |_x, _y: &State| [-1.0, 0.0],
            0.0,
            [1.0, 0.0],
            0.01,
            1e-12,
            1e-14,
        );
        let out = ode.advance_to(5.0, |_, y| y[0] <= 0.0).unwrap();
        match out {
            Advance::Stopped { x } => assert!((1.0..2.0).contains(&x)),
            Advance::Reached => panic!("event missed"),
        }
    }
}
