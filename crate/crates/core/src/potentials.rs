//! Spherically symmetric potentials `Φ(r) > 0` used by the semiclassical and
//! spectral code.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tf_solver::TfSolution;

/// A positive, spherically symmetric potential with known behaviour at the
/// origin (`r Φ(r) → origin_limit`) and at infinity (`Φ ~ r^{-decay_exponent}`).
pub trait RadialPotential: Send + Sync + fmt::Debug {
    fn value(&self, r: f64) -> f64;

    fn origin_limit(&self) -> f64;

    fn decay_exponent(&self) -> f64;

    /// Radius on which the potential varies; used to place search brackets.
    fn length_scale(&self) -> f64;

    fn label(&self) -> String;
}

/// Scaled Thomas-Fermi potential `Φ_Z(r) = Z^{4/3} Φ₁(Z^{1/3} r)`.
#[derive(Debug, Clone)]
pub struct TfPotential {
    solution: Arc<TfSolution>,
    charge: f64,
}

impl TfPotential {
    pub fn new(solution: Arc<TfSolution>, charge: f64) -> Self {
        Self { solution, charge }
    }

    pub fn unit(solution: Arc<TfSolution>) -> Self {
        Self::new(solution, 1.0)
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn solution(&self) -> &Arc<TfSolution> {
        &self.solution
    }
}

impl RadialPotential for TfPotential {
    fn value(&self, r: f64) -> f64 {
        self.solution.phi_z(self.charge, r)
    }

    fn origin_limit(&self) -> f64 {
        self.charge
    }

    fn decay_exponent(&self) -> f64 {
        4.0
    }

    fn length_scale(&self) -> f64 {
        self.charge.cbrt().recip()
    }

    fn label(&self) -> String {
        format!("thomas-fermi(Z={})", self.charge)
    }
}

/// Bare nucleus `c/r`. Only meant as an exactly solvable spectral reference.
#[derive(Debug, Clone, Copy)]
pub struct CoulombPotential {
    pub charge: f64,
}

impl RadialPotential for CoulombPotential {
    fn value(&self, r: f64) -> f64 {
        self.charge / r
    }

    fn origin_limit(&self) -> f64 {
        self.charge
    }

    fn decay_exponent(&self) -> f64 {
        1.0
    }

    fn length_scale(&self) -> f64 {
        1.0 / self.charge
    }

    fn label(&self) -> String {
        format!("coulomb(c={})", self.charge)
    }
}

/// Tietz form `Z / (r (1 + s Z^{1/3} r)²)`, a closed-form fit of the
/// Thomas-Fermi screening function. With `s = 6^{-2/3}` its angular
/// distribution is exactly `[6^{1/3} − 2λ]_+`.
#[derive(Debug, Clone, Copy)]
pub struct TietzPotential {
    pub charge: f64,
    pub shape: f64,
}

impl TietzPotential {
    pub fn madelung_shape() -> f64 {
        6f64.powf(-2.0 / 3.0)
    }
}

impl RadialPotential for TietzPotential {
    fn value(&self, r: f64) -> f64 {
        let q = 1.0 + self.shape * self.charge.cbrt() * r;
        self.charge / (r * q * q)
    }

    fn origin_limit(&self) -> f64 {
        self.charge
    }

    fn decay_exponent(&self) -> f64 {
        3.0
    }

    fn length_scale(&self) -> f64 {
        self.charge.cbrt().recip()
    }

    fn label(&self) -> String {
        format!("tietz(Z={}, s={})", self.charge, self.shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Tf,
    Coulomb,
    Tietz,
}

impl FromStr for PotentialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tf" | "thomas-fermi" => Ok(PotentialKind::Tf),
            "coulomb" => Ok(PotentialKind::Coulomb),
            "tietz" => Ok(PotentialKind::Tietz),
            other => Err(Error::Config(format!("unknown potential kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub parameters: BTreeMap<String, f64>,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind) -> Self {
        Self {
            kind,
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn tf(charge: f64) -> Self {
        Self::new(PotentialKind::Tf).with("charge", charge)
    }

    pub fn coulomb(charge: f64) -> Self {
        Self::new(PotentialKind::Coulomb).with("charge", charge)
    }

    pub fn tietz(charge: f64, shape: f64) -> Self {
        Self::new(PotentialKind::Tietz)
            .with("charge", charge)
            .with("shape", shape)
    }

    fn require(&self, key: &str) -> Result<f64> {
        let v = *self.parameters.get(key).ok_or_else(|| {
            Error::Config(format!("{:?} potential needs parameter '{key}'", self.kind))
        })?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!(
                "parameter '{key}' must be positive, got {v}"
            )));
        }
        Ok(v)
    }
}

pub fn make_potential(
    spec: &PotentialSpec,
    solution: Option<Arc<TfSolution>>,
) -> Result<Arc<dyn RadialPotential>> {
    let charge = spec.require("charge")?;
    Ok(match spec.kind {
        PotentialKind::Tf => {
            let sol = solution.ok_or_else(|| {
                Error::Config("thomas-fermi potential needs a solved screening function".into())
            })?;
            Arc::new(TfPotential::new(sol, charge))
        }
        PotentialKind::Coulomb => Arc::new(CoulombPotential { charge }),
        PotentialKind::Tietz => Arc::new(TietzPotential {
            charge,
            shape: spec.require("shape")?,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf_solver::solve_tf;

    #[test]
    fn coulomb_is_exact() {
        let p = make_potential(&PotentialSpec::coulomb(3.0), None).unwrap();
        for r in [1e-6, 0.3, 2.0, 1e4] {
            assert!((r * p.value(r) - 3.0).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn tf_delegates_to_solution() {
        let sol = Arc::new(solve_tf(1e-10, 400.0, 1000).unwrap());
        let p = make_potential(&PotentialSpec::tf(1.0), Some(sol.clone())).unwrap();
        for r in [1e-9, 0.01, 1.0, 50.0, 5000.0] {
            assert_eq!(p.value(r).to_bits(), sol.phi1(r).to_bits());
        }
        assert!(matches!(
            make_potential(&PotentialSpec::tf(1.0), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn missing_parameters_are_configuration_errors() {
        let spec = PotentialSpec::new(PotentialKind::Tietz).with("charge", 1.0);
        assert!(matches!(make_potential(&spec, None), Err(Error::Config(_))));
        let spec = PotentialSpec::new(PotentialKind::Coulomb).with("charge", -1.0);
        assert!(matches!(make_potential(&spec, None), Err(Error::Config(_))));
        assert!("yukawa".parse::<PotentialKind>().is_err());
    }

    #[test]
    fn constructed_potentials_are_positive_with_origin_limit() {
        let sol = Arc::new(solve_tf(1e-10, 400.0, 1000).unwrap());
        let specs = [
            PotentialSpec::tf(1.0),
            PotentialSpec::tf(50.0),
            PotentialSpec::coulomb(2.0),
            PotentialSpec::tietz(1.0, TietzPotential::madelung_shape()),
        ];
        for spec in &specs {
            let p = make_potential(spec, Some(sol.clone())).unwrap();
            let l = p.length_scale();
            for k in -8..8 {
                let r = l * 10f64.powi(k);
                assert!(p.value(r) > 0.0, "{} at {r}", p.label());
            }
            let r0 = 1e-9 * l;
            assert!((r0 * p.value(r0) / p.origin_limit() - 1.0).abs() < 1e-3);
        }
    }
}
