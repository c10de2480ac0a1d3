//! Radial mean-field operators `h_{ℓ,Z} = −d²/dr² − Φ_Z(r) + ℓ(ℓ+1)/r²` of
//! the neutral Thomas-Fermi atom, and the occupations obtained by putting
//! `Z` electrons into their lowest eigenstates.
//!
//! All spectral questions reduce to Sturm node counts on a log grid (see
//! [`crate::radial`]). The Fermi level is located by bisecting the
//! degeneracy-weighted count across channels, recomputing only the channels
//! whose count still changes inside the bracket.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::madelung::madelung_subshell_of_electron;
use crate::potentials::TfPotential;
use crate::radial::{midpoint, GridSettings, RadialProblem};
use crate::tf_solver::TfSolution;

/// Inner Dirichlet radius in units of `Z^{-1/3}`.
const R_MIN_SCALED: f64 = 1e-8;
/// Eigenvalues closer than this (relative) are treated as one level.
pub const TIE_TOLERANCE: f64 = 1e-10;
/// Empty channels probed past the first one before the ℓ scan stops.
const GUARD_CHANNELS: u32 = 2;
/// Fermi levels above `−THRESHOLD_SCALED·Z^{4/3}` are not resolved further.
const THRESHOLD_SCALED: f64 = 1e-14;

/// What to do when the operator has fewer than `Z` bound states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnboundPolicy {
    /// Occupy every bound state; the Fermi level sits at the threshold 0 and
    /// the remainder is reported as unbound.
    #[default]
    FillToThreshold,
    /// Fail with [`Error::InsufficientBoundStates`].
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldSettings {
    /// Radial step control, see [`GridSettings::step_factor`].
    pub step_factor: f64,
    /// Initial box radius in units of `a·Z^{-1/3}`; doubled on demand.
    pub box_scaled: f64,
    /// Relative accuracy of individual eigenvalues.
    pub rel_tol: f64,
    pub max_box_doublings: u32,
    pub unbound: UnboundPolicy,
}

impl Default for MeanFieldSettings {
    fn default() -> Self {
        Self {
            step_factor: 0.08,
            box_scaled: 60.0,
            rel_tol: 1e-12,
            max_box_doublings: 40,
            unbound: UnboundPolicy::FillToThreshold,
        }
    }
}

impl MeanFieldSettings {
    /// Same settings on a grid with half the step.
    pub fn refined(self) -> Self {
        Self {
            step_factor: 0.5 * self.step_factor,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellState {
    pub ell: u32,
    pub radial_index: usize,
    pub eigenvalue: f64,
    pub degeneracy: u64,
}

/// `N_ℓ/(2(2ℓ+1)Z^{1/3})` at `ℓ = ℓ_Z(λ)`, plus the `4λZ^{2/3}` variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiValue {
    pub lambda: f64,
    pub ell: u32,
    pub occupation: f64,
    pub chi: f64,
    pub chi_alt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationReport {
    pub z: u64,
    pub fermi_level: f64,
    /// `ℓ ↦ N_ℓ`; channels with no electrons are omitted.
    pub counts: BTreeMap<u32, f64>,
    pub chi: Vec<ChiValue>,
    /// Electrons left over when there are fewer than `z` bound states.
    pub unbound_electrons: f64,
    /// Set when the Fermi level is shared by channels within [`TIE_TOLERANCE`].
    pub tie: bool,
}

impl OccupationReport {
    pub fn total(&self) -> f64 {
        self.counts.values().sum::<f64>() + self.unbound_electrons
    }

    pub fn n_ell(&self, ell: u32) -> f64 {
        self.counts.get(&ell).copied().unwrap_or(0.0)
    }
}

/// Per-channel node counts at one energy.
#[derive(Debug, Clone, PartialEq)]
struct Counts(Vec<usize>);

impl Counts {
    fn get(&self, ell: usize) -> usize {
        self.0.get(ell).copied().unwrap_or(0)
    }

    fn electrons(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .map(|(l, &c)| degeneracy(l as u32) * c as u64)
            .sum()
    }
}

/// Bracket `(lo, hi]` holding the level of the `target`-th electron.
#[derive(Debug, Clone)]
struct FermiBracket {
    target: u64,
    lo: f64,
    hi: f64,
    below: Counts,
    above: Counts,
    /// The whole bound spectrum holds fewer than `target` electrons.
    starved: bool,
}

impl FermiBracket {
    /// Channels whose count changes inside the bracket, with the change.
    fn group(&self) -> Vec<(u32, usize)> {
        let n = self.above.0.len().max(self.below.0.len());
        (0..n)
            .filter_map(|l| {
                let d = self.above.get(l) - self.below.get(l);
                (d > 0).then_some((l as u32, d))
            })
            .collect()
    }

    fn isolated(&self) -> bool {
        let g = self.group();
        g.len() == 1 && g[0].1 == 1
    }
}

/// Which subshell the `z`-th electron of the mean-field atom enters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LastElectron {
    Shell {
        ell: u32,
        n: u32,
    },
    /// Levels of several subshells coincide within [`TIE_TOLERANCE`].
    Tie {
        shells: Vec<(u32, u32)>,
    },
    Unbound,
}

pub fn degeneracy(ell: u32) -> u64 {
    2 * (2 * ell as u64 + 1)
}

/// `ℓ_Z`: the positive integer with `(ℓ−1)Z^{-1/3} < λ ≤ ℓZ^{-1/3}`.
pub fn ell_for_lambda(lambda: f64, z: u64) -> Result<u32> {
    if !(lambda > 0.0 && lambda.is_finite()) || z == 0 {
        return Err(Error::InvalidArgument(format!(
            "need lambda > 0 and z >= 1, got lambda {lambda}, z {z}"
        )));
    }
    // decide the inequalities on λ³Z against integer cubes
    let zf = z as f64;
    let lz3 = lambda * lambda * lambda * zf;
    let mut ell = ((lambda * zf.cbrt()).ceil() as u32).max(1);
    while ell > 1 && lz3 <= ((ell - 1) as f64).powi(3) {
        ell -= 1;
    }
    while lz3 > (ell as f64).powi(3) {
        ell += 1;
    }
    Ok(ell)
}

/// The operators `h_{ℓ,Z}` for all `ℓ` at one nuclear charge.
#[derive(Debug)]
pub struct MeanFieldAtom {
    potential: TfPotential,
    z: u64,
    settings: MeanFieldSettings,
    r_min: f64,
    step: f64,
    problem: RwLock<Arc<RadialProblem>>,
}

impl MeanFieldAtom {
    pub fn new(solution: Arc<TfSolution>, z: u64) -> Result<Self> {
        Self::with_settings(solution, z, MeanFieldSettings::default())
    }

    pub fn with_settings(
        solution: Arc<TfSolution>,
        z: u64,
        settings: MeanFieldSettings,
    ) -> Result<Self> {
        if z == 0 {
            return Err(Error::InvalidArgument("z must be at least 1".into()));
        }
        if !(settings.box_scaled > 0.0 && settings.rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad mean-field settings: {settings:?}"
            )));
        }
        let zf = z as f64;
        let unit = 1.0 / zf.cbrt();
        let r_min = R_MIN_SCALED * unit;
        let r_box = settings.box_scaled * solution.length_scale_a * unit;
        let potential = TfPotential::new(solution, zf);
        let grid = GridSettings::new(r_min, r_box).with_step_factor(settings.step_factor);
        let first = RadialProblem::new(&potential, grid)?;
        Ok(Self {
            potential,
            z,
            settings,
            r_min,
            step: first.step(),
            problem: RwLock::new(Arc::new(first)),
        })
    }

    pub fn z(&self) -> u64 {
        self.z
    }

    pub fn settings(&self) -> &MeanFieldSettings {
        &self.settings
    }

    /// `Z^{4/3}`, the natural energy unit.
    pub fn energy_unit(&self) -> f64 {
        (self.z as f64).powf(4.0 / 3.0)
    }

    /// Current box radius.
    pub fn r_box(&self) -> f64 {
        self.current().r_box()
    }

    fn current(&self) -> Arc<RadialProblem> {
        self.problem
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Runs `f`, doubling the box (same `r_min` and step) while it reports
    /// that the box is too small.
    fn with_problem<T>(&self, f: impl Fn(&RadialProblem) -> Result<T>) -> Result<T> {
        let mut doublings = 0;
        loop {
            let p = self.current();
            match f(&p) {
                Err(Error::BoxTooSmall { .. }) if doublings < self.settings.max_box_doublings => {
                    doublings += 1;
                    let mut slot = self.problem.write().unwrap_or_else(|e| e.into_inner());
                    if slot.r_box() <= p.r_box() {
                        let grid =
                            GridSettings::new(self.r_min, 2.0 * p.r_box()).with_step(self.step);
                        *slot = Arc::new(RadialProblem::new(&self.potential, grid)?);
                    }
                }
                other => return other,
            }
        }
    }

    /// Number of eigenvalues of `h_{ℓ,Z}` strictly below `energy ≤ 0`.
    pub fn count_below(&self, ell: u32, energy: f64) -> Result<usize> {
        self.with_problem(|p| p.count_below(ell, energy))
    }

    /// Eigenvalue with `radial_index` nodes.
    pub fn eigenvalue(&self, ell: u32, radial_index: usize) -> Result<f64> {
        self.with_problem(|p| p.eigenvalue(ell, radial_index, self.settings.rel_tol))
    }

    /// All eigenvalues of channel `ell` below `ceiling ≤ 0`, ascending.
    pub fn eigenvalues_below(&self, ell: u32, ceiling: f64) -> Result<Vec<f64>> {
        self.with_problem(|p| p.eigenvalues_below(ell, ceiling, self.settings.rel_tol))
    }

    fn floor(&self) -> f64 {
        self.current().spectrum_floor()
    }

    /// Counts in every channel that can hold a state below `energy`: the scan
    /// stops after the first empty channel and [`GUARD_CHANNELS`] more.
    fn counts_at(&self, energy: f64) -> Result<Counts> {
        let mut out = Vec::new();
        let mut empty_run = 0;
        for ell in 0.. {
            let c = self.count_below(ell, energy)?;
            out.push(c);
            if c == 0 {
                empty_run += 1;
                if empty_run > GUARD_CHANNELS {
                    break;
                }
            } else {
                empty_run = 0;
            }
        }
        while out.last() == Some(&0) {
            out.pop();
        }
        Ok(Counts(out))
    }

    /// Per-channel numbers of bound states.
    pub fn bound_counts(&self) -> Result<BTreeMap<u32, usize>> {
        let c = self.counts_at(0.0)?;
        Ok(c.0
            .iter()
            .enumerate()
            .map(|(l, &n)| (l as u32, n))
            .collect())
    }

    /// Degeneracy-weighted number of bound states.
    pub fn bound_electrons(&self) -> Result<u64> {
        Ok(self.counts_at(0.0)?.electrons())
    }

    fn bracket(&self, target: u64) -> Result<FermiBracket> {
        let threshold = -THRESHOLD_SCALED * self.energy_unit();
        let mut lo = self.floor();
        let mut below = Counts(Vec::new());
        // walk up from the bottom of the spectrum
        let mut hi = 0.5 * lo;
        let above = loop {
            if hi > threshold {
                hi = 0.0;
            }
            let c = self.counts_at(hi)?;
            if c.electrons() >= target {
                break c;
            }
            if hi == 0.0 {
                return Ok(FermiBracket {
                    target,
                    lo: 0.0,
                    hi: 0.0,
                    below: c.clone(),
                    above: c,
                    starved: true,
                });
            }
            lo = hi;
            below = c;
            hi *= 1.0 / 64.0;
        };
        let mut b = FermiBracket {
            target,
            lo,
            hi,
            below,
            above,
            starved: false,
        };
        for _ in 0..4000 {
            if b.isolated() || (b.hi - b.lo).abs() <= TIE_TOLERANCE * b.lo.abs() {
                break;
            }
            let mid = if b.hi == 0.0 {
                0.5 * b.lo
            } else {
                midpoint(b.lo, b.hi)
            };
            if mid <= b.lo || mid >= b.hi || mid > threshold {
                break;
            }
            let mut c = b.below.clone();
            let n = b.above.0.len();
            c.0.resize(n, 0);
            for (ell, _) in b.group() {
                c.0[ell as usize] = self.count_below(ell, mid)?;
            }
            if c.electrons() >= target {
                b.hi = mid;
                b.above = c;
            } else {
                b.lo = mid;
                b.below = c;
            }
        }
        Ok(b)
    }

    fn starved_error(&self, b: &FermiBracket) -> Error {
        Error::InsufficientBoundStates {
            available: b.above.electrons() as f64,
            requested: b.target as f64,
        }
    }

    /// Level of the bracketed electron: the refined eigenvalue when a single
    /// subshell is isolated, the bracket midpoint for a tie.
    fn level(&self, b: &FermiBracket) -> Result<f64> {
        if b.starved {
            return Ok(0.0);
        }
        if b.isolated() {
            let (ell, _) = b.group()[0];
            let k = b.below.get(ell as usize);
            let (lo, hi) = (b.lo, b.hi);
            return self.with_problem(|p| p.refine(ell, k, lo, hi, self.settings.rel_tol));
        }
        Ok(midpoint(b.lo, b.hi))
    }

    /// The Fermi level and every occupied shell (including the partially
    /// filled group at the Fermi level), sorted by `(eigenvalue, ℓ, k)`.
    pub fn fermi_level(&self) -> Result<(f64, Vec<ShellState>)> {
        let b = self.bracket(self.z)?;
        if b.starved && self.settings.unbound == UnboundPolicy::Strict {
            return Err(self.starved_error(&b));
        }
        let mu = self.level(&b)?;
        let mut shells = Vec::new();
        for (l, &n) in b.above.0.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let ell = l as u32;
            let ceiling = if b.hi == 0.0 { 0.0 } else { b.hi };
            let mut levels = self.eigenvalues_below(ell, ceiling)?;
            levels.truncate(n);
            shells.extend(levels.into_iter().enumerate().map(|(k, e)| ShellState {
                ell,
                radial_index: k,
                eigenvalue: e,
                degeneracy: degeneracy(ell),
            }));
        }
        shells.sort_by(|a, b| {
            a.eigenvalue
                .total_cmp(&b.eigenvalue)
                .then(a.ell.cmp(&b.ell))
                .then(a.radial_index.cmp(&b.radial_index))
        });
        Ok((mu, shells))
    }

    /// Fills the `Z` lowest states; `lambdas` selects the reported χ values.
    pub fn occupations(&self, lambdas: &[f64]) -> Result<OccupationReport> {
        let b = self.bracket(self.z)?;
        if b.starved && self.settings.unbound == UnboundPolicy::Strict {
            return Err(self.starved_error(&b));
        }
        let mut counts = BTreeMap::new();
        for (l, &n) in b.below.0.iter().enumerate() {
            if n > 0 {
                counts.insert(l as u32, (degeneracy(l as u32) * n as u64) as f64);
            }
        }
        let filled = b.below.electrons();
        let (unbound, tie) = if b.starved {
            ((self.z - filled) as f64, false)
        } else {
            // share the remaining electrons over the group at the Fermi level
            let group = b.group();
            let rest = (self.z - filled) as f64;
            let weight: u64 = group.iter().map(|&(l, d)| degeneracy(l) * d as u64).sum();
            let mut given = 0.0;
            for (i, &(l, d)) in group.iter().enumerate() {
                let share = if i + 1 == group.len() {
                    rest - given
                } else {
                    rest * (degeneracy(l) * d as u64) as f64 / weight as f64
                };
                given += share;
                *counts.entry(l).or_insert(0.0) += share;
            }
            (0.0, group.len() > 1)
        };
        let fermi_level = self.level(&b)?;
        let mut report = OccupationReport {
            z: self.z,
            fermi_level,
            counts,
            chi: Vec::new(),
            unbound_electrons: unbound,
            tie,
        };
        for &lambda in lambdas {
            let v = chi_from_report(&report, lambda)?;
            report.chi.push(v);
        }
        Ok(report)
    }

    /// `χ(λ, Z)` from a fresh occupation run.
    pub fn chi(&self, lambda: f64) -> Result<ChiValue> {
        let report = self.occupations(&[])?;
        chi_from_report(&report, lambda)
    }

    /// `2(2ℓ+1) Σ_k [E_k + μZ^{4/3}]_−`, the degeneracy-weighted sum of the
    /// negative parts of `h_{ℓ,Z} + μZ^{4/3}`.
    pub fn trace_neg(&self, ell: u32, mu: f64) -> Result<f64> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
        }
        let shift = mu * self.energy_unit();
        let levels = self.eigenvalues_below(ell, -shift)?;
        let sum: f64 = levels.iter().map(|e| (-e - shift).max(0.0)).sum();
        Ok(degeneracy(ell) as f64 * sum)
    }

    /// Subshell `(ℓ, n = k + 1)` receiving the `Z`-th electron.
    pub fn last_electron(&self) -> Result<LastElectron> {
        let b = self.bracket(self.z)?;
        if b.starved {
            return Ok(LastElectron::Unbound);
        }
        let shells: Vec<(u32, u32)> = b
            .group()
            .into_iter()
            .flat_map(|(ell, d)| {
                let k0 = b.below.get(ell as usize) as u32;
                (0..d as u32).map(move |j| (ell, k0 + j + 1))
            })
            .collect();
        Ok(match shells[..] {
            [(ell, n)] => LastElectron::Shell { ell, n },
            _ => LastElectron::Tie { shells },
        })
    }
}

fn chi_from_report(report: &OccupationReport, lambda: f64) -> Result<ChiValue> {
    let ell = ell_for_lambda(lambda, report.z)?;
    let z = report.z as f64;
    let occupation = report.n_ell(ell);
    Ok(ChiValue {
        lambda,
        ell,
        occupation,
        chi: occupation / (degeneracy(ell) as f64 * z.cbrt()),
        chi_alt: occupation / (4.0 * lambda * z.powf(2.0 / 3.0)),
    })
}

/// Eigenvalue `ε` of the scaled operator
/// `h̃_ℓ = −Z^{-2/3} d²/ds² − Φ₁(s) + Z^{-2/3} ℓ(ℓ+1)/s²`, computed on its own
/// `s` grid; `h_{ℓ,Z}` is unitarily equivalent to `Z^{4/3} h̃_ℓ`.
pub fn scaled_eigenvalue(
    solution: &TfSolution,
    z: u64,
    ell: u32,
    radial_index: usize,
    settings: &MeanFieldSettings,
) -> Result<f64> {
    if z == 0 {
        return Err(Error::InvalidArgument("z must be at least 1".into()));
    }
    // multiplying by Z^{2/3} gives −d² − Z^{2/3}Φ₁ + ℓ(ℓ+1)/s²
    let w = (z as f64).powf(2.0 / 3.0);
    let mut r_box = settings.box_scaled * solution.length_scale_a;
    let grid = GridSettings::new(R_MIN_SCALED, r_box).with_step_factor(settings.step_factor);
    let mut p = RadialProblem::from_fn(|s| w * solution.phi1(s), grid)?;
    let step = p.step();
    for _ in 0..=settings.max_box_doublings {
        match p.eigenvalue(ell, radial_index, settings.rel_tol) {
            Err(Error::BoxTooSmall { .. }) => {
                r_box = 2.0 * p.r_box();
                let grid = GridSettings::new(R_MIN_SCALED, r_box).with_step(step);
                p = RadialProblem::from_fn(|s| w * solution.phi1(s), grid)?;
            }
            other => return other.map(|e| e / w),
        }
    }
    Err(Error::Numerical(format!(
        "scaled operator: box still too small at s = {r_box:e}"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationEntry {
    pub z: u64,
    /// `(ℓ, n)` the aufbau rule predicts for the `z`-th electron.
    pub madelung: (u32, u32),
    pub mean_field: LastElectron,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub z_max: u64,
    pub step_factor: f64,
    /// First `z` whose last electron does not enter the Madelung subshell.
    pub first_deviation: Option<u64>,
    /// First `z` whose last electron is bound but in a different subshell.
    pub first_shell_deviation: Option<u64>,
    pub mismatches: Vec<DeviationEntry>,
}

/// Compares the subshell entered by the `z`-th electron of the mean-field
/// atom with the Madelung prediction for every `z ≤ z_max`.
pub fn find_madelung_deviation(
    solution: &Arc<TfSolution>,
    z_max: u64,
    settings: &MeanFieldSettings,
) -> Result<DeviationReport> {
    if z_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "z_max must be at least 2, got {z_max}"
        )));
    }
    let mut mismatches = Vec::new();
    for z in 1..=z_max {
        let atom = MeanFieldAtom::with_settings(solution.clone(), z, *settings)?;
        let mean_field = atom.last_electron()?;
        let madelung = madelung_subshell_of_electron(z)?;
        let agrees = matches!(mean_field, LastElectron::Shell { ell, n } if (ell, n) == madelung);
        if !agrees {
            mismatches.push(DeviationEntry {
                z,
                madelung,
                mean_field,
            });
        }
    }
    Ok(DeviationReport {
        z_max,
        step_factor: settings.step_factor,
        first_deviation: mismatches.first().map(|m| m.z),
        first_shell_deviation: mismatches
            .iter()
            .find(|m| matches!(m.mean_field, LastElectron::Shell { .. }))
            .map(|m| m.z),
        mismatches,
    })
}
