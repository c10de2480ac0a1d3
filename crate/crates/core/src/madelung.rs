//! Madelung (aufbau) subshell ordering: shells sorted by `N + ℓ`, ties by the
//! principal number `N`. A subshell is labelled by `ℓ` and its occurrence
//! index `n = N − ℓ ≥ 1` among shells of the same `ℓ`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subshell {
    pub ell: u32,
    /// Occurrence index among subshells of angular momentum `ell`, from 1.
    pub n: u32,
    /// Atomic number whose last electron is the first one in this subshell.
    pub start_z: u64,
    pub capacity: u64,
}

impl Subshell {
    pub fn principal(&self) -> u32 {
        self.n + self.ell
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MadelungTable {
    pub shells: Vec<Subshell>,
}

pub fn capacity(ell: u32) -> u64 {
    2 * (2 * ell as u64 + 1)
}

/// Iterator over subshells `(ℓ, n)` in Madelung order.
fn madelung_sequence() -> impl Iterator<Item = (u32, u32)> {
    (1u32..).flat_map(|sum| {
        // principal numbers N with ℓ = sum − N < N, ascending
        (sum / 2 + 1..=sum).map(move |principal| {
            let ell = sum - principal;
            (ell, principal - ell)
        })
    })
}

/// The first `shell_count` subshells with cumulative starting atomic numbers.
pub fn madelung_order(shell_count: usize) -> Result<MadelungTable> {
    if shell_count == 0 {
        return Err(Error::InvalidArgument("shell_count must be >= 1".into()));
    }
    let mut start = 1u64;
    let shells = madelung_sequence()
        .take(shell_count)
        .map(|(ell, n)| {
            let shell = Subshell {
                ell,
                n,
                start_z: start,
                capacity: capacity(ell),
            };
            start += shell.capacity;
            shell
        })
        .collect();
    Ok(MadelungTable { shells })
}

/// Table covering every subshell that starts at or below `z_max`.
pub fn madelung_order_to(z_max: u64) -> MadelungTable {
    let mut start = 1u64;
    let mut shells = Vec::new();
    for (ell, n) in madelung_sequence() {
        if start > z_max {
            break;
        }
        shells.push(Subshell {
            ell,
            n,
            start_z: start,
            capacity: capacity(ell),
        });
        start += capacity(ell);
    }
    MadelungTable { shells }
}

/// Closed form for the atomic number at which the `n`-th subshell of
/// angular momentum `ℓ` starts filling.
pub fn z_start(ell: u32, n: u32) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "occurrence index n starts at 1".into(),
        ));
    }
    let l = ell as i128;
    let m = n as i128 + 2 * l;
    let parity = if n.is_multiple_of(2) { 2 } else { 0 };
    // 12 × the formula, so that every term is an integer
    let twelve = 2 * (m - 1) * (m * m + 4 * m + 9) - 3 * parity * (m + 1) + 12 - 24 * l * (l + 2);
    debug_assert_eq!(twelve % 12, 0);
    Ok((twelve / 12) as u64)
}

/// `κ^Madelung(λ) = [6^{1/3} − 2λ]_+`.
pub fn kappa_madelung(lambda: f64) -> f64 {
    (6f64.cbrt() - 2.0 * lambda).max(0.0)
}

/// Per-ℓ electron counts when `z` electrons fill subshells in Madelung order,
/// the last subshell possibly partially.
pub fn madelung_occupations(z: u64) -> Result<BTreeMap<u32, u64>> {
    if z == 0 {
        return Err(Error::InvalidArgument("z must be >= 1".into()));
    }
    let mut counts = BTreeMap::new();
    let mut left = z;
    for (ell, _) in madelung_sequence() {
        let take = left.min(capacity(ell));
        *counts.entry(ell).or_insert(0) += take;
        left -= take;
        if left == 0 {
            break;
        }
    }
    Ok(counts)
}

/// Subshell that holds the `z`-th electron under Madelung filling.
pub fn madelung_subshell_of_electron(z: u64) -> Result<(u32, u32)> {
    if z == 0 {
        return Err(Error::InvalidArgument("z must be >= 1".into()));
    }
    let mut filled = 0u64;
    for (ell, n) in madelung_sequence() {
        filled += capacity(ell);
        if filled >= z {
            return Ok((ell, n));
        }
    }
    unreachable!("sequence is infinite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_shells() {
        let t = madelung_order(5).unwrap();
        let got: Vec<_> = t.shells.iter().map(|s| (s.ell, s.n, s.start_z)).collect();
        assert_eq!(
            got,
            vec![(0, 1, 1), (0, 2, 3), (1, 1, 5), (0, 3, 11), (1, 2, 13)]
        );
        assert!(madelung_order(0).is_err());
    }

    #[test]
    fn ties_prefer_larger_ell() {
        // N+ℓ = 5: 3d (ℓ=2) before 4p (ℓ=1) before 5s.
        let t = madelung_order(12).unwrap();
        let labels: Vec<_> = t.shells.iter().map(|s| (s.principal(), s.ell)).collect();
        let i3d = labels.iter().position(|&x| x == (3, 2)).unwrap();
        let i4p = labels.iter().position(|&x| x == (4, 1)).unwrap();
        let i5s = labels.iter().position(|&x| x == (5, 0)).unwrap();
        assert!(i3d < i4p && i4p < i5s);
    }

    #[test]
    fn formula_spot_values() {
        assert_eq!(z_start(0, 1).unwrap(), 1);
        assert_eq!(z_start(1, 1).unwrap(), 5);
        assert_eq!(z_start(2, 1).unwrap(), 21);
        assert_eq!(z_start(3, 1).unwrap(), 57);
        assert!(z_start(0, 0).is_err());
    }

    #[test]
    fn madelung_kappa_values() {
        assert!((kappa_madelung(0.0) - 1.817121).abs() < 1e-6);
        assert_eq!(kappa_madelung(6f64.cbrt() / 2.0), 0.0);
        assert_eq!(kappa_madelung(3.0), 0.0);
    }

    #[test]
    fn small_occupations() {
        let neon = madelung_occupations(10).unwrap();
        assert_eq!(neon.get(&0), Some(&4));
        assert_eq!(neon.get(&1), Some(&6));
        assert_eq!(neon.len(), 2);
        let h = madelung_occupations(1).unwrap();
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(madelung_occupations(0).is_err());
    }

    #[test]
    fn electron_subshell_lookup() {
        assert_eq!(madelung_subshell_of_electron(1).unwrap(), (0, 1));
        assert_eq!(madelung_subshell_of_electron(5).unwrap(), (1, 1));
        assert_eq!(madelung_subshell_of_electron(19).unwrap(), (0, 4));
        assert_eq!(madelung_subshell_of_electron(21).unwrap(), (2, 1));
    }
}
