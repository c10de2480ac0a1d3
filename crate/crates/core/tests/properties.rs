mod common;

use proptest::prelude::*;
use tf_angular::madelung::{
    capacity, madelung_occupations, madelung_order, madelung_order_to, z_start,
};
use tf_angular::meanfield::MeanFieldAtom;
use tf_angular::potentials::TfPotential;
use tf_angular::semiclassics::{canonical_e, counting_n, e_g, kappa, lambda_max};

fn tf() -> TfPotential {
    TfPotential::unit(common::solution())
}

#[test]
fn formula_matches_aufbau_enumeration() {
    let starts = common::aufbau_starts(14);
    let mut checked = 0;
    for ell in 0..=7u32 {
        for n in 1..=14u32 {
            if n + 2 * ell <= 14 {
                assert_eq!(
                    z_start(ell, n).unwrap(),
                    starts[&(ell, n)],
                    "(ℓ={ell}, n={n})"
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, starts.len());
}

#[test]
fn table_agrees_with_formula() {
    let t = madelung_order(60).unwrap();
    let mut next = 1;
    for s in &t.shells {
        assert_eq!(s.start_z, next);
        assert_eq!(s.start_z, z_start(s.ell, s.n).unwrap());
        next += s.capacity;
    }
}

#[test]
fn occupations_sum_to_z_exhaustively() {
    for z in 1..=10_000u64 {
        let occ = madelung_occupations(z).unwrap();
        assert_eq!(occ.values().sum::<u64>(), z);
        // only the last subshell may be partly filled
        let (ell, n) = tf_angular::madelung::madelung_subshell_of_electron(z).unwrap();
        let start = z_start(ell, n).unwrap();
        assert!(z - start < capacity(ell));
    }
}

#[test]
fn order_to_covers_z() {
    let t = madelung_order_to(1000);
    assert!(t.shells.last().unwrap().start_z <= 1000);
    let total: u64 = t.shells.iter().map(|s| s.capacity).sum();
    assert!(total + 1 > 1000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_energy_is_a_maximum(lambda in 0.05f64..0.85, frac in 0.05f64..0.95, mu in 0.0f64..3.0) {
        let pot = tf();
        let n = frac * kappa(&pot, lambda).unwrap();
        let c = canonical_e(&pot, lambda, n).unwrap();
        let value = e_g(&pot, lambda, mu).unwrap() - mu * n;
        prop_assert!(value <= c.e + 1e-10, "{value} > {}", c.e);
        prop_assert!(c.e >= e_g(&pot, lambda, 0.0).unwrap() - 1e-14);
    }

    #[test]
    fn grand_canonical_energy_concave(lambda in 0.05f64..0.85, mu in 0.0f64..1.0, h in 1e-3f64..0.05) {
        let pot = tf();
        let a = e_g(&pot, lambda, mu).unwrap();
        let b = e_g(&pot, lambda, mu + h).unwrap();
        let c = e_g(&pot, lambda, mu + 2.0 * h).unwrap();
        prop_assert!(a <= b + 1e-14 && b <= c + 1e-14);
        prop_assert!(c - 2.0 * b + a <= 1e-10);
        prop_assert!(a <= 0.0);
    }

    #[test]
    fn counting_function_decreasing(lambda in 0.0f64..0.9, mu in 0.0f64..2.0, h in 1e-3f64..0.5) {
        let pot = tf();
        let a = counting_n(&pot, lambda, mu).unwrap();
        let b = counting_n(&pot, lambda, mu + h).unwrap();
        prop_assert!(b <= a);
        prop_assert!(a == 0.0 || b < a);
    }

    #[test]
    fn kappa_vanishes_beyond_edge(extra in 0.0f64..5.0) {
        let pot = tf();
        let edge = lambda_max(&pot).unwrap();
        prop_assert_eq!(kappa(&pot, edge * (1.0 + 1e-9) + extra).unwrap(), 0.0);
    }

    #[test]
    fn kappa_continuous(lambda in 0.0f64..0.9) {
        let pot = tf();
        let h = 1e-6;
        let d = (kappa(&pot, lambda + h).unwrap() - kappa(&pot, lambda).unwrap()).abs();
        // κ' is bounded away from the edge, where κ has a square-root onset
        prop_assert!(d < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn node_count_monotone(z in 1u64..5000, ell in 0u32..6, a in 1e-6f64..1.0, b in 1e-6f64..1.0) {
        let atom = MeanFieldAtom::new(common::solution(), z).unwrap();
        let unit = atom.energy_unit();
        let (lo, hi) = if a < b { (-b * unit, -a * unit) } else { (-a * unit, -b * unit) };
        prop_assert!(atom.count_below(ell, lo).unwrap() <= atom.count_below(ell, hi).unwrap());
    }

    #[test]
    fn occupations_conserve_electrons(z in 1u64..20_000) {
        let r = MeanFieldAtom::new(common::solution(), z).unwrap().occupations(&[]).unwrap();
        prop_assert_eq!(r.total(), z as f64);
        prop_assert!(r.fermi_level <= 0.0);
        prop_assert!(r.counts.values().all(|&n| n > 0.0));
    }
}
