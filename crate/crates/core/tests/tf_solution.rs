mod common;

use proptest::prelude::*;
use tf_angular::error::Error;
use tf_angular::tf_solver::{length_scale, solve_tf_with, SolverSettings, SCHEMA_VERSION};
use tf_angular::{load_solution, save_solution, solve_tf};

#[test]
fn slope_matches_plain_shooting() {
    let oracle = common::shooting_slope(2e-4, 16.0);
    let sol = common::solution();
    assert!((oracle - 1.588071).abs() < 1e-5, "oracle {oracle}");
    assert!(
        (sol.slope_b - oracle).abs() < 1e-6,
        "{} vs {oracle}",
        sol.slope_b
    );
}

#[test]
fn slope_stable_under_grid_doubling() {
    let a = solve_tf(1e-12, 400.0, 2000).unwrap();
    let b = solve_tf(1e-12, 400.0, 4000).unwrap();
    assert!((a.slope_b - b.slope_b).abs() < 1e-8);
}

#[test]
fn atom_is_neutral() {
    let q = common::total_charge(&common::solution(), 1e4);
    assert!((q - 1.0).abs() < 1e-3, "{q}");
}

#[test]
fn length_scale_value() {
    assert!((length_scale() - 1.7706827).abs() < 1e-6);
}

#[test]
fn cache_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tf.json");
    let sol = solve_tf(1e-10, 400.0, 500).unwrap();
    save_solution(&sol, &path).unwrap();
    let back = load_solution(&path).unwrap();
    assert_eq!(back, sol);
    for x in [1e-7, 0.3, 7.7, 123.0, 1e4] {
        assert_eq!(back.screening(x), sol.screening(x));
    }
}

#[test]
fn truncated_cache_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tf.json");
    save_solution(&solve_tf(1e-10, 400.0, 500).unwrap(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_solution(&path), Err(Error::Schema(_))));
}

#[test]
fn wrong_schema_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tf.json");
    save_solution(&solve_tf(1e-10, 400.0, 500).unwrap(), &path).unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["schema_version"] = (SCHEMA_VERSION + 1).into();
    std::fs::write(&path, v.to_string()).unwrap();
    match load_solution(&path) {
        Err(Error::SchemaVersion { found, supported }) => {
            assert_eq!((found, supported), (SCHEMA_VERSION + 1, SCHEMA_VERSION));
        }
        other => panic!("expected a version error, got {other:?}"),
    }
}

#[test]
fn mismatched_arrays_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tf.json");
    save_solution(&solve_tf(1e-10, 400.0, 500).unwrap(), &path).unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["y_values"].as_array_mut().unwrap().pop();
    std::fs::write(&path, v.to_string()).unwrap();
    assert!(matches!(load_solution(&path), Err(Error::Schema(_))));
}

#[test]
fn missing_cache_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_solution(&dir.path().join("none.json")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn short_range_is_rejected() {
    let s = SolverSettings {
        x_max: 5.0,
        ..Default::default()
    };
    assert!(solve_tf_with(&s).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn screening_is_positive_decreasing_convex(lx in -12.0f64..12.0, dl in 1e-3f64..0.5) {
        let sol = common::solution();
        let x = lx.exp();
        let x2 = x * dl.exp();
        let [y, dy] = sol.screening(x);
        let [y2, dy2] = sol.screening(x2);
        prop_assert!(y > 0.0 && y <= 1.0);
        prop_assert!(dy < 0.0);
        prop_assert!(y2 < y);
        prop_assert!(dy2 >= dy);
    }

    #[test]
    fn potential_scaling(z in 1.0f64..1e6, r in 1e-4f64..10.0) {
        let sol = common::solution();
        let direct = sol.phi_z(z, r);
        let scaled = z.powf(4.0 / 3.0) * sol.phi1(z.cbrt() * r);
        prop_assert!((direct / scaled - 1.0).abs() < 1e-14);
        // r Φ_Z(r) → Z at the nucleus
        prop_assert!(r * direct < z);
    }
}
