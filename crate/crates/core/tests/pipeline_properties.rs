use proptest::prelude::*;

use pathcert::format::{self, load_path_json, path_to_json};
use pathcert::pipeline::{build_path, BuildOptions};
use pathcert::sampling::{sample_path, GridSpec};
use pathcert::verifier::{coincidence_check, envelope_check, interpolation_check};
use pathcert::witness::{DerivativeMode, Generator};

fn random_y() -> impl Strategy<Value = DerivativeMode> {
    prop_oneof![Just(DerivativeMode::Radial), Just(DerivativeMode::Random)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_cone_paths_interpolate_and_stay_in_shells(
        seed in 0u64..10_000,
        n in 2usize..=4,
        k_max in 8usize..=24,
        y in random_y(),
    ) {
        let w = Generator::random_cone(300, 30.0, y, seed).generate(n).unwrap();
        let built = build_path(&w, &BuildOptions::with_k_max(k_max)).unwrap();
        let interp = interpolation_check(&built.path, &built.anchors);
        prop_assert!(interp.passed, "{interp:?}");
        let env = envelope_check(&built.path, k_max.min(20), 32);
        prop_assert!(env.passed, "{env:?}");
        let co = coincidence_check(&built.path, 8);
        prop_assert!(co.passed, "{co:?}");
    }

    #[test]
    fn path_json_round_trips_bit_exactly(seed in 0u64..10_000, n in 1usize..=3) {
        let w = Generator::random_cone(120, 25.0, DerivativeMode::Random, seed).generate(n).unwrap();
        let built = build_path(&w, &BuildOptions::with_k_max(12)).unwrap();
        let text = path_to_json(&built).unwrap();
        let (anchors, path) = load_path_json(&text).unwrap();
        prop_assert_eq!(anchors.entries(), built.anchors.entries());
        prop_assert_eq!(path.windows(), built.path.windows());
        let (lo, hi) = path.domain();
        for t in [hi, 0.5 * (lo + hi), lo + 1e-3 * (hi - lo)] {
            prop_assert_eq!(path.eval_with_derivative(t).unwrap(), built.path.eval_with_derivative(t).unwrap());
        }
    }
}

#[test]
fn sample_rows_are_consistent_and_csv_shaped() {
    let w = Generator::spiral(200).generate(3).unwrap();
    let built = build_path(&w, &BuildOptions::default()).unwrap();
    let rows = sample_path(&built.path, &"log:500".parse::<GridSpec>().unwrap()).unwrap();
    assert_eq!(rows.len(), 500);
    assert!(rows.windows(2).all(|r| r[0].t < r[1].t));
    for r in &rows {
        assert!((r.product - r.norm_s * r.norm_ds).abs() <= 1e-15 * r.product.max(1.0));
    }
    let mut buf = Vec::new();
    format::write_samples_csv(&mut buf, 3, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,s1,s2,s3,d1,d2,d3,norm_s,norm_ds,product");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], rows[0].t);
    assert_eq!(text.lines().count(), 501);
}

#[test]
fn grid_through_anchor_times_reproduces_anchors() {
    let w = Generator::diagonal(100).generate(2).unwrap();
    let built = build_path(&w, &BuildOptions::with_k_max(20)).unwrap();
    let times: Vec<f64> = built.anchors.entries().iter().map(|e| e.t0).collect();
    let rows = sample_path(&built.path, &GridSpec::Explicit(times)).unwrap();
    for r in rows {
        let e = built.anchors.entries().iter().find(|e| e.t0 == r.t).unwrap();
        let err = r.s.iter().zip(&e.a).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-9, "k = {} err {err:e}", e.k);
    }
}
