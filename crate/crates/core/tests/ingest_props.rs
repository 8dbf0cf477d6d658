use geofuse::fusion::{FusionMatrix, Provenance};
use geofuse::ingest::{fill_short_gaps, make_windows, NormalizationParams, Split};
use ndarray::Array3;
use proptest::prelude::*;

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::option::weighted(0.7, -100.0..100.0f64), 0..60)
        .prop_map(|v| v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

fn fused(values: Array3<f64>) -> FusionMatrix {
    let (t, s, k) = values.dim();
    let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    FusionMatrix {
        timestamps: (0..t).map(|h| start + chrono::Duration::hours(h as i64)).collect(),
        station_order: (0..s).map(|i| format!("s{i}")).collect(),
        target_order: (0..k).map(|i| format!("k{i}")).collect(),
        values,
        provenance: Array3::from_elem((t, s, k), Provenance::Raw),
    }
}

fn same(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #[test]
    fn gap_filling_is_idempotent(s in series(), max_gap in 0usize..6) {
        let mut once = s.clone();
        fill_short_gaps(&mut once, max_gap);
        let mut twice = once.clone();
        fill_short_gaps(&mut twice, max_gap);
        prop_assert!(same(&once, &twice));
        for (a, b) in s.iter().zip(&once) {
            if !a.is_nan() {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn normalization_round_trips(vals in prop::collection::vec(-1e3..1e3f64, 4..40)) {
        let n = vals.len();
        let arr = Array3::from_shape_vec((n, 1, 1), vals.clone()).unwrap();
        let p = NormalizationParams::fit(arr.view(), &["k".to_string()], 0..n).unwrap();
        for v in vals {
            let back = p.invert_value(0, p.apply_value(0, v));
            prop_assert!((back - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn window_starts_match_enumeration(t in 4usize..60, p in 1usize..6, q in 1usize..4, holes in prop::collection::vec(0usize..60, 0..4)) {
        prop_assume!(t >= p + q);
        let mut v = Array3::from_elem((t, 2, 2), 1.0);
        for h in &holes {
            if *h < t {
                v[[*h, 1, 0]] = f64::NAN;
            }
        }
        let ds = make_windows(&fused(v.clone()), p, q, "k0", (0.6, 0.2, 0.2)).unwrap();
        let mut expect = Vec::new();
        for start in 0..t {
            if start + p + q > t {
                break;
            }
            if (start..start + p + q).all(|ti| v.slice(ndarray::s![ti, .., ..]).iter().all(|x| !x.is_nan())) {
                expect.push(start);
            }
        }
        prop_assert_eq!(&ds.starts, &expect);
        prop_assert_eq!(ds.dropped + ds.starts.len(), t - p - q + 1);
    }
}

#[test]
fn window_count_for_a_full_year() {
    let t = 8784;
    let ds = make_windows(&fused(Array3::zeros((t, 2, 4))), 12, 3, "k0", (0.6, 0.2, 0.2)).unwrap();
    let enumerated = (0..t).filter(|s| s + 12 + 3 <= t).count();
    assert_eq!(ds.len(), enumerated);
    assert_eq!(ds.len(), 8770);
    assert_eq!(ds.input(0).dim(), (12, 2, 4));
    assert_eq!(ds.target(0).dim(), (3, 2));
}

#[test]
fn split_sizes() {
    let s = Split::from_fractions(10, (0.6, 0.2, 0.2)).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
    assert!(Split::from_fractions(10, (0.6, 0.6, 0.2)).is_err());
}

#[test]
fn interior_gap_is_linear() {
    let mut s = vec![0.0, f64::NAN, f64::NAN, 3.0, f64::NAN];
    fill_short_gaps(&mut s, 2);
    assert_eq!(&s[..4], &[0.0, 1.0, 2.0, 3.0]);
    assert!(s[4].is_nan());
    let mut long = vec![0.0, f64::NAN, f64::NAN, f64::NAN, 4.0];
    fill_short_gaps(&mut long, 2);
    assert!(long[2].is_nan());
}
