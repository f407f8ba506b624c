mod common;

use decorr::data::{make_windows, split_chronological, SeriesFrame, Split, SplitSpec};
use decorr::forecast::{Checkpoint, LinearForecaster};
use decorr::linalg::{fit_stats, svd};
use decorr::projection::{decorrelation_report, fit_projection, transform, truncation_k, BasisSet, ProjectionMode};
use decorr::Matrix;
use proptest::prelude::*;

use common::*;

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = Matrix<f64>> {
    (rows, cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c).prop_map(move |v| Matrix::from_vec(r, c, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_matches_the_bisection_oracle(a in matrix(2..10, 1..7)) {
        let got = svd(&a, true).unwrap();
        let oracle = singular_values_oracle(&a);
        let top = oracle[0].max(1e-300);
        // through the Gram matrix the squares carry the accuracy
        for (s, o) in got.singular_values.iter().zip(&oracle) {
            prop_assert!((s * s - o * o).abs() <= 1e-10 * top * top, "{s} vs {o}");
        }
        prop_assert!(got.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(orthonormality_gap(&got.right_vectors) < 1e-10);
        let back = got.reconstruct().unwrap();
        prop_assert!(back.max_abs_diff(&a).unwrap() <= 1e-9 * top.max(1.0));
    }

    #[test]
    fn fitted_components_are_uncorrelated(y in matrix(30..80, 2..9), standardize in any::<bool>()) {
        let stats = fit_stats(&y).unwrap();
        let basis = fit_projection(&y, &stats, standardize).unwrap();
        prop_assert!(orthonormality_gap(basis.p_star()) < 1e-10);
        let z = transform(&basis, &basis.prepare(&y).unwrap(), y.cols()).unwrap();
        prop_assert!(decorrelation_report(&z).unwrap() < 1e-8);
    }

    #[test]
    fn truncation_is_clamped_and_monotone(a in 0.001f64..1.0, b in 0.001f64..1.0, t in 1usize..800) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (kl, kh) = (truncation_k(lo, t).unwrap(), truncation_k(hi, t).unwrap());
        prop_assert!(1 <= kl && kl <= kh && kh <= t);
        prop_assert_eq!(truncation_k(1.0, t).unwrap(), t);
    }

    #[test]
    fn window_counts_follow_the_span_formula(
        n in 100usize..400,
        h in 1usize..6,
        t in 1usize..6,
        stride in 1usize..4,
    ) {
        let values = Matrix::from_fn(n, 1, |i, _| (i as f64).sin()).unwrap();
        let frame = SeriesFrame::new(None, values, vec!["x".into()]).unwrap();
        let bounds = split_chronological(n, &SplitSpec::default(), h + t).unwrap();
        let ds = make_windows(frame, bounds.clone(), h, t, stride).unwrap();
        for split in Split::ALL {
            let len = bounds.range(split).len();
            prop_assert_eq!(ds.window_count(split), (len - h - t) / stride + 1);
        }
    }

    #[test]
    fn forecasts_match_a_loop_oracle(h in 1usize..6, t in 1usize..5, d in 1usize..4, seed in any::<u64>(), per_variate in any::<bool>()) {
        let heads = if per_variate { d } else { 1 };
        let model = LinearForecaster::<f64>::init(h, t, heads, seed);
        let mut r = rng(seed);
        let window = gaussian(&mut r, h, d);
        let out = model.forecast(&window).unwrap();
        for v in 0..d {
            let head = &model.heads()[if per_variate { v } else { 0 }];
            for j in 0..t {
                let mut acc = head.bias[j];
                for i in 0..h {
                    acc += window.get(i, v) * head.weights.get(i, j);
                }
                prop_assert!((out.get(j, v) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn saved_artifacts_round_trip(y in matrix(20..40, 2..6), seed in any::<u64>()) {
        let set = BasisSet::fit(std::slice::from_ref(&y), ProjectionMode::Pooled, true).unwrap();
        let back = BasisSet::<f64>::from_json(&set.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &set);
        prop_assert_eq!(back.fingerprint().unwrap(), set.fingerprint().unwrap());

        let ck = Checkpoint {
            model: LinearForecaster::<f64>::init(3, y.cols(), 2, seed),
            stats: fit_stats(&y).unwrap(),
            basis_fingerprint: Some(set.fingerprint().unwrap()),
        };
        prop_assert_eq!(Checkpoint::<f64>::from_json(&ck.to_json().unwrap()).unwrap(), ck);
    }
}

