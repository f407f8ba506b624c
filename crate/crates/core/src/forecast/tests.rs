use super::*;
use crate::data::{make_windows, split_chronological, synth_ar, SeriesFrame, Split, SplitSpec, SynthSpec, WindowedDataset};
use crate::linalg::Matrix;
use crate::objective::{LossConfig, Objective};
use crate::projection::{BasisSet, ProjectionMode};

fn sine_frame(n: usize, omega: f64) -> SeriesFrame<f64> {
    let values = Matrix::from_fn(n, 1, |i, _| 2.0 + 3.0 * (omega * i as f64 + 0.4).sin()).unwrap();
    SeriesFrame::new(None, values, vec!["s".into()]).unwrap()
}

fn windows(frame: SeriesFrame<f64>, h: usize, t: usize) -> WindowedDataset<f64> {
    let b = split_chronological(frame.len(), &SplitSpec::default(), h + t).unwrap();
    make_windows(frame, b, h, t, 1).unwrap()
}

fn ar_dataset(len: usize, variates: usize, h: usize, t: usize, seed: u64) -> WindowedDataset<f64> {
    let spec = SynthSpec {
        length: len,
        variates,
        seed,
        ..SynthSpec::default()
    };
    windows(synth_ar(&spec).unwrap(), h, t)
}

/// Exact forecaster for the standardized sinusoid of [`sine_frame`]:
/// `u = z + (mu - 2)/sigma` obeys `u_t = c u_{t-1} - u_{t-2}` with `c = 2 cos(omega)`.
fn exact_sine_model(ds: &WindowedDataset<f64>, omega: f64) -> LinearForecaster<f64> {
    let (h, t) = (ds.lookback(), ds.horizon());
    let k = (ds.stats().means[0] - 2.0) / ds.stats().stds[0];
    let c = 2.0 * omega.cos();
    // u_{n+j} = a_j u_n + b_j u_{n-1}
    let (mut a_prev, mut b_prev, mut a, mut b) = (0.0, 1.0, 1.0, 0.0);
    let mut w = Matrix::zeros(h, t);
    let mut bias = vec![0.0; t];
    for (j, bj) in bias.iter_mut().enumerate() {
        let (an, bn) = (c * a - a_prev, c * b - b_prev);
        (a_prev, b_prev, a, b) = (a, b, an, bn);
        w.set(h - 1, j, a);
        w.set(h - 2, j, b);
        *bj = (a + b - 1.0) * k;
    }
    LinearForecaster::from_heads(h, t, vec![LinearHead { weights: w, bias }]).unwrap()
}

#[test]
fn forecast_basics() {
    let window = Matrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64 - 3.0).unwrap();
    let zero = LinearForecaster::<f64>::zeros(4, 4, 1);
    assert_eq!(zero.forecast(&window).unwrap(), Matrix::zeros(4, 2));
    let copy = LinearForecaster::from_heads(
        4,
        4,
        vec![LinearHead {
            weights: Matrix::identity(4),
            bias: vec![0.0; 4],
        }],
    )
    .unwrap();
    assert_eq!(copy.forecast(&window).unwrap(), window);
    assert!(zero.forecast(&Matrix::zeros(3, 2)).is_err());
}

#[test]
fn forecast_matches_loop_oracle() {
    let (h, t, d) = (7, 5, 3);
    let model = LinearForecaster::<f64>::init(h, t, 1, 11);
    let window = Matrix::from_fn(h, d, |i, j| ((i * 31 + j * 7) % 13) as f64 / 5.0 - 1.0).unwrap();
    let out = model.forecast(&window).unwrap();
    let head = &model.heads()[0];
    for v in 0..d {
        for j in 0..t {
            let mut s = head.bias[j];
            for i in 0..h {
                s += head.weights.get(i, j) * window.get(i, v);
            }
            assert!((out.get(j, v) - s).abs() < 1e-12);
        }
    }
}

#[test]
fn per_variate_heads() {
    let model = LinearForecaster::<f64>::init(3, 2, 2, 4);
    let window = Matrix::from_fn(3, 2, |i, j| (i + j) as f64).unwrap();
    let out = model.forecast(&window).unwrap();
    let solo = LinearForecaster::from_heads(3, 2, vec![model.heads()[1].clone()]).unwrap();
    let col = Matrix::from_columns(&[window.col(1)]).unwrap();
    assert_eq!(solo.forecast(&col).unwrap().col(0), out.col(1));
    assert!(model.forecast(&Matrix::zeros(3, 3)).is_err());
}

#[test]
fn init_is_seeded_and_bounded() {
    let a = LinearForecaster::<f64>::init(16, 8, 1, 3);
    assert_eq!(a, LinearForecaster::init(16, 8, 1, 3));
    assert_ne!(a, LinearForecaster::init(16, 8, 1, 4));
    assert!(a.params().iter().all(|p| p.abs() <= 0.25));
}

#[test]
fn evaluate_perfect_and_zero_models() {
    let omega = 0.3;
    let ds = windows(sine_frame(600, omega), 12, 8);
    let exact = exact_sine_model(&ds, omega);
    let m = evaluate(&exact, &ds, Split::Test).unwrap();
    assert!(m.mse < 1e-20 && m.mae < 1e-10, "{m:?}");

    let spec = SynthSpec {
        ar: vec![0.0],
        length: 10_000,
        ..SynthSpec::default()
    };
    let white = windows(synth_ar(&spec).unwrap(), 16, 8);
    let zero = LinearForecaster::zeros(16, 8, 1);
    let m = evaluate(&zero, &white, Split::Test).unwrap();
    assert!((m.mse - 1.0).abs() < 0.1, "{m:?}");
    let s = white.stats().stds[0];
    assert!((m.mse_original - m.mse * s * s).abs() < 1e-12);
}

#[test]
fn evaluate_matches_loop_oracle() {
    let ds = ar_dataset(800, 2, 10, 6, 1);
    let model = LinearForecaster::<f64>::init(10, 6, 1, 2);
    let m = evaluate(&model, &ds, Split::Val).unwrap();
    let z = ds.standardized();
    let (mut se, mut ae, mut se_o, mut n) = (0.0, 0.0, 0.0, 0.0);
    for &s in ds.window_starts(Split::Val) {
        for v in 0..2 {
            let window = Matrix::from_fn(10, 1, |i, _| z.get(s + i, v)).unwrap();
            let f = model.forecast(&window).unwrap();
            for j in 0..6 {
                let e = f.get(j, 0) - z.get(s + 10 + j, v);
                let raw = f.get(j, 0) * ds.stats().stds[v] + ds.stats().means[v] - ds.frame().values().get(s + 10 + j, v);
                se += e * e;
                ae += e.abs();
                se_o += raw * raw;
                n += 1.0;
            }
        }
    }
    assert!((m.mse - se / n).abs() < 1e-12);
    assert!((m.mae - ae / n).abs() < 1e-12);
    assert!((m.mse_original - se_o / n).abs() < 1e-9 * (se_o / n));
}

fn timeo1(alpha: f64, gamma: f64, t: usize) -> Objective {
    Objective::Timeo1(LossConfig::new(alpha, gamma, t).unwrap())
}

fn fit_bases(ds: &WindowedDataset<f64>, mode: ProjectionMode) -> BasisSet<f64> {
    BasisSet::fit(&ds.label_matrix(Split::Train, mode).unwrap(), mode, false).unwrap()
}

#[test]
fn training_is_deterministic() {
    let ds = ar_dataset(1500, 2, 24, 12, 0);
    let bases = fit_bases(&ds, ProjectionMode::Pooled);
    let cfg = TrainConfig {
        epochs: 4,
        batch_size: 32,
        seed: 9,
        objective: timeo1(0.7, 0.7, 12),
        ..TrainConfig::default()
    };
    let run = || {
        let mut m = LinearForecaster::init(24, 12, 1, 1);
        let r = train(&mut m, &ds, Some(&bases), &cfg).unwrap();
        (m, r)
    };
    let (ma, ra) = run();
    let (mb, rb) = run();
    assert_eq!(ma, mb);
    assert_eq!(ra.epochs, rb.epochs);
    assert_eq!(ra.test, rb.test);
    let best = &ra.epochs[ra.best_epoch - 1];
    assert_eq!(best.val_mse, ra.best_val_mse);
    assert!(ra.epochs.iter().all(|e| e.val_mse >= ra.best_val_mse));
    assert!(best.train_loss <= ra.epochs[0].train_loss);
}

#[test]
fn final_short_batch_is_trained_on() {
    let ds = ar_dataset(600, 1, 10, 5, 2);
    let n = ds.window_count(Split::Train);
    let batch_size = 64;
    assert_ne!(n % batch_size, 0);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size,
        patience: 10,
        ..TrainConfig::default()
    };
    let mut m = LinearForecaster::init(10, 5, 1, 0);
    let r = train(&mut m, &ds, None, &cfg).unwrap();
    assert_eq!(r.batches_per_epoch, n.div_ceil(batch_size));
    assert_eq!(r.last_batch_windows, n % batch_size);
    assert_eq!(r.optimizer_steps, 3 * r.batches_per_epoch);
}

#[test]
fn recovers_a_realizable_linear_map() {
    let omega = 0.23;
    let ds = windows(sine_frame(3000, omega), 16, 8);
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        epochs: 200,
        batch_size: 64,
        patience: 200,
        seed: 1,
        ..TrainConfig::default()
    };
    let mut m = LinearForecaster::init(16, 8, 1, 0);
    let r = train(&mut m, &ds, None, &cfg).unwrap();
    assert!(r.test.mse < 1e-6, "test mse {} after {} epochs", r.test.mse, r.epochs.len());
}

#[test]
fn divergence_names_the_epoch() {
    let ds = ar_dataset(600, 1, 10, 5, 3);
    let cfg = TrainConfig {
        learning_rate: 1e300,
        epochs: 3,
        ..TrainConfig::default()
    };
    let mut m = LinearForecaster::init(10, 5, 1, 0);
    match train(&mut m, &ds, None, &cfg) {
        Err(crate::Error::Training { epoch, .. }) => assert!(epoch >= 1),
        other => panic!("expected a training error, got {other:?}"),
    }
}

#[test]
fn train_rejects_mismatches() {
    let ds = ar_dataset(600, 2, 10, 5, 3);
    let mut wrong_h = LinearForecaster::init(9, 5, 1, 0);
    assert!(train(&mut wrong_h, &ds, None, &TrainConfig::default()).is_err());
    let mut m = LinearForecaster::init(10, 5, 1, 0);
    let cfg = TrainConfig {
        objective: timeo1(0.5, 0.5, 5),
        ..TrainConfig::default()
    };
    assert!(matches!(train(&mut m, &ds, None, &cfg), Err(crate::Error::Config(_))));
    let bad = TrainConfig {
        batch_size: 0,
        ..TrainConfig::default()
    };
    assert!(train(&mut m, &ds, None, &bad).is_err());
}

/// Draws small batches until every retained component residual is clear of the kink.
fn smooth_batch(
    ds: &WindowedDataset<f64>,
    model: &LinearForecaster<f64>,
    objective: &Objective,
    bases: &BasisSet<f64>,
) -> crate::data::Batch<f64> {
    let n = ds.window_count(Split::Train);
    for attempt in 0..50 {
        let picks: Vec<usize> = (0..4).map(|i| (attempt * 97 + i * 131) % n).collect();
        let batch = ds.batch(Split::Train, &picks).unwrap();
        let dist = batch_kink_distance(model, &batch, objective, Some(bases)).unwrap();
        if dist.is_none_or(|d| d > KINK_MARGIN) {
            return batch;
        }
    }
    panic!("no kink-free batch found");
}

#[test]
fn gradient_check_grid() {
    let ds = ar_dataset(2000, 2, 24, 16, 4);
    for mode in [ProjectionMode::Pooled, ProjectionMode::PerVariate] {
        let bases = fit_bases(&ds, mode);
        for heads in [1, 2] {
            let model = LinearForecaster::init(24, 16, heads, 8);
            for alpha in [0.0, 0.5, 1.0] {
                for gamma in [0.3, 1.0] {
                    let obj = timeo1(alpha, gamma, 16);
                    let batch = smooth_batch(&ds, &model, &obj, &bases);
                    let r = grad_check(&model, &batch, &obj, Some(&bases), &GradCheckOptions::default()).unwrap();
                    let tol = if alpha == 0.0 { 1e-6 } else { 1e-4 };
                    assert!(r.checked >= 50);
                    assert!(
                        r.max_relative_error < tol,
                        "{mode} heads={heads} alpha={alpha} gamma={gamma}: {}",
                        r.max_relative_error
                    );
                }
            }
        }
    }
}

#[test]
fn gradient_check_other_objectives() {
    let ds = ar_dataset(1000, 1, 12, 8, 6);
    let model = LinearForecaster::init(12, 8, 1, 2);
    let batch = ds.batch(Split::Train, &[0, 5, 9]).unwrap();
    for obj in [Objective::Tmse, Objective::fourier(0.5).unwrap()] {
        let r = grad_check(&model, &batch, &obj, None, &GradCheckOptions::default()).unwrap();
        assert!(r.max_relative_error < 1e-4, "{obj:?}: {}", r.max_relative_error);
        assert!(r.kink_distance.is_none());
    }
}

#[test]
fn gradient_vanishes_at_a_perfect_fit() {
    let omega = 0.3;
    let ds = windows(sine_frame(600, omega), 12, 8);
    let bases = fit_bases(&ds, ProjectionMode::Pooled);
    let model = exact_sine_model(&ds, omega);
    let batch = ds.batch(Split::Train, &[0, 1, 2, 3]).unwrap();
    // labels replaced by the model's own forecast so the residual is exactly zero
    let batch = crate::data::Batch {
        labels: model.predict(&batch).unwrap(),
        ..batch
    };
    for obj in [timeo1(0.0, 0.5, 8), timeo1(0.5, 0.5, 8), timeo1(1.0, 1.0, 8)] {
        let r = grad_check(&model, &batch, &obj, Some(&bases), &GradCheckOptions::default()).unwrap();
        assert!(r.analytic_norm < 1e-12, "{}", r.analytic_norm);
    }
}

#[test]
fn corrupted_gradient_is_caught() {
    let ds = ar_dataset(1000, 1, 12, 8, 6);
    let model = LinearForecaster::init(12, 8, 1, 2);
    let batch = ds.batch(Split::Train, &[0, 5, 9]).unwrap();
    let opts = GradCheckOptions {
        corrupt: true,
        ..GradCheckOptions::default()
    };
    let r = grad_check(&model, &batch, &Objective::Tmse, None, &opts).unwrap();
    assert!(r.max_relative_error > 1e-2);
}

#[test]
fn checkpoint_round_trip() {
    let ds = ar_dataset(600, 2, 10, 5, 3);
    let ck = Checkpoint {
        model: LinearForecaster::init(10, 5, 2, 7),
        stats: ds.stats().clone(),
        basis_fingerprint: Some("abc".into()),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    ck.save(&path).unwrap();
    assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    assert!(Checkpoint::<f64>::from_json("{\"format\":\"other\"}").is_err());
}

#[test]
fn alpha_zero_trains_exactly_like_tmse() {
    let ds = ar_dataset(900, 2, 12, 6, 5);
    let bases = fit_bases(&ds, ProjectionMode::PerVariate);
    let run = |objective| {
        let cfg = TrainConfig {
            epochs: 3,
            objective,
            ..TrainConfig::default()
        };
        let mut m = LinearForecaster::init(12, 6, 1, 3);
        train(&mut m, &ds, Some(&bases), &cfg).unwrap()
    };
    let a = run(Objective::Tmse);
    let b = run(timeo1(0.0, 0.5, 6));
    assert_eq!(a.epochs, b.epochs);
    assert_eq!(a.test, b.test);
}
