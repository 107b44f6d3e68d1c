use approx::assert_abs_diff_eq;
use ndarray::{Array2, ArrayView2};

use super::*;
use crate::transform::generate_windows;

fn tiny_config() -> ModelConfig {
    ModelConfig {
        conv_filters: 2,
        conv_kernel: 2,
        lstm_units: 3,
        dense_units: 4,
        horizon: 2,
        seed: 11,
        ..ModelConfig::default()
    }
}

fn window(input: Array2<f64>, target: Vec<f64>) -> SlidingWindow<f64> {
    SlidingWindow { index: 0, start: 0, input, target }
}

fn sine_windows(count: usize, w: usize, horizon: usize) -> Vec<SlidingWindow<f64>> {
    let len = count + w + horizon - 1;
    let series: Vec<f64> = (0..len)
        .map(|t| 0.5 + 0.5 * (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin())
        .collect();
    generate_windows(&[series], w, horizon, 1, 0).unwrap()
}

#[test]
fn init_is_seed_deterministic() {
    let cfg = ModelConfig { seed: 7, ..ModelConfig::default() };
    let a = ForecastModel::<f64>::init(&cfg, (24, 1)).unwrap();
    let b = ForecastModel::<f64>::init(&cfg, (24, 1)).unwrap();
    let bits = |m: &ForecastModel<f64>| m.parameters().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    let c = ForecastModel::<f64>::init(&ModelConfig { seed: 8, ..cfg }, (24, 1)).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn init_shapes() {
    let cfg = ModelConfig { horizon: 120, ..ModelConfig::default() };
    let m = ForecastModel::<f32>::init(&cfg, (720, 1)).unwrap();
    let conv = m.tensors().into_iter().find(|t| t.name == "conv.weight").unwrap();
    assert_eq!(conv.shape, [32, 3, 1]);

    let cfg = ModelConfig { horizon: 12, ..ModelConfig::default() };
    let m = ForecastModel::<f64>::init(&cfg, (24, 6)).unwrap();
    assert_eq!(m.tensor("output.bias").unwrap().len(), 12);
    assert_eq!(m.forward(Array2::zeros((24, 6)).view()).unwrap().len(), 12);
    let total: usize = m.tensors().iter().map(TensorSpec::len).sum();
    assert_eq!(total, m.parameter_count());
}

#[test]
fn invalid_configs() {
    let zero_epochs = ModelConfig { epochs: 0, ..ModelConfig::default() };
    assert!(matches!(ForecastModel::<f64>::init(&zero_epochs, (24, 1)), Err(Error::InvalidConfig(_))));
    let wide_kernel = ModelConfig { conv_kernel: 30, ..ModelConfig::default() };
    assert!(matches!(ForecastModel::<f64>::init(&wide_kernel, (24, 1)), Err(Error::InvalidConfig(_))));
}

#[test]
fn shape_mismatch_on_forward() {
    let m = ForecastModel::<f64>::init(&tiny_config(), (5, 1)).unwrap();
    assert!(matches!(m.forward(Array2::zeros((6, 1)).view()), Err(Error::ShapeMismatch { .. })));
}

#[test]
fn zero_input_zero_bias_gives_zero() {
    let mut m = ForecastModel::<f64>::init(&ModelConfig { horizon: 3, ..ModelConfig::default() }, (10, 2)).unwrap();
    for name in ["conv.bias", "lstm.bias", "dense.bias", "output.bias"] {
        m.tensor_mut(name).unwrap().iter_mut().for_each(|p| *p = 0.0);
    }
    assert_eq!(m.forward(Array2::zeros((10, 2)).view()).unwrap(), [0.0; 3]);
}

#[test]
fn forward_is_deterministic() {
    let m = ForecastModel::<f64>::init(&tiny_config(), (5, 1)).unwrap();
    let x = Array2::from_shape_fn((5, 1), |(t, _)| t as f64 * 0.1);
    assert_eq!(m.forward(x.view()).unwrap(), m.forward(x.view()).unwrap());
}

/// Independent step-by-step evaluation of the tiny network with explicitly
/// named gate matrices.
fn oracle_forward(m: &ForecastModel<f64>, x: &[f64]) -> Vec<f64> {
    let cw = m.tensor("conv.weight").unwrap(); // [2 filters][2 kernel][1 channel]
    let cb = m.tensor("conv.bias").unwrap();
    let wx = m.tensor("lstm.kernel").unwrap(); // [12][2]
    let wh = m.tensor("lstm.recurrent").unwrap(); // [12][3]
    let lb = m.tensor("lstm.bias").unwrap();
    let dw = m.tensor("dense.weight").unwrap(); // [4][3]
    let db = m.tensor("dense.bias").unwrap();
    let ow = m.tensor("output.weight").unwrap(); // [2][4]
    let ob = m.tensor("output.bias").unwrap();
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());

    let mut feats = Vec::new();
    for t in 0..4 {
        let f0 = (cb[0] + cw[0] * x[t] + cw[1] * x[t + 1]).max(0.0);
        let f1 = (cb[1] + cw[2] * x[t] + cw[3] * x[t + 1]).max(0.0);
        feats.push([f0, f1]);
    }
    let gate = |block: usize, u: usize, xin: &[f64; 2], h: &[f64; 3]| {
        let r = block * 3 + u;
        lb[r] + wx[r * 2] * xin[0] + wx[r * 2 + 1] * xin[1] + wh[r * 3] * h[0] + wh[r * 3 + 1] * h[1] + wh[r * 3 + 2] * h[2]
    };
    let (mut h, mut c) = ([0.0; 3], [0.0; 3]);
    for xin in &feats {
        let mut nh = [0.0; 3];
        let mut nc = [0.0; 3];
        for u in 0..3 {
            let i = sig(gate(0, u, xin, &h));
            let f = sig(gate(1, u, xin, &h));
            let g = gate(2, u, xin, &h).tanh();
            let o = sig(gate(3, u, xin, &h));
            nc[u] = f * c[u] + i * g;
            nh[u] = o * nc[u].tanh();
        }
        h = nh;
        c = nc;
    }
    let dense: Vec<f64> = (0..4)
        .map(|j| (db[j] + (0..3).map(|u| dw[j * 3 + u] * h[u]).sum::<f64>()).max(0.0))
        .collect();
    (0..2).map(|o| ob[o] + (0..4).map(|j| ow[o * 4 + j] * dense[j]).sum::<f64>()).collect()
}

#[test]
fn forward_matches_manual_recurrence() {
    let mut m = ForecastModel::<f64>::init(&tiny_config(), (5, 1)).unwrap();
    // hand-set every parameter to a distinct deterministic value
    for (i, p) in m.parameters_mut().iter_mut().enumerate() {
        *p = (i as f64 * 0.37).sin() * 0.8;
    }
    let x = [0.3, -0.2, 0.9, 0.4, -0.7];
    let input = Array2::from_shape_vec((5, 1), x.to_vec()).unwrap();
    let got = m.forward(input.view()).unwrap();
    let want = oracle_forward(&m, &x);
    for (g, w) in got.iter().zip(&want) {
        assert_abs_diff_eq!(g, w, epsilon = 1e-10);
    }
}

#[test]
fn streaming_matches_forward() {
    let cfg = ModelConfig { conv_kernel: 3, horizon: 2, ..tiny_config() };
    let m = ForecastModel::<f64>::init(&cfg, (9, 2)).unwrap();
    let x = Array2::from_shape_fn((9, 2), |(t, c)| ((t * 3 + c) as f64).cos());
    let full = m.forward(x.view()).unwrap();
    let slice = x.as_slice().unwrap();
    let mut state = m.begin();
    for rows in [2, 2, 5, 9] {
        m.advance(&mut state, slice, rows);
    }
    assert_eq!(m.finish(&state).unwrap(), full);
}

#[test]
fn gate_activations_in_range() {
    let m = ForecastModel::<f64>::init(&ModelConfig { horizon: 4, ..ModelConfig::default() }, (16, 3)).unwrap();
    let x = Array2::from_shape_fn((16, 3), |(t, c)| ((t * 7 + c * 3) as f64 * 0.61).sin() * 2.0);
    let trace = m.trace(x.view()).unwrap();
    let units = 50;
    for step in trace.gates.chunks(4 * units) {
        for (r, &g) in step.iter().enumerate() {
            if r / units == 2 {
                assert!(g > -1.0 && g < 1.0);
            } else {
                assert!(g > 0.0 && g < 1.0);
            }
        }
    }
}

#[test]
fn f32_tracks_f64() {
    let m64 = ForecastModel::<f64>::init(&tiny_config(), (5, 1)).unwrap();
    let m32: ForecastModel<f32> = m64.cast();
    let x = Array2::from_shape_fn((5, 1), |(t, _)| t as f64 * 0.2 - 0.4);
    let y64 = m64.forward(x.view()).unwrap();
    let y32 = m32.forward(x.mapv(|v| v as f32).view()).unwrap();
    for (a, b) in y64.iter().zip(&y32) {
        assert_abs_diff_eq!(*a, *b as f64, epsilon = 1e-5);
    }
}

fn random_window(w: usize, k: usize, horizon: usize, salt: f64) -> SlidingWindow<f64> {
    window(
        Array2::from_shape_fn((w, k), |(t, c)| ((t * k + c) as f64 * 1.37 + salt).sin()),
        (0..horizon).map(|i| (i as f64 * 0.7 + salt).cos()).collect(),
    )
}

#[test]
fn gradient_check_tiny_net() {
    let cfg = ModelConfig { conv_filters: 3, conv_kernel: 3, lstm_units: 4, dense_units: 5, horizon: 3, seed: 3, ..ModelConfig::default() };
    let m = ForecastModel::<f64>::init(&cfg, (8, 2)).unwrap();
    let check = gradient_check(&m, &random_window(8, 2, 3, 0.3), 1e-5).unwrap();
    assert!(check.max_relative_error < 1e-4, "{}", check.max_relative_error);
}

#[test]
fn zero_loss_has_zero_output_bias_gradient() {
    let mut m = ForecastModel::<f64>::init(&tiny_config(), (5, 1)).unwrap();
    m.tensor_mut("output.weight").unwrap().iter_mut().for_each(|p| *p = 0.0);
    m.tensor_mut("output.bias").unwrap().copy_from_slice(&[0.25, -0.5]);
    let w = window(Array2::from_elem((5, 1), 0.4), vec![0.25, -0.5]);
    let check = gradient_check(&m, &w, 1e-5).unwrap();
    let spec = m.tensors().into_iter().find(|t| t.name == "output.bias").unwrap();
    assert!(check.analytic[spec.offset..spec.offset + 2].iter().all(|&g| g == 0.0));
}

#[test]
fn gradient_check_is_stable_in_epsilon() {
    let cfg = ModelConfig { conv_filters: 3, conv_kernel: 2, lstm_units: 4, dense_units: 4, horizon: 2, seed: 9, ..ModelConfig::default() };
    let m = ForecastModel::<f64>::init(&cfg, (7, 1)).unwrap();
    let w = random_window(7, 1, 2, 1.1);
    let a = gradient_check(&m, &w, 1e-5).unwrap();
    let b = gradient_check(&m, &w, 2e-5).unwrap();
    let mut idx: Vec<usize> = (0..a.analytic.len()).collect();
    idx.sort_by(|&i, &j| a.analytic[j].abs().total_cmp(&a.analytic[i].abs()));
    for &i in &idx[..10] {
        assert_eq!(a.numeric[i].signum(), b.numeric[i].signum(), "component {i}");
        assert_abs_diff_eq!(a.numeric[i], b.numeric[i], epsilon = 1e-6);
    }
}

#[test]
fn perfect_stub_has_zero_window_rmse() {
    struct Lookup;
    impl Predictor<f64> for Lookup {
        fn input_shape(&self) -> (usize, usize) {
            (4, 1)
        }
        fn horizon(&self) -> usize {
            2
        }
        fn predict(&self, input: ArrayView2<f64>) -> Result<Vec<f64>> {
            // the series is t -> t, so the next values follow the last input
            let last = input[[3, 0]];
            Ok(vec![last + 1.0, last + 2.0])
        }
    }
    let series = vec![(0..20).map(f64::from).collect::<Vec<_>>()];
    let windows = generate_windows(&series, 4, 2, 3, 0).unwrap();
    let preds = predict_all(&Lookup, &windows).unwrap();
    assert_eq!(preds.len(), windows.len());
    assert!(preds.iter().all(|p| p.rmse == 0.0));
    assert_eq!(representation_rmse(&preds, &windows).unwrap(), 0.0);
}

#[test]
fn representation_rmse_matches_recomputation() {
    let m = ForecastModel::<f64>::init(&ModelConfig { horizon: 3, ..tiny_config() }, (6, 1)).unwrap();
    let windows = sine_windows(10, 6, 3);
    let preds = predict_all(&m, &windows).unwrap();
    let mut sq = 0.0;
    let mut n = 0;
    for (p, w) in preds.iter().zip(&windows) {
        for (a, b) in p.predicted.iter().zip(&w.target) {
            sq += (a - b) * (a - b);
            n += 1;
        }
    }
    assert_abs_diff_eq!(representation_rmse(&preds, &windows).unwrap(), (sq / n as f64).sqrt(), epsilon = 1e-12);
    let again = predict_all(&m, &windows).unwrap();
    assert_eq!(preds, again);
}

fn small_train_config(horizon: usize, epochs: usize) -> ModelConfig {
    ModelConfig {
        conv_filters: 8,
        conv_kernel: 3,
        lstm_units: 16,
        dense_units: 16,
        horizon,
        learning_rate: 5e-3,
        epochs,
        batch_size: 16,
        seed: 5,
    }
}

#[test]
fn learns_last_value_of_linear_trend() {
    let windows: Vec<_> = (0..200)
        .map(|i| {
            let slope = ((i * 37) % 100) as f64 / 100.0 * 0.08 - 0.04;
            let level = ((i * 53) % 100) as f64 / 100.0 * 0.5 + 0.25;
            let input = Array2::from_shape_fn((8, 1), |(t, _)| level + slope * (t as f64 - 7.0));
            SlidingWindow { index: i, start: i, target: vec![level], input }
        })
        .collect();
    let cfg = small_train_config(1, 100);
    let model = ForecastModel::init(&cfg, (8, 1)).unwrap();
    let (train_w, val_w) = windows.split_at(160);
    let (_, result) = train(model, train_w, val_w, &cfg).unwrap();
    assert_eq!(result.epoch_losses.len(), 100);
    assert!(result.train_rmse < 0.05, "train rmse {}", result.train_rmse);
}

#[test]
fn sine_losses_decrease() {
    let windows = sine_windows(60, 12, 3);
    let cfg = small_train_config(3, 40);
    let model = ForecastModel::init(&cfg, (12, 1)).unwrap();
    let (_, result) = train(model, &windows[..48], &windows[48..], &cfg).unwrap();
    let first: f64 = result.epoch_losses[..10].iter().sum();
    let last: f64 = result.epoch_losses[30..].iter().sum();
    assert!(last < first, "first {first} last {last}");
}

#[test]
fn training_is_deterministic() {
    let windows = sine_windows(30, 8, 2);
    let cfg = small_train_config(2, 5);
    let run = || {
        let model = ForecastModel::init(&cfg, (8, 1)).unwrap();
        train(model, &windows[..24], &windows[24..], &cfg).unwrap()
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(a, b);
    assert_eq!(ra.epoch_losses, rb.epoch_losses);
}

#[test]
fn overfits_eight_windows() {
    let windows = sine_windows(10, 12, 2);
    let cfg = ModelConfig { epochs: 500, batch_size: 8, ..small_train_config(2, 500) };
    let model = ForecastModel::init(&cfg, (12, 1)).unwrap();
    let (_, result) = train(model, &windows[..8], &windows[8..], &cfg).unwrap();
    assert!(result.train_rmse < 1e-2, "train rmse {}", result.train_rmse);
}

#[test]
fn divergence_is_reported() {
    let windows = sine_windows(10, 6, 1);
    let cfg = ModelConfig { learning_rate: 1e300, epochs: 3, ..small_train_config(1, 3) };
    let model = ForecastModel::init(&cfg, (6, 1)).unwrap();
    assert!(matches!(train(model, &windows[..8], &windows[8..], &cfg), Err(Error::DivergedLoss { .. })));
}

#[test]
fn parameters_round_trip() {
    let m = ForecastModel::<f64>::init(&tiny_config(), (5, 1)).unwrap();
    let back = ForecastModel::from_parameters(m.config(), m.input_shape(), m.parameters().to_vec()).unwrap();
    assert_eq!(m, back);
    assert!(ForecastModel::<f64>::from_parameters(m.config(), m.input_shape(), vec![0.0; 3]).is_err());
}
