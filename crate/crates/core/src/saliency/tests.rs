use super::*;
use crate::engine::{init_uniform, mini_vgg, Conv2d, Dense, Layer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tile(shape: [usize; 3], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

fn linear_scorer(side: usize, seed: u64) -> (ModelSpec, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..side * side).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let model = ModelSpec::new(
        [1, side, side],
        vec![Layer::Dense(Dense::new(side * side, 1, w.clone(), vec![0.0]))],
    )
    .unwrap();
    (model, w)
}

fn gap_variant(seed: u64) -> ModelSpec {
    let mut layers = crate::engine::mini_vgg_layers();
    let n = layers.len();
    layers[n - 2] = Layer::GlobalAvgPool;
    init_uniform(&mut layers, seed);
    ModelSpec::new([3, 32, 32], layers).unwrap()
}

#[test]
fn occlusion_of_constant_model_is_zero() {
    let model = ModelSpec::new(
        [1, 8, 8],
        vec![Layer::Dense(Dense::new(64, 1, vec![0.0; 64], vec![0.7]))],
    )
    .unwrap();
    let cfg = OcclusionConfig {
        window: 4,
        stride: 2,
        baseline: vec![0.0],
    };
    let map = occlusion_map(&model, &random_tile([1, 8, 8], 1), &cfg, 0, &PassCounter::new()).unwrap();
    assert!(map.values().iter().all(|&v| v == 0.0));
}

#[test]
fn occlusion_of_linear_scorer_matches_window_contribution() {
    let (model, w) = linear_scorer(4, 2);
    let tile = random_tile([1, 4, 4], 3);
    let x = tile.data();
    // Single window over the whole tile.
    let whole = OcclusionConfig {
        window: 4,
        stride: 4,
        baseline: vec![0.0],
    };
    let map = occlusion_map(&model, &tile, &whole, 0, &PassCounter::new()).unwrap();
    let total: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
    assert!(map.values().iter().all(|&v| (v - total).abs() < 1e-12));

    // Four disjoint 2x2 windows: each pixel gets its own window's contribution.
    let quads = OcclusionConfig {
        window: 2,
        stride: 2,
        baseline: vec![0.0],
    };
    let map = occlusion_map(&model, &tile, &quads, 0, &PassCounter::new()).unwrap();
    for y in 0..4 {
        for xx in 0..4 {
            let (y0, x0) = (y / 2 * 2, xx / 2 * 2);
            let mut drop = 0.0;
            for dy in 0..2 {
                for dx in 0..2 {
                    let i = (y0 + dy) * 4 + x0 + dx;
                    drop += w[i] * x[i];
                }
            }
            assert!((map.get(xx, y) - drop).abs() < 1e-12);
        }
    }
}

#[test]
fn occlusion_overlap_is_mean_of_drops() {
    let (model, w) = linear_scorer(3, 4);
    let tile = random_tile([1, 3, 3], 5);
    let cfg = OcclusionConfig {
        window: 2,
        stride: 1,
        baseline: vec![0.0],
    };
    let map = occlusion_map(&model, &tile, &cfg, 0, &PassCounter::new()).unwrap();
    // Centre pixel (1,1) is covered by all four windows.
    let contrib = |y0: usize, x0: usize| {
        let mut s = 0.0;
        for dy in 0..2 {
            for dx in 0..2 {
                let i = (y0 + dy) * 3 + x0 + dx;
                s += w[i] * tile.data()[i];
            }
        }
        s
    };
    let expected = (contrib(0, 0) + contrib(0, 1) + contrib(1, 0) + contrib(1, 1)) / 4.0;
    assert!((map.get(1, 1) - expected).abs() < 1e-12);
    assert!((map.get(0, 0) - contrib(0, 0)).abs() < 1e-12);
}

#[test]
fn cam_examples() {
    // Zero head weights.
    let mut layers = crate::engine::mini_vgg_layers();
    init_uniform(&mut layers, 7);
    let n = layers.len();
    if let Layer::Dense(d) = &mut layers[n - 1] {
        d.weights.iter_mut().for_each(|w| *w = 0.0);
    }
    let model = ModelSpec::new([3, 32, 32], layers).unwrap();
    let trace = model.forward(&random_tile([3, 32, 32], 8)).unwrap();
    let map = cam_map(&model, &trace, 1, Interpolation::Bilinear).unwrap();
    assert!(map.values().iter().all(|&v| v == 0.0));

    // One channel, w = 2: map = 2A.
    let model = ModelSpec::new(
        [1, 2, 2],
        vec![
            Layer::GlobalMaxPool,
            Layer::Dense(Dense::new(1, 1, vec![2.0], vec![0.0])),
        ],
    )
    .unwrap();
    let a = Tensor::new(vec![1, 2, 2], vec![0.5, -1.0, 3.0, 0.25]).unwrap();
    let trace = model.forward(&a).unwrap();
    let raw = cam_raw(&model, &trace, 0).unwrap();
    assert_eq!(raw.values(), &[1.0, -2.0, 6.0, 0.5]);
}

#[test]
fn cam_requires_pool_dense_tail() {
    let (model, _) = linear_scorer(4, 1);
    let trace = model.forward(&random_tile([1, 4, 4], 1)).unwrap();
    assert!(matches!(cam_raw(&model, &trace, 0), Err(Error::NotCamEligible)));
    assert!(matches!(
        explain(
            MethodId::Cam,
            &model,
            &random_tile([1, 4, 4], 1),
            0,
            &MethodConfig::default(),
            &PassCounter::new()
        ),
        Err(Error::NotCamEligible)
    ));
}

#[test]
fn cam_matches_direct_definition_on_mini_vgg() {
    let model = mini_vgg(64, 13).unwrap();
    let trace = model.forward(&random_tile([3, 64, 64], 14)).unwrap();
    let raw = cam_raw(&model, &trace, 1).unwrap();
    let n = model.layers().len();
    let act = &trace.activations[n - 3];
    let Layer::Dense(head) = &model.layers()[n - 1] else {
        unreachable!()
    };
    let (c, h, w) = act.dims3().unwrap();
    for y in 0..h {
        for x in 0..w {
            let mut v = 0.0;
            for k in 0..c {
                v += head.weights[c + k] * act.at3(k, y, x);
            }
            assert!((raw.get(x, y) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
    let up = cam_map(&model, &trace, 1, Interpolation::Bilinear).unwrap();
    assert_eq!(up.dims(), (64, 64));
}

#[test]
fn gradient_methods_vanish_with_zero_gradient() {
    let mut layers = crate::engine::mini_vgg_layers();
    init_uniform(&mut layers, 3);
    let n = layers.len();
    if let Layer::Dense(d) = &mut layers[n - 1] {
        d.weights.iter_mut().for_each(|w| *w = 0.0);
    }
    let model = ModelSpec::new([3, 32, 32], layers).unwrap();
    let trace = model.forward(&random_tile([3, 32, 32], 4)).unwrap();
    let counter = PassCounter::new();
    let pp = gradcampp_map(&model, &trace, 0, &CamOptions::default(), &counter).unwrap();
    let hr = hirescam_map(&model, &trace, 0, &CamOptions::default(), &counter).unwrap();
    assert!(pp.values().iter().all(|&v| v == 0.0));
    assert!(hr.values().iter().all(|&v| v == 0.0));
}

#[test]
fn gradcampp_single_pixel_closed_form() {
    // A is 1x1x1 (value a) feeding GAP and a dense weight g > 0, so the
    // gradient at A is g.
    for (a, g) in [(0.8f64, 1.5f64), (2.0, 0.25), (0.1, 3.0)] {
        let model = ModelSpec::new(
            [1, 1, 1],
            vec![
                Layer::Relu,
                Layer::GlobalAvgPool,
                Layer::Dense(Dense::new(1, 1, vec![g], vec![0.0])),
            ],
        )
        .unwrap();
        let trace = model.forward(&Tensor::new(vec![1, 1, 1], vec![a]).unwrap()).unwrap();
        let map = gradcampp_raw(&model, &trace, 0, Some(0), &PassCounter::new()).unwrap();
        let alpha = g * g / (2.0 * g * g + a * g * g * g);
        let expected = (alpha * g * a).max(0.0);
        assert!((map.values()[0] - expected).abs() < 1e-15);
    }
}

#[test]
fn gradcampp_matches_reimplementation_on_mini_vgg() {
    let model = mini_vgg(64, 21).unwrap();
    let trace = model.forward(&random_tile([3, 64, 64], 22)).unwrap();
    let target = model.default_target_layer().unwrap();
    let map = gradcampp_raw(&model, &trace, 1, None, &PassCounter::new()).unwrap();
    let grads = model.backward(&trace, 1).unwrap();
    let a = &trace.activations[target];
    let g = grads.wrt_layer(target);
    let (c, h, w) = a.dims3().unwrap();
    let mut weights = vec![0.0; c];
    for k in 0..c {
        let mut sum_a = 0.0;
        for y in 0..h {
            for x in 0..w {
                sum_a += a.at3(k, y, x);
            }
        }
        for y in 0..h {
            for x in 0..w {
                let gv = g.at3(k, y, x);
                let den = 2.0 * gv.powi(2) + sum_a * gv.powi(3);
                if den != 0.0 {
                    weights[k] += gv.powi(2) / den * gv.max(0.0);
                }
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            let v: f64 = (0..c).map(|k| weights[k] * a.at3(k, y, x)).sum::<f64>().max(0.0);
            assert!((map.get(x, y) - v).abs() <= 1e-10 * v.abs().max(1.0));
        }
    }
}

#[test]
fn hirescam_with_global_max_pool_is_sparse() {
    let model = mini_vgg(64, 31).unwrap();
    let trace = model.forward(&random_tile([3, 64, 64], 32)).unwrap();
    let raw = hirescam_raw(&model, &trace, 0, None, &PassCounter::new()).unwrap();
    let nonzero = raw.values().iter().filter(|&&v| v != 0.0).count();
    assert!(nonzero <= 32, "{nonzero} nonzero entries");
}

#[test]
fn hirescam_equals_cam_over_area_with_average_pool() {
    let model = gap_variant(41);
    let trace = model.forward(&random_tile([3, 32, 32], 42)).unwrap();
    let cam = cam_raw(&model, &trace, 1).unwrap();
    let hr = hirescam_raw(&model, &trace, 1, None, &PassCounter::new()).unwrap();
    let area = (cam.width() * cam.height()) as f64;
    for (c, h) in cam.values().iter().zip(hr.values()) {
        assert!((h - c / area).abs() <= 1e-12);
    }
}

#[test]
fn lrp_single_dense_is_input_times_weight() {
    let w = vec![0.5, -1.5, 2.0, 0.25];
    let model = ModelSpec::new([1, 2, 2], vec![Layer::Dense(Dense::new(4, 1, w.clone(), vec![0.0]))]).unwrap();
    let x = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, -0.5, 4.0]).unwrap();
    let trace = model.forward(&x).unwrap();
    let params = LrpParams {
        epsilon: 1e-12,
        alpha: 2.0,
        beta: 1.0,
    };
    let map = lrp_composite_map(&model, &trace, 0, &params, &PassCounter::new()).unwrap();
    for i in 0..4 {
        assert!((map.values()[i] - w[i] * x.data()[i]).abs() < 1e-9);
    }
    let sum: f64 = map.values().iter().sum();
    assert!((sum - trace.logits()[0]).abs() < 1e-9);
}

#[test]
fn lrp_rejects_bad_params() {
    let model = mini_vgg(16, 1).unwrap();
    let trace = model.forward(&random_tile([3, 16, 16], 1)).unwrap();
    let params = LrpParams {
        epsilon: 1e-6,
        alpha: 1.5,
        beta: 1.0,
    };
    assert!(matches!(
        lrp_composite_map(&model, &trace, 0, &params, &PassCounter::new()),
        Err(Error::ParamInvalid(_))
    ));
}

#[test]
fn pass_counts_per_method() {
    let model = mini_vgg(64, 51).unwrap();
    let tile = random_tile([3, 64, 64], 52);
    let mut config = MethodConfig::default();
    config.occlusion = OcclusionConfig::scaled_to(64);
    for method in MethodId::ALL {
        let counter = PassCounter::new();
        explain(method, &model, &tile, 1, &config, &counter).unwrap();
        let c = counter.snapshot();
        let expected = match method {
            MethodId::Cam => (1, 0),
            MethodId::Occlusion => (226, 0),
            _ => (1, 1),
        };
        assert_eq!((c.forwards, c.backwards), expected, "{method}");
    }
}

#[test]
fn scaling_head_weights_scales_cam_and_hirescam() {
    let model = mini_vgg(32, 61).unwrap();
    let tile = random_tile([3, 32, 32], 62);
    let lambda = 2.5;
    let mut layers = model.clone().into_layers();
    if let Some(Layer::Dense(d)) = layers.last_mut() {
        d.weights.iter_mut().for_each(|w| *w *= lambda);
    }
    let scaled = ModelSpec::new(model.input_shape(), layers).unwrap();
    let config = MethodConfig::default();
    for method in [MethodId::Cam, MethodId::HiResCam] {
        let a = explain(method, &model, &tile, 0, &config, &PassCounter::new()).unwrap();
        let b = explain(method, &scaled, &tile, 0, &config, &PassCounter::new()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x * lambda - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
}

#[test]
fn every_method_is_deterministic() {
    let model = mini_vgg(32, 71).unwrap();
    let tile = random_tile([3, 32, 32], 72);
    let mut config = MethodConfig::default();
    config.occlusion = OcclusionConfig::scaled_to(32);
    for method in MethodId::ALL {
        let a = explain(method, &model, &tile, 1, &config, &PassCounter::new()).unwrap();
        let b = explain(method, &model, &tile, 1, &config, &PassCounter::new()).unwrap();
        assert_eq!(a, b, "{method}");
        assert_eq!(a.dims(), (32, 32));
        assert_eq!(a.method(), method);
    }
}

#[test]
fn conv_target_layer_can_be_chosen() {
    let mut layers = vec![
        Layer::Conv2d(Conv2d::zeros(1, 2, 3, 1, 1)),
        Layer::Relu,
        Layer::GlobalAvgPool,
        Layer::Dense(Dense::new(2, 2, vec![0.0; 4], vec![0.0; 2])),
    ];
    init_uniform(&mut layers, 5);
    let model = ModelSpec::new([1, 6, 6], layers).unwrap();
    let trace = model.forward(&random_tile([1, 6, 6], 6)).unwrap();
    let counter = PassCounter::new();
    let pre_relu = hirescam_raw(&model, &trace, 0, Some(0), &counter).unwrap();
    let post_relu = hirescam_raw(&model, &trace, 0, Some(1), &counter).unwrap();
    // grad * A is identical either side of a ReLU.
    for (a, b) in pre_relu.values().iter().zip(post_relu.values()) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!(hirescam_raw(&model, &trace, 0, Some(2), &counter).is_err());
}
