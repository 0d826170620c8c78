mod common;

use common::{random_model, random_tensor, rng};
use proptest::prelude::*;
use saliency_bench::engine::{init_uniform, mini_vgg_layers, Layer, ModelSpec, PassCounter};
use saliency_bench::saliency::*;

fn lrp_gap(model: &ModelSpec, seed: u64, params: &LrpParams) -> f64 {
    let x = random_tensor(&model.input_shape(), &mut rng(seed), 0.0, 1.0);
    let trace = model.forward(&x).unwrap();
    let logits = trace.logits().to_vec();
    let class = (0..logits.len())
        .max_by(|&a, &b| logits[a].abs().total_cmp(&logits[b].abs()))
        .unwrap();
    let map = lrp_composite_map(model, &trace, class, params, &PassCounter::new()).unwrap();
    let total: f64 = map.values().iter().sum();
    (total - logits[class]).abs() / logits[class].abs()
}

#[test]
fn lrp_conserves_relevance_on_bias_free_nets() {
    for (alpha, beta) in [(1.0, 0.0), (2.0, 1.0)] {
        let params = LrpParams {
            epsilon: 1e-9,
            alpha,
            beta,
        };
        for seed in 0..10 {
            let model = random_model(seed, 12, false);
            let gap = lrp_gap(&model, seed + 50, &params);
            assert!(gap <= 1e-6, "alpha {alpha} seed {seed}: relative gap {gap}");
        }
    }
}

#[test]
fn lrp_conserves_on_bias_free_mini_vgg() {
    let mut layers = mini_vgg_layers();
    init_uniform(&mut layers, 9);
    let model = ModelSpec::new([3, 32, 32], layers).unwrap();
    assert!(
        lrp_gap(
            &model,
            3,
            &LrpParams {
                epsilon: 1e-9,
                ..Default::default()
            }
        ) <= 1e-6
    );
}

#[test]
fn hirescam_is_cam_over_area_on_average_pooled_nets() {
    for seed in 0..6 {
        let mut layers = mini_vgg_layers();
        let n = layers.len();
        layers[n - 2] = Layer::GlobalAvgPool;
        init_uniform(&mut layers, seed);
        let model = ModelSpec::new([3, 32, 32], layers).unwrap();
        let x = random_tensor(&[3, 32, 32], &mut rng(seed), 0.0, 1.0);
        let trace = model.forward(&x).unwrap();
        for class in 0..2 {
            let cam = cam_raw(&model, &trace, class).unwrap();
            let hr = hirescam_raw(&model, &trace, class, None, &PassCounter::new()).unwrap();
            let area = (cam.width() * cam.height()) as f64;
            for (c, h) in cam.values().iter().zip(hr.values()) {
                assert!((h - c / area).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn occlusion_window_enumeration() {
    assert_eq!(window_starts(512, 64, 32).len(), 15);
    assert_eq!(occlusion_window_count(512, 512, &OcclusionConfig::default()), 225);
    // Last window clamped flush to the border when the stride does not divide.
    assert_eq!(window_starts(10, 4, 4), vec![0, 4, 6]);
}

#[test]
fn upsampling_keeps_corners_and_constants() {
    let raw = SaliencyMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0], MethodId::Cam, 0).unwrap();
    let up = upsample_map(&raw, 5, 5, Interpolation::Bilinear).unwrap();
    assert_eq!(
        (up.get(0, 0), up.get(4, 0), up.get(0, 4), up.get(4, 4)),
        (1.0, 2.0, 3.0, 4.0)
    );
    assert!((up.get(2, 2) - 2.5).abs() < 1e-15);
    let flat = SaliencyMap::new(3, 2, vec![7.0; 6], MethodId::Cam, 0).unwrap();
    let up = upsample_map(&flat, 9, 4, Interpolation::Nearest).unwrap();
    assert!(up.values().iter().all(|&v| v == 7.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradcampp_is_nonnegative(seed in 0u64..10_000) {
        let model = random_model(4 * (seed % 50), 12, true);
        let x = random_tensor(&[1, 12, 12], &mut rng(seed), -1.0, 1.0);
        let trace = model.forward(&x).unwrap();
        let map = gradcampp_map(&model, &trace, 0, &CamOptions::default(), &PassCounter::new()).unwrap();
        prop_assert!(map.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn cam_scales_with_head(seed in 0u64..10_000, lambda in 0.1f64..10.0) {
        let model = random_model(4 * (seed % 50) + 1, 10, true);
        let x = random_tensor(&[1, 10, 10], &mut rng(seed), -1.0, 1.0);
        let mut layers = model.clone().into_layers();
        if let Some(Layer::Dense(d)) = layers.last_mut() {
            d.weights.iter_mut().for_each(|w| *w *= lambda);
        }
        let scaled = ModelSpec::new(model.input_shape(), layers).unwrap();
        let a = cam_raw(&model, &model.forward(&x).unwrap(), 1).unwrap();
        let b = cam_raw(&scaled, &scaled.forward(&x).unwrap(), 1).unwrap();
        for (p, q) in a.values().iter().zip(b.values()) {
            prop_assert!((p * lambda - q).abs() <= 1e-12 * q.abs().max(1.0));
        }
    }
}
