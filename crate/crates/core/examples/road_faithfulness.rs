//! ROAD curves: confidence after removing and imputing the most salient
//! pixels, against random-saliency controls. Lower is more faithful.
//!
//!     cargo run --release --example road_faithfulness

use saliency_bench::bench::{random_saliency, PreparedSlide};
use saliency_bench::engine::PassCounter;
use saliency_bench::fixture::{generate_fixture, lesion_detector, FixtureSpec};
use saliency_bench::metrics::{road_curve, MetricCurve, DEFAULT_NOISE_SIGMA, ROAD_PERCENTILES};
use saliency_bench::saliency::{explain, MethodConfig, MethodId, OcclusionConfig};
use saliency_bench::slide::TileGeometry;

fn main() -> saliency_bench::Result<()> {
    let fixture = generate_fixture(7, &FixtureSpec::default())?;
    let slide = PreparedSlide::with_defaults(&fixture.slide, Some(&fixture.polygons), TileGeometry::scaled(64))?;
    let positives: Vec<_> = slide
        .positive_indices()
        .iter()
        .map(|&i| slide.tiles[i].clone())
        .collect();
    println!("{} lesion-labelled tiles", positives.len());

    let model = lesion_detector(64)?;
    let baseline = fixture.slide.mean_color(&fixture.tissue_mask).expect("tissue");
    let config = MethodConfig {
        occlusion: OcclusionConfig::scaled_to(64).with_baseline(baseline.to_vec()),
        ..Default::default()
    };
    let seed = 1;
    let print = |name: &str, c: &MetricCurve| {
        let v: Vec<String> = c.values().iter().map(|v| format!("{v:.3}")).collect();
        println!("{name:<16}{}", v.join("  "));
    };
    println!(
        "{:<16}{}",
        "p (%)",
        ROAD_PERCENTILES.map(|p| format!("{p:<5}")).join("  ")
    );

    for method in MethodId::ALL {
        let maps = positives
            .iter()
            .map(|t| explain(method, &model, t, 1, &config, &PassCounter::new()))
            .collect::<saliency_bench::Result<Vec<_>>>()?;
        let curve = road_curve(
            &model,
            &positives,
            &maps,
            1,
            &ROAD_PERCENTILES,
            DEFAULT_NOISE_SIGMA,
            seed,
        )?;
        print(method.label(), &curve);
    }

    let controls = (0..5)
        .map(|c| {
            let maps: Vec<_> = (0..positives.len())
                .map(|i| random_saliency(64, 64, 1, 1000 * c + i as u64))
                .collect();
            road_curve(
                &model,
                &positives,
                &maps,
                1,
                &ROAD_PERCENTILES,
                DEFAULT_NOISE_SIGMA,
                seed,
            )
        })
        .collect::<saliency_bench::Result<Vec<_>>>()?;
    print("random (mean)", &MetricCurve::mean(&controls)?);
    Ok(())
}
