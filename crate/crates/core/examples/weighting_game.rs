//! Weighting Game: how much rectified saliency mass falls inside the lesion
//! annotation (localization) and inside the top of the occlusion map
//! (usefulness).
//!
//!     cargo run --release --example weighting_game

use saliency_bench::bench::{run_suite, PreparedSlide, SuiteConfig};
use saliency_bench::fixture::{generate_fixture, lesion_detector, FixtureSpec};
use saliency_bench::metrics::MetricId;
use saliency_bench::saliency::{MethodId, OcclusionConfig};
use saliency_bench::slide::TileGeometry;

fn main() -> saliency_bench::Result<()> {
    let fixture = generate_fixture(3, &FixtureSpec::default())?;
    let slide = PreparedSlide::with_defaults(&fixture.slide, Some(&fixture.polygons), TileGeometry::scaled(64))?;
    let model = lesion_detector(64)?;

    let mut config = SuiteConfig {
        metrics: vec![MetricId::WgAnnotation, MetricId::WgReference],
        wg_percentiles: vec![5.0, 10.0, 20.0, 50.0, 100.0],
        ..SuiteConfig::default()
    };
    let baseline = fixture.slide.mean_color(&fixture.tissue_mask).expect("tissue");
    config.method_config.occlusion = OcclusionConfig::scaled_to(64).with_baseline(baseline.to_vec());
    let report = run_suite(&model, &slide, &config)?;

    for metric in [MetricId::WgAnnotation, MetricId::WgReference] {
        println!("{metric} at p = {:?}", config.wg_percentiles);
        for method in MethodId::ALL {
            let curve = report.curve(method, metric).expect("every method ran");
            let v: Vec<String> = curve.values().iter().map(|v| format!("{v:.3}")).collect();
            println!("  {:<14} {}", method.label(), v.join("  "));
        }
    }
    Ok(())
}
