//! Explain one lesion tile with all five methods and write each map as SALM
//! plus a heatmap PNG.
//!
//!     cargo run --release --example explain_tile -- [out_dir]

use saliency_bench::engine::PassCounter;
use saliency_bench::fixture::{generate_fixture, lesion_detector, FixtureSpec};
use saliency_bench::io;
use saliency_bench::saliency::{explain, MethodConfig, MethodId, OcclusionConfig};
use saliency_bench::slide::SlideImage;

fn main() -> saliency_bench::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/examples-out/explain_tile".into());
    io::ensure_dir(&out)?;

    let fixture = generate_fixture(7, &FixtureSpec::default())?;
    let side = 64;
    let model = lesion_detector(side)?;

    // The tile the detector is most confident is a lesion.
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for y in (0..=fixture.slide.height() - side).step_by(16) {
        for x in (0..=fixture.slide.width() - side).step_by(16) {
            let logits = model
                .forward(&fixture.slide.extract_tile((x, y), side)?)?
                .logits()
                .to_vec();
            if logits[1] - logits[0] > best.0 {
                best = (logits[1] - logits[0], (x, y));
            }
        }
    }
    let origin = best.1;
    let tile = fixture.slide.extract_tile(origin, side)?;

    let baseline = fixture
        .slide
        .mean_color(&fixture.tissue_mask)
        .expect("fixture has tissue");
    let config = MethodConfig {
        occlusion: OcclusionConfig::scaled_to(side).with_baseline(baseline.to_vec()),
        ..Default::default()
    };
    let logits = model.forward(&tile)?.logits().to_vec();
    println!("tile at {origin:?}, logits {logits:.3?}");

    for method in MethodId::ALL {
        let counter = PassCounter::new();
        let map = explain(method, &model, &tile, 1, &config, &counter)?;
        let (lo, hi) = map.min_max();
        let passes = counter.snapshot();
        println!(
            "{:<14} range [{lo:+.4}, {hi:+.4}]  forwards {:>3}  backwards {}",
            method.label(),
            passes.forwards,
            passes.backwards
        );
        io::write_salm(&map, format!("{out}/tile_{}.salm", method.name()))?;
        io::render_heatmap(&map, format!("{out}/tile_{}.png", method.name()))?;
    }
    let crop = SlideImage::new(
        side,
        side,
        (0..side)
            .flat_map(|y| (0..side).map(move |x| (x, y)))
            .flat_map(|(x, y)| fixture.slide.rgb(origin.0 + x, origin.1 + y))
            .collect(),
        fixture.slide.microns_per_pixel(),
    )?;
    io::write_slide_png(&crop, format!("{out}/tile.png"))?;
    println!("maps written to {out}");
    Ok(())
}
