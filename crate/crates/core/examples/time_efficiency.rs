//! Table-1 style timing: per-tile mean and spread, slide total, peak memory
//! growth and pass counts for every method on a randomly initialised
//! mini-VGG.
//!
//!     cargo run --release --example time_efficiency -- [tile_side] [tiles]

use saliency_bench::bench::{benchmark_method, BenchEntry, BenchmarkReport};
use saliency_bench::engine::mini_vgg;
use saliency_bench::fixture::{generate_fixture, FixtureSpec};
use saliency_bench::saliency::{MethodConfig, MethodId, OcclusionConfig};

fn main() -> saliency_bench::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map_or(64, |s| s.parse().expect("tile side"));
    let count: usize = args.next().map_or(60, |s| s.parse().expect("tile count"));

    let fixture = generate_fixture(5, &FixtureSpec::default())?;
    let (w, h) = fixture.slide.dims();
    let tiles = (0..count)
        .map(|i| {
            let x = (i * 37) % (w - side);
            let y = (i * 53) % (h - side);
            fixture.slide.extract_tile((x, y), side)
        })
        .collect::<saliency_bench::Result<Vec<_>>>()?;

    let model = mini_vgg(side, 11)?;
    let config = MethodConfig {
        occlusion: OcclusionConfig::scaled_to(side),
        ..Default::default()
    };
    println!(
        "mini-VGG on {count} tiles of {side}px, occlusion window {} stride {}",
        config.occlusion.window, config.occlusion.stride
    );
    let mut report = BenchmarkReport::default();
    for method in MethodId::ALL {
        let (row, _) = benchmark_method(method, &model, &tiles, 1, &config)?;
        report.entries.push(BenchEntry::Measured(row));
    }
    print!("{}", report.to_csv());
    let cam = report.row(MethodId::Cam).expect("measured").tile_time_mean_s;
    let occ = report.row(MethodId::Occlusion).expect("measured").tile_time_mean_s;
    println!("occlusion / CAM time per tile: {:.0}x", occ / cam);
    Ok(())
}
