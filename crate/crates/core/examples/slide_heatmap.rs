//! Tile a synthetic slide, explain every tissue tile with HiResCAM and stitch
//! the tile maps into one slide-level heatmap.
//!
//!     cargo run --release --example slide_heatmap -- [out_dir]

use saliency_bench::bench::PreparedSlide;
use saliency_bench::engine::PassCounter;
use saliency_bench::fixture::{generate_fixture, lesion_detector, FixtureSpec};
use saliency_bench::io;
use saliency_bench::metrics::weighting_game;
use saliency_bench::saliency::{explain, MethodConfig, MethodId};
use saliency_bench::slide::{stitch_maps, TileGeometry};

fn main() -> saliency_bench::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/examples-out/slide_heatmap".into());
    io::ensure_dir(&out)?;

    let fixture = generate_fixture(21, &FixtureSpec::default())?;
    let geometry = TileGeometry::scaled(64);
    let slide = PreparedSlide::with_defaults(&fixture.slide, Some(&fixture.polygons), geometry)?;
    println!(
        "{}x{} slide: {} tiles, {} with tissue, {} labelled lesion",
        fixture.slide.width(),
        fixture.slide.height(),
        slide.grid.len(),
        slide.tiles.len(),
        slide.positive_indices().len()
    );

    let model = lesion_detector(geometry.tile_size)?;
    let counter = PassCounter::new();
    let maps = slide
        .tiles
        .iter()
        .map(|t| explain(MethodId::HiResCam, &model, t, 1, &MethodConfig::default(), &counter))
        .collect::<saliency_bench::Result<Vec<_>>>()?;
    let stitched = stitch_maps(&slide.grid, &maps)?;

    let annotation = slide.annotation.as_ref().expect("fixture is annotated");
    let wg = weighting_game(&stitched, &annotation.mask, &[5.0, 25.0, 100.0])?;
    println!(
        "slide-level share of saliency inside lesions (top 5/25/100%): {:.3?}",
        wg.values()
    );

    io::write_slide_png(&fixture.slide, format!("{out}/slide.png"))?;
    io::write_salm(&stitched, format!("{out}/slide_hirescam.salm"))?;
    io::render_heatmap(&stitched, format!("{out}/slide_hirescam.png"))?;
    println!("written to {out}");
    Ok(())
}
