use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slide::{Polygon, SlideImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub polygons: Vec<Polygon>,
}

pub fn parse_annotations(json: &str) -> Result<Vec<Polygon>> {
    Ok(serde_json::from_str::<AnnotationFile>(json)?.polygons)
}

pub fn annotations_json(polygons: &[Polygon]) -> String {
    serde_json::to_string(&AnnotationFile {
        polygons: polygons.to_vec(),
    })
    .expect("polygons serialize")
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<Polygon>> {
    parse_annotations(&read_text(path)?)
}

pub fn write_annotations(polygons: &[Polygon], path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &annotations_json(polygons))
}

/// Reads any PNG and converts it to 8-bit RGB.
pub fn read_slide_png(path: impl AsRef<Path>) -> Result<SlideImage> {
    let rgb = image::open(path.as_ref())?.into_rgb8();
    let (w, h) = rgb.dimensions();
    SlideImage::new(w as usize, h as usize, rgb.into_raw(), 0.0)
}

pub fn write_slide_png(slide: &SlideImage, path: impl AsRef<Path>) -> Result<()> {
    image::save_buffer(
        path.as_ref(),
        slide.pixels(),
        slide.width() as u32,
        slide.height() as u32,
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(())
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// `bench.csv`, one `{metric}_{method}.csv` per curve, the ROAD random
/// control curves and `suite_config.json` describing the run.
pub fn write_suite_outputs(
    report: &crate::bench::SuiteReport,
    config: &crate::bench::SuiteConfig,
    dir: impl AsRef<Path>,
) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<()> {
        let path = dir.join(name);
        write_text(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    emit("bench.csv".into(), report.benchmark.to_csv())?;
    for (method, curve) in &report.curves {
        emit(
            format!("{}_{}.csv", curve.metric().name().to_lowercase(), method.name()),
            curve.to_csv(),
        )?;
    }
    for (i, curve) in report.road_controls.iter().enumerate() {
        emit(format!("road_random_control_{i:02}.csv"), curve.to_csv())?;
    }
    if let Some(mean) = report.road_control_mean() {
        emit("road_random_control_mean.csv".into(), mean.to_csv())?;
    }
    let occ = &config.method_config.occlusion;
    let lrp = &config.method_config.lrp;
    let description = serde_json::json!({
        "methods": config.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "metrics": config.metrics.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "class_index": config.class_index,
        "seed": config.seed,
        "occlusion": { "window": occ.window, "stride": occ.stride, "baseline": occ.baseline },
        "lrp": { "epsilon": lrp.epsilon, "alpha": lrp.alpha, "beta": lrp.beta },
        "road_percentiles": config.road_percentiles,
        "road_noise_sigma": config.noise_sigma,
        "road_positive_only": config.road_positive_only,
        "road_tile_count": report.road_tile_count,
        "wg_percentiles": config.wg_percentiles,
        "wg_q": config.wg_q,
        "parallel": config.parallel,
        "memory_metric": "host peak RSS delta, sampled every 100 ms",
    });
    emit("suite_config.json".into(), serde_json::to_string_pretty(&description)?)?;
    Ok(written)
}
