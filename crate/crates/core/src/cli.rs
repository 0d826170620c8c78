//! Command-line front end. Exit status: 0 on success, 2 on usage or
//! configuration errors, 1 on runtime failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_suite, PreparedSlide, SuiteConfig};
use crate::engine::{ModelSpec, PassCounter, Tensor};
use crate::error::{Error, Result};
use crate::fixture::{generate_fixture, lesion_detector, FixtureSpec};
use crate::io;
use crate::metrics::{default_wg_percentiles, MetricId, ROAD_PERCENTILES};
use crate::saliency::{explain, LrpParams, MethodConfig, MethodId, OcclusionConfig, SaliencyMap};
use crate::slide::{stitch_maps, SlideImage, TileGeometry, DEFAULT_TISSUE_FRACTION, DEFAULT_TISSUE_THRESHOLD};

#[derive(Debug, Parser)]
#[command(
    name = "saliency-bench",
    version,
    about = "Saliency maps and explanation benchmarks for tiled slides"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Model file (SMDL format).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Method name, a comma-separated list, or `all`.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Comma-separated percentile sweep (overrides the metric's default).
    #[arg(long, global = true, value_delimiter = ',')]
    percentiles: Option<Vec<f64>>,
    /// Occlusion window in pixels (default: tile side / 8).
    #[arg(long, global = true)]
    occlusion_window: Option<usize>,
    /// Occlusion stride in pixels (default: tile side / 16).
    #[arg(long, global = true)]
    occlusion_stride: Option<usize>,
    /// `mean` (mean tissue colour of the slide) or comma-separated fill values.
    #[arg(long, global = true, default_value = "mean")]
    occlusion_baseline: String,
    #[arg(long, global = true, default_value_t = 2.0)]
    lrp_alpha: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    lrp_beta: f64,
    #[arg(long, global = true, default_value_t = 1e-6)]
    lrp_epsilon: f64,
    /// Top-q% of the reference map used as the pseudo-annotation.
    #[arg(long, global = true, default_value_t = 20.0)]
    wg_q: f64,
    /// Class whose score is explained.
    #[arg(long, global = true, default_value_t = 1)]
    class: usize,
}

#[derive(Debug, Args)]
struct SlideArgs {
    /// Slide PNG (8-bit RGB).
    #[arg(long)]
    slide: PathBuf,
    /// Annotation JSON: {"polygons": [[[x, y], ...], ...]}.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    tile_size: usize,
    /// Defaults to half the tile size.
    #[arg(long)]
    stride: Option<usize>,
    /// Side of the central labelling region; defaults to half the tile size.
    #[arg(long)]
    center: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TISSUE_THRESHOLD)]
    tissue_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_TISSUE_FRACTION)]
    tissue_fraction: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explain one tile (`--tile` or `--origin`) or every tissue tile of a slide.
    Explain {
        /// A single tile PNG whose size matches the model input.
        #[arg(long, conflicts_with = "slide")]
        tile: Option<PathBuf>,
        #[arg(long)]
        slide: Option<PathBuf>,
        /// Top-left corner `x,y` of one slide tile to explain.
        #[arg(long, value_delimiter = ',')]
        origin: Option<Vec<usize>>,
        #[arg(long, default_value_t = 512)]
        tile_size: usize,
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Metric sweeps (ROAD, Weighting Game) written as curve CSVs.
    Evaluate {
        #[command(flatten)]
        slide: SlideArgs,
        /// Comma-separated subset of road, wg-annotation, wg-reference.
        #[arg(long, default_value = "road,wg-annotation,wg-reference")]
        metrics: String,
        /// Restrict ROAD to annotation-positive tiles.
        #[arg(long)]
        positive_only: bool,
        /// Number of random-saliency ROAD control curves.
        #[arg(long, default_value_t = 0)]
        controls: usize,
        #[arg(long, default_value_t = crate::metrics::DEFAULT_NOISE_SIGMA)]
        noise_sigma: f64,
    },
    /// Timing, memory and pass counts per method (bench.csv).
    Bench {
        #[command(flatten)]
        slide: SlideArgs,
        /// Explain tiles in parallel; timings are then throughput numbers.
        #[arg(long)]
        parallel: bool,
    },
    /// Tile grid preview: tiles.csv and an outlined PNG.
    Tile {
        #[command(flatten)]
        slide: SlideArgs,
    },
    /// Seeded synthetic slide, annotations and a matching detector model.
    Fixture {
        #[arg(long, default_value_t = 768)]
        width: usize,
        #[arg(long, default_value_t = 512)]
        height: usize,
        #[arg(long, default_value_t = 8)]
        lesions: usize,
        /// Tile side of the emitted detector model.
        #[arg(long, default_value_t = 64)]
        detector_side: usize,
    },
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid(_)
        | Error::ParamInvalid(_)
        | Error::PercentOutOfRange(_)
        | Error::SpecInvalid(_)
        | Error::ClassOutOfRange { .. }
        | Error::NotCamEligible
        | Error::MethodUnavailable { .. } => 2,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Explain {
            tile,
            slide,
            origin,
            tile_size,
            stride,
        } => explain_cmd(
            g,
            tile.as_deref(),
            slide.as_deref(),
            origin.as_deref(),
            *tile_size,
            *stride,
        ),
        Command::Evaluate {
            slide,
            metrics,
            positive_only,
            controls,
            noise_sigma,
        } => {
            let metrics = parse_metrics(metrics)?;
            let mut config = suite_config(g, slide, &metrics)?;
            config.road_positive_only = *positive_only;
            config.random_controls = *controls;
            config.noise_sigma = *noise_sigma;
            suite_cmd(g, slide, config)
        }
        Command::Bench { slide, parallel } => {
            let mut config = suite_config(g, slide, &[])?;
            config.parallel = *parallel;
            suite_cmd(g, slide, config)
        }
        Command::Tile { slide } => tile_cmd(g, slide),
        Command::Fixture {
            width,
            height,
            lesions,
            detector_side,
        } => fixture_cmd(g, *width, *height, *lesions, *detector_side),
    }
}

fn load_model(g: &Global) -> Result<ModelSpec> {
    let path = g
        .model
        .as_ref()
        .ok_or_else(|| Error::ConfigInvalid("--model is required".into()))?;
    io::load_model(path)
}

fn parse_methods(spec: Option<&str>, default_all: bool) -> Result<Vec<MethodId>> {
    match spec {
        None if default_all => Ok(MethodId::ALL.to_vec()),
        None => Err(Error::ConfigInvalid(format!(
            "--method is required; valid methods: {}",
            MethodId::ALL.map(|m| m.name()).join(", ")
        ))),
        Some(s) if s.eq_ignore_ascii_case("all") => Ok(MethodId::ALL.to_vec()),
        Some(s) => s.split(',').map(|m| m.trim().parse()).collect(),
    }
}

fn parse_metrics(spec: &str) -> Result<Vec<MetricId>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "road" => Ok(MetricId::Road),
            "wg-annotation" => Ok(MetricId::WgAnnotation),
            "wg-reference" => Ok(MetricId::WgReference),
            other => Err(Error::ConfigInvalid(format!(
                "unknown metric `{other}`; valid metrics: road, wg-annotation, wg-reference"
            ))),
        })
        .collect()
}

fn geometry(tile_size: usize, stride: Option<usize>, center: Option<usize>) -> TileGeometry {
    let base = TileGeometry::scaled(tile_size);
    TileGeometry {
        tile_size,
        stride: stride.unwrap_or(base.stride),
        center: center.unwrap_or(base.center),
    }
}

/// Method settings from the global flags. `tissue_mean` backs the default
/// occlusion fill.
fn method_config(g: &Global, tile_side: usize, tissue_mean: Option<[f64; 3]>) -> Result<MethodConfig> {
    let scaled = OcclusionConfig::scaled_to(tile_side);
    let baseline = if g.occlusion_baseline.eq_ignore_ascii_case("mean") {
        tissue_mean.map(|c| c.to_vec()).unwrap_or_else(|| vec![0.0])
    } else {
        g.occlusion_baseline
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::ConfigInvalid(format!("--occlusion-baseline: `{v}` is not a number")))
            })
            .collect::<Result<_>>()?
    };
    let lrp = LrpParams {
        epsilon: g.lrp_epsilon,
        alpha: g.lrp_alpha,
        beta: g.lrp_beta,
    };
    lrp.validate()?;
    Ok(MethodConfig {
        occlusion: OcclusionConfig {
            window: g.occlusion_window.unwrap_or(scaled.window),
            stride: g.occlusion_stride.unwrap_or(scaled.stride),
            baseline,
        },
        lrp,
        cam: Default::default(),
    })
}

fn write_map(map: &SaliencyMap, dir: &Path, stem: &str) -> Result<()> {
    io::ensure_dir(dir)?;
    io::write_salm(map, dir.join(format!("{stem}.salm")))?;
    io::render_heatmap(map, dir.join(format!("{stem}.png")))?;
    println!("wrote {}/{stem}.salm and {stem}.png", dir.display());
    Ok(())
}

fn tile_from_png(path: &Path) -> Result<(Tensor, [f64; 3])> {
    let img = io::read_slide_png(path)?;
    if img.width() != img.height() {
        return Err(Error::ConfigInvalid(format!(
            "--tile must be square, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let tissue = crate::slide::detect_tissue(&img, DEFAULT_TISSUE_THRESHOLD);
    let mean = img.mean_color(&tissue).unwrap_or([0.0; 3]);
    Ok((img.extract_tile((0, 0), img.width())?, mean))
}

fn explain_cmd(
    g: &Global,
    tile: Option<&Path>,
    slide: Option<&Path>,
    origin: Option<&[usize]>,
    tile_size: usize,
    stride: Option<usize>,
) -> Result<()> {
    let methods = parse_methods(g.method.as_deref(), false)?;
    let &[method] = methods.as_slice() else {
        return Err(Error::ConfigInvalid("explain takes exactly one --method".into()));
    };
    let model = load_model(g)?;
    let counter = PassCounter::new();
    if let Some(path) = tile {
        let (tensor, mean) = tile_from_png(path)?;
        let config = method_config(g, tensor.shape()[1], Some(mean))?;
        let map = explain(method, &model, &tensor, g.class, &config, &counter)?;
        return write_map(&map, &g.out_dir, &format!("tile_{}", method.name()));
    }
    let path = slide.ok_or_else(|| Error::ConfigInvalid("explain needs --tile or --slide".into()))?;
    let image = io::read_slide_png(path)?;
    let geometry = geometry(tile_size, stride, None);
    let prepared = PreparedSlide::with_defaults(&image, None, geometry)?;
    let config = method_config(g, tile_size, image.mean_color(&prepared.tissue))?;
    if let Some(o) = origin {
        if o.len() != 2 {
            return Err(Error::ConfigInvalid(format!(
                "--origin takes `x,y`, got {} values",
                o.len()
            )));
        }
        let tensor = image.extract_tile((o[0], o[1]), tile_size)?;
        let map = explain(method, &model, &tensor, g.class, &config, &counter)?;
        return write_map(&map, &g.out_dir, &format!("tile_{}", method.name()));
    }
    let maps = prepared
        .tiles
        .iter()
        .map(|t| explain(method, &model, t, g.class, &config, &counter))
        .collect::<Result<Vec<_>>>()?;
    let stitched = stitch_maps(&prepared.grid, &maps)?;
    write_map(&stitched, &g.out_dir, &format!("slide_{}", method.name()))
}

fn prepare(slide: &SlideArgs) -> Result<(SlideImage, PreparedSlide)> {
    let image = io::read_slide_png(&slide.slide)?;
    let polygons = slide.annotations.as_ref().map(io::read_annotations).transpose()?;
    let geometry = geometry(slide.tile_size, slide.stride, slide.center);
    let prepared = PreparedSlide::new(
        &image,
        polygons.as_deref(),
        geometry,
        slide.tissue_threshold,
        slide.tissue_fraction,
    )?;
    Ok((image, prepared))
}

fn suite_config(g: &Global, slide: &SlideArgs, metrics: &[MetricId]) -> Result<SuiteConfig> {
    let methods = parse_methods(g.method.as_deref(), true)?;
    let mut config = SuiteConfig {
        methods,
        metrics: metrics.to_vec(),
        class_index: g.class,
        wg_q: g.wg_q,
        seed: g.seed,
        road_percentiles: ROAD_PERCENTILES.to_vec(),
        wg_percentiles: default_wg_percentiles(),
        ..SuiteConfig::default()
    };
    if let Some(p) = &g.percentiles {
        config.road_percentiles = p.clone();
        config.wg_percentiles = p.clone();
    }
    // Occlusion settings are filled in once the slide is loaded.
    config.method_config = method_config(g, slide.tile_size, None)?;
    Ok(config)
}

fn suite_cmd(g: &Global, slide: &SlideArgs, mut config: SuiteConfig) -> Result<()> {
    let model = load_model(g)?;
    let (image, prepared) = prepare(slide)?;
    config.method_config = method_config(g, slide.tile_size, image.mean_color(&prepared.tissue))?;
    let report = run_suite(&model, &prepared, &config)?;
    let written = io::write_suite_outputs(&report, &config, &g.out_dir)?;
    print!("{}", report.benchmark.to_csv());
    println!("wrote {} files to {}", written.len(), g.out_dir.display());
    Ok(())
}

fn tile_cmd(g: &Global, slide: &SlideArgs) -> Result<()> {
    let (image, prepared) = prepare(slide)?;
    let grid = &prepared.grid;
    let mut csv = String::from("x,y,tissue,label\n");
    let mut tissue_index = 0;
    let mut preview = image.clone();
    let t = grid.tile_size;
    for (&(x, y), &tissue) in grid.origins.iter().zip(&grid.tissue_flags) {
        let label = if tissue {
            tissue_index += 1;
            prepared.labels[tissue_index - 1]
        } else {
            false
        };
        csv.push_str(&format!("{x},{y},{},{}\n", tissue as u8, label as u8));
        if tissue {
            let colour = if label { [220, 20, 20] } else { [20, 120, 20] };
            for i in 0..t {
                for (px, py) in [(x + i, y), (x + i, y + t - 1), (x, y + i), (x + t - 1, y + i)] {
                    preview.set_rgb(px, py, colour);
                }
            }
        }
    }
    io::ensure_dir(&g.out_dir)?;
    io::write_text(g.out_dir.join("tiles.csv"), &csv)?;
    io::write_slide_png(&preview, g.out_dir.join("tiles.png"))?;
    println!(
        "{} tiles, {} with tissue, {} labelled positive",
        grid.len(),
        grid.tissue_count(),
        prepared.positive_indices().len()
    );
    Ok(())
}

fn fixture_cmd(g: &Global, width: usize, height: usize, lesions: usize, detector_side: usize) -> Result<()> {
    let spec = FixtureSpec {
        width,
        height,
        lesion_count: lesions,
        ..FixtureSpec::default()
    };
    let fixture = generate_fixture(g.seed, &spec)?;
    let dir = &g.out_dir;
    io::ensure_dir(dir)?;
    io::write_slide_png(&fixture.slide, dir.join("slide.png"))?;
    io::write_annotations(&fixture.polygons, dir.join("annotations.json"))?;
    let mask_rgb: Vec<u8> = fixture
        .lesion_mask
        .bits()
        .iter()
        .flat_map(|&b| if b { [255u8; 3] } else { [0u8; 3] })
        .collect();
    let mask_img = SlideImage::new(width, height, mask_rgb, spec.microns_per_pixel)?;
    io::write_slide_png(&mask_img, dir.join("lesion_mask.png"))?;
    io::save_model(&lesion_detector(detector_side)?, dir.join("detector.smdl"))?;
    println!(
        "wrote slide.png, annotations.json ({} polygons), lesion_mask.png and detector.smdl to {}",
        fixture.polygons.len(),
        dir.display()
    );
    Ok(())
}
