use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{benchmark_method, benchmark_method_parallel, BenchEntry, BenchmarkReport};
use crate::engine::{ModelSpec, PassCounter, Tensor};
use crate::error::{Error, Result};
use crate::mask::PixelMask;
use crate::metrics::{
    default_wg_percentiles, reference_agreement, road_curve, weighting_game, MetricCurve, MetricId,
    DEFAULT_NOISE_SIGMA, DEFAULT_REFERENCE_Q, ROAD_PERCENTILES,
};
use crate::saliency::{explain, MethodConfig, MethodId, SaliencyMap};
use crate::slide::{
    detect_tissue, label_tile, rasterize_annotation, tile_slide, AnnotationMask, Polygon, SlideImage, TileGeometry,
    TileGrid, DEFAULT_TISSUE_FRACTION, DEFAULT_TISSUE_THRESHOLD,
};

/// A slide cut into tissue tiles, with per-tile labels when annotated.
#[derive(Debug, Clone)]
pub struct PreparedSlide {
    pub geometry: TileGeometry,
    pub grid: TileGrid,
    pub tissue: PixelMask,
    pub annotation: Option<AnnotationMask>,
    /// Tissue tiles only, in grid order.
    pub origins: Vec<(usize, usize)>,
    pub tiles: Vec<Tensor>,
    /// Central-region label of each tissue tile; all false without annotation.
    pub labels: Vec<bool>,
}

impl PreparedSlide {
    pub fn new(
        slide: &SlideImage,
        polygons: Option<&[Polygon]>,
        geometry: TileGeometry,
        tissue_threshold: f64,
        tissue_fraction: f64,
    ) -> Result<Self> {
        geometry.validate()?;
        let tissue = detect_tissue(slide, tissue_threshold);
        let grid = tile_slide(
            slide.dims(),
            &tissue,
            geometry.tile_size,
            geometry.stride,
            tissue_fraction,
        )?;
        let annotation = polygons.map(|p| rasterize_annotation(p, slide.dims())).transpose()?;
        let origins = grid.tissue_origins();
        let tiles = origins
            .iter()
            .map(|&o| slide.extract_tile(o, geometry.tile_size))
            .collect::<Result<Vec<_>>>()?;
        let labels = match &annotation {
            Some(a) => origins
                .iter()
                .map(|&o| label_tile(o, &a.mask, &geometry))
                .collect::<Result<_>>()?,
            None => vec![false; origins.len()],
        };
        Ok(PreparedSlide {
            geometry,
            grid,
            tissue,
            annotation,
            origins,
            tiles,
            labels,
        })
    }

    pub fn with_defaults(slide: &SlideImage, polygons: Option<&[Polygon]>, geometry: TileGeometry) -> Result<Self> {
        PreparedSlide::new(
            slide,
            polygons,
            geometry,
            DEFAULT_TISSUE_THRESHOLD,
            DEFAULT_TISSUE_FRACTION,
        )
    }

    /// Annotation restricted to tissue tile `i`.
    pub fn tile_annotation(&self, i: usize) -> Option<PixelMask> {
        let (x, y) = self.origins[i];
        let t = self.geometry.tile_size;
        self.annotation
            .as_ref()
            .map(|a| a.mask.crop(x, y, t, t).expect("tile inside slide"))
    }

    pub fn positive_indices(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub methods: Vec<MethodId>,
    pub metrics: Vec<MetricId>,
    pub method_config: MethodConfig,
    pub class_index: usize,
    pub road_percentiles: Vec<f64>,
    pub wg_percentiles: Vec<f64>,
    pub wg_q: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Evaluate ROAD on annotation-positive tiles only.
    pub road_positive_only: bool,
    /// Number of random-saliency ROAD control curves.
    pub random_controls: usize,
    /// Explain tiles on the rayon pool. Timings are then not comparable.
    pub parallel: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            methods: MethodId::ALL.to_vec(),
            metrics: vec![MetricId::Road, MetricId::WgAnnotation, MetricId::WgReference],
            method_config: MethodConfig::default(),
            class_index: 1,
            road_percentiles: ROAD_PERCENTILES.to_vec(),
            wg_percentiles: default_wg_percentiles(),
            wg_q: DEFAULT_REFERENCE_Q,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            seed: 0,
            road_positive_only: false,
            random_controls: 0,
            parallel: false,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self, model: &ModelSpec, slide: &PreparedSlide) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::ConfigInvalid(format!("{name}: {msg}")));
        if self.methods.is_empty() {
            return field("methods", "at least one method is required".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return field("methods", format!("{m} listed twice"));
            }
        }
        if self.class_index >= model.class_count() {
            return field(
                "class_index",
                format!("{} out of range for {} classes", self.class_index, model.class_count()),
            );
        }
        crate::metrics::MetricCurve::new(
            self.road_percentiles.clone(),
            self.road_percentiles.clone(),
            MetricId::Road,
        )
        .map_err(|e| Error::ConfigInvalid(format!("road_percentiles: {e}")))?;
        MetricCurve::new(
            self.wg_percentiles.clone(),
            self.wg_percentiles.clone(),
            MetricId::WgAnnotation,
        )
        .map_err(|e| Error::ConfigInvalid(format!("wg_percentiles: {e}")))?;
        if !(self.wg_q > 0.0 && self.wg_q <= 100.0) {
            return field("wg_q", format!("{} outside (0, 100]", self.wg_q));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return field(
                "noise_sigma",
                format!("{} must be a finite value >= 0", self.noise_sigma),
            );
        }
        self.method_config
            .lrp
            .validate()
            .map_err(|e| Error::ConfigInvalid(format!("lrp: {e}")))?;
        let shape = model.input_shape();
        self.method_config
            .occlusion
            .validate(shape[0], shape[1], shape[2])
            .map_err(|e| Error::ConfigInvalid(format!("occlusion: {e}")))?;
        let t = slide.geometry.tile_size;
        if shape[1] != t || shape[2] != t {
            return field("model", format!("input {shape:?} does not match tile size {t}"));
        }
        if slide.tiles.is_empty() {
            return field("slide", "no tissue tiles".into());
        }
        let needs_annotation = self.metrics.contains(&MetricId::WgAnnotation) || self.road_positive_only;
        if needs_annotation && slide.annotation.is_none() {
            return field("annotation", "required by WG_Annotation or positive-only ROAD".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub benchmark: BenchmarkReport,
    pub curves: Vec<(MethodId, MetricCurve)>,
    pub road_controls: Vec<MetricCurve>,
    pub maps: Vec<(MethodId, Vec<SaliencyMap>)>,
    pub road_tile_count: usize,
}

impl SuiteReport {
    pub fn curve(&self, method: MethodId, metric: MetricId) -> Option<&MetricCurve> {
        self.curves
            .iter()
            .find(|(m, c)| *m == method && c.metric() == metric)
            .map(|(_, c)| c)
    }

    pub fn maps(&self, method: MethodId) -> Option<&[SaliencyMap]> {
        self.maps.iter().find(|(m, _)| *m == method).map(|(_, v)| v.as_slice())
    }

    pub fn road_control_mean(&self) -> Option<MetricCurve> {
        MetricCurve::mean(&self.road_controls).ok()
    }
}

/// A map of i.i.d. uniform [0, 1) values.
pub fn random_saliency(width: usize, height: usize, class_index: usize, seed: u64) -> SaliencyMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..width * height).map(|_| rng.gen::<f64>()).collect();
    SaliencyMap::new(width, height, values, MethodId::Occlusion, class_index).expect("valid dims")
}

fn mean_curve(curves: Vec<MetricCurve>, what: &str) -> Result<MetricCurve> {
    if curves.is_empty() {
        return Err(Error::ConfigInvalid(format!("{what}: no tile yields a defined value")));
    }
    MetricCurve::mean(&curves)
}

/// Benchmarks every configured method on the slide's tissue tiles, then runs
/// the configured metric sweeps on the resulting maps. Occlusion maps serve
/// as the reference for WG_Reference and are computed only once.
pub fn run_suite(model: &ModelSpec, slide: &PreparedSlide, config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate(model, slide)?;
    let mut benchmark = BenchmarkReport::default();
    let mut maps: Vec<(MethodId, Vec<SaliencyMap>)> = Vec::new();
    for &method in &config.methods {
        let run = if config.parallel {
            benchmark_method_parallel
        } else {
            benchmark_method
        };
        match run(method, model, &slide.tiles, config.class_index, &config.method_config) {
            Ok((row, tile_maps)) => {
                benchmark.entries.push(BenchEntry::Measured(row));
                maps.push((method, tile_maps));
            }
            Err(Error::MethodUnavailable { reason, .. }) => {
                benchmark.entries.push(BenchEntry::Unavailable { method, reason });
            }
            Err(e) => return Err(e),
        }
    }

    let mut reference: Option<Vec<SaliencyMap>> = None;
    if config.metrics.contains(&MetricId::WgReference) {
        reference = Some(match maps.iter().find(|(m, _)| *m == MethodId::Occlusion) {
            Some((_, v)) => v.clone(),
            None => slide
                .tiles
                .iter()
                .map(|t| {
                    explain(
                        MethodId::Occlusion,
                        model,
                        t,
                        config.class_index,
                        &config.method_config,
                        &PassCounter::new(),
                    )
                })
                .collect::<Result<_>>()?,
        });
    }

    let road_indices: Vec<usize> = if config.road_positive_only {
        slide.positive_indices()
    } else {
        (0..slide.tiles.len()).collect()
    };
    let road_tiles: Vec<Tensor> = road_indices.iter().map(|&i| slide.tiles[i].clone()).collect();
    if config.metrics.contains(&MetricId::Road) && road_tiles.is_empty() {
        return Err(Error::ConfigInvalid("road: no tiles match the tile filter".into()));
    }

    let mut curves = Vec::new();
    for (method, tile_maps) in &maps {
        for &metric in &config.metrics {
            let curve = match metric {
                MetricId::Road => {
                    let selected: Vec<SaliencyMap> = road_indices.iter().map(|&i| tile_maps[i].clone()).collect();
                    road_curve(
                        model,
                        &road_tiles,
                        &selected,
                        config.class_index,
                        &config.road_percentiles,
                        config.noise_sigma,
                        config.seed,
                    )?
                }
                MetricId::WgAnnotation => {
                    let mut per_tile = Vec::new();
                    for (i, map) in tile_maps.iter().enumerate() {
                        let mask = slide.tile_annotation(i).expect("validated annotation");
                        if mask.any() {
                            per_tile.push(weighting_game(map, &mask, &config.wg_percentiles)?);
                        }
                    }
                    relabel(mean_curve(per_tile, "WG_Annotation")?, MetricId::WgAnnotation)?
                }
                MetricId::WgReference => {
                    let refs = reference.as_ref().expect("computed above");
                    let mut per_tile = Vec::new();
                    for (map, r) in tile_maps.iter().zip(refs) {
                        match reference_agreement(map, r, &config.wg_percentiles, config.wg_q) {
                            Ok(c) => per_tile.push(c),
                            Err(Error::DegenerateReference) | Err(Error::EmptyMask) => {}
                            Err(e) => return Err(e),
                        }
                    }
                    mean_curve(per_tile, "WG_Reference")?
                }
            };
            curves.push((*method, curve));
        }
    }

    let mut road_controls = Vec::new();
    if config.metrics.contains(&MetricId::Road) {
        let t = slide.geometry.tile_size;
        for c in 0..config.random_controls {
            let random: Vec<SaliencyMap> = (0..road_tiles.len())
                .map(|i| random_saliency(t, t, config.class_index, control_seed(config.seed, c, i)))
                .collect();
            road_controls.push(road_curve(
                model,
                &road_tiles,
                &random,
                config.class_index,
                &config.road_percentiles,
                config.noise_sigma,
                config.seed,
            )?);
        }
    }

    Ok(SuiteReport {
        benchmark,
        curves,
        road_controls,
        maps,
        road_tile_count: road_tiles.len(),
    })
}

fn relabel(curve: MetricCurve, metric: MetricId) -> Result<MetricCurve> {
    MetricCurve::new(curve.percentiles().to_vec(), curve.values().to_vec(), metric)
}

fn control_seed(seed: u64, control: usize, tile: usize) -> u64 {
    seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(control as u64 + 1)) ^ ((tile as u64) << 40)
}
