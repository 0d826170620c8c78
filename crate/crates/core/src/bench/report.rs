use std::time::Instant;

use rayon::prelude::*;

use super::memory::PeakRssSampler;
use crate::engine::{ModelSpec, PassCounter, Tensor};
use crate::error::{Error, Result};
use crate::saliency::{explain, MethodConfig, MethodId, SaliencyMap};

pub const BENCH_CSV_HEADER: &str =
    "method,tile_time_mean_s,tile_time_std_s,slide_time_s,peak_mem_bytes,forwards_per_tile,backwards_per_tile,tile_count";

/// Measurements for one method over one slide.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: MethodId,
    pub tile_times_s: Vec<f64>,
    pub tile_time_mean_s: f64,
    pub tile_time_std_s: f64,
    pub slide_time_s: f64,
    pub peak_mem_bytes: u64,
    pub forwards_per_tile: f64,
    pub backwards_per_tile: f64,
    pub tile_count: usize,
}

impl BenchRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method.name(),
            self.tile_time_mean_s,
            self.tile_time_std_s,
            self.slide_time_s,
            self.peak_mem_bytes,
            self.forwards_per_tile,
            self.backwards_per_tile,
            self.tile_count
        )
    }

    pub fn median_tile_time_s(&self) -> f64 {
        median(&self.tile_times_s)
    }
}

/// A Table-1 row: either measurements or the reason the method could not run.
#[derive(Debug, Clone, PartialEq)]
pub enum BenchEntry {
    Measured(BenchRow),
    Unavailable { method: MethodId, reason: String },
}

impl BenchEntry {
    pub fn method(&self) -> MethodId {
        match self {
            BenchEntry::Measured(r) => r.method,
            BenchEntry::Unavailable { method, .. } => *method,
        }
    }

    pub fn row(&self) -> Option<&BenchRow> {
        match self {
            BenchEntry::Measured(r) => Some(r),
            BenchEntry::Unavailable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkReport {
    pub entries: Vec<BenchEntry>,
}

impl BenchmarkReport {
    pub fn row(&self, method: MethodId) -> Option<&BenchRow> {
        self.entries
            .iter()
            .find(|e| e.method() == method)
            .and_then(BenchEntry::row)
    }

    /// Unavailable methods keep their row with `NA` in every measured column.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{BENCH_CSV_HEADER}\n");
        for entry in &self.entries {
            match entry {
                BenchEntry::Measured(r) => out.push_str(&r.csv()),
                BenchEntry::Unavailable { method, .. } => {
                    out.push_str(method.name());
                    out.push_str(&",NA".repeat(7));
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

/// Explains every tile with `method`, timing each tile and sampling memory.
/// Returns the row and the maps in tile order. Only explanation work is
/// inside the timed region.
pub fn benchmark_method(
    method: MethodId,
    model: &ModelSpec,
    tiles: &[Tensor],
    class_index: usize,
    config: &MethodConfig,
) -> Result<(BenchRow, Vec<SaliencyMap>)> {
    check_available(method, model, tiles)?;
    let counter = PassCounter::new();
    let sampler = PeakRssSampler::start();
    let start = Instant::now();
    let mut maps = Vec::with_capacity(tiles.len());
    let mut times = Vec::with_capacity(tiles.len());
    for tile in tiles {
        let t0 = Instant::now();
        maps.push(explain(method, model, tile, class_index, config, &counter)?);
        times.push(t0.elapsed().as_secs_f64());
    }
    let slide_time = start.elapsed().as_secs_f64();
    let peak = sampler.finish();
    Ok((row(method, times, slide_time, peak, &counter, tiles.len()), maps))
}

/// Throughput variant: tiles are explained on the rayon pool. Per-tile
/// times include scheduling contention, so these rows are not comparable
/// with [`benchmark_method`].
pub fn benchmark_method_parallel(
    method: MethodId,
    model: &ModelSpec,
    tiles: &[Tensor],
    class_index: usize,
    config: &MethodConfig,
) -> Result<(BenchRow, Vec<SaliencyMap>)> {
    check_available(method, model, tiles)?;
    let counter = PassCounter::new();
    let sampler = PeakRssSampler::start();
    let start = Instant::now();
    let results: Vec<(SaliencyMap, f64)> = tiles
        .par_iter()
        .map(|tile| {
            let t0 = Instant::now();
            let map = explain(method, model, tile, class_index, config, &counter)?;
            Ok((map, t0.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let slide_time = start.elapsed().as_secs_f64();
    let peak = sampler.finish();
    let (maps, times): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((row(method, times, slide_time, peak, &counter, tiles.len()), maps))
}

fn check_available(method: MethodId, model: &ModelSpec, tiles: &[Tensor]) -> Result<()> {
    if tiles.is_empty() {
        return Err(Error::ConfigInvalid("benchmark needs at least one tile".into()));
    }
    if method == MethodId::Cam && !model.cam_eligible() {
        return Err(Error::MethodUnavailable {
            method: method.label().into(),
            reason: "model does not end in a global pool and one dense layer".into(),
        });
    }
    Ok(())
}

fn row(method: MethodId, times: Vec<f64>, slide_time: f64, peak: u64, counter: &PassCounter, n: usize) -> BenchRow {
    let (mean, std) = mean_std(&times);
    let passes = counter.snapshot();
    BenchRow {
        method,
        tile_times_s: times,
        tile_time_mean_s: mean,
        tile_time_std_s: std,
        slide_time_s: slide_time,
        peak_mem_bytes: peak,
        forwards_per_tile: passes.forwards as f64 / n as f64,
        backwards_per_tile: passes.backwards as f64 / n as f64,
        tile_count: n,
    }
}
