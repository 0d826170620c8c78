//! Saliency-mass localization. Saliency is rectified first; for each
//! percentile p only the top-p% pixels (by rectified value) count, and the
//! score is the share of their mass that lies inside the mask.

use super::curve::{check_percent, check_percentiles, MetricCurve, MetricId};
use super::road::{ranking, selected_count};
use crate::error::{Error, Result};
use crate::mask::PixelMask;
use crate::saliency::SaliencyMap;

pub const DEFAULT_REFERENCE_Q: f64 = 20.0;

/// 5, 10, ..., 100.
pub fn default_wg_percentiles() -> Vec<f64> {
    (1..=20).map(|i| 5.0 * i as f64).collect()
}

fn rectified(saliency: &SaliencyMap) -> Vec<f64> {
    saliency.values().iter().map(|&v| v.max(0.0)).collect()
}

fn mass_ratios(rect: &[f64], inside: &[bool], percentiles: &[f64]) -> Vec<f64> {
    let order = ranking(rect);
    let mut values = Vec::with_capacity(percentiles.len());
    let (mut total, mut hit, mut taken) = (0.0, 0.0, 0);
    for &p in percentiles {
        // Percentiles increase, so each selection extends the previous one.
        let k = selected_count(p, rect.len());
        for &i in &order[taken..k] {
            total += rect[i];
            if inside[i] {
                hit += rect[i];
            }
        }
        taken = k;
        values.push(if total > 0.0 { (hit / total).min(1.0) } else { 0.0 });
    }
    values
}

pub fn weighting_game(saliency: &SaliencyMap, mask: &PixelMask, percentiles: &[f64]) -> Result<MetricCurve> {
    if saliency.dims() != mask.dims() {
        return Err(Error::DimMismatch(saliency.dims(), mask.dims()));
    }
    if !mask.any() {
        return Err(Error::EmptyMask);
    }
    check_percentiles(percentiles)?;
    let values = mass_ratios(&rectified(saliency), mask.bits(), percentiles);
    MetricCurve::new(percentiles.to_vec(), values, MetricId::WgAnnotation)
}

/// The top-q% pixels of the rectified reference, used as a pseudo-annotation.
pub fn reference_mask(reference: &SaliencyMap, q: f64) -> Result<PixelMask> {
    check_percent(q)?;
    let rect = rectified(reference);
    if !rect.iter().any(|&v| v > 0.0) {
        return Err(Error::DegenerateReference);
    }
    let mut bits = vec![false; rect.len()];
    for &i in &ranking(&rect)[..selected_count(q, rect.len())] {
        bits[i] = true;
    }
    PixelMask::new(reference.width(), reference.height(), bits)
}

pub fn reference_agreement(
    saliency: &SaliencyMap,
    reference: &SaliencyMap,
    percentiles: &[f64],
    q: f64,
) -> Result<MetricCurve> {
    if saliency.dims() != reference.dims() {
        return Err(Error::DimMismatch(saliency.dims(), reference.dims()));
    }
    let mask = reference_mask(reference, q)?;
    let curve = weighting_game(saliency, &mask, percentiles)?;
    MetricCurve::new(
        curve.percentiles().to_vec(),
        curve.values().to_vec(),
        MetricId::WgReference,
    )
}
