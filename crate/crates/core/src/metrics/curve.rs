use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricId {
    Road,
    WgAnnotation,
    WgReference,
}

impl MetricId {
    pub fn name(self) -> &'static str {
        match self {
            MetricId::Road => "ROAD",
            MetricId::WgAnnotation => "WG_Annotation",
            MetricId::WgReference => "WG_Reference",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A percentile sweep. Percentiles lie in (0, 100] and strictly increase.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    percentiles: Vec<f64>,
    values: Vec<f64>,
    metric: MetricId,
}

impl MetricCurve {
    pub fn new(percentiles: Vec<f64>, values: Vec<f64>, metric: MetricId) -> Result<Self> {
        check_percentiles(&percentiles)?;
        if percentiles.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: percentiles.len(),
                right: values.len(),
            });
        }
        Ok(MetricCurve {
            percentiles,
            values,
            metric,
        })
    }

    pub fn percentiles(&self) -> &[f64] {
        &self.percentiles
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn metric(&self) -> MetricId {
        self.metric
    }

    /// Value at percentile `p`, if `p` is one of the sampled points.
    pub fn at(&self, p: f64) -> Option<f64> {
        self.percentiles.iter().position(|&q| q == p).map(|i| self.values[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("percentile,value\n");
        for (p, v) in self.percentiles.iter().zip(&self.values) {
            out.push_str(&format!("{p},{v}\n"));
        }
        out
    }

    /// Pointwise mean of curves sharing one percentile grid.
    pub fn mean(curves: &[MetricCurve]) -> Result<MetricCurve> {
        let first = curves
            .first()
            .ok_or_else(|| Error::ConfigInvalid("mean of zero curves".into()))?;
        let mut values = vec![0.0; first.values.len()];
        for c in curves {
            if c.percentiles != first.percentiles {
                return Err(Error::ConfigInvalid("curves use different percentile grids".into()));
            }
            for (acc, v) in values.iter_mut().zip(&c.values) {
                *acc += v;
            }
        }
        let n = curves.len() as f64;
        values.iter_mut().for_each(|v| *v /= n);
        MetricCurve::new(first.percentiles.clone(), values, first.metric)
    }
}

pub(crate) fn check_percent(p: f64) -> Result<()> {
    if p > 0.0 && p <= 100.0 {
        Ok(())
    } else {
        Err(Error::PercentOutOfRange(p))
    }
}

pub(crate) fn check_percentiles(ps: &[f64]) -> Result<()> {
    for &p in ps {
        check_percent(p)?;
    }
    if ps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ConfigInvalid(format!(
            "percentiles must be strictly increasing: {ps:?}"
        )));
    }
    Ok(())
}
