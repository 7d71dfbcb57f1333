//! Space-filling diagnostics for random designs: fill distance on a ball,
//! concentration within one Mahalanobis unit, and log–log rate fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FillMethod {
    Exact1D,
    Grid { resolution: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillReport {
    pub n: usize,
    pub radius: f64,
    pub fill: f64,
    pub method: FillMethod,
}

fn check_fill_args(points: &[f64], radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if points.is_empty() {
        return Err(Error::InfiniteFill);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite design point".into()));
    }
    Ok(())
}

fn nearest_distance(sorted: &[f64], x: f64) -> f64 {
    let i = sorted.partition_point(|&p| p < x);
    let right = sorted.get(i).map_or(f64::INFINITY, |p| p - x);
    let left = if i > 0 {
        x - sorted[i - 1]
    } else {
        f64::INFINITY
    };
    left.min(right)
}

/// `sup_{x ∈ [−R, R]} min_j |x − x_j|`, exact.
///
/// The distance function is piecewise linear with maxima at the interval
/// ends and at midpoints between consecutive points, so only those
/// candidates (clipped to the interval) need checking.
pub fn fill_distance_1d(points: &[f64], radius: f64) -> Result<f64> {
    check_fill_args(points, radius)?;
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = nearest_distance(&sorted, -radius).max(nearest_distance(&sorted, radius));
    for w in sorted.windows(2) {
        let mid = (0.5 * (w[0] + w[1])).clamp(-radius, radius);
        best = best.max(nearest_distance(&sorted, mid));
    }
    Ok(best)
}

/// Grid-scan approximation of the fill distance with `resolution` nodes.
pub fn fill_distance_grid(points: &[f64], radius: f64, resolution: usize) -> Result<f64> {
    check_fill_args(points, radius)?;
    if resolution < 2 {
        return Err(Error::InvalidInput("grid needs at least two nodes".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let step = 2.0 * radius / (resolution - 1) as f64;
    Ok((0..resolution)
        .map(|i| nearest_distance(&sorted, -radius + i as f64 * step))
        .fold(0.0, f64::max))
}

pub fn fill_report(points: &[f64], radius: f64) -> Result<FillReport> {
    Ok(FillReport {
        n: points.len(),
        radius,
        fill: fill_distance_1d(points, radius)?,
        method: FillMethod::Exact1D,
    })
}

/// Fraction of points with `x²/scale ≤ 1`.
pub fn mahalanobis_fraction(points: &[f64], scale: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let inside = points.iter().filter(|&&x| x * x / scale <= 1.0).count();
    Ok(inside as f64 / points.len() as f64)
}

/// Least-squares line through `(log n, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub pairs: Vec<(usize, f64)>,
}

pub fn rate_fit(pairs: &[(usize, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rate fit needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    if pairs.windows(2).any(|w| w[1].0 <= w[0].0) || pairs[0].0 == 0 {
        return Err(Error::InvalidInput(
            "sizes must be positive and strictly increasing".into(),
        ));
    }
    if let Some(&(n, v)) = pairs.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "non-positive value {v} at n = {n}"
        )));
    }
    let xs: Vec<f64> = pairs.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        pairs: pairs.to_vec(),
    })
}
