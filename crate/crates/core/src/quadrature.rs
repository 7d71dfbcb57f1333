//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the Gauss-7 nodes.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_subdivisions: 2000,
        }
    }
}

impl QuadConfig {
    pub fn rel(rel_tol: f64) -> Self {
        QuadConfig {
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XK.iter().zip(&WK).take(7).enumerate() {
        let dx = h * x;
        let pair = f(c - dx) + f(c + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * h;
    // |K15 − G7| is the Gauss-7 error: a conservative bound for Kronrod.
    let err = ((kron - gauss) * h).abs();
    (value, err)
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<QuadResult> {
    integrate_with_breaks(f, &[a, b], cfg)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, seeding the adaptive
/// partition with the given sorted breakpoints.
///
/// Breakpoints are where the integrand has kinks or narrow peaks; the
/// global error control otherwise treats all segments alike.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    cfg: QuadConfig,
) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(Error::InvalidInput("need at least two breakpoints".into()));
    }
    if breaks.windows(2).any(|w| !(w[0] <= w[1])) || breaks.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidInput(
            "breakpoints must be finite and sorted".into(),
        ));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gk15(&f, w[0], w[1]);
        evaluations += 15;
        total += value;
        total_err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut subdivisions = 0;
    loop {
        let tol = cfg
            .abs_tol
            .max(cfg.rel_tol * total.abs())
            .max(50.0 * f64::EPSILON * total.abs());
        if total_err <= tol {
            break;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Accuracy {
                estimate: total,
                error: total_err,
            });
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // interval exhausted at machine precision
            heap.push(seg);
            return Err(Error::Accuracy {
                estimate: total,
                error: total_err,
            });
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evaluations += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }
    // re-sum to shed drift from the running updates
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().map(|s| s.value).sum();
    let error = segs.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}
