//! Test integrands with known integrals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::embeddings::change_of_measure;
use crate::measures::Measure;
use crate::quadrature::{integrate_with_breaks, QuadConfig};

/// Degrees of freedom of the original Student-t measure in the
/// change-of-measure example.
pub const NU_TARGET: f64 = 5.0;
/// Heavier-tailed proposal measure `ν − d/2 − 0.01`.
pub const NU_PROPOSAL: f64 = 4.49;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrandId {
    /// `√3·e^{−x²} + sin(2πx)/(1 + x²)` against `N(0, 1)`.
    F1,
    /// `1 + sin(2πx)`; integral 1 against any symmetric probability measure.
    F2,
    /// `F2 · t₅/t₄.₄₉` against `t₄.₄₉`.
    F2Changed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralSource {
    Exact,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueIntegral {
    pub value: f64,
    pub error_bound: f64,
    pub source: IntegralSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrand {
    pub id: IntegrandId,
    pub target_measure: Measure,
}

fn f1(x: f64) -> f64 {
    3f64.sqrt() * (-x * x).exp() + (2.0 * PI * x).sin() / (1.0 + x * x)
}

fn f2(x: f64) -> f64 {
    1.0 + (2.0 * PI * x).sin()
}

impl Integrand {
    pub fn new(id: IntegrandId) -> Self {
        let target_measure = match id {
            IntegrandId::F1 => Measure::standard_normal(),
            IntegrandId::F2 => Measure::StudentT {
                nu: NU_TARGET,
                scale: 1.0,
            },
            IntegrandId::F2Changed => Measure::StudentT {
                nu: NU_PROPOSAL,
                scale: 1.0,
            },
        };
        Integrand { id, target_measure }
    }

    /// `F2` integrated against another symmetric measure (e.g. `N(0, 1)`).
    pub fn f2_against(measure: Measure) -> Self {
        Integrand {
            id: IntegrandId::F2,
            target_measure: measure,
        }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self.id {
            IntegrandId::F1 => f1(x),
            IntegrandId::F2 => f2(x),
            IntegrandId::F2Changed => change_of_measure(f2, NU_TARGET, NU_PROPOSAL)
                .expect("constants satisfy ν_t > ν_p")(x),
        }
    }

    pub fn true_integral(&self) -> TrueIntegral {
        match self.id {
            IntegrandId::F1 => *f1_integral(),
            IntegrandId::F2 | IntegrandId::F2Changed => TrueIntegral {
                value: 1.0,
                error_bound: 0.0,
                source: IntegralSource::Exact,
            },
        }
    }
}

pub fn evaluate(i: &Integrand, x: f64) -> f64 {
    i.evaluate(x)
}

pub fn true_integral(i: &Integrand) -> TrueIntegral {
    i.true_integral()
}

fn unit_breaks(half_width: f64) -> Vec<f64> {
    // one breakpoint per unit keeps the sin(2πx) oscillation resolved
    let k = half_width.ceil() as i64;
    (-k..=k).map(|i| i as f64).collect()
}

/// `∫ F1 dN(0, 1)` by adaptive quadrature at relative tolerance 1e-12.
fn f1_integral() -> &'static TrueIntegral {
    static CELL: OnceLock<TrueIntegral> = OnceLock::new();
    CELL.get_or_init(|| {
        let phi = Measure::standard_normal();
        let r = integrate_with_breaks(
            |x| f1(x) * phi.density(x),
            &unit_breaks(40.0),
            QuadConfig::rel(1e-12),
        )
        .expect("smooth integrand converges");
        TrueIntegral {
            value: r.value,
            error_bound: r.error,
            source: IntegralSource::Quadrature,
        }
    })
}
