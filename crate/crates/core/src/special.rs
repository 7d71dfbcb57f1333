//! Error-function helpers used by the closed-form Matérn embeddings.
//!
//! `erfc` comes from `libm` (msun port, sub-ulp); the scaled variant adds a
//! continued fraction for large arguments.

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Below this argument `exp(z²)·erfc(z)` is evaluated directly; above it the
/// continued fraction converges to full precision.
const ERFCX_SWITCH: f64 = 5.0;
const ERFCX_CF_TERMS: usize = 80;

/// Complementary error function.
pub fn erfc(z: f64) -> f64 {
    libm::erfc(z)
}

/// Scaled complementary error function `exp(z²)·erfc(z)`.
///
/// Finite for every `z ≥ -26`; overflows to `+∞` further left, where the
/// unscaled product is itself unrepresentable.
pub fn erfcx(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 0.0 {
        let e = (z * z).exp();
        return 2.0 * e - erfcx(-z);
    }
    if z < ERFCX_SWITCH {
        return (z * z).exp() * libm::erfc(z);
    }
    if z > 1e8 {
        return FRAC_1_SQRT_PI / z;
    }
    // Laplace continued fraction, evaluated bottom-up:
    // erfcx(z) = 1/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    let mut tail = z;
    for k in (1..=ERFCX_CF_TERMS).rev() {
        tail = z + (k as f64 * 0.5) / tail;
    }
    FRAC_1_SQRT_PI / tail
}

/// `∫₀^∞ exp(-β t) φ(t)`-type one-sided Gaussian integral
/// `√(π/2)·exp(β²/2)·erfc(β/√2)`, computed without overflow for large `β`.
pub fn gauss_laplace_i0(beta: f64) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * erfcx(beta / std::f64::consts::SQRT_2)
}
