//! Arrival-process and attribute sampling.
//!
//! Arrivals come from an inhomogeneous Poisson process generated by
//! Lewis–Shedler thinning: candidate points are drawn from a homogeneous
//! Poisson process at the bounding rate and accepted with probability
//! `rate(t) / bound`. Transaction attributes (fee, size) are drawn from
//! lognormal marginals coupled by a Gaussian copula.

use rand::Rng;
use thiserror::Error;

use crate::scalar::{cast, SimScalar};

/// Validation failure while constructing a stochastic model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid intensity function: {0}")]
    InvalidIntensity(String),
    #[error("invalid attribute model: {0}")]
    InvalidAttributes(String),
}

// ============================================================================
// Arrival intensity
// ============================================================================

/// Functional form of the arrival rate over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensityShape<F> {
    /// Flat rate.
    Constant { rate: F },
    /// Oscillates between `lambda_lo` and `lambda_hi` with the given period.
    Sinusoid {
        lambda_lo: F,
        lambda_hi: F,
        period_s: F,
    },
    /// Ramps linearly from `lambda_lo` at t=0 to `lambda_hi` at `duration_s`,
    /// clamped outside that window.
    LinearRamp {
        lambda_lo: F,
        lambda_hi: F,
        duration_s: F,
    },
}

/// Time-varying arrival rate together with its thinning bound.
///
/// The bound is the homogeneous candidate rate used by the thinning sampler;
/// construction guarantees `evaluate(t) <= lambda_max` for all `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityFunction<F> {
    shape: IntensityShape<F>,
    lambda_max: F,
}

impl<F: SimScalar> IntensityFunction<F> {
    /// Flat rate; the thinning bound equals the rate.
    pub fn constant(rate: F) -> Result<Self, ModelError> {
        if !(rate.is_finite() && rate >= F::zero()) {
            return Err(ModelError::InvalidIntensity(format!(
                "constant rate must be finite and >= 0, got {rate}"
            )));
        }
        Ok(Self {
            shape: IntensityShape::Constant { rate },
            lambda_max: rate,
        })
    }

    /// Sinusoid between the two rates; the thinning bound is the upper rate.
    pub fn sinusoid(lambda_lo: F, lambda_hi: F, period_s: F) -> Result<Self, ModelError> {
        Self::check_range(lambda_lo, lambda_hi)?;
        if !(period_s.is_finite() && period_s > F::zero()) {
            return Err(ModelError::InvalidIntensity(format!(
                "period must be finite and > 0, got {period_s}"
            )));
        }
        Ok(Self {
            shape: IntensityShape::Sinusoid {
                lambda_lo,
                lambda_hi,
                period_s,
            },
            lambda_max: lambda_hi,
        })
    }

    /// Linear ramp over `duration_s`; the thinning bound is the upper rate.
    pub fn linear_ramp(lambda_lo: F, lambda_hi: F, duration_s: F) -> Result<Self, ModelError> {
        Self::check_range(lambda_lo, lambda_hi)?;
        if !(duration_s.is_finite() && duration_s > F::zero()) {
            return Err(ModelError::InvalidIntensity(format!(
                "ramp duration must be finite and > 0, got {duration_s}"
            )));
        }
        Ok(Self {
            shape: IntensityShape::LinearRamp {
                lambda_lo,
                lambda_hi,
                duration_s,
            },
            lambda_max: lambda_hi,
        })
    }

    /// Overrides the thinning bound. Must dominate the peak rate.
    pub fn with_lambda_max(mut self, lambda_max: F) -> Result<Self, ModelError> {
        if !(lambda_max.is_finite() && lambda_max >= self.lambda_hi()) {
            return Err(ModelError::InvalidIntensity(format!(
                "thinning bound {lambda_max} must be >= peak rate {}",
                self.lambda_hi()
            )));
        }
        self.lambda_max = lambda_max;
        Ok(self)
    }

    fn check_range(lo: F, hi: F) -> Result<(), ModelError> {
        if !(lo.is_finite() && hi.is_finite() && lo >= F::zero() && hi >= lo) {
            return Err(ModelError::InvalidIntensity(format!(
                "rates must satisfy 0 <= lambda_lo <= lambda_hi, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Rate at time `t` (seconds).
    pub fn evaluate(&self, t: F) -> F {
        match self.shape {
            IntensityShape::Constant { rate } => rate,
            IntensityShape::Sinusoid {
                lambda_lo,
                lambda_hi,
                period_s,
            } => {
                let mid = (lambda_lo + lambda_hi) / cast(2.0);
                let half_range = (lambda_hi - lambda_lo) / cast(2.0);
                mid + half_range * (cast::<F>(std::f64::consts::TAU) * t / period_s).sin()
            }
            IntensityShape::LinearRamp {
                lambda_lo,
                lambda_hi,
                duration_s,
            } => {
                let frac = (t / duration_s).max(F::zero()).min(F::one());
                lambda_lo + (lambda_hi - lambda_lo) * frac
            }
        }
    }

    /// Thinning bound (candidate rate).
    pub fn lambda_max(&self) -> F {
        self.lambda_max
    }

    /// Lower rate of the configured shape.
    pub fn lambda_lo(&self) -> F {
        match self.shape {
            IntensityShape::Constant { rate } => rate,
            IntensityShape::Sinusoid { lambda_lo, .. }
            | IntensityShape::LinearRamp { lambda_lo, .. } => lambda_lo,
        }
    }

    /// Upper rate of the configured shape (its peak).
    pub fn lambda_hi(&self) -> F {
        match self.shape {
            IntensityShape::Constant { rate } => rate,
            IntensityShape::Sinusoid { lambda_hi, .. }
            | IntensityShape::LinearRamp { lambda_hi, .. } => lambda_hi,
        }
    }

    pub fn shape(&self) -> &IntensityShape<F> {
        &self.shape
    }
}

/// Draws arrival timestamps on `(0, horizon]` by thinning.
///
/// Candidates are a homogeneous Poisson process at `lambda_max`, built from
/// inverse-transform exponentials `y = -ln(x) / lambda_max`; each candidate
/// `s` is kept iff an independent uniform `D <= evaluate(s) / lambda_max`.
/// Returns the strictly increasing accepted timestamps. A zero bound or a
/// non-positive horizon yields no arrivals.
pub fn sample_arrival_times<F: SimScalar, R: Rng + ?Sized>(
    intensity: &IntensityFunction<F>,
    horizon: F,
    rng: &mut R,
) -> Vec<F> {
    let lambda_max = intensity.lambda_max();
    if !(lambda_max > F::zero()) || !(horizon > F::zero()) {
        return Vec::new();
    }
    let expected = (lambda_max * horizon).to_usize().unwrap_or(0);
    let mut times = Vec::with_capacity(expected + expected / 16 + 16);
    let mut s = F::zero();
    loop {
        let x = F::sample_open01(rng);
        s = s - x.ln() / lambda_max;
        if s > horizon {
            break;
        }
        let d = F::sample_open01(rng);
        if d <= intensity.evaluate(s) / lambda_max {
            times.push(s);
        }
    }
    times
}

// ============================================================================
// Arrival attributes
// ============================================================================

/// Lognormal fee and size marginals coupled by a Gaussian copula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeModel<F> {
    /// Location of the lognormal fee marginal (log-satoshi).
    pub fee_mu_log: F,
    /// Scale of the lognormal fee marginal, > 0.
    pub fee_sigma_log: F,
    /// Location of the lognormal size marginal (log-bytes).
    pub size_mu_log: F,
    /// Scale of the lognormal size marginal, > 0.
    pub size_sigma_log: F,
    /// Gaussian-copula correlation, in (-1, 1).
    pub copula_rho: F,
    /// Smallest size a sampled transaction may have, bytes.
    pub min_size: u64,
}

impl<F: SimScalar> AttributeModel<F> {
    pub fn new(
        fee_mu_log: F,
        fee_sigma_log: F,
        size_mu_log: F,
        size_sigma_log: F,
        copula_rho: F,
        min_size: u64,
    ) -> Result<Self, ModelError> {
        let model = Self {
            fee_mu_log,
            fee_sigma_log,
            size_mu_log,
            size_sigma_log,
            copula_rho,
            min_size,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.fee_sigma_log.is_finite() && self.fee_sigma_log > F::zero()) {
            return Err(ModelError::InvalidAttributes(format!(
                "fee_sigma_log must be > 0, got {}",
                self.fee_sigma_log
            )));
        }
        if !(self.size_sigma_log.is_finite() && self.size_sigma_log > F::zero()) {
            return Err(ModelError::InvalidAttributes(format!(
                "size_sigma_log must be > 0, got {}",
                self.size_sigma_log
            )));
        }
        if !(self.fee_mu_log.is_finite() && self.size_mu_log.is_finite()) {
            return Err(ModelError::InvalidAttributes(
                "log-locations must be finite".into(),
            ));
        }
        if !(self.copula_rho.is_finite() && self.copula_rho.abs() < F::one()) {
            return Err(ModelError::InvalidAttributes(format!(
                "copula_rho must lie in (-1, 1), got {}",
                self.copula_rho
            )));
        }
        if self.min_size == 0 {
            return Err(ModelError::InvalidAttributes(
                "min_size must be >= 1 byte".into(),
            ));
        }
        Ok(())
    }
}

impl<F: SimScalar> Default for AttributeModel<F> {
    /// Defaults calibrated so the mean size is ~460 bytes and fees only
    /// matter relatively: size lognormal(5.95, 0.6), fee lognormal(9.0, 1.0),
    /// weak copula correlation 0.2, 150-byte size floor.
    fn default() -> Self {
        Self {
            fee_mu_log: cast(9.0),
            fee_sigma_log: cast(1.0),
            size_mu_log: cast(5.95),
            size_sigma_log: cast(0.6),
            copula_rho: cast(0.2),
            min_size: 150,
        }
    }
}

/// Draws one correlated (fee, size) pair.
///
/// A bivariate standard normal pair with correlation `copula_rho` is pushed
/// through the lognormal marginals. Mapping a standard normal through its own
/// CDF and then through a lognormal quantile composes to
/// `exp(mu + sigma * z)`, so the transform is applied in that closed form.
/// The size is rounded up to whole bytes and floored at `min_size`.
pub fn sample_attribute_pair<F: SimScalar, R: Rng + ?Sized>(
    model: &AttributeModel<F>,
    rng: &mut R,
) -> (F, u64) {
    let z_fee = F::sample_standard_normal(rng);
    let w = F::sample_standard_normal(rng);
    let rho = model.copula_rho;
    let z_size = rho * z_fee + (F::one() - rho * rho).sqrt() * w;

    let fee = (model.fee_mu_log + model.fee_sigma_log * z_fee).exp();
    let raw_size = (model.size_mu_log + model.size_sigma_log * z_size).exp();
    let size = raw_size
        .ceil()
        .to_u64()
        .unwrap_or(u64::MAX)
        .max(model.min_size);
    (fee, size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn constant_intensity_is_flat() {
        let f = IntensityFunction::constant(3.0f64).unwrap();
        assert_eq!(f.evaluate(999.0), 3.0);
        assert_eq!(f.evaluate(0.0), 3.0);
        assert_eq!(f.lambda_max(), 3.0);
    }

    #[test]
    fn sinusoid_hits_midpoint_and_peak() {
        let f = IntensityFunction::sinusoid(3.0f64, 3.3, 3600.0).unwrap();
        assert!((f.evaluate(0.0) - 3.15).abs() < 1e-12);
        assert!((f.evaluate(900.0) - 3.3).abs() < 1e-12);
        assert!((f.evaluate(2700.0) - 3.0).abs() < 1e-12);
        assert_eq!(f.lambda_max(), 3.3);
    }

    #[test]
    fn linear_ramp_clamps_at_ends() {
        let f = IntensityFunction::linear_ramp(1.0f64, 3.0, 100.0).unwrap();
        assert_eq!(f.evaluate(0.0), 1.0);
        assert_eq!(f.evaluate(50.0), 2.0);
        assert_eq!(f.evaluate(100.0), 3.0);
        assert_eq!(f.evaluate(1e9), 3.0);
    }

    #[test]
    fn invalid_intensities_are_rejected() {
        assert!(IntensityFunction::constant(-1.0f64).is_err());
        assert!(IntensityFunction::sinusoid(3.3f64, 3.0, 3600.0).is_err());
        assert!(IntensityFunction::sinusoid(3.0f64, 3.3, 0.0).is_err());
        assert!(IntensityFunction::linear_ramp(-0.1f64, 3.0, 10.0).is_err());
        // Bound below the peak violates the thinning precondition.
        let f = IntensityFunction::sinusoid(3.0f64, 3.3, 3600.0).unwrap();
        assert!(f.with_lambda_max(3.1).is_err());
        assert!(f.with_lambda_max(6.0).is_ok());
    }

    #[test]
    fn thinning_accepts_every_candidate_at_tight_bound() {
        // With lambda(t) == lambda_max the acceptance test D <= 1 always
        // passes, so the output must equal a homogeneous oracle that draws
        // the same (x, D) pairs and ignores D.
        let f = IntensityFunction::constant(2.0f64).unwrap();
        let horizon = 1e4;
        let got = sample_arrival_times(&f, horizon, &mut rng(7));

        let mut oracle_rng = rng(7);
        let mut oracle = Vec::new();
        let mut s = 0.0f64;
        loop {
            let x: f64 = oracle_rng.sample(rand::distr::Open01);
            s -= x.ln() / 2.0;
            if s > horizon {
                break;
            }
            let _d: f64 = oracle_rng.sample(rand::distr::Open01);
            oracle.push(s);
        }
        assert_eq!(got, oracle);
    }

    #[test]
    fn arrivals_are_strictly_increasing_and_in_range() {
        let f = IntensityFunction::sinusoid(3.0f64, 3.3, 3600.0).unwrap();
        let horizon = 5e4;
        let times = sample_arrival_times(&f, horizon, &mut rng(11));
        assert!(!times.is_empty());
        assert!(times[0] > 0.0);
        assert!(*times.last().unwrap() <= horizon);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_rate_produces_no_arrivals() {
        let f = IntensityFunction::constant(0.0f64).unwrap();
        assert!(sample_arrival_times(&f, 1e5, &mut rng(3)).is_empty());
    }

    #[test]
    fn arrival_sampling_is_deterministic() {
        let f = IntensityFunction::sinusoid(3.0f64, 3.3, 3600.0).unwrap();
        let a = sample_arrival_times(&f, 1e4, &mut rng(42));
        let b = sample_arrival_times(&f, 1e4, &mut rng(42));
        assert_eq!(a, b);
    }

    #[test]
    fn arrival_sampling_is_generic_over_scalar() {
        let f = IntensityFunction::constant(1.0f32).unwrap();
        let times = sample_arrival_times(&f, 1e3f32, &mut rng(5));
        assert!(!times.is_empty());
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn attribute_model_validation() {
        let ok = AttributeModel::<f64>::default();
        assert!(ok.validate().is_ok());
        assert!(AttributeModel::new(9.0f64, 0.0, 5.95, 0.6, 0.2, 150).is_err());
        assert!(AttributeModel::new(9.0f64, 1.0, 5.95, 0.6, 1.0, 150).is_err());
        assert!(AttributeModel::new(9.0f64, 1.0, 5.95, 0.6, 0.2, 0).is_err());
    }

    #[test]
    fn sampled_attributes_respect_floors() {
        let model = AttributeModel::<f64>::default();
        let mut r = rng(13);
        for _ in 0..10_000 {
            let (fee, size) = sample_attribute_pair(&model, &mut r);
            assert!(fee > 0.0);
            assert!(size >= model.min_size);
        }
    }

    #[test]
    fn attribute_sampling_is_deterministic() {
        let model = AttributeModel::<f64>::default();
        let mut a = rng(21);
        let mut b = rng(21);
        for _ in 0..100 {
            assert_eq!(
                sample_attribute_pair(&model, &mut a),
                sample_attribute_pair(&model, &mut b)
            );
        }
    }
}
