//! Simulators for the three stationary process families: Gaussian AR(3),
//! GARCH(1,1) with standardized Student-t innovations, and two-regime
//! SETAR with AR(1) dynamics in each regime.
//!
//! Every simulator starts from zeros (or from the unconditional variance for
//! GARCH), runs `burn_in` discarded steps, and returns the next `len` values.
//! Given the same spec, lengths and generator state the output is identical.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AR_BURN_IN: usize = 500;
pub const SETAR_BURN_IN: usize = 500;
pub const GARCH_BURN_IN: usize = 1000;

/// Boundary margin for the causality check: partial autocorrelations with
/// `|kappa| * (1 + ROOT_TOLERANCE) >= 1` count as non-causal.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// A finite, non-empty real-valued series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("time series must be non-empty".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite value {} at position {pos}",
                values[pos]
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(series: TimeSeries) -> Self {
        series.0
    }
}

/// Partial autocorrelations of an AR(3) process, each strictly inside (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacfSpec {
    kappa: [f64; 3],
}

impl PacfSpec {
    pub fn new(kappa: [f64; 3]) -> Result<Self> {
        for (j, k) in kappa.iter().enumerate() {
            if !(k.abs() < 1.0) {
                return Err(Error::NonStationary(format!(
                    "partial autocorrelation {} = {k} is outside (-1, 1)",
                    j + 1
                )));
            }
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> [f64; 3] {
        self.kappa
    }
}

/// Causal Gaussian AR(3): `X_t = phi_1 X_{t-1} + phi_2 X_{t-2} + phi_3 X_{t-3} + e_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArSpec {
    phi: [f64; 3],
    sigma2: f64,
}

impl ArSpec {
    pub fn new(phi: [f64; 3], sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "innovation variance must be positive, got {sigma2}"
            )));
        }
        if !check_ar_stationary(phi) {
            return Err(Error::NonStationary(format!(
                "AR coefficients {phi:?} are not causal"
            )));
        }
        Ok(Self { phi, sigma2 })
    }

    pub fn from_pacf(pacf: &PacfSpec, sigma2: f64) -> Result<Self> {
        Self::new(durbin_levinson(pacf), sigma2)
    }

    pub fn phi(&self) -> [f64; 3] {
        self.phi
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// GARCH(1,1) with standardized Student-t innovations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchSpec {
    omega: f64,
    alpha: f64,
    beta: f64,
    nu: f64,
}

impl GarchSpec {
    pub fn new(omega: f64, alpha: f64, beta: f64, nu: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        if !(alpha >= 0.0) || !(beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be non-negative, got {alpha}, {beta}"
            )));
        }
        if !(alpha + beta < 1.0) {
            return Err(Error::NonStationary(format!(
                "alpha + beta = {} must be below 1",
                alpha + beta
            )));
        }
        if !(nu > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "degrees of freedom must exceed 2, got {nu}"
            )));
        }
        Ok(Self { omega, alpha, beta, nu })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }
}

/// SETAR(2,1,1): AR(1) with coefficient `phi_low` when `X_{t-1} <= threshold`,
/// `phi_high` otherwise, and standard Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetarSpec {
    phi_low: f64,
    phi_high: f64,
    threshold: f64,
}

impl SetarSpec {
    pub fn new(phi_low: f64, phi_high: f64, threshold: f64) -> Result<Self> {
        if !(phi_low.abs().max(phi_high.abs()) < 1.0) {
            return Err(Error::NonStationary(format!(
                "regime coefficients ({phi_low}, {phi_high}) must lie in (-1, 1)"
            )));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidParameter(format!("threshold must be finite, got {threshold}")));
        }
        Ok(Self { phi_low, phi_high, threshold })
    }

    pub fn phi_low(&self) -> f64 {
        self.phi_low
    }

    pub fn phi_high(&self) -> f64 {
        self.phi_high
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Maps partial autocorrelations to AR(3) coefficients.
///
/// `phi_{m,m} = kappa_m`, `phi_{m,j} = phi_{m-1,j} - kappa_m * phi_{m-1,m-j}`.
pub fn durbin_levinson(pacf: &PacfSpec) -> [f64; 3] {
    let kappa = pacf.kappa();
    let mut phi = [0.0; 3];
    for m in 0..3 {
        let prev = phi;
        phi[m] = kappa[m];
        for j in 0..m {
            phi[j] = prev[j] - kappa[m] * prev[m - 1 - j];
        }
    }
    phi
}

/// True iff every root of `1 - phi_1 z - phi_2 z^2 - phi_3 z^3` lies strictly
/// outside the unit circle.
///
/// Uses the Schur–Cohn step-down recursion (Durbin–Levinson run backwards):
/// the polynomial is causal exactly when every recovered partial
/// autocorrelation satisfies `|kappa| * (1 + ROOT_TOLERANCE) < 1`. Unlike an
/// iterative eigen-solver this terminates on every input, including the
/// nilpotent companion matrix of `phi = 0`.
pub fn check_ar_stationary(phi: [f64; 3]) -> bool {
    if phi.iter().any(|p| !p.is_finite()) {
        return false;
    }
    let mut coeffs = phi.to_vec();
    while let Some(&kappa) = coeffs.last() {
        if kappa.abs() * (1.0 + ROOT_TOLERANCE) >= 1.0 {
            return false;
        }
        let m = coeffs.len();
        let scale = 1.0 - kappa * kappa;
        coeffs = (0..m - 1)
            .map(|j| (coeffs[j] + kappa * coeffs[m - 2 - j]) / scale)
            .collect();
    }
    true
}

/// Student-t with `nu` degrees of freedom rescaled to unit variance.
#[derive(Debug, Clone, Copy)]
pub struct StandardizedStudentT {
    inner: StudentT<f64>,
    scale: f64,
}

impl StandardizedStudentT {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "standardized Student-t needs nu > 2, got {nu}"
            )));
        }
        let inner = StudentT::new(nu).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self {
            inner,
            scale: ((nu - 2.0) / nu).sqrt(),
        })
    }
}

impl Distribution<f64> for StandardizedStudentT {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inner.sample(rng) * self.scale
    }
}

pub fn sample_student_t_std<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> Result<f64> {
    Ok(StandardizedStudentT::new(nu)?.sample(rng))
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::InvalidParameter("series length must be at least 1".into()));
    }
    Ok(())
}

pub fn simulate_ar<R: Rng + ?Sized>(
    spec: &ArSpec,
    len: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<TimeSeries> {
    check_len(len)?;
    if !check_ar_stationary(spec.phi) {
        return Err(Error::NonStationary(format!("AR coefficients {:?}", spec.phi)));
    }
    let sd = spec.sigma2.sqrt();
    let [p1, p2, p3] = spec.phi;
    // (x_{t-1}, x_{t-2}, x_{t-3})
    let (mut x1, mut x2, mut x3) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(len);
    for step in 0..burn_in + len {
        let eps: f64 = rng.sample(StandardNormal);
        let x = p1 * x1 + p2 * x2 + p3 * x3 + sd * eps;
        x3 = x2;
        x2 = x1;
        x1 = x;
        if step >= burn_in {
            out.push(x);
        }
    }
    TimeSeries::new(out)
}

pub fn simulate_garch<R: Rng + ?Sized>(
    spec: &GarchSpec,
    len: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<TimeSeries> {
    check_len(len)?;
    let spec = GarchSpec::new(spec.omega, spec.alpha, spec.beta, spec.nu)?;
    let noise = StandardizedStudentT::new(spec.nu)?;
    let mut sigma2 = spec.unconditional_variance();
    let mut prev_x2 = sigma2;
    let mut out = Vec::with_capacity(len);
    for step in 0..burn_in + len {
        sigma2 = spec.omega + spec.alpha * prev_x2 + spec.beta * sigma2;
        let x = sigma2.sqrt() * noise.sample(rng);
        prev_x2 = x * x;
        if step >= burn_in {
            out.push(x);
        }
    }
    TimeSeries::new(out)
}

pub fn simulate_setar<R: Rng + ?Sized>(
    spec: &SetarSpec,
    len: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<TimeSeries> {
    check_len(len)?;
    let spec = SetarSpec::new(spec.phi_low, spec.phi_high, spec.threshold)?;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(len);
    for step in 0..burn_in + len {
        let phi = if prev <= spec.threshold {
            spec.phi_low
        } else {
            spec.phi_high
        };
        let eps: f64 = rng.sample(StandardNormal);
        prev = phi * prev + eps;
        if step >= burn_in {
            out.push(prev);
        }
    }
    TimeSeries::new(out)
}

/// Parameters of one generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ProcessSpec {
    Ar(ArSpec),
    Garch(GarchSpec),
    Setar(SetarSpec),
}

impl ProcessSpec {
    /// Simulates with the family's default burn-in.
    pub fn simulate<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Result<TimeSeries> {
        match self {
            ProcessSpec::Ar(s) => simulate_ar(s, len, AR_BURN_IN, rng),
            ProcessSpec::Garch(s) => simulate_garch(s, len, GARCH_BURN_IN, rng),
            ProcessSpec::Setar(s) => simulate_setar(s, len, SETAR_BURN_IN, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn lag1_acf(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        num / den
    }

    fn variance(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn durbin_levinson_higher_order_zero_is_ar1() {
        let phi = durbin_levinson(&PacfSpec::new([0.5, 0.0, 0.0]).unwrap());
        assert_eq!(phi, [0.5, 0.0, 0.0]);
    }

    #[test]
    fn durbin_levinson_two_term_hand_value() {
        // phi_1 = kappa_1 (1 - kappa_2) = 0.4, phi_2 = kappa_2 = 0.2
        let phi = durbin_levinson(&PacfSpec::new([0.5, 0.2, 0.0]).unwrap());
        assert!((phi[0] - 0.4).abs() < 1e-15);
        assert!((phi[1] - 0.2).abs() < 1e-15);
        assert_eq!(phi[2], 0.0);
    }

    #[test]
    fn pacf_rejects_boundary() {
        assert!(matches!(PacfSpec::new([1.0, 0.0, 0.0]), Err(Error::NonStationary(_))));
        assert!(PacfSpec::new([0.0, -1.0, 0.0]).is_err());
        assert!(PacfSpec::new([0.0, 0.0, f64::NAN]).is_err());
    }

    #[test]
    fn stationarity_trivial_cases() {
        assert!(check_ar_stationary([0.0, 0.0, 0.0]));
        assert!(!check_ar_stationary([1.0, 0.0, 0.0]));
        assert!(!check_ar_stationary([0.0, 0.0, 1.0]));
        assert!(check_ar_stationary([0.4, 0.2, 0.0]));
        assert!(!check_ar_stationary([0.5, 0.5, 0.0]));
    }

    #[test]
    fn ar_spec_rejects_non_causal_and_bad_variance() {
        assert!(matches!(ArSpec::new([1.2, 0.0, 0.0], 1.0), Err(Error::NonStationary(_))));
        assert!(matches!(ArSpec::new([0.2, 0.0, 0.0], 0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn white_noise_ar_has_unit_variance() {
        let spec = ArSpec::new([0.0; 3], 1.0).unwrap();
        let x = simulate_ar(&spec, 100_000, AR_BURN_IN, &mut seeded_rng(1)).unwrap();
        assert!((variance(x.values()) - 1.0).abs() < 0.05);
    }

    #[test]
    fn ar1_lag1_acf_matches_coefficient() {
        let spec = ArSpec::new([0.5, 0.0, 0.0], 1.0).unwrap();
        let x = simulate_ar(&spec, 100_000, AR_BURN_IN, &mut seeded_rng(2)).unwrap();
        assert!((lag1_acf(x.values()) - 0.5).abs() < 0.02);
    }

    #[test]
    fn simulators_are_deterministic() {
        let ar = ArSpec::new([0.3, -0.2, 0.1], 0.7).unwrap();
        let a = simulate_ar(&ar, 200, AR_BURN_IN, &mut seeded_rng(9)).unwrap();
        let b = simulate_ar(&ar, 200, AR_BURN_IN, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
        let s = SetarSpec::new(0.4, -0.6, 0.1).unwrap();
        let a = simulate_setar(&s, 200, SETAR_BURN_IN, &mut seeded_rng(9)).unwrap();
        let b = simulate_setar(&s, 200, SETAR_BURN_IN, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
        let g = GarchSpec::new(1e-5, 0.1, 0.8, 5.0).unwrap();
        let a = simulate_garch(&g, 200, GARCH_BURN_IN, &mut seeded_rng(9)).unwrap();
        let b = simulate_garch(&g, 200, GARCH_BURN_IN, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn student_t_rejects_low_dof() {
        let mut rng = seeded_rng(0);
        assert!(sample_student_t_std(2.0, &mut rng).is_err());
        assert!(sample_student_t_std(1.5, &mut rng).is_err());
        assert!(sample_student_t_std(2.5, &mut rng).is_ok());
    }

    fn moments(nu: f64, draws: usize, seed: u64) -> (f64, f64) {
        let dist = StandardizedStudentT::new(nu).unwrap();
        let mut rng = seeded_rng(seed);
        let xs: Vec<f64> = (0..draws).map(|_| dist.sample(&mut rng)).collect();
        let n = draws as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        (m2, m4 / (m2 * m2) - 3.0)
    }

    #[test]
    fn student_t_near_gaussian_limit() {
        let (var, kurt) = moments(10_000.0, 1_000_000, 11);
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
        assert!(kurt.abs() < 0.05, "excess kurtosis {kurt}");
    }

    #[test]
    fn student_t_moderate_and_heavy_tails() {
        let (var5, _) = moments(5.0, 1_000_000, 12);
        assert!((var5 - 1.0).abs() < 0.02, "nu=5 variance {var5}");
        let (var3, _) = moments(3.0, 1_000_000, 13);
        assert!((var3 - 1.0).abs() < 0.10, "nu=3 variance {var3}");
    }

    #[test]
    fn garch_without_dynamics_is_scaled_noise() {
        let spec = GarchSpec::new(1.0, 0.0, 0.0, 10_000.0).unwrap();
        let x = simulate_garch(&spec, 100_000, GARCH_BURN_IN, &mut seeded_rng(3)).unwrap();
        assert!((variance(x.values()) - 1.0).abs() < 0.05);
    }

    #[test]
    fn garch_unconditional_variance() {
        let spec = GarchSpec::new(1e-5, 0.1, 0.85, 10_000.0).unwrap();
        let x = simulate_garch(&spec, 200_000, GARCH_BURN_IN, &mut seeded_rng(4)).unwrap();
        let target = 2e-4;
        assert!((variance(x.values()) - target).abs() < 0.15 * target);
    }

    #[test]
    fn garch_squares_are_autocorrelated() {
        let spec = GarchSpec::new(1e-5, 0.2, 0.7, 10_000.0).unwrap();
        let x = simulate_garch(&spec, 100_000, GARCH_BURN_IN, &mut seeded_rng(5)).unwrap();
        let sq: Vec<f64> = x.values().iter().map(|v| v * v).collect();
        assert!(lag1_acf(&sq) > 0.0);
    }

    #[test]
    fn garch_rejects_integrated_spec() {
        assert!(matches!(
            GarchSpec::new(1e-5, 0.3, 0.7, 5.0),
            Err(Error::NonStationary(_))
        ));
        assert!(GarchSpec::new(1e-5, 0.1, 0.7, 2.0).is_err());
    }

    #[test]
    fn setar_with_equal_regimes_is_ar1() {
        let spec = SetarSpec::new(0.6, 0.6, 0.3).unwrap();
        let x = simulate_setar(&spec, 100_000, SETAR_BURN_IN, &mut seeded_rng(6)).unwrap();
        assert!((lag1_acf(x.values()) - 0.6).abs() < 0.02);
    }

    #[test]
    fn setar_mean_matches_long_run_oracle() {
        let spec = SetarSpec::new(0.8, -0.8, 0.0).unwrap();
        let x = simulate_setar(&spec, 100_000, SETAR_BURN_IN, &mut seeded_rng(7)).unwrap();
        assert!(x.values().iter().all(|v| v.is_finite()));
        let mean = x.values().iter().sum::<f64>() / x.len() as f64;
        // independent long simulation with a hand-written loop and its own stream
        let mut rng = seeded_rng(1_000_007);
        let (mut prev, mut total) = (0.0f64, 0.0f64);
        let steps = 10_000_000usize;
        for _ in 0..steps {
            let phi = if prev <= 0.0 { 0.8 } else { -0.8 };
            let e: f64 = rng.sample(StandardNormal);
            prev = phi * prev + e;
            total += prev;
        }
        let long_run = total / steps as f64;
        assert!((mean - long_run).abs() < 0.05, "mean {mean} vs long-run {long_run}");
    }

    #[test]
    fn setar_rejects_unit_coefficient() {
        assert!(SetarSpec::new(1.0, 0.2, 0.0).is_err());
        assert!(SetarSpec::new(0.2, -1.0, 0.0).is_err());
    }

    #[test]
    fn zero_length_is_rejected() {
        let spec = ArSpec::new([0.0; 3], 1.0).unwrap();
        assert!(simulate_ar(&spec, 0, 10, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn white_noise_acf_mostly_within_band() {
        let spec = ArSpec::new([0.0; 3], 1.0).unwrap();
        let t = 500usize;
        let band = 4.0 / (t as f64).sqrt();
        let mut inside = 0;
        for seed in 0..1000u64 {
            let x = simulate_ar(&spec, t, AR_BURN_IN, &mut seeded_rng(seed)).unwrap();
            let acf = crate::features::acf(&x, &[1, 2, 3]).unwrap();
            if acf.values().iter().all(|r| r.abs() <= band) {
                inside += 1;
            }
        }
        assert!(inside >= 950, "{inside} of 1000 runs inside the band");
    }
}
