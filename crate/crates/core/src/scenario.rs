//! Ground-truth partitions and labeled collections for the four simulation
//! scenarios.
//!
//! | scenario | n              | partition            | process                          |
//! |----------|----------------|----------------------|----------------------------------|
//! | 1        | fixed          | Dirichlet–categorical, fixed K | AR(3) via partial autocorrelations |
//! | 2        | U{10..200}     | CRP, concentration ~ Exp(1)   | AR(3)                            |
//! | 3        | U{10..100}     | CRP, concentration ~ Exp(0.5) | GARCH(1,1), per-series t dof     |
//! | 4        | U{10..200}     | CRP, concentration ~ Exp(1)   | scenario 2 or SETAR(2,1,1), fair coin |
//!
//! Generation happens in two steps: [`plan`] draws the partition and every
//! per-series process spec, then [`ScenarioPlan::simulate`] produces the
//! series. Label ids are always in first-appearance order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{ArSpec, GarchSpec, PacfSpec, ProcessSpec, SetarSpec, TimeSeries};

pub const MAX_REJECTION_ATTEMPTS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ar,
    Garch,
    Setar,
}

/// `n` series of a common length with ground-truth labels `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCollection {
    series: Vec<TimeSeries>,
    labels: Vec<usize>,
    k: usize,
    family: Family,
}

impl LabeledCollection {
    pub fn new(series: Vec<TimeSeries>, labels: Vec<usize>, family: Family) -> Result<Self> {
        if series.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: series.len(),
                right: labels.len(),
            });
        }
        let k = count_distinct(&labels);
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "a labeled collection needs at least 2 clusters, got {k}"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} is outside 0..{k}; labels must be contiguous"
            )));
        }
        let len = series[0].len();
        if let Some(i) = series.iter().position(|s| s.len() != len) {
            return Err(Error::InvalidParameter(format!(
                "series {i} has length {}, expected {len}",
                series[i].len()
            )));
        }
        Ok(Self { series, labels, k, family })
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.series.len()
    }

    pub fn series_len(&self) -> usize {
        self.series[0].len()
    }

    pub fn family(&self) -> Family {
        self.family
    }
}

fn count_distinct(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Relabels so the first distinct label seen becomes 0, the next 1, and so on.
/// Returns the new labels and the old-to-new mapping (indexed by old label).
pub fn canonicalize_labels(labels: &[usize]) -> (Vec<usize>, Vec<Option<usize>>) {
    let max = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut map: Vec<Option<usize>> = vec![None; max];
    let mut next = 0;
    let out = labels
        .iter()
        .map(|&l| {
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    (out, map)
}

/// A sampled ground-truth partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDraw {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Dirichlet cluster weights, reordered to match canonical labels.
    pub weights: Option<Vec<f64>>,
    pub concentration: Option<f64>,
}

/// Exponential draw by inverse CDF; `rate` is the inverse mean.
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        let x = -(1.0 - u).ln() / rate;
        if x > 0.0 {
            return x;
        }
    }
}

/// Symmetric Dirichlet(1, ..., 1) weights followed by i.i.d. categorical
/// labels. Draws realizing fewer than `k` clusters are rejected.
pub fn sample_dirichlet_categorical<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<PartitionDraw> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= K <= n, got K={k}, n={n}"
        )));
    }
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let gammas: Vec<f64> = (0..k).map(|_| sample_exponential(1.0, rng)).collect();
        let total: f64 = gammas.iter().sum();
        let weights: Vec<f64> = gammas.iter().map(|g| g / total).collect();
        let labels: Vec<usize> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (c, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return c;
                    }
                }
                k - 1
            })
            .collect();
        if count_distinct(&labels) < k {
            continue;
        }
        let (labels, map) = canonicalize_labels(&labels);
        let mut reordered = vec![0.0; k];
        for (old, new) in map.iter().enumerate() {
            if let Some(new) = new {
                reordered[*new] = weights[old];
            }
        }
        return Ok(PartitionDraw {
            labels,
            k,
            weights: Some(reordered),
            concentration: None,
        });
    }
    Err(Error::RejectionLimit {
        attempts: MAX_REJECTION_ATTEMPTS,
    })
}

/// One unconditioned Chinese restaurant process seating of `n` customers.
pub fn crp_seating<R: Rng + ?Sized>(n: usize, concentration: f64, rng: &mut R) -> Vec<usize> {
    let mut labels = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::new();
    for i in 0..n {
        let u: f64 = rng.random::<f64>() * (i as f64 + concentration);
        let mut acc = 0.0;
        let mut chosen = sizes.len();
        for (c, &size) in sizes.iter().enumerate() {
            acc += size as f64;
            if u < acc {
                chosen = c;
                break;
            }
        }
        if chosen == sizes.len() {
            sizes.push(1);
        } else {
            sizes[chosen] += 1;
        }
        labels.push(chosen);
    }
    labels
}

/// CRP partition conditioned on at least two clusters, by rejection.
pub fn sample_crp<R: Rng + ?Sized>(
    n: usize,
    concentration: f64,
    rng: &mut R,
) -> Result<PartitionDraw> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("CRP needs n >= 2, got {n}")));
    }
    if !(concentration > 0.0) || !concentration.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "CRP concentration must be positive, got {concentration}"
        )));
    }
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let labels = crp_seating(n, concentration, rng);
        let k = count_distinct(&labels);
        if k >= 2 {
            return Ok(PartitionDraw {
                labels,
                k,
                weights: None,
                concentration: Some(concentration),
            });
        }
    }
    Err(Error::RejectionLimit {
        attempts: MAX_REJECTION_ATTEMPTS,
    })
}

/// Closed interval `[lo, hi]` used as a uniform sampling range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config(format!(
                "range `{name}` needs lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.lo..self.hi)
    }

    /// Uniform on the open interval (lo, hi).
    fn sample_open<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = self.sample(rng);
            if x > self.lo {
                return x;
            }
        }
    }
}

/// Uniform bounds and candidate sets used by the generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamRanges {
    pub kappa: Range,
    pub sigma2: Range,
    pub omega: Range,
    pub garch_alpha: Range,
    /// Lower bound of beta; the upper bound is `1 - alpha`.
    pub garch_beta_min: f64,
    pub nu_choices: Vec<f64>,
    pub setar_phi: Range,
    pub threshold: Range,
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            kappa: Range::new(-1.0, 1.0),
            sigma2: Range::new(0.1, 2.0),
            omega: Range::new(1e-6, 1e-4),
            garch_alpha: Range::new(0.01, 0.30),
            garch_beta_min: 0.70,
            nu_choices: vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10_000.0],
            setar_phi: Range::new(-1.0, 1.0),
            threshold: Range::new(-0.75, 0.75),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRange {
    pub min: usize,
    pub max: usize,
}

/// Everything needed to draw labeled collections for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: u8,
    /// Series length.
    pub len: usize,
    /// Number of series; scenario defaults apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<SizeRange>,
    /// Number of clusters (scenario 1 only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Rate of the exponential prior on the CRP concentration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration_rate: Option<f64>,
    #[serde(default)]
    pub ranges: ParamRanges,
    /// Probability of the SETAR branch in scenario 4.
    #[serde(default = "default_setar_probability")]
    pub setar_probability: f64,
}

fn default_setar_probability() -> f64 {
    0.5
}

impl ScenarioConfig {
    fn base(scenario: u8, len: usize) -> Self {
        Self {
            scenario,
            len,
            n: None,
            k: None,
            concentration_rate: None,
            ranges: ParamRanges::default(),
            setar_probability: default_setar_probability(),
        }
    }

    pub fn scenario1(n: usize, k: usize, len: usize) -> Self {
        Self {
            n: Some(SizeRange { min: n, max: n }),
            k: Some(k),
            ..Self::base(1, len)
        }
    }

    pub fn scenario2(len: usize) -> Self {
        Self::base(2, len)
    }

    pub fn scenario3(len: usize) -> Self {
        Self::base(3, len)
    }

    pub fn scenario4(len: usize) -> Self {
        Self::base(4, len)
    }

    pub fn with_n_range(mut self, min: usize, max: usize) -> Self {
        self.n = Some(SizeRange { min, max });
        self
    }

    pub fn n_range(&self) -> SizeRange {
        self.n.unwrap_or(match self.scenario {
            3 => SizeRange { min: 10, max: 100 },
            _ => SizeRange { min: 10, max: 200 },
        })
    }

    pub fn concentration_rate(&self) -> f64 {
        self.concentration_rate
            .unwrap_or(if self.scenario == 3 { 0.5 } else { 1.0 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.scenario) {
            return Err(Error::Config(format!(
                "scenario must be 1, 2, 3 or 4, got {}",
                self.scenario
            )));
        }
        if self.len < 10 {
            return Err(Error::Config(format!(
                "series length must be at least 10, got {}",
                self.len
            )));
        }
        let n = self.n_range();
        if n.min < 2 || n.min > n.max {
            return Err(Error::Config(format!(
                "invalid series-count range {}..={}",
                n.min, n.max
            )));
        }
        if self.scenario == 1 {
            let k = self
                .k
                .ok_or_else(|| Error::Config("scenario 1 needs a fixed `k`".into()))?;
            if n.min != n.max {
                return Err(Error::Config("scenario 1 needs a fixed `n`".into()));
            }
            if k < 2 || k > n.min {
                return Err(Error::Config(format!("need 2 <= k <= n, got k={k}, n={}", n.min)));
            }
        }
        if !(self.concentration_rate() > 0.0) {
            return Err(Error::Config("concentration rate must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.setar_probability) {
            return Err(Error::Config("setar_probability must lie in [0, 1]".into()));
        }
        let r = &self.ranges;
        r.kappa.validate("kappa")?;
        r.sigma2.validate("sigma2")?;
        r.omega.validate("omega")?;
        r.garch_alpha.validate("garch_alpha")?;
        r.setar_phi.validate("setar_phi")?;
        r.threshold.validate("threshold")?;
        if r.kappa.lo < -1.0 || r.kappa.hi > 1.0 || r.setar_phi.lo < -1.0 || r.setar_phi.hi > 1.0 {
            return Err(Error::Config("kappa and setar_phi ranges must lie within [-1, 1]".into()));
        }
        if r.sigma2.lo <= 0.0 || r.omega.lo <= 0.0 || r.garch_alpha.lo < 0.0 {
            return Err(Error::Config("sigma2, omega and alpha ranges must be positive".into()));
        }
        if !(r.garch_beta_min >= 0.0 && r.garch_beta_min <= 1.0 - r.garch_alpha.hi) {
            return Err(Error::Config(format!(
                "garch_beta_min {} leaves no room below 1 - alpha",
                r.garch_beta_min
            )));
        }
        if r.nu_choices.is_empty() || r.nu_choices.iter().any(|nu| !(*nu > 2.0)) {
            return Err(Error::Config("nu_choices must be non-empty with every value > 2".into()));
        }
        Ok(())
    }
}

/// Partition plus one process spec per series, before any simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPlan {
    pub family: Family,
    pub partition: PartitionDraw,
    pub specs: Vec<ProcessSpec>,
}

impl ScenarioPlan {
    pub fn n(&self) -> usize {
        self.specs.len()
    }

    pub fn simulate<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Result<LabeledCollection> {
        let series = self
            .specs
            .iter()
            .map(|spec| spec.simulate(len, rng))
            .collect::<Result<Vec<_>>>()?;
        LabeledCollection::new(series, self.partition.labels.clone(), self.family)
    }
}

fn sample_ar_specs<R: Rng + ?Sized>(
    k: usize,
    ranges: &ParamRanges,
    rng: &mut R,
) -> Result<Vec<ArSpec>> {
    (0..k)
        .map(|_| {
            let kappa = [
                ranges.kappa.sample_open(rng),
                ranges.kappa.sample_open(rng),
                ranges.kappa.sample_open(rng),
            ];
            let sigma2 = ranges.sigma2.sample(rng);
            ArSpec::from_pacf(&PacfSpec::new(kappa)?, sigma2)
        })
        .collect()
}

fn crp_partition<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<PartitionDraw> {
    let range = config.n_range();
    let n = rng.random_range(range.min..=range.max);
    let concentration = sample_exponential(config.concentration_rate(), rng);
    sample_crp(n, concentration, rng)
}

fn plan_ar<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    partition: PartitionDraw,
    rng: &mut R,
) -> Result<ScenarioPlan> {
    let clusters = sample_ar_specs(partition.k, &config.ranges, rng)?;
    let specs = partition
        .labels
        .iter()
        .map(|&l| ProcessSpec::Ar(clusters[l]))
        .collect();
    Ok(ScenarioPlan {
        family: Family::Ar,
        partition,
        specs,
    })
}

fn plan_garch<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ScenarioPlan> {
    let partition = crp_partition(config, rng)?;
    let r = &config.ranges;
    let clusters: Vec<(f64, f64, f64)> = (0..partition.k)
        .map(|_| {
            let omega = r.omega.sample(rng);
            loop {
                let alpha = r.garch_alpha.sample(rng);
                // Rounding can close the interval when alpha sits at the
                // top of its range; redraw in that case.
                if 1.0 - alpha <= r.garch_beta_min {
                    continue;
                }
                let beta = rng.random_range(r.garch_beta_min..1.0 - alpha);
                if alpha + beta < 1.0 {
                    return (omega, alpha, beta);
                }
            }
        })
        .collect();
    let specs = partition
        .labels
        .iter()
        .map(|&l| {
            let (omega, alpha, beta) = clusters[l];
            let nu = r.nu_choices[rng.random_range(0..r.nu_choices.len())];
            GarchSpec::new(omega, alpha, beta, nu).map(ProcessSpec::Garch)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioPlan {
        family: Family::Garch,
        partition,
        specs,
    })
}

fn plan_setar<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ScenarioPlan> {
    let partition = crp_partition(config, rng)?;
    let r = &config.ranges;
    let clusters = (0..partition.k)
        .map(|_| {
            let low = r.setar_phi.sample_open(rng);
            let high = r.setar_phi.sample_open(rng);
            let threshold = r.threshold.sample(rng);
            SetarSpec::new(low, high, threshold)
        })
        .collect::<Result<Vec<_>>>()?;
    let specs = partition
        .labels
        .iter()
        .map(|&l| ProcessSpec::Setar(clusters[l]))
        .collect();
    Ok(ScenarioPlan {
        family: Family::Setar,
        partition,
        specs,
    })
}

/// Draws the partition and per-series process specs for one collection.
pub fn plan<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ScenarioPlan> {
    config.validate()?;
    match config.scenario {
        1 => {
            let n = config.n_range().min;
            let k = config.k.expect("validated");
            let partition = sample_dirichlet_categorical(n, k, rng)?;
            plan_ar(config, partition, rng)
        }
        2 => {
            let partition = crp_partition(config, rng)?;
            plan_ar(config, partition, rng)
        }
        3 => plan_garch(config, rng),
        _ => {
            if rng.random::<f64>() < config.setar_probability {
                plan_setar(config, rng)
            } else {
                let partition = crp_partition(config, rng)?;
                plan_ar(config, partition, rng)
            }
        }
    }
}

pub fn generate<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<LabeledCollection> {
    plan(config, rng)?.simulate(config.len, rng)
}

pub fn generate_scenario1<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    len: usize,
    rng: &mut R,
) -> Result<LabeledCollection> {
    if k > n {
        return Err(Error::InvalidParameter(format!("K={k} exceeds n={n}")));
    }
    generate(&ScenarioConfig::scenario1(n, k, len), rng)
}

pub fn generate_scenario2<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<LabeledCollection> {
    generate(&ScenarioConfig::scenario2(len), rng)
}

pub fn generate_scenario3<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<LabeledCollection> {
    generate(&ScenarioConfig::scenario3(len), rng)
}

pub fn generate_scenario4<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<LabeledCollection> {
    generate(&ScenarioConfig::scenario4(len), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn canonical_labels_follow_first_appearance() {
        let (labels, _) = canonicalize_labels(&[4, 4, 1, 7, 1]);
        assert_eq!(labels, vec![0, 0, 1, 2, 1]);
    }

    #[test]
    fn dirichlet_small_cases() {
        let mut rng = seeded_rng(1);
        for _ in 0..100 {
            let d = sample_dirichlet_categorical(4, 2, &mut rng).unwrap();
            assert_eq!(d.k, 2);
            assert!(d.labels.contains(&0) && d.labels.contains(&1));
            let d = sample_dirichlet_categorical(2, 2, &mut rng).unwrap();
            assert_eq!(d.labels, vec![0, 1]);
        }
        assert!(sample_dirichlet_categorical(2, 3, &mut rng).is_err());
    }

    #[test]
    fn dirichlet_frequencies_track_weights() {
        let mut rng = seeded_rng(2);
        for _ in 0..20 {
            let d = sample_dirichlet_categorical(1000, 3, &mut rng).unwrap();
            let w = d.weights.unwrap();
            for c in 0..3 {
                let freq = d.labels.iter().filter(|&&l| l == c).count() as f64 / 1000.0;
                assert!((freq - w[c]).abs() <= 0.05, "cluster {c}: {freq} vs {}", w[c]);
            }
        }
    }

    #[test]
    fn crp_two_customers() {
        let mut rng = seeded_rng(3);
        for alpha in [0.1, 1.0, 10.0] {
            assert_eq!(sample_crp(2, alpha, &mut rng).unwrap().labels, vec![0, 1]);
        }
        assert!(sample_crp(5, 0.0, &mut rng).is_err());
        assert!(sample_crp(5, -1.0, &mut rng).is_err());
    }

    #[test]
    fn crp_mean_table_count_matches_harmonic_sum() {
        let mut rng = seeded_rng(4);
        let draws = 100_000;
        let total: usize = (0..draws)
            .map(|_| count_distinct(&crp_seating(50, 1.0, &mut rng)))
            .sum();
        let mean = total as f64 / draws as f64;
        let expected: f64 = (0..50).map(|i| 1.0 / (1.0 + i as f64)).sum();
        assert!((mean - expected).abs() < 0.05 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn crp_near_zero_concentration_gives_two_clusters() {
        let mut rng = seeded_rng(5);
        let draws = 1000;
        let two = (0..draws)
            .filter(|_| sample_crp(10, 1e-3, &mut rng).unwrap().k == 2)
            .count();
        assert!(two as f64 >= 0.99 * draws as f64, "{two}");
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::scenario1(20, 3, 100).validate().is_ok());
        assert!(ScenarioConfig::scenario1(2, 3, 100).validate().is_err());
        assert!(ScenarioConfig::scenario2(5).validate().is_err());
        let mut c = ScenarioConfig::scenario3(100);
        c.ranges.omega = Range::new(1e-4, 1e-6);
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::scenario2(100);
        c.scenario = 7;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = ScenarioConfig::scenario2(300).with_n_range(10, 40);
        let json = serde_json::to_string(&c).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(c, back);
        let minimal: ScenarioConfig = serde_json::from_str(r#"{"scenario":3,"len":50}"#).unwrap();
        assert_eq!(minimal, ScenarioConfig::scenario3(50));
        assert_eq!(minimal.concentration_rate(), 0.5);
    }
}
