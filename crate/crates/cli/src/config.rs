//! Experiment configuration files.
//!
//! Configs are TOML documents:
//!
//! ```toml
//! name = "distr2-information"
//! scenario = "strategic-incomplete"   # or nonstrategic-complete, strategic-complete
//! seed = 7
//! repetitions = 1                     # random distributions only
//! output = "out/distr2"               # optional
//!
//! [distribution]
//! kind = "reference"                  # reference | random | custom
//! index = 2                           # reference: 1..=5
//! # types = 10                        # random: number of types on the ladder 1..=T
//! # thetas = [...], counts = [...]    # custom
//! gamma = 0.2                         # committed registration share (non-strategic)
//!
//! [sweep]
//! param = "eps0"                      # eps0 | eps1 | alpha | gamma
//! values = [0.0, 1.0, 2.0]            # or start/stop/step
//!
//! [market]                            # optional overrides
//! n_sus = 100
//!
//! [cost]                              # optional overrides
//! eps0 = 0.0
//! alpha = 1.2
//! eps1 = 0.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tvws_pricing::optimizer::Scenario;
use tvws_pricing::{distributions, CostModel, MarketConfig, TypeProfile};

use crate::{CliError, Result};

/// Committed registration share used by non-strategic runs without `gamma`.
pub const DEFAULT_GAMMA: f64 = 0.2;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    scenario: String,
    seed: u64,
    repetitions: Option<u32>,
    output: Option<PathBuf>,
    distribution: RawDistribution,
    sweep: RawSweep,
    #[serde(default)]
    market: RawMarket,
    #[serde(default)]
    cost: RawCost,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawDistribution {
    Reference { index: usize, gamma: Option<f64> },
    Random { types: usize, gamma: Option<f64> },
    Custom { thetas: Vec<f64>, counts: Vec<u32>, gamma: Option<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    param: String,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarket {
    n_sus: Option<u32>,
    n_periods: Option<u32>,
    total_bandwidth: Option<f64>,
    channel_width: Option<f64>,
    fee_min: Option<f64>,
    fee_max: Option<f64>,
    fee_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    eps0: Option<f64>,
    alpha: Option<f64>,
    eps1: Option<f64>,
}

/// Parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eps0,
    Eps1,
    Alpha,
    Gamma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eps0 => "eps0",
            SweepParam::Eps1 => "eps1",
            SweepParam::Alpha => "alpha",
            SweepParam::Gamma => "gamma",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        [SweepParam::Eps0, SweepParam::Eps1, SweepParam::Alpha, SweepParam::Gamma]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::Config(format!("sweep.param: unknown parameter `{s}`")))
    }

    /// Sets this parameter to `value` in a cost model and committed share.
    pub fn apply(self, value: f64, mut cost: CostModel, mut gamma: f64) -> (CostModel, f64) {
        match self {
            SweepParam::Eps0 => cost.reservation_coeff = value,
            SweepParam::Alpha => cost.reservation_exponent = value,
            SweepParam::Eps1 => cost.query_marginal_cost = value,
            SweepParam::Gamma => gamma = value,
        }
        (cost, gamma)
    }

    /// Only the reservation cost moves, so one grid can be repriced.
    pub fn reprices(self) -> bool {
        matches!(self, SweepParam::Eps0 | SweepParam::Alpha)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Reference(usize),
    Random { types: usize },
    Custom { thetas: Vec<f64>, counts: Vec<u32> },
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub repetitions: u32,
    pub output: Option<PathBuf>,
    pub distribution: DistributionSpec,
    pub gamma: f64,
    pub sweep: Sweep,
    pub market: MarketConfig,
    pub cost: CostModel,
}

impl ExperimentSpec {
    /// `(series label, type profile)` for every repetition.
    pub fn type_profiles(&self) -> Result<Vec<(String, TypeProfile)>> {
        let profiles = match &self.distribution {
            DistributionSpec::Reference(k) => {
                vec![(format!("distr{k}"), distributions::reference(*k).map_err(config_err)?)]
            }
            DistributionSpec::Custom { thetas, counts } => vec![(
                "custom".to_string(),
                TypeProfile::new(thetas.clone(), counts.clone()).map_err(config_err)?,
            )],
            DistributionSpec::Random { types } => distributions::trial_seeds(self.seed, self.repetitions as usize)
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let t = distributions::random(self.market.n_sus, *types, s).map_err(config_err)?;
                    Ok((format!("random{}", i + 1), t))
                })
                .collect::<Result<_>>()?,
        };
        Ok(profiles)
    }

    /// Cost model and committed share for one sweep value.
    pub fn at(&self, value: f64) -> (CostModel, f64) {
        self.sweep.param.apply(value, self.cost, self.gamma)
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(CliError::Config("name: must not be empty".into()));
        }
        self.market.validate().map_err(config_err)?;
        for (label, types) in self.type_profiles()? {
            types
                .validate_for(&self.market)
                .map_err(|e| CliError::Config(format!("distribution ({label}): {e}")))?;
        }
        for &v in &self.sweep.values {
            let (cost, gamma) = self.at(v);
            cost.validate()
                .map_err(|e| CliError::Config(format!("sweep value {v}: {e}")))?;
            if !(0.0..=1.0).contains(&gamma) {
                return Err(CliError::Config(format!("gamma: must lie in [0, 1], got {gamma}")));
            }
        }
        Ok(())
    }
}

fn config_err(e: tvws_pricing::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn sweep_values(raw: &RawSweep) -> Result<Vec<f64>> {
    let values = match (&raw.values, raw.start, raw.stop, raw.step) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(start), Some(stop), Some(step)) => {
            if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
                return Err(CliError::Config(
                    "sweep: need finite start <= stop and a positive step".into(),
                ));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // Rounded to 12 decimals so 0.2-style steps print cleanly.
            (0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
        }
        _ => {
            return Err(CliError::Config(
                "sweep: give either `values` or all of `start`, `stop`, `step`".into(),
            ))
        }
    };
    if values.is_empty() {
        return Err(CliError::Config("sweep.values: must not be empty".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("sweep.values: {v} is not finite")));
    }
    Ok(values)
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let scenario: Scenario = raw.scenario.parse().map_err(config_err)?;
    let defaults = MarketConfig::default();
    let market = MarketConfig {
        n_sus: raw.market.n_sus.unwrap_or(defaults.n_sus),
        n_periods: raw.market.n_periods.unwrap_or(defaults.n_periods),
        total_bandwidth: raw.market.total_bandwidth.unwrap_or(defaults.total_bandwidth),
        channel_width: raw.market.channel_width.unwrap_or(defaults.channel_width),
        fee_min: raw.market.fee_min.unwrap_or(defaults.fee_min),
        fee_max: raw.market.fee_max.unwrap_or(defaults.fee_max),
        fee_step: raw.market.fee_step.unwrap_or(defaults.fee_step),
    };
    let base_cost = CostModel::default();
    let cost = CostModel {
        reservation_coeff: raw.cost.eps0.unwrap_or(base_cost.reservation_coeff),
        reservation_exponent: raw.cost.alpha.unwrap_or(base_cost.reservation_exponent),
        query_marginal_cost: raw.cost.eps1.unwrap_or(base_cost.query_marginal_cost),
    };
    let (distribution, gamma) = match raw.distribution {
        RawDistribution::Reference { index, gamma } => (DistributionSpec::Reference(index), gamma),
        RawDistribution::Random { types, gamma } => (DistributionSpec::Random { types }, gamma),
        RawDistribution::Custom { thetas, counts, gamma } => {
            (DistributionSpec::Custom { thetas, counts }, gamma)
        }
    };
    let repetitions = raw.repetitions.unwrap_or(1);
    if repetitions == 0 {
        return Err(CliError::Config("repetitions: must be at least 1".into()));
    }
    if repetitions > 1 && !matches!(distribution, DistributionSpec::Random { .. }) {
        return Err(CliError::Config(
            "repetitions: only random distributions can be repeated".into(),
        ));
    }
    let spec = ExperimentSpec {
        name: raw.name,
        scenario,
        seed: raw.seed,
        repetitions,
        output: raw.output,
        distribution,
        gamma: gamma.unwrap_or(DEFAULT_GAMMA),
        sweep: Sweep { param: SweepParam::parse(&raw.sweep.param)?, values: sweep_values(&raw.sweep)? },
        market,
        cost,
    };
    spec.validate()?;
    Ok(spec)
}

/// Reads, parses and validates a config file. Returns the spec and the raw
/// text, which the run manifest hashes.
pub fn load_config(path: &Path) -> Result<(ExperimentSpec, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((parse_config(&text)?, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "t"
scenario = "strategic-complete"
seed = 1
[distribution]
kind = "reference"
index = 1
[sweep]
param = "eps0"
values = [0.0, 3.0]
"#;

    #[test]
    fn reference_distributions_load() {
        let spec = parse_config(BASE).unwrap();
        let types = &spec.type_profiles().unwrap()[0].1;
        assert_eq!(types.counts, vec![10; 10]);
        assert_eq!(types.thetas, (1..=10).map(f64::from).collect::<Vec<_>>());
        let spec = parse_config(&BASE.replace("index = 1", "index = 2")).unwrap();
        assert_eq!(spec.type_profiles().unwrap()[0].1.counts, vec![1, 3, 5, 7, 9, 11, 13, 15, 17, 19]);
        assert_eq!(spec.gamma, DEFAULT_GAMMA);
        assert_eq!(spec.market, MarketConfig::default());
    }

    #[test]
    fn count_total_must_match_population() {
        let text = BASE.replace(
            "kind = \"reference\"\nindex = 1",
            "kind = \"custom\"\nthetas = [1.0, 2.0]\ncounts = [40, 50]",
        );
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{err}");
        assert_eq!(err.exit_code(), 1);
        let ok = text.replace("[sweep]", "[market]\nn_sus = 90\n[sweep]");
        assert_eq!(parse_config(&ok).unwrap().market.n_sus, 90);
    }

    #[test]
    fn ranges_and_errors() {
        let text = BASE.replace("values = [0.0, 3.0]", "start = 0.0\nstop = 1.0\nstep = 0.2");
        assert_eq!(parse_config(&text).unwrap().sweep.values, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        for bad in [
            BASE.replace("seed = 1\n", ""),
            BASE.replace("eps0", "beta"),
            BASE.replace("strategic-complete", "hybrid"),
            BASE.replace("index = 1", "index = 9"),
            BASE.replace("[0.0, 3.0]", "[-1.0]"),
            BASE.replace("[0.0, 3.0]", "[]"),
            BASE.replace("name = \"t\"", "name = \"t\"\ncolour = 3"),
            BASE.replace("seed = 1", "seed = 1\nrepetitions = 3"),
        ] {
            assert!(matches!(parse_config(&bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn random_repetitions_are_seeded() {
        let text = BASE
            .replace("kind = \"reference\"\nindex = 1", "kind = \"random\"\ntypes = 6")
            .replace("seed = 1", "seed = 1\nrepetitions = 3");
        let spec = parse_config(&text).unwrap();
        let a = spec.type_profiles().unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a, spec.type_profiles().unwrap());
        assert!(a.iter().all(|(_, t)| t.total() == 100 && t.n_types() == 6));
    }
}
