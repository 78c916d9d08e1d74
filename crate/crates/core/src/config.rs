//! Run configuration: a single JSON document whose every key is optional.
//! Missing keys take the preset of the selected experiment.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::PowerModel;
use crate::rates::{Architecture, Csit};
use crate::sweep::{BudgetMode, McConfig, Topology, DEFAULT_B_MAX, DEFAULT_SAMPLES, DEFAULT_W_REFINE};

/// Available bandwidth used when none is configured, Hz.
pub const DEFAULT_TOTAL_BANDWIDTH: f64 = 7e9;
/// Seed used when none is configured.
pub const DEFAULT_SEED: u64 = 0x5EED;
/// ADC-only budget of the SISO and antenna-count studies, watts.
pub const ADC_ONLY_BUDGET: f64 = 20e-3;

/// Experiment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Quantizer,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Table1,
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Quantizer,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Table1,
        Experiment::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Quantizer => "quantizer",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Table1 => "table1",
            Experiment::Custom => "custom",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Architecture and CSIT pair searched by the sweep experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub arch: Architecture,
    pub csit: Csit,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario {
            arch: Architecture::Digital,
            csit: Csit::Yes,
        },
        Scenario {
            arch: Architecture::Analog,
            csit: Csit::Yes,
        },
        Scenario {
            arch: Architecture::Digital,
            csit: Csit::No,
        },
        Scenario {
            arch: Architecture::Analog,
            csit: Csit::No,
        },
    ];

    /// e.g. `DC-csit`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.arch.short(), self.csit.label())
    }
}

/// Configuration file contents. Every field may be omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    /// Hz.
    pub total_bandwidth: Option<f64>,
    /// Full-band SNR values, dB.
    pub snr_db: Option<Vec<f64>>,
    pub power: Option<PowerModel<f64>>,
    pub budget_mode: Option<BudgetMode>,
    /// Receiver power budgets, mW.
    pub budgets_mw: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub ci_level: Option<f64>,
    pub antennas: Option<Vec<usize>>,
    pub topology: Option<Topology>,
    pub bins: Option<Vec<usize>>,
    pub b_max: Option<usize>,
    pub w_refine: Option<usize>,
    pub scenarios: Option<Vec<Scenario>>,
    /// Duality-gap tolerance of the capacity oracle, bits.
    pub oracle_tol: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        // serde_json's message already ends with "at line L column C".
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Fills every unset key from the preset of `experiment` (or of the
    /// file's own selector when `experiment` is `None`) and validates.
    pub fn resolve(&self, experiment: Option<Experiment>) -> Result<Resolved> {
        let experiment = experiment
            .or(self.experiment)
            .ok_or_else(|| Error::Config("no experiment selected".into()))?;
        let preset = Resolved::preset(experiment);
        let b_max = self.b_max.unwrap_or(preset.b_max);
        let bins = match (&self.bins, self.b_max) {
            (Some(b), _) => b.clone(),
            (None, Some(m)) => {
                let lo = if experiment == Experiment::Quantizer { 1 } else { 2 };
                (lo..=m).collect()
            }
            (None, None) => preset.bins.clone(),
        };
        let r = Resolved {
            experiment,
            total_bandwidth: self.total_bandwidth.unwrap_or(preset.total_bandwidth),
            snr_db: self.snr_db.clone().unwrap_or(preset.snr_db),
            power: self.power.unwrap_or(preset.power),
            budget_mode: self.budget_mode.unwrap_or(preset.budget_mode),
            budgets_mw: self.budgets_mw.clone().unwrap_or(preset.budgets_mw),
            mc: McConfig {
                samples: self.samples.unwrap_or(preset.mc.samples),
                seed: self.seed.unwrap_or(preset.mc.seed),
                ci_level: self.ci_level.unwrap_or(preset.mc.ci_level),
            },
            antennas: self.antennas.clone().unwrap_or(preset.antennas),
            topology: self.topology.unwrap_or(preset.topology),
            b_max: b_max.max(bins.iter().copied().max().unwrap_or(0)),
            bins,
            w_refine: self.w_refine.unwrap_or(preset.w_refine),
            scenarios: self.scenarios.clone().unwrap_or(preset.scenarios),
            oracle_tol: self.oracle_tol.unwrap_or(preset.oracle_tol),
            out: self.out.clone(),
        };
        r.validate()?;
        Ok(r)
    }
}

/// Fully resolved settings for one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub experiment: Experiment,
    pub total_bandwidth: f64,
    pub snr_db: Vec<f64>,
    pub power: PowerModel<f64>,
    pub budget_mode: BudgetMode,
    pub budgets_mw: Vec<f64>,
    pub mc: McConfig,
    pub antennas: Vec<usize>,
    pub topology: Topology,
    pub bins: Vec<usize>,
    pub b_max: usize,
    pub w_refine: usize,
    pub scenarios: Vec<Scenario>,
    pub oracle_tol: f64,
    pub out: Option<PathBuf>,
}

fn range(lo: f64, step: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as i64;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

impl Resolved {
    /// Defaults of each experiment.
    pub fn preset(experiment: Experiment) -> Self {
        let mut r = Resolved {
            experiment,
            total_bandwidth: DEFAULT_TOTAL_BANDWIDTH,
            snr_db: vec![0.0],
            power: PowerModel::default(),
            budget_mode: BudgetMode::Full,
            budgets_mw: range(100.0, 50.0, 500.0),
            mc: McConfig {
                samples: DEFAULT_SAMPLES,
                seed: DEFAULT_SEED,
                ci_level: 0.95,
            },
            antennas: (1..=8).collect(),
            topology: Topology::Mimo,
            bins: (2..=DEFAULT_B_MAX).collect(),
            b_max: DEFAULT_B_MAX,
            w_refine: DEFAULT_W_REFINE,
            scenarios: Scenario::ALL.to_vec(),
            oracle_tol: crate::oracle::DEFAULT_TOL,
            out: None,
        };
        match experiment {
            Experiment::Quantizer => {
                r.bins = (1..=16).collect();
                r.b_max = 16;
            }
            Experiment::Fig2 => {
                r.snr_db = range(-20.0, 5.0, 25.0);
                r.bins = vec![2, 4, 8];
                r.b_max = 8;
            }
            Experiment::Fig3 => {
                r.snr_db = range(-20.0, 1.0, 20.0);
                r.budget_mode = BudgetMode::AdcOnly;
                r.budgets_mw = vec![ADC_ONLY_BUDGET * 1e3];
            }
            Experiment::Fig4 => {
                r.snr_db = range(-10.0, 5.0, 20.0);
                r.budget_mode = BudgetMode::AdcOnly;
                r.budgets_mw = vec![ADC_ONLY_BUDGET * 1e3];
                r.antennas = vec![3];
            }
            Experiment::Fig5 => {
                r.budget_mode = BudgetMode::AdcOnly;
                r.budgets_mw = vec![ADC_ONLY_BUDGET * 1e3];
            }
            Experiment::Table1 | Experiment::Custom => {}
        }
        r
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.total_bandwidth > 0.0 && self.total_bandwidth.is_finite()) {
            return bad("total_bandwidth must be positive");
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db must be a nonempty list of finite values");
        }
        self.power.validate()?;
        if self.budgets_mw.is_empty() || self.budgets_mw.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return bad("budgets_mw must be a nonempty list of positive values");
        }
        self.mc.validate()?;
        if self.antennas.is_empty() || self.antennas.contains(&0) {
            return bad("antennas must be a nonempty list of positive counts");
        }
        if self.bins.is_empty() || self.bins.contains(&0) {
            return bad("bins must be a nonempty list of positive counts");
        }
        if self.experiment != Experiment::Quantizer && self.bins.contains(&1) {
            return bad("sweeps need at least 2 bins");
        }
        if self.scenarios.is_empty() {
            return bad("scenarios must be nonempty");
        }
        if !(self.oracle_tol > 0.0) {
            return bad("oracle_tol must be positive");
        }
        Ok(())
    }

    /// Power model after applying the budget mode.
    pub fn effective_power(&self) -> PowerModel<f64> {
        self.budget_mode.apply(&self.power)
    }
}

/// Parses `a,b,c`, a range `start:step:stop` or `start..stop` (both
/// inclusive, the latter with unit step).
pub fn parse_number_list(text: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("`{s}` is not a number")))
    };
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if hi < lo {
            return Err(Error::Config(format!("range `{text}` must have stop ≥ start")));
        }
        return Ok(range(lo, 1.0, hi));
    }
    if text.contains(':') && !text.contains(',') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, step, hi] = parts.as_slice() else {
            return Err(Error::Config(format!("range `{text}` must be start:step:stop")));
        };
        let (lo, step, hi) = (parse(lo)?, parse(step)?, parse(hi)?);
        if !(step > 0.0) || hi < lo {
            return Err(Error::Config(format!("range `{text}` must have a positive step and stop ≥ start")));
        }
        return Ok(range(lo, step, hi));
    }
    text.split(',').filter(|s| !s.trim().is_empty()).map(parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = RunConfig::from_json("").unwrap();
        let r = c.resolve(Some(Experiment::Table1)).unwrap();
        assert_eq!(r.total_bandwidth, 7e9);
        assert_eq!(r.power, PowerModel::default());
        assert_eq!(r.mc.seed, 0x5EED);
        assert_eq!(r.budgets_mw.len(), 9);
        assert_eq!(RunConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = RunConfig::from_json("{\n \"bandwith\": 1}").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 2") && msg.contains("bandwith"), "{msg}");
        assert!(RunConfig::from_json(r#"{"power": {"lna": 0.01, "foo": 1}}"#).is_err());
    }

    #[test]
    fn negative_bandwidth_rejected() {
        let c = RunConfig::from_json(r#"{"total_bandwidth": -1e9}"#).unwrap();
        assert!(matches!(c.resolve(Some(Experiment::Fig3)), Err(Error::Config(_))));
    }

    #[test]
    fn zero_samples_rejected() {
        let c = RunConfig::from_json(r#"{"samples": 0}"#).unwrap();
        assert!(matches!(c.resolve(Some(Experiment::Custom)), Err(Error::Config(_))));
    }

    #[test]
    fn adc_energy_override_reaches_model() {
        let c = RunConfig::from_json(r#"{"power": {"adc_energy": 1e-12}}"#).unwrap();
        let r = c.resolve(Some(Experiment::Table1)).unwrap();
        assert_eq!(r.power.adc_energy, 1e-12);
        assert_eq!(r.power.lna, 39e-3);
        assert!((r.power.p_adc(1e9, 2) - 2e-3).abs() < 1e-15);
    }

    #[test]
    fn b_max_expands_bins() {
        let c = RunConfig::from_json(r#"{"b_max": 5}"#).unwrap();
        assert_eq!(c.resolve(Some(Experiment::Custom)).unwrap().bins, vec![2, 3, 4, 5]);
    }

    #[test]
    fn number_lists() {
        assert_eq!(parse_number_list("-20:5:0").unwrap(), vec![-20.0, -15.0, -10.0, -5.0, 0.0]);
        assert_eq!(parse_number_list("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert!(parse_number_list("1:0:3").is_err());
        assert!(parse_number_list("x").is_err());
        assert_eq!(parse_number_list("2..5").unwrap(), vec![2.0, 3.0, 4.0, 5.0]);
        assert!(parse_number_list("5..2").is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
