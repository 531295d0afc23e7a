//! Run configuration: a flat `key = value` file overlaid by command-line
//! flags. Both go through [`RunConfig::set`], so a value is validated the
//! same way wherever it comes from.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{CampaignConfig, NuRule};
use crate::homodyne::{DensityMode, GridConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Constant,
    Reciprocal,
}

impl std::str::FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(RuleKind::Constant),
            "reciprocal" => Ok(RuleKind::Reciprocal),
            other => Err(Error::Config(format!(
                "unknown nu rule '{other}' (expected constant or reciprocal)"
            ))),
        }
    }
}

/// Every knob of every subcommand. `None` means the subcommand default.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: Option<usize>,
    pub nbars: Option<Vec<f64>>,
    /// ν for the constant rule, `c` for the reciprocal rule.
    pub nu: Option<f64>,
    pub nu_rule: Option<RuleKind>,
    pub m: usize,
    pub mode: Option<DensityMode>,
    pub inference_mode: Option<DensityMode>,
    pub phi: f64,
    pub window: Option<f64>,
    pub grid: GridConfig,
    pub checkpoints: Option<Vec<usize>>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub timestamp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: CampaignConfig::default().campaign_seed,
            trials: None,
            nbars: None,
            nu: None,
            nu_rule: None,
            m: 1,
            mode: None,
            inference_mode: None,
            phi: 0.0,
            window: None,
            grid: GridConfig::default(),
            checkpoints: None,
            out: PathBuf::from("."),
            workers: None,
            timestamp: true,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Applies one setting. Keys accept `-` or `_` as separator.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        let value = value.trim();
        match k {
            "seed" => self.seed = parse(k, value)?,
            "trials" => self.trials = Some(parse(k, value)?),
            "nbar" => {
                let list: Vec<f64> = parse_list(k, value)?;
                if list.is_empty() {
                    return Err(Error::Config("nbar list is empty".into()));
                }
                for &n in &list {
                    positive(k, n)?;
                }
                self.nbars = Some(list);
            }
            "nu" => self.nu = Some(positive(k, parse(k, value)?)?),
            "nu_rule" => self.nu_rule = Some(value.parse()?),
            "m" => {
                let m = parse(k, value)?;
                if m == 0 {
                    return Err(Error::Config("m must be at least 1".into()));
                }
                self.m = m;
            }
            "mode" => self.mode = Some(value.parse()?),
            "inference_mode" => self.inference_mode = Some(value.parse()?),
            "phi" => {
                let phi: f64 = parse(k, value)?;
                if !phi.is_finite() {
                    return Err(Error::Config("phi must be finite".into()));
                }
                self.phi = phi;
            }
            "window" => self.window = Some(positive(k, parse(k, value)?)?),
            "half_width" => self.grid.half_width = positive(k, parse(k, value)?)?,
            "max_step" => self.grid.max_step = positive(k, parse(k, value)?)?,
            "peak_resolution" => self.grid.peak_resolution = positive(k, parse(k, value)?)?,
            "checkpoints" => {
                let list: Vec<usize> = parse_list(k, value)?;
                if list.is_empty() {
                    return Err(Error::Config("checkpoint list is empty".into()));
                }
                self.checkpoints = Some(list);
            }
            "out" => self.out = PathBuf::from(value),
            "workers" => {
                let w: usize = parse(k, value)?;
                if w == 0 {
                    return Err(Error::Config("workers must be at least 1".into()));
                }
                self.workers = Some(w);
            }
            "timestamp" => self.timestamp = parse(k, value)?,
            "no_timestamp" => self.timestamp = !parse::<bool>(k, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` document; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", lineno + 1)));
            };
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_str(&text)
    }

    pub fn nbars_or(&self, default: &[f64]) -> Vec<f64> {
        self.nbars.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn rule(&self, default_kind: RuleKind, default_value: f64) -> NuRule {
        let v = self.nu.unwrap_or(default_value);
        match self.nu_rule.unwrap_or(default_kind) {
            RuleKind::Constant => NuRule::Constant(v),
            RuleKind::Reciprocal => NuRule::Reciprocal(v),
        }
    }

    /// Campaign template with the given subcommand defaults; validated at
    /// every listed photon budget.
    pub fn campaign(&self, rule: NuRule, nbars: &[f64], default_trials: usize) -> Result<CampaignConfig> {
        let template = CampaignConfig {
            nbar: nbars.first().copied().unwrap_or(1.0),
            nu_rule: rule,
            m: self.m,
            phi_true: self.phi,
            trials: self.trials.unwrap_or(default_trials),
            mode: self.mode.unwrap_or(DensityMode::FirstOrder),
            inference_mode: self.inference_mode,
            campaign_seed: self.seed,
            window: self.window,
            grid: self.grid,
            workers: self.workers,
            ..CampaignConfig::default()
        };
        for &n in nbars {
            template.at_nbar(n).validate()?;
        }
        Ok(template)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut cfg = RunConfig::default();
        cfg.apply_str("# campaign\nseed = 11\nnbar = 1, 2,3 # three rows\n\nnu-rule = reciprocal\nmode=exact\n")
            .unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.nbars, Some(vec![1.0, 2.0, 3.0]));
        assert_eq!(cfg.nu_rule, Some(RuleKind::Reciprocal));
        assert_eq!(cfg.mode, Some(DensityMode::Exact));
        cfg.set("seed", "12").unwrap();
        cfg.set("no-timestamp", "true").unwrap();
        assert_eq!(cfg.seed, 12);
        assert!(!cfg.timestamp);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::default();
        for (k, v) in [
            ("seed", "-1"),
            ("trials", "many"),
            ("nbar", "1,-2"),
            ("nbar", ""),
            ("nu", "0"),
            ("nu_rule", "linear"),
            ("m", "0"),
            ("mode", "second-order"),
            ("workers", "0"),
            ("colour", "blue"),
        ] {
            assert!(cfg.set(k, v).is_err(), "{k} = {v}");
        }
        assert!(cfg.apply_str("seed 4").is_err());
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn rules_and_campaigns() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.rule(RuleKind::Reciprocal, 0.05), NuRule::Reciprocal(0.05));
        cfg.set("nu", "0.1").unwrap();
        cfg.set("nu_rule", "constant").unwrap();
        assert_eq!(cfg.rule(RuleKind::Reciprocal, 0.05), NuRule::Constant(0.1));
        let c = cfg.campaign(cfg.rule(RuleKind::Constant, 0.05), &[1.0, 2.0], 500).unwrap();
        assert_eq!(c.trials, 500);
        // first-order statistics reject nu = 0.5 before anything runs
        cfg.set("nu", "0.5").unwrap();
        assert!(cfg.campaign(cfg.rule(RuleKind::Constant, 0.05), &[1.0], 500).is_err());
    }
}
