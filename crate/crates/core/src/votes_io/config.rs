use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};

/// Prior constants for the process hyperparameters and the κ scale.
///
/// μ ~ N⁺(mu_mean, mu_sd²); ρ ~ N(rho_mean, rho_sd²) on (0, 1);
/// τ² ~ Exp(mean tau2_mean); ς ~ Gamma with the given mean and variance;
/// 1/λ ~ Exp(mean inv_lambda_mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPrior {
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub rho_mean: f64,
    pub rho_sd: f64,
    pub tau2_mean: f64,
    pub varsigma_mean: f64,
    pub varsigma_var: f64,
    pub inv_lambda_mean: f64,
}

impl Default for HyperPrior {
    fn default() -> Self {
        HyperPrior {
            mu_mean: 3.073,
            mu_sd: 1.588,
            rho_mean: 0.9,
            rho_sd: 0.03,
            tau2_mean: 2.473,
            varsigma_mean: 1.0,
            varsigma_var: 0.299,
            inv_lambda_mean: 25.0,
        }
    }
}

impl HyperPrior {
    /// The weaker prior used for sensitivity checks.
    pub fn alternative() -> Self {
        HyperPrior {
            mu_mean: 0.0,
            mu_sd: 1.4,
            rho_sd: 0.04,
            tau2_mean: 0.1,
            varsigma_var: 0.5,
            ..Self::default()
        }
    }

    /// Shape and rate of the Gamma prior on ς.
    pub fn varsigma_shape_rate(&self) -> (f64, f64) {
        (
            self.varsigma_mean * self.varsigma_mean / self.varsigma_var,
            self.varsigma_mean / self.varsigma_var,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu_sd", self.mu_sd),
            ("rho_sd", self.rho_sd),
            ("tau2_mean", self.tau2_mean),
            ("varsigma_mean", self.varsigma_mean),
            ("varsigma_var", self.varsigma_var),
            ("inv_lambda_mean", self.inv_lambda_mean),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("hyperprior.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("mu_mean", self.mu_mean), ("rho_mean", self.rho_mean)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("hyperprior.{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// Schedule, step sizes and adaptation targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    /// Initial leapfrog step size for the item-angle HMC.
    pub hmc_step: f64,
    pub leapfrog_steps: usize,
    /// Concentrations (c₁, c₂) of the von Mises momenta.
    pub momentum: [f64; 2],
    /// Initial random-walk SD on log κ.
    pub kappa_step: f64,
    /// Initial random-walk SD on each of (log μ, log τ², log ς).
    pub hyper_step: f64,
    pub hmc_target: f64,
    pub kappa_target: f64,
    pub hyper_target: f64,
    /// Iterations between progress lines; 0 disables them.
    pub progress_every: usize,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            iterations: 5000,
            burnin: 1000,
            thin: 1,
            hmc_step: 0.1,
            leapfrog_steps: 10,
            momentum: [1.0, 1.0],
            kappa_step: 0.5,
            hyper_step: 0.05,
            hmc_target: 0.7,
            kappa_target: 0.4,
            hyper_target: 0.3,
            progress_every: 500,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.burnin > self.iterations {
            return Err(Error::Config(format!(
                "burnin ({}) must not exceed iterations ({})",
                self.burnin, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        let positive = [
            ("hmc_step", self.hmc_step),
            ("momentum[0]", self.momentum[0]),
            ("momentum[1]", self.momentum[1]),
            ("kappa_step", self.kappa_step),
            ("hyper_step", self.hyper_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("sampler.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("hmc_target", self.hmc_target),
            ("kappa_target", self.kappa_target),
            ("hyper_target", self.hyper_target),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("sampler.{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// Number of draws a run with these settings retains.
    pub fn retained_draws(&self) -> usize {
        (self.iterations - self.burnin) / self.thin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Positive,
}

/// Requires `unit`'s ideal point to have the given sign in every period
/// from `from` to `to` (inclusive, by period label order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorConstraint {
    pub unit: String,
    pub from: String,
    pub to: String,
    pub sign: Sign,
}

/// Fixed process hyperparameters for `prior-sim`, given as innovation SDs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSimSettings {
    pub mu: f64,
    pub rho: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Path length; draws are taken at the last period.
    pub periods: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub hyperprior: HyperPrior,
    pub sampler: SamplerSettings,
    pub anchors: Vec<AnchorConstraint>,
    pub prior_sim: Option<PriorSimSettings>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            hyperprior: HyperPrior::default(),
            sampler: SamplerSettings::default(),
            anchors: Vec::new(),
            prior_sim: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyperprior.validate()?;
        self.sampler.validate()?;
        for a in &self.anchors {
            if a.unit.is_empty() || a.from.is_empty() || a.to.is_empty() {
                return Err(Error::Config("anchor needs unit, from and to".into()));
            }
        }
        if let Some(p) = &self.prior_sim {
            if !(p.rho > 0.0 && p.rho < 1.0) || p.tau1 <= 0.0 || p.tau2 <= 0.0 || p.periods == 0 {
                return Err(Error::Config(
                    "prior_sim needs 0 < rho < 1, positive tau1/tau2 and periods >= 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Reads a TOML config, filling unspecified keys with defaults. Unknown keys
/// are logged as warnings.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let (config, warnings) = parse_config_str(&text)?;
    for w in &warnings {
        warn!("{w}");
    }
    Ok(config)
}

/// Parses config text, returning the config and any unknown-key warnings.
pub fn parse_config_str(text: &str) -> Result<(RunConfig, Vec<String>)> {
    let mut root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let mut warnings = Vec::new();
    let mut config = RunConfig::default();

    if let Some(v) = root.remove("seed") {
        config.seed = as_int(&v, "seed")?
            .try_into()
            .map_err(|_| Error::Config("seed must be non-negative".into()))?;
    }

    let mut sensitivity = take_table(&mut root, "sensitivity")?;
    if let Some(v) = sensitivity.remove("preset") {
        config.hyperprior = preset(&v)?;
    }
    warn_rest(&sensitivity, "sensitivity", &mut warnings);

    let mut hp = take_table(&mut root, "hyperprior")?;
    if let Some(v) = hp.remove("preset") {
        config.hyperprior = preset(&v)?;
    }
    {
        let h = &mut config.hyperprior;
        for (key, slot) in [
            ("mu_mean", &mut h.mu_mean),
            ("mu_sd", &mut h.mu_sd),
            ("rho_mean", &mut h.rho_mean),
            ("rho_sd", &mut h.rho_sd),
            ("tau2_mean", &mut h.tau2_mean),
            ("varsigma_mean", &mut h.varsigma_mean),
            ("varsigma_var", &mut h.varsigma_var),
            ("inv_lambda_mean", &mut h.inv_lambda_mean),
        ] {
            if let Some(v) = hp.remove(key) {
                *slot = as_float(&v, key)?;
            }
        }
    }
    warn_rest(&hp, "hyperprior", &mut warnings);

    let mut sm = take_table(&mut root, "sampler")?;
    {
        let s = &mut config.sampler;
        for (key, slot) in [
            ("iterations", &mut s.iterations),
            ("burnin", &mut s.burnin),
            ("thin", &mut s.thin),
            ("leapfrog_steps", &mut s.leapfrog_steps),
            ("progress_every", &mut s.progress_every),
        ] {
            if let Some(v) = sm.remove(key) {
                *slot = as_int(&v, key)?
                    .try_into()
                    .map_err(|_| Error::Config(format!("sampler.{key} must be non-negative")))?;
            }
        }
        for (key, slot) in [
            ("hmc_step", &mut s.hmc_step),
            ("kappa_step", &mut s.kappa_step),
            ("hyper_step", &mut s.hyper_step),
            ("hmc_target", &mut s.hmc_target),
            ("kappa_target", &mut s.kappa_target),
            ("hyper_target", &mut s.hyper_target),
        ] {
            if let Some(v) = sm.remove(key) {
                *slot = as_float(&v, key)?;
            }
        }
        if let Some(v) = sm.remove("momentum") {
            let arr = v
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Config("sampler.momentum must be a two-element array".into()))?;
            s.momentum = [as_float(&arr[0], "momentum")?, as_float(&arr[1], "momentum")?];
        }
    }
    warn_rest(&sm, "sampler", &mut warnings);

    if let Some(v) = root.remove("anchors") {
        let list = v
            .as_array()
            .ok_or_else(|| Error::Config("anchors must be an array of tables".into()))?;
        for entry in list {
            let mut t = entry
                .as_table()
                .cloned()
                .ok_or_else(|| Error::Config("anchors must be an array of tables".into()))?;
            let unit = take_label(&mut t, "unit")?;
            let from = take_label(&mut t, "from")?;
            let to = take_label(&mut t, "to")?;
            let sign = match t.remove("sign").as_ref().and_then(Value::as_str) {
                Some("negative") => Sign::Negative,
                Some("positive") => Sign::Positive,
                _ => return Err(Error::Config("anchor sign must be \"negative\" or \"positive\"".into())),
            };
            warn_rest(&t, "anchors", &mut warnings);
            config.anchors.push(AnchorConstraint { unit, from, to, sign });
        }
    }

    if root.contains_key("prior_sim") {
        let mut ps = take_table(&mut root, "prior_sim")?;
        let mut get = |key: &str| -> Result<f64> {
            ps.remove(key)
                .map(|v| as_float(&v, key))
                .transpose()?
                .ok_or_else(|| Error::Config(format!("prior_sim.{key} is required")))
        };
        let mu = get("mu")?;
        let rho = get("rho")?;
        let tau1 = get("tau1")?;
        let tau2 = get("tau2")?;
        let periods = match ps.remove("periods") {
            Some(v) => as_int(&v, "periods")?
                .try_into()
                .map_err(|_| Error::Config("prior_sim.periods must be positive".into()))?,
            None => 1,
        };
        warn_rest(&ps, "prior_sim", &mut warnings);
        config.prior_sim = Some(PriorSimSettings {
            mu,
            rho,
            tau1,
            tau2,
            periods,
        });
    }

    warn_rest(&root, "top level", &mut warnings);
    config.validate()?;
    Ok((config, warnings))
}

fn preset(v: &Value) -> Result<HyperPrior> {
    match v.as_str() {
        Some("default") => Ok(HyperPrior::default()),
        Some("alternative") => Ok(HyperPrior::alternative()),
        _ => Err(Error::Config(format!("unknown hyperprior preset {v}"))),
    }
}

fn take_table(root: &mut Table, key: &str) -> Result<Table> {
    match root.remove(key) {
        None => Ok(Table::new()),
        Some(Value::Table(t)) => Ok(t),
        Some(_) => Err(Error::Config(format!("{key} must be a table"))),
    }
}

fn take_label(t: &mut Table, key: &str) -> Result<String> {
    match t.remove(key) {
        Some(Value::String(s)) => Ok(s),
        Some(Value::Integer(i)) => Ok(i.to_string()),
        _ => Err(Error::Config(format!("anchor {key} must be a string or integer"))),
    }
}

fn as_float(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("{key} must be a number"))),
    }
}

fn as_int(v: &Value, key: &str) -> Result<i64> {
    v.as_integer()
        .ok_or_else(|| Error::Config(format!("{key} must be an integer")))
}

fn warn_rest(t: &Table, section: &str, warnings: &mut Vec<String>) {
    for key in t.keys() {
        warnings.push(format!("unknown config key {key:?} in {section}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let (c, w) = parse_config_str("[hyperprior]\n").unwrap();
        assert!(w.is_empty());
        assert_eq!(c.hyperprior.mu_mean, 3.073);
        assert_eq!(c.hyperprior.mu_sd, 1.588);
        assert_eq!(c.hyperprior.tau2_mean, 2.473);
        assert_eq!(c.hyperprior.rho_mean, 0.9);
        assert_eq!(c.hyperprior.rho_sd, 0.03);
        assert_eq!(c.hyperprior.inv_lambda_mean, 25.0);
        assert_eq!(c.sampler, SamplerSettings::default());
    }

    #[test]
    fn alternative_preset() {
        let (c, _) = parse_config_str("[sensitivity]\npreset = \"alternative\"\n").unwrap();
        assert_eq!(c.hyperprior.rho_sd, 0.04);
        assert_eq!(c.hyperprior.mu_mean, 0.0);
        assert_eq!(c.hyperprior.mu_sd, 1.4);
        assert_eq!(c.hyperprior.tau2_mean, 0.1);
        assert_eq!(c.hyperprior.varsigma_var, 0.5);
    }

    #[test]
    fn burnin_beyond_iterations_is_rejected() {
        let err = parse_config_str("[sampler]\niterations = 100\nburnin = 200\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn non_positive_scale_is_rejected() {
        assert!(parse_config_str("[hyperprior]\nmu_sd = 0\n").is_err());
        assert!(parse_config_str("[hyperprior]\ntau2_mean = -1.0\n").is_err());
    }

    #[test]
    fn unknown_keys_warn_and_anchors_parse() {
        let text = r#"
seed = 42
colour = "blue"
[sampler]
iterations = 10
burnin = 5
speed = 3
[[anchors]]
unit = "Douglas"
from = 1939
to = "1975"
sign = "negative"
"#;
        let (c, w) = parse_config_str(text).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(w.len(), 2);
        assert_eq!(
            c.anchors,
            vec![AnchorConstraint {
                unit: "Douglas".into(),
                from: "1939".into(),
                to: "1975".into(),
                sign: Sign::Negative
            }]
        );
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }
}
