//! Campaign configuration file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tiup::checker::{Budget, Method};
use tiup::simulator::{inject, Anomaly, CATALOG};
use tiup::synthesizer::DEFAULT_MAX_INSTANCES;

/// Everything that determines a campaign's report. Paths are resolved
/// relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Seed corpus; the built-in corpus when absent.
    pub seeds: Option<PathBuf>,
    /// Template corpus; the built-in corpus when absent.
    pub templates: Option<PathBuf>,
    /// Seeds must hold at this width and the next one.
    pub admission_width: u32,
    pub max_instances: u64,
    pub budget: Budget,
    /// Anomaly specs such as `a18` or `a10(delta_bytes=-8)`.
    pub anomalies: Vec<String>,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            seeds: None,
            templates: None,
            admission_width: 4,
            max_instances: DEFAULT_MAX_INSTANCES as u64,
            budget: Budget::default(),
            anomalies: std::iter::once("golden")
                .chain(CATALOG)
                .map(String::from)
                .collect(),
            methods: vec![Method::Tiup, Method::Sqed],
            out_dir: PathBuf::from("campaign-out"),
            jobs: 0,
        }
    }
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<CampaignConfig> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: CampaignConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.seeds, &mut cfg.templates].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn anomalies(&self) -> Result<Vec<Anomaly>> {
        self.anomalies.iter().map(|s| parse_anomaly(s)).collect()
    }
}

/// Parses `id` or `id(name=value,...)`.
pub fn parse_anomaly(spec: &str) -> Result<Anomaly> {
    let spec = spec.trim();
    let (id, params) = match spec.split_once('(') {
        None => (spec, Vec::new()),
        Some((id, rest)) => {
            let Some(body) = rest.strip_suffix(')') else {
                bail!("anomaly `{spec}`: missing `)`");
            };
            let mut params = Vec::new();
            for kv in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let Some((k, v)) = kv.split_once('=') else {
                    bail!("anomaly `{spec}`: expected name=value, got `{kv}`");
                };
                params.push((k.trim().to_string(), parse_int(v.trim())?));
            }
            (id.trim(), params)
        }
    };
    Ok(inject(id, &params)?)
}

/// Decimal or `0x` hex, optionally negative.
pub fn parse_int(text: &str) -> Result<i64> {
    let (neg, digits) = match text.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, text),
    };
    let v = match digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        Some(hex) => i64::from_str_radix(hex, 16),
        None => digits.parse::<i64>(),
    }
    .with_context(|| format!("`{text}` is not an integer"))?;
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anomaly_specs() {
        assert_eq!(parse_anomaly("a18").unwrap(), Anomaly::A18);
        assert_eq!(
            parse_anomaly("a10(delta_bytes=-8)").unwrap(),
            Anomaly::A10 { delta_bytes: -8 }
        );
        assert_eq!(
            parse_anomaly("a03(from=0x5, to=6)").unwrap(),
            Anomaly::A03 { from: 5, to: 6 }
        );
        assert!(parse_anomaly("a10(delta_bytes=-8").is_err());
        assert!(parse_anomaly("a99").is_err());
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let cfg = CampaignConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<CampaignConfig>(&text).unwrap(), cfg);
        let partial: CampaignConfig = toml::from_str("methods = [\"tiup\"]\n[budget]\nsamples = 5\n").unwrap();
        assert_eq!(partial.methods, vec![Method::Tiup]);
        assert_eq!(partial.budget.samples, 5);
        assert_eq!(partial.budget.grid_min, -8);
        assert!(toml::from_str::<CampaignConfig>("sample = 5").is_err());
    }
}
