//! Run configuration: TOML file plus flag overrides, resolved into a fully
//! serializable record whose hash is stamped on every output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lcmcr::gibbs::{ChainConfig, PriorConfig, DEFAULT_K_STAR};
use lcmcr::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Plain per-stratum chains; requires fully labeled records.
    Lcmcr,
    /// Joint chains with missing-label imputation.
    LcmcrMiss,
    /// Log-linear model search with profile intervals.
    Loglinear,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Lcmcr => "lcmcr",
            Estimator::LcmcrMiss => "lcmcr-miss",
            Estimator::Loglinear => "loglinear",
        }
    }
}

/// Raw `[prior]` section.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PriorSection {
    pub preset: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub k_star: Option<usize>,
    /// Default Beta prior on list-inclusion probabilities, `[p, q]`.
    pub lambda: Option<[f64; 2]>,
    /// Per-region overrides of the lambda prior.
    #[serde(default)]
    pub lambda_overrides: BTreeMap<String, [f64; 2]>,
    pub rho_weight: Option<f64>,
}

/// Raw `[chain]` section.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ChainSection {
    pub preset: Option<String>,
    pub iterations: Option<u64>,
    pub burn_in: Option<u64>,
    pub thin: Option<u64>,
}

/// Raw config file contents; every field may be overridden by a flag.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub scheme: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub estimator: Option<Estimator>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub min_list_count: Option<u64>,
    pub missing_as_label: Option<String>,
    pub level: Option<f64>,
    pub prior: PriorSection,
    pub chain: ChainSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))
    }
}

/// Resolved lambda-prior scheme: a default Beta plus per-region overrides.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PriorScheme {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub k_star: usize,
    pub lambda_default: [f64; 2],
    pub lambda_overrides: BTreeMap<String, [f64; 2]>,
    pub rho_weight: f64,
}

impl PriorScheme {
    /// Beta(p, q) used for every label in the given region.
    pub fn lambda_for(&self, region: &str) -> [f64; 2] {
        self.lambda_overrides.get(region).copied().unwrap_or(self.lambda_default)
    }

    pub fn prior_for_region(&self, region: &str, n_labels: usize) -> PriorConfig {
        let [p, q] = self.lambda_for(region);
        PriorConfig {
            a: self.a,
            b: self.b,
            lambda_beta: vec![(p, q); n_labels],
            rho_weights: vec![self.rho_weight; n_labels],
            k_star: self.k_star,
        }
    }
}

/// The named schemes: "diffuse" is uniform with weakly informative overrides
/// for the regions whose sparse overlap structure destabilizes flat priors;
/// "conservative" prefers higher listing probabilities everywhere.
fn preset_prior(name: &str) -> Result<(f64, [f64; 2], BTreeMap<String, [f64; 2]>)> {
    match name {
        "diffuse" => {
            let overrides: BTreeMap<String, [f64; 2]> = [
                ("NOR_ORIENTE_HUANUCO".to_string(), [1.1, 1.0]),
                ("NOR_ORIENTE_SAN_MARTIN".to_string(), [1.1, 1.0]),
                ("SELVA".to_string(), [3.0, 1.0]),
            ]
            .into_iter()
            .collect();
            Ok((0.25, [1.0, 1.0], overrides))
        }
        "conservative" => {
            let overrides: BTreeMap<String, [f64; 2]> =
                [("SELVA".to_string(), [3.0, 1.0])].into_iter().collect();
            Ok((0.25, [2.0, 1.0], overrides))
        }
        other => Err(Error::Validation(format!(
            "unknown prior preset {other:?}; expected \"diffuse\" or \"conservative\""
        ))),
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct ChainSpec {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
}

impl ChainSpec {
    pub fn chain_config(&self, seed: u64, stream_id: u64) -> ChainConfig {
        ChainConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed,
            stream_id,
        }
    }
}

fn preset_chain(name: &str) -> Result<ChainSpec> {
    match name {
        "desk" => Ok(ChainSpec { iterations: 200_000, burn_in: 10_000, thin: 20 }),
        "paper" => Ok(ChainSpec { iterations: 100_000_000, burn_in: 500_000, thin: 10_000 }),
        other => Err(Error::Validation(format!(
            "unknown chain preset {other:?}; expected \"desk\" or \"paper\""
        ))),
    }
}

/// Fully resolved run configuration. Serialized (canonical field order) and
/// hashed; the hash is stamped on every output file.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub scheme: Option<PathBuf>,
    pub output: PathBuf,
    pub estimator: Estimator,
    pub seed: u64,
    pub workers: usize,
    pub min_list_count: u64,
    pub missing_as_label: Option<String>,
    pub level: f64,
    pub prior: PriorScheme,
    pub chain: ChainSpec,
}

/// Flag-level overrides collected by the CLI.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub scheme: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub estimator: Option<Estimator>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub min_list_count: Option<u64>,
    pub missing_as_label: Option<String>,
    pub level: Option<f64>,
    pub chain_preset: Option<String>,
    pub iterations: Option<u64>,
    pub burn_in: Option<u64>,
    pub thin: Option<u64>,
    pub prior_preset: Option<String>,
    pub k_star: Option<usize>,
}

pub fn resolve(file: FileConfig, flags: Overrides) -> Result<RunConfig> {
    let prior_preset_name = flags.prior_preset.or(file.prior.preset.clone());
    let (mut a, mut lambda_default, mut overrides) = match &prior_preset_name {
        Some(name) => preset_prior(name)?,
        None => (0.25, [1.0, 1.0], BTreeMap::new()),
    };
    let mut b = a;
    if let Some(v) = file.prior.a {
        a = v;
    }
    if let Some(v) = file.prior.b {
        b = v;
    }
    if let Some(v) = file.prior.lambda {
        lambda_default = v;
    }
    for (region, beta) in &file.prior.lambda_overrides {
        overrides.insert(region.clone(), *beta);
    }
    let prior = PriorScheme {
        name: prior_preset_name.unwrap_or_else(|| "custom".to_string()),
        a,
        b,
        k_star: flags.k_star.or(file.prior.k_star).unwrap_or(DEFAULT_K_STAR),
        lambda_default,
        lambda_overrides: overrides,
        rho_weight: file.prior.rho_weight.unwrap_or(1.0),
    };

    let chain_preset_name = flags.chain_preset.or(file.chain.preset.clone());
    let mut chain = match &chain_preset_name {
        Some(name) => preset_chain(name)?,
        None => preset_chain("desk").expect("desk preset exists"),
    };
    if let Some(v) = flags.iterations.or(file.chain.iterations) {
        chain.iterations = v;
    }
    if let Some(v) = flags.burn_in.or(file.chain.burn_in) {
        chain.burn_in = v;
    }
    if let Some(v) = flags.thin.or(file.chain.thin) {
        chain.thin = v;
    }

    // The environment may override the output directory, nothing else.
    let env_output = std::env::var_os("LCMCR_OUTPUT_DIR").map(PathBuf::from);
    let output = flags
        .output
        .or(env_output)
        .or(file.output)
        .ok_or_else(|| Error::Validation("no output directory configured".into()))?;

    let config = RunConfig {
        data: flags.data.or(file.data),
        counts: flags.counts.or(file.counts),
        scheme: flags.scheme.or(file.scheme),
        output,
        estimator: flags.estimator.or(file.estimator).unwrap_or(Estimator::LcmcrMiss),
        seed: flags.seed.or(file.seed).unwrap_or(20_200_801),
        workers: flags.workers.or(file.workers).unwrap_or(0),
        min_list_count: flags.min_list_count.or(file.min_list_count).unwrap_or(4),
        missing_as_label: flags.missing_as_label.or(file.missing_as_label),
        level: flags.level.or(file.level).unwrap_or(0.95),
        prior,
        chain,
    };
    if !(0.0..1.0).contains(&config.level) {
        return Err(Error::Validation(format!("level must lie in [0, 1), got {}", config.level)));
    }
    if config.min_list_count < 1 {
        return Err(Error::Validation("min_list_count must be at least 1".into()));
    }
    Ok(config)
}

impl RunConfig {
    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_and_hash_deterministically() {
        let file: FileConfig = toml::from_str(
            r#"
            data = "records.csv"
            scheme = "scheme.toml"
            output = "out"
            estimator = "lcmcr-miss"
            seed = 7
            [prior]
            preset = "conservative"
            [chain]
            preset = "desk"
            "#,
        )
        .unwrap();
        let cfg = resolve(file.clone(), Overrides::default()).unwrap();
        assert_eq!(cfg.prior.lambda_for("SELVA"), [3.0, 1.0]);
        assert_eq!(cfg.prior.lambda_for("ELSEWHERE"), [2.0, 1.0]);
        assert_eq!(cfg.chain.iterations, 200_000);
        let again = resolve(file, Overrides::default()).unwrap();
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn diffuse_preset_carries_region_overrides() {
        let file: FileConfig =
            toml::from_str("output = \"o\"\n[prior]\npreset = \"diffuse\"\n").unwrap();
        let cfg = resolve(file, Overrides::default()).unwrap();
        assert_eq!(cfg.prior.lambda_for("NOR_ORIENTE_HUANUCO"), [1.1, 1.0]);
        assert_eq!(cfg.prior.lambda_for("SELVA"), [3.0, 1.0]);
        assert_eq!(cfg.prior.lambda_for("AYA_CENT"), [1.0, 1.0]);
        assert_eq!((cfg.prior.a, cfg.prior.b), (0.25, 0.25));
    }

    #[test]
    fn flags_override_file_values() {
        let file: FileConfig =
            toml::from_str("output = \"o\"\nseed = 1\n[chain]\npreset = \"paper\"\n").unwrap();
        let flags = Overrides {
            seed: Some(2),
            thin: Some(50),
            estimator: Some(Estimator::Loglinear),
            ..Overrides::default()
        };
        let cfg = resolve(file, flags).unwrap();
        assert_eq!(cfg.seed, 2);
        assert_eq!(cfg.chain.iterations, 100_000_000);
        assert_eq!(cfg.chain.thin, 50);
        assert_eq!(cfg.estimator, Estimator::Loglinear);
    }

    #[test]
    fn unknown_presets_are_rejected() {
        let file: FileConfig =
            toml::from_str("output = \"o\"\n[prior]\npreset = \"nope\"\n").unwrap();
        assert!(resolve(file, Overrides::default()).is_err());
    }
}
