//! Versioned experiment configuration.
//!
//! A config file is TOML with a `schema` version and one `[[experiment]]`
//! table per run:
//!
//! ```toml
//! schema = 1
//!
//! [[experiment]]
//! name = "apriori-power"
//! suite = "apriori"
//! domain = { kind = "unit_box" }
//! degrees = { dim = 2, degree = 1, multiplicity = 1 }
//! coefficients = { kind = "smooth", amplitude = 0.2, lipschitz = 5.0 }
//! lambda = 0.0
//! weights = [{ kind = "power", alpha = 0.5, center = [0.5, 0.0] }]
//! p = 2.0
//! ladder = [0.0625, 0.03125, 0.015625]
//! seed = 7
//! ```
//!
//! Missing fields take the suite defaults from [`ExperimentConfig::builtin`].

use std::fmt;
use std::path::{Path, PathBuf};

use hodge_core::weights::WeightSpec;
use hodge_core::Signature;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::VerifyError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Weights,
    Solver,
    Apriori,
    Decay,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Identities, Suite::Weights, Suite::Solver, Suite::Apriori, Suite::Decay];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Weights => "weights",
            Suite::Solver => "solver",
            Suite::Apriori => "apriori",
            Suite::Decay => "decay",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    UnitBox,
    Boxed { lower: Vec<f64>, upper: Vec<f64> },
    /// Flat face on `x_n = 0`, centre at the origin.
    HalfBall { radius: f64 },
    Ball { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degrees {
    pub dim: usize,
    pub degree: usize,
    pub multiplicity: usize,
}

impl Degrees {
    pub fn signature(self) -> Signature {
        Signature::new(self.dim, self.degree, self.multiplicity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientSpec {
    /// `A = a·I`, `B = b·I`.
    Constant { a: f64, b: f64 },
    /// One trigonometric mode on top of `1.5·I`; `lipschitz` bounds the measured constant.
    Smooth { amplitude: f64, lipschitz: f64 },
}

/// Thresholds of every PASS/FAIL check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub algebra: f64,
    pub legendre_hadamard: f64,
    pub calculus: f64,
    pub ibp_order: f64,
    pub reflection_slack: f64,
    pub oscillation: f64,
    pub ordering: f64,
    pub refinement_spread: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub spectrum: f64,
    pub kernel_fields: f64,
    pub decomposition: f64,
    pub orthogonality: f64,
    pub maxwell_codiff: f64,
    pub chain_floor: f64,
    pub trace: f64,
    pub estimate_factor: f64,
    pub decay_slope: f64,
    pub min_octaves: usize,
    pub solve: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebra: 1e-12,
            legendre_hadamard: 1e-4,
            calculus: 1e-10,
            ibp_order: 1.8,
            reflection_slack: 0.05,
            oscillation: 4.0,
            ordering: 1e-12,
            refinement_spread: 0.2,
            order_min: 1.7,
            order_max: 2.3,
            spectrum: 1e-8,
            kernel_fields: 1e-6,
            decomposition: 1e-6,
            orthogonality: 1e-8,
            maxwell_codiff: 1e-5,
            chain_floor: 1e-9,
            trace: 1e-10,
            estimate_factor: 2.0,
            decay_slope: 0.8,
            min_octaves: 3,
            solve: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub suite: Suite,
    pub domain: DomainSpec,
    pub degrees: Degrees,
    pub coefficients: CoefficientSpec,
    pub lambda: f64,
    pub weights: Vec<WeightSpec>,
    pub p: f64,
    /// Mesh widths, strictly decreasing.
    pub ladder: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Random cases per identity (identities suite only).
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub seed: u64,
}

fn default_samples() -> usize {
    10_000
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn power_family(center: &[f64]) -> Vec<WeightSpec> {
    [-0.5, 0.0, 0.5, 1.0].iter().map(|&alpha| WeightSpec::Power { alpha, center: center.to_vec() }).collect()
}

impl ExperimentConfig {
    /// Default experiment of each suite.
    pub fn builtin(suite: Suite) -> Self {
        let base = Self {
            name: suite.name().to_string(),
            suite,
            domain: DomainSpec::UnitBox,
            degrees: Degrees { dim: 2, degree: 1, multiplicity: 1 },
            coefficients: CoefficientSpec::Smooth { amplitude: 0.2, lipschitz: 5.0 },
            lambda: 0.0,
            weights: vec![WeightSpec::Constant { value: 1.0 }],
            p: 2.0,
            ladder: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            tolerances: Tolerances::default(),
            samples: default_samples(),
            out: default_out(),
            seed: 0x5eed,
        };
        match suite {
            Suite::Identities => Self { ladder: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], ..base },
            Suite::Weights => Self {
                domain: DomainSpec::Boxed { lower: vec![-1.0, 0.0], upper: vec![1.0, 1.0] },
                weights: {
                    let mut w = vec![WeightSpec::Constant { value: 1.0 }];
                    w.extend([-0.5, 0.5, 1.0, 1.5].iter().map(|&alpha| WeightSpec::Power { alpha, center: vec![0.0, 0.0] }));
                    w
                },
                ladder: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
                ..base
            },
            Suite::Solver => base,
            Suite::Apriori => Self { weights: power_family(&[0.5, 0.0]), ..base },
            Suite::Decay => Self {
                domain: DomainSpec::HalfBall { radius: 1.0 },
                coefficients: CoefficientSpec::Constant { a: 1.0, b: 1.0 },
                ladder: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        let bad = |msg: String| Err(VerifyError::Config(format!("{}: {msg}", self.name)));
        if self.ladder.is_empty() {
            return bad("empty mesh ladder".into());
        }
        if self.ladder.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return bad(format!("mesh widths must be positive: {:?}", self.ladder));
        }
        if self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("mesh ladder must be strictly decreasing: {:?}", self.ladder));
        }
        let Degrees { dim, degree, multiplicity } = self.degrees;
        if dim == 0 || degree > dim || multiplicity == 0 {
            return bad(format!("invalid degrees (n={dim}, k={degree}, N={multiplicity})"));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return bad(format!("exponent p = {} must exceed 1", self.p));
        }
        if !self.lambda.is_finite() {
            return bad("lambda must be finite".into());
        }
        if let CoefficientSpec::Constant { a, b } = self.coefficients {
            if !(a > 0.0 && b > 0.0) {
                return bad("constant coefficients must be positive".into());
            }
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        Ok(())
    }

    /// Hex SHA-256 prefix of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Nodes per axis of the unit box for mesh width `h`.
    pub fn box_nodes(h: f64) -> usize {
        (1.0 / h).round() as usize + 1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<toml::Table>,
}

/// Parses a config file, filling every experiment from its suite default.
pub fn load(path: &Path) -> Result<Vec<ExperimentConfig>, VerifyError> {
    let text = std::fs::read_to_string(path).map_err(|e| VerifyError::Io { path: path.to_path_buf(), source: e })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Vec<ExperimentConfig>, VerifyError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| VerifyError::Config(e.to_string()))?;
    if file.schema != SCHEMA_VERSION {
        return Err(VerifyError::Config(format!("schema {} unsupported, expected {SCHEMA_VERSION}", file.schema)));
    }
    file.experiments
        .into_iter()
        .map(|table| {
            let suite: Suite = table
                .get("suite")
                .cloned()
                .ok_or_else(|| VerifyError::Config("experiment without `suite`".into()))?
                .try_into()
                .map_err(|e: toml::de::Error| VerifyError::Config(e.to_string()))?;
            let defaults = toml::Table::try_from(ExperimentConfig::builtin(suite)).expect("defaults serialize");
            let mut merged = defaults;
            merged.extend(table);
            let cfg: ExperimentConfig =
                merged.try_into().map_err(|e: toml::de::Error| VerifyError::Config(e.to_string()))?;
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for s in Suite::ALL {
            ExperimentConfig::builtin(s).validate().unwrap();
        }
    }

    #[test]
    fn ladder_must_decrease() {
        let mut c = ExperimentConfig::builtin(Suite::Solver);
        c.ladder = vec![0.1, 0.1];
        assert!(c.validate().is_err());
        c.ladder = vec![0.05, 0.1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = ExperimentConfig::builtin(Suite::Apriori);
        let mut b = a.clone();
        b.out = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn partial_tables_merge_with_defaults() {
        let text = r#"
            schema = 1
            [[experiment]]
            suite = "solver"
            name = "coarse"
            ladder = [0.125, 0.0625]
        "#;
        let cfgs = parse(text).unwrap();
        assert_eq!(cfgs.len(), 1);
        assert_eq!(cfgs[0].ladder, vec![0.125, 0.0625]);
        assert_eq!(cfgs[0].degrees, ExperimentConfig::builtin(Suite::Solver).degrees);
        assert!(parse("schema = 2").is_err());
    }
}
