//! Experiment configuration: a TOML file with `[problem]`, `[distribution]`,
//! `[algorithm]` and `[run]` tables, plus `--key=value` overrides.

use std::path::Path;

use evolvolin_core::distributions::{make_incoherent, make_smooth, BaseSpec, Structure};
use evolvolin_core::framework::{
    theory_params_bn, theory_params_opt, Algorithm, EvolutionSettings, TheoryParams,
};
use evolvolin_core::mutators::Caps;
use evolvolin_core::rng::{stream, Purpose};
use evolvolin_core::{DistributionHandle, ProblemParams, SparseVector, TargetFunction};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable that replaces `run.master_seed`.
pub const SEED_ENV: &str = "EVOLVOLIN_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown override key `{0}`")]
    UnknownKey(String),
    #[error("ambiguous override key `{0}`; qualify it as section.key")]
    AmbiguousKey(String),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionFamily {
    Smooth,
    Incoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    PointMass,
    UniformBox,
    Rademacher,
    LowRank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureKind {
    Equicorrelated,
    Banded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    Bn,
    Opt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamsMode {
    Practical,
    Theory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    pub k: usize,
    pub l: f64,
    pub u: f64,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSection {
    #[serde(default = "default_family")]
    pub kind: DistributionFamily,
    #[serde(default = "default_base")]
    pub base: BaseKind,
    /// Per-coordinate variance of the base distribution.
    #[serde(default)]
    pub base_variance: f64,
    #[serde(default = "default_rank")]
    pub base_rank: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_structure")]
    pub structure: StructureKind,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_variance")]
    pub variance: f64,
}

fn default_family() -> DistributionFamily {
    DistributionFamily::Smooth
}
fn default_base() -> BaseKind {
    BaseKind::PointMass
}
fn default_rank() -> usize {
    3
}
fn default_structure() -> StructureKind {
    StructureKind::Equicorrelated
}
fn default_variance() -> f64 {
    1.0
}

impl Default for DistributionSection {
    fn default() -> Self {
        Self {
            kind: default_family(),
            base: default_base(),
            base_variance: 0.0,
            base_rank: default_rank(),
            base_seed: 0,
            structure: default_structure(),
            rho: 0.0,
            variance: default_variance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub name: AlgorithmName,
    #[serde(default = "default_mode")]
    pub params_mode: ParamsMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Neighborhood size per coordinate; `m = ceil(m_per_dimension * n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_per_dimension: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_generations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coef_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

fn default_mode() -> ParamsMode {
    ParamsMode::Practical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// `random`, `zero`, or explicit 1-based pairs such as `"1:0.5, 4:-1"`.
    #[serde(default = "default_target")]
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_list: Vec<usize>,
}

fn default_trials() -> usize {
    1
}
fn default_target() -> String {
    "random".into()
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            master_seed: 0,
            target: default_target(),
            n_list: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub distribution: DistributionSection,
    pub algorithm: AlgorithmSection,
    #[serde(default)]
    pub run: RunSection,
}

const SECTIONS: [(&str, &[&str]); 4] = [
    ("problem", &["n", "k", "l", "u", "epsilon", "delta", "mu"]),
    (
        "distribution",
        &[
            "kind",
            "base",
            "base_variance",
            "base_rank",
            "base_seed",
            "structure",
            "rho",
            "variance",
        ],
    ),
    (
        "algorithm",
        &[
            "name",
            "params_mode",
            "m",
            "m_per_dimension",
            "s",
            "t",
            "max_generations",
            "sparsity_cap",
            "coef_bound",
            "lambda",
        ],
    ),
    ("run", &["trials", "master_seed", "target", "n_list"]),
];

fn resolve_key(key: &str) -> Result<(&'static str, String), ConfigError> {
    let key = key.replace('-', "_");
    if let Some((section, field)) = key.split_once('.') {
        return SECTIONS
            .iter()
            .find(|(s, fields)| *s == section && fields.contains(&field))
            .map(|(s, _)| (*s, field.to_string()))
            .ok_or(ConfigError::UnknownKey(key.clone()));
    }
    let hits: Vec<&str> = SECTIONS
        .iter()
        .filter(|(_, fields)| fields.contains(&key.as_str()))
        .map(|(s, _)| *s)
        .collect();
    match hits.as_slice() {
        [one] => Ok((one, key)),
        [] => Err(ConfigError::UnknownKey(key)),
        _ => Err(ConfigError::AmbiguousKey(key)),
    }
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `key=value` overrides (key optionally `section.key`) to a raw table.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), ConfigError> {
    for item in overrides {
        let item = item.trim_start_matches("--");
        let Some((key, raw)) = item.split_once('=') else {
            return Err(ConfigError::Parse(format!(
                "override `{item}` is not key=value"
            )));
        };
        let (section, field) = resolve_key(key)?;
        let entry = table
            .entry(section)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(sub) = entry else {
            return Err(ConfigError::Parse(format!("`{section}` is not a table")));
        };
        let mut value = parse_value(raw.trim());
        if field == "n_list" {
            if let toml::Value::String(s) = &value {
                let items: Result<Vec<toml::Value>, _> = s
                    .split(',')
                    .map(|x| x.trim().parse::<i64>().map(toml::Value::Integer))
                    .collect();
                value = toml::Value::Array(
                    items.map_err(|e| ConfigError::Parse(format!("n_list: {e}")))?,
                );
            }
        }
        sub.insert(field, value);
    }
    Ok(())
}

impl RunConfig {
    /// Parses `text`, applies `overrides`, then the seed from [`SEED_ENV`] if set.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        Self::from_toml_str_with_seed(text, overrides, std::env::var(SEED_ENV).ok().as_deref())
    }

    /// As [`RunConfig::from_toml_str`] with an explicit seed override.
    pub fn from_toml_str_with_seed(
        text: &str,
        overrides: &[String],
        seed_override: Option<&str>,
    ) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        apply_overrides(&mut table, overrides)?;
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        if let Some(seed) = seed_override {
            cfg.run.master_seed = seed
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("{SEED_ENV}={seed} is not a u64")))?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let a = &self.algorithm;
        if self.run.trials == 0 {
            return invalid("run.trials must be at least 1");
        }
        if a.m.is_some() && a.m_per_dimension.is_some() {
            return invalid("set only one of algorithm.m and algorithm.m_per_dimension");
        }
        if a.params_mode == ParamsMode::Practical {
            let mut missing = Vec::new();
            if a.m.is_none() && a.m_per_dimension.is_none() {
                missing.push("m");
            }
            if a.s.is_none() {
                missing.push("s");
            }
            if a.t.is_none() {
                missing.push("t");
            }
            if a.max_generations.is_none() {
                missing.push("max_generations");
            }
            if a.name == AlgorithmName::Opt && a.lambda.is_none() {
                missing.push("lambda");
            }
            if !missing.is_empty() {
                return invalid(format!(
                    "practical mode needs algorithm.{}",
                    missing.join(", algorithm.")
                ));
            }
        }
        if a.name == AlgorithmName::Opt && self.distribution.kind != DistributionFamily::Incoherent
        {
            return invalid("optimization-based selection needs an incoherent distribution");
        }
        if a.name == AlgorithmName::Opt && self.problem.mu.is_none() {
            return invalid("optimization-based selection needs problem.mu");
        }
        if self.run.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("run.n_list must be strictly increasing");
        }
        Ok(())
    }

    /// The effective configuration as TOML, each line prefixed with `# `.
    pub fn echo(&self) -> String {
        let body = toml::to_string(self).unwrap_or_default();
        let mut out = String::new();
        for line in body.lines().filter(|l| !l.trim().is_empty()) {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    /// Builds the distribution, problem constants and run settings at dimension `n`.
    pub fn resolve(&self, n: usize) -> Result<Resolved, ConfigError> {
        let p = &self.problem;
        let d = &self.distribution;
        let err = |e: evolvolin_core::Error| ConfigError::Invalid(e.to_string());
        let handle = match d.kind {
            DistributionFamily::Smooth => {
                let base = match d.base {
                    BaseKind::PointMass => BaseSpec::PointMass,
                    BaseKind::UniformBox => BaseSpec::UniformBox {
                        variance: d.base_variance,
                    },
                    BaseKind::Rademacher => BaseSpec::Rademacher {
                        scale: d.base_variance.max(0.0).sqrt(),
                    },
                    BaseKind::LowRank => {
                        BaseSpec::low_rank(n, d.base_rank, d.base_variance, d.base_seed)
                            .map_err(err)?
                    }
                };
                make_smooth(base, p.delta, n).map_err(err)?
            }
            DistributionFamily::Incoherent => {
                let structure = match d.structure {
                    StructureKind::Equicorrelated => Structure::Equicorrelated { rho: d.rho },
                    StructureKind::Banded => Structure::Banded { rho: d.rho },
                };
                let Some(mu) = p.mu else {
                    return invalid("an incoherent distribution needs problem.mu");
                };
                make_incoherent(mu, p.delta, n, structure, d.variance).map_err(err)?
            }
        };
        let params = ProblemParams {
            n,
            k: p.k,
            l: p.l,
            u: p.u,
            epsilon: p.epsilon,
            delta: p.delta,
            g_bound: handle.g_bound(),
            mu: p.mu,
        };
        params.validate().map_err(err)?;
        let a = &self.algorithm;
        let algorithm = match a.name {
            AlgorithmName::Bn => Algorithm::Bn,
            AlgorithmName::Opt => Algorithm::Opt,
        };
        let theory = match algorithm {
            Algorithm::Bn => theory_params_bn(&params),
            Algorithm::Opt => theory_params_opt(&params),
        };
        let settings = match a.params_mode {
            ParamsMode::Theory => {
                let th = theory.as_ref().map_err(|e| err(e.clone()))?;
                if !th.is_feasible() {
                    return invalid(format!(
                        "theory parameters need g*s = {:.3e} sample evaluations; \
                         use params_mode = \"practical\"",
                        th.sample_evaluations()
                    ));
                }
                EvolutionSettings {
                    algorithm,
                    m: th.m as usize,
                    s: th.s as usize,
                    t: th.t,
                    max_generations: th.g as usize,
                    caps: Caps {
                        sparsity: th.sparsity_cap(),
                        bound: th.cap_b,
                    },
                    lambda: th.lambda,
                    epsilon: p.epsilon,
                }
            }
            ParamsMode::Practical => {
                let m = match (a.m, a.m_per_dimension) {
                    (Some(m), _) => m,
                    (None, Some(per)) => (per * n as f64).ceil() as usize,
                    (None, None) => unreachable!("checked on load"),
                };
                let sparsity = match (a.sparsity_cap, &theory) {
                    (Some(c), _) => c,
                    (None, Ok(th)) => th.sparsity_cap().min(n),
                    (None, Err(e)) => {
                        return invalid(format!("algorithm.sparsity_cap not set and {e}"))
                    }
                };
                let bound = match (a.coef_bound, &theory) {
                    (Some(b), _) => b,
                    (None, Ok(th)) => th.cap_b,
                    (None, Err(e)) => {
                        return invalid(format!("algorithm.coef_bound not set and {e}"))
                    }
                };
                EvolutionSettings {
                    algorithm,
                    m,
                    s: a.s.unwrap_or_default(),
                    t: a.t.unwrap_or_default(),
                    max_generations: a.max_generations.unwrap_or_default(),
                    caps: Caps { sparsity, bound },
                    lambda: a.lambda,
                    epsilon: p.epsilon,
                }
            }
        };
        if settings.m == 0 || settings.s == 0 || settings.t.is_nan() || settings.t <= 0.0 {
            return invalid("m and s must be positive and t > 0");
        }
        Ok(Resolved {
            handle,
            params,
            settings,
            theory: theory.ok(),
        })
    }

    /// The target for `trial` at dimension `n`.
    pub fn target(
        &self,
        params: &ProblemParams,
        trial: u64,
    ) -> Result<TargetFunction, ConfigError> {
        let err = |e: evolvolin_core::Error| ConfigError::Invalid(format!("run.target: {e}"));
        match self.run.target.trim() {
            "random" => {
                let mut rng = stream(self.run.master_seed, trial, Purpose::Target);
                TargetFunction::random(params.clone(), &mut rng).map_err(err)
            }
            "zero" => {
                TargetFunction::new(SparseVector::zeros(params.n), params.clone()).map_err(err)
            }
            spec => {
                let v = parse_pairs(spec, params.n)?;
                TargetFunction::new(v, params.clone()).map_err(err)
            }
        }
    }
}

/// Parses `"i:x, j:y"` with 1-based indices.
pub fn parse_pairs(spec: &str, n: usize) -> Result<SparseVector, ConfigError> {
    let mut pairs = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parsed = item.split_once(':').and_then(|(i, x)| {
            Some((
                i.trim().parse::<usize>().ok()?,
                x.trim().parse::<f64>().ok()?,
            ))
        });
        match parsed {
            Some((i, x)) if i >= 1 && i <= n && x.is_finite() => pairs.push((i - 1, x)),
            _ => {
                return invalid(format!(
                    "bad target entry `{item}` (expected index:value, 1..={n})"
                ))
            }
        }
    }
    SparseVector::from_pairs(n, pairs).map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Runtime objects derived from a [`RunConfig`] at one dimension.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub handle: DistributionHandle,
    pub params: ProblemParams,
    pub settings: EvolutionSettings,
    pub theory: Option<TheoryParams>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[problem]
n = 20
k = 2
l = 0.5
u = 1.0
epsilon = 0.05
delta = 0.5

[algorithm]
name = "bn"
m = 100
s = 500
t = 1e-4
max_generations = 50
sparsity_cap = 10
coef_bound = 20.0
"#;

    #[test]
    fn parses_and_applies_overrides() {
        let cfg = RunConfig::from_toml_str(
            BASIC,
            &[
                "--n=30".into(),
                "--run.trials=4".into(),
                "target=1:0.5,3:-1".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.problem.n, 30);
        assert_eq!(cfg.run.trials, 4);
        let r = cfg.resolve(30).unwrap();
        assert_eq!(r.settings.m, 100);
        let f = cfg.target(&r.params, 0).unwrap();
        assert_eq!(f.vector().get(2), -1.0);
    }

    #[test]
    fn rejects_unknown_keys_and_missing_fields() {
        assert!(matches!(
            RunConfig::from_toml_str(BASIC, &["--bogus=1".into()]),
            Err(ConfigError::UnknownKey(_))
        ));
        let no_s = BASIC.replace("s = 500\n", "");
        assert!(matches!(
            RunConfig::from_toml_str(&no_s, &[]),
            Err(ConfigError::Invalid(_))
        ));
        assert!(RunConfig::from_toml_str("[problem]\nn = \"x\"", &[]).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::from_toml_str(BASIC, &[]).unwrap();
        let echo = cfg.echo();
        assert!(echo.lines().all(|l| l.starts_with("# ")));
        let stripped: String = echo.lines().map(|l| format!("{}\n", &l[2..])).collect();
        assert_eq!(RunConfig::from_toml_str(&stripped, &[]).unwrap(), cfg);
    }

    #[test]
    fn seed_override_wins() {
        let cfg = RunConfig::from_toml_str_with_seed(BASIC, &["--master_seed=3".into()], Some("8"))
            .unwrap();
        assert_eq!(cfg.run.master_seed, 8);
        assert!(cfg.echo().contains("# master_seed = 8\n"));
        assert!(RunConfig::from_toml_str_with_seed(BASIC, &[], Some("x")).is_err());
    }

    #[test]
    fn per_dimension_neighborhood() {
        let text = BASIC.replace("m = 100", "m_per_dimension = 2.5");
        let cfg = RunConfig::from_toml_str(&text, &[]).unwrap();
        assert_eq!(cfg.resolve(40).unwrap().settings.m, 100);
    }

    #[test]
    fn theory_mode_refuses_infeasible_runs() {
        let text = BASIC.replace("name = \"bn\"", "name = \"bn\"\nparams_mode = \"theory\"");
        let cfg = RunConfig::from_toml_str(&text, &[]).unwrap();
        assert!(matches!(cfg.resolve(20), Err(ConfigError::Invalid(_))));
    }
}
