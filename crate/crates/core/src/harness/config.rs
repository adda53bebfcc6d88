use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dissipation::ScanTarget;
use crate::error::{IerkError, Result};
use crate::scalar::Scalar;
use crate::spectral::{SourceTerm, SpectralConfig};
use crate::tableau::{read_tableau_file, registry, ImexTableau, MethodId, ParamMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Verify,
    Certify,
    Scan,
    RateTable,
    Converge,
    Evolve,
}

impl FromStr for Experiment {
    type Err = IerkError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| IerkError::Config(format!("unknown experiment `{s}`")))
    }
}

/// A registry method with parameters, or a tableau file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    #[serde(default)]
    pub id: Option<String>,
    /// Values may be JSON numbers or strings such as `"1/2"`.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub tableau_file: Option<PathBuf>,
}

fn scalar_from_json(key: &str, v: &Value) -> Result<Scalar> {
    match v {
        Value::Number(n) => n.to_string().parse(),
        Value::String(s) => s.parse(),
        _ => Err(IerkError::Config(format!(
            "parameter `{key}` must be a number or string"
        ))),
    }
}

impl MethodSpec {
    pub fn registry(id: MethodId, params: &[(&str, f64)]) -> Self {
        MethodSpec {
            id: Some(id.name().to_string()),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                .collect(),
            tableau_file: None,
        }
    }

    pub fn param_map(&self) -> Result<ParamMap> {
        self.params
            .iter()
            .map(|(k, v)| Ok((k.clone(), scalar_from_json(k, v)?)))
            .collect()
    }

    pub fn method_id(&self) -> Result<Option<MethodId>> {
        self.id.as_deref().map(str::parse).transpose()
    }

    pub fn resolve(&self) -> Result<ImexTableau> {
        match (&self.tableau_file, self.method_id()?) {
            (Some(path), None) => {
                if !self.params.is_empty() {
                    return Err(IerkError::Config(
                        "a tableau file takes no parameters".into(),
                    ));
                }
                read_tableau_file(path)
            }
            (None, Some(id)) => registry(id, &self.param_map()?),
            (Some(_), Some(_)) => Err(IerkError::Config(
                "give either a method id or a tableau file, not both".into(),
            )),
            (None, None) => Err(IerkError::Config("no method given".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialCondition {
    /// `sin x`, the manufactured solution at `t = 0`.
    Sine,
    /// The smoothed-step-plus-bumps coarsening datum.
    Coarsening,
    /// A snapshot file with `x,u` rows.
    Csv(PathBuf),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    /// Defaults to a fine-step run of a designated method of the same order.
    #[serde(default)]
    pub method: Option<MethodSpec>,
    #[serde(default)]
    pub tau: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub symbol: String,
    pub range: [f64; 2],
    pub step: f64,
    #[serde(default)]
    pub target: ScanTarget,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub method: MethodSpec,
    #[serde(default)]
    pub spectral: Option<SpectralConfig>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub tau_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub initial: Option<InitialCondition>,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub z_samples: Option<Vec<f64>>,
    #[serde(default)]
    pub record_stages: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| IerkError::Config(format!("`{key}` expects a number, got `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| parse_f64(key, x)).collect()
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            method: MethodSpec::default(),
            spectral: None,
            tau: None,
            tau_grid: None,
            t_final: None,
            initial: None,
            reference: None,
            tol: None,
            scan: None,
            z_samples: None,
            record_stages: false,
            out: None,
        }
    }

    pub fn with_method(mut self, method: MethodSpec) -> Self {
        self.method = method;
        self
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| IerkError::Config(e.to_string()))
    }

    /// Loads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IerkError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.method.tableau_file.as_mut() {
            rebase(p);
        }
        if let Some(InitialCondition::Csv(p)) = cfg.initial.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.out.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    /// System used when the config gives none: the manufactured-solution
    /// problem for convergence runs, the coarsening problem otherwise.
    pub fn default_spectral(experiment: Experiment) -> SpectralConfig {
        let pi = std::f64::consts::PI;
        match experiment {
            Experiment::Converge => SpectralConfig {
                domain: [0.0, 2.0 * pi],
                m: 256,
                epsilon: 0.2,
                kappa: 4.0,
                source: SourceTerm::Manufactured,
            },
            _ => SpectralConfig {
                domain: [-pi, pi],
                m: 256,
                epsilon: 0.1,
                kappa: 2.0,
                source: SourceTerm::None,
            },
        }
    }

    pub fn spectral_or_default(&self) -> SpectralConfig {
        self.spectral
            .clone()
            .unwrap_or_else(|| Self::default_spectral(self.experiment))
    }

    fn spectral_mut(&mut self) -> &mut SpectralConfig {
        let default = Self::default_spectral(self.experiment);
        self.spectral.get_or_insert(default)
    }

    fn scan_mut(&mut self) -> &mut ScanSpec {
        self.scan.get_or_insert(ScanSpec {
            symbol: String::new(),
            range: [0.0, 1.0],
            step: 1e-3,
            target: ScanTarget::Both,
        })
    }

    /// Applies a `--key value` override. Keys that are not config settings
    /// are taken as method parameters.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim_start_matches('-').replace('_', "-");
        match key.as_str() {
            "method" | "id" => self.method.id = Some(value.to_string()),
            "tableau" | "tableau-file" => self.method.tableau_file = Some(PathBuf::from(value)),
            "tau" => self.tau = Some(parse_f64(&key, value)?),
            "tau-grid" => self.tau_grid = Some(parse_list(&key, value)?),
            "t-final" | "T" => self.t_final = Some(parse_f64(&key, value)?),
            "tol" => self.tol = Some(parse_f64(&key, value)?),
            "z-samples" => self.z_samples = Some(parse_list(&key, value)?),
            "kappa" => self.spectral_mut().kappa = parse_f64(&key, value)?,
            "epsilon" => self.spectral_mut().epsilon = parse_f64(&key, value)?,
            "m" => {
                self.spectral_mut().m = value.parse().map_err(|_| {
                    IerkError::Config(format!("`m` expects an integer, got `{value}`"))
                })?
            }
            "domain" => {
                let d = parse_list(&key, value)?;
                if d.len() != 2 {
                    return Err(IerkError::Config("`domain` expects lo,hi".into()));
                }
                self.spectral_mut().domain = [d[0], d[1]];
            }
            "source" => {
                self.spectral_mut().source = serde_json::from_value(Value::String(value.into()))
                    .map_err(|_| IerkError::Config(format!("unknown source `{value}`")))?
            }
            "initial" => {
                self.initial = Some(match value {
                    "sine" => InitialCondition::Sine,
                    "coarsening" => InitialCondition::Coarsening,
                    path => InitialCondition::Csv(PathBuf::from(path)),
                })
            }
            "reference" => {
                self.reference = match value {
                    "none" | "off" => None,
                    "auto" => Some(ReferenceSpec::default()),
                    id => Some(ReferenceSpec {
                        method: Some(MethodSpec {
                            id: Some(id.to_string()),
                            ..Default::default()
                        }),
                        tau: self.reference.as_ref().and_then(|r| r.tau),
                    }),
                }
            }
            "reference-tau" => {
                self.reference.get_or_insert_with(Default::default).tau =
                    Some(parse_f64(&key, value)?)
            }
            "record-stages" => {
                self.record_stages = value.parse().map_err(|_| {
                    IerkError::Config("`record-stages` expects true or false".into())
                })?
            }
            "symbol" => self.scan_mut().symbol = value.to_string(),
            "range" => {
                let r = parse_list(&key, value)?;
                if r.len() != 2 {
                    return Err(IerkError::Config("`range` expects lo,hi".into()));
                }
                self.scan_mut().range = [r[0], r[1]];
            }
            "step" => self.scan_mut().step = parse_f64(&key, value)?,
            "target" => self.scan_mut().target = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => {
                self.method
                    .params
                    .insert(key.clone(), Value::String(value.to_string()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_full_config() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"experiment": "converge",
                "method": {"id": "IERK2-2", "params": {"a33": 0.6035533905932737}},
                "spectral": {"domain": [0, 6.283185307179586], "m": 256, "epsilon": 0.2,
                             "kappa": 4, "source": "manufactured"},
                "tau_grid": [0.1, 0.05], "t_final": 1.0}"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::Converge);
        let t = cfg.method.resolve().unwrap();
        assert_eq!(t.name, "IERK2-2");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(
            ExperimentConfig::from_json_str(r#"{"experiment": "verify", "bogus": 1}"#).is_err()
        );
        assert!(ExperimentConfig::from_json_str(r#"{"experiment": "fly"}"#).is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = ExperimentConfig::new(Experiment::Certify);
        cfg.apply_override("--method", "IERK2-1").unwrap();
        cfg.apply_override("--c2", "1").unwrap();
        cfg.apply_override("--a33", "0.5").unwrap();
        cfg.apply_override("--kappa", "3").unwrap();
        let t = cfg.method.resolve().unwrap();
        assert_eq!(t.param("a33"), Some(&Scalar::ratio(1, 2)));
        assert!(t.is_exact());
        assert_eq!(cfg.spectral_or_default().kappa, 3.0);
        assert!(cfg.apply_override("--tau", "fast").is_err());
    }

    #[test]
    fn exact_parameters_from_json_numbers() {
        let spec = MethodSpec::registry(MethodId::Ierk3_2, &[("a43", -0.5)]);
        assert_eq!(spec.param_map().unwrap()["a43"], Scalar::ratio(-1, 2));
    }
}
