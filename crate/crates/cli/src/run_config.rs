//! The JSON run configuration shared by all subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use qspec::config::EmitterConfig;
use qspec::qfi::PulseFamily;
use qspec::{EmitterModel, ParameterTag, PulseSpec, Regularization};
use serde::Deserialize;

use crate::CliError;

/// Inline pulse, or a three-column `omega,re,im` table relative to the
/// config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PulseBlock {
    File { csv: PathBuf },
    Inline(PulseSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub emitter: EmitterConfig,
    #[serde(default)]
    pub pulse: Option<PulseBlock>,
    /// Parameter for single-parameter commands.
    #[serde(default)]
    pub parameter: Option<ParameterTag>,
    /// Parameters for `bounds` and `qfi`; all of them when absent.
    #[serde(default)]
    pub parameters: Option<Vec<ParameterTag>>,
    /// Line widths in units of the rate.
    #[serde(default)]
    pub kappas: Option<Vec<f64>>,
    #[serde(default)]
    pub regularizations: Option<Vec<Regularization>>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub regularization: Option<Regularization>,
    /// Pulse bandwidths in units of the rate.
    #[serde(default)]
    pub bandwidths: Option<Vec<f64>>,
    #[serde(default)]
    pub families: Option<Vec<PulseFamily>>,
    /// Carrier offset of the bandwidth-sweep pulses.
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default)]
    pub grid_budget: Option<usize>,
    /// Also propagate the pulse in the time domain (`scatter`).
    #[serde(default)]
    pub time_domain: bool,
}

/// A parsed config with its validated model.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: PathBuf,
    pub config: RunConfig,
    pub model: EmitterModel,
}

impl Loaded {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(path, format!("cannot read: {e}"), "check the --config path"))?;
        Self::from_str(path, &text)
    }

    pub fn from_str(path: &Path, text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::config(
                path,
                format!("malformed config: {e}"),
                "compare against the example configs in the README",
            )
        })?;
        let model = config.emitter.to_model().map_err(|e| {
            CliError::config(
                path,
                e.to_string(),
                "fix the `emitter` block so the named invariant holds",
            )
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            config,
            model,
        })
    }

    pub fn error(&self, problem: impl Into<String>, hint: impl Into<String>) -> CliError {
        CliError::config(&self.path, problem, hint)
    }

    pub fn pulse(&self) -> Result<PulseSpec, CliError> {
        let block = self.config.pulse.as_ref().ok_or_else(|| {
            self.error(
                "this command needs a `pulse` block",
                "add e.g. {\"shape\": \"gaussian\", \"center\": 0, \"bandwidth\": 1}",
            )
        })?;
        let spec = match block {
            PulseBlock::Inline(p) => p.clone(),
            PulseBlock::File { csv } => {
                let path = self.path.parent().unwrap_or(Path::new(".")).join(csv);
                let file = fs::File::open(&path).map_err(|e| {
                    self.error(
                        format!("cannot open pulse table {}: {e}", path.display()),
                        "paths are relative to the config file",
                    )
                })?;
                PulseSpec::from_csv(file)
                    .map_err(|e| self.error(e.to_string(), "the table needs rows `omega,re,im`"))?
            }
        };
        spec.validate()
            .map_err(|e| self.error(e.to_string(), "widths, rates and durations must be positive"))?;
        Ok(spec)
    }

    fn check_parameter(&self, theta: ParameterTag) -> Result<ParameterTag, CliError> {
        theta.validate(self.model.n()).map_err(|e| {
            self.error(
                e.to_string(),
                format!("use Gamma or Detuning(j) with 1 <= j <= {}", self.model.n()),
            )
        })
    }

    /// Override, then `parameter`, then `Gamma`.
    pub fn parameter(&self, flag: Option<ParameterTag>) -> Result<ParameterTag, CliError> {
        self.check_parameter(flag.or(self.config.parameter).unwrap_or(ParameterTag::Gamma))
    }

    /// Override, then `parameters`, then every parameter of the model.
    pub fn parameters(&self, flag: Option<ParameterTag>) -> Result<Vec<ParameterTag>, CliError> {
        let list = match (flag, &self.config.parameters) {
            (Some(t), _) => vec![t],
            (None, Some(l)) => l.clone(),
            (None, None) => ParameterTag::all(self.model.n()),
        };
        list.into_iter().map(|t| self.check_parameter(t)).collect()
    }

    pub fn positive_list(
        &self,
        name: &str,
        values: Option<&Vec<f64>>,
        default: Vec<f64>,
    ) -> Result<Vec<f64>, CliError> {
        let v = values.cloned().unwrap_or(default);
        if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(self.error(
                format!("`{name}` must be a non-empty list of positive numbers"),
                format!("remove `{name}` to use the default list"),
            ));
        }
        Ok(v)
    }
}
