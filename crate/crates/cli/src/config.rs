//! Run configuration: a schema-validated TOML file with profile-based
//! defaults. Unknown keys are rejected, every artifact directory receives an
//! echo of the fully resolved configuration, and re-running with that echo
//! reproduces all numeric artifacts bit for bit.

use crate::error::CliError;
use logitest_core::densities::{
    mean_shift_pair, mixture_grid_pair, sigmoid_curve_pair, sphere_pair, tail_bump_pair,
    variance_dilation_pair, AnalyticDensity,
};
use logitest_core::power::{EpochRule, ExperimentConfig, Method, NetProfile};
use logitest_core::testing::default_bandwidth_grid;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Named preset filling every unset knob; see [`RunConfig::apply_profile`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub methods: MethodsConfig,
    #[serde(default)]
    pub harness: HarnessConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_curve: Option<LossCurveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// One of mean-shift | variance-dilation | tail-bump | mixture-grid |
    /// sigmoid-curve | sphere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_all: Option<usize>,
    /// Externally generated samples in IDX containers instead of an
    /// analytic pair (clearly non-replicative; the toolkit trains a dense
    /// network on whatever these files hold).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idx: Option<IdxSource>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            pair: None,
            delta: None,
            n_all: None,
            idx: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxSource {
    pub x_images: String,
    pub x_labels: String,
    pub y_images: String,
    pub y_labels: String,
    /// Keep only these label values (all, when empty).
    #[serde(default)]
    pub class_filter: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<String>>,
}

impl Default for MethodsConfig {
    fn default() -> Self {
        MethodsConfig { list: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_run: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rep: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_perm: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            n_run: None,
            n_rep: None,
            m_perm: None,
            alpha: None,
            base_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    /// Fixed epoch count; mutually exclusive with `epoch_budget`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// Total processed-sample budget: epochs = budget / n_train.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_clip: Option<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            hidden: None,
            learning_rate: None,
            epochs: None,
            epoch_budget: None,
            batch_cap: None,
            weight_clip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossCurveSection {
    /// mixture-grid | sigmoid-curve
    pub target: String,
    pub widths: Vec<usize>,
    pub train_sizes: Vec<usize>,
    pub n_rep: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    /// circle | sigmoid-curve | sphere-patch
    #[serde(default = "default_shape")]
    pub shape: String,
    #[serde(default = "default_chart_radius")]
    pub delta: f64,
    #[serde(default = "default_kmax_list")]
    pub kmax: Vec<u32>,
    #[serde(default = "default_c_d")]
    pub c_d: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
    /// Ambient coordinate used as the target function: x | y | z.
    #[serde(default = "default_target")]
    pub target: String,
}

fn default_shape() -> String {
    "circle".into()
}
fn default_chart_radius() -> f64 {
    0.3
}
fn default_kmax_list() -> Vec<u32> {
    vec![2, 4, 6]
}
fn default_c_d() -> f64 {
    1.0
}
fn default_n_grid() -> usize {
    4000
}
fn default_n_eval() -> usize {
    10_000
}
fn default_target() -> String {
    "x".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Also write the drawn samples of `gen`/`test` runs as CSV.
    #[serde(default)]
    pub write_samples: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            write_samples: false,
        }
    }
}

impl RunConfig {
    pub fn parse_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<RunConfig, CliError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.apply_profile()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Fill unset knobs from the named profile (or the built-in defaults).
    fn apply_profile(&mut self) -> Result<(), CliError> {
        let name = self.profile.clone().unwrap_or_else(|| "default".into());
        let (pair, delta, n_all, n_run, n_rep) = match name.as_str() {
            // The tail-bump power table at its published scale.
            "tail-bump-power" => ("tail-bump", 0.08, 400, 400, 20),
            // Reduced-scale profile for continuous integration.
            "fast" => ("tail-bump", 0.08, 400, 100, 5),
            "default" => ("tail-bump", 0.08, 400, 400, 20),
            other => return Err(CliError::Config(format!("unknown profile \"{other}\""))),
        };
        let d = &mut self.data;
        if d.idx.is_none() {
            d.pair.get_or_insert_with(|| pair.to_string());
        }
        d.delta.get_or_insert(delta);
        d.n_all.get_or_insert(n_all);
        self.methods.list.get_or_insert_with(|| {
            Method::all()
                .iter()
                .map(|m| m.label().to_string())
                .collect()
        });
        let h = &mut self.harness;
        h.n_run.get_or_insert(n_run);
        h.n_rep.get_or_insert(n_rep);
        h.m_perm.get_or_insert(200);
        h.alpha.get_or_insert(0.05);
        h.base_seed.get_or_insert(17);
        let t = &mut self.train;
        t.hidden.get_or_insert_with(|| vec![32, 32]);
        t.learning_rate.get_or_insert(1e-3);
        if t.epochs.is_none() && t.epoch_budget.is_none() {
            t.epochs = Some(100);
        }
        t.batch_cap.get_or_insert(100);
        self.output.dir.get_or_insert_with(|| "out".into());
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        let h = &self.harness;
        let alpha = h.alpha.unwrap_or(0.05);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Config(format!(
                "harness.alpha must be in (0,1), got {alpha}"
            )));
        }
        let n_all = self.data.n_all.unwrap_or(400);
        if n_all == 0 || n_all % 4 != 0 {
            return Err(CliError::Config(format!(
                "data.n_all must be a positive multiple of 4, got {n_all}"
            )));
        }
        if self.train.epochs.is_some() && self.train.epoch_budget.is_some() {
            return Err(CliError::Config(
                "train.epochs and train.epoch_budget are mutually exclusive".into(),
            ));
        }
        if self.data.idx.is_none() {
            self.density_pair()?;
        }
        self.method_list()?;
        if let Some(lc) = &self.loss_curve {
            if lc.widths.is_empty() || lc.train_sizes.is_empty() || lc.n_rep == 0 {
                return Err(CliError::Config(
                    "loss_curve needs nonempty widths, train_sizes and n_rep >= 1".into(),
                ));
            }
            loss_curve_target(&lc.target)?;
        }
        Ok(())
    }

    pub fn density_pair(&self) -> Result<(AnalyticDensity, AnalyticDensity), CliError> {
        let name = self.data.pair.as_deref().unwrap_or("tail-bump");
        let delta = self.data.delta.unwrap_or(0.08);
        Ok(match name {
            "mean-shift" => mean_shift_pair(delta),
            "variance-dilation" => variance_dilation_pair(delta),
            "tail-bump" => tail_bump_pair(delta),
            "mixture-grid" => mixture_grid_pair(),
            "sigmoid-curve" => sigmoid_curve_pair(),
            "sphere" => sphere_pair(delta),
            other => {
                return Err(CliError::Config(format!(
                    "unknown data.pair \"{other}\" (expected mean-shift, variance-dilation, \
                     tail-bump, mixture-grid, sigmoid-curve or sphere)"
                )))
            }
        })
    }

    pub fn method_list(&self) -> Result<Vec<Method>, CliError> {
        self.methods
            .list
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .map(|s| {
                Method::parse(s).ok_or_else(|| CliError::Config(format!("unknown method \"{s}\"")))
            })
            .collect()
    }

    /// The resolved harness configuration for the experiment modules.
    pub fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::new(
            self.data.n_all.unwrap_or(400),
            self.harness.base_seed.unwrap_or(17),
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        cfg.methods = self.method_list()?;
        cfg.n_run = self.harness.n_run.unwrap_or(400);
        cfg.n_rep = self.harness.n_rep.unwrap_or(20);
        cfg.m_perm = self.harness.m_perm.unwrap_or(200);
        cfg.alpha = self.harness.alpha.unwrap_or(0.05);
        cfg.net = self.net_profile();
        cfg.bandwidth_grid = default_bandwidth_grid();
        Ok(cfg)
    }

    pub fn net_profile(&self) -> NetProfile {
        let t = &self.train;
        NetProfile {
            hidden_widths: t.hidden.clone().unwrap_or_else(|| vec![32, 32]),
            learning_rate: t.learning_rate.unwrap_or(1e-3),
            epoch_rule: match (t.epochs, t.epoch_budget) {
                (_, Some(budget)) => EpochRule::SampleBudget { budget },
                (Some(e), None) => EpochRule::Fixed(e),
                (None, None) => EpochRule::Fixed(100),
            },
            batch_cap: t.batch_cap.unwrap_or(100),
            weight_clip: t.weight_clip,
        }
    }
}

pub fn loss_curve_target(name: &str) -> Result<logitest_core::power::LossWidthTarget, CliError> {
    use logitest_core::power::LossWidthTarget;
    match name {
        "mixture-grid" => Ok(LossWidthTarget::Mixture1d),
        "sigmoid-curve" => Ok(LossWidthTarget::Curve2d),
        other => Err(CliError::Config(format!(
            "unknown loss_curve.target \"{other}\" (expected mixture-grid or sigmoid-curve)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_profile_fills_published_defaults() {
        let cfg = RunConfig::parse_str("profile = \"tail-bump-power\"").unwrap();
        assert_eq!(cfg.harness.m_perm, Some(200));
        assert_eq!(cfg.harness.alpha, Some(0.05));
        assert_eq!(cfg.harness.n_run, Some(400));
        assert_eq!(cfg.harness.n_rep, Some(20));
        assert_eq!(cfg.data.pair.as_deref(), Some("tail-bump"));
        assert_eq!(cfg.data.delta, Some(0.08));
        assert_eq!(cfg.data.n_all, Some(400));
        assert_eq!(cfg.train.hidden, Some(vec![32, 32]));
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = RunConfig::parse_str("foo = 1").unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
        let err = RunConfig::parse_str("[harness]\nbogus_knob = 2").unwrap_err();
        assert!(err.to_string().contains("bogus_knob"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::parse_str(
            "profile = \"fast\"\n[data]\npair = \"mean-shift\"\ndelta = 0.5\n",
        )
        .unwrap();
        let echoed = cfg.to_toml();
        let back = RunConfig::parse_str(&echoed).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn validation_errors() {
        assert!(RunConfig::parse_str("[data]\nn_all = 30").is_err());
        assert!(RunConfig::parse_str("[harness]\nalpha = 1.5").is_err());
        assert!(RunConfig::parse_str("[data]\npair = \"nope\"").is_err());
        assert!(RunConfig::parse_str("[methods]\nlist = [\"nope\"]").is_err());
        assert!(RunConfig::parse_str("profile = \"nope\"").is_err());
        assert!(RunConfig::parse_str("[train]\nepochs = 5\nepoch_budget = 100").is_err());
    }

    #[test]
    fn experiment_config_resolves() {
        let cfg = RunConfig::parse_str("profile = \"fast\"").unwrap();
        let exp = cfg.experiment_config().unwrap();
        assert_eq!(exp.n_run, 100);
        assert_eq!(exp.n_rep, 5);
        assert_eq!(exp.methods.len(), 6);
    }
}
