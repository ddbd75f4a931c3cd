//! File-backed run configuration (TOML).
//!
//! Every section rejects unknown keys. A parsed config can be echoed back
//! with [`RunConfig::to_toml_string`]; the echo reparses to an identical
//! value.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::{DisturbedDistribution, ExperimentConfig, TheoryModel, WallSelection};
use crate::mirror::MirrorParams;
use crate::phaseshift;
use crate::stats;
use crate::wellqm::{ModeIndex, QuantumState, StateTerm, WellGeometry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl ToString) -> Self {
        ConfigError::Invalid { field: field.to_string(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub mode: ModeIndex,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Either a single eigenmode or a list of weighted terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
}

impl Default for StateSpec {
    fn default() -> Self {
        Self { mode: Some(ModeIndex::GROUND), terms: None }
    }
}

impl StateSpec {
    pub fn build(&self) -> Result<QuantumState, ConfigError> {
        match (&self.mode, &self.terms) {
            (Some(m), None) => Ok(QuantumState::eigen(*m)),
            (None, Some(terms)) => {
                let terms = terms
                    .iter()
                    .map(|t| StateTerm { mode: t.mode, coefficient: Complex64::new(t.re, t.im) })
                    .collect();
                QuantumState::superposition(terms).map_err(|e| ConfigError::invalid("state.terms", e))
            }
            _ => Err(ConfigError::invalid("state", "give exactly one of `mode` or `terms`")),
        }
    }

    /// The eigenmode, if the state is a single mode.
    pub fn eigenmode(&self) -> Result<ModeIndex, ConfigError> {
        self.build()?
            .single_mode()
            .ok_or_else(|| ConfigError::invalid("state", "this command needs a single eigenmode"))
    }
}

/// How the incident atomic density is specified.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    /// Cloud density (m⁻³).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_in: Option<f64>,
    /// Laser spot area (m²) for a single atom in the interaction volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spot_area: Option<f64>,
    /// Momentum magnitudes (kg·m/s) evaluated by the `phase` command.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub momenta: Vec<f64>,
}

impl DensitySpec {
    pub fn resolve(&self, mirror: &MirrorParams) -> Result<f64, ConfigError> {
        match (self.rho_in, self.spot_area) {
            (Some(rho), None) => {
                if rho > 0.0 && rho.is_finite() {
                    Ok(rho)
                } else {
                    Err(ConfigError::invalid("phase.rho_in", format!("must be positive, got {rho}")))
                }
            }
            (None, Some(area)) => {
                phaseshift::single_atom_density(area, mirror).map_err(|e| ConfigError::invalid("phase.spot_area", e))
            }
            _ => Err(ConfigError::invalid("phase", "give exactly one of `rho_in` or `spot_area`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    #[default]
    Oqt,
    DebbStationary,
    DebbDisturbed,
}

fn default_n_bounces() -> usize {
    1000
}
fn default_target_sigma() -> f64 {
    5.0
}
fn default_alpha() -> f64 {
    stats::sigma_to_alpha(5.0)
}
fn default_null_replicates() -> usize {
    10_000
}
fn default_power_replicates() -> usize {
    1000
}
fn default_power_level() -> f64 {
    0.95
}
fn default_max_bounces() -> usize {
    10_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub model: ModelName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbed: Option<DisturbedDistribution>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_n_bounces")]
    pub n_bounces: usize,
    #[serde(default = "default_target_sigma")]
    pub target_sigma: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub wall_selection: WallSelection,
    #[serde(default = "default_null_replicates")]
    pub null_replicates: usize,
    #[serde(default = "default_power_replicates")]
    pub power_replicates: usize,
    #[serde(default = "default_power_level")]
    pub power_level: f64,
    #[serde(default = "default_max_bounces")]
    pub max_bounces: usize,
    /// Run the Monte Carlo power search in `discriminate`.
    #[serde(default)]
    pub power_analysis: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        toml::from_str("").expect("all experiment fields have defaults")
    }
}

fn default_levels_max() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsSection {
    /// Lowest mode number per axis.
    #[serde(default = "one")]
    pub min_index: u32,
    /// Highest mode number per axis.
    #[serde(default = "default_levels_max")]
    pub max_index: u32,
}

fn one() -> u32 {
    1
}

impl Default for LevelsSection {
    fn default() -> Self {
        Self { min_index: 1, max_index: default_levels_max() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfSection {
    /// Grid points along each momentum axis.
    #[serde(default = "default_pdf_points")]
    pub points: usize,
    /// Grid half-width in units of `πħ/L` per axis.
    #[serde(default = "default_pdf_half_width")]
    pub half_width: f64,
}

fn default_pdf_points() -> usize {
    401
}
fn default_pdf_half_width() -> f64 {
    8.0
}

impl Default for PdfSection {
    fn default() -> Self {
        Self { points: default_pdf_points(), half_width: default_pdf_half_width() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    #[serde(default = "default_sample_count")]
    pub count: usize,
}

fn default_sample_count() -> usize {
    10_000
}

impl Default for SampleSection {
    fn default() -> Self {
        Self { count: default_sample_count() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BounceSection {
    /// Incoming speeds toward the surface (m/s).
    #[serde(default = "default_bounce_speeds")]
    pub speeds: Vec<f64>,
    /// Start height in decay lengths `1/κ`.
    #[serde(default = "default_start_decay_lengths")]
    pub start_decay_lengths: f64,
    /// Points in the exported potential profile.
    #[serde(default = "default_profile_points")]
    pub profile_points: usize,
}

fn default_bounce_speeds() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}
fn default_start_decay_lengths() -> f64 {
    10.0
}
fn default_profile_points() -> usize {
    1000
}

impl Default for BounceSection {
    fn default() -> Self {
        Self {
            speeds: default_bounce_speeds(),
            start_decay_lengths: default_start_decay_lengths(),
            profile_points: default_profile_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotSection {
    /// Start positions as fractions of the box sides.
    #[serde(default = "default_starts")]
    pub starts: Vec<[f64; 3]>,
    /// Duration in beat periods (or seconds for a single mode).
    #[serde(default = "one_f64")]
    pub duration: f64,
    /// Absolute position tolerance (m).
    #[serde(default = "default_pilot_tol")]
    pub tolerance: f64,
}

fn default_starts() -> Vec<[f64; 3]> {
    vec![[0.3, 0.4, 0.6]]
}
fn one_f64() -> f64 {
    1.0
}
fn default_pilot_tol() -> f64 {
    1e-15
}

impl Default for PilotSection {
    fn default() -> Self {
        Self { starts: default_starts(), duration: 1.0, tolerance: default_pilot_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub geometry: WellGeometry,
    #[serde(default)]
    pub state: StateSpec,
    pub mirror: MirrorParams,
    #[serde(default)]
    pub phase: DensitySpec,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub levels: LevelsSection,
    #[serde(default)]
    pub pdf: PdfSection,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub bounce: BounceSection,
    #[serde(default)]
    pub pilot: PilotSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            ConfigError::Parse { line, column, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML echo of the configuration.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry.validate().map_err(|e| ConfigError::invalid("geometry", e))?;
        self.mirror.validate().map_err(|e| ConfigError::invalid("mirror", e))?;
        self.state.build()?;
        for t in self.state.terms.iter().flatten() {
            if !(t.re.is_finite() && t.im.is_finite()) {
                return Err(ConfigError::invalid("state.terms", "coefficients must be finite"));
            }
        }
        if self.phase.rho_in.is_some() || self.phase.spot_area.is_some() {
            self.phase.resolve(&self.mirror)?;
        }
        if self.phase.momenta.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(ConfigError::invalid("phase.momenta", "momenta must be finite and non-negative"));
        }
        let e = &self.experiment;
        match (e.model, &e.disturbed) {
            (ModelName::DebbDisturbed, None) => {
                return Err(ConfigError::invalid("experiment.disturbed", "required for model debb_disturbed"))
            }
            (_, Some(d)) => {
                d.clone().normalized().map_err(|err| ConfigError::invalid("experiment.disturbed", err))?;
            }
            _ => {}
        }
        if self.levels.min_index == 0 {
            return Err(ConfigError::invalid("levels.min_index", "mode numbers start at 1"));
        }
        if self.pdf.points < 2 || !(self.pdf.half_width > 0.0 && self.pdf.half_width.is_finite()) {
            return Err(ConfigError::invalid("pdf", "need at least 2 points and a positive half_width"));
        }
        if self.bounce.speeds.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(ConfigError::invalid("bounce.speeds", "speeds must be finite and non-negative"));
        }
        if !(self.bounce.start_decay_lengths > 0.0 && self.bounce.start_decay_lengths.is_finite()) {
            return Err(ConfigError::invalid("bounce.start_decay_lengths", "must be positive"));
        }
        if self.bounce.profile_points < 2 {
            return Err(ConfigError::invalid("bounce.profile_points", "need at least 2 points"));
        }
        if self.pilot.starts.iter().flatten().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(ConfigError::invalid("pilot.starts", "fractions must lie strictly inside (0, 1)"));
        }
        if !(self.pilot.duration >= 0.0 && self.pilot.duration.is_finite()) {
            return Err(ConfigError::invalid("pilot.duration", "must be non-negative"));
        }
        if !(self.pilot.tolerance > 0.0 && self.pilot.tolerance.is_finite()) {
            return Err(ConfigError::invalid("pilot.tolerance", "must be positive"));
        }
        Ok(())
    }

    /// Theory model named in the experiment section.
    pub fn theory_model(&self) -> Result<TheoryModel, ConfigError> {
        Ok(match self.experiment.model {
            ModelName::Oqt => TheoryModel::Oqt,
            ModelName::DebbStationary => TheoryModel::DebbStationary,
            ModelName::DebbDisturbed => {
                let d = self
                    .experiment
                    .disturbed
                    .clone()
                    .ok_or_else(|| ConfigError::invalid("experiment.disturbed", "missing"))?;
                TheoryModel::DebbDisturbed {
                    distribution: d.normalized().map_err(|e| ConfigError::invalid("experiment.disturbed", e))?,
                }
            }
        })
    }

    /// Experiment configuration; needs an eigenmode state and a density.
    pub fn experiment_config(&self) -> Result<ExperimentConfig, ConfigError> {
        let e = &self.experiment;
        let cfg = ExperimentConfig {
            geometry: self.geometry,
            mode: self.state.eigenmode()?,
            mirror: self.mirror,
            rho_in: self.phase.resolve(&self.mirror)?,
            noise_sigma: e.noise_sigma,
            n_bounces: e.n_bounces,
            seed: self.seed,
            target_sigma: e.target_sigma,
            alpha: e.alpha,
            wall_selection: e.wall_selection,
            null_replicates: e.null_replicates,
            power_replicates: e.power_replicates,
            power_level: e.power_level,
            max_bounces: e.max_bounces,
        };
        cfg.validate().map_err(|err| ConfigError::invalid("experiment", err))?;
        Ok(cfg)
    }
}
