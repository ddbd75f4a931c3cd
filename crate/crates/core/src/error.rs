//! Crate-level error wrapper used by the command-line front end to map
//! failures onto exit codes.

use thiserror::Error;

use crate::config::ConfigError;
use crate::experiment::ExperimentError;
use crate::io::IoError;
use crate::mirror::MirrorError;
use crate::momentum::MomentumError;
use crate::phaseshift::PhaseError;
use crate::pilotwave::PilotError;
use crate::wellqm::WellError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Well(#[from] WellError),
    #[error(transparent)]
    Momentum(#[from] MomentumError),
    #[error(transparent)]
    Pilot(#[from] PilotError),
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Coarse failure classes; each maps to its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or inconsistent configuration or input parameters.
    Config,
    /// Physically impossible request (no barrier, surface collision, node).
    Physics,
    /// A numerical tolerance could not be met.
    Accuracy,
    /// Reading or writing files.
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Physics => 3,
            ErrorCategory::Accuracy => 4,
            ErrorCategory::Io => 5,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use ErrorCategory::*;
        match self {
            Error::Config(_) => Config,
            Error::Io(_) => Io,
            Error::Well(e) => well_category(e),
            Error::Momentum(e) => match e {
                MomentumError::InvalidBox(_) => Config,
                MomentumError::Accuracy(_) | MomentumError::UnderResolved { .. } => Accuracy,
            },
            Error::Pilot(e) => pilot_category(e),
            Error::Mirror(e) => mirror_category(e),
            Error::Phase(e) => match e {
                PhaseError::Mirror(m) => mirror_category(m),
                PhaseError::InvalidInput(_) => Config,
                PhaseError::UnphysicalPhase { .. } | PhaseError::DegenerateDensity => Physics,
            },
            Error::Experiment(e) => match e {
                ExperimentError::Config(_) => Config,
                ExperimentError::Momentum(MomentumError::InvalidBox(_)) => Config,
                ExperimentError::Momentum(_) => Accuracy,
                ExperimentError::Mirror(m) => mirror_category(m),
                ExperimentError::Phase(_) | ExperimentError::NoData => Physics,
            },
        }
    }
}

fn well_category(e: &WellError) -> ErrorCategory {
    match e {
        WellError::InvalidGeometry(_) | WellError::InvalidMode(..) | WellError::InvalidState(_) => ErrorCategory::Config,
        WellError::OutOfDomain(_) | WellError::NodeSingularity { .. } => ErrorCategory::Physics,
    }
}

fn pilot_category(e: &PilotError) -> ErrorCategory {
    match e {
        PilotError::Well(w) | PilotError::InvalidStart(w) => well_category(w),
        PilotError::NodeApproach { .. } | PilotError::EnsembleQuality { .. } => ErrorCategory::Physics,
        PilotError::StepUnderflow { .. } | PilotError::TooManySteps { .. } => ErrorCategory::Accuracy,
        PilotError::EnsembleTooSmall { .. } | PilotError::InvalidEnsemble(_) => ErrorCategory::Config,
    }
}

fn mirror_category(e: &MirrorError) -> ErrorCategory {
    match e {
        MirrorError::InvalidParams(_) | MirrorError::InvalidBounce(_) => ErrorCategory::Config,
        MirrorError::NoTotalInternalReflection { .. }
        | MirrorError::Domain(_)
        | MirrorError::SurfaceCollision { .. }
        | MirrorError::Capture => ErrorCategory::Physics,
        MirrorError::Integration(_) => ErrorCategory::Accuracy,
    }
}
