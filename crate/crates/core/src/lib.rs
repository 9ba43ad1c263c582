//! Software pipelines for a multisensory robot hand.
//!
//! Two independent chains share this crate:
//!
//! * thermal affordance mapping: [`projection`] paints thermal images onto a
//!   reconstructed point cloud, [`affordance`] finds the warm/cool boundary,
//!   removes color anomalies and filters grasp candidates that touch hot
//!   regions;
//! * flick mass classification: [`wire`] decodes the palm board's serial
//!   stream, [`features`] windows fingertip IMU data around a flick and
//!   extracts 42 statistics, [`lda`] separates the object masses.
//!
//! [`synth`] generates deterministic stand-in data for both chains.

pub mod affordance;
pub mod cloud;
pub mod dataset;
pub mod features;
pub mod lda;
pub mod projection;
pub mod raster;
pub mod synth;
pub mod wire;

pub use affordance::{AffordanceError, AffordanceMap, DenoiseConfig, GraspCandidate};
pub use cloud::{ColoredPoint, PointCloud};
pub use features::{FeatureError, FeatureVector, FlickTrace, ImuSample, FEATURE_NAMES};
pub use lda::{LdaConfig, LdaError, LdaModel};
pub use projection::{CameraModel, DepthImage, ProjectionError, ThermalImage};
pub use wire::{FrameStreamConfig, SensorFrame, WireError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Affordance(#[from] AffordanceError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Lda(#[from] LdaError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error(transparent)]
    Ply(#[from] cloud::PlyError),
    #[error(transparent)]
    Raster(#[from] raster::RasterError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
}

impl Error {
    /// Stable machine-readable identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Wire(e) => match e {
                WireError::IncompleteFrame { .. } => "IncompleteFrame",
                WireError::CrcMismatch { .. } => "CrcMismatch",
                WireError::InvalidField { .. } => "InvalidFrameField",
            },
            Error::Projection(e) => match e {
                ProjectionError::NonPositiveDepth(_) => "NonPositiveDepth",
                ProjectionError::PixelOutOfBounds { .. } => "PixelOutOfBounds",
                ProjectionError::BehindCamera(_) => "BehindCamera",
                ProjectionError::DimensionMismatch(_) => "DimensionMismatch",
                ProjectionError::InvalidCamera(_) => "InvalidCamera",
                ProjectionError::InvalidImage(_) => "InvalidImage",
            },
            Error::Affordance(e) => match e {
                AffordanceError::EmptyCloud => "EmptyCloud",
                AffordanceError::MissingScores(_) => "MissingScores",
                AffordanceError::TooFewSlices(_) => "TooFewSlices",
                AffordanceError::InvalidConfig(_) => "InvalidConfig",
                AffordanceError::ProfileMismatch(_) => "ProfileMismatch",
            },
            Error::Feature(e) => match e {
                FeatureError::InsufficientCoverage { .. } => "InsufficientCoverage",
                FeatureError::Unsorted(_) => "UnsortedFrames",
                FeatureError::ZeroTick => "InvalidConfig",
                FeatureError::EmptyTrace => "EmptyTrace",
                FeatureError::UnlabeledTrace(_) => "UnlabeledTrace",
            },
            Error::Lda(e) => match e {
                LdaError::DegenerateClass { .. } => "DegenerateClass",
                LdaError::TooFewClasses(_) => "TooFewClasses",
                LdaError::RankCollapse => "RankCollapse",
                LdaError::DimensionMismatch { .. } => "DimensionMismatch",
                LdaError::LabelCount { .. } => "LabelCount",
                LdaError::NonFinite { .. } => "NonFinite",
                LdaError::NotPositiveDefinite => "NotPositiveDefinite",
                LdaError::TooFewPoints(_) => "TooFewPoints",
                LdaError::DegenerateCovariance => "DegenerateCovariance",
                LdaError::InvalidCoverage(_) => "InvalidCoverage",
                LdaError::InvalidModel(_) => "InvalidModel",
            },
            Error::Synth(_) => "InvalidGeometry",
            Error::Ply(cloud::PlyError::Io(e)) | Error::Raster(raster::RasterError::Io(e)) => io_code(e),
            Error::Dataset(dataset::DatasetError::Io { source, .. }) => io_code(source),
            Error::Dataset(dataset::DatasetError::Window { source, .. }) => Error::Feature(source.clone()).code(),
            Error::Ply(_) | Error::Raster(_) | Error::Dataset(_) => "ParseError",
        }
    }
}

pub fn io_code(e: &std::io::Error) -> &'static str {
    match e.kind() {
        std::io::ErrorKind::NotFound => "FileNotFound",
        std::io::ErrorKind::PermissionDenied => "PermissionDenied",
        _ => "IoError",
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
