//! JSON configuration loading shared by the CLI, the service and the FFI.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::camgeom::{CameraError, CameraModel};
use crate::kinchain::{ChainConfig, KinematicsError};
use crate::reactnav::NavConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("{0}")]
    Invalid(String),
}

pub fn read_text(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })
}

pub fn load_camera(path: Option<&Path>) -> Result<CameraModel, ConfigError> {
    match path {
        Some(p) => CameraModel::from_json(&read_text(p)?),
        None => Ok(CameraModel::default()),
    }
}

pub fn load_chain(path: Option<&Path>) -> Result<ChainConfig, ConfigError> {
    match path {
        Some(p) => ChainConfig::from_json(&read_text(p)?),
        None => Ok(ChainConfig::default()),
    }
}

pub fn load_nav(path: Option<&Path>) -> Result<NavConfig, ConfigError> {
    match path {
        Some(p) => NavConfig::from_json(&read_text(p)?),
        None => Ok(NavConfig::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_paths_fall_back_to_defaults() {
        assert_eq!(load_camera(None).unwrap(), CameraModel::default());
        assert_eq!(load_chain(None).unwrap(), ChainConfig::default());
        assert_eq!(load_nav(None).unwrap(), NavConfig::default());
    }

    #[test]
    fn unreadable_file_reports_path() {
        let err = load_camera(Some(Path::new("/nonexistent/camera.json"))).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/camera.json"));
    }

    #[test]
    fn nav_config_partial_override() {
        let cfg = NavConfig::from_json(r#"{"v_max": 0.4, "n_alpha": 31}"#).unwrap();
        assert_eq!(cfg.v_max, 0.4);
        assert_eq!(cfg.n_alpha, 31);
        assert_eq!(cfg.w_goal, NavConfig::default().w_goal);
        assert!(NavConfig::from_json(r#"{"v_max": -1}"#).is_err());
    }
}
