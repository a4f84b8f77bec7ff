use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use swingcast_core::telemetry::{ServerConfig, DEFAULT_VIEWER_QUEUE};
use swingcast_core::{CalibrationConfig, DetectorConfig, PhysicalConfig};

/// `--config` file layout. Every table and key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub physical: PhysicalConfig,
    pub detector: DetectorConfig,
    pub calibration: CalibrationConfig,
    pub server: ServerSettings,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSettings {
    pub viewer_queue: usize,
}

impl Default for ServerSettings {
    fn default() -> Self {
        Self {
            viewer_queue: DEFAULT_VIEWER_QUEUE,
        }
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let settings: Settings =
            toml::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))?;
        settings
            .physical
            .validate()
            .and_then(|_| settings.detector.validate())
            .with_context(|| format!("{}: invalid config", path.display()))?;
        anyhow::ensure!(
            settings.server.viewer_queue > 0,
            "{}: server.viewer_queue must be positive",
            path.display()
        );
        Ok(settings)
    }

    pub fn server_config(&self, data_dir: Option<&Path>) -> ServerConfig {
        ServerConfig {
            physical: self.physical,
            detector: self.detector,
            calibration: self.calibration,
            data_dir: data_dir.map(Path::to_path_buf),
            viewer_queue: self.server.viewer_queue,
        }
    }
}
