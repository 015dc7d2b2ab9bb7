//! The `nodes.json` input consumed by `scenario build`: nodes, radio
//! parameters, and the channel sampling interval.

use serde::{Deserialize, Serialize};

use twinchan::scenario::Node;
use twinchan::types::{RadioParams, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpecFile {
    pub name: String,
    #[serde(default = "default_radio")]
    pub radio: RadioParams,
    /// Channel sampling interval of the ray export, seconds.
    pub sampling_interval_s: f64,
    pub nodes: Vec<Node>,
}

fn default_radio() -> RadioParams {
    RadioParams::default()
}

impl ScenarioSpecFile {
    pub fn from_path<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        let spec: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        spec.radio.validate()?;
        for node in &spec.nodes {
            node.validate()?;
        }
        Ok(spec)
    }
}
