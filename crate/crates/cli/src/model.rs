//! JSON model files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use twjscc_core::hybrid::{HybridScheme, SchemeJson};
use twjscc_core::prob::{check_model_shapes, DistortionMatrix, JointSourcePMF, TwoWayChannel};

use crate::CliError;

/// On-disk layout: `channel` is indexed `[x1][x2][y1][y2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub source: Vec<Vec<f64>>,
    pub channel: Vec<Vec<Vec<Vec<f64>>>>,
    pub distortion1: Vec<Vec<f64>>,
    pub distortion2: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub schemes: BTreeMap<String, SchemeJson>,
}

/// A validated model.
#[derive(Debug, Clone)]
pub struct Model {
    pub source: JointSourcePMF,
    pub channel: TwoWayChannel,
    pub d1: DistortionMatrix,
    pub d2: DistortionMatrix,
    pub schemes: BTreeMap<String, SchemeJson>,
}

impl Model {
    pub fn from_file_contents(file: ModelFile) -> Result<Self, CliError> {
        let source = JointSourcePMF::new(file.source)?;
        let channel = TwoWayChannel::new(file.channel)?;
        let d1 = DistortionMatrix::new(file.distortion1)?;
        let d2 = DistortionMatrix::new(file.distortion2)?;
        check_model_shapes(&source, &d1, &d2)?;
        Ok(Self {
            source,
            channel,
            d1,
            d2,
            schemes: file.schemes,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file: ModelFile = read_json(path)?;
        Self::from_file_contents(file)
    }

    /// A scheme stored in the model under `name`, checked against the model.
    pub fn scheme(&self, name: &str) -> Result<HybridScheme, CliError> {
        let json = self
            .schemes
            .get(name)
            .ok_or_else(|| CliError::Usage(format!("model has no scheme named '{name}'")))?;
        self.check_scheme(json)
    }

    pub fn check_scheme(&self, json: &SchemeJson) -> Result<HybridScheme, CliError> {
        let sch = HybridScheme::from_json(json)?;
        sch.validate(&self.source, &self.channel, &self.d1, &self.d2)?;
        Ok(sch)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file() -> ModelFile {
        serde_json::from_str(
            r#"{"source": [[0.5, 0.0], [0.0, 0.5]],
                "channel": [[[[1,0],[0,0]], [[0,0],[1,0]]], [[[0,1],[0,0]], [[0,0],[0,1]]]],
                "distortion1": [[0,1],[1,0]], "distortion2": [[0,1],[1,0]]}"#,
        )
        .unwrap()
    }

    #[test]
    fn loads_a_valid_model() {
        let m = Model::from_file_contents(file()).unwrap();
        assert_eq!(m.channel.dims(), [2, 2, 2, 2]);
        assert!(m.schemes.is_empty());
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let mut f = file();
        f.distortion2 = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(Model::from_file_contents(f), Err(CliError::Core(_))));
        let mut f = file();
        f.source = vec![vec![0.6, 0.0], vec![0.0, 0.5]];
        assert!(Model::from_file_contents(f).is_err());
    }

    #[test]
    fn unknown_scheme_is_a_usage_error() {
        let m = Model::from_file_contents(file()).unwrap();
        assert!(matches!(m.scheme("nope"), Err(CliError::Usage(_))));
    }
}
