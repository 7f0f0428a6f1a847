//! The JSON file format for distributions.
//!
//! One document describes either a joint distribution, a channel
//! (optionally with an input distribution), or a Z-indexed family of
//! conditional joints:
//!
//! ```json
//! {"kind": "joint",  "x_labels": ["a","b"], "y_labels": ["0","1"],
//!  "p": [[0.375, 0.125], [0.125, 0.375]]}
//! {"kind": "channel", "x_labels": ["a","b"], "y_labels": ["0","1"],
//!  "p": [[0.75, 0.25], [0.25, 0.75]], "p_x": [0.5, 0.5]}
//! {"kind": "cond_joint", "x_labels": ["a","b"], "y_labels": ["0","1"],
//!  "z": [{"label": "z0", "weight": 1.0, "p": [[0.25,0.25],[0.25,0.25]]}]}
//! ```
//!
//! All numbers are decimal; label order in the file is the matrix order.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::dist::{Channel, CondJointPmf, DistError, JointPmf, Pmf};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid distribution: {0}")]
    Validation(#[from] DistError),
    #[error("{0}")]
    Shape(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondEntry {
    pub label: String,
    pub weight: f64,
    pub p: Vec<Vec<f64>>,
}

/// The on-disk document; a direct mirror of the JSON schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub kind: String,
    pub x_labels: Vec<String>,
    pub y_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<CondEntry>>,
}

/// A parsed, validated distribution input.
#[derive(Debug, Clone)]
pub enum Distribution {
    Joint(JointPmf),
    Channel { channel: Channel, input: Option<Pmf> },
    CondJoint(CondJointPmf),
}

impl Distribution {
    /// The joint view of the input. A channel without an explicit input
    /// composes with the uniform distribution (full support, so the
    /// support-only metrics are unaffected).
    pub fn to_joint(&self) -> Result<JointPmf, IoError> {
        match self {
            Distribution::Joint(j) => Ok(j.clone()),
            Distribution::Channel { channel, input } => {
                let px = match input {
                    Some(p) => p.clone(),
                    None => Pmf::uniform(channel.x_labels().to_vec())?,
                };
                Ok(channel.compose(&px)?)
            }
            Distribution::CondJoint(cj) => Ok(cj.flatten_yz()),
        }
    }
}

pub fn parse_distribution(text: &str) -> Result<Distribution, IoError> {
    let file: DistributionFile = serde_json::from_str(text)?;
    distribution_from_file(file)
}

pub fn distribution_from_file(file: DistributionFile) -> Result<Distribution, IoError> {
    match file.kind.as_str() {
        "joint" => {
            let p = file.p.ok_or_else(|| Stated::missing("p"))?;
            Ok(Distribution::Joint(JointPmf::new(file.x_labels, file.y_labels, p)?))
        }
        "channel" => {
            let p = file.p.ok_or_else(|| Stated::missing("p"))?;
            let channel = Channel::new(file.x_labels.clone(), file.y_labels, p)?;
            let input = match file.p_x {
                Some(probs) => Some(Pmf::from_parts(file.x_labels, probs)?),
                None => None,
            };
            Ok(Distribution::Channel { channel, input })
        }
        "cond_joint" => {
            let entries = file.z.ok_or_else(|| Stated::missing("z"))?;
            if entries.is_empty() {
                return Err(Stated::shape("cond_joint needs at least one z entry"));
            }
            let weights = Pmf::new(
                entries.iter().map(|e| (e.label.clone(), e.weight)).collect(),
            )?;
            let joints = entries
                .into_iter()
                .map(|e| JointPmf::new(file.x_labels.clone(), file.y_labels.clone(), e.p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Distribution::CondJoint(CondJointPmf::new(weights, joints)?))
        }
        other => Err(Stated::shape(&format!(
            "unknown kind {other:?}; expected joint, channel or cond_joint"
        ))),
    }
}

pub fn load_distribution(path: &Path) -> Result<Distribution, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_distribution(&text)
}

// small constructor helpers so error sites stay one-liners
struct Stated;
impl Stated {
    fn missing(field: &str) -> IoError {
        IoError::Shape(format!("missing field {field:?} for this kind"))
    }
    fn shape(msg: &str) -> IoError {
        IoError::Shape(msg.to_string())
    }
}
