//! JSON shapes of motion commands and sign observations, shared by the
//! command stream, episode logs and the bridge service.
//!
//! ```json
//! {"topo": 2}
//! {"odom": [dx, dy, dz, dtheta]}
//! {"t": 12.5, "cues": [{"label": "radiology", "dir_dist": [1,0,0,0,0,0,0,0]}], "gt_node": "b1f2n17"}
//! ```

use serde::{Deserialize, Serialize};
use waysign_core::cue::{NavCue, SignObservation};
use waysign_core::mcl::{MotionCommand, OdometryDelta};
use waysign_core::DirectionCategory;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum MotionJson {
    Topo(u8),
    Odom([f64; 4]),
}

impl MotionJson {
    pub fn to_command(self) -> Result<MotionCommand> {
        Ok(match self {
            MotionJson::Topo(d) => MotionCommand::Topo(DirectionCategory::new(d)?),
            MotionJson::Odom([dx, dy, dz, dtheta]) => {
                if ![dx, dy, dz, dtheta].iter().all(|v| v.is_finite()) {
                    return Err(Error::format("odom", "values must be finite"));
                }
                MotionCommand::Odometry(OdometryDelta { dx, dy, dz, dtheta })
            }
        })
    }

    pub fn from_command(c: &MotionCommand) -> Self {
        match *c {
            MotionCommand::Topo(d) => MotionJson::Topo(d.index() as u8),
            MotionCommand::Odometry(o) => MotionJson::Odom([o.dx, o.dy, o.dz, o.dtheta]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueJson {
    pub label: String,
    pub dir_dist: [f64; 8],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignJson {
    #[serde(default)]
    pub t: f64,
    pub cues: Vec<CueJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_node: Option<String>,
}

impl SignJson {
    pub fn to_observation(&self) -> Result<SignObservation> {
        let cues = self
            .cues
            .iter()
            .enumerate()
            .map(|(i, c)| NavCue::new(&c.label, c.dir_dist).map_err(|e| Error::format(format!("cues[{i}]"), e)))
            .collect::<Result<Vec<_>>>()?;
        let obs = SignObservation::new(cues, self.t)?;
        Ok(match &self.gt_node {
            Some(n) => obs.with_gt_node(n.clone()),
            None => obs,
        })
    }

    pub fn from_observation(o: &SignObservation) -> Self {
        Self {
            t: o.timestamp,
            cues: o
                .cues()
                .iter()
                .map(|c| CueJson {
                    label: c.label().to_owned(),
                    dir_dist: *c.direction_dist(),
                })
                .collect(),
            gt_node: o.gt_node.clone(),
        }
    }
}
