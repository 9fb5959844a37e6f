//! TOML run configuration. Every key is optional and defaults to the
//! library default; `waysign config` prints the full file. Flags given on
//! the command line override the file.
//!
//! Sections: `[filter]`, `[episode]`, `[extract]`, `[align]`, `[stitch]`,
//! `[osm]`. Unknown sections or keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use waysign_core::align::RegistrationConfig;
use waysign_core::extract::ExtractConfig;
use waysign_core::graph::DEFAULT_FLOOR_HEIGHT;
use waysign_core::mcl::{FilterConfig, FilterMode, Kernel, MotionProbs, OdomNoise};
use waysign_core::sim::{EpisodeConfig, NoiseConfig};
use waysign_core::stitch::StitchConfig;

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub filter: FilterSection,
    pub episode: EpisodeSection,
    pub extract: ExtractSection,
    pub align: AlignSection,
    pub stitch: StitchSection,
    pub osm: OsmSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub num_particles: usize,
    /// `topological` or `topometric`.
    pub mode: String,
    pub top_k: usize,
    pub min_match_score: f64,
    /// `aligned` or `literal`.
    pub kernel: String,
    pub weight_floor: f64,
    pub ess_fraction: f64,
    pub mixture_alpha: f64,
    pub heading_noise_sigma: f64,
    pub p_correct: f64,
    pub p_stay: f64,
    pub p_random: f64,
    pub odom_rot_from_rot: f64,
    pub odom_rot_from_trans: f64,
    pub odom_trans_from_trans: f64,
    pub odom_trans_from_rot: f64,
    pub snap_radius: f64,
    pub off_graph_penalty: f64,
    pub position_jitter_sigma: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        let c = FilterConfig::default();
        Self {
            num_particles: c.num_particles,
            mode: "topological".into(),
            top_k: c.top_k,
            min_match_score: c.min_match_score,
            kernel: "aligned".into(),
            weight_floor: c.weight_floor,
            ess_fraction: c.ess_fraction,
            mixture_alpha: c.mixture_alpha,
            heading_noise_sigma: c.heading_noise_sigma,
            p_correct: c.motion.p_correct,
            p_stay: c.motion.p_stay,
            p_random: c.motion.p_random,
            odom_rot_from_rot: c.odom_noise.rot_from_rot,
            odom_rot_from_trans: c.odom_noise.rot_from_trans,
            odom_trans_from_trans: c.odom_noise.trans_from_trans,
            odom_trans_from_rot: c.odom_noise.trans_from_rot,
            snap_radius: c.snap_radius,
            off_graph_penalty: c.off_graph_penalty,
            position_jitter_sigma: c.position_jitter_sigma,
        }
    }
}

impl FilterSection {
    pub fn to_config(&self) -> Result<FilterConfig> {
        let mode = match self.mode.as_str() {
            "topological" => FilterMode::Topological,
            "topometric" => FilterMode::Topometric,
            m => return Err(Error::format("filter.mode", format!("expected topological or topometric, got `{m}`"))),
        };
        let kernel = match self.kernel.as_str() {
            "aligned" => Kernel::Aligned,
            "literal" => Kernel::Literal,
            k => return Err(Error::format("filter.kernel", format!("expected aligned or literal, got `{k}`"))),
        };
        let c = FilterConfig {
            num_particles: self.num_particles,
            mode,
            top_k: self.top_k,
            min_match_score: self.min_match_score,
            kernel,
            weight_floor: self.weight_floor,
            ess_fraction: self.ess_fraction,
            mixture_alpha: self.mixture_alpha,
            heading_noise_sigma: self.heading_noise_sigma,
            motion: MotionProbs {
                p_correct: self.p_correct,
                p_stay: self.p_stay,
                p_random: self.p_random,
            },
            odom_noise: OdomNoise {
                rot_from_rot: self.odom_rot_from_rot,
                rot_from_trans: self.odom_rot_from_trans,
                trans_from_trans: self.odom_trans_from_trans,
                trans_from_rot: self.odom_trans_from_rot,
            },
            snap_radius: self.snap_radius,
            off_graph_penalty: self.off_graph_penalty,
            position_jitter_sigma: self.position_jitter_sigma,
        };
        c.validate().map_err(|e| Error::format("[filter]", e))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSection {
    pub num_signs: usize,
    pub steps: usize,
    pub min_gap: usize,
    pub cues_per_sign: usize,
    pub target_pool: usize,
    pub junction_signs: bool,
    pub dir_temp: f64,
    pub label_typo_prob: f64,
    pub distractor_prob: f64,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        let c = EpisodeConfig::default();
        Self {
            num_signs: c.num_signs,
            steps: c.steps,
            min_gap: c.min_gap,
            cues_per_sign: c.cues_per_sign,
            target_pool: c.target_pool,
            junction_signs: c.junction_signs,
            dir_temp: c.noise.dir_temp,
            label_typo_prob: c.noise.label_typo_prob,
            distractor_prob: c.noise.distractor_prob,
        }
    }
}

impl EpisodeSection {
    pub fn to_config(&self) -> Result<EpisodeConfig> {
        let noise = NoiseConfig {
            dir_temp: self.dir_temp,
            label_typo_prob: self.label_typo_prob,
            distractor_prob: self.distractor_prob,
        };
        noise.validate().map_err(|e| Error::format("[episode]", e))?;
        Ok(EpisodeConfig {
            num_signs: self.num_signs,
            steps: self.steps,
            min_gap: self.min_gap,
            cues_per_sign: self.cues_per_sign,
            target_pool: self.target_pool,
            junction_signs: self.junction_signs,
            noise,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub conn_threshold: usize,
    pub merge_radius: f64,
    pub spur_len: f64,
    pub dp_tol: f64,
    pub portal_snap: f64,
    pub door_gap: usize,
    pub min_area: f64,
    pub densify: f64,
}

impl Default for ExtractSection {
    fn default() -> Self {
        let c = ExtractConfig::default();
        Self {
            conn_threshold: c.conn_threshold,
            merge_radius: c.merge_radius,
            spur_len: c.spur_len,
            dp_tol: c.dp_tol,
            portal_snap: c.portal_snap,
            door_gap: c.door_gap,
            min_area: c.min_area,
            densify: c.densify,
        }
    }
}

impl ExtractSection {
    pub fn to_config(&self) -> Result<ExtractConfig> {
        let c = ExtractConfig {
            conn_threshold: self.conn_threshold,
            merge_radius: self.merge_radius,
            spur_len: self.spur_len,
            dp_tol: self.dp_tol,
            portal_snap: self.portal_snap,
            door_gap: self.door_gap,
            min_area: self.min_area,
            densify: self.densify,
        };
        c.validate().map_err(|e| Error::format("[extract]", e))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignSection {
    pub iou_res: usize,
    pub min_iou: f64,
    pub coarse_step_deg: f64,
    pub seeds: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Vertical spacing of floors, meters.
    pub floor_height: f64,
}

impl Default for AlignSection {
    fn default() -> Self {
        let c = RegistrationConfig::default();
        Self {
            iou_res: c.iou_res,
            min_iou: c.min_iou,
            coarse_step_deg: c.coarse_step_deg,
            seeds: c.seeds,
            max_iter: c.max_iter,
            tol: c.tol,
            floor_height: DEFAULT_FLOOR_HEIGHT,
        }
    }
}

impl AlignSection {
    pub fn to_config(&self) -> RegistrationConfig {
        RegistrationConfig {
            iou_res: self.iou_res,
            min_iou: self.min_iou,
            coarse_step_deg: self.coarse_step_deg,
            seeds: self.seeds,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StitchSection {
    pub entrance_snap: f64,
    pub portal_stack_radius: f64,
}

impl Default for StitchSection {
    fn default() -> Self {
        let c = StitchConfig::default();
        Self {
            entrance_snap: c.entrance_snap,
            portal_stack_radius: c.portal_stack_radius,
        }
    }
}

impl StitchSection {
    pub fn to_config(&self) -> StitchConfig {
        StitchConfig {
            entrance_snap: self.entrance_snap,
            portal_stack_radius: self.portal_stack_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OsmSection {
    /// Douglas–Peucker tolerance for collapsing way chains, meters.
    pub dp_tol: f64,
}

impl Default for OsmSection {
    fn default() -> Self {
        Self {
            dp_tol: ExtractConfig::default().dp_tol,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format("config", e.message()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::from_toml(&error::read_to_string(p)?)
                .map_err(|e| Error::format(p.display().to_string(), e)),
        }
    }
}
