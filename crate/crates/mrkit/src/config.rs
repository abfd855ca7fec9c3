//! Runtime configuration shared by the CLI commands.
//!
//! A config file is optional JSON with the same field names; command-line
//! flags override file values, which override the defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::AnchorLevel;
use crate::error::{Error, Result};
use crate::losses::{LossWeights, MAX_GRADE};
use crate::metrics::default_map_thresholds;
use crate::saliency::GateAxis;

/// One anchor level expressed in clip units; the stride in seconds is
/// `stride_clips * clip_len` of the video being processed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorLevelConfig {
    pub stride_clips: f64,
    pub width_multiplier: f64,
}

impl AnchorLevelConfig {
    pub fn to_level(&self, clip_len: f64) -> AnchorLevel {
        AnchorLevel {
            stride: self.stride_clips * clip_len,
            width_multiplier: self.width_multiplier,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Hidden width used when synthesizing weights; inference always derives
    /// its dimensions from the weights manifest.
    pub hidden_dim: usize,
    pub pooling_layers: usize,
    pub cross_modal_layers: usize,
    pub encoder_layers: usize,
    /// Which axis the saliency gate indexes in cross attention.
    pub gate_axis: GateAxis,
    /// Exponent balancing classification vs localization confidence.
    pub confidence_alpha: f64,
    /// IoU at which detections join a fusion cluster.
    pub wbf_iou_threshold: f64,
    pub anchor_levels: Vec<AnchorLevelConfig>,
    /// Candidates per level in positive-anchor selection.
    pub atss_top_k: usize,
    pub loss_weights: LossWeights,
    pub r1_iou_thresholds: Vec<f64>,
    pub map_iou_thresholds: Vec<f64>,
    /// Grade at and above which a clip counts as a highlight positive.
    pub grade_threshold: u8,
    /// Shortest clip run kept as an annotation window.
    pub min_run: usize,
    pub ranking_margin: f64,
    pub contrastive_temperature: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            hidden_dim: 256,
            pooling_layers: 2,
            cross_modal_layers: 2,
            encoder_layers: 3,
            gate_axis: GateAxis::Video,
            confidence_alpha: 0.5,
            wbf_iou_threshold: 0.7,
            anchor_levels: vec![
                AnchorLevelConfig {
                    stride_clips: 1.0,
                    width_multiplier: 4.0,
                },
                AnchorLevelConfig {
                    stride_clips: 2.0,
                    width_multiplier: 4.0,
                },
                AnchorLevelConfig {
                    stride_clips: 4.0,
                    width_multiplier: 4.0,
                },
            ],
            atss_top_k: 9,
            loss_weights: LossWeights::default(),
            r1_iou_thresholds: vec![0.5, 0.7],
            map_iou_thresholds: default_map_thresholds(),
            grade_threshold: 4,
            min_run: 1,
            ranking_margin: 0.2,
            contrastive_temperature: 0.5,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Config = serde_json::from_str(&text)
            .map_err(|e| Error::schema(path.display().to_string(), e.line(), e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::invalid("Config", msg));
        if self.hidden_dim == 0 || self.pooling_layers == 0 || self.cross_modal_layers == 0 {
            return invalid("hidden_dim and layer counts must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.confidence_alpha) {
            return invalid(format!(
                "confidence_alpha must lie in [0, 1], got {}",
                self.confidence_alpha
            ));
        }
        if !(self.wbf_iou_threshold > 0.0 && self.wbf_iou_threshold < 1.0) {
            return invalid(format!(
                "wbf_iou_threshold must lie in (0, 1), got {}",
                self.wbf_iou_threshold
            ));
        }
        if self.anchor_levels.is_empty() {
            return invalid("anchor_levels must not be empty".into());
        }
        for (i, level) in self.anchor_levels.iter().enumerate() {
            if !(level.stride_clips > 0.0 && level.stride_clips.is_finite())
                || !(level.width_multiplier > 0.0 && level.width_multiplier.is_finite())
            {
                return invalid(format!("anchor level {i} must have positive stride and width"));
            }
        }
        if self.atss_top_k == 0 {
            return invalid("atss_top_k must be at least 1".into());
        }
        self.loss_weights.validate()?;
        for (name, list) in [
            ("r1_iou_thresholds", &self.r1_iou_thresholds),
            ("map_iou_thresholds", &self.map_iou_thresholds),
        ] {
            if list.is_empty() {
                return invalid(format!("{name} must not be empty"));
            }
            if let Some(&t) = list.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
                return invalid(format!("{name} entries must lie in (0, 1], got {t}"));
            }
        }
        if self.grade_threshold == 0 || self.grade_threshold > MAX_GRADE {
            return invalid(format!(
                "grade_threshold must lie in 1..={MAX_GRADE}, got {}",
                self.grade_threshold
            ));
        }
        if self.min_run == 0 {
            return invalid("min_run must be at least 1".into());
        }
        if !(self.ranking_margin.is_finite() && self.ranking_margin >= 0.0) {
            return invalid(format!(
                "ranking_margin must be finite and >= 0, got {}",
                self.ranking_margin
            ));
        }
        if !(self.contrastive_temperature.is_finite() && self.contrastive_temperature > 0.0) {
            return invalid(format!(
                "contrastive_temperature must be positive, got {}",
                self.contrastive_temperature
            ));
        }
        Ok(())
    }
}
