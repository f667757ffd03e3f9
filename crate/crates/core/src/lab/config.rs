use serde::{Deserialize, Serialize};

use super::LabError;
use crate::mission::{GripperModel, MissionConfig, ObjectSpec};
use crate::simsuite::{SimConfig, DEFAULT_CONFIG_TOML};
use crate::trajgen::SwoopParams;

/// Stand and object placement. The object rests on a square stand top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Height of the stand top above the floor, m.
    pub stand_top: f64,
    pub stand_half_extent: f64,
    pub object_x: f64,
    pub object_y: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            stand_top: 1.0,
            stand_half_extent: 0.1,
            object_x: 0.0,
            object_y: 0.0,
        }
    }
}

impl Scene {
    /// Object center, which is also the grasp point.
    pub fn object_center(&self, object: &ObjectSpec) -> [f64; 3] {
        [self.object_x, self.object_y, self.stand_top + object.height() / 2.0]
    }

    /// Height of the surface under `(x, y)`.
    pub fn surface_height(&self, x: f64, y: f64) -> f64 {
        let h = self.stand_half_extent;
        if (x - self.object_x).abs() <= h && (y - self.object_y).abs() <= h {
            self.stand_top
        } else {
            0.0
        }
    }
}

/// Everything a trial needs besides the object and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    #[serde(flatten)]
    pub sim: SimConfig,
    #[serde(default)]
    pub swoop: SwoopParams,
    #[serde(default)]
    pub gripper: GripperModel,
    #[serde(default)]
    pub scene: Scene,
    #[serde(default)]
    pub mission: MissionConfig,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CONFIG_TOML).expect("shipped config parses")
    }
}

impl LabConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        self.sim.validate()?;
        self.swoop.validate().map_err(|e| LabError::Config(e.to_string()))?;
        self.gripper.validate()?;
        let s = &self.scene;
        if !(s.stand_top > 0.0 && s.stand_half_extent > 0.0) {
            return Err(LabError::Config("stand dimensions must be positive".into()));
        }
        Ok(())
    }

    /// Noise-free copy: exact mocap, no latency, no lateral disturbance.
    pub fn noiseless(mut self) -> Self {
        self.sim = self.sim.noiseless();
        self
    }
}

/// Optional per-run overrides of the noise model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseOverrides {
    pub lateral_enabled: Option<bool>,
    pub lateral_bias_sigma: Option<f64>,
    pub lateral_ou_sigma: Option<f64>,
    pub mocap_sigma: Option<f64>,
    pub mocap_latency: Option<f64>,
    pub mocap_dropout: Option<f64>,
}

impl NoiseOverrides {
    pub fn apply(&self, cfg: &mut LabConfig) {
        let s = &mut cfg.sim;
        if let Some(v) = self.lateral_enabled {
            s.lateral.enabled = v;
        }
        if let Some(v) = self.lateral_bias_sigma {
            s.lateral.bias_sigma = v;
        }
        if let Some(v) = self.lateral_ou_sigma {
            s.lateral.ou_sigma = v;
        }
        if let Some(v) = self.mocap_sigma {
            s.mocap.position_noise_sigma = v;
        }
        if let Some(v) = self.mocap_latency {
            s.mocap.latency = v;
        }
        if let Some(v) = self.mocap_dropout {
            s.mocap.dropout_prob = v;
        }
    }
}

/// Default number of attempts per object.
pub const DEFAULT_ATTEMPTS: usize = 36;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub object: String,
    pub seed: u64,
    pub attempts: usize,
    pub noise: NoiseOverrides,
    pub lab: LabConfig,
    /// First bus domain; trial `i` uses `domain_base + i` (mod 233).
    pub domain_base: u32,
    /// Keep the JSONL records in the returned run.
    pub record_log: bool,
}

impl TrialConfig {
    pub fn new(object: impl Into<String>, seed: u64) -> Self {
        Self {
            object: object.into(),
            seed,
            attempts: DEFAULT_ATTEMPTS,
            noise: NoiseOverrides::default(),
            lab: LabConfig::default(),
            domain_base: 0,
            record_log: false,
        }
    }

    /// Lab config with the noise overrides applied.
    pub fn effective_lab(&self) -> Result<LabConfig, LabError> {
        if self.attempts == 0 {
            return Err(LabError::Config("attempts must be at least 1".into()));
        }
        let mut lab = self.lab.clone();
        self.noise.apply(&mut lab);
        lab.validate()?;
        Ok(lab)
    }
}
