//! TOML run configuration. Every field is optional in the file; command-line
//! flags override whatever the file sets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stfgacn::experiment::{AblationVariant, ExperimentSetup, Scale, TrainConfig};
use stfgacn::sim::{validate_radars, AircraftProfile, RadarConfig, SimConfig, Snr};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scale: Scale,
    pub jobs: usize,
    /// SNR for `simulate` and `ablate`.
    pub snr_db: Snr,
    pub count_per_class: Option<usize>,
    pub hidden: Option<usize>,
    pub decoder_channels: Option<usize>,
    /// Variant for `train`.
    pub variant: AblationVariant,
    /// Radar read by a single-radar variant in `train`.
    pub radar: usize,
    /// Variants for `ablate` and `sweep`.
    pub variants: Vec<AblationVariant>,
    pub sweep: SweepGrid,
    pub train: TrainOverrides,
    pub sim: SimConfig,
    pub radars: Option<Vec<RadarConfig>>,
    pub profiles: Option<Vec<AircraftProfile>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scale: Scale::Desk,
            jobs: 1,
            snr_db: Snr::Db(10.0),
            count_per_class: None,
            hidden: None,
            decoder_channels: None,
            variant: AblationVariant::Stfgacn2F,
            radar: 0,
            variants: AblationVariant::ALL.to_vec(),
            sweep: SweepGrid::default(),
            train: TrainOverrides::default(),
            sim: SimConfig::default(),
            radars: None,
            profiles: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub snr_db: Vec<Snr>,
    pub seeds: Vec<u64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            snr_db: [-10.0, -5.0, 0.0, 5.0, 10.0].into_iter().map(Snr::Db).collect(),
            seeds: vec![1, 2, 3],
        }
    }
}

/// Training fields left unset fall back to the scale defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverrides {
    pub batch_size: Option<usize>,
    pub initial_lr: Option<f64>,
    pub step_decay: Option<f64>,
    pub decay_period: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
}

impl TrainOverrides {
    fn apply(&self, cfg: &mut TrainConfig) {
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.initial_lr {
            cfg.initial_lr = v;
        }
        if let Some(v) = self.step_decay {
            cfg.step_decay = v;
        }
        if let Some(v) = self.decay_period {
            cfg.decay_period = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = self.patience {
            cfg.patience = v;
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Resolves scale defaults and overrides into a validated setup.
    pub fn setup(&self) -> Result<ExperimentSetup, Failure> {
        let mut s = ExperimentSetup::at_scale(self.scale);
        s.sim = self.sim.clone();
        if let Some(r) = &self.radars {
            s.radars = r.clone();
        }
        if let Some(p) = &self.profiles {
            s.profiles = p.clone();
        }
        if let Some(v) = self.count_per_class {
            s.count_per_class = v;
        }
        if let Some(v) = self.hidden {
            s.hidden = v;
        }
        if let Some(v) = self.decoder_channels {
            s.decoder_channels = v;
        }
        self.train.apply(&mut s.train);
        s.train.seed = self.seed;

        let bad = |e: stfgacn::Error| Failure::usage(e.to_string());
        s.sim.validate().map_err(bad)?;
        validate_radars(&s.radars).map_err(bad)?;
        for p in &s.profiles {
            p.validate(s.sim.sample_rate).map_err(bad)?;
        }
        s.train.validate().map_err(bad)?;
        if s.count_per_class == 0 || s.hidden == 0 || s.decoder_channels == 0 {
            return Err(Failure::usage("count_per_class, hidden and decoder_channels must be positive"));
        }
        if self.jobs == 0 {
            return Err(Failure::usage("jobs must be at least 1"));
        }
        Ok(s)
    }
}
