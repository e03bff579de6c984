//! Synthetic RCS time series for a heterogeneous radar network.
//!
//! Each radar observes the same aircraft along a straight, constant-altitude
//! pass. The body-frame line of sight drives a smooth, frequency-dependent
//! scattering pattern; the class-specific spin micro-motion modulates the
//! vertical aspect angle before the pattern lookup. Optional AWGN is injected
//! in the linear (m^2) domain and the result is reported in dBsm.

mod geometry;
pub mod io;
pub mod seeds;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use geometry::{
    attitude_matrix, line_of_sight_angles, mat_mul, mat_vec, norm, relative_coordinates,
    relative_to_radar, rot_x, rot_y, rot_z, wrap_angle, Attitude, LosNoiseModel, Mat3,
    TrajectoryState, Vec3,
};
use seeds::{derive_seed, TAG_AWGN, TAG_LOS, TAG_SAMPLE, TAG_TRAJECTORY};

use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub id: usize,
    /// Metres, radar coordinate frame.
    pub position: Vec3,
    /// Hz.
    pub carrier_frequency: f64,
    pub subnet_id: usize,
}

/// Checks the network-level radar invariants.
pub fn validate_radars(radars: &[RadarConfig]) -> Result<()> {
    if radars.is_empty() {
        return Err(Error::InvalidConfig("no radars".into()));
    }
    for (i, r) in radars.iter().enumerate() {
        if r.id != i {
            return Err(Error::InvalidConfig(format!("radar at index {i} has id {}", r.id)));
        }
        if !(r.carrier_frequency > 0.0) || r.position.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig(format!("radar {i} has invalid position or frequency")));
        }
        for q in &radars[..i] {
            let d = [
                r.position[0] - q.position[0],
                r.position[1] - q.position[1],
                r.position[2] - q.position[2],
            ];
            if norm(&d) <= 0.0 {
                return Err(Error::InvalidGeometry(format!("radars {} and {} coincide", q.id, r.id)));
            }
            if q.subnet_id == r.subnet_id && q.carrier_frequency != r.carrier_frequency {
                return Err(Error::InvalidConfig(format!(
                    "radars {} and {} share subnet {} but not carrier frequency",
                    q.id, r.id, r.subnet_id
                )));
            }
        }
    }
    Ok(())
}

/// Nine ground radars in two subnets: five at 6.25 GHz and four at 1.52 GHz.
pub fn default_radar_layout() -> Vec<RadarConfig> {
    const KM: f64 = 1000.0;
    let sites: [(f64, f64, usize); 9] = [
        (0.0, 0.0, 0),
        (15.0, 8.0, 0),
        (-12.0, 10.0, 0),
        (8.0, -14.0, 0),
        (-10.0, -9.0, 0),
        (25.0, -3.0, 1),
        (-22.0, 2.0, 1),
        (3.0, 22.0, 1),
        (-4.0, -24.0, 1),
    ];
    sites
        .iter()
        .enumerate()
        .map(|(id, &(x, y, subnet))| RadarConfig {
            id,
            position: [x * KM, y * KM, 0.0],
            carrier_frequency: if subnet == 0 { 6.25e9 } else { 1.52e9 },
            subnet_id: subnet,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AircraftProfile {
    pub class_label: u8,
    /// Mass-trajectory speed, m/s.
    pub speed: f64,
    /// Micro-motion frequencies, Hz.
    pub micro_f1: f64,
    pub micro_f2: f64,
    /// Aspect-angle modulation depths, rad.
    pub micro_amp1: f64,
    pub micro_amp2: f64,
    pub base_rcs_dbsm: f64,
}

impl AircraftProfile {
    pub const SPEED: f64 = 5000.0;
    pub const AMP1: f64 = 0.05;
    pub const AMP2: f64 = 0.02;
    pub const BASE_RCS_DBSM: f64 = 10.0;

    pub fn type1() -> Self {
        Self {
            class_label: 0,
            speed: Self::SPEED,
            micro_f1: 0.64,
            micro_f2: 1.67,
            micro_amp1: Self::AMP1,
            micro_amp2: Self::AMP2,
            base_rcs_dbsm: Self::BASE_RCS_DBSM,
        }
    }

    pub fn type2() -> Self {
        Self {
            class_label: 1,
            micro_f1: 2.75,
            micro_f2: 8.72,
            ..Self::type1()
        }
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::type1(), Self::type2()]
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        if self.class_label > 1 {
            return Err(Error::InvalidConfig(format!("class label {} not in {{0, 1}}", self.class_label)));
        }
        if !(self.speed > 0.0) {
            return Err(Error::InvalidConfig("aircraft speed must be positive".into()));
        }
        if !(self.micro_f1 < self.micro_f2 && self.micro_f2 < nyquist && self.micro_f1 >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "micro-motion frequencies {} / {} Hz must be increasing and below Nyquist {nyquist} Hz",
                self.micro_f1, self.micro_f2
            )));
        }
        Ok(())
    }
}

/// Spin micro-motion added to the vertical aspect angle.
pub fn micro_motion_aspect(profile: &AircraftProfile, t: f64) -> f64 {
    profile.micro_amp1 * (2.0 * PI * profile.micro_f1 * t).sin()
        + profile.micro_amp2 * (2.0 * PI * profile.micro_f2 * t).sin()
}

/// Coefficients of the surrogate scattering pattern (dB terms and electrical length in m).
///
/// ```text
/// rcs(theta, phi, fc) = base
///     + a * (cos 2theta - cos 2theta_ref)
///     + b * (cos 2phi   - cos 2phi_ref)
///     + c * (sin(k + theta) - sin(k + theta_ref)),   k = 2 pi fc L / c0
/// ```
///
/// The reference (broadside) angles are `theta_ref = phi_ref = pi/2`, where
/// the pattern is exactly `base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcsPattern {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub electrical_length: f64,
}

impl Default for RcsPattern {
    fn default() -> Self {
        Self {
            a: 3.0,
            b: 6.0,
            c: 100.0,
            electrical_length: 0.23,
        }
    }
}

impl RcsPattern {
    pub const REFERENCE_ANGLE: f64 = PI / 2.0;

    pub fn electrical_phase(&self, fc: f64) -> f64 {
        2.0 * PI * fc * self.electrical_length / SPEED_OF_LIGHT
    }

    /// Pattern gain relative to `base`, in dB.
    pub fn gain_db(&self, theta: f64, phi: f64, fc: f64) -> f64 {
        let r = Self::REFERENCE_ANGLE;
        let k = self.electrical_phase(fc);
        self.a * ((2.0 * theta).cos() - (2.0 * r).cos())
            + self.b * ((2.0 * phi).cos() - (2.0 * r).cos())
            + self.c * ((k + theta).sin() - (k + r).sin())
    }
}

pub fn surrogate_rcs(theta: f64, phi: f64, fc: f64, profile: &AircraftProfile, pattern: &RcsPattern) -> f64 {
    profile.base_rcs_dbsm + pattern.gain_db(theta, phi, fc)
}

/// Target SNR for a segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Snr {
    Clean,
    Db(f64),
}

impl Snr {
    pub fn db(&self) -> Option<f64> {
        match self {
            Snr::Clean => None,
            Snr::Db(v) => Some(*v),
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Clean => f.write_str("clean"),
            Snr::Db(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Snr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("clean") {
            return Ok(Snr::Clean);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Snr::Db(v)),
            _ => Err(Error::InvalidConfig(format!("bad SNR '{s}' (expected dB value or 'clean')"))),
        }
    }
}

impl Serialize for Snr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Snr::Clean => s.serialize_str("clean"),
            Snr::Db(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Snr::Db(v)),
            Repr::Int(v) => Ok(Snr::Db(v as f64)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RcsSegment {
    pub radar_id: usize,
    pub class_label: u8,
    pub snr: Snr,
    /// dBsm.
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub segment_id: usize,
}

/// Simulation constants shared by every segment of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub sample_rate: f64,
    /// Metres.
    pub altitude: f64,
    /// Range band (m) from the aim point at which a pass starts.
    pub start_range_min: f64,
    pub start_range_max: f64,
    /// Maximum lateral miss distance (m) of the pass from the aim point.
    pub max_lateral_offset: f64,
    /// Horizontal aim point (m) of every pass.
    pub aim_point: [f64; 2],
    pub pattern: RcsPattern,
    pub rho: f64,
    pub sigma_phi: f64,
    pub sigma_theta: f64,
    /// Noisy magnitudes are floored this many dB below the profile base RCS.
    pub noise_floor_below_base_db: f64,
    /// Additional trajectory draws after a degenerate pass.
    pub max_resamples: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 10.0,
            sample_rate: 20.0,
            altitude: 10_000.0,
            start_range_min: 120_000.0,
            start_range_max: 160_000.0,
            max_lateral_offset: 5_000.0,
            aim_point: [0.0, 0.0],
            pattern: RcsPattern::default(),
            rho: LosNoiseModel::DEFAULT_RHO,
            sigma_phi: LosNoiseModel::DEFAULT_SIGMA,
            sigma_theta: LosNoiseModel::DEFAULT_SIGMA,
            noise_floor_below_base_db: 10.0,
            max_resamples: 8,
        }
    }
}

impl SimConfig {
    /// Samples per segment; `duration * sample_rate` must be a whole number.
    pub fn samples_per_segment(&self) -> Result<usize> {
        let k = self.duration * self.sample_rate;
        if !(k >= 1.0) || (k - k.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "duration {} s at {} Hz does not give a whole sample count",
                self.duration, self.sample_rate
            )));
        }
        Ok(k.round() as usize)
    }

    pub fn los_noise(&self, rng_seed: u64) -> LosNoiseModel {
        LosNoiseModel {
            rho: self.rho,
            sigma_phi: self.sigma_phi,
            sigma_theta: self.sigma_theta,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.samples_per_segment()?;
        self.los_noise(0).validate()?;
        if !(self.start_range_min > 0.0 && self.start_range_max >= self.start_range_min) {
            return Err(Error::InvalidConfig("bad start range band".into()));
        }
        if !(self.max_lateral_offset >= 0.0) {
            return Err(Error::InvalidConfig("negative lateral offset".into()));
        }
        Ok(())
    }
}

/// Straight constant-altitude pass; attitude follows the heading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trajectory {
    pub start: Vec3,
    pub heading: f64,
    pub speed: f64,
}

impl Trajectory {
    /// Random heading, range and lateral offset towards the configured aim point.
    pub fn from_seed(seed: u64, speed: f64, cfg: &SimConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let heading = rng.gen_range(-PI..PI);
        let range = rng.gen_range(cfg.start_range_min..=cfg.start_range_max);
        let lateral = if cfg.max_lateral_offset > 0.0 {
            rng.gen_range(-cfg.max_lateral_offset..=cfg.max_lateral_offset)
        } else {
            0.0
        };
        let (s, c) = heading.sin_cos();
        let start = [
            cfg.aim_point[0] - range * c - lateral * s,
            cfg.aim_point[1] - range * s + lateral * c,
            cfg.altitude,
        ];
        Self { start, heading, speed }
    }

    pub fn state_at(&self, t: f64) -> TrajectoryState {
        let (s, c) = self.heading.sin_cos();
        let d = self.speed * t;
        TrajectoryState {
            time: t,
            position: [self.start[0] + d * c, self.start[1] + d * s, self.start[2]],
            attitude: Attitude {
                yaw: wrap_angle(self.heading),
                pitch: 0.0,
                roll: 0.0,
            },
        }
    }
}

/// Noiseless dBsm samples of one radar along a trajectory.
pub fn clean_samples(
    radar: &RadarConfig,
    profile: &AircraftProfile,
    trajectory: &Trajectory,
    noise: &LosNoiseModel,
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    let k = cfg.samples_per_segment()?;
    (0..k)
        .map(|i| {
            let t = i as f64 / cfg.sample_rate;
            let delta = relative_to_radar(radar, &trajectory.state_at(t));
            let (theta, phi) = line_of_sight_angles(&delta, noise, t)?;
            let theta = theta + micro_motion_aspect(profile, t);
            Ok(surrogate_rcs(theta, phi, radar.carrier_frequency, profile, &cfg.pattern))
        })
        .collect()
}

/// Adds white Gaussian noise in the linear domain at exactly the requested SNR
/// (the drawn noise vector is rescaled to the target power) and returns dBsm.
///
/// Signal power is the mean square of the linear RCS values.
pub fn add_awgn_db(clean_db: &[f64], snr_db: f64, seed: u64, floor_db: f64) -> Vec<f64> {
    let lin: Vec<f64> = clean_db.iter().map(|&v| db_to_linear(v)).collect();
    let noisy = add_awgn_linear(&lin, snr_db, seed);
    let floor = db_to_linear(floor_db);
    noisy.iter().map(|&y| linear_to_db(y.abs().max(floor))).collect()
}

/// Linear-domain AWGN with empirically exact noise power.
pub fn add_awgn_linear(signal: &[f64], snr_db: f64, seed: u64) -> Vec<f64> {
    let n = signal.len() as f64;
    let p_signal = signal.iter().map(|v| v * v).sum::<f64>() / n;
    let p_noise = p_signal / db_to_linear(snr_db);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = (0..signal.len()).map(|_| rng.sample(StandardNormal)).collect();
    let drawn = noise.iter().map(|v| v * v).sum::<f64>() / n;
    let scale = if drawn > 0.0 { (p_noise / drawn).sqrt() } else { 0.0 };
    for (e, s) in noise.iter_mut().zip(signal) {
        *e = s + *e * scale;
    }
    noise
}

/// One radar's segment for the pass drawn from `trajectory_seed`.
///
/// LOS jitter and AWGN are both derived from `noise.rng_seed`.
pub fn generate_segment(
    radar: &RadarConfig,
    profile: &AircraftProfile,
    trajectory_seed: u64,
    noise: &LosNoiseModel,
    snr: Snr,
    cfg: &SimConfig,
) -> Result<RcsSegment> {
    let trajectory = Trajectory::from_seed(trajectory_seed, profile.speed, cfg);
    segment_on(radar, profile, &trajectory, noise, snr, cfg, 0)
}

fn segment_on(
    radar: &RadarConfig,
    profile: &AircraftProfile,
    trajectory: &Trajectory,
    noise: &LosNoiseModel,
    snr: Snr,
    cfg: &SimConfig,
    segment_id: usize,
) -> Result<RcsSegment> {
    let clean = clean_samples(radar, profile, trajectory, noise, cfg)?;
    let samples = match snr {
        Snr::Clean => clean,
        Snr::Db(db) => {
            if !db.is_finite() {
                return Err(Error::InvalidConfig(format!("non-finite SNR {db}")));
            }
            let floor = profile.base_rcs_dbsm - cfg.noise_floor_below_base_db;
            add_awgn_db(&clean, db, derive_seed(noise.rng_seed, &[TAG_AWGN]), floor)
        }
    };
    Ok(RcsSegment {
        radar_id: radar.id,
        class_label: profile.class_label,
        snr,
        samples,
        sample_rate: cfg.sample_rate,
        segment_id,
    })
}

/// Synchronised segments of every radar for one pass; the unit of classification
/// before normalisation.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSample {
    pub sample_id: usize,
    pub label: u8,
    pub snr: Snr,
    /// One segment per radar, ordered by radar id.
    pub segments: Vec<RcsSegment>,
}

/// Generates `count_per_class` passes per profile, each observed by every radar.
///
/// Sample ids run class-major (`class * count + j`) and segment ids are
/// `sample_id * N + radar_id`. Degenerate passes are redrawn up to
/// `cfg.max_resamples` times.
pub fn generate_dataset(
    radars: &[RadarConfig],
    profiles: &[AircraftProfile],
    count_per_class: usize,
    snr: Snr,
    master_seed: u64,
    cfg: &SimConfig,
) -> Result<Vec<RawSample>> {
    if count_per_class == 0 {
        return Err(Error::InvalidConfig("count_per_class must be at least 1".into()));
    }
    cfg.validate()?;
    validate_radars(radars)?;
    for p in profiles {
        p.validate(cfg.sample_rate)?;
    }
    let n = radars.len();
    let jobs: Vec<(usize, usize)> = (0..profiles.len())
        .flat_map(|c| (0..count_per_class).map(move |j| (c, j)))
        .collect();
    jobs.par_iter()
        .map(|&(c, j)| {
            let profile = &profiles[c];
            let sample_id = c * count_per_class + j;
            let sample_seed = derive_seed(master_seed, &[TAG_SAMPLE, c as u64, j as u64]);
            let mut last_err = None;
            for attempt in 0..=cfg.max_resamples {
                let traj_seed = derive_seed(sample_seed, &[TAG_TRAJECTORY, attempt as u64]);
                let trajectory = Trajectory::from_seed(traj_seed, profile.speed, cfg);
                let segments: Result<Vec<_>> = radars
                    .iter()
                    .map(|r| {
                        let los = cfg.los_noise(derive_seed(sample_seed, &[TAG_LOS, r.id as u64]));
                        segment_on(r, profile, &trajectory, &los, snr, cfg, sample_id * n + r.id)
                    })
                    .collect();
                match segments {
                    Ok(segments) => {
                        return Ok(RawSample {
                            sample_id,
                            label: profile.class_label,
                            snr,
                            segments,
                        })
                    }
                    Err(e @ Error::DegenerateGeometry(_)) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last_err.expect("at least one attempt"))
        })
        .collect()
}
