//! Radar/aircraft geometry: body-frame displacement and line-of-sight angles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::seeds::{derive_seed, TAG_LOS};
use super::RadarConfig;
use crate::{Error, Result, Scalar};

pub type Vec3<T = f64> = [T; 3];
pub type Mat3<T = f64> = [[T; 3]; 3];

/// Aircraft attitude in radians; yaw about Z, pitch about Y, roll about X.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Attitude<T = f64> {
    pub yaw: T,
    pub pitch: T,
    pub roll: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryState<T = f64> {
    pub time: T,
    pub position: Vec3<T>,
    pub attitude: Attitude<T>,
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let pi = T::lit(std::f64::consts::PI);
    let two_pi = pi + pi;
    let mut w = a % two_pi;
    if w <= -pi {
        w += two_pi;
    } else if w > pi {
        w -= two_pi;
    }
    w
}

/// Rotation about X: `[1 0 0; 0 c s; 0 -s c]`.
pub fn rot_x<T: Scalar>(a: T) -> Mat3<T> {
    let (s, c) = a.sin_cos();
    let (o, l) = (T::zero(), T::one());
    [[l, o, o], [o, c, s], [o, -s, c]]
}

/// Rotation about Y: `[c 0 -s; 0 1 0; s 0 c]`.
pub fn rot_y<T: Scalar>(a: T) -> Mat3<T> {
    let (s, c) = a.sin_cos();
    let (o, l) = (T::zero(), T::one());
    [[c, o, -s], [o, l, o], [s, o, c]]
}

/// Rotation about Z: `[c s 0; -s c 0; 0 0 1]`.
pub fn rot_z<T: Scalar>(a: T) -> Mat3<T> {
    let (s, c) = a.sin_cos();
    let (o, l) = (T::zero(), T::one());
    [[c, s, o], [-s, c, o], [o, o, l]]
}

pub fn mat_mul<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec<T: Scalar>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn norm<T: Scalar>(v: &Vec3<T>) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Body-frame rotation `Rx(roll) * Ry(pitch) * Rz(yaw)`.
pub fn attitude_matrix<T: Scalar>(att: &Attitude<T>) -> Mat3<T> {
    mat_mul(&mat_mul(&rot_x(att.roll), &rot_y(att.pitch)), &rot_z(att.yaw))
}

/// Radar position relative to the aircraft, expressed in the aircraft body frame.
pub fn relative_coordinates<T: Scalar>(radar_pos: &Vec3<T>, state: &TrajectoryState<T>) -> Vec3<T> {
    let d = [
        radar_pos[0] - state.position[0],
        radar_pos[1] - state.position[1],
        radar_pos[2] - state.position[2],
    ];
    mat_vec(&attitude_matrix(&state.attitude), &d)
}

pub fn relative_to_radar(radar: &RadarConfig, state: &TrajectoryState) -> Vec3 {
    relative_coordinates(&radar.position, state)
}

/// Angular jitter on the line of sight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LosNoiseModel {
    /// Correlation coefficient in [0, 1].
    pub rho: f64,
    pub sigma_phi: f64,
    pub sigma_theta: f64,
    pub rng_seed: u64,
}

impl LosNoiseModel {
    pub const DEFAULT_RHO: f64 = 0.95;
    pub const DEFAULT_SIGMA: f64 = 0.02;

    pub fn with_seed(rng_seed: u64) -> Self {
        Self {
            rho: Self::DEFAULT_RHO,
            sigma_phi: Self::DEFAULT_SIGMA,
            sigma_theta: Self::DEFAULT_SIGMA,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!("rho {} outside [0, 1]", self.rho)));
        }
        if !(self.sigma_phi >= 0.0 && self.sigma_theta >= 0.0) {
            return Err(Error::InvalidConfig("negative LOS sigma".into()));
        }
        Ok(())
    }

    /// Standard normal draw clipped to [-1, 1], a pure function of seed and time.
    pub fn jitter(&self, t: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.rng_seed, &[TAG_LOS, t.to_bits()]));
        let z: f64 = StandardNormal.sample(&mut rng);
        z.clamp(-1.0, 1.0)
    }
}

/// Line-of-sight angles `(theta, phi)` of the radar as seen from the aircraft.
///
/// `phi` uses `arccos(dy/dx)` and `theta` uses `arccos(dz/|d|)`, each blended
/// with the shared clipped-Gaussian jitter `w(t)`.
pub fn line_of_sight_angles(delta: &Vec3, noise: &LosNoiseModel, t: f64) -> Result<(f64, f64)> {
    let range = norm(delta);
    if range == 0.0 || !range.is_finite() {
        return Err(Error::DegenerateGeometry("zero range".into()));
    }
    let ratio = delta[1] / delta[0];
    if !(ratio.abs() <= 1.0) {
        return Err(Error::DegenerateGeometry(format!(
            "|dy/dx| = {:.4} exceeds 1 at t = {t}",
            ratio.abs()
        )));
    }
    let cos_theta = (delta[2] / range).clamp(-1.0, 1.0);
    let rho = noise.rho;
    let w = if rho < 1.0 { noise.jitter(t) } else { 0.0 };
    let spread = (1.0 - rho).sqrt();
    let phi = rho * ratio.acos() + spread * noise.sigma_phi * w;
    let theta = rho * cos_theta.acos() + spread * noise.sigma_theta * w;
    Ok((theta, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn state(att: Attitude, pos: Vec3) -> TrajectoryState {
        TrajectoryState {
            time: 0.0,
            position: pos,
            attitude: att,
        }
    }

    #[test]
    fn identity_attitude_is_plain_displacement() {
        let s = state(Attitude::default(), [0.0; 3]);
        assert_eq!(relative_coordinates(&[1000.0, 2000.0, 3000.0], &s), [1000.0, 2000.0, 3000.0]);
    }

    #[test]
    fn half_roll_flips_y() {
        let d = 750.0;
        let att = Attitude { yaw: 0.0, pitch: 0.0, roll: PI };
        let r = relative_coordinates(&[0.0, d, 0.0], &state(att, [0.0; 3]));
        assert!(r[0].abs() < 1e-9 && (r[1] + d).abs() < 1e-9 && r[2].abs() < 1e-9);
    }

    #[test]
    fn generic_over_f32() {
        let att = Attitude { yaw: 0.3f32, pitch: -0.1, roll: 0.2 };
        let s = TrajectoryState { time: 0.0f32, position: [0.0; 3], attitude: att };
        let r = relative_coordinates(&[3.0f32, 4.0, 12.0], &s);
        assert!((norm(&r) - 13.0).abs() < 1e-5);
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let a = k as f64 * 0.7;
            let w = wrap_angle(a);
            assert!(w > -PI && w <= PI);
            assert!(((a - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((a - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
        assert_eq!(wrap_angle(-PI), PI);
    }

    #[test]
    fn los_noiseless_values() {
        let n = LosNoiseModel { rho: 1.0, sigma_phi: 0.5, sigma_theta: 0.5, rng_seed: 3 };
        let (theta, phi) = line_of_sight_angles(&[10.0, 0.0, 0.0], &n, 0.0).unwrap();
        assert!((theta - FRAC_PI_2).abs() < 1e-15);
        assert!((phi - FRAC_PI_2).abs() < 1e-15);

        let d = 7.0;
        let (_, phi) = line_of_sight_angles(&[2f64.sqrt() * d, d, d], &n, 1.0).unwrap();
        assert!((phi - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn los_degenerate() {
        let n = LosNoiseModel::with_seed(0);
        assert!(matches!(
            line_of_sight_angles(&[1.0, 2.0, 0.0], &n, 0.0),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(matches!(
            line_of_sight_angles(&[0.0, 0.0, 0.0], &n, 0.0),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(matches!(
            line_of_sight_angles(&[0.0, 1.0, 1.0], &n, 0.0),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn jitter_is_reproducible_and_clipped() {
        let n = LosNoiseModel::with_seed(42);
        for k in 0..500 {
            let t = k as f64 * 0.05;
            let w = n.jitter(t);
            assert_eq!(w, n.jitter(t));
            assert!((-1.0..=1.0).contains(&w));
        }
        assert_ne!(n.jitter(0.05), LosNoiseModel::with_seed(43).jitter(0.05));
    }
}
