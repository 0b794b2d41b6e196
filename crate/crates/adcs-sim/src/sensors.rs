//! Magnetometer and five-head sun-sensor measurement synthesis.
//!
//! The magnetometer chain applies two additive Gaussian draws to the model
//! field: environment noise first, then sensor noise. Sun measurements
//! perturb the true direction by a Gaussian angle about a uniformly random
//! axis perpendicular to it, and are valid only when the satellite is sunlit
//! and some head sees the Sun inside its field of view.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::math::Vec3;
use crate::quaternion::Quaternion;

/// Magnetometer noise model, tesla.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MagnetometerSpec {
    /// Environment (field-model) noise deviation.
    pub sigma_env_t: f64,
    /// Environment noise mean.
    pub mu_env_t: f64,
    /// Sensor noise deviation.
    pub sigma_mtm_t: f64,
    /// Sensor noise mean.
    pub mu_mtm_t: f64,
}

impl Default for MagnetometerSpec {
    fn default() -> Self {
        MagnetometerSpec {
            sigma_env_t: 2e-6,
            mu_env_t: 0.0,
            sigma_mtm_t: 1e-7,
            mu_mtm_t: 0.0,
        }
    }
}

impl MagnetometerSpec {
    /// Combined per-axis deviation of the full measurement chain.
    pub fn total_sigma(&self) -> f64 {
        (self.sigma_env_t.powi(2) + self.sigma_mtm_t.powi(2)).sqrt()
    }
}

/// Sun sensor head array, body frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SunSensorArraySpec {
    /// Unit boresights of the heads.
    pub boresights: Vec<Vec3>,
    pub fov_half_angle_rad: f64,
    /// Angular noise deviation, rad.
    pub sigma_ss_rad: f64,
}

impl Default for SunSensorArraySpec {
    /// Five heads on +x, −x, +y, −y, +z with 60° half-angle cones.
    fn default() -> Self {
        SunSensorArraySpec {
            boresights: vec![
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, -1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            fov_half_angle_rad: 60f64.to_radians(),
            sigma_ss_rad: 0.05f64.to_radians(),
        }
    }
}

/// One sensor sampling instant.
#[derive(Debug, Clone, Copy)]
pub struct SensorReadout {
    /// Environment field (model + environment noise), body frame, tesla.
    pub b_env: Vec3,
    /// Magnetometer output (environment + sensor noise), body frame, tesla.
    pub b_mtm: Vec3,
    pub sun_valid: bool,
    /// Measured unit Sun direction, body frame; meaningful only when valid.
    pub r_ss: Vec3,
    /// Index of the head that sees the Sun.
    pub active_sensor: Option<usize>,
}

/// Apply the two-stage magnetometer noise chain to a body-frame model field:
/// environment noise first, then sensor noise, each from its own stream.
/// Returns `(B_env, B_mtm)`.
pub fn measure_magnetic_field<R: Rng>(
    b_body_model: Vec3,
    spec: &MagnetometerSpec,
    rng_env: &mut R,
    rng_mtm: &mut R,
) -> (Vec3, Vec3) {
    let b_env = b_body_model + gaussian_vec(rng_env, spec.mu_env_t, spec.sigma_env_t);
    let b_mtm = b_env + gaussian_vec(rng_mtm, spec.mu_mtm_t, spec.sigma_mtm_t);
    (b_env, b_mtm)
}

fn gaussian_vec<R: Rng>(rng: &mut R, mu: f64, sigma: f64) -> Vec3 {
    if sigma == 0.0 && mu == 0.0 {
        return Vec3::ZERO;
    }
    let normal = Normal::new(mu, sigma).expect("finite noise parameters");
    Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng))
}

/// Incidence angle between a head boresight and the Sun, radians in [0, π].
pub fn sun_incidence(boresight: Vec3, sun_body: Vec3) -> f64 {
    boresight.dot(sun_body).clamp(-1.0, 1.0).acos()
}

/// Synthesize a sun-sensor reading from the true body-frame direction.
///
/// Head selection uses the true vector; the returned direction is the true
/// vector rotated by an angle drawn from N(0, σ_ss) about a uniformly random
/// axis perpendicular to it.
pub fn measure_sun<R: Rng>(
    sun_body_true: Vec3,
    sunlit: bool,
    spec: &SunSensorArraySpec,
    rng: &mut R,
) -> (bool, Vec3, Option<usize>) {
    // keep the rng stream aligned across lighting conditions
    let phase: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
    let angle = if spec.sigma_ss_rad == 0.0 {
        0.0
    } else {
        Normal::new(0.0, spec.sigma_ss_rad).expect("finite sigma").sample(rng)
    };
    if !sunlit {
        return (false, Vec3::ZERO, None);
    }
    let active = spec
        .boresights
        .iter()
        .enumerate()
        .map(|(i, b)| (i, sun_incidence(*b, sun_body_true)))
        .filter(|(_, inc)| *inc < spec.fov_half_angle_rad)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    let Some(active) = active else {
        return (false, Vec3::ZERO, None);
    };

    // orthonormal pair perpendicular to the sun vector
    let helper = if sun_body_true.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let e1 = sun_body_true.cross(helper).normalized().expect("unit sun vector");
    let e2 = sun_body_true.cross(e1);
    let axis = e1 * phase.cos() + e2 * phase.sin();
    let r_ss = Quaternion::from_axis_angle(axis, angle).rotate(sun_body_true);
    (true, r_ss.normalized().unwrap_or(sun_body_true), Some(active))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn noiseless_magnetometer_is_exact() {
        let spec = MagnetometerSpec {
            sigma_env_t: 0.0,
            mu_env_t: 0.0,
            sigma_mtm_t: 0.0,
            mu_mtm_t: 0.0,
        };
        let mut rng_env = ChaCha12Rng::seed_from_u64(1);
        let mut rng_mtm = ChaCha12Rng::seed_from_u64(2);
        let b = Vec3::new(2.1e-5, -0.4e-5, 1.3e-5);
        let (env, mtm) = measure_magnetic_field(b, &spec, &mut rng_env, &mut rng_mtm);
        assert_eq!(env, b);
        assert_eq!(mtm, b);
    }

    #[test]
    fn magnetometer_noise_std_combines_both_stages() {
        let spec = MagnetometerSpec::default();
        let expect = (2e-6f64.powi(2) + 1e-7f64.powi(2)).sqrt();
        assert_relative_eq!(spec.total_sigma(), expect, epsilon = 1e-20);

        let mut rng_env = ChaCha12Rng::seed_from_u64(99);
        let mut rng_mtm = ChaCha12Rng::seed_from_u64(100);
        let b = Vec3::new(3e-5, 0.0, -1e-5);
        let n = 100_000;
        let mut sum = Vec3::ZERO;
        let mut sum_sq = Vec3::ZERO;
        for _ in 0..n {
            let (_, mtm) = measure_magnetic_field(b, &spec, &mut rng_env, &mut rng_mtm);
            let e = mtm - b;
            sum += e;
            sum_sq += Vec3::new(e.x * e.x, e.y * e.y, e.z * e.z);
        }
        for (s, sq) in [(sum.x, sum_sq.x), (sum.y, sum_sq.y), (sum.z, sum_sq.z)] {
            let mean = s / n as f64;
            let std = (sq / n as f64 - mean * mean).sqrt();
            assert_relative_eq!(std, expect, max_relative = 0.02);
            // unbiased when the mean terms are zero
            assert!(mean.abs() < 3.0 * expect / (n as f64).sqrt() * 3.0);
        }
    }

    #[test]
    fn magnetometer_seed_reproducibility() {
        let spec = MagnetometerSpec::default();
        let b = Vec3::new(3e-5, 1e-5, 0.0);
        let mut a1 = ChaCha12Rng::seed_from_u64(5);
        let mut a2 = ChaCha12Rng::seed_from_u64(6);
        let mut c1 = ChaCha12Rng::seed_from_u64(5);
        let mut c2 = ChaCha12Rng::seed_from_u64(6);
        for _ in 0..50 {
            assert_eq!(
                measure_magnetic_field(b, &spec, &mut a1, &mut a2),
                measure_magnetic_field(b, &spec, &mut c1, &mut c2)
            );
        }
    }

    #[test]
    fn incidence_angles() {
        let b = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(sun_incidence(b, b), 0.0);
        assert_relative_eq!(
            sun_incidence(b, Vec3::new(0.0, 1.0, 0.0)),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-15
        );
        let forty = 40f64.to_radians();
        let sun = Vec3::new(forty.cos(), forty.sin(), 0.0);
        assert_relative_eq!(sun_incidence(b, sun), forty, epsilon = 1e-12);
    }

    #[test]
    fn eclipse_invalidates_sun_reading() {
        let spec = SunSensorArraySpec::default();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let (valid, _, active) =
            measure_sun(Vec3::new(0.0, 1.0, 0.0), false, &spec, &mut rng);
        assert!(!valid);
        assert!(active.is_none());
    }

    #[test]
    fn noiseless_in_fov_reading_is_exact() {
        let mut spec = SunSensorArraySpec::default();
        spec.sigma_ss_rad = 0.0;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let sun = Vec3::new(0.2, 0.9, 0.1).normalized().unwrap();
        let (valid, r, active) = measure_sun(sun, true, &spec, &mut rng);
        assert!(valid);
        assert_eq!(active, Some(2)); // +y head
        assert!((r - sun).norm() < 1e-15);
    }

    #[test]
    fn no_head_sees_the_sun_outside_fov() {
        let mut spec = SunSensorArraySpec::default();
        spec.fov_half_angle_rad = 30f64.to_radians();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        // down the −z axis: > 30° from every head (none points at −z)
        let (valid, _, _) = measure_sun(Vec3::new(0.0, 0.0, -1.0), true, &spec, &mut rng);
        assert!(!valid);
    }

    #[test]
    fn fov_validity_is_monotone() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for k in 0..200 {
            let a = k as f64 * 0.17;
            let sun = Vec3::new(a.sin(), (a * 0.7).cos(), (a * 1.3).sin())
                .normalized()
                .unwrap();
            let mut prev_valid = false;
            for fov_deg in [20.0, 40.0, 60.0, 80.0] {
                let spec = SunSensorArraySpec {
                    fov_half_angle_rad: (fov_deg as f64).to_radians(),
                    ..Default::default()
                };
                let (valid, _, _) = measure_sun(sun, true, &spec, &mut rng);
                assert!(!prev_valid || valid, "widening the FOV invalidated a reading");
                prev_valid = valid;
            }
        }
    }

    #[test]
    fn sun_noise_statistics() {
        let spec = SunSensorArraySpec {
            sigma_ss_rad: 0.5f64.to_radians(),
            ..Default::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let sun = Vec3::new(0.0, 1.0, 0.0);
        let n = 100_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let (valid, r, _) = measure_sun(sun, true, &spec, &mut rng);
            assert!(valid);
            assert!((r.norm() - 1.0).abs() < 1e-12);
            sum_sq += r.angle_to(sun).powi(2);
        }
        let std = (sum_sq / n as f64).sqrt();
        assert_relative_eq!(std, spec.sigma_ss_rad, max_relative = 0.03);
    }
}
