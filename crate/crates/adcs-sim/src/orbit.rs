//! Circular two-body orbit propagation and the orbital reference frame.
//!
//! The orbit is Keplerian circular (no J2, no drag): attitude is the subject
//! of this toolkit, not orbit determination.

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Vec3};
use crate::quaternion::Quaternion;
use crate::time::Epoch;
use crate::{Error, Result};

/// Earth gravitational parameter, m³/s².
pub const MU_EARTH: f64 = 3.986004418e14;
/// Equatorial Earth radius used for orbit sizing, m.
pub const R_EARTH_EQUATORIAL: f64 = 6_378_137.0;
/// Mean Earth radius used for the cylindrical shadow model, m.
pub const R_EARTH_MEAN: f64 = 6_371_000.0;

/// Circular orbit geometry and epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitConfig {
    /// Altitude above the equatorial radius, m.
    pub altitude_m: f64,
    /// Inclination, rad.
    pub inclination_rad: f64,
    /// Right ascension of the ascending node, rad.
    pub raan_rad: f64,
    /// Initial argument of latitude at the epoch, rad.
    pub u0_rad: f64,
    /// UTC epoch of t = 0.
    pub epoch: Epoch,
}

impl OrbitConfig {
    pub fn semi_major_axis(&self) -> f64 {
        R_EARTH_EQUATORIAL + self.altitude_m
    }

    /// Mean motion `sqrt(μ/a³)`, rad/s.
    pub fn mean_motion(&self) -> f64 {
        let a = self.semi_major_axis();
        (MU_EARTH / (a * a * a)).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.mean_motion()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_m > 0.0) {
            return Err(Error::Config("orbit altitude must be positive".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.inclination_rad) {
            return Err(Error::Config("inclination must lie in [0, π]".into()));
        }
        Ok(())
    }
}

/// Instantaneous orbit state in ECI.
#[derive(Debug, Clone, Copy)]
pub struct OrbitState {
    pub r_eci: Vec3,
    pub v_eci: Vec3,
    /// Argument of latitude, rad, in [0, 2π).
    pub u: f64,
    /// Mean motion, rad/s.
    pub n: f64,
    pub t: f64,
}

/// Propagate the circular orbit to `t` seconds past the epoch.
pub fn propagate_circular(cfg: &OrbitConfig, t: f64) -> OrbitState {
    let a = cfg.semi_major_axis();
    let n = cfg.mean_motion();
    let u = (cfg.u0_rad + n * t).rem_euclid(2.0 * std::f64::consts::PI);
    let rot = node_rotation(cfg.raan_rad, cfg.inclination_rad);
    let (su, cu) = u.sin_cos();
    let r_eci = rot * Vec3::new(a * cu, a * su, 0.0);
    let v_eci = rot * Vec3::new(-a * n * su, a * n * cu, 0.0);
    OrbitState { r_eci, v_eci, u, n, t }
}

/// Rotation from the node/orbit-plane frame into ECI.
fn node_rotation(raan: f64, inc: f64) -> Mat3 {
    let (so, co) = raan.sin_cos();
    let (si, ci) = inc.sin_cos();
    // R3(-Ω) · R1(-i)
    Mat3::new([
        [co, -so * ci, so * si],
        [so, co * ci, -co * si],
        [0.0, si, ci],
    ])
}

/// Quaternion of the orbital frame relative to ECI (`q_i2o`).
///
/// The frame triad is x along velocity, z along the radial away from Earth,
/// y = z × x. Vectors map into orbital coordinates with
/// `q_i2o.transform(v_eci)`.
pub fn orbital_frame_quaternion(st: &OrbitState) -> Result<Quaternion> {
    let z = st
        .r_eci
        .normalized()
        .ok_or_else(|| Error::DegenerateGeometry("zero radius vector".into()))?;
    let x = st
        .v_eci
        .normalized()
        .ok_or_else(|| Error::DegenerateGeometry("zero velocity vector".into()))?;
    let y = z.cross(x);
    let ynorm = y.norm();
    if ynorm < 1e-6 {
        return Err(Error::DegenerateGeometry("r parallel to v".into()));
    }
    let y = y / ynorm;
    let x = y.cross(z); // re-orthogonalize x against numerical drift
    // attitude matrix with the frame axes as columns rotates the ECI triad
    // onto the orbital triad
    Ok(Quaternion::from_dcm(&Mat3::from_columns(x, y, z)))
}
