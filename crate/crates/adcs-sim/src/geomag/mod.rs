//! Geomagnetic field models: a direct dipole (inertial and orbital-frame
//! forms) and the IGRF spherical-harmonic model, plus the frame chains that
//! deliver each model's field vector into the satellite body frame.
//!
//! The dipole assumes a magnetic axis fixed in inertial space (no Earth
//! rotation); the IGRF model is Earth-fixed and reached through the GMST
//! rotation, so its field at a fixed orbital position changes as the Earth
//! turns.

pub mod igrf;
pub mod legendre;

use serde::{Deserialize, Serialize};

pub use igrf::{igrf_field, igrf_field_ecef, GaussCoefficients, R_IGRF};
pub use legendre::{schmidt_legendre, SchmidtTables};

use crate::math::{Mat3, Vec3};
use crate::orbit::OrbitState;
use crate::quaternion::Quaternion;
use crate::time::Epoch;
use crate::{Error, Result};

/// Reference frame tag carried by every field sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Eci,
    /// Local geocentric-spherical components (B_r, B_θ, B_φ) at an
    /// Earth-fixed point.
    EcefSphericalLocal,
    Orbital,
    Body,
}

/// A magnetic field vector in tesla, tagged with its frame.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub b: Vec3,
    pub frame: Frame,
}

/// Which geomagnetic model drives a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldModelKind {
    Dipole,
    Igrf,
}

impl std::fmt::Display for FieldModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldModelKind::Dipole => write!(f, "dipole"),
            FieldModelKind::Igrf => write!(f, "igrf"),
        }
    }
}

impl std::str::FromStr for FieldModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dipole" => Ok(FieldModelKind::Dipole),
            "igrf" => Ok(FieldModelKind::Igrf),
            other => Err(format!("unknown field model {other:?} (dipole|igrf)")),
        }
    }
}

/// Direct dipole parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DipoleParams {
    /// Earth dipole moment, A·m².
    pub mu_e: f64,
    /// Vacuum permeability, N·A⁻².
    pub mu_0: f64,
    /// Unit dipole axis in ECI, fixed in inertial space. Points toward the
    /// southern hemisphere so the orbital-frame closed form carries positive
    /// sign.
    pub k_hat: Vec3,
}

impl DipoleParams {
    /// Axis tilted `tilt_deg` from the (south) polar axis toward the given
    /// east longitude, frozen in inertial space.
    pub fn tilted(tilt_deg: f64, longitude_deg: f64) -> Self {
        let t = tilt_deg.to_radians();
        let l = longitude_deg.to_radians();
        DipoleParams {
            mu_e: 7.94e22,
            mu_0: 1.257e-6,
            k_hat: -Vec3::new(t.sin() * l.cos(), t.sin() * l.sin(), t.cos()),
        }
    }

    /// Field prefactor μ_e μ_0 / 4π, T·m³.
    pub fn prefactor(&self) -> f64 {
        self.mu_e * self.mu_0 / (4.0 * std::f64::consts::PI)
    }
}

impl Default for DipoleParams {
    /// 9.6° tilt toward the IGRF-era dipole longitude, fixed inertially.
    fn default() -> Self {
        DipoleParams::tilted(9.6, -72.6)
    }
}

/// Dipole induction vector at an ECI position:
/// `B = −(μ_e μ_0 / 4π |r|⁵) (k |r|² − 3 (k·r) r)`.
pub fn dipole_field_inertial(r_sat: Vec3, p: &DipoleParams) -> Result<FieldSample> {
    let r = r_sat.norm();
    if r < 1e-3 {
        return Err(Error::DegenerateGeometry("dipole field at zero radius".into()));
    }
    let c = p.prefactor() / (r * r * r * r * r);
    let b = -(p.k_hat * (r * r) - r_sat * (3.0 * p.k_hat.dot(r_sat))) * c;
    Ok(FieldSample { b, frame: Frame::Eci })
}

/// Dipole field in the orbital frame for an untilted axis:
/// `B = (μ_e μ_0 / 4π r³) [cos u sin i, cos i, −2 sin u sin i]`.
pub fn dipole_field_orbital(u: f64, inc: f64, r: f64, p: &DipoleParams) -> FieldSample {
    let c = p.prefactor() / (r * r * r);
    let (su, cu) = u.sin_cos();
    let (si, ci) = inc.sin_cos();
    FieldSample {
        b: Vec3::new(c * cu * si, c * ci, -2.0 * c * su * si),
        frame: Frame::Orbital,
    }
}

/// Coordinate rotation ECI → ECEF at Earth rotation angle `gmst`.
fn eci_to_ecef(gmst: f64) -> Mat3 {
    let (s, c) = gmst.sin_cos();
    Mat3::new([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
}

/// IGRF field at an ECI position, returned in ECI coordinates.
pub fn igrf_field_eci(
    r_eci: Vec3,
    epoch: &Epoch,
    t: f64,
    gc: &GaussCoefficients,
) -> Result<Vec3> {
    let rot = eci_to_ecef(epoch.gmst(t));
    let r_ecef = rot * r_eci;
    let b_ecef = igrf_field_ecef(r_ecef, epoch.decimal_year(t), gc)?;
    Ok(rot.transpose() * b_ecef)
}

/// Model field in the orbital frame at an orbit state.
///
/// The dipole route evaluates the closed orbital-frame form directly; the
/// IGRF route walks ECEF-spherical → ECEF → ECI → orbital.
pub fn field_in_orbital(
    model: FieldModelKind,
    st: &OrbitState,
    epoch: &Epoch,
    gc: Option<&GaussCoefficients>,
    p: &DipoleParams,
) -> Result<Vec3> {
    match model {
        FieldModelKind::Dipole => {
            let inc = orbit_inclination(st);
            Ok(dipole_field_orbital(st.u, inc, st.r_eci.norm(), p).b)
        }
        FieldModelKind::Igrf => {
            let gc = gc.ok_or_else(|| {
                Error::Config("IGRF model selected but no coefficients loaded".into())
            })?;
            let b_eci = igrf_field_eci(st.r_eci, epoch, st.t, gc)?;
            let q_i2o = crate::orbit::orbital_frame_quaternion(st)?;
            Ok(q_i2o.transform(b_eci))
        }
    }
}

/// Model field expressed in the body frame through `q_o2b`.
pub fn field_in_body(
    model: FieldModelKind,
    st: &OrbitState,
    epoch: &Epoch,
    q_o2b: Quaternion,
    gc: Option<&GaussCoefficients>,
    p: &DipoleParams,
) -> Result<FieldSample> {
    let b_orb = field_in_orbital(model, st, epoch, gc, p)?;
    Ok(FieldSample { b: q_o2b.transform(b_orb), frame: Frame::Body })
}

/// Inclination recovered from the orbit state's angular-momentum direction.
fn orbit_inclination(st: &OrbitState) -> f64 {
    let h = st.r_eci.cross(st.v_eci);
    (h.z / h.norm()).clamp(-1.0, 1.0).acos()
}
