//! TRIAD: deterministic attitude from two simultaneous vector observations.

use crate::math::{Mat3, Vec3};
use crate::quaternion::Quaternion;
use crate::{Error, Result};

/// Attitude from two body-frame observations and their reference-frame
/// models. The first (anchor) pair is trusted exactly; the second fixes the
/// rotation about it.
///
/// Returns the reference→body frame quaternion, canonicalized to a
/// non-negative scalar part. Pairs closer than ~0.06° to parallel are
/// rejected as degenerate.
pub fn triad_attitude(
    b_body: Vec3,
    s_body: Vec3,
    b_ref: Vec3,
    s_ref: Vec3,
) -> Result<Quaternion> {
    let triad = |anchor: Vec3, second: Vec3| -> Result<Mat3> {
        let t1 = anchor
            .normalized()
            .ok_or_else(|| Error::DegenerateGeometry("zero anchor vector".into()))?;
        let cross = t1.cross(second);
        if cross.norm() < 1e-6 {
            return Err(Error::DegenerateGeometry(
                "observation pair is (near-)parallel".into(),
            ));
        }
        let t2 = cross.normalized().unwrap();
        let t3 = t1.cross(t2);
        Ok(Mat3::from_columns(t1, t2, t3))
    };
    let m_body = triad(b_body, s_body)?;
    let m_ref = triad(b_ref, s_ref)?;
    // attitude matrix mapping reference coordinates into body coordinates
    let a = m_body * m_ref.transpose();
    Ok(Quaternion::from_dcm(&a.transpose()).canonicalized())
}
