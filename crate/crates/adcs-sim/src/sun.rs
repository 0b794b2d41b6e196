//! Low-precision solar ephemeris and the cylindrical Earth-shadow test.

use crate::math::Vec3;
use crate::orbit::R_EARTH_MEAN;
use crate::time::Epoch;
use crate::{Error, Result};

/// Sun direction and lighting state as seen from the satellite.
#[derive(Debug, Clone, Copy)]
pub struct SunState {
    /// Unit vector from Earth toward the Sun, ECI.
    pub dir_eci: Vec3,
    pub sunlit: bool,
}

/// Unit vector from the Earth to the Sun in ECI (low-precision ephemeris,
/// good to ~0.01°). The epoch must lie within 1990–2035.
pub fn sun_direction_eci(epoch: &Epoch, t: f64) -> Result<Vec3> {
    let year = epoch.year();
    if !(1990..=2035).contains(&year) {
        return Err(Error::DateOutOfRange(format!(
            "sun ephemeris supports 1990-2035, epoch year is {year}"
        )));
    }
    let tc = epoch.centuries_j2000(t);
    // mean longitude and mean anomaly of the Sun, degrees
    let lambda_mean = (280.460 + 36_000.771 * tc).rem_euclid(360.0);
    let m = (357.529_109_2 + 35_999.050_34 * tc).rem_euclid(360.0).to_radians();
    // ecliptic longitude via the equation of center
    let lambda_ecl = (lambda_mean
        + 1.914_666_471 * m.sin()
        + 0.019_994_643 * (2.0 * m).sin())
    .to_radians();
    // obliquity of the ecliptic
    let eps = (23.439_291 - 0.013_004_2 * tc).to_radians();
    let (sl, cl) = lambda_ecl.sin_cos();
    let (se, ce) = eps.sin_cos();
    Ok(Vec3::new(cl, ce * sl, se * sl))
}

/// Cylindrical shadow: the satellite is eclipsed iff it sits behind the
/// terminator plane and within one Earth radius of the anti-solar axis.
pub fn eclipse_state(r_sat: Vec3, sun_dir: Vec3) -> bool {
    let along_anti_sun = -r_sat.dot(sun_dir);
    if along_anti_sun <= 0.0 {
        return true; // sun side: sunlit
    }
    let perp = r_sat + sun_dir * along_anti_sun;
    perp.norm() >= R_EARTH_MEAN
}

/// Combined Sun direction and lighting for a satellite position.
pub fn sun_state(epoch: &Epoch, t: f64, r_sat: Vec3) -> Result<SunState> {
    let dir_eci = sun_direction_eci(epoch, t)?;
    Ok(SunState { dir_eci, sunlit: eclipse_state(r_sat, dir_eci) })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: Meeus' solar position (Astronomical Algorithms,
    /// chapter 25), a different published low-precision algorithm.
    fn meeus_sun(jd: f64) -> Vec3 {
        let t = (jd - 2_451_545.0) / 36_525.0;
        let l0 = (280.46646 + 36_000.76983 * t + 0.0003032 * t * t).rem_euclid(360.0);
        let m = (357.52911 + 35_999.05029 * t - 0.0001537 * t * t).rem_euclid(360.0);
        let m_rad = m.to_radians();
        let c = (1.914_602 - 0.004_817 * t) * m_rad.sin()
            + (0.019_993 - 0.000_101 * t) * (2.0 * m_rad).sin()
            + 0.000_289 * (3.0 * m_rad).sin();
        let true_lon = (l0 + c).to_radians();
        let eps = (23.439_291_1 - 0.013_004_2 * t).to_radians();
        Vec3::new(
            true_lon.cos(),
            eps.cos() * true_lon.sin(),
            eps.sin() * true_lon.sin(),
        )
    }

    #[test]
    fn unit_norm_for_many_dates() {
        let e = Epoch::parse("2003-07-14T09:00:00Z").unwrap();
        for i in 0..500 {
            let v = sun_direction_eci(&e, i as f64 * 86400.0 * 3.7).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn march_equinox_points_along_x() {
        let e = Epoch::parse("2020-03-20T03:50:00Z").unwrap();
        let v = sun_direction_eci(&e, 0.0).unwrap();
        let ang = v.angle_to(Vec3::new(1.0, 0.0, 0.0)).to_degrees();
        assert!(ang < 1.0, "angle to +x at equinox: {ang} deg");
    }

    #[test]
    fn agrees_with_meeus_oracle() {
        for (date, t) in [
            ("2000-01-01T12:00:00Z", 0.0),
            ("2010-09-05T00:00:00Z", 3600.0),
            ("2020-06-21T00:00:00Z", 86400.0),
            ("2031-12-25T18:00:00Z", 0.0),
        ] {
            let e = Epoch::parse(date).unwrap();
            let ours = sun_direction_eci(&e, t).unwrap();
            let oracle = meeus_sun(e.julian_date(t));
            let sep = ours.angle_to(oracle).to_degrees();
            assert!(sep < 0.02, "{date}: separation {sep} deg");
        }
    }

    #[test]
    fn epoch_out_of_range_rejected() {
        let e = Epoch::parse("1980-01-01T00:00:00Z").unwrap();
        assert!(sun_direction_eci(&e, 0.0).is_err());
    }

    #[test]
    fn sun_side_is_sunlit() {
        let sun = Vec3::new(1.0, 0.0, 0.0);
        assert!(eclipse_state(Vec3::new(7e6, 0.0, 0.0), sun));
        assert!(eclipse_state(Vec3::new(0.0, 7e6, 0.0), sun)); // terminator
    }

    #[test]
    fn anti_solar_point_is_eclipsed() {
        let sun = Vec3::new(1.0, 0.0, 0.0);
        assert!(!eclipse_state(Vec3::new(-6.9e6, 0.0, 0.0), sun));
    }

    #[test]
    fn shadow_boundary_flips_within_a_meter() {
        let sun = Vec3::new(1.0, 0.0, 0.0);
        let down_range = -3.0e6;
        let inside = Vec3::new(down_range, R_EARTH_MEAN - 1.0, 0.0);
        let outside = Vec3::new(down_range, R_EARTH_MEAN + 1.0, 0.0);
        assert!(!eclipse_state(inside, sun));
        assert!(eclipse_state(outside, sun));
    }
}
