//! IGRF coefficient ingestion (IAGA `igrf13coeffs.txt` layout), epoch
//! interpolation, and spherical-harmonic field evaluation in geocentric
//! coordinates.

use std::path::Path;

use crate::geomag::legendre::schmidt_legendre;
use crate::geomag::{FieldSample, Frame};
use crate::math::Vec3;
use crate::{Error, Result};

/// IGRF reference radius (mean Earth radius), m.
pub const R_IGRF: f64 = 6_371_200.0;

const NT_TO_T: f64 = 1e-9;

/// The vendored 13th-generation coefficient file.
const VENDORED: &str = include_str!("../../data/igrf13coeffs.txt");

/// Gauss coefficient tables per epoch, with secular variation past the last
/// epoch. Values are stored in tesla; the file carries nT.
#[derive(Debug, Clone)]
pub struct GaussCoefficients {
    pub n_max: usize,
    /// Tabulated epochs as decimal years, ascending.
    pub epochs: Vec<f64>,
    /// `g[epoch][idx(n,m)]`, tesla.
    g: Vec<Vec<f64>>,
    /// `h[epoch][idx(n,m)]`, tesla; zero for m = 0.
    h: Vec<Vec<f64>>,
    /// Secular variation beyond the last epoch, tesla/year.
    sv_g: Vec<f64>,
    sv_h: Vec<f64>,
}

/// Triangular index for degree `n ≥ 1`, order `m ≤ n`.
#[inline]
pub fn coeff_index(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m - 1
}

impl GaussCoefficients {
    /// Parse the embedded IGRF-13 coefficient table.
    pub fn load_vendored() -> Result<GaussCoefficients> {
        Self::parse(VENDORED)
    }

    /// Load a coefficient file in the IAGA layout from disk.
    pub fn load(path: &Path) -> Result<GaussCoefficients> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<GaussCoefficients> {
        let mut epochs: Option<Vec<f64>> = None;
        let mut rows: Vec<(char, usize, usize, Vec<f64>, f64, usize)> = Vec::new();

        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            if tokens[0] == "c/s" || tokens[0] == "g/h" {
                // header: "c/s deg ord 1900.0 ... 2020.0 2020-25"
                let mut ep = Vec::new();
                for tok in &tokens[3..] {
                    match tok.parse::<f64>() {
                        Ok(v) => ep.push(v),
                        Err(_) => break, // trailing secular-variation label
                    }
                }
                if ep.is_empty() {
                    return Err(Error::CoefficientParse {
                        line: lineno,
                        msg: "header row carries no epochs".into(),
                    });
                }
                if !ep.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::CoefficientParse {
                        line: lineno,
                        msg: "epochs are not strictly increasing".into(),
                    });
                }
                epochs = Some(ep);
                continue;
            }

            let epochs_ref = epochs.as_ref().ok_or(Error::CoefficientParse {
                line: lineno,
                msg: "coefficient row before header".into(),
            })?;
            let parse_err = |msg: String| Error::CoefficientParse { line: lineno, msg };
            if tokens.len() != 3 + epochs_ref.len() + 1 {
                return Err(parse_err(format!(
                    "expected {} columns, found {}",
                    3 + epochs_ref.len() + 1,
                    tokens.len()
                )));
            }
            let flag = match tokens[0] {
                "g" => 'g',
                "h" => 'h',
                other => return Err(parse_err(format!("bad g/h flag {other:?}"))),
            };
            let n: usize = tokens[1]
                .parse()
                .map_err(|e| parse_err(format!("bad degree: {e}")))?;
            let m: usize = tokens[2]
                .parse()
                .map_err(|e| parse_err(format!("bad order: {e}")))?;
            if n == 0 || m > n {
                return Err(parse_err(format!("degree/order ({n},{m}) out of range")));
            }
            let mut vals = Vec::with_capacity(epochs_ref.len());
            for tok in &tokens[3..3 + epochs_ref.len()] {
                vals.push(
                    tok.parse::<f64>()
                        .map_err(|e| parse_err(format!("bad value {tok:?}: {e}")))?,
                );
            }
            let sv: f64 = tokens[3 + epochs_ref.len()]
                .parse()
                .map_err(|e| parse_err(format!("bad secular variation: {e}")))?;
            rows.push((flag, n, m, vals, sv, lineno));
        }

        let epochs = epochs.ok_or(Error::CoefficientParse {
            line: 0,
            msg: "no header row found".into(),
        })?;
        let n_max = rows.iter().map(|r| r.1).max().unwrap_or(0);
        if n_max == 0 {
            return Err(Error::CoefficientParse { line: 0, msg: "no coefficient rows".into() });
        }

        let ncoef = coeff_index(n_max, n_max) + 1;
        let mut g = vec![vec![0.0; ncoef]; epochs.len()];
        let mut h = vec![vec![0.0; ncoef]; epochs.len()];
        let mut sv_g = vec![0.0; ncoef];
        let mut sv_h = vec![0.0; ncoef];
        let mut seen_g = vec![false; ncoef];
        let mut seen_h = vec![false; ncoef];

        for (flag, n, m, vals, sv, lineno) in rows {
            let idx = coeff_index(n, m);
            let (table, sv_table, seen) = if flag == 'g' {
                (&mut g, &mut sv_g, &mut seen_g)
            } else {
                (&mut h, &mut sv_h, &mut seen_h)
            };
            if seen[idx] {
                return Err(Error::CoefficientParse {
                    line: lineno,
                    msg: format!("duplicate {flag}({n},{m}) row"),
                });
            }
            seen[idx] = true;
            for (e, v) in vals.into_iter().enumerate() {
                table[e][idx] = v * NT_TO_T;
            }
            sv_table[idx] = sv * NT_TO_T;
        }

        for n in 1..=n_max {
            for m in 0..=n {
                let idx = coeff_index(n, m);
                if !seen_g[idx] {
                    return Err(Error::CoefficientParse {
                        line: 0,
                        msg: format!("missing g({n},{m}) row"),
                    });
                }
                if m >= 1 && !seen_h[idx] {
                    return Err(Error::CoefficientParse {
                        line: 0,
                        msg: format!("missing h({n},{m}) row"),
                    });
                }
            }
        }

        Ok(GaussCoefficients { n_max, epochs, g, h, sv_g, sv_h })
    }

    pub fn first_epoch(&self) -> f64 {
        self.epochs[0]
    }

    pub fn last_epoch(&self) -> f64 {
        *self.epochs.last().unwrap()
    }

    /// Tabulated main-field value in nT (test and inspection hook).
    pub fn g_nt(&self, epoch_index: usize, n: usize, m: usize) -> f64 {
        self.g[epoch_index][coeff_index(n, m)] / NT_TO_T
    }

    pub fn h_nt(&self, epoch_index: usize, n: usize, m: usize) -> f64 {
        self.h[epoch_index][coeff_index(n, m)] / NT_TO_T
    }

    /// Coefficients at a decimal-year date: linear interpolation between
    /// bracketing epochs, linear secular-variation extrapolation for up to
    /// five years past the last epoch.
    pub fn coefficients_at(&self, date: f64) -> Result<CoefficientsAt> {
        let first = self.first_epoch();
        let last = self.last_epoch();
        if !(first..=last + 5.0).contains(&date) {
            return Err(Error::DateOutOfRange(format!(
                "{date:.2} outside [{first:.1}, {:.1}]",
                last + 5.0
            )));
        }
        let ncoef = self.g[0].len();
        let mut g = vec![0.0; ncoef];
        let mut h = vec![0.0; ncoef];
        if date >= last {
            let dt = date - last;
            let e = self.epochs.len() - 1;
            for i in 0..ncoef {
                g[i] = self.g[e][i] + dt * self.sv_g[i];
                h[i] = self.h[e][i] + dt * self.sv_h[i];
            }
        } else {
            let hi = self.epochs.partition_point(|&e| e <= date).min(self.epochs.len() - 1);
            let lo = hi - 1;
            let w = (date - self.epochs[lo]) / (self.epochs[hi] - self.epochs[lo]);
            for i in 0..ncoef {
                g[i] = self.g[lo][i] + w * (self.g[hi][i] - self.g[lo][i]);
                h[i] = self.h[lo][i] + w * (self.h[hi][i] - self.h[lo][i]);
            }
        }
        Ok(CoefficientsAt { n_max: self.n_max, g, h })
    }
}

impl GaussCoefficients {
    /// Copy with every coefficient except g₁⁰ zeroed — the centered-dipole
    /// restriction used for cross-validating the harmonic expansion.
    pub fn restricted_to_g10(&self) -> GaussCoefficients {
        let mut out = self.clone();
        let keep = coeff_index(1, 0);
        for table in out.g.iter_mut().chain(out.h.iter_mut()) {
            for (i, v) in table.iter_mut().enumerate() {
                if i != keep {
                    *v = 0.0;
                }
            }
        }
        for (i, v) in out.sv_g.iter_mut().enumerate() {
            if i != keep {
                *v = 0.0;
            }
        }
        out.sv_h.iter_mut().for_each(|v| *v = 0.0);
        out
    }
}

/// Interpolated coefficients at a fixed date, tesla.
#[derive(Debug, Clone)]
pub struct CoefficientsAt {
    pub n_max: usize,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl CoefficientsAt {
    pub fn g_at(&self, n: usize, m: usize) -> f64 {
        self.g[coeff_index(n, m)]
    }

    pub fn h_at(&self, n: usize, m: usize) -> f64 {
        self.h[coeff_index(n, m)]
    }
}

/// Evaluate the IGRF field in local geocentric-spherical components.
///
/// Returns `(B_r, B_θ, B_φ)` in tesla packed as a [`Vec3`]: radial outward,
/// toward increasing colatitude (south), and east. `theta` is geocentric
/// colatitude in radians, `phi` longitude in radians.
pub fn igrf_field(
    r: f64,
    theta: f64,
    phi: f64,
    date: f64,
    gc: &GaussCoefficients,
) -> Result<FieldSample> {
    debug_assert!(r >= 0.9 * R_IGRF, "IGRF evaluated below 0.9 Earth radii");
    let coeffs = gc.coefficients_at(date)?;
    let tables = schmidt_legendre(gc.n_max, theta);

    let mut cosm = vec![0.0; gc.n_max + 1];
    let mut sinm = vec![0.0; gc.n_max + 1];
    for m in 0..=gc.n_max {
        let (s, c) = (m as f64 * phi).sin_cos();
        cosm[m] = c;
        sinm[m] = s;
    }

    let ratio = R_IGRF / r;
    let mut br = 0.0;
    let mut bt = 0.0;
    let mut bp = 0.0;
    let mut rr = ratio * ratio * ratio; // (R/r)^{n+2} for n = 1
    for n in 1..=gc.n_max {
        for m in 0..=n {
            let idx = coeff_index(n, m);
            let gc_ = coeffs.g[idx];
            let hc = coeffs.h[idx];
            let gh_cos = gc_ * cosm[m] + hc * sinm[m];
            br += (n as f64 + 1.0) * rr * gh_cos * tables.p[n][m];
            bt -= rr * gh_cos * tables.dp[n][m];
            if m >= 1 {
                bp += rr * m as f64 * (gc_ * sinm[m] - hc * cosm[m]) * tables.p_over_sin[n][m];
            }
        }
        rr *= ratio;
    }
    Ok(FieldSample { b: Vec3::new(br, bt, bp), frame: Frame::EcefSphericalLocal })
}

/// IGRF field as a Cartesian ECEF vector at an ECEF position.
pub fn igrf_field_ecef(r_ecef: Vec3, date: f64, gc: &GaussCoefficients) -> Result<Vec3> {
    let r = r_ecef.norm();
    let theta = (r_ecef.z / r).clamp(-1.0, 1.0).acos();
    let phi = r_ecef.y.atan2(r_ecef.x);
    let local = igrf_field(r, theta, phi, date, gc)?.b;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let r_hat = Vec3::new(st * cp, st * sp, ct);
    let t_hat = Vec3::new(ct * cp, ct * sp, -st);
    let p_hat = Vec3::new(-sp, cp, 0.0);
    Ok(r_hat * local.x + t_hat * local.y + p_hat * local.z)
}
