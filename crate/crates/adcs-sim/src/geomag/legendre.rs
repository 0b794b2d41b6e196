//! Schmidt semi-normalized associated Legendre functions of cos θ and their
//! colatitude derivatives, by stable forward recursion.
//!
//! A third table holds `P_n^m / sin θ` for m ≥ 1, computed by its own
//! recursion so the azimuthal field component stays regular at the poles.

/// Triangular tables indexed `[n][m]`, degrees `0..=n_max`.
#[derive(Debug, Clone)]
pub struct SchmidtTables {
    /// P̄_n^m(cos θ)
    pub p: Vec<Vec<f64>>,
    /// dP̄_n^m/dθ
    pub dp: Vec<Vec<f64>>,
    /// P̄_n^m / sin θ for m ≥ 1 (entry m = 0 is unused and left at zero)
    pub p_over_sin: Vec<Vec<f64>>,
}

/// Evaluate the tables at colatitude `theta` ∈ [0, π] up to degree `n_max`.
pub fn schmidt_legendre(n_max: usize, theta: f64) -> SchmidtTables {
    let (st, ct) = theta.sin_cos();
    let mut p = vec![vec![0.0; n_max + 1]; n_max + 1];
    let mut dp = vec![vec![0.0; n_max + 1]; n_max + 1];
    let mut q = vec![vec![0.0; n_max + 1]; n_max + 1]; // P/sinθ, m ≥ 1

    p[0][0] = 1.0;
    dp[0][0] = 0.0;
    if n_max == 0 {
        return SchmidtTables { p, dp, p_over_sin: q };
    }
    p[1][0] = ct;
    dp[1][0] = -st;
    p[1][1] = st;
    dp[1][1] = ct;
    q[1][1] = 1.0;

    for n in 2..=n_max {
        // diagonal: P̄_n^n = sqrt((2n−1)/(2n)) sinθ P̄_{n−1}^{n−1}
        let c = ((2 * n - 1) as f64 / (2 * n) as f64).sqrt();
        p[n][n] = c * st * p[n - 1][n - 1];
        dp[n][n] = c * (ct * p[n - 1][n - 1] + st * dp[n - 1][n - 1]);
        q[n][n] = c * st * q[n - 1][n - 1];

        for m in 0..n {
            let nf = n as f64;
            let mf = m as f64;
            let denom = (nf * nf - mf * mf).sqrt();
            let a = (2.0 * nf - 1.0) / denom;
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf)).sqrt() / denom;
            let pm2 = if n >= 2 { p[n - 2][m] } else { 0.0 };
            let dpm2 = if n >= 2 { dp[n - 2][m] } else { 0.0 };
            p[n][m] = a * ct * p[n - 1][m] - b * pm2;
            dp[n][m] = a * (-st * p[n - 1][m] + ct * dp[n - 1][m]) - b * dpm2;
            if m >= 1 {
                let qm2 = if n >= 2 { q[n - 2][m] } else { 0.0 };
                q[n][m] = a * ct * q[n - 1][m] - b * qm2;
            }
        }
    }
    SchmidtTables { p, dp, p_over_sin: q }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lowest_order_closed_forms() {
        for i in 0..=40 {
            let theta = i as f64 * std::f64::consts::PI / 40.0;
            let t = schmidt_legendre(3, theta);
            assert_relative_eq!(t.p[1][0], theta.cos(), epsilon = 1e-14);
            assert_relative_eq!(t.p[1][1], theta.sin(), epsilon = 1e-14);
            assert_relative_eq!(t.dp[1][0], -theta.sin(), epsilon = 1e-14);
            assert_relative_eq!(t.dp[1][1], theta.cos(), epsilon = 1e-14);
            // P̄_2^1 = √3 sinθ cosθ, P̄_2^2 = (√3/2) sin²θ
            let s3 = 3f64.sqrt();
            assert_relative_eq!(t.p[2][1], s3 * theta.sin() * theta.cos(), epsilon = 1e-13);
            assert_relative_eq!(
                t.p[2][2],
                0.5 * s3 * theta.sin() * theta.sin(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn schmidt_norm_integral_by_quadrature() {
        // ∫₀^π [P̄_n^m(cosθ)]² sinθ dθ = 2(2 − δ_{m0})/(2n + 1), n ≤ 4
        let steps = 4000;
        for n in 1..=4usize {
            for m in 0..=n {
                let mut integral = 0.0;
                for k in 0..steps {
                    // midpoint rule
                    let theta = (k as f64 + 0.5) * std::f64::consts::PI / steps as f64;
                    let t = schmidt_legendre(4, theta);
                    integral += t.p[n][m] * t.p[n][m] * theta.sin();
                }
                integral *= std::f64::consts::PI / steps as f64;
                let delta = if m == 0 { 1.0 } else { 0.0 };
                let expect = 2.0 * (2.0 - delta) / (2.0 * n as f64 + 1.0);
                assert_relative_eq!(integral, expect, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn derivative_consistent_with_finite_difference() {
        let h = 1e-6;
        for i in 1..40 {
            let theta = i as f64 * std::f64::consts::PI / 40.0;
            let t0 = schmidt_legendre(13, theta - h);
            let t1 = schmidt_legendre(13, theta + h);
            let tc = schmidt_legendre(13, theta);
            for n in 1..=13usize {
                for m in 0..=n {
                    let fd = (t1.p[n][m] - t0.p[n][m]) / (2.0 * h);
                    assert_relative_eq!(tc.dp[n][m], fd, epsilon = 1e-6, max_relative = 1e-5);
                }
            }
        }
    }

    #[test]
    fn p_over_sin_is_regular_at_poles() {
        for &theta in &[0.0, 1e-12, std::f64::consts::PI - 1e-12, std::f64::consts::PI] {
            let t = schmidt_legendre(13, theta);
            for n in 1..=13usize {
                for m in 1..=n {
                    assert!(t.p_over_sin[n][m].is_finite());
                }
            }
        }
        // away from the poles the ratio matches the direct quotient
        for i in 1..40 {
            let theta = i as f64 * std::f64::consts::PI / 40.0;
            let t = schmidt_legendre(8, theta);
            for n in 1..=8usize {
                for m in 1..=n {
                    assert_relative_eq!(
                        t.p_over_sin[n][m],
                        t.p[n][m] / theta.sin(),
                        max_relative = 1e-10
                    );
                }
            }
        }
    }
}
