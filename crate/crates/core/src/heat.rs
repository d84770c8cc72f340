//! Analytic model for the bivariate-Gaussian symbol family: geometric
//! eigenvalues, dilated-Hermite eigenfunctions, closed-form capacity and rate
//! via Lambert W, and the ellipse of concentration.

use crate::error::{Error, Result};
use crate::special::{lambert_w0, lambert_wm1};

/// Inverse hyperbolic cotangent, `0.5 ln((x+1)/(x-1))` for `|x| > 1`.
pub fn arccoth(x: f64) -> f64 {
    0.5 * ((x + 1.0) / (x - 1.0)).ln()
}

/// Gaussian-symbol channel with dilation `gamma` and spreading factor `r`.
///
/// The squared singular values are `lambda_k = c^2 rho^{2k+1}` with
/// `delta = 2 arccoth(2 r^2)`, `rho = exp(-delta)`, `c = cosh(delta/2)`, and
/// they sum to `r^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct HeatChannelModel {
    pub gamma: f64,
    pub r: f64,
    pub delta: f64,
    pub rho: f64,
    pub c: f64,
}

impl HeatChannelModel {
    pub fn new(gamma: f64, r: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spreading factor must satisfy r >= 1, got {r}"
            )));
        }
        let delta = 2.0 * arccoth(2.0 * r * r);
        let rho = (-delta).exp();
        let c = (delta / 2.0).cosh();
        Ok(Self {
            gamma,
            r,
            delta,
            rho,
            c,
        })
    }

    /// `lambda_k = c^2 rho^{2k+1}`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.c * self.c * self.rho.powi(2 * k as i32 + 1)
    }

    /// Noise variance of subchannel `k`: `theta^2 / lambda_k`.
    pub fn noise_variance(&self, k: usize, theta2: f64) -> f64 {
        theta2 / self.eigenvalue(k)
    }

    /// Source coefficient variance of component `k`: `sigma^2 lambda_k`.
    pub fn signal_variance(&self, k: usize, sigma2: f64) -> f64 {
        sigma2 * self.eigenvalue(k)
    }

    /// Exact eigenvalue sum `r^2 / 2`.
    pub fn eigenvalue_sum(&self) -> f64 {
        self.r * self.r / 2.0
    }

    /// Eigenvalues down to `rel_floor * lambda_0`, descending.
    pub fn eigenvalues_above(&self, rel_floor: f64) -> Vec<f64> {
        let lam0 = self.eigenvalue(0);
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let lam = self.eigenvalue(k);
            if lam < rel_floor * lam0 || lam == 0.0 {
                break;
            }
            out.push(lam);
            k += 1;
        }
        out
    }
}

/// Closed-form capacity with the Lambert argument kept for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormCapacity {
    pub nats: f64,
    pub lambert_arg: f64,
    pub w0: f64,
}

impl ClosedFormCapacity {
    pub fn bits(&self) -> f64 {
        self.nats / std::f64::consts::LN_2
    }
}

/// `C = (r^2/8) [W_0((4 pi SNR - 1)/e) + 1]^2` nats per transmission.
pub fn closed_form_capacity(snr: f64, r: f64) -> Result<ClosedFormCapacity> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SNR must be positive, got {snr}"
        )));
    }
    let arg = (4.0 * std::f64::consts::PI * snr - 1.0) / std::f64::consts::E;
    let w0 = lambert_w0(arg)?;
    let s = w0 + 1.0;
    Ok(ClosedFormCapacity {
        nats: r * r / 8.0 * s * s,
        lambert_arg: arg,
        w0,
    })
}

/// Closed-form rate with the Lambert argument kept for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormRate {
    pub nats: f64,
    pub lambert_arg: f64,
    pub wm1: f64,
}

/// `R = (r^2/8) [W_{-1}(-1/(e SDR)) + 1]^2` nats per realization.
pub fn closed_form_rate(sdr: f64, r: f64) -> Result<ClosedFormRate> {
    if !(sdr >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "SDR must be at least 1, got {sdr}"
        )));
    }
    let arg = -1.0 / (std::f64::consts::E * sdr);
    let wm1 = lambert_wm1(arg)?;
    let s = wm1 + 1.0;
    Ok(ClosedFormRate {
        nats: r * r / 8.0 * s * s,
        lambert_arg: arg,
        wm1,
    })
}

/// Ellipse of concentration: exact semi-axes from the composed-operator
/// symbol, and the large-`r` approximation.
#[derive(Debug, Clone, Copy)]
pub struct Eoc {
    /// Approximate semi-axes `a = sqrt(2) r gamma`, `b = sqrt(2) r / gamma`.
    pub a_approx: f64,
    pub b_approx: f64,
    /// Exact semi-axes `a_x = sqrt(2) gamma sqrt(coth delta)`,
    /// `b_x = sqrt(2) gamma^{-1} sqrt(coth delta)`.
    pub a_exact: f64,
    pub b_exact: f64,
}

impl Eoc {
    /// Exact ellipse area `pi a_x b_x = 2 pi coth(delta)`, always `>= 2 pi`.
    pub fn area_exact(&self) -> f64 {
        std::f64::consts::PI * self.a_exact * self.b_exact
    }
}

pub fn eoc(gamma: f64, r: f64) -> Result<Eoc> {
    let model = HeatChannelModel::new(gamma, r)?;
    let coth_delta = 1.0 / model.delta.tanh();
    let s = coth_delta.sqrt();
    let rt2 = std::f64::consts::SQRT_2;
    Ok(Eoc {
        a_approx: rt2 * r * gamma,
        b_approx: rt2 * r / gamma,
        a_exact: rt2 * gamma * s,
        b_exact: rt2 * s / gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_r1_closed_values() {
        let m = HeatChannelModel::new(1.0, 1.0).unwrap();
        assert!((m.delta - 3.0f64.ln()).abs() < 1e-15);
        assert!((m.rho - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.c * m.c - 4.0 / 3.0).abs() < 1e-14);
        assert!((m.eigenvalue(0) - 4.0 / 9.0).abs() < 1e-14);
        assert!((m.eigenvalue(1) - 4.0 / 81.0).abs() < 1e-14);
    }

    #[test]
    fn model_r2_delta() {
        // 2 arccoth(8) = ln(9/7), frozen:
        let m = HeatChannelModel::new(0.1, 2.0).unwrap();
        assert!((m.delta - 0.25131442828090617).abs() < 1e-15);
        assert!((m.delta - (9.0f64 / 7.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn model_large_r_limit() {
        let m = HeatChannelModel::new(1.0, 1e3).unwrap();
        assert!(m.delta < 1.1e-6 && m.delta > 0.0);
        assert!(m.rho < 1.0 && m.rho > 1.0 - 1.1e-6);
    }

    #[test]
    fn eigenvalue_ratio_is_geometric() {
        for &r in &[1.0, 2.0, 5.0] {
            let m = HeatChannelModel::new(0.3, r).unwrap();
            let expect = m.rho.powi(-2);
            for k in 0..20 {
                let ratio = m.eigenvalue(k) / m.eigenvalue(k + 1);
                assert!((ratio - expect).abs() < 1e-9 * expect, "r={r} k={k}");
            }
        }
    }

    #[test]
    fn eigenvalue_sum_matches_geometric_series() {
        for &r in &[1.0, 2.0, 4.0, 8.0] {
            let m = HeatChannelModel::new(1.0, r).unwrap();
            // Closed geometric sum c^2 rho / (1 - rho^2) against r^2/2.
            let series = m.c * m.c * m.rho / (1.0 - m.rho * m.rho);
            assert!(
                (series - m.eigenvalue_sum()).abs() < 1e-10 * m.eigenvalue_sum(),
                "r={r}: {series}"
            );
        }
    }

    #[test]
    fn capacity_closed_form_frozen() {
        // Frozen from the Lambert bisection oracle.
        let c = closed_form_capacity(100.0, 2.0).unwrap();
        assert!((c.nats - 15.72300922267189).abs() < 1e-10, "{}", c.nats);
        assert!((c.bits() - 22.68350743340017).abs() < 1e-9);
        let c1 = closed_form_capacity(100.0, 1.0).unwrap();
        assert!((c1.nats - 3.9307523056679723).abs() < 1e-12);
        // r^2 scaling.
        assert!((c.nats - 4.0 * c1.nats).abs() < 1e-10);
    }

    #[test]
    fn capacity_vanishes_at_small_snr() {
        let c = closed_form_capacity(1e-12, 1.0).unwrap();
        assert!(c.nats >= 0.0 && c.nats < 1e-10, "{}", c.nats);
        assert!(closed_form_capacity(0.0, 1.0).is_err());
    }

    #[test]
    fn rate_closed_form_frozen() {
        let r = closed_form_rate(10.0, 2.0).unwrap();
        assert!((r.nats - 7.564961499936751).abs() < 1e-10, "{}", r.nats);
        // SDR = 1 sits at the branch point: R = 0.
        let r0 = closed_form_rate(1.0, 2.0).unwrap();
        assert!(r0.nats.abs() < 1e-15);
        assert!(closed_form_rate(0.5, 2.0).is_err());
    }

    #[test]
    fn rate_increasing_in_sdr() {
        let mut prev = 0.0;
        for i in 1..60 {
            let sdr = 1.0 + 0.5 * i as f64;
            let r = closed_form_rate(sdr, 2.0).unwrap().nats;
            assert!(r > prev, "sdr={sdr}: {r} <= {prev}");
            prev = r;
        }
    }

    #[test]
    fn eoc_reference_case() {
        let e = eoc(0.1, 2.0).unwrap();
        assert!((e.a_approx - 0.2828).abs() < 5e-5, "{}", e.a_approx);
        assert!((e.b_approx - 28.28).abs() < 5e-3, "{}", e.b_approx);
        assert!((e.a_exact - 0.2850).abs() < 5e-5, "{}", e.a_exact);
        assert!((e.b_exact - 28.50).abs() < 5e-3, "{}", e.b_exact);
    }

    #[test]
    fn eoc_area_lower_bound() {
        for &(gamma, r) in &[(0.1, 1.0), (1.0, 1.0), (0.5, 3.0), (2.0, 10.0)] {
            let e = eoc(gamma, r).unwrap();
            let m = HeatChannelModel::new(gamma, r).unwrap();
            let coth = 1.0 / m.delta.tanh();
            assert!((e.a_exact * e.b_exact - 2.0 * coth).abs() < 1e-10 * coth);
            assert!(e.area_exact() >= 2.0 * std::f64::consts::PI - 1e-12);
        }
    }

    #[test]
    fn eoc_axes_converge_for_large_r() {
        let e = eoc(0.7, 100.0).unwrap();
        assert!((e.a_exact / e.a_approx - 1.0).abs() < 1e-4);
        assert!((e.b_exact / e.b_approx - 1.0).abs() < 1e-4);
    }
}
