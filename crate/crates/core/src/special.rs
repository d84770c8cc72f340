//! Scalar special functions: both real branches of the Lambert W function and
//! L2-normalized dilated Hermite functions.
//!
//! Lambert W is solved by Halley iteration from asymptotic initial guesses,
//! with a bisection fallback so the residual contract
//! `|W exp(W) - x| <= 1e-12 * max(1, |x|)` always holds. Hermite functions use
//! the three-term recurrence on the normalized functions themselves, which
//! stays bounded where the physicists' polynomials would overflow.

use crate::error::{Error, Result};

/// Residual tolerance for both Lambert branches, relative to `max(1, |x|)`.
const LAMBERT_TOL: f64 = 1e-13;
const HALLEY_MAX_ITER: usize = 50;

fn halley(x: f64, mut w: f64) -> Option<f64> {
    let scale = x.abs().max(1.0);
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= LAMBERT_TOL * scale {
            return Some(w);
        }
        // Halley step for f(w) = w e^w - x.
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * (w + 1.0));
        if !denom.is_finite() || denom == 0.0 {
            return None;
        }
        let step = f / denom;
        if !step.is_finite() {
            return None;
        }
        w -= step;
    }
    None
}

/// Principal branch `W_0`, defined on `x >= -1/e` with `W_0(x) >= -1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch_point = -(-1.0f64).exp();
    if !x.is_finite() || x < branch_point - 1e-15 {
        return Err(Error::LambertDomain {
            branch: "0",
            x,
            domain: "[-1/e, inf)",
        });
    }
    if x <= branch_point {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let guess = if x < branch_point + 0.3 {
        // Series around the branch point in p = sqrt(2(e x + 1)).
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    } else if x <= std::f64::consts::E {
        x.ln_1p() * 0.75 + 0.1
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    match halley(x, guess).filter(|w| *w >= -1.0 - 1e-12) {
        Some(w) => Ok(w.max(-1.0)),
        None => Ok(bisect_w0(x)),
    }
}

/// Lower branch `W_{-1}`, defined on `[-1/e, 0)` with `W_{-1}(x) <= -1`.
pub fn lambert_wm1(x: f64) -> Result<f64> {
    let branch_point = -(-1.0f64).exp();
    if !x.is_finite() || x < branch_point - 1e-15 || x >= 0.0 {
        return Err(Error::LambertDomain {
            branch: "-1",
            x,
            domain: "[-1/e, 0)",
        });
    }
    if x <= branch_point {
        return Ok(-1.0);
    }

    let guess = if x > -0.25 {
        // x -> 0-: W ~ ln(-x) - ln(-ln(-x)).
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    } else {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 - p - p * p / 3.0 - 11.0 * p * p * p / 72.0
    };

    match halley(x, guess).filter(|w| *w <= -1.0 + 1e-12) {
        Some(w) => Ok(w.min(-1.0)),
        None => Ok(bisect_wm1(x)),
    }
}

/// Bisection fallback on the increasing map `w -> w e^w`, `w >= -1`.
fn bisect_w0(x: f64) -> f64 {
    let mut lo = -1.0f64;
    let mut hi = 1.0f64;
    while hi * hi.exp() < x {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() > x {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection fallback on the decreasing map `w -> w e^w`, `w <= -1`.
fn bisect_wm1(x: f64) -> f64 {
    let mut lo = -745.0f64; // w e^w underflows to -0 below this
    let mut hi = -1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() > x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Orthonormal dilated Hermite functions `f_k(t) = gamma^{-1/2} H_k(t/gamma)`,
/// where `H_k` is the k-th L2-normalized Hermite function.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    gamma: f64,
    max_order: usize,
}

impl HermiteBasis {
    pub fn new(gamma: f64, max_order: usize) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hermite dilation must be positive, got {gamma}"
            )));
        }
        Ok(Self { gamma, max_order })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Value of the order-`k` dilated Hermite function at `t`.
    pub fn eval(&self, k: usize, t: f64) -> Result<f64> {
        if k > self.max_order {
            return Err(Error::OrderOutOfRange {
                order: k,
                max_order: self.max_order,
            });
        }
        Ok(self.eval_through(k, t)[k])
    }

    /// Values of all orders `0..=max_order` at `t` from one recurrence pass.
    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        self.eval_through(self.max_order, t)
    }

    /// Order-`k` function sampled on a grid.
    pub fn sample(&self, k: usize, ts: &[f64]) -> Result<Vec<f64>> {
        if k > self.max_order {
            return Err(Error::OrderOutOfRange {
                order: k,
                max_order: self.max_order,
            });
        }
        Ok(ts.iter().map(|&t| self.eval_through(k, t)[k]).collect())
    }

    fn eval_through(&self, k: usize, t: f64) -> Vec<f64> {
        let u = t / self.gamma;
        let scale = 1.0 / self.gamma.sqrt();
        let mut vals = Vec::with_capacity(k + 1);
        // H_0(u) = pi^{-1/4} exp(-u^2/2); H_{k+1} = sqrt(2/(k+1)) u H_k - sqrt(k/(k+1)) H_{k-1}.
        let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
        vals.push(scale * h0);
        if k == 0 {
            return vals;
        }
        let mut prev = h0;
        let mut cur = std::f64::consts::SQRT_2 * u * h0;
        vals.push(scale * cur);
        for n in 1..k {
            let next = (2.0 / (n as f64 + 1.0)).sqrt() * u * cur
                - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            vals.push(scale * cur);
        }
        vals
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Independent oracle: pure bisection on `w e^w = x` over the requested branch.
    fn oracle_w(x: f64, principal: bool) -> f64 {
        if principal {
            bisect_w0(x)
        } else {
            bisect_wm1(x)
        }
    }

    #[test]
    fn w0_known_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
        // Frozen from the bisection oracle at x = (4*pi*100 - 1)/e = 461.92306047...
        let x = (400.0 * std::f64::consts::PI - 1.0) / std::f64::consts::E;
        let w = lambert_w0(x).unwrap();
        assert!((w - 4.607674958959709).abs() < 1e-12, "w = {w}");
        assert!((w - oracle_w(x, true)).abs() < 1e-12);
        // Branch point maps to -1.
        let bp = -(-1.0f64).exp();
        assert_eq!(lambert_w0(bp).unwrap(), -1.0);
    }

    #[test]
    fn wm1_known_points() {
        let bp = -(-1.0f64).exp();
        assert_eq!(lambert_wm1(bp).unwrap(), -1.0);
        // Frozen from the bisection oracle at x = -1/(10 e).
        let x = -1.0 / (10.0 * std::f64::consts::E);
        let w = lambert_wm1(x).unwrap();
        assert!((w - (-4.889720169867429)).abs() < 1e-12, "w = {w}");
        assert!((w - oracle_w(x, false)).abs() < 1e-12);
        // W_{-1} decreases toward 0-: W(-0.01) < W(-0.1).
        assert!(lambert_wm1(-0.01).unwrap() < lambert_wm1(-0.1).unwrap());
    }

    #[test]
    fn lambert_domain_errors() {
        assert!(lambert_w0(-0.4).is_err());
        assert!(lambert_wm1(-0.4).is_err());
        assert!(lambert_wm1(0.0).is_err());
        assert!(lambert_wm1(0.5).is_err());
    }

    #[test]
    fn lambert_residual_contract_random_sweep() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x1a3b57);
        let bp = -(-1.0f64).exp();
        for _ in 0..10_000 {
            // W0 over a wide dynamic range including near the branch point.
            let x = if rng.gen_bool(0.3) {
                bp + rng.gen::<f64>() * 0.5
            } else {
                let exp10: f64 = rng.gen_range(-8.0..8.0);
                10f64.powf(exp10)
            };
            let w = lambert_w0(x).unwrap();
            assert!(w >= -1.0);
            let resid = (w * w.exp() - x).abs();
            assert!(resid <= 1e-12 * x.abs().max(1.0), "x={x} resid={resid}");
        }
        for _ in 0..10_000 {
            let x = if rng.gen_bool(0.5) {
                bp * rng.gen::<f64>()
            } else {
                -10f64.powf(rng.gen_range(-12.0..-0.44))
            };
            if x >= 0.0 || x < bp {
                continue;
            }
            let w = lambert_wm1(x).unwrap();
            assert!(w <= -1.0);
            let resid = (w * w.exp() - x).abs();
            assert!(resid <= 1e-12 * x.abs().max(1.0), "x={x} resid={resid}");
        }
    }

    #[test]
    fn hermite_values_at_zero() {
        let basis = HermiteBasis::new(1.0, 8).unwrap();
        let expected = std::f64::consts::PI.powf(-0.25);
        assert!((basis.eval(0, 0.0).unwrap() - expected).abs() < 1e-15);
        assert_eq!(basis.eval(1, 0.0).unwrap(), 0.0);
        assert!(basis.eval(9, 0.0).is_err());
    }

    /// Trapezoid quadrature oracle for inner products of basis functions.
    fn gram(basis: &HermiteBasis, orders: usize) -> Vec<Vec<f64>> {
        let gamma = basis.gamma();
        let span = ((2.0 * orders as f64 + 1.0).sqrt() + 10.0) * gamma;
        let n = 4096usize;
        let dt = 2.0 * span / n as f64;
        let mut g = vec![vec![0.0; orders + 1]; orders + 1];
        for i in 0..=n {
            let t = -span + i as f64 * dt;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let vals = basis.eval_all(t);
            for j in 0..=orders {
                for k in j..=orders {
                    g[j][k] += w * vals[j] * vals[k] * dt;
                }
            }
        }
        for j in 0..=orders {
            for k in 0..j {
                g[j][k] = g[k][j];
            }
        }
        g
    }

    #[test]
    fn hermite_cross_orthogonality() {
        let basis = HermiteBasis::new(1.0, 5).unwrap();
        let g = gram(&basis, 5);
        assert!(g[3][5].abs() < 1e-10, "<f3,f5> = {}", g[3][5]);
    }

    #[test]
    fn hermite_gram_identity_to_order_40() {
        for &gamma in &[1.0, 0.1] {
            let basis = HermiteBasis::new(gamma, 40).unwrap();
            let g = gram(&basis, 40);
            for j in 0..=40 {
                for k in 0..=40 {
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert!(
                        (g[j][k] - expect).abs() < 1e-8,
                        "gamma={gamma} G[{j}][{k}] = {}",
                        g[j][k]
                    );
                }
            }
        }
    }

    #[test]
    fn hermite_dilation_covariance_is_exact() {
        let unit = HermiteBasis::new(1.0, 20).unwrap();
        let dilated = HermiteBasis::new(0.25, 20).unwrap();
        let scale = 1.0 / 0.25f64.sqrt();
        for k in [0, 1, 7, 20] {
            for &t in &[-1.3, 0.0, 0.2, 2.7] {
                let lhs = dilated.eval(k, t).unwrap();
                let rhs = scale * unit.eval(k, t / 0.25).unwrap();
                assert_eq!(lhs, rhs, "k={k} t={t}");
            }
        }
    }

    #[test]
    fn hermite_no_overflow_far_out() {
        let basis = HermiteBasis::new(1.0, 60).unwrap();
        for &t in &[-40.0, -25.0, 25.0, 40.0] {
            for v in basis.eval_all(t) {
                assert!(v.is_finite());
            }
        }
    }
}
