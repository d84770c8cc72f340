//! Eigenvalue-sum identities and asymptotic checks: the trace identity
//! `sum_k lambda_k = c_p r^2`, the normalized gap between eigenvalue
//! functionals and their phase-plane integrals, the first-order residual of
//! operator powers against the principal symbol `|p_r|^{2n}`, and moments of
//! the normalized symbol density.

use num_complex::Complex64;

use super::spectrum::SpectralData;
use super::transform::{kernel_to_symbol, symbol_to_kernel};
use super::{Grid2D, GridSpec, WeylSymbol};
use crate::error::{Error, Result};
use crate::quad::{refine_to, GKind, PlaneSamples, QUAD_SCALES};

fn sample_unit_plane(symbol: &WeylSymbol, n: usize) -> PlaneSamples {
    let (t0, w0) = symbol.decay_scale();
    PlaneSamples::sample(
        |u, v| symbol.abs2(u, v),
        QUAD_SCALES * t0,
        QUAD_SCALES * w0,
        n,
    )
}

/// `(1/2pi) iint a g(b |p_r|^2) dt domega`, evaluated at unit spread and
/// scaled by `r^2` (exact change of variables).
pub(crate) fn plane_functional(
    symbol: &WeylSymbol,
    r: f64,
    g: GKind,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> f64 {
    let scale = r * r / (2.0 * std::f64::consts::PI);
    let refined = refine_to(
        |n| sample_unit_plane(symbol, n).integrate(g, a, b),
        257,
        8193,
        rel_tol,
        1e-300,
    );
    scale * refined.value
}

/// Eigenvalue sum against the phase-plane energy integral `c_p r^2`.
#[derive(Debug, Clone, Copy)]
pub struct TraceIdentity {
    /// `sum_k lambda_k^{(r)}` from the computed spectrum.
    pub sum: f64,
    /// `(1/2pi) iint |p_r|^2 = c_p r^2`.
    pub integral: f64,
    pub rel_gap: f64,
}

pub fn trace_identity_check(spec: &SpectralData, symbol: &WeylSymbol, r: f64) -> TraceIdentity {
    let sum = spec.sum();
    let integral = plane_functional(symbol, r, GKind::Identity, 1.0, 1.0, 1e-10);
    let rel_gap = if integral == 0.0 {
        if sum.abs() < 1e-300 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (sum - integral).abs() / integral
    };
    TraceIdentity {
        sum,
        integral,
        rel_gap,
    }
}

/// Both sides of the eigenvalue-functional vs phase-plane-integral relation
/// and their gap normalized by `r^2`.
#[derive(Debug, Clone, Copy)]
pub struct SzegoGap {
    pub lhs: f64,
    pub rhs: f64,
    pub gap_per_r2: f64,
}

/// `lhs = sum_k a g(b lambda_k)` vs
/// `rhs = (1/2pi) iint a g(b |p_r|^2) dt domega`.
pub fn szego_gap(
    spec: &SpectralData,
    symbol: &WeylSymbol,
    r: f64,
    g: GKind,
    a: f64,
    b: f64,
) -> Result<SzegoGap> {
    if !(b >= 0.0) || !b.is_finite() || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "szego functional needs finite a and b >= 0, got a={a}, b={b}"
        )));
    }
    let lhs: f64 = spec.lambdas.iter().map(|&l| a * g.eval(b * l.max(0.0))).sum();
    let rhs = plane_functional(symbol, r, g, a, b, 1e-6);
    Ok(SzegoGap {
        lhs,
        rhs,
        gap_per_r2: (lhs - rhs).abs() / (r * r),
    })
}

/// Residual of the operator-power symbol against `|p_r|^{2n}`.
#[derive(Debug, Clone, Copy)]
pub struct ComposeReport {
    pub power: u32,
    pub grid_n: usize,
    /// `max |sigma_{A^n} - |p_r|^{2n}|` over the sampled band.
    pub max_residual: f64,
    /// `(1/2pi) iint (sigma_{A^n} - |p_r|^{2n})`.
    pub residual_integral: f64,
    /// Matrix trace of `A^n`, the eigenvalue power sum.
    pub trace_sum: f64,
    /// `(1/2pi) iint |p_r|^{2n}` on the same sampled band.
    pub principal_integral: f64,
}

/// Builds `A(r) = P_r* P_r`, raises it to `power` by operator products,
/// recovers the symbol, and compares with the principal symbol.
pub fn compose_check(symbol: &WeylSymbol, r: f64, power: u32) -> Result<ComposeReport> {
    if !(power == 1 || power == 2) {
        return Err(Error::InvalidParameter(format!(
            "operator power must be 1 or 2, got {power}"
        )));
    }
    let grid = Grid2D::for_symbol(symbol, r, &GridSpec::default())?;
    let op = symbol_to_kernel(symbol, r, &grid)?;
    let a = op.gram();
    let a_n = if power == 2 { a.compose(&a)? } else { a };
    let sampled = kernel_to_symbol(&a_n);

    let mut max_residual = 0.0f64;
    let mut residual_sum = Complex64::new(0.0, 0.0);
    let mut principal_sum = 0.0f64;
    for i in 0..sampled.n_t() {
        let t = grid.t(i);
        for (j, &w) in sampled.omega.iter().enumerate() {
            let q = symbol.eval_spread(r, t, w).norm_sqr();
            let principal = q.powi(power as i32);
            let diff = sampled.values[(i, j)] - Complex64::new(principal, 0.0);
            max_residual = max_residual.max(diff.norm());
            residual_sum += diff;
            principal_sum += principal;
        }
    }
    let cell = grid.dt() * grid.d_omega() / (2.0 * std::f64::consts::PI);
    Ok(ComposeReport {
        power,
        grid_n: grid.n(),
        max_residual,
        residual_integral: residual_sum.re * cell,
        trace_sum: a_n.trace().re,
        principal_integral: principal_sum * cell,
    })
}

/// First and second moments of the normalized density
/// `rho_r = |p_r|^2 / iint |p_r|^2`, plus the uncertainty-type lower bound on
/// the squared spreading factor derived from the unit-spread moments.
#[derive(Debug, Clone, Copy)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    /// Lower bound for the spreading factor,
    /// `(2 sqrt(s11 s22 - s12^2))^{-1/2}` from the unit-spread moments.
    pub r_lower_bound: f64,
}

pub fn symbol_moments(symbol: &WeylSymbol, r: f64) -> Result<MomentSummary> {
    // Two-level Richardson on every raw moment of the unit-spread density.
    let coarse = sample_unit_plane(symbol, 1025);
    let fine = sample_unit_plane(symbol, 2049);
    let mom = |pu: u32, pv: u32| -> f64 {
        let c = coarse.moment(pu, pv);
        let f = fine.moment(pu, pv);
        f + (f - c) / 3.0
    };
    let m00 = mom(0, 0);
    if !(m00 > 0.0) {
        return Err(Error::InvalidParameter(
            "symbol density has no mass: iint |p_r|^2 = 0".into(),
        ));
    }
    let mu1 = mom(1, 0) / m00;
    let mu2 = mom(0, 1) / m00;
    let c11 = mom(2, 0) / m00 - mu1 * mu1;
    let c22 = mom(0, 2) / m00 - mu2 * mu2;
    let c12 = mom(1, 1) / m00 - mu1 * mu2;
    let det1 = c11 * c22 - c12 * c12;
    if !(det1 > 0.0) {
        return Err(Error::DegenerateCovariance { det: det1 });
    }
    Ok(MomentSummary {
        m1: r * mu1,
        m2: r * mu2,
        s11: r * r * c11,
        s22: r * r * c22,
        s12: r * r * c12,
        r_lower_bound: (2.0 * det1.sqrt()).powf(-0.5),
    })
}
