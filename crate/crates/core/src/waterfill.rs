//! Waterfilling allocations: the discrete problems on noise/signal variances
//! and the time-frequency plane integrals they converge to.
//!
//! The plane integrals are solved in unit-spread coordinates (the spread
//! substitution contributes an exact `r^2` factor), with the water level or
//! table found by bisection on the monotone constraint map and the final
//! integral Richardson-refined over doubling grids.

use crate::error::{Error, Result};
use crate::quad::{GKind, PlaneSamples, QUAD_SCALES};
use crate::weyl::WeylSymbol;

/// Water level, active subchannels, and per-channel energies of the discrete
/// capacity problem.
#[derive(Debug, Clone)]
pub struct WaterfillResult {
    /// Water level `sigma^2`.
    pub water_level: f64,
    /// Number of active subchannels.
    pub active: usize,
    /// `(sigma^2 - nu_k^2)^+` for every input channel.
    pub powers: Vec<f64>,
    pub capacity_nats: f64,
}

impl WaterfillResult {
    pub fn capacity_bits(&self) -> f64 {
        self.capacity_nats / std::f64::consts::LN_2
    }

    /// Per-subchannel capacities `0.5 ln(sigma^2 / nu_k^2)` in nats for the
    /// active channels.
    pub fn subchannel_capacities(&self, noise_vars: &[f64]) -> Vec<f64> {
        (0..self.active)
            .map(|k| 0.5 * (self.water_level / noise_vars[k]).ln())
            .collect()
    }
}

/// Waterfilling on ascending noise variances: unique `sigma^2` with
/// `sum_k (sigma^2 - nu_k^2)^+ = s_total`. Infinite entries are legal
/// sentinels for zero-gain subchannels. A channel with `nu_k^2 = sigma^2`
/// exactly counts as inactive.
pub fn waterfill_discrete(noise_vars: &[f64], s_total: f64) -> Result<WaterfillResult> {
    if !(s_total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total input energy must be positive, got {s_total}"
        )));
    }
    if noise_vars.is_empty() {
        return Err(Error::InvalidParameter("no subchannels given".into()));
    }
    let mut prev = 0.0;
    for (k, &v) in noise_vars.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance {k} must be positive, got {v}"
            )));
        }
        if v < prev {
            return Err(Error::InvalidParameter(
                "noise variances must be ascending".into(),
            ));
        }
        prev = v;
    }

    let mut best: Option<(usize, f64)> = None;
    let mut prefix = 0.0;
    for k in 0..noise_vars.len() {
        if !noise_vars[k].is_finite() {
            break;
        }
        prefix += noise_vars[k];
        let level = (s_total + prefix) / (k as f64 + 1.0);
        if level > noise_vars[k] {
            best = Some((k + 1, level));
        }
    }
    let (active, water_level) =
        best.ok_or_else(|| Error::NonConvergent("no active subchannel found".into()))?;

    let powers: Vec<f64> = noise_vars
        .iter()
        .map(|&v| (water_level - v).max(0.0))
        .collect();
    let capacity_nats = (0..active)
        .map(|k| 0.5 * (water_level / noise_vars[k]).ln())
        .sum();
    Ok(WaterfillResult {
        water_level,
        active,
        powers,
        capacity_nats,
    })
}

/// Water table, preserved components, and per-component distortions of the
/// discrete rate-distortion problem.
#[derive(Debug, Clone)]
pub struct ReverseWaterfillResult {
    /// Water table `theta^2`.
    pub water_table: f64,
    /// Number of components with `sigma_k^2 > theta^2`.
    pub preserved: usize,
    /// `min(theta^2, sigma_k^2)` per component.
    pub distortions: Vec<f64>,
    pub rate_nats: f64,
    /// Set when the distortion equals the total energy (rate zero).
    pub total_distortion: bool,
}

/// Reverse waterfilling on descending signal variances: smallest positive
/// `theta^2` with `sum_k min(theta^2, sigma_k^2) = distortion`.
pub fn reverse_waterfill_discrete(
    signal_vars: &[f64],
    distortion: f64,
) -> Result<ReverseWaterfillResult> {
    if signal_vars.is_empty() {
        return Err(Error::InvalidParameter("no source components given".into()));
    }
    let mut prev = f64::INFINITY;
    for (k, &v) in signal_vars.iter().enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "signal variance {k} must be finite and nonnegative, got {v}"
            )));
        }
        if v > prev {
            return Err(Error::InvalidParameter(
                "signal variances must be descending".into(),
            ));
        }
        prev = v;
    }
    let total: f64 = signal_vars.iter().sum();
    if !(distortion > 0.0) || distortion > total * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "distortion must lie in (0, {total}], got {distortion}"
        )));
    }
    if distortion >= total * (1.0 - 1e-12) {
        return Ok(ReverseWaterfillResult {
            water_table: signal_vars[0],
            preserved: 0,
            distortions: signal_vars.to_vec(),
            rate_nats: 0.0,
            total_distortion: true,
        });
    }

    let n = signal_vars.len();
    let mut tail = total;
    let mut solution: Option<(usize, f64)> = None;
    for k in 0..n {
        tail -= signal_vars[k];
        let table = (distortion - tail) / (k as f64 + 1.0);
        let next = if k + 1 < n { signal_vars[k + 1] } else { 0.0 };
        if table > 0.0 && table < signal_vars[k] && table >= next {
            solution = Some((k + 1, table));
            break;
        }
    }
    let (preserved, water_table) =
        solution.ok_or_else(|| Error::NonConvergent("no water table found".into()))?;

    let distortions: Vec<f64> = signal_vars.iter().map(|&v| v.min(water_table)).collect();
    let rate_nats = (0..preserved)
        .map(|k| 0.5 * (signal_vars[k] / water_table).ln())
        .sum();
    Ok(ReverseWaterfillResult {
        water_table,
        preserved,
        distortions,
        rate_nats,
        total_distortion: false,
    })
}

/// Result of a time-frequency waterfilling integral.
#[derive(Debug, Clone, Copy)]
pub struct TfIntegralResult {
    /// Water level `nu` (capacity) or table `lambda` (rate), an energy
    /// density per unit time-frequency area.
    pub level: f64,
    pub value_nats: f64,
    /// The energy or distortion the integral actually attains at the
    /// returned level.
    pub achieved_constraint: f64,
    /// Measure of the waterfilling region.
    pub region_area: f64,
    /// Finest per-axis point count used.
    pub grid_n: usize,
}

const TF_LEVELS: [usize; 5] = [513, 1025, 2049, 4097, 8193];
const TF_REL_TOL: f64 = 1e-6;
const CONSTRAINT_REL_TOL: f64 = 1e-12;

fn quad_spans(symbol: &WeylSymbol) -> (f64, f64) {
    let (t0, w0) = symbol.decay_scale();
    (QUAD_SCALES * t0, QUAD_SCALES * w0)
}

/// Bisection on a monotone increasing constraint map over `[lo, hi]`.
fn bisect_level<F>(mut lo: f64, mut hi: f64, target: f64, constraint: F) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = constraint(mid);
        if (c - target).abs() <= CONSTRAINT_REL_TOL * target {
            return mid;
        }
        if c > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-15 * hi.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Capacity of the channel with spread symbol `p_r` under average input
/// energy `s_total` and noise density `theta2`, by waterfilling against
/// `N_r = (theta2 / 2pi) |p_r|^{-2}` in the time-frequency plane.
pub fn tf_capacity(
    symbol: &WeylSymbol,
    r: f64,
    s_total: f64,
    theta2: f64,
) -> Result<TfIntegralResult> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("need r >= 1, got {r}")));
    }
    if !(s_total > 0.0) || !(theta2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive input energy and noise density, got S = {s_total}, theta2 = {theta2}"
        )));
    }
    let (u_half, v_half) = quad_spans(symbol);
    let r2 = r * r;
    let s_scaled = s_total / r2;
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut prev_raw: Option<f64> = None;
    let mut prev_ext: Option<f64> = None;
    let mut nu_hint: Option<f64> = None;
    let mut out: Option<TfIntegralResult> = None;

    for (li, &n) in TF_LEVELS.iter().enumerate() {
        let plane = PlaneSamples::sample(|u, v| symbol.abs2(u, v), u_half, v_half, n);
        if plane.q_max <= 0.0 {
            return Err(Error::InvalidParameter(
                "symbol vanishes on the quadrature box".into(),
            ));
        }
        let constraint = |nu: f64| plane.integrate(GKind::OneMinusInv, nu, two_pi * nu / theta2);
        let nu_floor = theta2 / (two_pi * plane.q_max);

        // Bracket the water level, reusing the previous level's solution.
        let (mut lo, mut hi) = match nu_hint {
            Some(nu) => (nu * 0.98, nu * 1.02),
            None => (nu_floor, nu_floor * 2.0),
        };
        lo = lo.max(nu_floor);
        while constraint(lo) > s_scaled && lo > nu_floor {
            lo = (lo * 0.5).max(nu_floor);
        }
        let mut grow = 0;
        while constraint(hi) < s_scaled {
            hi *= 2.0;
            grow += 1;
            if grow > 200 || plane.region_touches_boundary(two_pi * hi / theta2) {
                return Err(Error::NonConvergent(format!(
                    "waterfilling region reaches the quadrature boundary at level {hi:.3e}; \
                     the requested energy exceeds what the symbol's decay box supports"
                )));
            }
        }
        let nu = bisect_level(lo, hi, s_scaled, constraint);
        let b = two_pi * nu / theta2;
        if plane.region_touches_boundary(b) {
            return Err(Error::NonConvergent(
                "waterfilling region reaches the quadrature boundary".into(),
            ));
        }
        nu_hint = Some(nu);

        let c_raw = r2 / two_pi * plane.integrate(GKind::HalfLnPlus, 1.0, b);
        let result = TfIntegralResult {
            level: nu,
            value_nats: c_raw,
            achieved_constraint: r2 * constraint(nu),
            region_area: r2 * plane.region_area(b),
            grid_n: n,
        };
        if let Some(praw) = prev_raw {
            let ext = c_raw + (c_raw - praw) / 3.0;
            let done = prev_ext
                .map(|pe| (ext - pe).abs() <= TF_REL_TOL * ext.abs().max(1e-9))
                .unwrap_or(false);
            out = Some(TfIntegralResult {
                value_nats: ext,
                ..result
            });
            if done || li == TF_LEVELS.len() - 1 {
                return Ok(out.unwrap());
            }
            prev_ext = Some(ext);
        } else {
            out = Some(result);
        }
        prev_raw = Some(c_raw);
    }
    Ok(out.unwrap())
}

/// Rate-distortion value for the source with spectrum density
/// `Phi_r = (sigma2 / 2pi) |p_r|^2` at squared-error distortion `distortion`.
pub fn tf_rate(
    symbol: &WeylSymbol,
    r: f64,
    distortion: f64,
    sigma2: f64,
) -> Result<TfIntegralResult> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("need r >= 1, got {r}")));
    }
    if !(sigma2 > 0.0) || !(distortion > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive source density and distortion, got sigma2 = {sigma2}, D = {distortion}"
        )));
    }
    let (u_half, v_half) = quad_spans(symbol);
    let r2 = r * r;
    let d_scaled = distortion / r2;
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut prev_raw: Option<f64> = None;
    let mut prev_ext: Option<f64> = None;
    let mut lam_hint: Option<f64> = None;
    let mut out: Option<TfIntegralResult> = None;

    for (li, &n) in TF_LEVELS.iter().enumerate() {
        let plane = PlaneSamples::sample(|u, v| symbol.abs2(u, v), u_half, v_half, n);
        if plane.q_max <= 0.0 {
            return Err(Error::InvalidParameter(
                "symbol vanishes on the quadrature box".into(),
            ));
        }
        let lam_max = sigma2 * plane.q_max / two_pi;
        let energy_scaled = plane.integrate(GKind::Identity, sigma2 / two_pi, 1.0);
        if d_scaled > energy_scaled * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "distortion {distortion} exceeds the average energy {}",
                energy_scaled * r2
            )));
        }
        if d_scaled >= energy_scaled * (1.0 - 1e-12) {
            // Table at or above the spectrum peak: everything is distortion.
            return Ok(TfIntegralResult {
                level: lam_max,
                value_nats: 0.0,
                achieved_constraint: energy_scaled * r2,
                region_area: 0.0,
                grid_n: n,
            });
        }
        // min(lambda, Phi) = Phi - (Phi - lambda)^+ splits into the cached
        // smooth energy integral and a region-supported piece.
        let constraint = |lam: f64| {
            energy_scaled - plane.integrate(GKind::ReluAbove, lam, sigma2 / (two_pi * lam))
        };
        let (mut lo, mut hi) = match lam_hint {
            Some(l) => ((l * 0.98).max(lam_max * 1e-300), (l * 1.02).min(lam_max)),
            None => (lam_max * 1e-12, lam_max),
        };
        while lo > lam_max * 1e-290 && constraint(lo) > d_scaled {
            lo *= 0.5;
        }
        while hi < lam_max && constraint(hi) < d_scaled {
            hi = (hi * 2.0).min(lam_max);
        }
        let lam = bisect_level(lo, hi, d_scaled, constraint);
        let b = sigma2 / (two_pi * lam);
        if plane.region_touches_boundary(b) {
            return Err(Error::NonConvergent(
                "preserved region reaches the quadrature boundary".into(),
            ));
        }
        lam_hint = Some(lam);

        let r_raw = r2 / two_pi * plane.integrate(GKind::HalfLnPlus, 1.0, b);
        let result = TfIntegralResult {
            level: lam,
            value_nats: r_raw,
            achieved_constraint: r2 * constraint(lam),
            region_area: r2 * plane.region_area(b),
            grid_n: n,
        };
        if let Some(praw) = prev_raw {
            let ext = r_raw + (r_raw - praw) / 3.0;
            let done = prev_ext
                .map(|pe| (ext - pe).abs() <= TF_REL_TOL * ext.abs().max(1e-9))
                .unwrap_or(false);
            out = Some(TfIntegralResult {
                value_nats: ext,
                ..result
            });
            if done || li == TF_LEVELS.len() - 1 {
                return Ok(out.unwrap());
            }
            prev_ext = Some(ext);
        } else {
            out = Some(result);
        }
        prev_raw = Some(r_raw);
    }
    Ok(out.unwrap())
}
