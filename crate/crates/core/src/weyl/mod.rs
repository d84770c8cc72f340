//! Time-frequency transfer functions (Weyl symbols), their discretization to
//! kernel matrices on uniform grids, spectral extraction, and the trace /
//! eigenvalue-sum identities built on them.

mod analysis;
mod spectrum;
mod transform;

pub use analysis::{
    compose_check, symbol_moments, szego_gap, trace_identity_check, ComposeReport, MomentSummary,
    SzegoGap, TraceIdentity,
};
pub use spectrum::{spectrum, SpectralData};
pub use transform::{kernel_to_symbol, symbol_to_kernel, DiscreteOperator, KernelMatrix, SampledSymbol};

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// Analytic time-frequency transfer function `p(t, omega)` with its e-folding
/// decay scales, used to size grids.
#[derive(Clone)]
pub struct WeylSymbol {
    eval: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
    decay_scale: (f64, f64),
}

impl std::fmt::Debug for WeylSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeylSymbol")
            .field("decay_scale", &self.decay_scale)
            .finish()
    }
}

impl WeylSymbol {
    /// Wrap a callback with e-folding scales `(t_scale, omega_scale)`:
    /// `|p|` should have dropped by `e^{-1}` at roughly those offsets.
    pub fn new<F>(eval: F, t_scale: f64, omega_scale: f64) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            decay_scale: (t_scale, omega_scale),
        }
    }

    /// The bivariate Gaussian symbol `exp(-(t^2/gamma^2 + gamma^2 omega^2)/2)`.
    pub fn gaussian(gamma: f64) -> Self {
        let g2 = gamma * gamma;
        Self::new(
            move |t, w| Complex64::new((-0.5 * (t * t / g2 + g2 * w * w)).exp(), 0.0),
            std::f64::consts::SQRT_2 * gamma,
            std::f64::consts::SQRT_2 / gamma,
        )
    }

    pub fn eval(&self, t: f64, omega: f64) -> Complex64 {
        (self.eval)(t, omega)
    }

    /// Spread symbol `p_r(t, omega) = p(t/r, omega/r)`.
    pub fn eval_spread(&self, r: f64, t: f64, omega: f64) -> Complex64 {
        (self.eval)(t / r, omega / r)
    }

    /// `|p(t, omega)|^2`.
    pub fn abs2(&self, t: f64, omega: f64) -> f64 {
        (self.eval)(t, omega).norm_sqr()
    }

    pub fn decay_scale(&self) -> (f64, f64) {
        self.decay_scale
    }

    /// Numerical check of rapid decay: `|p|` must be below `1e-12` of the
    /// central peak at eight e-folding scales.
    pub fn validate_decay(&self) -> Result<()> {
        let (t0, w0) = self.decay_scale;
        let mut peak = 0.0f64;
        for i in -4..=4 {
            for j in -4i32..=4 {
                let v = self.eval(i as f64 * t0 / 4.0, j as f64 * w0 / 4.0).norm();
                peak = peak.max(v);
            }
        }
        if peak == 0.0 {
            return Ok(());
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let probes = [
            (8.0 * t0, 0.0),
            (-8.0 * t0, 0.0),
            (0.0, 8.0 * w0),
            (0.0, -8.0 * w0),
            (8.0 * t0 * s, 8.0 * w0 * s),
            (-8.0 * t0 * s, 8.0 * w0 * s),
            (8.0 * t0 * s, -8.0 * w0 * s),
            (-8.0 * t0 * s, -8.0 * w0 * s),
        ];
        for (t, w) in probes {
            let v = self.eval(t, w).norm();
            if v > 1e-12 * peak {
                return Err(Error::InvalidParameter(format!(
                    "symbol does not decay: |p({t:.3}, {w:.3})| = {v:.3e} vs peak {peak:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Uniform time grid with its discrete-Fourier dual frequency grid.
///
/// `n` is a power of two; `t_i = -t_half + i dt` with `dt = 2 t_half / n`, and
/// the dual grid has spacing `dw = 2 pi / (n dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    t_half: f64,
    n: usize,
    dt: f64,
}

/// Sizing policy for [`Grid2D::for_symbol`].
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// e-folding scales of `p_r` the grid must cover in each direction.
    pub scales: f64,
    pub min_n: usize,
    pub max_n: usize,
    /// Extra half-span floors, e.g. to hold a Hermite basis.
    pub t_floor: f64,
    pub omega_floor: f64,
    /// Double the time-bandwidth budget so Wigner transforms of kernels on
    /// this grid resolve the symbol inside half the Nyquist band.
    pub wigner_margin: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            scales: 5.2,
            min_n: 256,
            max_n: 1 << 14,
            t_floor: 0.0,
            omega_floor: 0.0,
            wigner_margin: true,
        }
    }
}

impl Grid2D {
    pub fn new(t_half: f64, n: usize) -> Result<Self> {
        if !(t_half > 0.0) || !t_half.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid half-span must be positive, got {t_half}"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        Ok(Self {
            t_half,
            n,
            dt: 2.0 * t_half / n as f64,
        })
    }

    /// Size a grid for the spread symbol `p_r` from its decay scales: the
    /// half-spans cover `spec.scales` e-foldings in both time and frequency,
    /// and `n` follows from the time-bandwidth product.
    pub fn for_symbol(symbol: &WeylSymbol, r: f64, spec: &GridSpec) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "spreading factor must satisfy r >= 1, got {r}"
            )));
        }
        let (t0, w0) = symbol.decay_scale();
        let t_half = (spec.scales * r * t0).max(spec.t_floor);
        let w_half = (spec.scales * r * w0).max(spec.omega_floor);
        let margin = if spec.wigner_margin { 2.0 } else { 1.0 };
        let tb = margin * (2.0 * t_half) * (2.0 * w_half) / (2.0 * std::f64::consts::PI);
        let mut n = spec.min_n.max(tb.ceil() as usize).next_power_of_two();
        if n < spec.min_n {
            n = spec.min_n.next_power_of_two();
        }
        if n > spec.max_n {
            return Err(Error::InvalidParameter(format!(
                "grid for r = {r} would need n = {n} > max {}",
                spec.max_n
            )));
        }
        Self::new(t_half, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.n as f64 * self.dt)
    }

    pub fn t_half(&self) -> f64 {
        self.t_half
    }

    /// Highest represented frequency `pi / dt`.
    pub fn omega_half(&self) -> f64 {
        std::f64::consts::PI / self.dt
    }

    pub fn t(&self, i: usize) -> f64 {
        -self.t_half + i as f64 * self.dt
    }

    pub fn t_points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.t(i)).collect()
    }

    /// Full dual grid `omega_j = (j - n/2) d_omega`.
    pub fn omega(&self, j: usize) -> f64 {
        (j as f64 - self.n as f64 / 2.0) * self.d_omega()
    }

    pub fn omega_points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.omega(j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_symbol_decays() {
        WeylSymbol::gaussian(1.0).validate_decay().unwrap();
        WeylSymbol::gaussian(0.1).validate_decay().unwrap();
    }

    #[test]
    fn slow_symbol_rejected() {
        let slow = WeylSymbol::new(
            |t, w| Complex64::new(1.0 / (1.0 + t * t + w * w), 0.0),
            1.0,
            1.0,
        );
        assert!(slow.validate_decay().is_err());
    }

    #[test]
    fn grid_duality() {
        let g = Grid2D::new(8.0, 256).unwrap();
        assert_eq!(g.n(), 256);
        let dt = g.dt();
        let dw = g.d_omega();
        assert!((dt * dw * g.n() as f64 - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(g.t(0), -8.0);
        assert!((g.omega(128) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn grid_sizing_scales_with_r() {
        let sym = WeylSymbol::gaussian(1.0);
        let spec = GridSpec::default();
        let g1 = Grid2D::for_symbol(&sym, 1.0, &spec).unwrap();
        let g4 = Grid2D::for_symbol(&sym, 4.0, &spec).unwrap();
        assert!(g4.n() > g1.n());
        // Frequency coverage keeps up with the spread symbol.
        let (_, w0) = sym.decay_scale();
        assert!(g4.omega_half() >= spec.scales * 4.0 * w0);
    }

    #[test]
    fn grid_sizing_gamma_invariant_point_count() {
        let spec = GridSpec::default();
        let a = Grid2D::for_symbol(&WeylSymbol::gaussian(1.0), 2.0, &spec).unwrap();
        let b = Grid2D::for_symbol(&WeylSymbol::gaussian(0.1), 2.0, &spec).unwrap();
        assert_eq!(a.n(), b.n());
    }

    #[test]
    fn grid_rejects_non_power_of_two() {
        assert!(Grid2D::new(4.0, 100).is_err());
        assert!(Grid2D::new(-1.0, 128).is_err());
    }
}
