//! Discretization of the symbol <-> kernel correspondence.
//!
//! `symbol_to_kernel` evaluates
//! `h(r; t, t') = (1/2pi) int p_r((t+t')/2, w) exp(i (t-t') w) dw`
//! with one inverse FFT per midpoint anti-diagonal; the frequency sum uses
//! `2n` samples so the full range of time lags `t - t'` is alias-free.
//!
//! `kernel_to_symbol` is the discrete Wigner transform
//! `sigma(x, xi) = int exp(-i xi x') h(x + x'/2, x - x'/2) dx'`.
//! Kernel values are only available on anti-diagonals with lag spacing
//! `2 dt`, so the returned symbol covers the inner half of the dual grid,
//! `|xi| < pi / (2 dt)`; grids sized with `wigner_margin` keep the symbol
//! content inside that band.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use super::{Grid2D, WeylSymbol};
use crate::error::{Error, Result};

/// Kernel matrix entries `A_ij = h(r; t_i, t_j) dt`; real when the channel
/// kernel is real-valued.
#[derive(Debug, Clone)]
pub enum KernelMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// Discretized integral operator on a [`Grid2D`].
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: Grid2D,
    pub matrix: KernelMatrix,
}

impl DiscreteOperator {
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn is_real(&self) -> bool {
        matches!(self.matrix, KernelMatrix::Real(_))
    }

    pub fn as_real(&self) -> Option<&DMatrix<f64>> {
        match &self.matrix {
            KernelMatrix::Real(m) => Some(m),
            KernelMatrix::Complex(_) => None,
        }
    }

    /// Sum of squared singular values, `sum_k lambda_k` of the gram operator.
    pub fn frobenius_sq(&self) -> f64 {
        match &self.matrix {
            KernelMatrix::Real(m) => m.iter().map(|x| x * x).sum(),
            KernelMatrix::Complex(m) => m.iter().map(|x| x.norm_sqr()).sum(),
        }
    }

    /// Matrix trace; approximates the operator trace `int h(t, t) dt`.
    pub fn trace(&self) -> Complex64 {
        match &self.matrix {
            KernelMatrix::Real(m) => Complex64::new(m.trace(), 0.0),
            KernelMatrix::Complex(m) => m.trace(),
        }
    }

    /// Adjoint operator (conjugate transpose of the matrix).
    pub fn adjoint(&self) -> Self {
        let matrix = match &self.matrix {
            KernelMatrix::Real(m) => KernelMatrix::Real(m.transpose()),
            KernelMatrix::Complex(m) => KernelMatrix::Complex(m.adjoint()),
        };
        Self {
            grid: self.grid,
            matrix,
        }
    }

    /// Operator composition `self o rhs` (matrix product on a shared grid).
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.grid != rhs.grid {
            return Err(Error::InvalidParameter(
                "operator composition requires a common grid".into(),
            ));
        }
        let matrix = match (&self.matrix, &rhs.matrix) {
            (KernelMatrix::Real(a), KernelMatrix::Real(b)) => KernelMatrix::Real(a * b),
            (a, b) => {
                let ac = to_complex(a);
                let bc = to_complex(b);
                KernelMatrix::Complex(ac * bc)
            }
        };
        Ok(Self {
            grid: self.grid,
            matrix,
        })
    }

    /// `P* P`, the positive operator whose eigenvalues are the squared
    /// singular values of `P`.
    pub fn gram(&self) -> Self {
        let matrix = match &self.matrix {
            KernelMatrix::Real(m) => KernelMatrix::Real(m.tr_mul(m)),
            KernelMatrix::Complex(m) => KernelMatrix::Complex(m.ad_mul(m)),
        };
        Self {
            grid: self.grid,
            matrix,
        }
    }

    /// `P P*`, sharing the nonzero spectrum of [`Self::gram`].
    pub fn gram_adjoint(&self) -> Self {
        let matrix = match &self.matrix {
            KernelMatrix::Real(m) => KernelMatrix::Real(m * m.transpose()),
            KernelMatrix::Complex(m) => {
                let adj = m.adjoint();
                KernelMatrix::Complex(m * adj)
            }
        };
        Self {
            grid: self.grid,
            matrix,
        }
    }

    /// Apply to a real grid function (samples at `t_i`).
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        match &self.matrix {
            KernelMatrix::Real(m) => {
                let x = nalgebra::DVector::from_column_slice(f);
                (m * x).as_slice().to_vec()
            }
            KernelMatrix::Complex(m) => {
                let x = nalgebra::DVector::from_iterator(
                    f.len(),
                    f.iter().map(|&v| Complex64::new(v, 0.0)),
                );
                (m * x).iter().map(|c| c.re).collect()
            }
        }
    }
}

fn to_complex(m: &KernelMatrix) -> DMatrix<Complex64> {
    match m {
        KernelMatrix::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
        KernelMatrix::Complex(m) => m.clone(),
    }
}

/// Discretize the LTV filter with spread symbol `p_r` on `grid`.
///
/// Fails with [`Error::GridTooSmall`] when the sampled symbol has not decayed
/// to `1e-10` of its peak at the grid boundary.
pub fn symbol_to_kernel(symbol: &WeylSymbol, r: f64, grid: &Grid2D) -> Result<DiscreteOperator> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "spreading factor must satisfy r >= 1, got {r}"
        )));
    }
    symbol.validate_decay()?;

    let n = grid.n();
    let big_n = 2 * n;
    let dt = grid.dt();
    let d_omega_fine = std::f64::consts::PI / (n as f64 * dt);
    let t_min = grid.t(0);

    let mut planner = FftPlanner::<f64>::new();
    let fft: Arc<dyn Fft<f64>> = planner.plan_fft(big_n, FftDirection::Inverse);

    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    let mut peak = 0.0f64;
    let mut boundary = 0.0f64;
    let mut asym = 0.0f64;

    const CHUNK: usize = 128;
    let mut s0 = 0usize;
    while s0 < big_n - 1 {
        let s1 = (s0 + CHUNK).min(big_n - 1);
        let rows: Vec<(usize, Vec<Complex64>, f64, f64, f64)> = (s0..s1)
            .into_par_iter()
            .map(|s| {
                let mid = t_min + s as f64 * dt / 2.0;
                let mut buf: Vec<Complex64> = (0..big_n)
                    .map(|q| {
                        let w = (q as f64 - n as f64) * d_omega_fine;
                        symbol.eval_spread(r, mid, w)
                    })
                    .collect();
                let mut row_peak = 0.0f64;
                let mut row_boundary = 0.0f64;
                let mut row_asym = 0.0f64;
                for (q, v) in buf.iter().enumerate() {
                    let mag = v.norm();
                    row_peak = row_peak.max(mag);
                    if q == 0 || q == big_n - 1 || s == 0 || s == big_n - 2 {
                        row_boundary = row_boundary.max(mag);
                    }
                }
                for q in 1..n {
                    row_asym = row_asym.max((buf[q] - buf[big_n - q].conj()).norm());
                }
                let mut scratch =
                    vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
                fft.process_with_scratch(&mut buf, &mut scratch);
                (s, buf, row_peak, row_boundary, row_asym)
            })
            .collect();
        for (s, buf, row_peak, row_boundary, row_asym) in rows {
            peak = peak.max(row_peak);
            boundary = boundary.max(row_boundary);
            asym = asym.max(row_asym);
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            let scale = sign / big_n as f64;
            let i_lo = s.saturating_sub(n - 1).max(0);
            let i_hi = s.min(n - 1);
            for i in i_lo..=i_hi {
                let j = s - i;
                let k = 2 * i as i64 - s as i64;
                let idx = k.rem_euclid(big_n as i64) as usize;
                matrix[(i, j)] = buf[idx] * scale;
            }
        }
        s0 = s1;
    }

    if peak > 0.0 && boundary > 1e-10 * peak {
        return Err(Error::GridTooSmall {
            boundary,
            limit: 1e-10 * peak,
            peak,
        });
    }

    // Hermitian symmetry of p_r in omega makes the kernel real-valued.
    let matrix = if asym <= 1e-12 * peak.max(f64::MIN_POSITIVE) {
        KernelMatrix::Real(matrix.map(|c| c.re))
    } else {
        KernelMatrix::Complex(matrix)
    };

    Ok(DiscreteOperator {
        grid: *grid,
        matrix,
    })
}

/// Symbol samples returned by the discrete Wigner transform: full time grid,
/// inner half of the dual frequency grid.
#[derive(Debug, Clone)]
pub struct SampledSymbol {
    pub grid: Grid2D,
    /// `omega_j = (j - n/4) d_omega`, `j = 0 .. n/2`.
    pub omega: Vec<f64>,
    /// `n x n/2`, rows indexed by `t_i`.
    pub values: DMatrix<Complex64>,
}

impl SampledSymbol {
    pub fn n_t(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_omega(&self) -> usize {
        self.values.ncols()
    }

    /// `(1/2pi) iint sigma dt domega` over the sampled band; by the trace
    /// rule this approximates the operator trace.
    pub fn plane_integral(&self) -> Complex64 {
        let cell = self.grid.dt() * self.grid.d_omega() / (2.0 * std::f64::consts::PI);
        self.values.iter().sum::<Complex64>() * cell
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Relative L2 distance to a reference sampled on the same points.
    pub fn rel_l2_error<F>(&self, reference: F) -> f64
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.n_t() {
            let t = self.grid.t(i);
            for (j, &w) in self.omega.iter().enumerate() {
                let want = reference(t, w);
                num += (self.values[(i, j)] - want).norm_sqr();
                den += want.norm_sqr();
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

/// Discrete Wigner transform of the operator kernel.
pub fn kernel_to_symbol(op: &DiscreteOperator) -> SampledSymbol {
    let n = op.n();
    let big_n = 2 * n;
    let half = n / 2;
    let grid = op.grid;

    let mut planner = FftPlanner::<f64>::new();
    let fft: Arc<dyn Fft<f64>> = planner.plan_fft(big_n, FftDirection::Forward);

    let entry = |i: usize, j: usize| -> Complex64 {
        match &op.matrix {
            KernelMatrix::Real(m) => Complex64::new(m[(i, j)], 0.0),
            KernelMatrix::Complex(m) => m[(i, j)],
        }
    };

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let reach = i.min(n - 1 - i);
            let mut buf = vec![Complex64::new(0.0, 0.0); big_n];
            for m in -(reach as i64)..=(reach as i64) {
                let idx = (2 * m).rem_euclid(big_n as i64) as usize;
                buf[idx] = entry((i as i64 + m) as usize, (i as i64 - m) as usize);
            }
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(&mut buf, &mut scratch);
            (0..half)
                .map(|j| {
                    let q = (2 * j as i64 - half as i64).rem_euclid(big_n as i64) as usize;
                    2.0 * buf[q]
                })
                .collect()
        })
        .collect();

    let values = DMatrix::from_fn(n, half, |i, j| rows[i][j]);
    let d_omega = grid.d_omega();
    let omega = (0..half)
        .map(|j| (j as f64 - half as f64 / 2.0) * d_omega)
        .collect();

    SampledSymbol { grid, omega, values }
}
