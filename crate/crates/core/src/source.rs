//! The nonstationary Gaussian source: Karhunen-Loeve sampling against the
//! channel's output singular functions, its Wigner-Ville spectrum (WVS), and
//! Monte Carlo estimation of the WVS from realizations.
//!
//! Realizations are reproducible across runs and schedulers: draw `i` uses
//! the ChaCha12 substream keyed by `(seed, source tag, i)` (see the crate's
//! substream scheme).

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heat::HeatChannelModel;
use crate::rng::{substream, TAG_SOURCE};
use crate::special::HermiteBasis;
use crate::weyl::{kernel_to_symbol, DiscreteOperator, Grid2D, SpectralData};

/// Spectral description of the source: analytic Gaussian-symbol model or a
/// computed spectrum.
pub enum SourceSpectrum {
    Heat(HeatChannelModel),
    Discrete(SpectralData),
}

/// Karhunen-Loeve source configuration.
pub struct SourceConfig {
    pub spectrum: SourceSpectrum,
    /// PSD of the white noise driving the filter; zero gives the
    /// deterministic zero source.
    pub sigma2: f64,
    /// Truncation order of the expansion.
    pub k_trunc: usize,
    pub seed: u64,
}

impl SourceConfig {
    /// Analytic model with the truncation chosen so the omitted tail holds
    /// less than `1e-4` of the average energy.
    pub fn heat(gamma: f64, r: f64, sigma2: f64, seed: u64) -> Result<Self> {
        let model = HeatChannelModel::new(gamma, r)?;
        if !(sigma2 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "source PSD must be nonnegative, got {sigma2}"
            )));
        }
        // 1 - rho^{2K} >= 1 - 1e-4.
        let k_trunc = ((1e4f64).ln() / (2.0 * model.delta)).ceil() as usize + 1;
        Ok(Self {
            spectrum: SourceSpectrum::Heat(model),
            sigma2,
            k_trunc,
            seed,
        })
    }
}

/// Precomputed sampler: output singular functions on a fixed time grid and
/// the per-coefficient standard deviations.
pub struct SourceSampler {
    g_samples: DMatrix<f64>,
    std_devs: Vec<f64>,
    lambdas: Vec<f64>,
    sigma2: f64,
    seed: u64,
    dt: f64,
}

impl SourceSampler {
    pub fn new(cfg: &SourceConfig, ts: &[f64], dt: f64) -> Result<Self> {
        let n = ts.len();
        let (g_samples, lambdas, total_energy) = match &cfg.spectrum {
            SourceSpectrum::Heat(model) => {
                let k = cfg.k_trunc;
                let basis = HermiteBasis::new(model.gamma, k.saturating_sub(1))?;
                let mut g = DMatrix::<f64>::zeros(n, k);
                for (i, &t) in ts.iter().enumerate() {
                    for (j, v) in basis.eval_all(t).iter().enumerate() {
                        g[(i, j)] = *v;
                    }
                }
                let lambdas: Vec<f64> = (0..k).map(|j| model.eigenvalue(j)).collect();
                (g, lambdas, model.eigenvalue_sum())
            }
            SourceSpectrum::Discrete(sd) => {
                if sd.g_vecs.nrows() != n {
                    return Err(Error::InvalidParameter(format!(
                        "spectral data lives on a {}-point grid, sampler grid has {n} points",
                        sd.g_vecs.nrows()
                    )));
                }
                let k = cfg.k_trunc.min(sd.lambdas.len());
                let g = sd.g_vecs.columns(0, k).into_owned();
                let lambdas = sd.lambdas[..k].to_vec();
                (g, lambdas, sd.sum())
            }
        };
        let truncated: f64 = lambdas.iter().sum();
        if truncated < 0.9999 * total_energy {
            return Err(Error::InvalidParameter(format!(
                "truncation keeps {truncated:.6e} of {total_energy:.6e} energy; \
                 raise k_trunc"
            )));
        }
        let std_devs = lambdas
            .iter()
            .map(|&l| (cfg.sigma2 * l).sqrt())
            .collect();
        Ok(Self {
            g_samples,
            std_devs,
            lambdas,
            sigma2: cfg.sigma2,
            seed: cfg.seed,
            dt,
        })
    }

    pub fn coefficient_count(&self) -> usize {
        self.std_devs.len()
    }

    /// Average energy of the truncated expansion, `sigma^2 sum_k lambda_k`.
    pub fn mean_energy(&self) -> f64 {
        self.sigma2 * self.lambdas.iter().sum::<f64>()
    }

    /// KL coefficients of one realization.
    pub fn coefficients(&self, draw: u64) -> Vec<f64> {
        let mut rng = substream(self.seed, TAG_SOURCE, draw);
        self.std_devs
            .iter()
            .map(|&s| {
                let z: f64 = StandardNormal.sample(&mut rng);
                s * z
            })
            .collect()
    }

    /// One realization `x(t_i) = sum_k X_k g_k(t_i)`.
    pub fn realization(&self, draw: u64) -> Vec<f64> {
        let coeff = nalgebra::DVector::from_vec(self.coefficients(draw));
        (&self.g_samples * coeff).as_slice().to_vec()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Wigner-Ville spectrum samples on the (time x inner half frequency) grid.
#[derive(Debug, Clone)]
pub struct Wvs {
    pub grid: Grid2D,
    pub omega: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl Wvs {
    /// `iint Phi dt domega`, the average energy of the source.
    pub fn plane_integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dt() * self.grid.d_omega()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn rel_l2_distance(&self, other: &Wvs) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            num += (a - b) * (a - b);
            den += b * b;
        }
        (num / den).sqrt()
    }
}

/// WVS of the filtered source: `Phi = (sigma^2 / 2pi) sigma_{P P*}`.
/// `op` must be the composed operator `P_r P_r*`.
pub fn wvs(op: &DiscreteOperator, sigma2: f64) -> Result<Wvs> {
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "source PSD must be nonnegative, got {sigma2}"
        )));
    }
    let sampled = kernel_to_symbol(op);
    let max_re = sampled
        .values
        .iter()
        .map(|c| c.re.abs())
        .fold(0.0f64, f64::max);
    let max_im = sampled
        .values
        .iter()
        .map(|c| c.im.abs())
        .fold(0.0f64, f64::max);
    if max_im > 1e-6 * max_re.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(
            "operator does not look self-adjoint: Wigner symbol has an imaginary part".into(),
        ));
    }
    let scale = sigma2 / (2.0 * std::f64::consts::PI);
    Ok(Wvs {
        grid: sampled.grid,
        omega: sampled.omega.clone(),
        values: sampled.values.map(|c| scale * c.re),
    })
}

/// Monte Carlo WVS estimate: the expected Wigner distribution of the
/// realizations. The Wigner distribution is linear in the outer product
/// `x x^T`, so averaging realization-wise Wigner distributions equals one
/// Wigner transform of the accumulated empirical autocorrelation.
pub fn empirical_wvs(sampler: &SourceSampler, n_draws: usize, grid: &Grid2D) -> Result<Wvs> {
    if n_draws < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 draws for a WVS estimate, got {n_draws}"
        )));
    }
    let corr = empirical_autocorrelation(sampler, n_draws, grid)?;
    let op = DiscreteOperator {
        grid: *grid,
        matrix: crate::weyl::KernelMatrix::Real(corr * grid.dt()),
    };
    // Phi_hat = (1/2pi) * Wigner(R_hat); the sigma^2 factor is already inside
    // the realizations.
    wvs(&op, 1.0)
}

/// `R_hat(t_i, t_j) = mean over draws of x(t_i) x(t_j)`.
pub fn empirical_autocorrelation(
    sampler: &SourceSampler,
    n_draws: usize,
    grid: &Grid2D,
) -> Result<DMatrix<f64>> {
    let n = grid.n();
    if sampler.g_samples.nrows() != n {
        return Err(Error::InvalidParameter(
            "sampler and grid sizes disagree".into(),
        ));
    }
    const CHUNK: usize = 256;
    let chunks: Vec<(usize, usize)> = (0..n_draws)
        .step_by(CHUNK)
        .map(|c0| (c0, CHUNK.min(n_draws - c0)))
        .collect();
    let partials: Vec<DMatrix<f64>> = chunks
        .into_par_iter()
        .map(|(c0, len)| {
            let mut x = DMatrix::<f64>::zeros(n, len);
            for j in 0..len {
                let r = sampler.realization((c0 + j) as u64);
                x.column_mut(j).copy_from_slice(&r);
            }
            &x * x.transpose()
        })
        .collect();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for p in partials {
        acc += p;
    }
    Ok(acc / n_draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::{symbol_to_kernel, GridSpec, WeylSymbol};

    fn heat_setup(r: f64) -> (SourceConfig, Grid2D, SourceSampler) {
        let cfg = SourceConfig::heat(1.0, r, 2.0, 77).unwrap();
        let sym = WeylSymbol::gaussian(1.0);
        let grid = Grid2D::for_symbol(&sym, r, &GridSpec::default()).unwrap();
        let sampler = SourceSampler::new(&cfg, &grid.t_points(), grid.dt()).unwrap();
        (cfg, grid, sampler)
    }

    #[test]
    fn truncation_keeps_energy() {
        let (cfg, _, sampler) = heat_setup(2.0);
        let model = match &cfg.spectrum {
            SourceSpectrum::Heat(m) => *m,
            _ => unreachable!(),
        };
        let total = cfg.sigma2 * model.eigenvalue_sum();
        assert!(sampler.mean_energy() >= 0.9999 * total);
    }

    #[test]
    fn zero_psd_gives_zero_realizations() {
        let cfg = SourceConfig::heat(1.0, 1.0, 0.0, 5).unwrap();
        let sym = WeylSymbol::gaussian(1.0);
        let grid = Grid2D::for_symbol(&sym, 1.0, &GridSpec::default()).unwrap();
        let sampler = SourceSampler::new(&cfg, &grid.t_points(), grid.dt()).unwrap();
        let x = sampler.realization(3);
        assert!(x.iter().all(|&v| v == 0.0));
        // The estimated spectrum of the zero source is identically zero.
        let est = empirical_wvs(&sampler, 200, &grid).unwrap();
        assert!(est.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn realizations_are_reproducible() {
        let (_, _, sampler) = heat_setup(1.0);
        assert_eq!(sampler.realization(11), sampler.realization(11));
        assert_ne!(sampler.realization(11), sampler.realization(12));
    }

    #[test]
    fn leading_coefficient_variance_matches() {
        // Empirical variance of <x, g_0> dt over many draws vs sigma^2 lambda_0.
        let (cfg, grid, sampler) = heat_setup(1.0);
        let model = match &cfg.spectrum {
            SourceSpectrum::Heat(m) => *m,
            _ => unreachable!(),
        };
        let basis = HermiteBasis::new(1.0, 0).unwrap();
        let g0 = basis.sample(0, &grid.t_points()).unwrap();
        let n_draws = 10_000;
        let mut acc = 0.0;
        for d in 0..n_draws {
            let x = sampler.realization(d as u64);
            let dot: f64 = x
                .iter()
                .zip(g0.iter())
                .map(|(&a, &b)| a * b)
                .sum::<f64>()
                * grid.dt();
            acc += dot * dot;
        }
        let var = acc / n_draws as f64;
        let expect = cfg.sigma2 * model.eigenvalue(0);
        let rel = (var - expect).abs() / expect;
        assert!(rel < 0.05, "variance {var} vs {expect}, rel {rel}");
    }

    #[test]
    fn mean_realization_energy_matches() {
        let (_, grid, sampler) = heat_setup(1.0);
        let n_draws = 10_000;
        let energies: Vec<f64> = (0..n_draws)
            .map(|d| {
                sampler
                    .realization(d as u64)
                    .iter()
                    .map(|&v| v * v)
                    .sum::<f64>()
                    * grid.dt()
            })
            .collect();
        let mean = energies.iter().sum::<f64>() / n_draws as f64;
        let expect = sampler.mean_energy();
        let rel = (mean - expect).abs() / expect;
        assert!(rel < 0.02, "mean energy {mean} vs {expect}, rel {rel}");
    }

    #[test]
    fn wvs_integrates_to_mean_energy() {
        let sym = WeylSymbol::gaussian(1.0);
        for &r in &[1.0, 2.0] {
            let grid = Grid2D::for_symbol(&sym, r, &GridSpec::default()).unwrap();
            let op = symbol_to_kernel(&sym, r, &grid).unwrap();
            let pps = op.gram_adjoint();
            let sigma2 = 2.0;
            let phi = wvs(&pps, sigma2).unwrap();
            let energy = phi.plane_integral();
            let expect = sigma2 * r * r / 2.0;
            let rel = (energy - expect).abs() / expect;
            assert!(rel < 1e-4, "r={r}: energy {energy} vs {expect}");
        }
    }

    #[test]
    fn wvs_linear_in_sigma2() {
        let sym = WeylSymbol::gaussian(1.0);
        let grid = Grid2D::for_symbol(&sym, 1.0, &GridSpec::default()).unwrap();
        let pps = symbol_to_kernel(&sym, 1.0, &grid).unwrap().gram_adjoint();
        let a = wvs(&pps, 1.0).unwrap();
        let b = wvs(&pps, 2.0).unwrap();
        let mut max_dev = 0.0f64;
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            max_dev = max_dev.max((2.0 * x - y).abs());
        }
        assert!(max_dev < 1e-14);
    }

    #[test]
    fn gaussian_wvs_nonnegative() {
        let sym = WeylSymbol::gaussian(1.0);
        let grid = Grid2D::for_symbol(&sym, 2.0, &GridSpec::default()).unwrap();
        let pps = symbol_to_kernel(&sym, 2.0, &grid).unwrap().gram_adjoint();
        let phi = wvs(&pps, 1.0).unwrap();
        assert!(phi.min_value() > -1e-12 * phi.values.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn wvs_principal_term_matches_power_residual() {
        // Phi - (sigma^2/2pi)|p_r|^2 is (sigma^2/2pi) times the first-order
        // residual of the composed operator's symbol.
        let sym = WeylSymbol::gaussian(1.0);
        let r = 1.0;
        let sigma2 = 2.0;
        let grid = Grid2D::for_symbol(&sym, r, &GridSpec::default()).unwrap();
        let pps = symbol_to_kernel(&sym, r, &grid).unwrap().gram_adjoint();
        let phi = wvs(&pps, sigma2).unwrap();
        let scale = sigma2 / (2.0 * std::f64::consts::PI);
        let mut max_diff = 0.0f64;
        for i in 0..grid.n() {
            let t = grid.t(i);
            for (j, &w) in phi.omega.iter().enumerate() {
                let principal = scale * sym.eval_spread(r, t, w).norm_sqr();
                max_diff = max_diff.max((phi.values[(i, j)] - principal).abs());
            }
        }
        let rep = crate::weyl::compose_check(&sym, r, 1).unwrap();
        let expect = scale * rep.max_residual;
        assert!(
            (max_diff - expect).abs() < 1e-8 * expect.max(1e-12),
            "{max_diff} vs {expect}"
        );
    }

    #[test]
    fn empirical_wvs_converges_to_wvs() {
        let sym = WeylSymbol::gaussian(1.0);
        let r = 1.0;
        let grid = Grid2D::for_symbol(&sym, r, &GridSpec::default()).unwrap();
        let cfg = SourceConfig::heat(1.0, r, 1.5, 31).unwrap();
        let sampler = SourceSampler::new(&cfg, &grid.t_points(), grid.dt()).unwrap();
        let est = empirical_wvs(&sampler, 10_000, &grid).unwrap();
        let pps = symbol_to_kernel(&sym, r, &grid).unwrap().gram_adjoint();
        let truth = wvs(&pps, cfg.sigma2).unwrap();
        let dist = est.rel_l2_distance(&truth);
        assert!(dist < 0.05, "relative L2 distance {dist}");
    }

    #[test]
    fn empirical_wvs_needs_draws() {
        let (_, grid, sampler) = heat_setup(1.0);
        assert!(empirical_wvs(&sampler, 50, &grid).is_err());
    }

    #[test]
    fn autocorrelation_matches_kernel() {
        // R(t1, t2) -> sigma^2 K_{PP*}(t1, t2) within Monte Carlo tolerance.
        let sym = WeylSymbol::gaussian(1.0);
        let grid = Grid2D::for_symbol(&sym, 1.0, &GridSpec::default()).unwrap();
        let cfg = SourceConfig::heat(1.0, 1.0, 1.5, 9).unwrap();
        let sampler = SourceSampler::new(&cfg, &grid.t_points(), grid.dt()).unwrap();
        let emp = empirical_autocorrelation(&sampler, 6000, &grid).unwrap();
        let pps = symbol_to_kernel(&sym, 1.0, &grid).unwrap().gram_adjoint();
        let kernel = pps.as_real().unwrap() / grid.dt();
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in emp.iter().zip(kernel.iter()) {
            let want = cfg.sigma2 * b;
            num += (a - want) * (a - want);
            den += want * want;
        }
        let rel = (num / den).sqrt();
        assert!(rel < 0.08, "autocorrelation rel L2 error {rel}");
    }
}
