//! Operational coding experiment: per-subchannel random Gaussian codebooks,
//! pulse-train modulation on the channel's input singular functions, the LTV
//! filter plus white noise, a matched-filter bank, and exhaustive
//! maximum-likelihood decoding, with Monte Carlo error statistics.
//!
//! Pulses occupy disjoint slots of length `d` and each slot passes through
//! the filter via its singular system, so the matched-filter samples realize
//! independent scalar Gaussian subchannels `Y_k = X_k + Z_k` with noise
//! variance `theta^2 / lambda_k`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heat::HeatChannelModel;
use crate::rng::{substream, TAG_CHANNEL_NOISE, TAG_CODEBOOK, TAG_MESSAGE};
use crate::special::HermiteBasis;
use crate::waterfill::{waterfill_discrete, WaterfillResult};

/// Exhaustive ML decoding refuses codebooks above this size.
pub const MAX_CODEBOOK_BITS: u32 = 16;

/// Everything needed to run the pulse-train experiment.
pub struct CodingConfig {
    /// Waterfilling allocation; its `active` count is the subchannel count.
    pub allocation: WaterfillResult,
    /// Ascending noise variances `theta^2 / lambda_k` of the subchannels.
    pub noise_vars: Vec<f64>,
    /// Channel gains `lambda_k` of the subchannels.
    pub lambdas: Vec<f64>,
    /// Input singular functions sampled on the slot grid.
    pub f_pulses: Vec<Vec<f64>>,
    /// Output singular functions sampled on the slot grid.
    pub g_pulses: Vec<Vec<f64>>,
    /// Slot sample spacing.
    pub slot_dt: f64,
    /// Pulse delay `d`; one slot spans `[-d/2, d/2)`.
    pub delay: f64,
    /// Pulses per codeword, `L`.
    pub pulses: usize,
    /// Per-subchannel code rates in nats per pulse, each below capacity.
    pub rates_nats: Vec<f64>,
    pub theta2: f64,
    pub seed: u64,
}

impl CodingConfig {
    /// Assemble the experiment for the Gaussian-symbol channel: waterfilling
    /// at `s_total = 2 pi r^2 theta^2 snr`, dilated-Hermite singular
    /// functions, delay `d = 6 sqrt(2) r gamma`, and rates set to
    /// `rate_fraction` of each subchannel capacity.
    pub fn heat(
        gamma: f64,
        r: f64,
        snr: f64,
        theta2: f64,
        rate_fraction: f64,
        pulses: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(rate_fraction > 0.0 && rate_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rate fraction must lie in (0,1), got {rate_fraction}"
            )));
        }
        if pulses == 0 {
            return Err(Error::InvalidParameter("need at least one pulse".into()));
        }
        let model = HeatChannelModel::new(gamma, r)?;
        let s_total = 2.0 * std::f64::consts::PI * r * r * theta2 * snr;
        let lam_all = model.eigenvalues_above(1e-14);
        let noise_all: Vec<f64> = lam_all.iter().map(|&l| theta2 / l).collect();
        let allocation = waterfill_discrete(&noise_all, s_total)?;
        let k = allocation.active;

        let delay = 6.0 * std::f64::consts::SQRT_2 * r * gamma;
        let slot_dt = (gamma / 16.0).min(delay / 64.0);
        let n_slot = (delay / slot_dt).ceil() as usize;
        let slot_dt = delay / n_slot as f64;
        let ts: Vec<f64> = (0..n_slot)
            .map(|s| -delay / 2.0 + (s as f64 + 0.5) * slot_dt)
            .collect();
        let basis = HermiteBasis::new(gamma, k.saturating_sub(1))?;
        let pulses_k: Vec<Vec<f64>> = (0..k).map(|j| basis.sample(j, &ts).unwrap()).collect();

        let caps = allocation.subchannel_capacities(&noise_all);
        let rates_nats: Vec<f64> = caps.iter().map(|c| rate_fraction * c).collect();

        Self::new(
            allocation,
            noise_all[..k].to_vec(),
            lam_all[..k].to_vec(),
            pulses_k.clone(),
            pulses_k,
            slot_dt,
            delay,
            pulses,
            rates_nats,
            theta2,
            seed,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        allocation: WaterfillResult,
        noise_vars: Vec<f64>,
        lambdas: Vec<f64>,
        f_pulses: Vec<Vec<f64>>,
        g_pulses: Vec<Vec<f64>>,
        slot_dt: f64,
        delay: f64,
        pulses: usize,
        rates_nats: Vec<f64>,
        theta2: f64,
        seed: u64,
    ) -> Result<Self> {
        let k = allocation.active;
        if noise_vars.len() < k || lambdas.len() < k || f_pulses.len() < k || g_pulses.len() < k {
            return Err(Error::InvalidParameter(
                "need singular data for every active subchannel".into(),
            ));
        }
        // Singular functions must be numerically confined to one slot.
        for (j, f) in f_pulses.iter().chain(g_pulses.iter()).enumerate() {
            let norm_sq: f64 = f.iter().map(|&v| v * v).sum::<f64>() * slot_dt;
            if (norm_sq - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "pulse {j} carries {norm_sq:.8} of unit energy inside the slot; \
                     tail above 1e-6"
                )));
            }
        }
        let cfg = Self {
            allocation,
            noise_vars,
            lambdas,
            f_pulses,
            g_pulses,
            slot_dt,
            delay,
            pulses,
            rates_nats,
            theta2,
            seed,
        };
        for k_idx in 0..k {
            let cap = 0.5 * (cfg.allocation.water_level / cfg.noise_vars[k_idx]).ln();
            let rate = cfg.rates_nats[k_idx];
            if rate >= cap {
                return Err(Error::RateExceedsCapacity {
                    subchannel: k_idx,
                    rate_nats: rate,
                    capacity_nats: cap,
                });
            }
            let bits = cfg.codebook_bits(k_idx);
            if bits > MAX_CODEBOOK_BITS {
                return Err(Error::CodebookTooLarge {
                    subchannel: k_idx,
                    log2_size: bits,
                    limit: MAX_CODEBOOK_BITS,
                });
            }
        }
        Ok(cfg)
    }

    pub fn subchannels(&self) -> usize {
        self.allocation.active
    }

    /// `floor(R_k L)` with the rate converted to bits.
    pub fn codebook_bits(&self, k: usize) -> u32 {
        let rate_bits = self.rates_nats[k] / std::f64::consts::LN_2;
        (rate_bits * self.pulses as f64).floor() as u32
    }

    pub fn codebook_size(&self, k: usize) -> usize {
        1usize << self.codebook_bits(k)
    }

    /// Achieved sum rate `sum_k floor(R_k L) / L` in bits per pulse.
    pub fn total_rate_bits_per_pulse(&self) -> f64 {
        (0..self.subchannels())
            .map(|k| self.codebook_bits(k) as f64)
            .sum::<f64>()
            / self.pulses as f64
    }

    fn samples_per_slot(&self) -> usize {
        self.f_pulses[0].len()
    }
}

/// Per-subchannel codebooks, `words[k][m][l]`.
pub struct Codebooks {
    pub words: Vec<Vec<Vec<f64>>>,
}

/// Draw the codebooks: entries of codebook `k` are i.i.d. Gaussian with the
/// waterfilling power of subchannel `k`.
pub fn build_codebooks(cfg: &CodingConfig) -> Codebooks {
    let words = (0..cfg.subchannels())
        .map(|k| {
            let mut rng = substream(cfg.seed, TAG_CODEBOOK, k as u64);
            let std = cfg.allocation.powers[k].sqrt();
            (0..cfg.codebook_size(k))
                .map(|_| {
                    (0..cfg.pulses)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            std * z
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Codebooks { words }
}

/// Pulse train for a message, sampled on the concatenated slot grids.
pub fn encode(cfg: &CodingConfig, books: &Codebooks, message: &[usize]) -> Vec<f64> {
    let n_slot = cfg.samples_per_slot();
    let mut u = vec![0.0; n_slot * cfg.pulses];
    for l in 0..cfg.pulses {
        let slot = &mut u[l * n_slot..(l + 1) * n_slot];
        for k in 0..cfg.subchannels() {
            let a = books.words[k][message[k]][l];
            for (s, v) in slot.iter_mut().enumerate() {
                *v += a * cfg.f_pulses[k][s];
            }
        }
    }
    u
}

/// Apply the channel: each slot goes through the filter's singular system
/// (`f_k -> sqrt(lambda_k) g_k`), then white Gaussian noise of per-sample
/// variance `theta^2 / dt` is added.
pub fn channel(cfg: &CodingConfig, u: &[f64], trial: u64) -> Vec<f64> {
    let n_slot = cfg.samples_per_slot();
    let mut y = vec![0.0; u.len()];
    for l in 0..cfg.pulses {
        let input = &u[l * n_slot..(l + 1) * n_slot];
        let out = &mut y[l * n_slot..(l + 1) * n_slot];
        for k in 0..cfg.subchannels() {
            let coeff: f64 = input
                .iter()
                .zip(cfg.f_pulses[k].iter())
                .map(|(&a, &b)| a * b)
                .sum::<f64>()
                * cfg.slot_dt;
            let gain = cfg.lambdas[k].sqrt() * coeff;
            for (s, v) in out.iter_mut().enumerate() {
                *v += gain * cfg.g_pulses[k][s];
            }
        }
    }
    if cfg.theta2 > 0.0 {
        let mut rng = substream(cfg.seed, TAG_CHANNEL_NOISE, trial);
        let std = (cfg.theta2 / cfg.slot_dt).sqrt();
        for v in y.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += std * z;
        }
    }
    y
}

/// Matched-filter samples `a_hat[k][l] = <y_slot_l, g_k> dt / sqrt(lambda_k)`.
pub fn matched_filter(cfg: &CodingConfig, y: &[f64]) -> Vec<Vec<f64>> {
    let n_slot = cfg.samples_per_slot();
    (0..cfg.subchannels())
        .map(|k| {
            let scale = 1.0 / cfg.lambdas[k].sqrt();
            (0..cfg.pulses)
                .map(|l| {
                    let slot = &y[l * n_slot..(l + 1) * n_slot];
                    slot.iter()
                        .zip(cfg.g_pulses[k].iter())
                        .map(|(&a, &b)| a * b)
                        .sum::<f64>()
                        * cfg.slot_dt
                        * scale
                })
                .collect()
        })
        .collect()
}

/// Nearest-codeword search per subchannel.
pub fn decode(cfg: &CodingConfig, books: &Codebooks, y: &[f64]) -> Vec<usize> {
    let samples = matched_filter(cfg, y);
    (0..cfg.subchannels())
        .map(|k| {
            let obs = &samples[k];
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (m, word) in books.words[k].iter().enumerate() {
                let d: f64 = word
                    .iter()
                    .zip(obs.iter())
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                if d < best_d {
                    best_d = d;
                    best = m;
                }
            }
            best
        })
        .collect()
}

/// Monte Carlo statistics of the full encode -> channel -> decode chain.
#[derive(Debug, Clone, Serialize)]
pub struct DecodingReport {
    pub trials: usize,
    pub pulses_per_codeword: usize,
    pub subchannels: usize,
    pub codebook_sizes: Vec<usize>,
    pub rate_bits_per_pulse: f64,
    /// Per-subchannel codeword error rates.
    pub codeword_error_rates: Vec<f64>,
    /// Mean input energy per pulse across trials.
    pub empirical_pulse_energy: f64,
    /// Waterfilling budget the pulse energy should approach.
    pub expected_pulse_energy: f64,
    /// Per-subchannel variance of the matched-filter error samples.
    pub empirical_noise_vars: Vec<f64>,
    /// `theta^2 / lambda_k` per subchannel.
    pub expected_noise_vars: Vec<f64>,
    /// Largest absolute cross-correlation between the error samples of two
    /// different subchannels.
    pub noise_cross_correlation_max: f64,
    pub seed: u64,
}

struct TrialOutcome {
    errors: Vec<bool>,
    pulse_energy: f64,
    z: Vec<Vec<f64>>,
}

/// Run the experiment over `trials` random messages.
pub fn run_trials(cfg: &CodingConfig, trials: usize) -> Result<DecodingReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let books = build_codebooks(cfg);
    let k = cfg.subchannels();
    let l = cfg.pulses;

    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut mrng = substream(cfg.seed, TAG_MESSAGE, trial as u64);
            let message: Vec<usize> = (0..k)
                .map(|kk| mrng.gen_range(0..cfg.codebook_size(kk)))
                .collect();
            let u = encode(cfg, &books, &message);
            let y = channel(cfg, &u, trial as u64);
            let decoded = decode(cfg, &books, &y);
            let samples = matched_filter(cfg, &y);

            let errors = (0..k).map(|kk| decoded[kk] != message[kk]).collect();
            let pulse_energy = (0..l)
                .map(|ll| {
                    (0..k)
                        .map(|kk| {
                            let a = books.words[kk][message[kk]][ll];
                            a * a
                        })
                        .sum::<f64>()
                })
                .sum::<f64>()
                / l as f64;
            let z = (0..k)
                .map(|kk| {
                    (0..l)
                        .map(|ll| samples[kk][ll] - books.words[kk][message[kk]][ll])
                        .collect()
                })
                .collect();
            TrialOutcome {
                errors,
                pulse_energy,
                z,
            }
        })
        .collect();

    let mut error_counts = vec![0usize; k];
    let mut energy_sum = 0.0;
    let mut z_sum = vec![0.0; k];
    let mut z_sq = vec![0.0; k];
    let mut z_cross = vec![vec![0.0; k]; k];
    let n_z = (trials * l) as f64;
    for o in &outcomes {
        for (kk, &e) in o.errors.iter().enumerate() {
            if e {
                error_counts[kk] += 1;
            }
        }
        energy_sum += o.pulse_energy;
        for kk in 0..k {
            for ll in 0..l {
                let z = o.z[kk][ll];
                z_sum[kk] += z;
                z_sq[kk] += z * z;
                for jj in 0..kk {
                    z_cross[kk][jj] += z * o.z[jj][ll];
                }
            }
        }
    }
    let empirical_noise_vars: Vec<f64> = (0..k)
        .map(|kk| z_sq[kk] / n_z - (z_sum[kk] / n_z).powi(2))
        .collect();
    let mut cross_max = 0.0f64;
    for kk in 0..k {
        for jj in 0..kk {
            let cov = z_cross[kk][jj] / n_z - (z_sum[kk] / n_z) * (z_sum[jj] / n_z);
            let corr = cov / (empirical_noise_vars[kk] * empirical_noise_vars[jj]).sqrt();
            cross_max = cross_max.max(corr.abs());
        }
    }

    Ok(DecodingReport {
        trials,
        pulses_per_codeword: l,
        subchannels: k,
        codebook_sizes: (0..k).map(|kk| cfg.codebook_size(kk)).collect(),
        rate_bits_per_pulse: cfg.total_rate_bits_per_pulse(),
        codeword_error_rates: error_counts
            .iter()
            .map(|&c| c as f64 / trials as f64)
            .collect(),
        empirical_pulse_energy: energy_sum / trials as f64,
        expected_pulse_energy: cfg.allocation.powers[..k].iter().sum(),
        empirical_noise_vars,
        expected_noise_vars: cfg.noise_vars[..k].to_vec(),
        noise_cross_correlation_max: cross_max,
        seed: cfg.seed,
    })
}

/// Time axis of the pulse train (slot-centered sampling), for exports.
pub fn train_time_axis(cfg: &CodingConfig) -> Vec<f64> {
    let n_slot = cfg.samples_per_slot();
    let l = cfg.pulses;
    let mut ts = Vec::with_capacity(n_slot * l);
    for ll in 0..l {
        let center = (ll as f64 - (l as f64 - 1.0) / 2.0) * cfg.delay;
        for s in 0..n_slot {
            ts.push(center - cfg.delay / 2.0 + (s as f64 + 0.5) * cfg.slot_dt);
        }
    }
    ts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(pulses: usize, seed: u64) -> CodingConfig {
        // Low-rate configuration: one or two subchannels, small codebooks.
        CodingConfig::heat(0.1, 1.0, 1.2, 0.1, 0.7, pulses, seed).unwrap()
    }

    #[test]
    fn example_channel_has_eleven_subchannels() {
        let cfg = CodingConfig::heat(0.1, 2.0, 100.0, 0.01, 0.4, 4, 1).unwrap();
        assert_eq!(cfg.subchannels(), 11);
    }

    #[test]
    fn codebook_size_floor() {
        let cfg = small_cfg(4, 3);
        // M = 1 when R L < ln 2.
        let tiny = CodingConfig::heat(0.1, 1.0, 1.2, 0.1, 0.05, 1, 3).unwrap();
        assert_eq!(tiny.codebook_size(0), 1);
        assert!(cfg.codebook_size(0) >= 2);
    }

    #[test]
    fn rate_at_capacity_refused() {
        let err = CodingConfig::heat(0.1, 1.0, 1.2, 0.1, 0.999999, 4, 3);
        assert!(err.is_ok()); // fraction < 1 still legal
        // Oversized codebooks are refused instead.
        let big = CodingConfig::heat(0.1, 2.0, 100.0, 0.01, 0.7, 16, 3);
        assert!(matches!(big, Err(Error::CodebookTooLarge { .. })));
    }

    #[test]
    fn codebooks_deterministic_per_seed() {
        let cfg = small_cfg(4, 42);
        let a = build_codebooks(&cfg);
        let b = build_codebooks(&cfg);
        assert_eq!(a.words, b.words);
        let cfg2 = small_cfg(4, 43);
        let c = build_codebooks(&cfg2);
        assert_ne!(a.words, c.words);
    }

    #[test]
    fn codebook_letter_energy_matches_power() {
        // Empirical per-letter energy approaches the waterfilling power.
        let cfg = CodingConfig::heat(0.1, 1.0, 1.2, 0.1, 0.9, 16, 7).unwrap();
        let books = build_codebooks(&cfg);
        let letters: Vec<f64> = books.words[0].iter().flatten().copied().collect();
        assert!(letters.len() >= 1000, "want a large sample");
        let mean_sq = letters.iter().map(|&a| a * a).sum::<f64>() / letters.len() as f64;
        let power = cfg.allocation.powers[0];
        let rel = (mean_sq - power).abs() / power;
        assert!(rel < 0.1, "letter energy {mean_sq} vs power {power}");
    }

    #[test]
    fn encode_single_pulse_is_scaled_basis_function() {
        let cfg = small_cfg(1, 5);
        let mut books = build_codebooks(&cfg);
        for w in books.words.iter_mut() {
            for word in w.iter_mut() {
                word[0] = 0.0;
            }
        }
        books.words[0][0][0] = 1.0;
        let u = encode(&cfg, &books, &vec![0; cfg.subchannels()]);
        for (s, &v) in u.iter().enumerate() {
            assert!((v - cfg.f_pulses[0][s]).abs() < 1e-12);
        }
    }

    #[test]
    fn encode_recovers_coefficients_by_projection() {
        let cfg = small_cfg(6, 5);
        let books = build_codebooks(&cfg);
        let message = vec![1usize; cfg.subchannels()];
        let u = encode(&cfg, &books, &message);
        let n_slot = cfg.f_pulses[0].len();
        for l in 0..cfg.pulses {
            let slot = &u[l * n_slot..(l + 1) * n_slot];
            for k in 0..cfg.subchannels() {
                let proj: f64 = slot
                    .iter()
                    .zip(cfg.f_pulses[k].iter())
                    .map(|(&a, &b)| a * b)
                    .sum::<f64>()
                    * cfg.slot_dt;
                let want = books.words[k][1][l];
                assert!(
                    (proj - want).abs() < 1e-8 * want.abs().max(1.0),
                    "slot {l} sub {k}"
                );
            }
        }
    }

    #[test]
    fn train_energy_matches_coefficients() {
        let cfg = small_cfg(8, 9);
        let books = build_codebooks(&cfg);
        let message = vec![0usize; cfg.subchannels()];
        let u = encode(&cfg, &books, &message);
        let quad: f64 = u.iter().map(|&v| v * v).sum::<f64>() * cfg.slot_dt;
        let coeff: f64 = (0..cfg.subchannels())
            .map(|k| (0..cfg.pulses).map(|l| books.words[k][0][l].powi(2)).sum::<f64>())
            .sum();
        assert!(
            (quad - coeff).abs() < 1e-4 * coeff.max(1e-12),
            "quadrature {quad} vs coefficient {coeff}"
        );
    }

    #[test]
    fn pulse_energy_approaches_budget_with_large_codebooks() {
        // With M L >> 1e4 letters per codebook, the mean per-pulse energy of
        // random messages reaches the waterfilling budget within 2%.
        use rand::{Rng, SeedableRng};
        let cfg = CodingConfig::heat(0.1, 1.0, 1.2, 0.1, 0.9, 16, 5).unwrap();
        let books = build_codebooks(&cfg);
        assert!(cfg.codebook_size(0) * cfg.pulses >= 100_000);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(314159);
        let trials = 3000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let message: Vec<usize> = (0..cfg.subchannels())
                .map(|k| rng.gen_range(0..cfg.codebook_size(k)))
                .collect();
            let per_pulse: f64 = (0..cfg.pulses)
                .map(|l| {
                    (0..cfg.subchannels())
                        .map(|k| books.words[k][message[k]][l].powi(2))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / cfg.pulses as f64;
            acc += per_pulse;
        }
        let mean = acc / trials as f64;
        let s: f64 = cfg.allocation.powers[..cfg.subchannels()].iter().sum();
        let rel = (mean - s).abs() / s;
        assert!(rel <= 0.02, "pulse energy {mean} vs budget {s}, rel {rel:.4}");
    }

    #[test]
    fn noiseless_channel_deforms_pulse() {
        let mut cfg = small_cfg(1, 5);
        cfg.theta2 = 0.0;
        let n_slot = cfg.f_pulses[0].len();
        let mut u = vec![0.0; n_slot];
        u.copy_from_slice(&cfg.f_pulses[0]);
        let y = channel(&cfg, &u, 0);
        let root = cfg.lambdas[0].sqrt();
        for s in 0..n_slot {
            assert!((y[s] - root * cfg.g_pulses[0][s]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_input_zero_noise_gives_zero() {
        let mut cfg = small_cfg(2, 5);
        cfg.theta2 = 0.0;
        let u = vec![0.0; cfg.f_pulses[0].len() * cfg.pulses];
        let y = channel(&cfg, &u, 0);
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matched_filter_noise_has_unit_design_variance() {
        // Empirical variance of <n, g_k> over trials matches theta^2 after
        // the 1/sqrt(lambda) scaling is removed.
        let cfg = small_cfg(8, 21);
        let zeros = vec![0.0; cfg.f_pulses[0].len() * cfg.pulses];
        let mut acc = 0.0;
        let trials = 400;
        for trial in 0..trials {
            let y = channel(&cfg, &zeros, trial);
            let s = matched_filter(&cfg, &y);
            for l in 0..cfg.pulses {
                let b = s[0][l] * cfg.lambdas[0].sqrt();
                acc += b * b;
            }
        }
        let var = acc / (trials * cfg.pulses as u64) as f64;
        let rel = (var - cfg.theta2).abs() / cfg.theta2;
        assert!(rel < 0.1, "matched noise variance {var} vs {}", cfg.theta2);
    }

    #[test]
    fn noiseless_decoding_is_error_free() {
        let mut cfg = small_cfg(4, 17);
        cfg.theta2 = 0.0;
        let books = build_codebooks(&cfg);
        for m in 0..cfg.codebook_size(0).min(8) {
            let message = vec![m; cfg.subchannels()];
            let u = encode(&cfg, &books, &message);
            let y = channel(&cfg, &u, m as u64);
            assert_eq!(decode(&cfg, &books, &y), message);
        }
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = small_cfg(4, 99);
        let a = run_trials(&cfg, 50).unwrap();
        let b = run_trials(&cfg, 50).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn report_statistics_match_design() {
        let cfg = small_cfg(8, 2024);
        let rep = run_trials(&cfg, 400).unwrap();
        // 3-sigma CLT window on the noise variance estimate.
        let n = (rep.trials * rep.pulses_per_codeword) as f64;
        for k in 0..rep.subchannels {
            let expect = rep.expected_noise_vars[k];
            let sigma = expect * (2.0 / n).sqrt();
            assert!(
                (rep.empirical_noise_vars[k] - expect).abs() < 3.0 * sigma,
                "subchannel {k}: {} vs {expect}",
                rep.empirical_noise_vars[k]
            );
        }
        let s = rep.expected_pulse_energy;
        assert!((rep.empirical_pulse_energy - s).abs() < 0.1 * s);
        assert!(rep.noise_cross_correlation_max < 3.0 / n.sqrt() + 0.05);
    }
}
