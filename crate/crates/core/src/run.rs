//! Command implementations behind the `tfwf` binary: configuration parsing
//! with flag overrides, the sweep drivers for every subcommand, and the
//! CSV/JSON writers.
//!
//! Output schemas are versioned; CSV uses a header row, `.` decimals and 17
//! significant digits, and JSON reports echo the resolved configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coding::{self, CodingConfig};
use crate::error::{Error, Result};
use crate::heat::{self, HeatChannelModel};
use crate::quad::GKind;
use crate::source;
use crate::waterfill::{reverse_waterfill_discrete, tf_capacity, tf_rate, waterfill_discrete};
use crate::weyl::{self, Grid2D, GridSpec, WeylSymbol};

pub const SCHEMA_VERSION: u32 = 1;

/// Analytic eigenvalues below this relative floor are dropped from the
/// discrete waterfilling stages.
const EIGENVALUE_FLOOR: f64 = 1e-14;

/// File- or flag-sourced run configuration. Unknown keys in a config file
/// are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub gamma: Option<f64>,
    pub r: Option<Vec<f64>>,
    pub snr: Option<f64>,
    pub sdr: Option<f64>,
    pub theta2: Option<f64>,
    pub sigma2: Option<f64>,
    pub grid_n: Option<usize>,
    pub seed: Option<u64>,
    pub rate_fraction: Option<f64>,
    pub pulses: Option<usize>,
    pub trials: Option<usize>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Field-wise override: anything set in `flags` wins.
    pub fn merged_with(&self, flags: &RunConfig) -> Self {
        Self {
            gamma: flags.gamma.or(self.gamma),
            r: flags.r.clone().or_else(|| self.r.clone()),
            snr: flags.snr.or(self.snr),
            sdr: flags.sdr.or(self.sdr),
            theta2: flags.theta2.or(self.theta2),
            sigma2: flags.sigma2.or(self.sigma2),
            grid_n: flags.grid_n.or(self.grid_n),
            seed: flags.seed.or(self.seed),
            rate_fraction: flags.rate_fraction.or(self.rate_fraction),
            pulses: flags.pulses.or(self.pulses),
            trials: flags.trials.or(self.trials),
        }
    }

    fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }

    fn r_list(&self) -> Vec<f64> {
        self.r.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0])
    }

    fn theta2(&self) -> f64 {
        self.theta2.unwrap_or(0.01)
    }

    fn sigma2(&self) -> f64 {
        self.sigma2.unwrap_or(1.0)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Plain numeric table with a fixed header.
#[derive(Debug, Clone, Serialize)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// JSON report envelope carrying the resolved configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub result: T,
}

fn report<T: Serialize>(command: &str, config: &RunConfig, result: T) -> Report<T> {
    Report {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        config: config.clone(),
        result,
    }
}

/// Exact capacity by waterfilling on the analytic noise variances.
pub fn heat_capacity_exact(gamma: f64, r: f64, snr: f64, theta2: f64) -> Result<f64> {
    let model = HeatChannelModel::new(gamma, r)?;
    let s_total = 2.0 * std::f64::consts::PI * r * r * theta2 * snr;
    let noise: Vec<f64> = model
        .eigenvalues_above(EIGENVALUE_FLOOR)
        .iter()
        .map(|&l| theta2 / l)
        .collect();
    Ok(waterfill_discrete(&noise, s_total)?.capacity_nats)
}

/// Exact rate by reverse waterfilling on the analytic signal variances.
pub fn heat_rate_exact(gamma: f64, r: f64, sdr: f64, sigma2: f64) -> Result<f64> {
    let model = HeatChannelModel::new(gamma, r)?;
    let vars: Vec<f64> = model
        .eigenvalues_above(EIGENVALUE_FLOOR)
        .iter()
        .map(|&l| sigma2 * l)
        .collect();
    let total: f64 = vars.iter().sum();
    if !(sdr >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "SDR must be at least 1, got {sdr}"
        )));
    }
    Ok(reverse_waterfill_discrete(&vars, total / sdr)?.rate_nats)
}

/// `r, C_exact_nats, C_tf_nats, C_closed_form_nats` over the `r` sweep.
pub fn cmd_capacity(cfg: &RunConfig) -> Result<CsvTable> {
    let gamma = cfg.gamma();
    let theta2 = cfg.theta2();
    let snr = cfg.snr.unwrap_or(100.0);
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SNR must be positive, got {snr}"
        )));
    }
    let symbol = WeylSymbol::gaussian(gamma);
    let mut rows = Vec::new();
    for r in cfg.r_list() {
        let exact = heat_capacity_exact(gamma, r, snr, theta2)?;
        let s_total = 2.0 * std::f64::consts::PI * r * r * theta2 * snr;
        let tf = tf_capacity(&symbol, r, s_total, theta2)?.value_nats;
        let closed = heat::closed_form_capacity(snr, r)?.nats;
        rows.push(vec![r, exact, tf, closed]);
    }
    Ok(CsvTable {
        header: ["r", "C_exact_nats", "C_tf_nats", "C_closed_form_nats"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    })
}

/// `r, R_exact_nats, R_tf_nats, R_closed_form_nats` over the `r` sweep.
pub fn cmd_rate(cfg: &RunConfig) -> Result<CsvTable> {
    let gamma = cfg.gamma();
    let sigma2 = cfg.sigma2();
    let sdr = cfg.sdr.unwrap_or(10.0);
    let symbol = WeylSymbol::gaussian(gamma);
    let mut rows = Vec::new();
    for r in cfg.r_list() {
        let exact = heat_rate_exact(gamma, r, sdr, sigma2)?;
        let energy = r * r * sigma2 / 2.0;
        let tf = tf_rate(&symbol, r, energy / sdr, sigma2)?.value_nats;
        let closed = heat::closed_form_rate(sdr, r)?.nats;
        rows.push(vec![r, exact, tf, closed]);
    }
    Ok(CsvTable {
        header: ["r", "R_exact_nats", "R_tf_nats", "R_closed_form_nats"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SzegoEntry {
    pub r: f64,
    pub g: String,
    pub scale_b: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap_per_r2: f64,
    pub grid_n: usize,
    pub eigenvalues_used: usize,
}

/// Eigenvalue-functional vs plane-integral gaps over the `r` grid, for the
/// logarithmic and clipped-linear test functions.
pub fn cmd_szego(cfg: &RunConfig) -> Result<Report<Vec<SzegoEntry>>> {
    let gamma = cfg.gamma();
    let symbol = WeylSymbol::gaussian(gamma);
    let b = 10.0;
    let mut entries = Vec::new();
    for r in cfg.r_list() {
        let spec = GridSpec {
            wigner_margin: false,
            min_n: cfg.grid_n.unwrap_or(256),
            ..GridSpec::default()
        };
        let grid = Grid2D::for_symbol(&symbol, r, &spec)?;
        let op = weyl::symbol_to_kernel(&symbol, r, &grid)?;
        let cutoff = if r >= 6.0 { 1e-7 } else { 1e-9 };
        let sd = weyl::spectrum(&op, cutoff)?;
        for (g, name) in [(GKind::HalfLnPlus, "half_ln_plus"), (GKind::MinOne, "min_one")] {
            let gap = weyl::szego_gap(&sd, &symbol, r, g, 1.0, b)?;
            entries.push(SzegoEntry {
                r,
                g: name.to_string(),
                scale_b: b,
                lhs: gap.lhs,
                rhs: gap.rhs,
                gap_per_r2: gap.gap_per_r2,
                grid_n: grid.n(),
                eigenvalues_used: sd.lambdas.len(),
            });
        }
    }
    Ok(report("szego", cfg, entries))
}

#[derive(Debug, Clone, Serialize)]
pub struct EocBody {
    pub gamma: f64,
    pub r: f64,
    pub a_approx: f64,
    pub b_approx: f64,
    pub a_exact: f64,
    pub b_exact: f64,
    pub area_exact: f64,
    pub r_lower_bound: f64,
}

/// Ellipse-of-concentration semi-axes and the spreading-factor bound.
pub fn cmd_eoc(cfg: &RunConfig) -> Result<Report<Vec<EocBody>>> {
    let gamma = cfg.gamma();
    let symbol = WeylSymbol::gaussian(gamma);
    let mut bodies = Vec::new();
    for r in cfg.r_list() {
        let e = heat::eoc(gamma, r)?;
        let m = weyl::symbol_moments(&symbol, r)?;
        bodies.push(EocBody {
            gamma,
            r,
            a_approx: e.a_approx,
            b_approx: e.b_approx,
            a_exact: e.a_exact,
            b_exact: e.b_exact,
            area_exact: e.area_exact(),
            r_lower_bound: m.r_lower_bound,
        });
    }
    Ok(report("eoc", cfg, bodies))
}

/// Decoding report plus a pulse-train trace (`t, u, filtered`) reproducing
/// one noiseless transmission.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(Report<coding::DecodingReport>, CsvTable)> {
    let gamma = cfg.gamma.unwrap_or(0.1);
    let r = cfg.r_list().first().copied().unwrap_or(2.0);
    let snr = cfg.snr.unwrap_or(100.0);
    let theta2 = cfg.theta2();
    let fraction = cfg.rate_fraction.unwrap_or(0.7);
    let pulses = cfg.pulses.unwrap_or(4);
    let trials = cfg.trials.unwrap_or(1000);
    let code_cfg = CodingConfig::heat(gamma, r, snr, theta2, fraction, pulses, cfg.seed())?;
    let rep = coding::run_trials(&code_cfg, trials)?;

    let books = coding::build_codebooks(&code_cfg);
    let message = vec![0usize; code_cfg.subchannels()];
    let u = coding::encode(&code_cfg, &books, &message);
    let mut noiseless = CodingConfig::heat(gamma, r, snr, theta2, fraction, pulses, cfg.seed())?;
    noiseless.theta2 = 0.0;
    let filtered = coding::channel(&noiseless, &u, 0);
    let ts = coding::train_time_axis(&code_cfg);
    let trace = CsvTable {
        header: ["t", "u", "filtered"].iter().map(|s| s.to_string()).collect(),
        rows: ts
            .iter()
            .zip(u.iter().zip(filtered.iter()))
            .map(|(&t, (&a, &b))| vec![t, a, b])
            .collect(),
    };
    Ok((report("simulate", cfg, rep), trace))
}

/// One source realization on the operator grid as `t, x` rows.
pub fn realization_csv(cfg: &RunConfig) -> Result<CsvTable> {
    let gamma = cfg.gamma();
    let r = cfg.r_list().first().copied().unwrap_or(1.0);
    let sigma2 = cfg.sigma2();
    let symbol = WeylSymbol::gaussian(gamma);
    let spec = GridSpec {
        min_n: cfg.grid_n.unwrap_or(256),
        ..GridSpec::default()
    };
    let grid = Grid2D::for_symbol(&symbol, r, &spec)?;
    let src = source::SourceConfig::heat(gamma, r, sigma2, cfg.seed())?;
    let sampler = source::SourceSampler::new(&src, &grid.t_points(), grid.dt())?;
    let x = sampler.realization(0);
    Ok(CsvTable {
        header: ["t", "x"].iter().map(|s| s.to_string()).collect(),
        rows: grid
            .t_points()
            .iter()
            .zip(x.iter())
            .map(|(&t, &v)| vec![t, v])
            .collect(),
    })
}

/// Sampled Wigner-Ville spectrum and its principal term, one row per grid
/// point: `t, omega, phi, principal`.
pub fn cmd_wvs(cfg: &RunConfig) -> Result<CsvTable> {
    let gamma = cfg.gamma();
    let r = cfg.r_list().first().copied().unwrap_or(1.0);
    let sigma2 = cfg.sigma2();
    let symbol = WeylSymbol::gaussian(gamma);
    let spec = GridSpec {
        min_n: cfg.grid_n.unwrap_or(256),
        ..GridSpec::default()
    };
    let grid = Grid2D::for_symbol(&symbol, r, &spec)?;
    let op = weyl::symbol_to_kernel(&symbol, r, &grid)?;
    let phi = source::wvs(&op.gram_adjoint(), sigma2)?;
    let scale = sigma2 / (2.0 * std::f64::consts::PI);
    let mut rows = Vec::with_capacity(grid.n() * phi.omega.len());
    for i in 0..grid.n() {
        let t = grid.t(i);
        for (j, &w) in phi.omega.iter().enumerate() {
            let principal = scale * symbol.eval_spread(r, t, w).norm_sqr();
            rows.push(vec![t, w, phi.values[(i, j)], principal]);
        }
    }
    Ok(CsvTable {
        header: ["t", "omega", "phi", "principal"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    })
}

/// Write atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(
        ".{}.tmp",
        path.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into())
    ));
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_merge_prefers_flags() {
        let base = RunConfig {
            gamma: Some(1.0),
            snr: Some(10.0),
            ..RunConfig::default()
        };
        let flags = RunConfig {
            snr: Some(100.0),
            ..RunConfig::default()
        };
        let merged = base.merged_with(&flags);
        assert_eq!(merged.gamma, Some(1.0));
        assert_eq!(merged.snr, Some(100.0));
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"gamma": 1.0, "bogus": 3}"#);
        assert!(err.is_err());
    }

    #[test]
    fn csv_uses_17_significant_digits() {
        let t = CsvTable {
            header: vec!["x".into()],
            rows: vec![vec![std::f64::consts::PI]],
        };
        let s = t.to_csv();
        assert!(s.starts_with("x\n"));
        assert!(s.contains("3.1415926535897931e0"), "{s}");
    }

    #[test]
    fn capacity_table_shape_and_example_row() {
        let cfg = RunConfig {
            gamma: Some(0.1),
            r: Some(vec![2.0]),
            snr: Some(100.0),
            theta2: Some(0.01),
            ..RunConfig::default()
        };
        let t = cmd_capacity(&cfg).unwrap();
        assert_eq!(t.header.len(), 4);
        assert_eq!(t.rows.len(), 1);
        // Frozen from the discrete waterfilling oracle.
        let c_exact = t.rows[0][1];
        assert!((c_exact - 15.727699414708397).abs() < 1e-9, "{c_exact}");
        assert!((c_exact - 15.7).abs() / 15.7 < 0.01);
    }

    #[test]
    fn rate_table_zero_at_unit_sdr() {
        let cfg = RunConfig {
            r: Some(vec![1.0, 2.0]),
            sdr: Some(1.0),
            ..RunConfig::default()
        };
        let t = cmd_rate(&cfg).unwrap();
        for row in &t.rows {
            assert!(row[1].abs() < 1e-12);
            assert!(row[3].abs() < 1e-12);
        }
    }

    #[test]
    fn eoc_reproduces_reference_values() {
        let cfg = RunConfig {
            gamma: Some(0.1),
            r: Some(vec![2.0]),
            ..RunConfig::default()
        };
        let rep = cmd_eoc(&cfg).unwrap();
        let b = &rep.result[0];
        assert!((b.a_approx - 0.2828).abs() < 5e-5);
        assert!((b.b_approx - 28.28).abs() < 5e-3);
        assert!((b.a_exact - 0.2850).abs() < 5e-5);
        assert!((b.b_exact - 28.50).abs() < 5e-3);
        assert!((b.r_lower_bound - 1.0).abs() < 1e-5);
    }

    #[test]
    fn atomic_write_roundtrip() {
        let dir = std::env::temp_dir();
        let path = dir.join("tfwf_run_test_atomic.csv");
        write_atomic(&path, "a,b\n1,2\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        std::fs::remove_file(&path).ok();
    }
}
