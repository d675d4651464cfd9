//! Sampling studies: minimal N_ball for the inverse QFT, error growth under
//! repeated Hadamards, Bernstein-Vazirani error rates.

use super::fit::{fit_exponential, fit_inverse_sqrt, fit_power_law, LineFit};
use crate::algorithms::{build_bv, build_qft, fourier_basis_state};
use crate::circuit::{run_sampled, Circuit, RefreshPolicy, RunOptions};
use crate::error::{GrabitError, Result};
use crate::gates::GateKind;
use crate::refresh::RefreshVariant;
use crate::rng::RngStream;
use crate::unitary::compare_up_to_scale;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

fn trial_stream(seed: u64, keys: &[u64]) -> RngStream {
    keys.iter().fold(RngStream::new(seed), |s, &k| s.fork(k))
}

fn policy_of(s: &str) -> Result<RefreshPolicy> {
    s.parse()
}

// ---------------------------------------------------------------- QFT scan

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QftScanConfig {
    pub n_bit_min: usize,
    pub n_bit_max: usize,
    pub trials: usize,
    /// Required fraction of successful trials.
    pub threshold: f64,
    pub refresh: RefreshVariant,
    /// `every 1`, `after_interference`, `end_only` or `none`.
    pub policy: String,
    /// Skip the final SWAP network (state prepared in reversed order).
    pub swap_free: bool,
    pub max_nball: usize,
    pub seed: u64,
}

impl Default for QftScanConfig {
    fn default() -> Self {
        Self {
            n_bit_min: 3,
            n_bit_max: 7,
            trials: 100,
            threshold: 0.1,
            refresh: RefreshVariant::Rf3,
            policy: "every 1".into(),
            swap_free: true,
            max_nball: 1 << 22,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinNballRow {
    pub n_bit: usize,
    pub min_nball: usize,
    pub success_ratio: f64,
    /// Success ratio at `min_nball / 2` (absent when `min_nball == 1`).
    pub ratio_at_half: Option<f64>,
    /// Budget exhausted before the threshold was reached.
    pub exhausted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinNballTable {
    pub rows: Vec<MinNballRow>,
    /// `ln N_ball = ln a + b n_bit` over the rows that reached the threshold.
    pub fit: Option<LineFit>,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl MinNballTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_bit,min_nball,success_ratio,ratio_at_half,exhausted\n");
        for r in &self.rows {
            let half = r.ratio_at_half.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{}", r.n_bit, r.min_nball, r.success_ratio, half, r.exhausted);
        }
        s
    }
}

/// Wavenumber of a trial, uniform over `(2^{n-1}, 2^n)`.
fn trial_wavenumber(stream: &RngStream, n: usize) -> u64 {
    let lo = (1u64 << (n - 1)) + 1;
    let span = (1u64 << n) - lo;
    if span == 0 {
        return lo.min((1 << n) - 1);
    }
    lo + ((stream.uniform(u64::MAX, 0, 0) * span as f64) as u64).min(span - 1)
}

/// Inverse QFT of a Fourier basis state with the configured refresh
/// schedule; success when the physical distribution peaks at `k`.
pub fn qft_success_ratio(cfg: &QftScanConfig, n: usize, n_ball: usize) -> Result<f64> {
    let policy = policy_of(&cfg.policy)?;
    let base = build_qft(n, true, !cfg.swap_free)?;
    let wins: Vec<bool> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let stream = trial_stream(cfg.seed, &[n as u64, n_ball as u64, t as u64]);
            let k = trial_wavenumber(&stream, n);
            let c = base.clone().with_init(fourier_basis_state(n, k, cfg.swap_free)?);
            let mut o = RunOptions::new(n_ball, stream.seed);
            o.policy_override = Some((policy, cfg.refresh));
            o.trace = false;
            o.workers = None;
            match run_sampled(&c, &o) {
                Ok(r) => Ok(r.peak_physical == Some(k)),
                Err(GrabitError::Annihilated) => Ok(false),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(wins.iter().filter(|&&w| w).count() as f64 / cfg.trials as f64)
}

/// Minimal N_ball reaching the success threshold for a monotone-in-trend
/// success curve: doubling, bisection, then a check at half the result that
/// restarts the search below it when that point also passes.
pub fn min_nball_search(threshold: f64, max_nball: usize, mut ratio: impl FnMut(usize) -> Result<f64>) -> Result<MinNballRow> {
    let mut hi = 1usize;
    let mut r_hi = ratio(hi)?;
    while r_hi < threshold {
        if hi >= max_nball {
            return Ok(MinNballRow { n_bit: 0, min_nball: hi, success_ratio: r_hi, ratio_at_half: None, exhausted: true });
        }
        hi = (hi * 2).min(max_nball);
        r_hi = ratio(hi)?;
    }
    let mut lo = hi / 2;
    loop {
        while hi - lo > 1 && lo >= 1 {
            let mid = lo + (hi - lo) / 2;
            let r = ratio(mid)?;
            if r >= threshold {
                hi = mid;
                r_hi = r;
            } else {
                lo = mid;
            }
        }
        if hi == 1 {
            return Ok(MinNballRow { n_bit: 0, min_nball: 1, success_ratio: r_hi, ratio_at_half: None, exhausted: false });
        }
        let half = hi / 2;
        let r_half = ratio(half)?;
        if r_half < threshold {
            return Ok(MinNballRow {
                n_bit: 0,
                min_nball: hi,
                success_ratio: r_hi,
                ratio_at_half: Some(r_half),
                exhausted: false,
            });
        }
        hi = half;
        r_hi = r_half;
        lo = hi / 2;
    }
}

pub fn min_nball_scan(cfg: &QftScanConfig) -> Result<MinNballTable> {
    if cfg.trials == 0 || !(cfg.threshold > 0.0 && cfg.threshold <= 1.0) || cfg.n_bit_min == 0 || cfg.n_bit_min > cfg.n_bit_max {
        return Err(GrabitError::InvalidInput("scan needs trials >= 1, threshold in (0,1] and 1 <= n_bit_min <= n_bit_max".into()));
    }
    let mut rows = Vec::new();
    for n in cfg.n_bit_min..=cfg.n_bit_max {
        let mut row = min_nball_search(cfg.threshold, cfg.max_nball, |nb| qft_success_ratio(cfg, n, nb))?;
        row.n_bit = n;
        log::info!("n_bit {n}: min N_ball {} (ratio {})", row.min_nball, row.success_ratio);
        rows.push(row);
    }
    let ok: Vec<&MinNballRow> = rows.iter().filter(|r| !r.exhausted).collect();
    let fit = fit_exponential(
        &ok.iter().map(|r| r.n_bit as f64).collect::<Vec<_>>(),
        &ok.iter().map(|r| r.min_nball as f64).collect::<Vec<_>>(),
    );
    Ok(MinNballTable { a: fit.map(|f| f.intercept.exp()), b: fit.map(|f| f.slope), fit, rows })
}

// ------------------------------------------------------ Hadamard error scan

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorScanConfig {
    pub n_h: Vec<usize>,
    pub n_balls: Vec<usize>,
    pub runs: usize,
    /// Rf1 after every Hadamard when set.
    pub refresh: bool,
    pub seed: u64,
}

impl Default for ErrorScanConfig {
    fn default() -> Self {
        Self { n_h: vec![1, 2, 5, 10, 20, 50, 100, 200], n_balls: vec![10_000], runs: 100, refresh: true, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub n_h: usize,
    pub n_ball: usize,
    /// Mean sign-aligned error of the 2-normalized estimate over surviving runs.
    pub mean_error: f64,
    pub runs: usize,
    pub annihilated: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
    /// Per N_ball: log-log fit (power law in n_H) and log-linear fit
    /// (exponential in n_H).
    pub power_fits: Vec<(usize, Option<LineFit>)>,
    pub exponential_fits: Vec<(usize, Option<LineFit>)>,
}

impl ErrorTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_h,n_ball,mean_error,runs,annihilated\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.n_h, r.n_ball, r.mean_error, r.runs, r.annihilated);
        }
        s
    }
}

fn hadamard_chain(n_h: usize) -> Result<Circuit> {
    let mut c = Circuit::new(1);
    for _ in 0..n_h {
        c.push(GateKind::H, &[0])?;
    }
    Ok(c)
}

pub fn error_vs_gates(cfg: &ErrorScanConfig) -> Result<ErrorTable> {
    let mut rows = Vec::new();
    for &n_ball in &cfg.n_balls {
        for &n_h in &cfg.n_h {
            let c = hadamard_chain(n_h)?;
            let exact = if n_h % 2 == 0 { [1.0, 0.0] } else { [1.0, 1.0] };
            let outcomes: Vec<Option<f64>> = (0..cfg.runs)
                .into_par_iter()
                .map(|run| -> Result<Option<f64>> {
                    let stream = trial_stream(cfg.seed, &[n_h as u64, n_ball as u64, run as u64]);
                    let mut o = RunOptions::new(n_ball, stream.seed);
                    o.trace = false;
                    if cfg.refresh {
                        o.policy_override = Some((RefreshPolicy::AfterInterference, RefreshVariant::Rf1));
                    }
                    match run_sampled(&c, &o) {
                        Ok(r) if !r.state.is_zero() => {
                            Ok(Some(compare_up_to_scale(&r.state.dense(), &exact)?.l2_after_normalization))
                        }
                        Ok(_) | Err(GrabitError::Annihilated) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<_>>()?;
            let errs: Vec<f64> = outcomes.iter().flatten().copied().collect();
            rows.push(ErrorRow {
                n_h,
                n_ball,
                mean_error: if errs.is_empty() { f64::NAN } else { errs.iter().sum::<f64>() / errs.len() as f64 },
                runs: cfg.runs,
                annihilated: cfg.runs - errs.len(),
            });
        }
    }
    let per_nball = |f: fn(&[f64], &[f64]) -> Option<LineFit>| {
        cfg.n_balls
            .iter()
            .map(|&nb| {
                let sel: Vec<&ErrorRow> = rows.iter().filter(|r| r.n_ball == nb && r.n_h > 0).collect();
                let xs: Vec<f64> = sel.iter().map(|r| r.n_h as f64).collect();
                let ys: Vec<f64> = sel.iter().map(|r| r.mean_error).collect();
                (nb, f(&xs, &ys))
            })
            .collect()
    };
    Ok(ErrorTable { power_fits: per_nball(fit_power_law), exponential_fits: per_nball(fit_exponential), rows })
}

// ------------------------------------------------- H^2 with Rf1, Appendix A

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct H2LawConfig {
    pub n_balls: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
}

impl Default for H2LawConfig {
    fn default() -> Self {
        Self { n_balls: vec![50, 100, 200, 500, 1000, 2000, 5000], runs: 200, seed: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct H2LawTable {
    /// `(N_ball, mean ||p~ - (1,0)||_2)`.
    pub rows: Vec<(usize, f64)>,
    pub fit: Option<LineFit>,
    /// `C` of `C / sqrt(N_ball)` with the exponent fixed.
    pub prefactor: Option<f64>,
}

impl H2LawTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_ball,mean_error\n");
        for (n, e) in &self.rows {
            let _ = writeln!(s, "{n},{e}");
        }
        s
    }
}

/// `H, Rf1, H, Rf1` on `|0>`: mean distance of the final physical
/// distribution from `(1, 0)`.
pub fn h2_refresh_law(cfg: &H2LawConfig) -> Result<H2LawTable> {
    let c = hadamard_chain(2)?;
    let mut rows = Vec::new();
    for &nb in &cfg.n_balls {
        let errs: Vec<f64> = (0..cfg.runs)
            .into_par_iter()
            .map(|run| -> Result<f64> {
                let stream = trial_stream(cfg.seed, &[nb as u64, run as u64]);
                let mut o = RunOptions::new(nb, stream.seed);
                o.trace = false;
                o.policy_override = Some((RefreshPolicy::AfterInterference, RefreshVariant::Rf1));
                let p = run_sampled(&c, &o)?.physical_dense();
                Ok(((p[0] - 1.0).powi(2) + p[1].powi(2)).sqrt())
            })
            .collect::<Result<_>>()?;
        rows.push((nb, errs.iter().sum::<f64>() / errs.len() as f64));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(H2LawTable { fit: fit_power_law(&xs, &ys), prefactor: fit_inverse_sqrt(&xs, &ys), rows })
}

// ------------------------------------------------------------ BV error scan

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BvScanConfig {
    /// Total grabits including the ancilla.
    pub n_bits: Vec<usize>,
    pub n_balls: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
}

impl Default for BvScanConfig {
    fn default() -> Self {
        Self { n_bits: vec![2, 3, 4, 5], n_balls: vec![1, 10, 100, 1000, 10_000], runs: 100, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvRow {
    pub n_bit: usize,
    pub n_ball: usize,
    pub error_rate: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BvTable {
    pub rows: Vec<BvRow>,
}

impl BvTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_bit,n_ball,error_rate,runs\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.n_bit, r.n_ball, r.error_rate, r.runs);
        }
        s
    }
}

/// Fraction of runs, each with a random hidden string `a`, whose largest
/// estimated amplitude does not decode to `a` (no refresh).
pub fn bv_error_scan(cfg: &BvScanConfig) -> Result<BvTable> {
    let mut rows = Vec::new();
    for &n_bit in &cfg.n_bits {
        if n_bit < 2 {
            return Err(GrabitError::InvalidInput("BV needs at least one input and the ancilla".into()));
        }
        let n = n_bit - 1;
        for &nb in &cfg.n_balls {
            let fails: Vec<bool> = (0..cfg.runs)
                .into_par_iter()
                .map(|run| -> Result<bool> {
                    let stream = trial_stream(cfg.seed, &[n_bit as u64, nb as u64, run as u64]);
                    let a = ((stream.uniform(u64::MAX, 0, 0) * (1u64 << n) as f64) as u64).min((1 << n) - 1);
                    let c = build_bv(n, a)?;
                    let mut o = RunOptions::new(nb, stream.seed);
                    o.trace = false;
                    let r = run_sampled(&c, &o)?;
                    Ok(r.state.argmax_abs().map(|i| i >> 1) != Some(a))
                })
                .collect::<Result<_>>()?;
            rows.push(BvRow {
                n_bit,
                n_ball: nb,
                error_rate: fails.iter().filter(|&&f| f).count() as f64 / cfg.runs as f64,
                runs: cfg.runs,
            });
        }
    }
    Ok(BvTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_on_step_function() {
        let row = min_nball_search(0.1, 1 << 20, |n| Ok(if n >= 37 { 0.5 } else { 0.0 })).unwrap();
        assert_eq!(row.min_nball, 37);
        assert_eq!(row.ratio_at_half, Some(0.0));
        let trivial = min_nball_search(0.1, 1 << 20, |_| Ok(1.0)).unwrap();
        assert_eq!(trivial.min_nball, 1);
        let never = min_nball_search(0.1, 64, |_| Ok(0.0)).unwrap();
        assert!(never.exhausted);
    }

    #[test]
    fn search_restarts_when_half_passes() {
        // passes at 3 and at >= 40 only; bisection from 64 lands on 40, half = 20 fails
        let row = min_nball_search(0.1, 1 << 10, |n| Ok(if n >= 40 || n == 3 { 1.0 } else { 0.0 })).unwrap();
        assert!(row.success_ratio >= 0.1);
        assert!(row.ratio_at_half.unwrap() < 0.1);
    }

    #[test]
    fn identity_circuit_needs_one_ball() {
        let c = Circuit::new(3).with_init(crate::circuit::InitState::Basis(5));
        let row = min_nball_search(0.1, 1 << 10, |nb| {
            let r = run_sampled(&c, &RunOptions::new(nb, 9))?;
            Ok((r.peak_physical == Some(5)) as u8 as f64)
        })
        .unwrap();
        assert_eq!(row.min_nball, 1);
    }

    #[test]
    fn small_bv_scan() {
        let t = bv_error_scan(&BvScanConfig { n_bits: vec![3], n_balls: vec![2000], runs: 20, seed: 4 }).unwrap();
        assert_eq!(t.rows[0].error_rate, 0.0);
    }

    #[test]
    fn zero_hadamards_zero_error() {
        let t = error_vs_gates(&ErrorScanConfig { n_h: vec![0], n_balls: vec![100], runs: 3, refresh: false, seed: 1 }).unwrap();
        assert_eq!(t.rows[0].mean_error, 0.0);
    }
}
