//! Scans over levels N comparing ĥ(c_D) with h·u·log N, the
//! Jorgenson–Kramer surrogate g·log(N)/3 for the stable Faltings
//! height, the Lang–Silverman constant bound 3h/g, and the exact
//! arithmetic of division-point height scaling under Weil restriction.

use rayon::prelude::*;
use serde::Serialize;

use crate::cache::SpectralCache;
use crate::error::{Error, Result};
use crate::gzheight::{height, SpectralEvalConfig};
use crate::heegner::{enum_levels, HeegnerLevel};
use crate::lfunc::RealWithError;
use crate::quadfield::FundamentalDiscriminant;

/// One scan level: the measured height against its predicted leading
/// term and the stable-height surrogate. The Lang–Silverman columns are
/// absent when the genus vanishes.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub n: u64,
    pub h_hat: RealWithError,
    pub hu_log_n: f64,
    pub ratio: f64,
    pub excess: f64,
    pub genus: u64,
    pub hst_surrogate: f64,
    pub ls_ratio: Option<f64>,
    pub ls_bound: Option<f64>,
    pub lang_bound: Option<f64>,
}

/// Scan output: rows in N-order plus per-level failures that did not
/// abort the scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub failures: Vec<(u64, String)>,
}

fn scan_row(
    disc: &FundamentalDiscriminant,
    n: u64,
    config: &SpectralEvalConfig,
    cache: Option<&SpectralCache>,
) -> Result<ScanRow> {
    let level = HeegnerLevel::new(disc, n)?;
    let breakdown = height(disc, &level, config, cache)?;
    let h_hat = breakdown.total;
    let hu = (disc.h() * disc.u()) as f64;
    let hu_log_n = hu * (n as f64).ln();
    let g = level.genus();
    let hst_surrogate = g as f64 * (n as f64).ln() / 3.0;
    let (ls_ratio, ls_bound, lang_bound) = if g > 0 {
        (
            Some(h_hat.value / hst_surrogate),
            Some(3.0 * hu / g as f64),
            Some(3.0 * disc.h() as f64 / g as f64),
        )
    } else {
        (None, None, None)
    };
    Ok(ScanRow {
        n,
        h_hat,
        hu_log_n,
        ratio: h_hat.value / hu_log_n,
        excess: h_hat.value - hu_log_n,
        genus: g,
        hst_surrogate,
        ls_ratio,
        ls_bound,
        lang_bound,
    })
}

/// Height scan over ℕ_k ∩ [n_min, n_max]. Per-level failures are
/// collected, not fatal. Rows come back sorted by N regardless of the
/// parallel schedule.
pub fn scan(
    disc: &FundamentalDiscriminant,
    n_min: u64,
    n_max: u64,
    config: &SpectralEvalConfig,
    cache: Option<&SpectralCache>,
) -> Result<ScanResult> {
    scan_sampled(disc, n_min, n_max, config, cache, None)
}

/// Like [`scan`], but if `max_rows` is set the admissible levels are
/// thinned to at most that many, evenly spaced and keeping both ends.
pub fn scan_sampled(
    disc: &FundamentalDiscriminant,
    n_min: u64,
    n_max: u64,
    config: &SpectralEvalConfig,
    cache: Option<&SpectralCache>,
    max_rows: Option<usize>,
) -> Result<ScanResult> {
    if n_min < 5 {
        return Err(Error::InvalidInput(format!(
            "scan requires N_min ≥ 5, got {n_min}"
        )));
    }
    if n_max < n_min {
        return Err(Error::InvalidInput("empty scan range".into()));
    }
    config.validate()?;
    let mut levels: Vec<u64> = enum_levels(disc, n_max)
        .into_iter()
        .filter(|&n| n >= n_min)
        .collect();
    if let Some(k) = max_rows {
        if k == 0 {
            return Err(Error::InvalidInput("max_rows must be positive".into()));
        }
        if levels.len() > k {
            let picked: Vec<u64> = (0..k)
                .map(|i| levels[i * (levels.len() - 1) / (k - 1).max(1)])
                .collect();
            levels = picked;
            levels.dedup();
        }
    }
    let outcomes: Vec<(u64, Result<ScanRow>)> = levels
        .par_iter()
        .map(|&n| (n, scan_row(disc, n, config, cache)))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((n, e.to_string())),
        }
    }
    Ok(ScanResult { rows, failures })
}

/// 3h/g, the genus-dependent ceiling for the Lang–Silverman constant
/// extracted from the Heegner family.
pub fn lang_silverman_bound(
    disc: &FundamentalDiscriminant,
    level: &HeegnerLevel,
) -> Result<f64> {
    if level.genus() == 0 {
        return Err(Error::InvalidInput(format!(
            "Lang-Silverman bound needs genus > 0, N = {} has genus 0",
            level.n()
        )));
    }
    Ok(3.0 * disc.h() as f64 / level.genus() as f64)
}

/// One step of the Weil-restriction scaling sequence: the division
/// point's height, and the restricted variety's dimension and stable
/// height, at step N with restriction degree m_N.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub point_height: f64,
    pub degree: u64,
    pub dim: u64,
    pub hst: f64,
    pub zariski_closure_dim: u64,
}

/// Sequence realizing the three limits: ĥ(Q_N) = base/N² → 0,
/// dim and h_st grow linearly in m_N, the closure dimension stays g_base.
pub fn weil_scaling(
    base_height: f64,
    g_base: u64,
    hst_base: f64,
    degrees: &[u64],
) -> Result<Vec<ScalingRow>> {
    if !(base_height > 0.0) || g_base == 0 {
        return Err(Error::InvalidInput(
            "base height and base dimension must be positive".into(),
        ));
    }
    if degrees.first() != Some(&1) {
        return Err(Error::InvalidInput("degree sequence must start at m₁ = 1".into()));
    }
    if degrees.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("degrees must be nondecreasing".into()));
    }
    Ok(degrees
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let n = (i + 1) as u64;
            ScalingRow {
                n,
                point_height: base_height / (n * n) as f64,
                degree: m,
                dim: m * g_base,
                hst: m as f64 * hst_base,
                zariski_closure_dim: g_base,
            }
        })
        .collect())
}

/// The Euler factor ∏_{p|N}(1+1/p) together with the empirical ceiling
/// 3·log log N used to bracket it at desk scale.
pub fn euler_factor_with_bound(n: u64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidInput("need N ≥ 3".into()));
    }
    let prod: f64 = crate::arith::factorize(n)?
        .factors
        .iter()
        .map(|&(p, _)| 1.0 + 1.0 / p as f64)
        .product();
    Ok((prod, 3.0 * (n as f64).ln().ln()))
}
