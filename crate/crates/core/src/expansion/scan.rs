//! Breakdown-order scans over random first-order assignments.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pattern::AssignmentSampler;
use super::scalar::{BigComplex, Precision, Scalar};
use super::series::{Assignment, CorrectionInfo, SeriesState, BREAKDOWN_THRESHOLD};
use crate::error::{Error, Result};

/// Name of the random generator recorded in reports.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha), stream = trial index";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub n: usize,
    pub max_order: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub precision: Precision,
    /// Solve for higher homogeneous parts when an order breaks.
    pub correction: bool,
}

impl ScanConfig {
    pub fn new(n: usize, max_order: usize, seed: u64) -> Self {
        ScanConfig {
            n,
            max_order,
            trials: 3,
            seed,
            tol: BREAKDOWN_THRESHOLD,
            precision: Precision::Double,
            correction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub order: usize,
    /// Relative residual after any correction.
    pub relative: f64,
    /// Relative residual with the current higher homogeneous parts.
    pub raw_relative: f64,
    /// Largest single term entering a residual, relative to the scale.
    pub term_magnitude: f64,
    pub correction: Option<CorrectionInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub scale: f64,
    pub first_break: Option<usize>,
    pub orders: Vec<OrderRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanStatus {
    Ok,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderMax {
    pub order: usize,
    pub max_relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    pub pattern: String,
    pub max_order: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub precision: Precision,
    pub correction: bool,
    pub rng: String,
    pub status: ScanStatus,
    pub first_break: Option<usize>,
    pub per_order_max_residual: Vec<OrderMax>,
    pub per_trial: Vec<TrialReport>,
}

/// Generator for trial `trial`: seeded by `seed`, stream `trial`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub type Progress<'a> = &'a (dyn Fn(usize, &OrderRecord) + Sync);

fn run_trial_generic<S: Scalar>(
    trial: usize,
    n: usize,
    a: &Assignment,
    ctx: S::Ctx,
    cfg: &ScanConfig,
    progress: Option<Progress<'_>>,
) -> Result<TrialReport> {
    let mut st = SeriesState::<S>::new(n, a, ctx)?.with_threshold(cfg.tol);
    let mut orders = Vec::new();
    let mut first_break = None;
    for s in 2..=cfg.max_order {
        let rep = st.consistency_residuals(s)?;
        let mut rec = OrderRecord {
            order: s,
            relative: rep.relative,
            raw_relative: rep.relative,
            term_magnitude: rep.term_magnitude,
            correction: None,
        };
        if rep.broken && cfg.correction {
            if let Some(info) = st.correct()? {
                rec.relative = info.residual_after;
                rec.correction = Some(info);
            }
        }
        let broken = !(rec.relative <= cfg.tol);
        if let Some(p) = progress {
            p(trial, &rec);
        }
        orders.push(rec);
        if broken {
            first_break = Some(s);
            break;
        }
        let after = st.advance()?;
        if after.broken {
            return Err(Error::Numerical(format!("order {s} broke after a successful correction")));
        }
    }
    Ok(TrialReport { trial, scale: st.scale(), first_break, orders })
}

/// Runs one series to `cfg.max_order` at the configured precision.
pub fn run_trial(
    trial: usize,
    a: &Assignment,
    cfg: &ScanConfig,
    progress: Option<Progress<'_>>,
) -> Result<TrialReport> {
    match cfg.precision {
        Precision::Double => run_trial_generic::<Complex64>(trial, cfg.n, a, (), cfg, progress),
        Precision::Big(bits) => run_trial_generic::<BigComplex>(trial, cfg.n, a, bits, cfg, progress),
    }
}

pub fn breakdown_scan(cfg: &ScanConfig, sampler: &dyn AssignmentSampler) -> Result<ScanReport> {
    breakdown_scan_with_progress(cfg, sampler, None)
}

/// First order broken in every trial; trials that disagree make the scan inconclusive.
pub fn breakdown_scan_with_progress(
    cfg: &ScanConfig,
    sampler: &dyn AssignmentSampler,
    progress: Option<Progress<'_>>,
) -> Result<ScanReport> {
    if cfg.max_order < 2 {
        return Err(Error::Domain("max_order must be at least 2".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    if sampler.dim() != cfg.n {
        return Err(Error::Domain(format!(
            "sampler is for N = {}, scan is for N = {}",
            sampler.dim(),
            cfg.n
        )));
    }
    let samples: Vec<Assignment> = (0..cfg.trials)
        .map(|t| sampler.sample(&mut trial_rng(cfg.seed, t)))
        .collect::<Result<_>>()?;
    let per_trial: Vec<TrialReport> = samples
        .par_iter()
        .enumerate()
        .map(|(t, a)| run_trial(t, a, cfg, progress))
        .collect::<Result<_>>()?;

    let mut per_order_max_residual: Vec<OrderMax> = Vec::new();
    for tr in &per_trial {
        for rec in &tr.orders {
            match per_order_max_residual.iter_mut().find(|o| o.order == rec.order) {
                Some(o) => o.max_relative = o.max_relative.max(rec.relative),
                None => per_order_max_residual.push(OrderMax { order: rec.order, max_relative: rec.relative }),
            }
        }
    }
    per_order_max_residual.sort_by_key(|o| o.order);

    let first = per_trial[0].first_break;
    let agree = per_trial.iter().all(|t| t.first_break == first);
    Ok(ScanReport {
        n: cfg.n,
        pattern: sampler.label(),
        max_order: cfg.max_order,
        trials: cfg.trials,
        seed: cfg.seed,
        tol: cfg.tol,
        precision: cfg.precision,
        correction: cfg.correction,
        rng: RNG_NAME.to_string(),
        status: if agree { ScanStatus::Ok } else { ScanStatus::Inconclusive },
        first_break: if agree { first } else { None },
        per_order_max_residual,
        per_trial,
    })
}
