//! Exhaustive search over `(e, n, p)` and the wait count `t`, with the
//! expected overall latency estimated by Monte Carlo over setup times.
//!
//! Every tuple and every `z` sees the same setup-time draws for a given seed
//! (common random numbers): trial `i` always uses stream `i` of the seed, and
//! a network with `e` nodes takes the first `e` values of that draw.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::assignment::{build_plan, AssignmentPlan, CyclicGenerator};
use crate::baseline::{broadcast_upload, enumerate_baseline};
use crate::error::{Error, Result};
use crate::latency::{
    overall_latency, sample_setup_times_with, simulate, trial_rng, upload_schedule,
    wait_count_sweep, SetupTimes, StopRule, SystemParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Private,
    Baseline,
}

impl Scheme {
    /// Name used in CSV output; `upload = false` adds a `-noupload` suffix.
    pub fn label(&self, upload: bool) -> &'static str {
        match (self, upload) {
            (Scheme::Private, true) => "private",
            (Scheme::Private, false) => "private-noupload",
            (Scheme::Baseline, true) => "baseline",
            (Scheme::Baseline, false) => "baseline-noupload",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label(true))
    }
}

/// All plans with `e ≤ e_max`, `p ≤ μe`, `k = a z + 1 ≤ n ≤ e` that pass
/// coverage, ordered by `(e, p, n)`.
pub fn enumerate_space(params: &SystemParams<f64>) -> Result<Vec<AssignmentPlan>> {
    params.validate()?;
    let mut plans = Vec::new();
    for e in 1..=params.e_max {
        let pi = CyclicGenerator::reverse_shift(e);
        for p in 1..=params.max_storage(e).min(e) {
            for n in 1..=e {
                if let Ok(plan) = build_plan(e, n, p, params.z, &pi) {
                    plans.push(plan);
                }
            }
        }
    }
    if plans.is_empty() {
        return Err(Error::NoFeasibleConfiguration(params.z));
    }
    Ok(plans)
}

/// Running sums over trials, accumulated in trial order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Stats {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl Stats {
    fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Standard error of the mean.
    fn se(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub trials: u64,
}

impl From<Stats> for Estimate {
    fn from(s: Stats) -> Self {
        Self {
            mean: s.mean(),
            se: s.se(),
            trials: s.count,
        }
    }
}

/// Setup-time draws shared by every candidate in one search.
#[derive(Debug, Clone)]
pub struct SetupBank {
    draws: Vec<SetupTimes<f64>>,
}

impl SetupBank {
    pub fn new(params: &SystemParams<f64>, width: usize, trials: u64, seed: u64) -> Result<Self> {
        let draws = (0..trials)
            .map(|i| sample_setup_times_with(params.eta, params.tau, width, &mut trial_rng(seed, i)))
            .collect::<Result<_>>()?;
        Ok(Self { draws })
    }

    pub fn trials(&self) -> u64 {
        self.draws.len() as u64
    }

    /// Setup times of trial `i` for a network of `e` nodes.
    pub fn trial(&self, i: usize, e: usize) -> SetupTimes<f64> {
        self.draws[i].truncated(e)
    }
}

/// Mean and standard error of `L̃` for a single `(plan, t)`.
pub fn estimate_expected_latency(
    plan: &AssignmentPlan,
    params: &SystemParams<f64>,
    t: usize,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let bank = SetupBank::new(params, params.e_max.max(plan.e), trials, seed)?;
    let mut stats = Stats::default();
    for i in 0..bank.draws.len() {
        let trace = simulate(plan, params, &bank.trial(i, plan.e), StopRule { t })?;
        stats.push(overall_latency(&trace));
    }
    Ok(stats.into())
}

/// One `(tuple, t)` entry of the search table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub e: usize,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub a: usize,
    pub t: usize,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub scheme: Scheme,
    pub best: TableRow,
    pub table: Vec<TableRow>,
    pub trials: u64,
    pub seed: u64,
}

impl OptimizationResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "e,n,p,k,a,t,mean,se")?;
        for r in &self.table {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{:.6}",
                r.e, r.n, r.p, r.k, r.a, r.t, r.mean, r.se
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for OptimizationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.best;
        writeln!(
            f,
            "scheme={} trials={} seed={} candidates={}",
            self.scheme,
            self.trials,
            self.seed,
            self.table.len()
        )?;
        write!(
            f,
            "best: e={} n={} p={} k={} a={} t={} mean={:.3} se={:.3}",
            b.e, b.n, b.p, b.k, b.a, b.t, b.mean, b.se
        )
    }
}

/// Table rows for every wait count of one plan.
fn evaluate_plan(
    plan: &AssignmentPlan,
    scheme: Scheme,
    params: &SystemParams<f64>,
    bank: &SetupBank,
) -> Result<Vec<TableRow>> {
    let upload = match scheme {
        Scheme::Private => upload_schedule(plan, params),
        Scheme::Baseline => broadcast_upload(params, plan.e, params.upload),
    };
    let ts = plan.k..=plan.supply_per_partition();
    let mut stats = vec![Stats::default(); ts.clone().count()];
    for i in 0..bank.draws.len() {
        let sweep = wait_count_sweep(plan, params, &upload, &bank.trial(i, plan.e))?;
        for (s, point) in stats.iter_mut().zip(&sweep) {
            s.push(point.total());
        }
    }
    Ok(ts
        .zip(stats)
        .map(|(t, s)| TableRow {
            e: plan.e,
            n: plan.n,
            p: plan.p,
            k: plan.k,
            a: plan.a,
            t,
            mean: s.mean(),
            se: s.se(),
        })
        .collect())
}

/// Search over explicit candidate plans with a shared bank of draws.
pub fn optimize_plans(
    plans: &[AssignmentPlan],
    scheme: Scheme,
    params: &SystemParams<f64>,
    bank: &SetupBank,
    seed: u64,
) -> Result<OptimizationResult> {
    if bank.trials() == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let table: Vec<TableRow> = plans
        .par_iter()
        .map(|plan| evaluate_plan(plan, scheme, params, bank))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let best = table
        .iter()
        .copied()
        .reduce(|best, row| if row.mean < best.mean { row } else { best })
        .ok_or(Error::NoFeasibleConfiguration(params.z))?;
    Ok(OptimizationResult {
        scheme,
        best,
        table,
        trials: bank.trials(),
        seed,
    })
}

/// Minimum expected overall latency of the private scheme at privacy level
/// `params.z`.
pub fn optimize(params: &SystemParams<f64>, trials: u64, seed: u64) -> Result<OptimizationResult> {
    let plans = enumerate_space(params)?;
    let bank = SetupBank::new(params, params.e_max, trials, seed)?;
    optimize_plans(&plans, Scheme::Private, params, &bank, seed)
}

/// Same search for the nonprivate baseline.
pub fn optimize_baseline(
    params: &SystemParams<f64>,
    trials: u64,
    seed: u64,
) -> Result<OptimizationResult> {
    params.validate()?;
    let plans = enumerate_baseline(params);
    if plans.is_empty() {
        return Err(Error::NoFeasibleConfiguration(0));
    }
    let bank = SetupBank::new(params, params.e_max, trials, seed)?;
    optimize_plans(&plans, Scheme::Baseline, params, &bank, seed)
}
