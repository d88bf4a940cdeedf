//! Nonprivate reference scheme for latency comparisons.
//!
//! Only the broadcast upload cost `γ r ln(e)` is taken from the published
//! model; the rest is an approximation of an MDS-repetition scheme: every
//! node receives the raw data at once, stores `p` partitions along the same
//! cyclic layout as the private scheme, and each partition needs a single
//! IR (threshold 1). Multiplicities still enable beamformed download.

use crate::assignment::{build_plan, AssignmentPlan, CyclicGenerator};
use crate::error::{Error, Result};
use crate::latency::{
    nonprivate_upload, simulate_with_upload, Scalar, ScheduleTrace, SetupTimes, StopRule,
    SystemParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineConfig {
    pub e: usize,
    /// Partitions stored per node.
    pub p: usize,
    /// IRs (with multiplicity) to wait for per partition, `1..=p`.
    pub wait: usize,
    /// Charge the broadcast upload. Off means data is already at the nodes.
    pub broadcast_upload: bool,
}

/// Every node holds the single "share" 0, i.e. the raw data.
pub fn baseline_plan(e: usize, p: usize) -> Result<AssignmentPlan> {
    build_plan(e, 1, p, 0, &CyclicGenerator::reverse_shift(e))
}

/// All nodes receive the data at `γ r ln(e)`.
pub fn broadcast_upload<T: Scalar>(params: &SystemParams<T>, e: usize, enabled: bool) -> Vec<Vec<T>> {
    let at = if enabled {
        nonprivate_upload(params, e)
    } else {
        T::zero()
    };
    vec![vec![at]; e]
}

/// Schedule of the nonprivate scheme for one draw of setup times.
pub fn simulate_nonprivate<T: Scalar>(
    params: &SystemParams<T>,
    config: &BaselineConfig,
    setup: &SetupTimes<T>,
) -> Result<ScheduleTrace<T>> {
    if config.p as f64 > params.mu * config.e as f64 + 1e-9 {
        return Err(Error::InvalidParams(format!(
            "baseline storage p = {} exceeds mu * e = {}",
            config.p,
            params.mu * config.e as f64
        )));
    }
    let plan = baseline_plan(config.e, config.p)?;
    let upload = broadcast_upload(params, config.e, config.broadcast_upload);
    simulate_with_upload(&plan, params, &upload, setup, StopRule { t: config.wait })
}

/// Baseline search space: `e ≤ e_max`, `1 ≤ p ≤ μe`.
pub fn enumerate_baseline<T: Scalar>(params: &SystemParams<T>) -> Vec<AssignmentPlan> {
    (1..=params.e_max)
        .flat_map(|e| (1..=params.max_storage(e).min(e)).map(move |p| (e, p)))
        .filter_map(|(e, p)| baseline_plan(e, p).ok())
        .collect()
}
