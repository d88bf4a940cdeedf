use std::cmp::Ordering;

use crate::assignment::AssignmentPlan;
use crate::error::{Error, Result};

use super::{Scalar, SetupTimes, SystemParams};

/// Wait for at least `t` IRs (counted with multiplicity) of every partition,
/// and at least `k` distinct shares of every partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub t: usize,
}

/// The IR whose completion ends the computation phase: node `j*`, share slot
/// `h*`, partition position `l*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StopPoint {
    pub node: usize,
    pub slot: usize,
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrCompletion<T> {
    pub time: T,
    pub node: usize,
    /// Index into the node's share list.
    pub slot: usize,
    /// Index into the node's partition list.
    pub position: usize,
    pub partition: usize,
    pub share: usize,
}

/// `ρ_{l,h}`: how many nodes have computed `W_l S^(h)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multiplicities {
    partitions: usize,
    shares: usize,
    counts: Vec<u32>,
}

impl Multiplicities {
    pub fn new(partitions: usize, shares: usize) -> Self {
        Self {
            partitions,
            shares,
            counts: vec![0; partitions * shares],
        }
    }

    /// From a row per partition.
    pub fn from_rows(rows: &[Vec<u32>]) -> Self {
        let shares = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == shares), "ragged multiplicities");
        Self {
            partitions: rows.len(),
            shares,
            counts: rows.concat(),
        }
    }

    pub fn partitions(&self) -> usize {
        self.partitions
    }

    pub fn shares(&self) -> usize {
        self.shares
    }

    pub fn get(&self, l: usize, h: usize) -> u32 {
        self.counts[l * self.shares + h]
    }

    fn bump(&mut self, l: usize, h: usize) -> u32 {
        let c = &mut self.counts[l * self.shares + h];
        *c += 1;
        *c
    }

    pub fn set(&mut self, l: usize, h: usize, v: u32) {
        self.counts[l * self.shares + h] = v;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// `H_l^max`: the `k` shares of partition `l` with the largest
    /// multiplicity among computed ones, ties to the smaller index.
    pub fn top_shares(&self, l: usize, k: usize) -> Option<Vec<usize>> {
        let mut hs: Vec<usize> = (0..self.shares).filter(|&h| self.get(l, h) > 0).collect();
        if hs.len() < k {
            return None;
        }
        hs.sort_by(|&a, &b| self.get(l, b).cmp(&self.get(l, a)).then(a.cmp(&b)));
        hs.truncate(k);
        Some(hs)
    }
}

/// Full record of one evaluation of the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTrace<T> {
    /// `upload[j][h]`: time node `j` holds its `(h+1)`-th share.
    pub upload: Vec<Vec<T>>,
    /// `start[j][h]`: time node `j` starts on its `(h+1)`-th share.
    pub start: Vec<Vec<T>>,
    /// Normalized setup time per node.
    pub setup: Vec<T>,
    /// Normalized time of one IR, `m/e`.
    pub ir_time: T,
    /// Partitions per node.
    pub p: usize,
    /// Every IR the plan would produce, in global completion order.
    pub completions: Vec<IrCompletion<T>>,
    /// Index in `completions` of the IR that triggered the stop.
    pub stop_index: usize,
    pub stop: StopPoint,
    /// IRs completed at or before the stop instant.
    pub computed: usize,
    pub multiplicities: Multiplicities,
    pub comp: T,
    pub comm: T,
}

impl<T: Scalar> ScheduleTrace<T> {
    /// Time node `j` finishes all partitions of its `(h+1)`-th share.
    pub fn slot_end(&self, j: usize, h: usize) -> T {
        self.start[j][h] + T::of(self.p) * self.ir_time
    }
}

/// `L̃^{up,h}_j = γ r (e h + j + 1)` for every node and share slot; zero
/// when upload is disabled.
pub fn upload_schedule<T: Scalar>(plan: &AssignmentPlan, params: &SystemParams<T>) -> Vec<Vec<T>> {
    let unit = params.gamma * T::of(params.r);
    (0..plan.e)
        .map(|j| {
            (0..plan.a)
                .map(|h| {
                    if params.upload {
                        unit * T::of(plan.e * h + j + 1)
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect()
}

/// Broadcast upload of the nonprivate scheme, `γ r ln(e)`.
pub fn nonprivate_upload<T: Scalar>(params: &SystemParams<T>, e: usize) -> T {
    if !params.upload {
        return T::zero();
    }
    let ln = T::from_f64((e as f64).ln()).expect("ln(e) is finite");
    params.gamma * T::of(params.r) * ln
}

fn event_order<T: Scalar>(a: &IrCompletion<T>, b: &IrCompletion<T>) -> Ordering {
    a.time
        .partial_cmp(&b.time)
        .expect("completion times are comparable")
        .then(a.node.cmp(&b.node))
        .then(a.slot.cmp(&b.slot))
        .then(a.position.cmp(&b.position))
}

struct Timeline<T> {
    start: Vec<Vec<T>>,
    completions: Vec<IrCompletion<T>>,
}

fn timeline<T: Scalar>(
    plan: &AssignmentPlan,
    params: &SystemParams<T>,
    upload: &[Vec<T>],
    setup: &SetupTimes<T>,
) -> Result<Timeline<T>> {
    if setup.lambda.len() < plan.e {
        return Err(Error::DimensionMismatch(format!(
            "{} setup times for e = {} nodes",
            setup.lambda.len(),
            plan.e
        )));
    }
    if upload.len() != plan.e || upload.iter().any(|u| u.len() != plan.a) {
        return Err(Error::DimensionMismatch(format!(
            "upload schedule must be {} x {}",
            plan.e, plan.a
        )));
    }
    let ir = params.ir_time(plan.e);
    let busy = T::of(plan.p) * ir;
    let start: Vec<Vec<T>> = (0..plan.e)
        .map(|j| {
            let mut s = Vec::with_capacity(plan.a);
            for h in 0..plan.a {
                let next = if h == 0 {
                    setup.lambda[j] + upload[j][0]
                } else {
                    T::max_of(s[h - 1] + busy, upload[j][h])
                };
                s.push(next);
            }
            s
        })
        .collect();

    let mut completions = Vec::with_capacity(plan.e * plan.a * plan.p);
    for (j, starts) in start.iter().enumerate() {
        for (h, &s) in starts.iter().enumerate() {
            for l in 0..plan.p {
                completions.push(IrCompletion {
                    time: s + T::of(l + 1) * ir,
                    node: j,
                    slot: h,
                    position: l,
                    partition: plan.phi_w(j, l),
                    share: plan.phi_s(j, h),
                });
            }
        }
    }
    completions.sort_by(event_order);
    Ok(Timeline { start, completions })
}

/// Running counts while scanning completions in order.
struct Tally {
    k: usize,
    mult: Multiplicities,
    total: Vec<usize>,
    distinct: Vec<usize>,
    short_distinct: usize,
}

impl Tally {
    fn new(plan: &AssignmentPlan) -> Self {
        Self {
            k: plan.k,
            mult: Multiplicities::new(plan.e, plan.n),
            total: vec![0; plan.e],
            distinct: vec![0; plan.e],
            short_distinct: plan.e,
        }
    }

    fn add<T>(&mut self, c: &IrCompletion<T>) {
        let l = c.partition;
        self.total[l] += 1;
        if self.mult.bump(l, c.share) == 1 {
            self.distinct[l] += 1;
            if self.distinct[l] == self.k {
                self.short_distinct -= 1;
            }
        }
    }

    /// Largest wait count satisfied right now (0 while some partition lacks
    /// `k` distinct shares).
    fn level(&self) -> usize {
        if self.short_distinct > 0 {
            0
        } else {
            self.total.iter().copied().min().unwrap_or(0)
        }
    }

    fn first_short_partition(&self) -> Option<usize> {
        self.distinct.iter().position(|&d| d < self.k)
    }
}

/// Multiplicities including IRs that complete at exactly the stop instant
/// but sort after the stop event.
fn with_ties<T: Scalar>(tally: &Tally, completions: &[IrCompletion<T>], idx: usize) -> (Multiplicities, usize) {
    let mut mult = tally.mult.clone();
    let now = completions[idx].time;
    let mut computed = idx + 1;
    for c in &completions[idx + 1..] {
        if c.time > now {
            break;
        }
        mult.bump(c.partition, c.share);
        computed += 1;
    }
    (mult, computed)
}

fn check_wait_count(plan: &AssignmentPlan, t: usize) -> Result<()> {
    if t < plan.k {
        return Err(Error::WaitCountBelowThreshold { t, k: plan.k });
    }
    if t > plan.supply_per_partition() {
        return Err(Error::WaitCountExceedsSupply {
            t,
            supply: plan.supply_per_partition(),
        });
    }
    Ok(())
}

/// Evaluates the private scheme's schedule with the sequential unicast
/// upload.
pub fn simulate<T: Scalar>(
    plan: &AssignmentPlan,
    params: &SystemParams<T>,
    setup: &SetupTimes<T>,
    stop: StopRule,
) -> Result<ScheduleTrace<T>> {
    simulate_with_upload(plan, params, &upload_schedule(plan, params), setup, stop)
}

/// Same as [`simulate`] with an arbitrary upload schedule
/// (`upload[j][h]`).
pub fn simulate_with_upload<T: Scalar>(
    plan: &AssignmentPlan,
    params: &SystemParams<T>,
    upload: &[Vec<T>],
    setup: &SetupTimes<T>,
    stop: StopRule,
) -> Result<ScheduleTrace<T>> {
    check_wait_count(plan, stop.t)?;
    let Timeline { start, completions } = timeline(plan, params, upload, setup)?;

    let mut tally = Tally::new(plan);
    let mut short_total = plan.e;
    let mut stop_index = None;
    for (idx, c) in completions.iter().enumerate() {
        tally.add(c);
        if tally.total[c.partition] == stop.t {
            short_total -= 1;
        }
        if short_total == 0 && tally.short_distinct == 0 {
            stop_index = Some(idx);
            break;
        }
    }
    let Some(stop_index) = stop_index else {
        return Err(match tally.first_short_partition() {
            Some(l) => Error::RecoveryConditionUnmet(l),
            None => Error::WaitCountExceedsSupply {
                t: stop.t,
                supply: plan.supply_per_partition(),
            },
        });
    };

    let (multiplicities, computed) = with_ties(&tally, &completions, stop_index);
    let comm = download_latency(&multiplicities, plan.k, params.u, params.gamma)?;
    let last = completions[stop_index];
    Ok(ScheduleTrace {
        upload: upload.to_vec(),
        start,
        setup: setup.lambda[..plan.e].to_vec(),
        ir_time: params.ir_time(plan.e),
        p: plan.p,
        stop: StopPoint {
            node: last.node,
            slot: last.slot,
            position: last.position,
        },
        comp: last.time,
        completions,
        stop_index,
        computed,
        multiplicities,
        comm,
    })
}

/// `γ Σ_l Σ_{h ∈ H_l^max} 1 / min{ρ_{l,h}, u}`.
pub fn download_latency<T: Scalar>(
    mult: &Multiplicities,
    k: usize,
    u: usize,
    gamma: T,
) -> Result<T> {
    let mut sum = T::zero();
    for l in 0..mult.partitions() {
        let top = mult.top_shares(l, k).ok_or(Error::DownloadContract(l))?;
        for h in top {
            let rho = (mult.get(l, h) as usize).min(u);
            sum = sum + T::one() / T::of(rho);
        }
    }
    Ok(gamma * sum)
}

/// `L̃ = L̃^comp + L̃^comm`.
pub fn overall_latency<T: Scalar>(trace: &ScheduleTrace<T>) -> T {
    trace.comp + trace.comm
}

/// Outcome for one wait count in [`wait_count_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint<T> {
    pub t: usize,
    pub stop: StopPoint,
    pub comp: T,
    pub comm: T,
}

impl<T: Scalar> SweepPoint<T> {
    pub fn total(&self) -> T {
        self.comp + self.comm
    }
}

/// Evaluates every wait count `t = k ..= p·a` from a single scan of the
/// completion order. Entry `t - k` agrees with `simulate` for that `t`.
pub fn wait_count_sweep<T: Scalar>(
    plan: &AssignmentPlan,
    params: &SystemParams<T>,
    upload: &[Vec<T>],
    setup: &SetupTimes<T>,
) -> Result<Vec<SweepPoint<T>>> {
    let Timeline { completions, .. } = timeline(plan, params, upload, setup)?;
    let supply = plan.supply_per_partition();
    let mut points = Vec::with_capacity(supply + 1 - plan.k.min(supply + 1));
    let mut next_t = plan.k;
    let mut tally = Tally::new(plan);
    for (idx, c) in completions.iter().enumerate() {
        tally.add(c);
        let level = tally.level();
        if level < next_t {
            continue;
        }
        let (mult, _) = with_ties(&tally, &completions, idx);
        let comm = download_latency(&mult, plan.k, params.u, params.gamma)?;
        let stop = StopPoint {
            node: c.node,
            slot: c.slot,
            position: c.position,
        };
        while next_t <= level.min(supply) {
            points.push(SweepPoint {
                t: next_t,
                stop,
                comp: c.time,
                comm,
            });
            next_t += 1;
        }
        if next_t > supply {
            return Ok(points);
        }
    }
    match tally.first_short_partition() {
        Some(l) => Err(Error::RecoveryConditionUnmet(l)),
        None => Err(Error::WaitCountExceedsSupply { t: next_t, supply }),
    }
}
