//! Timing-free execution of the whole scheme: share the data, let every node
//! compute its intermediate results, decode at the users, and look at what an
//! eavesdropper sees.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment::AssignmentPlan;
use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeField};
use crate::matrix::FieldMatrix;
use crate::sharing::{
    decode_computation, leakage_distribution, make_share_matrices, RandomnessTape, SssParams,
    UserData,
};

/// Public matrix `W` split into `e` row blocks. The first `m mod e` blocks
/// get `⌈m/e⌉` rows, the rest `⌊m/e⌋`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicMatrix {
    w: FieldMatrix,
    partitions: Vec<FieldMatrix>,
}

impl PublicMatrix {
    pub fn new(w: FieldMatrix, e: usize) -> Result<Self> {
        if e == 0 || w.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "cannot split a {}x{} matrix into {e} partitions",
                w.rows(),
                w.cols()
            )));
        }
        let (base, extra) = (w.rows() / e, w.rows() % e);
        let mut start = 0;
        let partitions = (0..e)
            .map(|l| {
                let len = base + usize::from(l < extra);
                let block = w.row_block(start, len);
                start += len;
                block
            })
            .collect();
        Ok(Self { w, partitions })
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.w
    }

    pub fn partition(&self, l: usize) -> &FieldMatrix {
        &self.partitions[l]
    }

    pub fn partitions(&self) -> &[FieldMatrix] {
        &self.partitions
    }
}

/// One product `W_l · S^(h)` computed by `node`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntermediateResult {
    pub node: usize,
    pub l: usize,
    pub h: usize,
    pub value: FieldMatrix,
}

/// Counter-based randomness: the coefficients of entry `(i, l)` come from
/// their own ChaCha stream, so the tape does not depend on iteration order.
pub fn randomness_tape(
    field: PrimeField,
    seed: u64,
    users: usize,
    entries: usize,
    k: usize,
) -> RandomnessTape {
    let degree = k.saturating_sub(1);
    let mut coefficients = Vec::with_capacity(users * entries * degree);
    for i in 0..users {
        for l in 0..entries {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((i as u64) << 32) | l as u64);
            coefficients.extend((0..degree).map(|_| field.random(&mut rng)));
        }
    }
    let mut it = coefficients.into_iter();
    RandomnessTape::from_fn(users, entries, degree, |_, _, _| {
        it.next().expect("tape sized above")
    })
}

/// Everything produced by [`run_functional`].
#[derive(Debug, Clone)]
pub struct FunctionalRun {
    pub params: SssParams,
    /// `W · X`, column `i` is `W x_i`.
    pub recovered: FieldMatrix,
    /// Every IR computed by every node.
    pub irs: Vec<IntermediateResult>,
}

impl FunctionalRun {
    /// Distinct share indices available for partition `l`.
    pub fn available_shares(&self, l: usize) -> BTreeSet<usize> {
        self.irs.iter().filter(|ir| ir.l == l).map(|ir| ir.h).collect()
    }

    /// Decodes `W_l · X` from the IRs of the given shares.
    pub fn decode_partition(&self, l: usize, shares: &[usize]) -> Result<FieldMatrix> {
        let products: BTreeMap<usize, FieldMatrix> = shares
            .iter()
            .filter_map(|&h| {
                self.irs
                    .iter()
                    .find(|ir| ir.l == l && ir.h == h)
                    .map(|ir| (h, ir.value.clone()))
            })
            .collect();
        if products.len() < self.params.k() {
            return Err(Error::RecoveryConditionUnmet(l));
        }
        decode_computation(&products, &self.params)
    }
}

/// Runs the scheme over the given data and returns the decoded `W x_i`
/// together with the IR inventory.
pub fn run_functional(
    data: &[UserData],
    w: &PublicMatrix,
    plan: &AssignmentPlan,
    field: PrimeField,
    seed: u64,
) -> Result<FunctionalRun> {
    if w.partitions().len() != plan.e {
        return Err(Error::DimensionMismatch(format!(
            "W has {} partitions, plan expects e = {}",
            w.partitions().len(),
            plan.e
        )));
    }
    let r = data.first().map_or(0, UserData::len);
    if w.matrix().cols() != r {
        return Err(Error::DimensionMismatch(format!(
            "W has {} columns, user data has r = {r}",
            w.matrix().cols()
        )));
    }
    let params = SssParams::new(field, plan.n, plan.k)?;
    let tape = randomness_tape(field, seed, data.len(), r, plan.k);
    let shares = make_share_matrices(data, &params, &tape)?;

    let irs: Vec<IntermediateResult> = (0..plan.e)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::with_capacity(plan.is_cols[j].len() * plan.iw_cols[j].len());
            for &h in &plan.is_cols[j] {
                for &l in &plan.iw_cols[j] {
                    let value = w.partition(l).mul(&shares[h].entries)?;
                    out.push(IntermediateResult {
                        node: j,
                        l,
                        h,
                        value,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut blocks = Vec::with_capacity(plan.e);
    for l in 0..plan.e {
        let mut products = BTreeMap::new();
        for ir in irs.iter().filter(|ir| ir.l == l) {
            products.entry(ir.h).or_insert_with(|| ir.value.clone());
        }
        if products.len() < plan.k {
            return Err(Error::RecoveryConditionUnmet(l));
        }
        blocks.push(decode_computation(&products, &params)?);
    }
    let recovered = FieldMatrix::vstack(&blocks)?;
    Ok(FunctionalRun {
        params,
        recovered,
        irs,
    })
}

/// Share indices seen by an eavesdropper on the given `z` nodes or their
/// links.
pub fn eavesdropper_view(plan: &AssignmentPlan, nodes: &[usize]) -> Result<BTreeSet<usize>> {
    let distinct: BTreeSet<usize> = nodes.iter().copied().collect();
    if distinct.len() != plan.z || nodes.len() != plan.z {
        return Err(Error::EavesdropperSize {
            expected: plan.z,
            got: distinct.len(),
        });
    }
    if let Some(&j) = distinct.iter().find(|&&j| j >= plan.e) {
        return Err(Error::InvalidParams(format!(
            "node {j} out of range for e = {}",
            plan.e
        )));
    }
    Ok(distinct
        .iter()
        .flat_map(|&j| plan.is_cols[j].iter().copied())
        .collect())
}

/// Outcome of [`privacy_audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyReport {
    /// `z = 0`: nothing to check.
    pub vacuous: bool,
    pub subsets_checked: usize,
    pub histograms_checked: usize,
    /// Node subsets whose view is not perfectly private, with that view.
    pub failures: Vec<(Vec<usize>, BTreeSet<usize>)>,
}

impl PrivacyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Most observation vectors enumerated per subset before switching to
/// values taken from seeded sharings.
const AUDIT_EXHAUSTIVE_LIMIT: u64 = 2_000_000;
const AUDIT_SAMPLED_SECRETS: u64 = 8;

/// Exact leakage check at enumeration scale (one user, one entry). For every
/// `z`-subset of nodes the observed shares are padded with unobserved ones to
/// `k - 1` (a stronger adversary) and the conditional distribution of the
/// secret is computed exhaustively. Views with `k` or more shares fail
/// outright.
pub fn privacy_audit(plan: &AssignmentPlan, field: PrimeField) -> Result<PrivacyReport> {
    let mut report = PrivacyReport {
        vacuous: plan.z == 0,
        subsets_checked: 0,
        histograms_checked: 0,
        failures: Vec::new(),
    };
    if plan.z == 0 {
        return Ok(report);
    }
    let params = SssParams::new(field, plan.n, plan.k)?;
    let q = field.modulus();
    let degree = plan.k - 1;

    for nodes in (0..plan.e).combinations(plan.z.min(plan.e)) {
        report.subsets_checked += 1;
        let view: BTreeSet<usize> = nodes
            .iter()
            .flat_map(|&j| plan.is_cols[j].iter().copied())
            .collect();
        if view.len() > degree {
            report.failures.push((nodes, view));
            continue;
        }
        let mut points: Vec<usize> = view.iter().copied().collect();
        points.extend((0..plan.n).filter(|h| !view.contains(h)).take(degree - view.len()));
        let xs: Vec<FieldElement> = points.iter().map(|&h| params.point(h)).collect();

        let vectors = q.checked_pow(degree as u32).unwrap_or(u64::MAX);
        let per_vector = q.checked_pow(plan.k as u32).unwrap_or(u64::MAX);
        let observations: Vec<Vec<FieldElement>> =
            if vectors.saturating_mul(per_vector) <= AUDIT_EXHAUSTIVE_LIMIT {
                (0..vectors)
                    .map(|code| {
                        let mut c = code;
                        (0..degree)
                            .map(|_| {
                                let v = field.element(c % q);
                                c /= q;
                                v
                            })
                            .collect()
                    })
                    .collect()
            } else {
                (0..AUDIT_SAMPLED_SECRETS)
                    .map(|s| {
                        let secret = UserData::new(vec![field.element(s)]);
                        let tape = randomness_tape(field, s, 1, 1, plan.k);
                        let shares = make_share_matrices(&[secret], &params, &tape)?;
                        Ok(points.iter().map(|&h| shares[h].entries.get(0, 0)).collect())
                    })
                    .collect::<Result<_>>()?
            };

        let mut uniform = true;
        for ys in observations {
            let observed: Vec<_> = xs.iter().copied().zip(ys).collect();
            let hist = leakage_distribution(&observed, &params)?;
            report.histograms_checked += 1;
            if hist.iter().any(|&c| c != hist[0]) || hist[0] == 0 {
                uniform = false;
                break;
            }
        }
        if !uniform {
            report.failures.push((nodes, view));
        }
    }
    Ok(report)
}
