//! Cyclic assignment of `W` partitions and share matrices to edge nodes.
//!
//! Both index matrices are built from powers of a single `e`-cycle `π`.
//! Column `j` of the partition matrix lists the partitions node `j` stores
//! (in processing order), column `j` of the share matrix lists the shares it
//! receives. Whether every share meets every partition across its holders is
//! checked by [`verify_coverage`] rather than assumed.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Generator of a cyclic permutation group of order `e`, stored as its
/// image table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicGenerator {
    image: Vec<usize>,
    /// Orbit of 0: `orbit[t] = π^t(0)`.
    orbit: Vec<usize>,
    /// Inverse of `orbit`.
    position: Vec<usize>,
}

impl CyclicGenerator {
    /// From cycle notation, e.g. `[0, 3, 1, 4, 2]` for `(0 3 1 4 2)`.
    pub fn from_cycle(cycle: &[usize]) -> Result<Self> {
        let e = cycle.len();
        if e == 0 {
            return Err(Error::InvalidGenerator("empty cycle".into()));
        }
        let mut seen = vec![false; e];
        for &c in cycle {
            if c >= e || std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidGenerator(format!(
                    "{cycle:?} is not a single cycle over 0..{e}"
                )));
            }
        }
        let mut image = vec![0; e];
        for (t, &c) in cycle.iter().enumerate() {
            image[c] = cycle[(t + 1) % e];
        }
        Self::from_image(image)
    }

    /// From the image table `image[i] = π(i)`; rejects anything but one
    /// `e`-cycle.
    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let e = image.len();
        if e == 0 {
            return Err(Error::InvalidGenerator("empty permutation".into()));
        }
        let mut orbit = Vec::with_capacity(e);
        let mut position = vec![usize::MAX; e];
        let mut cur = 0;
        loop {
            if cur >= e {
                return Err(Error::InvalidGenerator(format!("image {cur} out of range")));
            }
            if position[cur] != usize::MAX {
                break;
            }
            position[cur] = orbit.len();
            orbit.push(cur);
            cur = image[cur];
        }
        if cur != 0 || orbit.len() != e {
            return Err(Error::InvalidGenerator(format!(
                "{image:?} is not a single {e}-cycle"
            )));
        }
        Ok(Self {
            image,
            orbit,
            position,
        })
    }

    /// `(0 e-1 e-2 ... 1)`, i.e. `π(j) = j - 1 mod e`.
    pub fn reverse_shift(e: usize) -> Self {
        let cycle: Vec<usize> = std::iter::once(0).chain((1..e).rev()).collect();
        Self::from_cycle(&cycle).expect("reverse shift is a single cycle")
    }

    pub fn order(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, j: usize) -> usize {
        self.image[j]
    }

    /// `π^t(j)`.
    pub fn power(&self, t: usize, j: usize) -> usize {
        let e = self.order();
        self.orbit[(self.position[j] + t) % e]
    }

    /// Cycle notation starting at 0.
    pub fn cycle(&self) -> &[usize] {
        &self.orbit
    }
}

impl fmt::Display for CyclicGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.orbit.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(" "))
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// `β = ⌈e/p⌉ - 1`.
pub fn beta(e: usize, p: usize) -> usize {
    ceil_div(e, p) - 1
}

/// Shares per node, `a = ⌈⌈e/p⌉ · n / e⌉`.
pub fn shares_per_node(e: usize, n: usize, p: usize) -> usize {
    ceil_div(ceil_div(e, p) * n, e)
}

/// Partition index matrix: `p` rows, row `t` column `j` holds `π^t(j)`.
pub fn build_iw(e: usize, p: usize, pi: &CyclicGenerator) -> Result<Vec<Vec<usize>>> {
    if p == 0 || p > e {
        return Err(Error::InvalidStorage { p, e });
    }
    if pi.order() != e {
        return Err(Error::InvalidGenerator(format!(
            "generator has order {}, expected {e}",
            pi.order()
        )));
    }
    Ok((0..p)
        .map(|t| (0..e).map(|j| pi.power(t, j)).collect())
        .collect())
}

/// Result of the share assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareLayout {
    /// Exponent of `π` for every row of the share index matrix, padding rows
    /// included.
    pub exponents: Vec<usize>,
    /// Full rows `π^exp(j)`, before filtering to `[n]`.
    pub rows: Vec<Vec<usize>>,
    /// Per-node ordered share lists, each of length `a`.
    pub columns: Vec<Vec<usize>>,
    /// True when the plain rows did not give exactly `a` shares per node and
    /// columns had to be padded or truncated.
    pub adjusted: bool,
}

/// Share index matrix. Rows have exponents `t(e - p)` for `t = 0..=β`;
/// columns are filtered to `[n]` and deduplicated. Short columns are filled
/// from further rows `π^{β(e-p)+s}`, `s = 1, 2, ...`; columns longer than
/// `a` keep their first `a` entries.
pub fn build_is(e: usize, p: usize, n: usize, pi: &CyclicGenerator) -> Result<ShareLayout> {
    if p == 0 || p > e {
        return Err(Error::InvalidStorage { p, e });
    }
    if n == 0 || n > e {
        return Err(Error::InfeasibleAssignment(format!(
            "need 1 <= n <= e, got n = {n}, e = {e}"
        )));
    }
    if pi.order() != e {
        return Err(Error::InvalidGenerator(format!(
            "generator has order {}, expected {e}",
            pi.order()
        )));
    }
    let b = beta(e, p);
    let a = shares_per_node(e, n, p);
    let step = e - p;

    let mut exponents: Vec<usize> = (0..=b).map(|t| t * step).collect();
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); e];
    for &x in &exponents {
        for (j, col) in columns.iter_mut().enumerate() {
            let h = pi.power(x, j);
            if h < n && !col.contains(&h) {
                col.push(h);
            }
        }
    }

    let mut adjusted = false;
    for col in columns.iter_mut() {
        if col.len() > a {
            col.truncate(a);
            adjusted = true;
        }
    }
    let base = b * step;
    let mut s = 1;
    while columns.iter().any(|c| c.len() < a) {
        // e consecutive powers visit the whole orbit; past that nothing new appears.
        if s > e {
            return Err(Error::InfeasibleAssignment(format!(
                "cannot give every node a = {a} distinct shares from [n], n = {n}"
            )));
        }
        adjusted = true;
        let x = base + s;
        exponents.push(x);
        for (j, col) in columns.iter_mut().enumerate() {
            let h = pi.power(x, j);
            if col.len() < a && h < n && !col.contains(&h) {
                col.push(h);
            }
        }
        s += 1;
    }

    let rows = exponents
        .iter()
        .map(|&x| (0..e).map(|j| pi.power(x, j)).collect())
        .collect();
    Ok(ShareLayout {
        exponents,
        rows,
        columns,
        adjusted,
    })
}

/// A complete, validated assignment for one `(e, n, p, z)` tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentPlan {
    pub e: usize,
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub a: usize,
    pub beta: usize,
    pub z: usize,
    pub generator: CyclicGenerator,
    /// `p × e` partition index matrix.
    pub iw: Vec<Vec<usize>>,
    /// Share index matrix rows (with any padding rows).
    pub is_rows: Vec<Vec<usize>>,
    /// `iw_cols[j][l] = φ_j^w(l)`.
    pub iw_cols: Vec<Vec<usize>>,
    /// `is_cols[j][h] = φ_j^s(h)`.
    pub is_cols: Vec<Vec<usize>>,
    /// Share columns needed padding or truncation.
    pub adjusted: bool,
}

impl AssignmentPlan {
    /// Partition processed `l`-th by node `j`.
    pub fn phi_w(&self, j: usize, l: usize) -> usize {
        self.iw_cols[j][l]
    }

    /// Share processed `h`-th by node `j`.
    pub fn phi_s(&self, j: usize, h: usize) -> usize {
        self.is_cols[j][h]
    }

    /// Nodes that receive share `h`.
    pub fn holders(&self, h: usize) -> Vec<usize> {
        (0..self.e).filter(|&j| self.is_cols[j].contains(&h)).collect()
    }

    /// Number of `(node, slot, position)` triples producing IRs of one
    /// partition. Every partition appears in exactly `p` columns of `I_w`,
    /// so this is `p · a` for all partitions.
    pub fn supply_per_partition(&self) -> usize {
        self.p * self.a
    }

    /// Replaces the share columns without re-validating anything. Only
    /// meant for exercising the verification paths with broken plans.
    pub fn with_share_columns(mut self, is_cols: Vec<Vec<usize>>) -> Self {
        self.is_cols = is_cols;
        self
    }
}

impl fmt::Display for AssignmentPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "e={} n={} p={} z={} k={} a={} beta={} pi={}",
            self.e, self.n, self.p, self.z, self.k, self.a, self.beta, self.generator
        )?;
        let write_matrix = |f: &mut fmt::Formatter<'_>, rows: &[Vec<usize>]| -> fmt::Result {
            for row in rows {
                let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                writeln!(f, "  {}", cells.join(" "))?;
            }
            Ok(())
        };
        writeln!(f, "I_w =")?;
        write_matrix(f, &self.iw)?;
        writeln!(f, "I_s =")?;
        write_matrix(f, &self.is_rows)?;
        for j in 0..self.e {
            let w: Vec<String> = self.iw_cols[j].iter().map(|c| c.to_string()).collect();
            let s: Vec<String> = self.is_cols[j].iter().map(|c| c.to_string()).collect();
            writeln!(
                f,
                "node {j}: partitions {{{}}} shares {{{}}}",
                w.join(", "),
                s.join(", ")
            )?;
        }
        Ok(())
    }
}

/// Outcome of [`verify_coverage`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coverage {
    Complete,
    /// Share `share` never meets the listed partitions.
    Missing { share: usize, partitions: Vec<usize> },
}

impl Coverage {
    pub fn is_complete(&self) -> bool {
        matches!(self, Coverage::Complete)
    }
}

/// For every share `h`, the partitions stored by the nodes holding `h` must
/// cover all of `[e]`. Reports the first share that fails.
pub fn verify_coverage(plan: &AssignmentPlan) -> Coverage {
    for h in 0..plan.n {
        let covered: BTreeSet<usize> = plan
            .holders(h)
            .into_iter()
            .flat_map(|j| plan.iw_cols[j].iter().copied())
            .collect();
        if covered.len() < plan.e {
            let partitions = (0..plan.e).filter(|l| !covered.contains(l)).collect();
            return Coverage::Missing {
                share: h,
                partitions,
            };
        }
    }
    Coverage::Complete
}

/// Builds and validates the plan with `k = a·z + 1`.
pub fn build_plan(
    e: usize,
    n: usize,
    p: usize,
    z: usize,
    pi: &CyclicGenerator,
) -> Result<AssignmentPlan> {
    if e == 0 || n == 0 {
        return Err(Error::InvalidParams(format!(
            "e and n must be positive, got e = {e}, n = {n}"
        )));
    }
    if p == 0 || p > e {
        return Err(Error::InvalidStorage { p, e });
    }
    let a = shares_per_node(e, n, p);
    let k = a * z + 1;
    if k > n || n > e {
        return Err(Error::Infeasible { k, n, e });
    }
    let iw = build_iw(e, p, pi)?;
    let layout = build_is(e, p, n, pi)?;
    let iw_cols = (0..e)
        .map(|j| iw.iter().map(|row| row[j]).collect())
        .collect();
    let plan = AssignmentPlan {
        e,
        n,
        k,
        p,
        a,
        beta: beta(e, p),
        z,
        generator: pi.clone(),
        iw,
        is_rows: layout.rows,
        iw_cols,
        is_cols: layout.columns,
        adjusted: layout.adjusted,
    };
    match verify_coverage(&plan) {
        Coverage::Complete => Ok(plan),
        Coverage::Missing { share, partitions } => Err(Error::CoverageViolated {
            share,
            partition: partitions[0],
        }),
    }
}
