//! Shamir (n, k) secret sharing realised as Reed-Solomon evaluation encoding.
//!
//! Every data entry `x_{i,l}` is the constant term of a degree `k - 1`
//! polynomial whose other coefficients come from a [`RandomnessTape`]. Share
//! `h` is that polynomial evaluated at `α_h` (default `α_h = h + 1`, the
//! secret sits at 0). Because the code is linear, products `W · S^(h)` are
//! again share vectors of `W · x_i`, which is what [`decode_computation`]
//! exploits.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::{lagrange_weights, poly_eval, FieldElement, PrimeField};
use crate::matrix::FieldMatrix;

/// Private data vector of one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserData {
    pub x: Vec<FieldElement>,
}

impl UserData {
    pub fn new(x: Vec<FieldElement>) -> Self {
        Self { x }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SssParams {
    field: PrimeField,
    n: usize,
    k: usize,
    eval_points: Vec<FieldElement>,
}

impl SssParams {
    /// Standard layout with evaluation points `1, 2, ..., n`.
    pub fn new(field: PrimeField, n: usize, k: usize) -> Result<Self> {
        let points = (1..=n as u64).map(|a| field.element(a)).collect();
        Self::with_points(field, n, k, points)
    }

    pub fn with_points(
        field: PrimeField,
        n: usize,
        k: usize,
        eval_points: Vec<FieldElement>,
    ) -> Result<Self> {
        if k < 1 || k > n {
            return Err(Error::InvalidSharing(format!(
                "need 1 <= k <= n, got n = {n}, k = {k}"
            )));
        }
        if n as u64 >= field.modulus() {
            return Err(Error::InvalidSharing(format!(
                "need n < q, got n = {n}, q = {}",
                field.modulus()
            )));
        }
        if eval_points.len() != n {
            return Err(Error::InvalidSharing(format!(
                "expected {n} evaluation points, got {}",
                eval_points.len()
            )));
        }
        for (i, a) in eval_points.iter().enumerate() {
            if a.is_zero() {
                return Err(Error::InvalidSharing(
                    "evaluation point 0 is reserved for the secret".into(),
                ));
            }
            if eval_points[..i].contains(a) {
                return Err(Error::DuplicatePoint(a.value()));
            }
        }
        Ok(Self {
            field,
            n,
            k,
            eval_points,
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `α_h`.
    pub fn point(&self, h: usize) -> FieldElement {
        self.eval_points[h]
    }

    pub fn eval_points(&self) -> &[FieldElement] {
        &self.eval_points
    }
}

/// The `(h+1)`-th share of every user: column `i` is `s_i^(h)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareMatrix {
    pub h: usize,
    pub entries: FieldMatrix,
}

/// Random coefficients `r^(κ)_{i,l}`, `κ = 1..k-1`, indexed user-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomnessTape {
    users: usize,
    entries: usize,
    degree: usize,
    data: Vec<FieldElement>,
}

impl RandomnessTape {
    /// `f(i, l, κ)` for `κ` in `1..=degree`.
    pub fn from_fn(
        users: usize,
        entries: usize,
        degree: usize,
        mut f: impl FnMut(usize, usize, usize) -> FieldElement,
    ) -> Self {
        let mut data = Vec::with_capacity(users * entries * degree);
        for i in 0..users {
            for l in 0..entries {
                for kappa in 1..=degree {
                    data.push(f(i, l, kappa));
                }
            }
        }
        Self {
            users,
            entries,
            degree,
            data,
        }
    }

    /// Dimensions `(u, r, k - 1)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.users, self.entries, self.degree)
    }

    /// The `k - 1` random coefficients of entry `l` of user `i`.
    pub fn coefficients(&self, i: usize, l: usize) -> &[FieldElement] {
        let start = (i * self.entries + l) * self.degree;
        &self.data[start..start + self.degree]
    }
}

/// Produces `S^(0), ..., S^(n-1)`, each of shape `r × u`.
pub fn make_share_matrices(
    data: &[UserData],
    params: &SssParams,
    tape: &RandomnessTape,
) -> Result<Vec<ShareMatrix>> {
    let users = data.len();
    let r = data.first().map_or(0, UserData::len);
    if let Some(bad) = data.iter().position(|d| d.len() != r) {
        return Err(Error::DimensionMismatch(format!(
            "user {bad} has {} entries, expected r = {r}",
            data[bad].len()
        )));
    }
    if tape.dims() != (users, r, params.k - 1) {
        return Err(Error::DimensionMismatch(format!(
            "randomness tape is {:?}, expected {:?}",
            tape.dims(),
            (users, r, params.k - 1)
        )));
    }

    let mut shares: Vec<ShareMatrix> = (0..params.n)
        .map(|h| ShareMatrix {
            h,
            entries: FieldMatrix::zeros(params.field, r, users),
        })
        .collect();
    let mut coeffs = Vec::with_capacity(params.k);
    for (i, user) in data.iter().enumerate() {
        for (l, &x) in user.x.iter().enumerate() {
            coeffs.clear();
            coeffs.push(x);
            coeffs.extend_from_slice(tape.coefficients(i, l));
            for share in shares.iter_mut() {
                let s = poly_eval(&coeffs, params.point(share.h))?;
                share.entries.set(l, i, s);
            }
        }
    }
    Ok(shares)
}

/// Recovers the secret from at least `k` `(point, value)` pairs. The `k`
/// pairs with the smallest points are used, so the choice is deterministic.
pub fn reconstruct(
    shares: &[(FieldElement, FieldElement)],
    params: &SssParams,
) -> Result<FieldElement> {
    if shares.len() < params.k {
        return Err(Error::InsufficientShares {
            needed: params.k,
            got: shares.len(),
        });
    }
    let mut sorted = shares.to_vec();
    sorted.sort_by_key(|&(x, _)| x.value());
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicatePoint(w[0].0.value()));
    }
    sorted.truncate(params.k);
    let xs: Vec<_> = sorted.iter().map(|&(x, _)| x).collect();
    let weights = lagrange_weights(&xs, params.field.zero())?;
    Ok(weights
        .iter()
        .zip(&sorted)
        .fold(params.field.zero(), |acc, (&w, &(_, y))| acc + w * y))
}

/// Decodes `W_l · X` from products `W_l · S^(h)` keyed by share index `h`.
/// Uses the `k` lowest share indices present.
pub fn decode_computation(
    products: &BTreeMap<usize, FieldMatrix>,
    params: &SssParams,
) -> Result<FieldMatrix> {
    if products.len() < params.k {
        return Err(Error::InsufficientShares {
            needed: params.k,
            got: products.len(),
        });
    }
    let chosen: Vec<(usize, &FieldMatrix)> =
        products.iter().take(params.k).map(|(&h, m)| (h, m)).collect();
    if let Some(&(h, _)) = chosen.iter().find(|&&(h, _)| h >= params.n) {
        return Err(Error::InvalidSharing(format!(
            "share index {h} out of range for n = {}",
            params.n
        )));
    }
    let shape = chosen[0].1.shape();
    if let Some(&(h, m)) = chosen.iter().find(|(_, m)| m.shape() != shape) {
        return Err(Error::DimensionMismatch(format!(
            "product for share {h} is {:?}, expected {shape:?}",
            m.shape()
        )));
    }
    let xs: Vec<_> = chosen.iter().map(|&(h, _)| params.point(h)).collect();
    let weights = lagrange_weights(&xs, params.field.zero())?;
    Ok(FieldMatrix::from_fn(params.field, shape.0, shape.1, |a, b| {
        weights
            .iter()
            .zip(&chosen)
            .fold(params.field.zero(), |acc, (&w, (_, m))| acc + w * m.get(a, b))
    }))
}

/// Largest `q^k` that [`leakage_distribution`] is willing to enumerate.
pub const LEAKAGE_ENUMERATION_LIMIT: u64 = 50_000_000;

/// Exact conditional histogram of the secret given `k - 1` observed shares:
/// entry `s` counts the randomness tapes which, together with secret `s`,
/// reproduce every observation.
pub fn leakage_distribution(
    observed: &[(FieldElement, FieldElement)],
    params: &SssParams,
) -> Result<Vec<u64>> {
    let degree = params.k - 1;
    if observed.len() != degree {
        return Err(Error::ObservationCount {
            expected: degree,
            got: observed.len(),
        });
    }
    for (i, (x, _)) in observed.iter().enumerate() {
        if x.is_zero() {
            return Err(Error::InvalidSharing(
                "an observation at point 0 is the secret itself".into(),
            ));
        }
        if observed[..i].iter().any(|(y, _)| y == x) {
            return Err(Error::DuplicatePoint(x.value()));
        }
    }
    let q = params.field.modulus();
    let work = q.checked_pow(params.k as u32).unwrap_or(u64::MAX);
    if work > LEAKAGE_ENUMERATION_LIMIT {
        return Err(Error::InvalidSharing(format!(
            "exhaustive enumeration of q^k = {q}^{} tapes is too large",
            params.k
        )));
    }

    let field = params.field;
    let mut histogram = vec![0u64; q as usize];
    let mut coeffs = vec![field.zero(); params.k];
    let tapes = q.pow(degree as u32);
    for secret in field.elements() {
        coeffs[0] = secret;
        for code in 0..tapes {
            let mut c = code;
            for slot in coeffs.iter_mut().skip(1) {
                *slot = field.element(c % q);
                c /= q;
            }
            let consistent = observed
                .iter()
                .all(|&(x, y)| poly_eval(&coeffs, x).is_ok_and(|v| v == y));
            if consistent {
                histogram[secret.value() as usize] += 1;
            }
        }
    }
    Ok(histogram)
}
