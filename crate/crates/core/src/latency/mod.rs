//! Normalized latency model: sequential unicast upload, exponential setup
//! delays, per-IR computation, a wait-count stop rule and beamformed
//! download.
//!
//! All times are normalized by `τ`. The schedule code is generic over the
//! scalar so the same logic runs on `f64` for Monte Carlo work and on exact
//! rationals in tests.

mod export;
mod sim;

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

pub use export::{segments, write_segments, Segment, SegmentKind};
pub use sim::{
    download_latency, nonprivate_upload, overall_latency, simulate, simulate_with_upload,
    upload_schedule, wait_count_sweep, IrCompletion, Multiplicities, ScheduleTrace, StopPoint,
    StopRule, SweepPoint,
};

/// Numeric type the schedule is evaluated in.
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn of(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits the scalar")
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl<T> Scalar for T where
    T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Physical configuration of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams<T> {
    /// Number of users.
    pub u: usize,
    /// Rows of `W`.
    pub m: usize,
    /// Columns of `W` (length of each user vector).
    pub r: usize,
    /// Storage fraction per node.
    pub mu: f64,
    /// Normalized latency of unicasting `u` symbols.
    pub gamma: T,
    /// Seconds per inner product for all users.
    pub tau: f64,
    /// Rate of the exponential setup time.
    pub eta: f64,
    pub e_max: usize,
    /// Privacy level.
    pub z: usize,
    /// When false the upload phase costs nothing.
    pub upload: bool,
}

impl<T: Scalar> SystemParams<T> {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParams(what.to_string()))
            }
        };
        check(self.u >= 1, "u must be positive")?;
        check(self.m >= 1, "m must be positive")?;
        check(self.r >= 1, "r must be positive")?;
        check(self.mu > 0.0 && self.mu <= 1.0, "mu must satisfy 0 < mu <= 1")?;
        check(self.gamma >= T::zero(), "gamma must be nonnegative")?;
        check(self.tau > 0.0 && self.tau.is_finite(), "tau must be positive")?;
        check(self.eta > 0.0, "eta must be positive")?;
        check(self.e_max >= 1, "e_max must be positive")
    }

    /// Largest `p` allowed for `e` nodes, `⌊μe⌋`.
    pub fn max_storage(&self, e: usize) -> usize {
        (self.mu * e as f64 + 1e-9).floor() as usize
    }

    /// Normalized time of one IR, `m/e`.
    pub fn ir_time(&self, e: usize) -> T {
        T::of(self.m) / T::of(e)
    }
}

impl SystemParams<f64> {
    /// Configuration of the published 9-node experiment at the given `γ`
    /// and `z`. `u` is not fixed there; 10 users means `min{ρ, u} = ρ`
    /// whenever `ρ ≤ e_max`.
    pub fn reference(gamma: f64, z: usize) -> Self {
        Self {
            u: 10,
            m: 600,
            r: 50,
            mu: 2.0 / 3.0,
            gamma,
            tau: 0.0005,
            eta: 0.8,
            e_max: 9,
            z,
            upload: true,
        }
    }
}

/// Normalized setup times `λ_j / τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupTimes<T> {
    pub lambda: Vec<T>,
}

impl<T: Scalar> SetupTimes<T> {
    pub fn zeros(e: usize) -> Self {
        Self {
            lambda: vec![T::zero(); e],
        }
    }

    /// First `e` values, for evaluating a smaller network with the same draw.
    pub fn truncated(&self, e: usize) -> Self {
        Self {
            lambda: self.lambda[..e].to_vec(),
        }
    }
}

/// Stream for trial `trial` of experiment `seed`. Seeds are derived per
/// trial, not per worker, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `e` i.i.d. `Exp(η)` setup times divided by `τ`.
pub fn sample_setup_times_with<R: Rng + ?Sized>(
    eta: f64,
    tau: f64,
    e: usize,
    rng: &mut R,
) -> Result<SetupTimes<f64>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParams(format!("eta must be positive, got {eta}")));
    }
    let exp = Exp::new(eta)
        .map_err(|_| Error::InvalidParams(format!("eta must be positive, got {eta}")))?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParams(format!("tau must be positive, got {tau}")));
    }
    Ok(SetupTimes {
        lambda: (0..e).map(|_| exp.sample(rng) / tau).collect(),
    })
}

/// Seeded version of [`sample_setup_times_with`].
pub fn sample_setup_times(eta: f64, tau: f64, e: usize, seed: u64) -> Result<SetupTimes<f64>> {
    sample_setup_times_with(eta, tau, e, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_mean() {
        let s = sample_setup_times(0.8, 1.0, 1_000_000, 17).unwrap();
        let mean = s.lambda.iter().sum::<f64>() / s.lambda.len() as f64;
        assert!((mean - 1.25).abs() / 1.25 < 0.01, "mean {mean}");
        assert!(s.lambda.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn sampling_is_deterministic_and_degenerates() {
        assert_eq!(
            sample_setup_times(0.8, 0.0005, 9, 3).unwrap(),
            sample_setup_times(0.8, 0.0005, 9, 3).unwrap()
        );
        let fast = sample_setup_times(1e9, 1.0, 1000, 3).unwrap();
        assert!(fast.lambda.iter().all(|&v| v < 1e-6));
        assert!(sample_setup_times(0.0, 1.0, 3, 0).is_err());
        assert!(sample_setup_times(1.0, 0.0, 3, 0).is_err());
    }

    #[test]
    fn storage_bound_survives_rounding() {
        let p = SystemParams::reference(1.0, 1);
        assert_eq!(p.max_storage(9), 6);
        assert_eq!(p.max_storage(6), 4);
        assert_eq!(p.max_storage(3), 2);
        assert_eq!(p.max_storage(1), 0);
    }

    #[test]
    fn validation() {
        let mut p = SystemParams::reference(1.0, 1);
        assert!(p.validate().is_ok());
        p.mu = 1.5;
        assert!(p.validate().is_err());
        p.mu = 0.5;
        p.gamma = -1.0;
        assert!(p.validate().is_err());
    }
}
