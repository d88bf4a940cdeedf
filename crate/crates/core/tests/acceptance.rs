//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a hard criterion fails. The two best-effort reproduction
//! criteria (P10, P11) report FAIL with their numbers but do not abort.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use itertools::Itertools;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use privedge::assignment::{build_is, build_iw, build_plan, verify_coverage, CyclicGenerator};
use privedge::latency::{
    nonprivate_upload, sample_setup_times, simulate, upload_schedule, SetupTimes, StopRule,
    SystemParams,
};
use privedge::matrix::FieldMatrix;
use privedge::optimizer::{optimize, optimize_baseline};
use privedge::protocol::{run_functional, PublicMatrix};
use privedge::sharing::{
    leakage_distribution, make_share_matrices, reconstruct, RandomnessTape, SssParams, UserData,
};
use privedge::{Error, Exact, ExactParams, PrimeField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn p1_sss_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checks = 0u64;
    for q in [7u64, 11, 13] {
        let field = PrimeField::new(q).unwrap();
        for n in 1..q as usize {
            for k in 1..=n {
                let params = SssParams::new(field, n, k).unwrap();
                let subsets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
                for _ in 0..100 {
                    let secret = field.random(&mut rng);
                    let tape = RandomnessTape::from_fn(1, 1, k - 1, |_, _, _| field.random(&mut rng));
                    let shares =
                        make_share_matrices(&[UserData::new(vec![secret])], &params, &tape).unwrap();
                    for subset in &subsets {
                        let picked: Vec<_> = subset
                            .iter()
                            .map(|&h| (params.point(h), shares[h].entries.get(0, 0)))
                            .collect();
                        if reconstruct(&picked, &params).unwrap() != secret {
                            return outcome(false, format!("q={q} n={n} k={k} subset {subset:?}"));
                        }
                        checks += 1;
                    }
                }
            }
        }
    }
    outcome(true, format!("{checks} reconstructions exact"))
}

fn p2_perfect_privacy() -> Outcome {
    let field = PrimeField::new(7).unwrap();
    let mut histograms = 0;
    for k in [2usize, 3] {
        let params = SssParams::new(field, 5, k).unwrap();
        for subset in (0..5).combinations(k - 1) {
            for values in (0..k - 1).map(|_| 0..7u64).multi_cartesian_product() {
                let observed: Vec<_> = subset
                    .iter()
                    .zip(&values)
                    .map(|(&h, &v)| (params.point(h), field.element(v)))
                    .collect();
                let hist = leakage_distribution(&observed, &params).unwrap();
                if hist[0] == 0 || hist.iter().any(|&c| c != hist[0]) {
                    return outcome(false, format!("k={k} subset {subset:?} values {values:?}: {hist:?}"));
                }
                histograms += 1;
            }
        }
    }
    outcome(true, format!("{histograms} conditional distributions uniform"))
}

fn p3_end_to_end() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut done = 0;
    while done < 200 {
        let e = rng.random_range(1..=8usize);
        let p = rng.random_range(1..=e);
        let n = rng.random_range(1..=e);
        let z = rng.random_range(0..=3usize);
        let Ok(plan) = build_plan(e, n, p, z, &CyclicGenerator::reverse_shift(e)) else {
            continue;
        };
        let q = if done % 2 == 0 { 11 } else { 101 };
        let field = PrimeField::new(q).unwrap();
        let rows = e * rng.random_range(1..=3usize) + rng.random_range(0..e);
        let r = rng.random_range(1..=5usize);
        let users = rng.random_range(1..=4usize);
        let w = FieldMatrix::random(field, rows, r, &mut rng);
        let data: Vec<UserData> = (0..users)
            .map(|_| UserData::new((0..r).map(|_| field.random(&mut rng)).collect()))
            .collect();
        // Direct W·x_i, column by column.
        let direct = FieldMatrix::from_fn(field, rows, users, |row, i| {
            (0..r).fold(field.zero(), |acc, c| acc + w.get(row, c) * data[i].x[c])
        });
        let public = PublicMatrix::new(w, e).unwrap();
        let run = run_functional(&data, &public, &plan, field, rng.random()).unwrap();
        if run.recovered != direct {
            return outcome(false, format!("mismatch at e={e} n={n} p={p} z={z} q={q}"));
        }
        done += 1;
    }
    outcome(true, "200 instances decoded exactly")
}

fn p4_example() -> Outcome {
    let pi = CyclicGenerator::from_cycle(&[0, 3, 1, 4, 2]).unwrap();
    let iw = build_iw(5, 3, &pi).unwrap();
    let is = build_is(5, 3, 5, &pi).unwrap();
    let want_iw = vec![vec![0, 1, 2, 3, 4], vec![3, 4, 0, 1, 2], vec![1, 2, 3, 4, 0]];
    let want_is = vec![vec![0, 1, 2, 3, 4], vec![1, 2, 3, 4, 0]];
    outcome(
        iw == want_iw && is.rows == want_is,
        format!("I_w={iw:?} I_s={:?}", is.rows),
    )
}

fn p5_coverage() -> Outcome {
    let mut built = 0;
    let mut adjusted_failures = Vec::new();
    let mut clean_failures = Vec::new();
    for e in 1..=10 {
        let pi = CyclicGenerator::reverse_shift(e);
        for p in 1..=e {
            for n in 1..=e {
                let adjusted = build_is(e, p, n, &pi).is_ok_and(|l| l.adjusted);
                for z in 0..=4 {
                    match build_plan(e, n, p, z, &pi) {
                        Ok(plan) => {
                            assert!(verify_coverage(&plan).is_complete());
                            built += 1;
                        }
                        Err(Error::CoverageViolated { .. }) => {
                            if adjusted {
                                adjusted_failures.push((e, n, p));
                            } else {
                                clean_failures.push((e, n, p, z));
                            }
                        }
                        Err(_) => {}
                    }
                }
            }
        }
    }
    let mut detail = format!("{built} plans verified");
    if !adjusted_failures.is_empty() {
        adjusted_failures.dedup();
        detail += &format!(
            ", {} padded (e, n, p) tuples rejected: {}",
            adjusted_failures.len(),
            adjusted_failures.iter().map(|t| format!("{t:?}")).join(" ")
        );
    }
    if !clean_failures.is_empty() {
        detail += &format!(", UNPADDED FAILURES: {clean_failures:?}");
    }
    outcome(clean_failures.is_empty(), detail)
}

/// Result of the brute-force schedule: stop time, stop IR and
/// multiplicities, computed without any incremental bookkeeping.
struct OracleStop {
    comp: Exact,
    stop: (usize, usize, usize),
    rho: BTreeMap<(usize, usize), u32>,
}

fn schedule_oracle(
    plan: &privedge::assignment::AssignmentPlan,
    params: &ExactParams,
    lambda: &[Exact],
    t: usize,
) -> OracleStop {
    let e = plan.e;
    let ir = Exact::from_integer(params.m as i64) / Exact::from_integer(e as i64);
    let gr = params.gamma * Exact::from_integer(params.r as i64);
    // (time, node, slot, position, partition, share)
    let mut events = Vec::new();
    for j in 0..e {
        let mut start = Exact::zero();
        for (h, &share) in plan.is_cols[j].iter().enumerate() {
            let up = gr * Exact::from_integer((e * h + j + 1) as i64);
            start = if h == 0 {
                lambda[j] + up
            } else {
                std::cmp::max(start + ir * Exact::from_integer(plan.p as i64), up)
            };
            for (l, &part) in plan.iw_cols[j].iter().enumerate() {
                let done = start + ir * Exact::from_integer(l as i64 + 1);
                events.push((done, j, h, l, part, share));
            }
        }
    }
    events.sort();
    for i in 0..events.len() {
        let ready = (0..e).all(|part| {
            let got: Vec<_> = events[..=i].iter().filter(|ev| ev.4 == part).collect();
            got.len() >= t && got.iter().map(|ev| ev.5).unique().count() >= plan.k
        });
        if ready {
            let (time, j, h, l, _, _) = events[i];
            let mut rho = BTreeMap::new();
            for ev in events.iter().filter(|ev| ev.0 <= time) {
                *rho.entry((ev.4, ev.5)).or_insert(0) += 1;
            }
            return OracleStop {
                comp: time,
                stop: (j, h, l),
                rho,
            };
        }
    }
    panic!("oracle never stops");
}

fn p6_schedule_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut done = 0;
    while done < 500 {
        let e = rng.random_range(1..=6usize);
        let p = rng.random_range(1..=e);
        let n = rng.random_range(1..=e);
        let z = rng.random_range(0..=2usize);
        let Ok(plan) = build_plan(e, n, p, z, &CyclicGenerator::reverse_shift(e)) else {
            continue;
        };
        // Small integers and halves make ties common.
        let params = ExactParams {
            u: rng.random_range(1..=6),
            m: e * rng.random_range(1..=4usize),
            r: rng.random_range(1..=3),
            mu: 1.0,
            gamma: Exact::new(rng.random_range(0..=4), rng.random_range(1..=2)),
            tau: 1.0,
            eta: 1.0,
            e_max: e,
            z,
            upload: true,
        };
        let lambda: Vec<Exact> = (0..e)
            .map(|_| Exact::new(rng.random_range(0..=8), rng.random_range(1..=2)))
            .collect();
        let t = rng.random_range(plan.k..=plan.supply_per_partition());
        let trace = simulate(&plan, &params, &SetupTimes { lambda: lambda.clone() }, StopRule { t })
            .unwrap();
        let oracle = schedule_oracle(&plan, &params, &lambda, t);
        let stop = (trace.stop.node, trace.stop.slot, trace.stop.position);
        let rho_ok = (0..e).all(|l| {
            (0..n).all(|h| trace.multiplicities.get(l, h) == *oracle.rho.get(&(l, h)).unwrap_or(&0))
        });
        if trace.comp != oracle.comp || stop != oracle.stop || !rho_ok {
            return outcome(
                false,
                format!(
                    "e={e} n={n} p={p} z={z} t={t}: comp {} vs {}, stop {stop:?} vs {:?}, rho match {rho_ok}",
                    trace.comp, oracle.comp, oracle.stop
                ),
            );
        }
        done += 1;
    }
    outcome(true, "500 instances match the event-enumeration oracle exactly")
}

fn p7_closed_forms() -> Outcome {
    let mut checked = 0;
    for e in 1..=9usize {
        let pi = CyclicGenerator::reverse_shift(e);
        for p in 1..=e {
            for n in 1..=e {
                let Ok(plan) = build_plan(e, n, p, 0, &pi) else {
                    continue;
                };
                let params = ExactParams {
                    u: 10,
                    m: 600,
                    r: 50,
                    mu: 1.0,
                    gamma: Exact::new(7, 3),
                    tau: 0.0005,
                    eta: 0.8,
                    e_max: e,
                    z: 0,
                    upload: true,
                };
                let up = upload_schedule(&plan, &params);
                let gr = params.gamma * Exact::from_integer(50);
                for j in 0..e {
                    for h in 0..plan.a {
                        if up[j][h] != gr * Exact::from_integer((e * h + j + 1) as i64) {
                            return outcome(false, format!("upload e={e} j={j} h={h}"));
                        }
                    }
                }
                let total = up.iter().flatten().copied().max().unwrap();
                if total != gr * Exact::from_integer((e * plan.a) as i64) {
                    return outcome(false, format!("total upload e={e} n={n} p={p}"));
                }
                checked += 1;
            }
        }
        let fp = SystemParams::reference(7.0 / 3.0, 0);
        if nonprivate_upload(&fp, e) != 7.0 / 3.0 * 50.0 * (e as f64).ln() {
            return outcome(false, format!("nonprivate upload at e={e}"));
        }
    }
    outcome(true, format!("{checked} plans: per-slot, total and broadcast upload exact"))
}

fn p8_setup_mean() -> Outcome {
    let eta = 0.8;
    let s = sample_setup_times(eta, 1.0, 1_000_000, 808).unwrap();
    let mean = s.lambda.iter().sum::<f64>() / s.lambda.len() as f64;
    let rel = (mean - 1.0 / eta).abs() * eta;
    outcome(rel < 0.01, format!("mean {mean:.5} vs {:.5} (rel err {rel:.2e})", 1.0 / eta))
}

const TRIALS: u64 = 10_000;
const SEED: u64 = 1;

/// P9 and P10 share one γ = 8 sweep.
fn p9_p10_fig3() -> (Outcome, Outcome) {
    let private: Vec<f64> = (1..=4)
        .map(|z| optimize(&SystemParams::reference(8.0, z), TRIALS, SEED).unwrap().best.mean)
        .collect();
    let baseline = optimize_baseline(&SystemParams::reference(8.0, 0), TRIALS, SEED)
        .unwrap()
        .best
        .mean;
    let increasing = private.windows(2).all(|w| w[0] < w[1]);
    let p9 = outcome(
        increasing,
        format!("L(z=1..4) = {}", private.iter().map(|v| format!("{v:.1}")).join(", ")),
    );
    let paper = [2.4, 3.5, 5.7, 10.0];
    let ratios: Vec<f64> = private.iter().map(|v| v / baseline).collect();
    let within: Vec<bool> = ratios
        .iter()
        .zip(paper)
        .map(|(r, f)| (r - f).abs() <= 0.35 * f)
        .collect();
    let p10 = outcome(
        within.iter().all(|&ok| ok),
        format!(
            "baseline {baseline:.1}; ratios {} vs 2.4, 3.5, 5.7, 10.0 (within ±35%: {within:?})",
            ratios.iter().map(|r| format!("{r:.2}")).join(", ")
        ),
    );
    (p9, p10)
}

fn p11_upload_share() -> Outcome {
    let params = |upload: bool, z: usize| SystemParams {
        e_max: 6,
        upload,
        ..SystemParams::reference(8.0, z)
    };
    let private = |upload| optimize(&params(upload, 1), TRIALS, SEED).unwrap().best.mean;
    let base = |upload| optimize_baseline(&params(upload, 0), TRIALS, SEED).unwrap().best.mean;
    let (pw, pn) = (private(true), private(false));
    let (bw, bn) = (base(true), base(false));
    let fp = (pw - pn) / pw;
    let fb = (bw - bn) / bw;
    let ok = |f: f64| (f - 0.13).abs() <= 0.05;
    outcome(
        ok(fp) && ok(fb),
        format!(
            "private z=1: {:.1}% (+{:.0}), baseline: {:.1}% (+{:.0}); target 13% ± 5",
            100.0 * fp,
            pw - pn,
            100.0 * fb,
            bw - bn
        ),
    )
}

fn main() -> ExitCode {
    // Best-effort criteria do not fail the run.
    let mut hard_failure = false;
    let mut report = |id: &str, name: &str, best_effort: bool, started: Instant, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if best_effort && !o.pass { " [best-effort]" } else { "" };
        println!(
            "{id} {verdict}{note} — {name}: {} ({:.1}s)",
            o.detail,
            started.elapsed().as_secs_f64()
        );
        hard_failure |= !o.pass && !best_effort;
    };

    let now = Instant::now();
    report("P1", "SSS exactness", false, now, p1_sss_exactness());
    let now = Instant::now();
    report("P2", "perfect privacy", false, now, p2_perfect_privacy());
    let now = Instant::now();
    report("P3", "end-to-end decoding", false, now, p3_end_to_end());
    let now = Instant::now();
    report("P4", "Example 1 matrices", false, now, p4_example());
    let now = Instant::now();
    report("P5", "coverage exhaustion", false, now, p5_coverage());
    let now = Instant::now();
    report("P6", "schedule oracle", false, now, p6_schedule_oracle());
    let now = Instant::now();
    report("P7", "closed forms", false, now, p7_closed_forms());
    let now = Instant::now();
    report("P8", "straggler statistics", false, now, p8_setup_mean());
    let now = Instant::now();
    let (p9, p10) = p9_p10_fig3();
    report("P9", "latency increases with z", false, now, p9);
    report("P10", "ratio to baseline", true, now, p10);
    let now = Instant::now();
    report("P11", "upload share", true, now, p11_upload_share());

    if hard_failure {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
