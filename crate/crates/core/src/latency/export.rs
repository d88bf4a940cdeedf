use std::fmt;
use std::io::{self, Write};

use super::sim::ScheduleTrace;
use super::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Upload,
    Setup,
    Compute,
    Idle,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentKind::Upload => "upload",
            SegmentKind::Setup => "setup",
            SegmentKind::Compute => "compute",
            SegmentKind::Idle => "idle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub node: usize,
    pub kind: SegmentKind,
    pub start: T,
    pub end: T,
    /// Share slot the segment belongs to.
    pub slot: usize,
}

/// Per-node timeline, clipped at the end of the computation phase. Upload
/// of slot `h` occupies the unicast ending at `L̃^{up,h}_j`; idle gaps
/// appear when a share arrives after the node finished the previous one.
pub fn segments<T: Scalar>(trace: &ScheduleTrace<T>) -> Vec<Segment<T>> {
    let horizon = trace.comp;
    let e = trace.start.len();
    let mut out = Vec::new();
    let mut push = |node, kind, start: T, end: T, slot| {
        let end = if end > horizon { horizon } else { end };
        if start < end {
            out.push(Segment {
                node,
                kind,
                start,
                end,
                slot,
            });
        }
    };
    // Uploads are sequential across all nodes, so each lasts one unicast.
    let unicast = if e > 0 && !trace.upload[0].is_empty() {
        trace.upload[0][0]
    } else {
        T::zero()
    };
    for j in 0..e {
        let slots = trace.start[j].len();
        for h in 0..slots {
            let arrived = trace.upload[j][h];
            let begin = if arrived > unicast { arrived - unicast } else { T::zero() };
            push(j, SegmentKind::Upload, begin, arrived, h);
            if h == 0 {
                push(j, SegmentKind::Setup, arrived, trace.start[j][0], 0);
            } else {
                let prev_end = trace.slot_end(j, h - 1);
                push(j, SegmentKind::Idle, prev_end, trace.start[j][h], h);
            }
            push(j, SegmentKind::Compute, trace.start[j][h], trace.slot_end(j, h), h);
        }
    }
    out.sort_by(|a, b| {
        a.node
            .cmp(&b.node)
            .then(a.start.partial_cmp(&b.start).expect("comparable times"))
    });
    out
}

/// Writes `node,kind,slot,start,end` lines.
pub fn write_segments<T: Scalar, W: Write>(segments: &[Segment<T>], mut out: W) -> io::Result<()> {
    writeln!(out, "node,kind,slot,start,end")?;
    for s in segments {
        let start = s.start.to_f64().unwrap_or(f64::NAN);
        let end = s.end.to_f64().unwrap_or(f64::NAN);
        writeln!(out, "{},{},{},{:.6},{:.6}", s.node, s.kind, s.slot, start, end)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{build_plan, CyclicGenerator};
    use crate::latency::{simulate, SetupTimes, StopRule, SystemParams};

    fn params(gamma: f64, m: usize, r: usize) -> SystemParams<f64> {
        SystemParams {
            u: 2,
            m,
            r,
            mu: 1.0,
            gamma,
            tau: 1.0,
            eta: 1.0,
            e_max: 2,
            z: 0,
            upload: true,
        }
    }

    #[test]
    fn idle_gap_when_upload_is_late() {
        // e = 2, p = 1, n = 2, z = 0: a = ⌈2·2/2⌉ = 2 shares per node.
        // Uploads arrive at γr·(2h + j + 1) = 10, 30 (node 0) and 20, 40 (node 1).
        // IR time m/e = 5, so node 0 finishes slot 0 at 15 and waits until 30.
        let plan = build_plan(2, 2, 1, 0, &CyclicGenerator::reverse_shift(2)).unwrap();
        assert_eq!(plan.a, 2);
        let p = params(1.0, 10, 10);
        let trace = simulate(&plan, &p, &SetupTimes::zeros(2), StopRule { t: 2 }).unwrap();
        assert_eq!(trace.start[0], vec![10.0, 30.0]);
        assert_eq!(trace.start[1], vec![20.0, 40.0]);
        let segs = segments(&trace);
        let idle: Vec<_> = segs.iter().filter(|s| s.kind == SegmentKind::Idle).collect();
        assert!(idle.iter().any(|s| s.node == 0 && s.start == 15.0 && s.end == 30.0));
        assert!(segs.iter().all(|s| s.kind != SegmentKind::Setup));
        let stop_node_end = segs
            .iter()
            .filter(|s| s.node == trace.stop.node)
            .map(|s| s.end)
            .fold(0.0, f64::max);
        assert_eq!(stop_node_end, trace.comp);
    }

    #[test]
    fn no_idle_when_uploads_keep_up() {
        let plan = build_plan(2, 2, 1, 0, &CyclicGenerator::reverse_shift(2)).unwrap();
        let p = params(0.1, 100, 10);
        let trace = simulate(&plan, &p, &SetupTimes::zeros(2), StopRule { t: 2 }).unwrap();
        assert!(segments(&trace).iter().all(|s| s.kind != SegmentKind::Idle));
    }

    #[test]
    fn setup_segments_and_text() {
        let plan = build_plan(2, 2, 1, 0, &CyclicGenerator::reverse_shift(2)).unwrap();
        let p = params(1.0, 10, 10);
        let setup = SetupTimes {
            lambda: vec![3.0, 4.0],
        };
        let trace = simulate(&plan, &p, &setup, StopRule { t: 2 }).unwrap();
        let segs = segments(&trace);
        assert!(segs
            .iter()
            .any(|s| s.node == 1 && s.kind == SegmentKind::Setup && s.start == 20.0 && s.end == 24.0));
        let mut buf = Vec::new();
        write_segments(&segs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node,kind,slot,start,end\n0,upload,0,0.000000,10.000000\n"));
    }
}
