//! Maximum fat matching, per-target solving and the binary search over the
//! target value.

use std::fmt;
use std::time::{Duration, Instant};

use crate::edges::{classify_resources, validate_params, Classification, Params};
use crate::error::{Error, Result};
use crate::flownet::canonical_decomposition;
use crate::instance::{Allocation, Instance};
use crate::localsearch::{
    extend_matching, signature, ExtendError, ExtendOptions, PartialMatching, SearchState,
};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Build,
    Collapse,
    Abort,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Build => "build",
            Phase::Collapse => "collapse",
            Phase::Abort => "abort",
        })
    }
}

/// Snapshot of the search emitted at phase boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub probe_tau: Rational,
    pub iter: usize,
    pub phase: Phase,
    pub root: usize,
    pub ell: usize,
    pub matched: usize,
    pub p_sizes: Vec<usize>,
    pub a_sizes: Vec<usize>,
    pub i_sizes: Vec<usize>,
    pub d: Vec<usize>,
    pub signature: Vec<i64>,
}

impl TraceEvent {
    pub fn from_state(state: &SearchState, iter: usize, phase: Phase) -> Self {
        let layers = state.layers();
        let players: Vec<Vec<usize>> = layers.iter().map(|l| l.blockers.clone()).collect();
        let decomp = canonical_decomposition(state.graph(), &players, &state.immediate_players());
        TraceEvent {
            probe_tau: state.params().tau,
            iter,
            phase,
            root: state.root(),
            ell: state.ell(),
            matched: state.matching().size(),
            p_sizes: layers.iter().map(|l| l.blockers.len()).collect(),
            a_sizes: layers.iter().map(|l| l.addable.len()).collect(),
            i_sizes: decomp.sinks.iter().map(Vec::len).collect(),
            d: layers.iter().map(|l| l.d).collect(),
            signature: signature(state),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig: Vec<String> = self
            .signature
            .iter()
            .map(|&s| match s {
                i64::MAX => "inf".to_string(),
                i64::MIN => "-inf".to_string(),
                s => s.to_string(),
            })
            .collect();
        write!(
            f,
            "probe_tau={} iter={} phase={} root={} ell={} matched={} P={} A={} I={} d={} sig={}",
            self.probe_tau,
            self.iter,
            self.phase,
            self.root,
            self.ell,
            self.matched,
            join(&self.p_sizes),
            join(&self.a_sizes),
            join(&self.i_sizes),
            join(&self.d),
            sig.join(",")
        )
    }
}

pub trait TraceSink {
    fn record(&mut self, event: TraceEvent);
}

impl TraceSink for Vec<TraceEvent> {
    fn record(&mut self, event: TraceEvent) {
        self.push(event);
    }
}

pub(crate) fn reborrow<'a>(
    trace: &'a mut Option<&mut dyn TraceSink>,
) -> Option<&'a mut dyn TraceSink> {
    match trace {
        Some(t) => Some(&mut **t),
        None => None,
    }
}

/// Player-to-fat-resource assignment of maximum cardinality, by augmenting
/// paths with players and resources scanned in ascending order.
fn kuhn(inst: &Instance, classes: &Classification) -> Vec<Option<usize>> {
    fn try_kuhn(
        p: usize,
        inst: &Instance,
        classes: &Classification,
        seen: &mut [bool],
        holder: &mut [Option<usize>],
    ) -> bool {
        for &r in inst.interest(p) {
            if !classes.is_fat(r) || seen[r] {
                continue;
            }
            seen[r] = true;
            if holder[r].is_none_or(|q| try_kuhn(q, inst, classes, seen, holder)) {
                holder[r] = Some(p);
                return true;
            }
        }
        false
    }
    let mut holder = vec![None; inst.num_resources()];
    for p in 0..inst.num_players() {
        let mut seen = vec![false; inst.num_resources()];
        try_kuhn(p, inst, classes, &mut seen, &mut holder);
    }
    let mut assigned = vec![None; inst.num_players()];
    for (r, h) in holder.iter().enumerate() {
        if let Some(p) = *h {
            assigned[p] = Some(r);
        }
    }
    assigned
}

pub(crate) fn fat_matching_cardinality(inst: &Instance, classes: &Classification) -> usize {
    kuhn(inst, classes).iter().flatten().count()
}

/// Partial matching consisting of a maximum set of fat edges.
pub fn max_fat_matching(inst: &Instance, params: &Params) -> PartialMatching {
    let classes = classify_resources(inst, params);
    let mut m = PartialMatching::new(inst.num_players(), inst.num_resources());
    for (p, r) in kuhn(inst, &classes).into_iter().enumerate() {
        if let Some(r) = r {
            m.set_fat(p, r).expect("kuhn assignment is a matching");
        }
    }
    m
}

/// Successful run at one target value.
#[derive(Debug, Clone)]
pub struct ProbeSuccess {
    pub allocation: Allocation,
    pub iterations: usize,
    pub collapses: usize,
    pub boundaries_checked: usize,
    pub invariant_failures: Vec<String>,
}

/// Starts from a maximum fat matching and extends it by every unmatched
/// player in ascending order. Every bundle of the result is worth at least
/// `tau / beta`. `tau = 0` yields empty bundles.
pub fn solve_for_tau(
    inst: &Instance,
    tau: u64,
    params: &Params,
    opts: ExtendOptions,
    mut trace: Option<&mut dyn TraceSink>,
) -> std::result::Result<ProbeSuccess, ExtendError> {
    let mut out = ProbeSuccess {
        allocation: Allocation::empty(inst.num_players()),
        iterations: 0,
        collapses: 0,
        boundaries_checked: 0,
        invariant_failures: Vec::new(),
    };
    if tau == 0 {
        return Ok(out);
    }
    let params = params.at_tau(Rational::from_integer(tau as i128));
    let report = validate_params(&params);
    if !report.is_valid() {
        return Err(ExtendError::Invalid(Error::InvalidParams(
            report.violations.join("; "),
        )));
    }
    let mut m = max_fat_matching(inst, &params);
    for p in 0..inst.num_players() {
        if m.is_matched(p) {
            continue;
        }
        let r = match extend_matching(inst, m, p, &params, opts, reborrow(&mut trace)) {
            Ok(r) => r,
            Err(ExtendError::Abort {
                tau: t,
                layer,
                d,
                sources,
                boundaries_checked,
                invariant_failures,
            }) => {
                let mut failures = out.invariant_failures;
                failures.extend(
                    invariant_failures
                        .into_iter()
                        .map(|f| format!("tau {tau}, root {p}: {f}")),
                );
                return Err(ExtendError::Abort {
                    tau: t,
                    layer,
                    d,
                    sources,
                    boundaries_checked: out.boundaries_checked + boundaries_checked,
                    invariant_failures: failures,
                });
            }
            Err(e) => return Err(e),
        };
        out.iterations += r.iterations;
        out.collapses += r.collapses;
        out.boundaries_checked += r.boundaries_checked;
        out.invariant_failures.extend(
            r.invariant_failures
                .into_iter()
                .map(|f| format!("tau {tau}, root {p}: {f}")),
        );
        m = r.matching;
    }
    out.allocation = m.to_allocation();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    Success,
    Abort {
        layer: usize,
        d: usize,
        sources: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRecord {
    pub tau: u64,
    pub outcome: ProbeOutcome,
    pub iterations: usize,
    pub collapses: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Algorithm constants; the target value is set per probe.
    pub params: Params,
    /// Probed first if it lies strictly inside the search interval.
    pub tau_hint: Option<u64>,
    /// Probes run concurrently per round.
    pub jobs: usize,
    pub check_invariants: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            params: Params::default(),
            tau_hint: None,
            jobs: 1,
            check_invariants: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub allocation: Allocation,
    /// Largest target value with a successful probe.
    pub tau_star: u64,
    /// `tau_star / beta`, the value every bundle is certified to reach.
    pub guaranteed: Rational,
    pub probes: Vec<ProbeRecord>,
    pub boundaries_checked: usize,
    pub invariant_failures: Vec<String>,
}

struct Probe {
    record: ProbeRecord,
    result: Option<ProbeSuccess>,
    events: Vec<TraceEvent>,
    checked: usize,
    failures: Vec<String>,
}

fn run_probe(inst: &Instance, tau: u64, opts: &SolveOptions, traced: bool) -> Result<Probe> {
    let start = Instant::now();
    let mut events = Vec::new();
    let sink: Option<&mut dyn TraceSink> = if traced { Some(&mut events) } else { None };
    let ext = ExtendOptions {
        check_invariants: opts.check_invariants,
    };
    let res = solve_for_tau(inst, tau, &opts.params, ext, sink);
    let elapsed = start.elapsed();
    let (outcome, result, checked, failures) = match res {
        Ok(s) => {
            let (c, f) = (s.boundaries_checked, s.invariant_failures.clone());
            (ProbeOutcome::Success, Some(s), c, f)
        }
        Err(ExtendError::Abort {
            layer,
            d,
            sources,
            boundaries_checked,
            invariant_failures,
            ..
        }) => (
            ProbeOutcome::Abort { layer, d, sources },
            None,
            boundaries_checked,
            invariant_failures,
        ),
        Err(ExtendError::Invalid(e)) => return Err(e),
        Err(ExtendError::Defect(msg)) => return Err(Error::Defect(format!("tau {tau}: {msg}"))),
    };
    let (iterations, collapses) = result
        .as_ref()
        .map_or((0, 0), |s| (s.iterations, s.collapses));
    Ok(Probe {
        record: ProbeRecord {
            tau,
            outcome,
            iterations,
            collapses,
            elapsed,
        },
        result,
        events,
        checked,
        failures,
    })
}

/// Evenly spaced probe points strictly inside `(lo, hi)`.
fn probe_points(lo: u64, hi: u64, k: usize) -> Vec<u64> {
    let span = (hi - lo) as u128;
    let mut pts: Vec<u64> = (1..=k as u128)
        .map(|j| lo + (span * j / (k as u128 + 1)) as u64)
        .filter(|&t| t > lo && t < hi)
        .collect();
    pts.dedup();
    if pts.is_empty() && hi - lo > 1 {
        pts.push(lo + (hi - lo) / 2);
    }
    pts
}

/// Binary search over integer targets in `[0, sum of values]`.
///
/// `lo` is the largest target with a successful probe and `hi` the smallest
/// aborted target above it. Every target up to the optimum succeeds, so the
/// final `lo` is at least the optimum.
pub fn solve(
    inst: &Instance,
    opts: &SolveOptions,
    mut trace: Option<&mut dyn TraceSink>,
) -> Result<SolveReport> {
    let report = validate_params(&opts.params.at_tau(Rational::from_integer(1)));
    if !report.is_valid() {
        return Err(Error::InvalidParams(report.violations.join("; ")));
    }
    let total = inst.value_sum();
    let mut lo = 0u64;
    let mut hi = total.saturating_add(1);
    let mut best = Allocation::empty(inst.num_players());
    let mut out = SolveReport {
        allocation: best.clone(),
        tau_star: 0,
        guaranteed: Rational::from_integer(0),
        probes: Vec::new(),
        boundaries_checked: 0,
        invariant_failures: Vec::new(),
    };
    let jobs = opts.jobs.max(1);
    let mut hint = opts.tau_hint.filter(|&t| t > lo && t < hi);

    while hi - lo > 1 {
        let points = match hint.take() {
            Some(t) => vec![t],
            None if jobs == 1 => vec![lo + (hi - lo) / 2],
            None => probe_points(lo, hi, jobs),
        };
        let traced = trace.is_some();
        let probes: Vec<Probe> = if points.len() == 1 {
            vec![run_probe(inst, points[0], opts, traced)?]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = points
                    .iter()
                    .map(|&t| s.spawn(move || run_probe(inst, t, opts, traced)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("probe thread panicked"))
                    .collect::<Result<Vec<_>>>()
            })?
        };

        let new_lo = probes
            .iter()
            .filter(|p| p.result.is_some())
            .map(|p| p.record.tau)
            .max();
        for p in probes {
            if let Some(sink) = reborrow(&mut trace) {
                for e in p.events {
                    sink.record(e);
                }
            }
            out.boundaries_checked += p.checked;
            out.invariant_failures.extend(p.failures);
            if let Some(s) = p.result {
                if Some(p.record.tau) == new_lo && p.record.tau > lo {
                    best = s.allocation;
                }
            }
            out.probes.push(p.record);
        }
        if let Some(t) = new_lo {
            lo = lo.max(t);
        }
        if let Some(t) = out
            .probes
            .iter()
            .filter(|p| p.outcome != ProbeOutcome::Success && p.tau > lo)
            .map(|p| p.tau)
            .min()
        {
            hi = hi.min(t);
        }
    }

    out.allocation = best;
    out.tau_star = lo;
    out.guaranteed = Rational::from_integer(lo as i128) / opts.params.beta;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::allocation_min_value;
    use crate::rat;

    #[test]
    fn fat_matching_small() {
        let inst = Instance::new(vec![10], vec![vec![0]]).unwrap();
        let m = max_fat_matching(&inst, &Params::new(rat(10)));
        assert_eq!(m.fat_resource(0), Some(0));
        let inst = Instance::new(vec![10], vec![vec![0], vec![0]]).unwrap();
        assert_eq!(
            max_fat_matching(&inst, &Params::new(rat(10))).fat_count(),
            1
        );
        // Greedy would give resource 0 to player 0 and strand player 1.
        let inst = Instance::new(vec![10, 10], vec![vec![0, 1], vec![0]]).unwrap();
        assert_eq!(
            max_fat_matching(&inst, &Params::new(rat(10))).fat_count(),
            2
        );
    }

    #[test]
    fn tau_zero_is_trivial() {
        let inst = Instance::new(vec![3], vec![vec![0], vec![]]).unwrap();
        let s =
            solve_for_tau(&inst, 0, &Params::default(), ExtendOptions::default(), None).unwrap();
        assert_eq!(s.allocation, Allocation::empty(2));
    }

    #[test]
    fn private_fat_resources() {
        let inst = Instance::new(vec![4, 4, 4], vec![vec![0], vec![1], vec![2]]).unwrap();
        let s =
            solve_for_tau(&inst, 4, &Params::default(), ExtendOptions::default(), None).unwrap();
        assert_eq!(s.allocation.bundles, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn single_fat_resource() {
        let inst = Instance::new(vec![7], vec![vec![0]]).unwrap();
        let r = solve(&inst, &SolveOptions::default(), None).unwrap();
        assert_eq!(r.tau_star, 7);
        assert_eq!(allocation_min_value(&inst, &r.allocation).unwrap(), 7);
        assert!(r.probes.len() <= 4);
    }

    #[test]
    fn three_fives() {
        let inst = Instance::new(vec![5, 5, 5], vec![vec![0, 1, 2]; 2]).unwrap();
        let mut events = Vec::new();
        let r = solve(&inst, &SolveOptions::default(), Some(&mut events)).unwrap();
        assert!(r.tau_star >= 5);
        assert!(allocation_min_value(&inst, &r.allocation).unwrap() >= 1);
        assert!(rat(allocation_min_value(&inst, &r.allocation).unwrap()) >= r.guaranteed);
        assert!(r.probes.len() <= 5);
    }

    #[test]
    fn parallel_matches_bracket() {
        let inst = Instance::new(vec![5, 5, 5], vec![vec![0, 1, 2]; 2]).unwrap();
        let seq = solve(&inst, &SolveOptions::default(), None).unwrap();
        let par = solve(
            &inst,
            &SolveOptions {
                jobs: 3,
                ..SolveOptions::default()
            },
            None,
        )
        .unwrap();
        assert!(par.tau_star >= 5);
        assert!(seq.tau_star >= 5);
    }

    #[test]
    fn trace_line_format() {
        let e = TraceEvent {
            probe_tau: rat(5),
            iter: 1,
            phase: Phase::Build,
            root: 0,
            ell: 1,
            matched: 1,
            p_sizes: vec![1, 2],
            a_sizes: vec![0, 2],
            i_sizes: vec![0, 0],
            d: vec![0, 2],
            signature: vec![749, 900, i64::MAX],
        };
        assert_eq!(
            e.to_string(),
            "probe_tau=5 iter=1 phase=build root=0 ell=1 matched=1 P=1,2 A=0,2 I=0,0 d=0,2 sig=749,900,inf"
        );
    }
}
