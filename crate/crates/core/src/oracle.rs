//! Exhaustive reference computations for small inputs.

use crate::edges::ThinEdge;
use crate::error::{Error, Result};
use crate::flownet::{FlowGraph, Node};
use crate::instance::Instance;
use crate::{rat, Rational};

pub const OPT_MAX_PLAYERS: usize = 6;
pub const OPT_MAX_RESOURCES: usize = 14;
pub const PATHS_MAX_VERTICES: usize = 10;

/// Optimal max-min value by dynamic programming over resource subsets.
/// An instance without players has value 0.
pub fn brute_force_opt(inst: &Instance) -> Result<u64> {
    let (n, m) = (inst.num_players(), inst.num_resources());
    if n > OPT_MAX_PLAYERS || m > OPT_MAX_RESOURCES {
        return Err(Error::SizeGuard(format!(
            "brute force needs at most {OPT_MAX_PLAYERS} players and {OPT_MAX_RESOURCES} \
             resources, got {n} and {m}"
        )));
    }
    if n == 0 {
        return Ok(0);
    }
    let full = 1usize << m;
    let mut sum = vec![0u64; full];
    for s in 1..full {
        let low = s.trailing_zeros() as usize;
        sum[s] = sum[s & (s - 1)] + inst.value(low);
    }
    // f[S]: best min value for the players handled so far using only S.
    let mut f = vec![u64::MAX; full];
    for k in 0..n {
        let mask: usize = inst.interest(k).iter().map(|&r| 1usize << r).sum();
        let mut g = vec![0u64; full];
        for s in 0..full {
            let mut best = 0;
            let avail = s & mask;
            let mut t = avail;
            loop {
                best = best.max(f[s & !t].min(sum[t]));
                if t == 0 {
                    break;
                }
                t = (t - 1) & avail;
            }
            g[s] = best;
        }
        f = g;
    }
    Ok(f[full - 1])
}

/// Maximum number of vertex-disjoint paths from `sources` to `sinks`
/// (player ids) by exhaustive search over path sets.
pub fn brute_force_disjoint_paths(
    g: &FlowGraph,
    sources: &[usize],
    sinks: &[usize],
) -> Result<usize> {
    let nv = g.num_vertices();
    if nv > PATHS_MAX_VERTICES {
        return Err(Error::SizeGuard(format!(
            "path enumeration needs at most {PATHS_MAX_VERTICES} vertices, got {nv}"
        )));
    }
    let mut srcs: Vec<usize> = sources.to_vec();
    srcs.sort_unstable();
    srcs.dedup();
    let mut is_sink = vec![false; g.num_players()];
    for &t in sinks {
        is_sink[t] = true;
    }
    let mut used = vec![false; nv];
    Ok(route(g, &srcs, &is_sink, &mut used))
}

fn route(g: &FlowGraph, srcs: &[usize], is_sink: &[bool], used: &mut [bool]) -> usize {
    let Some((&s, rest)) = srcs.split_first() else {
        return 0;
    };
    let mut best = route(g, rest, is_sink, used);
    let v = g.index(Node::Player(s)).unwrap();
    if !used[v] {
        used[v] = true;
        extend(g, v, rest, is_sink, used, &mut best);
        used[v] = false;
    }
    best
}

/// Continues the current path at `v`; either ends it here or walks on.
fn extend(
    g: &FlowGraph,
    v: usize,
    rest: &[usize],
    is_sink: &[bool],
    used: &mut [bool],
    best: &mut usize,
) {
    if let Node::Player(p) = g.node(v) {
        if is_sink[p] {
            *best = (*best).max(1 + route(g, rest, is_sink, used));
        }
    }
    for w in g.successors(g.node(v)).collect::<Vec<_>>() {
        let w = g.index(w).unwrap();
        if !used[w] {
            used[w] = true;
            extend(g, w, rest, is_sink, used, best);
            used[w] = false;
        }
    }
}

/// True iff the edge reaches `target` and dropping any single resource
/// falls below it.
pub fn is_minimal_edge(edge: &ThinEdge, target: Rational, inst: &Instance) -> bool {
    let total = inst.total_value(&edge.resources);
    rat(total) >= target
        && edge
            .resources
            .iter()
            .all(|&r| rat(total - inst.value(r)) < target)
}
