use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::edges::{validate_params, ThinEdge};
use crate::flownet::max_disjoint_paths;
use crate::oracle::is_minimal_edge;
use crate::{rat, Rational};

use super::matching::MatchedEdge;
use super::state::SearchState;

/// Outcome of one named invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

impl fmt::Display for InvariantCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.detail.is_empty() {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}: {}", self.name, self.detail)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.ok)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, problems: Vec<String>) {
        self.checks.push(InvariantCheck {
            name,
            ok: problems.is_empty(),
            detail: problems.join("; "),
        });
    }
}

/// Recomputes every structural invariant of the search state from scratch.
pub fn check_invariants(state: &SearchState) -> InvariantReport {
    let inst = state.instance();
    let params = state.params();
    let classes = state.classes();
    let m = state.matching();
    let g = state.graph();
    let layers = state.layers();
    let ell = state.ell();
    let immediate = state.immediate();
    let imm_players = state.immediate_players();
    let mut report = InvariantReport::default();

    let mut problems = Vec::new();
    let pr = validate_params(params);
    if !pr.is_valid() {
        problems.extend(pr.violations);
    }
    report.push("params", problems);

    // Matching: resource ownership, interest and fat/thin classes.
    let mut problems = Vec::new();
    let mut seen = vec![None; inst.num_resources()];
    for p in 0..m.num_players() {
        let Some(e) = m.edge(p) else { continue };
        for &r in e.resources() {
            if let Some(q) = seen[r] {
                problems.push(format!("resource {r} matched to {q} and {p}"));
            }
            seen[r] = Some(p);
            if m.owner(r) != Some(p) {
                problems.push(format!("owner index of resource {r} is stale"));
            }
            if !inst.is_interested(p, r) {
                problems.push(format!("player {p} is not interested in resource {r}"));
            }
            if classes.is_fat(r) != e.is_fat() {
                problems.push(format!("resource {r} has the wrong class for player {p}"));
            }
        }
        if let MatchedEdge::Thin(t) = e {
            if t.player != p {
                problems.push(format!("edge of player {p} is labelled {}", t.player));
            }
            if !is_minimal_edge(t, params.beta_target(), inst) {
                problems.push(format!(
                    "matched edge of player {p} is not a minimal β-edge"
                ));
            }
        }
    }
    for (r, edge) in seen.iter().enumerate() {
        if m.owner(r).is_some() && edge.is_none() {
            problems.push(format!("resource {r} has an owner but no edge"));
        }
    }
    report.push("matching", problems);

    let mut problems = Vec::new();
    if m.fat_count() != state.initial_fat_count() {
        problems.push(format!(
            "{} fat edges, started with {}",
            m.fat_count(),
            state.initial_fat_count()
        ));
    }
    report.push("fat_count", problems);

    // Addable and immediately addable edges are minimal α-edges.
    let mut problems = Vec::new();
    let alpha_hi = params.alpha_target() + params.beta_target();
    for e in state.addable_upto(ell).chain(immediate) {
        let v = rat(inst.total_value(&e.resources));
        if v < params.alpha_target() || v >= alpha_hi {
            problems.push(format!("edge of player {} has value {v}", e.player));
        }
        if e.resources
            .iter()
            .any(|&r| classes.is_fat(r) || !inst.is_interested(e.player, r))
        {
            problems.push(format!("edge of player {} uses a bad resource", e.player));
        }
        if !is_minimal_edge(e, params.alpha_target(), inst) {
            problems.push(format!("edge of player {} is not minimal", e.player));
        }
    }
    let beta_hi = params.beta_target() * 2;
    for p in 0..m.num_players() {
        if let Some(t) = m.thin_edge(p) {
            let v = rat(inst.total_value(&t.resources));
            if v < params.beta_target() || v >= beta_hi {
                problems.push(format!("matched edge of player {p} has value {v}"));
            }
        }
    }
    report.push("edge_windows", problems);

    let mut problems = Vec::new();
    for e in state.addable_upto(ell) {
        if state.is_immediately_addable(e) {
            problems.push(format!(
                "addable edge of player {} is immediately addable",
                e.player
            ));
        }
    }
    for e in immediate {
        if !state.is_immediately_addable(e) {
            problems.push(format!("edge of player {} in I is blocked", e.player));
        }
    }
    report.push("immediacy", problems);

    // Tree edges are pairwise disjoint, blocker sets are disjoint, each
    // player owns at most one tree edge, and addable edges avoid the blocking
    // edges of earlier layers.
    let mut problems = Vec::new();
    let mut used = vec![false; inst.num_resources()];
    let tree_edges: Vec<&ThinEdge> = state.addable_upto(ell).chain(immediate).collect();
    for e in &tree_edges {
        for &r in &e.resources {
            if used[r] {
                problems.push(format!("resource {r} is in two tree edges"));
            }
            used[r] = true;
        }
    }
    let mut in_p = vec![false; inst.num_players()];
    let mut blocked_before = vec![false; inst.num_resources()];
    for (i, l) in layers.iter().enumerate() {
        for e in &l.addable {
            if e.resources.iter().any(|&r| blocked_before[r]) {
                problems.push(format!(
                    "addable edge of player {} in layer {i} meets an earlier blocking edge",
                    e.player
                ));
            }
        }
        for &b in &l.blockers {
            if in_p[b] {
                problems.push(format!("player {b} blocks in two layers"));
            }
            in_p[b] = true;
            if let Some(t) = m.thin_edge(b) {
                for &r in &t.resources {
                    blocked_before[r] = true;
                }
            } else if !(i == 0 && b == state.root()) {
                problems.push(format!("blocker {b} in layer {i} has no thin edge"));
            }
        }
    }
    let mut owners = vec![0usize; inst.num_players()];
    for e in &tree_edges {
        owners[e.player] += 1;
    }
    if let Some(p) = owners.iter().position(|&c| c > 1) {
        problems.push(format!("player {p} owns {} tree edges", owners[p]));
    }
    report.push("disjointness", problems);

    let mut problems = Vec::new();
    if layers[0].blockers != [state.root()] || !layers[0].addable.is_empty() {
        problems.push("layer 0 is not the root layer".into());
    }
    if m.is_matched(state.root()) {
        problems.push("root is matched".into());
    }
    for (i, l) in layers.iter().enumerate().skip(1) {
        let expected = m.thin_blockers(l.addable.iter().flat_map(|e| e.resources.iter()));
        if expected != l.blockers {
            problems.push(format!(
                "layer {i} lists blockers {:?}, expected {expected:?}",
                l.blockers
            ));
        }
    }
    report.push("blockers", problems);

    // DP(P_{<=ell}, I) = |I|.
    let mut problems = Vec::new();
    let all_p = state.players_upto(ell);
    let dp = max_disjoint_paths(g, &all_p, &imm_players).len();
    if dp != immediate.len() {
        problems.push(format!("DP(P, I) = {dp}, |I| = {}", immediate.len()));
    }
    report.push("dp_immediate", problems);

    let mut dp_layer = Vec::new();
    let mut d_bound = Vec::new();
    let mut gamma = Vec::new();
    let mut growth = Vec::new();
    for (i, layer) in layers.iter().enumerate().skip(1) {
        let sources = state.players_upto(i - 1);
        let mut sinks: Vec<usize> = state.addable_upto(i).map(|e| e.player).collect();
        sinks.extend(&imm_players);
        let dp = max_disjoint_paths(g, &sources, &sinks).len();
        let d = layer.d;
        if dp < d {
            dp_layer.push(format!("layer {i}: DP = {dp} < d = {d}"));
        }
        let a = state.addable_upto(i).count();
        if d < a {
            d_bound.push(format!("layer {i}: d = {d} < |A| = {a}"));
        }
        if rat(d as u64) < params.gamma * rat(sources.len() as u64) {
            gamma.push(format!("layer {i}: d = {d} < gamma * {}", sources.len()));
        }
        let pi = layers[i].blockers.len();
        if rat(pi as u64) < params.delta * rat(sources.len() as u64) {
            growth.push(format!("layer {i}: |P| = {pi} < delta * {}", sources.len()));
        }
    }
    report.push("dp_layer", dp_layer);
    report.push("d_bound", d_bound);
    report.push("gamma", gamma);
    report.push("growth", growth);

    report
}

/// Signature vector `(s_0, ..., s_ell, MAX)` with
/// `s_i = floor(log_{1/(1-mu)}(|P_i| / delta^(i+1)))`. Empty layers map to
/// `i64::MIN`.
pub fn signature(state: &SearchState) -> Vec<i64> {
    let p = state.params();
    let mut sig: Vec<i64> = state
        .layers()
        .iter()
        .enumerate()
        .map(|(i, l)| signature_coordinate(l.blockers.len(), i as u32 + 1, p.mu, p.delta))
        .collect();
    sig.push(i64::MAX);
    sig
}

fn big(v: i128) -> BigUint {
    BigUint::from(v as u128)
}

/// Compares `(1/(1-mu))^k` against `size / delta^e` exactly.
fn cmp_power(k: i64, size: usize, e: u32, mu: Rational, delta: Rational) -> Ordering {
    let (mn, md) = (*mu.numer(), *mu.denom());
    let (dn, dd) = (*delta.numer(), *delta.denom());
    let kk = k.unsigned_abs() as u32;
    // (md / (md - mn))^k  vs  size * dd^e / dn^e
    let (qn, qd) = if k >= 0 {
        (big(md).pow(kk), big(md - mn).pow(kk))
    } else {
        (big(md - mn).pow(kk), big(md).pow(kk))
    };
    let lhs = qn * big(dn).pow(e);
    let rhs = BigUint::from(size) * big(dd).pow(e) * qd;
    lhs.cmp(&rhs)
}

fn signature_coordinate(size: usize, e: u32, mu: Rational, delta: Rational) -> i64 {
    if size == 0 {
        return i64::MIN;
    }
    let f = |r: Rational| r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap();
    let ratio = 1.0 / (1.0 - f(mu));
    let estimate = ((size as f64).ln() - e as f64 * f(delta).ln()) / ratio.ln();
    let mut k = estimate.floor() as i64;
    while cmp_power(k, size, e, mu, delta) == Ordering::Greater {
        k -= 1;
    }
    while cmp_power(k + 1, size, e, mu, delta) != Ordering::Greater {
        k += 1;
    }
    k
}

/// Checks that `cur` has non-decreasing coordinates and, if there is a
/// previous signature, that `cur` is lexicographically smaller.
pub(crate) fn signature_failures(prev: Option<&Vec<i64>>, cur: &[i64]) -> Vec<String> {
    let mut out = Vec::new();
    if cur.windows(2).any(|w| w[0] > w[1]) {
        out.push(format!("signature: coordinates decrease in {cur:?}"));
    }
    if let Some(prev) = prev {
        if cur >= prev.as_slice() {
            out.push(format!("signature: {cur:?} does not precede {prev:?}"));
        }
    }
    out
}
