//! The player / fat-resource network of a partial matching and vertex
//! disjoint path computations on it.
//!
//! Players have an arc to every fat resource they are interested in, except
//! that a matched fat edge `(p, {f})` appears reversed as `f -> p`. Disjoint
//! path problems are solved as unit-capacity flow after splitting every
//! vertex into an in/out pair. Augmenting paths are found breadth-first with
//! adjacency lists in ascending vertex order, so results are deterministic.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use crate::edges::{Classification, FatEdge};
use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Player(usize),
    /// A fat resource, by resource id.
    Resource(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGraph {
    num_players: usize,
    fat: Vec<usize>,
    fat_index: Vec<Option<usize>>,
    out: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn num_vertices(&self) -> usize {
        self.out.len()
    }

    /// Fat resource ids, ascending.
    pub fn fat_resources(&self) -> &[usize] {
        &self.fat
    }

    pub fn node(&self, v: usize) -> Node {
        if v < self.num_players {
            Node::Player(v)
        } else {
            Node::Resource(self.fat[v - self.num_players])
        }
    }

    pub fn index(&self, node: Node) -> Option<usize> {
        match node {
            Node::Player(p) => (p < self.num_players).then_some(p),
            Node::Resource(r) => self
                .fat_index
                .get(r)
                .copied()
                .flatten()
                .map(|k| self.num_players + k),
        }
    }

    pub fn successors(&self, node: Node) -> impl Iterator<Item = Node> + '_ {
        let list: &[usize] = match self.index(node) {
            Some(v) => &self.out[v],
            None => &[],
        };
        list.iter().map(move |&w| self.node(w))
    }

    pub fn has_arc(&self, from: Node, to: Node) -> bool {
        match (self.index(from), self.index(to)) {
            (Some(u), Some(w)) => self.out[u].binary_search(&w).is_ok(),
            _ => false,
        }
    }

    /// All arcs in ascending (tail, head) vertex order.
    pub fn arcs(&self) -> Vec<(Node, Node)> {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, ws)| ws.iter().map(move |&w| (u, w)))
            .map(|(u, w)| (self.node(u), self.node(w)))
            .collect()
    }

    pub(crate) fn out_of(&self, v: usize) -> &[usize] {
        &self.out[v]
    }
}

/// Builds `H_M` from the fat edges of a matching.
pub fn build_graph(inst: &Instance, classes: &Classification, fat_edges: &[FatEdge]) -> FlowGraph {
    let n = inst.num_players();
    let fat: Vec<usize> = classes.fat().collect();
    let mut fat_index = vec![None; inst.num_resources()];
    for (k, &r) in fat.iter().enumerate() {
        fat_index[r] = Some(k);
    }
    let mut holder = vec![None; inst.num_resources()];
    for e in fat_edges {
        holder[e.resource] = Some(e.player);
    }
    let mut out = vec![Vec::new(); n + fat.len()];
    for p in 0..n {
        for &r in inst.interest(p) {
            if let Some(k) = fat_index[r] {
                if holder[r] == Some(p) {
                    out[n + k].push(p);
                } else {
                    out[p].push(n + k);
                }
            }
        }
    }
    for list in &mut out {
        list.sort_unstable();
    }
    FlowGraph {
        num_players: n,
        fat,
        fat_index,
        out,
    }
}

/// Vertex disjoint directed paths from source players to sink players.
/// A path of a single player is the zero-length path of a vertex that is
/// both a source and a sink.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathSolution {
    pub paths: Vec<Vec<Node>>,
}

fn player_of(node: Node) -> usize {
    match node {
        Node::Player(p) => p,
        Node::Resource(r) => panic!("path endpoint is resource {r}, not a player"),
    }
}

impl PathSolution {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn sources(&self) -> Vec<usize> {
        self.paths.iter().map(|p| player_of(p[0])).collect()
    }

    pub fn sinks(&self) -> Vec<usize> {
        self.paths
            .iter()
            .map(|p| player_of(*p.last().unwrap()))
            .collect()
    }

    pub fn vertices(&self) -> BTreeSet<Node> {
        self.paths.iter().flatten().copied().collect()
    }

    pub fn path_ending_at(&self, player: usize) -> Option<&[Node]> {
        self.paths
            .iter()
            .find(|p| p.last() == Some(&Node::Player(player)))
            .map(|p| p.as_slice())
    }

    pub fn is_vertex_disjoint(&self) -> bool {
        let total: usize = self.paths.iter().map(|p| p.len()).sum();
        self.vertices().len() == total
    }

    /// Checks that every path is a nonempty walk along arcs of `g` from a
    /// source to a sink and that paths share no vertex.
    pub fn is_feasible(&self, g: &FlowGraph, sources: &[usize], sinks: &[usize]) -> bool {
        self.is_vertex_disjoint()
            && self.paths.iter().all(|path| {
                matches!(path.first(), Some(Node::Player(s)) if sources.contains(s))
                    && matches!(path.last(), Some(Node::Player(t)) if sinks.contains(t))
                    && path.windows(2).all(|w| g.has_arc(w[0], w[1]))
            })
    }
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: u8,
    orig: u8,
    rev: usize,
}

/// Incremental unit-capacity flow over the split network of a [`FlowGraph`].
///
/// Sources and sinks are players. The flow can be warm-started from an
/// existing [`PathSolution`] and grown one augmenting path at a time.
#[derive(Debug, Clone)]
pub struct DisjointPaths<'g> {
    g: &'g FlowGraph,
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    source_arc: Vec<Option<usize>>,
    sink_arc: Vec<Option<usize>>,
}

impl<'g> DisjointPaths<'g> {
    pub fn new(g: &'g FlowGraph, sources: &[usize], sinks: &[usize]) -> Self {
        let nv = g.num_vertices();
        let mut dp = DisjointPaths {
            g,
            adj: vec![Vec::new(); 2 * nv + 2],
            arcs: Vec::new(),
            source_arc: vec![None; g.num_players()],
            sink_arc: vec![None; g.num_players()],
        };
        for v in 0..nv {
            dp.push_arc(2 * v, 2 * v + 1);
            for &w in g.out_of(v) {
                dp.push_arc(2 * v + 1, 2 * w);
            }
        }
        for &s in sources {
            dp.add_source(s);
        }
        for &t in sinks {
            dp.add_sink(t);
        }
        dp
    }

    fn super_source(&self) -> usize {
        2 * self.g.num_vertices()
    }

    fn super_sink(&self) -> usize {
        2 * self.g.num_vertices() + 1
    }

    fn push_arc(&mut self, from: usize, to: usize) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc {
            to,
            cap: 1,
            orig: 1,
            rev: id + 1,
        });
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            orig: 0,
            rev: id,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    pub fn add_source(&mut self, p: usize) {
        if self.source_arc[p].is_none() {
            let a = self.push_arc(self.super_source(), 2 * p);
            self.source_arc[p] = Some(a);
        }
    }

    pub fn add_sink(&mut self, p: usize) {
        match self.sink_arc[p] {
            None => {
                let a = self.push_arc(2 * p + 1, self.super_sink());
                self.sink_arc[p] = Some(a);
            }
            Some(a) if self.arcs[a].orig == 0 => {
                self.arcs[a].orig = 1;
                self.arcs[a].cap = 1;
            }
            Some(_) => {}
        }
    }

    pub fn is_sink(&self, p: usize) -> bool {
        matches!(self.sink_arc[p], Some(a) if self.arcs[a].orig == 1)
    }

    fn disable_sink(&mut self, p: usize) {
        if let Some(a) = self.sink_arc[p] {
            debug_assert_eq!(self.arcs[a].cap, 1, "disabling a used sink");
            self.arcs[a].orig = 0;
            self.arcs[a].cap = 0;
        }
    }

    fn flows(&self, a: usize) -> bool {
        self.arcs[a].orig == 1 && self.arcs[a].cap == 0
    }

    /// Number of paths currently routed.
    pub fn value(&self) -> usize {
        self.source_arc
            .iter()
            .flatten()
            .filter(|&&a| self.flows(a))
            .count()
    }

    fn find_arc(&self, from: usize, to: usize) -> Option<usize> {
        self.adj[from]
            .iter()
            .copied()
            .find(|&a| self.arcs[a].to == to && self.arcs[a].orig == 1)
    }

    fn push(&mut self, a: usize) {
        self.arcs[a].cap -= 1;
        let r = self.arcs[a].rev;
        self.arcs[r].cap += 1;
    }

    /// Routes the paths of `base` as flow. Fails if a path is not a
    /// source-to-sink walk in the graph or if paths overlap.
    pub fn load(&mut self, base: &PathSolution) -> Result<()> {
        for path in &base.paths {
            let idx: Vec<usize> = path
                .iter()
                .map(|&n| {
                    self.g
                        .index(n)
                        .ok_or_else(|| Error::InfeasibleBase(format!("{n:?} is not in the graph")))
                })
                .collect::<Result<_>>()?;
            let first = idx[0];
            let last = *idx.last().unwrap();
            let sa = (first < self.g.num_players())
                .then(|| self.source_arc[first])
                .flatten()
                .filter(|&a| self.arcs[a].cap == 1)
                .ok_or_else(|| {
                    Error::InfeasibleBase(format!("{:?} is not a free source", path[0]))
                })?;
            let ta = (last < self.g.num_players())
                .then(|| self.sink_arc[last])
                .flatten()
                .filter(|&a| self.arcs[a].cap == 1)
                .ok_or_else(|| {
                    Error::InfeasibleBase(format!("{:?} is not a free sink", path.last()))
                })?;
            let mut chain = vec![sa];
            for (k, &v) in idx.iter().enumerate() {
                let split = self.find_arc(2 * v, 2 * v + 1).unwrap();
                if self.arcs[split].cap == 0 {
                    return Err(Error::InfeasibleBase(format!(
                        "vertex {:?} used twice",
                        path[k]
                    )));
                }
                chain.push(split);
                if let Some(&w) = idx.get(k + 1) {
                    let a = self.find_arc(2 * v + 1, 2 * w).ok_or_else(|| {
                        Error::InfeasibleBase(format!("no arc {:?} -> {:?}", path[k], path[k + 1]))
                    })?;
                    chain.push(a);
                }
            }
            chain.push(ta);
            for a in chain {
                self.push(a);
            }
        }
        Ok(())
    }

    /// One breadth-first augmenting path search. Returns whether the flow
    /// grew by one.
    pub fn augment(&mut self) -> bool {
        let s = self.super_source();
        let t = self.super_sink();
        let mut parent: Vec<Option<usize>> = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let w = self.arcs[a].to;
                if self.arcs[a].cap > 0 && !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(a);
                    if w == t {
                        let mut cur = t;
                        while let Some(a) = parent[cur] {
                            self.push(a);
                            cur = self.arcs[self.arcs[a].rev].to;
                        }
                        return true;
                    }
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Augments until the flow is maximum; returns its value.
    pub fn maximize(&mut self) -> usize {
        while self.augment() {}
        self.value()
    }

    /// Adds `p` as a sink and keeps it iff that admits one more path.
    /// Assumes the current flow is maximum.
    pub fn try_add_sink(&mut self, p: usize) -> bool {
        if self.is_sink(p) {
            return false;
        }
        self.add_sink(p);
        if self.augment() {
            true
        } else {
            self.disable_sink(p);
            false
        }
    }

    /// Decomposes the flow into source-to-sink paths, ordered by source.
    /// Flow cycles detached from the sources are dropped.
    pub fn solution(&self) -> PathSolution {
        let t = self.super_sink();
        let mut paths = Vec::new();
        for p in 0..self.g.num_players() {
            let Some(sa) = self.source_arc[p] else {
                continue;
            };
            if !self.flows(sa) {
                continue;
            }
            let mut path = Vec::new();
            let mut v = p;
            loop {
                path.push(self.g.node(v));
                let next = self.adj[2 * v + 1]
                    .iter()
                    .copied()
                    .find(|&a| self.flows(a))
                    .expect("flow conservation at split vertex");
                let to = self.arcs[next].to;
                if to == t {
                    break;
                }
                v = to / 2;
                assert!(
                    path.len() <= self.g.num_vertices(),
                    "flow path revisits a vertex"
                );
            }
            paths.push(path);
        }
        PathSolution { paths }
    }
}

/// Maximum set of vertex disjoint paths from `sources` to `sinks`.
pub fn max_disjoint_paths(g: &FlowGraph, sources: &[usize], sinks: &[usize]) -> PathSolution {
    let mut dp = DisjointPaths::new(g, sources, sinks);
    dp.maximize();
    dp.solution()
}

/// Grows a feasible `base` into an optimal solution for `(sources, sinks)`.
/// Sources and sinks used by `base` stay used.
pub fn augment_from(
    g: &FlowGraph,
    base: &PathSolution,
    sources: &[usize],
    sinks: &[usize],
) -> Result<PathSolution> {
    let mut dp = DisjointPaths::new(g, sources, sinks);
    dp.load(base)?;
    dp.maximize();
    Ok(dp.solution())
}

/// Layered split `I_0, ..., I_l` of a sink set together with the witness
/// solution `W = W_0 ∪ ... ∪ W_l`, where `W_i` holds the paths starting in
/// layer `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalDecomposition {
    pub layer_sources: Vec<Vec<usize>>,
    /// Sink players of each layer.
    pub sinks: Vec<Vec<usize>>,
    pub paths: Vec<PathSolution>,
}

impl CanonicalDecomposition {
    pub fn num_layers(&self) -> usize {
        self.sinks.len()
    }

    /// Union of `W_0..=W_i`.
    pub fn paths_upto(&self, i: usize) -> PathSolution {
        PathSolution {
            paths: self.paths[..=i]
                .iter()
                .flat_map(|w| w.paths.iter().cloned())
                .collect(),
        }
    }

    pub fn sinks_upto(&self, i: usize) -> Vec<usize> {
        self.sinks[..=i].iter().flatten().copied().collect()
    }

    pub fn sources_upto(&self, i: usize) -> Vec<usize> {
        self.layer_sources[..=i].iter().flatten().copied().collect()
    }

    pub fn solution(&self) -> PathSolution {
        self.paths_upto(self.num_layers() - 1)
    }
}

/// Computes the optimum for sources `P_0`, then augments it as `P_1`,
/// `P_2`, ... join. Sources once routed stay routed, so exactly
/// `DP(P_{<=i}, sinks)` paths start in the first `i + 1` layers; `I_i` is the
/// set of sinks reached by paths starting in layer `i`.
pub fn canonical_decomposition(
    g: &FlowGraph,
    layer_players: &[Vec<usize>],
    sinks: &[usize],
) -> CanonicalDecomposition {
    let mut dp = DisjointPaths::new(g, &[], sinks);
    let mut layer_of = vec![usize::MAX; g.num_players()];
    for (i, layer) in layer_players.iter().enumerate() {
        for &p in layer {
            layer_of[p] = i;
            dp.add_source(p);
        }
        dp.maximize();
    }
    let l = layer_players.len();
    let mut decomp = CanonicalDecomposition {
        layer_sources: layer_players.to_vec(),
        sinks: vec![Vec::new(); l],
        paths: vec![PathSolution::default(); l],
    };
    for path in dp.solution().paths {
        let i = layer_of[player_of(path[0])];
        decomp.sinks[i].push(player_of(*path.last().unwrap()));
        decomp.paths[i].paths.push(path);
    }
    decomp
}

/// Optimal solution from `P_{<=t-1}` to `I_{<=t-1} ∪ addable` obtained by
/// augmenting `W_{<=t-1}` toward the addable sinks. It routes every sink of
/// `I_{<=t-1}` and avoids all vertices of `W_t`.
pub fn rerouted_solution(
    g: &FlowGraph,
    decomp: &CanonicalDecomposition,
    t: usize,
    addable: &[usize],
) -> Result<PathSolution> {
    if t == 0 || t >= decomp.num_layers() {
        return Err(Error::InvalidInput(format!(
            "layer {t} out of range 1..{}",
            decomp.num_layers()
        )));
    }
    let base = decomp.paths_upto(t - 1);
    let sources = decomp.sources_upto(t - 1);
    let mut sinks = decomp.sinks_upto(t - 1);
    sinks.extend_from_slice(addable);
    sinks.sort_unstable();
    sinks.dedup();
    let x = augment_from(g, &base, &sources, &sinks).map_err(|e| {
        Error::InvalidInput(format!("witness does not match the decomposition: {e}"))
    })?;

    let wt = decomp.paths[t].vertices();
    if x.vertices().iter().any(|v| wt.contains(v)) {
        return Err(Error::Defect(format!(
            "rerouted solution touches the paths of layer {t}"
        )));
    }
    let used: BTreeSet<usize> = x.sinks().into_iter().collect();
    if let Some(s) = decomp.sinks_upto(t - 1).iter().find(|s| !used.contains(s)) {
        return Err(Error::Defect(format!(
            "rerouted solution drops sink {s} of an earlier layer"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edges::{classify_resources, Params};
    use crate::Rational;

    // Players 0 (a) and 1 (b); resource 0 fat, resource 1 thin.
    fn two_player() -> (Instance, Classification) {
        let inst = Instance::new(vec![10, 1], vec![vec![0, 1], vec![0]]).unwrap();
        let c = classify_resources(&inst, &Params::new(Rational::from_integer(26)));
        (inst, c)
    }

    #[test]
    fn arcs_follow_the_matching() {
        let (inst, c) = two_player();
        let g = build_graph(&inst, &c, &[]);
        assert_eq!(
            g.arcs(),
            vec![
                (Node::Player(0), Node::Resource(0)),
                (Node::Player(1), Node::Resource(0))
            ]
        );
        let g = build_graph(
            &inst,
            &c,
            &[FatEdge {
                player: 1,
                resource: 0,
            }],
        );
        assert_eq!(
            g.arcs(),
            vec![
                (Node::Player(0), Node::Resource(0)),
                (Node::Resource(0), Node::Player(1))
            ]
        );
        assert_eq!(g.index(Node::Resource(1)), None);
    }

    #[test]
    fn single_path_and_zero_length() {
        let (inst, c) = two_player();
        let g = build_graph(
            &inst,
            &c,
            &[FatEdge {
                player: 1,
                resource: 0,
            }],
        );
        let sol = max_disjoint_paths(&g, &[0], &[1]);
        assert_eq!(
            sol.paths,
            vec![vec![Node::Player(0), Node::Resource(0), Node::Player(1)]]
        );
        let sol = max_disjoint_paths(&g, &[0], &[0]);
        assert_eq!(sol.paths, vec![vec![Node::Player(0)]]);
        // Both paths compete for player 0's vertex.
        assert_eq!(max_disjoint_paths(&g, &[0], &[0, 1]).len(), 1);
    }

    #[test]
    fn augment_keeps_base_and_rejects_infeasible() {
        let (inst, c) = two_player();
        let g = build_graph(
            &inst,
            &c,
            &[FatEdge {
                player: 1,
                resource: 0,
            }],
        );
        let empty = augment_from(&g, &PathSolution::default(), &[0, 1], &[1]).unwrap();
        assert_eq!(empty, max_disjoint_paths(&g, &[0, 1], &[1]));
        let base = PathSolution {
            paths: vec![vec![Node::Player(1)]],
        };
        let grown = augment_from(&g, &base, &[0, 1], &[1]).unwrap();
        assert_eq!(grown.len(), 1);
        let bogus = PathSolution {
            paths: vec![vec![Node::Player(1), Node::Resource(0), Node::Player(0)]],
        };
        assert!(matches!(
            augment_from(&g, &bogus, &[0, 1], &[0, 1]),
            Err(Error::InfeasibleBase(_))
        ));
    }

    #[test]
    fn earlier_layer_takes_shared_sink() {
        // p0 -> f0 -> p2, p1 -> f0: only one of p0/p1 reaches sink p2.
        let inst = Instance::new(vec![10], vec![vec![0], vec![0], vec![0]]).unwrap();
        let c = classify_resources(&inst, &Params::new(Rational::from_integer(13)));
        let g = build_graph(
            &inst,
            &c,
            &[FatEdge {
                player: 2,
                resource: 0,
            }],
        );
        let d = canonical_decomposition(&g, &[vec![0], vec![1]], &[2]);
        assert_eq!(d.sinks, vec![vec![2], vec![]]);
        assert_eq!(max_disjoint_paths(&g, &[0], &d.sinks[0]).len(), 1);

        let empty = canonical_decomposition(&g, &[vec![0], vec![1]], &[]);
        assert!(empty.solution().is_empty());

        let x = rerouted_solution(&g, &d, 1, &[]).unwrap();
        assert_eq!(x.sinks(), vec![2]);
        assert!(rerouted_solution(&g, &d, 0, &[]).is_err());
    }

    #[test]
    fn try_add_sink_is_single_augmentation() {
        let (inst, c) = two_player();
        let g = build_graph(&inst, &c, &[]);
        let mut dp = DisjointPaths::new(&g, &[0], &[]);
        assert_eq!(dp.maximize(), 0);
        assert!(!dp.try_add_sink(1));
        assert!(!dp.is_sink(1));
        assert!(dp.try_add_sink(0));
        assert!(!dp.try_add_sink(0));
        assert_eq!(dp.value(), 1);
    }
}
