use thiserror::Error;

use crate::edges::{
    beta_minimal_subset, build_minimal_thin_edge, classify_resources, validate_params,
    Classification, Params, ThinEdge,
};
use crate::error::Error;
use crate::flownet::{
    build_graph, canonical_decomposition, rerouted_solution, DisjointPaths, FlowGraph, Node,
    PathSolution,
};
use crate::instance::Instance;
use crate::solver::{fat_matching_cardinality, reborrow, Phase, TraceEvent, TraceSink};
use crate::{rat, Rational};

use super::invariants::{check_invariants, signature, signature_failures};
use super::matching::{MatchedEdge, PartialMatching};

/// Upper limit on iterative steps per extension. Validated parameters
/// guarantee termination long before this.
const MAX_ITERATIONS: usize = 1_000_000;

/// One layer of the alternating tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    /// Addable α-edges.
    pub addable: Vec<ThinEdge>,
    /// Players whose matched thin edge blocks `addable`. Layer 0 holds the
    /// root, whose placeholder edge is empty.
    pub blockers: Vec<usize>,
    /// Disjoint path count recorded when the layer was built.
    pub d: usize,
}

/// Alternating tree state for extending a matching by one root player.
#[derive(Debug, Clone)]
pub struct SearchState<'a> {
    inst: &'a Instance,
    params: Params,
    classes: Classification,
    root: usize,
    layers: Vec<Layer>,
    immediate: Vec<ThinEdge>,
    matching: PartialMatching,
    graph: FlowGraph,
    initial_fat: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtendError {
    /// Too few disjoint paths after a build phase. Certifies that no
    /// allocation reaches `tau`, so the binary search treats it as failure.
    #[error("abort at tau = {tau}: d = {d} < gamma * {sources} after building layer {layer}")]
    Abort {
        tau: Rational,
        layer: usize,
        d: usize,
        sources: usize,
        /// Invariant checks performed before the abort.
        boundaries_checked: usize,
        invariant_failures: Vec<String>,
    },
    #[error(transparent)]
    Invalid(Error),
    #[error("defect: {0}")]
    Defect(String),
}

impl From<Error> for ExtendError {
    fn from(e: Error) -> Self {
        match e {
            Error::Defect(msg) => ExtendError::Defect(msg),
            Error::StaleState(msg) => ExtendError::Defect(format!("stale state: {msg}")),
            other => ExtendError::Invalid(other),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtendOptions {
    /// Recompute every invariant and the signature at each iterative-step
    /// boundary and record failures.
    pub check_invariants: bool,
}

#[derive(Debug, Clone)]
pub struct ExtendOutcome {
    pub matching: PartialMatching,
    pub iterations: usize,
    pub collapses: usize,
    /// Iterative-step boundaries at which invariants were checked.
    pub boundaries_checked: usize,
    pub invariant_failures: Vec<String>,
}

pub(crate) enum CollapseResult {
    RootMatched,
    Stable,
}

pub fn init_state<'a>(
    inst: &'a Instance,
    matching: PartialMatching,
    root: usize,
    params: &Params,
) -> Result<SearchState<'a>, Error> {
    if root >= inst.num_players() {
        return Err(Error::InvalidInput(format!("unknown player {root}")));
    }
    if matching.is_matched(root) {
        return Err(Error::InvalidInput(format!(
            "player {root} is already matched"
        )));
    }
    let classes = classify_resources(inst, params);
    let graph = build_graph(inst, &classes, &matching.fat_edges());
    Ok(SearchState {
        inst,
        params: params.clone(),
        classes,
        root,
        layers: vec![Layer {
            addable: Vec::new(),
            blockers: vec![root],
            d: 0,
        }],
        immediate: Vec::new(),
        initial_fat: matching.fat_count(),
        matching,
        graph,
    })
}

impl<'a> SearchState<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn classes(&self) -> &Classification {
        &self.classes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Index of the last layer.
    pub fn ell(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn immediate(&self) -> &[ThinEdge] {
        &self.immediate
    }

    pub fn matching(&self) -> &PartialMatching {
        &self.matching
    }

    pub fn graph(&self) -> &FlowGraph {
        &self.graph
    }

    pub fn initial_fat_count(&self) -> usize {
        self.initial_fat
    }

    pub fn into_matching(self) -> PartialMatching {
        self.matching
    }

    /// Blocking players of layers `0..=i`.
    pub fn players_upto(&self, i: usize) -> Vec<usize> {
        self.layers[..=i]
            .iter()
            .flat_map(|l| l.blockers.iter().copied())
            .collect()
    }

    pub fn addable_upto(&self, i: usize) -> impl Iterator<Item = &ThinEdge> + '_ {
        self.layers[..=i].iter().flat_map(|l| l.addable.iter())
    }

    pub fn immediate_players(&self) -> Vec<usize> {
        self.immediate.iter().map(|e| e.player).collect()
    }

    /// Resources held by addable, blocking and immediately addable edges.
    pub fn tree_resources(&self) -> Vec<bool> {
        let mut used = vec![false; self.inst.num_resources()];
        for e in self.addable_upto(self.ell()).chain(&self.immediate) {
            for &r in &e.resources {
                used[r] = true;
            }
        }
        for p in self.players_upto(self.ell()) {
            if let Some(e) = self.matching.thin_edge(p) {
                for &r in &e.resources {
                    used[r] = true;
                }
            }
        }
        used
    }

    pub fn is_immediately_addable(&self, edge: &ThinEdge) -> bool {
        free_value_reaches(self.inst, &self.matching, edge, &self.params)
    }

    fn rebuild_graph(&mut self) {
        self.graph = build_graph(self.inst, &self.classes, &self.matching.fat_edges());
    }

    fn sources_and_sinks(&self) -> (Vec<usize>, Vec<usize>) {
        let sources = self.players_upto(self.ell());
        let sinks = self
            .addable_upto(self.ell())
            .chain(&self.immediate)
            .map(|e| e.player)
            .collect();
        (sources, sinks)
    }

    /// The α-edge `player` could claim from resources outside the tree.
    fn candidate_edge(&self, player: usize, used: &[bool]) -> Option<ThinEdge> {
        let available: Vec<usize> = self
            .inst
            .interest(player)
            .iter()
            .copied()
            .filter(|&r| !used[r] && !self.classes.is_fat(r))
            .collect();
        build_minimal_thin_edge(player, self.params.alpha_target(), &available, self.inst)
    }

    /// First candidate edge in ascending player order, evaluated against the
    /// current state with an empty next layer.
    pub fn find_candidate(&self) -> Option<ThinEdge> {
        let used = self.tree_resources();
        let (sources, sinks) = self.sources_and_sinks();
        let mut flow = DisjointPaths::new(&self.graph, &sources, &sinks);
        flow.maximize();
        (0..self.inst.num_players()).find_map(|p| {
            if flow.is_sink(p) {
                return None;
            }
            let edge = self.candidate_edge(p, &used)?;
            flow.clone().try_add_sink(p).then_some(edge)
        })
    }

    /// Adds every candidate edge, appends the new layer and returns its `d`.
    pub fn build_phase(&mut self) -> usize {
        let mut used = self.tree_resources();
        let (sources, sinks) = self.sources_and_sinks();
        let mut addable = Vec::new();
        let mut newly_immediate = Vec::new();
        let d = {
            let mut flow = DisjointPaths::new(&self.graph, &sources, &sinks);
            flow.maximize();
            // A player that fails once keeps failing: resources only get
            // scarcer and the sink set only grows.
            for p in 0..self.inst.num_players() {
                if flow.is_sink(p) {
                    continue;
                }
                let Some(edge) = self.candidate_edge(p, &used) else {
                    continue;
                };
                if !flow.try_add_sink(p) {
                    continue;
                }
                for &r in &edge.resources {
                    used[r] = true;
                }
                if self.is_immediately_addable(&edge) {
                    newly_immediate.push(edge);
                } else {
                    addable.push(edge);
                }
            }
            flow.value()
        };
        self.immediate.extend(newly_immediate);
        let blockers = self
            .matching
            .thin_blockers(addable.iter().flat_map(|e| e.resources.iter()));
        self.layers.push(Layer {
            addable,
            blockers,
            d,
        });
        d
    }

    fn immediate_edge_of(&self, player: usize) -> Option<&ThinEdge> {
        self.immediate.iter().find(|e| e.player == player)
    }

    fn is_collapsible(&self, i: usize, sinks_in_layer: usize) -> bool {
        rat(sinks_in_layer as u64) >= self.params.mu * rat(self.layers[i].blockers.len() as u64)
    }

    /// Collapses the earliest collapsible layer until none is left or the
    /// root is matched.
    pub(crate) fn collapse_phase(
        &mut self,
        iter: usize,
        collapses: &mut usize,
        mut trace: Option<&mut dyn TraceSink>,
    ) -> Result<CollapseResult, ExtendError> {
        loop {
            let layer_players: Vec<Vec<usize>> =
                self.layers.iter().map(|l| l.blockers.clone()).collect();
            let decomp =
                canonical_decomposition(&self.graph, &layer_players, &self.immediate_players());
            let Some(t) =
                (0..self.layers.len()).find(|&i| self.is_collapsible(i, decomp.sinks[i].len()))
            else {
                return Ok(CollapseResult::Stable);
            };
            if self.layers[t].blockers.is_empty() {
                return Err(ExtendError::Defect(format!(
                    "earliest collapsible layer {t} has no blocking players"
                )));
            }

            let reroute = if t > 0 {
                let addable: Vec<usize> = self.addable_upto(t).map(|e| e.player).collect();
                rerouted_solution(&self.graph, &decomp, t, &addable)?
            } else {
                PathSolution::default()
            };

            for path in &decomp.paths[t].paths {
                let Some(&Node::Player(v)) = path.last() else {
                    return Err(ExtendError::Defect("path does not end at a player".into()));
                };
                let iedge = self
                    .immediate_edge_of(v)
                    .cloned()
                    .ok_or_else(|| ExtendError::Defect(format!("sink {v} has no edge in I")))?;
                alternate_along(&mut self.matching, path, &iedge, &self.params, self.inst)?;
            }
            *collapses += 1;

            let keep = decomp.sinks_upto(t.saturating_sub(1));
            let keep: Vec<usize> = if t == 0 { Vec::new() } else { keep };
            self.immediate.retain(|e| keep.contains(&e.player));
            self.layers.truncate(t + 1);
            self.rebuild_graph();

            if self.matching.is_matched(self.root) {
                if let Some(sink) = reborrow(&mut trace) {
                    sink.record(TraceEvent::from_state(self, iter, Phase::Collapse));
                }
                return Ok(CollapseResult::RootMatched);
            }

            let pending = std::mem::take(&mut self.layers[t].addable);
            let mut still_blocked = Vec::new();
            for a in pending {
                if self.is_immediately_addable(&a) {
                    if reroute.path_ending_at(a.player).is_some() {
                        self.immediate.push(a);
                    }
                } else {
                    still_blocked.push(a);
                }
            }
            self.layers[t].blockers = self
                .matching
                .thin_blockers(still_blocked.iter().flat_map(|e| e.resources.iter()));
            self.layers[t].addable = still_blocked;

            if let Some(sink) = reborrow(&mut trace) {
                sink.record(TraceEvent::from_state(self, iter, Phase::Collapse));
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn matching_mut(&mut self) -> &mut PartialMatching {
        &mut self.matching
    }

    #[cfg(test)]
    pub(crate) fn refresh_graph(&mut self) {
        self.rebuild_graph();
    }
}

fn free_value_reaches(
    inst: &Instance,
    matching: &PartialMatching,
    edge: &ThinEdge,
    params: &Params,
) -> bool {
    let free: u64 = edge
        .resources
        .iter()
        .filter(|&&r| matching.owner(r).is_none())
        .map(|&r| inst.value(r))
        .sum();
    rat(free) >= params.beta_target()
}

/// Updates `matching` along an alternating path ending at the owner of
/// `iedge`: fat edges are flipped along the path, the source's blocking edge
/// is dropped, and the sink takes a β-minimal free subset of `iedge`.
pub fn alternate_along(
    matching: &mut PartialMatching,
    path: &[Node],
    iedge: &ThinEdge,
    params: &Params,
    inst: &Instance,
) -> Result<(), Error> {
    let (Some(&Node::Player(u)), Some(&Node::Player(v))) = (path.first(), path.last()) else {
        return Err(Error::InvalidInput(
            "path must start and end at players".into(),
        ));
    };
    if v != iedge.player {
        return Err(Error::InvalidInput(format!(
            "path ends at {v} but the edge belongs to {}",
            iedge.player
        )));
    }
    let fat_before = matching.fat_count();

    match matching.edge(u) {
        Some(MatchedEdge::Fat(f)) => {
            return Err(Error::Defect(format!(
                "source {u} holds fat resource {f} instead of a blocking edge"
            )))
        }
        Some(MatchedEdge::Thin(_)) => {
            matching.remove(u);
        }
        None => {}
    }

    for w in path.windows(2) {
        if let (Node::Resource(f), Node::Player(p)) = (w[0], w[1]) {
            if matching.fat_resource(p) != Some(f) {
                return Err(Error::StaleState(format!(
                    "arc {f} -> {p} without matched fat edge"
                )));
            }
            matching.remove(p);
        }
    }
    for w in path.windows(2) {
        if let (Node::Player(p), Node::Resource(f)) = (w[0], w[1]) {
            matching.set_fat(p, f)?;
        }
    }

    let subset = beta_minimal_subset(
        &iedge.resources,
        params,
        |r| matching.owner(r).is_some(),
        inst,
    )
    .ok_or_else(|| Error::StaleState(format!("edge of player {v} has no free β-subset left")))?;
    let value = inst.total_value(&subset);
    matching.set_thin(ThinEdge {
        player: v,
        resources: subset,
        value,
        target: params.beta_target(),
    })?;

    if matching.fat_count() != fat_before {
        return Err(Error::Defect(format!(
            "alternation changed the fat edge count from {fat_before} to {}",
            matching.fat_count()
        )));
    }
    Ok(())
}

/// Extends `matching` so that `root` is matched as well, or aborts when a
/// newly built layer has too few disjoint paths.
pub fn extend_matching(
    inst: &Instance,
    matching: PartialMatching,
    root: usize,
    params: &Params,
    opts: ExtendOptions,
    mut trace: Option<&mut dyn TraceSink>,
) -> Result<ExtendOutcome, ExtendError> {
    let report = validate_params(params);
    if !report.is_valid() {
        return Err(ExtendError::Invalid(Error::InvalidParams(
            report.violations.join("; "),
        )));
    }
    let initial_size = matching.size();
    let mut state = init_state(inst, matching, root, params)?;
    let max_fat = fat_matching_cardinality(inst, &state.classes);
    if state.initial_fat != max_fat {
        return Err(ExtendError::Invalid(Error::InvalidInput(format!(
            "matching has {} fat edges, maximum is {max_fat}",
            state.initial_fat
        ))));
    }

    let mut iterations = 0;
    let mut collapses = 0;
    let mut boundaries_checked = 0;
    let mut failures = Vec::new();
    let mut last_signature = None;
    let mut boundary = |state: &SearchState, failures: &mut Vec<String>| {
        if !opts.check_invariants {
            return;
        }
        boundaries_checked += 1;
        let report = check_invariants(state);
        failures.extend(report.failures().map(|c| c.to_string()));
        let sig = signature(state);
        failures.extend(signature_failures(last_signature.as_ref(), &sig));
        last_signature = Some(sig);
    };
    boundary(&state, &mut failures);

    loop {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(ExtendError::Defect(format!(
                "no termination after {MAX_ITERATIONS} iterative steps"
            )));
        }
        let sources = state.players_upto(state.ell()).len();
        let d = state.build_phase();
        if let Some(sink) = reborrow(&mut trace) {
            sink.record(TraceEvent::from_state(&state, iterations, Phase::Build));
        }
        if rat(d as u64) < params.gamma * rat(sources as u64) {
            if let Some(sink) = reborrow(&mut trace) {
                sink.record(TraceEvent::from_state(&state, iterations, Phase::Abort));
            }
            return Err(ExtendError::Abort {
                tau: params.tau,
                layer: state.ell(),
                d,
                sources,
                boundaries_checked,
                invariant_failures: failures,
            });
        }
        match state.collapse_phase(iterations, &mut collapses, reborrow(&mut trace))? {
            CollapseResult::RootMatched => break,
            CollapseResult::Stable => boundary(&state, &mut failures),
        }
    }

    if state.matching.fat_count() != state.initial_fat {
        return Err(ExtendError::Defect("fat edge count changed".into()));
    }
    if state.matching.size() != initial_size + 1 {
        return Err(ExtendError::Defect(format!(
            "matching size went from {initial_size} to {}",
            state.matching.size()
        )));
    }
    Ok(ExtendOutcome {
        matching: state.matching,
        iterations,
        collapses,
        boundaries_checked,
        invariant_failures: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::max_fat_matching;

    // tau = 130: fat iff v >= 10, alpha-edges need 65, beta-edges 10.
    // Player 0 wants the fat resource 0 and eight thin 9s; players 1 and 2
    // only want resource 0, which the fat matching hands to player 0.
    fn detour() -> (Instance, Params) {
        let mut values = vec![10];
        values.extend([9; 8]);
        let inst = Instance::new(values, vec![(0..9).collect(), vec![0], vec![0]]).unwrap();
        (inst, Params::new(rat(130)))
    }

    #[test]
    fn root_must_be_unmatched() {
        let (inst, params) = detour();
        let m = max_fat_matching(&inst, &params);
        assert_eq!(m.fat_resource(0), Some(0));
        assert!(init_state(&inst, m.clone(), 0, &params).is_err());
        let s = init_state(&inst, m, 1, &params).unwrap();
        assert_eq!(s.layers()[0].blockers, vec![1]);
        assert!(check_invariants(&s).is_ok());
    }

    #[test]
    fn build_then_collapse_through_a_fat_flip() {
        let (inst, params) = detour();
        let m = max_fat_matching(&inst, &params);
        let mut s = init_state(&inst, m.clone(), 1, &params).unwrap();
        let c = s.find_candidate().unwrap();
        assert_eq!(c.player, 0);
        assert_eq!(c.resources.len(), 8);
        assert_eq!(s.build_phase(), 1);
        assert_eq!(s.immediate().len(), 1);
        assert!(s.layers()[1].addable.is_empty());
        // Mid-step: layer 1 is empty and collapsible, so only the flow
        // invariants are expected to hold here.
        let report = check_invariants(&s);
        for name in [
            "dp_immediate",
            "dp_layer",
            "d_bound",
            "gamma",
            "disjointness",
        ] {
            assert!(report.get(name).unwrap().ok, "{name}");
        }
        assert!(!report.get("growth").unwrap().ok);

        let out = extend_matching(&inst, m, 1, &params, ExtendOptions::default(), None).unwrap();
        assert_eq!(out.matching.fat_resource(1), Some(0));
        assert_eq!(out.matching.thin_edge(0).unwrap().resources.len(), 2);
        assert_eq!(out.matching.fat_count(), 1);
        assert_eq!(out.matching.size(), 2);
    }

    #[test]
    fn corrupted_matching_breaks_the_immediate_invariant() {
        let (inst, params) = detour();
        let m = max_fat_matching(&inst, &params);
        let mut s = init_state(&inst, m, 1, &params).unwrap();
        s.build_phase();
        s.matching_mut().remove(0);
        s.matching_mut().set_fat(2, 0).unwrap();
        s.refresh_graph();
        let report = check_invariants(&s);
        assert!(!report.get("dp_immediate").unwrap().ok);
    }

    #[test]
    fn alternation_on_a_zero_length_path() {
        let (inst, params) = detour();
        let mut m = PartialMatching::new(3, 9);
        let old = build_minimal_thin_edge(0, params.beta_target(), &[1, 2], &inst).unwrap();
        m.set_thin(old).unwrap();
        let iedge =
            build_minimal_thin_edge(0, params.alpha_target(), &[3, 4, 5, 6, 7, 8, 1, 2], &inst)
                .unwrap();
        alternate_along(&mut m, &[Node::Player(0)], &iedge, &params, &inst).unwrap();
        let e = m.thin_edge(0).unwrap();
        assert_eq!(e.resources, vec![1, 2]);
        assert_eq!(m.size(), 1);
    }
}
