//! Algorithm constants, fat/thin classification and minimal thin edges.

use num_integer::Roots;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::{rat, Rational};

/// Target value and algorithm constants, all exact rationals.
///
/// `beta` is the approximation target, `alpha` the greediness of players in
/// the alternating tree, `mu` the collapse threshold, `delta` the layer
/// growth constant and `gamma` the lower bound on disjoint paths checked
/// after every build phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Params {
    pub tau: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub mu: Rational,
    pub delta: Rational,
    pub gamma: Rational,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            tau: Rational::from_integer(1),
            alpha: Rational::from_integer(2),
            beta: Rational::from_integer(13),
            mu: Rational::new(1, 150),
            delta: Rational::new(1, 150),
            gamma: Rational::new(3, 8),
        }
    }
}

impl Params {
    /// Default constants at target `tau`.
    pub fn new(tau: Rational) -> Self {
        Params {
            tau,
            ..Params::default()
        }
    }

    pub fn at_tau(&self, tau: Rational) -> Self {
        Params {
            tau,
            ..self.clone()
        }
    }

    /// Constants following the schedule `beta = 2(3 + sqrt 10) + eps`,
    /// `mu = delta = eps / 100`, `gamma = (sqrt 10 - 2) / 3`, with `sqrt 10`
    /// replaced by six-digit rational bounds chosen in the safe direction
    /// (beta rounded up, gamma rounded down).
    pub fn from_epsilon(eps: Rational) -> Result<Self> {
        if eps <= Rational::from_integer(0) || eps > Rational::from_integer(1) {
            return Err(Error::InvalidParams("epsilon must lie in (0, 1]".into()));
        }
        let scale: i128 = 1_000_000;
        let s = (10 * scale * scale).sqrt();
        let sqrt10_lo = Rational::new(s, scale);
        let sqrt10_hi = Rational::new(s + 1, scale);
        let params = Params {
            tau: Rational::from_integer(1),
            alpha: Rational::from_integer(2),
            beta: Rational::from_integer(6) + sqrt10_hi * 2 + eps,
            mu: eps / 100,
            delta: eps / 100,
            gamma: (sqrt10_lo - 2) / 3,
        };
        let report = validate_params(&params);
        if !report.is_valid() {
            return Err(Error::InvalidParams(report.violations.join("; ")));
        }
        Ok(params)
    }

    /// `tau / beta`: fat threshold and β-edge target.
    pub fn beta_target(&self) -> Rational {
        self.tau / self.beta
    }

    /// `tau / alpha`: addable edge target.
    pub fn alpha_target(&self) -> Rational {
        self.tau / self.alpha
    }

    pub fn is_fat_value(&self, v: u64) -> bool {
        rat(v) * self.beta >= self.tau
    }
}

/// Outcome of [`validate_params`], carrying the evaluated sides of both
/// inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamReport {
    /// `(alpha*beta - (1+mu)(alpha+beta)) / (alpha*beta + alpha)`; gamma must not exceed it.
    pub gamma_bound: Option<Rational>,
    /// `2 alpha / (beta - alpha) * (1 + delta)`.
    pub growth_lhs: Option<Rational>,
    /// `gamma - (1 + delta) mu`.
    pub growth_rhs: Rational,
    pub violations: Vec<String>,
}

impl ParamReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_params(p: &Params) -> ParamReport {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    let mut violations = Vec::new();
    if p.tau <= zero {
        violations.push(format!("tau = {} must be positive", p.tau));
    }
    if p.alpha < one {
        violations.push(format!("alpha = {} must be at least 1", p.alpha));
    }
    if p.beta <= p.alpha {
        violations.push(format!("beta = {} must exceed alpha = {}", p.beta, p.alpha));
    }
    if p.mu <= zero || p.mu >= one {
        violations.push(format!("mu = {} must lie in (0, 1)", p.mu));
    }
    if p.delta <= zero || p.delta >= one {
        violations.push(format!("delta = {} must lie in (0, 1)", p.delta));
    }
    if p.gamma <= zero {
        violations.push(format!("gamma = {} must be positive", p.gamma));
    }

    let ab = p.alpha * p.beta;
    let gamma_bound =
        (ab + p.alpha != zero).then(|| (ab - (one + p.mu) * (p.alpha + p.beta)) / (ab + p.alpha));
    if let Some(bound) = gamma_bound {
        if p.gamma > bound {
            violations.push(format!(
                "gamma-bound violated: gamma = {} > {}",
                p.gamma, bound
            ));
        }
    }

    let growth_rhs = p.gamma - (one + p.delta) * p.mu;
    let growth_lhs = (p.beta > p.alpha)
        .then(|| Rational::from_integer(2) * p.alpha / (p.beta - p.alpha) * (one + p.delta));
    if let Some(lhs) = growth_lhs {
        if lhs > growth_rhs {
            violations.push(format!(
                "growth inequality violated: {} > {}",
                lhs, growth_rhs
            ));
        }
    }

    ParamReport {
        gamma_bound,
        growth_lhs,
        growth_rhs,
        violations,
    }
}

/// Fat/thin split of the resources at a given `tau`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    is_fat: Vec<bool>,
}

impl Classification {
    pub fn is_fat(&self, r: usize) -> bool {
        self.is_fat[r]
    }

    pub fn fat(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.is_fat.len()).filter(|&r| self.is_fat[r])
    }

    pub fn thin(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.is_fat.len()).filter(|&r| !self.is_fat[r])
    }

    pub fn len(&self) -> usize {
        self.is_fat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_fat.is_empty()
    }
}

/// Resource `r` is fat iff `beta * v_r >= tau`.
pub fn classify_resources(inst: &Instance, p: &Params) -> Classification {
    Classification {
        is_fat: inst.values().iter().map(|&v| p.is_fat_value(v)).collect(),
    }
}

/// A minimal set of thin resources for one player reaching `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThinEdge {
    pub player: usize,
    /// Ascending resource ids.
    pub resources: Vec<usize>,
    pub value: u64,
    /// `tau / alpha` for addable edges, `tau / beta` for matched ones.
    pub target: Rational,
}

impl ThinEdge {
    pub fn contains(&self, r: usize) -> bool {
        self.resources.binary_search(&r).is_ok()
    }

    pub fn class(&self, p: &Params) -> Option<EdgeClass> {
        if self.target == p.alpha_target() {
            Some(EdgeClass::Alpha)
        } else if self.target == p.beta_target() {
            Some(EdgeClass::Beta)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FatEdge {
    pub player: usize,
    pub resource: usize,
}

/// Descending-value, ascending-id prefix reaching `target`. Zero-value
/// resources never enter.
fn minimal_prefix(
    items: impl IntoIterator<Item = usize>,
    target: Rational,
    inst: &Instance,
) -> Option<(Vec<usize>, u64)> {
    let mut items: Vec<usize> = items.into_iter().filter(|&r| inst.value(r) > 0).collect();
    items.sort_unstable_by(|&a, &b| inst.value(b).cmp(&inst.value(a)).then(a.cmp(&b)));
    items.dedup();
    let mut sum = 0u64;
    let mut taken = Vec::new();
    for r in items {
        if rat(sum) >= target {
            break;
        }
        sum += inst.value(r);
        taken.push(r);
    }
    if rat(sum) < target {
        return None;
    }
    taken.sort_unstable();
    Some((taken, sum))
}

/// Minimal thin edge for `player` drawn from `available`.
///
/// Every earlier item in the scan is at least as valuable as the last one
/// added, so dropping any single item falls below `target`.
pub fn build_minimal_thin_edge(
    player: usize,
    target: Rational,
    available: &[usize],
    inst: &Instance,
) -> Option<ThinEdge> {
    minimal_prefix(available.iter().copied(), target, inst).map(|(resources, value)| ThinEdge {
        player,
        resources,
        value,
        target,
    })
}

/// Inclusion-minimal subset of `resources` minus `excluded` with value at
/// least `tau / beta`.
pub fn beta_minimal_subset(
    resources: &[usize],
    p: &Params,
    excluded: impl Fn(usize) -> bool,
    inst: &Instance,
) -> Option<Vec<usize>> {
    minimal_prefix(
        resources.iter().copied().filter(|&r| !excluded(r)),
        p.beta_target(),
        inst,
    )
    .map(|(set, _)| set)
}
