//! Problem data: players, resources with a single value each, and the
//! interest relation. Also the text formats for instances and allocations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::{rat, Rational};

/// A restricted max-min allocation instance.
///
/// Player `p` values resource `r` at `value(r)` when `r` is in its interest
/// set and at zero otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    values: Vec<u64>,
    interest: Vec<Vec<usize>>,
    interested: Vec<Vec<usize>>,
}

impl Instance {
    /// Builds an instance. Interest lists are sorted; duplicates and unknown
    /// resource ids are rejected.
    pub fn new(values: Vec<u64>, interest: Vec<Vec<usize>>) -> Result<Self> {
        let m = values.len();
        let mut interested = vec![Vec::new(); m];
        let mut sorted = Vec::with_capacity(interest.len());
        for (p, list) in interest.into_iter().enumerate() {
            let mut list = list;
            list.sort_unstable();
            for w in list.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::InvalidInput(format!(
                        "player {p} lists resource {} twice",
                        w[0]
                    )));
                }
            }
            for &r in &list {
                if r >= m {
                    return Err(Error::InvalidInput(format!(
                        "player {p} references unknown resource {r}"
                    )));
                }
                interested[r].push(p);
            }
            sorted.push(list);
        }
        Ok(Instance {
            values,
            interest: sorted,
            interested,
        })
    }

    pub fn num_players(&self) -> usize {
        self.interest.len()
    }

    pub fn num_resources(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, resource: usize) -> u64 {
        self.values[resource]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Resources player `p` is interested in, ascending.
    pub fn interest(&self, p: usize) -> &[usize] {
        &self.interest[p]
    }

    /// Players interested in resource `r`, ascending.
    pub fn interested_players(&self, r: usize) -> &[usize] {
        &self.interested[r]
    }

    pub fn is_interested(&self, p: usize, r: usize) -> bool {
        self.interest[p].binary_search(&r).is_ok()
    }

    /// Value player `p` assigns to a bundle.
    pub fn bundle_value(&self, p: usize, bundle: &[usize]) -> u64 {
        bundle
            .iter()
            .filter(|&&r| self.is_interested(p, r))
            .map(|&r| self.values[r])
            .sum()
    }

    /// Sum of values over a resource set, ignoring interest.
    pub fn total_value(&self, resources: &[usize]) -> u64 {
        resources.iter().map(|&r| self.values[r]).sum()
    }

    pub fn value_sum(&self) -> u64 {
        self.values.iter().sum()
    }
}

/// One bundle per player. Bundles must be disjoint and respect interest.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Allocation {
    pub bundles: Vec<Vec<usize>>,
}

impl Allocation {
    pub fn empty(num_players: usize) -> Self {
        Allocation {
            bundles: vec![Vec::new(); num_players],
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_count(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::parse(line, format!("malformed {what} '{tok}'")))
}

fn parse_id_line(line: usize, l: &str) -> Result<(usize, Vec<usize>)> {
    let (head, rest) = l
        .split_once(':')
        .ok_or_else(|| Error::parse(line, "expected '<player-id>: <resource-ids>'"))?;
    let id = parse_count(head.trim(), line, "player id")?;
    let ids = rest
        .split_whitespace()
        .map(|t| parse_count(t, line, "resource id"))
        .collect::<Result<Vec<_>>>()?;
    Ok((id, ids))
}

/// Parses the instance text format:
///
/// ```text
/// # comment
/// <num_players> <num_resources>
/// <v_0> <v_1> ... <v_{m-1}>
/// <player-id>: <resource-ids>
/// ```
///
/// Player ids may be any distinct integers; they are re-indexed densely in
/// ascending order.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(0, "missing header line"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::parse(
            hline,
            "header must be '<num_players> <num_resources>'",
        ));
    }
    let n = parse_count(toks[0], hline, "player count")?;
    let m = parse_count(toks[1], hline, "resource count")?;

    let mut values = Vec::with_capacity(m);
    let mut last_line = hline;
    if m > 0 {
        let (vline, vtext) = lines
            .next()
            .ok_or_else(|| Error::parse(hline + 1, "missing value line"))?;
        last_line = vline;
        for tok in vtext.split_whitespace() {
            let v: i128 = tok
                .parse()
                .map_err(|_| Error::parse(vline, format!("malformed value '{tok}'")))?;
            if v < 0 {
                return Err(Error::parse(
                    vline,
                    format!("negative value at line {vline}"),
                ));
            }
            let v = u64::try_from(v)
                .map_err(|_| Error::parse(vline, format!("value '{tok}' out of range")))?;
            values.push(v);
        }
        if values.len() != m {
            return Err(Error::parse(
                vline,
                format!("expected {m} values, found {}", values.len()),
            ));
        }
    }

    let mut by_id: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (line, l) in lines {
        last_line = line;
        let (id, mut ids) = parse_id_line(line, l)?;
        if by_id.contains_key(&id) {
            return Err(Error::parse(line, format!("duplicate player id {id}")));
        }
        if let Some(&bad) = ids.iter().find(|&&r| r >= m) {
            return Err(Error::parse(line, format!("unknown resource {bad}")));
        }
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::parse(line, "duplicate resource id"));
        }
        by_id.insert(id, ids);
        if by_id.len() > n {
            return Err(Error::parse(line, format!("more than {n} player lines")));
        }
    }
    if by_id.len() != n {
        return Err(Error::parse(
            last_line,
            format!("expected {n} player lines, found {}", by_id.len()),
        ));
    }
    Instance::new(values, by_id.into_values().collect())
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", inst.num_players(), inst.num_resources());
    let vals: Vec<String> = inst.values().iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "{}", vals.join(" "));
    for p in 0..inst.num_players() {
        write_id_line(&mut out, p, inst.interest(p));
    }
    out
}

fn write_id_line(out: &mut String, p: usize, ids: &[usize]) {
    let _ = write!(out, "{p}:");
    for r in ids {
        let _ = write!(out, " {r}");
    }
    out.push('\n');
}

/// Parses an allocation file: one `<player-id>: <resource-ids>` line per
/// player. Players without a line receive the empty bundle.
pub fn parse_allocation(text: &str, num_players: usize) -> Result<Allocation> {
    let mut alloc = Allocation::empty(num_players);
    let mut seen = vec![false; num_players];
    for (line, l) in content_lines(text) {
        let (p, ids) = parse_id_line(line, l)?;
        if p >= num_players {
            return Err(Error::parse(line, format!("unknown player {p}")));
        }
        if seen[p] {
            return Err(Error::parse(line, format!("duplicate player id {p}")));
        }
        seen[p] = true;
        alloc.bundles[p] = ids;
    }
    Ok(alloc)
}

pub fn write_allocation(alloc: &Allocation) -> String {
    let mut out = String::new();
    for (p, bundle) in alloc.bundles.iter().enumerate() {
        let mut b = bundle.clone();
        b.sort_unstable();
        write_id_line(&mut out, p, &b);
    }
    out
}

/// Generates a random instance.
///
/// The generator is `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha 0.3).
/// Draw order: first one `next_u64` per resource, giving value
/// `1 + x % value_max`; then one `next_u64` per (player, resource) pair in
/// player-major order, with interest iff `(x >> 11) * 2^-53 < interest_prob`.
pub fn generate_random(
    players: usize,
    resources: usize,
    value_max: u64,
    interest_prob: f64,
    seed: u64,
) -> Result<Instance> {
    if players == 0 || resources == 0 {
        return Err(Error::InvalidInput("counts must be at least 1".into()));
    }
    if value_max == 0 {
        return Err(Error::InvalidInput("value_max must be at least 1".into()));
    }
    if !(interest_prob > 0.0 && interest_prob <= 1.0) {
        return Err(Error::InvalidInput(
            "interest probability must lie in (0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<u64> = (0..resources)
        .map(|_| 1 + rng.next_u64() % value_max)
        .collect();
    let scale = 1.0 / (1u64 << 53) as f64;
    let interest = (0..players)
        .map(|_| {
            (0..resources)
                .filter(|_| ((rng.next_u64() >> 11) as f64) * scale < interest_prob)
                .collect()
        })
        .collect();
    Instance::new(values, interest)
}

fn validate(inst: &Instance, alloc: &Allocation) -> Result<()> {
    if alloc.bundles.len() != inst.num_players() {
        return Err(Error::InvalidAllocation(format!(
            "{} bundles for {} players",
            alloc.bundles.len(),
            inst.num_players()
        )));
    }
    let mut owner: Vec<Option<usize>> = vec![None; inst.num_resources()];
    for (p, bundle) in alloc.bundles.iter().enumerate() {
        for &r in bundle {
            if r >= inst.num_resources() {
                return Err(Error::InvalidAllocation(format!("unknown resource {r}")));
            }
            if let Some(q) = owner[r] {
                return Err(Error::InvalidAllocation(format!(
                    "resource {r} assigned to players {q} and {p}"
                )));
            }
            if !inst.is_interested(p, r) {
                return Err(Error::InvalidAllocation(format!(
                    "player {p} is not interested in resource {r}"
                )));
            }
            owner[r] = Some(p);
        }
    }
    Ok(())
}

/// Minimum bundle value over all players. Zero players yields zero.
pub fn allocation_min_value(inst: &Instance, alloc: &Allocation) -> Result<u64> {
    validate(inst, alloc)?;
    Ok(alloc
        .bundles
        .iter()
        .enumerate()
        .map(|(p, b)| inst.bundle_value(p, b))
        .min()
        .unwrap_or(0))
}

/// True iff the allocation is valid and every player reaches `threshold`.
pub fn verify_allocation(inst: &Instance, alloc: &Allocation, threshold: Rational) -> Result<bool> {
    let min = allocation_min_value(inst, alloc)?;
    Ok(rat(min) >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "2 3\n5 5 5\n0: 0 1 2\n1: 0 1 2\n";

    #[test]
    fn parses_small_instance() {
        let inst = parse_instance(SMALL).unwrap();
        assert_eq!(inst.num_players(), 2);
        assert_eq!(inst.values(), &[5, 5, 5]);
        assert_eq!(inst.interest(1), &[0, 1, 2]);
        assert_eq!(inst.interested_players(2), &[0, 1]);
    }

    #[test]
    fn empty_interest_line() {
        let inst = parse_instance("2 2\n3 4\n0:\n1: 1\n").unwrap();
        assert!(inst.interest(0).is_empty());
        assert_eq!(inst.bundle_value(0, &[0, 1]), 0);
    }

    #[test]
    fn negative_value_reports_line() {
        let err = parse_instance("# header follows\n1 2\n3 -1\n0: 0\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                msg: "negative value at line 3".into()
            }
        );
    }

    #[test]
    fn rejects_bad_references_and_duplicates() {
        assert!(matches!(
            parse_instance("1 2\n1 1\n0: 2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_instance("2 1\n1\n0: 0\n0: 0\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(parse_instance("2 1\n1\n0: 0\n").is_err());
        assert!(parse_instance("1 1\n1\nzero: 0\n").is_err());
        assert!(parse_instance("1 2\n1\n0: 0\n").is_err());
    }

    #[test]
    fn sparse_player_ids_are_reindexed() {
        let inst = parse_instance("2 2\n1 2\n10: 1\n4: 0\n").unwrap();
        assert_eq!(inst.interest(0), &[0]);
        assert_eq!(inst.interest(1), &[1]);
    }

    #[test]
    fn write_preserves_isolated_and_zero_resources() {
        let inst = Instance::new(vec![0, 7, 3], vec![vec![0, 1], vec![]]).unwrap();
        let text = write_instance(&inst);
        assert_eq!(text, "2 3\n0 7 3\n0: 0 1\n1:\n");
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_random(5, 10, 20, 0.5, 1).unwrap();
        let b = generate_random(5, 10, 20, 0.5, 1).unwrap();
        assert_eq!(write_instance(&a), write_instance(&b));
        assert!(a.values().iter().all(|&v| (1..=20).contains(&v)));
        let full = generate_random(2, 3, 10, 1.0, 7).unwrap();
        assert_eq!(full.interest(0), &[0, 1, 2]);
        assert_eq!(full.interest(1), &[0, 1, 2]);
        assert!(generate_random(0, 3, 10, 0.5, 7).is_err());
        assert!(generate_random(2, 3, 10, 0.0, 7).is_err());
    }

    #[test]
    fn min_value_and_verification() {
        let inst = parse_instance(SMALL).unwrap();
        let alloc = Allocation {
            bundles: vec![vec![0, 1], vec![2]],
        };
        assert_eq!(allocation_min_value(&inst, &alloc).unwrap(), 5);
        assert!(verify_allocation(&inst, &alloc, Rational::from_integer(5)).unwrap());
        assert!(!verify_allocation(&inst, &alloc, Rational::new(130, 13)).unwrap());

        let starved = Allocation {
            bundles: vec![vec![0, 1, 2], vec![]],
        };
        assert_eq!(allocation_min_value(&inst, &starved).unwrap(), 0);

        let doubled = Allocation {
            bundles: vec![vec![0, 1], vec![1, 2]],
        };
        assert!(matches!(
            verify_allocation(&inst, &doubled, Rational::from_integer(0)),
            Err(Error::InvalidAllocation(_))
        ));

        let picky = Instance::new(vec![5, 5], vec![vec![0], vec![1]]).unwrap();
        let wrong = Allocation {
            bundles: vec![vec![1], vec![0]],
        };
        assert!(allocation_min_value(&picky, &wrong).is_err());
    }

    #[test]
    fn allocation_text_format() {
        let alloc = Allocation {
            bundles: vec![vec![2, 0], vec![], vec![1]],
        };
        let text = write_allocation(&alloc);
        assert_eq!(text, "0: 0 2\n1:\n2: 1\n");
        let back = parse_allocation(&text, 3).unwrap();
        assert_eq!(back.bundles, vec![vec![0, 2], vec![], vec![1]]);
        assert_eq!(
            parse_allocation("2: 1\n", 3).unwrap().bundles,
            vec![vec![], vec![], vec![1]]
        );
        assert!(parse_allocation("3: 1\n", 3).is_err());
    }
}
