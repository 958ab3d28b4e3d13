use crate::edges::{FatEdge, ThinEdge};
use crate::error::{Error, Result};
use crate::instance::Allocation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchedEdge {
    Fat(usize),
    Thin(ThinEdge),
}

impl MatchedEdge {
    pub fn resources(&self) -> &[usize] {
        match self {
            MatchedEdge::Fat(r) => std::slice::from_ref(r),
            MatchedEdge::Thin(e) => &e.resources,
        }
    }

    pub fn is_fat(&self) -> bool {
        matches!(self, MatchedEdge::Fat(_))
    }
}

/// Resource-disjoint β-edges for distinct players, with a reverse index
/// from resource to owning player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialMatching {
    edges: Vec<Option<MatchedEdge>>,
    owner: Vec<Option<usize>>,
}

impl PartialMatching {
    pub fn new(num_players: usize, num_resources: usize) -> Self {
        PartialMatching {
            edges: vec![None; num_players],
            owner: vec![None; num_resources],
        }
    }

    pub fn num_players(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, p: usize) -> Option<&MatchedEdge> {
        self.edges[p].as_ref()
    }

    pub fn thin_edge(&self, p: usize) -> Option<&ThinEdge> {
        match &self.edges[p] {
            Some(MatchedEdge::Thin(e)) => Some(e),
            _ => None,
        }
    }

    pub fn fat_resource(&self, p: usize) -> Option<usize> {
        match self.edges[p] {
            Some(MatchedEdge::Fat(r)) => Some(r),
            _ => None,
        }
    }

    pub fn owner(&self, r: usize) -> Option<usize> {
        self.owner[r]
    }

    pub fn is_matched(&self, p: usize) -> bool {
        self.edges[p].is_some()
    }

    /// Number of matched players.
    pub fn size(&self) -> usize {
        self.edges.iter().flatten().count()
    }

    pub fn fat_count(&self) -> usize {
        self.edges.iter().flatten().filter(|e| e.is_fat()).count()
    }

    pub fn fat_edges(&self) -> Vec<FatEdge> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(p, e)| match e {
                Some(MatchedEdge::Fat(r)) => Some(FatEdge {
                    player: p,
                    resource: *r,
                }),
                _ => None,
            })
            .collect()
    }

    fn claim(&mut self, p: usize, resources: &[usize]) -> Result<()> {
        if self.edges[p].is_some() {
            return Err(Error::Defect(format!("player {p} is already matched")));
        }
        if let Some(&r) = resources.iter().find(|&&r| self.owner[r].is_some()) {
            return Err(Error::Defect(format!(
                "resource {r} already belongs to player {}",
                self.owner[r].unwrap()
            )));
        }
        for &r in resources {
            self.owner[r] = Some(p);
        }
        Ok(())
    }

    pub fn set_fat(&mut self, p: usize, r: usize) -> Result<()> {
        self.claim(p, &[r])?;
        self.edges[p] = Some(MatchedEdge::Fat(r));
        Ok(())
    }

    pub fn set_thin(&mut self, edge: ThinEdge) -> Result<()> {
        let p = edge.player;
        self.claim(p, &edge.resources)?;
        self.edges[p] = Some(MatchedEdge::Thin(edge));
        Ok(())
    }

    pub fn remove(&mut self, p: usize) -> Option<MatchedEdge> {
        let e = self.edges[p].take()?;
        for &r in e.resources() {
            self.owner[r] = None;
        }
        Some(e)
    }

    /// Players whose thin edge shares a resource with `resources`, ascending.
    pub fn thin_blockers<'a>(&self, resources: impl IntoIterator<Item = &'a usize>) -> Vec<usize> {
        let mut out: Vec<usize> = resources
            .into_iter()
            .filter_map(|&r| self.owner[r])
            .filter(|&q| self.thin_edge(q).is_some())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn to_allocation(&self) -> Allocation {
        Allocation {
            bundles: self
                .edges
                .iter()
                .map(|e| {
                    e.as_ref()
                        .map(|e| e.resources().to_vec())
                        .unwrap_or_default()
                })
                .collect(),
        }
    }
}
