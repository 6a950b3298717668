use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ModelKind, TraversalCost};
use crate::ibag::{mean_relevance, Ibag, IbagNode, Route};
use crate::mibag::Mibag;
use crate::rpag::Rpag;
use crate::{Error, PageId, Result};

/// A page to retrieve, routed by its own mean relevance and its
/// lowest-numbered supported ontology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetPage {
    pub p_id: PageId,
    pub route: Route,
}

/// A structure whose per-target retrieval cost can be measured.
pub trait CostModel: Sync {
    fn kind(&self) -> ModelKind;

    /// Every page held by the structure.
    fn targets(&self) -> Vec<TargetPage>;

    /// `None` when the search does not find the target.
    fn cost_of(&self, target: &TargetPage) -> Option<TraversalCost>;
}

fn ibag_target(n: &IbagNode) -> TargetPage {
    TargetPage {
        p_id: n.p_id,
        route: Route {
            mean_rel: n.mean_rel,
            ontology: n.flags.iter().position(|&f| f).unwrap_or(0),
        },
    }
}

impl CostModel for Rpag {
    fn kind(&self) -> ModelKind {
        ModelKind::Rpag
    }

    fn targets(&self) -> Vec<TargetPage> {
        self.nodes()
            .iter()
            .map(|n| TargetPage {
                p_id: n.p_id,
                route: Route {
                    mean_rel: mean_relevance(&n.profile).unwrap_or(0.0),
                    ontology: n.profile.supported().next().unwrap_or(0),
                },
            })
            .collect()
    }

    fn cost_of(&self, target: &TargetPage) -> Option<TraversalCost> {
        let hit = self.search(|n| n.p_id == target.p_id);
        hit.is_found().then(|| hit.cost())
    }
}

impl CostModel for Ibag {
    fn kind(&self) -> ModelKind {
        ModelKind::Ibag
    }

    fn targets(&self) -> Vec<TargetPage> {
        self.nodes().map(ibag_target).collect()
    }

    fn cost_of(&self, target: &TargetPage) -> Option<TraversalCost> {
        let hit = self.search(target.route, |n| n.p_id == target.p_id);
        hit.is_found().then(|| hit.cost())
    }
}

impl CostModel for Mibag {
    fn kind(&self) -> ModelKind {
        ModelKind::Mibag
    }

    fn targets(&self) -> Vec<TargetPage> {
        self.nodes().map(ibag_target).collect()
    }

    fn cost_of(&self, target: &TargetPage) -> Option<TraversalCost> {
        let hit = self.search(target.route, |n| n.p_id == target.p_id);
        hit.is_found().then(|| hit.cost())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSet {
    /// Every page once.
    Exhaustive,
    /// `count` pages drawn uniformly with replacement.
    Sample { count: usize, seed: u64 },
}

/// Aggregated total hops over a target set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub best: u64,
    pub worst: u64,
    pub total: u64,
    pub count: usize,
}

impl Measured {
    pub fn average(&self) -> f64 {
        self.total as f64 / self.count as f64
    }
}

/// Runs one search per target (in parallel) and aggregates the total hops.
/// Any target that is not found is reported as an error: it means the
/// structure lost a page.
pub fn measure<M: CostModel + ?Sized>(model: &M, targets: TargetSet) -> Result<Measured> {
    let all = model.targets();
    if all.is_empty() {
        return Err(Error::Empty("target set"));
    }
    let chosen: Vec<TargetPage> = match targets {
        TargetSet::Exhaustive => all,
        TargetSet::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| all[rng.gen_range(0..all.len())])
                .collect()
        }
    };
    if chosen.is_empty() {
        return Err(Error::Empty("target set"));
    }
    let kind = model.kind();
    let costs: Vec<u64> = chosen
        .par_iter()
        .map(|t| {
            model.cost_of(t).map(|c| c.total()).ok_or_else(|| {
                Error::Measurement(format!("{kind} search did not find page {}", t.p_id))
            })
        })
        .collect::<Result<_>>()?;
    Ok(Measured {
        best: *costs.iter().min().unwrap(),
        worst: *costs.iter().max().unwrap(),
        total: costs.iter().sum(),
        count: costs.len(),
    })
}
