use std::iter::Sum;
use std::ops::{Add, AddAssign};

/// Hop counts charged by a single search. One hop stands for one traversed
/// index entry, multilevel-index entry, or page.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TraversalCost {
    pub index_hops: u64,
    pub multilevel_hops: u64,
    pub page_hops: u64,
}

impl TraversalCost {
    pub const ZERO: TraversalCost = TraversalCost {
        index_hops: 0,
        multilevel_hops: 0,
        page_hops: 0,
    };

    pub fn pages(page_hops: u64) -> Self {
        TraversalCost {
            page_hops,
            ..Self::ZERO
        }
    }

    pub fn total(&self) -> u64 {
        self.index_hops + self.multilevel_hops + self.page_hops
    }
}

impl Add for TraversalCost {
    type Output = TraversalCost;

    fn add(self, rhs: Self) -> Self {
        TraversalCost {
            index_hops: self.index_hops + rhs.index_hops,
            multilevel_hops: self.multilevel_hops + rhs.multilevel_hops,
            page_hops: self.page_hops + rhs.page_hops,
        }
    }
}

impl AddAssign for TraversalCost {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for TraversalCost {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

/// Outcome of a search over one of the structures.
#[derive(Debug, PartialEq)]
pub enum Lookup<'a, N> {
    Found { node: &'a N, cost: TraversalCost },
    NotFound { cost: TraversalCost },
}

impl<N> Clone for Lookup<'_, N> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<N> Copy for Lookup<'_, N> {}

impl<'a, N> Lookup<'a, N> {
    pub fn cost(&self) -> TraversalCost {
        match self {
            Lookup::Found { cost, .. } | Lookup::NotFound { cost } => *cost,
        }
    }

    pub fn node(&self) -> Option<&'a N> {
        match self {
            Lookup::Found { node, .. } => Some(node),
            Lookup::NotFound { .. } => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Lookup::Found { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_is_sum_of_parts() {
        let c = TraversalCost {
            index_hops: 1,
            multilevel_hops: 1,
            page_hops: 9,
        };
        assert_eq!(c.total(), 11);
        let s: TraversalCost = [c, TraversalCost::pages(2)].into_iter().sum();
        assert_eq!(s.page_hops, 11);
        assert_eq!(s.total(), 13);
    }
}
