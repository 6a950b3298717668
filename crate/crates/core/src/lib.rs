//! Ontology-aware web page structures and their traversal costs.
//!
//! Three search structures are built in sequence from a crawlable corpus:
//!
//! * [`Rpag`]: the relevance page graph. A breadth-first crawl keeps only pages
//!   whose relevance to at least one ontology reaches the relevance limit.
//!   Searching it is a linear scan in discovery order.
//! * [`Ibag`]: the index based acyclic graph. Pages are bucketed into `m`
//!   mean-relevance levels of width `(alpha - beta) / m`, sorted inside each
//!   level, and threaded by one forward chain per ontology.
//! * [`Mibag`]: the multilevel IBAG. Any level holding more than `floor(n/m)`
//!   pages is cut into sub-levels of at most that size behind a multilevel
//!   index.
//!
//! Every search reports a [`TraversalCost`] that counts index, multilevel-index
//! and page hops. The [`costlab`] module measures those counts exhaustively and
//! compares them with the closed-form best/worst/average costs.

pub mod cli;
pub mod corpus;
pub mod costlab;
mod error;
pub mod ibag;
pub mod mibag;
pub mod ontology;
pub mod rpag;
mod textfmt;

use std::fmt;
use std::str::FromStr;

pub use corpus::{Corpus, CorpusSpec, PageRecord, Profile};
pub use costlab::{Lookup, TraversalCost};
pub use error::{Error, Result};
pub use ibag::{Ibag, IbagConfig, IbagNode, LevelIndex, Route};
pub use mibag::{Mibag, MultiLevelIndex, SplitPlan};
pub use ontology::{Ontology, OntologySet, RelevanceConfig, RelevanceProfile, SynTable};
pub use rpag::{Rpag, RpagNode};

/// Identifier of a page, unique within a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PageId(pub u64);

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for PageId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.parse().map(PageId)
    }
}

impl From<u64> for PageId {
    fn from(v: u64) -> Self {
        PageId(v)
    }
}
