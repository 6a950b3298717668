//! Relevance page graph: the relevant pages of a breadth-first crawl, kept in
//! discovery order and searched linearly from the start page.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Corpus;
use crate::costlab::{Lookup, TraversalCost};
use crate::ontology::{OntologySet, RelevanceProfile};
use crate::textfmt::{
    flags_str, join_ids, join_reals, parse_flags, split_ids, split_reals, Header,
};
use crate::{Error, PageId, Result};

/// Parent pages recorded per node.
pub const MAX_PARENTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RpagNode {
    pub p_id: PageId,
    pub url: String,
    /// First relevant pages (at most four) seen linking here, in crawl order.
    pub pp_ids: Vec<PageId>,
    pub profile: RelevanceProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rpag {
    k: usize,
    nodes: Vec<RpagNode>,
}

/// Crawls `corpus` breadth-first from its seeds, scoring every visited page.
///
/// Irrelevant pages are still expanded so the crawl can reach relevant pages
/// behind them, but only pages supporting at least one ontology become nodes.
pub fn build_rpag(corpus: &Corpus, set: &OntologySet) -> Rpag {
    let mut visited: HashSet<PageId> = HashSet::with_capacity(corpus.len());
    let mut queue = VecDeque::new();
    for &s in corpus.seeds() {
        if visited.insert(s) {
            queue.push_back(s);
        }
    }

    let mut nodes = Vec::new();
    let mut parents: HashMap<PageId, Vec<PageId>> = HashMap::new();
    while let Some(id) = queue.pop_front() {
        let page = corpus
            .page(id)
            .expect("corpus validation guarantees outlinks resolve");
        let profile = set.profile(&page.tokens);
        let relevant = profile.is_relevant();
        if relevant {
            nodes.push(RpagNode {
                p_id: id,
                url: page.url.clone(),
                pp_ids: Vec::new(),
                profile,
            });
        }
        for &child in &page.outlinks {
            if relevant && child != id {
                let ps = parents.entry(child).or_default();
                if ps.len() < MAX_PARENTS && !ps.contains(&id) {
                    ps.push(id);
                }
            }
            if visited.insert(child) {
                queue.push_back(child);
            }
        }
    }
    for node in &mut nodes {
        node.pp_ids = parents.remove(&node.p_id).unwrap_or_default();
    }
    Rpag { k: set.k(), nodes }
}

impl Rpag {
    pub fn new(k: usize, nodes: Vec<RpagNode>) -> Result<Self> {
        let ids: HashSet<PageId> = nodes.iter().map(|n| n.p_id).collect();
        if ids.len() != nodes.len() {
            return Err(Error::invalid("rpag", "duplicate p_id"));
        }
        for n in &nodes {
            if n.profile.rel_vals.len() != k || n.profile.flags.len() != k {
                return Err(Error::invalid(
                    "rpag",
                    format!(
                        "node {} does not carry {k} relevance values and flags",
                        n.p_id
                    ),
                ));
            }
            if !n.profile.is_relevant() {
                return Err(Error::invalid(
                    "rpag",
                    format!("node {} supports no ontology", n.p_id),
                ));
            }
            let distinct: HashSet<_> = n.pp_ids.iter().collect();
            if n.pp_ids.len() > MAX_PARENTS
                || distinct.len() != n.pp_ids.len()
                || n.pp_ids.iter().any(|p| !ids.contains(p))
            {
                return Err(Error::invalid(
                    "rpag",
                    format!("node {} has invalid parents {:?}", n.p_id, n.pp_ids),
                ));
            }
        }
        Ok(Rpag { k, nodes })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Nodes in discovery order; index 0 is the start page.
    pub fn nodes(&self) -> &[RpagNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Linear scan from the start page. Each non-matching node examined
    /// before the match costs one page hop.
    pub fn search<F>(&self, mut pred: F) -> Lookup<'_, RpagNode>
    where
        F: FnMut(&RpagNode) -> bool,
    {
        for (skipped, node) in self.nodes.iter().enumerate() {
            if pred(node) {
                return Lookup::Found {
                    node,
                    cost: TraversalCost::pages(skipped as u64),
                };
            }
        }
        Lookup::NotFound {
            cost: TraversalCost::pages(self.nodes.len() as u64),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("rpag v1 n={} k={}\n", self.nodes.len(), self.k);
        for n in &self.nodes {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                n.p_id,
                n.url,
                join_ids(&n.pp_ids),
                join_reals(&n.profile.rel_vals),
                flags_str(&n.profile.flags)
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing rpag header"))?;
        let header = Header::parse(path, header, "rpag")?;
        let n: usize = header.value("n")?;
        let k: usize = header.value("k")?;
        let mut nodes = Vec::with_capacity(n);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let err = |msg: String| Error::parse(path, line_no, msg);
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, url, pp, rels, flags] = fields[..] else {
                return Err(err("expected 5 tab-separated fields".into()));
            };
            nodes.push(RpagNode {
                p_id: id.parse().map_err(|_| err(format!("bad p_id {id:?}")))?,
                url: url.to_string(),
                pp_ids: split_ids(pp).map_err(err)?,
                profile: RelevanceProfile {
                    rel_vals: split_reals(rels).map_err(err)?,
                    flags: parse_flags(flags).map_err(err)?,
                },
            });
        }
        if nodes.len() != n {
            return Err(Error::parse(
                path,
                1,
                format!("header says n={n} but {} nodes follow", nodes.len()),
            ));
        }
        Rpag::new(k, nodes)
    }
}

pub fn rpag_search<F>(rpag: &Rpag, pred: F) -> Lookup<'_, RpagNode>
where
    F: FnMut(&RpagNode) -> bool,
{
    rpag.search(pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PageRecord;
    use crate::ontology::{tokenize, Ontology, RelevanceConfig, SynTable, WeightedTerm};

    fn one_ontology(limit: f64) -> OntologySet {
        let o = Ontology::new(
            1,
            "c",
            vec![WeightedTerm {
                term: "compiler".into(),
                weight: 0.9,
            }],
        )
        .unwrap();
        OntologySet::new(
            vec![o],
            SynTable::new(),
            RelevanceConfig::new(limit, 1).unwrap(),
        )
        .unwrap()
    }

    fn page(id: u64, links: &[u64], text: &str) -> PageRecord {
        PageRecord {
            page_id: PageId(id),
            url: format!("http://example.org/{id}"),
            outlinks: links.iter().map(|&l| PageId(l)).collect(),
            tokens: tokenize(text),
        }
    }

    #[test]
    fn nothing_passes_an_unreachable_gate() {
        let corpus = Corpus::new(
            vec![page(1, &[2], "lorem"), page(2, &[], "ipsum")],
            vec![PageId(1)],
        )
        .unwrap();
        assert!(build_rpag(&corpus, &one_ontology(1.0)).is_empty());
    }

    #[test]
    fn chain_with_one_relevant_page() {
        // 1 -> 2 -> 3, only page 2 mentions the ontology term
        let corpus = Corpus::new(
            vec![
                page(1, &[2], "lorem ipsum"),
                page(2, &[3], "compiler compiler lorem"),
                page(3, &[], "dolor"),
            ],
            vec![PageId(1)],
        )
        .unwrap();
        let rpag = build_rpag(&corpus, &one_ontology(0.3));
        assert_eq!(rpag.len(), 1);
        let node = &rpag.nodes()[0];
        assert_eq!(node.p_id, PageId(2));
        assert!(node.pp_ids.is_empty());
        assert!((node.profile.rel_vals[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn records_first_four_relevant_parents() {
        let mut pages = vec![page(0, &[1, 2, 3, 4, 5], "compiler")];
        for id in 1..=5 {
            pages.push(page(id, &[6], "compiler"));
        }
        pages.push(page(6, &[0], "compiler"));
        let corpus = Corpus::new(pages, vec![PageId(0)]).unwrap();
        let rpag = build_rpag(&corpus, &one_ontology(0.1));
        let ids: Vec<u64> = rpag.nodes().iter().map(|n| n.p_id.0).collect();
        assert_eq!(ids, [0, 1, 2, 3, 4, 5, 6]);
        let six = rpag.nodes().iter().find(|n| n.p_id == PageId(6)).unwrap();
        assert_eq!(six.pp_ids, [PageId(1), PageId(2), PageId(3), PageId(4)]);
        // the seed is re-encountered through page 6
        assert_eq!(rpag.nodes()[0].pp_ids, [PageId(6)]);
    }

    #[test]
    fn search_costs_discovery_position() {
        let pages: Vec<_> = (0..100u64)
            .map(|i| {
                let next: Vec<u64> = (i + 1..100).take(1).collect();
                page(i, &next, "compiler")
            })
            .collect();
        let corpus = Corpus::new(pages, vec![PageId(0)]).unwrap();
        let rpag = build_rpag(&corpus, &one_ontology(0.1));
        let first = rpag.search(|n| n.p_id == PageId(0));
        assert_eq!(first.cost().page_hops, 0);
        let last = rpag.search(|n| n.p_id == PageId(99));
        assert_eq!(last.cost().page_hops, 99);
        // brute-force average over every target
        let total: u64 = rpag
            .nodes()
            .iter()
            .map(|t| rpag.search(|n| n.p_id == t.p_id).cost().total())
            .sum();
        assert_eq!(total as f64 / 100.0, 49.5);
        let miss = rpag.search(|_| false);
        assert!(!miss.is_found());
        assert_eq!(miss.cost().page_hops, 100);
        assert_eq!(miss.cost().index_hops, 0);
    }

    #[test]
    fn dump_round_trip() {
        let corpus = Corpus::new(
            vec![
                page(0, &[1, 2], "compiler lorem"),
                page(1, &[], "compiler"),
                page(2, &[0], "x"),
            ],
            vec![PageId(0)],
        )
        .unwrap();
        let rpag = build_rpag(&corpus, &one_ontology(0.1));
        let text = rpag.to_text();
        assert!(text.starts_with("rpag v1 n=2 k=1\n"));
        let back = Rpag::from_text(&text, Path::new("r")).unwrap();
        assert_eq!(back, rpag);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn load_rejects_irrelevant_or_orphaned_nodes() {
        let p = Path::new("r");
        assert!(Rpag::from_text("rpag v1 n=1 k=1\n1\tu\t-\t0\tN\n", p).is_err());
        assert!(Rpag::from_text("rpag v1 n=1 k=1\n1\tu\t7\t0.5\tY\n", p).is_err());
        assert!(Rpag::from_text("rpag v1 n=1 k=2\n1\tu\t-\t0.5\tY\n", p).is_err());
        assert!(Rpag::from_text("rpag v1 n=1 k=1\n1\tu\t-\t0.5\tY\n", p).is_ok());
    }
}
