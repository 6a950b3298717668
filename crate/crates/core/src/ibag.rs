//! Index based acyclic graph: pages bucketed into `m` mean-relevance levels,
//! sorted inside each level, with one forward chain per ontology and a head
//! index per (level, ontology).

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::costlab::{Lookup, TraversalCost};
use crate::ontology::RelevanceProfile;
use crate::rpag::Rpag;
use crate::textfmt::{self, flags_str, join_opt_ids, keyed, parse_flags, split_opt_ids, Header};
use crate::{Error, PageId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbagConfig {
    /// Maximum mean relevance span value.
    pub alpha: f64,
    /// Minimum mean relevance span value.
    pub beta: f64,
    /// Number of mean relevance levels.
    pub m: usize,
}

impl IbagConfig {
    pub fn new(alpha: f64, beta: f64, m: usize) -> Result<Self> {
        let cfg = IbagConfig { alpha, beta, m };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.alpha > self.beta) {
            return Err(Error::invalid(
                "span",
                format!(
                    "need alpha > beta, got alpha={} beta={}",
                    self.alpha, self.beta
                ),
            ));
        }
        if self.m == 0 {
            return Err(Error::invalid("level count", "m must be at least 1"));
        }
        Ok(())
    }

    /// Mean gap factor: the width of every level.
    pub fn rho(&self) -> f64 {
        (self.alpha - self.beta) / self.m as f64
    }

    /// Levels are half-open `[beta + i*rho, beta + (i+1)*rho)`; the last one
    /// also takes `alpha` itself.
    pub fn level_of(&self, mean_rel: f64) -> Result<usize> {
        if !(self.beta..=self.alpha).contains(&mean_rel) {
            return Err(Error::OutOfSpan {
                value: mean_rel,
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        let raw = ((mean_rel - self.beta) / self.rho()).floor() as usize;
        Ok(raw.min(self.m - 1))
    }

    pub fn level_range(&self, level: usize) -> (f64, f64) {
        let rho = self.rho();
        let lo = self.beta + level as f64 * rho;
        let hi = if level + 1 >= self.m {
            self.alpha
        } else {
            self.beta + (level + 1) as f64 * rho
        };
        (lo, hi)
    }
}

pub fn mean_gap_factor(cfg: &IbagConfig) -> f64 {
    cfg.rho()
}

pub fn level_of(mean_rel: f64, cfg: &IbagConfig) -> Result<usize> {
    cfg.level_of(mean_rel)
}

/// Mean of the relevance values of the supported ontologies only.
pub fn mean_relevance(profile: &RelevanceProfile) -> Result<f64> {
    let (sum, count) = profile
        .supported()
        .fold((0.0, 0usize), |(s, c), i| (s + profile.rel_vals[i], c + 1));
    if count == 0 {
        return Err(Error::NoSupportedOntology);
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IbagNode {
    pub p_id: PageId,
    pub url: String,
    pub pp_id: Option<PageId>,
    pub mean_rel: f64,
    pub flags: Vec<bool>,
    /// Per ontology: position (within the same level) of the next node
    /// supporting that ontology.
    pub ont_links: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelIndex {
    pub level_no: usize,
    pub range_lo: f64,
    pub range_hi: f64,
    /// Per ontology: position of the first node in the level supporting it.
    pub heads: Vec<Option<usize>>,
    pub nodes: Vec<IbagNode>,
}

impl LevelIndex {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Positions visited by following ontology `i` from `head`.
    pub fn chain_from(&self, head: Option<usize>, i: usize) -> ChainIter<'_> {
        ChainIter {
            nodes: &self.nodes,
            next: head,
            ontology: i,
        }
    }

    pub fn chain(&self, i: usize) -> ChainIter<'_> {
        self.chain_from(self.heads[i], i)
    }
}

pub struct ChainIter<'a> {
    nodes: &'a [IbagNode],
    next: Option<usize>,
    ontology: usize,
}

impl Iterator for ChainIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let cur = self.next?;
        self.next = self.nodes[cur].ont_links[self.ontology];
        Some(cur)
    }
}

/// Where a search enters the structure: the target's mean relevance picks
/// the level, `ontology` (0-based) picks the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Route {
    pub mean_rel: f64,
    pub ontology: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ibag {
    cfg: IbagConfig,
    rho: f64,
    k: usize,
    levels: Vec<LevelIndex>,
}

/// Threads ontology chains through `nodes[range]` in order and returns the
/// per-ontology heads. Links never leave the range.
pub(crate) fn thread(nodes: &mut [IbagNode], range: Range<usize>, k: usize) -> Vec<Option<usize>> {
    let mut next: Vec<Option<usize>> = vec![None; k];
    for pos in range.rev() {
        let node = &mut nodes[pos];
        for ((link, &flag), head) in node.ont_links.iter_mut().zip(&node.flags).zip(&mut next) {
            if flag {
                *link = *head;
                *head = Some(pos);
            } else {
                *link = None;
            }
        }
    }
    next
}

fn sort_level(nodes: &mut [IbagNode]) {
    nodes.sort_by(|a, b| b.mean_rel.total_cmp(&a.mean_rel).then(a.p_id.cmp(&b.p_id)));
}

/// Walks one chain from `head`, one page hop per non-matching node.
pub(crate) fn walk<'a, F>(
    nodes: &'a [IbagNode],
    head: Option<usize>,
    ontology: usize,
    mut cost: TraversalCost,
    mut pred: F,
) -> Lookup<'a, IbagNode>
where
    F: FnMut(&IbagNode) -> bool,
{
    let mut next = head;
    while let Some(pos) = next {
        let node = &nodes[pos];
        if pred(node) {
            return Lookup::Found { node, cost };
        }
        cost.page_hops += 1;
        next = node.ont_links[ontology];
    }
    Lookup::NotFound { cost }
}

pub fn build_ibag(rpag: &Rpag, cfg: IbagConfig) -> Result<Ibag> {
    cfg.validate()?;
    if rpag.is_empty() {
        return Err(Error::Empty("rpag"));
    }
    let k = rpag.k();
    let present: HashSet<PageId> = rpag.nodes().iter().map(|n| n.p_id).collect();
    let mut buckets: Vec<Vec<IbagNode>> = vec![Vec::new(); cfg.m];
    let mut outside = Vec::new();
    for n in rpag.nodes() {
        let mean_rel = mean_relevance(&n.profile)?;
        let Ok(level) = cfg.level_of(mean_rel) else {
            outside.push(n.p_id);
            continue;
        };
        buckets[level].push(IbagNode {
            p_id: n.p_id,
            url: n.url.clone(),
            pp_id: n.pp_ids.iter().copied().find(|p| present.contains(p)),
            mean_rel,
            flags: n.profile.flags.clone(),
            ont_links: vec![None; k],
        });
    }
    if !outside.is_empty() {
        return Err(Error::SpanViolation {
            p_ids: outside,
            alpha: cfg.alpha,
            beta: cfg.beta,
        });
    }
    let levels = buckets
        .into_iter()
        .enumerate()
        .map(|(level_no, mut nodes)| {
            sort_level(&mut nodes);
            let len = nodes.len();
            let heads = thread(&mut nodes, 0..len, k);
            let (range_lo, range_hi) = cfg.level_range(level_no);
            LevelIndex {
                level_no,
                range_lo,
                range_hi,
                heads,
                nodes,
            }
        })
        .collect();
    Ok(Ibag {
        cfg,
        rho: cfg.rho(),
        k,
        levels,
    })
}

impl Ibag {
    pub fn cfg(&self) -> &IbagConfig {
        &self.cfg
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn levels(&self) -> &[LevelIndex] {
        &self.levels
    }

    pub(crate) fn levels_mut(&mut self) -> &mut [LevelIndex] {
        &mut self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(LevelIndex::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> impl Iterator<Item = &IbagNode> {
        self.levels.iter().flat_map(|l| &l.nodes)
    }

    /// One index hop to enter the level's ontology index, then one page hop
    /// per non-matching node along that ontology's chain.
    pub fn search<F>(&self, route: Route, pred: F) -> Lookup<'_, IbagNode>
    where
        F: FnMut(&IbagNode) -> bool,
    {
        let Ok(level) = self.cfg.level_of(route.mean_rel) else {
            return Lookup::NotFound {
                cost: TraversalCost::ZERO,
            };
        };
        if route.ontology >= self.k {
            return Lookup::NotFound {
                cost: TraversalCost::ZERO,
            };
        }
        let level = &self.levels[level];
        let cost = TraversalCost {
            index_hops: 1,
            ..TraversalCost::ZERO
        };
        walk(
            &level.nodes,
            level.heads[route.ontology],
            route.ontology,
            cost,
            pred,
        )
    }

    /// Searches several ontology chains of the same level independently.
    /// Returns each chain's outcome; [`cheapest_hit`] picks the one that
    /// finds the target in the fewest hops.
    pub fn search_chains<F>(
        &self,
        mean_rel: f64,
        ontologies: &[usize],
        mut pred: F,
    ) -> Vec<(usize, Lookup<'_, IbagNode>)>
    where
        F: FnMut(&IbagNode) -> bool,
    {
        ontologies
            .iter()
            .map(|&ontology| {
                let route = Route { mean_rel, ontology };
                (ontology, self.search(route, &mut pred))
            })
            .collect()
    }

    /// Checks every structural invariant; used by load and by tests.
    pub fn validate(&self) -> Result<()> {
        if self.levels.len() != self.cfg.m {
            return Err(Error::invalid(
                "ibag",
                format!("{} levels for m={}", self.levels.len(), self.cfg.m),
            ));
        }
        for (no, level) in self.levels.iter().enumerate() {
            self.validate_level(no, level)?;
            let mut copy = level.nodes.clone();
            thread(&mut copy, 0..level.len(), self.k);
            if copy
                .iter()
                .zip(&level.nodes)
                .any(|(a, b)| a.ont_links != b.ont_links)
            {
                return Err(Error::invalid(
                    "ibag",
                    format!("level {no} ontology chains are inconsistent"),
                ));
            }
        }
        Ok(())
    }

    /// Level numbering, sort order, range membership and heads; chains are
    /// left to the caller.
    pub(crate) fn validate_level(&self, no: usize, level: &LevelIndex) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid("ibag", msg));
        if level.level_no != no {
            return bad(format!("level {} stored at position {no}", level.level_no));
        }
        if level.heads.len() != self.k {
            return bad(format!("level {no} does not have {} heads", self.k));
        }
        let mut copy = level.nodes.clone();
        sort_level(&mut copy);
        if copy.iter().zip(&level.nodes).any(|(a, b)| a.p_id != b.p_id) {
            return bad(format!("level {no} is not sorted by mean relevance"));
        }
        for n in &level.nodes {
            if self.cfg.level_of(n.mean_rel).ok() != Some(no) {
                return bad(format!(
                    "node {} (mean {}) outside level {no}",
                    n.p_id, n.mean_rel
                ));
            }
        }
        for i in 0..self.k {
            let first = level.nodes.iter().position(|n| n.flags[i]);
            if level.heads[i] != first {
                return bad(format!("level {no} head for ontology {} is wrong", i + 1));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "ibag v1 n={} m={} alpha={} beta={}\n",
            self.len(),
            self.cfg.m,
            self.cfg.alpha,
            self.cfg.beta
        );
        for level in &self.levels {
            write_level_header(&mut out, level);
            write_nodes(&mut out, &level.nodes);
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing ibag header"))?;
        let header = Header::parse(path, header, "ibag")?;
        let ibag = parse_body(&header, lines, path, &mut |_, _, _| {
            Err("mlindex lines are not allowed in an ibag dump".to_string())
        })?;
        ibag.validate()?;
        Ok(ibag)
    }

    pub(crate) fn from_parts(cfg: IbagConfig, k: usize, levels: Vec<LevelIndex>) -> Self {
        Ibag {
            cfg,
            rho: cfg.rho(),
            k,
            levels,
        }
    }
}

/// Returns the found outcome with the smallest total cost, if any chain found it.
pub fn cheapest_hit<'a>(
    outcomes: &[(usize, Lookup<'a, IbagNode>)],
) -> Option<(usize, Lookup<'a, IbagNode>)> {
    outcomes
        .iter()
        .filter(|(_, l)| l.is_found())
        .min_by_key(|(i, l)| (l.cost().total(), *i))
        .copied()
}

pub fn ibag_search<F>(ibag: &Ibag, route: Route, pred: F) -> Lookup<'_, IbagNode>
where
    F: FnMut(&IbagNode) -> bool,
{
    ibag.search(route, pred)
}

fn ids_of(nodes: &[IbagNode], positions: &[Option<usize>]) -> Vec<Option<PageId>> {
    positions.iter().map(|p| p.map(|p| nodes[p].p_id)).collect()
}

pub(crate) fn write_level_header(out: &mut String, level: &LevelIndex) {
    writeln!(
        out,
        "level {} lo={} hi={} heads={}",
        level.level_no,
        level.range_lo,
        level.range_hi,
        join_opt_ids(&ids_of(&level.nodes, &level.heads))
    )
    .unwrap();
}

pub(crate) fn write_nodes(out: &mut String, nodes: &[IbagNode]) {
    for n in nodes {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            n.p_id,
            n.url,
            n.pp_id.map_or_else(|| "-".to_string(), |p| p.to_string()),
            n.mean_rel,
            flags_str(&n.flags),
            join_opt_ids(&ids_of(nodes, &n.ont_links))
        )
        .unwrap();
    }
}

/// Raw `mlindex` line handed to the multilevel parser: level, line number, fields.
pub(crate) type MlHandler<'h> =
    dyn FnMut(usize, usize, &[&str]) -> std::result::Result<(), String> + 'h;

/// Parses level headers and node lines after the dump header. Links and
/// heads are resolved from page ids to positions within their level.
pub(crate) fn parse_body<'a>(
    header: &Header<'_>,
    lines: impl Iterator<Item = (usize, &'a str)>,
    path: &Path,
    on_mlindex: &mut MlHandler<'_>,
) -> Result<Ibag> {
    let n: usize = header.value("n")?;
    let cfg = IbagConfig::new(
        header.value("alpha")?,
        header.value("beta")?,
        header.value("m")?,
    )?;

    struct RawLevel {
        level_no: usize,
        lo: f64,
        hi: f64,
        heads: Vec<Option<PageId>>,
        nodes: Vec<(IbagNode, Vec<Option<PageId>>)>,
        line: usize,
    }
    let mut raw: Vec<RawLevel> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let err = |msg: String| Error::parse(path, line_no, msg);
        if let Some(rest) = line.strip_prefix("level ") {
            let parts: Vec<&str> = rest.split(' ').collect();
            let [no, lo, hi, heads] = parts[..] else {
                return Err(err("expected `level <no> lo= hi= heads=`".into()));
            };
            raw.push(RawLevel {
                level_no: no.parse().map_err(|_| err(format!("bad level {no:?}")))?,
                lo: keyed(lo, "lo").and_then(textfmt::real).map_err(err)?,
                hi: keyed(hi, "hi").and_then(textfmt::real).map_err(err)?,
                heads: keyed(heads, "heads").and_then(split_opt_ids).map_err(err)?,
                nodes: Vec::new(),
                line: line_no,
            });
        } else if let Some(rest) = line.strip_prefix("mlindex ") {
            let level = raw
                .last()
                .ok_or_else(|| err("mlindex line before any level".into()))?;
            let parts: Vec<&str> = rest.split(' ').collect();
            on_mlindex(level.level_no, line_no, &parts).map_err(err)?;
        } else {
            let level = raw
                .last_mut()
                .ok_or_else(|| err("node line before any level".into()))?;
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, url, pp, mean, flags, links] = fields[..] else {
                return Err(err("expected 6 tab-separated fields".into()));
            };
            let flags = parse_flags(flags).map_err(err)?;
            let links = split_opt_ids(links).map_err(err)?;
            level.nodes.push((
                IbagNode {
                    p_id: id.parse().map_err(|_| err(format!("bad p_id {id:?}")))?,
                    url: url.to_string(),
                    pp_id: match pp {
                        "-" => None,
                        p => Some(p.parse().map_err(|_| err(format!("bad pp_id {p:?}")))?),
                    },
                    mean_rel: textfmt::real(mean).map_err(err)?,
                    ont_links: vec![None; flags.len()],
                    flags,
                },
                links,
            ));
        }
    }

    let k = raw
        .first()
        .map(|l| l.heads.len())
        .ok_or_else(|| Error::parse(path, 1, "no levels"))?;
    let mut seen = HashSet::new();
    let mut levels = Vec::with_capacity(raw.len());
    for l in raw {
        let err = |msg: String| Error::parse(path, l.line, msg);
        if l.heads.len() != k {
            return Err(err(format!("expected {k} heads")));
        }
        let pos: HashMap<PageId, usize> = l
            .nodes
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.p_id, i))
            .collect();
        let resolve = |id: Option<PageId>| -> std::result::Result<Option<usize>, String> {
            id.map(|id| {
                pos.get(&id)
                    .copied()
                    .ok_or_else(|| format!("page {id} is not in level {}", l.level_no))
            })
            .transpose()
        };
        let heads = l
            .heads
            .iter()
            .map(|&h| resolve(h))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(err)?;
        let mut nodes = Vec::with_capacity(l.nodes.len());
        for (at, (mut node, links)) in l.nodes.into_iter().enumerate() {
            if node.flags.len() != k || links.len() != k {
                return Err(err(format!(
                    "node {} must carry {k} flags and links",
                    node.p_id
                )));
            }
            if !seen.insert(node.p_id) {
                return Err(err(format!("page {} appears twice", node.p_id)));
            }
            for (slot, &link) in node.ont_links.iter_mut().zip(&links) {
                let target = resolve(link).map_err(err)?;
                if target.is_some_and(|t| t <= at) {
                    return Err(err(format!("node {} links backwards", node.p_id)));
                }
                *slot = target;
            }
            nodes.push(node);
        }
        levels.push(LevelIndex {
            level_no: l.level_no,
            range_lo: l.lo,
            range_hi: l.hi,
            heads,
            nodes,
        });
    }
    let ibag = Ibag::from_parts(cfg, k, levels);
    if ibag.len() != n {
        return Err(Error::parse(
            path,
            1,
            format!("header says n={n} but {} nodes follow", ibag.len()),
        ));
    }
    Ok(ibag)
}
