//! Multilevel IBAG: levels holding more than `floor(n/m)` pages are cut into
//! sub-levels of at most that many pages, reached through a multilevel index.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::costlab::{Lookup, TraversalCost};
use crate::ibag::{self, parse_body, thread, walk, Ibag, IbagNode, Route};
use crate::textfmt::{self, join_opt_ids, keyed, split_opt_ids, Header};
use crate::{Error, PageId, Result};

/// `floor(n/m)`, the most pages any (sub-)level may hold.
pub fn multilevel_limit(n: usize, m: usize) -> Result<usize> {
    if n == 0 || m == 0 || n < m {
        return Err(Error::ZeroLimit { n, m });
    }
    Ok(n / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelPlan {
    pub level_no: usize,
    /// Pages in the level.
    pub mu: usize,
    /// `ceil(mu / limit)` sub-levels.
    pub eta_ceil: usize,
    pub split: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub n: usize,
    pub m: usize,
    pub limit: usize,
    pub levels: Vec<LevelPlan>,
}

impl SplitPlan {
    pub fn split_levels(&self) -> impl Iterator<Item = &LevelPlan> {
        self.levels.iter().filter(|l| l.split)
    }

    /// e.g. `0 levels split` or `1 level split into 10`.
    pub fn summary(&self) -> String {
        let split: Vec<&LevelPlan> = self.split_levels().collect();
        match split.as_slice() {
            [] => "0 levels split".to_string(),
            [one] => format!("1 level split into {}", one.eta_ceil),
            many => format!(
                "{} levels split into {} sub-levels",
                many.len(),
                many.iter().map(|l| l.eta_ceil).sum::<usize>()
            ),
        }
    }
}

pub fn plan_split(ibag: &Ibag) -> Result<SplitPlan> {
    let n = ibag.len();
    let m = ibag.cfg().m;
    let limit = multilevel_limit(n, m)?;
    let levels = ibag
        .levels()
        .iter()
        .map(|l| {
            let mu = l.len();
            LevelPlan {
                level_no: l.level_no,
                mu,
                eta_ceil: mu.div_ceil(limit),
                split: mu > limit,
            }
        })
        .collect();
    Ok(SplitPlan {
        n,
        m,
        limit,
        levels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubLevel {
    /// Mean relevance of the last (lowest) node.
    pub range_lo: f64,
    /// Mean relevance of the first (highest) node.
    pub range_hi: f64,
    /// Position of the first node within the parent level.
    pub start: usize,
    pub size: usize,
    /// Per ontology: position (within the parent level) of the sub-level's
    /// first supporting node.
    pub heads: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLevelIndex {
    pub parent_level: usize,
    /// Ordered like the parent level: highest mean relevance first.
    pub sub_levels: Vec<SubLevel>,
}

impl MultiLevelIndex {
    /// The sub-level whose range holds `mean_rel`. Values in a gap between
    /// two sub-levels go to the lower one; a value equal to a shared
    /// boundary goes to the upper one.
    pub fn route(&self, mean_rel: f64) -> &SubLevel {
        let at = self.sub_levels.partition_point(|s| s.range_lo > mean_rel);
        &self.sub_levels[at.min(self.sub_levels.len() - 1)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mibag {
    base: Ibag,
    limit: usize,
    /// Indexed by level; `None` for levels left as they were.
    multilevel: Vec<Option<MultiLevelIndex>>,
}

/// Applies multilevel indexing to every level with more than `floor(n/m)`
/// pages. Nodes keep their level order and fill sub-levels `limit` at a
/// time, the last taking the remainder; ontology chains are re-threaded so
/// they stop at sub-level boundaries.
pub fn build_mibag(ibag: &Ibag) -> Result<Mibag> {
    let plan = plan_split(ibag)?;
    let limit = plan.limit;
    let k = ibag.k();
    let mut base = ibag.clone();
    let mut multilevel = vec![None; plan.m];
    for lp in plan.split_levels() {
        let level = &mut base.levels_mut()[lp.level_no];
        let len = level.len();
        let sub_levels = (0..len)
            .step_by(limit)
            .map(|start| {
                let end = (start + limit).min(len);
                let heads = thread(&mut level.nodes, start..end, k);
                SubLevel {
                    range_lo: level.nodes[end - 1].mean_rel,
                    range_hi: level.nodes[start].mean_rel,
                    start,
                    size: end - start,
                    heads,
                }
            })
            .collect::<Vec<_>>();
        debug_assert_eq!(sub_levels.len(), lp.eta_ceil);
        multilevel[lp.level_no] = Some(MultiLevelIndex {
            parent_level: lp.level_no,
            sub_levels,
        });
    }
    Ok(Mibag {
        base,
        limit,
        multilevel,
    })
}

impl Mibag {
    /// The underlying levels. Split levels carry chains cut at sub-level
    /// boundaries; all other levels are exactly the input IBAG's.
    pub fn base(&self) -> &Ibag {
        &self.base
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn multilevel(&self, level: usize) -> Option<&MultiLevelIndex> {
        self.multilevel.get(level).and_then(Option::as_ref)
    }

    pub fn multilevel_indexes(&self) -> impl Iterator<Item = &MultiLevelIndex> {
        self.multilevel.iter().flatten()
    }

    pub fn plan(&self) -> SplitPlan {
        plan_split(&self.base).expect("a built Mibag always has n >= m")
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &IbagNode> {
        self.base.nodes()
    }

    /// Largest page count of any level reachable without a multilevel hop,
    /// or of any sub-level.
    pub fn max_occupancy(&self) -> usize {
        self.base
            .levels()
            .iter()
            .zip(&self.multilevel)
            .map(|(level, ml)| match ml {
                Some(ml) => ml.sub_levels.iter().map(|s| s.size).max().unwrap_or(0),
                None => level.len(),
            })
            .max()
            .unwrap_or(0)
    }

    /// One index hop for the level; on a split level, one multilevel hop to
    /// jump to the sub-level holding `route.mean_rel`; then one page hop per
    /// non-matching node along that (sub-)level's ontology chain.
    pub fn search<F>(&self, route: Route, pred: F) -> Lookup<'_, IbagNode>
    where
        F: FnMut(&IbagNode) -> bool,
    {
        let Ok(level_no) = self.base.cfg().level_of(route.mean_rel) else {
            return Lookup::NotFound {
                cost: TraversalCost::ZERO,
            };
        };
        if route.ontology >= self.base.k() {
            return Lookup::NotFound {
                cost: TraversalCost::ZERO,
            };
        }
        let level = &self.base.levels()[level_no];
        let mut cost = TraversalCost {
            index_hops: 1,
            ..TraversalCost::ZERO
        };
        let head = match &self.multilevel[level_no] {
            Some(ml) => {
                cost.multilevel_hops = 1;
                ml.route(route.mean_rel).heads[route.ontology]
            }
            None => level.heads[route.ontology],
        };
        walk(&level.nodes, head, route.ontology, cost, pred)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid("mibag", msg));
        let plan = self.plan();
        if plan.limit != self.limit {
            return bad(format!(
                "limit {} but floor(n/m) = {}",
                self.limit, plan.limit
            ));
        }
        let k = self.base.k();
        for (no, level) in self.base.levels().iter().enumerate() {
            self.base.validate_level(no, level)?;
            let lp = &plan.levels[no];
            let ranges: Vec<(usize, usize)> = match &self.multilevel[no] {
                None if lp.split => return bad(format!("level {no} exceeds the limit")),
                None => vec![(0, level.len())],
                Some(ml) => {
                    if !lp.split {
                        return bad(format!("level {no} is split without exceeding the limit"));
                    }
                    if ml.sub_levels.len() != lp.eta_ceil {
                        return bad(format!("level {no} has the wrong sub-level count"));
                    }
                    let mut at = 0;
                    for (s_no, s) in ml.sub_levels.iter().enumerate() {
                        let expected = (level.len() - at).min(self.limit);
                        if s.start != at || s.size != expected || s.size == 0 {
                            return bad(format!(
                                "level {no} sub-level {s_no} has the wrong extent"
                            ));
                        }
                        let (first, last) = (&level.nodes[at], &level.nodes[at + s.size - 1]);
                        if s.range_hi != first.mean_rel || s.range_lo != last.mean_rel {
                            return bad(format!("level {no} sub-level {s_no} has the wrong range"));
                        }
                        at += s.size;
                    }
                    ml.sub_levels
                        .iter()
                        .map(|s| (s.start, s.start + s.size))
                        .collect()
                }
            };
            let mut copy = level.nodes.clone();
            for (s_no, &(start, end)) in ranges.iter().enumerate() {
                let heads = thread(&mut copy, start..end, k);
                if let Some(ml) = &self.multilevel[no] {
                    if ml.sub_levels[s_no].heads != heads {
                        return bad(format!("level {no} sub-level {s_no} has wrong heads"));
                    }
                }
            }
            if copy
                .iter()
                .zip(&level.nodes)
                .any(|(a, b)| a.ont_links != b.ont_links)
            {
                return bad(format!("level {no} ontology chains are inconsistent"));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let cfg = self.base.cfg();
        let mut out = format!(
            "mibag v1 n={} m={} alpha={} beta={} limit={}\n",
            self.len(),
            cfg.m,
            cfg.alpha,
            cfg.beta,
            self.limit
        );
        for (level, ml) in self.base.levels().iter().zip(&self.multilevel) {
            ibag::write_level_header(&mut out, level);
            if let Some(ml) = ml {
                for (s_no, s) in ml.sub_levels.iter().enumerate() {
                    let heads: Vec<Option<PageId>> = s
                        .heads
                        .iter()
                        .map(|h| h.map(|p| level.nodes[p].p_id))
                        .collect();
                    writeln!(
                        out,
                        "mlindex {} {s_no} lo={} hi={} size={} heads={}",
                        ml.parent_level,
                        s.range_lo,
                        s.range_hi,
                        s.size,
                        join_opt_ids(&heads)
                    )
                    .unwrap();
                }
            }
            ibag::write_nodes(&mut out, &level.nodes);
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        struct RawSub {
            level: usize,
            lo: f64,
            hi: f64,
            size: usize,
            heads: Vec<Option<PageId>>,
        }
        let mut lines = text.lines().enumerate();
        let (_, header_line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing mibag header"))?;
        let header = Header::parse(path, header_line, "mibag")?;
        let limit: usize = header.value("limit")?;
        let mut subs: Vec<RawSub> = Vec::new();
        let base = parse_body(&header, lines, path, &mut |level, _, parts| {
            let [parent, s_no, lo, hi, size, heads] = parts[..] else {
                return Err("expected `mlindex <level> <sub> lo= hi= size= heads=`".into());
            };
            if parent != level.to_string() {
                return Err(format!("mlindex for level {parent} under level {level}"));
            }
            let expected = subs.iter().filter(|s| s.level == level).count();
            if s_no != expected.to_string() {
                return Err(format!("expected sub-level {expected}, found {s_no}"));
            }
            subs.push(RawSub {
                level,
                lo: keyed(lo, "lo").and_then(textfmt::real)?,
                hi: keyed(hi, "hi").and_then(textfmt::real)?,
                size: keyed(size, "size")?
                    .parse()
                    .map_err(|_| format!("bad size {size:?}"))?,
                heads: keyed(heads, "heads").and_then(split_opt_ids)?,
            });
            Ok(())
        })?;

        let mut multilevel: Vec<Option<MultiLevelIndex>> = vec![None; base.cfg().m];
        for raw in subs {
            let level = base.levels().get(raw.level).ok_or_else(|| {
                Error::invalid("mibag", format!("mlindex for missing level {}", raw.level))
            })?;
            let pos: HashMap<PageId, usize> = level
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| (n.p_id, i))
                .collect();
            let heads = raw
                .heads
                .iter()
                .map(|h| {
                    h.map(|id| {
                        pos.get(&id).copied().ok_or_else(|| {
                            Error::invalid("mibag", format!("head {id} not in level {}", raw.level))
                        })
                    })
                    .transpose()
                })
                .collect::<Result<Vec<_>>>()?;
            let ml = multilevel[raw.level].get_or_insert_with(|| MultiLevelIndex {
                parent_level: raw.level,
                sub_levels: Vec::new(),
            });
            let start = ml.sub_levels.iter().map(|s| s.size).sum();
            if start + raw.size > level.len() {
                return Err(Error::invalid(
                    "mibag",
                    format!("sub-levels of level {} overrun the level", raw.level),
                ));
            }
            ml.sub_levels.push(SubLevel {
                range_lo: raw.lo,
                range_hi: raw.hi,
                start,
                size: raw.size,
                heads,
            });
        }
        let mibag = Mibag {
            base,
            limit,
            multilevel,
        };
        mibag.validate()?;
        Ok(mibag)
    }
}

pub fn mibag_search<F>(mibag: &Mibag, route: Route, pred: F) -> Lookup<'_, IbagNode>
where
    F: FnMut(&IbagNode) -> bool,
{
    mibag.search(route, pred)
}

/// Every page id held by the structure, for set comparisons.
pub fn page_ids(mibag: &Mibag) -> HashSet<PageId> {
    mibag.nodes().map(|n| n.p_id).collect()
}
