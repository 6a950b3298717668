//! Deterministic synthetic corpora shaped to land in chosen mean-relevance
//! levels.
//!
//! Each page gets a target level and a set of ontologies it must support. The
//! generator plants exclusive ontology terms (terms whose surface forms score
//! for exactly one ontology) at counts chosen to hit a mean relevance inside
//! that level, pads with filler words, then re-scores the finished token list
//! and retries until the scored page really lands where it was planned. Mean
//! relevance values are kept distinct across the corpus so that sub-level
//! ranges built later never share a boundary value.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, PageRecord};
use crate::ibag::{mean_relevance, IbagConfig};
use crate::ontology::OntologySet;
use crate::{Error, PageId, Result};

/// Level distribution a generated corpus realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Pages spread evenly over all `m` levels, every page supporting every ontology.
    Ideal,
    /// Every page in one level, every page supporting every ontology.
    SingleLevel,
    /// Random level and random non-empty supported-ontology subset per page.
    Custom,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Ideal => "ideal",
            Profile::SingleLevel => "single_level",
            Profile::Custom => "custom",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Profile::Ideal),
            "single_level" | "single-level" => Ok(Profile::SingleLevel),
            "custom" => Ok(Profile::Custom),
            other => Err(Error::invalid(
                "profile",
                format!("unknown profile {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_pages: usize,
    pub profile: Profile,
    pub m_levels: usize,
    pub k_ontologies: usize,
    pub out_degree: usize,
    pub rng_seed: u64,
    /// Mean-relevance span the levels are shaped against; must match the
    /// span later used to build the IBAG.
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            n_pages: 100,
            profile: Profile::Ideal,
            m_levels: 10,
            k_ontologies: 3,
            out_degree: 4,
            rng_seed: 42,
            alpha: 0.30,
            beta: 0.05,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_pages == 0 {
            return Err(Error::invalid("corpus spec", "n_pages must be positive"));
        }
        if self.m_levels == 0 {
            return Err(Error::invalid("corpus spec", "m_levels must be positive"));
        }
        if self.profile == Profile::Ideal && self.n_pages < self.m_levels {
            return Err(Error::invalid(
                "corpus spec",
                format!(
                    "ideal profile needs n_pages >= m_levels (n={}, m={})",
                    self.n_pages, self.m_levels
                ),
            ));
        }
        if self.out_degree == 0 {
            return Err(Error::invalid("corpus spec", "out_degree must be positive"));
        }
        if !(0.0..=1.0).contains(&self.beta) || !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(
                "corpus spec",
                "alpha and beta must lie in [0, 1]",
            ));
        }
        self.ibag_config().map(drop)
    }

    pub fn ibag_config(&self) -> Result<IbagConfig> {
        IbagConfig::new(self.alpha, self.beta, self.m_levels)
    }
}

/// The term planted for one ontology and the surface tokens that score only for it.
struct Planting {
    weight: f64,
    surfaces: Vec<String>,
}

const INITIAL_LEN: (usize, usize) = (64, 192);
const ATTEMPTS_PER_WIDENING: usize = 64;
const MAX_WIDENINGS: usize = 6;

pub fn generate(spec: &CorpusSpec, set: &OntologySet) -> Result<Corpus> {
    spec.validate()?;
    if spec.k_ontologies != set.k() {
        return Err(Error::invalid(
            "corpus spec",
            format!(
                "k_ontologies={} but {} ontologies loaded",
                spec.k_ontologies,
                set.k()
            ),
        ));
    }
    let cfg = spec.ibag_config()?;
    let limit = set.cfg().relevance_limit;
    let plantings = plantings(set)?;
    let filler = filler_words(set);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let all: Vec<usize> = (0..set.k()).collect();
    let assignments: Vec<(usize, Vec<usize>)> = match spec.profile {
        Profile::Ideal => {
            let (q, r) = (spec.n_pages / spec.m_levels, spec.n_pages % spec.m_levels);
            let mut levels: Vec<usize> = (0..spec.m_levels)
                .flat_map(|l| std::iter::repeat_n(l, q + usize::from(l < r)))
                .collect();
            levels.shuffle(&mut rng);
            for l in 0..spec.m_levels {
                window(&cfg, l, &all, &plantings, limit)
                    .ok_or_else(|| infeasible(&cfg, l, &all, &plantings, limit))?;
            }
            levels.into_iter().map(|l| (l, all.clone())).collect()
        }
        Profile::SingleLevel => {
            let mid = spec.m_levels / 2;
            let level = nearest_feasible(&cfg, mid, &all, &plantings, limit)
                .ok_or_else(|| infeasible(&cfg, mid, &all, &plantings, limit))?;
            vec![(level, all.clone()); spec.n_pages]
        }
        Profile::Custom => {
            let mut feasible: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
            let mut out = Vec::with_capacity(spec.n_pages);
            for _ in 0..spec.n_pages {
                let mut tries = 0;
                loop {
                    let subset = if limit == 0.0 {
                        // nothing can be unsupported when every relevance clears the limit
                        all.clone()
                    } else {
                        random_subset(&mut rng, set.k())
                    };
                    let levels = feasible.entry(subset.clone()).or_insert_with(|| {
                        (0..spec.m_levels)
                            .filter(|&l| window(&cfg, l, &subset, &plantings, limit).is_some())
                            .collect()
                    });
                    if let Some(&l) = levels.choose(&mut rng) {
                        out.push((l, subset));
                        break;
                    }
                    tries += 1;
                    if tries > 256 {
                        return Err(infeasible(&cfg, 0, &all, &plantings, limit));
                    }
                }
            }
            out
        }
    };

    let mut used = HashSet::with_capacity(spec.n_pages);
    let mut token_lists = Vec::with_capacity(spec.n_pages);
    for (page, (level, subset)) in assignments.iter().enumerate() {
        let tokens = plant_page(
            &mut rng, set, &cfg, *level, subset, &plantings, &filler, &mut used,
        )
        .ok_or_else(|| {
            Error::Generation(format!(
                "page {page}: could not realize a distinct mean relevance in level {level} \
                 for ontologies {subset:?}; the weight tables may be too coarse for {} pages \
                 per level",
                spec.n_pages
            ))
        })?;
        token_lists.push(tokens);
    }

    let outlinks = link_topology(&mut rng, spec.n_pages, spec.out_degree);
    let pages = token_lists
        .into_iter()
        .zip(outlinks)
        .zip(&assignments)
        .enumerate()
        .map(|(i, ((tokens, outlinks), (_, subset)))| PageRecord {
            page_id: PageId(i as u64),
            url: format!(
                "http://example.org/{}/page-{i}.html",
                set.ontologies()[subset[0]].name
            ),
            outlinks,
            tokens,
        })
        .collect();
    Corpus::new(pages, vec![PageId(0)])
}

fn plantings(set: &OntologySet) -> Result<Vec<Planting>> {
    let syn = set.syntable();
    // surface token -> every (ontology, term) it scores for
    let mut owners: BTreeMap<&str, Vec<(usize, &str)>> = BTreeMap::new();
    for (i, o) in set.ontologies().iter().enumerate() {
        for t in o.terms() {
            for s in syn.expand(&t.term) {
                owners.entry(s).or_default().push((i, &t.term));
            }
        }
    }
    set.ontologies()
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut best: Option<Planting> = None;
            for t in o.terms().iter().filter(|t| t.weight > 0.0) {
                let surfaces: Vec<String> = syn
                    .expand(&t.term)
                    .into_iter()
                    .filter(|s| owners[s].as_slice() == [(i, t.term.as_str())])
                    .map(String::from)
                    .collect();
                if !surfaces.is_empty() && best.as_ref().is_none_or(|b| t.weight > b.weight) {
                    best = Some(Planting {
                        weight: t.weight,
                        surfaces,
                    });
                }
            }
            best.ok_or_else(|| {
                Error::Generation(format!(
                    "ontology {:?} has no positively weighted term whose tokens score for it alone",
                    o.name
                ))
            })
        })
        .collect()
}

fn filler_words(set: &OntologySet) -> Vec<String> {
    const SYLLABLES: [&str; 16] = [
        "ba", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu", "pa", "re", "si", "to", "vu",
        "we",
    ];
    let vocab = set.vocabulary();
    let mut out = Vec::with_capacity(512);
    'outer: for a in SYLLABLES {
        for b in SYLLABLES {
            for c in SYLLABLES {
                let w = format!("{a}{b}{c}");
                if !vocab.contains(w.as_str()) {
                    out.push(w);
                    if out.len() == 512 {
                        break 'outer;
                    }
                }
            }
        }
    }
    out
}

/// Largest mean relevance reachable when every ontology in `subset` must
/// clear the limit, as page length grows. `None` when the limit cannot be
/// cleared by all of them at once.
fn max_mean(subset: &[usize], plantings: &[Planting], limit: f64) -> Option<f64> {
    let inv: f64 = subset.iter().map(|&i| 1.0 / plantings[i].weight).sum();
    let spare = 1.0 - limit * inv;
    if spare <= 0.0 {
        return None;
    }
    let top = subset
        .iter()
        .map(|&i| plantings[i].weight)
        .fold(0.0, f64::max);
    Some(limit + top * spare / subset.len() as f64)
}

/// Interior of `level` that a page supporting exactly `subset` can reach.
fn window(
    cfg: &IbagConfig,
    level: usize,
    subset: &[usize],
    plantings: &[Planting],
    limit: f64,
) -> Option<(f64, f64)> {
    let (lo, hi) = cfg.level_range(level);
    let margin = 0.05 * cfg.rho();
    let top = max_mean(subset, plantings, limit)?;
    let a = (lo + margin).max(limit + 1e-9);
    let b = (hi - margin).min(top - 0.02 * (top - limit));
    (a < b).then_some((a, b))
}

fn nearest_feasible(
    cfg: &IbagConfig,
    mid: usize,
    subset: &[usize],
    plantings: &[Planting],
    limit: f64,
) -> Option<usize> {
    (0..cfg.m)
        .flat_map(|d| [mid.checked_sub(d), Some(mid + d)])
        .flatten()
        .filter(|&l| l < cfg.m)
        .find(|&l| window(cfg, l, subset, plantings, limit).is_some())
}

fn infeasible(
    cfg: &IbagConfig,
    level: usize,
    subset: &[usize],
    plantings: &[Planting],
    limit: f64,
) -> Error {
    let (lo, hi) = cfg.level_range(level);
    match max_mean(subset, plantings, limit) {
        None => Error::Generation(format!(
            "relevance limit {limit} cannot be cleared by {} ontologies on one page: \
             their planting weights require limit * sum(1/w) < 1",
            subset.len()
        )),
        Some(top) => Error::Generation(format!(
            "level {level} [{lo}, {hi}) is unreachable: pages supporting {} ontologies \
             have mean relevance in [{limit}, {top:.4}]; narrow the span [beta, alpha]",
            subset.len()
        )),
    }
}

fn random_subset(rng: &mut ChaCha8Rng, k: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn plant_page(
    rng: &mut ChaCha8Rng,
    set: &OntologySet,
    cfg: &IbagConfig,
    level: usize,
    subset: &[usize],
    plantings: &[Planting],
    filler: &[String],
    used: &mut HashSet<u64>,
) -> Option<Vec<String>> {
    let limit = set.cfg().relevance_limit;
    let (lo, hi) = window(cfg, level, subset, plantings, limit)?;
    let (mut len_lo, mut len_hi) = INITIAL_LEN;
    for _ in 0..=MAX_WIDENINGS {
        for _ in 0..ATTEMPTS_PER_WIDENING {
            let len = rng.gen_range(len_lo..=len_hi);
            let target = rng.gen_range(lo..hi);
            let Some(counts) = plan_counts(rng, len, target, subset, plantings, limit) else {
                continue;
            };
            let mut tokens = Vec::with_capacity(len);
            for (&i, &c) in subset.iter().zip(&counts) {
                let surfaces = &plantings[i].surfaces;
                tokens.extend((0..c).map(|_| surfaces.choose(rng).unwrap().clone()));
            }
            while tokens.len() < len {
                tokens.push(filler.choose(rng).unwrap().clone());
            }
            tokens.shuffle(rng);

            let profile = set.profile(&tokens);
            let flags_ok = profile
                .flags
                .iter()
                .enumerate()
                .all(|(i, &f)| f == subset.contains(&i));
            if !flags_ok {
                continue;
            }
            let Ok(mean) = mean_relevance(&profile) else {
                continue;
            };
            if cfg.level_of(mean).ok() == Some(level) && used.insert(mean.to_bits()) {
                return Some(tokens);
            }
        }
        len_lo = len_hi;
        len_hi *= 2;
    }
    None
}

/// Planted occurrences per ontology of `subset` for a page of `len` tokens.
fn plan_counts(
    rng: &mut ChaCha8Rng,
    len: usize,
    target: f64,
    subset: &[usize],
    plantings: &[Planting],
    limit: f64,
) -> Option<Vec<usize>> {
    let lenf = len as f64;
    let weights: Vec<f64> = subset.iter().map(|&i| plantings[i].weight).collect();
    let min: Vec<usize> = weights
        .iter()
        .map(|w| (limit * lenf / w).ceil() as usize)
        .collect();
    let base: f64 = weights.iter().zip(&min).map(|(w, &c)| w * c as f64).sum();
    let extra = (target * subset.len() as f64 * lenf - base).max(0.0);

    let shares: Vec<f64> = weights.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = shares.iter().sum();
    let split: Vec<usize> = min
        .iter()
        .zip(&weights)
        .zip(&shares)
        .map(|((&c, w), s)| c + (extra * s / total / w).round() as usize)
        .collect();
    if split.iter().sum::<usize>() <= len {
        return Some(split);
    }
    // all extra mass on the heaviest planting uses the fewest tokens
    let top = (0..weights.len()).max_by(|&a, &b| weights[a].total_cmp(&weights[b]))?;
    let mut greedy = min;
    greedy[top] += (extra / weights[top]).round() as usize;
    (greedy.iter().sum::<usize>() <= len).then_some(greedy)
}

/// Random recursive tree rooted at page 0 (every page reachable) plus extra
/// random links up to `out_degree` per page.
fn link_topology(rng: &mut ChaCha8Rng, n: usize, out_degree: usize) -> Vec<Vec<PageId>> {
    let mut links: Vec<Vec<PageId>> = vec![Vec::new(); n];
    for child in 1..n {
        let parent = rng.gen_range(0..child);
        links[parent].push(PageId(child as u64));
    }
    let cap = out_degree.min(n.saturating_sub(1));
    for (page, out) in links.iter_mut().enumerate() {
        let mut guard = 0;
        while out.len() < cap && guard < 8 * out_degree {
            guard += 1;
            let to = rng.gen_range(0..n);
            if to != page && !out.contains(&PageId(to as u64)) {
                out.push(PageId(to as u64));
            }
        }
        out.shuffle(rng);
    }
    links
}
