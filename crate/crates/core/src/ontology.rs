//! Ontologies (weighted term tables), synonym tables, and per-ontology
//! relevance scoring of token sequences.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lowercases `text` and splits it on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: String,
    pub weight: f64,
}

/// A weight table: domain terms with weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    /// 1-based position within the loaded ontology set.
    pub id: usize,
    pub name: String,
    terms: Vec<WeightedTerm>,
}

impl Ontology {
    pub fn new(id: usize, name: impl Into<String>, terms: Vec<WeightedTerm>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &terms {
            if !is_token(&t.term) {
                return Err(Error::invalid(
                    "ontology term",
                    format!("{:?} is not a lowercase alphanumeric token", t.term),
                ));
            }
            if !(0.0..=1.0).contains(&t.weight) {
                return Err(Error::invalid(
                    "ontology weight",
                    format!("{} has weight {} outside [0, 1]", t.term, t.weight),
                ));
            }
            if !seen.insert(t.term.as_str()) {
                return Err(Error::invalid(
                    "ontology term",
                    format!("duplicate term {:?}", t.term),
                ));
            }
        }
        Ok(Ontology {
            id,
            name: name.into(),
            terms,
        })
    }

    /// Parses `term<TAB>weight` lines; blank lines and `#` comments are skipped.
    pub fn parse(id: usize, name: &str, text: &str, path: &Path) -> Result<Self> {
        let mut terms: Vec<WeightedTerm> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [term, weight] = fields[..] else {
                return Err(Error::parse(path, line_no, "expected `term<TAB>weight`"));
            };
            let weight: f64 = weight
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad weight {weight:?}")))?;
            let term = term.to_lowercase();
            if !is_token(&term) {
                return Err(Error::parse(path, line_no, format!("bad term {term:?}")));
            }
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::invalid(
                    "ontology weight",
                    format!(
                        "{}:{line_no}: {term} has weight {weight} outside [0, 1]",
                        path.display()
                    ),
                ));
            }
            if terms.iter().any(|t| t.term == term) {
                return Err(Error::invalid(
                    "ontology term",
                    format!("{}:{line_no}: duplicate term {term:?}", path.display()),
                ));
            }
            terms.push(WeightedTerm { term, weight });
        }
        Ontology::new(id, name, terms)
    }

    pub fn terms(&self) -> &[WeightedTerm] {
        &self.terms
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.term == term).map(|t| t.weight)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Loads a single ontology file. The ontology gets id 1 and is named after
/// the file stem; use [`load_ontology_set`] to load several with contiguous ids.
pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    load_with_id(path.as_ref(), 1)
}

fn load_with_id(path: &Path, id: usize) -> Result<Ontology> {
    let text = fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("ontology{id}"));
    Ontology::parse(id, &name, &text, path)
}

pub fn load_ontology_set<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Ontology>> {
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| load_with_id(p.as_ref(), i + 1))
        .collect()
}

/// Synonym table: head term to its synonyms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynTable {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<S: Into<String>>(
        &mut self,
        term: impl Into<String>,
        synonyms: impl IntoIterator<Item = S>,
    ) -> Result<()> {
        let term = term.into();
        if !is_token(&term) {
            return Err(Error::invalid("syntable term", format!("{term:?}")));
        }
        let list = self.entries.entry(term.clone()).or_default();
        for syn in synonyms {
            let syn = syn.into();
            if !is_token(&syn) {
                return Err(Error::invalid("synonym", format!("{syn:?} for {term:?}")));
            }
            if syn == term {
                return Err(Error::invalid(
                    "synonym",
                    format!("{term:?} lists itself as a synonym"),
                ));
            }
            if list.contains(&syn) {
                return Err(Error::invalid(
                    "synonym",
                    format!("{syn:?} listed twice for {term:?}"),
                ));
            }
            list.push(syn);
        }
        Ok(())
    }

    /// Parses `term<TAB>syn1,syn2,...` lines.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut table = SynTable::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, syns) = line
                .split_once(|c: char| c.is_whitespace())
                .ok_or_else(|| Error::parse(path, line_no, "expected `term<TAB>syn1,syn2,...`"))?;
            let syns: Vec<String> = syns
                .split(',')
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect();
            table
                .insert(term.to_lowercase(), syns)
                .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, path)
    }

    pub fn synonyms(&self, term: &str) -> &[String] {
        self.entries.get(term).map_or(&[], Vec::as_slice)
    }

    /// `{term}` together with all of its synonyms.
    pub fn expand<'a>(&'a self, term: &'a str) -> BTreeSet<&'a str> {
        let mut out = BTreeSet::from([term]);
        out.extend(self.synonyms(term).iter().map(String::as_str));
        out
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn expand_term<'a>(term: &'a str, syntable: &'a SynTable) -> BTreeSet<&'a str> {
    syntable.expand(term)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelevanceConfig {
    /// A page supports an ontology when its relevance is at least this value.
    pub relevance_limit: f64,
    pub k_ontologies: usize,
}

impl RelevanceConfig {
    pub fn new(relevance_limit: f64, k_ontologies: usize) -> Result<Self> {
        let cfg = RelevanceConfig {
            relevance_limit,
            k_ontologies,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.relevance_limit) {
            return Err(Error::invalid(
                "relevance limit",
                format!("{} outside [0, 1]", self.relevance_limit),
            ));
        }
        if self.k_ontologies == 0 {
            return Err(Error::invalid("ontology count", "k must be at least 1"));
        }
        Ok(())
    }
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        RelevanceConfig {
            relevance_limit: 0.05,
            k_ontologies: 3,
        }
    }
}

/// Per-ontology relevance values and the support flags derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceProfile {
    pub rel_vals: Vec<f64>,
    pub flags: Vec<bool>,
}

impl RelevanceProfile {
    pub fn from_rel_vals(rel_vals: Vec<f64>, relevance_limit: f64) -> Self {
        let flags = rel_vals.iter().map(|&v| v >= relevance_limit).collect();
        RelevanceProfile { rel_vals, flags }
    }

    pub fn k(&self) -> usize {
        self.rel_vals.len()
    }

    pub fn is_relevant(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }

    pub fn supported(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
    }
}

/// Occurrence counts of a token sequence.
pub struct TokenCounts<'a> {
    counts: HashMap<&'a str, usize>,
    len: usize,
}

impl<'a> TokenCounts<'a> {
    pub fn new<S: AsRef<str>>(tokens: &'a [S]) -> Self {
        let mut counts = HashMap::with_capacity(tokens.len());
        for t in tokens {
            *counts.entry(t.as_ref()).or_insert(0) += 1;
        }
        TokenCounts {
            counts,
            len: tokens.len(),
        }
    }

    pub fn get(&self, token: &str) -> usize {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Relevance of a token sequence to one ontology.
pub trait RelevanceScorer: Send + Sync {
    fn score(&self, counts: &TokenCounts<'_>, ontology: &Ontology, syntable: &SynTable) -> f64;
}

/// Weighted term-occurrence density:
/// `sum(weight(t) * occurrences of t or its synonyms) / token count`, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DensityScorer;

impl RelevanceScorer for DensityScorer {
    fn score(&self, counts: &TokenCounts<'_>, ontology: &Ontology, syntable: &SynTable) -> f64 {
        if counts.is_empty() {
            return 0.0;
        }
        let mut mass = 0.0;
        for t in ontology.terms() {
            let hits: usize = syntable.expand(&t.term).iter().map(|s| counts.get(s)).sum();
            mass += t.weight * hits as f64;
        }
        (mass / counts.len() as f64).clamp(0.0, 1.0)
    }
}

pub fn relevance<S: AsRef<str>>(tokens: &[S], ontology: &Ontology, syntable: &SynTable) -> f64 {
    DensityScorer.score(&TokenCounts::new(tokens), ontology, syntable)
}

pub fn profile<S: AsRef<str>>(
    tokens: &[S],
    ontologies: &[Ontology],
    syntable: &SynTable,
    cfg: &RelevanceConfig,
) -> RelevanceProfile {
    let counts = TokenCounts::new(tokens);
    let rel_vals = ontologies
        .iter()
        .map(|o| DensityScorer.score(&counts, o, syntable))
        .collect();
    RelevanceProfile::from_rel_vals(rel_vals, cfg.relevance_limit)
}

/// The K ontologies, shared synonym table and relevance settings used to
/// score pages.
#[derive(Debug, Clone)]
pub struct OntologySet {
    ontologies: Vec<Ontology>,
    syntable: SynTable,
    cfg: RelevanceConfig,
}

impl OntologySet {
    pub fn new(
        ontologies: Vec<Ontology>,
        syntable: SynTable,
        cfg: RelevanceConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if ontologies.len() != cfg.k_ontologies {
            return Err(Error::invalid(
                "ontology set",
                format!(
                    "k = {} but {} ontologies were given",
                    cfg.k_ontologies,
                    ontologies.len()
                ),
            ));
        }
        for (i, o) in ontologies.iter().enumerate() {
            if o.id != i + 1 {
                return Err(Error::invalid(
                    "ontology set",
                    format!("ontology {:?} has id {}, expected {}", o.name, o.id, i + 1),
                ));
            }
        }
        Ok(OntologySet {
            ontologies,
            syntable,
            cfg,
        })
    }

    pub fn load<P: AsRef<Path>>(
        ontology_paths: &[P],
        syntable_path: Option<&Path>,
        cfg: RelevanceConfig,
    ) -> Result<Self> {
        let ontologies = load_ontology_set(ontology_paths)?;
        let syntable = match syntable_path {
            Some(p) => SynTable::load(p)?,
            None => SynTable::new(),
        };
        Self::new(ontologies, syntable, cfg)
    }

    /// The bundled three-ontology fixture (programming, networking, databases).
    pub fn builtin(relevance_limit: f64) -> Result<Self> {
        const FILES: [(&str, &str); 3] = [
            (
                "programming",
                include_str!("../fixtures/ontologies/programming.tsv"),
            ),
            (
                "networking",
                include_str!("../fixtures/ontologies/networking.tsv"),
            ),
            (
                "databases",
                include_str!("../fixtures/ontologies/databases.tsv"),
            ),
        ];
        let ontologies = FILES
            .iter()
            .enumerate()
            .map(|(i, (name, text))| Ontology::parse(i + 1, name, text, Path::new(name)))
            .collect::<Result<Vec<_>>>()?;
        let syntable = SynTable::parse(
            include_str!("../fixtures/syntable.tsv"),
            Path::new("syntable"),
        )?;
        Self::new(
            ontologies,
            syntable,
            RelevanceConfig::new(relevance_limit, FILES.len())?,
        )
    }

    pub fn ontologies(&self) -> &[Ontology] {
        &self.ontologies
    }

    pub fn syntable(&self) -> &SynTable {
        &self.syntable
    }

    pub fn cfg(&self) -> &RelevanceConfig {
        &self.cfg
    }

    pub fn k(&self) -> usize {
        self.ontologies.len()
    }

    pub fn profile<S: AsRef<str>>(&self, tokens: &[S]) -> RelevanceProfile {
        profile(tokens, &self.ontologies, &self.syntable, &self.cfg)
    }

    /// Every token that scores for some ontology, directly or as a synonym.
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.ontologies
            .iter()
            .flat_map(|o| o.terms())
            .flat_map(|t| self.syntable.expand(&t.term))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ont(terms: &[(&str, f64)]) -> Ontology {
        Ontology::new(
            1,
            "t",
            terms
                .iter()
                .map(|&(t, w)| WeightedTerm {
                    term: t.into(),
                    weight: w,
                })
                .collect(),
        )
        .unwrap()
    }

    fn syn(entries: &[(&str, &[&str])]) -> SynTable {
        let mut s = SynTable::new();
        for (t, syns) in entries {
            s.insert(*t, syns.iter().copied()).unwrap();
        }
        s
    }

    #[test]
    fn parses_weight_table() {
        let o = Ontology::parse(
            1,
            "c",
            "# comment\ncompiler 0.9\nparser\t0.6\n\n",
            Path::new("c"),
        )
        .unwrap();
        assert_eq!(o.terms().len(), 2);
        assert_eq!(o.weight("parser"), Some(0.6));
    }

    #[test]
    fn empty_file_is_empty_ontology() {
        let o = Ontology::parse(1, "e", "", Path::new("e")).unwrap();
        assert!(o.is_empty());
        assert_eq!(relevance(&["compiler"], &o, &SynTable::new()), 0.0);
    }

    #[test]
    fn weight_above_one_is_rejected() {
        let err = Ontology::parse(1, "c", "compiler 1.5", Path::new("c")).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Invalid {
                    what: "ontology weight",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn malformed_line_names_line_number() {
        let err = Ontology::parse(1, "c", "compiler 0.9\nparser\n", Path::new("c")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        let err = Ontology::parse(1, "c", "compiler high", Path::new("c")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicate_terms_rejected() {
        assert!(Ontology::parse(1, "c", "a 0.1\na 0.2", Path::new("c")).is_err());
    }

    #[test]
    fn expand_examples() {
        let s = syn(&[("compiler", &["translator"]), ("net", &["network", "web"])]);
        assert_eq!(
            expand_term("compiler", &s),
            BTreeSet::from(["compiler", "translator"])
        );
        assert_eq!(
            expand_term("parser", &SynTable::new()),
            BTreeSet::from(["parser"])
        );
        assert_eq!(
            expand_term("net", &s),
            BTreeSet::from(["net", "network", "web"])
        );
    }

    #[test]
    fn syntable_rejects_self_and_duplicate_synonyms() {
        let mut s = SynTable::new();
        assert!(s.insert("a", ["a"]).is_err());
        assert!(s.insert("b", ["c", "c"]).is_err());
        let parsed = SynTable::parse("net\tnetwork, web\n", Path::new("s")).unwrap();
        assert_eq!(parsed.synonyms("net"), ["network", "web"]);
    }

    #[test]
    fn relevance_counts_synonyms() {
        let tokens = tokenize("a compiler is a translator");
        assert_eq!(tokens.len(), 5);
        let o = ont(&[("compiler", 0.9)]);
        let s = syn(&[("compiler", &["translator"])]);
        // hand count: 2 hits over 5 tokens
        let expected = 0.9 * 2.0 / 5.0;
        assert!((relevance(&tokens, &o, &s) - expected).abs() < 1e-12);
        assert!((relevance(&tokens, &o, &s) - 0.36).abs() < 1e-12);
    }

    #[test]
    fn relevance_of_pure_term_page_is_its_weight() {
        let tokens = vec!["compiler"; 7];
        let o = ont(&[("compiler", 0.9)]);
        assert!((relevance(&tokens, &o, &SynTable::new()) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn relevance_of_empty_tokens_is_zero() {
        let o = ont(&[("compiler", 0.9)]);
        let empty: [&str; 0] = [];
        assert_eq!(relevance(&empty, &o, &SynTable::new()), 0.0);
    }

    #[test]
    fn relevance_is_clamped() {
        // "a" is both a term and the synonym of another term, so a single token counts twice.
        let o = ont(&[("a", 1.0), ("b", 1.0)]);
        let s = syn(&[("b", &["a"])]);
        assert_eq!(relevance(&["a"], &o, &s), 1.0);
    }

    #[test]
    fn profile_flags_follow_limit() {
        let cfg = RelevanceConfig::new(0.3, 3).unwrap();
        let p = RelevanceProfile::from_rel_vals(vec![0.8, 0.0, 0.6], cfg.relevance_limit);
        assert_eq!(p.flags, [true, false, true]);
        let p = RelevanceProfile::from_rel_vals(vec![0.1, 0.2, 0.29], cfg.relevance_limit);
        assert!(!p.is_relevant());
        let p = RelevanceProfile::from_rel_vals(vec![0.3, 0.0, 0.0], cfg.relevance_limit);
        assert_eq!(p.flags, [true, false, false]);
    }

    #[test]
    fn profile_scores_each_ontology() {
        let a = ont(&[("compiler", 0.9)]);
        let mut b = ont(&[("router", 0.5)]);
        b.id = 2;
        let cfg = RelevanceConfig::new(0.2, 2).unwrap();
        let p = profile(
            &tokenize("compiler compiler lorem"),
            &[a, b],
            &SynTable::new(),
            &cfg,
        );
        assert!((p.rel_vals[0] - 0.6).abs() < 1e-12);
        assert_eq!(p.rel_vals[1], 0.0);
        assert_eq!(p.flags, [true, false]);
    }

    #[test]
    fn config_validation() {
        assert!(RelevanceConfig::new(1.2, 3).is_err());
        assert!(RelevanceConfig::new(0.5, 0).is_err());
        assert!(RelevanceConfig::new(1.0, 1).is_ok());
    }

    #[test]
    fn ontology_set_checks_k_and_ids() {
        let cfg = RelevanceConfig::new(0.1, 2).unwrap();
        assert!(OntologySet::new(vec![ont(&[])], SynTable::new(), cfg).is_err());
        let mut b = ont(&[]);
        b.id = 3;
        assert!(OntologySet::new(vec![ont(&[]), b], SynTable::new(), cfg).is_err());
    }

    #[test]
    fn builtin_set_loads() {
        let set = OntologySet::builtin(0.05).unwrap();
        assert_eq!(set.k(), 3);
        assert!(set.vocabulary().contains("translator"));
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Hello, World-42!"), ["hello", "world", "42"]);
        assert!(tokenize("  ..  ").is_empty());
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "compiler",
            "translator",
            "parser",
            "lorem",
            "ipsum",
            "router",
        ])
        .prop_map(String::from)
    }

    proptest! {
        #[test]
        fn relevance_bounded_and_order_free(
            mut tokens in prop::collection::vec(word(), 0..40),
            w1 in 0.0..=1.0f64,
            w2 in 0.0..=1.0f64,
            rot in 0usize..40,
        ) {
            let o = ont(&[("compiler", w1), ("parser", w2)]);
            let s = syn(&[("compiler", &["translator"])]);
            let r = relevance(&tokens, &o, &s);
            prop_assert!((0.0..=1.0).contains(&r));
            if !tokens.is_empty() {
                let k = rot % tokens.len();
                tokens.rotate_left(k);
                tokens.reverse();
            }
            prop_assert_eq!(r, relevance(&tokens, &o, &s));
        }

        #[test]
        fn adding_a_synonym_never_lowers_relevance(
            tokens in prop::collection::vec(word(), 0..40),
            w in 0.0..=1.0f64,
        ) {
            let o = ont(&[("compiler", w)]);
            let before = syn(&[("compiler", &["translator"])]);
            let after = syn(&[("compiler", &["translator", "router"])]);
            prop_assert!(relevance(&tokens, &o, &after) >= relevance(&tokens, &o, &before));
        }

        #[test]
        fn flags_match_threshold(vals in prop::collection::vec(0.0..=1.0f64, 1..6), limit in 0.0..=1.0f64) {
            let p = RelevanceProfile::from_rel_vals(vals.clone(), limit);
            for (v, f) in vals.iter().zip(&p.flags) {
                prop_assert_eq!(*f, *v >= limit);
            }
        }
    }
}
