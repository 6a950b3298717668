//! Command-line front end: generate a corpus, build the structures stage by
//! stage, run term queries against a dump, and verify the cost table.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{generate, load_corpus, save_corpus, Corpus, CorpusSpec, Profile};
use crate::costlab::{emit_report, verify_table1, TraversalCost, VerifyConfig};
use crate::ibag::{build_ibag, Ibag, IbagConfig, LevelIndex, Route};
use crate::mibag::{build_mibag, Mibag};
use crate::ontology::{tokenize, OntologySet, RelevanceConfig};
use crate::rpag::{build_rpag, Rpag};
use crate::PageId;

pub const OUT_DIR_ENV: &str = "MIBAG_OUT";

/// Everything a run depends on. Loadable from TOML; command-line flags
/// override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ontologies: Vec<PathBuf>,
    pub syntable: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
    pub relevance_limit: f64,
    /// Defaults to the number of ontologies given.
    pub k_ontologies: Option<usize>,
    pub n_pages: usize,
    pub out_degree: usize,
    pub rng_seed: u64,
    pub profile: Profile,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = CorpusSpec::default();
        RunConfig {
            ontologies: Vec::new(),
            syntable: None,
            corpus: None,
            out_dir: None,
            alpha: spec.alpha,
            beta: spec.beta,
            m: spec.m_levels,
            relevance_limit: RelevanceConfig::default().relevance_limit,
            k_ontologies: None,
            n_pages: spec.n_pages,
            out_degree: spec.out_degree,
            rng_seed: spec.rng_seed,
            profile: spec.profile,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn corpus_path(&self) -> PathBuf {
        self.corpus
            .clone()
            .unwrap_or_else(|| self.out_dir().join("corpus.txt"))
    }

    fn ibag_config(&self) -> crate::Result<IbagConfig> {
        IbagConfig::new(self.alpha, self.beta, self.m)
    }

    fn ontology_set(&self) -> anyhow::Result<OntologySet> {
        if self.ontologies.is_empty() {
            bail!(UsageError(
                "no ontology files given (use --ontology PATH)".into()
            ));
        }
        let k = self.k_ontologies.unwrap_or(self.ontologies.len());
        let cfg = RelevanceConfig::new(self.relevance_limit, k)?;
        Ok(OntologySet::load(
            &self.ontologies,
            self.syntable.as_deref(),
            cfg,
        )?)
    }

    fn corpus_spec(&self, k: usize) -> CorpusSpec {
        CorpusSpec {
            n_pages: self.n_pages,
            profile: self.profile,
            m_levels: self.m,
            k_ontologies: k,
            out_degree: self.out_degree,
            rng_seed: self.rng_seed,
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// A command line that is well-formed but incomplete; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(
    name = "mibag",
    version,
    about = "Ontology-aware page graphs and their traversal costs"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Ontology weight table; repeat once per ontology, in id order.
    #[arg(long = "ontology", global = true)]
    pub ontologies: Vec<PathBuf>,
    #[arg(long, global = true)]
    pub syntable: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Number of mean-relevance levels.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub relevance_limit: Option<f64>,
    /// Number of ontologies.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Number of pages to generate.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub profile: Option<Profile>,
    #[arg(long, global = true)]
    pub out_degree: Option<usize>,
}

impl Overrides {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.ontologies.is_empty() {
            cfg.ontologies = self.ontologies.clone();
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(
                if let Some(v) = &self.$flag {
                    cfg.$field = v.clone().into();
                }
            )*};
        }
        set!(syntable => syntable, corpus => corpus, out => out_dir,
             alpha => alpha, beta => beta, m => m, relevance_limit => relevance_limit,
             k => k_ontologies, n => n_pages, seed => rng_seed, profile => profile,
             out_degree => out_degree);
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus into `<out>/corpus.txt`.
    Generate,
    /// Build one structure and write `<out>/<stage>.txt`.
    Build { stage: Stage },
    /// Find pages containing every query term.
    Query {
        query: String,
        /// Structure dump; defaults to the latest stage found in the output directory.
        #[arg(long)]
        structure: Option<PathBuf>,
        /// Maximum number of results.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Measure all three structures against the closed-form costs and write
    /// `<out>/table1.csv`.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Rpag,
    Ibag,
    Mibag,
}

impl Stage {
    fn file_name(self) -> &'static str {
        match self {
            Stage::Rpag => "rpag.txt",
            Stage::Ibag => "ibag.txt",
            Stage::Mibag => "mibag.txt",
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = cli.opts.resolve()?;
    match &cli.command {
        Command::Generate => cmd_generate(&cfg, out),
        Command::Build { stage } => cmd_build(&cfg, *stage, out),
        Command::Query {
            query,
            structure,
            top,
        } => cmd_query(&cfg, structure.as_deref(), query, *top, out),
        Command::Verify => cmd_verify(&cfg, out),
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn cmd_generate(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let set = cfg.ontology_set()?;
    let corpus = generate(&cfg.corpus_spec(set.k()), &set)?;
    let path = ensure_out_dir(cfg)?.join("corpus.txt");
    save_corpus(&corpus, &path)?;
    let mut effective = cfg.clone();
    effective.k_ontologies = Some(set.k());
    write!(out, "{}", toml::to_string(&effective)?)?;
    writeln!(out, "# wrote {} pages to {}", corpus.len(), path.display())?;
    Ok(())
}

fn read_dump<T>(path: &Path, parse: fn(&str, &Path) -> crate::Result<T>) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse(&text, path)?)
}

fn load_or_build_rpag(cfg: &RunConfig, fresh: bool) -> anyhow::Result<Rpag> {
    let dump = cfg.out_dir().join(Stage::Rpag.file_name());
    if !fresh && dump.exists() {
        return read_dump(&dump, Rpag::from_text);
    }
    let set = cfg.ontology_set()?;
    let corpus = load_corpus(cfg.corpus_path())?;
    Ok(build_rpag(&corpus, &set))
}

fn load_or_build_ibag(cfg: &RunConfig, fresh: bool) -> anyhow::Result<Ibag> {
    let dump = cfg.out_dir().join(Stage::Ibag.file_name());
    if !fresh && dump.exists() {
        return read_dump(&dump, Ibag::from_text);
    }
    Ok(build_ibag(
        &load_or_build_rpag(cfg, false)?,
        cfg.ibag_config()?,
    )?)
}

fn write_level_counts(levels: &[LevelIndex], out: &mut dyn Write) -> std::io::Result<()> {
    let counts: Vec<String> = levels.iter().map(|l| l.len().to_string()).collect();
    writeln!(out, "levels: {}", counts.join(" "))
}

pub fn cmd_build(cfg: &RunConfig, stage: Stage, out: &mut dyn Write) -> anyhow::Result<()> {
    let dir = ensure_out_dir(cfg)?;
    let path = dir.join(stage.file_name());
    match stage {
        Stage::Rpag => {
            let rpag = load_or_build_rpag(cfg, true)?;
            fs::write(&path, rpag.to_text())?;
            writeln!(out, "rpag: n={} k={}", rpag.len(), rpag.k())?;
        }
        Stage::Ibag => {
            let ibag = load_or_build_ibag(cfg, true)?;
            fs::write(&path, ibag.to_text())?;
            let c = ibag.cfg();
            writeln!(
                out,
                "ibag: n={} m={} alpha={} beta={}",
                ibag.len(),
                c.m,
                c.alpha,
                c.beta
            )?;
            write_level_counts(ibag.levels(), out)?;
        }
        Stage::Mibag => {
            let mibag = build_mibag(&load_or_build_ibag(cfg, false)?)?;
            fs::write(&path, mibag.to_text())?;
            let plan = mibag.plan();
            writeln!(out, "mibag: n={} m={} limit={}", plan.n, plan.m, plan.limit)?;
            write_level_counts(mibag.base().levels(), out)?;
            for ml in mibag.multilevel_indexes() {
                let sizes: Vec<String> = ml.sub_levels.iter().map(|s| s.size.to_string()).collect();
                writeln!(
                    out,
                    "level {} sub-levels: {}",
                    ml.parent_level,
                    sizes.join(" ")
                )?;
            }
            writeln!(out, "{}", plan.summary())?;
        }
    }
    writeln!(out, "# wrote {}", path.display())?;
    Ok(())
}

enum Structure {
    Rpag(Rpag),
    Ibag(Ibag),
    Mibag(Mibag),
}

impl Structure {
    fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let tag = text.split_whitespace().next().unwrap_or_default();
        Ok(match tag {
            "rpag" => Structure::Rpag(Rpag::from_text(&text, path)?),
            "ibag" => Structure::Ibag(Ibag::from_text(&text, path)?),
            "mibag" => Structure::Mibag(Mibag::from_text(&text, path)?),
            other => bail!("{}: unknown dump type {other:?}", path.display()),
        })
    }

    fn default_path(dir: &Path) -> anyhow::Result<PathBuf> {
        [Stage::Mibag, Stage::Ibag, Stage::Rpag]
            .iter()
            .map(|s| dir.join(s.file_name()))
            .find(|p| p.exists())
            .with_context(|| format!("no structure dump in {}", dir.display()))
    }
}

/// One query result.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub p_id: PageId,
    pub url: String,
    /// Level the page sits in; `None` for an RPaG.
    pub level: Option<usize>,
    /// 0-based ontology whose chain reached the page.
    pub ontology: usize,
    pub cost: TraversalCost,
}

/// True when the page holds every query token, each either literally or as
/// one of its synonyms.
fn page_matches(tokens: &HashSet<&str>, query: &[String], set: &OntologySet) -> bool {
    query
        .iter()
        .all(|q| set.syntable().expand(q).iter().any(|t| tokens.contains(t)))
}

/// Walks the chains of every ontology the query scores for, level by level
/// from the highest, and returns up to `top` pages holding all query terms.
/// Each hit carries the cost of a directed search for that page.
pub fn run_query(
    structure_path: &Path,
    corpus: &Corpus,
    set: &OntologySet,
    query: &str,
    top: usize,
) -> anyhow::Result<Vec<Hit>> {
    let structure = Structure::load(structure_path)?;
    let terms = tokenize(query);
    if top == 0 || terms.is_empty() {
        return Ok(Vec::new());
    }
    let scores = set.profile(&terms).rel_vals;
    let matched: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > 0.0).collect();
    if matched.is_empty() {
        return Ok(Vec::new());
    }
    let matches = |id: PageId| {
        corpus.page(id).is_some_and(|p| {
            let tokens: HashSet<&str> = p.tokens.iter().map(String::as_str).collect();
            page_matches(&tokens, &terms, set)
        })
    };

    let mut hits = Vec::new();
    let mut seen = HashSet::new();
    match &structure {
        Structure::Rpag(rpag) => {
            for node in rpag.nodes() {
                if hits.len() == top {
                    break;
                }
                let Some(ontology) = node.profile.supported().find(|o| matched.contains(o)) else {
                    continue;
                };
                if matches(node.p_id) {
                    hits.push(Hit {
                        p_id: node.p_id,
                        url: node.url.clone(),
                        level: None,
                        ontology,
                        cost: rpag.search(|n| n.p_id == node.p_id).cost(),
                    });
                }
            }
        }
        Structure::Ibag(ibag) => collect_level_hits(
            ibag.levels(),
            &matched,
            top,
            &mut seen,
            &mut hits,
            |level, ont| level.chain(ont).collect(),
            |route, id| ibag.search(route, |n| n.p_id == id).cost(),
            &matches,
        ),
        Structure::Mibag(mibag) => collect_level_hits(
            mibag.base().levels(),
            &matched,
            top,
            &mut seen,
            &mut hits,
            |level, ont| match mibag.multilevel(level.level_no) {
                Some(ml) => ml
                    .sub_levels
                    .iter()
                    .flat_map(|s| level.chain_from(s.heads[ont], ont))
                    .collect(),
                None => level.chain(ont).collect(),
            },
            |route, id| mibag.search(route, |n| n.p_id == id).cost(),
            &matches,
        ),
    }
    Ok(hits)
}

#[allow(clippy::too_many_arguments)]
fn collect_level_hits(
    levels: &[LevelIndex],
    matched: &[usize],
    top: usize,
    seen: &mut HashSet<PageId>,
    hits: &mut Vec<Hit>,
    chain: impl Fn(&LevelIndex, usize) -> Vec<usize>,
    cost: impl Fn(Route, PageId) -> TraversalCost,
    matches: &dyn Fn(PageId) -> bool,
) {
    for level in levels.iter().rev() {
        for &ont in matched {
            for pos in chain(level, ont) {
                if hits.len() == top {
                    return;
                }
                let node = &level.nodes[pos];
                if seen.contains(&node.p_id) || !matches(node.p_id) {
                    continue;
                }
                seen.insert(node.p_id);
                let route = Route {
                    mean_rel: node.mean_rel,
                    ontology: ont,
                };
                hits.push(Hit {
                    p_id: node.p_id,
                    url: node.url.clone(),
                    level: Some(level.level_no),
                    ontology: ont,
                    cost: cost(route, node.p_id),
                });
            }
        }
    }
}

pub fn cmd_query(
    cfg: &RunConfig,
    structure: Option<&Path>,
    query: &str,
    top: usize,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let set = cfg.ontology_set()?;
    let path = match structure {
        Some(p) => p.to_path_buf(),
        None => Structure::default_path(&cfg.out_dir())?,
    };
    let corpus = load_corpus(cfg.corpus_path())?;
    let hits = run_query(&path, &corpus, &set, query, top)?;
    if hits.is_empty() {
        writeln!(
            out,
            "# no results: the query matched no ontology or no page holds all its terms"
        )?;
    }
    for h in hits {
        let level = h.level.map_or_else(|| "-".to_string(), |l| l.to_string());
        writeln!(
            out,
            "{}\t{}\tlevel={}\tontology={}\tindex={}\tmultilevel={}\tpages={}\ttotal={}",
            h.p_id,
            h.url,
            level,
            h.ontology + 1,
            h.cost.index_hops,
            h.cost.multilevel_hops,
            h.cost.page_hops,
            h.cost.total()
        )?;
    }
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let set = if cfg.ontologies.is_empty() {
        OntologySet::builtin(cfg.relevance_limit)?
    } else {
        cfg.ontology_set()?
    };
    let vcfg = VerifyConfig {
        n: cfg.n_pages,
        m: cfg.m,
        seed: cfg.rng_seed,
        out_degree: cfg.out_degree,
        alpha: cfg.alpha,
        beta: cfg.beta,
        scenarios: vec![Profile::Ideal, Profile::SingleLevel],
    };
    let table = verify_table1(&vcfg, &set)?;
    let path = ensure_out_dir(cfg)?.join("table1.csv");
    emit_report(&table.reports, &path)?;

    let mut failing = Vec::new();
    for row in table.reports.iter().flat_map(|r| r.rows()) {
        let line = format!(
            "{},{},{},{},{},{},{},{}",
            row.model,
            row.scenario,
            row.case,
            row.n,
            row.m,
            row.measured,
            row.closed_form,
            row.matched
        );
        writeln!(out, "{line}")?;
        if !row.matched {
            failing.push(line);
        }
    }
    let ratio = table.worst_ratio().unwrap_or(f64::NAN);
    writeln!(
        out,
        "worst(ibag ideal)/worst(rpag ideal) = {ratio:.6} (1/m = {:.6})",
        1.0 / cfg.m as f64
    )?;
    writeln!(out, "# wrote {}", path.display())?;
    if !failing.is_empty() {
        bail!(
            "{} row(s) do not match:\n{}",
            failing.len(),
            failing.join("\n")
        );
    }
    Ok(())
}
