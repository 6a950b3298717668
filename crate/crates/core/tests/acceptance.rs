//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use mibag::corpus::generate;
use mibag::costlab::{
    closed_form, measure, read_report, Case, CostModel, Measured, ModelKind, TargetSet,
};
use mibag::ibag::{build_ibag, mean_relevance};
use mibag::mibag::{build_mibag, multilevel_limit};
use mibag::rpag::build_rpag;
use mibag::{
    CorpusSpec, Ibag, IbagNode, Mibag, OntologySet, PageId, Profile, Route, Rpag, TraversalCost,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 10_000;
const M: usize = 10;

struct Built {
    rpag: Rpag,
    ibag: Ibag,
    mibag: Mibag,
}

fn build(
    set: &OntologySet,
    profile: Profile,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Built, String> {
    let spec = CorpusSpec {
        n_pages: n,
        profile,
        m_levels: m,
        k_ontologies: set.k(),
        rng_seed: seed,
        ..CorpusSpec::default()
    };
    let corpus = generate(&spec, set).map_err(|e| e.to_string())?;
    let rpag = build_rpag(&corpus, set);
    let cfg = spec.ibag_config().map_err(|e| e.to_string())?;
    let ibag = build_ibag(&rpag, cfg).map_err(|e| e.to_string())?;
    let mibag = build_mibag(&ibag).map_err(|e| e.to_string())?;
    Ok(Built { rpag, ibag, mibag })
}

fn exhaustive(model: &dyn CostModel) -> Result<Measured, String> {
    measure(model, TargetSet::Exhaustive).map_err(|e| e.to_string())
}

fn triple(m: &Measured) -> (u64, u64, f64) {
    (m.best, m.worst, m.average())
}

struct Suite {
    failed: usize,
}

impl Suite {
    fn record(&mut self, no: usize, name: &str, outcome: Result<String, String>) {
        match outcome {
            Ok(detail) => println!("PASS  {no}. {name}: {detail}"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL  {no}. {name}: {detail}");
            }
        }
    }
}

fn expect<T: PartialEq + std::fmt::Debug>(got: T, want: T) -> Result<String, String> {
    if got == want {
        Ok(format!("{got:?}"))
    } else {
        Err(format!("got {got:?}, want {want:?}"))
    }
}

fn criterion_1(ideal: &Built) -> Result<String, String> {
    expect(triple(&exhaustive(&ideal.rpag)?), (0, 9_999, 4_999.5))
}

fn criterion_2(ideal: &Built) -> Result<String, String> {
    expect(triple(&exhaustive(&ideal.ibag)?), (1, 1_000, 500.5))
}

fn criterion_3(single: &Built) -> Result<String, String> {
    let m = exhaustive(&single.ibag)?;
    expect((m.worst, m.average()), (10_000, 5_000.5))
}

fn criterion_4(single: &Built) -> Result<String, String> {
    let occupancy = single.mibag.max_occupancy();
    let worst = exhaustive(&single.mibag)?.worst;
    let got = (occupancy, worst, worst <= 2 * (N / M) as u64);
    expect(got, (1_000, 1_001, true))
}

fn criterion_5(single: &Built) -> Result<String, String> {
    let avg = exhaustive(&single.mibag)?.average();
    let formula = closed_form(ModelKind::Mibag, Profile::SingleLevel, Case::Average, N, M)
        .map_err(|e| e.to_string())?;
    let inside = avg >= formula && avg <= formula + 1.0;
    if inside && avg == 501.5 {
        Ok(format!("{avg} in [{formula}, {}]", formula + 1.0))
    } else {
        Err(format!(
            "{avg} vs [{formula}, {}], expected 501.5",
            formula + 1.0
        ))
    }
}

fn criterion_6(set: &OntologySet, ideal: &Built) -> Result<String, String> {
    let at10 = exhaustive(&ideal.ibag)?.average();
    let at20 = exhaustive(&build(set, Profile::Ideal, N, 20, 42)?.ibag)?.average();
    expect((at10, at20), (500.5, 250.5))
}

fn criterion_7() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_mibag"))
        .args(["verify", "--n", "10000", "--m", "10", "--out"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    let rows = read_report(dir.path().join("table1.csv")).map_err(|e| e.to_string())?;
    let all = rows.len() == 18 && rows.iter().all(|r| r.matched);
    let worst = |model| {
        rows.iter()
            .find(|r| r.model == model && r.scenario == Profile::Ideal && r.case == Case::Worst)
            .map(|r| r.measured)
            .unwrap_or(f64::NAN)
    };
    let ratio = worst(ModelKind::Ibag) / worst(ModelKind::Rpag);
    let target = 1.0 / M as f64;
    let ratio_ok = ((ratio - target) / target).abs() <= 0.01;
    let detail = format!("{} rows, all match = {all}, ratio = {ratio:.6}", rows.len());
    if all && ratio_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Positions of the nodes supporting `ont` within `nodes[range]`.
fn supporting(nodes: &[IbagNode], range: std::ops::Range<usize>, ont: usize) -> Vec<usize> {
    range.filter(|&p| nodes[p].flags[ont]).collect()
}

fn ids<'a>(nodes: impl Iterator<Item = &'a IbagNode>) -> BTreeSet<PageId> {
    nodes.map(|n| n.p_id).collect()
}

/// Every structural property for one built instance; returns the first violation.
fn check_structures(b: &Built, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let (rpag, ibag, mibag) = (&b.rpag, &b.ibag, &b.mibag);
    let n = rpag.len();
    let m = ibag.cfg().m;
    let k = ibag.k();

    let rpag_ids: BTreeSet<PageId> = rpag.nodes().iter().map(|n| n.p_id).collect();
    if rpag_ids != ids(ibag.nodes()) || rpag_ids != ids(mibag.nodes()) {
        return Err("node sets differ across rpag/ibag/mibag".into());
    }

    for level in ibag.levels() {
        for pair in level.nodes.windows(2) {
            let ordered = pair[0].mean_rel > pair[1].mean_rel
                || (pair[0].mean_rel == pair[1].mean_rel && pair[0].p_id < pair[1].p_id);
            if !ordered {
                return Err(format!("level {} out of order", level.level_no));
            }
        }
        for node in &level.nodes {
            if ibag.cfg().level_of(node.mean_rel).ok() != Some(level.level_no) {
                return Err(format!(
                    "page {} outside level {}",
                    node.p_id, level.level_no
                ));
            }
        }
        for ont in 0..k {
            let chain: Vec<usize> = level.chain(ont).collect();
            if chain != supporting(&level.nodes, 0..level.len(), ont) {
                return Err(format!("level {} chain {ont} incomplete", level.level_no));
            }
        }
    }

    let limit = multilevel_limit(n, m).map_err(|e| e.to_string())?;
    for (no, level) in mibag.base().levels().iter().enumerate() {
        let mu = level.len();
        match mibag.multilevel(no) {
            None if mu > limit => return Err(format!("level {no} with {mu} pages not split")),
            None => {
                for ont in 0..k {
                    let chain: Vec<usize> = level.chain(ont).collect();
                    if chain != supporting(&level.nodes, 0..mu, ont) {
                        return Err(format!("mibag level {no} chain {ont} incomplete"));
                    }
                }
            }
            Some(_) if mu <= limit => return Err(format!("level {no} with {mu} pages split")),
            Some(ml) => {
                if ml.sub_levels.len() != mu.div_ceil(limit) {
                    return Err(format!("level {no}: {} sub-levels", ml.sub_levels.len()));
                }
                for s in &ml.sub_levels {
                    if s.size > limit {
                        return Err(format!("level {no}: sub-level of {}", s.size));
                    }
                    for ont in 0..k {
                        let chain: Vec<usize> = level.chain_from(s.heads[ont], ont).collect();
                        if chain != supporting(&level.nodes, s.start..s.start + s.size, ont) {
                            return Err(format!("level {no} sub-level chain {ont} incomplete"));
                        }
                    }
                }
            }
        }
    }
    if build_mibag(mibag.base()).map_err(|e| e.to_string())? != *mibag {
        return Err("build_mibag not idempotent".into());
    }

    for _ in 0..1_000 {
        let (pos, target) = {
            let i = rng.gen_range(0..n);
            (i, &rpag.nodes()[i])
        };
        let supported: Vec<usize> = target.profile.supported().collect();
        let ontology = *supported.choose(rng).unwrap();
        let mean_rel = mean_relevance(&target.profile).map_err(|e| e.to_string())?;
        let route = Route { mean_rel, ontology };
        let is_target = |n: &IbagNode| n.p_id == target.p_id;

        let r = rpag.search(|n| n.p_id == target.p_id);
        if r.node().map(|n| n.p_id) != Some(target.p_id)
            || r.cost() != TraversalCost::pages(pos as u64)
        {
            return Err(format!("rpag search for {} disagrees", target.p_id));
        }

        let level_no = ibag.cfg().level_of(mean_rel).map_err(|e| e.to_string())?;
        let level = &ibag.levels()[level_no];
        let chain = supporting(&level.nodes, 0..level.len(), ontology);
        let at = chain
            .iter()
            .position(|&p| level.nodes[p].p_id == target.p_id);
        let want = at.map(|a| TraversalCost {
            index_hops: 1,
            multilevel_hops: 0,
            page_hops: a as u64,
        });
        let i = ibag.search(route, is_target);
        if i.node().map(|n| n.p_id) != Some(target.p_id) || Some(i.cost()) != want {
            return Err(format!("ibag search for {} disagrees", target.p_id));
        }

        let want = match mibag.multilevel(level_no) {
            None => want,
            Some(ml) => ml
                .sub_levels
                .iter()
                .map(|s| supporting(&level.nodes, s.start..s.start + s.size, ontology))
                .find_map(|c| c.iter().position(|&p| level.nodes[p].p_id == target.p_id))
                .map(|a| TraversalCost {
                    index_hops: 1,
                    multilevel_hops: 1,
                    page_hops: a as u64,
                }),
        };
        let mb = mibag.search(route, is_target);
        if mb.node().map(|n| n.p_id) != Some(target.p_id) || Some(mb.cost()) != want {
            return Err(format!("mibag search for {} disagrees", target.p_id));
        }
    }
    Ok(())
}

fn criterion_8(set: &OntologySet) -> Result<String, String> {
    const SEEDS: u64 = 120;
    let profiles = [Profile::Ideal, Profile::SingleLevel, Profile::Custom];
    let mut violations = Vec::new();
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(10..=500);
        let m = rng.gen_range(1..=20usize.min(n));
        let profile = profiles[seed as usize % profiles.len()];
        let outcome = build(set, profile, n, m, seed).and_then(|b| check_structures(&b, &mut rng));
        if let Err(e) = outcome {
            violations.push(format!("seed {seed} ({profile}, n={n}, m={m}): {e}"));
        }
    }
    if violations.is_empty() {
        Ok(format!("{SEEDS} seeds, 0 violations"))
    } else {
        Err(format!(
            "{} violations; first: {}",
            violations.len(),
            violations[0]
        ))
    }
}

fn run_cli(out: &Path, args: &[&str]) -> Result<(), String> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mibag"));
    cmd.args(args).arg("--out").arg(out);
    for name in ["programming", "networking", "databases"] {
        cmd.arg("--ontology")
            .arg(fixtures.join("ontologies").join(format!("{name}.tsv")));
    }
    cmd.arg("--syntable").arg(fixtures.join("syntable.tsv"));
    let res = cmd.output().map_err(|e| e.to_string())?;
    if res.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&res.stderr)
        ))
    }
}

fn criterion_9() -> Result<String, String> {
    let runs = [tempfile::tempdir(), tempfile::tempdir()];
    let mut dirs = Vec::new();
    for r in runs {
        let dir = r.map_err(|e| e.to_string())?;
        let common = [
            "--n",
            "300",
            "--m",
            "10",
            "--seed",
            "7",
            "--profile",
            "single_level",
        ];
        run_cli(dir.path(), &[&["generate"][..], &common].concat())?;
        for stage in ["rpag", "ibag", "mibag"] {
            run_cli(dir.path(), &[&["build", stage][..], &common].concat())?;
        }
        run_cli(
            dir.path(),
            &["verify", "--n", "100", "--m", "10", "--seed", "1"],
        )?;
        dirs.push(dir);
    }
    let files = [
        "corpus.txt",
        "rpag.txt",
        "ibag.txt",
        "mibag.txt",
        "table1.csv",
    ];
    for f in files {
        let a = fs::read(dirs[0].path().join(f)).map_err(|e| e.to_string())?;
        let b = fs::read(dirs[1].path().join(f)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{f} differs between runs"));
        }
    }
    Ok(format!("{} files byte-identical", files.len()))
}

fn main() -> ExitCode {
    let set = OntologySet::builtin(0.05).expect("bundled ontologies load");
    let mut suite = Suite { failed: 0 };

    let ideal = build(&set, Profile::Ideal, N, M, 42);
    let single = build(&set, Profile::SingleLevel, N, M, 42);
    let with = |b: &Result<Built, String>, f: &dyn Fn(&Built) -> Result<String, String>| match b {
        Ok(b) => f(b),
        Err(e) => Err(format!("build failed: {e}")),
    };

    suite.record(
        1,
        "rpag exactness (best, worst, average)",
        with(&ideal, &criterion_1),
    );
    suite.record(
        2,
        "ibag ideal exactness (best, worst, average)",
        with(&ideal, &criterion_2),
    );
    suite.record(
        3,
        "ibag single-level exactness (worst, average)",
        with(&single, &criterion_3),
    );
    suite.record(
        4,
        "mibag cap and worst case (occupancy, worst, worst <= 2n/m)",
        with(&single, &criterion_4),
    );
    suite.record(
        5,
        "mibag average within accounting band",
        with(&single, &criterion_5),
    );
    suite.record(
        6,
        "ibag average scaling, m=10 then m=20",
        with(&ideal, &|b| criterion_6(&set, b)),
    );
    suite.record(
        7,
        "verify binary: 18 matching rows and worst ratio within 1% of 1/m",
        criterion_7(),
    );
    suite.record(8, "randomized structural properties", criterion_8(&set));
    suite.record(9, "determinism of corpus, dumps and report", criterion_9());

    println!("{} of 9 criteria failed", suite.failed);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
