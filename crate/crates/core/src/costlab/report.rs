use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{accepts, closed_form, measure, Case, CostModel, Measured, ModelKind, TargetSet};
use crate::corpus::{generate, CorpusSpec, Profile};
use crate::ibag::{build_ibag, Ibag};
use crate::mibag::build_mibag;
use crate::ontology::OntologySet;
use crate::rpag::{build_rpag, Rpag};
use crate::{Error, Result};

/// Measured versus closed-form cost of one model on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub model: ModelKind,
    pub scenario: Profile,
    pub n: usize,
    pub m: usize,
    /// Indexed like [`Case::ALL`]: best, worst, average.
    pub measured: [f64; 3],
    pub closed_form: [f64; 3],
    pub matches: [bool; 3],
}

impl CostReport {
    pub fn new(
        model: ModelKind,
        scenario: Profile,
        n: usize,
        m: usize,
        measured: &Measured,
    ) -> Result<Self> {
        let measured = [
            measured.best as f64,
            measured.worst as f64,
            measured.average(),
        ];
        let mut closed = [0.0; 3];
        let mut matches = [false; 3];
        for (i, case) in Case::ALL.into_iter().enumerate() {
            closed[i] = closed_form(model, scenario, case, n, m)?;
            matches[i] = accepts(model, case, n, m, closed[i], measured[i]);
        }
        Ok(CostReport {
            model,
            scenario,
            n,
            m,
            measured,
            closed_form: closed,
            matches,
        })
    }

    pub fn get(&self, case: Case) -> (f64, f64, bool) {
        let i = Case::ALL.iter().position(|&c| c == case).unwrap();
        (self.measured[i], self.closed_form[i], self.matches[i])
    }

    pub fn all_match(&self) -> bool {
        self.matches.iter().all(|&m| m)
    }

    pub fn rows(&self) -> impl Iterator<Item = ReportRow> + '_ {
        Case::ALL
            .into_iter()
            .enumerate()
            .map(|(i, case)| ReportRow {
                model: self.model,
                scenario: self.scenario,
                case,
                n: self.n,
                m: self.m,
                measured: self.measured[i],
                closed_form: self.closed_form[i],
                matched: self.matches[i],
            })
    }
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelKind,
    pub scenario: Profile,
    pub case: Case,
    pub n: usize,
    pub m: usize,
    pub measured: f64,
    pub closed_form: f64,
    #[serde(rename = "match")]
    pub matched: bool,
}

/// Writes `model,scenario,case,n,m,measured,closed_form,match` rows in report order.
pub fn emit_report(reports: &[CostReport], path: impl AsRef<Path>) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Empty("report list"));
    }
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for row in reports.iter().flat_map(CostReport::rows) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub out_degree: usize,
    pub alpha: f64,
    pub beta: f64,
    pub scenarios: Vec<Profile>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let spec = CorpusSpec::default();
        VerifyConfig {
            n: 10_000,
            m: 10,
            seed: spec.rng_seed,
            out_degree: spec.out_degree,
            alpha: spec.alpha,
            beta: spec.beta,
            scenarios: vec![Profile::Ideal, Profile::SingleLevel],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    pub m: usize,
    pub reports: Vec<CostReport>,
}

impl Table1 {
    pub fn all_match(&self) -> bool {
        self.reports.iter().all(CostReport::all_match)
    }

    pub fn report(&self, model: ModelKind, scenario: Profile) -> Option<&CostReport> {
        self.reports
            .iter()
            .find(|r| r.model == model && r.scenario == scenario)
    }

    /// Measured worst(IBAG, ideal) / worst(RPaG, ideal).
    pub fn worst_ratio(&self) -> Option<f64> {
        let ibag = self
            .report(ModelKind::Ibag, Profile::Ideal)?
            .get(Case::Worst)
            .0;
        let rpag = self
            .report(ModelKind::Rpag, Profile::Ideal)?
            .get(Case::Worst)
            .0;
        Some(ibag / rpag)
    }

    /// Whether the worst-case ratio is within `rel_tol` (relative) of `1/m`.
    pub fn ratio_ok(&self, rel_tol: f64) -> bool {
        let target = 1.0 / self.m as f64;
        self.worst_ratio()
            .is_some_and(|r| ((r - target) / target).abs() <= rel_tol)
    }
}

fn check_shape(scenario: Profile, n: usize, m: usize, rpag: &Rpag, ibag: &Ibag) -> Result<()> {
    if rpag.len() != n {
        return Err(Error::Shape(format!(
            "{scenario}: crawl kept {} of {n} pages",
            rpag.len()
        )));
    }
    if !ibag.nodes().all(|node| node.flags.iter().all(|&f| f)) {
        return Err(Error::Shape(format!(
            "{scenario}: some pages do not support every ontology"
        )));
    }
    let counts: Vec<usize> = ibag.levels().iter().map(|l| l.len()).collect();
    let ok = match scenario {
        Profile::Ideal => counts.iter().all(|&c| c == n / m || c == n.div_ceil(m)),
        Profile::SingleLevel => counts.iter().filter(|&&c| c > 0).count() == 1,
        Profile::Custom => true,
    };
    if !ok {
        return Err(Error::Shape(format!(
            "{scenario}: per-level counts {counts:?} do not realize the scenario"
        )));
    }
    Ok(())
}

/// Generates each scenario's corpus, builds all three structures, measures
/// every page exhaustively, and compares against the closed forms.
pub fn verify_table1(cfg: &VerifyConfig, set: &OntologySet) -> Result<Table1> {
    if cfg.m == 0 || cfg.n < cfg.m {
        return Err(Error::invalid(
            "verify",
            format!("need n >= m >= 1, got n={} m={}", cfg.n, cfg.m),
        ));
    }
    let mut reports = Vec::new();
    for &scenario in &cfg.scenarios {
        let spec = CorpusSpec {
            n_pages: cfg.n,
            profile: scenario,
            m_levels: cfg.m,
            k_ontologies: set.k(),
            out_degree: cfg.out_degree,
            rng_seed: cfg.seed,
            alpha: cfg.alpha,
            beta: cfg.beta,
        };
        let corpus = generate(&spec, set)?;
        let rpag = build_rpag(&corpus, set);
        let ibag = build_ibag(&rpag, spec.ibag_config()?)?;
        check_shape(scenario, cfg.n, cfg.m, &rpag, &ibag)?;
        let mibag = build_mibag(&ibag)?;
        let models: [&dyn CostModel; 3] = [&rpag, &ibag, &mibag];
        for model in models {
            let measured = measure(model, TargetSet::Exhaustive)?;
            reports.push(CostReport::new(
                model.kind(),
                scenario,
                cfg.n,
                cfg.m,
                &measured,
            )?);
        }
    }
    Ok(Table1 { m: cfg.m, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Table1 {
        let cfg = VerifyConfig {
            n: 100,
            m: 10,
            ..VerifyConfig::default()
        };
        verify_table1(&cfg, &OntologySet::builtin(0.05).unwrap()).unwrap()
    }

    #[test]
    fn small_table_matches() {
        let t = small();
        assert_eq!(t.reports.len(), 6);
        assert!(t.all_match(), "{:#?}", t.reports);
        let ibag = t.report(ModelKind::Ibag, Profile::Ideal).unwrap();
        assert_eq!(ibag.measured, [1.0, 10.0, 5.5]);
        let rpag = t.report(ModelKind::Rpag, Profile::Ideal).unwrap();
        assert_eq!(rpag.measured, [0.0, 99.0, 49.5]);
        let mibag = t.report(ModelKind::Mibag, Profile::SingleLevel).unwrap();
        // every page sits in a split level, so even the cheapest search pays the multilevel hop
        assert_eq!(mibag.measured, [2.0, 11.0, 6.5]);
    }

    #[test]
    fn csv_rows_and_round_trip() {
        let t = small();
        let dir = tempfile::tempdir().unwrap();
        let one = dir.path().join("one.csv");
        emit_report(&t.reports[..1], &one).unwrap();
        let rows = read_report(&one).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows, t.reports[0].rows().collect::<Vec<_>>());
        let header = std::fs::read_to_string(&one).unwrap();
        assert!(header.starts_with("model,scenario,case,n,m,measured,closed_form,match\n"));
        assert!(matches!(
            emit_report(&[], dir.path().join("e.csv")),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn n_below_m_rejected() {
        let cfg = VerifyConfig {
            n: 5,
            m: 10,
            ..VerifyConfig::default()
        };
        assert!(verify_table1(&cfg, &OntologySet::builtin(0.05).unwrap()).is_err());
    }
}
