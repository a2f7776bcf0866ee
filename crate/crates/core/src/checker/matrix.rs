use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compiler::{compile, CompileError, InstrSequence, RegPlan};
use crate::simulator::Anomaly;
use crate::formula::{Formula, Seed};
use crate::synthesizer::InstantiatedTautology;

use super::{build_eddiv, verify_sqed, verify_tiup, Budget, EddivProgram, Method, MethodReport};

/// Compiled tautologies ready for both checks.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub tiup: Vec<InstrSequence>,
    pub sqed: Vec<EddivProgram>,
    /// Tautologies that cannot be duplicated, with the reason.
    pub sqed_skipped: Vec<(String, String)>,
}

/// The tautologies a campaign runs: every seed on its own, then every
/// template instance. Instances alone are blind to a bug that corrupts every
/// evaluation of a seed the same way, since their propositional skeleton
/// still holds.
pub fn campaign_tautologies(
    seeds: &[Seed],
    instances: &[InstantiatedTautology],
) -> Vec<(String, Formula)> {
    seeds
        .iter()
        .map(|s| (s.name.clone(), s.formula.clone()))
        .chain(instances.iter().map(|t| (t.name(), t.formula.clone())))
        .collect()
}

/// Compiles every tautology with the full register plan, and again within
/// `x0`..`x15` for duplication where it fits.
pub fn prepare_corpus(tautologies: &[(String, Formula)]) -> Result<Corpus, CompileError> {
    let mut corpus = Corpus {
        tiup: Vec::with_capacity(tautologies.len()),
        sqed: Vec::new(),
        sqed_skipped: Vec::new(),
    };
    let (standard, lower) = (RegPlan::standard(), RegPlan::lower_half());
    for (name, formula) in tautologies {
        corpus.tiup.push(compile(name, formula, &standard)?.code);
        let dup = compile(name, formula, &lower)
            .map_err(|e| e.to_string())
            .and_then(|c| build_eddiv(&c.code).map_err(|e| e.to_string()));
        match dup {
            Ok(p) => corpus.sqed.push(p),
            Err(reason) => corpus.sqed_skipped.push((name.clone(), reason)),
        }
    }
    Ok(corpus)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub anomaly: Anomaly,
    pub tiup: Option<MethodReport>,
    pub sqed: Option<MethodReport>,
}

impl MatrixRow {
    pub fn report(&self, method: Method) -> Option<&MethodReport> {
        match method {
            Method::Tiup => self.tiup.as_ref(),
            Method::Sqed => self.sqed.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionMatrix {
    pub budget: Budget,
    pub rows: Vec<MatrixRow>,
}

/// Checks every anomaly with each requested method.
pub fn detection_matrix(
    corpus: &Corpus,
    anomalies: &[Anomaly],
    methods: &[Method],
    budget: &Budget,
) -> DetectionMatrix {
    let rows = anomalies
        .par_iter()
        .map(|&anomaly| MatrixRow {
            anomaly,
            tiup: methods
                .contains(&Method::Tiup)
                .then(|| verify_tiup(&corpus.tiup, anomaly, budget)),
            sqed: methods
                .contains(&Method::Sqed)
                .then(|| verify_sqed(&corpus.sqed, anomaly, budget)),
        })
        .collect();
    DetectionMatrix {
        budget: *budget,
        rows,
    }
}

impl DetectionMatrix {
    pub fn row(&self, id: &str) -> Option<&MatrixRow> {
        self.rows.iter().find(|r| r.anomaly.id() == id)
    }

    fn cell(report: Option<&MethodReport>) -> String {
        match report {
            None => "-".to_string(),
            Some(r) if r.detected() => {
                format!("detected ({}/{})", r.detections(), r.programs.len())
            }
            Some(r) => r.outcome.to_string(),
        }
    }

    /// One table row per anomaly, then the first counterexample of each
    /// detection.
    pub fn to_markdown(&self) -> String {
        let mut out =
            String::from("| Anomaly | Description | Category | TIUP | SQED |\n|---|---|---|---|---|\n");
        for r in &self.rows {
            let category = r.anomaly.category().map_or("-".to_string(), |c| c.to_string());
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                r.anomaly,
                r.anomaly.synopsis(),
                category,
                Self::cell(r.tiup.as_ref()),
                Self::cell(r.sqed.as_ref()),
            ));
        }
        let mut first = true;
        for r in &self.rows {
            for report in [&r.tiup, &r.sqed].into_iter().flatten() {
                let Some(c) = &report.counterexample else { continue };
                if first {
                    out.push_str("\n## Counterexamples\n\n");
                    first = false;
                }
                out.push_str(&format!(
                    "- {} / {}: `{}` with {} ({}, {} retired, {} cycles)",
                    r.anomaly, report.method, c.program, c.sigma, c.outcome, c.retired, c.cycles
                ));
                for m in &c.mismatches {
                    out.push_str(&format!("; {m}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{SeedLibrary, TemplateLibrary};
    use crate::synthesizer::{synthesize, DEFAULT_MAX_INSTANCES};

    #[test]
    fn shipped_corpus_compiles() {
        let seeds = SeedLibrary::shipped();
        let templates = TemplateLibrary::shipped();
        let inst = synthesize(&templates.templates, &seeds.seeds, DEFAULT_MAX_INSTANCES).unwrap();
        let all = campaign_tautologies(&seeds.seeds, &inst);
        assert_eq!(all.len(), 7 + 154);
        assert_eq!(all[0].0, "assoc");
        let corpus = prepare_corpus(&all).unwrap();
        assert_eq!(corpus.tiup.len(), all.len());
        assert_eq!(corpus.sqed.len() + corpus.sqed_skipped.len(), all.len());
        assert!(corpus.sqed.len() > all.len() / 2);
    }

    #[test]
    fn markdown_lists_every_row() {
        let seeds = SeedLibrary::parse("s : x - y - z == x - (y + z)", 32).unwrap();
        let templates = TemplateLibrary::parse("t : P || !P").unwrap();
        let inst = synthesize(&templates.templates, &seeds.seeds, 10).unwrap();
        let corpus = prepare_corpus(&campaign_tautologies(&seeds.seeds, &inst)).unwrap();
        let budget = Budget {
            samples: 10,
            max_grid_points: 100,
            ..Budget::default()
        };
        let m = detection_matrix(&corpus, &[Anomaly::Golden, Anomaly::A18], &[Method::Tiup], &budget);
        let md = m.to_markdown();
        assert!(md.contains("| golden | No anomaly | - | pass-within-budget | - |"));
        assert!(md.contains("| a18 |"));
        assert!(md.contains("## Counterexamples"));
        assert!(m.row("a18").unwrap().tiup.as_ref().unwrap().detected());
    }
}
