use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use tiup::checker::{campaign_tautologies, detection_matrix, prepare_corpus, Budget, DetectionMatrix, Method};
use tiup::simulator::format_trace;
use tiup::synthesizer::synthesize;

use crate::config::CampaignConfig;
use crate::{admitted, load_libraries, Status};

#[derive(clap::Args)]
pub struct CampaignArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated subset of `tiup,sqed`.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    /// Comma-separated anomaly specs, e.g. `golden,a10(delta_bytes=-8)`.
    #[arg(long)]
    anomalies: Option<Vec<String>>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_instances: Option<u64>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "tiup" => Ok(Method::Tiup),
        "sqed" => Ok(Method::Sqed),
        other => Err(format!("unknown method `{other}`; expected tiup or sqed")),
    }
}

impl CampaignArgs {
    fn resolve(self) -> Result<CampaignConfig> {
        let mut cfg = match &self.config {
            Some(p) => CampaignConfig::load(p)?,
            None => CampaignConfig::default(),
        };
        if self.seeds.is_some() {
            cfg.seeds = self.seeds;
        }
        if self.templates.is_some() {
            cfg.templates = self.templates;
        }
        if let Some(d) = self.out_dir {
            cfg.out_dir = d;
        }
        if let Some(m) = self.methods {
            cfg.methods = m;
        }
        if let Some(a) = self.anomalies {
            cfg.anomalies = a.iter().flat_map(|s| split_specs(s)).collect();
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(s) = self.samples {
            cfg.budget.samples = s;
        }
        if let Some(s) = self.seed {
            cfg.budget.seed = s;
        }
        if let Some(m) = self.max_instances {
            cfg.max_instances = m;
        }
        Ok(cfg)
    }
}

/// Splits `a03,a10(delta_bytes=-8),a18` at commas outside parentheses.
fn split_specs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0usize, 0usize);
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(text[start..i].trim().to_string());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim().to_string());
    out.retain(|s| !s.is_empty());
    out
}

/// Everything in `report.json`. Nothing here depends on the clock or the
/// thread count.
#[derive(Serialize)]
struct Report<'a> {
    admission_width: u32,
    seeds: Vec<&'a str>,
    templates: Vec<&'a str>,
    tautologies: usize,
    sqed_programs: usize,
    sqed_skipped: &'a [(String, String)],
    matrix: &'a DetectionMatrix,
}

#[derive(Serialize)]
struct Meta {
    version: &'static str,
    started_unix: u64,
    elapsed_seconds: f64,
    jobs: usize,
    config: CampaignConfig,
}

fn render_markdown(report: &Report, budget: &Budget, traces: &[String]) -> String {
    let mut out = String::from("# Anomaly detection\n\n");
    out.push_str(&format!(
        "{} tautologies ({} seeds, {} templates); {} duplicated programs, {} skipped.\n",
        report.tautologies,
        report.seeds.len(),
        report.templates.len(),
        report.sqed_programs,
        report.sqed_skipped.len()
    ));
    out.push_str(&format!(
        "Budget: grid {}..={} (at most {} points), {} random samples, seed {:#x}.\n\n",
        budget.grid_min, budget.grid_max, budget.max_grid_points, budget.samples, budget.seed
    ));
    out.push_str(&report.matrix.to_markdown());
    if !traces.is_empty() {
        out.push_str("\n## Traces\n\n");
        for t in traces {
            out.push_str(&format!("- `{t}`\n"));
        }
    }
    out
}

pub fn cmd_campaign(args: CampaignArgs) -> Result<Status> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let cfg = args.resolve()?;
    let anomalies = cfg.anomalies()?;
    let (seeds, templates) = load_libraries(cfg.seeds.as_deref(), cfg.templates.as_deref())?;
    let Some(seeds) = admitted(&seeds, cfg.admission_width, tiup::oracle::DEFAULT_LIMIT)? else {
        anyhow::bail!("the seed corpus contains non-tautologies");
    };
    let instances = synthesize(&templates.templates, &seeds.seeds, cfg.max_instances as u128)?;
    let corpus = prepare_corpus(&campaign_tautologies(&seeds.seeds, &instances))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .context("starting worker threads")?;
    let matrix = pool.install(|| detection_matrix(&corpus, &anomalies, &cfg.methods, &cfg.budget));

    let out = &cfg.out_dir;
    let trace_dir = out.join("traces");
    fs::create_dir_all(&trace_dir).with_context(|| format!("creating {}", trace_dir.display()))?;
    let mut traces = Vec::new();
    for row in &matrix.rows {
        for report in [&row.tiup, &row.sqed].into_iter().flatten() {
            let Some(c) = &report.counterexample else { continue };
            let name = format!(
                "traces/{}-{}.trace",
                row.anomaly.id(),
                report.method.to_string().to_ascii_lowercase()
            );
            let mut text = format!(
                "# anomaly {}\n# method {}\n# program {}\n# inputs {}\n# {} Result_Reg={} Finish_Reg={}\n",
                row.anomaly, report.method, c.program, c.sigma, c.outcome, c.result_reg, c.finish_reg
            );
            for m in &c.mismatches {
                text.push_str(&format!("# mismatch {m}\n"));
            }
            text.push_str(&format_trace(&c.trace));
            fs::write(out.join(&name), text).with_context(|| format!("writing {name}"))?;
            traces.push(name);
        }
    }

    let report = Report {
        admission_width: cfg.admission_width,
        seeds: seeds.seeds.iter().map(|s| s.name.as_str()).collect(),
        templates: templates.templates.iter().map(|t| t.name.as_str()).collect(),
        tautologies: corpus.tiup.len(),
        sqed_programs: corpus.sqed.len(),
        sqed_skipped: &corpus.sqed_skipped,
        matrix: &matrix,
    };
    let markdown = render_markdown(&report, &cfg.budget, &traces);
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    fs::write(out.join("report.md"), &markdown).context("writing report.md")?;
    fs::write(out.join("report.json"), json).context("writing report.json")?;

    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        jobs: pool.current_num_threads(),
        config: cfg.clone(),
    };
    fs::write(out.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")
        .context("writing meta.json")?;

    print!("{}", matrix.to_markdown());
    println!("\nreport written to {}", out.join("report.md").display());
    let detected = matrix
        .rows
        .iter()
        .flat_map(|r| [&r.tiup, &r.sqed])
        .flatten()
        .any(|r| r.detected());
    Ok(if detected { Status::Violation } else { Status::Ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_split_outside_parentheses() {
        assert_eq!(
            split_specs("a03(from=1,to=2), a18,"),
            vec!["a03(from=1,to=2)".to_string(), "a18".to_string()]
        );
    }
}
