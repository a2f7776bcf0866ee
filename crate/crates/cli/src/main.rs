mod campaign;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tiup::compiler::{compile, InstrSequence, RegPlan, FINISH_REG, RESULT_REG};
use tiup::formula::{parse_corpus, parse_formula, Formula, SeedLibrary, TemplateLibrary};
use tiup::formula::{SHIPPED_SEEDS, SHIPPED_TEMPLATES};
use tiup::oracle::{admit_seeds, check_tautology, RejectionReason, DEFAULT_LIMIT};
use tiup::simulator::{format_trace, Anomaly, RunConfig, RunOutcome, Simulator, CATALOG};
use tiup::synthesizer::{count_instances, synthesize};

use crate::config::{parse_anomaly, parse_int};

/// Formulas are parsed at this width everywhere except the oracle.
const MACHINE_WIDTH: u32 = 32;

#[derive(Parser)]
#[command(name = "tiup", version, about = "Tautology-based processor verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Admit seeds and instantiate templates into a tautology corpus.
    Synth(SynthArgs),
    /// Check formulas for validity by exhaustive enumeration.
    Oracle(OracleArgs),
    /// Compile a tautology corpus to IR, assembly and binaries.
    Compile(CompileArgs),
    /// Run one binary on the pipeline simulator.
    Run(RunArgs),
    /// Check every anomaly with every method and write a report.
    Campaign(campaign::CampaignArgs),
    /// Print the anomaly catalog.
    ListAnomalies,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Seed corpus (built-in when omitted).
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Template corpus (built-in when omitted).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Seeds must be valid at this width and the next.
    #[arg(long, default_value_t = 4)]
    width: u32,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    max: u64,
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: u64,
}

#[derive(clap::Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 4)]
    width: u32,
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: u64,
    #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
    formula: Option<String>,
    /// File of `name : formula` lines.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CompileArgs {
    /// File of `name : formula` lines.
    input: PathBuf,
    #[arg(long, default_value = "build")]
    out_dir: PathBuf,
    /// Confine code to x0..x15.
    #[arg(long)]
    lower_half: bool,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Little-endian program image.
    binary: PathBuf,
    /// `name=value` or `xN=value`, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<String>,
    /// Anomaly spec such as `a18` or `a10(delta_bytes=-8)`.
    #[arg(long, default_value = "golden")]
    anomaly: String,
    /// Write the pipeline trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    cycle_cap: Option<u64>,
}

/// How a successful command ended.
enum Status {
    Ok,
    /// A falsified formula, a failed property or a detected anomaly.
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Run(a) => cmd_run(a),
        Command::Campaign(a) => campaign::cmd_campaign(a),
        Command::ListAnomalies => cmd_list_anomalies(),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_libraries(
    seeds: Option<&Path>,
    templates: Option<&Path>,
) -> Result<(SeedLibrary, TemplateLibrary)> {
    let seed_text = seeds.map(read).transpose()?;
    let template_text = templates.map(read).transpose()?;
    let seeds = SeedLibrary::parse(seed_text.as_deref().unwrap_or(SHIPPED_SEEDS), MACHINE_WIDTH)
        .with_context(|| format!("seed corpus {}", shown(seeds)))?;
    let templates = TemplateLibrary::parse(template_text.as_deref().unwrap_or(SHIPPED_TEMPLATES))
        .with_context(|| format!("template corpus {}", shown(templates)))?;
    Ok((seeds, templates))
}

fn shown(path: Option<&Path>) -> String {
    path.map_or("(built-in)".to_string(), |p| p.display().to_string())
}

/// Seeds that hold at `width` and `width + 1`. Prints each rejection;
/// `None` means at least one seed was falsified.
fn admitted(lib: &SeedLibrary, width: u32, limit: u64) -> Result<Option<SeedLibrary>> {
    let admission = admit_seeds(lib, &[width, width + 1], limit);
    let mut falsified = false;
    for r in &admission.rejected {
        match &r.reason {
            RejectionReason::Falsified(v) => {
                falsified = true;
                let cex = v.counterexample.as_ref().map(|c| c.to_string()).unwrap_or_default();
                eprintln!(
                    "seed `{}` is not a tautology at width {}: {}",
                    r.seed.name, v.width, cex
                );
            }
            RejectionReason::Unchecked(e) => bail!("seed `{}`: {e}", r.seed.name),
        }
    }
    Ok((!falsified).then_some(SeedLibrary {
        seeds: admission.admitted,
    }))
}

fn cmd_synth(a: SynthArgs) -> Result<Status> {
    let (seeds, templates) = load_libraries(a.seeds.as_deref(), a.templates.as_deref())?;
    let Some(seeds) = admitted(&seeds, a.width, a.limit)? else {
        return Ok(Status::Violation);
    };
    let instances = synthesize(&templates.templates, &seeds.seeds, a.max as u128)?;
    debug_assert_eq!(
        instances.len() as u128,
        count_instances(&templates.templates, &seeds.seeds)
    );

    let mut out = format!(
        "# {} instances of {} templates over {} seeds\n",
        instances.len(),
        templates.len(),
        seeds.len()
    );
    for t in &instances {
        out.push_str(&format!("{} : {}\n", t.name(), t.formula));
    }
    match &a.out {
        Some(path) => {
            fs::write(path, &out).with_context(|| format!("writing {}", path.display()))?;
            println!("{} instances written to {}", instances.len(), path.display());
        }
        None => print!("{out}"),
    }
    Ok(Status::Ok)
}

fn cmd_oracle(a: OracleArgs) -> Result<Status> {
    let entries: Vec<(String, String)> = match (&a.formula, &a.corpus) {
        (Some(f), _) => vec![("formula".to_string(), f.clone())],
        (None, Some(path)) => parse_corpus(&read(path)?)
            .with_context(|| path.display().to_string())?
            .into_iter()
            .map(|e| (e.name, e.text))
            .collect(),
        (None, None) => bail!("give --formula or --corpus"),
    };
    let single = a.formula.is_some();
    let mut status = Status::Ok;
    for (name, text) in entries {
        let f = parse_formula(&text, a.width).with_context(|| format!("`{name}`"))?;
        let v = check_tautology(&f, a.width, a.limit).with_context(|| format!("`{name}`"))?;
        let prefix = if single { String::new() } else { format!("{name}: ") };
        match &v.counterexample {
            None => println!(
                "{prefix}valid at width {} ({} assignments)",
                v.width, v.assignments_checked
            ),
            Some(c) => {
                status = Status::Violation;
                println!("{prefix}falsified at width {}: {c}", v.width);
            }
        }
    }
    Ok(status)
}

/// File stem for a tautology name such as `and_elim(assoc,eq_refl)`.
fn file_stem(name: &str) -> String {
    let mut stem: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    while stem.ends_with('_') && stem.len() > 1 {
        stem.pop();
    }
    stem
}

fn cmd_compile(a: CompileArgs) -> Result<Status> {
    let text = read(&a.input)?;
    let entries = parse_corpus(&text).with_context(|| a.input.display().to_string())?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let plan = if a.lower_half {
        RegPlan::lower_half()
    } else {
        RegPlan::standard()
    };
    let mut used = std::collections::HashSet::new();
    for e in &entries {
        let f: Formula = parse_formula(&e.text, MACHINE_WIDTH)
            .with_context(|| format!("line {} (`{}`)", e.line, e.name))?;
        let c = compile(&e.name, &f, &plan)?;
        let mut stem = file_stem(&e.name);
        let mut n = 1;
        while !used.insert(stem.clone()) {
            n += 1;
            stem = format!("{}-{n}", file_stem(&e.name));
        }
        let base = a.out_dir.join(stem);
        let write = |ext: &str, bytes: &[u8]| {
            let path = base.with_extension(ext);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
        };
        write("ir", c.ir.to_string().as_bytes())?;
        write("s", c.code.assembly(Some(&f)).as_bytes())?;
        write("bin", &c.code.to_bytes())?;
    }
    println!("compiled {} tautologies into {}", entries.len(), a.out_dir.display());
    Ok(Status::Ok)
}

/// `name -> register` pairs from the `# input x = x1` lines of a listing.
fn listing_inputs(listing: &str) -> Vec<(String, usize)> {
    listing
        .lines()
        .filter_map(|l| l.strip_prefix("# input "))
        .filter_map(|rest| {
            let (name, reg) = rest.split_once('=')?;
            Some((name.trim().to_string(), parse_reg(reg.trim())?))
        })
        .collect()
}

fn parse_reg(text: &str) -> Option<usize> {
    let n: usize = text.strip_prefix('x')?.parse().ok()?;
    (n < 32).then_some(n)
}

fn cmd_run(a: RunArgs) -> Result<Status> {
    let bytes = fs::read(&a.binary).with_context(|| format!("reading {}", a.binary.display()))?;
    let seq = InstrSequence::from_bytes(&a.binary.display().to_string(), &bytes)
        .map_err(anyhow::Error::msg)?;
    let listing_path = a.binary.with_extension("s");
    let named = match fs::read_to_string(&listing_path) {
        Ok(text) => listing_inputs(&text),
        Err(_) => Vec::new(),
    };

    let mut regs = [0u32; 32];
    for item in a.inputs.iter().filter(|s| !s.trim().is_empty()) {
        let Some((name, value)) = item.split_once('=') else {
            bail!("input `{item}`: expected name=value");
        };
        let name = name.trim();
        let reg = match named.iter().find(|(n, _)| n == name) {
            Some((_, r)) => *r,
            None => parse_reg(name).with_context(|| {
                format!("`{name}` is neither an input of {} nor a register", listing_path.display())
            })?,
        };
        regs[reg] = parse_int(value.trim())? as u32;
    }

    let anomaly: Anomaly = parse_anomaly(&a.anomaly)?;
    let sim = Simulator::new(&seq.words, anomaly);
    let cfg = RunConfig {
        cycle_cap: a.cycle_cap,
        record_trace: a.trace.is_some(),
    };
    let run = sim.run_inputs(regs, cfg);
    if let Some(path) = &a.trace {
        fs::write(path, format_trace(&run.trace))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "Result_Reg={} Finish_Reg={}",
        run.regs[RESULT_REG] as i32, run.regs[FINISH_REG] as i32
    );
    println!("anomaly={anomaly} cycles={} retired={}", run.cycles, run.retired);
    if let Some(path) = &a.trace {
        println!("trace written to {}", path.display());
    }
    if run.outcome == RunOutcome::Hang {
        println!(
            "hang: cycle cap of {} reached before Finish_Reg was set",
            a.cycle_cap.unwrap_or_else(|| sim.default_cycle_cap())
        );
        return Ok(Status::Violation);
    }
    Ok(if run.violates() {
        println!("violation: Finish_Reg is set but Result_Reg is 0");
        Status::Violation
    } else {
        Status::Ok
    })
}

fn cmd_list_anomalies() -> Result<Status> {
    println!("{:<8} {:<10} {:<12} {:<24} description", "id", "category", "stage", "default");
    for id in CATALOG {
        let a = parse_anomaly(id)?;
        let opt = |s: Option<String>| s.unwrap_or_else(|| "-".into());
        println!(
            "{:<8} {:<10} {:<12} {:<24} {}",
            id,
            opt(a.category().map(|c| c.to_string())),
            opt(a.stage().map(|s| s.to_string())),
            a.to_string(),
            a.synopsis()
        );
    }
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_are_file_safe() {
        assert_eq!(file_stem("assoc"), "assoc");
        assert_eq!(file_stem("and_elim(assoc,eq_refl)"), "and_elim_assoc_eq_refl");
    }

    #[test]
    fn listing_header_is_read() {
        let listing = "# tautology t\n# input x = x1\n# input y = x2\n# Result_Reg = x30\n";
        assert_eq!(
            listing_inputs(listing),
            vec![("x".to_string(), 1), ("y".to_string(), 2)]
        );
        assert_eq!(parse_reg("x31"), Some(31));
        assert_eq!(parse_reg("x32"), None);
    }
}
