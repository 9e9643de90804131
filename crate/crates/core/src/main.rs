use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;

use cpgir::analysis::{run_rule, Finding, RULES};
use cpgir::export::{export_graphml, export_json, export_neo4j_csv};
use cpgir::ir::parse_module;
use cpgir::passes::{reg2mem, Pass, PassPipeline};
use cpgir::{translate_module_timed, Translation};

#[derive(Parser)]
#[command(name = "cpgir", version, about = "Translate LLVM-IR (.ll) into a code property graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate and export each input.
    Translate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Output file; a directory for neo4j-csv or for several inputs.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        queries: Queries,
    },
    /// Print one statistics line per input.
    Stats {
        #[command(flatten)]
        common: Common,
    },
    /// Run detectors and print a JSON findings report.
    Query {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        queries: Queries,
    },
    /// Compare node counts of the pipeline against the reg2mem baseline.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Comma separated pass names, `all`, `none` or `default`.
    #[arg(long, default_value = "default")]
    passes: String,
    /// Also run remove-stubs: calls to thin wrappers go straight to the wrapped declaration.
    #[arg(long)]
    remove_stubs: bool,
    /// Demote φ nodes to memory before mapping instead of eliminating them.
    #[arg(long)]
    baseline_reg2mem: bool,
}

#[derive(Args)]
struct Queries {
    /// Detector to run; repeatable.
    #[arg(long = "rule")]
    rules: Vec<String>,
    /// Exit with status 1 when any detector reports a finding.
    #[arg(long)]
    fail_on_findings: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Graphml,
    #[value(name = "neo4j-csv")]
    Neo4jCsv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Graphml => "graphml",
            Format::Neo4jCsv => "",
        }
    }
}

/// What happened to one input.
enum Outcome {
    Done { findings: usize },
    Fatal,
}

#[derive(Serialize)]
struct FileReport<'a> {
    file: String,
    findings: &'a [Finding],
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CPGIR_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            error!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn pipeline(common: &Common) -> Result<PassPipeline, String> {
    let p = PassPipeline::parse(&common.passes).map_err(|e| e.to_string())?;
    Ok(if common.remove_stubs { p.with(Pass::RemoveStubs, true) } else { p })
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Translate { common, format, out, queries } => {
            let pipeline = pipeline(&common)?;
            check_rules(&queries.rules)?;
            if format == Format::Neo4jCsv && out.is_none() {
                return Err("neo4j-csv needs an output directory (-o)".into());
            }
            let batch = common.inputs.len() > 1;
            let outcomes: Vec<Outcome> = common
                .inputs
                .par_iter()
                .map(|input| {
                    let Some(mut t) = load(input, &pipeline, common.baseline_reg2mem) else {
                        return Outcome::Fatal;
                    };
                    let target = out.as_ref().map(|o| if batch { per_file(o, input, format) } else { o.clone() });
                    let start = Instant::now();
                    if let Err(e) = write_export(&t, format, target.as_deref()) {
                        error!("{}: {e}", input.display());
                        return Outcome::Fatal;
                    }
                    t.graph.record_phase("export", ms(start));
                    eprintln!("{}", stats_line(input, &t));
                    let findings = findings_for(&t, &queries.rules);
                    if !findings.is_empty() {
                        print_report(&[(input.display().to_string(), findings.clone())]);
                    }
                    Outcome::Done { findings: findings.len() }
                })
                .collect();
            Ok(exit_code(&outcomes, queries.fail_on_findings))
        }
        Command::Stats { common } => {
            let pipeline = pipeline(&common)?;
            let outcomes: Vec<Outcome> = common
                .inputs
                .par_iter()
                .map(|input| match load(input, &pipeline, common.baseline_reg2mem) {
                    Some(t) => {
                        println!("{}", stats_line(input, &t));
                        Outcome::Done { findings: 0 }
                    }
                    None => Outcome::Fatal,
                })
                .collect();
            Ok(exit_code(&outcomes, false))
        }
        Command::Query { common, queries } => {
            let pipeline = pipeline(&common)?;
            let rules = if queries.rules.is_empty() { RULES.iter().map(|r| r.to_string()).collect() } else { queries.rules.clone() };
            check_rules(&rules)?;
            let results: Vec<(String, Option<Vec<Finding>>)> = common
                .inputs
                .par_iter()
                .map(|input| {
                    let t = load(input, &pipeline, common.baseline_reg2mem);
                    (input.display().to_string(), t.map(|t| findings_for(&t, &rules)))
                })
                .collect();
            let report: Vec<(String, Vec<Finding>)> =
                results.iter().filter_map(|(f, r)| r.clone().map(|r| (f.clone(), r))).collect();
            print_report(&report);
            let outcomes: Vec<Outcome> = results
                .iter()
                .map(|(_, r)| match r {
                    Some(f) => Outcome::Done { findings: f.len() },
                    None => Outcome::Fatal,
                })
                .collect();
            Ok(exit_code(&outcomes, queries.fail_on_findings))
        }
        Command::Compare { common } => {
            let pipeline = pipeline(&common)?;
            let outcomes: Vec<Outcome> = common
                .inputs
                .par_iter()
                .map(|input| {
                    let (Some(ours), Some(base)) = (load(input, &pipeline, false), load(input, &pipeline, true)) else {
                        return Outcome::Fatal;
                    };
                    let (o, b) = (ours.graph.stats().node_count, base.graph.stats().node_count);
                    let delta = if b == 0 { 0.0 } else { 100.0 * (b as f64 - o as f64) / b as f64 };
                    // both lines in one write so that batches do not interleave them
                    println!(
                        "ours    {}\nreg2mem {}\n{}: {delta:.1}% fewer nodes than reg2mem",
                        stats_line(input, &ours),
                        stats_line(input, &base),
                        input.display()
                    );
                    Outcome::Done { findings: 0 }
                })
                .collect();
            Ok(exit_code(&outcomes, false))
        }
    }
}

fn check_rules(rules: &[String]) -> Result<(), String> {
    match rules.iter().find(|r| run_rule(&cpgir::cpg::CpgGraph::new(), r).is_none()) {
        Some(r) => Err(format!("unknown rule `{r}`; known rules: {}", RULES.join(", "))),
        None => Ok(()),
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

/// Reads, parses and translates one input. Errors are logged here so that a
/// bad file never aborts the batch.
fn load(input: &Path, pipeline: &PassPipeline, baseline: bool) -> Option<Translation> {
    let source = match fs::read_to_string(input) {
        Ok(s) => s,
        Err(e) => {
            error!("{}: {e}", input.display());
            return None;
        }
    };
    let name = input.display().to_string();
    let start = Instant::now();
    let (module, report) = match parse_module(&source, &name) {
        Ok(r) => r,
        Err(e) => {
            error!("{name}: {e}");
            return None;
        }
    };
    let parse_ms = ms(start);
    for d in &report.diagnostics {
        info!("{name}: {d:?}");
    }
    let mut phases = vec![("parse", parse_ms)];
    let module = if baseline {
        let start = Instant::now();
        let m = reg2mem(&module);
        phases.push(("reg2mem", ms(start)));
        m
    } else {
        module
    };
    let mut t = translate_module_timed(&module, pipeline, &phases);
    for d in &t.diagnostics {
        log::warn!("{name}: {d}");
    }
    t.parse = report;
    Some(t)
}

fn stats_line(input: &Path, t: &Translation) -> String {
    let s = t.graph.stats();
    let phases: Vec<String> = s.phase_times.iter().map(|(p, v)| format!("{p} {v:.2} ms")).collect();
    format!(
        "{}: # Nodes: {} | # Functions: {} | # Problem nodes: {} | {} | total {:.2} ms",
        input.display(),
        s.node_count,
        s.function_count,
        s.problem_node_count,
        phases.join(", "),
        s.total_millis()
    )
}

fn per_file(dir: &Path, input: &Path, format: Format) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    match format {
        Format::Neo4jCsv => dir.join(stem),
        f => dir.join(format!("{stem}.{}", f.extension())),
    }
}

fn write_export(t: &Translation, format: Format, target: Option<&Path>) -> Result<(), String> {
    let bytes = match format {
        Format::Neo4jCsv => {
            let dir = target.expect("checked by the caller");
            return export_neo4j_csv(&t.graph, dir).map_err(|e| e.to_string());
        }
        Format::Json => export_json(&t.graph),
        Format::Graphml => export_graphml(&t.graph).into_bytes(),
    };
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| e.to_string())?;
            }
            fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
        }
        None => io::stdout().lock().write_all(&bytes).map_err(|e| e.to_string()),
    }
}

fn findings_for(t: &Translation, rules: &[String]) -> Vec<Finding> {
    rules.iter().flat_map(|r| run_rule(&t.graph, r).unwrap_or_default()).collect()
}

fn print_report(report: &[(String, Vec<Finding>)]) {
    let files: Vec<FileReport> = report.iter().map(|(f, findings)| FileReport { file: f.clone(), findings }).collect();
    println!("{}", serde_json::to_string_pretty(&files).expect("findings serialize"));
}

fn exit_code(outcomes: &[Outcome], fail_on_findings: bool) -> ExitCode {
    if outcomes.iter().any(|o| matches!(o, Outcome::Fatal)) {
        ExitCode::from(2)
    } else if fail_on_findings && outcomes.iter().any(|o| matches!(o, Outcome::Done { findings } if *findings > 0)) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
