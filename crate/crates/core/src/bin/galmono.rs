use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;

use galmono::analysis::{analyze, list_catalog, AnalysisConfig, AnalysisError, ReportDocument, DEFAULT_LOOPS};
use galmono::problems::{catalog, find, MinimalProblem};

#[derive(Parser)]
#[command(name = "galmono", version, about = "Numerical monodromy groups of minimal problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the problem catalog.
    List,
    /// Compute the monodromy group of a problem and summarize it.
    Analyze {
        id: String,
        #[command(flatten)]
        run: RunArgs,
        /// Exit with status 4 unless the report matches the catalog.
        #[arg(long)]
        expect: bool,
        /// Also check the closed-form deck maps.
        #[arg(long)]
        verify_deck: bool,
        /// Print every block system.
        #[arg(long)]
        blocks: bool,
        /// Record wall time in the JSON report.
        #[arg(long)]
        timings: bool,
    },
    /// Check the closed-form deck maps against the computed centralizer.
    VerifyDeck {
        id: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_LOOPS)]
    loops: usize,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Run problems marked long running.
    #[arg(long)]
    allow_long: bool,
    #[arg(long)]
    corrector_tol: Option<f64>,
    #[arg(long)]
    path_tol: Option<f64>,
    #[arg(long)]
    min_step: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    max_completion_loops: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<AnalysisConfig, String> {
        let mut cfg = AnalysisConfig {
            seed: self.seed,
            loops: self.loops,
            allow_long: self.allow_long || std::env::var("GALMONO_ALLOW_LONG").is_ok_and(|v| v == "1"),
            ..Default::default()
        };
        let t = &mut cfg.monodromy.track;
        if let Some(v) = self.corrector_tol {
            t.corrector_tol = v;
            t.path_tol = t.path_tol.max(v);
        }
        if let Some(v) = self.path_tol {
            t.path_tol = v;
        }
        if let Some(v) = self.min_step {
            t.min_step = v;
        }
        if let Some(v) = self.max_step {
            t.max_step = v;
            t.initial_step = t.initial_step.min(v);
        }
        if let Some(v) = self.max_steps {
            t.max_steps = v;
        }
        if let Some(v) = self.max_completion_loops {
            cfg.monodromy.max_loops = v;
        }
        t.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn init_threads() {
    let Ok(v) = std::env::var("GALMONO_THREADS") else { return };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                warn!("could not size the worker pool: {e}");
            }
        }
        _ => warn!("ignoring GALMONO_THREADS={v}"),
    }
}

fn write_json(path: &PathBuf, doc: &ReportDocument) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| e.to_string())?;
    text.push('\n');
    if path.as_os_str() == "-" {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn print_summary(doc: &ReportDocument, blocks: bool) {
    let g = &doc.group;
    println!("problem   {} (seed {})", doc.problem, doc.seed);
    println!(
        "degree    {}{}",
        doc.degree,
        if doc.degree_certified { "" } else { " (heuristic completion)" }
    );
    println!("loops     {} accepted, {} discarded", doc.loops, doc.discarded);
    println!("order     {}", g.order);
    println!("transitive {}  all_even {}  primitive {}", g.transitive, g.all_even, g.primitive);
    let sizes: Vec<String> = g.block_systems.iter().map(|b| b.block_size().to_string()).collect();
    println!("blocks    [{}]", sizes.join(", "));
    if blocks {
        for (i, b) in g.block_systems.iter().enumerate() {
            let parts: Vec<String> = b
                .blocks()
                .iter()
                .map(|blk| {
                    let pts: Vec<String> = blk.iter().map(|p| (p + 1).to_string()).collect();
                    format!("{{{}}}", pts.join(" "))
                })
                .collect();
            println!("  [{i}] {}", parts.join(" "));
        }
        for (a, b) in &g.lattice_edges {
            println!("  [{a}] < [{b}]");
        }
    }
    match g.deck_order {
        Some(d) => println!("deck      order {d}, invariants {:?}", g.deck_abelian_invariants),
        None => println!("deck      not computed"),
    }
    for d in &doc.deck {
        println!(
            "deck map  {}: {}  involution {}  fixed-point-free {}  in centralizer {}  max residual {:.1e}",
            d.name,
            d.index_map.cycle_notation(),
            d.is_involution,
            d.fixed_point_free,
            d.in_centralizer.map_or("?".into(), |b| b.to_string()),
            d.max_residual
        );
    }
    if let Some(e) = &doc.expectation {
        for c in &e.checks {
            println!(
                "expect    {:<12} {} (expected {}, observed {})",
                c.field,
                if c.pass { "ok" } else { "MISMATCH" },
                c.expected,
                c.observed
            );
        }
        if e.pass {
            println!("consistent with {}", e.consistent_with);
        }
    }
}

fn run(problem: &dyn MinimalProblem, cfg: &AnalysisConfig) -> Result<ReportDocument, AnalysisError> {
    let analysis = analyze(problem, cfg)?;
    Ok(analysis.document(problem, cfg))
}

fn fail(msg: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("galmono: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for line in list_catalog(&catalog()) {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Command::Analyze {
            id,
            run: args,
            expect,
            verify_deck,
            blocks,
            timings,
        } => {
            let problem = match find(&id) {
                Ok(p) => p,
                Err(e) => return fail(e, 1),
            };
            let mut cfg = match args.config() {
                Ok(c) => c,
                Err(e) => return fail(e, 1),
            };
            cfg.verify_deck = verify_deck;
            cfg.timings = timings;
            let doc = match run(problem.as_ref(), &cfg) {
                Ok(d) => d,
                Err(e) => return fail(&e, e.exit_code() as u8),
            };
            if let Some(path) = &args.json {
                if let Err(e) = write_json(path, &doc) {
                    return fail(e, 1);
                }
            }
            if args.json.as_ref().is_none_or(|p| p.as_os_str() != "-") {
                print_summary(&doc, blocks);
            }
            let mismatch = doc.expectation.as_ref().is_some_and(|e| !e.pass);
            if expect && (mismatch || doc.expectation.is_none()) {
                return fail(format!("{id}: report does not match the catalog"), 4);
            }
            ExitCode::SUCCESS
        }
        Command::VerifyDeck { id, run: args } => {
            let problem = match find(&id) {
                Ok(p) => p,
                Err(e) => return fail(e, 1),
            };
            if problem.deck_map_names().is_empty() {
                println!("{id}: no closed-form deck maps");
                return ExitCode::SUCCESS;
            }
            let mut cfg = match args.config() {
                Ok(c) => c,
                Err(e) => return fail(e, 1),
            };
            cfg.verify_deck = true;
            let doc = match run(problem.as_ref(), &cfg) {
                Ok(d) => d,
                Err(e) => return fail(&e, e.exit_code() as u8),
            };
            if let Some(path) = &args.json {
                if let Err(e) = write_json(path, &doc) {
                    return fail(e, 1);
                }
            }
            if args.json.as_ref().is_none_or(|p| p.as_os_str() != "-") {
                print_summary(&doc, false);
            }
            let ok = doc
                .deck
                .iter()
                .all(|d| d.is_involution && d.fixed_point_free && d.in_centralizer == Some(true));
            if ok {
                ExitCode::SUCCESS
            } else {
                fail(format!("{id}: a deck map is not a fixed-point-free involution in the centralizer"), 4)
            }
        }
    }
}
