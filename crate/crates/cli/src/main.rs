use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hlpg_core::benchmarks::{AsVariant, Family};
use hlpg_core::correspondence::{check_correspondence_with, inject_fault, CorrespondenceOptions};
use hlpg_core::export::{
    export_hl_dot, export_lowlevel, stats, ExportFormat, StatsFlags, StatsReport,
};
use hlpg_core::semantics::TokenGame;
use hlpg_core::{dsl, instantiate, EvalError, HighLevelGame, Instance, Limits, ParamEnv};

/// Stdout writes that stop quietly when the reader has gone away.
macro_rules! out {
    ($($t:tt)*) => {
        write_stdout(&format!($($t)*))
    };
}

macro_rules! outln {
    ($($t:tt)*) => {
        write_stdout(&format!("{}\n", format_args!($($t)*)))
    };
}

fn write_stdout(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

/// Parameterized high-level Petri games: check, instantiate, explore and
/// verify `.hlpg` models.
///
/// Exit status: 0 success, 1 input error, 2 I/O error, 3 limit exceeded,
/// 4 correspondence violation.
#[derive(Parser, Debug)]
#[command(name = "hlpg", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Largest number of reachable markings explored.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    max_states: usize,
    /// Largest number of valuations enumerated per transition.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    max_valuations: usize,
    /// Largest base set whose power set is enumerated.
    #[arg(long, global = true, default_value_t = 16)]
    max_powerset: usize,
    /// Explore on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Print reports as JSON (reach, verify, stats).
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Parameter binding `name=value`; repeatable. Unbound parameters take
    /// their declared default.
    #[arg(short = 'P', value_name = "NAME=VALUE", value_parser = parse_binding)]
    params: Vec<(String, i64)>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, validate and typecheck a model.
    Check { file: PathBuf },
    /// Instantiate for fixed parameters and export the low-level game.
    Instantiate {
        file: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Output format: native, pnml or dot.
        #[arg(short, long, default_value = "native")]
        format: ExportFormat,
        /// Output file; stdout if absent (the summary then goes to stderr).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Merge transitions with identical pre- and postsets.
        #[arg(long)]
        dedup: bool,
        /// Drop places without arcs that are not initially marked.
        #[arg(long)]
        prune: bool,
    },
    /// Explore the reachable markings of the token game.
    Reach {
        file: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Check that the instantiation behaves exactly like the high-level game.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Seed for the sampled markings.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random markings checked besides the reachable ones.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Write a benchmark family as a model file.
    Bench {
        /// Family: as, cm or sr.
        family: String,
        #[command(flatten)]
        params: ParamArgs,
        /// Alarm system variant: sync or seq.
        #[arg(long, default_value = "sync")]
        variant: AsVariant,
        /// Output file; stdout if absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Size figures of the instantiation.
    Stats {
        file: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Also explore the low-level reachability graph.
        #[arg(long)]
        reach: bool,
        /// Also check contact-freeness of the token game.
        #[arg(long)]
        contact_free: bool,
        /// Also check that the instantiation is 1-safe.
        #[arg(long)]
        one_safe: bool,
        /// All of the above.
        #[arg(long)]
        all: bool,
    },
    /// DOT rendering of the high-level game.
    Render {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn parse_binding(s: &str) -> Result<(String, i64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: i64 = value
        .trim()
        .parse()
        .map_err(|_| format!("value of `{name}` is not an integer: `{value}`"))?;
    Ok((name.trim().to_string(), value))
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let code = if e.is_limit() { 3 } else { 1 };
        let mut message = e.to_string();
        if let EvalError::Invalid(diags) = &e {
            for d in diags {
                let _ = write!(message, "\n  {d}");
            }
        }
        Failure { code, message }
    }
}

impl From<hlpg_core::Error> for Failure {
    fn from(e: hlpg_core::Error) -> Self {
        match e {
            hlpg_core::Error::Eval(e) => e.into(),
            e => Failure {
                code: if e.is_limit() { 3 } else { 1 },
                message: e.to_string(),
            },
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    let limits = Limits {
        max_states: g.max_states,
        max_valuations: g.max_valuations,
        max_powerset: g.max_powerset,
        parallel: !g.sequential,
    };
    match cli.command {
        Command::Check { file } => cmd_check(&file, limits),
        Command::Instantiate {
            file,
            params,
            format,
            output,
            dedup,
            prune,
        } => {
            let game = load(&file)?;
            let inst = instance(&game, &params, limits)?;
            let mut ll = instantiate(&inst)?;
            if dedup {
                ll.dedup_transitions();
            }
            if prune {
                ll.prune_isolated_places();
            }
            let text = export_lowlevel(&ll, format);
            let summary = StatsReport::of_instance(&inst, &ll);
            match output {
                Some(path) => {
                    write_file(&path, &text)?;
                    out!("{}", summary.to_text());
                }
                None => {
                    out!("{text}");
                    eprint!("{}", summary.to_text());
                }
            }
            Ok(())
        }
        Command::Reach { file, params } => cmd_reach(&file, &params, limits, g.json),
        Command::Verify {
            file,
            params,
            seed,
            samples,
            inject_fault: fault,
        } => {
            let game = load(&file)?;
            let inst = instance(&game, &params, limits)?;
            let mut ll = instantiate(&inst)?;
            if fault {
                if let Some(arc) = inject_fault(&mut ll) {
                    eprintln!("injected fault: removed arc {arc}");
                }
            }
            let report =
                check_correspondence_with(&inst, &ll, CorrespondenceOptions { samples, seed })?;
            if g.json {
                outln!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable")
                );
            } else {
                out!("{report}");
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure {
                    code: 4,
                    message: format!("{} correspondence violations", report.violation_count),
                })
            }
        }
        Command::Bench {
            family,
            params,
            variant,
            output,
        } => {
            let fam = Family::from_name(&family, variant).map_err(Failure::input)?;
            let game = fam.build(params.params.iter().map(|(k, v)| (k.as_str(), *v)))?;
            emit(output.as_deref(), &dsl::print(&game))
        }
        Command::Stats {
            file,
            params,
            reach,
            contact_free,
            one_safe,
            all,
        } => {
            let game = load(&file)?;
            let inst = instance(&game, &params, limits)?;
            let flags = if all {
                StatsFlags::all()
            } else {
                StatsFlags {
                    reach,
                    contact_free,
                    one_safe,
                }
            };
            let s = stats(&inst, flags)?;
            if g.json {
                outln!(
                    "{}",
                    serde_json::to_string_pretty(&s).expect("serializable")
                );
            } else {
                out!("{}", s.to_text());
            }
            Ok(())
        }
        Command::Render { file, output } => {
            let game = load(&file)?;
            emit(output.as_deref(), &export_hl_dot(&game))
        }
    }
}

fn load(path: &Path) -> Result<HighLevelGame, Failure> {
    let src = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    dsl::parse(&src).map_err(|diags| {
        let lines: Vec<String> = diags
            .iter()
            .map(|d| format!("{}:{d}", path.display()))
            .collect();
        Failure::input(format!(
            "{} has errors\n{}",
            path.display(),
            lines.join("\n")
        ))
    })
}

fn instance<'g>(
    game: &'g HighLevelGame,
    params: &ParamArgs,
    limits: Limits,
) -> Result<Instance<'g>, Failure> {
    let env = ParamEnv::new(game, params.params.iter().map(|(k, v)| (k.as_str(), *v)))?;
    Ok(Instance::new(game, env, limits)?)
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(p) => write_file(p, text),
        None => {
            out!("{text}");
            Ok(())
        }
    }
}

fn cmd_check(file: &Path, limits: Limits) -> Outcome {
    let game = load(file)?;
    // typechecking needs parameter values; defaults are used when declared
    if game.params.iter().all(|p| p.default.is_some()) {
        let env = ParamEnv::new(&game, [])?;
        Instance::new(&game, env, limits)?;
    }
    outln!(
        "{}: ok ({} places, {} transitions)",
        file.display(),
        game.places.len(),
        game.transitions.len()
    );
    Ok(())
}

fn cmd_reach(file: &Path, params: &ParamArgs, limits: Limits, as_json: bool) -> Outcome {
    let game = load(file)?;
    let inst = instance(&game, params, limits)?;
    let tg = TokenGame::new(&inst)?;
    let graph = match tg.explore() {
        Ok(g) => g,
        Err(hlpg_core::Error::ContactViolation(w)) => {
            if as_json {
                let v = json!({
                    "game": game.name,
                    "params": inst.env().to_string(),
                    "contact_free": false,
                    "witness": *w,
                });
                outln!(
                    "{}",
                    serde_json::to_string_pretty(&v).expect("serializable")
                );
            } else {
                outln!("game {} ({})", game.name, inst.env());
                outln!("  contact-free: false");
                outln!("  witness: {w}");
            }
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let bad: Vec<usize> = (0..game.places.len())
        .filter(|&i| game.places[i].bad)
        .collect();
    let bad_node = graph
        .nodes()
        .iter()
        .position(|m| bad.iter().any(|&p| !m.tokens(p).is_empty()));
    let bad_path: Option<Vec<String>> =
        bad_node.map(|i| graph.path_to(i).into_iter().map(|s| tg.render(s)).collect());
    let deadlocks = graph.deadlocks().len();
    let st = graph.stats();
    if as_json {
        let v = json!({
            "game": game.name,
            "params": inst.env().to_string(),
            "nodes": st.nodes,
            "edges": st.edges,
            "depth": st.depth,
            "bad_reachable": bad_node.is_some(),
            "bad_path": bad_path,
            "deadlocks": deadlocks,
            "contact_free": true,
        });
        outln!(
            "{}",
            serde_json::to_string_pretty(&v).expect("serializable")
        );
    } else {
        outln!("game {} ({})", game.name, inst.env());
        outln!(
            "  reachable: {} markings, {} edges, depth {}",
            st.nodes,
            st.edges,
            st.depth
        );
        match &bad_path {
            Some(p) => outln!("  bad reachable: true (via {})", p.join(" ")),
            None => outln!("  bad reachable: false"),
        }
        outln!("  deadlocks: {deadlocks}");
        outln!("  contact-free: true");
    }
    Ok(())
}
