use std::fs;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use elicit::catalogs::{self, Catalog, CvssVector, RenderedPair};
use elicit::encoding::{run_to_completion, Answer, Session, SessionLog, SessionOptions, WeakOrderOracle};
use elicit::graph::{ConstraintGraph, ElementId};
use elicit::metrics::{compare_all, random_baseline, rows_to_csv};
use elicit::prioritization::{prioritize, render_ranking, render_sizes};
use elicit::scoring::{feasible_distances, generate_scores, validate_rational, ScoringConfig};
use elicit::service::{serve, AppState};
use elicit::unification::{unify, unify_with_degrees};

#[derive(Parser)]
#[command(name = "elicit", version, about = "Pairwise judgment elicitation and score generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an encoding session, interactively or against a scripted oracle.
    Encode(EncodeArgs),
    /// Rebuild a graph from a session log.
    Replay {
        log: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Unify graphs over the same elements.
    Unify {
        #[arg(required = true)]
        graphs: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Keep the raw degree-1 result without degree reattachment or reduction.
        #[arg(long)]
        raw: bool,
    },
    /// Generate a rational score assignment.
    Score(ScoreArgs),
    /// Sample feasible (d1, d2) distance pairs as CSV.
    Feasibility {
        graph: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        min: f64,
        #[arg(long, default_value_t = 10.0)]
        max: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print ranked equivalency sets, most significant first.
    Prioritize {
        graph: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Pairwise inconsistency and ordering distances as a CSV matrix.
    Compare {
        #[arg(required = true, num_args = 2..)]
        graphs: Vec<PathBuf>,
    },
    /// Mean distances between random permutations.
    Baseline {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a CVSS catalog: all legal vectors, or the most frequent ones.
    CvssCatalog {
        /// "vector,count" CSV to rank by frequency.
        #[arg(long)]
        frequency: Option<PathBuf>,
        /// Keep the shortest prefix reaching this share of all counts.
        #[arg(long)]
        coverage: Option<f64>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Validate a control catalog (JSON or CSV) and emit catalog JSON.
    ControlCatalog {
        file: PathBuf,
        #[arg(long)]
        expect_subcategories: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "CATALOG")]
        catalog: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EncodeArgs {
    /// Catalog JSON; defaults to the oracle's elements.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Weak-order oracle JSON; without it questions are asked on the terminal.
    #[arg(long)]
    oracle: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_equal: bool,
    #[arg(long)]
    no_degree2: bool,
    #[arg(long, default_value = "default")]
    catalog_ref: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    graph: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    min: f64,
    #[arg(long, default_value_t = 10.0)]
    max: f64,
    #[arg(long)]
    d1: f64,
    #[arg(long)]
    d2: f64,
    #[arg(long, default_value_t = 1)]
    decimals: u32,
    /// Fixed score, as id=value; repeatable.
    #[arg(long = "peg")]
    pegs: Vec<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<ConstraintGraph> {
    ConstraintGraph::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn parse_answer(s: &str) -> Option<Answer> {
    Some(match s.trim() {
        "<<" | "1" => Answer::MuchLess,
        "<" | "2" => Answer::Less,
        "=" | "3" => Answer::Equal,
        ">" | "4" => Answer::Greater,
        ">>" | "5" => Answer::MuchGreater,
        _ => return None,
    })
}

fn print_pair(catalog: Option<&Catalog>, new: &ElementId, probe: &ElementId) {
    match catalog.and_then(|c| catalogs::render_pair(c, new.as_str(), probe.as_str())) {
        Some(RenderedPair::Cvss { hints }) => {
            for h in hints {
                let mark = if h.shared { "  " } else { "* " };
                println!("  {mark}{:<3} {:<2} | {}", h.metric, h.left, h.right);
            }
        }
        Some(RenderedPair::Text { left, right }) => {
            println!("  A: {} {}\n     {}", left.id, left.title, left.description);
            println!("  B: {} {}\n     {}", right.id, right.title, right.description);
        }
        None => println!("  A: {new}\n  B: {probe}"),
    }
}

fn encode(args: EncodeArgs) -> Result<()> {
    let catalog = args.catalog.as_deref().map(Catalog::load).transpose()?;
    let oracle = match &args.oracle {
        Some(p) => Some(WeakOrderOracle::from_json(&read(p)?)?),
        None => None,
    };
    let elements = match (&catalog, &oracle) {
        (Some(c), _) => c.element_ids(),
        (None, Some(o)) => o.elements(),
        (None, None) => bail!("encode needs --catalog or --oracle"),
    };
    let options = SessionOptions {
        allow_equal: !args.no_equal,
        allow_degree2: !args.no_degree2,
        insertion_order: elements.clone(),
        rng_seed: args.seed,
    };
    let mut session = Session::start(args.catalog_ref, &elements, options)?;
    match oracle {
        Some(mut o) => run_to_completion(&mut session, &mut o, chrono::Utc::now)?,
        None => {
            let stdin = io::stdin();
            let mut lines = stdin.lock().lines();
            while let Ok(q) = session.next_question() {
                println!(
                    "\nQuestion {} (about {} in total). How does A compare to B?",
                    session.answer_count() + 1,
                    session.expected_questions()
                );
                print_pair(catalog.as_ref(), &q.new_element, &q.probe);
                loop {
                    print!("  [<< < = > >>] ");
                    io::stdout().flush()?;
                    let line = lines.next().ok_or_else(|| anyhow!("input ended"))??;
                    match parse_answer(&line) {
                        Some(a) if a.is_permitted(session.options()) => {
                            session.submit_answer(a)?;
                            break;
                        }
                        _ => println!("  not a permitted answer"),
                    }
                }
            }
        }
    }
    if let Some(p) = &args.log {
        fs::write(p, session.log().to_json())?;
    }
    emit(args.output.as_deref(), &session.graph()?.to_json())
}

fn score(args: ScoreArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let mut cfg = ScoringConfig::new(args.min, args.max, args.d1, args.d2, args.decimals);
    for p in &args.pegs {
        let (id, v) = p.split_once('=').ok_or_else(|| anyhow!("peg must be id=value: {p}"))?;
        cfg = cfg.with_peg(id, v.parse::<f64>().with_context(|| format!("peg value {v}"))?);
    }
    let a = generate_scores(&g, &cfg)?;
    let violations = validate_rational(&g, &cfg, &a.element_scores());
    if !violations.is_empty() {
        bail!("generated scores are not rational: {violations:?}");
    }
    emit(args.output.as_deref(), &a.to_json())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(args) => encode(args),
        Command::Replay { log, output } => {
            let log = SessionLog::from_json(&read(&log)?)?;
            let session = Session::replay(&log, &log.options.insertion_order)?;
            emit(output.as_deref(), &session.graph()?.to_json())
        }
        Command::Unify { graphs, output, report, raw } => {
            let graphs = graphs.iter().map(|p| load_graph(p)).collect::<Result<Vec<_>>>()?;
            let (g, r) = if raw { unify(&graphs)? } else { unify_with_degrees(&graphs)? };
            if let Some(p) = report {
                fs::write(p, serde_json::to_string_pretty(&r)? + "\n")?;
            }
            eprintln!(
                "applied {} disputed {} contradictory {} of {} pairs",
                r.applied,
                r.disputed,
                r.contradictory,
                r.pairs.len()
            );
            emit(output.as_deref(), &g.to_json())
        }
        Command::Score(args) => score(args),
        Command::Feasibility { graph, min, max, step, output } => {
            let g = load_graph(&graph)?;
            emit(output.as_deref(), &feasible_distances(&g, min, max, step).to_csv())
        }
        Command::Prioritize { graph, json } => {
            let sets = prioritize(&load_graph(&graph)?);
            if json {
                println!("{}", serde_json::to_string_pretty(&sets)?);
            } else {
                println!("{}", render_sizes(&sets));
                print!("{}", render_ranking(&sets));
            }
            Ok(())
        }
        Command::Compare { graphs } => {
            let named = graphs
                .iter()
                .map(|p| Ok((p.display().to_string(), load_graph(p)?)))
                .collect::<Result<Vec<_>>>()?;
            print!("{}", rows_to_csv(&compare_all(&named)?));
            Ok(())
        }
        Command::Baseline { n, samples, seed } => {
            println!("{}", serde_json::to_string_pretty(&random_baseline(n, samples, seed))?);
            Ok(())
        }
        Command::CvssCatalog { frequency, coverage, top, output } => {
            let mut vectors: Vec<CvssVector> = match &frequency {
                Some(p) => {
                    let ranked = catalogs::load_frequency_ranked(p)?;
                    let kept = match coverage {
                        Some(c) => catalogs::top_covering(&ranked, c),
                        None => &ranked[..],
                    };
                    if let Some(last) = kept.last() {
                        eprintln!("{} vectors cover {:.2}%", kept.len(), last.cumulative * 100.0);
                    }
                    kept.iter().map(|r| r.vector).collect()
                }
                None => CvssVector::enumerate(),
            };
            if let Some(k) = top {
                vectors.truncate(k);
            }
            emit(output.as_deref(), &Catalog::cvss(&vectors)?.to_json())
        }
        Command::ControlCatalog { file, expect_subcategories, output } => {
            let entries = catalogs::load_control_catalog(&file, expect_subcategories)?;
            emit(output.as_deref(), &Catalog::controls(&entries)?.to_json())
        }
        Command::Serve { data_dir, port, catalog } => {
            let catalog = catalog.as_deref().map(Catalog::load).transpose()?;
            let state = AppState::new(data_dir, catalog)?;
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            eprintln!("listening on {addr}");
            tokio::runtime::Runtime::new()?.block_on(serve(state, addr))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = serde_json::json!({ "error": format!("{e:#}") });
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
