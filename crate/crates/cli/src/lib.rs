//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and writes the report; the binary only forwards to it.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patmine::plan::ExplorationPlan;
use patmine::{apps, DataGraph, Error, MatchConfig, MatchMode, Pattern};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "patmine", version, about = "Pattern-aware graph mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, env = "PM_THREADS", global = true)]
    threads: Option<usize>,
    /// Vertex label file with `vertex label` lines.
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Edge,
    Vertex,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert an edge list to a binary snapshot.
    Convert {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Count vertex-induced motifs of size k.
    Motifs {
        #[arg(short)]
        k: usize,
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Count k-cliques.
    Cliques {
        #[arg(short)]
        k: usize,
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Frequent labeled subgraphs by MNI support.
    Fsm {
        #[arg(long)]
        tau: u64,
        #[arg(long, default_value_t = 3)]
        max_edges: usize,
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Count matches of every pattern in a pattern file.
    Match {
        patterns: PathBuf,
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Edge)]
        mode: Mode,
        #[arg(long)]
        no_symmetry_breaking: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Whether a k-clique exists; stops at the first one.
    Exists {
        #[arg(short)]
        k: usize,
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Whether the global clustering coefficient reaches a bound.
    Cc {
        #[arg(long)]
        bound: f64,
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the exploration plan of every pattern in a pattern file.
    Plan {
        patterns: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Edge)]
        mode: Mode,
        #[arg(long)]
        no_symmetry_breaking: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn config(common: &Common) -> MatchConfig {
    match common.threads {
        Some(t) => MatchConfig::with_threads(t),
        None => MatchConfig::default(),
    }
}

fn match_mode(m: Mode) -> MatchMode {
    match m {
        Mode::Edge => MatchMode::EdgeInduced,
        Mode::Vertex => MatchMode::VertexInduced,
    }
}

fn load_graph(path: &Path, common: &Common) -> Result<DataGraph, Error> {
    Ok(DataGraph::load(path, common.labels.as_deref())?)
}

fn load_patterns(path: &Path) -> Result<Vec<Pattern>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(Pattern::parse_many(&text)?)
}

struct Report {
    lines: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn header(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("# {key} {value}"));
    }

    fn row(&mut self, row: String) {
        self.lines.push(row);
    }
}

fn graph_header(r: &mut Report, path: &Path, cfg: &MatchConfig) {
    r.header("graph", path.display());
    r.header("threads", cfg.threads);
}

fn execute(cmd: Command, r: &mut Report) -> Result<(), Error> {
    match cmd {
        Command::Convert { input, output, common } => {
            let g = load_graph(&input, &common)?;
            g.save_snapshot(&output)?;
            r.header("graph", input.display());
            r.header("snapshot", output.display());
            r.row(format!("vertices {}", g.vertex_count()));
            r.row(format!("edges {}", g.edge_count()));
        }
        Command::Motifs { k, graph, common } => {
            let cfg = config(&common);
            let g = load_graph(&graph, &common)?;
            graph_header(r, &graph, &cfg);
            for m in apps::motif_count(k, &g, &cfg)? {
                r.row(format!("{} {}", m.name, m.count));
            }
        }
        Command::Cliques { k, graph, common } => {
            let cfg = config(&common);
            let g = load_graph(&graph, &common)?;
            graph_header(r, &graph, &cfg);
            r.row(format!("clique{k} {}", apps::clique_count(k, &g, &cfg)?));
        }
        Command::Fsm {
            tau,
            max_edges,
            graph,
            common,
        } => {
            let cfg = config(&common);
            let g = load_graph(&graph, &common)?;
            graph_header(r, &graph, &cfg);
            let mut rows: Vec<(usize, String, u64)> = apps::fsm(&g, max_edges, tau, &cfg)?
                .into_iter()
                .map(|f| (f.pattern.edge_count(), f.pattern.describe(), f.support))
                .collect();
            rows.sort();
            for (_, d, s) in rows {
                r.row(format!("{d}\t{s}"));
            }
        }
        Command::Match {
            patterns,
            graph,
            mode,
            no_symmetry_breaking,
            common,
        } => {
            let mut cfg = config(&common).mode(match_mode(mode));
            cfg.symmetry_breaking = !no_symmetry_breaking;
            let ps = load_patterns(&patterns)?;
            let g = load_graph(&graph, &common)?;
            graph_header(r, &graph, &cfg);
            for (i, c) in apps::pattern_match(&ps, &g, &cfg)?.into_iter().enumerate() {
                r.row(format!("p{} {c}", i + 1));
            }
        }
        Command::Exists { k, graph, common } => {
            let cfg = config(&common);
            let g = load_graph(&graph, &common)?;
            graph_header(r, &graph, &cfg);
            let (found, _) = apps::exists_clique(k, &g, &cfg)?;
            r.row(format!("clique{k} {found}"));
        }
        Command::Cc { bound, graph, common } => {
            let cfg = config(&common);
            let g = load_graph(&graph, &common)?;
            graph_header(r, &graph, &cfg);
            let out = apps::cc_bound(&g, bound, &cfg)?;
            r.row(format!("triplets {}", out.triplets));
            r.row(format!("cc>={bound} {}", out.holds));
        }
        Command::Plan {
            patterns,
            mode,
            no_symmetry_breaking,
            common: _,
        } => {
            r.header("patterns", patterns.display());
            for (i, p) in load_patterns(&patterns)?.iter().enumerate() {
                let p = match match_mode(mode) {
                    MatchMode::EdgeInduced => p.clone(),
                    MatchMode::VertexInduced => p.to_vertex_induced(),
                };
                let plan = ExplorationPlan::generate_with(&p, !no_symmetry_breaking)
                    .map_err(|e| Error::Config(format!("pattern {}: {e}", i + 1)))?;
                if i > 0 {
                    r.row(String::new());
                }
                r.row(plan.explain().trim_end().to_string());
            }
        }
    }
    Ok(())
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code. Timing goes to `err` so that `out` is stable.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let started = Instant::now();
    let mut report = Report::new();
    let result = execute(cli.command, &mut report);
    let _ = writeln!(err, "# elapsed-ms {}", started.elapsed().as_millis());
    match result {
        Ok(()) => {
            for line in &report.lines {
                if writeln!(out, "{line}").is_err() {
                    return EXIT_DATA;
                }
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}
