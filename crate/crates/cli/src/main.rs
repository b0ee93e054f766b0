use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lmodel::collide::{detect_all, PairsFile};
use lmodel::families::{self, Dixon1Params, Dixon2Params, S2Params, Sign};
use lmodel::plan::{self, HeightsFile, PartitionDecision};
use lmodel::{
    CollisionGraph, CollisionPair, DetectionConfig, Existence, Interval, MotionExpr, MovingGraph,
    Partition,
};
use serde::Serialize;
use serde_json::json;

/// Collision detection and height planning for L-models of moving planar graphs.
#[derive(Parser)]
#[command(name = "lmodel", version)]
struct Cli {
    /// Time samples (per pair for `detect`, per edge for `validate`).
    #[arg(long, global = true, value_name = "N")]
    samples: Option<usize>,
    /// Gap below which a pair counts as colliding.
    #[arg(long, global = true, value_name = "X")]
    eps: Option<f64>,
    /// Time interval `a:b`; each end may be an expression such as `2*pi`.
    #[arg(long, global = true, value_name = "A:B")]
    interval: Option<String>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write the collision graph in DOT format.
    #[arg(long, global = true, value_name = "PATH")]
    dot: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the motion file of a standard flexible family.
    Generate(GenerateArgs),
    /// Check that every edge keeps its length along the motion.
    Validate {
        graph: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Find all vertex/edge collision pairs.
    Detect {
        graph: PathBuf,
        /// Include the smallest gap of every non-colliding pair.
        #[arg(long)]
        margins: bool,
    },
    /// Print the collision graph in DOT format.
    Cgraph {
        pairs: PathBuf,
        /// Motion file; defaults to the one recorded in the pairs file.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Split the collision graph and assign heights, or explain why no split exists.
    Plan {
        graph: PathBuf,
        pairs: PathBuf,
        /// Use this upper part (comma-separated edge names) instead of searching.
        #[arg(long, value_delimiter = ',')]
        upper: Option<Vec<String>>,
    },
    /// Check a height file against the collision pairs.
    Verify {
        graph: PathBuf,
        pairs: PathBuf,
        heights: PathBuf,
    },
    /// Decide exactly whether any collision-free height assignment exists.
    Exists { graph: PathBuf, pairs: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Dixon1,
    Dixon2,
    S2,
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// dixon1: comma-separated radii of p1..; dixon2, s2: a single value.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// dixon1: comma-separated radii of q1..; dixon2, s2: a single value.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    d: Option<String>,
    /// dixon1: signs of p1.., e.g. `+,-,+`.
    #[arg(long, allow_hyphen_values = true)]
    sx: Option<String>,
    /// dixon1: signs of q1.., e.g. `+,-`.
    #[arg(long, allow_hyphen_values = true)]
    sy: Option<String>,
}

#[derive(Serialize, Default)]
struct RunReport {
    command: &'static str,
    timings: Vec<Timing>,
    counts: Counts,
    outcome: String,
}

#[derive(Serialize)]
struct Timing {
    stage: String,
    ms: f64,
}

#[derive(Serialize, Default)]
struct Counts {
    #[serde(skip_serializing_if = "Option::is_none")]
    vertices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arcs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    two_cycles: Option<usize>,
}

impl RunReport {
    fn new(command: &'static str) -> Self {
        RunReport {
            command,
            ..Default::default()
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = f();
        self.timings.push(Timing {
            stage: stage.to_string(),
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        value
    }

    fn graph(&mut self, g: &MovingGraph) {
        self.counts.vertices = Some(g.graph().vertex_count());
        self.counts.edges = Some(g.graph().edge_count());
    }

    fn collision_graph(&mut self, c: &CollisionGraph) {
        self.counts.arcs = Some(c.arc_count());
        self.counts.two_cycles = Some(c.multi_edged_subgraph().edges.len());
    }
}

/// Exit status: success or a mathematical yes.
const YES: u8 = 0;
/// A mathematical no: no partition, not collision-free, no arrangement.
const NO: u8 = 1;
/// Usage or data error.
const FAILURE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut report = RunReport::new(cli.command.name());
    let status = match run(&cli, &mut report) {
        Ok(status) => status,
        Err(err) => {
            eprintln!("error: {err:#}");
            report.outcome = "error".into();
            FAILURE
        }
    };
    eprintln!(
        "{}",
        serde_json::to_string(&report).expect("report serializes")
    );
    ExitCode::from(status)
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Validate { .. } => "validate",
            Command::Detect { .. } => "detect",
            Command::Cgraph { .. } => "cgraph",
            Command::Plan { .. } => "plan",
            Command::Verify { .. } => "verify",
            Command::Exists { .. } => "exists",
        }
    }
}

fn run(cli: &Cli, report: &mut RunReport) -> Result<u8> {
    match &cli.command {
        Command::Generate(args) => {
            let mut g = generate(args)?;
            if let Some(domain) = interval(cli)? {
                g = g.with_domain(domain);
            }
            report.graph(&g);
            report.outcome = "generated".into();
            emit(cli, &g.to_json())?;
            Ok(YES)
        }
        Command::Validate { graph, tol } => {
            let g = load_graph(cli, graph)?;
            report.graph(&g);
            let samples = cli.samples.unwrap_or(512);
            let lengths = report.time("validate", || g.validate_edge_lengths(samples, *tol))?;
            for v in &lengths.isolated_vertices {
                eprintln!("warning: vertex `{v}` has no edges");
            }
            warn_if_not_periodic(&g)?;
            report.outcome = if lengths.pass { "pass" } else { "fail" }.into();
            emit(cli, &pretty(&lengths))?;
            Ok(if lengths.pass { YES } else { NO })
        }
        Command::Detect { graph, margins } => {
            let g = load_graph(cli, graph)?;
            report.graph(&g);
            warn_if_not_periodic(&g)?;
            let mut cfg = DetectionConfig {
                report_margin: *margins,
                ..Default::default()
            };
            if let Some(samples) = cli.samples {
                cfg.samples = samples;
            }
            if let Some(eps) = cli.eps {
                cfg.collide_eps = eps;
            }
            let detection = report.time("detect", || detect_all(&g, &cfg))?;
            for scan in detection.ambiguous() {
                let p = scan.to_pair(g.graph());
                eprintln!(
                    "warning: ({}, {}-{}) has minimum gap {:e}, within ten times the collision threshold",
                    p.vertex, p.edge[0], p.edge[1], scan.min_gap
                );
            }
            let file = PairsFile::from_detection(&graph.to_string_lossy(), g.graph(), &detection);
            report.counts.pairs = Some(file.pairs.len());
            let c = CollisionGraph::build(g.graph(), &file.pairs)?;
            report.collision_graph(&c);
            write_dot(cli, &c, &g)?;
            report.outcome = format!("{} pairs", file.pairs.len());
            emit(cli, &file.to_json())?;
            Ok(YES)
        }
        Command::Cgraph { pairs, graph } => {
            let file = load_pairs(pairs)?;
            let graph_path = match graph {
                Some(path) => path.clone(),
                None => recorded_graph(pairs, &file.graph),
            };
            let g = load_graph(cli, &graph_path)?;
            report.graph(&g);
            report.counts.pairs = Some(file.pairs.len());
            let c = CollisionGraph::build(g.graph(), &file.pairs)?;
            report.collision_graph(&c);
            write_dot(cli, &c, &g)?;
            report.outcome = format!("{} arcs", c.arc_count());
            emit(cli, &c.to_dot(g.graph()))?;
            Ok(YES)
        }
        Command::Plan {
            graph,
            pairs,
            upper,
        } => {
            let (g, pairs) = load_instance(cli, graph, pairs, report)?;
            let c = CollisionGraph::build(g.graph(), &pairs)?;
            report.collision_graph(&c);
            write_dot(cli, &c, &g)?;
            let partition = match upper {
                Some(names) => {
                    let ids = names
                        .iter()
                        .map(|name| {
                            g.graph()
                                .edge_by_name(name)
                                .ok_or_else(|| anyhow!("unknown edge `{name}`"))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Partition::from_upper(g.graph(), &ids)?
                }
                None => match report.time("partition", || plan::decide_partition(&c))? {
                    PartitionDecision::Found(p) => p,
                    PartitionDecision::NotBipartite {
                        component,
                        odd_cycle,
                    } => {
                        let names = |list: &[lmodel::EdgeId]| -> Vec<String> {
                            list.iter().map(|&e| g.graph().edge_name(e)).collect()
                        };
                        report.outcome = "no partition: odd cycle of two-cycles".into();
                        emit(
                            cli,
                            &pretty(&json!({
                                "partition": null,
                                "reason": "not_bipartite",
                                "component": names(&component),
                                "odd_cycle": names(&odd_cycle),
                            })),
                        )?;
                        return Ok(NO);
                    }
                    PartitionDecision::Exhausted => {
                        report.outcome = "no partition: every split leaves a cycle".into();
                        emit(
                            cli,
                            &pretty(&json!({ "partition": null, "reason": "exhausted" })),
                        )?;
                        return Ok(NO);
                    }
                },
            };
            let heights = report.time("heights", || {
                plan::assign_heights(g.graph(), &pairs, &partition)
            })?;
            let check = plan::verify_collision_free(g.graph(), &pairs, &heights)?;
            if !check.collision_free {
                bail!("planned heights fail verification: {:?}", check.violations);
            }
            report.outcome = "partition found".into();
            emit(cli, &heights.to_file(g.graph(), Some(&partition)).to_json())?;
            Ok(YES)
        }
        Command::Verify {
            graph,
            pairs,
            heights,
        } => {
            let (g, pairs) = load_instance(cli, graph, pairs, report)?;
            let text = read(heights)?;
            let file = HeightsFile::from_json(&text)
                .with_context(|| format!("parsing {}", heights.display()))?;
            let h = lmodel::HeightAssignment::from_file(g.graph(), &file)?;
            let result = report.time("verify", || {
                plan::verify_collision_free(g.graph(), &pairs, &h)
            })?;
            report.outcome = if result.collision_free {
                "collision-free"
            } else {
                "violations"
            }
            .into();
            emit(cli, &pretty(&result))?;
            Ok(if result.collision_free { YES } else { NO })
        }
        Command::Exists { graph, pairs } => {
            let (g, pairs) = load_instance(cli, graph, pairs, report)?;
            match report.time("search", || plan::exists_arrangement(g.graph(), &pairs))? {
                Existence::Yes(h) => {
                    report.outcome = "arrangement exists".into();
                    let file = h.to_file(g.graph(), None);
                    emit(
                        cli,
                        &pretty(&json!({ "exists": true, "heights": file.heights })),
                    )?;
                    Ok(YES)
                }
                Existence::No => {
                    report.outcome = "no arrangement".into();
                    emit(cli, &pretty(&json!({ "exists": false })))?;
                    Ok(NO)
                }
            }
        }
    }
}

fn generate(args: &GenerateArgs) -> Result<MovingGraph> {
    let g = match args.family {
        Family::Dixon1 => {
            let (m, n) = match (args.m, args.n) {
                (Some(m), Some(n)) => (m, n),
                _ => bail!("dixon1 needs --m and --n"),
            };
            let mut p = Dixon1Params::uniform(m, n);
            if let Some(a) = &args.a {
                p.a = list(a, value)?;
            }
            if let Some(b) = &args.b {
                p.b = list(b, value)?;
            }
            if let Some(sx) = &args.sx {
                p.sx = list(sx, |s| s.parse::<Sign>().map_err(|e| anyhow!("{e}")))?;
            }
            if let Some(sy) = &args.sy {
                p.sy = list(sy, |s| s.parse::<Sign>().map_err(|e| anyhow!("{e}")))?;
            }
            families::dixon1(&p)?
        }
        Family::Dixon2 => {
            if args.c.is_some() {
                bail!("dixon2 derives c from a, b, d; drop --c");
            }
            let a = optional(&args.a, 1.0)?;
            let b = optional(&args.b, 2.0)?;
            let d = optional(&args.d, 3.0)?;
            families::dixon2(&Dixon2Params::new(a, b, d)?)?
        }
        Family::S2 => {
            let defaults = S2Params::default();
            families::s2(&S2Params {
                a: optional(&args.a, defaults.a)?,
                b: optional(&args.b, defaults.b)?,
                c: optional(&args.c, defaults.c)?,
            })?
        }
    };
    Ok(g)
}

/// A constant such as `1.5`, `11/5` or `sqrt(2)`.
fn value(text: &str) -> Result<f64> {
    let expr: MotionExpr = text
        .trim()
        .parse()
        .with_context(|| format!("bad number `{text}`"))?;
    let x = expr
        .eval(0.0)
        .with_context(|| format!("bad number `{text}`"))?;
    if expr.eval(1.0).ok() != Some(x) {
        bail!("`{text}` depends on t; expected a constant");
    }
    Ok(x)
}

fn optional(text: &Option<String>, default: f64) -> Result<f64> {
    text.as_deref().map_or(Ok(default), value)
}

fn list<T>(text: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|s| parse(s.trim())).collect()
}

fn interval(cli: &Cli) -> Result<Option<Interval>> {
    let Some(text) = &cli.interval else {
        return Ok(None);
    };
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("--interval must look like a:b"))?;
    Ok(Some(Interval::new(value(a)?, value(b)?)?))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(cli: &Cli, path: &Path) -> Result<MovingGraph> {
    let g = MovingGraph::from_json(&read(path)?)
        .with_context(|| format!("loading {}", path.display()))?;
    Ok(match interval(cli)? {
        Some(domain) => g.with_domain(domain),
        None => g,
    })
}

fn load_pairs(path: &Path) -> Result<PairsFile> {
    PairsFile::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_instance(
    cli: &Cli,
    graph: &Path,
    pairs: &Path,
    report: &mut RunReport,
) -> Result<(MovingGraph, Vec<CollisionPair>)> {
    let g = load_graph(cli, graph)?;
    let file = load_pairs(pairs)?;
    lmodel::collide::resolve_pairs(g.graph(), &file.pairs).with_context(|| {
        format!(
            "pairs in {} do not fit {}",
            pairs.display(),
            graph.display()
        )
    })?;
    report.graph(&g);
    report.counts.pairs = Some(file.pairs.len());
    Ok((g, file.pairs))
}

/// The graph path stored in a pairs file, taken as given if it exists and
/// otherwise relative to the pairs file.
fn recorded_graph(pairs: &Path, recorded: &str) -> PathBuf {
    let direct = PathBuf::from(recorded);
    if direct.exists() {
        return direct;
    }
    pairs
        .parent()
        .map_or(direct.clone(), |dir| dir.join(&direct))
}

fn warn_if_not_periodic(g: &MovingGraph) -> Result<()> {
    if !g.returns_to_start(1e-9)? {
        eprintln!(
            "warning: motion does not return to its start on {}; collisions outside it are not searched",
            g.domain()
        );
    }
    Ok(())
}

fn write_dot(cli: &Cli, c: &CollisionGraph, g: &MovingGraph) -> Result<()> {
    if let Some(path) = &cli.dot {
        fs::write(path, c.to_dot(g.graph()))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("output serializes");
    out.push('\n');
    out
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
