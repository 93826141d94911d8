//! Command-line front end.

pub mod verify;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::kasteleyn::{char_poly, partition_function};
use crate::laplacian::kernel::star_condition_probe;
use crate::lattice::{parse_graph_spec, PeriodicGraph, TorusInstance, WiredInstance};
use crate::numeric::{format_rational, parse_rational};
use crate::phase::{phase_scan_graph, ScanGrid, SlopeModel, TORUS_SAMPLES};
use crate::sampler::torus::stats_csv;
use crate::sampler::{wilson_samples, Network, ScanOrder, TorusEnsemble};
use crate::temperley::{dump_configs, enumerate_dimers, DEFAULT_CAP};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug, Clone)]
#[command(name = "toridimer", version, about = "Toroidal dimers, spanning forests and magnetic phase diagrams")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON graph spec; overrides --graph.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Built-in graph: `uniform`, `drifted` or `drifted:a,b,c,d`.
    #[arg(long, global = true, default_value = "uniform")]
    pub graph: String,
    /// Torus or box size.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub bx: f64,
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub by: f64,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Rational arithmetic where a check has a float and an exact variant.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Identity suite on tori n = 1, 2 and wired boxes n = 3, 4.
    Verify,
    /// Characteristic polynomial of the n-torus.
    Charpoly,
    /// Partition function and the calibrated sign pattern.
    Partition,
    /// All dimer configurations of the n-torus, one JSON line each.
    Enumerate,
    /// Wilson spanning trees of the wired n-box.
    SampleWilson,
    /// Exact OCRSF-pair samples of the n-torus in the field (bx, by).
    SampleTorus,
    /// Connectivity and height statistics along the ray t (bx, by), t in [0, 1].
    Stats {
        #[arg(long, default_value_t = 0)]
        steps: usize,
    },
    /// Phase diagram over [-w, w]^2.
    Scan {
        #[arg(long, default_value_t = 3.0)]
        half_width: f64,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long, default_value_t = TORUS_SAMPLES)]
        torus_samples: usize,
        /// Attach finite-torus slopes from n = 1, 2.
        #[arg(long)]
        finite: bool,
        /// Plot JSON (amoeba boundary, components, Newton polygon).
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Green-matrix decay and convergence across wired sizes.
    ProbeStar {
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        radius: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Charpoly => "charpoly",
            Command::Partition => "partition",
            Command::Enumerate => "enumerate",
            Command::SampleWilson => "sample-wilson",
            Command::SampleTorus => "sample-torus",
            Command::Stats { .. } => "stats",
            Command::Scan { .. } => "scan",
            Command::ProbeStar { .. } => "probe-star",
        }
    }
}

/// Text produced by a command and whether it succeeded.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub text: String,
    pub success: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, success: true }
    }
}

pub fn builtin_graph(name: &str) -> Result<PeriodicGraph> {
    let bad = || Error::InvalidInput(format!("unknown graph '{name}'"));
    match name {
        "uniform" => Ok(PeriodicGraph::uniform_grid()),
        "drifted" => builtin_graph("drifted:1,2,3,4"),
        _ => {
            let ws = name.strip_prefix("drifted:").ok_or_else(bad)?;
            let w: Vec<_> = ws.split(',').map(|t| parse_rational(t.trim()).ok_or_else(bad)).collect::<Result<_>>()?;
            if w.len() != 4 {
                return Err(bad());
            }
            let mut g = PeriodicGraph::drifted_grid(w[0].clone(), w[1].clone(), w[2].clone(), w[3].clone());
            g.name = format!("drifted square grid ({ws})");
            Ok(g)
        }
    }
}

pub fn load_graph(c: &Common) -> Result<PeriodicGraph> {
    match &c.spec {
        Some(p) => parse_graph_spec(&std::fs::read_to_string(p)?),
        None => builtin_graph(&c.graph),
    }
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    let g = load_graph(c)?;
    let b = [c.bx, c.by];
    match &cli.command {
        Command::Verify => {
            let r = verify::run_suite(&g, c.exact);
            let success = r.passed;
            let mut v = serde_json::to_value(&r)?;
            v["version"] = json!(VERSION);
            v["seed"] = json!(c.seed);
            Ok(Outcome { text: pretty(&v)?, success })
        }
        Command::Charpoly => {
            let t = TorusInstance::new(&g, c.n.unwrap_or(1))?;
            Ok(Outcome::ok(format!("{}\n", char_poly(&t)?.poly)))
        }
        Command::Partition => {
            let n = c.n.unwrap_or(1);
            let pf = partition_function(&TorusInstance::new(&g, n)?, DEFAULT_CAP)?;
            pretty(&json!({
                "version": VERSION,
                "graph": g.name,
                "n": n,
                "Z": format_rational(&pf.value),
                "pattern": pf.pattern,
                "dets": pf.dets.iter().map(format_rational).collect::<Vec<_>>(),
                "matching_patterns": pf.matching_patterns,
            }))
            .map(Outcome::ok)
        }
        Command::Enumerate => {
            let t = TorusInstance::new(&g, c.n.unwrap_or(1))?;
            Ok(Outcome::ok(dump_configs(&t, &enumerate_dimers(&t.double, DEFAULT_CAP)?)?))
        }
        Command::SampleWilson => {
            let n = c.n.unwrap_or(3);
            let net = Network::from_wired(&WiredInstance::new(&g, n)?)?;
            let trees = wilson_samples(&net, c.samples.unwrap_or(1), c.seed, ScanOrder::LowestFirst)?;
            pretty(&json!({ "version": VERSION, "seed": c.seed, "graph": g.name, "n": n, "trees": trees }))
                .map(Outcome::ok)
        }
        Command::SampleTorus => {
            let n = c.n.unwrap_or(2);
            let e = TorusEnsemble::new(&TorusInstance::new(&g, n)?, DEFAULT_CAP)?;
            let samples: Vec<_> = e
                .sample_indices(b, c.samples.unwrap_or(1), c.seed)
                .into_iter()
                .map(|i| {
                    let r = &e.records[i];
                    json!({
                        "index": i,
                        "primal": r.pair.primal,
                        "dual": r.pair.dual,
                        "weight": format_rational(&r.weight),
                        "height": r.height,
                        "components": r.components,
                        "connected": r.connected,
                    })
                })
                .collect();
            pretty(&json!({
                "version": VERSION, "seed": c.seed, "graph": g.name, "n": n, "B": b, "v1": e.v1, "v2": e.v2,
                "samples": samples,
            }))
            .map(Outcome::ok)
        }
        Command::Stats { steps } => {
            let n = c.n.unwrap_or(2);
            let e = TorusEnsemble::new(&TorusInstance::new(&g, n)?, DEFAULT_CAP)?;
            let rows: Vec<_> = (0..=*steps)
                .map(|i| {
                    let t = if *steps == 0 { 1.0 } else { i as f64 / *steps as f64 };
                    let bt = [t * b[0] + 0.0, t * b[1] + 0.0];
                    match (c.samples, c.exact) {
                        (Some(s), false) => e.sampled_stats(bt, s, c.seed),
                        _ => e.stats(bt),
                    }
                })
                .collect();
            Ok(Outcome::ok(stats_csv(&rows)))
        }
        Command::Scan { half_width, points, torus_samples, finite, plot } => {
            let grid = ScanGrid { torus_samples: *torus_samples, ..ScanGrid::square(*half_width, *points) };
            let model = if *finite { Some(SlopeModel::new(&g, &[1, 2], DEFAULT_CAP)?) } else { None };
            let scan = phase_scan_graph(&g, grid, model.as_ref())?;
            if let Some(p) = plot {
                std::fs::write(p, pretty(&scan.plot_data())?)?;
            }
            eprintln!("bounded components: {}", scan.bounded_components().len());
            Ok(Outcome::ok(scan.to_csv()))
        }
        Command::ProbeStar { sizes, radius } => {
            let p = star_condition_probe(&g, sizes, *radius)?;
            eprintln!("decay: {}, converging: {}", p.decay, p.converging);
            Ok(Outcome::ok(p.to_csv()))
        }
    }
}

/// Parses, runs, writes the output and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    eprintln!("toridimer {VERSION} {} seed={}", cli.command.name(), cli.common.seed);
    let outcome = execute(&cli).and_then(|o| {
        match &cli.common.out {
            Some(p) => std::fs::write(p, &o.text)?,
            None => std::io::stdout().write_all(o.text.as_bytes())?,
        }
        Ok(o)
    });
    match outcome {
        Ok(o) if o.success => 0,
        Ok(_) => {
            eprintln!("error: {} reported failures", cli.command.name());
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
