//! Command-line entry point.
//!
//! Exit codes: 0 success; 1 legitimate negative result (non-Hamiltonian,
//! failed verification); 2 usage error; 3 internal cap/budget error
//! (sampler resample cap, engine gave up, oracle budget).

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hamcond::engine::{find_hamilton, FindPolicy};
use hamcond::experiments::{
    self, Estimator, ExperimentConfig, ExperimentResult,
};
use hamcond::graph::{parse_edge_list, verify_hamilton_cycle, write_edge_list, Digraph};
use hamcond::oracle;
use hamcond::params::{Parameters, Profile};
use hamcond::sampler::sample_simple_digraph;

#[derive(Parser)]
#[command(
    name = "hamcond",
    about = "Random digraphs with minimum degree one: sampling, Hamilton cycles, counting, experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Edgelist,
}

#[derive(Args)]
struct CommonOut {
    /// Write the primary artifact here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a uniform simple digraph with m edges and min in/out degree 1
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// RNG seed (the run is a pure function of it)
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "desk")]
        profile: ProfileArg,
        /// Output format: edgelist (default) or json {edges, diagnostics}
        #[arg(long, value_enum, default_value = "edgelist")]
        format: Format,
        #[command(flatten)]
        out: CommonOut,
    },
    /// Find a Hamilton cycle (sampling a digraph, or reading one with --in)
    Hamilton {
        /// Edge-list file ("n m" header, then "u v" lines); mutually
        /// exclusive with --n/--m
        #[arg(long, conflicts_with_all = ["n", "m"])]
        r#in: Option<PathBuf>,
        #[arg(long, required_unless_present = "in")]
        n: Option<usize>,
        #[arg(long, required_unless_present = "in")]
        m: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "desk")]
        profile: ProfileArg,
        /// Consult the exact oracle when the engine gives up (small n)
        #[arg(long)]
        exact_fallback: bool,
        #[command(flatten)]
        out: CommonOut,
    },
    /// Count digraphs with min degree one: exact (enumeration/bracketing)
    /// and asymptotic formulas
    Count {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Insist on an exact count (errors if infeasible)
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        out: CommonOut,
    },
    /// Verify that a cycle file is a Hamilton cycle of a digraph
    Verify {
        #[arg(long)]
        r#in: PathBuf,
        /// Whitespace-separated vertex ids
        #[arg(long)]
        cycle: PathBuf,
    },
    /// Monte Carlo experiment sweeps
    Experiment {
        #[command(subcommand)]
        which: ExperimentCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Profile {
        match p {
            ProfileArg::Paper => Profile::Paper,
            ProfileArg::Desk => Profile::Desk,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    n: usize,
    /// c values in m = ceil((n/2)(log n + 2 log log n + c)); repeatable
    #[arg(long = "c", required = true, allow_hyphen_values = true)]
    c_values: Vec<f64>,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "desk")]
    profile: ProfileArg,
    /// CSV table path (per-trial JSON sidecar lands at <out>.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a gnuplot script at <out>.gp
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Engine Hamiltonicity frequency vs the limit exp(-exp(-c)/8)
    Threshold {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Use the exact oracle instead of the engine (small n)
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        exact_fallback: bool,
    },
    /// Perfect-matching frequency of E1's bipartite image
    Matching {
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Obstruction-count law vs Poisson(exp(-c)/8)
    Obstruction {
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Chi-square uniformity over the enumerated support (small n, m)
    Uniformity {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Agreement of "no obstruction" with exact Hamiltonicity (small n)
    Equivalence {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn emit(out: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => std::io::stdout().write_all(content.as_bytes()),
    }
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Sample { n, m, seed, profile, format, out } => {
            let params = Parameters::new(n, m, profile.into());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match sample_simple_digraph(n, m, &mut rng, &params) {
                Err(e) => fail(EXIT_INTERNAL, &format!("sampler: {e}")),
                Ok((d, diag)) => {
                    let artifact = match format {
                        Format::Edgelist | Format::Csv => {
                            // diagnostics go to stderr so the artifact stays
                            // a plain edge list
                            eprintln!("{}", serde_json::to_string(&diag).unwrap());
                            write_edge_list(&d)
                        }
                        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
                            "n": n, "m": m, "edges": d.edges, "diagnostics": diag,
                        }))
                        .unwrap()
                            + "\n",
                    };
                    match emit(&out.out, &artifact) {
                        Ok(()) => ExitCode::SUCCESS,
                        Err(e) => fail(EXIT_INTERNAL, &format!("write: {e}")),
                    }
                }
            }
        }
        Command::Hamilton { r#in, n, m, seed, profile, exact_fallback, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d: Digraph = match &r#in {
                Some(path) => {
                    let text = match fs::read_to_string(path) {
                        Ok(t) => t,
                        Err(e) => return fail(EXIT_USAGE, &format!("--in {}: {e}", path.display())),
                    };
                    match parse_edge_list(&text) {
                        Ok(d) => d,
                        Err(e) => return fail(EXIT_USAGE, &format!("--in: {e}")),
                    }
                }
                None => {
                    let (n, m) = (n.unwrap(), m.unwrap());
                    let params = Parameters::new(n, m, profile.into());
                    match sample_simple_digraph(n, m, &mut rng, &params) {
                        Ok((d, _)) => d,
                        Err(e) => return fail(EXIT_INTERNAL, &format!("sampler: {e}")),
                    }
                }
            };
            let params = Parameters::new(d.n, d.edges.len().max(d.n), profile.into());
            let policy = FindPolicy { exact_fallback, ..FindPolicy::default() };
            let res = find_hamilton(&d, &params, &mut rng, &policy);
            let json = serde_json::to_string_pretty(&res).unwrap() + "\n";
            if emit(&out.out, &json).is_err() {
                return fail(EXIT_INTERNAL, "write failed");
            }
            if res.found {
                ExitCode::SUCCESS
            } else if res.certified_non_hamiltonian {
                ExitCode::from(EXIT_NEGATIVE)
            } else {
                ExitCode::from(EXIT_INTERNAL)
            }
        }
        Command::Count { n, m, exact, out } => match oracle::count_asymptotic(n, m, exact) {
            Err(e) => fail(EXIT_INTERNAL, &format!("count: {e}")),
            Ok(report) => {
                if exact && report.exact_count.is_none() {
                    return fail(
                        EXIT_USAGE,
                        "exact count infeasible at this size; drop --exact",
                    );
                }
                let json = serde_json::to_string_pretty(&report).unwrap() + "\n";
                match emit(&out.out, &json) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(EXIT_INTERNAL, &format!("write: {e}")),
                }
            }
        },
        Command::Verify { r#in, cycle } => {
            let text = match fs::read_to_string(&r#in) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_USAGE, &format!("--in {}: {e}", r#in.display())),
            };
            let d = match parse_edge_list(&text) {
                Ok(d) => d,
                Err(e) => return fail(EXIT_USAGE, &format!("--in: {e}")),
            };
            let ctext = match fs::read_to_string(&cycle) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_USAGE, &format!("--cycle {}: {e}", cycle.display())),
            };
            let cyc: Result<Vec<u32>, _> =
                ctext.split_whitespace().map(|t| t.parse::<u32>()).collect();
            let cyc = match cyc {
                Ok(c) => c,
                Err(e) => return fail(EXIT_USAGE, &format!("--cycle: bad vertex id: {e}")),
            };
            let ok = verify_hamilton_cycle(&d, &cyc);
            println!("{}", serde_json::json!({ "valid": ok }));
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NEGATIVE)
            }
        }
        Command::Experiment { which } => run_experiment(which),
    }
}

fn write_sweep_outputs(
    result: &ExperimentResult,
    out: &Option<PathBuf>,
    gnuplot: bool,
) -> Result<(), String> {
    let mut csv_buf = Vec::new();
    experiments::write_csv(result, &mut csv_buf).map_err(|e| e.to_string())?;
    let csv_text = String::from_utf8(csv_buf).unwrap();
    match out {
        None => {
            print!("{csv_text}");
            Ok(())
        }
        Some(path) => {
            fs::write(path, &csv_text).map_err(|e| e.to_string())?;
            let sidecar = path.with_extension("json");
            fs::write(&sidecar, serde_json::to_string_pretty(result).unwrap())
                .map_err(|e| e.to_string())?;
            if gnuplot {
                let gp = path.with_extension("gp");
                let png = path.with_extension("png");
                fs::write(
                    &gp,
                    experiments::gnuplot_script(
                        path.to_str().unwrap_or("sweep.csv"),
                        png.to_str().unwrap_or("sweep.png"),
                    ),
                )
                .map_err(|e| e.to_string())?;
            }
            Ok(())
        }
    }
}

fn run_experiment(which: ExperimentCmd) -> ExitCode {
    match which {
        ExperimentCmd::Threshold { sweep, exact, exact_fallback } => {
            let config = ExperimentConfig {
                n: sweep.n,
                c_values: sweep.c_values.clone(),
                trials: sweep.trials,
                base_seed: sweep.seed,
                profile: sweep.profile.into(),
                estimator: if exact {
                    Estimator::ExactHamiltonicity
                } else {
                    Estimator::EngineHamiltonicity
                },
                exact_fallback,
            };
            match experiments::run_threshold(&config) {
                Err(e) => fail(EXIT_USAGE, &e),
                Ok(res) => match write_sweep_outputs(&res, &sweep.out, sweep.gnuplot) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(EXIT_INTERNAL, &e),
                },
            }
        }
        ExperimentCmd::Matching { sweep } => {
            let config = ExperimentConfig {
                n: sweep.n,
                c_values: sweep.c_values.clone(),
                trials: sweep.trials,
                base_seed: sweep.seed,
                profile: sweep.profile.into(),
                estimator: Estimator::MatchingExistence,
                exact_fallback: false,
            };
            match experiments::run_matching_threshold(&config) {
                Err(e) => fail(EXIT_USAGE, &e),
                Ok(res) => match write_sweep_outputs(&res, &sweep.out, sweep.gnuplot) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(EXIT_INTERNAL, &e),
                },
            }
        }
        ExperimentCmd::Obstruction { sweep } => {
            let config = ExperimentConfig {
                n: sweep.n,
                c_values: sweep.c_values.clone(),
                trials: sweep.trials,
                base_seed: sweep.seed,
                profile: sweep.profile.into(),
                estimator: Estimator::ObstructionCount,
                exact_fallback: false,
            };
            match experiments::run_obstruction_law(&config) {
                Err(e) => fail(EXIT_USAGE, &e),
                Ok(res) => match write_sweep_outputs(&res, &sweep.out, sweep.gnuplot) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(EXIT_INTERNAL, &e),
                },
            }
        }
        ExperimentCmd::Uniformity { n, m, samples, seed, out } => {
            match experiments::run_uniformity(n, m, samples, seed) {
                Err(e) => fail(EXIT_USAGE, &e),
                Ok(report) => {
                    let json = serde_json::to_string_pretty(&report).unwrap() + "\n";
                    match emit(&out, &json) {
                        Ok(()) => ExitCode::SUCCESS,
                        Err(e) => fail(EXIT_INTERNAL, &format!("write: {e}")),
                    }
                }
            }
        }
        ExperimentCmd::Equivalence { n, m, trials, seed, out } => {
            match experiments::run_equivalence(n, m, trials, seed) {
                Err(e) => fail(EXIT_USAGE, &e),
                Ok(report) => {
                    let json = serde_json::to_string_pretty(&report).unwrap() + "\n";
                    match emit(&out, &json) {
                        Ok(()) => ExitCode::SUCCESS,
                        Err(e) => fail(EXIT_INTERNAL, &format!("write: {e}")),
                    }
                }
            }
        }
    }
}
