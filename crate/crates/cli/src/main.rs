use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use perclab::{emit_curve, load_spec, run, ExperimentSpec, Format, HarnessError, Kind, Params};

/// Bootstrap percolation experiments.
#[derive(Parser, Debug)]
#[command(name = "perclab", version)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "PERCLAB_WORKERS")]
    workers: Option<usize>,
    /// Results file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Results format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Args, Debug, Default)]
struct Structure {
    /// Side length of the region.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Number of doubled axes.
    #[arg(long)]
    ell: Option<usize>,
    /// Base threshold.
    #[arg(long)]
    r: Option<usize>,
    /// Sample on the padded region `[n+1]^d x [2]^ell`.
    #[arg(long)]
    padded: Option<bool>,
}

#[derive(Args, Debug, Default)]
struct Sampling {
    #[arg(long)]
    trials: Option<u64>,
    /// Confidence level of the Wilson interval.
    #[arg(long)]
    confidence: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Semi-percolation probability at one p.
    Estimate {
        #[command(flatten)]
        structure: Structure,
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Probability curves over a grid of p, coupled across p.
    Scan {
        #[command(flatten)]
        structure: Structure,
        /// Several side lengths, comma separated.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Bisection for the smallest p with probability at least alpha.
    Pc {
        #[command(flatten)]
        structure: Structure,
        #[arg(long)]
        alpha: Option<f64>,
        /// Final bracket width.
        #[arg(long)]
        tol: Option<f64>,
        /// Trial cap at each midpoint.
        #[arg(long)]
        max_trials: Option<u64>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Probability of a diagonal-growth or gap-crossing event.
    Event {
        #[command(flatten)]
        structure: Structure,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        a: Option<usize>,
        /// End of diagonal growth.
        #[arg(long)]
        b: Option<usize>,
        /// Gap vector for a crossing event, comma separated.
        #[arg(long, value_delimiter = ',')]
        bvec: Option<Vec<usize>>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// The integral constant for given d and r.
    Lambda {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// No-L-gap probability of an event sequence.
    Lgap {
        #[arg(long)]
        ell: Option<usize>,
        /// Event probabilities, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true)]
        m: Option<i64>,
    },
    /// Exhaustive count of admissible gap sequences.
    CountSeq {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        m: Option<i64>,
    },
    /// Run a verification suite: all, analytic, lgap, events, harris, dynamics.
    Verify { suite: Option<String> },
    /// Run an experiment spec file.
    Run { spec: PathBuf },
    /// Convert a results file to CSV.
    EmitCurve { results: PathBuf },
}

fn structure_params(s: Structure) -> Params {
    Params {
        n: s.n,
        d: s.d,
        ell: s.ell,
        r: s.r,
        padded: s.padded,
        ..Params::default()
    }
}

fn with_sampling(p: Params, s: Sampling) -> Params {
    Params {
        trials: s.trials,
        confidence: s.confidence,
        ..p
    }
}

fn build_spec(cli: Cli) -> Result<Option<ExperimentSpec>, HarnessError> {
    let (kind, params) = match cli.command {
        Command::Estimate {
            structure,
            p,
            sampling,
        } => (
            Kind::Estimate,
            with_sampling(
                Params {
                    p,
                    ..structure_params(structure)
                },
                sampling,
            ),
        ),
        Command::Scan {
            structure,
            n_list,
            p_grid,
            sampling,
        } => (
            Kind::Scan,
            with_sampling(
                Params {
                    n_list,
                    p_grid,
                    ..structure_params(structure)
                },
                sampling,
            ),
        ),
        Command::Pc {
            structure,
            alpha,
            tol,
            max_trials,
            sampling,
        } => (
            Kind::Pc,
            with_sampling(
                Params {
                    alpha,
                    tol,
                    max_trials,
                    ..structure_params(structure)
                },
                sampling,
            ),
        ),
        Command::Event {
            structure,
            p,
            a,
            b,
            bvec,
            sampling,
        } => (
            Kind::Event,
            with_sampling(
                Params {
                    p,
                    a,
                    b,
                    bvec,
                    ..structure_params(structure)
                },
                sampling,
            ),
        ),
        Command::Lambda { d, r, tol } => (
            Kind::Lambda,
            Params {
                d,
                r,
                tol,
                ..Params::default()
            },
        ),
        Command::Lgap { ell, u, m } => (
            Kind::Lgap,
            Params {
                ell,
                u,
                m,
                ..Params::default()
            },
        ),
        Command::CountSeq { p, d, c, m } => (
            Kind::CountSeq,
            Params {
                p,
                d,
                c,
                m,
                ..Params::default()
            },
        ),
        Command::Verify { suite } => (
            Kind::Verify,
            Params {
                suite,
                ..Params::default()
            },
        ),
        Command::Run { spec } => {
            let mut spec = load_spec(&spec)?;
            apply_globals(&mut spec, cli.seed, cli.workers, cli.out, cli.format);
            return Ok(Some(spec));
        }
        Command::EmitCurve { results } => {
            emit_curve(&results, cli.out.as_deref())?;
            return Ok(None);
        }
    };
    let mut spec = ExperimentSpec::new(kind, params);
    apply_globals(&mut spec, cli.seed, cli.workers, cli.out, cli.format);
    Ok(Some(spec))
}

/// Global flags override the spec only for kinds that use them.
fn apply_globals(
    spec: &mut ExperimentSpec,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    format: Option<FormatArg>,
) {
    if seed.is_some() && spec.kind.accepts("seed") {
        spec.params.seed = seed;
    }
    if workers.is_some() && spec.kind.accepts("workers") {
        spec.params.workers = workers;
    }
    if out.is_some() {
        spec.output.path = out;
    }
    match format {
        Some(FormatArg::Jsonl) => spec.output.format = Format::Jsonl,
        Some(FormatArg::Csv) => spec.output.format = Format::Csv,
        None => {}
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_spec(cli).and_then(|spec| match spec {
        Some(spec) => run(&spec).map(|_| ()),
        None => Ok(()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("perclab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
