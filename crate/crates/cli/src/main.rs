use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flowpersp_core::coarse::estimate_coarse;
use flowpersp_core::dense::{estimate_dense, FieldParams};
use flowpersp_core::experiment::{
    convergence, convergence_csv, default_fractions, relative_error, Method,
};
use flowpersp_core::normalize::threshold_map_csv;
use flowpersp_core::{
    parse_flow_stream, simulate, CoarseConfig, DenseConfig, FlowSequence, RhoDenominator,
    SceneScript, SolverKind, TrimSpec,
};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(
    name = "flowpersp",
    version,
    about = "Perspective scale gradient from sparse optical flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene script into a FLOWLOG stream.
    Simulate(SimulateArgs),
    /// Estimate the scale gradient of a FLOWLOG stream.
    Estimate(EstimateArgs),
    /// Estimate from growing temporal prefixes of a stream.
    Convergence(ConvergenceArgs),
    /// Per-row velocity threshold map for a given scale gradient.
    Normalize(NormalizeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    script: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Dense,
    Coarse,
    Both,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            Self::Dense => "dense",
            Self::Coarse => "coarse",
            Self::Both => "both",
        }
    }
}

#[derive(Clone, Copy)]
struct Grid {
    rows: usize,
    cols: usize,
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok(Grid {
        rows: num(r)?,
        cols: num(c)?,
    })
}

#[derive(Args)]
struct EstimatorArgs {
    /// Coarse block grid.
    #[arg(long, value_parser = parse_grid, default_value = "10x10")]
    grid: Grid,
    /// Dense accumulation cell edge, pixels.
    #[arg(long, default_value_t = 4)]
    cell_size: u32,
    /// Fraction trimmed from each tail of the dense consensus.
    #[arg(long, default_value_t = 0.15)]
    trim: f64,
    /// Vectors no longer than this are ignored, pixels.
    #[arg(long, default_value_t = 1.5)]
    threshold: f64,
    /// Minimum vectors per dense cell.
    #[arg(long, default_value_t = 10)]
    min_samples: u64,
    /// Dense cells with a smaller mean vertical velocity are skipped, pixels per frame.
    #[arg(long, default_value_t = 0.2)]
    velocity_epsilon: f64,
    /// Exponent k in `vdot ~ z^-k`.
    #[arg(long, default_value_t = 2.0)]
    depth_exponent: f64,
    #[arg(long, default_value = "closed-form")]
    solver: SolverKind,
    /// Denominator of the block transition proportions: `transitions` or `all`.
    #[arg(long, default_value = "transitions")]
    rho_denominator: RhoDenominator,
    /// Blocks with fewer starting vectors are left out of the coarse system.
    #[arg(long, default_value_t = 5)]
    min_block_count: u64,
}

impl EstimatorArgs {
    fn dense(&self) -> Result<DenseConfig> {
        Ok(DenseConfig {
            cell_size: self.cell_size,
            field: FieldParams {
                min_samples: self.min_samples,
                velocity_epsilon: self.velocity_epsilon,
                depth_exponent: self.depth_exponent,
            },
            trim: TrimSpec::new(self.trim)?,
        })
    }

    fn coarse(&self) -> CoarseConfig {
        CoarseConfig {
            rows: self.grid.rows,
            cols: self.grid.cols,
            rho_denominator: self.rho_denominator,
            min_block_count: self.min_block_count,
            solver: self.solver,
        }
    }

    fn echo(&self, out: &mut String, method: MethodArg) {
        let _ = writeln!(out, "threshold: {}", self.threshold);
        if method != MethodArg::Coarse {
            let _ = writeln!(out, "cell_size: {}", self.cell_size);
            let _ = writeln!(out, "trim: {}", self.trim);
            let _ = writeln!(out, "min_samples: {}", self.min_samples);
            let _ = writeln!(out, "velocity_epsilon: {}", self.velocity_epsilon);
            let _ = writeln!(out, "depth_exponent: {}", self.depth_exponent);
        }
        if method != MethodArg::Dense {
            let _ = writeln!(out, "grid: {}x{}", self.grid.rows, self.grid.cols);
            let _ = writeln!(out, "solver: {}", self.solver);
            let _ = writeln!(out, "rho_denominator: {}", self.rho_denominator);
            let _ = writeln!(out, "min_block_count: {}", self.min_block_count);
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Known scale gradient; adds relative errors to the report.
    #[arg(long)]
    reference: Option<f64>,
    /// Write the dense per-cell field as CSV.
    #[arg(long)]
    field_csv: Option<PathBuf>,
    /// Write the coarse block proportions as CSV.
    #[arg(long)]
    blocks_csv: Option<PathBuf>,
    /// Write the coarse solution as JSON.
    #[arg(long)]
    omega_json: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Dense)]
    method: MethodArg,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Comma-separated increasing fractions in (0, 1].
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    #[arg(long)]
    reference: Option<f64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    /// FLOWLOG stream whose frame height sets the map size.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    zeta: f64,
    /// Threshold at the bottom row, pixels.
    #[arg(long, default_value_t = 1.5)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Input {
    path: PathBuf,
    sha256: String,
    flow: FlowSequence,
}

fn load(path: &Path) -> Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let flow = parse_flow_stream(bytes.as_slice())
        .with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(Input {
        path: path.to_path_buf(),
        sha256,
        flow,
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<String> {
    let text = fs::read_to_string(&args.script)
        .with_context(|| format!("cannot read {}", args.script.display()))?;
    let script = SceneScript::parse(&text)
        .with_context(|| format!("invalid script {}", args.script.display()))?;
    let sim = simulate(&script, args.seed)?;
    let body = sim.flow.to_flowlog();
    fs::write(&args.out, &body).with_context(|| format!("cannot write {}", args.out.display()))?;

    let mut out = String::new();
    let _ = writeln!(out, "script: {}", args.script.display());
    let _ = writeln!(out, "seed: {}", args.seed);
    let _ = writeln!(out, "output: {}", args.out.display());
    let _ = writeln!(
        out,
        "sha256: {}",
        hex::encode(Sha256::digest(body.as_bytes()))
    );
    let _ = writeln!(out, "frames: {}", sim.flow.frames().len());
    let _ = writeln!(out, "vectors: {}", sim.flow.vector_count());
    let _ = writeln!(out, "oracle_zeta: {}", sim.reference_zeta);
    Ok(out)
}

fn run_estimate(args: &EstimateArgs) -> Result<String> {
    let input = load(&args.input)?;
    let flow = input.flow.above_threshold(args.estimator.threshold);
    let mut out = String::new();
    let _ = writeln!(out, "input: {}", input.path.display());
    let _ = writeln!(out, "sha256: {}", input.sha256);
    let _ = writeln!(
        out,
        "frame: {}x{} at {} fps",
        flow.width(),
        flow.height(),
        flow.frame_rate()
    );
    let _ = writeln!(out, "frames: {}", flow.frames().len());
    let _ = writeln!(out, "vectors: {}", flow.vector_count());
    let _ = writeln!(out, "method: {}", args.method.name());
    args.estimator.echo(&mut out, args.method);

    let mut dense_zeta = None;
    if args.method != MethodArg::Coarse {
        let est = estimate_dense(&flow, &args.estimator.dense()?)?;
        let _ = writeln!(out, "dense.zeta: {}", est.zeta());
        let _ = writeln!(out, "dense.valid_cells: {}", est.consensus.valid_cells);
        let _ = writeln!(
            out,
            "dense.trimmed_per_tail: {}",
            est.consensus.trimmed_per_tail
        );
        if let Some(r) = args.reference {
            let _ = writeln!(
                out,
                "dense.relative_error: {}",
                relative_error(est.zeta(), r)
            );
        }
        if let Some(p) = &args.field_csv {
            write_output(Some(p), &est.field.to_csv())?;
        }
        dense_zeta = Some(est.zeta());
    }
    if args.method != MethodArg::Dense {
        let est = estimate_coarse(&flow, &args.estimator.coarse())?;
        let om = &est.omega;
        let _ = writeln!(out, "coarse.zeta: {}", om.zeta);
        let _ = writeln!(out, "coarse.omega: {}", om.omega);
        let _ = writeln!(out, "coarse.delta_omega: {}", om.delta_omega);
        let _ = writeln!(out, "coarse.block_height: {}", om.block_height);
        let _ = writeln!(out, "coarse.constraints: {}", om.constraints);
        let _ = writeln!(out, "coarse.residual: {}", om.residual);
        let _ = writeln!(out, "coarse.iterations: {}", om.iterations);
        if let Some(r) = args.reference {
            let _ = writeln!(out, "coarse.relative_error: {}", relative_error(om.zeta, r));
        }
        if let Some(d) = dense_zeta {
            let _ = writeln!(out, "agreement: {}", relative_error(om.zeta, d));
        }
        if let Some(p) = &args.blocks_csv {
            write_output(Some(p), &est.proportions.to_csv())?;
        }
        if let Some(p) = &args.omega_json {
            write_output(Some(p), &(om.to_json() + "\n"))?;
        }
    }
    if let Some(r) = args.reference {
        let _ = writeln!(out, "reference: {r}");
    }
    Ok(out)
}

fn run_convergence(args: &ConvergenceArgs) -> Result<()> {
    let method = match args.method {
        MethodArg::Dense => Method::Dense,
        MethodArg::Coarse => Method::Coarse,
        MethodArg::Both => bail!("convergence runs one method at a time"),
    };
    let input = load(&args.input)?;
    let flow = input.flow.above_threshold(args.estimator.threshold);
    let fractions = args.fractions.clone().unwrap_or_else(default_fractions);
    let rows = convergence(
        &flow,
        method,
        &args.estimator.dense()?,
        &args.estimator.coarse(),
        &fractions,
        args.reference,
    )?;
    write_output(args.out.as_deref(), &convergence_csv(&rows))
}

fn run_normalize(args: &NormalizeArgs) -> Result<()> {
    if !args.zeta.is_finite() {
        bail!("zeta must be finite");
    }
    let input = load(&args.input)?;
    write_output(
        args.out.as_deref(),
        &threshold_map_csv(args.zeta, input.flow.height(), args.threshold),
    )
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => print!("{}", run_simulate(a)?),
        Command::Estimate(a) => print!("{}", run_estimate(a)?),
        Command::Convergence(a) => run_convergence(a)?,
        Command::Normalize(a) => run_normalize(a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = run(cli);
    eprintln!("elapsed: {:.3} s", started.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
