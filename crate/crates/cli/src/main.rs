use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use schwarz_pc::coeffs::{bdf_weights, ext_weights, multirate_weights};
use schwarz_pc::layout::BlockLayout;
use schwarz_pc::multirate::{multirate_layout, MultirateSpec};
use schwarz_pc::simulate::{estimate_growth_rate, run_multirate, run_singlerate, Trajectory};
use schwarz_pc::sweep::{self, Bundle, SRange, SweepCase, SweepSpec};
use schwarz_pc::SchemeSpec;

/// Stability of BDFk/EXTm predictor-corrector schemes on two overlapping grids
#[derive(Parser, Debug)]
#[command(name = "schwarz-pc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print BDF, extrapolation and multirate weights
    Coeffs {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        eta: usize,
    },
    /// Spectral radius of the growth matrix at one timestep
    Radius {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Spectral radius over a log-spaced range of timesteps, as CSV
    Sweep(SweepArgs),
    /// Run the time-domain Schwarz loop and compare its growth with rho(G)
    Simulate {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        /// Seed for the random initial state
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Start from the zero state instead of a random one
        #[arg(long)]
        zero: bool,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the sweep CSV of one or all figure bundles
    Repro {
        /// fig5, fig6, fig7, fig8, fig10, fig11, fig12 or all
        #[arg(long, default_value = "all")]
        bundle: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        range: RangeArgs,
    },
}

#[derive(Args, Debug)]
struct PointArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    /// Corrector iterations
    #[arg(long)]
    q: usize,
    /// Blend weight of the last corrector for even Q (1 is the original scheme)
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Timestep ratio dt_c / dt_f
    #[arg(long, default_value_t = 1)]
    eta: usize,
    /// Points per subdomain
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Overlap parameter K
    #[arg(long, default_value_t = 5)]
    overlap: usize,
    /// Nondimensional timestep nu dt_c / dx^2
    #[arg(long)]
    s: f64,
}

#[derive(Args, Debug)]
struct RangeArgs {
    #[arg(long, default_value_t = 1e-2)]
    s_min: f64,
    #[arg(long, default_value_t = 1e6)]
    s_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
}

impl RangeArgs {
    fn range(&self) -> Result<SRange, CliError> {
        Ok(SRange::new(self.s_min, self.s_max, self.points)?)
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "3")]
    k: Vec<usize>,
    /// Extrapolation orders; combinations with m > k are skipped
    #[arg(long, value_delimiter = ',', default_value = "3")]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7")]
    q: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    eta: Vec<usize>,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    overlap: Vec<usize>,
    #[command(flatten)]
    range: RangeArgs,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Library(#[from] schwarz_pc::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Fixed-precision rendering with trailing zeros removed.
fn num(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn row(label: &str, values: &[f64]) -> String {
    let vals: Vec<String> = values.iter().map(|&v| num(v)).collect();
    format!("{label}: {}", vals.join(" "))
}

fn cmd_coeffs(k: usize, m: usize, eta: usize, out: &mut dyn Write) -> Result<(), CliError> {
    SchemeSpec::original(k, m, 0)?;
    let bdf = bdf_weights(k)?;
    let ext = ext_weights(m)?;
    let table = multirate_weights(eta, m)?;
    let mut lines = vec![row("beta", &bdf.beta), row("alpha", &ext.alpha)];
    for (i, r) in table.pred_fine.iter().enumerate() {
        lines.push(row(&format!("pred_fine[{}]", i + 1), r));
    }
    lines.push(row("pred_coarse", &table.pred_coarse));
    for (i, r) in table.corr_fine.iter().enumerate() {
        lines.push(row(&format!("corr_fine[{}]", i + 1), r));
    }
    for line in lines {
        writeln!(out, "{line}").map_err(io_err(Path::new("stdout")))?;
    }
    Ok(())
}

fn case_of(p: &PointArgs) -> Result<SweepCase, CliError> {
    if !(p.s > 0.0 && p.s.is_finite()) {
        return Err(CliError::Usage(format!("--s {} must be positive", p.s)));
    }
    Ok(SweepCase::new(p.k, p.m, p.gamma, p.eta, p.n, p.overlap)?)
}

fn cmd_radius(p: &PointArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pt = sweep::radius(&case_of(p)?, p.q, p.s)?;
    writeln!(out, "s={} rho={} stable={}", pt.s, pt.rho, pt.stable)
        .map_err(io_err(Path::new("stdout")))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(
            File::create(p).map_err(io_err(p))?,
        ))),
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let orders: Vec<(usize, usize)> = args
        .k
        .iter()
        .flat_map(|&k| {
            args.m
                .iter()
                .filter(move |&&m| m <= k)
                .map(move |&m| (k, m))
        })
        .collect();
    if orders.is_empty() {
        return Err(CliError::Usage("no (k, m) combination with m <= k".into()));
    }
    let grids: Vec<(usize, usize)> = args.overlap.iter().map(|&o| (args.n, o)).collect();
    let spec = SweepSpec::product(
        &orders,
        &args.q,
        &args.gamma,
        &args.eta,
        &grids,
        args.range.range()?,
    )?;
    let rows = sweep::run_sweep(&spec)?;
    let target = args.out.as_deref();
    let shown = target.unwrap_or(Path::new("stdout"));
    sweep::write_csv(open_output(target)?, &rows).map_err(io_err(shown))
}

fn random_state(layout: &BlockLayout, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block = || -> Vec<f64> {
        (0..layout.block_size)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect()
    };
    let per_domain = [block(), block()];
    layout.replicate(&per_domain)
}

fn write_trajectory(out: &mut dyn Write, traj: &Trajectory, rho: f64) -> io::Result<()> {
    writeln!(out, "# schwarz-pc {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "step,t,norm")?;
    for (i, (t, n)) in traj.times.iter().zip(&traj.norms).enumerate() {
        writeln!(out, "{i},{t},{n}")?;
    }
    match estimate_growth_rate(traj) {
        Ok(rate) => writeln!(out, "# empirical_rate={rate}")?,
        Err(_) => writeln!(out, "# empirical_rate=NA")?,
    }
    writeln!(out, "# rho={rho}")?;
    writeln!(out, "# overflowed={}", u8::from(traj.overflowed))?;
    out.flush()
}

fn cmd_simulate(
    p: &PointArgs,
    steps: usize,
    seed: u64,
    zero: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let case = case_of(p)?;
    let scheme = case.scheme(p.q)?;
    let dt = case.grid.dt_from_s(p.s);
    let layout = multirate_layout(case.grid.n(), case.eta)?;
    let z = if zero {
        vec![0.0; layout.dim()]
    } else {
        random_state(&layout, seed)
    };
    let traj = if case.eta == 1 {
        run_singlerate(&scheme, &case.grid, dt, &z, steps)?
    } else {
        run_multirate(
            &MultirateSpec::new(scheme, case.grid, case.eta, dt)?,
            &z,
            steps,
        )?
    };
    let rho = sweep::radius(&case, p.q, p.s)?.rho;
    let shown = out.unwrap_or(Path::new("stdout"));
    write_trajectory(&mut open_output(out)?, &traj, rho).map_err(io_err(shown))
}

fn cmd_repro(bundle: &str, out_dir: &Path, range: &RangeArgs) -> Result<(), CliError> {
    let bundles: Vec<Bundle> = if bundle == "all" {
        Bundle::ALL.to_vec()
    } else {
        vec![bundle
            .parse()
            .map_err(|e: schwarz_pc::Error| CliError::Usage(e.to_string()))?]
    };
    let s = range.range()?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    for b in bundles {
        let rows = sweep::run_sweep(&b.spec(s)?)?;
        let path = out_dir.join(format!("{}.csv", b.name()));
        let file = File::create(&path).map_err(io_err(&path))?;
        sweep::write_csv(BufWriter::new(file), &rows).map_err(io_err(&path))?;
        println!("{}: {} rows -> {}", b, rows.len(), path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    match &cli.command {
        Command::Coeffs { k, m, eta } => cmd_coeffs(*k, *m, *eta, &mut stdout.lock()),
        Command::Radius { point } => cmd_radius(point, &mut stdout.lock()),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Simulate {
            point,
            steps,
            seed,
            zero,
            out,
        } => cmd_simulate(point, *steps, *seed, *zero, out.as_deref()),
        Command::Repro {
            bundle,
            out_dir,
            range,
        } => cmd_repro(bundle, out_dir, range),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
