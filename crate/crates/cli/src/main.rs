//! `sobolev-lab`: sample data, build interpolants, check invariants and run
//! sweeps from the command line.
//!
//! Exit status: 0 success, 1 a contract or check failed, 2 bad usage, bad
//! config or unreadable input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sobolev_lab::bump::{reference_moduli, ReferenceModuli, SobolevParams};
use sobolev_lab::dataset::Dataset;
use sobolev_lab::experiments::{run, ModelConfig, OutputFormat, RunOptions};
use sobolev_lab::geometry::{check_packing, in_degrees, kissing_number, nn_graph, nn_radii};
use sobolev_lab::interpolant::{min_norm_upper_bound, BumpInterpolant, INTERPOLATION_TOL};
use sobolev_lab::model::sample;
use sobolev_lab::risk::{excess_risk_mc, excess_risk_semianalytic};
use sobolev_lab::rkhs::{min_norm_interpolant, rkhs_norm, KernelSpec};

#[derive(Parser, Debug)]
#[command(name = "sobolev-lab", version, about = "Sobolev bump interpolants and overfitting sweeps")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config with [params] (k, p, d) and an optional [distribution];
    /// `sweep` also needs a [sweep] section.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; required by commands that sample.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (gen, interp, moduli) or directory (sweep).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Row format for sweep results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    JsonLines,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a labelled dataset from the configured distribution.
    Gen {
        #[arg(long)]
        n: usize,
    },
    /// Build an interpolant of a dataset.
    Interp {
        #[arg(long)]
        data: PathBuf,
        /// Shrink factor s of the bump supports.
        #[arg(long, default_value_t = 1.0)]
        shrink: f64,
        /// Minimum-norm Matérn interpolant instead of bumps (needs p = 2).
        #[arg(long)]
        kernel: bool,
        #[arg(long, default_value_t = 1.0)]
        lengthscale: f64,
    },
    /// Exact W^{k,p} norm of a bump interpolant.
    Norm {
        /// Interpolant CSV written by `interp`.
        #[arg(long, conflicts_with = "data")]
        interp: Option<PathBuf>,
        /// Dataset to interpolate with the given shrink factor.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        shrink: f64,
        /// Reference moduli cache written by `moduli`.
        #[arg(long)]
        moduli: Option<PathBuf>,
    },
    /// Packing, in-degree, interpolation and norm-bound checks on a dataset.
    Check {
        #[arg(long)]
        data: PathBuf,
        /// Skip the in-degree certificate (needed for d > 3).
        #[arg(long)]
        no_degree: bool,
    },
    /// Excess risk of an interpolant under the configured distribution.
    Risk {
        #[arg(long, conflicts_with = "data")]
        interp: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        shrink: f64,
        #[arg(long)]
        kernel: bool,
        #[arg(long, default_value_t = 1.0)]
        lengthscale: f64,
        /// Monte Carlo input draws.
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// Run the sweep described by --config.
    Sweep,
    /// Compute and cache the reference moduli M_α for the configured (k, p, d).
    Moduli,
}

/// Exit code, printed summary and written files of one command.
struct CommandOutcome {
    code: u8,
    summary: String,
    artifacts: Vec<PathBuf>,
}

impl CommandOutcome {
    fn ok(summary: String) -> Self {
        CommandOutcome {
            code: 0,
            summary,
            artifacts: Vec::new(),
        }
    }

    fn with(mut self, path: &Path) -> Self {
        self.artifacts.push(path.to_path_buf());
        self
    }
}

fn need_config(c: &Common) -> Result<ModelConfig> {
    let path = c.config.as_ref().ok_or_else(|| anyhow!("--config is required"))?;
    Ok(ModelConfig::load(path)?)
}

fn need_seed(c: &Common) -> Result<u64> {
    c.seed.ok_or_else(|| anyhow!("--seed is required for commands that sample"))
}

fn write_out(out: Option<&PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<Option<PathBuf>> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
            let mut w = std::io::BufWriter::new(file);
            write(&mut w)?;
            w.flush().with_context(|| format!("cannot write {}", path.display()))?;
            Ok(Some(path.clone()))
        }
        None => {
            let stdout = std::io::stdout();
            write(&mut stdout.lock())?;
            Ok(None)
        }
    }
}

fn load_moduli(params: SobolevParams, cache: Option<&PathBuf>) -> Result<ReferenceModuli> {
    match cache {
        Some(path) => {
            let m = ReferenceModuli::load(path)?;
            if m.params() != params {
                return Err(sobolev_lab::error::Error::ParamsMismatch.into());
            }
            Ok(m)
        }
        None => Ok(reference_moduli(params)?),
    }
}

fn check_dim(params: SobolevParams, data: &Dataset) -> Result<()> {
    if data.dim() != params.d {
        return Err(sobolev_lab::error::Error::DimensionMismatch {
            expected: params.d,
            got: data.dim(),
        }
        .into());
    }
    Ok(())
}

fn cmd_gen(c: &Common, n: usize) -> Result<CommandOutcome> {
    let model = need_config(c)?;
    let data = sample(&model.spec, n, need_seed(c)?)?;
    let path = write_out(c.out.as_ref(), |w| Ok(data.write_csv(w)?))?;
    let o = CommandOutcome::ok(format!("sampled {n} points in d = {}", data.dim()));
    Ok(match path {
        Some(p) => o.with(&p),
        None => o,
    })
}

fn cmd_interp(c: &Common, data: &Path, shrink: f64, kernel: bool, lengthscale: f64) -> Result<CommandOutcome> {
    let model = need_config(c)?;
    let ds = Dataset::load(data)?;
    check_dim(model.params, &ds)?;
    let (summary, path) = if kernel {
        let spec = KernelSpec::for_params(model.params, lengthscale)?;
        let f = min_norm_interpolant(&ds, &spec)?;
        let path = write_out(c.out.as_ref(), |w| Ok(f.write_csv(w)?))?;
        (
            format!(
                "kernel interpolant: nu = {}, residual {:e}, jitter {:e}, RKHS norm {}",
                spec.nu,
                f.residual(),
                f.jitter(),
                rkhs_norm(&f)
            ),
            path,
        )
    } else {
        let radii = nn_radii(&ds)?;
        let f = BumpInterpolant::build(&ds, &radii, shrink, model.params)?;
        let err = f.max_interpolation_error(&ds);
        let path = write_out(c.out.as_ref(), |w| Ok(f.write_csv(w)?))?;
        (format!("bump interpolant: {} bumps, shrink {shrink}, max interpolation error {err:e}", f.len()), path)
    };
    let o = CommandOutcome::ok(summary);
    Ok(match path {
        Some(p) => o.with(&p),
        None => o,
    })
}

fn bump_from(
    model: &ModelConfig,
    interp: Option<&PathBuf>,
    data: Option<&PathBuf>,
    shrink: f64,
) -> Result<BumpInterpolant> {
    match (interp, data) {
        (Some(path), _) => {
            let f = BumpInterpolant::load(path)?;
            if f.params() != model.params {
                return Err(sobolev_lab::error::Error::ParamsMismatch.into());
            }
            Ok(f)
        }
        (None, Some(path)) => {
            let ds = Dataset::load(path)?;
            check_dim(model.params, &ds)?;
            Ok(BumpInterpolant::build(&ds, &nn_radii(&ds)?, shrink, model.params)?)
        }
        (None, None) => Err(anyhow!("give --interp or --data")),
    }
}

fn cmd_norm(
    c: &Common,
    interp: Option<&PathBuf>,
    data: Option<&PathBuf>,
    shrink: f64,
    moduli: Option<&PathBuf>,
) -> Result<CommandOutcome> {
    let model = need_config(c)?;
    let f = bump_from(&model, interp, data, shrink)?;
    let m = load_moduli(model.params, moduli)?;
    let norm = f.sobolev_norm(&m)?;
    Ok(CommandOutcome::ok(format!(
        "norm {norm}\nnorm^p {}",
        norm.powf(model.params.p)
    )))
}

fn cmd_check(c: &Common, data: &Path, no_degree: bool) -> Result<CommandOutcome> {
    let ds = Dataset::load(data)?;
    let n = ds.len();
    let radii = nn_radii(&ds)?;
    let mut lines = Vec::new();
    let mut ok = true;
    let mut report = |name: &str, passed: bool, detail: String| {
        ok &= passed;
        lines.push(format!("{:<14} {} {detail}", name, if passed { "PASS" } else { "FAIL" }));
    };
    let close = check_packing(&ds, radii.as_slice())?;
    report("packing", close.is_empty(), format!("{} close pairs", close.len()));
    if !no_degree {
        let tau = kissing_number(ds.dim())?;
        let max = in_degrees(&nn_graph(&ds)?, n).into_iter().max().unwrap_or(0);
        report("in-degree", max <= tau, format!("max {max}, bound {tau}"));
    }
    let model = need_config(c)?;
    check_dim(model.params, &ds)?;
    let f = BumpInterpolant::build(&ds, &radii, 1.0, model.params)?;
    let err = f.max_interpolation_error(&ds);
    report("interpolation", err <= INTERPOLATION_TOL, format!("max error {err:e}"));
    let moduli = reference_moduli(model.params)?;
    let norm_p = f.sobolev_norm(&moduli)?.powf(model.params.p);
    let bound = min_norm_upper_bound(&ds, &radii, &moduli)?;
    report("norm-bound", norm_p <= bound, format!("norm^p {norm_p} <= {bound}"));
    Ok(CommandOutcome {
        code: if ok { 0 } else { 1 },
        summary: lines.join("\n"),
        artifacts: Vec::new(),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_risk(
    c: &Common,
    interp: Option<&PathBuf>,
    data: Option<&PathBuf>,
    shrink: f64,
    kernel: bool,
    lengthscale: f64,
    samples: usize,
) -> Result<CommandOutcome> {
    let model = need_config(c)?;
    let seed = need_seed(c)?;
    if kernel {
        let path = data.ok_or_else(|| anyhow!("--kernel needs --data"))?;
        let ds = Dataset::load(path)?;
        check_dim(model.params, &ds)?;
        let f = min_norm_interpolant(&ds, &KernelSpec::for_params(model.params, lengthscale)?)?;
        let est = excess_risk_mc(&|x: &[f64]| f.eval(x), &model.spec, samples, seed)?;
        return Ok(CommandOutcome::ok(format!("risk_mc {} stderr {}", est.mean, est.stderr)));
    }
    let f = bump_from(&model, interp, data, shrink)?;
    let est = excess_risk_mc(&|x: &[f64]| f.eval(x), &model.spec, samples, seed)?;
    let mut summary = format!("risk_mc {} stderr {}", est.mean, est.stderr);
    if let Ok(exact) = excess_risk_semianalytic(&f, &model.spec) {
        summary += &format!("\nrisk_exact {}", exact.mean);
    }
    Ok(CommandOutcome::ok(summary))
}

fn cmd_sweep(c: &Common) -> Result<CommandOutcome> {
    let path = c.config.as_ref().ok_or_else(|| anyhow!("--config is required"))?;
    let opts = RunOptions {
        seed: c.seed,
        out: c.out.clone(),
        format: match c.format {
            Format::Csv => OutputFormat::Csv,
            Format::JsonLines => OutputFormat::JsonLines,
        },
    };
    let outcome = run(path, &opts)?;
    let res = &outcome.result;
    let mut lines = vec![format!("{} ({}), seed {}", res.id, res.kind.name(), res.seed)];
    for ct in &res.contracts {
        lines.push(format!(
            "{:<18} {} observed {} target {} ({})",
            ct.name,
            if ct.passed { "PASS" } else { "FAIL" },
            ct.observed,
            ct.target,
            ct.detail
        ));
    }
    Ok(CommandOutcome {
        code: if res.passed() { 0 } else { 1 },
        summary: lines.join("\n"),
        artifacts: outcome.paths().into_iter().map(Path::to_path_buf).collect(),
    })
}

fn cmd_moduli(c: &Common) -> Result<CommandOutcome> {
    let model = need_config(c)?;
    let m = reference_moduli(model.params)?;
    let mut summary: Vec<String> = m
        .entries()
        .iter()
        .map(|(a, v)| format!("M{:?} = {v}", a.0))
        .collect();
    summary.push(format!("bump constant {}", m.bump_constant()));
    let o = CommandOutcome::ok(summary.join("\n"));
    Ok(match &c.out {
        Some(path) => {
            m.save(path)?;
            o.with(path)
        }
        None => o,
    })
}

fn dispatch(cli: &Cli) -> Result<CommandOutcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Gen { n } => cmd_gen(c, *n),
        Command::Interp {
            data,
            shrink,
            kernel,
            lengthscale,
        } => cmd_interp(c, data, *shrink, *kernel, *lengthscale),
        Command::Norm {
            interp,
            data,
            shrink,
            moduli,
        } => cmd_norm(c, interp.as_ref(), data.as_ref(), *shrink, moduli.as_ref()),
        Command::Check { data, no_degree } => cmd_check(c, data, *no_degree),
        Command::Risk {
            interp,
            data,
            shrink,
            kernel,
            lengthscale,
            samples,
        } => cmd_risk(c, interp.as_ref(), data.as_ref(), *shrink, *kernel, *lengthscale, *samples),
        Command::Sweep => cmd_sweep(c),
        Command::Moduli => cmd_moduli(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(o) => {
            // Data written to stdout must stay parseable, so the summary goes
            // to stderr in that case.
            let to_stdout = !o.artifacts.is_empty() || !matches!(cli.command, Command::Gen { .. } | Command::Interp { .. });
            let mut text = o.summary.clone();
            for a in &o.artifacts {
                text += &format!("\nwrote {}", a.display());
            }
            if to_stdout {
                println!("{text}");
            } else {
                eprintln!("{text}");
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
