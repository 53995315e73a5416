//! Command-line interface: `simulate`, `check`, `compare`, `plot`,
//! `import` and `export`. Every subcommand takes `--seed` and produces
//! byte-identical output for identical arguments.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{error_budgets, pairwise_tests, DiagnosticReport};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorSpec, ParamFunction};
use crate::io::{read_dead_birth_file, read_native_file, write_atomic, write_dead_birth, write_native_file};
use crate::plotdata::{logx_diagram, posterior_uncertainty_band};
use crate::resampling::DEFAULT_BOOTSTRAPS;
use crate::run::NsRun;
use crate::sampler::{generate_runs, true_logz, LikelihoodSpec, SamplerKind, SamplerSettings};

#[derive(Debug, Parser)]
#[command(name = "nsdiag", version, about = "Diagnostics for nested sampling runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate runs with a built-in sampler into a directory
    Simulate(SimulateArgs),
    /// Error budget (implementation-specific error) over a set of runs
    Check(CheckArgs),
    /// Pairwise thread KS tests and bootstrap distances
    Compare(CompareArgs),
    /// Posterior uncertainty bands and log X diagram data
    Plot(PlotArgs),
    /// Convert a dead-birth text file into a native run file
    Import(ImportArgs),
    /// Convert a native run file into dead-birth text
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// key=value settings file; flags given on the command line win
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// gaussian or loggamma_mix
    #[arg(long)]
    pub likelihood: Option<String>,
    /// Number of parameters [default: 2]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Live points [default: 250]
    #[arg(long)]
    pub nlive: Option<usize>,
    /// Slice-sampling updates per replacement point [default: 10]
    #[arg(long)]
    pub num_repeats: Option<usize>,
    /// Stop when the live points could add less than this fraction of the evidence [default: 0.001]
    #[arg(long)]
    pub termination_frac: Option<f64>,
    /// perfect (Gaussian only) or slice; defaults to perfect for the
    /// Gaussian and slice otherwise
    #[arg(long)]
    pub sampler: Option<String>,
    /// Number of runs [default: 1]
    #[arg(long)]
    pub runs: Option<usize>,
    /// Output directory (required, here or as out_dir in the config)
    #[arg(long, alias = "out-dir")]
    pub out: Option<PathBuf>,
    /// Base seed; run i uses a seed derived from it and i [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Native run files
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long, default_value = "logz")]
    pub estimators: String,
    /// Known log-evidence, enabling the RMSE columns for logz
    #[arg(long, allow_hyphen_values = true)]
    pub true_logz: Option<f64>,
    /// Known value of another estimator, as SPEC=VALUE (repeatable)
    #[arg(long = "truth", allow_hyphen_values = true)]
    pub truths: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAPS)]
    pub bootstraps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Native run files (at least two)
    #[arg(required = true, num_args = 2..)]
    pub runs: Vec<PathBuf>,
    #[arg(long, default_value = "logz")]
    pub estimators: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAPS)]
    pub bootstraps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Comma-separated parameter functions, e.g. t1,r
    #[arg(long, default_value = "t1")]
    pub functions: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAPS)]
    pub bootstraps: usize,
    /// Simulations for per-point log X intervals (0 disables them)
    #[arg(long, default_value_t = 1000)]
    pub n_sim: usize,
    #[arg(long, default_value_t = 1)]
    pub traces: usize,
    /// Also write SVG renderings
    #[arg(long)]
    pub svg: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Births at or below this value are prior draws (default: the
    /// smallest birth in the file)
    #[arg(long, allow_hyphen_values = true)]
    pub prior_sentinel: Option<f64>,
    /// Accepted for uniformity; the conversion is deterministic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Value written as the birth contour of prior draws
    #[arg(long, allow_hyphen_values = true, default_value = "-1e30")]
    pub prior_sentinel: f64,
    /// Accepted for uniformity; the conversion is deterministic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses a `key=value` settings file. Blank lines and `#` comments are
/// ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    const KEYS: [&str; 9] = [
        "likelihood",
        "dim",
        "nlive",
        "num_repeats",
        "termination_frac",
        "seed",
        "runs",
        "out_dir",
        "sampler",
    ];
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: "expected key=value".into(),
        })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("unknown setting {k:?}"),
            });
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn setting<T: std::str::FromStr>(
    flag: Option<T>,
    config: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    config
        .get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key}")))
        })
        .transpose()
}

/// Fully resolved `simulate` settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatePlan {
    pub likelihood: LikelihoodSpec,
    pub sampler: SamplerKind,
    pub settings: SamplerSettings,
    pub runs: usize,
    pub out: PathBuf,
}

impl SimulateArgs {
    pub fn resolve(self) -> Result<SimulatePlan> {
        let config = match &self.config {
            Some(path) => parse_config(&fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)?,
            None => BTreeMap::new(),
        };
        let name = setting(self.likelihood, &config, "likelihood")?.unwrap_or_else(|| "gaussian".into());
        let dim = setting(self.dim, &config, "dim")?.unwrap_or(2);
        let likelihood = LikelihoodSpec::from_name(&name, dim)?;
        let defaults = SamplerSettings::default();
        let settings = SamplerSettings {
            nlive: setting(self.nlive, &config, "nlive")?.unwrap_or(defaults.nlive),
            num_repeats: setting(self.num_repeats, &config, "num_repeats")?.unwrap_or(defaults.num_repeats),
            termination_frac: setting(self.termination_frac, &config, "termination_frac")?
                .unwrap_or(defaults.termination_frac),
            seed: setting(self.seed, &config, "seed")?.unwrap_or(defaults.seed),
        };
        let sampler = match setting::<String>(self.sampler, &config, "sampler")? {
            Some(s) => s.parse()?,
            None if matches!(likelihood, LikelihoodSpec::Gaussian { .. }) => SamplerKind::Perfect,
            None => SamplerKind::Slice,
        };
        let runs = setting(self.runs, &config, "runs")?.unwrap_or(1);
        let out = setting(self.out, &config, "out_dir")?
            .ok_or_else(|| Error::InvalidArgument("simulate needs --out (or out_dir in the config)".into()))?;
        Ok(SimulatePlan {
            likelihood,
            sampler,
            settings,
            runs,
            out,
        })
    }
}

fn load_runs(paths: &[PathBuf]) -> Result<Vec<NsRun>> {
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let run = read_native_file(p)?;
            // files without an id are labelled by their position on the command line
            Ok(if run.meta().contains_key("id") {
                run
            } else {
                run.with_meta("id", i.to_string())
            })
        })
        .collect()
}

fn simulate(args: SimulateArgs) -> Result<String> {
    let plan = args.resolve()?;
    if plan.runs == 0 {
        return Err(Error::InvalidArgument("runs must be positive".into()));
    }
    fs::create_dir_all(&plan.out)?;
    let runs = generate_runs(plan.sampler, plan.likelihood, plan.settings, plan.runs)?;
    let mut report = String::new();
    for (i, run) in runs.iter().enumerate() {
        let path = run_file_name(&plan.out, i, plan.runs);
        write_native_file(&path, run)?;
        report.push_str(&format!("{} ({} points)\n", path.display(), run.len()));
    }
    Ok(report)
}

fn parse_truths(args: &CheckArgs, specs: &[EstimatorSpec], dim: usize) -> Result<Vec<Option<f64>>> {
    let mut truths: Vec<Option<f64>> = specs
        .iter()
        .map(|s| match s {
            EstimatorSpec::LogEvidence => args.true_logz,
            _ => None,
        })
        .collect();
    for t in &args.truths {
        let (name, value) = t
            .rsplit_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("--truth expects SPEC=VALUE, got {t:?}")))?;
        let spec: EstimatorSpec = name.parse()?;
        let value = if value == "auto" && spec == EstimatorSpec::LogEvidence {
            true_logz(dim)
        } else {
            value
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad truth value {value:?}")))?
        };
        match specs.iter().position(|s| *s == spec) {
            Some(i) => truths[i] = Some(value),
            None => return Err(Error::InvalidArgument(format!("--truth for unrequested estimator {spec}"))),
        }
    }
    Ok(truths)
}

fn check(args: CheckArgs) -> Result<String> {
    let specs = EstimatorSpec::parse_list(&args.estimators)?;
    let runs = load_runs(&args.runs)?;
    let truths = parse_truths(&args, &specs, runs[0].dim())?;
    let budgets = error_budgets(&runs, &specs, args.bootstraps, args.seed, &truths)?;
    let report = DiagnosticReport { budgets };
    if let Some(path) = &args.csv {
        write_atomic(path, &report.to_csv())?;
    }
    Ok(report.to_table())
}

fn compare(args: CompareArgs) -> Result<String> {
    let specs = EstimatorSpec::parse_list(&args.estimators)?;
    let runs = load_runs(&args.runs)?;
    let report = pairwise_tests(&runs, &specs, args.bootstraps, args.seed, args.alpha)?;
    if let Some(path) = &args.csv {
        write_atomic(path, &report.to_csv())?;
    }
    Ok(report.to_table())
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn plot(args: PlotArgs) -> Result<String> {
    let fns: Vec<ParamFunction> = args
        .functions
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if fns.is_empty() {
        return Err(Error::InvalidArgument("no functions to plot".into()));
    }
    let runs = load_runs(&args.runs)?;
    fs::create_dir_all(&args.out)?;
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<()> {
        let path = args.out.join(name);
        write_atomic(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    for (r, run) in runs.iter().enumerate() {
        for f in &fns {
            let band = posterior_uncertainty_band(run, f, None, args.bootstraps, args.seed)?;
            let stem = format!("band_{}_{}", file_safe(&run.meta()["id"]), file_safe(&f.to_string()));
            if !band.is_nested() {
                return Err(Error::InvalidRun(format!("band for run {r} is not nested")));
            }
            emit(format!("{stem}.csv"), band.to_csv())?;
            if args.svg {
                emit(format!("{stem}.svg"), band.to_svg())?;
            }
        }
    }
    let diagram = logx_diagram(&runs, &fns, args.n_sim, args.traces, args.seed)?;
    emit("logx_mass.csv".into(), diagram.mass_csv())?;
    emit("logx_scatter.csv".into(), diagram.scatter_csv())?;
    emit("logx_traces.csv".into(), diagram.traces_csv())?;
    if args.svg {
        for f in &fns {
            let name = f.to_string();
            emit(format!("logx_{}.svg", file_safe(&name)), diagram.to_svg(&name))?;
        }
    }
    Ok(written.iter().map(|p| format!("{}\n", p.display())).collect())
}

fn import(args: ImportArgs) -> Result<String> {
    let run = read_dead_birth_file(&args.input, args.prior_sentinel)?;
    write_native_file(&args.out, &run)?;
    Ok(format!(
        "{}: {} points, {} threads\n",
        args.out.display(),
        run.len(),
        run.n_threads()
    ))
}

fn export(args: ExportArgs) -> Result<String> {
    let run = read_native_file(&args.input)?;
    write_atomic(&args.out, &write_dead_birth(&run, args.prior_sentinel)?)?;
    Ok(format!("{}: {} points\n", args.out.display(), run.len()))
}

/// Runs a parsed command, returning what it prints on success.
pub fn run_command(command: Command) -> Result<String> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Check(a) => check(a),
        Command::Compare(a) => compare(a),
        Command::Plot(a) => plot(a),
        Command::Import(a) => import(a),
        Command::Export(a) => export(a),
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit status. Output goes to stdout, diagnostics to
/// stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("nsdiag: error: {e}");
            1
        }
    }
}

/// Where `simulate` writes run `index` of `total`.
pub fn run_file_name(dir: &Path, index: usize, total: usize) -> PathBuf {
    let width = (total.max(1) - 1).to_string().len().max(3);
    dir.join(format!("run_{index:0width$}.run"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn export_default_sentinel_matches_io() {
        let cli = Cli::try_parse_from(["nsdiag", "export", "a.run", "--out", "a.txt"]).unwrap();
        match cli.command {
            Command::Export(a) => assert_eq!(a.prior_sentinel, crate::io::DEFAULT_PRIOR_SENTINEL),
            _ => unreachable!(),
        }
    }

    #[test]
    fn config_parsing() {
        let c = parse_config("# settings\nlikelihood = loggamma_mix\ndim=4\n\nnlive=50 # small\n").unwrap();
        assert_eq!(c["likelihood"], "loggamma_mix");
        assert_eq!(c["nlive"], "50");
        assert!(matches!(parse_config("nlive 50"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_config("colour=red").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("s.cfg");
        fs::write(&cfg, "likelihood=loggamma_mix\ndim=4\nnlive=50\nseed=3\nout_dir=x\n").unwrap();
        let args = SimulateArgs {
            config: Some(cfg),
            likelihood: None,
            dim: None,
            nlive: Some(80),
            num_repeats: None,
            termination_frac: None,
            sampler: None,
            runs: None,
            out: None,
            seed: None,
        };
        let plan = args.resolve().unwrap();
        assert_eq!(plan.likelihood, LikelihoodSpec::loggamma_mix(4).unwrap());
        assert_eq!(plan.settings.nlive, 80);
        assert_eq!(plan.settings.seed, 3);
        assert_eq!(plan.sampler, SamplerKind::Slice);
        assert_eq!(plan.out, PathBuf::from("x"));
    }

    #[test]
    fn bad_invocations_fail() {
        assert_eq!(dispatch(["nsdiag", "frobnicate"]), 2);
        assert_eq!(dispatch(["nsdiag", "check", "/nonexistent/a.run"]), 1);
        assert_eq!(dispatch(["nsdiag", "simulate", "--likelihood", "loggamma_mix", "--dim", "3", "--out", "/tmp"]), 1);
    }
}
