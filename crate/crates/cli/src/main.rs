mod input;
mod net;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thrift_core::dgp::{simulate, simulate_batch, ScenarioKind, ScenarioParams};
use thrift_core::panel::write_panels_csv;
use thrift_core::report::{
    build_report, country_name, derived_points_csv, fixed, table2, ReportConfig, ReportError,
};
use thrift_core::wid::{
    fetch_wid_bulk, Cache, CountrySelection, FetchError, FetchOptions, Transport,
};
use thrift_core::{
    country_summaries, derive_all, fit_panel_regression, pooled_weighted_theta, RegressionSpec,
    ScreenConfig, ScreenedVariable, Weighting,
};

use input::{file_sha256, load, InputArgs};

const EXIT_INPUT: u8 = 2;
const EXIT_ESTIMATION: u8 = 3;
const EXIT_NETWORK: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "thrift",
    version,
    about = "Thrift index and capital-growth regressions on national accounts panels"
)]
struct Cli {
    /// Never touch the network; fetch serves cached files only.
    #[arg(long, global = true)]
    offline: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download WID bulk files into a content-addressed cache.
    Fetch(FetchArgs),
    /// Assemble raw WID exports into a canonical panel CSV.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory (panel.csv); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Growth rates, consumption ratios and theta per country-year.
    Derive {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        screen: ScreenArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-country and pooled theta.
    Theta {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        screen: ScreenArgs,
        #[arg(long, value_enum, default_value_t = WeightArg::Gdp)]
        weights: WeightArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fixed-effects regressions of -c* on g(K) and -Δc* on Δg(K).
    Regress(RegressArgs),
    /// Synthetic panels from the thrift, free-growth or balanced scenarios.
    Simulate(SimulateArgs),
    /// Tables, the yearly theta series and machine-readable results.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = thrift_core::derive::DEFAULT_THRESHOLD)]
        screen: f64,
        #[arg(long, value_enum, default_value_t = WeightArg::Gdp)]
        weights: WeightArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Comma-separated ISO2 codes, or `all`.
    #[arg(long, value_delimiter = ',', required = true)]
    countries: Vec<String>,
    #[arg(long, default_value = ".wid-cache")]
    cache: PathBuf,
    /// Also copy each file here as WID_data_<code>.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = thrift_core::wid::fetch::DEFAULT_BASE_URL)]
    base_url: String,
    /// Download again even when an intact copy is cached.
    #[arg(long)]
    refresh: bool,
}

#[derive(Debug, Args)]
struct ScreenArgs {
    /// Minimum absolute value of the screened variable.
    #[arg(long, default_value_t = thrift_core::derive::DEFAULT_THRESHOLD)]
    screen: f64,
    /// Screened variable: `delta_g` or `g`.
    #[arg(long, default_value = "delta_g")]
    screen_on: ScreenedVariable,
}

impl ScreenArgs {
    fn config(&self) -> Result<ScreenConfig, Failure> {
        ScreenConfig::new(self.screen_on, self.screen).map_err(|e| Failure::input(anyhow!(e)))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightArg {
    Gdp,
    None,
}

impl From<WeightArg> for Weighting {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Gdp => Weighting::Gdp,
            WeightArg::None => Weighting::None,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Levels,
    Differences,
    Both,
}

#[derive(Debug, Args)]
struct RegressArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = Model::Both)]
    model: Model,
    #[arg(long, default_value_t = thrift_core::derive::DEFAULT_THRESHOLD)]
    screen: f64,
    #[arg(long, value_enum, default_value_t = WeightArg::Gdp)]
    weights: WeightArg,
    #[arg(long)]
    no_country_fe: bool,
    #[arg(long)]
    no_year_fe: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Key-value scenario file; overrides the batch options.
    #[arg(long, conflicts_with_all = ["count", "noise"])]
    params: Option<PathBuf>,
    #[arg(long, default_value = "thrift")]
    kind: ScenarioKind,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 30)]
    n_years: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of multiplicative log-normal measurement noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Output directory (panel.csv); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_INPUT,
            error,
        }
    }

    fn estimation(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_ESTIMATION,
            error,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self::input(error)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fetch(args) => fetch(&args, cli.offline),
        Command::Ingest { input, out } => {
            let loaded = load_inputs(&input)?;
            emit(out.as_deref(), "panel.csv", &write_panels_csv(&loaded))
        }
        Command::Derive { input, screen, out } => {
            let screen = screen.config()?;
            let panels = load_inputs(&input)?;
            emit(
                out.as_deref(),
                "derived.csv",
                &derived_points_csv(&derive_all(&panels, &screen)),
            )
        }
        Command::Theta {
            input,
            screen,
            weights,
            out,
        } => theta(&input, &screen, weights.into(), out.as_deref()),
        Command::Regress(args) => regress(&args),
        Command::Simulate(args) => simulate_cmd(&args),
        Command::Report {
            input,
            screen,
            weights,
            out,
        } => report(&input, screen, weights.into(), &out),
    }
}

fn load_inputs(args: &InputArgs) -> Result<Vec<thrift_core::CountryPanel>, Failure> {
    let loaded = load(args)?;
    for note in &loaded.notes {
        eprintln!("note: {note}");
    }
    Ok(loaded.panels)
}

/// Writes `text` to `dir/name`, or to stdout when no directory is given.
fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<(), Failure> {
    match dir {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(dir) => write_files(dir, &[(name, text.to_owned())]),
    }
}

fn write_files(dir: &Path, files: &[(&str, String)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn fetch(args: &FetchArgs, offline: bool) -> Result<(), Failure> {
    let selection = if args.countries.iter().any(|c| c.eq_ignore_ascii_case("all")) {
        CountrySelection::All
    } else {
        CountrySelection::Countries(args.countries.clone())
    };
    let http;
    let transport: &dyn Transport = if offline {
        &net::Offline
    } else {
        http = net::Http::new().map_err(|e| Failure {
            code: EXIT_NETWORK,
            error: anyhow!(e).context("building HTTP client"),
        })?;
        &http
    };
    let mut cache = Cache::open(&args.cache).map_err(fetch_failure)?;
    let options = FetchOptions {
        base_url: args.base_url.clone(),
        refresh: args.refresh,
    };
    let paths =
        fetch_wid_bulk(&mut cache, &selection, transport, &options).map_err(fetch_failure)?;
    let names: BTreeMap<PathBuf, String> = cache
        .entries()
        .map(|e| {
            let file = e.url.rsplit('/').next().unwrap_or(&e.url).to_owned();
            (cache.dir().join(&e.path), file)
        })
        .collect();
    for path in &paths {
        match (&args.out, names.get(path)) {
            (Some(out), Some(name)) => {
                fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
                let target = out.join(name);
                fs::copy(path, &target)
                    .with_context(|| format!("copying to {}", target.display()))?;
                println!("{}", target.display());
            }
            _ => println!("{}", path.display()),
        }
    }
    Ok(())
}

fn fetch_failure(e: FetchError) -> Failure {
    let code = match e {
        FetchError::Network { .. } => EXIT_NETWORK,
        _ => EXIT_INPUT,
    };
    Failure {
        code,
        error: e.into(),
    }
}

fn theta(
    input: &InputArgs,
    screen: &ScreenArgs,
    weighting: Weighting,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let screen = screen.config()?;
    let panels = load_inputs(input)?;
    let points = derive_all(&panels, &screen);
    let pooled =
        pooled_weighted_theta(&points, weighting).map_err(|e| Failure::estimation(e.into()))?;
    let summaries = country_summaries(&points);
    let mut text = table2(&summaries, &screen);
    let _ = writeln!(
        text,
        "\nPooled θ_c ({weighting}-weighted): {}",
        fixed(pooled, 3)
    );
    match out {
        None => print!("{text}"),
        Some(dir) => {
            let mut csv = String::from("country,name,theta_c,n_periods,first_year,last_year\n");
            for s in &summaries {
                let _ = writeln!(
                    csv,
                    "{},{},{:?},{},{},{}",
                    s.country,
                    country_name(&s.country).replace(',', " "),
                    s.theta_mean,
                    s.n_periods,
                    s.first_year,
                    s.last_year
                );
            }
            write_files(
                dir,
                &[
                    ("table2.txt", text),
                    ("theta.csv", csv),
                    ("pooled_theta.txt", format!("pooled_theta={pooled:?}\n")),
                ],
            )?;
        }
    }
    Ok(())
}

fn regress(args: &RegressArgs) -> Result<(), Failure> {
    let specs: Vec<(&str, RegressionSpec)> = match args.model {
        Model::Levels => vec![("levels", RegressionSpec::levels())],
        Model::Differences => vec![("differences", RegressionSpec::differences())],
        Model::Both => vec![
            ("levels", RegressionSpec::levels()),
            ("differences", RegressionSpec::differences()),
        ],
    };
    let panels = load_inputs(&args.input)?;
    let mut text = String::new();
    for (name, base) in specs {
        let spec = base
            .with_weights(args.weights.into())
            .with_fixed_effects(!args.no_country_fe, !args.no_year_fe)
            .with_threshold(args.screen)
            .map_err(|e| Failure::input(e.into()))?;
        let points = derive_all(&panels, &spec.screen);
        let fit = fit_panel_regression(&spec, &points)
            .map_err(|e| Failure::estimation(anyhow!(e).context(format!("{name} regression"))))?;
        for line in fit.to_key_value().lines() {
            let _ = writeln!(text, "{name}.{line}");
        }
    }
    emit(args.out.as_deref(), "regression.txt", &text)
}

fn simulate_cmd(args: &SimulateArgs) -> Result<(), Failure> {
    let panels = match &args.params {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let params = ScenarioParams::from_key_value(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            vec![simulate(&params).map_err(|e| Failure::input(e.into()))?]
        }
        None => simulate_batch(args.kind, args.count, args.n_years, args.seed, args.noise)
            .map_err(|e| Failure::input(e.into()))?,
    };
    emit(args.out.as_deref(), "panel.csv", &write_panels_csv(&panels))
}

fn report(input: &InputArgs, screen: f64, weighting: Weighting, out: &Path) -> Result<(), Failure> {
    let panels = load_inputs(input)?;
    let config = ReportConfig {
        threshold: screen,
        weighting,
    };
    let report = build_report(&panels, &config).map_err(|e| match e {
        ReportError::Threshold(_) => Failure::input(e.into()),
        _ => Failure::estimation(e.into()),
    })?;
    let mut files = report.files();
    files.push(("run_manifest.txt", manifest(input, &config)?));
    write_files(out, &files)?;
    eprintln!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

/// Configuration, input hashes, version and wall-clock time of a run.
/// The only output that is allowed to differ between identical runs.
fn manifest(input: &InputArgs, config: &ReportConfig) -> Result<String, Failure> {
    let mut text = String::new();
    let _ = writeln!(text, "software=thrift {}", env!("CARGO_PKG_VERSION"));
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(text, "timestamp_unix={secs}");
    let _ = writeln!(text, "screen_variable=delta_g");
    let _ = writeln!(text, "screen_threshold={:?}", config.threshold);
    let _ = writeln!(text, "weights={}", config.weighting.key());
    let _ = writeln!(text, "countries={}", input.countries.join(","));
    let _ = writeln!(text, "exclude={}", input.exclude.join(","));
    match input.years {
        Some(r) => {
            let _ = writeln!(text, "years={}..{}", r.first, r.last);
        }
        None => text.push_str("years=\n"),
    }
    for path in &input.input {
        let _ = writeln!(
            text,
            "input={}\tsha256={}",
            path.display(),
            file_sha256(path)?
        );
    }
    Ok(text)
}
