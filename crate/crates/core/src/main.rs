//! Command-line front end. Exit codes: 0 success, 1 usage or configuration
//! error, 2 numerical failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_bias::dynamics::{
    build_forecast, iterations_to_fraction, write_curve_csv, write_threshold_csv, ThresholdQuery, ThresholdRow,
};
use spectral_bias::experiments::demos::{
    cross_entropy_default, demo_cross_entropy, demo_odd_interpolation, demo_two_sines, OddConfig, TwoSinesConfig,
};
use spectral_bias::experiments::report::{emit_spectrum_report, SpectrumReportConfig};
use spectral_bias::experiments::sweep::{predicted_eigenvalue, run_sweep, SweepResult, SweepSpec};
use spectral_bias::harmonics::{circle_grid_angles, uniform_circle_grid};
use spectral_bias::spectra::write_spectrum_csv;
use spectral_bias::{gram_matrix, Error, KernelVariant, Result};

#[derive(Debug, Parser)]
#[command(name = "spectral-bias", version, about = "Frequency-resolved training analysis of wide ReLU networks")]
struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV, JSON and SVG outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Tabular output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantChoice {
    Both,
    BiasFree,
    WithBias,
}

impl VariantChoice {
    fn variants(self) -> Vec<KernelVariant> {
        match self {
            VariantChoice::Both => KernelVariant::ALL.to_vec(),
            VariantChoice::BiasFree => vec![KernelVariant::BiasFree],
            VariantChoice::WithBias => vec![KernelVariant::WithBias],
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel coefficients from every source, plus eigenvector panels.
    Spectrum(SpectrumArgs),
    /// Frequency sweep from a TOML or JSON config.
    Sweep(SweepArgs),
    /// Linear-dynamics iteration table and residual curve on the circle or sphere.
    Forecast(ForecastArgs),
    /// Small demonstrations.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Sphere dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    d: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    kmax: usize,
    #[arg(long, value_enum, default_value_t = VariantChoice::Both)]
    variant: VariantChoice,
    /// Grid size for circle matrix estimates.
    #[arg(long, default_value_t = 2048)]
    circle_n: usize,
    /// Sample count for sphere matrix estimates.
    #[arg(long, default_value_t = 1500)]
    sphere_n: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the frequency list.
    #[arg(long, value_delimiter = ',')]
    freqs: Option<Vec<usize>>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, value_enum, default_value_t = VariantChoice::WithBias)]
    variant: VariantChoice,
    /// Grid size (d = 1) or sample count (d >= 2).
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 16)]
    kmax: usize,
    #[arg(long, default_value_t = 0.05)]
    stop_fraction: f64,
    /// Circle only: also write the residual curve for labels `cos(k theta)`.
    #[arg(long)]
    label_freq: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    t_max: u64,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(value_enum)]
    which: DemoKind,
    /// TOML or JSON overriding the demo defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemoKind {
    TwoSines,
    Odd,
    CrossEntropy,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::Spectrum(args) => spectrum(cli, args),
        Command::Sweep(args) => sweep(cli, args),
        Command::Forecast(args) => forecast(cli, args),
        Command::Demo(args) => demo(cli, args),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).map_err(|e| {
        Error::Config(format!("cannot write {}: {e}", path.display()))
    })?))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn spectrum(cli: &Cli, args: &SpectrumArgs) -> Result<()> {
    let config = SpectrumReportConfig {
        d_list: args.d.clone(),
        k_max: args.kmax,
        variants: args.variant.variants(),
        circle_n: args.circle_n,
        sphere_n: args.sphere_n,
        seed: cli.seed.unwrap_or(0),
        ..SpectrumReportConfig::default()
    };
    let report = emit_spectrum_report(&config)?;
    match cli.format {
        Format::Csv => write_spectrum_csv(&report.entries, create(&cli.out_dir, "spectrum.csv")?)?,
        Format::Json => write_text(&cli.out_dir, "spectrum.json", &json(&report.entries))?,
    }
    for (stem, svg) in &report.panels {
        write_text(&cli.out_dir, &format!("{stem}.svg"), svg)?;
    }
    println!("{} coefficients, {} panels -> {}", report.entries.len(), report.panels.len(), cli.out_dir.display());
    Ok(())
}

fn write_sweep(cli: &Cli, stem: &str, result: &SweepResult) -> Result<()> {
    match cli.format {
        Format::Csv => {
            result.write_cells_csv(create(&cli.out_dir, &format!("{stem}_cells.csv"))?)?;
            result.write_summary_csv(create(&cli.out_dir, &format!("{stem}_summary.csv"))?)?;
        }
        Format::Json => write_text(&cli.out_dir, &format!("{stem}.json"), &result.to_json())?,
    }
    write_text(&cli.out_dir, &format!("{stem}.svg"), &result.plot().render())?;
    for f in &result.frequencies {
        let median = f.median_epochs.map_or("did not converge".to_string(), |e| format!("{e}"));
        println!("k = {:>3}  median epochs {median}", f.k);
    }
    match &result.fit {
        Some(fit) => println!("fitted exponent {:.3} +/- {:.3}", fit.exponent, fit.stderr),
        None => println!("fitted exponent unavailable"),
    }
    Ok(())
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let mut spec = SweepSpec::load(&args.config)?;
    if let Some(f) = &args.freqs {
        spec.freqs = f.clone();
    }
    if let Some(s) = args.seeds {
        spec.seeds = s;
    }
    if let Some(e) = args.max_epochs {
        spec.max_epochs = e;
    }
    if let Some(m) = args.m {
        spec.m = m;
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    write_sweep(cli, "sweep", &run_sweep(&spec)?)
}

fn forecast(cli: &Cli, args: &ForecastArgs) -> Result<()> {
    let variants = args.variant.variants();
    let query = ThresholdQuery::new(args.stop_fraction, 0.0)?;
    let mut rows = Vec::new();
    for &variant in &variants {
        let lambda_max = (0..=1)
            .map(|k| predicted_eigenvalue(variant, args.d, args.n, k))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if args.eta * lambda_max >= 1.0 {
            return Err(Error::StepTooLarge(args.eta * lambda_max));
        }
        for k in 0..=args.kmax {
            let lambda = predicted_eigenvalue(variant, args.d, args.n, k)?;
            rows.push((variant, ThresholdRow { k, lambda, iterations: iterations_to_fraction(lambda, args.eta, query)? }));
        }
    }
    for &variant in &variants {
        let table: Vec<ThresholdRow> = rows.iter().filter(|r| r.0 == variant).map(|r| r.1).collect();
        match cli.format {
            Format::Csv => write_threshold_csv(&table, create(&cli.out_dir, &format!("forecast_{variant}.csv"))?)?,
            Format::Json => write_text(&cli.out_dir, &format!("forecast_{variant}.json"), &json(&table))?,
        }
        for row in &table {
            println!("{variant} k = {:>3}  lambda {:.4e}  iterations {}", row.k, row.lambda, row.iterations);
        }
    }
    if let Some(k) = args.label_freq {
        if args.d != 1 {
            return Err(Error::Config("--label-freq is only available for d = 1".into()));
        }
        let labels: Vec<f64> = circle_grid_angles(args.n).iter().map(|t| (k as f64 * t).cos()).collect();
        let points = uniform_circle_grid(args.n);
        for &variant in &variants {
            let f = build_forecast(&gram_matrix(&points, variant)?, &labels, args.eta)?;
            let steps: Vec<u64> = (0..=args.t_max).collect();
            let curve = f.residual_curve(&steps);
            match cli.format {
                Format::Csv => write_curve_csv(&curve, create(&cli.out_dir, &format!("curve_{variant}_k{k}.csv"))?)?,
                Format::Json => write_text(&cli.out_dir, &format!("curve_{variant}_k{k}.json"), &json(&curve))?,
            }
        }
    }
    Ok(())
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn demo(cli: &Cli, args: &DemoArgs) -> Result<()> {
    match args.which {
        DemoKind::TwoSines => {
            let mut config: TwoSinesConfig = args.config.as_deref().map(load_config).transpose()?.unwrap_or_default();
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let report = demo_two_sines(&config)?;
            write_text(&cli.out_dir, "two_sines.svg", &report.plot().render())?;
            write_text(&cli.out_dir, "two_sines_energy.svg", &report.energy_plot().render())?;
            write_text(&cli.out_dir, "two_sines.json", &json(&report))?;
            let show = |e: Option<usize>| e.map_or("not reached".to_string(), |e| e.to_string());
            println!("k = {} fitted at epoch {}", config.low, show(report.epochs_low));
            println!("k = {} fitted at epoch {}", config.high, show(report.epochs_high));
            if let Some(r) = report.ratio() {
                println!("epoch ratio {r:.2}");
            }
            println!("max DC share {:.2e}", report.max_dc_fraction);
        }
        DemoKind::Odd => {
            let mut config: OddConfig = args.config.as_deref().map(load_config).transpose()?.unwrap_or_default();
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let report = demo_odd_interpolation(&config)?;
            write_text(&cli.out_dir, "odd.svg", &report.plot().render())?;
            write_text(&cli.out_dir, "odd.json", &json(&report))?;
            println!("train relative residual {:.3e}", report.train_relative_residual);
            println!("dense relative error {:.3}", report.dense_relative_error);
            println!("odd k >= 3 energy share {:.3e}", report.odd_energy_fraction);
        }
        DemoKind::CrossEntropy => {
            let mut spec = match &args.config {
                Some(path) => SweepSpec::load(path)?,
                None => cross_entropy_default(),
            };
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            write_sweep(cli, "cross_entropy", &demo_cross_entropy(&spec)?)?;
        }
    }
    Ok(())
}
