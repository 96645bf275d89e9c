use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sunqp::fluct::EdgePolicy;
use sunqp::harmonics::PairingRule;
use sunqp::ingest::{fill_gaps, parse_daily_file, write_canonical_csv, ColumnMap, GapPolicy};
use sunqp::output::{read_manifest, read_report, series_csv, verify_manifest, RunStatus};
use sunqp::pipeline::{run_pipeline, HemisphereSelection, RunConfig, RunReport};
use sunqp::synth::{generate, Amplitude, Component, SynthSpec};
use sunqp::wavelet::{Background, CoiPolicy};
use sunqp::{Error, ErrorClass, Execution};

/// File looked up in the data directory when no input is given.
const DEFAULT_DATA_FILE: &str = "daily_area.txt";

#[derive(Parser)]
#[command(
    name = "sunqp",
    version,
    about = "Quasi-periodicities in hemispheric sunspot-area fluctuations"
)]
struct Cli {
    /// Run per-cycle analyses on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a daily area file and write the canonical CSV.
    Ingest(IngestArgs),
    /// Run the full pipeline and write all tables under the output directory.
    Analyze(Box<AnalyzeArgs>),
    /// Generate a synthetic series.
    Synth(SynthArgs),
    /// Summarize a finished run and check its manifest digests.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// Whitespace-separated `year month day total north south`.
    Greenwich,
    /// `date,area_total,area_north,area_south`.
    Canonical,
}

#[derive(clap::Args)]
struct IngestArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "greenwich")]
    format: InputFormat,
    #[arg(long, value_enum, default_value = "skip")]
    gap_policy: GapArg,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GapArg {
    Skip,
    Zero,
    Error,
}

impl From<GapArg> for GapPolicy {
    fn from(g: GapArg) -> Self {
        match g {
            GapArg::Skip => GapPolicy::Skip,
            GapArg::Zero => GapPolicy::Zero,
            GapArg::Error => GapPolicy::Error,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HemisphereArg {
    North,
    South,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum EdgeArg {
    Shrink,
    Trim,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackgroundArg {
    White,
    Red,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoiArg {
    All,
    ExcludeCoi,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairingArg {
    OneSe,
    TwoSe,
    ArgmaxOnly,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Daily area file. Relative paths are also looked up in the data
    /// directory.
    #[arg(long, conflicts_with = "fixture")]
    input: Option<PathBuf>,
    /// Analyze the bundled synthetic records.
    #[arg(long)]
    fixture: bool,
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Default data directory, holding `daily_area.txt`.
    #[arg(long, env = "SUNQP_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Hemispheres to analyze.
    #[arg(long, value_enum)]
    hemisphere: Option<HemisphereArg>,
    /// Cycle boundary CSV replacing the shipped table.
    #[arg(long)]
    cycle_table: Option<PathBuf>,
    /// Julian date at which rotation 1 begins.
    #[arg(long)]
    epoch_jd: Option<f64>,
    /// Synodic rotation period in days.
    #[arg(long)]
    period_days: Option<f64>,
    /// Running-mean handling at the series ends.
    #[arg(long, value_enum)]
    edge_policy: Option<EdgeArg>,
    /// Handling of missing days.
    #[arg(long, value_enum)]
    gap_policy: Option<GapArg>,
    /// Largest ACF lag in rotations.
    #[arg(long)]
    max_lag: Option<usize>,
    /// Morlet nondimensional frequency.
    #[arg(long)]
    omega0: Option<f64>,
    /// Smallest wavelet scale in rotations.
    #[arg(long)]
    s0: Option<f64>,
    /// Scale spacing in octaves.
    #[arg(long)]
    dj: Option<f64>,
    /// Wavelet significance background.
    #[arg(long, value_enum)]
    background: Option<BackgroundArg>,
    /// Whether the global spectrum averages inside the cone of influence.
    #[arg(long, value_enum)]
    coi_policy: Option<CoiArg>,
    /// Confidence level, e.g. 0.95.
    #[arg(long)]
    level: Option<f64>,
    /// Which ACF peaks enter the harmonic regressions.
    #[arg(long, value_enum)]
    pairing_rule: Option<PairingArg>,
    /// Histogram bin count.
    #[arg(long)]
    bins: Option<usize>,
    /// Fixture seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// TOML synthetic spec; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Series length.
    #[arg(long)]
    n: Option<usize>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// `PERIOD:AMPLITUDE[:PHASE]`
    #[arg(long, value_name = "SPEC")]
    sinusoid: Vec<String>,
    /// `SIGMA`
    #[arg(long, value_name = "SIGMA")]
    white_noise: Vec<f64>,
    /// `PHI:SIGMA`
    #[arg(long, value_name = "SPEC")]
    ar1: Vec<String>,
    /// `MEAN_SPACING[:MU:SIGMA]` with lognormal amplitudes.
    #[arg(long, value_name = "SPEC")]
    pulse_train: Vec<String>,
    /// Output file; stdout when unset.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// Output directory of a previous `analyze` run.
    dir: PathBuf,
}

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Degenerate => 4,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let res = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Analyze(a) => analyze(*a, exec),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).map_err(|e| Error::io(p.display().to_string(), e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn ingest(a: IngestArgs) -> Result<(), Error> {
    let map = match a.format {
        InputFormat::Greenwich => ColumnMap::default(),
        InputFormat::Canonical => ColumnMap::canonical_csv(),
    };
    let f = File::open(&a.input).map_err(|e| Error::io(a.input.display().to_string(), e))?;
    let parsed = parse_daily_file(BufReader::new(f), &map)?;
    let records = fill_gaps(&parsed.records, a.gap_policy.into())?;
    let mut out = open_output(a.output.as_deref())?;
    write_canonical_csv(&records, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("writing canonical csv", e))?;
    eprintln!(
        "{} records ({} missing, {} header lines of {} total)",
        records.len(),
        parsed.missing_lines,
        parsed.header_lines,
        parsed.total_lines
    );
    Ok(())
}

fn resolve_input(path: PathBuf, data_dir: Option<&Path>) -> PathBuf {
    match data_dir {
        Some(d) if path.is_relative() && !path.exists() => d.join(path),
        _ => path,
    }
}

fn build_config(a: AnalyzeArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if a.fixture {
        cfg.fixture = true;
        cfg.input_path = None;
    }
    if let Some(p) = a.input {
        cfg.fixture = false;
        cfg.input_path = Some(p);
    }
    if !cfg.fixture {
        cfg.input_path = match (cfg.input_path.take(), &a.data_dir) {
            (Some(p), d) => Some(resolve_input(p, d.as_deref())),
            (None, Some(d)) => Some(d.join(DEFAULT_DATA_FILE)),
            (None, None) => None,
        };
    }
    if let Some(o) = a.output {
        cfg.output_dir = o;
    }
    if let Some(h) = a.hemisphere {
        cfg.hemispheres = match h {
            HemisphereArg::North => HemisphereSelection::North,
            HemisphereArg::South => HemisphereSelection::South,
            HemisphereArg::Both => HemisphereSelection::Both,
        };
    }
    if let Some(t) = a.cycle_table {
        cfg.cycle_table_path = Some(t);
    }
    if a.epoch_jd.is_some() {
        cfg.ephemeris.epoch_julian_date = a.epoch_jd;
    }
    if a.period_days.is_some() {
        cfg.ephemeris.synodic_period_days = a.period_days;
    }
    if let Some(e) = a.edge_policy {
        cfg.edge_policy = match e {
            EdgeArg::Shrink => EdgePolicy::Shrink,
            EdgeArg::Trim => EdgePolicy::Trim,
        };
    }
    if let Some(g) = a.gap_policy {
        cfg.gap_policy = g.into();
    }
    if let Some(m) = a.max_lag {
        cfg.acf.max_lag = m;
    }
    if let Some(w) = a.omega0 {
        cfg.wavelet.omega0 = w;
    }
    if a.s0.is_some() {
        cfg.wavelet.s0 = a.s0;
    }
    if let Some(dj) = a.dj {
        cfg.wavelet.dj = dj;
    }
    if let Some(b) = a.background {
        cfg.wavelet.background = match b {
            BackgroundArg::White => Background::White,
            BackgroundArg::Red => Background::Red,
        };
    }
    if let Some(c) = a.coi_policy {
        cfg.wavelet.coi_policy = match c {
            CoiArg::All => CoiPolicy::All,
            CoiArg::ExcludeCoi => CoiPolicy::ExcludeCoi,
        };
    }
    if let Some(l) = a.level {
        cfg.significance_level = l;
    }
    if let Some(p) = a.pairing_rule {
        cfg.pairing_rule = match p {
            PairingArg::OneSe => PairingRule::OneSe,
            PairingArg::TwoSe => PairingRule::TwoSe,
            PairingArg::ArgmaxOnly => PairingRule::ArgmaxOnly,
        };
    }
    if a.bins.is_some() {
        cfg.histogram_bins = a.bins;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn analyze(a: AnalyzeArgs, exec: Execution) -> Result<(), Error> {
    let cfg = build_config(a)?;
    let report = run_pipeline(&cfg, exec)?;
    print_report(&report);
    println!("outputs written to {}", cfg.output_dir.display());
    Ok(())
}

fn parse_fields(spec: &str, min: usize, max: usize) -> Result<Vec<f64>, Error> {
    let fields: Vec<f64> = spec
        .split(':')
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidSpec(format!("cannot parse component '{spec}'")))?;
    if fields.len() < min || fields.len() > max {
        return Err(Error::InvalidSpec(format!(
            "component '{spec}' needs {min} to {max} fields"
        )));
    }
    Ok(fields)
}

fn synth(a: SynthArgs) -> Result<(), Error> {
    let mut spec = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))?;
            SynthSpec::from_toml(&text)?
        }
        None => SynthSpec {
            n: 0,
            seed: 0,
            components: Vec::new(),
        },
    };
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let mut flagged = Vec::new();
    for s in &a.sinusoid {
        let f = parse_fields(s, 2, 3)?;
        flagged.push(Component::Sinusoid {
            period: f[0],
            amplitude: f[1],
            phase: f.get(2).copied().unwrap_or(0.0),
        });
    }
    for &sigma in &a.white_noise {
        flagged.push(Component::WhiteNoise { sigma });
    }
    for s in &a.ar1 {
        let f = parse_fields(s, 2, 2)?;
        flagged.push(Component::Ar1 { phi: f[0], sigma: f[1] });
    }
    for s in &a.pulse_train {
        let f = parse_fields(s, 1, 3)?;
        let amplitude = match f.len() {
            1 => Amplitude::default(),
            3 => Amplitude::Lognormal { mu: f[1], sigma: f[2] },
            _ => return Err(Error::InvalidSpec(format!("pulse train '{s}' needs 1 or 3 fields"))),
        };
        flagged.push(Component::PulseTrain {
            mean_spacing: f[0],
            amplitude,
        });
    }
    if !flagged.is_empty() {
        spec.components = flagged;
    }
    let values = generate(&spec)?;
    let mut out = open_output(a.output.as_deref())?;
    out.write_all(series_csv(&values).as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("writing series", e))?;
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

fn print_report(r: &RunReport) {
    println!("input: {}", r.input);
    for h in &r.hemispheres {
        println!(
            "{}: N = {} (rotations {}..{}), {} cycles, skewness {:.3}",
            h.hemisphere,
            h.n,
            h.first_rotation.unwrap_or_default(),
            h.last_rotation.unwrap_or_default(),
            h.cycles.len(),
            h.skewness
        );
        for t in &h.tests {
            println!(
                "  {:?}: statistic {:.4}, p {:.3e}, reject at {}: {}",
                t.test_name, t.statistic, t.p_value, t.alpha, t.reject
            );
        }
    }
    for s in &r.acf_summary {
        println!(
            "acf {}: {} cases, above 2se {}, between 1se-2se {}, mean significant tau {}",
            s.series_kind,
            s.cases,
            fmt_opt(s.above_2se_share, 2),
            fmt_opt(s.between_1se_2se_share, 2),
            fmt_opt(s.mean_significant_tau, 2)
        );
    }
    if let Some(k) = &r.hemispheric_symmetry {
        println!(
            "north vs south dominant periods: D = {:.3}, p = {:.3}, reject: {}",
            k.result.statistic, k.result.p_value, k.result.reject
        );
    }
    for g in &r.regressions {
        println!(
            "regression {} k={}: {} points ({} excluded), slope {}, intercept {}, r {}{}",
            g.kind,
            g.k,
            g.n_points,
            g.excluded,
            fmt_opt(g.slope, 3),
            fmt_opt(g.intercept, 3),
            fmt_opt(g.r, 3),
            g.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
        );
    }
    for a in &r.agreement {
        println!(
            "acf/wavelet {}: {} matched, r {}, within one rotation {}",
            a.kind,
            a.matched,
            fmt_opt(a.pearson_r, 3),
            fmt_opt(a.fraction_within_one, 2)
        );
    }
}

fn report(a: ReportArgs) -> Result<(), Error> {
    let manifest = read_manifest(&a.dir)?;
    if manifest.status == RunStatus::Failed {
        return Err(Error::io(
            format!("run in {}", a.dir.display()),
            io::Error::other(manifest.error.unwrap_or_else(|| "failed".into())),
        ));
    }
    let bad = verify_manifest(&a.dir, &manifest);
    let r = read_report(&a.dir)?;
    print_report(&r);
    println!("{} files in manifest", manifest.files.len());
    if !bad.is_empty() {
        return Err(Error::io(
            format!("digest mismatch for {}", bad.join(", ")),
            io::Error::other("manifest verification failed"),
        ));
    }
    Ok(())
}
