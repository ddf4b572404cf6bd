use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use wavemark::attacks::AttackSpec;
use wavemark::bench::{self, BenchSuite};
use wavemark::color::Raster;
use wavemark::io::{read_raster, write_raster};
use wavemark::metrics::{format_db, QualityReport};
use wavemark::report;
use wavemark::watermark::{self, ChannelMode, EmbedParams};
use wavemark::Error;

mod exit;

use exit::Failure;

#[derive(Parser)]
#[command(
    name = "wavemark",
    version,
    about = "Blind wavelet-domain watermarking for color images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed the key's watermark into an image.
    Embed {
        #[arg(long = "in")]
        input: PathBuf,
        /// Watermarked image, PNG or PPM.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Derive T1/T2 from the host's approximation subband.
        #[arg(long)]
        auto_thresholds: bool,
        /// Embedding report; defaults to `<out>.report.txt`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Blindly extract bits and decide whether the key's watermark is present.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Embedding report to score error rate and NC against.
        #[arg(long)]
        embed_report: Option<PathBuf>,
    },
    /// Apply one attack: `jpeg:cr=15`, `rotate:angle=-60`, `median:window=3`.
    Attack {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        spec: String,
    },
    /// MSE, PSNR and correlation between two images.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        /// Reference image, usually the unmarked host.
        #[arg(long)]
        against: PathBuf,
        /// Write the figures as a CSV row.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the full embed/attack/extract grid over a set of images.
    Bench {
        /// Test image; repeat for several.
        #[arg(long = "in")]
        inputs: Vec<PathBuf>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        key: u64,
        /// YCbCr vs. RGB comparison table destination.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print a fresh random key.
    Keygen {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    key: u64,
    #[arg(long, default_value_t = 1500.0)]
    t1: f64,
    #[arg(long, default_value_t = 1600.0)]
    t2: f64,
    #[arg(long, default_value_t = 20.0)]
    x1: f64,
    #[arg(long, default_value_t = 10.0)]
    x2: f64,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// ycbcr-y, rgb-r, rgb-g or rgb-b.
    #[arg(long, default_value = "ycbcr-y")]
    mode: String,
}

impl ParamArgs {
    fn params(&self) -> Result<EmbedParams, Failure> {
        let params = EmbedParams {
            t1: self.t1,
            t2: self.t2,
            x1: self.x1,
            x2: self.x2,
            key: self.key,
            levels: self.levels,
            channel: self.mode.parse::<ChannelMode>()?,
        };
        params.validate()?;
        Ok(params)
    }
}

fn load(path: &Path) -> Result<Raster, Failure> {
    read_raster(path).map_err(|e| Failure::io(path, e))
}

fn save(img: &Raster, path: &Path) -> Result<(), Failure> {
    write_raster(img, path).map_err(|e| Failure::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(path, e.into()))
}

fn default_report_path(out: &Path) -> PathBuf {
    out.with_extension("report.txt")
}

fn embed(
    input: &Path,
    out: &Path,
    params: &ParamArgs,
    auto_thresholds: bool,
    report_path: Option<&Path>,
) -> Result<(), Failure> {
    let mut params = params.params()?;
    let host = load(input)?;
    if auto_thresholds {
        let (t1, t2) = watermark::suggest_thresholds_for(&host, &params)?;
        params = EmbedParams { t1, t2, ..params };
        params.validate()?;
        info!("thresholds T1={t1} T2={t2}");
    }
    let (marked, report) = watermark::embed(&host, &params)?;
    save(&marked, out)?;
    let report_path = report_path.map_or_else(|| default_report_path(out), Path::to_path_buf);
    write_text(&report_path, &report::format_embed_report(&report))?;

    if report.nothing_embedded() {
        warn!("{}", report::NOTHING_EMBEDDED);
    } else if report.psnr < 30.0 {
        warn!(
            "PSNR {} dB is below 30 dB; the mark may be visible",
            format_db(report.psnr)
        );
    }
    info!(
        "{} bits embedded, PSNR {} dB, corr {}",
        report.embedded_count(),
        format_db(report.psnr),
        report
            .corr
            .map_or("undefined".into(), |c| format!("{c:.6}"))
    );
    Ok(())
}

fn extract(
    input: &Path,
    params: &ParamArgs,
    report_path: Option<&Path>,
    embed_report: Option<&Path>,
) -> Result<(), Failure> {
    let params = params.params()?;
    let embedded = match embed_report {
        None => None,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e.into()))?;
            Some(report::parse_embed_report(&text).map_err(|e| Failure::io(path, e))?)
        }
    };
    let img = load(input)?;
    let extraction = watermark::extract(&img, &params)?;
    let v = watermark::verify(&extraction, params.key, embedded.as_ref())?;
    if let Some(path) = report_path {
        write_text(
            path,
            &report::format_extraction_report(&extraction, &params, Some(&v)),
        )?;
    }
    if let Some(s) = &v.against_embed {
        info!(
            "{} of {} embedded bits recovered correctly, error rate {}%, NC {}",
            s.correctly_recovered,
            s.embedded_count,
            s.error_rate_percent
                .map_or("undefined".into(), |e| format!("{e:.2}")),
            s.nc.map_or("undefined".into(), |n| format!("{:.4}", n.normalized)),
        );
    }
    info!(
        "{} of {} recovered bits match the key",
        v.matching_count, v.recovered_count
    );
    let verdict = if v.present { "PRESENT" } else { "ABSENT" };
    println!("{verdict} score={:.4}", v.score);
    Ok(())
}

fn attack(input: &Path, out: &Path, spec: &str) -> Result<(), Failure> {
    let spec: AttackSpec = spec.parse()?;
    let img = load(input)?;
    let attacked = spec.apply(&img)?;
    if let Some(j) = attacked.jpeg {
        let msg = format!(
            "achieved CR {:.3} for target {} at quality {:.2}",
            j.achieved_cr, j.target_cr, j.quality
        );
        if j.converged {
            info!("{msg}");
        } else {
            warn!("{msg}: target not reachable within 5%");
        }
    }
    save(&attacked.image, out)
}

fn metrics(input: &Path, against: &Path, report_path: Option<&Path>) -> Result<(), Failure> {
    let a = load(input)?;
    let b = load(against)?;
    let q = QualityReport::between(&b, &a)?;
    println!("mse = {:.6}", q.mse);
    println!("psnr_db = {}", format_db(q.psnr));
    println!(
        "corr = {}",
        q.corr.map_or("undefined".into(), |c| format!("{c:.6}"))
    );
    if let Some(path) = report_path {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(QualityReport::CSV_HEADER)
            .map_err(Error::from)?;
        w.write_record(q.csv_row()).map_err(Error::from)?;
        let bytes = w
            .into_inner()
            .map_err(|e| Failure::io(path, e.into_error().into()))?;
        fs::write(path, bytes).map_err(|e| Failure::io(path, e.into()))?;
    }
    Ok(())
}

fn run_bench(
    inputs: Vec<PathBuf>,
    out: Option<&Path>,
    key: u64,
    report_path: Option<&Path>,
) -> Result<(), Failure> {
    let suite = BenchSuite::standard(inputs, key);
    let outcome = bench::run(&suite)?;
    for path in &outcome.missing {
        warn!("{}: not found, skipped", path.display());
    }
    if !outcome.missing.is_empty() {
        warn!("{} image(s) skipped", outcome.missing.len());
    }
    let csv = bench::csv_string(&outcome.rows)?;
    let table = bench::comparison_table(&outcome.rows);
    match out {
        Some(path) => {
            write_text(path, &csv)?;
            print!("{table}");
        }
        None => print!("{csv}"),
    }
    if let Some(path) = report_path {
        write_text(path, &table)?;
    }
    Ok(())
}

fn keygen(out: Option<&Path>) -> Result<(), Failure> {
    let key: u64 = rand::random();
    match out {
        Some(path) => write_text(path, &format!("{key}\n")),
        None => {
            println!("{key}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Embed {
            input,
            out,
            params,
            auto_thresholds,
            report,
        } => embed(&input, &out, &params, auto_thresholds, report.as_deref()),
        Command::Extract {
            input,
            params,
            report,
            embed_report,
        } => extract(&input, &params, report.as_deref(), embed_report.as_deref()),
        Command::Attack { input, out, spec } => attack(&input, &out, &spec),
        Command::Metrics {
            input,
            against,
            report,
        } => metrics(&input, &against, report.as_deref()),
        Command::Bench {
            inputs,
            out,
            key,
            report,
        } => run_bench(inputs, out.as_deref(), key, report.as_deref()),
        Command::Keygen { out } => keygen(out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::BAD_SPEC)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
