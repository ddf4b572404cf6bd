//! Embed → attack → extract → verify over a grid of images, channel modes
//! and attacks, producing one CSV row per cell.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::attacks::AttackSpec;
use crate::color::Raster;
use crate::error::Result;
use crate::io::read_raster;
use crate::metrics::{self, format_db, format_opt};
use crate::watermark::{self, ChannelMode, EmbedParams, EmbedReport};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSuite {
    pub images: Vec<PathBuf>,
    pub crs: Vec<f64>,
    pub angles: Vec<f64>,
    pub windows: Vec<usize>,
    pub modes: Vec<ChannelMode>,
    /// Key and thresholds; the channel is overridden per mode.
    pub params: EmbedParams,
}

impl BenchSuite {
    /// The standard grid: CR {5,10,15,20}, angles {20,-60,130,-110},
    /// median windows {3,5}, Y luma vs. RGB green.
    pub fn standard(images: Vec<PathBuf>, key: u64) -> Self {
        Self {
            images,
            crs: vec![5.0, 10.0, 15.0, 20.0],
            angles: vec![20.0, -60.0, 130.0, -110.0],
            windows: vec![3, 5],
            modes: vec![ChannelMode::YcbcrY, ChannelMode::RgbG],
            params: EmbedParams::with_key(key),
        }
    }

    /// `None` first (the no-attack row), then JPEG, rotation, median.
    pub fn attacks(&self) -> Vec<Option<AttackSpec>> {
        let mut out = vec![None];
        out.extend(self.crs.iter().map(|&cr| Some(AttackSpec::Jpeg { cr })));
        out.extend(
            self.angles
                .iter()
                .map(|&angle| Some(AttackSpec::Rotate { angle })),
        );
        out.extend(
            self.windows
                .iter()
                .map(|&window| Some(AttackSpec::Median { window })),
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub image: String,
    pub mode: ChannelMode,
    /// `none` for the unattacked row, otherwise the attack spec string.
    pub attack: String,
    pub embedded_bits: usize,
    /// Positions that passed the extraction window, right or wrong.
    pub recovered_positions: usize,
    /// Embedded positions recovered with the correct bit.
    pub extracted_bits: usize,
    pub nc: Option<f64>,
    pub nc_sqrt: Option<f64>,
    pub error_rate_percent: Option<f64>,
    /// Watermarked vs. host.
    pub psnr_db: f64,
    pub corr: Option<f64>,
    /// Attacked vs. watermarked.
    pub attacked_psnr_db: f64,
    pub presence_score: f64,
    pub present: bool,
    pub achieved_cr: Option<f64>,
    pub jpeg_quality: Option<f64>,
}

impl BenchRow {
    pub const CSV_HEADER: [&'static str; 16] = [
        "image",
        "mode",
        "attack",
        "embedded_bits",
        "recovered_positions",
        "extracted_bits",
        "nc",
        "nc_sqrt",
        "error_rate_percent",
        "psnr_db",
        "corr",
        "attacked_psnr_db",
        "presence_score",
        "present",
        "achieved_cr",
        "jpeg_quality",
    ];

    pub fn csv_record(&self) -> [String; 16] {
        [
            self.image.clone(),
            self.mode.to_string(),
            self.attack.clone(),
            self.embedded_bits.to_string(),
            self.recovered_positions.to_string(),
            self.extracted_bits.to_string(),
            format_opt(self.nc, 6),
            format_opt(self.nc_sqrt, 6),
            format_opt(self.error_rate_percent, 4),
            format_db(self.psnr_db),
            format_opt(self.corr, 6),
            format_db(self.attacked_psnr_db),
            format!("{:.6}", self.presence_score),
            self.present.to_string(),
            format_opt(self.achieved_cr, 4),
            format_opt(self.jpeg_quality, 4),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    /// Images that did not exist and were skipped.
    pub missing: Vec<PathBuf>,
}

fn image_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

struct Marked {
    name: String,
    marked: Raster,
    report: EmbedReport,
}

fn run_cell(m: &Marked, attack: Option<&AttackSpec>) -> Result<BenchRow> {
    let params = m.report.params;
    let (attacked, jpeg) = match attack {
        None => (m.marked.clone(), None),
        Some(spec) => {
            let a = spec.apply(&m.marked)?;
            (a.image, a.jpeg)
        }
    };
    let extraction = watermark::extract(&attacked, &params)?;
    let v = watermark::verify(&extraction, params.key, Some(&m.report))?;
    let scored = v
        .against_embed
        .expect("verified against the embedding record");
    Ok(BenchRow {
        image: m.name.clone(),
        mode: params.channel,
        attack: attack.map_or("none".into(), |a| a.to_string()),
        embedded_bits: scored.embedded_count,
        recovered_positions: v.recovered_count,
        extracted_bits: scored.correctly_recovered,
        nc: scored.nc.map(|n| n.normalized),
        nc_sqrt: scored.nc.map(|n| n.sqrt_denominator),
        error_rate_percent: scored.error_rate_percent,
        psnr_db: m.report.psnr,
        corr: m.report.corr,
        attacked_psnr_db: metrics::psnr(&m.marked, &attacked)?,
        presence_score: v.score,
        present: v.present,
        achieved_cr: jpeg.map(|j| j.achieved_cr),
        jpeg_quality: jpeg.map(|j| j.quality),
    })
}

/// Runs every cell. Rows are ordered by image, then mode, then attack in
/// suite order, independent of scheduling.
pub fn run(suite: &BenchSuite) -> Result<BenchOutcome> {
    let (present, missing): (Vec<_>, Vec<_>) = suite.images.iter().partition(|p| p.exists());
    let hosts = present
        .iter()
        .map(|p| Ok((image_name(p), read_raster(p)?)))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(&String, &Raster, ChannelMode)> = hosts
        .iter()
        .flat_map(|(name, host)| suite.modes.iter().map(move |&mode| (name, host, mode)))
        .collect();
    let marked = jobs
        .par_iter()
        .map(|&(name, host, channel)| {
            let params = EmbedParams {
                channel,
                ..suite.params
            };
            let (marked, report) = watermark::embed(host, &params)?;
            Ok(Marked {
                name: name.clone(),
                marked,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let attacks = suite.attacks();
    let cells: Vec<(&Marked, Option<&AttackSpec>)> = marked
        .iter()
        .flat_map(|m| attacks.iter().map(move |a| (m, a.as_ref())))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(m, a)| run_cell(m, a))
        .collect::<Result<Vec<_>>>()?;

    Ok(BenchOutcome {
        rows,
        missing: missing.into_iter().cloned().collect(),
    })
}

/// Writes the header and one record per row; an empty slice yields a
/// header-only CSV.
pub fn write_csv<W: io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BenchRow::CSV_HEADER)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[BenchRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Side-by-side YCbCr-Y vs. RGB-G table: embedded bits and error rate per
/// image and attack.
pub fn comparison_table(rows: &[BenchRow]) -> String {
    let find = |image: &str, mode: ChannelMode, attack: &str| {
        rows.iter()
            .find(|r| r.image == image && r.mode == mode && r.attack == attack)
    };
    let cell = |r: Option<&BenchRow>| match r {
        None => format!("{:>5} {:>8}", "-", "-"),
        Some(r) => format!(
            "{:>5} {:>8}",
            r.embedded_bits,
            r.error_rate_percent
                .map_or("n/a".into(), |e| format!("{e:.2}%"))
        ),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<18} {:>14} {:>14}",
        "image", "attack", "ycbcr-y bits/err", "rgb-g bits/err"
    );
    let mut seen = Vec::new();
    for r in rows {
        let key = (r.image.as_str(), r.attack.as_str());
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let _ = writeln!(
            out,
            "{:<12} {:<18} {:>16} {:>16}",
            r.image,
            r.attack,
            cell(find(&r.image, ChannelMode::YcbcrY, &r.attack)),
            cell(find(&r.image, ChannelMode::RgbG, &r.attack)),
        );
    }
    out
}
