//! Line-oriented `key = value` reports for single embed/extract runs.
//!
//! Scalars come first, then a section header (`positions:` or
//! `recovered:`) followed by one entry per line. Floats are written in
//! shortest round-trip form so a parsed report compares equal to the
//! original.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::format_opt;
use crate::watermark::{EmbedParams, EmbedReport, ExtractionReport, Position, Verification};

pub const NOTHING_EMBEDDED: &str = "0 bits embedded: no approximation coefficient inside (T1, T2)";

fn write_params(out: &mut String, p: &EmbedParams) {
    let _ = writeln!(out, "t1 = {}", p.t1);
    let _ = writeln!(out, "t2 = {}", p.t2);
    let _ = writeln!(out, "x1 = {}", p.x1);
    let _ = writeln!(out, "x2 = {}", p.x2);
    let _ = writeln!(out, "levels = {}", p.levels);
    let _ = writeln!(out, "mode = {}", p.channel);
    let _ = writeln!(out, "key = {}", p.key);
}

pub fn format_embed_report(r: &EmbedReport) -> String {
    let mut out = String::new();
    write_params(&mut out, &r.params);
    let _ = writeln!(out, "ll_rows = {}", r.ll_rows);
    let _ = writeln!(out, "ll_cols = {}", r.ll_cols);
    let _ = writeln!(out, "embedded_count = {}", r.embedded_count());
    let _ = writeln!(out, "psnr_db = {}", r.psnr);
    let _ = writeln!(
        out,
        "corr = {}",
        r.corr.map_or("none".into(), |c| c.to_string())
    );
    if r.nothing_embedded() {
        let _ = writeln!(out, "warning = {NOTHING_EMBEDDED}");
    }
    out.push_str("positions:\n");
    for (i, j) in &r.positions {
        let _ = writeln!(out, "{i},{j}");
    }
    out
}

/// Formats an extraction, with the presence verdict and scores when a
/// verification is supplied.
pub fn format_extraction_report(
    r: &ExtractionReport,
    params: &EmbedParams,
    verification: Option<&Verification>,
) -> String {
    let mut out = String::new();
    write_params(&mut out, params);
    let _ = writeln!(out, "ll_rows = {}", r.ll_rows);
    let _ = writeln!(out, "ll_cols = {}", r.ll_cols);
    let _ = writeln!(out, "extracted_count = {}", r.extracted_count());
    if let Some(v) = verification {
        let _ = writeln!(out, "matching_count = {}", v.matching_count);
        let _ = writeln!(out, "score = {}", v.score);
        let _ = writeln!(
            out,
            "verdict = {}",
            if v.present { "PRESENT" } else { "ABSENT" }
        );
        if let Some(e) = &v.against_embed {
            let _ = writeln!(out, "embedded_count = {}", e.embedded_count);
            let _ = writeln!(out, "correctly_recovered = {}", e.correctly_recovered);
            let _ = writeln!(
                out,
                "error_rate_percent = {}",
                format_opt(e.error_rate_percent, 4)
            );
            let _ = writeln!(out, "nc = {}", format_opt(e.nc.map(|n| n.normalized), 6));
            let _ = writeln!(
                out,
                "nc_sqrt = {}",
                format_opt(e.nc.map(|n| n.sqrt_denominator), 6)
            );
        }
    }
    out.push_str("recovered:\n");
    for ((i, j), bit) in &r.recovered {
        let _ = writeln!(out, "{i},{j} = {bit}");
    }
    out
}

struct Parsed<'a> {
    fields: BTreeMap<&'a str, (usize, &'a str)>,
    section: Vec<(usize, &'a str)>,
}

fn split<'a>(text: &'a str, section: &str) -> Result<Parsed<'a>> {
    let mut fields = BTreeMap::new();
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));
    let mut found = false;
    for (n, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.strip_suffix(':') == Some(section) {
            found = true;
            break;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Report {
            line: n,
            reason: format!("expected `key = value`, got {line:?}"),
        })?;
        fields.insert(k.trim(), (n, v.trim()));
    }
    if !found {
        return Err(Error::Report {
            line: 0,
            reason: format!("missing `{section}:` section"),
        });
    }
    let section = lines.filter(|(_, l)| !l.is_empty()).collect();
    Ok(Parsed { fields, section })
}

impl Parsed<'_> {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let (line, v) = self.fields.get(key).ok_or_else(|| Error::Report {
            line: 0,
            reason: format!("missing field `{key}`"),
        })?;
        v.parse().map_err(|e| Error::Report {
            line: *line,
            reason: format!("{key}: {e}"),
        })
    }

    fn params(&self) -> Result<EmbedParams> {
        Ok(EmbedParams {
            t1: self.get("t1")?,
            t2: self.get("t2")?,
            x1: self.get("x1")?,
            x2: self.get("x2")?,
            key: self.get("key")?,
            levels: self.get("levels")?,
            channel: self.get("mode")?,
        })
    }
}

fn parse_position(line: usize, s: &str, rows: usize, cols: usize) -> Result<Position> {
    let bad = |reason: String| Error::Report { line, reason };
    let (i, j) = s
        .split_once(',')
        .ok_or_else(|| bad(format!("expected `i,j`, got {s:?}")))?;
    let i: usize = i.trim().parse().map_err(|e| bad(format!("row: {e}")))?;
    let j: usize = j.trim().parse().map_err(|e| bad(format!("column: {e}")))?;
    if i >= rows || j >= cols {
        return Err(bad(format!("position {i},{j} outside {rows}x{cols}")));
    }
    Ok((i, j))
}

pub fn parse_embed_report(text: &str) -> Result<EmbedReport> {
    let p = split(text, "positions")?;
    let ll_rows = p.get("ll_rows")?;
    let ll_cols = p.get("ll_cols")?;
    let corr = match p.get::<String>("corr")?.as_str() {
        "none" => None,
        _ => Some(p.get("corr")?),
    };
    let positions = p
        .section
        .iter()
        .map(|&(n, l)| parse_position(n, l, ll_rows, ll_cols))
        .collect::<Result<Vec<_>>>()?;
    let count: usize = p.get("embedded_count")?;
    if count != positions.len() {
        return Err(Error::Report {
            line: 0,
            reason: format!(
                "embedded_count = {count} but {} positions listed",
                positions.len()
            ),
        });
    }
    Ok(EmbedReport {
        params: p.params()?,
        ll_rows,
        ll_cols,
        positions,
        psnr: p.get("psnr_db")?,
        corr,
    })
}

/// Parses the recovered bits; verdict and score lines are ignored.
pub fn parse_extraction_report(text: &str) -> Result<(EmbedParams, ExtractionReport)> {
    let p = split(text, "recovered")?;
    let ll_rows = p.get("ll_rows")?;
    let ll_cols = p.get("ll_cols")?;
    let mut recovered = BTreeMap::new();
    for &(n, l) in &p.section {
        let (pos, bit) = l.split_once('=').ok_or_else(|| Error::Report {
            line: n,
            reason: format!("expected `i,j = bit`, got {l:?}"),
        })?;
        let pos = parse_position(n, pos.trim(), ll_rows, ll_cols)?;
        let bit = match bit.trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Report {
                    line: n,
                    reason: format!("bit must be 0 or 1, got {other:?}"),
                })
            }
        };
        recovered.insert(pos, bit);
    }
    Ok((
        p.params()?,
        ExtractionReport {
            ll_rows,
            ll_cols,
            recovered,
        },
    ))
}
