use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trial::{SuccessGrid, TrialResult};
use crate::{Error, Result};

pub const GRID_HEADER: [&str; 11] = [
    "m",
    "s",
    "trials",
    "successes",
    "success_rate",
    "mean_rsdr_db",
    "median_rsdr_db",
    "noise_snr_db",
    "subsample",
    "dict_field",
    "seed",
];

pub const TRIAL_HEADER: [&str; 13] = [
    "m",
    "s",
    "n",
    "trial",
    "seed",
    "rsdr_db",
    "snr_db",
    "success",
    "outer_iters",
    "init_angle_sin",
    "peakedness_u",
    "peakedness_v",
    "error",
];

/// `printf("%.6g")` formatting, with `inf`, `-inf` and `nan` literals.
pub fn fmt_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{x:.*}", (5 - exp) as usize))
    }
}

fn parse_g(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => s.parse().map_err(|_| Error::Io(format!("invalid number {s:?}"))),
    }
}

/// One data row of the grid CSV, as read back from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub m: usize,
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_rsdr_db: f64,
    pub median_rsdr_db: f64,
    pub noise_snr_db: f64,
    pub subsample: String,
    pub dict_field: String,
    pub seed: u64,
}

pub fn grid_rows(grid: &SuccessGrid) -> Vec<GridRow> {
    grid.cells
        .iter()
        .map(|c| GridRow {
            m: c.m,
            s: c.s,
            trials: c.trials,
            successes: c.successes,
            success_rate: c.success_rate(),
            mean_rsdr_db: c.mean_rsdr_db,
            median_rsdr_db: c.median_rsdr_db,
            noise_snr_db: grid.noise_snr_db,
            subsample: grid.subsample.to_string(),
            dict_field: grid.dict_field.as_str().to_string(),
            seed: grid.seed,
        })
        .collect()
}

fn write_records<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid_rows<W: Write>(rows: &[GridRow], out: W) -> Result<()> {
    let records = rows.iter().map(|r| {
        vec![
            r.m.to_string(),
            r.s.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            fmt_g6(r.success_rate),
            fmt_g6(r.mean_rsdr_db),
            fmt_g6(r.median_rsdr_db),
            fmt_g6(r.noise_snr_db),
            r.subsample.clone(),
            r.dict_field.clone(),
            r.seed.to_string(),
        ]
    });
    write_records(out, &GRID_HEADER, records)
}

pub fn grid_csv_string(grid: &SuccessGrid) -> String {
    let mut buf = Vec::new();
    write_grid_rows(&grid_rows(grid), &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn export_grid_csv(grid: &SuccessGrid, path: &Path) -> Result<()> {
    std::fs::write(path, grid_csv_string(grid))?;
    Ok(())
}

pub fn import_grid_csv(path: &Path) -> Result<Vec<GridRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != GRID_HEADER {
        return Err(Error::Io(format!("unexpected grid header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let int = |i: usize| rec[i].parse::<u64>().map_err(|_| Error::Io(format!("invalid integer {:?}", &rec[i])));
        rows.push(GridRow {
            m: int(0)? as usize,
            s: int(1)? as usize,
            trials: int(2)? as usize,
            successes: int(3)? as usize,
            success_rate: parse_g(&rec[4])?,
            mean_rsdr_db: parse_g(&rec[5])?,
            median_rsdr_db: parse_g(&rec[6])?,
            noise_snr_db: parse_g(&rec[7])?,
            subsample: rec[8].to_string(),
            dict_field: rec[9].to_string(),
            seed: int(10)?,
        });
    }
    Ok(rows)
}

pub fn trials_csv_string(trials: &[TrialResult]) -> String {
    let records = trials.iter().map(|t| {
        vec![
            t.m.to_string(),
            t.s.to_string(),
            t.n.to_string(),
            t.trial.to_string(),
            t.seed.to_string(),
            fmt_g6(t.rsdr_db),
            fmt_g6(t.snr_db),
            t.success.to_string(),
            t.outer_iters.to_string(),
            fmt_g6(t.init_angle_sin),
            fmt_g6(t.peakedness_u),
            fmt_g6(t.peakedness_v),
            t.error.clone().unwrap_or_default(),
        ]
    });
    let mut buf = Vec::new();
    write_records(&mut buf, &TRIAL_HEADER, records).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 output")
}

/// Per-trial CSV; wall times are omitted so the file is reproducible.
pub fn export_trials_csv(trials: &[TrialResult], path: &Path) -> Result<()> {
    std::fs::write(path, trials_csv_string(trials))?;
    Ok(())
}

/// Gray level of a success rate: white for 1, black for 0.
pub fn gray_level(rate: f64) -> u8 {
    (255.0 * rate.clamp(0.0, 1.0)).round() as u8
}

/// Standalone SVG heatmap with `m` on the x axis and `s/m` on the y axis.
pub fn heatmap_svg(grid: &SuccessGrid) -> Result<String> {
    if grid.cells.is_empty() {
        return Err(Error::InvalidArgument("cannot render an empty grid".into()));
    }
    let cols = &grid.m_values;
    let rows_per_col = grid.cells.len() / cols.len().max(1);
    if rows_per_col == 0 || rows_per_col * cols.len() != grid.cells.len() {
        return Err(Error::InvalidArgument("grid is not rectangular".into()));
    }
    let (cw, ch, left, top) = (60.0, 30.0, 90.0, 20.0);
    let width = left + cw * cols.len() as f64 + 20.0;
    let height = top + ch * rows_per_col as f64 + 60.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    for (ci, &m) in cols.iter().enumerate() {
        for ri in 0..rows_per_col {
            let cell = &grid.cells[ci * rows_per_col + ri];
            let g = gray_level(cell.success_rate());
            let x = left + cw * ci as f64;
            // Larger ratios at the top.
            let y = top + ch * (rows_per_col - 1 - ri) as f64;
            let _ = writeln!(
                svg,
                r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="rgb({g},{g},{g})" stroke="rgb(128,128,128)" stroke-width="0.5"><title>m={m} s={} rate={}</title></rect>"#,
                cell.s,
                fmt_g6(cell.success_rate())
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{m}</text>"#,
            left + cw * (ci as f64 + 0.5),
            top + ch * rows_per_col as f64 + 15.0
        );
    }
    for ri in 0..rows_per_col {
        let cell = &grid.cells[ri];
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
            left - 5.0,
            top + ch * (rows_per_col - 1 - ri) as f64 + ch * 0.5 + 4.0,
            fmt_g6(cell.s as f64 / cell.m as f64)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">m</text>"#,
        left + cw * cols.len() as f64 / 2.0,
        height - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 20 {})">s/m</text>"#,
        top + ch * rows_per_col as f64 / 2.0,
        top + ch * rows_per_col as f64 / 2.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_heatmap(grid: &SuccessGrid, path: &Path) -> Result<()> {
    std::fs::write(path, heatmap_svg(grid)?)?;
    Ok(())
}
