//! CSV and NDJSON emission, and CSV ingest for rendering.

use std::io::{self, Write};

use crate::dynamics::State;
use crate::floquet::Classification;
use crate::scan::{Axis, ScanKind, ScanResult};

/// Full round-trip formatting: 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub const STABILITY_MAGIC: &str = "# trapstab stability-scan v1";
pub const EXCLUSION_MAGIC: &str = "# trapstab exclusion-scan v1";

fn verdict_word(kind: ScanKind, c: Classification) -> &'static str {
    match (kind, c) {
        (ScanKind::Stability, Classification::Stable) => "stable",
        (ScanKind::Stability, Classification::Unstable) => "unstable",
        (ScanKind::Exclusion, Classification::Stable) => "allowed",
        (ScanKind::Exclusion, Classification::Unstable) => "excluded",
    }
}

/// Writes a scan as self-describing CSV: magic line, provenance comments,
/// header, then one row per cell in row-major order.
pub fn write_scan_csv<W: Write>(out: W, result: &ScanResult) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    let (magic, columns) = match result.kind {
        ScanKind::Stability => (STABILITY_MAGIC, [Axis::A, Axis::Q]),
        ScanKind::Exclusion => (EXCLUSION_MAGIC, [Axis::Log10Rc, Axis::Log10Lambda]),
    };
    writeln!(out, "{magic}")?;
    for (k, v) in &result.provenance.0 {
        writeln!(out, "# {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([columns[0].column(), columns[1].column(), "trace", "verdict", "flags"])?;
    let first_is_x = result.spec.x_axis == columns[0];
    for cell in &result.cells {
        let (c0, c1) = if first_is_x { (cell.x, cell.y) } else { (cell.y, cell.x) };
        w.write_record([
            num(c0),
            num(c1),
            num(cell.trace),
            verdict_word(result.kind, cell.classification).to_string(),
            cell.flag.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn scan_csv_string(result: &ScanResult) -> String {
    let mut buf = Vec::new();
    write_scan_csv(&mut buf, result).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

pub fn state_json(s: &State) -> String {
    format!("{{\"t\":{},\"x\":{},\"v\":{}}}", num(s.t), num(s.x), num(s.v))
}

/// Grid of verdicts recovered from a scan CSV, row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub kind: ScanKind,
    pub x_label: String,
    pub y_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub stable: Vec<bool>,
}

impl GridTable {
    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    /// Plot bounds: outer edges of the first and last cells.
    pub fn x_bounds(&self) -> (f64, f64) {
        edges(&self.xs)
    }

    pub fn y_bounds(&self) -> (f64, f64) {
        edges(&self.ys)
    }

    pub fn from_scan(result: &ScanResult) -> Self {
        let s = &result.spec;
        Self {
            kind: result.kind,
            x_label: s.x_axis.column().to_string(),
            y_label: s.y_axis.column().to_string(),
            xs: (0..s.nx).map(|i| s.x_center(i)).collect(),
            ys: (0..s.ny).map(|i| s.y_center(i)).collect(),
            stable: result.cells.iter().map(|c| c.classification.is_stable()).collect(),
        }
    }

    /// Parses a CSV written by [`write_scan_csv`].
    pub fn parse_csv(text: &str) -> Result<Self, String> {
        let kind = match text.lines().next().map(str::trim_end) {
            Some(STABILITY_MAGIC) => ScanKind::Stability,
            Some(EXCLUSION_MAGIC) => ScanKind::Exclusion,
            _ => return Err("missing trapstab scan header line".into()),
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| e.to_string())?.clone();
        let expected: &[&str] = match kind {
            ScanKind::Stability => &["a", "q", "trace", "verdict", "flags"],
            ScanKind::Exclusion => &["log10_rc_m", "log10_lambda_per_s", "trace", "verdict", "flags"],
        };
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(format!("unexpected columns {:?}", header.iter().collect::<Vec<_>>()));
        }
        // stability charts put q across and a up
        let (xi, yi) = match kind {
            ScanKind::Stability => (1, 0),
            ScanKind::Exclusion => (0, 1),
        };
        let mut rows = Vec::new();
        for (n, record) in reader.records().enumerate() {
            let record = record.map_err(|e| format!("row {}: {e}", n + 1))?;
            let parse = |i: usize| -> Result<f64, String> {
                let field = record.get(i).ok_or_else(|| format!("row {}: missing field", n + 1))?;
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| format!("row {}: bad number `{field}`", n + 1))
            };
            let (x, y) = (parse(xi)?, parse(yi)?);
            if !(x.is_finite() && y.is_finite()) {
                return Err(format!("row {}: non-finite coordinate", n + 1));
            }
            let stable = match record.get(3).map(str::trim) {
                Some("stable" | "allowed") => true,
                Some("unstable" | "excluded") => false,
                other => return Err(format!("row {}: bad verdict {other:?}", n + 1)),
            };
            rows.push((x, y, stable));
        }
        let xs = distinct_sorted(rows.iter().map(|r| r.0));
        let ys = distinct_sorted(rows.iter().map(|r| r.1));
        if xs.len() < 2 || ys.len() < 2 || xs.len() * ys.len() != rows.len() {
            return Err(format!(
                "rows do not form a rectangular grid ({} rows, {} x values, {} y values)",
                rows.len(),
                xs.len(),
                ys.len()
            ));
        }
        let mut stable = vec![None; rows.len()];
        for (x, y, s) in rows {
            let ix = xs.binary_search_by(|v| v.total_cmp(&x)).expect("x present");
            let iy = ys.binary_search_by(|v| v.total_cmp(&y)).expect("y present");
            let slot = &mut stable[iy * xs.len() + ix];
            if slot.is_some() {
                return Err(format!("duplicate cell at ({x}, {y})"));
            }
            *slot = Some(s);
        }
        let (x_label, y_label) = (expected[xi].to_string(), expected[yi].to_string());
        Ok(Self {
            kind,
            x_label,
            y_label,
            xs,
            ys,
            stable: stable.into_iter().map(|s| s.expect("rectangular grid")).collect(),
        })
    }
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| a.to_bits() == b.to_bits());
    v
}

fn edges(centres: &[f64]) -> (f64, f64) {
    let n = centres.len();
    let step = (centres[n - 1] - centres[0]) / (n - 1) as f64;
    (centres[0] - 0.5 * step, centres[n - 1] + 0.5 * step)
}
