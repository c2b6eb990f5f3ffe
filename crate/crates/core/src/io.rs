//! Grid and raster-stack file formats, result serialisation, and the raster
//! preprocessing steps used before detection (per-cell linear detrending and
//! windowed max-composites).
//!
//! Grid CSV: a `dims:` header, an optional `mask:` sentinel, then the cell
//! values comma-separated in canonical order, one line per innermost-axis
//! run. Values round-trip exactly (shortest round-trip formatting). Result
//! JSON is byte-deterministic with floats at 9 significant digits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::field::Field;
use crate::lattice::{GridSpec, Point, Region};
use crate::{Error, Result};

const DEFAULT_SENTINEL: f64 = -9999.0;

/// Parse a grid file from any reader. See the module docs for the format.
pub fn parse_grid<R: BufRead>(reader: R) -> Result<Field> {
    let mut lines = reader.lines().enumerate();

    let (line_no, first) = next_content_line(&mut lines)?
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty file, expected a dims: header".into() })?;
    let dims = parse_dims(&first, line_no)?;
    let grid = GridSpec::new(&dims).map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;

    let mut sentinel: Option<f64> = None;
    let mut values: Vec<f64> = Vec::with_capacity(grid.n());
    let mut pending: Option<(usize, String)> = None;
    if let Some((no, line)) = next_content_line(&mut lines)? {
        if let Some(rest) = line.strip_prefix("mask:") {
            sentinel = Some(rest.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: no,
                msg: format!("invalid mask sentinel '{}'", rest.trim()),
            })?);
        } else {
            pending = Some((no, line));
        }
    }

    let feed = |no: usize, line: &str, values: &mut Vec<f64>| -> Result<()> {
        for tok in line.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let v = tok.parse::<f64>().map_err(|_| Error::Parse {
                line: no,
                msg: format!("non-numeric cell value '{tok}'"),
            })?;
            values.push(v);
        }
        Ok(())
    };
    if let Some((no, line)) = pending {
        feed(no, &line, &mut values)?;
    }
    let mut last_line = 0usize;
    for (idx, line) in lines {
        let line = line?;
        last_line = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        feed(idx + 1, &line, &mut values)?;
    }

    if values.len() != grid.n() {
        return Err(Error::Parse {
            line: last_line.max(line_no),
            msg: format!(
                "header dims {:?} promise {} values but the file holds {}",
                grid.dims(),
                grid.n(),
                values.len()
            ),
        });
    }
    let mask = sentinel.map(|s| values.iter().map(|&v| v != s).collect::<Vec<bool>>());
    for (v, valid) in values.iter().zip(mask.as_deref().unwrap_or(&vec![true; values.len()])) {
        if *valid && !v.is_finite() {
            return Err(Error::Parse { line: last_line, msg: "non-finite cell value".into() });
        }
    }
    Field::with_mask(grid, values, mask)
}

fn next_content_line<I>(lines: &mut I) -> Result<Option<(usize, String)>>
where
    I: Iterator<Item = (usize, std::io::Result<String>)>,
{
    for (idx, line) in lines {
        let line = line?;
        if !line.trim().is_empty() {
            return Ok(Some((idx + 1, line)));
        }
    }
    Ok(None)
}

fn parse_dims(line: &str, line_no: usize) -> Result<Vec<u32>> {
    let rest = line.strip_prefix("dims:").ok_or_else(|| Error::Parse {
        line: line_no,
        msg: format!("expected 'dims: n1 n2 [n3]', found '{line}'"),
    })?;
    let dims: Vec<u32> = rest
        .split_whitespace()
        .map(|tok| {
            tok.parse::<u32>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid dimension '{tok}'"),
            })
        })
        .collect::<Result<_>>()?;
    if dims.is_empty() || dims.len() > 3 {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("expected 1 to 3 dimensions, found {}", dims.len()),
        });
    }
    Ok(dims)
}

pub fn load_grid<P: AsRef<Path>>(path: P) -> Result<Field> {
    let file = std::fs::File::open(path)?;
    parse_grid(std::io::BufReader::new(file))
}

/// Serialise a field to the grid CSV format; masked cells are written as the
/// sentinel.
pub fn write_grid<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let grid = field.grid();
    let dims_line: Vec<String> = grid.dims().iter().map(|d| d.to_string()).collect();
    writeln!(w, "dims: {}", dims_line.join(" "))?;
    let sentinel = field.mask().map(|_| DEFAULT_SENTINEL);
    if let Some(s) = sentinel {
        writeln!(w, "mask: {s}")?;
    }
    let row = *grid.dims().last().expect("nonempty dims") as usize;
    let mut line = String::new();
    for start in (0..grid.n()).step_by(row) {
        line.clear();
        for i in start..start + row {
            if i > start {
                line.push(',');
            }
            if field.is_valid(i) {
                let _ = write!(line, "{}", field.value(i));
            } else {
                let _ = write!(line, "{}", sentinel.expect("mask implies sentinel"));
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn save_grid<P: AsRef<Path>>(path: P, field: &Field) -> Result<()> {
    let mut buf = Vec::new();
    write_grid(&mut buf, field)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// JSON with floats fixed at 9 significant digits: deterministic bytes for
/// results and reports.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let formatter = SigFigFormatter { pretty: serde_json::ser::PrettyFormatter::new() };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidParameter(format!("serialisation failed: {e}")))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

pub fn save_json<T: Serialize, P: AsRef<Path>>(path: P, value: &T) -> Result<()> {
    std::fs::write(path, to_json_pretty(value)?)?;
    Ok(())
}

struct SigFigFormatter {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.8e}")
    }

    // Everything else delegates to the pretty formatter.
    fn begin_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.begin_array(w)
    }
    fn end_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_array(w)
    }
    fn begin_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_array_value(w)
    }
    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.begin_object(w)
    }
    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_object(w)
    }
    fn begin_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

/// Load a region from `{"points": [[x, y, ...], ...]}`. The ambient grid is
/// given explicitly or inferred as the tight bounding grid of the points.
pub fn load_region<P: AsRef<Path>>(path: P, dims: Option<&[u32]>) -> Result<Region> {
    let text = std::fs::read_to_string(path)?;
    parse_region(&text, dims)
}

pub fn parse_region(text: &str, dims: Option<&[u32]>) -> Result<Region> {
    #[derive(serde::Deserialize)]
    struct RegionJson {
        points: Vec<Vec<i32>>,
    }
    let parsed: RegionJson = serde_json::from_str(text)
        .map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
    if parsed.points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let d = parsed.points[0].len();
    if parsed.points.iter().any(|p| p.len() != d) {
        return Err(Error::Parse { line: 1, msg: "points of mixed dimension".into() });
    }
    let grid = match dims {
        Some(dims) => GridSpec::new(dims)?,
        None => {
            let mut maxes = vec![1u32; d];
            for p in &parsed.points {
                for (m, &c) in maxes.iter_mut().zip(p) {
                    if c < 1 {
                        return Err(Error::Parse { line: 1, msg: "coordinates are 1-based".into() });
                    }
                    *m = (*m).max(c as u32);
                }
            }
            GridSpec::new(&maxes)?
        }
    };
    Region::new(grid, parsed.points.iter().map(|p| Point::new(p)).collect())
}

/// Detection frequency map as a grayscale binary PGM (P5), row-major,
/// scaled so `b` replicates saturate at 255.
pub fn write_freq_pgm<W: Write>(mut w: W, grid: &GridSpec, counts: &[u32], b: usize) -> Result<()> {
    if grid.d() != 2 {
        return Err(Error::UnsupportedDimension(grid.d(), "PGM export is 2D"));
    }
    let (rows, cols) = (grid.dims()[0], grid.dims()[1]);
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let bytes: Vec<u8> = counts
        .iter()
        .map(|&c| ((c as f64 / b.max(1) as f64) * 255.0).round().min(255.0) as u8)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Frequency map as CSV rows matching the grid layout.
pub fn write_freq_csv<W: Write>(mut w: W, grid: &GridSpec, counts: &[u32]) -> Result<()> {
    let row = *grid.dims().last().expect("nonempty dims") as usize;
    for start in (0..counts.len()).step_by(row) {
        let line: Vec<String> = counts[start..start + row].iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// T slices of grid-shaped values with per-slice timestamps in fractional
/// years. Slices share one grid and one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterStack {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
    pub mask: Option<Vec<bool>>,
}

impl RasterStack {
    pub fn new(grid: GridSpec, times: Vec<f64>, slices: Vec<Vec<f64>>, mask: Option<Vec<bool>>) -> Result<Self> {
        if times.len() != slices.len() {
            return Err(Error::InvalidParameter("one timestamp per slice required".into()));
        }
        if slices.is_empty() {
            return Err(Error::InvalidParameter("a stack needs at least one slice".into()));
        }
        for s in &slices {
            if s.len() != grid.n() {
                return Err(Error::InvalidParameter("slice size does not match the grid".into()));
            }
        }
        Ok(Self { grid, times, slices, mask })
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    fn is_valid(&self, cell: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[cell])
    }
}

/// Stack file format: the grid header, then repeated `t:` lines each followed
/// by one slice of values.
pub fn parse_stack<R: BufRead>(reader: R) -> Result<RasterStack> {
    let mut lines = reader.lines().enumerate();
    let (line_no, first) = next_content_line(&mut lines)?
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty file, expected a dims: header".into() })?;
    let dims = parse_dims(&first, line_no)?;
    let grid = GridSpec::new(&dims).map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;

    let mut sentinel: Option<f64> = None;
    let mut times = Vec::new();
    let mut slices: Vec<Vec<f64>> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut in_slice = false;

    while let Some((no, line)) = next_content_line(&mut lines)? {
        if let Some(rest) = line.strip_prefix("mask:") {
            if in_slice {
                return Err(Error::Parse { line: no, msg: "mask: must precede the slices".into() });
            }
            sentinel = Some(rest.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: no,
                msg: format!("invalid mask sentinel '{}'", rest.trim()),
            })?);
        } else if let Some(rest) = line.strip_prefix("t:") {
            if in_slice {
                if current.len() != grid.n() {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!("slice {} has {} of {} values", slices.len() + 1, current.len(), grid.n()),
                    });
                }
                slices.push(std::mem::take(&mut current));
            }
            let t = rest.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: no,
                msg: format!("invalid timestamp '{}'", rest.trim()),
            })?;
            times.push(t);
            in_slice = true;
        } else {
            if !in_slice {
                return Err(Error::Parse { line: no, msg: "values before the first t: line".into() });
            }
            for tok in line.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                current.push(tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: no,
                    msg: format!("non-numeric cell value '{tok}'"),
                })?);
            }
        }
    }
    if in_slice {
        if current.len() != grid.n() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("final slice has {} of {} values", current.len(), grid.n()),
            });
        }
        slices.push(current);
    }
    if slices.is_empty() {
        return Err(Error::Parse { line: line_no, msg: "stack holds no slices".into() });
    }
    let mask = sentinel.map(|s| slices[0].iter().map(|&v| v != s).collect::<Vec<bool>>());
    RasterStack::new(grid, times, slices, mask)
}

pub fn load_stack<P: AsRef<Path>>(path: P) -> Result<RasterStack> {
    let file = std::fs::File::open(path)?;
    parse_stack(std::io::BufReader::new(file))
}

/// Remove a per-cell ordinary least squares line over time. Masked cells pass
/// through untouched.
pub fn detrend_linear(stack: &RasterStack) -> Result<RasterStack> {
    let t_len = stack.len();
    if t_len < 3 {
        return Err(Error::InvalidParameter(format!(
            "detrending needs at least 3 slices, got {t_len}"
        )));
    }
    let times = &stack.times;
    let t_mean = times.iter().sum::<f64>() / t_len as f64;
    let t_var: f64 = times.iter().map(|t| (t - t_mean) * (t - t_mean)).sum();
    if t_var == 0.0 {
        return Err(Error::InvalidParameter("all slices share one timestamp".into()));
    }
    let mut out = stack.slices.clone();
    for cell in 0..stack.grid.n() {
        if !stack.is_valid(cell) {
            continue;
        }
        let y_mean = stack.slices.iter().map(|s| s[cell]).sum::<f64>() / t_len as f64;
        let cov: f64 = stack
            .slices
            .iter()
            .zip(times)
            .map(|(s, t)| (t - t_mean) * (s[cell] - y_mean))
            .sum();
        let slope = cov / t_var;
        let intercept = y_mean - slope * t_mean;
        for (slice, (orig, t)) in out.iter_mut().zip(stack.slices.iter().zip(times)) {
            slice[cell] = orig[cell] - (intercept + slope * t);
        }
    }
    RasterStack::new(stack.grid.clone(), times.clone(), out, stack.mask.clone())
}

/// Windowing rule for composites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompositeWindow {
    /// Group slices by (year, month) from fractional-year timestamps.
    CalendarMonth,
    /// Group every `k` consecutive slices; a shorter trailing window counts.
    FixedCount(usize),
}

/// Per-cell average within each window, then the max across windows.
pub fn max_composite(stack: &RasterStack, window: CompositeWindow) -> Result<Field> {
    let groups: Vec<Vec<usize>> = match window {
        CompositeWindow::CalendarMonth => {
            let mut keys: Vec<(i64, usize)> = Vec::new();
            for (i, &t) in stack.times.iter().enumerate() {
                let year = t.floor();
                let month = (((t - year) * 12.0).floor() as i64).clamp(0, 11);
                keys.push(((year as i64) * 12 + month, i));
            }
            keys.sort();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut last_key = None;
            for (key, idx) in keys {
                if last_key != Some(key) {
                    groups.push(Vec::new());
                    last_key = Some(key);
                }
                groups.last_mut().expect("just pushed").push(idx);
            }
            groups
        }
        CompositeWindow::FixedCount(k) => {
            if k == 0 {
                return Err(Error::InvalidParameter("window length must be positive".into()));
            }
            (0..stack.len())
                .collect::<Vec<usize>>()
                .chunks(k)
                .map(|c| c.to_vec())
                .collect()
        }
    };
    if groups.is_empty() {
        return Err(Error::InvalidParameter("no complete window in the stack".into()));
    }

    let n = stack.grid.n();
    let mut out = vec![0.0f64; n];
    for cell in 0..n {
        if !stack.is_valid(cell) {
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        for group in &groups {
            let mean =
                group.iter().map(|&i| stack.slices[i][cell]).sum::<f64>() / group.len() as f64;
            best = best.max(mean);
        }
        out[cell] = best;
    }
    Field::with_mask(stack.grid.clone(), out, stack.mask.clone())
}
