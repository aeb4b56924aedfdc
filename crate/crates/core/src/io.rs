//! Plain-text formats: energy traces and sparse spectral fields as CSV.
//!
//! Trace files have the header `t,l2_sq,grad_sq,div_sq,l4_quartic` and one
//! row per sample, every value written with 17 significant digits.
//!
//! Field files start with a comment line `# n=<n> box_length=<L>
//! [dealias_fraction=<f>]`, followed by the header
//! `m0,m1,m2,re0,im0,re1,im1,re2,im2` and one row per nonzero lattice mode.
//! Both members of a conjugate pair may be listed; a missing partner is
//! filled in by symmetry.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex;

use crate::dynamics::EnergyTrace;
use crate::spectral::{GridSpec, Norms, SpectralField};
use crate::{Error, Result};

pub const TRACE_HEADER: [&str; 5] = ["t", "l2_sq", "grad_sq", "div_sq", "l4_quartic"];
const FIELD_HEADER: [&str; 9] = ["m0", "m1", "m2", "re0", "im0", "re1", "im1", "re2", "im2"];

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    parse_error(path, e.to_string())
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace<W: Write>(out: W, trace: &EnergyTrace<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::invalid(format!("cannot write trace: {e}"));
    w.write_record(TRACE_HEADER).map_err(to_err)?;
    for k in 0..trace.len() {
        let row = [
            trace.times[k],
            trace.l2_sq[k],
            trace.grad_sq[k],
            trace.div_sq[k],
            trace.l4_quartic[k],
        ];
        w.write_record(row.map(fmt17)).map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("cannot write trace: {e}")))?;
    Ok(())
}

/// Writes a trace file atomically (temporary file, then rename).
pub fn write_trace_csv(path: impl AsRef<Path>, trace: &EnergyTrace<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_trace(&mut buf, trace)?;
    write_atomic(path, &buf)
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<EnergyTrace<f64>> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_error(path, format!("{other:?}")),
        })?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(parse_error(
            path,
            format!(
                "expected header {}, found {}",
                TRACE_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut trace = EnergyTrace::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let mut vals = [0.0; 5];
        if rec.len() != 5 {
            return Err(parse_error(path, format!("row {} has {} fields", line + 2, rec.len())));
        }
        for (v, s) in vals.iter_mut().zip(rec.iter()) {
            *v = s
                .parse()
                .map_err(|_| parse_error(path, format!("row {}: '{s}' is not a number", line + 2)))?;
        }
        trace.push(
            vals[0],
            Norms {
                l2_sq: vals[1],
                grad_sq: vals[2],
                div_sq: vals[3],
                l4_quartic: vals[4],
            },
        );
    }
    trace.validate().map_err(|e| parse_error(path, e.to_string()))?;
    Ok(trace)
}

pub fn write_field<W: Write>(mut out: W, field: &SpectralField<f64>) -> Result<()> {
    let g = field.grid();
    let io_err = |e: std::io::Error| Error::invalid(format!("cannot write field: {e}"));
    writeln!(
        out,
        "# n={} box_length={} dealias_fraction={}",
        g.n(),
        fmt17(g.box_length()),
        fmt17(g.dealias_fraction())
    )
    .map_err(io_err)?;
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::invalid(format!("cannot write field: {e}"));
    w.write_record(FIELD_HEADER).map_err(to_err)?;
    for idx in 0..g.len() {
        let v = field.mode(idx);
        if v.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            continue;
        }
        let m = g.lattice(idx);
        let mut row: Vec<String> = m.iter().map(|x| x.to_string()).collect();
        for z in v {
            row.push(fmt17(z.re));
            row.push(fmt17(z.im));
        }
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("cannot write field: {e}")))?;
    Ok(())
}

pub fn write_field_csv(path: impl AsRef<Path>, field: &SpectralField<f64>) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, field)?;
    write_atomic(path.as_ref(), &buf)
}

fn parse_grid_comment(path: &Path, line: &str) -> Result<GridSpec<f64>> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_error(path, "first line must be '# n=<n> box_length=<L>'"))?;
    let (mut n, mut l, mut frac) = (None, None, None);
    for tok in body.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| parse_error(path, format!("malformed token '{tok}'")))?;
        let bad = || parse_error(path, format!("bad value for {key}: '{value}'"));
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
            "box_length" => l = Some(value.parse::<f64>().map_err(|_| bad())?),
            "dealias_fraction" => frac = Some(value.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(parse_error(path, format!("unknown key '{key}'"))),
        }
    }
    let n = n.ok_or_else(|| parse_error(path, "missing n"))?;
    let l = l.ok_or_else(|| parse_error(path, "missing box_length"))?;
    match frac {
        Some(f) => GridSpec::with_dealias(n, l, f),
        None => GridSpec::new(n, l),
    }
}

pub fn read_field_csv(path: impl AsRef<Path>) -> Result<SpectralField<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let grid = parse_grid_comment(path, first.trim())?;
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(rest.as_bytes());
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != FIELD_HEADER {
        return Err(parse_error(path, format!("expected header {}", FIELD_HEADER.join(","))));
    }
    let half = (grid.n() / 2) as i64;
    let mut seen = vec![false; grid.len()];
    let mut coeffs: [Vec<Complex<f64>>; 3] = std::array::from_fn(|_| vec![Complex::new(0.0, 0.0); grid.len()]);
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = line + 3;
        if rec.len() != 9 {
            return Err(parse_error(path, format!("row {row} has {} fields", rec.len())));
        }
        let mut m = [0i64; 3];
        for (c, s) in rec.iter().take(3).enumerate() {
            m[c] = s
                .parse()
                .map_err(|_| parse_error(path, format!("row {row}: '{s}' is not an integer")))?;
            if m[c] < -half || m[c] >= half {
                return Err(parse_error(path, format!("row {row}: index {} outside the grid", m[c])));
            }
        }
        let mut v = [0.0; 6];
        for (x, s) in v.iter_mut().zip(rec.iter().skip(3)) {
            *x = s
                .parse()
                .map_err(|_| parse_error(path, format!("row {row}: '{s}' is not a number")))?;
        }
        let idx = grid.flat_index(m);
        if seen[idx] {
            return Err(parse_error(path, format!("row {row}: mode {m:?} listed twice")));
        }
        seen[idx] = true;
        let mirror = grid.mirror_index(idx);
        for c in 0..3 {
            let z = Complex::new(v[2 * c], v[2 * c + 1]);
            coeffs[c][idx] = z;
            if !seen[mirror] {
                coeffs[c][mirror] = z.conj();
            }
        }
    }
    SpectralField::from_coefficients(grid, coeffs).map_err(|e| parse_error(path, e.to_string()))
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("'{}' is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
