//! Text formats shared by the library and the command line tools.
//!
//! Everything is UTF-8 with `.` decimal separators and `\n` line endings.
//! Lines starting with `#` are comments and may carry provenance headers;
//! readers skip them anywhere in the file.
//!
//! * Path CSV: header `t,v1,...,vd`, one node per row.
//! * Rough-path CSV: header `t,x1,...,xn,A11,...,Ann` with the base-anchored
//!   second level `A_t = X^2_{0,t}` flattened row-major.
//! * Domain / config files: flat `key=value` text.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which
//! round-trips every finite `f64` bit-exactly through `str::parse`; golden
//! outputs can therefore be compared byte-wise.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::rough::RoughPath;
use crate::tensor::Mat;

/// Render a float with enough digits to round-trip bit-exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_float(s: &str, context: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{context}: bad float {s:?}")))
}

/// Write a sampled path as CSV. `comments` become leading `#` lines.
pub fn write_path_csv(w: &mut impl Write, path: &GridPath, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let d = path.dim();
    let header: Vec<String> = (1..=d).map(|c| format!("v{c}")).collect();
    writeln!(w, "t,{}", header.join(","))?;
    for k in 0..path.len() {
        let mut row = Vec::with_capacity(d + 1);
        row.push(format_float(path.time(k)));
        for c in 0..d {
            row.push(format_float(path.at(k, c)));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn data_lines(r: impl BufRead) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for line in r.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push(trimmed.to_string());
    }
    Ok(lines)
}

/// Read a path CSV written by [`write_path_csv`] (or compatible).
pub fn read_path_csv(r: impl BufRead) -> Result<GridPath> {
    let lines = data_lines(r)?;
    if lines.len() < 3 {
        return Err(Error::Parse("path CSV needs a header and at least two rows".into()));
    }
    let cols = lines[0].split(',').count();
    if cols < 2 || !lines[0].starts_with('t') {
        return Err(Error::Parse(format!("bad path CSV header {:?}", lines[0])));
    }
    let d = cols - 1;
    let mut times = Vec::with_capacity(lines.len() - 1);
    let mut data = Vec::with_capacity((lines.len() - 1) * d);
    for (row, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse(format!(
                "path CSV row {row} has {} fields, expected {cols}",
                fields.len()
            )));
        }
        times.push(parse_float(fields[0], "path CSV time")?);
        for f in &fields[1..] {
            data.push(parse_float(f, "path CSV value")?);
        }
    }
    GridPath::from_flat(times, d, data)
}

/// Write a level-2 rough path as CSV (base row plus flattened anchors).
pub fn write_rough_csv(w: &mut impl Write, x: &RoughPath, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let n = x.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|c| format!("x{c}")));
    for a in 1..=n {
        for b in 1..=n {
            header.push(format!("A{a}{b}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for k in 0..x.len() {
        let mut row = Vec::with_capacity(1 + n + n * n);
        row.push(format_float(x.times()[k]));
        for c in 0..n {
            row.push(format_float(x.base().at(k, c)));
        }
        let anchor = x.anchor(k);
        for a in 0..n {
            for b in 0..n {
                row.push(format_float(anchor.at(a, b)));
            }
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a rough-path CSV written by [`write_rough_csv`]. The variation
/// exponent is not stored in the file and must be supplied.
pub fn read_rough_csv(r: impl BufRead, p: f64) -> Result<RoughPath> {
    let lines = data_lines(r)?;
    if lines.len() < 3 {
        return Err(Error::Parse("rough CSV needs a header and at least two rows".into()));
    }
    let cols = lines[0].split(',').count();
    // 1 + n + n^2 columns
    let n = (0..=255usize)
        .find(|n| 1 + n + n * n == cols)
        .ok_or_else(|| Error::Parse(format!("rough CSV column count {cols} is not 1 + n + n^2")))?;
    let mut times = Vec::new();
    let mut data = Vec::new();
    let mut anchors = Vec::new();
    for (row, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse(format!(
                "rough CSV row {row} has {} fields, expected {cols}",
                fields.len()
            )));
        }
        times.push(parse_float(fields[0], "rough CSV time")?);
        for f in &fields[1..=n] {
            data.push(parse_float(f, "rough CSV base")?);
        }
        let mut flat = Vec::with_capacity(n * n);
        for f in &fields[1 + n..] {
            flat.push(parse_float(f, "rough CSV anchor")?);
        }
        anchors.push(Mat::from_flat(n, n, flat));
    }
    RoughPath::new(GridPath::from_flat(times, n, data)?, anchors, p)
}

/// Parse flat `key=value` text (`#` comments, blank lines allowed).
/// Duplicate keys are rejected — silently shadowed settings are a classic
/// source of irreproducible runs.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {line:?}", ln + 1)))?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("duplicate key {key:?}")));
        }
    }
    Ok(map)
}

fn parse_vec(s: &str, context: &str) -> Result<Vec<f64>> {
    s.split(',').map(|f| parse_float(f, context)).collect()
}

fn format_vec(v: &[f64]) -> String {
    v.iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(",")
}

/// Serialise a domain as `key=value` text.
pub fn write_domain_file(w: &mut impl Write, domain: &Domain) -> Result<()> {
    match domain {
        Domain::HalfSpace { normal, offset } => {
            writeln!(w, "shape=halfspace")?;
            writeln!(w, "normal={}", format_vec(normal))?;
            writeln!(w, "offset={}", format_float(*offset))?;
        }
        Domain::Orthant { dim } => {
            writeln!(w, "shape=orthant")?;
            writeln!(w, "dim={dim}")?;
        }
        Domain::Ball { center, radius } => {
            writeln!(w, "shape=ball")?;
            writeln!(w, "center={}", format_vec(center))?;
            writeln!(w, "radius={}", format_float(*radius))?;
        }
        Domain::Polyhedron { normals, offsets } => {
            writeln!(w, "shape=polyhedron")?;
            writeln!(w, "rows={}", normals.len())?;
            for (i, (a, b)) in normals.iter().zip(offsets).enumerate() {
                writeln!(w, "normal{i}={}", format_vec(a))?;
                writeln!(w, "offset{i}={}", format_float(*b))?;
            }
        }
    }
    Ok(())
}

/// Parse a domain from `key=value` entries.
pub fn domain_from_kv(map: &BTreeMap<String, String>) -> Result<Domain> {
    let shape = map
        .get("shape")
        .ok_or_else(|| Error::Parse("domain file misses the shape key".into()))?;
    let need = |key: &str| -> Result<&String> {
        map.get(key)
            .ok_or_else(|| Error::Parse(format!("domain shape {shape} needs key {key:?}")))
    };
    match shape.as_str() {
        "halfspace" => Domain::half_space(
            parse_vec(need("normal")?, "halfspace normal")?,
            parse_float(need("offset")?, "halfspace offset")?,
        ),
        "orthant" => {
            let dim: usize = need("dim")?
                .parse()
                .map_err(|_| Error::Parse("orthant dim must be a positive integer".into()))?;
            Domain::orthant(dim)
        }
        "ball" => Domain::ball(
            parse_vec(need("center")?, "ball center")?,
            parse_float(need("radius")?, "ball radius")?,
        ),
        "polyhedron" => {
            let rows: usize = need("rows")?
                .parse()
                .map_err(|_| Error::Parse("polyhedron rows must be a positive integer".into()))?;
            let mut spec = Vec::with_capacity(rows);
            for i in 0..rows {
                spec.push((
                    parse_vec(need(&format!("normal{i}"))?, "polyhedron normal")?,
                    parse_float(need(&format!("offset{i}"))?, "polyhedron offset")?,
                ));
            }
            Domain::polyhedron(spec)
        }
        other => Err(Error::Parse(format!("unknown domain shape {other:?}"))),
    }
}

/// Read a domain file (comments allowed).
pub fn read_domain_file(r: impl BufRead) -> Result<Domain> {
    let mut text = String::new();
    for line in r.lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    domain_from_kv(&parse_kv(&text)?)
}
