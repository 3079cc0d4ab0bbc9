//! Columnar text format for fields.
//!
//! ```text
//! # emergent-field kind=scalar dims=1 time=0.5
//! # axis=0 lower=-5 upper=5 points=101 boundary=reflecting
//! # columns: q0 value
//! -5 0.0001234
//! ...
//! ```
//!
//! Numbers are written with the shortest representation that round-trips,
//! so identical fields always serialize to identical bytes.

use super::{Axis, Boundary, ComplexField, Field, Grid, ScalarField, VectorField};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::{self, BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Complex,
    Vector,
}

impl FieldKind {
    fn name(self) -> &'static str {
        match self {
            FieldKind::Scalar => "scalar",
            FieldKind::Complex => "complex",
            FieldKind::Vector => "vector",
        }
    }
}

fn write_header<W: Write>(
    w: &mut W,
    grid: &Grid,
    kind: FieldKind,
    time: Option<f64>,
    value_columns: &[String],
) -> io::Result<()> {
    write!(w, "# emergent-field kind={} dims={}", kind.name(), grid.dims())?;
    if let Some(t) = time {
        write!(w, " time={t}")?;
    }
    writeln!(w)?;
    for (k, a) in grid.axes().iter().enumerate() {
        writeln!(
            w,
            "# axis={k} lower={} upper={} points={} boundary={}",
            a.lower, a.upper, a.points, a.boundary
        )?;
    }
    write!(w, "# columns:")?;
    for k in 0..grid.dims() {
        write!(w, " q{k}")?;
    }
    for c in value_columns {
        write!(w, " {c}")?;
    }
    writeln!(w)
}

fn write_rows<W: Write>(
    w: &mut W,
    grid: &Grid,
    mut row: impl FnMut(usize, &mut Vec<f64>),
) -> io::Result<()> {
    let mut q = vec![0.0; grid.dims()];
    let mut vals = Vec::new();
    for flat in 0..grid.len() {
        grid.point_into(flat, &mut q);
        vals.clear();
        row(flat, &mut vals);
        let mut first = true;
        for x in q.iter().chain(vals.iter()) {
            if !first {
                w.write_all(b" ")?;
            }
            first = false;
            write!(w, "{x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_scalar<W: Write>(w: &mut W, f: &ScalarField, time: Option<f64>) -> io::Result<()> {
    write_header(w, f.grid(), FieldKind::Scalar, time, &["value".into()])?;
    write_rows(w, f.grid(), |i, out| out.push(f.values()[i]))
}

pub fn write_complex<W: Write>(w: &mut W, f: &ComplexField, time: Option<f64>) -> io::Result<()> {
    write_header(w, f.grid(), FieldKind::Complex, time, &["re".into(), "im".into()])?;
    write_rows(w, f.grid(), |i, out| {
        out.push(f.values()[i].re);
        out.push(f.values()[i].im);
    })
}

pub fn write_vector<W: Write>(w: &mut W, f: &VectorField, time: Option<f64>) -> io::Result<()> {
    let cols: Vec<String> = (0..f.grid().dims()).map(|k| format!("v{k}")).collect();
    write_header(w, f.grid(), FieldKind::Vector, time, &cols)?;
    write_rows(w, f.grid(), |i, out| {
        for c in f.components() {
            out.push(c[i]);
        }
    })
}

/// A parsed field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub kind: FieldKind,
    pub grid: Grid,
    pub time: Option<f64>,
    /// Value columns per row, coordinates stripped.
    pub rows: Vec<Vec<f64>>,
}

impl FieldFile {
    pub fn into_scalar(self) -> Result<ScalarField> {
        if self.kind != FieldKind::Scalar {
            return Err(Error::Parse { line: 1, reason: "expected a scalar field".into() });
        }
        Field::new(self.grid, self.rows.into_iter().map(|r| r[0]).collect())
    }

    pub fn into_complex(self) -> Result<ComplexField> {
        if self.kind != FieldKind::Complex {
            return Err(Error::Parse { line: 1, reason: "expected a complex field".into() });
        }
        Field::new(self.grid, self.rows.into_iter().map(|r| Complex64::new(r[0], r[1])).collect())
    }
}

fn parse_kv<'a>(line: &'a str, key: &str, lineno: usize) -> Result<&'a str> {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Parse { line: lineno, reason: format!("missing `{key}`") })
}

fn parse_num<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line: lineno, reason: format!("bad number `{s}`") })
}

pub fn read_field<R: BufRead>(r: R) -> Result<FieldFile> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((n, Err(e))) => Err(Error::Parse { line: n, reason: e.to_string() }),
            None => Err(Error::Parse { line: 0, reason: format!("unexpected end before {what}") }),
        }
    };
    let (n, head) = next("header")?;
    if !head.starts_with("# emergent-field") {
        return Err(Error::Parse { line: n, reason: "not an emergent-field file".into() });
    }
    let kind = match parse_kv(&head, "kind", n)? {
        "scalar" => FieldKind::Scalar,
        "complex" => FieldKind::Complex,
        "vector" => FieldKind::Vector,
        other => return Err(Error::Parse { line: n, reason: format!("unknown kind `{other}`") }),
    };
    let dims: usize = parse_num(parse_kv(&head, "dims", n)?, n)?;
    let time = match parse_kv(&head, "time", n) {
        Ok(t) => Some(parse_num(t, n)?),
        Err(_) => None,
    };
    let mut axes = Vec::with_capacity(dims);
    for _ in 0..dims {
        let (n, l) = next("axis line")?;
        axes.push(Axis::new(
            parse_num(parse_kv(&l, "lower", n)?, n)?,
            parse_num(parse_kv(&l, "upper", n)?, n)?,
            parse_num(parse_kv(&l, "points", n)?, n)?,
            parse_kv(&l, "boundary", n)?
                .parse::<Boundary>()
                .map_err(|e| Error::Parse { line: n, reason: e.to_string() })?,
        ));
    }
    let grid = Grid::new(axes)?;
    let _columns = next("column line")?;
    let width = match kind {
        FieldKind::Scalar => 1,
        FieldKind::Complex => 2,
        FieldKind::Vector => dims,
    };
    let mut rows = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let (n, l) = next("data row")?;
        let nums: Vec<f64> =
            l.split_whitespace().map(|t| parse_num(t, n)).collect::<Result<_>>()?;
        if nums.len() != dims + width {
            return Err(Error::Parse {
                line: n,
                reason: format!("expected {} columns, found {}", dims + width, nums.len()),
            });
        }
        rows.push(nums[dims..].to_vec());
    }
    Ok(FieldFile { kind, grid, time, rows })
}
