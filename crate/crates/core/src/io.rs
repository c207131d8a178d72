//! Field CSV files and the distance-field JSON sidecar.
//!
//! A field file starts with one comment line
//! `# nx=<nx> ny=<ny> bounds=<lo1>,<lo2>,<hi1>,<hi2>` followed by `ny` rows
//! of `nx` values, row `j` holding nodes `j*nx .. j*nx + nx`. Values use the
//! shortest representation that parses back to the same `f64`; `inf`,
//! `-inf` and `NaN` mark non-finite entries.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distance::DistanceField;
use crate::error::{Error, Result};
use crate::grid::{Bounds, GridDomain, ScalarField};

/// Grid shape and extent from a field header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub bounds: [f64; 4],
}

impl FieldHeader {
    pub fn of(g: &GridDomain) -> Self {
        let b = g.bounds();
        Self { nx: g.nx(), ny: g.ny(), bounds: [b.lo[0], b.lo[1], b.hi[0], b.hi[1]] }
    }

    /// The full rectangle with this shape.
    pub fn grid(&self) -> Result<GridDomain> {
        let [a, b, c, d] = self.bounds;
        GridDomain::rectangle(Bounds::new(vec![a, b], vec![c, d])?, self.nx, self.ny)
    }

    pub fn matches(&self, g: &GridDomain) -> bool {
        *self == Self::of(g)
    }

    fn line(&self) -> String {
        let [a, b, c, d] = self.bounds;
        format!("# nx={} ny={} bounds={a},{b},{c},{d}", self.nx, self.ny)
    }

    fn parse(line: &str) -> Result<Self> {
        let bad = || Error::Input(format!("malformed field header {line:?}"));
        let rest = line.trim().strip_prefix('#').ok_or_else(bad)?;
        let (mut nx, mut ny, mut bounds) = (None, None, None);
        for part in rest.split_whitespace() {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            match key {
                "nx" => nx = Some(value.parse().map_err(|_| bad())?),
                "ny" => ny = Some(value.parse().map_err(|_| bad())?),
                "bounds" => {
                    let v: Vec<f64> = value.split(',').map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
                    bounds = Some(<[f64; 4]>::try_from(v).map_err(|_| bad())?);
                }
                _ => return Err(bad()),
            }
        }
        Ok(Self { nx: nx.ok_or_else(bad)?, ny: ny.ok_or_else(bad)?, bounds: bounds.ok_or_else(bad)? })
    }
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        // Display is the shortest round-trip form and prints inf / -inf
        v.to_string()
    }
}

pub fn write_field<W: Write>(out: W, field: &ScalarField, g: &GridDomain) -> Result<()> {
    if !field.fits(g) {
        return Err(Error::Input("field does not match the grid".into()));
    }
    let mut out = out;
    writeln!(out, "{}", FieldHeader::of(g).line())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in field.values().chunks(g.nx()) {
        w.write_record(row.iter().map(|&v| format_value(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn field_to_string(field: &ScalarField, g: &GridDomain) -> Result<String> {
    let mut buf = Vec::new();
    write_field(&mut buf, field, g)?;
    Ok(String::from_utf8(buf).expect("field text is ASCII"))
}

pub fn save_field(path: &Path, field: &ScalarField, g: &GridDomain) -> Result<()> {
    write_field(fs::File::create(path)?, field, g)
}

/// Reads a field file; the returned grid is the full rectangle of the
/// header.
pub fn read_field<R: Read>(input: R) -> Result<(FieldHeader, GridDomain, ScalarField)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = FieldHeader::parse(&first)?;
    let g = header.grid()?;
    let mut values = Vec::with_capacity(g.len());
    let mut rows = 0;
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    for record in r.records() {
        let record = record?;
        if record.len() != header.nx {
            return Err(Error::Input(format!("row {rows} has {} values, expected {}", record.len(), header.nx)));
        }
        for cell in &record {
            values.push(cell.parse::<f64>().map_err(|_| Error::Input(format!("row {rows}: {cell:?} is not a number")))?);
        }
        rows += 1;
    }
    if rows != header.ny {
        return Err(Error::Input(format!("file has {rows} rows, header says {}", header.ny)));
    }
    let field = ScalarField::new(&g, values)?;
    Ok((header, g, field))
}

pub fn load_field(path: &Path) -> Result<(FieldHeader, GridDomain, ScalarField)> {
    read_field(fs::File::open(path)?)
}

/// Reads a field and checks it against `g`.
pub fn load_field_on(path: &Path, g: &GridDomain) -> Result<ScalarField> {
    let (header, _, field) = load_field(path)?;
    if !header.matches(g) {
        return Err(Error::Input(format!(
            "{} holds a {}x{} field over {:?}, expected {}x{} over {:?}",
            path.display(),
            header.nx,
            header.ny,
            header.bounds,
            g.nx(),
            g.ny(),
            FieldHeader::of(g).bounds
        )));
    }
    Ok(field)
}

/// Metadata written next to a distance field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSidecar {
    pub bounds: [f64; 4],
    pub resolution: [usize; 2],
    pub stencil_order: usize,
    /// `(node, value)` seeds.
    pub seeds: Vec<(usize, f64)>,
    pub unreachable: usize,
}

impl DistanceSidecar {
    pub fn of(df: &DistanceField, g: &GridDomain) -> Self {
        let h = FieldHeader::of(g);
        Self {
            bounds: h.bounds,
            resolution: [h.nx, h.ny],
            stencil_order: df.stencil.order(),
            seeds: df.seeds.clone(),
            unreachable: df.unreachable.len(),
        }
    }
}
