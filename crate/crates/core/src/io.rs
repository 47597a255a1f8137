//! Plain-text field files.
//!
//! A field file starts with `# {"dim":N,"radius":r}` followed by one row
//! `x_1,...,x_N,value` per site in index order. Values use Rust's shortest
//! round-trip formatting, so reading back is exact.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Field, LatticeSpec};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dim: usize,
    radius: usize,
}

pub fn field_to_csv(u: &Field) -> String {
    let spec = u.spec();
    let header = Header {
        dim: spec.dim(),
        radius: spec.radius(),
    };
    let mut out = format!("# {}\n", serde_json::to_string(&header).expect("plain header"));
    for (x, v) in spec.points().zip(u.values()) {
        for c in &x {
            let _ = write!(out, "{c},");
        }
        let _ = writeln!(out, "{v:e}");
    }
    out
}

pub fn field_from_csv(text: &str) -> Result<Field> {
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Format("empty field file".into()))?;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("field file must start with a '#' header".into()))?;
    let header: Header = serde_json::from_str(json.trim())?;
    let spec = LatticeSpec::new(header.dim, header.radius)?;
    let mut values = vec![0.0; spec.site_count()];
    let mut seen = vec![false; spec.site_count()];
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |m: &str| Error::Format(format!("line {}: {m}", n + 2));
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != spec.dim() + 1 {
            return Err(bad("wrong number of columns"));
        }
        let x = cols[..spec.dim()]
            .iter()
            .map(|c| c.parse::<i64>().map_err(|_| bad("bad coordinate")))
            .collect::<Result<Vec<i64>>>()?;
        let v: f64 = cols[spec.dim()].parse().map_err(|_| bad("bad value"))?;
        let i = spec.index_of(&x).ok_or_else(|| bad("point outside the box"))?;
        if seen[i] {
            return Err(bad("duplicate point"));
        }
        seen[i] = true;
        values[i] = v;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Format(format!("missing point {:?}", spec.point_of(i))));
    }
    Field::new(spec, values)
}

pub fn write_field(path: &Path, u: &Field) -> Result<()> {
    std::fs::write(path, field_to_csv(u))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    field_from_csv(&std::fs::read_to_string(path)?)
}
