use std::io::{BufRead, Write};

use super::{GridFunction, PeriodicMesh};
use crate::error::{Error, Result};

/// Writes a field as CSV: optional `#` comment lines, the shape header
/// `# dim=<d> n=<n> components=<c>`, then one row per node holding the
/// coordinates followed by the component values.
pub fn write_csv<W: Write>(mut out: W, f: &GridFunction, comments: &[String]) -> Result<()> {
    let mesh = f.mesh();
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(
        out,
        "# dim={} n={} components={}",
        mesh.dim(),
        mesh.points_per_axis(),
        f.components()
    )?;
    let d = mesh.dim();
    for idx in 0..mesh.len() {
        let x = mesh.node(idx);
        let mut row: Vec<String> = x[..d].iter().map(|v| format!("{v:.16e}")).collect();
        row.extend((0..f.components()).map(|c| format!("{:.16e}", f.at(idx, c))));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Option<(usize, usize, usize)> {
    let mut dim = None;
    let mut n = None;
    let mut comps = None;
    for tok in line.trim_start_matches('#').split_whitespace() {
        let (k, v) = tok.split_once('=')?;
        let v: usize = v.parse().ok()?;
        match k {
            "dim" => dim = Some(v),
            "n" => n = Some(v),
            "components" => comps = Some(v),
            _ => return None,
        }
    }
    Some((dim?, n?, comps?))
}

/// Reads the format produced by [`write_csv`]. Coordinates are checked
/// against the mesh implied by the header.
pub fn read_csv<R: BufRead>(input: R) -> Result<GridFunction> {
    let mut shape = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('#') {
            if shape.is_none() {
                shape = parse_header(t);
            }
            continue;
        }
        let row = t
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Csv(format!("line {}: {e}", lineno + 1)))?;
        rows.push(row);
    }
    let (dim, n, comps) =
        shape.ok_or_else(|| Error::Csv("missing `# dim=.. n=.. components=..` header".into()))?;
    let mesh = PeriodicMesh::new(dim, n)?;
    if rows.len() != mesh.len() {
        return Err(Error::Csv(format!(
            "expected {} rows, found {}",
            mesh.len(),
            rows.len()
        )));
    }
    let tol = 1e-9 * mesh.spacing();
    let mut values = vec![0.0; mesh.len() * comps];
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != dim + comps {
            return Err(Error::Csv(format!(
                "row {idx}: expected {} columns, found {}",
                dim + comps,
                row.len()
            )));
        }
        let x = mesh.node(idx);
        if (0..dim).any(|a| (row[a] - x[a]).abs() > tol) {
            return Err(Error::Csv(format!(
                "row {idx}: coordinates do not match the mesh"
            )));
        }
        for c in 0..comps {
            values[c * mesh.len() + idx] = row[dim + c];
        }
    }
    GridFunction::new(mesh, comps, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let m = PeriodicMesh::square(6).unwrap();
        let f = GridFunction::vector_from_fn(m, 2, |x, out| {
            out[0] = (x[0] * 1.7).sin() / 3.0;
            out[1] = x[1].exp() * 1e-300;
        });
        let mut buf = Vec::new();
        write_csv(&mut buf, &f, &["mode=test".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# mode=test\n# dim=2 n=6 components=2\n"));
        let g = read_csv(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_csv("1,2\n".as_bytes()).is_err());
        assert!(read_csv("# dim=1 n=4 components=1\n0,1\n".as_bytes()).is_err());
    }
}
