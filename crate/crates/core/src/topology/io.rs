//! CSV forms: diagrams as `birth,death` rows, vectors as one value per row.
//! A leading non-numeric header row is skipped on read.

use std::io::{BufRead, Write};

use super::{DiagramPoint, PersistenceDiagram, PersistenceVector};
use crate::error::{Error, Result};

fn parse_field(s: &str, lineno: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        location: format!("line {lineno}"),
        message: format!("'{}': {e}", s.trim()),
    })
}

fn data_lines<R: BufRead>(input: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let first = trimmed.split(',').next().unwrap_or("").trim();
        if out.is_empty() && first.parse::<f64>().is_err() {
            // header
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

pub fn write_diagram_csv<W: Write>(d: &PersistenceDiagram, mut out: W) -> Result<()> {
    writeln!(out, "birth,death")?;
    for p in d.points() {
        writeln!(out, "{},{}", p.birth, p.death)?;
    }
    Ok(())
}

pub fn read_diagram_csv<R: BufRead>(input: R) -> Result<PersistenceDiagram> {
    let mut points = Vec::new();
    for (lineno, line) in data_lines(input)? {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                location: format!("line {lineno}"),
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        points.push(DiagramPoint::new(parse_field(fields[0], lineno)?, parse_field(fields[1], lineno)?));
    }
    PersistenceDiagram::new(points)
}

pub fn write_vector_csv<W: Write>(v: &PersistenceVector, mut out: W) -> Result<()> {
    writeln!(out, "death")?;
    for d in v.deaths() {
        writeln!(out, "{d}")?;
    }
    Ok(())
}

pub fn read_vector_csv<R: BufRead>(input: R) -> Result<PersistenceVector> {
    let values = data_lines(input)?
        .into_iter()
        .map(|(lineno, line)| parse_field(&line, lineno))
        .collect::<Result<Vec<_>>>()?;
    PersistenceVector::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagram_round_trip_preserves_bits() {
        let d = PersistenceDiagram::from_pairs(&[(0.1, 0.30000000000000004), (0.2, 0.9)]).unwrap();
        let mut buf = Vec::new();
        write_diagram_csv(&d, &mut buf).unwrap();
        assert_eq!(read_diagram_csv(&buf[..]).unwrap(), d);
    }

    #[test]
    fn vector_without_header() {
        let v = read_vector_csv("0.5\n0.25\n".as_bytes()).unwrap();
        assert_eq!(v.deaths(), &[0.25, 0.5]);
    }

    #[test]
    fn bad_row_reports_line() {
        let err = read_diagram_csv("birth,death\n0.1,0.2\n0.3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
