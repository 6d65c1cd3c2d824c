//! Plain-text serialization of arrow configurations and height functions.
//!
//! ```text
//! # schema=v1 kind=heights shape=box(3,3)
//! 0 1 0
//! 1 2 1
//! 0 1 0
//! ```
//!
//! Heights are listed one grid row per line, top row first, with `.` for
//! grid cells outside the domain. Arrow files list the rows of horizontal
//! edges (prefix `h`, top row first) and then the rows of vertical edges
//! (prefix `v`, top row first); each entry is `1` for an arrow in the
//! canonical direction, `0` otherwise, and `.` where the domain has no edge.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{Domain, EdgeKind, Shape};
use crate::sixvertex::{ArrowConfig, HeightFunction};

pub const SCHEMA: &str = "v1";

fn header(kind: &str, domain: &Domain) -> String {
    format!("# schema={SCHEMA} kind={kind} shape={}\n", domain.shape())
}

/// Parses the header line and returns the declared shape.
fn parse_header<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    kind: &str,
) -> Result<Shape> {
    let line = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    let rest = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("missing header line, got `{line}`")))?;
    let mut fields = HashMap::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header token `{tok}`")))?;
        fields.insert(k, v);
    }
    match fields.get("schema") {
        Some(&SCHEMA) => {}
        other => return Err(Error::Parse(format!("unsupported schema {other:?}"))),
    }
    match fields.get("kind") {
        Some(k) if *k == kind => {}
        other => return Err(Error::Parse(format!("expected kind={kind}, got {other:?}"))),
    }
    fields
        .get("shape")
        .ok_or_else(|| Error::Parse("header lacks shape".into()))?
        .parse()
}

pub fn write_heights(domain: &Domain, h: &HeightFunction) -> String {
    let mut out = header("heights", domain);
    for row in (0..domain.rows()).rev() {
        let cells: Vec<String> = (0..domain.cols())
            .map(|col| match domain.face_at(col as i64, row as i64) {
                Some(f) => h.get(f).to_string(),
                None => ".".into(),
            })
            .collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    out
}

pub fn read_heights(text: &str) -> Result<(Domain, HeightFunction)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let domain = Domain::new(parse_header(&mut lines, "heights")?)?;
    let rows: Vec<&str> = lines.collect();
    if rows.len() != domain.rows() {
        return Err(Error::Parse(format!("expected {} rows, got {}", domain.rows(), rows.len())));
    }
    let mut values = vec![0; domain.num_faces()];
    for (i, line) in rows.iter().enumerate() {
        let row = domain.rows() - 1 - i;
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.len() != domain.cols() {
            return Err(Error::Parse(format!("row {row}: expected {} cells", domain.cols())));
        }
        for (col, cell) in cells.iter().enumerate() {
            match (domain.face_at(col as i64, row as i64), *cell) {
                (None, ".") => {}
                (Some(f), s) => {
                    values[f] = s
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad height `{s}` at ({col},{row})")))?;
                }
                (None, s) => {
                    return Err(Error::Parse(format!("cell ({col},{row}) is outside the domain, got `{s}`")))
                }
            }
        }
    }
    let h = HeightFunction::new(&domain, values)?;
    Ok((domain, h))
}

fn edge_grid(domain: &Domain, kind: EdgeKind) -> (usize, usize, HashMap<(usize, usize), usize>) {
    let (wx, wy) = domain.wraps();
    let (cols, rows) = match kind {
        EdgeKind::Horizontal => (domain.cols(), domain.rows() + usize::from(!wy)),
        EdgeKind::Vertical => (domain.cols() + usize::from(!wx), domain.rows()),
    };
    let map = domain
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == kind)
        .map(|(id, e)| ((e.col, e.row), id))
        .collect();
    (cols, rows, map)
}

pub fn write_arrows(domain: &Domain, config: &ArrowConfig) -> String {
    let mut out = header("arrows", domain);
    for (kind, tag) in [(EdgeKind::Horizontal, "h"), (EdgeKind::Vertical, "v")] {
        let (cols, rows, map) = edge_grid(domain, kind);
        for row in (0..rows).rev() {
            let mut line = tag.to_string();
            for col in 0..cols {
                line.push(' ');
                line.push_str(match map.get(&(col, row)) {
                    Some(&e) if config.bit(e) => "1",
                    Some(_) => "0",
                    None => ".",
                });
            }
            writeln!(out, "{line}").unwrap();
        }
    }
    out
}

pub fn read_arrows(text: &str) -> Result<(Domain, ArrowConfig)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let domain = Domain::new(parse_header(&mut lines, "arrows")?)?;
    let body: Vec<&str> = lines.collect();
    let mut bits = vec![true; domain.num_edges()];
    let mut cursor = 0;
    for (kind, tag) in [(EdgeKind::Horizontal, "h"), (EdgeKind::Vertical, "v")] {
        let (cols, rows, map) = edge_grid(&domain, kind);
        for i in 0..rows {
            let row = rows - 1 - i;
            let line = body
                .get(cursor)
                .ok_or_else(|| Error::Parse(format!("missing `{tag}` row {row}")))?;
            cursor += 1;
            let mut cells = line.split_whitespace();
            if cells.next() != Some(tag) {
                return Err(Error::Parse(format!("expected a `{tag}` row, got `{line}`")));
            }
            let cells: Vec<&str> = cells.collect();
            if cells.len() != cols {
                return Err(Error::Parse(format!("`{tag}` row {row}: expected {cols} cells")));
            }
            for (col, cell) in cells.iter().enumerate() {
                match (map.get(&(col, row)), *cell) {
                    (None, ".") => {}
                    (Some(&e), "1") => bits[e] = true,
                    (Some(&e), "0") => bits[e] = false,
                    (_, s) => {
                        return Err(Error::Parse(format!("bad `{tag}` cell `{s}` at ({col},{row})")))
                    }
                }
            }
        }
    }
    if cursor != body.len() {
        return Err(Error::Parse("trailing lines after the arrow rows".into()));
    }
    let config = ArrowConfig::from_bits(&domain, bits)?;
    Ok((domain, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sixvertex::{checkerboard, config_from_height, enumerate_heights, flat_bc};

    #[test]
    fn heights_round_trip() {
        let d = Domain::new("box(4,4)".parse().unwrap()).unwrap();
        for h in enumerate_heights(&d, &flat_bc(&d)).unwrap() {
            let text = write_heights(&d, &h);
            let (d2, h2) = read_heights(&text).unwrap();
            assert_eq!(d2.shape(), d.shape());
            assert_eq!(h2, h);
        }
    }

    #[test]
    fn annulus_marks_hole() {
        let d = Domain::new("annulus(0,1)".parse().unwrap()).unwrap();
        let h = checkerboard(&d);
        let text = write_heights(&d, &h);
        assert!(text.starts_with("# schema=v1 kind=heights shape=annulus(0,1)\n"));
        assert!(text.contains("1 . 1"));
        assert_eq!(read_heights(&text).unwrap().1, h);
    }

    #[test]
    fn arrows_round_trip() {
        for s in ["torus(4,4)", "box(3,2)", "cylinder(4,2)"] {
            let d = Domain::new(s.parse().unwrap()).unwrap();
            let c = config_from_height(&d, &checkerboard(&d)).unwrap();
            let text = write_arrows(&d, &c);
            let (d2, c2) = read_arrows(&text).unwrap();
            assert_eq!(d2.num_edges(), d.num_edges());
            assert_eq!(c2, c);
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_heights("").is_err());
        assert!(read_heights("# schema=v2 kind=heights shape=box(1,1)\n0\n").is_err());
        assert!(read_heights("# schema=v1 kind=arrows shape=box(1,1)\n0\n").is_err());
        assert!(read_heights("# schema=v1 kind=heights shape=box(2,1)\n0 2\n").is_err());
        assert!(read_arrows("# schema=v1 kind=arrows shape=torus(2,2)\nh 1 1\n").is_err());
    }
}
