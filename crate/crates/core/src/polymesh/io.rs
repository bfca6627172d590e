//! Line-oriented mesh text format.
//!
//! ```text
//! NP NC
//! x y                      (NP lines)
//! k i_1 ... i_k [region]   (NC lines, 0-based vertex indices)
//! ```
//!
//! `#` starts a comment. Clockwise cells are reversed on load with a warning.

use std::fmt::Write as _;
use std::path::Path;

use super::mesh::PolyMesh;
use super::point::Point2;
use crate::error::{Error, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<PolyMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty mesh file".into(),
    })?;
    let head = parse_ints(line, header)?;
    if head.len() != 2 {
        return Err(Error::Parse {
            line,
            msg: "header must be `NP NC`".into(),
        });
    }
    let (np, nc) = (head[0], head[1]);

    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        let (line, l) = lines.next().ok_or(Error::Parse {
            line: usize::MAX,
            msg: format!("expected {np} points, file ended after {}", points.len()),
        })?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad coordinate {t:?}: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if xy.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 coordinates, found {}", xy.len()),
            });
        }
        points.push(Point2::new(xy[0], xy[1]));
    }

    let mut cells = Vec::with_capacity(nc);
    let mut regions = Vec::with_capacity(nc);
    for c in 0..nc {
        let (line, l) = lines.next().ok_or(Error::Parse {
            line: usize::MAX,
            msg: format!("expected {nc} cells, file ended after {c}"),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let k: usize = toks[0].parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad vertex count {:?}: {e}", toks[0]),
        })?;
        if toks.len() != k + 1 && toks.len() != k + 2 {
            return Err(Error::Parse {
                line,
                msg: format!("cell with {k} vertices has {} fields", toks.len() - 1),
            });
        }
        let mut cell = Vec::with_capacity(k);
        for t in &toks[1..=k] {
            let v: usize = t.parse().map_err(|e| Error::Parse {
                line,
                msg: format!("bad vertex index {t:?}: {e}"),
            })?;
            if v >= np {
                return Err(Error::Parse {
                    line,
                    msg: format!("vertex index {v} out of range (NP = {np})"),
                });
            }
            cell.push(v);
        }
        let region = match toks.get(k + 1) {
            Some(t) => t.parse::<i32>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad region tag {t:?}: {e}"),
            })?,
            None => 0,
        };
        if signed_area(&points, &cell) < 0.0 {
            log::warn!("cell {c} (line {line}) is clockwise; reversing");
            cell.reverse();
        }
        cells.push(cell);
        regions.push(region);
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            msg: "trailing content after the last cell".into(),
        });
    }
    PolyMesh::new(points, cells, regions)
}

pub fn write_mesh_string(mesh: &PolyMesh) -> String {
    let mut s = String::new();
    writeln!(s, "{} {}", mesh.n_points(), mesh.n_cells()).unwrap();
    for p in mesh.points() {
        writeln!(s, "{:.16e} {:.16e}", p.x, p.y).unwrap();
    }
    for (c, cell) in mesh.cells().iter().enumerate() {
        write!(s, "{}", cell.len()).unwrap();
        for v in cell {
            write!(s, " {v}").unwrap();
        }
        writeln!(s, " {}", mesh.region(c)).unwrap();
    }
    s
}

pub fn save_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_mesh_string(mesh)).map_err(|e| Error::io(path, e))
}

fn parse_ints(line: usize, l: &str) -> Result<Vec<usize>> {
    l.split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad integer {t:?}: {e}"),
            })
        })
        .collect()
}

fn signed_area(points: &[Point2], cell: &[usize]) -> f64 {
    let n = cell.len();
    (0..n)
        .map(|k| points[cell[k]].cross(points[cell[(k + 1) % n]]))
        .sum::<f64>()
        * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "# unit square\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\n";

    #[test]
    fn single_square() {
        let m = parse_mesh(SQUARE).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.region(0), 0);
    }

    #[test]
    fn clockwise_cell_is_reversed() {
        let m = parse_mesh("4 1\n0 0\n1 0\n1 1\n0 1\n4 3 2 1 0 7\n").unwrap();
        assert!(m.polygon(0).area() > 0.0);
        assert_eq!(m.region(0), 7);
    }

    #[test]
    fn parse_error_reports_line() {
        let err = parse_mesh("4 1\n0 0\n1 zero\n1 1\n0 1\n4 0 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn round_trip_is_exact() {
        let m = parse_mesh("3 1\n0.1 0.2\n1.3333333333333333 0\n0.7 0.9\n3 0 1 2\n").unwrap();
        let back = parse_mesh(&write_mesh_string(&m)).unwrap();
        assert_eq!(back.points(), m.points());
        assert_eq!(back.cells(), m.cells());
    }
}
