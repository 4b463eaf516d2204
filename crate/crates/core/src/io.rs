//! Plain-text polygon files: one vertex per line as `x y` or `x, y`,
//! with `#` starting a comment.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{ConvexPolygon, Point};

pub fn parse_polygon(text: &str) -> Result<ConvexPolygon> {
    let mut pts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        if fields.len() != 2 {
            return Err(Error::Parse { line: i + 1, msg: format!("expected 2 coordinates, found {}", fields.len()) });
        }
        let num = |f: &str| {
            f.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: format!("{f:?}: {e}") })
        };
        pts.push(Point::new(num(fields[0])?, num(fields[1])?));
    }
    ConvexPolygon::new(pts)
}

pub fn read_polygon(path: impl AsRef<Path>) -> Result<ConvexPolygon> {
    parse_polygon(&std::fs::read_to_string(path)?)
}

/// Round-trips through `parse_polygon` exactly.
pub fn format_polygon(poly: &ConvexPolygon) -> String {
    let mut s = String::new();
    for p in poly.vertices() {
        let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_separators() {
        let txt = "# unit square\n0 0\n1, 0   # corner\n\n1\t1\n0,1\n";
        let p = parse_polygon(txt).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.area(), 1.0);
        let back = parse_polygon(&format_polygon(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn bad_lines_report_their_number() {
        match parse_polygon("0 0\n1 0\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_polygon("0 0 0\n"), Err(Error::Parse { line: 1, .. })));
    }
}
