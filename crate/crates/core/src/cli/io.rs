//! Point files and SVG output.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::CliError;

/// Writes `k,x1,...,xn` rows with 17 significant digits, `k` from 1.
pub fn write_points_csv<W: Write>(out: &mut W, points: &[Vec<f64>]) -> std::io::Result<()> {
    let n = points.first().map_or(0, |p| p.len());
    let mut header = String::from("k");
    for i in 1..=n {
        write!(header, ",x{i}").unwrap();
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for (i, p) in points.iter().enumerate() {
        line.clear();
        write!(line, "{}", i + 1).unwrap();
        for x in p {
            write!(line, ",{x:.16e}").unwrap();
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a point file written by [`write_points_csv`]; rows must be
/// numbered `1, 2, ...`.
pub fn read_points_csv<R: BufRead>(input: R) -> Result<Vec<Vec<f64>>, CliError> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| CliError::Config(format!("reading points: {e}")))?,
        None => return Err(CliError::Config("point file is empty".into())),
    };
    let cols: Vec<&str> = header.trim().split(',').collect();
    let n = cols.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("k".to_string())
        .chain((1..=n).map(|i| format!("x{i}")))
        .collect();
    if n == 0 || cols != expected {
        return Err(CliError::Config(format!(
            "bad point file header {header:?}"
        )));
    }
    let mut points = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| CliError::Config(format!("reading points: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        let bad = || CliError::Config(format!("bad point row {}: {line:?}", row + 2));
        if fields.len() != n + 1 || fields[0].parse::<usize>().map_err(|_| bad())? != row + 1 {
            return Err(bad());
        }
        let p = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<f64>, _>>()?;
        points.push(p);
    }
    if points.is_empty() {
        return Err(CliError::Config("point file has no rows".into()));
    }
    Ok(points)
}

/// Planar points as black dots on a square canvas with both axes drawn.
pub fn render_svg(points: &[Vec<f64>], dot_radius: f64) -> String {
    let extent = points
        .iter()
        .flat_map(|p| p.iter().map(|x| x.abs()))
        .fold(1.0, f64::max)
        + 2.0 * dot_radius;
    let mut s = String::new();
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="800" height="800" viewBox="{:.6} {:.6} {:.6} {:.6}">"#,
        -extent,
        -extent,
        2.0 * extent,
        2.0 * extent
    )
    .unwrap();
    let stroke = extent / 400.0;
    writeln!(
        s,
        r#"<g stroke="gray" stroke-width="{stroke:.6}"><line x1="{:.6}" y1="0" x2="{:.6}" y2="0"/><line x1="0" y1="{:.6}" x2="0" y2="{:.6}"/></g>"#,
        -extent, extent, -extent, extent
    )
    .unwrap();
    writeln!(s, r#"<g fill="black">"#).unwrap();
    for p in points {
        // SVG's y axis points down
        writeln!(
            s,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{dot_radius:.6}"/>"#,
            p[0], -p[1]
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, "</svg>").unwrap();
    s
}
