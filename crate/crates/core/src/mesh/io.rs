//! Plain-text mesh format.
//!
//! ```text
//! dim nv ncells
//! x y [z]            (nv lines)
//! v0 v1 v2 [v3]      (ncells lines)
//! f0 .. f_{dim-1} tag (one line per boundary facet)
//! ```
//!
//! Coordinates are written in shortest round-trip form, so reading back gives
//! bit-identical values.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::SimplicialMesh;
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &SimplicialMesh, mut out: W) -> Result<()> {
    let dim = mesh.dim();
    let mut s = String::new();
    writeln!(s, "{} {} {}", dim, mesh.n_vertices(), mesh.n_cells()).unwrap();
    for v in 0..mesh.n_vertices() {
        let p: Vec<String> = mesh.vertex(v).iter().map(|x| format!("{x:?}")).collect();
        writeln!(s, "{}", p.join(" ")).unwrap();
    }
    for c in 0..mesh.n_cells() {
        let p: Vec<String> = mesh.cell(c).iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", p.join(" ")).unwrap();
    }
    for (&f, &t) in mesh.boundary_markers() {
        let p: Vec<String> = mesh.simplex(dim - 1, f).iter().map(|v| v.to_string()).collect();
        writeln!(s, "{} {}", p.join(" "), t).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn fields<T: std::str::FromStr>(line: &str, lineno: usize, n: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != n {
        return Err(parse_err(lineno, format!("expected {n} fields, found {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| parse_err(lineno, format!("cannot parse '{p}'")))
        })
        .collect()
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<SimplicialMesh> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let mut next = |what: &str| -> Result<Option<(usize, String)>> {
        match lines.next() {
            Some((n, Ok(l))) => Ok(Some((n, l))),
            Some((_, Err(e))) => Err(e.into()),
            None => {
                let _ = what;
                Ok(None)
            }
        }
    };
    let (n, header) = next("header")?.ok_or_else(|| parse_err(1, "missing header"))?;
    let h: Vec<usize> = fields(&header, n, 3)?;
    let (dim, nv, nc) = (h[0], h[1], h[2]);
    if dim != 2 && dim != 3 {
        return Err(parse_err(n, format!("dimension {dim} not supported")));
    }
    let mut coords = Vec::with_capacity(nv * dim);
    let mut last = n;
    for _ in 0..nv {
        let (n, l) = next("vertex")?.ok_or_else(|| parse_err(last + 1, "missing vertex line"))?;
        coords.extend(fields::<f64>(&l, n, dim)?);
        last = n;
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (n, l) = next("cell")?.ok_or_else(|| parse_err(last + 1, "missing cell line"))?;
        let c: Vec<usize> = fields(&l, n, dim + 1)?;
        if c.iter().any(|&v| v >= nv) {
            return Err(parse_err(n, "vertex index out of range"));
        }
        cells.push(c);
        last = n;
    }
    let mut tags = HashMap::new();
    while let Some((n, l)) = next("boundary")? {
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != dim + 1 {
            return Err(parse_err(
                n,
                format!("expected {} fields, found {}", dim + 1, parts.len()),
            ));
        }
        let mut verts = Vec::with_capacity(dim);
        for p in &parts[..dim] {
            verts.push(
                p.parse::<usize>()
                    .map_err(|_| parse_err(n, format!("cannot parse '{p}'")))?,
            );
        }
        let tag = parts[dim].parse::<i32>().map_err(|_| parse_err(n, "bad tag"))?;
        verts.sort_unstable();
        tags.insert(verts, tag);
    }
    SimplicialMesh::from_cells(dim, coords, &cells)?.with_facet_tags(&tags)
}
