//! Plain-text mesh format.
//!
//! ```text
//! vertices N triangles M edges K
//! <id> <x> <y> <flags>            N lines, flags: bit 0 boundary, bit 1 interface
//! <id> <v0> <v1> <v2> plus|minus  M lines
//! ```
//!
//! Edges are rebuilt on import; K is checked against the rebuilt count.

use std::io::{BufRead, Write};

use super::{Mesh, Subdomain};
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(
        out,
        "vertices {} triangles {} edges {}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.edges().len()
    )?;
    for (i, v) in mesh.vertices().iter().enumerate() {
        let flags = v.on_boundary as u8 | (v.on_interface as u8) << 1;
        writeln!(out, "{} {:?} {:?} {}", i, v.coords[0], v.coords[1], flags)?;
    }
    for (i, t) in mesh.triangles().iter().enumerate() {
        let tag = match t.subdomain {
            Subdomain::Plus => "plus",
            Subdomain::Minus => "minus",
        };
        writeln!(out, "{} {} {} {} {}", i, t.vertices[0], t.vertices[1], t.vertices[2], tag)?;
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let parse_err = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty mesh file"))?;
    let header = header?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 || h[0] != "vertices" || h[2] != "triangles" || h[4] != "edges" {
        return Err(parse_err(ln, "expected `vertices N triangles M edges K`"));
    }
    let count = |s: &str| s.parse::<usize>().map_err(|_| parse_err(ln, "bad count in header"));
    let (nv, nt, ne) = (count(h[1])?, count(h[3])?, count(h[5])?);

    let mut coords = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for expected in 0..nv {
        let (ln, line) = lines.next().ok_or_else(|| parse_err(0, "missing vertex lines"))?;
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(ln, "vertex line needs `id x y flags`"));
        }
        if f[0].parse::<usize>().ok() != Some(expected) {
            return Err(parse_err(ln, "vertex ids must be consecutive from 0"));
        }
        let x: f64 = f[1].parse().map_err(|_| parse_err(ln, "bad x coordinate"))?;
        let y: f64 = f[2].parse().map_err(|_| parse_err(ln, "bad y coordinate"))?;
        let fl: u8 = f[3].parse().map_err(|_| parse_err(ln, "bad flags"))?;
        coords.push([x, y]);
        flags.push(fl);
    }

    let mut cells = Vec::with_capacity(nt);
    for expected in 0..nt {
        let (ln, line) = lines.next().ok_or_else(|| parse_err(0, "missing triangle lines"))?;
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(parse_err(ln, "triangle line needs `id v0 v1 v2 subdomain`"));
        }
        if f[0].parse::<usize>().ok() != Some(expected) {
            return Err(parse_err(ln, "triangle ids must be consecutive from 0"));
        }
        let mut v = [0usize; 3];
        for k in 0..3 {
            v[k] = f[k + 1].parse().map_err(|_| parse_err(ln, "bad vertex index"))?;
        }
        let sub = match f[4] {
            "plus" => Subdomain::Plus,
            "minus" => Subdomain::Minus,
            _ => return Err(parse_err(ln, "subdomain must be `plus` or `minus`")),
        };
        cells.push((v, sub));
    }

    let mesh = Mesh::from_parts(coords, cells, 0)?;
    if mesh.edges().len() != ne {
        return Err(parse_err(ln, "edge count in header does not match the triangles"));
    }
    for (i, v) in mesh.vertices().iter().enumerate() {
        let fl = v.on_boundary as u8 | (v.on_interface as u8) << 1;
        if fl != flags[i] {
            return Err(Error::Parse { line: i + 2, msg: format!("vertex {i} flags disagree with the topology") });
        }
    }
    Ok(mesh)
}
