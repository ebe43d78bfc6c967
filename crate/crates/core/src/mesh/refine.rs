use std::collections::HashMap;

use super::{longest_edge_first, Mesh, Point, Subdomain};
use crate::error::{Error, Result};

/// Red refinement: every triangle is split into four similar children by
/// joining its edge midpoints.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.num_vertices();
    let mut coords: Vec<Point> = mesh.vertices().iter().map(|v| v.coords).collect();
    coords.extend(mesh.edges().iter().map(|e| midpoint(mesh, e.vertices[0], e.vertices[1])));

    let mut cells = Vec::with_capacity(4 * mesh.num_triangles());
    for tri in mesh.triangles() {
        let [a, b, c] = tri.vertices;
        // edges[i] is opposite vertices[i]
        let m_bc = nv + tri.edges[0];
        let m_ca = nv + tri.edges[1];
        let m_ab = nv + tri.edges[2];
        for child in [[a, m_ab, m_ca], [m_ab, b, m_bc], [m_ca, m_bc, c], [m_bc, m_ca, m_ab]] {
            cells.push((longest_edge_first(&coords, child), tri.subdomain));
        }
    }
    Mesh::from_parts(coords, cells, mesh.generation() + 1)
}

/// Newest-vertex bisection of the marked triangles plus the conforming
/// closure. Each marked triangle is bisected at least once.
pub fn refine_marked(mesh: &Mesh, marked: &[usize]) -> Result<Mesh> {
    if let Some(&bad) = marked.iter().find(|&&t| t >= mesh.num_triangles()) {
        return Err(Error::UnknownId { kind: "triangle", id: bad });
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }

    let mut edge_marked = vec![false; mesh.edges().len()];
    let mut stack: Vec<usize> = Vec::new();
    for &t in marked {
        let e = mesh.triangles()[t].edges[0];
        if !edge_marked[e] {
            edge_marked[e] = true;
            stack.push(e);
        }
    }
    // closure: a triangle with any marked edge must also bisect its refinement edge
    while let Some(e) = stack.pop() {
        for t in mesh.edges()[e].triangles.iter().flatten() {
            let r = mesh.triangles()[*t].edges[0];
            if !edge_marked[r] {
                edge_marked[r] = true;
                stack.push(r);
            }
        }
    }

    let mut coords: Vec<Point> = mesh.vertices().iter().map(|v| v.coords).collect();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge_marked[e] {
            let [a, b] = edge.vertices;
            midpoints.insert((a, b), coords.len());
            coords.push(midpoint(mesh, a, b));
        }
    }

    let mut cells = Vec::with_capacity(mesh.num_triangles() + 2 * midpoints.len());
    for tri in mesh.triangles() {
        bisect(tri.vertices, tri.subdomain, &midpoints, &mut cells);
    }
    Mesh::from_parts(coords, cells, mesh.generation() + 1)
}

fn bisect(
    v: [usize; 3],
    subdomain: Subdomain,
    midpoints: &HashMap<(usize, usize), usize>,
    out: &mut Vec<([usize; 3], Subdomain)>,
) {
    let key = (v[1].min(v[2]), v[1].max(v[2]));
    match midpoints.get(&key) {
        Some(&m) => {
            bisect([m, v[0], v[1]], subdomain, midpoints, out);
            bisect([m, v[2], v[0]], subdomain, midpoints, out);
        }
        None => out.push((v, subdomain)),
    }
}

fn midpoint(mesh: &Mesh, a: usize, b: usize) -> Point {
    let (p, q) = (mesh.coords(a), mesh.coords(b));
    [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
}
