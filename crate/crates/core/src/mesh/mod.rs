//! Conforming triangulations of the two benchmark geometries.
//!
//! Every mesh covers the square (-1,1)^2 and is aligned with the partition into
//! a positive and a negative subdomain: each triangle carries a [`Subdomain`]
//! tag and the interface is a union of edges. Vertex flags and edge kinds are
//! derived from the topology, so refinement never needs to look at the
//! geometry again.
//!
//! Triangles store their vertices counter-clockwise. The edge opposite the
//! first vertex is the refinement edge used by newest-vertex bisection.

mod io;
mod refine;

pub use io::{read_mesh, write_mesh};

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Absolute tolerance for classifying points on the boundary or interface.
pub const GEOMETRY_TOL: f64 = 1e-10;

/// Triangles with area below this fraction of their squared diameter are
/// rejected as degenerate.
const MIN_AREA_RATIO: f64 = 1e-14;

/// Signed area too small for the triangle's own size. Scale-relative so that
/// deep local refinement near a singular point is not flagged.
pub(crate) fn is_degenerate(p: [Point; 3]) -> bool {
    let h = dist(p[1], p[2]).max(dist(p[2], p[0])).max(dist(p[0], p[1]));
    !(signed_area(p).abs() >= MIN_AREA_RATIO * h * h) || h == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Plus,
    Minus,
}

impl Subdomain {
    pub fn opposite(self) -> Subdomain {
        match self {
            Subdomain::Plus => Subdomain::Minus,
            Subdomain::Minus => Subdomain::Plus,
        }
    }
}

/// The two benchmark partitions of (-1,1)^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Positive part (0,1)x(-1,1), interface on x = 0.
    SymmetricSquare,
    /// Positive part (0,1)x(0,1), interface on the two half axes bounding it.
    LShapedInterface,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::SymmetricSquare => "square",
            Geometry::LShapedInterface => "lshape",
        }
    }

    /// Subdomain of a point strictly inside one of the two parts.
    pub fn subdomain_of(self, p: Point) -> Subdomain {
        let plus = match self {
            Geometry::SymmetricSquare => p[0] > 0.0,
            Geometry::LShapedInterface => p[0] > 0.0 && p[1] > 0.0,
        };
        if plus {
            Subdomain::Plus
        } else {
            Subdomain::Minus
        }
    }

    pub fn on_boundary(self, p: Point) -> bool {
        (p[0].abs() - 1.0).abs() <= GEOMETRY_TOL || (p[1].abs() - 1.0).abs() <= GEOMETRY_TOL
    }

    pub fn on_interface(self, p: Point) -> bool {
        let inside = |t: f64| t >= -GEOMETRY_TOL && t <= 1.0 + GEOMETRY_TOL;
        match self {
            Geometry::SymmetricSquare => p[0].abs() <= GEOMETRY_TOL && p[1].abs() <= 1.0 + GEOMETRY_TOL,
            Geometry::LShapedInterface => {
                (p[0].abs() <= GEOMETRY_TOL && inside(p[1])) || (p[1].abs() <= GEOMETRY_TOL && inside(p[0]))
            }
        }
    }

    /// True when the closed triangle lies in the closure of `side`.
    pub fn contains_closed(self, side: Subdomain, p: Point) -> bool {
        let t = GEOMETRY_TOL;
        match (self, side) {
            (Geometry::SymmetricSquare, Subdomain::Plus) => p[0] >= -t,
            (Geometry::SymmetricSquare, Subdomain::Minus) => p[0] <= t,
            (Geometry::LShapedInterface, Subdomain::Plus) => p[0] >= -t && p[1] >= -t,
            (Geometry::LShapedInterface, Subdomain::Minus) => p[0] <= t || p[1] <= t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub coords: Point,
    pub on_boundary: bool,
    pub on_interface: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub subdomain: Subdomain,
    /// Edge ids, `edges[i]` opposite `vertices[i]`.
    pub edges: [usize; 3],
    pub area: f64,
    /// Diameter h_T (longest edge).
    pub diameter: f64,
    /// Diameter of the inscribed circle.
    pub inscribed_diameter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Sorted vertex ids.
    pub vertices: [usize; 2],
    pub triangles: [Option<usize>; 2],
    pub length: f64,
    /// Unit normal, (dy, -dx)/len for the direction vertices[0] -> vertices[1].
    pub normal: Point,
    pub kind: EdgeKind,
}

impl Edge {
    /// Interior edge whose two triangles carry different subdomain tags.
    pub fn is_interface(&self, mesh: &Mesh) -> bool {
        match self.triangles {
            [Some(a), Some(b)] => mesh.triangles[a].subdomain != mesh.triangles[b].subdomain,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vertex>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    /// CSR vertex -> triangle adjacency.
    patch_offsets: Vec<usize>,
    patch_triangles: Vec<usize>,
    generation: usize,
    shape_bound: f64,
}

impl Mesh {
    /// Builds the derived topology from raw vertex coordinates and oriented
    /// triangles. Vertex flags come from the boundary and interface edges.
    pub fn from_parts(
        coords: Vec<Point>,
        cells: Vec<([usize; 3], Subdomain)>,
        generation: usize,
    ) -> Result<Mesh> {
        let nv = coords.len();
        let mut triangles = Vec::with_capacity(cells.len());
        for (id, &(v, subdomain)) in cells.iter().enumerate() {
            if let Some(&bad) = v.iter().find(|&&i| i >= nv) {
                return Err(Error::UnknownId { kind: "vertex", id: bad });
            }
            let p = [coords[v[0]], coords[v[1]], coords[v[2]]];
            let area = signed_area(p);
            if area <= 0.0 || is_degenerate(p) {
                return Err(Error::DegenerateTriangle { id, area });
            }
            let lens = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
            let perimeter = lens[0] + lens[1] + lens[2];
            triangles.push(Triangle {
                vertices: v,
                subdomain,
                edges: [usize::MAX; 3],
                area,
                diameter: lens[0].max(lens[1]).max(lens[2]),
                inscribed_diameter: 4.0 * area / perimeter,
            });
        }

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::with_capacity(cells.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(cells.len() * 3 / 2 + nv);
        for t in 0..triangles.len() {
            let v = triangles[t].vertices;
            for i in 0..3 {
                let a = v[(i + 1) % 3];
                let b = v[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_ids.entry(key).or_insert_with(|| {
                    let (pa, pb) = (coords[key.0], coords[key.1]);
                    let length = dist(pa, pb);
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        triangles: [None, None],
                        length,
                        normal: [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length],
                        kind: EdgeKind::Boundary,
                    });
                    edges.len() - 1
                });
                let slot = &mut edges[e].triangles;
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else if slot[1].is_none() {
                    slot[1] = Some(t);
                    edges[e].kind = EdgeKind::Interior;
                } else {
                    return Err(Error::NonConforming(format!(
                        "edge ({}, {}) shared by more than two triangles",
                        key.0, key.1
                    )));
                }
                triangles[t].edges[i] = e;
            }
        }

        let mut vertices: Vec<Vertex> = coords
            .iter()
            .map(|&c| Vertex { coords: c, on_boundary: false, on_interface: false })
            .collect();
        for e in &edges {
            let interface = match e.triangles {
                [Some(a), Some(b)] => triangles[a].subdomain != triangles[b].subdomain,
                _ => false,
            };
            for &v in &e.vertices {
                if e.kind == EdgeKind::Boundary {
                    vertices[v].on_boundary = true;
                }
                if interface {
                    vertices[v].on_interface = true;
                }
            }
        }

        let mut patch_offsets = vec![0usize; nv + 1];
        for t in &triangles {
            for &v in &t.vertices {
                patch_offsets[v + 1] += 1;
            }
        }
        for i in 0..nv {
            patch_offsets[i + 1] += patch_offsets[i];
        }
        let mut fill = patch_offsets.clone();
        let mut patch_triangles = vec![0usize; patch_offsets[nv]];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in &tri.vertices {
                patch_triangles[fill[v]] = t;
                fill[v] += 1;
            }
        }

        let shape_bound = triangles
            .iter()
            .map(|t| t.diameter / t.inscribed_diameter)
            .fold(0.0, f64::max);

        Ok(Mesh {
            vertices,
            triangles,
            edges,
            patch_offsets,
            patch_triangles,
            generation,
            shape_bound,
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn coords(&self, v: usize) -> Point {
        self.vertices[v].coords
    }

    pub fn triangle_coords(&self, t: usize) -> [Point; 3] {
        let v = self.triangles[t].vertices;
        [self.coords(v[0]), self.coords(v[1]), self.coords(v[2])]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let p = self.triangle_coords(t);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    /// Largest h_T / rho_T over the mesh.
    pub fn shape_bound(&self) -> f64 {
        self.shape_bound
    }

    pub fn max_diameter(&self) -> f64 {
        self.triangles.iter().map(|t| t.diameter).fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let p = self.triangle_coords(t);
                (0..3)
                    .map(|i| {
                        let a = p[i];
                        let b = p[(i + 1) % 3];
                        let c = p[(i + 2) % 3];
                        let u = [b[0] - a[0], b[1] - a[1]];
                        let w = [c[0] - a[0], c[1] - a[1]];
                        let cos = (u[0] * w[0] + u[1] * w[1]) / (norm(u) * norm(w));
                        cos.clamp(-1.0, 1.0).acos()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Vertices not on the outer boundary.
    pub fn num_interior_vertices(&self) -> usize {
        self.vertices.iter().filter(|v| !v.on_boundary).count()
    }

    /// omega_x: triangles containing vertex `v`, in increasing id order.
    pub fn vertex_patch(&self, v: usize) -> Result<&[usize]> {
        if v >= self.vertices.len() {
            return Err(Error::UnknownId { kind: "vertex", id: v });
        }
        Ok(&self.patch_triangles[self.patch_offsets[v]..self.patch_offsets[v + 1]])
    }

    /// omega_e: the one or two triangles sharing edge `e`.
    pub fn edge_patch(&self, e: usize) -> Result<Vec<usize>> {
        let edge = self.edges.get(e).ok_or(Error::UnknownId { kind: "edge", id: e })?;
        Ok(edge.triangles.iter().flatten().copied().collect())
    }

    /// omega_T: triangles sharing at least one vertex with `t` (including `t`).
    pub fn triangle_patch(&self, t: usize) -> Result<Vec<usize>> {
        let tri = self.triangles.get(t).ok_or(Error::UnknownId { kind: "triangle", id: t })?;
        let mut out: Vec<usize> = tri
            .vertices
            .iter()
            .flat_map(|&v| self.patch_triangles[self.patch_offsets[v]..self.patch_offsets[v + 1]].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Gradients of the three barycentric coordinates on triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [Point; 3] {
        p1_gradients(self.triangle_coords(t))
    }

    /// Checks the mesh against its geometry: every one-sided edge lies on the
    /// outer boundary, every triangle sits in the closure of its tagged
    /// subdomain, and vertex flags agree with the geometric predicates.
    pub fn check_conforming(&self, geometry: Geometry) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            if e.kind == EdgeKind::Boundary {
                let a = self.coords(e.vertices[0]);
                let b = self.coords(e.vertices[1]);
                let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                if !(geometry.on_boundary(a) && geometry.on_boundary(b) && geometry.on_boundary(mid)) {
                    return Err(Error::NonConforming(format!("edge {i} has one triangle but is not on the boundary")));
                }
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            for p in self.triangle_coords(t) {
                if !geometry.contains_closed(tri.subdomain, p) {
                    return Err(Error::NonConforming(format!("triangle {t} crosses the interface")));
                }
            }
            if geometry.subdomain_of(self.centroid(t)) != tri.subdomain {
                return Err(Error::NonConforming(format!("triangle {t} has the wrong subdomain tag")));
            }
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if v.on_boundary && !geometry.on_boundary(v.coords) {
                return Err(Error::NonConforming(format!("vertex {i} flagged boundary off the boundary")));
            }
            if v.on_interface && !geometry.on_interface(v.coords) {
                return Err(Error::NonConforming(format!("vertex {i} flagged interface off the interface")));
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn with_generation(mut self, generation: usize) -> Mesh {
        self.generation = generation;
        self
    }
}

/// How the square cells of a structured mesh are cut into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagonals {
    /// Every cell along the bottom-left to top-right diagonal.
    Uniform,
    /// Bottom-left to top-right in the first and third quadrant, the other
    /// diagonal elsewhere. The mesh is then invariant under both axis
    /// reflections.
    Mirrored,
}

/// Structured mesh of (-1,1)^2 with `n` cells per unit length and uniform
/// diagonals. Vertex count is (2n+1)^2.
pub fn build_structured_mesh(geometry: Geometry, n: usize) -> Result<Mesh> {
    build_structured_mesh_with(geometry, n, Diagonals::Uniform)
}

pub fn build_structured_mesh_with(geometry: Geometry, n: usize, diagonals: Diagonals) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("cells per unit side must be at least 1".into()));
    }
    let cells = 2 * n;
    let side = cells + 1;
    let h = 1.0 / n as f64;
    let coord = |i: usize| -1.0 + i as f64 * h;
    let mut coords = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            // keep the axes exact when n is not a power of two
            let x = if i == n { 0.0 } else { coord(i) };
            let y = if j == n { 0.0 } else { coord(j) };
            coords.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * side + i;
    let mut tris = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            let cx = coord(i) + h / 2.0;
            let cy = coord(j) + h / 2.0;
            let pair = if diagonals == Diagonals::Uniform || cx * cy > 0.0 {
                [[v00, v10, v11], [v00, v11, v01]]
            } else {
                [[v00, v10, v01], [v10, v11, v01]]
            };
            for v in pair {
                let c = [
                    (coords[v[0]][0] + coords[v[1]][0] + coords[v[2]][0]) / 3.0,
                    (coords[v[0]][1] + coords[v[1]][1] + coords[v[2]][1]) / 3.0,
                ];
                tris.push((longest_edge_first(&coords, v), geometry.subdomain_of(c)));
            }
        }
    }
    Mesh::from_parts(coords, tris, 0)
}

pub use refine::{refine_marked, refine_uniform};

/// Rotates a counter-clockwise triple so the longest edge is opposite the
/// first vertex. Ties keep the earliest candidate.
pub(crate) fn longest_edge_first(coords: &[Point], v: [usize; 3]) -> [usize; 3] {
    let len = |i: usize| dist(coords[v[(i + 1) % 3]], coords[v[(i + 2) % 3]]);
    let mut best = 0;
    for i in 1..3 {
        if len(i) > len(best) * (1.0 + 1e-12) {
            best = i;
        }
    }
    [v[best], v[(best + 1) % 3], v[(best + 2) % 3]]
}

pub(crate) fn signed_area(p: [Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn norm(u: Point) -> f64 {
    (u[0] * u[0] + u[1] * u[1]).sqrt()
}

/// Constant gradients of the P1 hat functions on a triangle.
pub fn p1_gradients(p: [Point; 3]) -> [Point; 3] {
    let two_area = 2.0 * signed_area(p);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let b = p[(i + 1) % 3];
        let c = p[(i + 2) % 3];
        g[i] = [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area];
    }
    g
}
