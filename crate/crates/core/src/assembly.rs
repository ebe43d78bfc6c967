//! P1 assembly of B(u, v) = int a grad u . grad v, Dirichlet elimination,
//! direct solve and error integration against an exact solution.

use crate::error::{Error, Result};
use crate::mesh::{is_degenerate, p1_gradients, signed_area, Mesh, Point, Subdomain};
use crate::problem::{Coefficient, ExactField, Problem};
use crate::quadrature::{integrate_graded, TriangleRule};
use crate::sparse::{solve_checked, CsrMatrix};

/// Number of geometric levels used around a singular vertex.
pub const GRADED_LEVELS: usize = 40;

/// Element stiffness matrix `a * |T| * grad(phi_i) . grad(phi_j)`.
pub fn local_stiffness(p: [Point; 3], a: f64) -> Result<[[f64; 3]; 3]> {
    let area = signed_area(p);
    if is_degenerate(p) {
        return Err(Error::DegenerateTriangle { id: usize::MAX, area });
    }
    let g = p1_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = a * area.abs() * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    Ok(k)
}

/// Stiffness matrix with a per-subdomain weight; triangles with weight zero
/// are skipped.
pub fn assemble_weighted<W: Fn(Subdomain) -> f64>(mesh: &Mesh, weight: W) -> Result<CsrMatrix> {
    let mut entries = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = weight(tri.subdomain);
        if w == 0.0 {
            continue;
        }
        let k = local_stiffness(mesh.triangle_coords(t), w).map_err(|e| match e {
            Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { id: t, area },
            other => other,
        })?;
        for i in 0..3 {
            for j in 0..3 {
                entries.push((tri.vertices[i], tri.vertices[j], k[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.num_vertices(), entries))
}

pub fn assemble(mesh: &Mesh, coeff: &Coefficient) -> Result<CsrMatrix> {
    assemble_weighted(mesh, |s| coeff.value(s))
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut entries = Vec::with_capacity(9 * mesh.num_triangles());
    for tri in mesh.triangles() {
        for i in 0..3 {
            for j in 0..3 {
                let m = if i == j { tri.area / 6.0 } else { tri.area / 12.0 };
                entries.push((tri.vertices[i], tri.vertices[j], m));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_vertices(), entries)
}

/// Load vector `b_i = sum_T int_T f phi_i` with the degree-4 rule.
pub fn assemble_load<F: Fn(Point, Subdomain) -> f64>(mesh: &Mesh, f: F) -> Vec<f64> {
    let rule = TriangleRule::exact_for(4);
    let mut b = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_coords(t);
        for &(bary, w) in rule.points {
            let x = crate::quadrature::to_cartesian(p, bary);
            let fx = f(x, tri.subdomain) * w * tri.area;
            for i in 0..3 {
                b[tri.vertices[i]] += fx * bary[i];
            }
        }
    }
    b
}

/// Free/constrained partition of the vertices: the outer-boundary vertices
/// carry Dirichlet data.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    constrained: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> DofMap {
        DofMap { constrained: mesh.vertices().iter().map(|v| v.on_boundary).collect() }
    }

    pub fn is_constrained(&self, v: usize) -> bool {
        self.constrained[v]
    }

    pub fn num_free(&self) -> usize {
        self.constrained.iter().filter(|c| !**c).count()
    }

    pub fn free(&self) -> impl Iterator<Item = usize> + '_ {
        self.constrained.iter().enumerate().filter(|(_, c)| !**c).map(|(i, _)| i)
    }
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
}

/// Symmetric elimination of the Dirichlet rows and columns: known values
/// move to the right-hand side and constrained rows become identity rows.
pub fn apply_dirichlet<G: Fn(Point) -> f64>(
    mesh: &Mesh,
    mut matrix: CsrMatrix,
    mut rhs: Vec<f64>,
    g: G,
) -> LinearSystem {
    let dofs = DofMap::new(mesh);
    let n = mesh.num_vertices();
    let values: Vec<f64> = (0..n)
        .map(|v| if dofs.is_constrained(v) { g(mesh.coords(v)) } else { 0.0 })
        .collect();
    for i in 0..n {
        let range = matrix.row_range(i);
        if dofs.is_constrained(i) {
            for k in range {
                let j = matrix.col_at(k);
                matrix.values_mut()[k] = if i == j { 1.0 } else { 0.0 };
            }
            rhs[i] = values[i];
        } else {
            for k in range {
                let j = matrix.col_at(k);
                if dofs.is_constrained(j) {
                    rhs[i] -= matrix.values_mut()[k] * values[j];
                    matrix.values_mut()[k] = 0.0;
                }
            }
        }
    }
    LinearSystem { matrix, rhs, dofs }
}

/// Nodal values of the P1 solution over every vertex of one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub values: Vec<f64>,
    pub generation: usize,
}

impl DiscreteSolution {
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.num_vertices() || self.generation != mesh.generation() {
            return Err(Error::GenerationMismatch {
                expected: mesh.num_vertices(),
                found: self.values.len(),
                generation: mesh.generation(),
            });
        }
        Ok(())
    }

    /// Constant gradient of u_h on triangle `t`.
    pub fn gradient(&self, mesh: &Mesh, t: usize) -> Point {
        element_gradient(mesh, &self.values, t)
    }
}

pub fn element_gradient(mesh: &Mesh, values: &[f64], t: usize) -> Point {
    let g = mesh.barycentric_gradients(t);
    let v = mesh.triangles()[t].vertices;
    let mut out = [0.0; 2];
    for i in 0..3 {
        out[0] += values[v[i]] * g[i][0];
        out[1] += values[v[i]] * g[i][1];
    }
    out
}

pub fn solve(mesh: &Mesh, system: &LinearSystem) -> Result<DiscreteSolution> {
    let values = solve_checked(&system.matrix, &system.rhs)?;
    Ok(DiscreteSolution { values, generation: mesh.generation() })
}

/// Assemble, constrain and solve one benchmark on `mesh`.
pub fn solve_problem(mesh: &Mesh, problem: &Problem) -> Result<DiscreteSolution> {
    let a = assemble(mesh, &problem.coefficient)?;
    let b = assemble_load(mesh, |x, s| problem.source(x, s));
    let system = apply_dirichlet(mesh, a, b, |x| problem.dirichlet(x));
    solve(mesh, &system)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNorms {
    /// ||u - u_h||
    pub l2: f64,
    /// |u - u_h|_1
    pub h1_semi: f64,
    /// ||u - u_h||_1, the full H1 norm
    pub h1: f64,
    /// Per-triangle |u - u_h|_{1,T}^2.
    pub element_h1_semi_sq: Vec<f64>,
}

/// L2 and H1 errors by element quadrature (degree 6); triangles touching the
/// singular point of the exact solution use graded composite quadrature.
pub fn compute_errors<E: ExactField + ?Sized>(mesh: &Mesh, uh: &DiscreteSolution, exact: &E) -> Result<ErrorNorms> {
    uh.check_mesh(mesh)?;
    let rule = TriangleRule::exact_for(6);
    let singular = exact.singular_point();
    let mut l2 = 0.0;
    let mut semi = 0.0;
    let mut per_element = Vec::with_capacity(mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_coords(t);
        let grad_h = uh.gradient(mesh, t);
        let nodal = [uh.values[tri.vertices[0]], uh.values[tri.vertices[1]], uh.values[tri.vertices[2]]];
        let mut failure = None;
        let mut integrand = |b: [f64; 3], x: Point| -> [f64; 2] {
            match exact.eval(x, tri.subdomain) {
                Ok((u, g)) => {
                    let uhx = b[0] * nodal[0] + b[1] * nodal[1] + b[2] * nodal[2];
                    let e = u - uhx;
                    let dg = [g[0] - grad_h[0], g[1] - grad_h[1]];
                    [e * e, dg[0] * dg[0] + dg[1] * dg[1]]
                }
                Err(err) => {
                    failure = Some(err);
                    [0.0, 0.0]
                }
            }
        };
        let corner = singular.and_then(|s| p.iter().position(|q| q[0] == s[0] && q[1] == s[1]));
        let (el2, eh1) = match corner {
            Some(c) => {
                let mut pair = [0.0; 2];
                // two passes keep the closure signature scalar
                pair[0] = integrate_graded(p, c, GRADED_LEVELS, rule, |b, x| integrand(b, x)[0]);
                pair[1] = integrate_graded(p, c, GRADED_LEVELS, rule, |b, x| integrand(b, x)[1]);
                (pair[0], pair[1])
            }
            None => {
                let mut acc = [0.0; 2];
                for &(b, w) in rule.points {
                    let v = integrand(b, crate::quadrature::to_cartesian(p, b));
                    acc[0] += w * v[0];
                    acc[1] += w * v[1];
                }
                (acc[0] * tri.area, acc[1] * tri.area)
            }
        };
        if let Some(err) = failure {
            return Err(err);
        }
        l2 += el2;
        semi += eh1;
        per_element.push(eh1);
    }
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1_semi: semi.sqrt(),
        h1: (l2 + semi).sqrt(),
        element_h1_semi_sq: per_element,
    })
}
