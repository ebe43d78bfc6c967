//! Reflection liftings, the modified Clement interpolant and the discrete
//! operator T_h, with numerical estimates of the lifting constant K_R and of
//! the coercivity constant of (u, v) -> B(u, T_h v).
//!
//! All discrete constructions assume a mesh that is invariant under the
//! reflections of its geometry, as produced with [`Diagonals::Mirrored`].

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use faer::{Mat, Side};

use crate::assembly::{assemble, assemble_mass, assemble_weighted};
use crate::error::{Error, Result};
use crate::mesh::{build_structured_mesh_with, refine_uniform, Diagonals, Geometry, Mesh, Point, Subdomain};
use crate::problem::Coefficient;
use crate::sparse::{solve_checked, CsrMatrix};

/// Direction of the lifting: from the `source` part into the other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Roles {
    /// Lift traces from the positive part into the negative one.
    PlusToMinus,
    /// Lift traces from the negative part into the positive one.
    MinusToPlus,
}

impl Roles {
    pub fn source(self) -> Subdomain {
        match self {
            Roles::PlusToMinus => Subdomain::Plus,
            Roles::MinusToPlus => Subdomain::Minus,
        }
    }

    pub fn target(self) -> Subdomain {
        self.source().opposite()
    }

    pub fn name(self) -> &'static str {
        match self {
            Roles::PlusToMinus => "plus-to-minus",
            Roles::MinusToPlus => "minus-to-plus",
        }
    }

    /// The direction for which the closed-form bound on K_R is below one,
    /// if either is.
    pub fn preferred(geometry: Geometry, mu: f64) -> Roles {
        let k = reflection_bound(geometry, Roles::PlusToMinus, mu);
        if k < 1.0 {
            Roles::PlusToMinus
        } else {
            Roles::MinusToPlus
        }
    }
}

/// Closed-form value (square) or upper bound (L-shape) of K_R for the
/// reflection liftings, with a = 1 on the positive part and a = mu on the
/// negative one.
pub fn reflection_bound(geometry: Geometry, roles: Roles, mu: f64) -> f64 {
    let copies = match geometry {
        Geometry::SymmetricSquare => 1.0,
        Geometry::LShapedInterface => 3.0,
    };
    match roles {
        Roles::PlusToMinus => copies * mu.abs(),
        Roles::MinusToPlus => copies / mu.abs(),
    }
}

/// Closed-form reflection lifting. The value at a target point is a signed
/// combination of source values at mirrored points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reflection {
    pub geometry: Geometry,
    pub roles: Roles,
}

impl Reflection {
    pub fn new(geometry: Geometry, roles: Roles) -> Reflection {
        Reflection { geometry, roles }
    }

    /// Source points and weights whose combination gives the lifted value at
    /// `p`, a point of the closed target part.
    pub fn images(&self, p: Point) -> Vec<(Point, f64)> {
        let [x, y] = p;
        match (self.geometry, self.roles) {
            (Geometry::SymmetricSquare, _) => vec![([-x, y], 1.0)],
            (Geometry::LShapedInterface, Roles::PlusToMinus) => {
                let q = if x <= 0.0 && y >= 0.0 {
                    [-x, y]
                } else if x <= 0.0 {
                    [-x, -y]
                } else {
                    [x, -y]
                };
                vec![(q, 1.0)]
            }
            (Geometry::LShapedInterface, Roles::MinusToPlus) => {
                vec![([-x, y], 1.0), ([x, -y], 1.0), ([-x, -y], -1.0)]
            }
        }
    }

    /// Lifted function of `v` on the closed target part.
    pub fn lift<'a, F: Fn(Point) -> f64 + 'a>(&self, v: F) -> impl Fn(Point) -> f64 + 'a {
        let this = *self;
        move |p| this.images(p).into_iter().map(|(q, c)| c * v(q)).sum()
    }
}

fn key(p: Point) -> (u64, u64) {
    // adding zero folds -0.0 into 0.0
    ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits())
}

/// The reflection lifting acting on nodal values of a mirror-symmetric
/// mesh, where it maps P1 functions to P1 functions.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalReflection {
    pub reflection: Reflection,
    /// For each vertex of the closed target part, the (source vertex, weight)
    /// pairs; empty for the other vertices.
    pub map: Vec<Vec<(usize, f64)>>,
}

impl NodalReflection {
    pub fn new(mesh: &Mesh, geometry: Geometry, roles: Roles) -> Result<NodalReflection> {
        let reflection = Reflection::new(geometry, roles);
        let lookup: HashMap<(u64, u64), usize> =
            mesh.vertices().iter().enumerate().map(|(i, v)| (key(v.coords), i)).collect();
        let find = |q: Point| {
            lookup
                .get(&key(q))
                .copied()
                .ok_or_else(|| Error::NotSymmetric(format!("no vertex at ({}, {})", q[0], q[1])))
        };
        // every reflected triangle must be a triangle of the mesh
        let tris: HashSet<[usize; 3]> = mesh
            .triangles()
            .iter()
            .map(|t| {
                let mut v = t.vertices;
                v.sort_unstable();
                v
            })
            .collect();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let p = mesh.triangle_coords(t);
            for flip in [[-1.0, 1.0], [1.0, -1.0]] {
                if geometry == Geometry::SymmetricSquare && flip[1] < 0.0 {
                    continue;
                }
                let mut img = [0usize; 3];
                for k in 0..3 {
                    img[k] = find([flip[0] * p[k][0], flip[1] * p[k][1]])?;
                }
                img.sort_unstable();
                if !tris.contains(&img) {
                    return Err(Error::NotSymmetric(format!("mirror image of triangle {t} is not a triangle")));
                }
            }
            let _ = tri;
        }
        let target = roles.target();
        let mut map = vec![Vec::new(); mesh.num_vertices()];
        for (i, v) in mesh.vertices().iter().enumerate() {
            if geometry.contains_closed(target, v.coords) {
                for (q, c) in reflection.images(v.coords) {
                    map[i].push((find(q)?, c));
                }
            }
        }
        Ok(NodalReflection { reflection, map })
    }

    /// Lifted nodal values; zero off the closed target part.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.map.iter().map(|terms| terms.iter().map(|&(j, c)| c * v[j]).sum()).collect()
    }
}

/// Weight rule of the interpolant at interface vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClementRule {
    /// Point value of the trace, which keeps the trace unchanged.
    PointValues,
    /// Mean of the trace over one interface edge at the vertex, as in the
    /// classical Clement operator.
    EdgeMeans,
}

/// Interface vertices that are not on the outer boundary, and the interior
/// vertices of the closed `target` part.
fn target_vertices(mesh: &Mesh, geometry: Geometry, target: Subdomain) -> Vec<usize> {
    (0..mesh.num_vertices())
        .filter(|&i| {
            let v = &mesh.vertices()[i];
            !v.on_boundary && geometry.contains_closed(target, v.coords)
        })
        .collect()
}

/// Interpolates the P1 function `w` (nodal values, meaningful on the closed
/// target part) into P1 functions on the target part vanishing on its outer
/// boundary. Interior vertices take patch means of `w`; interface vertices
/// take the trace `trace` according to `rule`.
pub fn clement_interpolate(
    mesh: &Mesh,
    geometry: Geometry,
    target: Subdomain,
    w: &[f64],
    trace: &[f64],
    rule: ClementRule,
) -> Result<Vec<f64>> {
    Ok(apply_rows(&clement_rows(mesh, geometry, target, rule)?, w, trace))
}

/// Row `i` of the interpolant, split into the part acting on `w` and the
/// part acting on the trace.
type Rows = Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>)>;

fn apply_rows(rows: &Rows, w: &[f64], trace: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|(a, b)| a.iter().map(|&(j, c)| c * w[j]).sum::<f64>() + b.iter().map(|&(j, c)| c * trace[j]).sum::<f64>())
        .collect()
}

fn clement_rows(mesh: &Mesh, geometry: Geometry, target: Subdomain, rule: ClementRule) -> Result<Rows> {
    let mut rows: Rows = vec![(Vec::new(), Vec::new()); mesh.num_vertices()];
    for x in target_vertices(mesh, geometry, target) {
        let vert = &mesh.vertices()[x];
        if vert.on_interface {
            match rule {
                ClementRule::PointValues => rows[x].1.push((x, 1.0)),
                ClementRule::EdgeMeans => {
                    let e = mesh
                        .edges()
                        .iter()
                        .find(|e| e.vertices.contains(&x) && e.is_interface(mesh))
                        .ok_or_else(|| Error::NonConforming(format!("interface vertex {x} has no interface edge")))?;
                    rows[x].1.push((e.vertices[0], 0.5));
                    rows[x].1.push((e.vertices[1], 0.5));
                }
            }
        } else {
            // patch mean of a P1 function: each triangle contributes its area
            // times the mean of its three nodal values
            let patch = mesh.vertex_patch(x)?;
            let area: f64 = patch.iter().map(|&t| mesh.triangles()[t].area).sum();
            let mut acc: HashMap<usize, f64> = HashMap::new();
            for &t in patch {
                let tri = &mesh.triangles()[t];
                for &v in &tri.vertices {
                    *acc.entry(v).or_insert(0.0) += tri.area / (3.0 * area);
                }
            }
            let mut terms: Vec<(usize, f64)> = acc.into_iter().collect();
            terms.sort_unstable_by_key(|t| t.0);
            rows[x].0 = terms;
        }
    }
    Ok(rows)
}

/// Which discrete lifting R_h the operator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftingKind {
    /// Nodal reflection, exact on mirror-symmetric meshes.
    Nodal,
    /// R_h = I_h R with the given interface rule.
    Clement(ClementRule),
}

impl LiftingKind {
    pub fn name(self) -> &'static str {
        match self {
            LiftingKind::Nodal => "nodal reflection",
            LiftingKind::Clement(ClementRule::PointValues) => "clement (point values on the interface)",
            LiftingKind::Clement(ClementRule::EdgeMeans) => "clement (edge means on the interface)",
        }
    }
}

/// T_h v = v on the source part and -v + 2 R_h(v|source) on the target.
#[derive(Debug, Clone)]
pub struct DiscreteTOperator {
    pub geometry: Geometry,
    pub roles: Roles,
    pub lifting: LiftingKind,
    /// R_h as a linear map from source nodal values to target nodal values.
    lift: Vec<Vec<(usize, f64)>>,
    target: Vec<bool>,
    boundary: Vec<bool>,
}

impl DiscreteTOperator {
    pub fn new(mesh: &Mesh, geometry: Geometry, roles: Roles, lifting: LiftingKind) -> Result<DiscreteTOperator> {
        let reflection = NodalReflection::new(mesh, geometry, roles)?;
        let lift = match lifting {
            LiftingKind::Nodal => reflection.map.clone(),
            LiftingKind::Clement(rule) => {
                // compose the patch means with the nodal reflection
                let rows = clement_rows(mesh, geometry, roles.target(), rule)?;
                rows.into_iter()
                    .map(|(means, trace)| {
                        let mut acc: HashMap<usize, f64> = HashMap::new();
                        for (y, c) in means {
                            for &(s, d) in &reflection.map[y] {
                                *acc.entry(s).or_insert(0.0) += c * d;
                            }
                        }
                        for (s, c) in trace {
                            *acc.entry(s).or_insert(0.0) += c;
                        }
                        let mut terms: Vec<(usize, f64)> = acc.into_iter().filter(|t| t.1 != 0.0).collect();
                        terms.sort_unstable_by_key(|t| t.0);
                        terms
                    })
                    .collect()
            }
        };
        let target = mesh.vertices().iter().map(|v| geometry.contains_closed(roles.target(), v.coords)).collect();
        let boundary = mesh.vertices().iter().map(|v| v.on_boundary).collect();
        Ok(DiscreteTOperator { geometry, roles, lifting, lift, target, boundary })
    }

    /// R_h of the source part of `v`, zero off the target part.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        self.lift
            .iter()
            .enumerate()
            .map(|(i, terms)| if self.boundary[i] { 0.0 } else { terms.iter().map(|&(j, c)| c * v[j]).sum() })
            .collect()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let r = self.lift(v);
        (0..v.len())
            .map(|i| {
                if self.boundary[i] {
                    0.0
                } else if self.target[i] {
                    -v[i] + 2.0 * r[i]
                } else {
                    v[i]
                }
            })
            .collect()
    }
}

fn eigen_error(reason: impl std::fmt::Debug) -> Error {
    Error::Eigen { iterations: 0, reason: format!("{reason:?}") }
}

/// Eigenvalues of the pencil (s, h), h symmetric positive definite, in
/// nondecreasing order.
pub fn generalized_eigenvalues(s: &Mat<f64>, h: &Mat<f64>) -> Result<Vec<f64>> {
    let llt = h.llt(Side::Lower).map_err(|e| eigen_error(format!("Gram matrix is not positive definite: {e:?}")))?;
    let l = llt.L();
    // c = l^{-1} s l^{-T}
    let mut x = s.clone();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut c = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    let n = c.nrows();
    let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    sym.self_adjoint_eigenvalues(Side::Lower).map_err(eigen_error)
}

fn dense_block(a: &CsrMatrix, rows: &[usize], cols: &[usize]) -> Mat<f64> {
    let mut pos = vec![usize::MAX; a.dim()];
    for (k, &c) in cols.iter().enumerate() {
        pos[c] = k;
    }
    let mut m = Mat::<f64>::zeros(rows.len(), cols.len());
    for (r, &i) in rows.iter().enumerate() {
        for (j, v) in a.row(i) {
            if pos[j] != usize::MAX {
                m[(r, pos[j])] = v;
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Largest ratio |B_target(R_h v, R_h v)| / |B_source(v, v)|.
    pub kr_h: f64,
    /// Smallest eigenvalue of the symmetric part of +-B(u, T_h v) relative to
    /// the H1 inner product on the free vertices, the sign being that of the
    /// coefficient on the source part.
    pub alpha_min: f64,
}

/// Dense generalized eigensolves; meant for meshes with a few thousand
/// vertices at most.
pub fn estimate_constants(mesh: &Mesh, op: &DiscreteTOperator, coeff: &Coefficient) -> Result<Constants> {
    let source = op.roles.source();
    let target = op.roles.target();
    let geometry = op.geometry;
    let source_free = target_vertices(mesh, geometry, source);
    let n = mesh.num_vertices();

    // K_R: v ranges over P1 functions on the source part, zero on its
    // outer boundary
    let a_s = assemble_weighted(mesh, |s| if s == source { coeff.value(s).abs() } else { 0.0 })?;
    let a_t = assemble_weighted(mesh, |s| if s == target { coeff.value(s).abs() } else { 0.0 })?;
    let mut lifted = Mat::<f64>::zeros(n, source_free.len());
    for (k, &s) in source_free.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[s] = 1.0;
        let r = op.lift(&e);
        for i in 0..n {
            lifted[(i, k)] = r[i];
        }
    }
    let mut a_t_lifted = Mat::<f64>::zeros(n, source_free.len());
    for k in 0..source_free.len() {
        let col: Vec<f64> = (0..n).map(|i| lifted[(i, k)]).collect();
        let y = a_t.matvec(&col);
        for i in 0..n {
            a_t_lifted[(i, k)] = y[i];
        }
    }
    let m = lifted.transpose() * &a_t_lifted;
    let h_s = dense_block(&a_s, &source_free, &source_free);
    let kr_h = generalized_eigenvalues(&m, &h_s)?.last().copied().unwrap_or(0.0);

    // coercivity of B(u, T_h v) on the free vertices
    let free: Vec<usize> = (0..n).filter(|&i| !mesh.vertices()[i].on_boundary).collect();
    let a = dense_block(&assemble(mesh, coeff)?, &free, &free);
    let mut t = Mat::<f64>::zeros(free.len(), free.len());
    for (k, &j) in free.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = op.apply(&e);
        for (r, &i) in free.iter().enumerate() {
            t[(r, k)] = col[i];
        }
    }
    // B(u, T v) is coercive with the sign of the coefficient on the source
    let sign = coeff.value(source).signum();
    let at = &a * &t;
    let s = Mat::<f64>::from_fn(free.len(), free.len(), |i, j| 0.5 * sign * (at[(i, j)] + at[(j, i)]));
    let stiff = assemble_weighted(mesh, |_| 1.0)?;
    let mass = assemble_mass(mesh);
    let h = dense_block(&stiff, &free, &free) + dense_block(&mass, &free, &free);
    let alpha_min = generalized_eigenvalues(&s, &h)?.first().copied().unwrap_or(0.0);
    Ok(Constants { kr_h, alpha_min })
}

fn part_norms(mesh: &Mesh, side: Subdomain, v: &[f64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut semi = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if tri.subdomain != side {
            continue;
        }
        let g = crate::assembly::element_gradient(mesh, v, t);
        semi += tri.area * (g[0] * g[0] + g[1] * g[1]);
        let [a, b, c] = tri.vertices.map(|i| v[i]);
        l2 += tri.area / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
    }
    (l2, semi)
}

/// |.|_1 on the target part of the discrete harmonic extension of the
/// interface values of `v`, vanishing on the outer boundary. Serves as the
/// discrete H^{1/2} norm of the trace.
pub fn harmonic_extension_seminorm(mesh: &Mesh, geometry: Geometry, target: Subdomain, v: &[f64]) -> Result<f64> {
    let inner: Vec<usize> = target_vertices(mesh, geometry, target)
        .into_iter()
        .filter(|&i| !mesh.vertices()[i].on_interface)
        .collect();
    let k = assemble_weighted(mesh, |s| if s == target { 1.0 } else { 0.0 })?;
    let trace: Vec<f64> = (0..mesh.num_vertices())
        .map(|i| {
            let vert = &mesh.vertices()[i];
            if vert.on_interface && !vert.on_boundary {
                v[i]
            } else {
                0.0
            }
        })
        .collect();
    let kt = k.matvec(&trace);
    let mut ext = trace.clone();
    if !inner.is_empty() {
        let mut pos = vec![usize::MAX; mesh.num_vertices()];
        for (p, &i) in inner.iter().enumerate() {
            pos[i] = p;
        }
        let mut entries = Vec::new();
        for (p, &i) in inner.iter().enumerate() {
            for (j, val) in k.row(i) {
                if pos[j] != usize::MAX {
                    entries.push((p, pos[j], val));
                }
            }
        }
        let sub = CsrMatrix::from_triplets(inner.len(), entries);
        let rhs: Vec<f64> = inner.iter().map(|&i| -kt[i]).collect();
        let x = solve_checked(&sub, &rhs)?;
        for (p, &i) in inner.iter().enumerate() {
            ext[i] = x[p];
        }
    }
    Ok(part_norms(mesh, target, &ext).1.sqrt())
}

/// |I_h w|_{1,target} / (||w||_{1,target} + |trace|_{1/2}) for w the nodal
/// reflection of the source part of `v`.
pub fn stability_ratio(mesh: &Mesh, geometry: Geometry, roles: Roles, v: &[f64], rule: ClementRule) -> Result<f64> {
    let reflection = NodalReflection::new(mesh, geometry, roles)?;
    let w = reflection.apply(v);
    let ih = clement_interpolate(mesh, geometry, roles.target(), &w, v, rule)?;
    let (_, ih_semi) = part_norms(mesh, roles.target(), &ih);
    let (w_l2, w_semi) = part_norms(mesh, roles.target(), &w);
    let half = harmonic_extension_seminorm(mesh, geometry, roles.target(), v)?;
    Ok(ih_semi.sqrt() / ((w_l2 + w_semi).sqrt() + half))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityLevel {
    pub n: usize,
    pub vertices: usize,
    pub kr_h: f64,
    pub alpha_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub geometry: Geometry,
    pub mu: f64,
    pub roles: Roles,
    pub lifting: LiftingKind,
    pub bound: f64,
    pub levels: Vec<CoercivityLevel>,
}

impl CoercivityReport {
    /// K_R_h within the closed-form bound and alpha_min > 0 on every level.
    pub fn passes(&self) -> bool {
        self.levels.iter().all(|l| l.kr_h <= self.bound + 1e-6 && l.alpha_min > 0.0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "geometry  {}", self.geometry.name());
        let _ = writeln!(s, "mu        {}", self.mu);
        let _ = writeln!(s, "roles     {}", self.roles.name());
        let _ = writeln!(s, "lifting   {}", self.lifting.name());
        let _ = writeln!(s, "K_R bound {:.6}", self.bound);
        let _ = writeln!(s, "{:>5} {:>6} {:>9} {:>14} {:>14} {:>6}", "level", "n", "vertices", "K_R_h", "alpha_min", "pass");
        for (i, l) in self.levels.iter().enumerate() {
            let ok = l.kr_h <= self.bound + 1e-6 && l.alpha_min > 0.0;
            let _ = writeln!(
                s,
                "{:>5} {:>6} {:>9} {:>14.8} {:>14.6e} {:>6}",
                i + 1,
                l.n,
                l.vertices,
                l.kr_h,
                l.alpha_min,
                if ok { "yes" } else { "no" }
            );
        }
        let _ = writeln!(s, "result    {}", if self.passes() { "pass" } else { "fail" });
        s
    }
}

/// Estimates both constants on `levels` mirror-symmetric meshes, starting
/// with `n0` cells per unit side and refining uniformly.
pub fn verify_coercivity(
    geometry: Geometry,
    mu: f64,
    n0: usize,
    levels: usize,
    roles: Roles,
    lifting: LiftingKind,
) -> Result<CoercivityReport> {
    if levels == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let coeff = Coefficient::contrast(mu)?;
    let mut mesh = build_structured_mesh_with(geometry, n0, Diagonals::Mirrored)?;
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let op = DiscreteTOperator::new(&mesh, geometry, roles, lifting).map_err(|e| e.at_level(level + 1))?;
        let c = estimate_constants(&mesh, &op, &coeff).map_err(|e| e.at_level(level + 1))?;
        out.push(CoercivityLevel { n: n0 << level, vertices: mesh.num_vertices(), kr_h: c.kr_h, alpha_min: c.alpha_min });
        if level + 1 < levels {
            mesh = refine_uniform(&mesh)?;
        }
    }
    Ok(CoercivityReport { geometry, mu, roles, lifting, bound: reflection_bound(geometry, roles, mu), levels: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mirrored(g: Geometry, n: usize) -> Mesh {
        build_structured_mesh_with(g, n, Diagonals::Mirrored).unwrap()
    }

    fn random_v(mesh: &Mesh, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        mesh.vertices().iter().map(|v| if v.on_boundary { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect()
    }

    #[test]
    fn closed_form_liftings() {
        let r = Reflection::new(Geometry::SymmetricSquare, Roles::PlusToMinus);
        let lifted = r.lift(|p: Point| p[0] * (1.0 - p[0]));
        for p in [[-0.3, 0.2], [-1.0, 0.5], [0.0, -0.7]] {
            assert!((lifted(p) + p[0] * (1.0 + p[0])).abs() < 1e-15);
        }
        assert_eq!(lifted([0.0, 0.4]), 0.0);
        let back = Reflection::new(Geometry::LShapedInterface, Roles::MinusToPlus).lift(|_: Point| 1.0);
        assert_eq!(back([0.3, 0.6]), 1.0);
        // the reverse lifting keeps interface values
        let f = |p: Point| (p[0] - 0.3) * (p[1] + 0.2) + p[1] * p[1];
        let back = Reflection::new(Geometry::LShapedInterface, Roles::MinusToPlus).lift(f);
        for t in [0.1, 0.5, 0.9] {
            assert!((back([0.0, t]) - f([0.0, t])).abs() < 1e-15);
            assert!((back([t, 0.0]) - f([t, 0.0])).abs() < 1e-15);
        }
    }

    #[test]
    fn nodal_reflection_needs_symmetry() {
        let m = build_structured_mesh(Geometry::SymmetricSquare, 2).unwrap();
        assert!(matches!(
            NodalReflection::new(&m, Geometry::SymmetricSquare, Roles::PlusToMinus),
            Err(Error::NotSymmetric(_))
        ));
        assert!(NodalReflection::new(&mirrored(Geometry::SymmetricSquare, 2), Geometry::SymmetricSquare, Roles::PlusToMinus).is_ok());
    }

    #[test]
    fn nodal_reflection_is_an_isometry() {
        let m = mirrored(Geometry::SymmetricSquare, 4);
        let r = NodalReflection::new(&m, Geometry::SymmetricSquare, Roles::PlusToMinus).unwrap();
        for seed in 0..5 {
            let v = random_v(&m, seed);
            let w = r.apply(&v);
            let (_, src) = part_norms(&m, Subdomain::Plus, &v);
            let (_, dst) = part_norms(&m, Subdomain::Minus, &w);
            assert!((src - dst).abs() <= 1e-12 * src, "{src} {dst}");
        }
    }

    #[test]
    fn clement_of_constants_and_traces() {
        for g in [Geometry::SymmetricSquare, Geometry::LShapedInterface] {
            let m = mirrored(g, 4);
            let c = vec![2.5; m.num_vertices()];
            let out = clement_interpolate(&m, g, Subdomain::Minus, &c, &c, ClementRule::PointValues).unwrap();
            for (i, v) in m.vertices().iter().enumerate() {
                let expected = if v.on_boundary || !g.contains_closed(Subdomain::Minus, v.coords) { 0.0 } else { 2.5 };
                assert!((out[i] - expected).abs() < 1e-14);
            }
            let w = random_v(&m, 3);
            let trace = random_v(&m, 4);
            let out = clement_interpolate(&m, g, Subdomain::Minus, &w, &trace, ClementRule::PointValues).unwrap();
            for (i, v) in m.vertices().iter().enumerate() {
                if v.on_interface && !v.on_boundary {
                    assert_eq!(out[i], trace[i]);
                }
            }
        }
    }

    #[test]
    fn t_operator_examples() {
        let g = Geometry::SymmetricSquare;
        let m = mirrored(g, 4);
        let op = DiscreteTOperator::new(&m, g, Roles::PlusToMinus, LiftingKind::Clement(ClementRule::PointValues)).unwrap();
        // support strictly inside the negative part
        let v: Vec<f64> = m
            .vertices()
            .iter()
            .map(|p| if !p.on_boundary && p.coords[0] < -0.1 { p.coords[1] + 2.0 } else { 0.0 })
            .collect();
        let tv = op.apply(&v);
        for i in 0..v.len() {
            assert_eq!(tv[i], -v[i]);
        }
        let v = random_v(&m, 9);
        let tv = op.apply(&v);
        for (i, p) in m.vertices().iter().enumerate() {
            if p.on_interface {
                assert_eq!(tv[i], v[i]);
            }
        }
    }

    #[test]
    fn t_with_exact_reflection_is_an_involution() {
        for (g, roles) in [
            (Geometry::SymmetricSquare, Roles::PlusToMinus),
            (Geometry::SymmetricSquare, Roles::MinusToPlus),
            (Geometry::LShapedInterface, Roles::PlusToMinus),
            (Geometry::LShapedInterface, Roles::MinusToPlus),
        ] {
            let m = mirrored(g, 4);
            let op = DiscreteTOperator::new(&m, g, roles, LiftingKind::Nodal).unwrap();
            for seed in 0..5 {
                let v = random_v(&m, seed);
                let ttv = op.apply(&op.apply(&v));
                for i in 0..v.len() {
                    assert!((ttv[i] - v[i]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn square_constant_equals_the_contrast() {
        let g = Geometry::SymmetricSquare;
        let m = mirrored(g, 2);
        let op = DiscreteTOperator::new(&m, g, Roles::PlusToMinus, LiftingKind::Nodal).unwrap();
        let c = estimate_constants(&m, &op, &Coefficient::contrast(-0.5).unwrap()).unwrap();
        assert!((c.kr_h - 0.5).abs() < 1e-10, "{}", c.kr_h);
        assert!(c.alpha_min > 0.0);
    }

    #[test]
    fn generalized_eigenvalues_of_diagonal_pencil() {
        let s = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { [2.0, -3.0][i] } else { 0.0 });
        let h = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { [4.0, 1.0][i] } else { 0.0 });
        let e = generalized_eigenvalues(&s, &h).unwrap();
        assert!((e[0] + 3.0).abs() < 1e-14 && (e[1] - 0.5).abs() < 1e-14);
        let not_spd = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(matches!(generalized_eigenvalues(&s, &not_spd), Err(Error::Eigen { .. })));
    }

    #[test]
    fn harmonic_extension_of_zero_trace() {
        let g = Geometry::LShapedInterface;
        let m = mirrored(g, 2);
        let v: Vec<f64> = m.vertices().iter().map(|p| if p.on_interface { 0.0 } else { 1.0 }).collect();
        assert_eq!(harmonic_extension_seminorm(&m, g, Subdomain::Minus, &v).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = m.vertices().iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(harmonic_extension_seminorm(&m, g, Subdomain::Minus, &v).unwrap() > 0.0);
    }
}
