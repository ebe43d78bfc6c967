//! Browser bindings: the singular exponent curve, a step-by-step adaptive
//! run on the L-shaped interface and the coercivity report.

use wasm_bindgen::prelude::*;

use signfem::adapt::{mark, ConvergenceRow, ConvergenceTable, DEFAULT_THRESHOLD};
use signfem::assembly::{compute_errors, solve_problem};
use signfem::estimator::{aggregate, compute_indicators};
use signfem::mesh::{build_structured_mesh, refine_marked, Geometry, Mesh, Subdomain};
use signfem::problem::{singular_exponent, Problem};
use signfem::tcoercivity::{verify_coercivity, LiftingKind, Roles};

fn js_err(e: signfem::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Flat `[mu0, lambda0, mu1, lambda1, ...]` over `samples` contrasts spread
/// logarithmically in |mu| between `from` and `to` (both negative).
/// Contrasts without a singularity give NaN.
#[wasm_bindgen]
pub fn lambda_curve(from: f64, to: f64, samples: usize) -> Vec<f64> {
    let (a, b) = (from.abs().ln(), to.abs().ln());
    let n = samples.max(2);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mu = -(a + (b - a) * i as f64 / (n - 1) as f64).exp();
        out.push(mu);
        out.push(singular_exponent(mu).unwrap_or(f64::NAN));
    }
    out
}

/// Adaptive loop for the singular benchmark, advanced one level per call.
#[wasm_bindgen]
pub struct AdaptiveDemo {
    problem: Problem,
    mesh: Mesh,
    table: ConvergenceTable,
    indicators: Vec<f64>,
    marked: Vec<usize>,
}

#[wasm_bindgen]
impl AdaptiveDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(mu: f64, initial_n: usize) -> Result<AdaptiveDemo, JsValue> {
        let problem = Problem::singular(mu).map_err(js_err)?;
        let mesh = build_structured_mesh(Geometry::LShapedInterface, initial_n.max(1)).map_err(js_err)?;
        Ok(AdaptiveDemo { problem, mesh, table: ConvergenceTable::default(), indicators: Vec::new(), marked: Vec::new() })
    }

    /// Refines the triangles marked by the previous step (if any), then
    /// solves, estimates and marks on the new mesh.
    pub fn step(&mut self) -> Result<(), JsValue> {
        if !self.indicators.is_empty() {
            self.mesh = refine_marked(&self.mesh, &self.marked).map_err(js_err)?;
        }
        let p = &self.problem;
        let uh = solve_problem(&self.mesh, p).map_err(js_err)?;
        let errors = compute_errors(&self.mesh, &uh, &p.exact).map_err(js_err)?;
        let ind = compute_indicators(&self.mesh, &uh, &p.coefficient, |x, s| p.source(x, s)).map_err(js_err)?;
        let report = aggregate(&ind, errors.h1);
        self.table.push(ConvergenceRow {
            k: self.table.rows.len() + 1,
            dof: self.mesh.num_vertices(),
            interior_dof: self.mesh.num_interior_vertices(),
            e_l2: errors.l2,
            cv_l2: None,
            e_h1: errors.h1,
            cv_h1: None,
            h1_semi: errors.h1_semi,
            eta: report.eta,
            osc: report.osc,
            effectivity: report.effectivity.value(),
        });
        self.indicators = ind.totals();
        self.marked = mark(&self.indicators, DEFAULT_THRESHOLD);
        Ok(())
    }

    /// Vertex coordinates, `[x0, y0, x1, y1, ...]`.
    pub fn vertices(&self) -> Vec<f64> {
        self.mesh.vertices().iter().flat_map(|v| v.coords).collect()
    }

    /// Vertex triples, three indices per triangle.
    pub fn triangles(&self) -> Vec<u32> {
        self.mesh.triangles().iter().flat_map(|t| t.vertices.map(|v| v as u32)).collect()
    }

    /// 1 for triangles of the negative part, 0 otherwise.
    pub fn subdomains(&self) -> Vec<u8> {
        self.mesh.triangles().iter().map(|t| (t.subdomain == Subdomain::Minus) as u8).collect()
    }

    /// Element indicators of the last step; empty before the first.
    pub fn indicators(&self) -> Vec<f64> {
        self.indicators.clone()
    }

    /// Triangles that the next step refines.
    pub fn marked(&self) -> Vec<u32> {
        self.marked.iter().map(|&t| t as u32).collect()
    }

    pub fn table_text(&self) -> String {
        self.table.to_text()
    }

    pub fn table_csv(&self) -> String {
        self.table.to_csv()
    }
}

/// Coercivity report on nested mirror-symmetric meshes with the nodal
/// reflection; `geometry` is "square" or "lshape".
#[wasm_bindgen]
pub fn coercivity_report(geometry: &str, mu: f64, levels: usize) -> Result<String, JsValue> {
    let g = match geometry {
        "square" => Geometry::SymmetricSquare,
        "lshape" => Geometry::LShapedInterface,
        other => return Err(JsValue::from_str(&format!("unknown geometry {other:?}"))),
    };
    if !(mu < 0.0) {
        return Err(JsValue::from_str("mu must be negative"));
    }
    let roles = Roles::preferred(g, mu);
    verify_coercivity(g, mu, 2, levels.clamp(1, 3), roles, LiftingKind::Nodal).map(|r| r.to_text()).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_marks_the_regular_range() {
        let c = lambda_curve(-0.1, -100.0, 7);
        assert_eq!(c.len(), 14);
        assert!(c[1] > 0.0 && c[1] < 1.0);
        // mu = -1 lies inside (-3, -1/3)
        assert!(c[5].is_nan() && (c[4] + 1.0).abs() < 1e-12);
        assert!((c[13] - 0.6593).abs() < 1e-3);
    }

    #[test]
    fn demo_steps_give_consistent_views() {
        let mut d = AdaptiveDemo::new(-5.0, 2).unwrap_or_else(|_| panic!("construct"));
        for _ in 0..3 {
            d.step().unwrap_or_else(|_| panic!("step"));
        }
        assert_eq!(d.indicators().len(), d.triangles().len() / 3);
        assert_eq!(d.subdomains().len(), d.indicators().len());
        assert_eq!(d.table_text().lines().count(), 4);
        assert!(!d.marked().is_empty());
    }
}
