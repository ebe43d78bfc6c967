//! Residual a posteriori error indicators.
//!
//! For P1 elements and a coefficient constant on each triangle the element
//! residual reduces to the data term h_T ||f_T||_T. Flux jumps are constant
//! along each edge, so the edge norms are evaluated in closed form. Every
//! interior edge counts in full for both of its triangles.

use std::io::Write;

use crate::assembly::{DiscreteSolution, ErrorNorms};
use crate::error::Result;
use crate::mesh::{EdgeKind, Mesh, Point, Subdomain};
use crate::problem::Coefficient;
use crate::quadrature::TriangleRule;

#[derive(Debug, Clone, PartialEq)]
pub struct ElementIndicators {
    pub eta_r: Vec<f64>,
    pub eta_j: Vec<f64>,
    pub osc: Vec<f64>,
}

impl ElementIndicators {
    pub fn len(&self) -> usize {
        self.eta_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_r.is_empty()
    }

    /// eta_T = eta_{R,T} + eta_{J,T}.
    pub fn eta(&self, t: usize) -> f64 {
        self.eta_r[t] + self.eta_j[t]
    }

    pub fn totals(&self) -> Vec<f64> {
        (0..self.len()).map(|t| self.eta(t)).collect()
    }

    /// `id eta_r eta_j osc`, one line per triangle.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# id eta_r eta_j osc")?;
        for t in 0..self.len() {
            writeln!(out, "{t} {:.6e} {:.6e} {:.6e}", self.eta_r[t], self.eta_j[t], self.osc[t])?;
        }
        Ok(())
    }
}

/// Jump of the normal flux across an interior edge, signed with the stored
/// edge normal. Zero on boundary edges.
pub fn flux_jump(mesh: &Mesh, uh: &DiscreteSolution, coeff: &Coefficient, e: usize) -> f64 {
    let edge = &mesh.edges()[e];
    match edge.triangles {
        [Some(t1), Some(t2)] => {
            let flux = |t: usize| {
                let g = uh.gradient(mesh, t);
                let a = coeff.value(mesh.triangles()[t].subdomain);
                [a * g[0], a * g[1]]
            };
            let (q1, q2) = (flux(t1), flux(t2));
            (q1[0] - q2[0]) * edge.normal[0] + (q1[1] - q2[1]) * edge.normal[1]
        }
        _ => 0.0,
    }
}

pub fn compute_indicators<F: Fn(Point, Subdomain) -> f64>(
    mesh: &Mesh,
    uh: &DiscreteSolution,
    coeff: &Coefficient,
    f: F,
) -> Result<ElementIndicators> {
    uh.check_mesh(mesh)?;
    let mean_rule = TriangleRule::exact_for(4);
    let osc_rule = TriangleRule::exact_for(6);
    let nt = mesh.num_triangles();
    let mut eta_r = Vec::with_capacity(nt);
    let mut osc = Vec::with_capacity(nt);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_coords(t);
        let f_t = mean_rule.integrate(p, tri.area, |_, x| f(x, tri.subdomain)) / tri.area;
        eta_r.push(tri.diameter * f_t.abs() * tri.area.sqrt());
        let dev = osc_rule.integrate(p, tri.area, |_, x| (f(x, tri.subdomain) - f_t).powi(2));
        osc.push(tri.diameter * dev.max(0.0).sqrt());
    }
    let mut eta_j = vec![0.0; nt];
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.kind != EdgeKind::Interior {
            continue;
        }
        // h_e^{1/2} * (|J| h_e^{1/2})
        let contribution = edge.length * flux_jump(mesh, uh, coeff, e).abs();
        for t in edge.triangles.iter().flatten() {
            eta_j[*t] += contribution;
        }
    }
    Ok(ElementIndicators { eta_r, eta_j, osc })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Effectivity {
    Ratio(f64),
    /// The discrete solution is exact, so no ratio exists.
    ExactSolution,
}

impl Effectivity {
    pub fn value(self) -> Option<f64> {
        match self {
            Effectivity::Ratio(r) => Some(r),
            Effectivity::ExactSolution => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorReport {
    pub eta_r: f64,
    pub eta_j: f64,
    /// eta_R + eta_J
    pub eta: f64,
    pub osc: f64,
    pub effectivity: Effectivity,
}

fn l2_sum(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Global estimator and effectivity against the full H1 error.
pub fn aggregate(ind: &ElementIndicators, e_h1: f64) -> EstimatorReport {
    let eta_r = l2_sum(&ind.eta_r);
    let eta_j = l2_sum(&ind.eta_j);
    let eta = eta_r + eta_j;
    let effectivity = if e_h1 > 0.0 { Effectivity::Ratio(eta / e_h1) } else { Effectivity::ExactSolution };
    EstimatorReport { eta_r, eta_j, eta, osc: l2_sum(&ind.osc), effectivity }
}

/// |u - u_h|_1 / (eta_R + eta_J + osc); bounded above by the reliability
/// constant.
pub fn reliability_ratio(report: &EstimatorReport, errors: &ErrorNorms) -> f64 {
    errors.h1_semi / (report.eta + report.osc)
}

/// Per triangle, (eta_{R,T} + eta_{J,T}) / (|u - u_h|_{1,w_T} + osc(f, w_T)),
/// with w_T the triangles sharing a vertex with T.
pub fn local_efficiency_ratios(mesh: &Mesh, ind: &ElementIndicators, errors: &ErrorNorms) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let patch = mesh.triangle_patch(t)?;
        let err: f64 = patch.iter().map(|&s| errors.element_h1_semi_sq[s]).sum::<f64>().sqrt();
        let osc: f64 = patch.iter().map(|&s| ind.osc[s] * ind.osc[s]).sum::<f64>().sqrt();
        let denom = err + osc;
        out.push(if denom > 0.0 { ind.eta(t) / denom } else { 0.0 });
    }
    Ok(out)
}
