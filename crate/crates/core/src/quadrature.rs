//! Symmetric quadrature rules on triangles (Dunavant), in barycentric
//! coordinates with weights normalized to sum to one.

use crate::mesh::Point;

#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: &'static [([f64; 3], f64)],
}

const D1: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];

const D2: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

const A4: f64 = 0.445_948_490_915_965;
const B4: f64 = 0.091_576_213_509_771;
const WA4: f64 = 0.223_381_589_678_011;
const WB4: f64 = 0.109_951_743_655_322;
const D4: [([f64; 3], f64); 6] = [
    ([1.0 - 2.0 * A4, A4, A4], WA4),
    ([A4, 1.0 - 2.0 * A4, A4], WA4),
    ([A4, A4, 1.0 - 2.0 * A4], WA4),
    ([1.0 - 2.0 * B4, B4, B4], WB4),
    ([B4, 1.0 - 2.0 * B4, B4], WB4),
    ([B4, B4, 1.0 - 2.0 * B4], WB4),
];

const A6: f64 = 0.249_286_745_170_910;
const B6: f64 = 0.063_089_014_491_502;
const C6: [f64; 2] = [0.310_352_451_033_784, 0.053_145_049_844_817];
const WA6: f64 = 0.116_786_275_726_379;
const WB6: f64 = 0.050_844_906_370_207;
const WC6: f64 = 0.082_851_075_618_374;
const D6: [([f64; 3], f64); 12] = [
    ([1.0 - 2.0 * A6, A6, A6], WA6),
    ([A6, 1.0 - 2.0 * A6, A6], WA6),
    ([A6, A6, 1.0 - 2.0 * A6], WA6),
    ([1.0 - 2.0 * B6, B6, B6], WB6),
    ([B6, 1.0 - 2.0 * B6, B6], WB6),
    ([B6, B6, 1.0 - 2.0 * B6], WB6),
    ([C6[0], C6[1], 1.0 - C6[0] - C6[1]], WC6),
    ([C6[1], C6[0], 1.0 - C6[0] - C6[1]], WC6),
    ([C6[0], 1.0 - C6[0] - C6[1], C6[1]], WC6),
    ([C6[1], 1.0 - C6[0] - C6[1], C6[0]], WC6),
    ([1.0 - C6[0] - C6[1], C6[0], C6[1]], WC6),
    ([1.0 - C6[0] - C6[1], C6[1], C6[0]], WC6),
];

impl TriangleRule {
    /// Lowest-order rule of the family that is exact for the given degree.
    pub fn exact_for(degree: usize) -> TriangleRule {
        match degree {
            0 | 1 => TriangleRule { degree: 1, points: &D1 },
            2 => TriangleRule { degree: 2, points: &D2 },
            3 | 4 => TriangleRule { degree: 4, points: &D4 },
            _ => TriangleRule { degree: 6, points: &D6 },
        }
    }

    /// Integral over the triangle `p` of `f(bary, x)`.
    pub fn integrate<F: FnMut([f64; 3], Point) -> f64>(&self, p: [Point; 3], area: f64, mut f: F) -> f64 {
        let mut s = 0.0;
        for &(b, w) in self.points {
            s += w * f(b, to_cartesian(p, b));
        }
        s * area
    }
}

pub fn to_cartesian(p: [Point; 3], b: [f64; 3]) -> Point {
    [
        b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
        b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
    ]
}

/// Integrates over a triangle whose vertex `corner` carries an integrable
/// point singularity. The triangle is split geometrically toward the corner:
/// each level halves the two edges at the corner and integrates the outer
/// trapezoid with `rule` after two red refinements. The innermost piece is
/// integrated the same way.
///
/// `f` receives barycentric coordinates relative to the original triangle.
pub fn integrate_graded<F: FnMut([f64; 3], Point) -> f64>(
    p: [Point; 3],
    corner: usize,
    levels: usize,
    rule: TriangleRule,
    mut f: F,
) -> f64 {
    // sub-triangles described in barycentric coordinates of the parent
    let mut unit = [[0.0; 3]; 3];
    for i in 0..3 {
        unit[i][i] = 1.0;
    }
    let o = unit[corner];
    let mut a = unit[(corner + 1) % 3];
    let mut b = unit[(corner + 2) % 3];
    let parent_area = crate::mesh::signed_area(p);
    let mut total = 0.0;
    let mut piece = |tri: [[f64; 3]; 3], total: &mut f64| {
        let mut stack = vec![(tri, 0usize)];
        while let Some((tri, depth)) = stack.pop() {
            if depth < 2 {
                let (m01, m12, m20) = (mid(tri[0], tri[1]), mid(tri[1], tri[2]), mid(tri[2], tri[0]));
                stack.push(([tri[0], m01, m20], depth + 1));
                stack.push(([m01, tri[1], m12], depth + 1));
                stack.push(([m20, m12, tri[2]], depth + 1));
                stack.push(([m12, m20, m01], depth + 1));
                continue;
            }
            let area = parent_area * bary_area(tri);
            let mut s = 0.0;
            for &(w_b, w) in rule.points {
                let bary = [
                    w_b[0] * tri[0][0] + w_b[1] * tri[1][0] + w_b[2] * tri[2][0],
                    w_b[0] * tri[0][1] + w_b[1] * tri[1][1] + w_b[2] * tri[2][1],
                    w_b[0] * tri[0][2] + w_b[1] * tri[1][2] + w_b[2] * tri[2][2],
                ];
                s += w * f(bary, to_cartesian(p, bary));
            }
            *total += s * area;
        }
    };
    for _ in 0..levels {
        let am = mid(o, a);
        let bm = mid(o, b);
        piece([am, a, b], &mut total);
        piece([am, b, bm], &mut total);
        a = am;
        b = bm;
    }
    piece([o, a, b], &mut total);
    total
}

fn mid(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0]
}

/// Area of a sub-triangle given in barycentric coordinates, relative to the
/// parent.
fn bary_area(t: [[f64; 3]; 3]) -> f64 {
    let u = [t[1][0] - t[0][0], t[1][1] - t[0][1]];
    let w = [t[2][0] - t[0][0], t[2][1] - t[0][1]];
    (u[0] * w[1] - u[1] * w[0]).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact integral of x^i y^j over the reference triangle.
    fn monomial(i: u32, j: u32) -> f64 {
        factorial(i) * factorial(j) / factorial(i + j + 2)
    }

    #[test]
    fn rules_integrate_monomials_exactly() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for degree in [1, 2, 4, 6] {
            let rule = TriangleRule::exact_for(degree);
            let wsum: f64 = rule.points.iter().map(|q| q.1).sum();
            assert!((wsum - 1.0).abs() < 1e-14);
            for i in 0..=degree as u32 {
                for j in 0..=(degree as u32 - i) {
                    let q = rule.integrate(p, 0.5, |_, x| x[0].powi(i as i32) * x[1].powi(j as i32));
                    assert!((q - monomial(i, j)).abs() < 1e-14, "degree {degree}: x^{i} y^{j}");
                }
            }
        }
    }

    #[test]
    fn graded_rule_handles_corner_singularity() {
        // integral of r^(-1) over the reference triangle with the singular
        // corner at the origin: int_0^{pi/2} dtheta / (cos + sin) = sqrt(2) ln(1 + sqrt(2))
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let exact = 2f64.sqrt() * (1.0 + 2f64.sqrt()).ln();
        let q = integrate_graded(p, 0, 60, TriangleRule::exact_for(6), |_, x| 1.0 / (x[0] * x[0] + x[1] * x[1]).sqrt());
        assert!((q - exact).abs() < 1e-9, "{q} vs {exact}");
        // polynomials are still exact, whichever corner is chosen
        let q = integrate_graded(p, 2, 10, TriangleRule::exact_for(4), |_, x| x[0] * x[0] * x[1]);
        assert!((q - monomial(2, 1)).abs() < 1e-15);
    }
}
