//! Benchmark problems for -div(a grad u) = f with a piecewise constant,
//! sign-changing coefficient.
//!
//! Two exact solutions are provided: a polynomial on the symmetric square,
//! vanishing on the boundary, and the corner singularity
//! r^lambda * Phi(theta) of the L-shaped interface, with Dirichlet data given
//! by its trace.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::{Error, Result};
use crate::mesh::{Geometry, Point, Subdomain};

/// Piecewise constant coefficient: `plus` on the positive part, `minus` on
/// the negative one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub plus: f64,
    pub minus: f64,
}

impl Coefficient {
    pub fn new(plus: f64, minus: f64) -> Result<Coefficient> {
        if !(plus > 0.0 && minus < 0.0 && plus.is_finite() && minus.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient needs plus > 0 and minus < 0, got ({plus}, {minus})"
            )));
        }
        Ok(Coefficient { plus, minus })
    }

    /// a = 1 on the positive part, a = mu on the negative part.
    pub fn contrast(mu: f64) -> Result<Coefficient> {
        Coefficient::new(1.0, mu)
    }

    pub fn value(&self, side: Subdomain) -> f64 {
        match side {
            Subdomain::Plus => self.plus,
            Subdomain::Minus => self.minus,
        }
    }

    /// Lower bound epsilon_0 on |a|.
    pub fn epsilon0(&self) -> f64 {
        self.plus.min(-self.minus)
    }

    pub fn scaled(&self, c: f64) -> Coefficient {
        Coefficient { plus: c * self.plus, minus: c * self.minus }
    }
}

/// Exponent of the corner singularity, `(2/pi) acos((1 - mu) / (2 |1 + mu|))`.
///
/// Defined for mu < -3 and -1/3 < mu < 0.
pub fn singular_exponent(mu: f64) -> Result<f64> {
    let admissible = mu < -3.0 || (mu > -1.0 / 3.0 && mu < 0.0);
    if !admissible || !mu.is_finite() {
        return Err(Error::InadmissibleContrast(mu));
    }
    let arg = (1.0 - mu) / (2.0 * (1.0 + mu).abs());
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::InadmissibleContrast(mu));
    }
    Ok(2.0 / PI * arg.acos())
}

/// Transmission matrix acting on (c1, c2, d1, d2): continuity of the value
/// and of a * d/dtheta across the rays theta = pi/2 and theta = 0 = 2 pi.
pub fn transmission_matrix(mu: f64, lambda: f64) -> [[f64; 4]; 4] {
    let a = lambda * PI / 2.0;
    let (s1, c1) = a.sin_cos();
    let (s3, c3) = (3.0 * a).sin_cos();
    [
        [s1, 0.0, 0.0, -s3],
        [c1, -1.0, -mu, mu * c3],
        [0.0, s1, -s3, 0.0],
        [1.0, -c1, -mu * c3, mu],
    ]
}

/// Constants (c1, c2, d1, d2) spanning the kernel of the transmission
/// matrix, scaled to unit max-norm with the first nonzero entry positive.
pub fn singular_constants(mu: f64, lambda: f64) -> Result<[f64; 4]> {
    let m = transmission_matrix(mu, lambda);
    let mat = Mat::<f64>::from_fn(4, 4, |i, j| m[i][j]);
    let svd = mat.svd().map_err(|e| Error::Eigen { iterations: 0, reason: format!("{e:?}") })?;
    let s = svd.S().column_vector();
    let (mut imin, mut smax) = (0, 0.0f64);
    for i in 0..4 {
        smax = smax.max(s[i]);
        if s[i] < s[imin] {
            imin = i;
        }
    }
    let ratio = s[imin] / smax;
    if ratio > 1e-8 {
        return Err(Error::TransmissionNotSingular(ratio));
    }
    let v = svd.V();
    let mut c = [v[(0, imin)], v[(1, imin)], v[(2, imin)], v[(3, imin)]];
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let first = c.iter().copied().find(|x| x.abs() > 1e-12 * scale).unwrap_or(1.0);
    let scale = scale * first.signum();
    for x in &mut c {
        *x /= scale;
    }
    Ok(c)
}

/// A reference solution with value and gradient on each side of the
/// interface.
pub trait ExactField {
    fn eval(&self, p: Point, side: Subdomain) -> Result<(f64, Point)>;

    /// Point where the gradient blows up, if any.
    fn singular_point(&self) -> Option<Point> {
        None
    }
}

/// Affine function `c + g . x`, identical on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub gradient: Point,
}

impl ExactField for Affine {
    fn eval(&self, p: Point, _side: Subdomain) -> Result<(f64, Point)> {
        Ok((self.constant + self.gradient[0] * p[0] + self.gradient[1] * p[1], self.gradient))
    }
}

impl ExactField for ExactSolution {
    fn eval(&self, p: Point, side: Subdomain) -> Result<(f64, Point)> {
        ExactSolution::eval(self, p, side)
    }

    fn singular_point(&self) -> Option<Point> {
        ExactSolution::singular_point(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution {
    /// u = mu x (x^2-1)(y^2-1) on x > 0 and x (x^2-1)(y^2-1) on x < 0.
    Polynomial { mu: f64 },
    /// r^lambda (c1 sin(lambda t) + c2 sin(lambda (pi/2 - t))) for 0 < t < pi/2,
    /// r^lambda (d1 sin(lambda (t - pi/2)) + d2 sin(lambda (2 pi - t))) otherwise.
    Singular { mu: f64, lambda: f64, constants: [f64; 4] },
}

impl ExactSolution {
    pub fn polynomial(mu: f64) -> ExactSolution {
        ExactSolution::Polynomial { mu }
    }

    pub fn singular(mu: f64) -> Result<ExactSolution> {
        let lambda = singular_exponent(mu)?;
        let constants = singular_constants(mu, lambda)?;
        Ok(ExactSolution::Singular { mu, lambda, constants })
    }

    /// Point where the gradient blows up, if any.
    pub fn singular_point(&self) -> Option<Point> {
        match self {
            ExactSolution::Polynomial { .. } => None,
            ExactSolution::Singular { .. } => Some([0.0, 0.0]),
        }
    }

    /// Value and gradient. `side` selects the branch on the interface, where
    /// the gradient is discontinuous.
    pub fn eval(&self, p: Point, side: Subdomain) -> Result<(f64, Point)> {
        match *self {
            ExactSolution::Polynomial { mu } => {
                let (x, y) = (p[0], p[1]);
                let scale = match side {
                    Subdomain::Plus => mu,
                    Subdomain::Minus => 1.0,
                };
                let value = x * (x * x - 1.0) * (y * y - 1.0);
                let dx = (3.0 * x * x - 1.0) * (y * y - 1.0);
                let dy = 2.0 * x * (x * x - 1.0) * y;
                Ok((scale * value, [scale * dx, scale * dy]))
            }
            ExactSolution::Singular { lambda, constants, .. } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if r == 0.0 {
                    return Err(Error::SingularPoint);
                }
                let theta = polar_angle(p, side);
                let (phi, dphi) = angular(lambda, constants, theta, side);
                let value = r.powf(lambda) * phi;
                let dr = lambda * r.powf(lambda - 1.0) * phi;
                let dt = r.powf(lambda - 1.0) * dphi;
                let (s, c) = theta.sin_cos();
                Ok((value, [dr * c - dt * s, dr * s + dt * c]))
            }
        }
    }

    pub fn value(&self, p: Point, side: Subdomain) -> f64 {
        match *self {
            ExactSolution::Singular { lambda, constants, .. } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if r == 0.0 {
                    return 0.0;
                }
                r.powf(lambda) * angular(lambda, constants, polar_angle(p, side), side).0
            }
            ExactSolution::Polynomial { .. } => self.eval(p, side).map(|v| v.0).unwrap_or(0.0),
        }
    }

    /// -div(a grad u) for the matching coefficient, evaluated inside `side`.
    pub fn source(&self, p: Point, _side: Subdomain) -> f64 {
        match *self {
            ExactSolution::Polynomial { mu } => {
                let (x, y) = (p[0], p[1]);
                -mu * (6.0 * x * (y * y - 1.0) + 2.0 * x * (x * x - 1.0))
            }
            ExactSolution::Singular { .. } => 0.0,
        }
    }
}

/// Angle in [0, 2 pi), pushed to the side requested for points on the two
/// interface rays.
fn polar_angle(p: Point, side: Subdomain) -> f64 {
    let mut t = p[1].atan2(p[0]);
    if t < 0.0 {
        t += 2.0 * PI;
    }
    // positive x axis: theta = 0 on the plus side, 2 pi on the minus side
    if side == Subdomain::Minus && t == 0.0 {
        t = 2.0 * PI;
    }
    t
}

fn angular(lambda: f64, c: [f64; 4], theta: f64, side: Subdomain) -> (f64, f64) {
    let l = lambda;
    match side {
        Subdomain::Plus => (
            c[0] * (l * theta).sin() + c[1] * (l * (PI / 2.0 - theta)).sin(),
            l * (c[0] * (l * theta).cos() - c[1] * (l * (PI / 2.0 - theta)).cos()),
        ),
        Subdomain::Minus => (
            c[2] * (l * (theta - PI / 2.0)).sin() + c[3] * (l * (2.0 * PI - theta)).sin(),
            l * (c[2] * (l * (theta - PI / 2.0)).cos() - c[3] * (l * (2.0 * PI - theta)).cos()),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Polynomial,
    Singular,
}

impl ProblemKind {
    pub fn geometry(self) -> Geometry {
        match self {
            ProblemKind::Polynomial => Geometry::SymmetricSquare,
            ProblemKind::Singular => Geometry::LShapedInterface,
        }
    }
}

/// Geometry, coefficient and exact solution of one benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    pub geometry: Geometry,
    pub coefficient: Coefficient,
    pub exact: ExactSolution,
}

impl Problem {
    pub fn polynomial(mu: f64) -> Result<Problem> {
        Ok(Problem {
            geometry: Geometry::SymmetricSquare,
            coefficient: Coefficient::contrast(mu)?,
            exact: ExactSolution::polynomial(mu),
        })
    }

    pub fn singular(mu: f64) -> Result<Problem> {
        Ok(Problem {
            geometry: Geometry::LShapedInterface,
            coefficient: Coefficient::contrast(mu)?,
            exact: ExactSolution::singular(mu)?,
        })
    }

    pub fn new(kind: ProblemKind, mu: f64) -> Result<Problem> {
        match kind {
            ProblemKind::Polynomial => Problem::polynomial(mu),
            ProblemKind::Singular => Problem::singular(mu),
        }
    }

    pub fn source(&self, p: Point, side: Subdomain) -> f64 {
        self.exact.source(p, side)
    }

    /// Dirichlet data on the outer boundary.
    pub fn dirichlet(&self, p: Point) -> f64 {
        self.exact.value(p, self.geometry.subdomain_of(p))
    }

    /// One line describing the exact solution, for run logs.
    pub fn describe(&self) -> String {
        match self.exact {
            ExactSolution::Polynomial { mu } => format!("polynomial solution, mu = {mu}"),
            ExactSolution::Singular { mu, lambda, constants: c } => format!(
                "singular solution, mu = {mu}, lambda = {lambda:.10}, c1 = {:.12}, c2 = {:.12}, d1 = {:.12}, d2 = {:.12}",
                c[0], c[1], c[2], c[3]
            ),
        }
    }
}
