//! Gauss–Legendre rules and the concatenated boundary quadrature.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point2};

pub const MAX_NODES: usize = 64;
const NEWTON_MAX_ITER: usize = 100;

/// An `n`-point rule on `[-1, 1]`. Nodes are increasing and symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f` on `[-1, 1]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// Applies the rule to `f` on `[a, b]`.
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self.integrate(|t| f(mid + half * t))
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule with `n` nodes, `1 <= n <= 64`.
///
/// Roots of `P_n` are found by Newton iteration from Chebyshev-like guesses,
/// one per symmetric pair, and mirrored so the rule is exactly symmetric.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_NODES).contains(&n) {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            expected: "1 <= n <= 64",
        });
    }
    if n == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                what: "Legendre root Newton iteration",
                iterations: NEWTON_MAX_ITER,
            });
        }
        if 2 * i + 1 == n {
            x = 0.0;
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// All quadrature points of a mesh, element by element.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalQuadrature {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    pub normals: Vec<Point2>,
    pub element_of: Vec<usize>,
    /// Local coordinate of each point on its element.
    pub local_t: Vec<f64>,
    pub nodes_per_element: usize,
}

impl GlobalQuadrature {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dot product of `values` (one per quadrature point) with the weights.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        integrate_boundary(values, self)
    }
}

/// Maps `rule` onto every element of `mesh`; weights carry the Jacobian.
pub fn global_quadrature(mesh: &BoundaryMesh, rule: &QuadratureRule) -> GlobalQuadrature {
    let total = mesh.len() * rule.len();
    let mut gq = GlobalQuadrature {
        points: Vec::with_capacity(total),
        weights: Vec::with_capacity(total),
        normals: Vec::with_capacity(total),
        element_of: Vec::with_capacity(total),
        local_t: Vec::with_capacity(total),
        nodes_per_element: rule.len(),
    };
    for (j, e) in mesh.elements().iter().enumerate() {
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            gq.points.push(e.point_at(t));
            gq.weights.push(e.jacobian_at(t) * w);
            gq.normals.push(e.normal_at(t));
            gq.element_of.push(j);
            gq.local_t.push(t);
        }
    }
    gq
}

pub fn integrate_boundary(values: &[f64], gq: &GlobalQuadrature) -> Result<f64> {
    if gq.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            found: 0,
        });
    }
    if values.len() != gq.len() {
        return Err(Error::LengthMismatch {
            expected: gq.len(),
            found: values.len(),
        });
    }
    Ok(values.iter().zip(&gq.weights).map(|(v, w)| v * w).sum())
}
