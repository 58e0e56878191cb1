//! Fundamental solutions of `∇²u + h·∇u + λu = 0` and the modified Bessel
//! functions they are built from.
//!
//! The boundary integral equation uses the fundamental solution of the
//! adjoint operator, `∇²u* - h·∇u* + λu* = -δ`. Writing
//! `u* = exp(h·r/2) φ` reduces this to `∇²φ - μ²φ = -δ` with
//! `μ² = |h|²/4 - λ`, hence `u* = exp(h·r/2) K0(μ|r|) / 2π`.

use std::f64::consts::{FRAC_1_PI, PI};
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point2;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 1.0;
const BESSEL_EPS: f64 = 1e-17;
const BESSEL_MAX_ITER: usize = 10_000;

/// Residual bound the shipped kernels must satisfy.
pub const ADJOINT_RESIDUAL_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-4;
const FD_SAMPLES: usize = 50;

fn check_bessel_arg(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "x",
            value: x,
            expected: "x > 0",
        })
    }
}

/// Modified Bessel function of the second kind, order 0.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_bessel_arg(x)?;
    Ok(k0_k1(x).0)
}

/// Modified Bessel function of the second kind, order 1.
pub fn bessel_k1(x: f64) -> Result<f64> {
    check_bessel_arg(x)?;
    Ok(k0_k1(x).1)
}

/// `(K0(x), K1(x))` for `x > 0`.
pub(crate) fn k0_k1(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        k0_k1_series(x)
    } else {
        k0_k1_continued_fraction(x)
    }
}

/// Ascending series; all terms after the logarithm are positive.
fn k0_k1_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let log_term = (0.5 * x).ln();
    // K0 = -(ln(x/2) + γ) I0 + Σ y^k/(k!)² H_k
    // K1 = 1/x + (x/2) Σ y^k/(k!(k+1)!) [ln(x/2) - (H_k + H_{k+1})/2 + γ]
    let mut term0 = 1.0; // y^k / (k!)^2
    let mut term1 = 1.0; // y^k / (k!(k+1)!)
    let mut harmonic = 0.0; // H_k
    let mut i0 = 0.0;
    let mut sum0 = 0.0;
    let mut sum1 = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        if k > 0 {
            term0 *= y / (kf * kf);
            term1 *= y / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        let next_harmonic = harmonic + 1.0 / (kf + 1.0);
        i0 += term0;
        sum0 += term0 * harmonic;
        let d1 = term1 * (log_term + EULER_GAMMA - 0.5 * (harmonic + next_harmonic));
        sum1 += d1;
        if term0 < BESSEL_EPS * i0 && d1.abs() <= BESSEL_EPS * sum1.abs() {
            break;
        }
    }
    let k0 = -(log_term + EULER_GAMMA) * i0 + sum0;
    let k1 = 1.0 / x + 0.5 * x * sum1;
    (k0, k1)
}

/// Steed's continued fraction with Temme's normalization, order 0.
fn k0_k1_continued_fraction(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..BESSEL_MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Coefficients of `∇²u + h·∇u + λu = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeCoefficients {
    h: Point2,
    lambda: f64,
}

impl PdeCoefficients {
    pub const LAPLACE: PdeCoefficients = PdeCoefficients {
        h: Point2::new(0.0, 0.0),
        lambda: 0.0,
    };

    /// Rejects the oscillatory regime `|h|²/4 - λ <= 0` (except Laplace).
    pub fn new(h: Point2, lambda: f64) -> Result<Self> {
        if !(h.is_finite() && lambda.is_finite()) {
            return Err(Error::OutOfRange {
                name: "pde coefficient",
                value: f64::NAN,
                expected: "finite values",
            });
        }
        let pde = Self { h, lambda };
        if !pde.is_laplace() {
            let discriminant = 0.25 * h.norm_squared() - lambda;
            if !(discriminant > 0.0) {
                return Err(Error::OscillatoryRegime { discriminant });
            }
        }
        Ok(pde)
    }

    pub fn h(&self) -> Point2 {
        self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_laplace(&self) -> bool {
        self.h == Point2::default() && self.lambda == 0.0
    }

    /// `sqrt(|h|²/4 - λ)`; zero for Laplace.
    pub fn mu(&self) -> f64 {
        if self.is_laplace() {
            0.0
        } else {
            (0.25 * self.h.norm_squared() - self.lambda).sqrt()
        }
    }

    /// Kernel for this PDE, checked against the adjoint residual.
    pub fn fundamental_solution(&self) -> Result<Arc<dyn FundamentalSolution>> {
        let kernel: Arc<dyn FundamentalSolution> = if self.is_laplace() {
            Arc::new(LaplaceKernel)
        } else {
            Arc::new(AdvectionDiffusionKernel::new(*self))
        };
        let residual = adjoint_residual(self, |r| kernel.u(r));
        if !(residual < ADJOINT_RESIDUAL_TOL) {
            return Err(Error::FundamentalCheckFailed { residual });
        }
        Ok(kernel)
    }
}

/// A fundamental solution `u*(r)` with `r = q - p`, and its gradient in `r`.
///
/// Implementations assume `r != 0`; callers screen for coincident points.
pub trait FundamentalSolution: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn pde(&self) -> PdeCoefficients;

    fn u(&self, r: Point2) -> f64;

    fn gradient(&self, r: Point2) -> Point2;

    /// `u*` and `∂u*/∂n` together.
    fn u_and_v(&self, r: Point2, normal: Point2) -> (f64, f64) {
        (self.u(r), self.gradient(r).dot(normal))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LaplaceKernel;

impl FundamentalSolution for LaplaceKernel {
    fn name(&self) -> &'static str {
        "laplace"
    }

    fn pde(&self) -> PdeCoefficients {
        PdeCoefficients::LAPLACE
    }

    fn u(&self, r: Point2) -> f64 {
        -0.25 * FRAC_1_PI * r.norm_squared().ln()
    }

    fn gradient(&self, r: Point2) -> Point2 {
        r * (-0.5 * FRAC_1_PI / r.norm_squared())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdvectionDiffusionKernel {
    pde: PdeCoefficients,
    mu: f64,
}

impl AdvectionDiffusionKernel {
    fn new(pde: PdeCoefficients) -> Self {
        Self { pde, mu: pde.mu() }
    }
}

impl FundamentalSolution for AdvectionDiffusionKernel {
    fn name(&self) -> &'static str {
        "advection-diffusion"
    }

    fn pde(&self) -> PdeCoefficients {
        self.pde
    }

    fn u(&self, r: Point2) -> f64 {
        let rho = r.norm();
        let (k0, _) = k0_k1(self.mu * rho);
        0.5 * FRAC_1_PI * (0.5 * self.pde.h.dot(r)).exp() * k0
    }

    fn gradient(&self, r: Point2) -> Point2 {
        let rho = r.norm();
        let (k0, k1) = k0_k1(self.mu * rho);
        let scale = 0.5 * FRAC_1_PI * (0.5 * self.pde.h.dot(r)).exp();
        (self.pde.h * (0.5 * k0) - r * (self.mu * k1 / rho)) * scale
    }

    fn u_and_v(&self, r: Point2, normal: Point2) -> (f64, f64) {
        let rho = r.norm();
        let (k0, k1) = k0_k1(self.mu * rho);
        let scale = 0.5 * FRAC_1_PI * (0.5 * self.pde.h.dot(r)).exp();
        let grad = self.pde.h * (0.5 * k0) - r * (self.mu * k1 / rho);
        (scale * k0, scale * grad.dot(normal))
    }
}

fn check_r(r: Point2) -> Result<()> {
    if r.norm_squared() > 0.0 {
        Ok(())
    } else {
        Err(Error::ZeroDistance)
    }
}

/// `u*(r)` for `pde`.
pub fn fundamental_u(pde: &PdeCoefficients, r: Point2) -> Result<f64> {
    check_r(r)?;
    Ok(pde.fundamental_solution()?.u(r))
}

/// `v* = ∂u*/∂n` for `pde`, `normal` a unit vector.
pub fn fundamental_v(pde: &PdeCoefficients, r: Point2, normal: Point2) -> Result<f64> {
    check_r(r)?;
    Ok(pde.fundamental_solution()?.gradient(r).dot(normal))
}

/// Maximum of `|∇²w - h·∇w + λw|` over 50 points with `0.3 < |r| < 1.5`,
/// by 5-point finite differences.
pub fn adjoint_residual<F: Fn(Point2) -> f64>(pde: &PdeCoefficients, w: F) -> f64 {
    let golden = PI * (3.0 - 5f64.sqrt());
    let step = FD_STEP;
    let dx = Point2::new(step, 0.0);
    let dy = Point2::new(0.0, step);
    (0..FD_SAMPLES)
        .map(|k| {
            let rho = 0.3 + 1.2 * (k as f64 + 0.5) / FD_SAMPLES as f64;
            let theta = golden * k as f64;
            let r = Point2::new(rho * theta.cos(), rho * theta.sin());
            let c = w(r);
            let (xp, xm, yp, ym) = (w(r + dx), w(r - dx), w(r + dy), w(r - dy));
            let laplacian = (xp + xm + yp + ym - 4.0 * c) / (step * step);
            let grad = Point2::new((xp - xm) / (2.0 * step), (yp - ym) / (2.0 * step));
            (laplacian - pde.h.dot(grad) + pde.lambda * c).abs()
        })
        .fold(0.0, f64::max)
}

/// Adjoint residual of the shipped fundamental solution for `pde`.
pub fn verify_fundamental(pde: &PdeCoefficients) -> f64 {
    let kernel: Box<dyn FundamentalSolution> = if pde.is_laplace() {
        Box::new(LaplaceKernel)
    } else {
        Box::new(AdvectionDiffusionKernel::new(*pde))
    };
    adjoint_residual(pde, |r| kernel.u(r))
}
