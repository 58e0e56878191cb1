//! Dense factorizations and the solver strategies built on them.
//!
//! Matrices are column-major [`DMatrix`]. The LU factorization exposes
//! transpose solves so the 1-norm condition number can be estimated without
//! forming the inverse.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::registry::Registry;

const PARALLEL_MIN_COLUMNS: usize = 64;

/// `PA = LU` with partial (row) pivoting.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    n: usize,
    // column-major, unit-lower L below the diagonal and U on and above it
    lu: Vec<f64>,
    perm: Vec<usize>,
    norm1: f64,
}

impl LuFactorization {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let norm1 = one_norm(a);
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let col = &lu[k * n..(k + 1) * n];
            let (p, pivot) = (k..n)
                .map(|i| (i, col[i].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(pivot > 1e-300) {
                return Err(Error::SingularMatrix {
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.swap(j * n + p, j * n + k);
                }
            }
            let inv = 1.0 / lu[k * n + k];
            for v in &mut lu[k * n + k + 1..(k + 1) * n] {
                *v *= inv;
            }
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let lcol = &head[k * n + k + 1..(k + 1) * n];
            let update = |col: &mut [f64]| {
                let ukj = col[k];
                if ukj != 0.0 {
                    for (x, l) in col[k + 1..].iter_mut().zip(lcol) {
                        *x -= l * ukj;
                    }
                }
            };
            if n - k > PARALLEL_MIN_COLUMNS {
                tail.par_chunks_mut(n).for_each(update);
            } else {
                tail.chunks_mut(n).for_each(update);
            }
        }
        Ok(Self { n, lu, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.lu[j * self.n + i]
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward, unit lower, column oriented
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..n {
                    x[i] -= self.at(i, j) * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.at(j, j);
            let xj = x[j];
            for i in 0..j {
                x[i] -= self.at(i, j) * xj;
            }
        }
        DVector::from_vec(x)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut y = b.as_slice().to_vec();
        // U^T y = b
        for j in 0..n {
            let mut s = y[j];
            for i in 0..j {
                s -= self.at(i, j) * y[i];
            }
            y[j] = s / self.at(j, j);
        }
        // L^T z = y
        for j in (0..n).rev() {
            let mut s = y[j];
            for i in j + 1..n {
                s -= self.at(i, j) * y[i];
            }
            y[j] = s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        DVector::from_vec(x)
    }

    /// Hager–Higham estimate of `||A||_1 ||A^-1||_1`.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut estimate = 0.0;
        for iter in 0..5 {
            let y = self.solve(&x);
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose(&xi);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best });
            if iter > 0 && zmax <= z.dot(&x) {
                break;
            }
            x = DVector::zeros(n);
            x[jmax] = 1.0;
        }
        let alt = if n > 1 {
            let b = DVector::from_fn(n, |i, _| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * (1.0 + i as f64 / (n - 1) as f64)
            });
            2.0 * self.solve(&b).iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64)
        } else {
            0.0
        };
        self.norm1 * estimate.max(alt)
    }
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Householder QR with column pivoting, `AP = QR`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    m: usize,
    n: usize,
    qr: Vec<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let mut qr = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let col_norm = |qr: &[f64], j: usize, from: usize| -> f64 {
            qr[j * m + from..(j + 1) * m]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        };
        let mut norms: Vec<f64> = (0..n).map(|j| col_norm(&qr, j, 0)).collect();
        let mut reference = norms.clone();

        for k in 0..steps {
            let p = (k..n)
                .max_by(|&a, &b| norms[a].total_cmp(&norms[b]))
                .unwrap_or(k);
            if p != k {
                let (lo, hi) = qr.split_at_mut(p * m);
                lo[k * m..(k + 1) * m].swap_with_slice(&mut hi[..m]);
                perm.swap(p, k);
                norms.swap(p, k);
                reference.swap(p, k);
            }
            // reflector for column k, rows k..m
            let alpha = {
                let x = &qr[k * m + k..(k + 1) * m];
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    tau[k] = 0.0;
                    continue;
                }
                if x[0] > 0.0 {
                    -norm
                } else {
                    norm
                }
            };
            let x0 = qr[k * m + k];
            let v0 = x0 - alpha;
            for v in &mut qr[k * m + k + 1..(k + 1) * m] {
                *v /= v0;
            }
            tau[k] = (alpha - x0) / alpha;
            qr[k * m + k] = alpha;

            let t = tau[k];
            let (head, tail) = qr.split_at_mut((k + 1) * m);
            let v = &head[k * m + k + 1..(k + 1) * m];
            let apply = |col: &mut [f64]| {
                let mut w = col[k];
                for (c, vi) in col[k + 1..].iter().zip(v) {
                    w += c * vi;
                }
                w *= t;
                col[k] -= w;
                for (c, vi) in col[k + 1..].iter_mut().zip(v) {
                    *c -= w * vi;
                }
            };
            if n - k > PARALLEL_MIN_COLUMNS {
                tail.par_chunks_mut(m).for_each(apply);
            } else {
                tail.chunks_mut(m).for_each(apply);
            }
            for j in k + 1..n {
                if norms[j] == 0.0 {
                    continue;
                }
                let r = qr[j * m + k] / norms[j];
                let f = (1.0 - r * r).max(0.0);
                if f * (norms[j] / reference[j]).powi(2) < 1e-12 {
                    norms[j] = col_norm(&qr, j, k + 1);
                    reference[j] = norms[j];
                } else {
                    norms[j] *= f.sqrt();
                }
            }
        }
        Self {
            m,
            n,
            qr,
            tau,
            perm,
        }
    }

    /// Diagonal of R, non-increasing in magnitude up to rounding.
    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.tau.len()).map(|k| self.qr[k * self.m + k]).collect()
    }

    /// Number of diagonal entries above `rel_tol * |R_00|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let d = self.r_diagonal();
        let Some(first) = d.first() else { return 0 };
        let tol = rel_tol * first.abs();
        d.iter().take_while(|v| v.abs() > tol).count()
    }

    /// Basic least-squares solution using the leading `rank` columns.
    pub fn solve_truncated(&self, b: &DVector<f64>, rank: usize) -> DVector<f64> {
        let m = self.m;
        let mut y = b.as_slice().to_vec();
        for (k, &t) in self.tau.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let v = &self.qr[k * m + k + 1..(k + 1) * m];
            let mut w = y[k];
            for (yi, vi) in y[k + 1..].iter().zip(v) {
                w += yi * vi;
            }
            w *= t;
            y[k] -= w;
            for (yi, vi) in y[k + 1..].iter_mut().zip(v) {
                *yi -= w * vi;
            }
        }
        let mut z = vec![0.0; rank];
        for k in (0..rank).rev() {
            let mut s = y[k];
            for j in k + 1..rank {
                s -= self.qr[j * m + k] * z[j];
            }
            z[k] = s / self.qr[k * m + k];
        }
        let mut x = DVector::zeros(self.n);
        for (k, zk) in z.into_iter().enumerate() {
            x[self.perm[k]] = zk;
        }
        x
    }
}

/// Solution of a dense square system plus diagnostics.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub x: DVector<f64>,
    pub condition_estimate: f64,
    /// Numerical rank used; equals the dimension for LU.
    pub rank: usize,
    pub refinement_diverged: bool,
    pub method: &'static str,
}

pub trait LinearSolver: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn solve(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DenseSolution>;
}

fn check_system(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "system {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    Ok(())
}

/// LU with partial pivoting and one step of iterative refinement.
#[derive(Debug, Clone, Copy, Default)]
pub struct LuSolver;

impl LuSolver {
    fn solve_factored(
        lu: &LuFactorization,
        a: &DMatrix<f64>,
        b: &DVector<f64>,
        condition_estimate: f64,
    ) -> DenseSolution {
        let x0 = lu.solve(b);
        let r0 = b - a * &x0;
        let x1 = &x0 + lu.solve(&r0);
        let r1 = b - a * &x1;
        let diverged = !(r1.amax() <= r0.amax());
        DenseSolution {
            x: if diverged { x0 } else { x1 },
            condition_estimate,
            rank: lu.dim(),
            refinement_diverged: diverged,
            method: "lu",
        }
    }
}

impl LinearSolver for LuSolver {
    fn name(&self) -> &'static str {
        "lu"
    }

    fn solve(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DenseSolution> {
        check_system(a, b)?;
        let lu = LuFactorization::new(a)?;
        let cond = lu.condition_estimate();
        if !cond.is_finite() {
            return Err(Error::SingularMatrix { condition: cond });
        }
        Ok(Self::solve_factored(&lu, a, b, cond))
    }
}

/// Rank-revealing QR; directions with `|R_kk| <= n eps |R_00|` are dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct RrqrSolver;

impl LinearSolver for RrqrSolver {
    fn name(&self) -> &'static str {
        "rrqr"
    }

    fn solve(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DenseSolution> {
        check_system(a, b)?;
        let n = a.nrows();
        let qr = PivotedQr::new(a);
        let rank = qr.rank(n as f64 * f64::EPSILON);
        if rank == 0 {
            return Err(Error::SingularMatrix {
                condition: f64::INFINITY,
            });
        }
        let d = qr.r_diagonal();
        let smallest = d.last().map(|v| v.abs()).unwrap_or(0.0);
        let condition_estimate = if smallest > 0.0 {
            d[0].abs() / smallest
        } else {
            f64::INFINITY
        };
        Ok(DenseSolution {
            x: qr.solve_truncated(b, rank),
            condition_estimate,
            rank,
            refinement_diverged: false,
            method: "rrqr",
        })
    }
}

/// LU when the condition estimate is below `threshold`, otherwise RRQR.
#[derive(Debug, Clone, Copy)]
pub struct AutoSolver {
    pub threshold: f64,
}

impl Default for AutoSolver {
    fn default() -> Self {
        Self { threshold: 1e12 }
    }
}

impl LinearSolver for AutoSolver {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DenseSolution> {
        check_system(a, b)?;
        if let Ok(lu) = LuFactorization::new(a) {
            let cond = lu.condition_estimate();
            if cond.is_finite() && cond < self.threshold {
                return Ok(LuSolver::solve_factored(&lu, a, b, cond));
            }
        }
        RrqrSolver.solve(a, b)
    }
}

pub type SolverCtor = fn() -> Arc<dyn LinearSolver>;

pub fn solver_registry() -> Registry<SolverCtor> {
    let mut r: Registry<SolverCtor> = Registry::new("solver");
    r.register("auto", "LU, switching to RRQR above condition 1e12", || {
        Arc::new(AutoSolver::default())
    })
    .register("lu", "LU with partial pivoting and one refinement step", || {
        Arc::new(LuSolver)
    })
    .register("rrqr", "truncated column-pivoted Householder QR", || {
        Arc::new(RrqrSolver)
    });
    r
}
