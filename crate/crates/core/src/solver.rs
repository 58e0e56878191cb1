//! Influence matrices, the 4K x 4K block system and interior evaluation.
//!
//! Unknowns are ordered `[α, β, u, v]`. Block rows are the boundary
//! integral equation at the sources (`Aα - Bβ = 0`), the two collocation
//! identities `Ψα = u`, `Ψβ = v`, and the boundary conditions.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{BasisMatrices, BoundaryBasis, BoundaryLocation, SourceSet};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point2, PointLocation};
use crate::kernels::{FundamentalSolution, PdeCoefficients};
use crate::linalg::{DenseSolution, LinearSolver, LuSolver};
use crate::quadrature::{global_quadrature, GlobalQuadrature, QuadratureRule};
use crate::registry::Registry;
use crate::singular_opt::GradedIntegrator;

/// Free-term coefficient at a source on a smooth part of the boundary.
pub const BOUNDARY_FREE_TERM: f64 = 0.5;
/// Distance below which a point counts as lying on the boundary.
pub const INTERIOR_TOLERANCE: f64 = 1e-9;
/// Relative tolerance on `Ψα = u`, `Ψβ = v` after a solve.
pub const COLLOCATION_TOLERANCE: f64 = 1e-8;
/// Local coordinates of near-singular points on foreign elements are kept
/// this far from the element ends.
const FOREIGN_CLAMP: f64 = 1.0 - 1e-3;
const FOREIGN_SAMPLES: usize = 64;

/// Kernel-times-weight matrices, one row per source (or interior) point.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrices {
    pub h: DMatrix<f64>,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
}

/// Builds `H`, `G¹`, `G²` for arbitrary points against the quadrature.
pub fn influence_at(
    points: &[Point2],
    gq: &GlobalQuadrature,
    kernel: &dyn FundamentalSolution,
) -> Result<InfluenceMatrices> {
    let h_vec = kernel.pde().h();
    let cols = gq.len();
    let rows: Vec<Result<[Vec<f64>; 3]>> = points
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut h = vec![0.0; cols];
            let mut g1 = vec![0.0; cols];
            let mut g2 = vec![0.0; cols];
            for g in 0..cols {
                let r = gq.points[g] - p;
                let n = gq.normals[g];
                let w = gq.weights[g];
                let (u, v) = kernel.u_and_v(r, n);
                h[g] = v * w;
                g1[g] = u * h_vec.dot(n) * w;
                g2[g] = u * w;
                for (name, x) in [("H", h[g]), ("G1", g1[g]), ("G2", g2[g])] {
                    if !x.is_finite() {
                        return Err(Error::NonFiniteEntry {
                            matrix: name,
                            row: k,
                            col: g,
                        });
                    }
                }
            }
            Ok([h, g1, g2])
        })
        .collect();
    let mut out = InfluenceMatrices {
        h: DMatrix::zeros(points.len(), cols),
        g1: DMatrix::zeros(points.len(), cols),
        g2: DMatrix::zeros(points.len(), cols),
    };
    for (k, row) in rows.into_iter().enumerate() {
        let [h, g1, g2] = row?;
        for g in 0..cols {
            out.h[(k, g)] = h[g];
            out.g1[(k, g)] = g1[g];
            out.g2[(k, g)] = g2[g];
        }
    }
    Ok(out)
}

/// Influence matrices at the source points.
pub fn assemble_influence(
    sources: &SourceSet,
    gq: &GlobalQuadrature,
    pde: &PdeCoefficients,
) -> Result<InfluenceMatrices> {
    let kernel = pde.fundamental_solution()?;
    influence_at(&sources.points, gq, kernel.as_ref())
}

/// `HΦ`, `G¹Φ`, `G²Φ`: the influence of each basis function on each point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedOperators {
    pub h_phi: DMatrix<f64>,
    pub g1_phi: DMatrix<f64>,
    pub g2_phi: DMatrix<f64>,
}

impl ProjectedOperators {
    pub fn from_influence(inf: &InfluenceMatrices, bm: &BasisMatrices) -> Result<Self> {
        let (k, cols) = inf.h.shape();
        if inf.g1.shape() != (k, cols) || inf.g2.shape() != (k, cols) {
            return Err(Error::DimensionMismatch(
                "H, G1 and G2 must share one shape".into(),
            ));
        }
        if bm.phi.nrows() != cols {
            return Err(Error::DimensionMismatch(format!(
                "influence has {} quadrature columns, Phi has {} rows",
                cols,
                bm.phi.nrows()
            )));
        }
        Ok(Self {
            h_phi: &inf.h * &bm.phi,
            g1_phi: &inf.g1 * &bm.phi,
            g2_phi: &inf.g2 * &bm.phi,
        })
    }
}

/// Everything fixed by mesh, quadrature, sources, basis and PDE.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: BoundaryMesh,
    pub gq: GlobalQuadrature,
    pub sources: SourceSet,
    pub basis: Arc<dyn BoundaryBasis>,
    pub matrices: BasisMatrices,
    pub kernel: Arc<dyn FundamentalSolution>,
}

impl Discretization {
    pub fn new(
        mesh: BoundaryMesh,
        rule: &QuadratureRule,
        sources: SourceSet,
        basis: Arc<dyn BoundaryBasis>,
        pde: &PdeCoefficients,
    ) -> Result<Self> {
        let gq = global_quadrature(&mesh, rule);
        let matrices = basis.build_matrices(&sources, &gq)?;
        let kernel = pde.fundamental_solution()?;
        Ok(Self {
            mesh,
            gq,
            sources,
            basis,
            matrices,
            kernel,
        })
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }
}

/// Where a collocation point sits relative to the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Collocation {
    /// On `element` at local coordinate `t`.
    Boundary { element: usize, t: f64 },
    Interior,
}

/// Strategy computing the projected operators for a set of points.
pub trait BoundaryIntegrator: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn project(
        &self,
        disc: &Discretization,
        points: &[Point2],
        placement: &[Collocation],
    ) -> Result<ProjectedOperators>;
}

/// The global Gauss–Legendre rule on every element, singular or not.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussIntegrator;

impl BoundaryIntegrator for GaussIntegrator {
    fn name(&self) -> &'static str {
        "gauss"
    }

    fn project(
        &self,
        disc: &Discretization,
        points: &[Point2],
        _placement: &[Collocation],
    ) -> Result<ProjectedOperators> {
        let inf = influence_at(points, &disc.gq, disc.kernel.as_ref())?;
        ProjectedOperators::from_influence(&inf, &disc.matrices)
    }
}

/// Element integrals on panels graded toward the singular (or nearest)
/// point. Slow; serves as a reference for the plain rule.
#[derive(Debug, Clone, Default)]
pub struct ReferenceIntegrator {
    graded: GradedIntegrator,
}

impl ReferenceIntegrator {
    fn nearest_t(e: &crate::geometry::Element, p: Point2) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=FOREIGN_SAMPLES {
            let t = -1.0 + 2.0 * i as f64 / FOREIGN_SAMPLES as f64;
            let d = e.point_at(t).distance(p);
            if d < best.0 {
                best = (d, t);
            }
        }
        best.1.clamp(-FOREIGN_CLAMP, FOREIGN_CLAMP)
    }

    /// Adds this element's contribution for point `p` to three rows.
    #[allow(clippy::too_many_arguments)]
    fn element_row(
        &self,
        disc: &Discretization,
        element: usize,
        p: Point2,
        singular_t: f64,
        levels: usize,
        support: &[usize],
        rows: &mut [Vec<f64>; 3],
    ) -> Result<()> {
        let e = &disc.mesh.elements()[element];
        let h_vec = disc.kernel.pde().h();
        let (ts, ws) = self.graded.graded_rule(singular_t, levels);
        for (&t, &w) in ts.iter().zip(&ws) {
            let q = e.point_at(t);
            if q == p {
                // below the resolution of the mapped coordinate
                continue;
            }
            let n = e.normal_at(t);
            let jw = e.jacobian_at(t) * w;
            let (u, v) = disc.kernel.u_and_v(q - p, n);
            let hn = h_vec.dot(n);
            let at = BoundaryLocation {
                element,
                t,
                point: q,
            };
            for &k in support {
                let phi = disc.basis.value(&disc.sources, k, &at) * jw;
                rows[0][k] += v * phi;
                rows[1][k] += u * hn * phi;
                rows[2][k] += u * phi;
            }
        }
        Ok(())
    }

    fn point_rows(&self, disc: &Discretization, p: Point2, place: Collocation, levels: &dyn Fn(f64) -> usize) -> Result<[Vec<f64>; 3]> {
        let k = disc.source_count();
        let mut rows = [vec![0.0; k], vec![0.0; k], vec![0.0; k]];
        for (j, e) in disc.mesh.elements().iter().enumerate() {
            let t = match place {
                Collocation::Boundary { element, t } if element == j => t,
                _ => Self::nearest_t(e, p),
            };
            let support = disc.basis.support_on(&disc.sources, j);
            self.element_row(disc, j, p, t, levels(t), &support, &mut rows)?;
        }
        Ok(rows)
    }
}

impl BoundaryIntegrator for ReferenceIntegrator {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn project(
        &self,
        disc: &Discretization,
        points: &[Point2],
        placement: &[Collocation],
    ) -> Result<ProjectedOperators> {
        if placement.len() != points.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                found: placement.len(),
            });
        }
        let full = self.graded.levels;
        let rows: Vec<Result<[Vec<f64>; 3]>> = points
            .par_iter()
            .zip(placement)
            .enumerate()
            .map(|(i, (&p, &place))| {
                let value = self.point_rows(disc, p, place, &|_| full)?;
                let coarse = self.point_rows(disc, p, place, &|t| self.graded.check_depth(t) - 1)?;
                let mut change: f64 = 0.0;
                let mut scale: f64 = 1.0;
                for (a, b) in value.iter().zip(&coarse) {
                    for (x, y) in a.iter().zip(b) {
                        change = change.max((x - y).abs());
                        scale = scale.max(x.abs());
                    }
                }
                for (m, row) in ["H", "G1", "G2"].into_iter().zip(&value) {
                    if let Some(col) = row.iter().position(|x| !x.is_finite()) {
                        return Err(Error::NonFiniteEntry { matrix: m, row: i, col });
                    }
                }
                if !(change <= 1e-9 * scale) {
                    return Err(Error::ReferenceNotConverged { change });
                }
                Ok(value)
            })
            .collect();
        let k = disc.source_count();
        let mut ops = ProjectedOperators {
            h_phi: DMatrix::zeros(points.len(), k),
            g1_phi: DMatrix::zeros(points.len(), k),
            g2_phi: DMatrix::zeros(points.len(), k),
        };
        for (i, r) in rows.into_iter().enumerate() {
            let [h, g1, g2] = r?;
            for c in 0..k {
                ops.h_phi[(i, c)] = h[c];
                ops.g1_phi[(i, c)] = g1[c];
                ops.g2_phi[(i, c)] = g2[c];
            }
        }
        Ok(ops)
    }
}

pub type IntegratorCtor = fn() -> Arc<dyn BoundaryIntegrator>;

pub fn integrator_registry() -> Registry<IntegratorCtor> {
    let mut r: Registry<IntegratorCtor> = Registry::new("integrator");
    r.register_with_aliases(
        "gauss",
        &["gqr"],
        "plain Gauss-Legendre rule on every element",
        || Arc::new(GaussIntegrator),
    )
    .register(
        "reference",
        "panels graded toward the singular point on each element",
        || Arc::new(ReferenceIntegrator::default()),
    );
    r
}

/// Which sources carry a prescribed potential and which a prescribed flux.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditionSpec {
    dirichlet: Vec<usize>,
    neumann: Vec<usize>,
    /// Indexed by source: `ū` at Dirichlet sources, `v̄` at Neumann sources.
    values: Vec<f64>,
}

impl BoundaryConditionSpec {
    pub fn new(dirichlet: Vec<usize>, neumann: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let k = values.len();
        let mut seen = vec![false; k];
        for &i in dirichlet.iter().chain(&neumann) {
            if i >= k || seen[i] {
                return Err(Error::Config(format!(
                    "boundary condition indices must partition 0..{k} (bad index {i})"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Config(format!(
                "boundary condition indices must partition 0..{k} (some sources unconstrained)"
            )));
        }
        Ok(Self {
            dirichlet,
            neumann,
            values,
        })
    }

    /// `dirichlet[k]` selects `u_value[k]`, otherwise `v_value[k]`.
    pub fn from_mask(dirichlet: &[bool], u_value: &[f64], v_value: &[f64]) -> Result<Self> {
        let k = dirichlet.len();
        if u_value.len() != k || v_value.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                found: u_value.len().min(v_value.len()),
            });
        }
        let (d, n): (Vec<usize>, Vec<usize>) = (0..k).partition(|&i| dirichlet[i]);
        let values = (0..k)
            .map(|i| if dirichlet[i] { u_value[i] } else { v_value[i] })
            .collect();
        Self::new(d, n, values)
    }

    pub fn dirichlet_all(u_value: &[f64]) -> Self {
        Self {
            dirichlet: (0..u_value.len()).collect(),
            neumann: Vec::new(),
            values: u_value.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dirichlet_indices(&self) -> &[usize] {
        &self.dirichlet
    }

    pub fn neumann_indices(&self) -> &[usize] {
        &self.neumann
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Block system from projected operators and `Ψ`.
pub fn assemble_projected(
    ops: &ProjectedOperators,
    psi: &DMatrix<f64>,
    bc: &BoundaryConditionSpec,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let k = psi.nrows();
    for (name, m) in [
        ("Psi", psi),
        ("H Phi", &ops.h_phi),
        ("G1 Phi", &ops.g1_phi),
        ("G2 Phi", &ops.g2_phi),
    ] {
        if m.shape() != (k, k) {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, expected {k}x{k}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    if bc.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "boundary conditions for {} sources, system has {k}",
            bc.len()
        )));
    }
    let a = psi * BOUNDARY_FREE_TERM + &ops.h_phi - &ops.g1_phi;
    let mut m = DMatrix::zeros(4 * k, 4 * k);
    m.view_mut((0, 0), (k, k)).copy_from(&a);
    m.view_mut((0, k), (k, k)).copy_from(&(-&ops.g2_phi));
    m.view_mut((k, 0), (k, k)).copy_from(psi);
    m.view_mut((2 * k, k), (k, k)).copy_from(psi);
    for i in 0..k {
        m[(k + i, 2 * k + i)] = -1.0;
        m[(2 * k + i, 3 * k + i)] = -1.0;
    }
    for &i in bc.dirichlet_indices() {
        m[(3 * k + i, 2 * k + i)] = 1.0;
    }
    for &i in bc.neumann_indices() {
        m[(3 * k + i, 3 * k + i)] = 1.0;
    }
    let mut rhs = DVector::zeros(4 * k);
    rhs.rows_mut(3 * k, k).copy_from_slice(bc.values());
    Ok((m, rhs))
}

/// Block system from the raw influence matrices.
pub fn assemble_system(
    inf: &InfluenceMatrices,
    bm: &BasisMatrices,
    bc: &BoundaryConditionSpec,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let ops = ProjectedOperators::from_influence(inf, bm)?;
    assemble_projected(&ops, &bm.psi, bc)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveWarning {
    RefinementDiverged,
    /// The solver dropped directions below its rank tolerance.
    RankDeficient { rank: usize, dim: usize },
    /// `Ψα = u` or `Ψβ = v` violated by more than the tolerance.
    CollocationResidual { relative: f64 },
}

#[derive(Debug, Clone)]
pub struct BemSolution {
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub condition_estimate: f64,
    pub method: &'static str,
    pub warnings: Vec<SolveWarning>,
}

/// Solves with LU, partial pivoting and one refinement step.
pub fn solve_dense(system: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<BemSolution> {
    solve_with(system, rhs, &LuSolver)
}

pub fn solve_with(
    system: &DMatrix<f64>,
    rhs: &DVector<f64>,
    solver: &dyn LinearSolver,
) -> Result<BemSolution> {
    let n = system.nrows();
    if n % 4 != 0 || system.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "block system must be 4K x 4K, got {}x{}",
            n,
            system.ncols()
        )));
    }
    let DenseSolution {
        x,
        condition_estimate,
        rank,
        refinement_diverged,
        method,
    } = solver.solve(system, rhs)?;
    let k = n / 4;
    let mut warnings = Vec::new();
    if refinement_diverged {
        warnings.push(SolveWarning::RefinementDiverged);
    }
    if rank < n {
        warnings.push(SolveWarning::RankDeficient { rank, dim: n });
    }
    let sol = BemSolution {
        alpha: x.rows(0, k).into_owned(),
        beta: x.rows(k, k).into_owned(),
        u: x.rows(2 * k, k).into_owned(),
        v: x.rows(3 * k, k).into_owned(),
        condition_estimate,
        method,
        warnings,
    };
    let psi = system.view((k, 0), (k, k));
    let relative = |c: &DVector<f64>, target: &DVector<f64>| {
        (psi * c - target).amax() / target.amax().max(1.0)
    };
    let worst = relative(&sol.alpha, &sol.u).max(relative(&sol.beta, &sol.v));
    let mut sol = sol;
    if !(worst <= COLLOCATION_TOLERANCE) {
        sol.warnings.push(SolveWarning::CollocationResidual { relative: worst });
    }
    Ok(sol)
}

/// Projected operators at interior points, after checking each is inside.
pub fn interior_operators(
    disc: &Discretization,
    integrator: &dyn BoundaryIntegrator,
    points: &[Point2],
) -> Result<ProjectedOperators> {
    for p in points {
        if disc.mesh.locate(*p, INTERIOR_TOLERANCE) != PointLocation::Inside {
            return Err(Error::NotInterior { x: p.x, y: p.y });
        }
    }
    integrator.project(disc, points, &vec![Collocation::Interior; points.len()])
}

/// `u(p) = -H_p Φ α + G¹_p Φ α + G²_p Φ β` for each row of `ops`.
pub fn interior_potential(sol: &BemSolution, ops: &ProjectedOperators) -> Result<DVector<f64>> {
    let k = sol.alpha.len();
    if ops.h_phi.ncols() != k || ops.g1_phi.ncols() != k || ops.g2_phi.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "operators have {} columns, solution has {k} coefficients",
            ops.h_phi.ncols()
        )));
    }
    Ok(-(&ops.h_phi * &sol.alpha) + &ops.g1_phi * &sol.alpha + &ops.g2_phi * &sol.beta)
}

/// Mean absolute difference between computed and exact values.
pub fn mean_abs_error(computed: &[f64], exact: &[f64]) -> Result<f64> {
    if computed.len() != exact.len() {
        return Err(Error::LengthMismatch {
            expected: exact.len(),
            found: computed.len(),
        });
    }
    if computed.is_empty() {
        return Ok(0.0);
    }
    Ok(computed
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / computed.len() as f64)
}

/// Mean `|v_k - v(p_k)|` over the sources; `exact_v(p, n)` is the exact flux.
pub fn flux_error<F: Fn(Point2, Point2) -> f64>(
    sol: &BemSolution,
    sources: &SourceSet,
    exact_v: F,
) -> Result<f64> {
    let exact: Vec<f64> = sources
        .points
        .iter()
        .zip(&sources.normals)
        .map(|(&p, &n)| exact_v(p, n))
        .collect();
    mean_abs_error(sol.v.as_slice(), &exact)
}

/// Mean `|û_k - u(p̂_k)|` over interior points.
pub fn interior_error<F: Fn(Point2) -> f64>(
    values: &DVector<f64>,
    points: &[Point2],
    exact_u: F,
) -> Result<f64> {
    let exact: Vec<f64> = points.iter().map(|&p| exact_u(p)).collect();
    mean_abs_error(values.as_slice(), &exact)
}

/// Assembles the block system at the sources with `integrator`.
pub fn boundary_system(
    disc: &Discretization,
    integrator: &dyn BoundaryIntegrator,
    bc: &BoundaryConditionSpec,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let placement: Vec<Collocation> = disc
        .sources
        .elements
        .iter()
        .zip(&disc.sources.local_t)
        .map(|(&element, &t)| Collocation::Boundary { element, t })
        .collect();
    let ops = integrator.project(disc, &disc.sources.points, &placement)?;
    assemble_projected(&ops, &disc.matrices.psi, bc)
}
