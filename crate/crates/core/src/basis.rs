//! Boundary basis functions and their evaluation matrices.
//!
//! Radial kinds are evaluated globally, `φ_k(q) = φ(|q - p_k|)`. The linear
//! element basis is supported on the host element of each source pair only.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point2};
use crate::linalg::LuFactorization;
use crate::quadrature::GlobalQuadrature;
use crate::registry::Registry;

/// Condition estimate above which interpolation is refused.
pub const INTERPOLATION_CONDITION_LIMIT: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTag {
    Gaussian,
    Mq,
    Imq,
    Iq,
    Tps,
    Phs,
    LocalC0,
    LocalC2,
    LinearElement,
}

impl BasisTag {
    pub const ALL: [BasisTag; 9] = [
        BasisTag::Gaussian,
        BasisTag::Mq,
        BasisTag::Imq,
        BasisTag::Iq,
        BasisTag::Tps,
        BasisTag::Phs,
        BasisTag::LocalC0,
        BasisTag::LocalC2,
        BasisTag::LinearElement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BasisTag::Gaussian => "gaussian",
            BasisTag::Mq => "mq",
            BasisTag::Imq => "imq",
            BasisTag::Iq => "iq",
            BasisTag::Tps => "tps",
            BasisTag::Phs => "phs",
            BasisTag::LocalC0 => "c0",
            BasisTag::LocalC2 => "c2",
            BasisTag::LinearElement => "linear",
        }
    }

    /// Kinds that use the shape parameter.
    pub fn is_smooth(self) -> bool {
        matches!(
            self,
            BasisTag::Gaussian | BasisTag::Mq | BasisTag::Imq | BasisTag::Iq
        )
    }

    pub fn has_exponent(self) -> bool {
        matches!(self, BasisTag::Tps | BasisTag::Phs)
    }

    pub fn is_radial(self) -> bool {
        self != BasisTag::LinearElement
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisKind {
    pub tag: BasisTag,
    pub eps2: f64,
    pub exponent: u32,
}

impl BasisKind {
    pub fn new(tag: BasisTag, eps2: f64, exponent: u32) -> Result<Self> {
        if tag.is_smooth() && !(eps2 > 0.0 && eps2.is_finite()) {
            return Err(Error::OutOfRange {
                name: "eps2",
                value: eps2,
                expected: "> 0",
            });
        }
        if tag.has_exponent() && exponent < 1 {
            return Err(Error::OutOfRange {
                name: "exponent",
                value: exponent as f64,
                expected: ">= 1",
            });
        }
        Ok(Self {
            tag,
            eps2,
            exponent,
        })
    }

    /// `tag` with `ε² = K²/1000` and exponent 1.
    pub fn for_sources(tag: BasisTag, source_count: usize) -> Result<Self> {
        Self::new(tag, default_shape_parameter(source_count)?, 1)
    }
}

/// `ε² = K²/1000`.
pub fn default_shape_parameter(source_count: usize) -> Result<f64> {
    if source_count < 2 {
        return Err(Error::OutOfRange {
            name: "K",
            value: source_count as f64,
            expected: ">= 2",
        });
    }
    let k = source_count as f64;
    Ok(k * k / 1000.0)
}

fn radial(kind: &BasisKind, r: f64) -> f64 {
    let e2r2 = kind.eps2 * r * r;
    match kind.tag {
        BasisTag::Gaussian => (-e2r2).exp(),
        BasisTag::Mq => (1.0 + e2r2).sqrt(),
        BasisTag::Imq => 1.0 / (1.0 + e2r2).sqrt(),
        BasisTag::Iq => 1.0 / (1.0 + e2r2),
        BasisTag::Tps => {
            if r == 0.0 {
                0.0
            } else {
                r.powi(2 * kind.exponent as i32) * r.ln()
            }
        }
        BasisTag::Phs => r.powi(2 * kind.exponent as i32 + 1),
        BasisTag::LocalC0 => {
            let c = (1.0 - r).max(0.0);
            c * c
        }
        BasisTag::LocalC2 => {
            let c = (1.0 - r).max(0.0);
            c.powi(4) * (1.0 + 4.0 * r)
        }
        BasisTag::LinearElement => f64::NAN,
    }
}

/// `φ(r)` for a radial kind.
pub fn rbf_value(kind: &BasisKind, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            expected: ">= 0",
        });
    }
    if !kind.tag.is_radial() {
        return Err(Error::Config("the linear element basis is not radial".into()));
    }
    Ok(radial(kind, r))
}

/// Hat functions of one source pair at local coordinate `t`.
/// `k = 1` is cardinal at `t = -s`, `k = 2` at `t = +s`.
pub fn linear_basis_value(k: usize, t: f64, s: f64) -> Result<f64> {
    match k {
        1 => Ok(-(t - s) / (2.0 * s)),
        2 => Ok((t + s) / (2.0 * s)),
        _ => Err(Error::OutOfRange {
            name: "k",
            value: k as f64,
            expected: "1 or 2",
        }),
    }
}

/// Source points, two per element at `t = -s` and `t = +s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSet {
    pub points: Vec<Point2>,
    pub normals: Vec<Point2>,
    pub elements: Vec<usize>,
    pub local_t: Vec<f64>,
    pub s: f64,
    pub element_count: usize,
}

impl SourceSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sources reordered so that entry `i` is the old entry `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: order.len(),
            });
        }
        for &i in order {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config(format!("{i} breaks the permutation")));
            }
        }
        let pick = |v: &[Point2]| order.iter().map(|&i| v[i]).collect();
        Ok(Self {
            points: pick(&self.points),
            normals: pick(&self.normals),
            elements: order.iter().map(|&i| self.elements[i]).collect(),
            local_t: order.iter().map(|&i| self.local_t[i]).collect(),
            s: self.s,
            element_count: self.element_count,
        })
    }
}

pub fn place_sources(mesh: &BoundaryMesh, s: f64) -> Result<SourceSet> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "0 < s < 1",
        });
    }
    let k = 2 * mesh.len();
    let mut set = SourceSet {
        points: Vec::with_capacity(k),
        normals: Vec::with_capacity(k),
        elements: Vec::with_capacity(k),
        local_t: Vec::with_capacity(k),
        s,
        element_count: mesh.len(),
    };
    for (j, e) in mesh.elements().iter().enumerate() {
        for t in [-s, s] {
            set.points.push(e.point_at(t));
            set.normals.push(e.normal_at(t));
            set.elements.push(j);
            set.local_t.push(t);
        }
    }
    Ok(set)
}

/// A point on the boundary with its element and local coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLocation {
    pub element: usize,
    pub t: f64,
    pub point: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrices {
    /// `nN x K`, `phi[(g, k)] = φ_k(q_g)`.
    pub phi: DMatrix<f64>,
    /// `K x K`, `psi[(k', k)] = φ_k(p_k')`.
    pub psi: DMatrix<f64>,
}

/// A family of boundary basis functions attached to a [`SourceSet`].
pub trait BoundaryBasis: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn kind(&self) -> BasisKind;

    /// `φ_k` at a boundary location.
    fn value(&self, sources: &SourceSet, k: usize, at: &BoundaryLocation) -> f64;

    /// Source indices whose functions may be nonzero on `element`.
    fn support_on(&self, sources: &SourceSet, element: usize) -> Vec<usize> {
        let _ = element;
        (0..sources.len()).collect()
    }

    fn build_matrices(&self, sources: &SourceSet, gq: &GlobalQuadrature) -> Result<BasisMatrices> {
        check_consistent(sources, gq)?;
        let rows = gq.len();
        let k = sources.len();
        let mut phi = vec![0.0; rows * k];
        phi.par_chunks_mut(rows.max(1))
            .enumerate()
            .for_each(|(col, out)| {
                for (g, v) in out.iter_mut().enumerate() {
                    let at = BoundaryLocation {
                        element: gq.element_of[g],
                        t: gq.local_t[g],
                        point: gq.points[g],
                    };
                    *v = self.value(sources, col, &at);
                }
            });
        let psi = DMatrix::from_fn(k, k, |row, col| {
            let at = BoundaryLocation {
                element: sources.elements[row],
                t: sources.local_t[row],
                point: sources.points[row],
            };
            self.value(sources, col, &at)
        });
        Ok(BasisMatrices {
            phi: DMatrix::from_vec(rows, k, phi),
            psi,
        })
    }
}

fn check_consistent(sources: &SourceSet, gq: &GlobalQuadrature) -> Result<()> {
    let gq_elements = if gq.nodes_per_element == 0 {
        0
    } else {
        gq.len() / gq.nodes_per_element
    };
    if gq_elements != sources.element_count {
        return Err(Error::DimensionMismatch(format!(
            "sources span {} elements but the quadrature spans {}",
            sources.element_count, gq_elements
        )));
    }
    Ok(())
}

/// One of the radial kinds, evaluated on Euclidean distance.
#[derive(Debug, Clone, Copy)]
pub struct RadialBasis {
    kind: BasisKind,
}

impl RadialBasis {
    pub fn new(kind: BasisKind) -> Result<Self> {
        if !kind.tag.is_radial() {
            return Err(Error::Config("the linear element basis is not radial".into()));
        }
        Ok(Self { kind })
    }
}

impl BoundaryBasis for RadialBasis {
    fn name(&self) -> &'static str {
        self.kind.tag.name()
    }

    fn kind(&self) -> BasisKind {
        self.kind
    }

    fn value(&self, sources: &SourceSet, k: usize, at: &BoundaryLocation) -> f64 {
        radial(&self.kind, at.point.distance(sources.points[k]))
    }
}

/// Piecewise-linear hats, two per element.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearElementBasis;

impl BoundaryBasis for LinearElementBasis {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn kind(&self) -> BasisKind {
        BasisKind {
            tag: BasisTag::LinearElement,
            eps2: 0.0,
            exponent: 0,
        }
    }

    fn value(&self, sources: &SourceSet, k: usize, at: &BoundaryLocation) -> f64 {
        if sources.elements[k] != at.element {
            return 0.0;
        }
        let s = sources.s;
        // the hat is cardinal at the source's own local coordinate
        if sources.local_t[k] < 0.0 {
            -(at.t - s) / (2.0 * s)
        } else {
            (at.t + s) / (2.0 * s)
        }
    }

    fn support_on(&self, sources: &SourceSet, element: usize) -> Vec<usize> {
        (0..sources.len())
            .filter(|&k| sources.elements[k] == element)
            .collect()
    }

    fn build_matrices(&self, sources: &SourceSet, gq: &GlobalQuadrature) -> Result<BasisMatrices> {
        check_consistent(sources, gq)?;
        let k = sources.len();
        let n = gq.nodes_per_element;
        let mut phi = DMatrix::zeros(gq.len(), k);
        for col in 0..k {
            let j = sources.elements[col];
            for g in j * n..(j + 1) * n {
                let at = BoundaryLocation {
                    element: j,
                    t: gq.local_t[g],
                    point: gq.points[g],
                };
                phi[(g, col)] = self.value(sources, col, &at);
            }
        }
        let psi = DMatrix::from_fn(k, k, |row, col| {
            let at = BoundaryLocation {
                element: sources.elements[row],
                t: sources.local_t[row],
                point: sources.points[row],
            };
            self.value(sources, col, &at)
        });
        Ok(BasisMatrices { phi, psi })
    }
}

/// Builds the basis object for `kind`.
pub fn make_basis(kind: BasisKind) -> Result<Arc<dyn BoundaryBasis>> {
    if kind.tag == BasisTag::LinearElement {
        Ok(Arc::new(LinearElementBasis))
    } else {
        Ok(Arc::new(RadialBasis::new(kind)?))
    }
}

pub fn build_matrices(
    kind: BasisKind,
    sources: &SourceSet,
    gq: &GlobalQuadrature,
) -> Result<BasisMatrices> {
    make_basis(kind)?.build_matrices(sources, gq)
}

pub type BasisCtor = fn(usize) -> Result<Arc<dyn BoundaryBasis>>;

/// Basis families by name; constructors take the source count `K`.
pub fn basis_registry() -> Registry<BasisCtor> {
    fn with<const I: usize>(k: usize) -> Result<Arc<dyn BoundaryBasis>> {
        let tag = BasisTag::ALL[I];
        if tag == BasisTag::LinearElement {
            return Ok(Arc::new(LinearElementBasis));
        }
        let eps2 = if tag.is_smooth() {
            default_shape_parameter(k)?
        } else {
            0.0
        };
        make_basis(BasisKind::new(tag, eps2, 1)?)
    }
    let mut r: Registry<BasisCtor> = Registry::new("basis");
    r.register_with_aliases("gaussian", &["ga"], "exp(-eps^2 r^2)", with::<0>)
        .register("mq", "sqrt(1 + eps^2 r^2)", with::<1>)
        .register("imq", "1 / sqrt(1 + eps^2 r^2)", with::<2>)
        .register("iq", "1 / (1 + eps^2 r^2)", with::<3>)
        .register("tps", "r^2 ln r", with::<4>)
        .register("phs", "r^3", with::<5>)
        .register_with_aliases("c0", &["localc0"], "(1 - r)_+^2", with::<6>)
        .register_with_aliases("c2", &["localc2"], "(1 - r)_+^4 (1 + 4r)", with::<7>)
        .register_with_aliases(
            "linear",
            &["linearelement"],
            "piecewise-linear hats on each element",
            with::<8>,
        );
    r
}

/// Coefficients `γ` with `Σ γ_k φ(|x_j - x_k|) = b_j`.
pub fn rbf_interpolate(kind: &BasisKind, centers: &[Point2], values: &[f64]) -> Result<DVector<f64>> {
    if !kind.tag.is_radial() {
        return Err(Error::Config("the linear element basis is not radial".into()));
    }
    if centers.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: centers.len(),
            found: values.len(),
        });
    }
    let k = centers.len();
    let psi = DMatrix::from_fn(k, k, |i, j| radial(kind, centers[i].distance(centers[j])));
    let b = DVector::from_column_slice(values);
    let lu = LuFactorization::new(&psi)?;
    let condition = lu.condition_estimate();
    if !(condition <= INTERPOLATION_CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition });
    }
    let mut gamma = lu.solve(&b);
    let r = &b - &psi * &gamma;
    gamma += lu.solve(&r);
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryMesh;
    use crate::quadrature::{gauss_legendre, global_quadrature};
    use approx::assert_abs_diff_eq;

    fn kind(tag: BasisTag, eps2: f64) -> BasisKind {
        BasisKind::new(tag, eps2, 1).unwrap()
    }

    #[test]
    fn rbf_values_at_reference_points() {
        assert_eq!(rbf_value(&kind(BasisTag::Gaussian, 1.0), 0.0).unwrap(), 1.0);
        assert_eq!(rbf_value(&kind(BasisTag::Imq, 1.0), 0.0).unwrap(), 1.0);
        assert_eq!(rbf_value(&kind(BasisTag::Tps, 1.0), 1.0).unwrap(), 0.0);
        assert_eq!(rbf_value(&kind(BasisTag::Tps, 1.0), 0.0).unwrap(), 0.0);
        assert_eq!(rbf_value(&kind(BasisTag::Phs, 1.0), 2.0).unwrap(), 8.0);
        assert_abs_diff_eq!(rbf_value(&kind(BasisTag::Mq, 4.0), 1.0).unwrap(), 5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(rbf_value(&kind(BasisTag::Iq, 4.0), 1.0).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(rbf_value(&kind(BasisTag::LocalC0, 1.0), 0.5).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(rbf_value(&kind(BasisTag::LocalC2, 1.0), 0.5).unwrap(), 0.1875, epsilon = 1e-15);
        let tps2 = BasisKind::new(BasisTag::Tps, 0.0, 2).unwrap();
        assert_abs_diff_eq!(rbf_value(&tps2, 2.0).unwrap(), 16.0 * 2f64.ln(), epsilon = 1e-13);
    }

    #[test]
    fn rbf_value_rejects_negative_distance() {
        assert!(rbf_value(&kind(BasisTag::Gaussian, 1.0), -0.1).is_err());
        assert!(rbf_value(&kind(BasisTag::Gaussian, 1.0), f64::NAN).is_err());
    }

    #[test]
    fn kind_validation() {
        assert!(BasisKind::new(BasisTag::Gaussian, 0.0, 1).is_err());
        assert!(BasisKind::new(BasisTag::Tps, 0.0, 0).is_err());
        assert!(BasisKind::new(BasisTag::Tps, 0.0, 1).is_ok());
        assert!(BasisKind::new(BasisTag::LocalC0, 0.0, 0).is_ok());
    }

    #[test]
    fn smooth_kinds_decay_monotonically() {
        for tag in [BasisTag::Gaussian, BasisTag::Imq, BasisTag::Iq] {
            let k = kind(tag, 2.5);
            let mut last = f64::INFINITY;
            for i in 0..200 {
                let v = rbf_value(&k, i as f64 * 0.02).unwrap();
                assert!(v < last, "{tag:?}");
                last = v;
            }
        }
    }

    #[test]
    fn compact_kinds_vanish_outside_support() {
        for tag in [BasisTag::LocalC0, BasisTag::LocalC2] {
            for r in [1.0, 1.0001, 2.0, 10.0] {
                assert_eq!(rbf_value(&kind(tag, 1.0), r).unwrap(), 0.0);
            }
            assert!(rbf_value(&kind(tag, 1.0), 0.999).unwrap() > 0.0);
        }
    }

    #[test]
    fn shape_parameter_rule() {
        assert_abs_diff_eq!(default_shape_parameter(80).unwrap(), 6.4, epsilon = 1e-14);
        assert_abs_diff_eq!(default_shape_parameter(128).unwrap(), 16.384, epsilon = 1e-14);
        assert!(default_shape_parameter(0).is_err());
        assert!(default_shape_parameter(1).is_err());
    }

    #[test]
    fn linear_hats() {
        let s = 0.43;
        assert_abs_diff_eq!(linear_basis_value(1, -s, s).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(linear_basis_value(2, -s, s).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(linear_basis_value(1, 0.0, s).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(linear_basis_value(2, s, s).unwrap(), 1.0, epsilon = 1e-15);
        assert!(linear_basis_value(3, 0.0, s).is_err());
    }

    #[test]
    fn sources_on_first_square_element() {
        let mesh = BoundaryMesh::square(4, 1.0).unwrap();
        let src = place_sources(&mesh, 0.5).unwrap();
        assert_eq!(src.len(), 8);
        assert_abs_diff_eq!(src.points[0].x, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(src.points[0].y, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(src.points[1].x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(src.points[1].y, -1.0, epsilon = 1e-15);
        assert!(place_sources(&mesh, 0.0).is_err());
        assert!(place_sources(&mesh, 1.0).is_err());
    }

    #[test]
    fn sources_lie_on_host_elements_and_are_distinct() {
        let mesh = BoundaryMesh::flower(24).unwrap();
        let src = place_sources(&mesh, 0.43).unwrap();
        for (i, p) in src.points.iter().enumerate() {
            let e = &mesh.elements()[src.elements[i]];
            assert!(p.distance(e.point(src.local_t[i]).unwrap()) < 1e-13);
            for q in &src.points[i + 1..] {
                assert!(p.distance(*q) > 1e-6);
            }
        }
    }

    #[test]
    fn sources_avoid_sixteen_point_nodes() {
        let rule = gauss_legendre(16).unwrap();
        for t in rule.nodes {
            assert!((t.abs() - 0.43).abs() > 1e-3);
        }
    }

    fn setup(n_el: usize, n: usize, s: f64) -> (SourceSet, GlobalQuadrature) {
        let mesh = BoundaryMesh::square(n_el, 1.0).unwrap();
        let gq = global_quadrature(&mesh, &gauss_legendre(n).unwrap());
        (place_sources(&mesh, s).unwrap(), gq)
    }

    #[test]
    fn linear_phi_is_a_partition_of_unity() {
        let (src, gq) = setup(8, 16, 0.43);
        let m = LinearElementBasis.build_matrices(&src, &gq).unwrap();
        for row in m.phi.row_iter() {
            assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 2);
            assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-14);
        }
        assert_eq!(m.psi, DMatrix::identity(16, 16));
    }

    #[test]
    fn linear_phi_reproduces_linear_functions_of_t() {
        let (src, gq) = setup(8, 8, 0.58);
        let m = LinearElementBasis.build_matrices(&src, &gq).unwrap();
        let (a, b) = (0.7, -1.3);
        // nodal values of g(t) = a + b t at t = -s, +s
        let coeffs = DVector::from_fn(src.len(), |k, _| a + b * src.local_t[k]);
        let g = &m.phi * coeffs;
        for (i, &t) in gq.local_t.iter().enumerate() {
            assert_abs_diff_eq!(g[i], a + b * t, epsilon = 1e-14);
        }
    }

    #[test]
    fn linear_value_matches_matrix() {
        let (src, gq) = setup(4, 4, 0.3);
        let m = LinearElementBasis.build_matrices(&src, &gq).unwrap();
        for g in 0..gq.len() {
            let at = BoundaryLocation {
                element: gq.element_of[g],
                t: gq.local_t[g],
                point: gq.points[g],
            };
            for k in 0..src.len() {
                assert_eq!(LinearElementBasis.value(&src, k, &at), m.phi[(g, k)]);
            }
        }
    }

    #[test]
    fn gaussian_psi_is_symmetric_positive_definite() {
        for n_el in [8usize, 16, 32] {
            let (src, gq) = setup(n_el, 16, 0.43);
            let k = BasisKind::for_sources(BasisTag::Gaussian, src.len()).unwrap();
            let m = build_matrices(k, &src, &gq).unwrap();
            assert!((&m.psi - m.psi.transpose()).amax() < 1e-13);
            let eig = m.psi.clone().symmetric_eigen();
            assert!(eig.eigenvalues.min() > 0.0, "N={n_el}: {}", eig.eigenvalues.min());
        }
    }

    #[test]
    fn radial_phi_matches_direct_evaluation() {
        let (src, gq) = setup(8, 4, 0.43);
        let k = BasisKind::for_sources(BasisTag::Imq, src.len()).unwrap();
        let m = build_matrices(k, &src, &gq).unwrap();
        for g in [0, 5, 17, 31] {
            for c in [0, 3, 15] {
                let r = gq.points[g].distance(src.points[c]);
                assert_eq!(m.phi[(g, c)], rbf_value(&k, r).unwrap());
            }
        }
    }

    #[test]
    fn mismatched_mesh_is_rejected() {
        let (src, _) = setup(8, 4, 0.43);
        let (_, gq) = setup(12, 4, 0.43);
        assert!(LinearElementBasis.build_matrices(&src, &gq).is_err());
    }

    #[test]
    fn registry_names() {
        let r = basis_registry();
        assert_eq!(
            r.names(),
            vec!["gaussian", "mq", "imq", "iq", "tps", "phs", "c0", "c2", "linear"]
        );
        for name in r.names() {
            let b = r.get(name).unwrap()(80).unwrap();
            assert_eq!(b.name(), name);
        }
        assert_abs_diff_eq!(r.get("GA").unwrap()(80).unwrap().kind().eps2, 6.4, epsilon = 1e-14);
        assert!(r.get("sinc").is_err());
    }

    #[test]
    fn interpolation_examples() {
        let ga = kind(BasisTag::Gaussian, 1.0);
        let g = rbf_interpolate(&ga, &[Point2::new(0.3, 0.1)], &[5.0]).unwrap();
        assert_abs_diff_eq!(g[0], 5.0, epsilon = 1e-15);

        let pts: Vec<Point2> = (0..10)
            .map(|i| {
                let a = i as f64 * 2.399963;
                Point2::new(0.8 * a.cos() * (i as f64 / 10.0).sqrt(), 0.8 * a.sin() * (i as f64 / 10.0).sqrt())
            })
            .collect();
        let zero = rbf_interpolate(&ga, &pts, &[0.0; 10]).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));

        let vals: Vec<f64> = pts.iter().map(|p| p.x + p.y).collect();
        let g = rbf_interpolate(&ga, &pts, &vals).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let q: f64 = pts
                .iter()
                .zip(g.iter())
                .map(|(c, w)| w * rbf_value(&ga, p.distance(*c)).unwrap())
                .sum();
            assert!((q - vals[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_guards() {
        let ga = kind(BasisTag::Gaussian, 1e-6);
        let pts: Vec<Point2> = (0..12).map(|i| Point2::new(i as f64 * 0.01, 0.0)).collect();
        let err = rbf_interpolate(&ga, &pts, &[1.0; 12]).unwrap_err();
        assert!(matches!(
            err,
            Error::IllConditioned { .. } | Error::SingularMatrix { .. }
        ));
        let dup = [Point2::new(0.0, 0.0), Point2::new(0.0, 0.0)];
        assert!(rbf_interpolate(&kind(BasisTag::Phs, 1.0), &dup, &[1.0, 2.0]).is_err());
        assert!(rbf_interpolate(&ga, &pts[..2], &[1.0]).is_err());
    }
}
