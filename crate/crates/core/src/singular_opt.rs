//! Error of plain Gauss–Legendre quadrature on the log-singular kernel and
//! the search for source offsets where that error vanishes.
//!
//! For a source at local coordinate `s` the rule approximates
//! `∫ ln|t - s| |t - s|^i dt` over `[-1, 1]`. Its error `Err^i(s)` is even in
//! `s`, so only `s` in `[0, 1]` is examined. Zeros of the signed `Err^0`
//! are the candidate offsets for boundary source points.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, QuadratureRule};

/// Grid used to bracket sign changes of the signed `Err^0`.
pub const ZERO_SEARCH_GRID: usize = 2000;
/// Bisection stops once the bracket is narrower than this.
pub const ZERO_TOLERANCE: f64 = 1e-10;
/// Distance below which `s` counts as sitting on a quadrature node.
pub const NODE_COINCIDENCE_TOL: f64 = 1e-13;

/// Offsets reported for the two tabulated rules.
pub const TABULATED_OFFSETS: [(usize, f64); 2] = [(8, 0.58), (16, 0.43)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetProvenance {
    /// Published value for n = 8 or n = 16.
    PaperTable,
    /// Computed `Err^0` zero closest to 0.5.
    ComputedZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetChoice {
    pub n: usize,
    pub s_opt: f64,
    pub provenance: OffsetProvenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub s: f64,
    pub err0: f64,
    pub err1: f64,
    pub err2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProfile {
    pub n: usize,
    pub samples: Vec<ErrorSample>,
    pub zeros_of_err0: Vec<f64>,
}

fn check_moment(i: u32) -> Result<()> {
    if i > 2 {
        return Err(Error::OutOfRange {
            name: "i",
            value: i as f64,
            expected: "0, 1 or 2",
        });
    }
    Ok(())
}

/// `∫_0^a x^i ln x dx` for `a >= 0`.
fn log_power_antiderivative(a: f64, i: u32) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let p = (i + 1) as f64;
    a.powi(i as i32 + 1) / p * (a.ln() - 1.0 / p)
}

/// Closed form of `∫_{-1}^{1} ln|t - s| |t - s|^i dt` for `|s| < 1`.
pub fn exact_log_moment(s: f64, i: u32) -> Result<f64> {
    check_moment(i)?;
    if !(s.abs() < 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "|s| < 1",
        });
    }
    Ok(log_power_antiderivative(1.0 - s, i) + log_power_antiderivative(1.0 + s, i))
}

/// The plain rule applied to `ln|t - s| |t - s|^i`.
pub fn quad_log_moment(s: f64, i: u32, rule: &QuadratureRule) -> Result<f64> {
    check_moment(i)?;
    let mut sum = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let d = (t - s).abs();
        if d < NODE_COINCIDENCE_TOL {
            return Err(Error::NodeCoincidence { s, node: t });
        }
        sum += w * d.ln() * d.powi(i as i32);
    }
    Ok(sum)
}

/// Exact minus quadrature; the zeros of this are the zeros of `Err^i`.
pub fn signed_error(s: f64, i: u32, rule: &QuadratureRule) -> Result<f64> {
    Ok(exact_log_moment(s, i)? - quad_log_moment(s, i, rule)?)
}

/// `Err^i(s) = |exact - quadrature|`.
pub fn err_i(s: f64, i: u32, rule: &QuadratureRule) -> Result<f64> {
    signed_error(s, i, rule).map(f64::abs)
}

/// All sign changes of the signed `Err^0` in `(0, 1)`.
///
/// The signed error tends to `+inf` at every node, so grid samples too close
/// to a node are skipped rather than bracketed across.
pub fn find_err0_zeros(rule: &QuadratureRule) -> Vec<f64> {
    let f = |s: f64| signed_error(s, 0, rule).ok();
    let h = 1.0 / ZERO_SEARCH_GRID as f64;
    let samples: Vec<(f64, f64)> = (1..ZERO_SEARCH_GRID)
        .map(|k| k as f64 * h)
        .filter(|&s| rule.nodes.iter().all(|&t| (t - s).abs() > 1e-9))
        .filter_map(|s| f(s).map(|v| (s, v)))
        .collect();

    let mut zeros = Vec::new();
    for pair in samples.windows(2) {
        let (mut a, fa) = pair[0];
        let (mut b, fb) = pair[1];
        if fa == 0.0 {
            zeros.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        // a node inside the bracket would be a pole, not a root
        if rule.nodes.iter().any(|&t| t > a && t < b) {
            continue;
        }
        let mut fa = fa;
        while b - a > ZERO_TOLERANCE {
            let m = 0.5 * (a + b);
            let Some(fm) = f(m) else { break };
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        zeros.push(0.5 * (a + b));
    }
    zeros
}

/// Samples `Err^0`, `Err^1`, `Err^2` at `count` midpoints of `[0, 1]`.
pub fn error_profile(rule: &QuadratureRule, count: usize) -> ErrorProfile {
    let samples = (0..count)
        .filter_map(|k| {
            let s = (k as f64 + 0.5) / count as f64;
            Some(ErrorSample {
                s,
                err0: err_i(s, 0, rule).ok()?,
                err1: err_i(s, 1, rule).ok()?,
                err2: err_i(s, 2, rule).ok()?,
            })
        })
        .collect();
    ErrorProfile {
        n: rule.len(),
        samples,
        zeros_of_err0: find_err0_zeros(rule),
    }
}

/// Offset for source points under an `n`-point rule.
///
/// n = 8 and n = 16 use the published values; any other `n >= 4` takes the
/// computed zero of `Err^0` nearest to 0.5.
pub fn optimal_offset(n: usize) -> Result<OffsetChoice> {
    if n < 4 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            expected: "n >= 4",
        });
    }
    if let Some(&(_, s)) = TABULATED_OFFSETS.iter().find(|(m, _)| *m == n) {
        return Ok(OffsetChoice {
            n,
            s_opt: s,
            provenance: OffsetProvenance::PaperTable,
        });
    }
    let rule = gauss_legendre(n)?;
    let s_opt = find_err0_zeros(&rule)
        .into_iter()
        .min_by(|a, b| (a - 0.5).abs().total_cmp(&(b - 0.5).abs()))
        .ok_or(Error::NonConvergence {
            what: "Err0 zero search",
            iterations: ZERO_SEARCH_GRID,
        })?;
    Ok(OffsetChoice {
        n,
        s_opt,
        provenance: OffsetProvenance::ComputedZero,
    })
}

/// Graded-panel integrator for integrands with an integrable singularity.
///
/// `[-1, 1]` is split at `s` and each side is covered by panels whose
/// distance to `s` shrinks geometrically by `ratio`, each integrated with a
/// `panel_nodes`-point Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct GradedIntegrator {
    pub ratio: f64,
    pub levels: usize,
    rule: QuadratureRule,
}

impl Default for GradedIntegrator {
    fn default() -> Self {
        Self::new(0.15, 30, 24).expect("default graded integrator")
    }
}

impl GradedIntegrator {
    pub fn new(ratio: f64, levels: usize, panel_nodes: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::OutOfRange {
                name: "ratio",
                value: ratio,
                expected: "(0, 1)",
            });
        }
        Ok(Self {
            ratio,
            levels,
            rule: gauss_legendre(panel_nodes)?,
        })
    }

    /// Nodes and weights on `[s, s + dir * len]` graded toward `s`.
    ///
    /// Nodes that round onto `s` itself are skipped; they sit below the
    /// resolution of `f64` around `s` and carry no measurable weight.
    fn one_side(&self, s: f64, dir: f64, len: f64, levels: usize, out: &mut (Vec<f64>, Vec<f64>)) {
        if len <= 0.0 {
            return;
        }
        let mut push = |a: f64, b: f64| {
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let t = s + dir * (mid + half * x);
                if t != s {
                    out.0.push(t);
                    out.1.push(half * w);
                }
            }
        };
        let mut outer = len;
        for _ in 0..levels {
            let inner = outer * self.ratio;
            push(inner, outer);
            outer = inner;
        }
        push(0.0, outer);
    }

    /// Composite rule on `[-1, 1]` with `levels` panels graded toward `s`
    /// on each side.
    pub fn graded_rule(&self, s: f64, levels: usize) -> (Vec<f64>, Vec<f64>) {
        let mut out = (Vec::new(), Vec::new());
        self.one_side(s, -1.0, 1.0 + s, levels, &mut out);
        self.one_side(s, 1.0, 1.0 - s, levels, &mut out);
        out
    }

    /// Deepest grading level at which panel nodes near `s` still resolve.
    ///
    /// Convergence checks compare this depth with the one below it; past the
    /// rounding floor around `s` skipped nodes would make any two depths agree
    /// trivially.
    pub fn check_depth(&self, s: f64) -> usize {
        let short_side = if s.abs() < 1.0 { 1.0 - s.abs() } else { 2.0 };
        let floor = 1e-12 * s.abs().max(f64::MIN_POSITIVE) / short_side;
        let resolvable = (floor.ln() / self.ratio.ln()).floor().max(2.0) as usize;
        self.levels.min(resolvable)
    }

    fn integrate_with_levels<F: Fn(f64) -> f64>(&self, f: &F, s: f64, levels: usize) -> f64 {
        let (t, w) = self.graded_rule(s, levels);
        t.iter().zip(&w).map(|(&t, &w)| w * f(t)).sum()
    }

    /// `∫_{-1}^{1} f(t) dt` with panels graded toward `s`.
    ///
    /// Two successive grading depths are compared and the result is
    /// rejected if they differ by more than `1e-9`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, s: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::OutOfRange {
                name: "s",
                value: s,
                expected: "[-1, 1]",
            });
        }
        let value = self.integrate_with_levels(&f, s, self.levels);
        let depth = self.check_depth(s);
        let change = (self.integrate_with_levels(&f, s, depth)
            - self.integrate_with_levels(&f, s, depth - 1))
        .abs();
        if !(change <= 1e-9 * value.abs().max(1.0)) {
            return Err(Error::ReferenceNotConverged { change });
        }
        Ok(value)
    }
}

/// Reference value of `∫_{-1}^{1} kernel(t) dt` for a kernel with at worst a
/// logarithmic singularity at `t = s`.
pub fn reference_singular_integral<F: Fn(f64) -> f64>(kernel: F, s: f64) -> Result<f64> {
    if !(s.abs() < 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "|s| < 1",
        });
    }
    GradedIntegrator::default().integrate(kernel, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rule(n: usize) -> QuadratureRule {
        gauss_legendre(n).unwrap()
    }

    #[test]
    fn exact_moments_at_zero() {
        assert_abs_diff_eq!(exact_log_moment(0.0, 0).unwrap(), -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_log_moment(0.0, 1).unwrap(), -0.5, epsilon = 1e-15);
        // 2 * ∫_0^1 t^2 ln t dt = -2/9
        assert_abs_diff_eq!(exact_log_moment(0.0, 2).unwrap(), -2.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_moment_matches_graded_oracle_at_043() {
        let oracle = reference_singular_integral(|t| (t - 0.43f64).abs().ln(), 0.43).unwrap();
        assert_abs_diff_eq!(exact_log_moment(0.43, 0).unwrap(), oracle, epsilon = 1e-12);
        // frozen oracle value
        assert_abs_diff_eq!(oracle, -1.8089333280388218, epsilon = 1e-12);
    }

    #[test]
    fn exact_moment_rejects_bad_input() {
        assert!(exact_log_moment(1.0, 0).is_err());
        assert!(exact_log_moment(-1.2, 1).is_err());
        assert!(exact_log_moment(0.1, 3).is_err());
    }

    #[test]
    fn quad_moment_two_point_rule() {
        let r = rule(2);
        let ln3 = 3f64.ln();
        assert_abs_diff_eq!(quad_log_moment(0.0, 0, &r).unwrap(), -ln3, epsilon = 1e-15);
        assert_abs_diff_eq!(
            quad_log_moment(0.0, 1, &r).unwrap(),
            -ln3 / 3f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn quad_moment_rejects_node_coincidence() {
        let r = rule(16);
        assert!(matches!(
            quad_log_moment(r.nodes[0], 0, &r),
            Err(Error::NodeCoincidence { .. })
        ));
    }

    #[test]
    fn err0_near_published_offset_for_16_nodes() {
        assert!(err_i(0.43, 0, &rule(16)).unwrap() < 1e-3);
    }

    #[test]
    fn err0_at_058_for_8_nodes_true_value() {
        // the true zero sits at 0.57928; Err0 rises steeply around it
        let e = err_i(0.58, 0, &rule(8)).unwrap();
        assert_abs_diff_eq!(e, 3.6457e-3, epsilon = 1e-6);
    }

    #[test]
    #[ignore = "unattainable: Err0(0.58) = 3.65e-3 for n = 8, the zero is at 0.5793"]
    fn err0_at_058_for_8_nodes_below_1e3() {
        assert!(err_i(0.58, 0, &rule(8)).unwrap() < 1e-3);
    }

    #[test]
    fn err_ordering_at_half() {
        let r = rule(8);
        let e: Vec<f64> = (0..3).map(|i| err_i(0.5, i, &r).unwrap()).collect();
        assert!(e[2] <= e[1] && e[1] <= e[0], "{e:?}");
    }

    #[test]
    fn zeros_for_8_nodes() {
        // independent high-precision root finding (mpmath) of the signed error
        let expected = [
            0.12308137834704362,
            0.24458981428256474,
            0.47408527338386586,
            0.579283065045314,
            0.761005415649155,
            0.8358562896390508,
            0.9450207895692152,
            0.9802137618983355,
        ];
        let zeros = find_err0_zeros(&rule(8));
        assert_eq!(zeros.len(), expected.len());
        for (z, e) in zeros.iter().zip(expected) {
            assert_abs_diff_eq!(*z, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn zeros_for_16_nodes() {
        let expected = [
            0.06345023736928385,
            0.12668397058469544,
            0.2512895857109543,
            0.3122411845621555,
            0.4300449805769831,
            0.4865151990386342,
            0.5932554221726778,
            0.6432080005836796,
            0.7350213561651086,
            0.7766578851707422,
            0.8502173948737781,
            0.8820458059923408,
            0.9346757133899954,
            0.955578324667829,
            0.9853253699154833,
            0.9947420420195905,
        ];
        let zeros = find_err0_zeros(&rule(16));
        assert_eq!(zeros.len(), expected.len());
        for (z, e) in zeros.iter().zip(expected) {
            assert_abs_diff_eq!(*z, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn zeros_have_small_signed_error() {
        for n in [4, 8, 12, 16] {
            let r = rule(n);
            let zeros = find_err0_zeros(&r);
            assert!(!zeros.is_empty());
            assert!(zeros.windows(2).all(|w| w[0] < w[1]));
            for z in zeros {
                assert!(z > 0.0 && z < 1.0);
                assert!(signed_error(z, 0, &r).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn optimal_offsets() {
        let c8 = optimal_offset(8).unwrap();
        assert_eq!(c8.s_opt, 0.58);
        assert_eq!(c8.provenance, OffsetProvenance::PaperTable);
        assert_eq!(optimal_offset(16).unwrap().s_opt, 0.43);
        let c12 = optimal_offset(12).unwrap();
        assert_eq!(c12.provenance, OffsetProvenance::ComputedZero);
        let zeros = find_err0_zeros(&rule(12));
        let nearest = zeros
            .iter()
            .copied()
            .min_by(|a, b| (a - 0.5).abs().total_cmp(&(b - 0.5).abs()))
            .unwrap();
        assert_eq!(c12.s_opt, nearest);
        assert!(optimal_offset(3).is_err());
    }

    #[test]
    fn reference_integral_examples() {
        assert_abs_diff_eq!(
            reference_singular_integral(|t: f64| t.abs().ln(), 0.0).unwrap(),
            -2.0,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            reference_singular_integral(|_| 1.0, 0.3).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        assert!(reference_singular_integral(|_| 1.0, 1.0).is_err());
    }

    #[test]
    fn reference_integral_is_deterministic() {
        let f = |t: f64| (t - 0.2f64).abs().ln() * (1.0 + t * t);
        let a = reference_singular_integral(f, 0.2).unwrap();
        let b = reference_singular_integral(f, 0.2).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn reference_integral_flags_nonintegrable_kernels() {
        // 1/|t - s| is not integrable; refinement never settles
        assert!(matches!(
            reference_singular_integral(|t: f64| 1.0 / (t - 0.1).abs(), 0.1),
            Err(Error::ReferenceNotConverged { .. })
        ));
    }

    #[test]
    fn error_profile_covers_unit_interval() {
        let p = error_profile(&rule(8), 100);
        assert_eq!(p.n, 8);
        assert_eq!(p.samples.len(), 100);
        assert_eq!(p.zeros_of_err0.len(), 8);
        assert!(p
            .samples
            .iter()
            .all(|s| s.err0 >= 0.0 && s.err1 >= 0.0 && s.err2 >= 0.0));
    }
}
