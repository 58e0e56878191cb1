//! Experiment configuration and the commands behind the command-line tool.
//!
//! Every command returns a [`Table`] whose rows are assembled in a fixed
//! order, so identical configurations produce byte-identical CSV.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::basis::{basis_registry, place_sources, SourceSet};
use crate::error::{Error, Result};
use crate::geometry::{interior_points, BoundaryMesh, Point2};
use crate::kernels::PdeCoefficients;
use crate::linalg::solver_registry;
use crate::quadrature::gauss_legendre;
use crate::singular_opt::{error_profile, find_err0_zeros, optimal_offset, ErrorProfile, OffsetChoice};
use crate::solver::{
    boundary_system, flux_error, integrator_registry, interior_error, interior_operators,
    interior_potential, solve_with, BoundaryConditionSpec, Discretization,
};

/// Interior evaluation points are the sources scaled by this factor.
pub const INTERIOR_FACTOR: f64 = 0.5;
pub const DEFAULT_SWEEP_POINTS: usize = 200;
pub const SWEEP_RANGE: (f64, f64) = (0.01, 0.99);
/// Grid offsets closer than this to a quadrature node are moved off it.
pub const SWEEP_NODE_SHIFT: f64 = 1e-6;
pub const PARITY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Square,
    Flower,
}

impl Domain {
    pub fn mesh(self, elements: usize) -> Result<BoundaryMesh> {
        match self {
            Domain::Square => BoundaryMesh::square(elements, 1.0),
            Domain::Flower => BoundaryMesh::flower(elements),
        }
    }

    /// Sources carrying potential data under mixed conditions.
    ///
    /// Square: top and bottom sides. Flower: polar angle in `[0, π)`.
    pub fn dirichlet_mask(self, bc: BcKind, sources: &SourceSet) -> Vec<bool> {
        match bc {
            BcKind::Dirichlet => vec![true; sources.len()],
            BcKind::Mixed => match self {
                Domain::Square => sources.normals.iter().map(|n| n.y.abs() > 0.5).collect(),
                Domain::Flower => sources
                    .points
                    .iter()
                    .map(|p| p.y.atan2(p.x).rem_euclid(std::f64::consts::TAU) < std::f64::consts::PI)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeKind {
    Laplace,
    AdvDiff,
}

/// Closed-form solutions used as boundary data and reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSolution {
    /// `x² - y²`
    Poly,
    /// `eˣ cos y`
    ExpCos,
    /// `e^(x+y)`
    ExpSum,
}

impl ExactSolution {
    pub fn value(self, p: Point2) -> f64 {
        match self {
            ExactSolution::Poly => p.x * p.x - p.y * p.y,
            ExactSolution::ExpCos => p.x.exp() * p.y.cos(),
            ExactSolution::ExpSum => (p.x + p.y).exp(),
        }
    }

    pub fn gradient(self, p: Point2) -> Point2 {
        match self {
            ExactSolution::Poly => Point2::new(2.0 * p.x, -2.0 * p.y),
            ExactSolution::ExpCos => {
                let e = p.x.exp();
                Point2::new(e * p.y.cos(), -e * p.y.sin())
            }
            ExactSolution::ExpSum => {
                let e = (p.x + p.y).exp();
                Point2::new(e, e)
            }
        }
    }

    pub fn flux(self, p: Point2, n: Point2) -> f64 {
        self.gradient(p).dot(n)
    }

    /// `∇²u + h·∇u + λu` at `p`.
    pub fn residual(self, pde: &PdeCoefficients, p: Point2) -> f64 {
        let laplacian = match self {
            ExactSolution::Poly => 0.0,
            ExactSolution::ExpCos => 0.0,
            ExactSolution::ExpSum => 2.0 * self.value(p),
        };
        laplacian + pde.h().dot(self.gradient(p)) + pde.lambda() * self.value(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetSpec {
    Auto,
    Value(f64),
}

impl OffsetSpec {
    pub fn resolve(self, nodes: usize) -> Result<f64> {
        match self {
            OffsetSpec::Auto => Ok(optimal_offset(nodes)?.s_opt),
            OffsetSpec::Value(s) => Ok(s),
        }
    }
}

macro_rules! keyword_enum {
    ($ty:ident, $what:literal, $($text:literal => $variant:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", $what, " '{}' (expected one of: {})"),
                        other,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($text); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(Domain, "domain", "square" => Domain::Square, "flower" => Domain::Flower);
keyword_enum!(BcKind, "boundary condition", "dirichlet" => BcKind::Dirichlet, "mixed" => BcKind::Mixed);
keyword_enum!(PdeKind, "pde", "laplace" => PdeKind::Laplace, "advdiff" => PdeKind::AdvDiff);
keyword_enum!(
    ExactSolution,
    "exact solution",
    "poly" => ExactSolution::Poly,
    "expcos" => ExactSolution::ExpCos,
    "expsum" => ExactSolution::ExpSum,
);

impl FromStr for OffsetSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") || s.eq_ignore_ascii_case("optimal") {
            return Ok(OffsetSpec::Auto);
        }
        let v = parse_real("offset", s)?;
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Config(format!("offset {v} must lie in (0, 1)")));
        }
        Ok(OffsetSpec::Value(v))
    }
}

impl fmt::Display for OffsetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffsetSpec::Auto => f.write_str("auto"),
            OffsetSpec::Value(v) => write!(f, "{v}"),
        }
    }
}

fn parse_real(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key}: '{s}' is not finite")));
    }
    Ok(v)
}

fn parse_count(key: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: '{s}' is not a non-negative integer")))
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(s: &str, f: F) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(f)
        .collect()
}

/// One experiment description; list-valued fields drive the multi-cell
/// commands.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub pde: PdeKind,
    pub h1: f64,
    pub h2: f64,
    pub lambda: f64,
    pub basis: String,
    pub elements: usize,
    pub nodes: usize,
    pub offset: OffsetSpec,
    pub bc: BcKind,
    pub exact: ExactSolution,
    pub solver: String,
    pub integrator: String,
    pub out: Option<PathBuf>,
    /// Offsets for `sweep-s`; empty means the default grid.
    pub grid: Vec<f64>,
    /// Rows of `table`.
    pub bases: Vec<String>,
    /// Columns of `table` and `compare`.
    pub element_list: Vec<usize>,
    pub bcs: Vec<BcKind>,
    /// `(h1, h2)` rows of `compare`.
    pub h_values: Vec<(f64, f64)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: Domain::Square,
            pde: PdeKind::Laplace,
            h1: 0.0,
            h2: 0.0,
            lambda: 0.0,
            basis: "gaussian".into(),
            elements: 40,
            nodes: 16,
            offset: OffsetSpec::Auto,
            bc: BcKind::Dirichlet,
            exact: ExactSolution::Poly,
            solver: "auto".into(),
            integrator: "gauss".into(),
            out: None,
            grid: Vec::new(),
            bases: Vec::new(),
            element_list: Vec::new(),
            bcs: Vec::new(),
            h_values: Vec::new(),
        }
    }
}

pub const CONFIG_KEYS: [&str; 19] = [
    "domain", "pde", "h1", "h2", "lambda", "basis", "elements", "nodes", "offset", "bc", "exact",
    "solver", "integrator", "out", "grid", "bases", "element-list", "bcs", "h-values",
];

impl ExperimentConfig {
    /// Sets one field from its textual form. Keys match the long flags.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-").to_ascii_lowercase();
        match key.as_str() {
            "domain" => self.domain = value.parse()?,
            "pde" => self.pde = value.parse()?,
            "h1" => self.h1 = parse_real("h1", value)?,
            "h2" => self.h2 = parse_real("h2", value)?,
            "lambda" => self.lambda = parse_real("lambda", value)?,
            "basis" => {
                basis_registry().get(value)?;
                self.basis = value.trim().to_ascii_lowercase();
            }
            "elements" => self.elements = parse_count("elements", value)?,
            "nodes" => self.nodes = parse_count("nodes", value)?,
            "offset" => self.offset = value.parse()?,
            "bc" => self.bc = value.parse()?,
            "exact" => self.exact = value.parse()?,
            "solver" => {
                solver_registry().get(value)?;
                self.solver = value.trim().to_ascii_lowercase();
            }
            "integrator" => {
                integrator_registry().get(value)?;
                self.integrator = value.trim().to_ascii_lowercase();
            }
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "grid" => self.grid = parse_list(value, |s| parse_real("grid", s))?,
            "bases" => {
                let reg = basis_registry();
                self.bases = parse_list(value, |s| {
                    reg.get(s)?;
                    Ok(s.to_ascii_lowercase())
                })?
            }
            "element-list" => {
                self.element_list = parse_list(value, |s| parse_count("element-list", s))?
            }
            "bcs" => self.bcs = parse_list(value, str::parse)?,
            "h-values" => {
                self.h_values = parse_list(value, |pair| {
                    let (a, b) = pair.split_once(':').ok_or_else(|| {
                        Error::Config(format!("h-values: '{pair}' is not of the form h1:h2"))
                    })?;
                    Ok((parse_real("h1", a)?, parse_real("h2", b)?))
                })?
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown key '{other}' (known: {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse_file_contents(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.apply(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.parse_file_contents(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn pde_coefficients(&self) -> Result<PdeCoefficients> {
        match self.pde {
            PdeKind::Laplace => {
                if self.h1 != 0.0 || self.h2 != 0.0 || self.lambda != 0.0 {
                    return Err(Error::Config(
                        "pde = laplace takes no h1, h2 or lambda; use pde = advdiff".into(),
                    ));
                }
                Ok(PdeCoefficients::LAPLACE)
            }
            PdeKind::AdvDiff => PdeCoefficients::new(Point2::new(self.h1, self.h2), self.lambda),
        }
    }

    /// Checks the exact solution against the PDE and the discretization
    /// parameters against their ranges.
    pub fn validate(&self) -> Result<()> {
        let pde = self.pde_coefficients()?;
        check_exact(self.exact, &pde)?;
        if !(4..=64).contains(&self.nodes) {
            return Err(Error::Config(format!("nodes = {} must lie in 4..=64", self.nodes)));
        }
        self.domain.mesh(self.elements)?;
        if let OffsetSpec::Value(s) = self.offset {
            check_offset(s, self.nodes)?;
        }
        Ok(())
    }

    fn case(&self) -> Result<Case> {
        Ok(Case {
            domain: self.domain,
            pde: self.pde_coefficients()?,
            basis: self.basis.clone(),
            elements: self.elements,
            nodes: self.nodes,
            s: self.offset.resolve(self.nodes)?,
            bc: self.bc,
            exact: self.exact,
            solver: self.solver.clone(),
            integrator: self.integrator.clone(),
        })
    }
}

/// Rejects an exact solution that does not solve the PDE.
pub fn check_exact(exact: ExactSolution, pde: &PdeCoefficients) -> Result<()> {
    // residuals are u times a constant for every supported pair; sampling
    // two points catches both the constant and the linear terms
    let probes = [Point2::new(0.3, -0.2), Point2::new(-0.7, 0.5)];
    let worst = probes
        .iter()
        .map(|&p| (exact.residual(pde, p) / exact.value(p).abs().max(1.0)).abs())
        .fold(0.0, f64::max);
    if worst > 1e-12 {
        let hint = match exact {
            ExactSolution::ExpSum => format!(
                "; e^(x+y) needs lambda = -(2 + h1 + h2) = {}",
                -(2.0 + pde.h().x + pde.h().y)
            ),
            _ => "; it is harmonic and needs pde = laplace".into(),
        };
        return Err(Error::Config(format!(
            "exact solution {exact} does not satisfy the PDE: residual |lap u + h.grad u + lambda u| / |u| = {worst:.3e}{hint}"
        )));
    }
    Ok(())
}

fn check_offset(s: f64, nodes: usize) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "0 < s < 1",
        });
    }
    let rule = gauss_legendre(nodes)?;
    if let Some(&node) = rule.nodes.iter().find(|t| (t.abs() - s).abs() < 1e-13) {
        return Err(Error::NodeCoincidence { s, node });
    }
    Ok(())
}

/// One fully resolved solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub domain: Domain,
    pub pde: PdeCoefficients,
    pub basis: String,
    pub elements: usize,
    pub nodes: usize,
    pub s: f64,
    pub bc: BcKind,
    pub exact: ExactSolution,
    pub solver: String,
    pub integrator: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    /// Mean flux error at the sources.
    pub flux_error: f64,
    /// Mean potential error at the scaled interior points.
    pub interior_error: f64,
    pub condition_estimate: f64,
    pub method: &'static str,
    pub warnings: Vec<String>,
}

pub fn run_case(case: &Case) -> Result<CaseResult> {
    check_exact(case.exact, &case.pde)?;
    check_offset(case.s, case.nodes)?;
    let mesh = case.domain.mesh(case.elements)?;
    let rule = gauss_legendre(case.nodes)?;
    let sources = place_sources(&mesh, case.s)?;
    let basis = basis_registry().get(&case.basis)?(sources.len())?;
    let integrator = integrator_registry().get(&case.integrator)?();
    let solver = solver_registry().get(&case.solver)?();

    let mask = case.domain.dirichlet_mask(case.bc, &sources);
    let u: Vec<f64> = sources.points.iter().map(|&p| case.exact.value(p)).collect();
    let v: Vec<f64> = sources
        .points
        .iter()
        .zip(&sources.normals)
        .map(|(&p, &n)| case.exact.flux(p, n))
        .collect();
    let bc = BoundaryConditionSpec::from_mask(&mask, &u, &v)?;

    let disc = Discretization::new(mesh, &rule, sources, basis, &case.pde)?;
    let (system, rhs) = boundary_system(&disc, integrator.as_ref(), &bc)?;
    let sol = solve_with(&system, &rhs, solver.as_ref())?;
    let exact = case.exact;
    let flux = flux_error(&sol, &disc.sources, |p, n| exact.flux(p, n))?;

    let pts = interior_points(&disc.sources.points, INTERIOR_FACTOR);
    let ops = interior_operators(&disc, integrator.as_ref(), &pts)?;
    let values = interior_potential(&sol, &ops)?;
    let interior = interior_error(&values, &pts, |p| exact.value(p))?;
    Ok(CaseResult {
        flux_error: flux,
        interior_error: interior,
        condition_estimate: sol.condition_estimate,
        method: sol.method,
        warnings: sol.warnings.iter().map(|w| format!("{w:?}")).collect(),
    })
}

/// A CSV table: header plus string cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        wtr.write_record(&self.header)?;
        for r in &self.rows {
            wtr.write_record(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// Writes to `path`, or to stdout when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => self.write_csv(std::fs::File::create(p)?),
            None => self.write_csv(std::io::stdout().lock()),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Scientific notation with 6 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.5e}")
    }
}

/// Output of a command: the CSV table and human-readable notes.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    pub notes: Vec<String>,
    /// Checks the command asserts; a failed one is reported, not fatal.
    pub failures: Vec<String>,
}

/// Zeros of `Err^0` for an `n`-point rule and the offset that would be used.
pub fn cmd_optimal_points(n: usize) -> Result<(Report, OffsetChoice, ErrorProfile)> {
    let choice = optimal_offset(n)?;
    let rule = gauss_legendre(n)?;
    let zeros = find_err0_zeros(&rule);
    let mut table = Table::new(&["zero_index", "s"]);
    for (i, z) in zeros.iter().enumerate() {
        table.rows.push(vec![(i + 1).to_string(), format_number(*z)]);
    }
    let profile = error_profile(&rule, 1000);
    let notes = vec![format!(
        "n = {n}: {} zeros of Err0, s_opt = {} ({:?})",
        zeros.len(),
        choice.s_opt,
        choice.provenance
    )];
    Ok((
        Report {
            table,
            notes,
            failures: Vec::new(),
        },
        choice,
        profile,
    ))
}

pub fn profile_table(profile: &ErrorProfile) -> Table {
    let mut t = Table::new(&["s", "err0", "err1", "err2"]);
    for p in &profile.samples {
        t.rows.push(vec![
            format_number(p.s),
            format_number(p.err0),
            format_number(p.err1),
            format_number(p.err2),
        ]);
    }
    t
}

/// Moves grid offsets off quadrature nodes.
pub fn sweep_grid(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let rule = gauss_legendre(cfg.nodes)?;
    let raw: Vec<f64> = if cfg.grid.is_empty() {
        let (a, b) = SWEEP_RANGE;
        let m = DEFAULT_SWEEP_POINTS;
        (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect()
    } else {
        cfg.grid.clone()
    };
    Ok(raw
        .into_iter()
        .map(|s| {
            match rule.nodes.iter().find(|t| (t.abs() - s).abs() < SWEEP_NODE_SHIFT) {
                Some(t) => t.abs() + SWEEP_NODE_SHIFT,
                None => s,
            }
        })
        .collect())
}

/// `Er(s)` over a grid of offsets; failed points become NaN rows.
pub fn cmd_sweep_s(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let base = cfg.case()?;
    let grid = sweep_grid(cfg)?;
    let results: Vec<Result<CaseResult>> = grid
        .par_iter()
        .map(|&s| {
            let mut case = base.clone();
            case.s = s;
            run_case(&case)
        })
        .collect();
    let mut table = Table::new(&["s", "flux_error", "interior_error"]);
    let mut notes = Vec::new();
    for (s, r) in grid.iter().zip(results) {
        match r {
            Ok(r) => table.rows.push(vec![
                format_number(*s),
                format_number(r.flux_error),
                format_number(r.interior_error),
            ]),
            Err(e) => {
                notes.push(format!("warning: s = {s}: {e}"));
                table
                    .rows
                    .push(vec![format_number(*s), "NaN".into(), "NaN".into()]);
            }
        }
    }
    Ok(Report {
        table,
        notes,
        failures: Vec::new(),
    })
}

/// Interior errors over basis x N x boundary condition.
pub fn cmd_table(cfg: &ExperimentConfig) -> Result<Report> {
    let mut probe = cfg.clone();
    let bases = if cfg.bases.is_empty() {
        ["gaussian", "imq", "tps", "phs", "c0"].map(String::from).to_vec()
    } else {
        cfg.bases.clone()
    };
    let ns = if cfg.element_list.is_empty() {
        vec![8, 16, 32, 64, 128]
    } else {
        cfg.element_list.clone()
    };
    let bcs = if cfg.bcs.is_empty() {
        vec![BcKind::Dirichlet, BcKind::Mixed]
    } else {
        cfg.bcs.clone()
    };
    for &n in &ns {
        probe.elements = n;
        probe.validate()?;
    }
    let mut cells = Vec::new();
    for &bc in &bcs {
        for b in &bases {
            for &n in &ns {
                let mut case = cfg.case()?;
                case.bc = bc;
                case.basis = b.clone();
                case.elements = n;
                cells.push(case);
            }
        }
    }
    let results: Vec<Result<CaseResult>> = cells.par_iter().map(run_case).collect();
    let mut table = Table::new(&["bc", "rbf", "N", "error"]);
    let mut notes = Vec::new();
    for (case, r) in cells.iter().zip(results) {
        let cell = match r {
            Ok(r) => format_number(r.interior_error),
            Err(e) => {
                notes.push(format!("{} {} N={}: {e}", case.bc, case.basis, case.elements));
                format!("FAIL({e})")
            }
        };
        table
            .rows
            .push(vec![case.bc.to_string(), case.basis.clone(), case.elements.to_string(), cell]);
    }
    Ok(Report {
        table,
        notes,
        failures: Vec::new(),
    })
}

/// Radial (the configured radial basis) against linear BEM on the
/// advection-diffusion problem with `u = e^(x+y)`.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Report> {
    let h_values = if cfg.h_values.is_empty() {
        vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]
    } else {
        cfg.h_values.clone()
    };
    let ns = if cfg.element_list.is_empty() {
        vec![40, 80, 120, 160, 200]
    } else {
        cfg.element_list.clone()
    };
    let radial = if cfg.basis == "linear" {
        "gaussian".to_string()
    } else {
        cfg.basis.clone()
    };
    let mut cells = Vec::new();
    for &(h1, h2) in &h_values {
        let mut c = cfg.clone();
        c.pde = PdeKind::AdvDiff;
        c.exact = ExactSolution::ExpSum;
        c.h1 = h1;
        c.h2 = h2;
        c.lambda = -(2.0 + h1 + h2);
        for &n in &ns {
            c.elements = n;
            c.validate()?;
            for basis in [radial.as_str(), "linear"] {
                let mut case = c.case()?;
                case.basis = basis.to_string();
                cells.push((h1, h2, case));
            }
        }
    }
    let results: Vec<Result<CaseResult>> = cells.par_iter().map(|(_, _, c)| run_case(c)).collect();
    let mut table = Table::new(&["h1", "h2", "N", "method", "error"]);
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    let errors: Vec<f64> = results
        .iter()
        .map(|r| r.as_ref().map(|r| r.interior_error).unwrap_or(f64::NAN))
        .collect();
    for (i, ((h1, h2, case), r)) in cells.iter().zip(&results).enumerate() {
        if let Err(e) = r {
            notes.push(format!("h=({h1},{h2}) N={} {}: {e}", case.elements, case.basis));
        }
        table.rows.push(vec![
            format_number(*h1),
            format_number(*h2),
            case.elements.to_string(),
            if case.basis == "linear" { "linear".into() } else { "radial".into() },
            format_number(errors[i]),
        ]);
        if i % 2 == 1 && !(errors[i - 1] < errors[i]) {
            failures.push(format!(
                "h=({h1},{h2}) N={}: radial {} is not below linear {}",
                case.elements,
                format_number(errors[i - 1]),
                format_number(errors[i])
            ));
        }
    }
    Ok(Report {
        table,
        notes,
        failures,
    })
}

/// Interior error with the plain rule against the graded reference.
pub fn cmd_parity(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let mut case = cfg.case()?;
    if case.basis != "linear" || !case.pde.is_laplace() || case.domain != Domain::Square {
        return Err(Error::Config(
            "parity runs the linear basis on the Laplace square problem".into(),
        ));
    }
    case.integrator = "gauss".into();
    let gauss = run_case(&case)?;
    case.integrator = "reference".into();
    let reference = run_case(&case)?;
    let rel = (gauss.interior_error - reference.interior_error).abs() / reference.interior_error;
    let pass = rel < PARITY_TOLERANCE;
    let mut table = Table::new(&[
        "exact",
        "N",
        "gauss_error",
        "reference_error",
        "relative_difference",
        "pass",
    ]);
    table.rows.push(vec![
        case.exact.to_string(),
        case.elements.to_string(),
        format_number(gauss.interior_error),
        format_number(reference.interior_error),
        format_number(rel),
        pass.to_string(),
    ]);
    let failures = if pass {
        Vec::new()
    } else {
        vec![format!("relative difference {rel:.3e} exceeds {PARITY_TOLERANCE}")]
    };
    Ok(Report {
        table,
        notes: Vec::new(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_solutions_satisfy_their_pdes() {
        let lap = PdeCoefficients::LAPLACE;
        for e in [ExactSolution::Poly, ExactSolution::ExpCos] {
            check_exact(e, &lap).unwrap();
        }
        for (h1, h2) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)] {
            let pde = PdeCoefficients::new(Point2::new(h1, h2), -(2.0 + h1 + h2)).unwrap();
            check_exact(ExactSolution::ExpSum, &pde).unwrap();
        }
    }

    #[test]
    fn expsum_with_wrong_lambda_cites_residual() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply("pde", "advdiff").unwrap();
        cfg.apply("exact", "expsum").unwrap();
        cfg.apply("h1", "1").unwrap();
        cfg.apply("lambda", "-2").unwrap();
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("residual"), "{msg}");
        assert!(msg.contains("-3"), "{msg}");
        cfg.apply("lambda", "-3").unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn harmonic_exact_needs_laplace() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply("pde", "advdiff").unwrap();
        cfg.apply("lambda", "-1").unwrap();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.apply("h1", "1").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn flux_matches_finite_difference() {
        let p = Point2::new(0.3, -0.4);
        let n = Point2::new(0.6, 0.8);
        for e in [ExactSolution::Poly, ExactSolution::ExpCos, ExactSolution::ExpSum] {
            let h = 1e-6;
            let fd = (e.value(p + n * h) - e.value(p - n * h)) / (2.0 * h);
            assert_abs_diff_eq!(e.flux(p, n), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn config_file_and_overrides() {
        let mut cfg = ExperimentConfig::default();
        cfg.parse_file_contents(
            "# comment\ndomain = flower\nbasis = PHS\nelements = 64 # trailing\nh_values = 0:0, 1:1\nbcs = dirichlet,mixed\n",
        )
        .unwrap();
        assert_eq!(cfg.domain, Domain::Flower);
        assert_eq!(cfg.basis, "phs");
        assert_eq!(cfg.elements, 64);
        assert_eq!(cfg.h_values, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(cfg.bcs, vec![BcKind::Dirichlet, BcKind::Mixed]);
        cfg.apply("elements", "32").unwrap();
        assert_eq!(cfg.elements, 32);
        assert!(cfg.parse_file_contents("elements 40").is_err());
        assert!(cfg.parse_file_contents("colour = red").is_err());
        assert!(cfg.apply("basis", "sinc").is_err());
        assert!(cfg.apply("offset", "1.5").is_err());
        assert_eq!(cfg.offset, OffsetSpec::Auto);
        cfg.apply("offset", "0.43").unwrap();
        assert_eq!(cfg.offset, OffsetSpec::Value(0.43));
    }

    #[test]
    fn keywords_round_trip() {
        for d in [Domain::Square, Domain::Flower] {
            assert_eq!(d.to_string().parse::<Domain>().unwrap(), d);
        }
        for e in [ExactSolution::Poly, ExactSolution::ExpCos, ExactSolution::ExpSum] {
            assert_eq!(e.to_string().parse::<ExactSolution>().unwrap(), e);
        }
        assert!("circle".parse::<Domain>().is_err());
    }

    #[test]
    fn validation_rejects_bad_discretizations() {
        let mut cfg = ExperimentConfig::default();
        cfg.elements = 6;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.nodes = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.nodes = 2;
        cfg.offset = OffsetSpec::Value(1.0 / 3f64.sqrt());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn node_on_offset_is_rejected() {
        let rule = gauss_legendre(8).unwrap();
        let node = rule.nodes[6];
        assert!(matches!(check_offset(node, 8), Err(Error::NodeCoincidence { .. })));
    }

    #[test]
    fn sweep_grid_avoids_nodes() {
        let mut cfg = ExperimentConfig::default();
        cfg.nodes = 8;
        let rule = gauss_legendre(8).unwrap();
        cfg.grid = vec![rule.nodes[7], 0.5];
        let g = sweep_grid(&cfg).unwrap();
        assert_abs_diff_eq!(g[0], rule.nodes[7] + SWEEP_NODE_SHIFT, epsilon = 1e-15);
        assert_eq!(g[1], 0.5);
        cfg.grid.clear();
        let g = sweep_grid(&cfg).unwrap();
        assert_eq!(g.len(), DEFAULT_SWEEP_POINTS);
        assert!(g.iter().all(|&s| s > 0.0 && s < 1.0));
        for s in g {
            for t in &rule.nodes {
                assert!((t.abs() - s).abs() >= SWEEP_NODE_SHIFT * 0.5);
            }
        }
    }

    #[test]
    fn single_point_sweep_has_one_row() {
        let mut cfg = ExperimentConfig::default();
        cfg.basis = "linear".into();
        cfg.elements = 8;
        cfg.grid = vec![0.43];
        let r = cmd_sweep_s(&cfg).unwrap();
        assert_eq!(r.table.rows.len(), 1);
        assert_eq!(r.table.header, vec!["s", "flux_error", "interior_error"]);
    }

    #[test]
    fn mixed_masks() {
        let mesh = BoundaryMesh::square(8, 1.0).unwrap();
        let src = place_sources(&mesh, 0.5).unwrap();
        let m = Domain::Square.dirichlet_mask(BcKind::Mixed, &src);
        for (i, p) in src.points.iter().enumerate() {
            assert_eq!(m[i], p.y.abs() == 1.0);
        }
        let mesh = BoundaryMesh::flower(16).unwrap();
        let src = place_sources(&mesh, 0.5).unwrap();
        let m = Domain::Flower.dirichlet_mask(BcKind::Mixed, &src);
        assert_eq!(m.iter().filter(|x| **x).count(), 16);
        assert!(m[..16].iter().all(|x| *x));
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.000123456789), "1.23457e-4");
        assert_eq!(format_number(-2.0), "-2.00000e0");
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn optimal_points_for_four_nodes() {
        let (r, choice, _) = cmd_optimal_points(4).unwrap();
        assert!(!r.table.rows.is_empty());
        assert_eq!(choice.provenance, crate::singular_opt::OffsetProvenance::ComputedZero);
        assert!(cmd_optimal_points(3).is_err());
    }

    #[test]
    fn run_case_square_linear_poly() {
        let case = Case {
            domain: Domain::Square,
            pde: PdeCoefficients::LAPLACE,
            basis: "linear".into(),
            elements: 40,
            nodes: 8,
            s: 0.58,
            bc: BcKind::Dirichlet,
            exact: ExactSolution::Poly,
            solver: "lu".into(),
            integrator: "gauss".into(),
        };
        let r = run_case(&case).unwrap();
        assert!(r.flux_error < 1e-2, "{}", r.flux_error);
        assert!(r.interior_error < 1e-3, "{}", r.interior_error);
    }

    #[test]
    fn doubling_elements_does_not_raise_interior_error() {
        for exact in [ExactSolution::Poly, ExactSolution::ExpCos] {
            let err = |elements| {
                let case = Case {
                    domain: Domain::Square,
                    pde: PdeCoefficients::LAPLACE,
                    basis: "gaussian".into(),
                    elements,
                    nodes: 16,
                    s: OffsetSpec::Auto.resolve(16).unwrap(),
                    bc: BcKind::Dirichlet,
                    exact,
                    solver: "auto".into(),
                    integrator: "gauss".into(),
                };
                run_case(&case).unwrap().interior_error
            };
            let (e40, e80) = (err(40), err(80));
            assert!(e80 <= e40, "{exact}: {e40:e} -> {e80:e}");
        }
    }

    #[test]
    fn table_layout_and_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.bases = vec!["gaussian".into()];
        cfg.element_list = vec![8];
        cfg.bcs = vec![BcKind::Dirichlet];
        cfg.solver = "lu".into();
        let r = cmd_table(&cfg).unwrap();
        assert_eq!(r.table.rows.len(), 1);
        assert_eq!(r.table.rows[0][..3], ["dirichlet", "gaussian", "8"]);
        cfg.element_list = vec![6];
        assert!(cmd_table(&cfg).is_err());
    }
}
