//! The planar coupling graph: neighbors, connected components, their shapes,
//! and the homogeneous linear system on each component.

use num_complex::Complex64;
use serde::Serialize;

use crate::coupling::{coupling_set, membership_flags, planar_representations, CouplingPoint, MembershipFlags, BOUNDARY_FLAG_REL};
use crate::error::{Error, Result};
use crate::geometry::{ScanConfig, SigmaClass, Vector};
use crate::herglotz::{CMatrix, CVector, CouplingCoefficient};
use crate::linalg::null_space;

/// Relative distance under which two vertices are identified.
pub const VERTEX_MERGE_REL: f64 = 1e-9;
const KERNEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Shape {
    TwoVertexPath,
    ThreeVertexStar,
    FourVertexPath,
    FourVertexCycle,
}

impl Shape {
    pub fn from_counts(vertices: usize, edges: usize) -> Option<Shape> {
        match (vertices, edges) {
            (2, 1) => Some(Shape::TwoVertexPath),
            (3, 2) => Some(Shape::ThreeVertexStar),
            (4, 3) => Some(Shape::FourVertexPath),
            (4, 4) => Some(Shape::FourVertexCycle),
            _ => None,
        }
    }

    pub fn counts(self) -> (usize, usize) {
        match self {
            Shape::TwoVertexPath => (2, 1),
            Shape::ThreeVertexStar => (3, 2),
            Shape::FourVertexPath => (4, 3),
            Shape::FourVertexCycle => (4, 4),
        }
    }
}

/// Position of a vertex relative to the anchor pair `(η, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum VertexRole {
    /// `η - σ`
    Y,
    /// `η - H_νσ`
    Z1,
    /// `H_νη - σ`
    Z2,
    /// `H_νη - H_νσ`
    Z3,
}

/// Edge `b(σ) g(from) + g(to) = 0`, generated by `from = η - σ`, `to = η - H_νσ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub eta: Vector,
    pub sigma: Vector,
}

/// The predicates on the anchor pair that decide which edges exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CaseConditions {
    /// `η ∈ -Σ₂`
    pub eta_in_minus_sigma2: bool,
    /// `σ ∈ S_{-e₂}`
    pub sigma_lower: bool,
    /// `H_νσ ∈ S_{-e₂}`
    pub h_sigma_lower: bool,
    /// `H_νη ∈ S_{e₂}`
    pub h_eta_upper: bool,
    /// Some predicate was decided within the boundary margin.
    pub boundary: bool,
}

impl CaseConditions {
    pub fn evaluate(cfg: &ScanConfig, eta: &Vector, sigma: &Vector) -> Self {
        let me = -eta;
        let hs = cfg.reflect(sigma);
        let he = cfg.reflect(eta);
        let hw = cfg.reflected_omega();
        let margins = [
            me.dot(&cfg.omega) - cfg.tol,
            me.dot(&hw) - cfg.tol,
            -sigma[1] - cfg.tol,
            -hs[1] - cfg.tol,
            he[1] - cfg.tol,
        ];
        let boundary = margins.iter().any(|m| m.abs() < BOUNDARY_FLAG_REL * cfg.k0);
        Self {
            eta_in_minus_sigma2: cfg.in_sigma2(&me),
            sigma_lower: cfg.in_lower(sigma),
            h_sigma_lower: cfg.in_lower(&hs),
            h_eta_upper: cfg.in_upper(&he),
            boundary,
        }
    }

    /// Edges `{y,z₁}`, `{y,z₂}`, `{z₁,z₃}`, `{z₂,z₃}` implied by the predicates.
    pub fn edges(&self) -> [bool; 4] {
        let a = self.eta_in_minus_sigma2;
        [true, a && self.sigma_lower, a && self.h_sigma_lower, self.h_eta_upper]
    }

    /// Shape of the component of `y` in the predicted edge set.
    pub fn predicted_shape(&self) -> Option<Shape> {
        // vertices 0=y, 1=z1, 2=z2, 3=z3
        let pairs = [(0, 1), (0, 2), (1, 3), (2, 3)];
        let on = self.edges();
        let mut reach = [true, false, false, false];
        for _ in 0..4 {
            for (k, &(i, j)) in pairs.iter().enumerate() {
                if on[k] && (reach[i] || reach[j]) {
                    reach[i] = true;
                    reach[j] = true;
                }
            }
        }
        let v = reach.iter().filter(|r| **r).count();
        let e = pairs.iter().enumerate().filter(|(k, (i, _))| on[*k] && reach[*i]).count();
        Shape::from_counts(v, e)
    }

    /// Which of the four classification cases these predicates satisfy, if any.
    pub fn case_number(&self) -> Option<u8> {
        let a = self.eta_in_minus_sigma2;
        let (b, c, d) = (self.sigma_lower, self.h_sigma_lower, self.h_eta_upper);
        if !a || (!b && !c) {
            Some(1)
        } else if b && !d && !c {
            Some(2)
        } else if b && !d && c {
            Some(3)
        } else if b && d && c {
            Some(4)
        } else {
            None
        }
    }
}

pub fn case_shape(case: u8) -> Shape {
    match case {
        1 => Shape::TwoVertexPath,
        2 => Shape::ThreeVertexStar,
        3 => Shape::FourVertexPath,
        _ => Shape::FourVertexCycle,
    }
}

/// `F_y` for `d = 2` with the generating pair of each neighbor.
pub fn neighbors2d(cfg: &ScanConfig, y: &Vector) -> Result<Vec<CouplingPoint>> {
    if cfg.d != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cfg.d });
    }
    let f = coupling_set(cfg, y)?;
    let pts = f.points().to_vec();
    if pts.is_empty() {
        return Err(Error::EmptyCouplingSet);
    }
    Ok(pts)
}

/// Connected component of the coupling graph through a non-degenerate point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub vertices: Vec<Vector>,
    pub roles: Vec<VertexRole>,
    pub edges: Vec<Edge>,
    pub shape: Shape,
    pub anchor_eta: Vector,
    pub anchor_sigma: Vector,
    pub conditions: CaseConditions,
    /// Classification case realised by some reference pair of the component.
    pub case_number: Option<u8>,
}

impl Component {
    pub fn index_of(&self, role: VertexRole) -> Option<usize> {
        self.roles.iter().position(|r| *r == role)
    }
}

fn find_vertex(vs: &[Vector], p: &Vector, tol: f64) -> Option<usize> {
    vs.iter().position(|v| (v - p).norm() <= tol)
}

/// Breadth-first search from `y ∈ 𝒴₂'`, ordered as `(y, z₁, z₂, z₃)`.
pub fn build_component(cfg: &ScanConfig, y: &Vector) -> Result<Component> {
    let flags = membership_flags(cfg, y)?;
    if !flags.in_y2 {
        return Err(Error::EmptyCouplingSet);
    }
    if !flags.nondegenerate {
        return Err(Error::DegenerateVertex);
    }
    let rep = planar_representations(cfg, y)?
        .into_iter()
        .find(|r| r.class == SigmaClass::Sigma2)
        .ok_or(Error::EmptyCouplingSet)?;
    let (eta, sigma) = (rep.eta, rep.sigma);
    let tol = VERTEX_MERGE_REL * cfg.k0;

    let mut vertices = vec![y.clone()];
    let mut edges: Vec<Edge> = Vec::new();
    let mut next = 0;
    while next < vertices.len() {
        let v = vertices[next].clone();
        for nb in neighbors2d(cfg, &v)? {
            let j = match find_vertex(&vertices, &nb.z, tol) {
                Some(j) => j,
                None => {
                    if vertices.len() == 4 {
                        return Err(Error::ClassificationContradiction("component has more than four vertices".into()));
                    }
                    vertices.push(nb.z.clone());
                    vertices.len() - 1
                }
            };
            if j == next {
                return Err(Error::DegenerateVertex);
            }
            let dup = edges.iter().any(|e| (e.from == next && e.to == j) || (e.from == j && e.to == next));
            if !dup {
                edges.push(Edge { from: next, to: j, eta: nb.eta, sigma: nb.sigma });
            }
        }
        next += 1;
    }

    // reorder into (y, z1, z2, z3)
    let he = cfg.reflect(&eta);
    let hs = cfg.reflect(&sigma);
    let expected =
        [(VertexRole::Y, y.clone()), (VertexRole::Z1, &eta - &hs), (VertexRole::Z2, &he - &sigma), (VertexRole::Z3, &he - &hs)];
    let mut roles = Vec::with_capacity(vertices.len());
    for v in &vertices {
        let role = expected
            .iter()
            .find(|(_, p)| (p - v).norm() <= tol)
            .map(|(r, _)| *r)
            .ok_or_else(|| Error::ClassificationContradiction("vertex outside {y, z1, z2, z3}".into()))?;
        roles.push(role);
    }
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by_key(|&i| roles[i]);
    let mut inv = vec![0; vertices.len()];
    for (new, &old) in order.iter().enumerate() {
        inv[old] = new;
    }
    let vertices: Vec<Vector> = order.iter().map(|&i| vertices[i].clone()).collect();
    let roles: Vec<VertexRole> = order.iter().map(|&i| roles[i]).collect();
    for e in &mut edges {
        e.from = inv[e.from];
        e.to = inv[e.to];
    }
    edges.sort_by_key(|e| (e.from.min(e.to), e.from.max(e.to)));

    let shape = Shape::from_counts(vertices.len(), edges.len()).ok_or_else(|| {
        Error::ClassificationContradiction(format!("{} vertices with {} edges", vertices.len(), edges.len()))
    })?;
    let conditions = CaseConditions::evaluate(cfg, &eta, &sigma);
    let case_number = edges
        .iter()
        .map(|e| CaseConditions::evaluate(cfg, &e.eta, &e.sigma).case_number())
        .chain(std::iter::once(conditions.case_number()))
        .flatten()
        .find(|c| case_shape(*c) == shape);
    Ok(Component { vertices, roles, edges, shape, anchor_eta: eta, anchor_sigma: sigma, conditions, case_number })
}

/// Matrix of the homogeneous equations on a component, with its kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSystem {
    pub matrix: CMatrix,
    pub rhs: Option<CVector>,
    pub kernel: Vec<CVector>,
}

impl ComponentSystem {
    /// One row per edge: `coeffs[k]` on `edges[k].0` and 1 on `edges[k].1`.
    pub fn from_edge_coefficients(n: usize, edges: &[(usize, usize)], coeffs: &[Complex64], rhs: Option<CVector>) -> Self {
        let mut matrix = CMatrix::zeros(edges.len(), n);
        for (k, (&(i, j), c)) in edges.iter().zip(coeffs).enumerate() {
            matrix[(k, i)] = *c;
            matrix[(k, j)] = Complex64::new(1.0, 0.0);
        }
        let kernel = null_space(&matrix, KERNEL_TOL);
        Self { matrix, rhs, kernel }
    }

    pub fn residual(&self, g: &CVector) -> f64 {
        let r = &self.matrix * g;
        match &self.rhs {
            Some(b) => (r - b).norm(),
            None => r.norm(),
        }
    }
}

pub fn component_system(comp: &Component, bc: &CouplingCoefficient, rhs: Option<CVector>) -> ComponentSystem {
    let pairs: Vec<(usize, usize)> = comp.edges.iter().map(|e| (e.from, e.to)).collect();
    let coeffs: Vec<Complex64> = comp.edges.iter().map(|e| bc.eval_sigma(&e.sigma)).collect();
    ComponentSystem::from_edge_coefficients(comp.vertices.len(), &pairs, &coeffs, rhs)
}

pub fn vertex_flags(cfg: &ScanConfig, comp: &Component) -> Result<Vec<MembershipFlags>> {
    comp.vertices.iter().map(|v| membership_flags(cfg, v)).collect()
}

/// Vertices whose value is forced to zero by the homogeneous system.
pub fn unique_vertices(comp: &Component, flags: &[MembershipFlags]) -> Result<Vec<usize>> {
    if !flags.iter().any(|f| f.in_y1) {
        return Ok(Vec::new());
    }
    if comp.vertices.len() > 2 {
        return Err(Error::ClassificationContradiction(format!(
            "{:?} component contains a vertex of the direct region",
            comp.shape
        )));
    }
    Ok((0..comp.vertices.len()).collect())
}

/// JSON form of a component and its kernel.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentReport {
    pub vertices: Vec<[f64; 2]>,
    pub roles: Vec<VertexRole>,
    pub edges: Vec<[usize; 2]>,
    pub shape: Shape,
    pub anchor_eta: [f64; 2],
    pub anchor_sigma: [f64; 2],
    pub conditions: CaseConditions,
    pub case_number: Option<u8>,
    pub kernel: Vec<Vec<[f64; 2]>>,
    pub in_y1: Vec<bool>,
    pub unique_vertices: Vec<usize>,
}

fn pt(v: &Vector) -> [f64; 2] {
    [v[0], v[1]]
}

pub fn component_report(cfg: &ScanConfig, comp: &Component, bc: &CouplingCoefficient) -> Result<ComponentReport> {
    let sys = component_system(comp, bc, None);
    let flags = vertex_flags(cfg, comp)?;
    Ok(ComponentReport {
        vertices: comp.vertices.iter().map(pt).collect(),
        roles: comp.roles.clone(),
        edges: comp.edges.iter().map(|e| [e.from, e.to]).collect(),
        shape: comp.shape,
        anchor_eta: pt(&comp.anchor_eta),
        anchor_sigma: pt(&comp.anchor_sigma),
        conditions: comp.conditions,
        case_number: comp.case_number,
        kernel: sys.kernel.iter().map(|k| k.iter().map(|z| [z.re, z.im]).collect()).collect(),
        in_y1: flags.iter().map(|f| f.in_y1).collect(),
        unique_vertices: unique_vertices(comp, &flags)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{polar, vector};
    use crate::herglotz::HerglotzDensity;

    fn cfg_a() -> ScanConfig {
        ScanConfig::planar(1.0, 90.0, 45.0, 0.5).unwrap()
    }

    fn cfg_d() -> ScanConfig {
        ScanConfig::planar(1.0, 0.0, 45.0, 0.5).unwrap()
    }

    fn cfg_e() -> ScanConfig {
        ScanConfig::planar(1.0, 0.0, 120.0, 0.5).unwrap()
    }

    #[test]
    fn neighbors_examples() {
        let n = neighbors2d(&cfg_a(), &(polar(1.0, 60.0) - polar(1.0, 150.0))).unwrap();
        assert_eq!(n.len(), 1);
        assert!((&n[0].z - vector(&[1.0, 0.0])).norm() < 1e-14);
        let cfg = cfg_d();
        let (eta, sigma) = (polar(1.0, 130.0), polar(1.0, -35.0));
        let n = neighbors2d(&cfg, &(&eta - &sigma)).unwrap();
        assert_eq!(n.len(), 2);
        let par = ScanConfig::planar(1.0, 90.0, 90.0, 0.5).unwrap();
        assert_eq!(neighbors2d(&par, &vector(&[0.3, 0.4])).unwrap_err(), Error::EmptyCouplingSet);
    }

    #[test]
    fn component_examples() {
        let cfg = cfg_d();
        let (eta, sigma) = (polar(1.0, 130.0), polar(1.0, -35.0));
        let c = build_component(&cfg, &(&eta - &sigma)).unwrap();
        assert_eq!(c.shape, Shape::FourVertexCycle);
        assert_eq!(c.conditions.predicted_shape(), Some(Shape::FourVertexCycle));
        assert_eq!(c.case_number, Some(4));

        let cfg = cfg_e();
        let (eta, sigma) = (polar(1.0, 120.0), polar(1.0, -15.0));
        let c = build_component(&cfg, &(&eta - &sigma)).unwrap();
        assert_eq!(c.shape, Shape::TwoVertexPath);
        let flags = vertex_flags(&cfg, &c).unwrap();
        assert!(flags[0].in_y1 && !flags[1].in_y1);
        assert_eq!(unique_vertices(&c, &flags).unwrap(), vec![0, 1]);
    }

    #[test]
    fn cycle_kernel_matches_formula() {
        let cfg = cfg_d();
        let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 0.7).unwrap());
        let (eta, sigma) = (polar(1.0, 130.0), polar(1.0, -35.0));
        let c = build_component(&cfg, &(&eta - &sigma)).unwrap();
        let sys = component_system(&c, &bc, None);
        assert_eq!(sys.kernel.len(), 1);
        let k = &sys.kernel[0] / sys.kernel[0][0];
        let bs = bc.eval_sigma(&sigma);
        let be = bc.eval_sigma(&(-&eta));
        let want = [Complex64::new(1.0, 0.0), -bs, -be, bs * be];
        for i in 0..4 {
            assert!((k[i] - want[i]).norm() < 1e-12);
        }
        assert!((&sys.matrix * &sys.kernel[0]).norm() < 1e-12);
        let flags = vertex_flags(&cfg, &c).unwrap();
        assert!(unique_vertices(&c, &flags).unwrap().is_empty());
    }

    #[test]
    fn hand_coefficients_cycle() {
        let two = Complex64::new(2.0, 0.0);
        let three = Complex64::new(3.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        // (y,z1), (y,z2), (z3,z1) with coefficient 1/b... expressed directly
        let sys = ComponentSystem::from_edge_coefficients(
            4,
            &[(0, 1), (0, 2), (2, 3), (1, 3)],
            &[two, three, two, three],
            None,
        );
        assert_eq!(sys.kernel.len(), 1);
        let k = &sys.kernel[0] / sys.kernel[0][0];
        let want = [one, -two, -three, two * three];
        for i in 0..4 {
            assert!((k[i] - want[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn cfg_a_components_are_paths() {
        let cfg = cfg_a();
        let c = build_component(&cfg, &(polar(1.0, 60.0) - polar(1.0, 150.0))).unwrap();
        assert_eq!(c.shape, Shape::TwoVertexPath);
        let sys = component_system(&c, &CouplingCoefficient::new(HerglotzDensity::constant(&cfg)), None);
        assert_eq!(sys.matrix.nrows(), 1);
        assert_eq!(sys.kernel.len(), 1);
    }
}
