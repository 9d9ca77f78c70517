//! P1 finite elements: mass and coefficient-weighted stiffness matrices with
//! homogeneous Dirichlet conditions eliminated.

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, Point2D, Strip, StripGeometry};

const DEGENERATE_AREA: f64 = 1e-14;

/// Diffusion coefficient on each strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl StripCoefficients {
    pub fn new(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        let c = Self { a1, a2, a3 };
        c.validate()?;
        Ok(c)
    }

    /// Outer strips at `outer`, middle strip at `outer * jump`.
    pub fn with_jump(outer: f64, jump: f64) -> Result<Self> {
        Self::new(outer, outer * jump, outer)
    }

    pub fn uniform(a: f64) -> Result<Self> {
        Self::new(a, a, a)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a1", self.a1), ("a2", self.a2), ("a3", self.a3)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn on(&self, strip: Strip) -> f64 {
        match strip {
            Strip::Left => self.a1,
            Strip::Middle => self.a2,
            Strip::Right => self.a3,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            a1: self.a1 * factor,
            a2: self.a2 * factor,
            a3: self.a3 * factor,
        }
    }
}

/// Value of the piecewise-constant coefficient at `p`.
pub fn coefficient_at(geom: &StripGeometry, coeffs: &StripCoefficients, p: Point2D) -> f64 {
    coeffs.on(geom.strip_of(p.x))
}

/// Gaussian bump `exp(-|p - center|² / σ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialCondition {
    pub sigma: f64,
    pub center: Point2D,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            sigma: 0.35,
            center: Point2D::new(0.5, 0.5),
        }
    }
}

impl InitialCondition {
    pub fn value(&self, p: Point2D) -> f64 {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        (-(dx * dx + dy * dy) / (self.sigma * self.sigma)).exp()
    }
}

/// Semidiscrete system `M y' = -ν(t) K y` on the interior unknowns.
#[derive(Clone, Debug)]
pub struct DiscreteSystem {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    /// Mesh node of each unknown.
    pub free_dofs: Vec<usize>,
}

impl DiscreteSystem {
    /// Wraps matrices that already act on the unknowns (no mesh behind them).
    pub fn from_matrices(mass: CsrMatrix, stiffness: CsrMatrix) -> Result<Self> {
        if mass.dim() != stiffness.dim() {
            return Err(Error::Dimension {
                expected: mass.dim(),
                found: stiffness.dim(),
            });
        }
        let free_dofs = (0..mass.dim()).collect();
        Ok(Self {
            mass,
            stiffness,
            free_dofs,
        })
    }

    /// Scalar test equation `m y' = -ν k y`.
    pub fn scalar(m: f64, k: f64) -> Self {
        Self {
            mass: CsrMatrix::from_diagonal(&[m]),
            stiffness: CsrMatrix::from_diagonal(&[k]),
            free_dofs: vec![0],
        }
    }

    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    /// Scatters a vector of unknowns to all mesh nodes (zero on the boundary).
    pub fn expand(&self, values: &[f64], node_count: usize) -> Vec<f64> {
        let mut full = vec![0.0; node_count];
        for (&node, &v) in self.free_dofs.iter().zip(values) {
            full[node] = v;
        }
        full
    }
}

/// Element matrices of one P1 triangle with coefficient `a`:
/// `(mass, stiffness)`, row-major 3×3.
pub fn element_matrices(vertices: [Point2D; 3], a: f64) -> Result<([f64; 9], [f64; 9])> {
    let [p0, p1, p2] = vertices;
    let det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    let area = 0.5 * det;
    if area.abs() < DEGENERATE_AREA {
        return Err(Error::Assembly(format!("degenerate element with area {area:e}")));
    }
    let area = area.abs();
    // ∇φ_i = (y_j - y_k, x_k - x_j) / det for (i, j, k) cyclic
    let grads = [
        ((p1.y - p2.y) / det, (p2.x - p1.x) / det),
        ((p2.y - p0.y) / det, (p0.x - p2.x) / det),
        ((p0.y - p1.y) / det, (p1.x - p0.x) / det),
    ];
    let mut mass = [0.0; 9];
    let mut stiff = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            mass[3 * i + j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
            stiff[3 * i + j] = a * area * (grads[i].0 * grads[j].0 + grads[i].1 * grads[j].1);
        }
    }
    Ok((mass, stiff))
}

/// Mass and stiffness matrices over all mesh nodes, before boundary
/// elimination.
pub fn assemble_unreduced(mesh: &Mesh, coeffs: &StripCoefficients) -> Result<(CsrMatrix, CsrMatrix)> {
    coeffs.validate()?;
    let n = mesh.node_count();
    let mut mass = Vec::with_capacity(9 * mesh.element_count());
    let mut stiff = Vec::with_capacity(9 * mesh.element_count());
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let a = coeffs.on(mesh.strip_of_element[e]);
        let (me, ke) = element_matrices(mesh.vertices(e), a)
            .map_err(|err| Error::Assembly(format!("element {e}: {err}")))?;
        for i in 0..3 {
            for j in 0..3 {
                mass.push((tri[i], tri[j], me[3 * i + j]));
                stiff.push((tri[i], tri[j], ke[3 * i + j]));
            }
        }
    }
    Ok((
        CsrMatrix::from_triplets(n, &mass)?,
        CsrMatrix::from_triplets(n, &stiff)?,
    ))
}

pub fn assemble(mesh: &Mesh, coeffs: &StripCoefficients) -> Result<DiscreteSystem> {
    let (mass, stiffness) = assemble_unreduced(mesh, coeffs)?;
    let free_dofs: Vec<usize> = (0..mesh.node_count())
        .filter(|&i| !mesh.boundary_node[i])
        .collect();
    if free_dofs.is_empty() {
        return Err(Error::Assembly("mesh has no interior nodes".into()));
    }
    Ok(DiscreteSystem {
        mass: mass.submatrix(&free_dofs),
        stiffness: stiffness.submatrix(&free_dofs),
        free_dofs,
    })
}

/// Nodal interpolant of the initial condition on the unknowns.
pub fn project_initial_condition(mesh: &Mesh, ic: &InitialCondition, sys: &DiscreteSystem) -> Vec<f64> {
    sys.free_dofs
        .iter()
        .map(|&node| ic.value(mesh.nodes[node]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_strip_mesh, refine_uniform};

    const REF: [Point2D; 3] = [
        Point2D::new(0.0, 0.0),
        Point2D::new(1.0, 0.0),
        Point2D::new(0.0, 1.0),
    ];

    #[test]
    fn reference_element_mass() {
        let (m, _) = element_matrices(REF, 1.0).unwrap();
        let expected = [2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0].map(|v| v / 24.0);
        for (a, b) in m.iter().zip(expected) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn reference_element_stiffness() {
        let (_, k) = element_matrices(REF, 1.0).unwrap();
        let expected = [2.0, -1.0, -1.0, -1.0, 1.0, 0.0, -1.0, 0.0, 1.0].map(|v| v / 2.0);
        for (a, b) in k.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let flat = [Point2D::new(0.0, 0.0), Point2D::new(1.0, 0.0), Point2D::new(2.0, 0.0)];
        assert!(matches!(element_matrices(flat, 1.0), Err(Error::Assembly(_))));
    }

    #[test]
    fn coefficient_lookup_per_strip() {
        let g = StripGeometry::new(0.4, 0.2).unwrap();
        let c = StripCoefficients::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(coefficient_at(&g, &c, Point2D::new(0.5, 0.3)), 2.0);
        assert_eq!(coefficient_at(&g, &c, Point2D::new(0.0, 0.0)), 1.0);
        assert_eq!(coefficient_at(&g, &c, Point2D::new(0.4, 0.9)), 2.0);
        assert_eq!(coefficient_at(&g, &c, Point2D::new(0.7, 0.9)), 3.0);
    }

    #[test]
    fn nonpositive_coefficients_are_rejected() {
        assert!(StripCoefficients::new(0.01, 0.0, 0.01).is_err());
    }

    #[test]
    fn gaussian_values() {
        let ic = InitialCondition::default();
        assert_eq!(ic.value(Point2D::new(0.5, 0.5)), 1.0);
        assert!((ic.value(Point2D::new(0.85, 0.5)) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn projection_lies_in_unit_interval_and_decays_with_distance() {
        let g = StripGeometry::centered(0.2).unwrap();
        let mesh = refine_uniform(&build_strip_mesh(&g, 0.1).unwrap());
        let sys = assemble(&mesh, &StripCoefficients::uniform(1.0).unwrap()).unwrap();
        let ic = InitialCondition::default();
        let b = project_initial_condition(&mesh, &ic, &sys);
        assert_eq!(b.len(), sys.dim());
        let dist: Vec<f64> = sys
            .free_dofs
            .iter()
            .map(|&n| mesh.nodes[n].distance(&ic.center))
            .collect();
        for i in 0..b.len() {
            assert!(b[i] > 0.0 && b[i] <= 1.0);
            for j in 0..b.len() {
                if dist[i] < dist[j] {
                    assert!(b[i] >= b[j]);
                }
            }
        }
    }

    #[test]
    fn reduced_system_excludes_boundary() {
        let g = StripGeometry::new(0.4, 0.2).unwrap();
        let mesh = build_strip_mesh(&g, 0.2).unwrap();
        let sys = assemble(&mesh, &StripCoefficients::uniform(1.0).unwrap()).unwrap();
        // 6 × 6 nodes, 4 × 4 interior
        assert_eq!(sys.dim(), 16);
        assert!(sys.free_dofs.iter().all(|&n| !mesh.boundary_node[n]));
    }

    #[test]
    fn mesh_without_interior_nodes_is_rejected() {
        let g = StripGeometry::new(0.4, 0.2).unwrap();
        let mesh = build_strip_mesh(&g, 1.0).unwrap();
        assert!(assemble(&mesh, &StripCoefficients::uniform(1.0).unwrap()).is_err());
    }
}
