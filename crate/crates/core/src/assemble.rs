//! P1 stiffness and mass pencils with Dirichlet elimination.
//!
//! The energy form is `a(u, v) = ∫ ∇v·𝒜∇u + φ u v` and the weight form is
//! `b(u, v) = ∫ ρ u v`. Boundary vertices are removed from both matrices, so
//! the pencils act on free (interior) degrees of freedom ordered by ascending
//! vertex index.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Csr, SparseSym};
use crate::mesh::{Mesh, Point, Prolongation};
use crate::quadrature::{self, TriangleRule};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type TensorField = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Laplace,
    Example2,
    Custom,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Laplace => "laplace",
            Preset::Example2 => "example2",
            Preset::Custom => "custom",
        })
    }
}

/// Coefficients of `-∇·𝒜∇u + φu = λρu`.
#[derive(Clone)]
pub struct CoefficientSet {
    pub diffusion: TensorField,
    pub reaction: ScalarField,
    pub weight: ScalarField,
    pub preset: Preset,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("preset", &self.preset)
            .finish_non_exhaustive()
    }
}

impl CoefficientSet {
    /// `𝒜 = I`, `φ = 0`, `ρ = 1`.
    pub fn laplace() -> Self {
        CoefficientSet {
            diffusion: Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]),
            reaction: Arc::new(|_| 0.0),
            weight: Arc::new(|_| 1.0),
            preset: Preset::Laplace,
        }
    }

    /// Variable coefficients with `s = x₁ - ½`, `t = x₂ - ½`:
    /// `𝒜 = [[1 + s², st], [st, 1 + t²]]`, `φ = exp(st)`, `ρ = 1 + st`.
    pub fn example2() -> Self {
        CoefficientSet {
            diffusion: Arc::new(|p| {
                let (s, t) = (p[0] - 0.5, p[1] - 0.5);
                [[1.0 + s * s, s * t], [s * t, 1.0 + t * t]]
            }),
            reaction: Arc::new(|p| ((p[0] - 0.5) * (p[1] - 0.5)).exp()),
            weight: Arc::new(|p| 1.0 + (p[0] - 0.5) * (p[1] - 0.5)),
            preset: Preset::Example2,
        }
    }

    pub fn custom(diffusion: TensorField, reaction: ScalarField, weight: ScalarField) -> Self {
        CoefficientSet {
            diffusion,
            reaction,
            weight,
            preset: Preset::Custom,
        }
    }

    /// Evaluates all coefficients at `p` and checks their admissibility.
    pub fn sample(&self, p: Point) -> Result<([[f64; 2]; 2], f64, f64)> {
        let a = (self.diffusion)(p);
        let phi = (self.reaction)(p);
        let rho = (self.weight)(p);
        let at = |what: &str| Error::Coefficient(format!("{what} at ({}, {})", p[0], p[1]));
        if !a.iter().flatten().all(|v| v.is_finite()) || !phi.is_finite() || !rho.is_finite() {
            return Err(at("non-finite coefficient value"));
        }
        let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs());
        if (a[0][1] - a[1][0]).abs() > 1e-14 * scale.max(1.0) {
            return Err(at("diffusion tensor is not symmetric"));
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if a[0][0] <= 0.0 || det <= 0.0 {
            return Err(at(&format!(
                "diffusion tensor is not positive definite (a11 = {}, det = {det})",
                a[0][0]
            )));
        }
        if phi < 0.0 {
            return Err(at(&format!("reaction coefficient {phi} is negative")));
        }
        if rho <= 0.0 {
            return Err(at(&format!("weight {rho} is not positive")));
        }
        Ok((a, phi, rho))
    }
}

/// Assembled pencil on the free degrees of freedom of one mesh.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub stiffness: SparseSym,
    pub mass: SparseSym,
    pub free_to_full: Vec<usize>,
    pub full_to_free: Vec<Option<usize>>,
    pub n_free: usize,
    pub coefficients: CoefficientSet,
    pub quad_order: usize,
}

pub type ElementMatrix = [[f64; 3]; 3];

/// Gradients of the three barycentric hat functions.
pub(crate) fn hat_gradients(c: &[Point; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    let inv = 1.0 / det;
    let g = [
        [(c[1][1] - c[2][1]) * inv, (c[2][0] - c[1][0]) * inv],
        [(c[2][1] - c[0][1]) * inv, (c[0][0] - c[2][0]) * inv],
        [(c[0][1] - c[1][1]) * inv, (c[1][0] - c[0][0]) * inv],
    ];
    (g, 0.5 * det)
}

fn physical(c: &[Point; 3], l: &[f64; 3]) -> Point {
    [
        l[0] * c[0][0] + l[1] * c[1][0] + l[2] * c[2][0],
        l[0] * c[0][1] + l[1] * c[1][1] + l[2] * c[2][1],
    ]
}

/// Element stiffness and mass matrices of one triangle.
pub fn element_matrices(
    corners: &[Point; 3],
    coefficients: &CoefficientSet,
    rule: &TriangleRule,
) -> Result<(ElementMatrix, ElementMatrix)> {
    let (g, area) = hat_gradients(corners);
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for (l, w) in rule.points {
        let (a, phi, rho) = coefficients.sample(physical(corners, l))?;
        let wa = w * area;
        for i in 0..3 {
            let ag = [
                a[0][0] * g[i][0] + a[0][1] * g[i][1],
                a[1][0] * g[i][0] + a[1][1] * g[i][1],
            ];
            for j in i..3 {
                k[i][j] += wa * (ag[0] * g[j][0] + ag[1] * g[j][1] + phi * l[i] * l[j]);
                m[i][j] += wa * rho * l[i] * l[j];
            }
        }
    }
    for i in 1..3 {
        for j in 0..i {
            k[i][j] = k[j][i];
            m[i][j] = m[j][i];
        }
    }
    Ok((k, m))
}

/// Free degrees of freedom: non-boundary vertices, ascending.
pub fn free_dofs(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.n_vertices()).filter(|&v| !mesh.is_boundary(v)).collect()
}

const CHUNK: usize = 512;

fn assemble_with_map(
    mesh: &Mesh,
    coefficients: &CoefficientSet,
    rule: &TriangleRule,
    map: &[Option<usize>],
    n: usize,
) -> Result<(SparseSym, SparseSym)> {
    type Trip = Vec<(usize, usize, f64)>;
    let chunks: Vec<Result<(Trip, Trip)>> = mesh
        .triangles()
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, tris)| {
            let mut kt = Vec::with_capacity(9 * tris.len());
            let mut mt = Vec::with_capacity(9 * tris.len());
            for (local, tri) in tris.iter().enumerate() {
                let corners = mesh.corners(c * CHUNK + local);
                let (ke, me) = element_matrices(&corners, coefficients, rule)?;
                for i in 0..3 {
                    let Some(r) = map[tri[i]] else { continue };
                    for j in 0..3 {
                        let Some(s) = map[tri[j]] else { continue };
                        kt.push((r, s, ke[i][j]));
                        mt.push((r, s, me[i][j]));
                    }
                }
            }
            Ok((kt, mt))
        })
        .collect();
    let mut kt = Vec::with_capacity(9 * mesh.n_triangles());
    let mut mt = Vec::with_capacity(9 * mesh.n_triangles());
    for chunk in chunks {
        let (k, m) = chunk?;
        kt.extend(k);
        mt.extend(m);
    }
    Ok((SparseSym::from_triplets(n, &kt)?, SparseSym::from_triplets(n, &mt)?))
}

fn resolve_rule(quad_order: usize) -> Result<TriangleRule> {
    quadrature::rule(quad_order).ok_or_else(|| {
        Error::Domain(format!(
            "quadrature order {quad_order} is not available (use 2 or 5)"
        ))
    })
}

pub fn assemble_forms(
    mesh: &Mesh,
    coefficients: &CoefficientSet,
    quad_order: usize,
) -> Result<AssembledForms> {
    let rule = resolve_rule(quad_order)?;
    let free_to_full = free_dofs(mesh);
    let mut full_to_free = vec![None; mesh.n_vertices()];
    for (i, &v) in free_to_full.iter().enumerate() {
        full_to_free[v] = Some(i);
    }
    let n_free = free_to_full.len();
    let (stiffness, mass) = assemble_with_map(mesh, coefficients, &rule, &full_to_free, n_free)?;
    Ok(AssembledForms {
        stiffness,
        mass,
        free_to_full,
        full_to_free,
        n_free,
        coefficients: coefficients.clone(),
        quad_order,
    })
}

/// Stiffness and mass over all vertices, before Dirichlet elimination.
pub fn assemble_unreduced(
    mesh: &Mesh,
    coefficients: &CoefficientSet,
    quad_order: usize,
) -> Result<(SparseSym, SparseSym)> {
    let rule = resolve_rule(quad_order)?;
    let map: Vec<Option<usize>> = (0..mesh.n_vertices()).map(Some).collect();
    assemble_with_map(mesh, coefficients, &rule, &map, mesh.n_vertices())
}

impl AssembledForms {
    /// Extends a free-DOF vector by zeros on the boundary.
    pub fn extend(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.full_to_free.len()];
        for (&v, &xi) in self.free_to_full.iter().zip(x) {
            full[v] = xi;
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_to_full.iter().map(|&v| full[v]).collect()
    }

    pub fn a_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.stiffness.bilinear(x, y)
    }

    pub fn b_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mass.bilinear(x, y)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_free {
            return Err(Error::Domain(format!(
                "vector of length {} for {} free DOFs",
                x.len(),
                self.n_free
            )));
        }
        Ok(())
    }
}

fn sqrt_form(q: f64, name: &str) -> Result<f64> {
    if q < 0.0 || !q.is_finite() {
        return Err(Error::Domain(format!(
            "{name} quadratic form is {q:e}; the assembled matrix is not positive semidefinite"
        )));
    }
    Ok(q.sqrt())
}

pub fn a_norm(forms: &AssembledForms, x: &[f64]) -> Result<f64> {
    forms.check_len(x)?;
    sqrt_form(forms.stiffness.quad_form(x), "energy")
}

pub fn b_norm(forms: &AssembledForms, x: &[f64]) -> Result<f64> {
    forms.check_len(x)?;
    sqrt_form(forms.mass.quad_form(x), "weight")
}

/// `a(x, x) / b(x, x)`.
pub fn rayleigh_quotient(forms: &AssembledForms, x: &[f64]) -> Result<f64> {
    forms.check_len(x)?;
    let bx = forms.mass.quad_form(x);
    if bx <= 0.0 {
        return Err(Error::Domain(
            "Rayleigh quotient of a zero vector is undefined".into(),
        ));
    }
    Ok(forms.stiffness.quad_form(x) / bx)
}

/// Nodal values of `f` at the free DOFs of `mesh`.
pub fn interpolate(f: impl Fn(Point) -> f64, mesh: &Mesh) -> Result<Vec<f64>> {
    free_dofs(mesh)
        .into_iter()
        .map(|v| {
            let p = mesh.vertices()[v];
            let y = f(p);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Domain(format!(
                    "interpolated function is {y} at vertex {v} ({}, {})",
                    p[0], p[1]
                )))
            }
        })
        .collect()
}

/// Interpolates at every vertex, boundary included.
pub fn interpolate_full(f: impl Fn(Point) -> f64, mesh: &Mesh) -> Vec<f64> {
    mesh.vertices().iter().map(|&p| f(p)).collect()
}

/// `‖u - u_h‖_a` by elementwise degree-5 quadrature, after flipping `x` to
/// agree in sign with the interpolant of `u_exact`.
pub fn energy_error_vs_exact(
    forms: &AssembledForms,
    mesh: &Mesh,
    x: &[f64],
    u_exact: impl Fn(Point) -> f64 + Sync,
    grad_exact: impl Fn(Point) -> [f64; 2] + Sync,
) -> Result<f64> {
    forms.check_len(x)?;
    if forms.full_to_free.len() != mesh.n_vertices() {
        return Err(Error::Domain("forms were not assembled on this mesh".into()));
    }
    let iu = interpolate(&u_exact, mesh)?;
    let bi = forms.mass.quad_form(&iu);
    if !(bi > 1e-300) {
        return Err(Error::Domain(
            "exact eigenfunction vanishes at every free vertex and cannot be normalized".into(),
        ));
    }
    let sign = if forms.b_inner(x, &iu) < 0.0 { -1.0 } else { 1.0 };
    let full = forms.extend(x);
    let coeffs = &forms.coefficients;
    let rule = quadrature::DEGREE_5;

    let parts: Vec<Result<f64>> = (0..mesh.n_triangles())
        .into_par_iter()
        .with_min_len(CHUNK)
        .map(|t| {
            let tri = mesh.triangles()[t];
            let corners = mesh.corners(t);
            let (g, area) = hat_gradients(&corners);
            let vals = [sign * full[tri[0]], sign * full[tri[1]], sign * full[tri[2]]];
            let gh = [
                vals[0] * g[0][0] + vals[1] * g[1][0] + vals[2] * g[2][0],
                vals[0] * g[0][1] + vals[1] * g[1][1] + vals[2] * g[2][1],
            ];
            let mut acc = 0.0;
            for (l, w) in rule.points {
                let p = physical(&corners, l);
                let (a, phi, _) = coeffs.sample(p)?;
                let ge = grad_exact(p);
                let d = [ge[0] - gh[0], ge[1] - gh[1]];
                let dv = u_exact(p) - (l[0] * vals[0] + l[1] * vals[1] + l[2] * vals[2]);
                let ad = [a[0][0] * d[0] + a[0][1] * d[1], a[1][0] * d[0] + a[1][1] * d[1]];
                acc += w * (d[0] * ad[0] + d[1] * ad[1] + phi * dv * dv);
            }
            Ok(acc * area)
        })
        .collect();
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total.max(0.0).sqrt())
}

/// Sign-aligned `‖x - y‖_a`, flipping `y` when `b(x, y) < 0`.
pub fn aligned_energy_distance(forms: &AssembledForms, x: &[f64], y: &[f64]) -> Result<f64> {
    forms.check_len(x)?;
    forms.check_len(y)?;
    let s = if forms.b_inner(x, y) < 0.0 { -1.0 } else { 1.0 };
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - s * b).collect();
    a_norm(forms, &d)
}

pub(crate) fn b_normalize(forms: &AssembledForms, x: &mut [f64]) -> Result<()> {
    let n = b_norm(forms, x)?;
    if n == 0.0 {
        return Err(Error::Domain("cannot normalize a zero vector".into()));
    }
    x.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

/// Prolongation restricted to free DOFs: boundary parents carry zero values
/// and boundary children are dropped.
pub fn free_prolongation(
    prolong: &Prolongation,
    coarse: &AssembledForms,
    fine: &AssembledForms,
) -> Result<Csr> {
    if prolong.coarse_dim() != coarse.full_to_free.len()
        || prolong.fine_dim() != fine.full_to_free.len()
    {
        return Err(Error::Domain(format!(
            "prolongation {} -> {} does not connect meshes with {} and {} vertices",
            prolong.coarse_dim(),
            prolong.fine_dim(),
            coarse.full_to_free.len(),
            fine.full_to_free.len()
        )));
    }
    let mut trip = Vec::with_capacity(2 * fine.n_free);
    for (r, &v) in fine.free_to_full.iter().enumerate() {
        for &(parent, w) in prolong.row(v) {
            if let Some(c) = coarse.full_to_free[parent] {
                trip.push((r, c, w));
            }
        }
    }
    Ok(Csr::from_triplets(fine.n_free, coarse.n_free, &trip))
}
