//! Triangulations of polygonal domains, regular refinement and nested hierarchies.
//!
//! A [`Mesh`] is validated on construction and immutable afterwards. Regular
//! refinement splits every triangle into four congruent children through the
//! edge midpoints; the accompanying [`Prolongation`] carries nodal values of a
//! P1 function from the coarse mesh to the fine one without loss.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    level: usize,
}

impl Mesh {
    /// Builds a mesh and checks orientation, index bounds, boundary flags and
    /// vertex uniqueness.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        level: usize,
    ) -> Result<Self> {
        let mesh = Mesh {
            vertices,
            triangles,
            boundary,
            level,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        self.boundary[vertex]
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    pub fn n_interior(&self) -> usize {
        self.n_vertices() - self.n_boundary()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.corners(t);
        signed_area(p, q, r)
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// Maximum cell diameter, i.e. the longest edge over all triangles.
    pub fn h(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let [p, q, r] = self.corners(t);
                dist(p, q).max(dist(q, r)).max(dist(r, p))
            })
            .fold(0.0, f64::max)
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn diameter(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        dist(lo, hi)
    }

    /// Edges keyed by sorted vertex pair, with the number of incident triangles.
    pub fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::with_capacity(3 * self.triangles.len() / 2 + 8);
        for tri in &self.triangles {
            for (a, b) in tri_edges(tri) {
                *counts.entry(edge_key(a, b)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Edges that belong to exactly one triangle, sorted.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .edge_counts()
            .into_iter()
            .filter_map(|(e, c)| (c == 1).then_some(e))
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.boundary.len() != nv {
            return Err(Error::Mesh(format!(
                "{} boundary flags for {} vertices",
                self.boundary.len(),
                nv
            )));
        }
        if self.triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        for (i, p) in self.vertices.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Mesh(format!("vertex {i} has non-finite coordinates")));
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::Mesh(format!(
                    "triangle {t} references vertex {v}, but the mesh has {nv} vertices"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} repeats a vertex: {tri:?}")));
            }
        }
        let diam = self.diameter();
        let area_tol = 1e-14 * diam * diam;
        for t in 0..self.triangles.len() {
            let a = self.signed_area(t);
            if a <= area_tol {
                return Err(Error::Mesh(format!(
                    "triangle {t} {:?} has non-positive signed area {a:e}",
                    self.triangles[t]
                )));
            }
        }
        let counts = self.edge_counts();
        let mut on_boundary = vec![false; nv];
        for (&(a, b), &c) in &counts {
            if c > 2 {
                return Err(Error::Mesh(format!(
                    "edge ({a}, {b}) is shared by {c} triangles"
                )));
            }
            if c == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        for v in 0..nv {
            if on_boundary[v] != self.boundary[v] {
                return Err(Error::Mesh(format!(
                    "vertex {v} boundary flag is {} but topology says {}",
                    u8::from(self.boundary[v]),
                    u8::from(on_boundary[v])
                )));
            }
        }
        self.check_duplicates(1e-12 * diam)
    }

    fn check_duplicates(&self, tol: f64) -> Result<()> {
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&i, &j| self.vertices[i][0].total_cmp(&self.vertices[j][0]));
        for (k, &i) in order.iter().enumerate() {
            let p = self.vertices[i];
            for &j in &order[k + 1..] {
                let q = self.vertices[j];
                if q[0] - p[0] > tol {
                    break;
                }
                if dist(p, q) <= tol {
                    return Err(Error::Mesh(format!(
                        "vertices {} and {} coincide",
                        i.min(j),
                        i.max(j)
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn tri_edges(tri: &[usize; 3]) -> [(usize, usize); 3] {
    [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
}

/// Parses a mesh size given as `1/M` or as a decimal and returns `M`.
pub fn reciprocal_divisions(h: f64) -> Result<usize> {
    if !(h.is_finite() && h > 0.0 && h <= 1.0) {
        return Err(Error::Domain(format!(
            "mesh size H = {h} must satisfy 0 < H <= 1"
        )));
    }
    let m = (1.0 / h).round();
    if ((1.0 / h) - m).abs() > 1e-9 * m {
        return Err(Error::Domain(format!(
            "mesh size H = {h} is not the reciprocal of an integer"
        )));
    }
    Ok(m as usize)
}

/// Structured triangulation of the unit square with `1/h` cells per side,
/// each cell cut by its lower-left to upper-right diagonal.
pub fn unit_square_mesh(h: f64) -> Result<Mesh> {
    unit_square_divisions(reciprocal_divisions(h)?)
}

pub fn unit_square_divisions(m: usize) -> Result<Mesh> {
    if m == 0 {
        return Err(Error::Domain("need at least one cell per side".into()));
    }
    let stride = m + 1;
    let mut vertices = Vec::with_capacity(stride * stride);
    let mut boundary = Vec::with_capacity(stride * stride);
    for j in 0..=m {
        for i in 0..=m {
            vertices.push([i as f64 / m as f64, j as f64 / m as f64]);
            boundary.push(i == 0 || j == 0 || i == m || j == m);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let ll = j * stride + i;
            let lr = ll + 1;
            let ur = ll + stride + 1;
            let ul = ll + stride;
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }
    Mesh::new(vertices, triangles, boundary, 0)
}

/// Linear map from coarse nodal values to fine nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation {
    coarse_dim: usize,
    fine_dim: usize,
    entries: Vec<Vec<(usize, f64)>>,
}

impl Prolongation {
    pub fn coarse_dim(&self) -> usize {
        self.coarse_dim
    }

    pub fn fine_dim(&self) -> usize {
        self.fine_dim
    }

    /// Weighted coarse parents of a fine vertex.
    pub fn row(&self, fine_vertex: usize) -> &[(usize, f64)] {
        &self.entries[fine_vertex]
    }

    pub fn apply(&self, coarse: &[f64]) -> Vec<f64> {
        assert_eq!(coarse.len(), self.coarse_dim, "prolongation input length");
        self.entries
            .iter()
            .map(|row| row.iter().map(|&(c, w)| w * coarse[c]).sum())
            .collect()
    }

    pub fn identity(dim: usize) -> Self {
        Prolongation {
            coarse_dim: dim,
            fine_dim: dim,
            entries: (0..dim).map(|i| vec![(i, 1.0)]).collect(),
        }
    }
}

/// Splits every triangle into four through its edge midpoints.
///
/// Surviving vertices keep their indices; midpoints are appended in the order
/// their edges are first met while walking the triangles.
pub fn refine_regular(mesh: &Mesh) -> Result<(Mesh, Prolongation)> {
    let counts = mesh.edge_counts();
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    let mut boundary = mesh.boundary.clone();
    let mut entries: Vec<Vec<(usize, f64)>> = (0..nv).map(|i| vec![(i, 1.0)]).collect();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(counts.len());
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());

    for tri in &mesh.triangles {
        let mut mid = [0usize; 3];
        for (slot, (a, b)) in tri_edges(tri).into_iter().enumerate() {
            let key = edge_key(a, b);
            mid[slot] = *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                boundary.push(counts[&key] == 1);
                entries.push(vec![(key.0, 0.5), (key.1, 0.5)]);
                vertices.len() - 1
            });
        }
        let [a, b, c] = *tri;
        let [mab, mbc, mca] = mid;
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
    }

    let fine = Mesh::new(vertices, triangles, boundary, mesh.level + 1)?;
    let prolong = Prolongation {
        coarse_dim: nv,
        fine_dim: fine.n_vertices(),
        entries,
    };
    Ok((fine, prolong))
}

#[derive(Debug, Clone, Copy)]
pub struct HierarchyOptions {
    pub beta: usize,
    /// Refuse to build when the finest level would exceed this many vertices.
    pub max_vertices: usize,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        HierarchyOptions {
            beta: 2,
            max_vertices: 4_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    levels: Vec<Mesh>,
    prolongations: Vec<Prolongation>,
    beta: usize,
}

impl MeshHierarchy {
    pub fn levels(&self) -> &[Mesh] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &Mesh {
        &self.levels[k]
    }

    /// Prolongation from level `k` to level `k + 1`.
    pub fn prolongation(&self, k: usize) -> &Prolongation {
        &self.prolongations[k]
    }

    pub fn prolongations(&self) -> &[Prolongation] {
        &self.prolongations
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &Mesh {
        self.levels.last().expect("hierarchy is never empty")
    }

    pub fn beta(&self) -> usize {
        self.beta
    }
}

pub fn build_hierarchy(coarse: Mesh, n_levels: usize) -> Result<MeshHierarchy> {
    build_hierarchy_with(coarse, n_levels, &HierarchyOptions::default())
}

/// Vertex count after `refinements` regular refinements, from the Euler-type
/// recurrences V' = V + E, E' = 2E + 3T, T' = 4T.
pub fn projected_vertex_count(mesh: &Mesh, refinements: usize) -> u128 {
    let mut v = mesh.n_vertices() as u128;
    let mut e = mesh.edge_counts().len() as u128;
    let mut t = mesh.n_triangles() as u128;
    for _ in 0..refinements {
        v += e;
        e = 2 * e + 3 * t;
        t *= 4;
    }
    v
}

pub fn build_hierarchy_with(
    coarse: Mesh,
    n_levels: usize,
    options: &HierarchyOptions,
) -> Result<MeshHierarchy> {
    if n_levels == 0 {
        return Err(Error::Domain("a hierarchy needs at least one level".into()));
    }
    if options.beta != 2 {
        return Err(Error::Domain(format!(
            "refinement factor beta = {} is not supported; only beta = 2",
            options.beta
        )));
    }
    let projected = projected_vertex_count(&coarse, n_levels - 1);
    if projected > options.max_vertices as u128 {
        return Err(Error::Domain(format!(
            "finest level would have {projected} vertices, above the cap of {}",
            options.max_vertices
        )));
    }
    let mut levels = Vec::with_capacity(n_levels);
    let mut prolongations = Vec::with_capacity(n_levels - 1);
    let mut coarse = coarse;
    coarse.level = 0;
    levels.push(coarse);
    for _ in 1..n_levels {
        let (fine, p) = refine_regular(levels.last().unwrap())?;
        levels.push(fine);
        prolongations.push(p);
    }
    Ok(MeshHierarchy {
        levels,
        prolongations,
        beta: options.beta,
    })
}

/// Writes the `mesh2d` text format.
pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mesh2d {} {}", mesh.n_vertices(), mesh.n_triangles());
    for (p, &b) in mesh.vertices.iter().zip(&mesh.boundary) {
        let _ = writeln!(out, "{:?} {:?} {}", p[0], p[1], u8::from(b));
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, path)
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then_some((i + 1, content))
    });

    let (hline, header) = lines
        .next()
        .ok_or_else(|| perr(1, "missing `mesh2d <n_vertices> <n_triangles>` header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "mesh2d" {
        return Err(perr(hline, format!("bad header `{header}`")));
    }
    let count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| perr(hline, format!("bad count `{s}`")))
    };
    let (nv, nt) = (count(fields[1])?, count(fields[2])?);

    let mut vertices = Vec::with_capacity(nv);
    let mut boundary = Vec::with_capacity(nv);
    for k in 0..nv {
        let (ln, content) = lines
            .next()
            .ok_or_else(|| perr(hline, format!("expected {nv} vertices, found {k}")))?;
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 3 {
            return Err(perr(ln, format!("vertex line needs `x y b`, got `{content}`")));
        }
        let coord = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| perr(ln, format!("bad coordinate `{s}`")))
        };
        vertices.push([coord(f[0])?, coord(f[1])?]);
        boundary.push(match f[2] {
            "0" => false,
            "1" => true,
            other => return Err(perr(ln, format!("boundary flag must be 0 or 1, got `{other}`"))),
        });
    }

    let mut triangles = Vec::with_capacity(nt);
    for t in 0..nt {
        let (ln, content) = lines
            .next()
            .ok_or_else(|| perr(hline, format!("expected {nt} triangles, found {t}")))?;
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 3 {
            return Err(perr(ln, format!("triangle line needs `i j k`, got `{content}`")));
        }
        let mut tri = [0usize; 3];
        for (slot, s) in tri.iter_mut().zip(&f) {
            let v = s
                .parse::<usize>()
                .map_err(|_| perr(ln, format!("bad vertex index `{s}`")))?;
            if v >= nv {
                return Err(perr(
                    ln,
                    format!("triangle {t} uses vertex {v}, but only {nv} vertices are defined"),
                ));
            }
            *slot = v;
        }
        triangles.push(tri);
    }
    if let Some((ln, content)) = lines.next() {
        return Err(perr(ln, format!("unexpected trailing content `{content}`")));
    }
    Mesh::new(vertices, triangles, boundary, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let m = unit_square_mesh(0.5).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles(), m.n_boundary()), (9, 8, 8));
        let m = unit_square_mesh(1.0).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles(), m.n_boundary()), (4, 2, 4));
        let m = unit_square_mesh(1.0 / 6.0).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles()), (49, 72));
    }

    #[test]
    fn non_reciprocal_size_rejected() {
        assert!(unit_square_mesh(0.3).is_err());
        assert!(unit_square_mesh(0.0).is_err());
        assert!(unit_square_mesh(1.5).is_err());
    }

    #[test]
    fn refinement_counts_follow_euler() {
        let (fine, p) = refine_regular(&unit_square_mesh(1.0).unwrap()).unwrap();
        assert_eq!((fine.n_vertices(), fine.n_triangles()), (9, 8));
        assert_eq!((p.coarse_dim(), p.fine_dim()), (4, 9));
        let (fine, _) = refine_regular(&unit_square_mesh(0.5).unwrap()).unwrap();
        assert_eq!((fine.n_vertices(), fine.n_triangles()), (25, 32));
    }

    #[test]
    fn corner_diagonal_midpoint_is_interior() {
        // The single cell's diagonal joins two boundary vertices but is an interior edge.
        let (fine, _) = refine_regular(&unit_square_mesh(1.0).unwrap()).unwrap();
        let centre = fine
            .vertices()
            .iter()
            .position(|p| *p == [0.5, 0.5])
            .unwrap();
        assert!(!fine.is_boundary(centre));
        assert_eq!(fine.n_interior(), 1);
    }

    #[test]
    fn prolongation_reproduces_affine() {
        let coarse = unit_square_mesh(0.5).unwrap();
        let (fine, p) = refine_regular(&coarse).unwrap();
        let f = |q: &Point| q[0] + q[1];
        let cv: Vec<f64> = coarse.vertices().iter().map(f).collect();
        let fv = p.apply(&cv);
        for (q, v) in fine.vertices().iter().zip(fv) {
            assert!((v - f(q)).abs() < 1e-15);
        }
    }

    #[test]
    fn hierarchy_counts() {
        let h = build_hierarchy(unit_square_mesh(1.0 / 6.0).unwrap(), 3).unwrap();
        let counts: Vec<_> = h.levels().iter().map(Mesh::n_triangles).collect();
        assert_eq!(counts, [72, 288, 1152]);
        let h = build_hierarchy(unit_square_mesh(0.5).unwrap(), 3).unwrap();
        let free: Vec<_> = h.levels().iter().map(Mesh::n_interior).collect();
        assert_eq!(free, [1, 9, 49]);
        let h = build_hierarchy(unit_square_mesh(0.5).unwrap(), 1).unwrap();
        assert_eq!(h.n_levels(), 1);
        assert!(h.prolongations().is_empty());
    }

    #[test]
    fn hierarchy_halves_h() {
        let h = build_hierarchy(unit_square_mesh(0.25).unwrap(), 4).unwrap();
        for w in h.levels().windows(2) {
            assert!((w[1].h() - 0.5 * w[0].h()).abs() < 1e-15);
            assert_eq!(w[1].level(), w[0].level() + 1);
        }
    }

    #[test]
    fn hierarchy_guards() {
        let coarse = unit_square_mesh(0.5).unwrap();
        assert!(build_hierarchy(coarse.clone(), 0).is_err());
        let opts = HierarchyOptions {
            beta: 3,
            ..Default::default()
        };
        assert!(build_hierarchy_with(coarse.clone(), 2, &opts).is_err());
        let opts = HierarchyOptions {
            max_vertices: 100,
            ..Default::default()
        };
        // 9 -> 25 -> 81 -> 289 vertices
        assert!(build_hierarchy_with(coarse.clone(), 3, &opts).is_ok());
        assert!(build_hierarchy_with(coarse.clone(), 4, &opts).is_err());
        assert_eq!(projected_vertex_count(&coarse, 3), 289);
    }

    #[test]
    fn round_trip_text() {
        let m = unit_square_mesh(0.5).unwrap();
        let text = mesh_to_string(&m);
        let back = parse_mesh(&text, Path::new("mem")).unwrap();
        assert_eq!(back, m);

        let (fine, _) = refine_regular(&unit_square_mesh(1.0 / 3.0).unwrap()).unwrap();
        let back = parse_mesh(&mesh_to_string(&fine), Path::new("mem")).unwrap();
        assert_eq!(back.vertices(), fine.vertices());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# unit triangle pair\nmesh2d 4 2\n0 0 1\n1 0 1 # corner\n\n1 1 1\n0 1 1\n0 1 2\n0 2 3\n";
        let m = parse_mesh(text, Path::new("mem")).unwrap();
        assert_eq!(m.n_triangles(), 2);
    }

    #[test]
    fn zero_area_triangle_rejected() {
        let text = "mesh2d 3 1\n0 0 1\n1 0 1\n2 0 1\n0 1 2\n";
        let err = parse_mesh(text, Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::Mesh(ref msg) if msg.contains("area")), "{err}");
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let text = "mesh2d 3 1\n0 0 1\n1 0 1\n0 1 1\n0 2 1\n";
        assert!(parse_mesh(text, Path::new("mem")).is_err());
    }

    #[test]
    fn out_of_range_index_names_triangle() {
        let text = "mesh2d 3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 7\n";
        match parse_mesh(text, Path::new("bad.mesh")).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 5);
                assert!(message.contains("triangle 0"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "mesh2d 3 1\n0 0 1\n1 zero 1\n0 1 1\n0 1 2\n";
        match parse_mesh(text, Path::new("bad.mesh")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn inconsistent_boundary_flag_rejected() {
        let text = "mesh2d 3 1\n0 0 1\n1 0 0\n0 1 1\n0 1 2\n";
        let err = parse_mesh(text, Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::Mesh(_)), "{err}");
    }

    #[test]
    fn duplicate_vertices_rejected() {
        // Two triangles touching along a geometric edge but with separate vertex copies.
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [3, 4, 5]],
            vec![true; 6],
            0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("coincide"), "{err}");
    }
}
