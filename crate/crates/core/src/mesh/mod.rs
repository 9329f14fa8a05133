//! Triangle mesh representation, validation, decimation, and the simple
//! intrinsic measures (surface area, enclosed volume, compactness).

mod io;
mod primitives;

pub use io::{load_mesh, load_off, load_obj, save_off, MeshFormat};
pub use primitives::{capped_cylinder, icosphere, unit_cube};

use nalgebra::{Isometry3, Point3, Vector3};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh is empty")]
    Empty,
    #[error("face {face} references vertex {index} but only {vertex_count} vertices exist")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteVertex { vertex: usize },
    #[error("mesh is open: {boundary_edges} boundary edges")]
    OpenMesh { boundary_edges: usize },
    #[error("decimation target {target} out of range (need 4 <= target < {vertex_count})")]
    DecimationTarget { target: usize, vertex_count: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Indexed triangle surface. Faces are anticlockwise (outward) vertex-index
/// triples. Immutable after construction; derived quantities (`closed`) are
/// computed once.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub name: String,
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    closed: bool,
}

/// Per-vertex barycentric-lumped area weights.
#[derive(Debug, Clone)]
pub struct MassWeights {
    pub weights: Vec<f64>,
    pub total: f64,
}

/// Topology counts produced by [`TriangleMesh::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub non_manifold_edges: usize,
    pub boundary_edges: usize,
    pub degenerate_faces: usize,
    pub connected_components: usize,
    pub euler_characteristic: i64,
}

impl TriangleMesh {
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        if vertices.is_empty() {
            return Err(MeshError::Empty);
        }
        for (vi, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(MeshError::NonFiniteVertex { vertex: vi });
            }
        }
        for (fi, f) in faces.iter().enumerate() {
            for &ix in f {
                if ix >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        index: ix,
                        vertex_count: vertices.len(),
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::RepeatedVertex { face: fi });
            }
        }
        let closed = edge_face_counts(&faces).values().all(|&c| c == 2) && !faces.is_empty();
        Ok(TriangleMesh {
            name: name.into(),
            vertices,
            faces,
            closed,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// True iff every edge borders exactly two faces.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn face_vertices(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_vertices(f);
        0.5 * (b - c).cross(&(a - b)).norm()
    }

    /// Unit outward face normal; zero vector for degenerate faces.
    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(f);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vector3::zeros()
        }
    }

    /// Total surface area: half the sum of cross-product magnitudes over all
    /// triangles. Degenerate faces contribute zero.
    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed enclosed volume of a closed mesh via the divergence theorem
    /// over signed tetrahedra. Orientation determines the sign;
    /// self-intersections are not detected and will bias the result.
    pub fn enclosed_volume(&self) -> Result<f64, MeshError> {
        if !self.closed {
            let report = self.validate();
            return Err(MeshError::OpenMesh {
                boundary_edges: report.boundary_edges,
            });
        }
        let mut v6 = 0.0;
        for f in &self.faces {
            let a = self.vertices[f[0]].coords;
            let b = self.vertices[f[1]].coords;
            let c = self.vertices[f[2]].coords;
            v6 += a.dot(&b.cross(&c));
        }
        Ok(v6 / 6.0)
    }

    /// Dimensionless compactness `C = V^2 / A^3`. Squaring the volume makes
    /// the result orientation-independent.
    pub fn compactness(&self) -> Result<f64, MeshError> {
        let v = self.enclosed_volume()?;
        let a = self.surface_area();
        Ok(v * v / (a * a * a))
    }

    /// Barycentric mass lumping: each vertex receives one third of the area
    /// of every incident triangle. Isolated vertices get weight zero.
    pub fn vertex_mass_weights(&self) -> MassWeights {
        let mut weights = vec![0.0; self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let third = self.face_area(fi) / 3.0;
            for &v in f {
                weights[v] += third;
            }
        }
        let total = weights.iter().sum();
        MassWeights { weights, total }
    }

    pub fn validate(&self) -> ValidationReport {
        let counts = edge_face_counts(&self.faces);
        let non_manifold_edges = counts.values().filter(|&&c| c > 2).count();
        let boundary_edges = counts.values().filter(|&&c| c == 1).count();
        let degenerate_faces = (0..self.faces.len())
            .filter(|&f| self.face_area(f) == 0.0)
            .count();

        let mut dsu = DisjointSet::new(self.vertices.len());
        for f in &self.faces {
            dsu.union(f[0], f[1]);
            dsu.union(f[1], f[2]);
        }
        let mut roots: Vec<usize> = (0..self.vertices.len()).map(|v| dsu.find(v)).collect();
        roots.sort_unstable();
        roots.dedup();
        let connected_components = roots.len();

        let euler_characteristic =
            self.vertices.len() as i64 - counts.len() as i64 + self.faces.len() as i64;

        ValidationReport {
            non_manifold_edges,
            boundary_edges,
            degenerate_faces,
            connected_components,
            euler_characteristic,
        }
    }

    /// Undirected edges with Euclidean lengths.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let counts = edge_face_counts(&self.faces);
        counts
            .keys()
            .map(|&(a, b)| (a, b, (self.vertices[a] - self.vertices[b]).norm()))
            .collect()
    }

    /// One-ring vertex adjacency.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbr = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in edge_face_counts(&self.faces).keys() {
            nbr[a].push(b);
            nbr[b].push(a);
        }
        for list in &mut nbr {
            list.sort_unstable();
        }
        nbr
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> TriangleMesh {
        TriangleMesh {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|v| iso * v).collect(),
            faces: self.faces.clone(),
            closed: self.closed,
        }
    }

    pub fn scaled(&self, s: f64) -> TriangleMesh {
        TriangleMesh {
            name: self.name.clone(),
            vertices: self
                .vertices
                .iter()
                .map(|v| Point3::from(v.coords * s))
                .collect(),
            faces: self.faces.clone(),
            closed: self.closed,
        }
    }

    /// Content hash over vertex coordinates and face indices, hex-encoded.
    /// Used as the cache key for derived quantities.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.vertices.len() as u64).to_le_bytes());
        hasher.update((self.faces.len() as u64).to_le_bytes());
        for v in &self.vertices {
            for k in 0..3 {
                hasher.update(v[k].to_le_bytes());
            }
        }
        for f in &self.faces {
            for &ix in f {
                hasher.update((ix as u64).to_le_bytes());
            }
        }
        hex_encode(&hasher.finalize())
    }
}

fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn edge_face_counts(faces: &[[usize; 3]]) -> BTreeMap<(usize, usize), usize> {
    let mut counts = BTreeMap::new();
    for f in faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            *counts.entry(edge_key(a, b)).or_insert(0) += 1;
        }
    }
    counts
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Decimation by vertex clustering on a uniform grid sized to hit the
/// requested vertex count, followed by degenerate-face removal.
///
/// `target_vertices` must be at least 4 and below the current count. The
/// output lands within a few percent of the target; the cell size is found
/// by bisection on the occupied-cell count.
pub fn decimate(mesh: &TriangleMesh, target_vertices: usize) -> Result<TriangleMesh, MeshError> {
    decimate_jittered(mesh, target_vertices, Vector3::zeros())
}

/// [`decimate`] with a fractional grid offset in `[0, 1)^3` of a cell, so
/// that repeated runs produce different triangulations of the same surface.
pub fn decimate_jittered(
    mesh: &TriangleMesh,
    target_vertices: usize,
    grid_offset: Vector3<f64>,
) -> Result<TriangleMesh, MeshError> {
    if target_vertices < 4 || target_vertices >= mesh.vertex_count() {
        return Err(MeshError::DecimationTarget {
            target: target_vertices,
            vertex_count: mesh.vertex_count(),
        });
    }
    let (lo, hi) = mesh.bounding_box();
    let diag = (hi - lo).norm().max(1e-30);

    let count_clusters = |h: f64| -> usize {
        let mut cells = std::collections::BTreeSet::new();
        for v in mesh.vertices() {
            cells.insert(cell_of(v, &lo, h, &grid_offset));
        }
        cells.len()
    };

    // Bisection on the cell size: occupied-cell count decreases with h.
    let mut h_lo = diag * 1e-4; // fine: many clusters
    let mut h_hi = diag; // coarse: few clusters
    let mut best_h = h_hi;
    let mut best_err = usize::MAX;
    for _ in 0..48 {
        let h = 0.5 * (h_lo + h_hi);
        let c = count_clusters(h);
        let err = c.abs_diff(target_vertices);
        if err < best_err {
            best_err = err;
            best_h = h;
        }
        if c > target_vertices {
            h_lo = h;
        } else {
            h_hi = h;
        }
        if err * 50 <= target_vertices {
            break;
        }
    }

    build_clustered(mesh, &lo, best_h, &grid_offset)
}

fn cell_of(
    p: &Point3<f64>,
    lo: &Point3<f64>,
    h: f64,
    offset: &Vector3<f64>,
) -> (i64, i64, i64) {
    (
        ((p.x - lo.x) / h + offset.x).floor() as i64,
        ((p.y - lo.y) / h + offset.y).floor() as i64,
        ((p.z - lo.z) / h + offset.z).floor() as i64,
    )
}

fn build_clustered(
    mesh: &TriangleMesh,
    lo: &Point3<f64>,
    h: f64,
    offset: &Vector3<f64>,
) -> Result<TriangleMesh, MeshError> {
    let mut cell_ids: BTreeMap<(i64, i64, i64), usize> = BTreeMap::new();
    let mut cluster_of = vec![0usize; mesh.vertex_count()];
    let mut sums: Vec<Vector3<f64>> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for (vi, v) in mesh.vertices().iter().enumerate() {
        let cell = cell_of(v, lo, h, offset);
        let next_id = cell_ids.len();
        let id = *cell_ids.entry(cell).or_insert(next_id);
        if id == sums.len() {
            sums.push(Vector3::zeros());
            counts.push(0);
        }
        cluster_of[vi] = id;
        sums[id] += v.coords;
        counts[id] += 1;
    }
    let new_vertices: Vec<Point3<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| Point3::from(s / c as f64))
        .collect();

    // Remap faces, drop collapsed ones, and cancel opposite-orientation
    // duplicates (slivers folded flat by the clustering).
    let mut groups: BTreeMap<[usize; 3], Vec<[usize; 3]>> = BTreeMap::new();
    for f in mesh.faces() {
        let m = [cluster_of[f[0]], cluster_of[f[1]], cluster_of[f[2]]];
        if m[0] == m[1] || m[1] == m[2] || m[0] == m[2] {
            continue;
        }
        let mut key = m;
        key.sort_unstable();
        groups.entry(key).or_default().push(m);
    }
    let mut new_faces = Vec::new();
    for (_, members) in groups {
        let canonical = members[0];
        let mut balance = 0i64;
        for m in &members {
            if same_cyclic_order(m, &canonical) {
                balance += 1;
            } else {
                balance -= 1;
            }
        }
        if balance > 0 {
            new_faces.push(canonical);
        } else if balance < 0 {
            new_faces.push([canonical[0], canonical[2], canonical[1]]);
        }
        // balance == 0: the sheets cancel, drop the whole group
    }

    TriangleMesh::new(mesh.name.clone(), new_vertices, new_faces)
}

fn same_cyclic_order(a: &[usize; 3], b: &[usize; 3]) -> bool {
    (0..3).any(|r| a[0] == b[r] && a[1] == b[(r + 1) % 3] && a[2] == b[(r + 2) % 3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;

    #[test]
    fn cube_measures_are_exact() {
        let cube = unit_cube();
        assert_eq!(cube.vertex_count(), 8);
        assert_eq!(cube.face_count(), 12);
        assert!(cube.is_closed());
        assert!((cube.surface_area() - 6.0).abs() < 1e-12);
        assert!((cube.enclosed_volume().unwrap() - 1.0).abs() < 1e-12);
        assert!((cube.compactness().unwrap() - 1.0 / 216.0).abs() < 1e-15);
    }

    #[test]
    fn flipped_cube_has_negative_volume() {
        let cube = unit_cube();
        let flipped: Vec<[usize; 3]> = cube.faces().iter().map(|f| [f[0], f[2], f[1]]).collect();
        let m = TriangleMesh::new("flipped", cube.vertices().to_vec(), flipped).unwrap();
        assert!((m.enclosed_volume().unwrap() + 1.0).abs() < 1e-12);
        // compactness squares the volume, so it is unchanged
        assert!((m.compactness().unwrap() - 1.0 / 216.0).abs() < 1e-15);
    }

    #[test]
    fn icosphere_approaches_analytic_sphere() {
        let sphere = icosphere(3);
        assert!(sphere.is_closed());
        let area = sphere.surface_area();
        let vol = sphere.enclosed_volume().unwrap();
        assert!((area - 4.0 * std::f64::consts::PI).abs() < 0.01 * 4.0 * std::f64::consts::PI);
        assert!(
            (vol - 4.0 * std::f64::consts::PI / 3.0).abs()
                < 0.02 * 4.0 * std::f64::consts::PI / 3.0
        );
        let c = sphere.compactness().unwrap();
        let bound = 1.0 / (36.0 * std::f64::consts::PI);
        assert!(c < bound);
        assert!((bound - c) / bound < 0.03);
    }

    #[test]
    fn refinement_converges_to_sphere_area() {
        // Refinement oracle: subdivision 2 -> 3 error shrinks.
        let err = |s: &TriangleMesh| (s.surface_area() - 4.0 * std::f64::consts::PI).abs();
        assert!(err(&icosphere(3)) < err(&icosphere(2)) / 3.0);
    }

    #[test]
    fn scaling_and_rigid_motion_behave() {
        let sphere = icosphere(2);
        let scaled = sphere.scaled(2.0);
        assert!((scaled.surface_area() - 4.0 * sphere.surface_area()).abs() < 1e-9);
        let c0 = sphere.compactness().unwrap();
        let c1 = scaled.compactness().unwrap();
        assert!((c0 - c1).abs() < 1e-9 * c0);

        let iso = Isometry3::from_parts(
            Vector3::new(5.0, -2.0, 9.0).into(),
            UnitQuaternion::from_euler_angles(0.3, -1.2, 2.1),
        );
        let moved = sphere.transformed(&iso);
        assert!((moved.surface_area() - sphere.surface_area()).abs() < 1e-9);
        assert!(
            (moved.enclosed_volume().unwrap() - sphere.enclosed_volume().unwrap()).abs() < 1e-9
        );
    }

    #[test]
    fn mass_weights_sum_to_area() {
        let cube = unit_cube();
        let w = cube.vertex_mass_weights();
        assert!((w.total - 6.0).abs() < 1e-12);
        assert!((w.weights.iter().sum::<f64>() - w.total).abs() < 1e-12);

        let tri = TriangleMesh::new(
            "tri",
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let w = tri.vertex_mass_weights();
        for &x in &w.weights {
            assert!((x - 3f64.sqrt() / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_vertex_gets_zero_weight() {
        let mut verts = unit_cube().vertices().to_vec();
        verts.push(Point3::new(10.0, 10.0, 10.0));
        let m = TriangleMesh::new("c", verts, unit_cube().faces().to_vec()).unwrap();
        let w = m.vertex_mass_weights();
        assert_eq!(w.weights[8], 0.0);
    }

    #[test]
    fn validate_counts() {
        let cube = unit_cube();
        let r = cube.validate();
        assert_eq!(r.boundary_edges, 0);
        assert_eq!(r.non_manifold_edges, 0);
        assert_eq!(r.euler_characteristic, 2);
        assert_eq!(r.connected_components, 1);

        // remove one face: its three edges become boundary
        let open_faces = cube.faces()[..11].to_vec();
        let open = TriangleMesh::new("open", cube.vertices().to_vec(), open_faces).unwrap();
        assert!(!open.is_closed());
        assert_eq!(open.validate().boundary_edges, 3);

        // two disjoint cubes
        let mut verts = cube.vertices().to_vec();
        let shift: Vec<Point3<f64>> = cube
            .vertices()
            .iter()
            .map(|v| Point3::new(v.x + 5.0, v.y, v.z))
            .collect();
        verts.extend(shift);
        let mut faces = cube.faces().to_vec();
        faces.extend(cube.faces().iter().map(|f| [f[0] + 8, f[1] + 8, f[2] + 8]));
        let two = TriangleMesh::new("two", verts, faces).unwrap();
        assert_eq!(two.validate().connected_components, 2);
    }

    #[test]
    fn volume_is_translation_invariant() {
        let sphere = icosphere(2);
        let iso = Isometry3::translation(123.0, -45.0, 6.0);
        let moved = sphere.transformed(&iso);
        let v0 = sphere.enclosed_volume().unwrap();
        let v1 = moved.enclosed_volume().unwrap();
        assert!((v0 - v1).abs() < 1e-9 * v0.abs().max(1.0));
    }

    #[test]
    fn open_mesh_volume_errors() {
        let cube = unit_cube();
        let open_faces = cube.faces()[..11].to_vec();
        let open = TriangleMesh::new("open", cube.vertices().to_vec(), open_faces).unwrap();
        match open.enclosed_volume() {
            Err(MeshError::OpenMesh { boundary_edges }) => assert_eq!(boundary_edges, 3),
            other => panic!("expected OpenMesh error, got {other:?}"),
        }
    }

    #[test]
    fn decimate_hits_target_and_stays_closed() {
        let sphere = icosphere(4); // 2562 vertices
        assert_eq!(sphere.vertex_count(), 2562);
        let d = decimate(&sphere, 1000).unwrap();
        assert!(
            (950..=1050).contains(&d.vertex_count()),
            "vertex count {}",
            d.vertex_count()
        );
        assert!(d.is_closed());
        assert_eq!(d.validate().non_manifold_edges, 0);
        let rel = (d.surface_area() - sphere.surface_area()).abs() / sphere.surface_area();
        assert!(rel < 0.05, "area drift {rel}");
    }

    #[test]
    fn decimate_rejects_bad_targets() {
        let cube = unit_cube();
        assert!(matches!(
            decimate(&cube, 8),
            Err(MeshError::DecimationTarget { .. })
        ));
        assert!(matches!(
            decimate(&cube, 3),
            Err(MeshError::DecimationTarget { .. })
        ));
    }

    #[test]
    fn constructor_rejects_bad_faces() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        assert!(matches!(
            TriangleMesh::new("m", verts.clone(), vec![[0, 1, 9]]),
            Err(MeshError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            TriangleMesh::new("m", verts, vec![[0, 1, 1]]),
            Err(MeshError::RepeatedVertex { .. })
        ));
    }
}
