//! Procedural primitives used by tests and the benchmark generator.

use super::TriangleMesh;
use nalgebra::Point3;
use std::collections::HashMap;

/// Axis-aligned unit cube spanning `[0, 1]^3`, 8 vertices and 12 outward
/// triangles.
pub fn unit_cube() -> TriangleMesh {
    let vertices = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(1.0, 0.0, 1.0),
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(0.0, 1.0, 1.0),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriangleMesh::new("unit_cube", vertices, faces).expect("cube is valid")
}

/// Unit icosphere: icosahedron subdivided `subdivisions` times with vertices
/// projected to the unit sphere. Vertex count is 12, 42, 162, 642, 2562, ...
pub fn icosphere(subdivisions: usize) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = vec![
        Point3::new(-1.0, phi, 0.0),
        Point3::new(1.0, phi, 0.0),
        Point3::new(-1.0, -phi, 0.0),
        Point3::new(1.0, -phi, 0.0),
        Point3::new(0.0, -1.0, phi),
        Point3::new(0.0, 1.0, phi),
        Point3::new(0.0, -1.0, -phi),
        Point3::new(0.0, 1.0, -phi),
        Point3::new(phi, 0.0, -1.0),
        Point3::new(phi, 0.0, 1.0),
        Point3::new(-phi, 0.0, -1.0),
        Point3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|p| Point3::from(p.coords.normalize()))
    .collect();

    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let p = Point3::from(
                        ((vertices[a].coords + vertices[b].coords) / 2.0).normalize(),
                    );
                    vertices.push(p);
                    vertices.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }

    TriangleMesh::new(format!("icosphere_{subdivisions}"), vertices, faces)
        .expect("icosphere is valid")
}

/// Closed cylinder of radius `r` and height `h` along the z axis, with
/// `segments` radial and `rings` axial subdivisions and fan caps.
pub fn capped_cylinder(r: f64, h: f64, segments: usize, rings: usize) -> TriangleMesh {
    assert!(segments >= 3 && rings >= 1);
    let mut vertices = Vec::new();
    for ring in 0..=rings {
        let z = h * ring as f64 / rings as f64;
        for s in 0..segments {
            let a = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            vertices.push(Point3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let bottom_center = vertices.len();
    vertices.push(Point3::new(0.0, 0.0, 0.0));
    let top_center = vertices.len();
    vertices.push(Point3::new(0.0, 0.0, h));

    let mut faces = Vec::new();
    let idx = |ring: usize, s: usize| ring * segments + (s % segments);
    for ring in 0..rings {
        for s in 0..segments {
            let (a, b) = (idx(ring, s), idx(ring, s + 1));
            let (c, d) = (idx(ring + 1, s), idx(ring + 1, s + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    for s in 0..segments {
        faces.push([bottom_center, idx(0, s + 1), idx(0, s)]);
        faces.push([top_center, idx(rings, s), idx(rings, s + 1)]);
    }
    TriangleMesh::new("cylinder", vertices, faces).expect("cylinder is valid")
}
