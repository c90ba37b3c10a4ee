//! Bundled mesh families. Every 2-mesh is oriented counter-clockwise (or
//! with outward normals for the sphere).

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::submanifold::SimplicialManifold;

fn need(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        Err(invalid(format!("{what} needs a positive refinement")))
    } else {
        Ok(())
    }
}

/// `[0,1]²` split into `2n²` triangles.
pub fn unit_square(n: usize) -> Result<SimplicialManifold> {
    need(n, "square mesh")?;
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(vec![i as f64 * h, j as f64 * h]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push(vec![a, b, c]);
            cells.push(vec![a, c, d]);
        }
    }
    SimplicialManifold::new(2, 2, vertices, cells)
}

/// The triangle with corners `(0,0), (1,0), (0,1)` split into `n²` triangles.
pub fn triangle(n: usize) -> Result<SimplicialManifold> {
    need(n, "triangle mesh")?;
    let h = 1.0 / n as f64;
    let mut index = HashMap::new();
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n - j {
            index.insert((i, j), vertices.len());
            vertices.push(vec![i as f64 * h, j as f64 * h]);
        }
    }
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n - j {
            cells.push(vec![index[&(i, j)], index[&(i + 1, j)], index[&(i, j + 1)]]);
            if i + j + 1 < n {
                cells.push(vec![index[&(i + 1, j)], index[&(i + 1, j + 1)], index[&(i, j + 1)]]);
            }
        }
    }
    SimplicialManifold::new(2, 2, vertices, cells)
}

/// Disk of the given radius: `n` rings, ring `j` has `6j` vertices on the
/// circle of radius `j·radius/n`; `6n²` triangles, boundary a regular `6n`-gon.
pub fn disk(n: usize, radius: f64) -> Result<SimplicialManifold> {
    need(n, "disk mesh")?;
    let mut vertices = vec![vec![0.0, 0.0]];
    let mut start = vec![0usize];
    for j in 1..=n {
        start.push(vertices.len());
        let r = radius * j as f64 / n as f64;
        for i in 0..6 * j {
            let a = 2.0 * PI * i as f64 / (6 * j) as f64;
            vertices.push(vec![r * a.cos(), r * a.sin()]);
        }
    }
    let ring = |j: usize, i: usize| if j == 0 { 0 } else { start[j] + i % (6 * j) };
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 1..=n {
        for s in 0..6 {
            for i in 0..j {
                cells.push(vec![ring(j, s * j + i), ring(j, s * j + i + 1), ring(j - 1, s * (j - 1) + i)]);
            }
            for i in 0..j - 1 {
                cells.push(vec![
                    ring(j - 1, s * (j - 1) + i),
                    ring(j, s * j + i + 1),
                    ring(j - 1, s * (j - 1) + i + 1),
                ]);
            }
        }
    }
    SimplicialManifold::new(2, 2, vertices, cells)
}

/// Closed counter-clockwise polygon with `n` vertices on a circle.
pub fn loop_mesh(n: usize, radius: f64) -> Result<SimplicialManifold> {
    if n < 3 {
        return Err(invalid("loop mesh needs at least 3 vertices"));
    }
    let vertices = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            vec![radius * a.cos(), radius * a.sin()]
        })
        .collect();
    let cells = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    SimplicialManifold::new(1, 2, vertices, cells)
}

/// Octahedron with each face split into `n²` triangles, projected onto the
/// sphere of the given radius; outward orientation.
pub fn sphere(n: usize, radius: f64) -> Result<SimplicialManifold> {
    need(n, "sphere mesh")?;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut id = |p: [i64; 3]| -> usize {
        *index.entry(p).or_insert_with(|| {
            let norm = ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64).sqrt();
            vertices.push(p.iter().map(|&c| radius * c as f64 / norm).collect());
            vertices.len() - 1
        })
    };
    let ni = n as i64;
    let mut cells = Vec::with_capacity(8 * n * n);
    for sx in [1i64, -1] {
        for sy in [1i64, -1] {
            for sz in [1i64, -1] {
                let pt = |i: i64, j: i64| [sx * (ni - i - j), sy * i, sz * j];
                let flip = sx * sy * sz < 0;
                let mut push = |a: usize, b: usize, c: usize| {
                    cells.push(if flip { vec![a, c, b] } else { vec![a, b, c] });
                };
                for j in 0..ni {
                    for i in 0..ni - j {
                        let (a, b, c) = (id(pt(i, j)), id(pt(i + 1, j)), id(pt(i, j + 1)));
                        push(a, b, c);
                        if i + j + 1 < ni {
                            let (a, b, c) = (id(pt(i + 1, j)), id(pt(i + 1, j + 1)), id(pt(i, j + 1)));
                            push(a, b, c);
                        }
                    }
                }
            }
        }
    }
    SimplicialManifold::new(2, 3, vertices, cells)
}
