//! Oriented piecewise-linear `k`-submanifolds of `ℝᵐ` and the functionals
//! `F[ψ: ω₁..ωₙ](E) = ψ(∫_E ω₁, …, ∫_E ωₙ)`.
//!
//! A cell `[v₀..v_k]` is oriented by its listed vertex order. Its `i`-th face
//! carries the sign `(−1)ⁱ`, which gives Stokes' theorem with a `+` sign
//! (counter-clockwise triangles have counter-clockwise boundary loops).

mod calculus;
pub mod meshes;

pub use calculus::{
    boundary_weak_diff_check, flow_fd_derivative, integrate_form, integrate_form_detailed,
    lie_compat_residual, lifted_derivative, stokes_check, stokes_refinement_study, CylinderFunctionSub,
    Integral, RefinementRow, StokesReport, SubmanifoldGeometry,
};

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{check_dim, invalid, LiftedError, Result};
use crate::smooth::{flow, SmoothVectorField};

#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialManifold {
    k: usize,
    m: usize,
    vertices: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
    /// Orientation of each cell; only `k = 0` cells may carry `−1`.
    signs: Vec<f64>,
}

/// Sorted vertex key of a face and the sign of the sorting permutation.
fn canonical(face: &[usize]) -> (Vec<usize>, f64) {
    let mut key = face.to_vec();
    let mut sign = 1.0;
    for i in 1..key.len() {
        let mut j = i;
        while j > 0 && key[j - 1] > key[j] {
            key.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (key, sign)
}

impl SimplicialManifold {
    /// Validates dimensions, indices and coherent orientation of shared faces.
    pub fn new(k: usize, m: usize, vertices: Vec<Vec<f64>>, cells: Vec<Vec<usize>>) -> Result<Self> {
        let signs = vec![1.0; cells.len()];
        Self::with_signs(k, m, vertices, cells, signs)
    }

    pub fn with_signs(
        k: usize,
        m: usize,
        vertices: Vec<Vec<f64>>,
        cells: Vec<Vec<usize>>,
        signs: Vec<f64>,
    ) -> Result<Self> {
        if k > m {
            return Err(invalid(format!("submanifold dimension {k} exceeds ambient {m}")));
        }
        check_dim("cell signs", cells.len(), signs.len())?;
        for v in &vertices {
            check_dim("vertex", m, v.len())?;
        }
        for (c, s) in cells.iter().zip(&signs) {
            if c.len() != k + 1 {
                return Err(LiftedError::InvalidMesh(format!("cell has {} vertices, expected {}", c.len(), k + 1)));
            }
            if c.iter().any(|&i| i >= vertices.len()) {
                return Err(LiftedError::InvalidMesh("cell references a missing vertex".into()));
            }
            if canonical(c).0.windows(2).any(|w| w[0] == w[1]) {
                return Err(LiftedError::InvalidMesh("cell repeats a vertex".into()));
            }
            if *s != 1.0 && !(k == 0 && *s == -1.0) {
                return Err(LiftedError::InvalidMesh("only 0-cells may carry a negative sign".into()));
            }
        }
        let mesh = SimplicialManifold { k, m, vertices, cells, signs };
        mesh.face_table()?;
        Ok(mesh)
    }

    pub fn empty(k: usize, m: usize) -> Self {
        SimplicialManifold { k, m, vertices: Vec::new(), cells: Vec::new(), signs: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn ambient_dim(&self) -> usize {
        self.m
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Face key ↦ (oriented face, sign) occurrences; fails on non-manifold or
    /// incoherently oriented incidence.
    fn face_table(&self) -> Result<Vec<(Vec<usize>, f64)>> {
        if self.k == 0 {
            return Ok(Vec::new());
        }
        let mut seen: HashMap<Vec<usize>, Vec<(Vec<usize>, f64)>> = HashMap::new();
        let mut order = Vec::new();
        for c in &self.cells {
            for i in 0..=self.k {
                let mut face = c.clone();
                face.remove(i);
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let (key, perm) = canonical(&face);
                let entry = seen.entry(key.clone()).or_default();
                if entry.is_empty() {
                    order.push(key);
                }
                entry.push((face, sign * perm));
            }
        }
        let mut out = Vec::new();
        for key in order {
            let occ = &seen[&key];
            match occ.len() {
                1 => {
                    let (face, s) = &occ[0];
                    let (_, perm) = canonical(face);
                    out.push((face.clone(), s * perm));
                }
                2 => {
                    if occ[0].1 == occ[1].1 {
                        return Err(LiftedError::InvalidMesh(format!(
                            "face {key:?} is shared by cells with the same induced orientation"
                        )));
                    }
                }
                n => {
                    return Err(LiftedError::InvalidMesh(format!("face {key:?} is shared by {n} cells")))
                }
            }
        }
        Ok(out)
    }

    /// `∂E`: the unshared faces with their induced orientation.
    pub fn boundary(&self) -> Result<SimplicialManifold> {
        if self.k == 0 {
            return Err(invalid("a 0-manifold has no boundary operator"));
        }
        let faces = self.face_table()?;
        let mut cells = Vec::with_capacity(faces.len());
        let mut signs = Vec::with_capacity(faces.len());
        for (mut face, s) in faces {
            if self.k == 1 {
                signs.push(s);
            } else {
                if s < 0.0 {
                    face.swap(0, 1);
                }
                signs.push(1.0);
            }
            cells.push(face);
        }
        Ok(SimplicialManifold { k: self.k - 1, m: self.m, vertices: self.vertices.clone(), cells, signs })
    }

    /// Reverses every cell's orientation.
    pub fn reversed(&self) -> SimplicialManifold {
        let mut out = self.clone();
        if self.k == 0 {
            out.signs.iter_mut().for_each(|s| *s = -*s);
        } else {
            for c in &mut out.cells {
                c.swap(0, 1);
            }
        }
        out
    }

    /// Vertexwise time-`t` flow of `v`; connectivity is unchanged.
    pub fn deform(&self, v: &SmoothVectorField, t: f64) -> Result<SimplicialManifold> {
        check_dim("deformation field", self.m, v.dim())?;
        let vertices = self.vertices.iter().map(|x| flow(v, t, x)).collect::<Result<_>>()?;
        Ok(SimplicialManifold { vertices, ..self.clone() })
    }

    /// Applies an arbitrary vertex map.
    pub fn map_vertices(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<SimplicialManifold> {
        let vertices: Vec<Vec<f64>> = self.vertices.iter().map(|x| f(x)).collect();
        let m = vertices.first().map_or(self.m, |v| v.len());
        Self::with_signs(self.k, m, vertices, self.cells.clone(), self.signs.clone())
    }

    /// `(√det Gram)/k!` of every cell.
    pub fn cell_volumes(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| {
                let p0 = &self.vertices[c[0]];
                let edges: Vec<Vec<f64>> = c[1..]
                    .iter()
                    .map(|&i| self.vertices[i].iter().zip(p0).map(|(a, b)| a - b).collect())
                    .collect();
                let k = edges.len();
                let gram = crate::smooth::form::determinant(k, |i, j| {
                    edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum()
                });
                let fact: f64 = (1..=k).map(|i| i as f64).product();
                gram.max(0.0).sqrt() / fact
            })
            .collect()
    }

    /// Largest edge length.
    pub fn mesh_size(&self) -> f64 {
        let mut h: f64 = 0.0;
        for c in &self.cells {
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    h = h.max(crate::smooth::field::dist(&self.vertices[c[i]], &self.vertices[c[j]]));
                }
            }
        }
        h
    }

    /// OFF-style text: `k m`, `nv nc`, vertex lines, cell lines. A 0-cell line
    /// may end with its sign.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
            let (n, l) = lines
                .next()
                .ok_or_else(|| LiftedError::Parse { line: 0, msg: format!("missing {what}") })?;
            Ok((n, l.split_whitespace().collect()))
        };
        let ints = |n: usize, toks: &[&str], want: usize| -> Result<Vec<usize>> {
            if toks.len() != want {
                return Err(LiftedError::Parse { line: n, msg: format!("expected {want} integers") });
            }
            toks.iter()
                .map(|t| t.parse::<usize>().map_err(|e| LiftedError::Parse { line: n, msg: format!("{t:?}: {e}") }))
                .collect()
        };
        let (n, t) = next("header")?;
        let km = ints(n, &t, 2)?;
        let (k, m) = (km[0], km[1]);
        let (n, t) = next("counts")?;
        let counts = ints(n, &t, 2)?;
        let mut vertices = Vec::with_capacity(counts[0]);
        for _ in 0..counts[0] {
            let (n, t) = next("vertex")?;
            if t.len() != m {
                return Err(LiftedError::Parse { line: n, msg: format!("expected {m} coordinates") });
            }
            vertices.push(
                t.iter()
                    .map(|s| s.parse::<f64>().map_err(|e| LiftedError::Parse { line: n, msg: format!("{s:?}: {e}") }))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let mut cells = Vec::with_capacity(counts[1]);
        let mut signs = Vec::with_capacity(counts[1]);
        for _ in 0..counts[1] {
            let (n, t) = next("cell")?;
            if k == 0 && t.len() == 2 {
                let s: f64 = t[1].parse().map_err(|_| LiftedError::Parse { line: n, msg: "bad sign".into() })?;
                cells.push(ints(n, &t[..1], 1)?);
                signs.push(s);
            } else {
                cells.push(ints(n, &t, k + 1)?);
                signs.push(1.0);
            }
        }
        Self::with_signs(k, m, vertices, cells, signs)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n{} {}\n", self.k, self.m, self.vertices.len(), self.cells.len());
        for v in &self.vertices {
            let line: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        for (c, sg) in self.cells.iter().zip(&self.signs) {
            let line: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            if self.k == 0 && *sg < 0.0 {
                let _ = writeln!(s, "{} -1", line.join(" "));
            } else {
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        s
    }
}
