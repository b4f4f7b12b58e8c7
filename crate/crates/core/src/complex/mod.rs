//! Edge-oriented combinatorial 2-complexes with labeled edges and faces.
//!
//! Every face carries an explicit boundary loop (start vertex and orientation),
//! so complexes need not be planar. Planar, simply connected diagrams live in
//! [`diagram`].

pub mod diagram;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words::{Letter, Presentation, Word};

pub use diagram::{Placement, VanKampenDiagram};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub src: VertexId,
    pub dst: VertexId,
    pub label: Letter,
    pub inverse: EdgeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    /// Index of the relator labeling this face.
    pub relator: usize,
    /// Boundary loop; its start vertex is `src` of the first edge.
    pub boundary: Vec<EdgeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoComplex {
    pub num_vertices: usize,
    pub edges: Vec<DirectedEdge>,
    pub faces: Vec<Face>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    VertexOutOfRange { edge: EdgeId },
    InverseOutOfRange { edge: EdgeId },
    InverseFixedPoint { edge: EdgeId },
    InverseNotInvolution { edge: EdgeId },
    InverseEndpoints { edge: EdgeId },
    LabelInvolution { edge: EdgeId },
    EmptyFace { face: FaceId },
    FaceEdgeOutOfRange { face: FaceId, position: usize },
    FaceLoopBroken { face: FaceId, position: usize },
    FaceLoopNotReduced { face: FaceId, position: usize },
    FaceRelatorMissing { face: FaceId },
    FaceWordMismatch { face: FaceId },
    // embedding-level checks for van Kampen diagrams
    OrientationCount { expected: usize, found: usize },
    DartCoverage { edge: EdgeId, count: usize },
    BoundaryBroken { position: usize },
    VertexNotDisk { vertex: VertexId, cycles: usize },
    Disconnected,
    EulerCharacteristic { value: i64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("identified paths disagree: {0}")]
    LabelMismatch(String),
    #[error("identified paths have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("reference to part {0} or one of its edges is out of range")]
    BadReference(usize),
    #[error("gluing identifies an edge with its own inverse")]
    Degenerate,
    #[error("diagram has no faces")]
    EmptyDiagram,
}

/// The quantities attached to a complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramMetrics {
    pub num_faces: usize,
    pub num_1cells: usize,
    pub reduction_degree: usize,
    pub cancellation: usize,
    pub face_boundary_total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_length: Option<usize>,
    pub max_arcs_per_face: usize,
}

/// A reducible pair: faces `first < second` with the same relator sharing `edge`
/// as their `position`-th boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReduciblePair {
    pub first: FaceId,
    pub second: FaceId,
    pub edge: EdgeId,
    pub position: usize,
}

impl TwoComplex {
    pub fn new(num_vertices: usize) -> TwoComplex {
        TwoComplex { num_vertices, edges: Vec::new(), faces: Vec::new() }
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.num_vertices += 1;
        self.num_vertices - 1
    }

    /// Adds the pair `e: src → dst` and `e⁻¹`; returns `e`. The inverse is `e + 1`.
    pub fn add_edge(&mut self, src: VertexId, dst: VertexId, label: Letter) -> EdgeId {
        let e = self.edges.len();
        self.edges.push(DirectedEdge { src, dst, label, inverse: e + 1 });
        self.edges.push(DirectedEdge { src: dst, dst: src, label: label.inverse(), inverse: e });
        e
    }

    pub fn add_face(&mut self, relator: usize, boundary: Vec<EdgeId>) -> FaceId {
        self.faces.push(Face { relator, boundary });
        self.faces.len() - 1
    }

    pub fn inv(&self, e: EdgeId) -> EdgeId {
        self.edges[e].inverse
    }

    pub fn src(&self, e: EdgeId) -> VertexId {
        self.edges[e].src
    }

    pub fn dst(&self, e: EdgeId) -> VertexId {
        self.edges[e].dst
    }

    pub fn label(&self, e: EdgeId) -> Letter {
        self.edges[e].label
    }

    /// Representative of the 1-cell `{e, e⁻¹}`.
    pub fn undirected(&self, e: EdgeId) -> EdgeId {
        e.min(self.edges[e].inverse)
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_1cells(&self) -> usize {
        (0..self.edges.len()).filter(|&e| self.edges[e].inverse > e).count()
    }

    pub fn path_word(&self, path: &[EdgeId]) -> Word {
        Word::from_letters(path.iter().map(|&e| self.label(e)).collect())
    }

    pub fn face_word(&self, f: FaceId) -> Word {
        self.path_word(&self.faces[f].boundary)
    }

    /// Reverse of a path with every edge inverted.
    pub fn reverse_path(&self, path: &[EdgeId]) -> Vec<EdgeId> {
        path.iter().rev().map(|&e| self.inv(e)).collect()
    }

    /// Reports every violated structural invariant. When a presentation is given,
    /// face words are also compared with their relators.
    pub fn validate(&self, pres: Option<&Presentation>) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let n = self.edges.len();
        let mut involution_ok = true;
        for (e, de) in self.edges.iter().enumerate() {
            if de.src >= self.num_vertices || de.dst >= self.num_vertices {
                out.push(Diagnostic::VertexOutOfRange { edge: e });
                involution_ok = false;
                continue;
            }
            if de.inverse >= n {
                out.push(Diagnostic::InverseOutOfRange { edge: e });
                involution_ok = false;
                continue;
            }
            if de.inverse == e {
                out.push(Diagnostic::InverseFixedPoint { edge: e });
                involution_ok = false;
                continue;
            }
            let ie = &self.edges[de.inverse];
            if ie.inverse != e {
                out.push(Diagnostic::InverseNotInvolution { edge: e });
                involution_ok = false;
            }
            if ie.src != de.dst || ie.dst != de.src {
                out.push(Diagnostic::InverseEndpoints { edge: e });
            }
            if ie.label != de.label.inverse() {
                out.push(Diagnostic::LabelInvolution { edge: e });
            }
        }
        for (f, face) in self.faces.iter().enumerate() {
            let b = &face.boundary;
            if b.is_empty() {
                out.push(Diagnostic::EmptyFace { face: f });
                continue;
            }
            if let Some(position) = b.iter().position(|&e| e >= n) {
                out.push(Diagnostic::FaceEdgeOutOfRange { face: f, position });
                continue;
            }
            for i in 0..b.len() {
                let next = b[(i + 1) % b.len()];
                if self.edges[b[i]].dst != self.edges[next].src {
                    out.push(Diagnostic::FaceLoopBroken { face: f, position: i });
                }
                if involution_ok && b.len() > 1 && next == self.edges[b[i]].inverse {
                    out.push(Diagnostic::FaceLoopNotReduced { face: f, position: i });
                }
            }
            if let Some(p) = pres {
                match p.relators.get(face.relator) {
                    None => out.push(Diagnostic::FaceRelatorMissing { face: f }),
                    Some(r) => {
                        if &self.face_word(f) != r {
                            out.push(Diagnostic::FaceWordMismatch { face: f });
                        }
                    }
                }
            }
        }
        out
    }

    /// Number of face-boundary incidences on each 1-cell, indexed by `undirected(e)`.
    pub fn edge_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.edges.len()];
        for face in &self.faces {
            for &e in &face.boundary {
                deg[self.undirected(e)] += 1;
            }
        }
        deg
    }

    /// `Cancel(Y) = Σ_e (deg(e) − 1)⁺` over 1-cells.
    pub fn cancellation(&self) -> usize {
        self.edge_degrees().iter().map(|&d| d.saturating_sub(1)).sum()
    }

    /// Reduction degree: for each directed edge `e`, relator `r` and index `j`, add
    /// `(t − 1)⁺` where `t` counts faces labeled `r` whose `j`-th boundary edge is `e`.
    pub fn reduction_degree(&self) -> usize {
        let mut counts: HashMap<(EdgeId, usize, usize), usize> = HashMap::new();
        for face in &self.faces {
            for (j, &e) in face.boundary.iter().enumerate() {
                *counts.entry((e, face.relator, j)).or_default() += 1;
            }
        }
        counts.values().map(|&t| t - 1).sum()
    }

    /// Reducible pairs by direct pairwise comparison of face loops.
    pub fn reducible_pairs(&self) -> Vec<ReduciblePair> {
        let mut out = Vec::new();
        for (i, f) in self.faces.iter().enumerate() {
            for (k, g) in self.faces.iter().enumerate().skip(i + 1) {
                if f.relator != g.relator {
                    continue;
                }
                for (j, (&a, &b)) in f.boundary.iter().zip(&g.boundary).enumerate() {
                    if a == b {
                        out.push(ReduciblePair { first: i, second: k, edge: a, position: j });
                    }
                }
            }
        }
        out
    }

    pub fn is_reduced(&self) -> bool {
        self.reducible_pairs().is_empty()
    }

    /// Number of edge ends at each vertex; a loop edge counts twice.
    pub fn vertex_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_vertices];
        for e in &self.edges {
            deg[e.src] += 1;
        }
        deg
    }

    /// Vertices of degree ≠ 2, plus every boundary-loop start vertex.
    pub fn singular_vertices(&self) -> Vec<bool> {
        let mut s: Vec<bool> = self.vertex_degrees().iter().map(|&d| d != 2).collect();
        for face in &self.faces {
            if let Some(&e) = face.boundary.first() {
                s[self.src(e)] = true;
            }
        }
        s
    }

    /// Partition of the 1-skeleton into maximal arcs. A component with no singular
    /// vertex is a cycle and is returned as one closed arc.
    pub fn maximal_arcs(&self) -> Vec<Vec<EdgeId>> {
        let singular = self.singular_vertices();
        let mut out_edges: Vec<Vec<EdgeId>> = vec![Vec::new(); self.num_vertices];
        for (e, de) in self.edges.iter().enumerate() {
            out_edges[de.src].push(e);
        }
        let mut used = vec![false; self.edges.len()];
        let mut arcs = Vec::new();
        let walk = |start: EdgeId, used: &mut Vec<bool>| -> Vec<EdgeId> {
            let mut arc = vec![start];
            used[start] = true;
            used[self.inv(start)] = true;
            let mut cur = start;
            loop {
                let v = self.dst(cur);
                if singular[v] {
                    break;
                }
                // non-singular: exactly two edge ends, one is cur⁻¹
                let Some(&next) = out_edges[v].iter().find(|&&e| !used[e]) else { break };
                used[next] = true;
                used[self.inv(next)] = true;
                arc.push(next);
                cur = next;
            }
            arc
        };
        for v in 0..self.num_vertices {
            if !singular[v] {
                continue;
            }
            for &e in &out_edges[v] {
                if !used[e] {
                    arcs.push(walk(e, &mut used));
                }
            }
        }
        for e in 0..self.edges.len() {
            if !used[e] {
                arcs.push(walk(e, &mut used));
            }
        }
        arcs
    }

    /// Number of maximal arcs the boundary loop of `f` is divided into.
    pub fn face_arc_count(&self, f: FaceId, singular: &[bool]) -> usize {
        let b = &self.faces[f].boundary;
        b.iter().filter(|&&e| singular[self.src(e)]).count().max(1)
    }

    pub fn max_arcs_per_face(&self) -> usize {
        let s = self.singular_vertices();
        (0..self.faces.len()).map(|f| self.face_arc_count(f, &s)).max().unwrap_or(0)
    }

    /// At most `k` faces and every boundary loop split into at most `k` maximal arcs.
    pub fn complexity_at_most(&self, k: usize) -> bool {
        self.faces.len() <= k && self.max_arcs_per_face() <= k
    }

    pub fn metrics(&self) -> DiagramMetrics {
        DiagramMetrics {
            num_faces: self.num_faces(),
            num_1cells: self.num_1cells(),
            reduction_degree: self.reduction_degree(),
            cancellation: self.cancellation(),
            face_boundary_total: self.faces.iter().map(|f| f.boundary.len()).sum(),
            boundary_length: None,
            max_arcs_per_face: self.max_arcs_per_face(),
        }
    }

    /// Connected components of the 1-skeleton, as a component id per vertex.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut uf = UnionFind::new(self.num_vertices);
        for e in &self.edges {
            uf.union(e.src, e.dst);
        }
        uf.classes()
    }
}

/// A path in one of the parts passed to [`glue`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRef {
    pub part: usize,
    pub edges: Vec<EdgeId>,
}

/// Quotient of the disjoint union of `parts` by identifying paths edge by edge.
/// Face relator indices are kept as they are, so parts must share one presentation.
pub fn glue(parts: &[TwoComplex], identifications: &[(PathRef, PathRef)]) -> Result<TwoComplex, ComplexError> {
    glue_mapped(parts, identifications).map(|(c, _)| c)
}

/// As [`glue`], also returning where each part's directed edges went.
/// Faces of the result are the parts' faces in order.
pub fn glue_mapped(
    parts: &[TwoComplex],
    identifications: &[(PathRef, PathRef)],
) -> Result<(TwoComplex, Vec<Vec<EdgeId>>), ComplexError> {
    let mut vbase = Vec::with_capacity(parts.len());
    let mut ebase = Vec::with_capacity(parts.len());
    let (mut nv, mut ne) = (0, 0);
    for p in parts {
        vbase.push(nv);
        ebase.push(ne);
        nv += p.num_vertices;
        ne += p.edges.len();
    }
    let mut all_edges = Vec::with_capacity(ne);
    for (i, p) in parts.iter().enumerate() {
        for e in &p.edges {
            all_edges.push(DirectedEdge {
                src: e.src + vbase[i],
                dst: e.dst + vbase[i],
                label: e.label,
                inverse: e.inverse + ebase[i],
            });
        }
    }
    let mut vuf = UnionFind::new(nv);
    let mut euf = UnionFind::new(ne);
    for (a, b) in identifications {
        if a.edges.len() != b.edges.len() {
            return Err(ComplexError::LengthMismatch(a.edges.len(), b.edges.len()));
        }
        for (&x, &y) in a.edges.iter().zip(&b.edges) {
            let pa = parts.get(a.part).ok_or(ComplexError::BadReference(a.part))?;
            let pb = parts.get(b.part).ok_or(ComplexError::BadReference(b.part))?;
            if x >= pa.edges.len() || y >= pb.edges.len() {
                return Err(ComplexError::BadReference(if x >= pa.edges.len() { a.part } else { b.part }));
            }
            let gx = x + ebase[a.part];
            let gy = y + ebase[b.part];
            if all_edges[gx].label != all_edges[gy].label {
                return Err(ComplexError::LabelMismatch(format!(
                    "part {} edge {} is {:?}, part {} edge {} is {:?}",
                    a.part, x, all_edges[gx].label, b.part, y, all_edges[gy].label
                )));
            }
            euf.union(gx, gy);
            euf.union(all_edges[gx].inverse, all_edges[gy].inverse);
            vuf.union(all_edges[gx].src, all_edges[gy].src);
            vuf.union(all_edges[gx].dst, all_edges[gy].dst);
        }
    }
    let (num_vertices, vclass) = vuf.classes();
    let mut new_id: Vec<Option<EdgeId>> = vec![None; ne];
    let mut edges: Vec<DirectedEdge> = Vec::new();
    let mut class_id: HashMap<usize, EdgeId> = HashMap::new();
    for e in 0..ne {
        let c = euf.find(e);
        if let Some(&id) = class_id.get(&c) {
            new_id[e] = Some(id);
            continue;
        }
        let ci = euf.find(all_edges[e].inverse);
        if ci == c {
            return Err(ComplexError::Degenerate);
        }
        let id = edges.len();
        let de = &all_edges[e];
        edges.push(DirectedEdge { src: vclass[de.src], dst: vclass[de.dst], label: de.label, inverse: id + 1 });
        edges.push(DirectedEdge { src: vclass[de.dst], dst: vclass[de.src], label: de.label.inverse(), inverse: id });
        class_id.insert(c, id);
        class_id.insert(ci, id + 1);
        new_id[e] = Some(id);
    }
    let mut faces = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        for f in &p.faces {
            faces.push(Face {
                relator: f.relator,
                boundary: f.boundary.iter().map(|&e| new_id[e + ebase[i]].expect("assigned")).collect(),
            });
        }
    }
    let map = parts
        .iter()
        .enumerate()
        .map(|(i, p)| (0..p.edges.len()).map(|e| new_id[e + ebase[i]].expect("assigned")).collect())
        .collect();
    Ok((TwoComplex { num_vertices, edges, faces }, map))
}

/// A bare path complex reading `word`; used as the common target when gluing
/// several diagrams along one geodesic.
pub fn path_complex(word: &Word) -> (TwoComplex, Vec<EdgeId>) {
    let mut c = TwoComplex::new(word.len() + 1);
    let path = word.letters().iter().enumerate().map(|(i, &l)| c.add_edge(i, i + 1, l)).collect();
    (c, path)
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Dense class ids in order of smallest member.
    pub(crate) fn classes(&mut self) -> (usize, Vec<usize>) {
        let n = self.parent.len();
        let mut id = vec![usize::MAX; n];
        let mut out = vec![0; n];
        let mut k = 0;
        for (x, o) in out.iter_mut().enumerate() {
            let r = self.find(x);
            if id[r] == usize::MAX {
                id[r] = k;
                k += 1;
            }
            *o = id[r];
        }
        (k, out)
    }
}
