//! Planar simply connected diagrams.
//!
//! The embedding is encoded by face orbits: walking a face orbit keeps the face on
//! the left. A face whose `face_orientation` flag is set has its boundary loop as
//! its orbit; otherwise the orbit is the loop reversed and inverted. The boundary
//! loop `boundary` runs the same way round, so the outer orbit is its reverse
//! inverse. Every dart lies in exactly one orbit and the rotation at a vertex is
//! `σ(d) = φ(d⁻¹)` where `φ` is the orbit successor.

use std::collections::{HashMap, VecDeque};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ComplexError, Diagnostic, DiagramMetrics, EdgeId, TwoComplex, VertexId};
use crate::words::{Letter, Presentation, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanKampenDiagram {
    pub complex: TwoComplex,
    pub face_orientation: Vec<bool>,
    pub boundary: Vec<EdgeId>,
}

/// How a relator is laid into a new face: the face orbit reads
/// `rotate(r, offset)` or, when `inverted`, `rotate(r⁻¹, offset)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub inverted: bool,
    pub offset: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttachError {
    #[error("boundary segment ({start}, {len}) is out of range for boundary length {boundary}")]
    SegmentOutOfRange { start: usize, len: usize, boundary: usize },
    #[error("segment of length {len} is longer than the relator ({relator})")]
    TooLong { len: usize, relator: usize },
    #[error("segment does not match the relator placement")]
    LabelMismatch,
    #[error("a full-length segment must be a closed path")]
    NotClosed,
    #[error("offset {0} is out of range")]
    BadOffset(usize),
}

/// Canonical form of a diagram up to label-preserving planar isomorphism and mirror.
pub type CanonicalCode = Vec<u32>;

impl VanKampenDiagram {
    /// The single-vertex diagram with no faces; its boundary word is empty.
    pub fn empty() -> VanKampenDiagram {
        VanKampenDiagram { complex: TwoComplex::new(1), face_orientation: Vec::new(), boundary: Vec::new() }
    }

    pub fn single_face(relator_idx: usize, r: &Word) -> VanKampenDiagram {
        let mut d = VanKampenDiagram::empty();
        d.attach_face(0, 0, relator_idx, r, Placement { inverted: false, offset: 0 })
            .expect("attaching to the empty diagram cannot fail");
        d
    }

    pub fn num_faces(&self) -> usize {
        self.complex.faces.len()
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary.len()
    }

    pub fn boundary_word(&self) -> Word {
        self.complex.path_word(&self.boundary)
    }

    /// Vertex where the boundary loop is at position `p` (taken cyclically).
    pub fn boundary_vertex(&self, p: usize) -> VertexId {
        if self.boundary.is_empty() {
            0
        } else {
            self.complex.src(self.boundary[p % self.boundary.len()])
        }
    }

    pub fn face_orbit(&self, f: usize) -> Vec<EdgeId> {
        let b = &self.complex.faces[f].boundary;
        if self.face_orientation[f] {
            b.clone()
        } else {
            self.complex.reverse_path(b)
        }
    }

    pub fn outer_orbit(&self) -> Vec<EdgeId> {
        self.complex.reverse_path(&self.boundary)
    }

    /// Attaches a new face along the boundary segment of length `len` starting at
    /// position `start` (cyclically). The face orbit is `N · S⁻¹` where `S` is the
    /// segment and `N` a fresh path, so the segment is replaced by `N` in the
    /// boundary. With `len = 0` the face hangs from the vertex at `start`.
    ///
    /// If the segment wraps past the end of the boundary, the new boundary starts
    /// with `N`.
    pub fn attach_face(
        &mut self,
        start: usize,
        len: usize,
        relator_idx: usize,
        r: &Word,
        placement: Placement,
    ) -> Result<usize, AttachError> {
        let blen = self.boundary.len();
        let n = r.len();
        let in_range = if blen == 0 { start == 0 && len == 0 } else { start < blen && len <= blen };
        if !in_range {
            return Err(AttachError::SegmentOutOfRange { start, len, boundary: blen });
        }
        if len > n {
            return Err(AttachError::TooLong { len, relator: n });
        }
        if placement.offset >= n {
            return Err(AttachError::BadOffset(placement.offset));
        }
        let orbit_word = if placement.inverted { r.inverse() } else { r.clone() }.rotate(placement.offset);
        let seg: Vec<EdgeId> = (0..len).map(|i| self.boundary[(start + i) % blen.max(1)]).collect();
        let back = self.complex.reverse_path(&seg);
        let tail = &orbit_word.letters()[n - len..];
        if self.complex.path_word(&back).letters() != tail {
            return Err(AttachError::LabelMismatch);
        }
        let a = self.boundary_vertex(start);
        let b = if len == 0 { a } else { self.complex.dst(seg[len - 1]) };
        let head = &orbit_word.letters()[..n - len];
        if head.is_empty() && a != b {
            return Err(AttachError::NotClosed);
        }
        let mut path = Vec::with_capacity(head.len());
        let mut cur = a;
        for (i, &l) in head.iter().enumerate() {
            let next = if i + 1 == head.len() { b } else { self.complex.add_vertex() };
            path.push(self.complex.add_edge(cur, next, l));
            cur = next;
        }
        let orbit: Vec<EdgeId> = path.iter().copied().chain(back).collect();
        let loop_: Vec<EdgeId> = if placement.inverted {
            (0..n).map(|j| self.complex.inv(orbit[(2 * n - 1 - j - placement.offset) % n])).collect()
        } else {
            (0..n).map(|j| orbit[(j + n - placement.offset) % n]).collect()
        };
        let f = self.complex.add_face(relator_idx, loop_);
        self.face_orientation.push(!placement.inverted);
        self.boundary = if blen == 0 {
            path
        } else if start + len <= blen {
            let mut nb = self.boundary[..start].to_vec();
            nb.extend(path);
            nb.extend_from_slice(&self.boundary[start + len..]);
            nb
        } else {
            let mut nb = path;
            nb.extend_from_slice(&self.boundary[start + len - blen..start]);
            nb
        };
        Ok(f)
    }

    /// Inserts a spur `e e⁻¹` labeled `label` into the boundary before position `pos`.
    pub fn insert_spur(&mut self, pos: usize, label: Letter) {
        let v = self.boundary_vertex(pos);
        let u = self.complex.add_vertex();
        let e = self.complex.add_edge(v, u, label);
        let inv = self.complex.inv(e);
        let pos = if self.boundary.is_empty() { 0 } else { pos % self.boundary.len() };
        self.boundary.splice(pos..pos, [e, inv]);
    }

    /// Orbit successor `φ` as a dart-indexed table; `None` if some dart is in
    /// no orbit or in several.
    fn orbit_successor(&self) -> (Vec<usize>, Vec<Option<EdgeId>>) {
        let ne = self.complex.edges.len();
        let mut count = vec![0usize; ne];
        let mut phi = vec![None; ne];
        let mut add = |orbit: &[EdgeId]| {
            for (i, &e) in orbit.iter().enumerate() {
                if e < ne {
                    count[e] += 1;
                    phi[e] = Some(orbit[(i + 1) % orbit.len()]);
                }
            }
        };
        for f in 0..self.num_faces() {
            add(&self.face_orbit(f));
        }
        add(&self.outer_orbit());
        (count, phi)
    }

    /// Rotation `σ` at each dart's source vertex.
    pub fn rotation_system(&self) -> Vec<EdgeId> {
        let (_, phi) = self.orbit_successor();
        (0..self.complex.edges.len()).map(|d| phi[self.complex.inv(d)].expect("valid diagram")).collect()
    }

    /// Checks the complex and its embedding; empty iff this is a planar,
    /// simply connected diagram.
    pub fn validate_embedding(&self, pres: Option<&Presentation>) -> Vec<Diagnostic> {
        let mut out = self.complex.validate(pres);
        if !out.is_empty() {
            return out;
        }
        let c = &self.complex;
        if self.face_orientation.len() != c.faces.len() {
            out.push(Diagnostic::OrientationCount { expected: c.faces.len(), found: self.face_orientation.len() });
            return out;
        }
        for (i, &e) in self.boundary.iter().enumerate() {
            let next = self.boundary[(i + 1) % self.boundary.len()];
            if e >= c.edges.len() || next >= c.edges.len() || c.dst(e) != c.src(next) {
                out.push(Diagnostic::BoundaryBroken { position: i });
            }
        }
        if !out.is_empty() {
            return out;
        }
        let (count, phi) = self.orbit_successor();
        for (e, &k) in count.iter().enumerate() {
            if k != 1 {
                out.push(Diagnostic::DartCoverage { edge: e, count: k });
            }
        }
        if !out.is_empty() {
            return out;
        }
        let sigma: Vec<EdgeId> = (0..c.edges.len()).map(|d| phi[c.inv(d)].unwrap()).collect();
        let mut cycles = vec![0usize; c.num_vertices];
        let mut seen = vec![false; c.edges.len()];
        for d in 0..c.edges.len() {
            if seen[d] {
                continue;
            }
            cycles[c.src(d)] += 1;
            let mut x = d;
            while !seen[x] {
                seen[x] = true;
                x = sigma[x];
            }
        }
        for (v, &k) in cycles.iter().enumerate() {
            let isolated_ok = k == 0 && c.edges.is_empty() && c.num_vertices == 1;
            if k != 1 && !isolated_ok {
                out.push(Diagnostic::VertexNotDisk { vertex: v, cycles: k });
            }
        }
        if c.components().0 != 1 {
            out.push(Diagnostic::Disconnected);
        }
        let chi = c.num_vertices as i64 - c.num_1cells() as i64 + c.faces.len() as i64;
        if chi != 1 {
            out.push(Diagnostic::EulerCharacteristic { value: chi });
        }
        out
    }

    /// Valid, nonempty and with a simple boundary loop (no spurs or cut vertices).
    pub fn is_disk(&self) -> bool {
        if self.num_faces() == 0 || !self.validate_embedding(None).is_empty() {
            return false;
        }
        let mut seen = vec![false; self.complex.num_vertices];
        self.boundary.iter().all(|&e| !std::mem::replace(&mut seen[self.complex.src(e)], true))
    }

    /// `|∂D| / (|D| ℓ)`.
    pub fn isoperimetric_ratio(&self, l: usize) -> Result<Ratio<i64>, ComplexError> {
        if self.num_faces() == 0 || l == 0 {
            return Err(ComplexError::EmptyDiagram);
        }
        Ok(Ratio::new(self.boundary.len() as i64, (self.num_faces() * l) as i64))
    }

    pub fn metrics(&self) -> DiagramMetrics {
        let mut m = self.complex.metrics();
        m.boundary_length = Some(self.boundary.len());
        m
    }

    /// Canonical code, equal for two diagrams iff they are isomorphic as labeled
    /// planar maps with their face loops, allowing a reflection.
    pub fn canonical_code(&self) -> CanonicalCode {
        let c = &self.complex;
        let nd = c.edges.len();
        if nd == 0 {
            return vec![c.faces.len() as u32];
        }
        let sigma = self.rotation_system();
        let mut sigma_inv = vec![0; nd];
        for (d, &s) in sigma.iter().enumerate() {
            sigma_inv[s] = d;
        }
        // loop incidences per dart: (relator, position, face)
        let mut incid: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nd];
        for (f, face) in c.faces.iter().enumerate() {
            for (j, &e) in face.boundary.iter().enumerate() {
                incid[e].push((face.relator, j, f));
            }
        }
        for v in &mut incid {
            v.sort_unstable();
        }
        let mut best: Option<CanonicalCode> = None;
        let mut num = vec![u32::MAX; nd];
        let mut order = Vec::with_capacity(nd);
        for root in 0..nd {
            for rot in [&sigma, &sigma_inv] {
                num.fill(u32::MAX);
                order.clear();
                let mut q = VecDeque::from([root]);
                num[root] = 0;
                order.push(root);
                while let Some(d) = q.pop_front() {
                    for nb in [c.inv(d), rot[d]] {
                        if num[nb] == u32::MAX {
                            num[nb] = order.len() as u32;
                            order.push(nb);
                            q.push_back(nb);
                        }
                    }
                }
                let mut face_num: HashMap<usize, u32> = HashMap::new();
                let mut code = Vec::with_capacity(nd * 5);
                code.push(c.faces.len() as u32);
                for &d in &order {
                    code.push(num[c.inv(d)]);
                    code.push(num[rot[d]]);
                    code.push(c.label(d).code() as u32);
                    code.push(incid[d].len() as u32);
                    for &(rel, j, f) in &incid[d] {
                        let k = face_num.len() as u32;
                        let fnum = *face_num.entry(f).or_insert(k);
                        code.extend([rel as u32, j as u32, fnum]);
                    }
                    if let Some(ref b) = best {
                        if code.len() >= b.len() && code[..] > b[..code.len().min(b.len())] {
                            break;
                        }
                    }
                }
                if best.as_ref().is_none_or(|b| code < *b) {
                    best = Some(code);
                }
            }
        }
        best.unwrap()
    }

    /// Builds a diagram from face vertex cycles, for hand-made fixtures.
    ///
    /// Each face is `(relator index, vertices, orbit word)` where walking the
    /// vertices in order keeps the face on the left and reads the orbit word,
    /// a rotation of the relator or of its inverse. `outer` lists the boundary
    /// loop's vertices (running the same way) with its word. Edges are shared
    /// whenever two cycles traverse the same labeled vertex pair.
    pub fn from_cycles(
        num_vertices: usize,
        relators: &[Word],
        faces: &[(usize, Vec<VertexId>, Word)],
        outer: (&[VertexId], &Word),
    ) -> Result<VanKampenDiagram, String> {
        let mut c = TwoComplex::new(num_vertices);
        let mut index: HashMap<(VertexId, VertexId, Letter), EdgeId> = HashMap::new();
        let mut dart = |c: &mut TwoComplex, u: VertexId, v: VertexId, l: Letter| -> EdgeId {
            if let Some(&e) = index.get(&(u, v, l)) {
                return e;
            }
            let e = c.add_edge(u, v, l);
            index.insert((u, v, l), e);
            index.insert((v, u, l.inverse()), e + 1);
            e
        };
        let mut orbits = Vec::new();
        for (ri, verts, word) in faces {
            if verts.len() != word.len() {
                return Err(format!("face cycle length {} differs from word length {}", verts.len(), word.len()));
            }
            let n = verts.len();
            let orbit: Vec<EdgeId> =
                (0..n).map(|i| dart(&mut c, verts[i], verts[(i + 1) % n], word.letters()[i])).collect();
            orbits.push((*ri, orbit, word.clone()));
        }
        let (bv, bw) = outer;
        let boundary: Vec<EdgeId> = (0..bv.len())
            .map(|i| dart(&mut c, bv[i], bv[(i + 1) % bv.len()], bw.letters()[i]))
            .collect();
        let mut face_orientation = Vec::new();
        for (ri, orbit, word) in orbits {
            let r = relators.get(ri).ok_or_else(|| format!("relator {ri} missing"))?;
            let n = r.len();
            let found = (0..n).find_map(|o| {
                if r.rotate(o) == word {
                    Some((false, o))
                } else if r.inverse().rotate(o) == word {
                    Some((true, o))
                } else {
                    None
                }
            });
            let (inverted, offset) = found.ok_or_else(|| format!("word {word} is not a rotation of relator {ri}"))?;
            let loop_: Vec<EdgeId> = if inverted {
                (0..n).map(|j| c.inv(orbit[(2 * n - 1 - j - offset) % n])).collect()
            } else {
                (0..n).map(|j| orbit[(j + n - offset) % n]).collect()
            };
            c.add_face(ri, loop_);
            face_orientation.push(!inverted);
        }
        Ok(VanKampenDiagram { complex: c, face_orientation, boundary })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;

    #[test]
    fn single_face_diagram() {
        let r = w("abAB");
        let d = VanKampenDiagram::single_face(0, &r);
        let p = Presentation::parse(None, &["abAB"]).unwrap();
        assert!(d.validate_embedding(Some(&p)).is_empty());
        assert_eq!(d.boundary_word(), r);
        assert_eq!(d.isoperimetric_ratio(4).unwrap(), Ratio::from_integer(1));
        assert!(d.is_disk());
    }

    #[test]
    fn attach_shares_segment() {
        let r = w("aabbab");
        let p = Presentation::new(2, vec![r.clone()]).unwrap();
        let mut d = VanKampenDiagram::single_face(0, &r);
        // boundary reads aabbab; glue an inverted copy along "aa": its orbit must end in AA
        // r⁻¹ = BABBAA, rotation 0 ends in AA.
        d.attach_face(0, 2, 0, &r, Placement { inverted: true, offset: 0 }).unwrap();
        assert!(d.validate_embedding(Some(&p)).is_empty(), "{:?}", d.validate_embedding(Some(&p)));
        assert_eq!(d.boundary_len(), 8);
        assert_eq!(d.isoperimetric_ratio(6).unwrap(), Ratio::new(8, 12));
        assert_eq!(d.boundary_word(), w("BABBbbab"));
        assert_eq!(d.complex.cancellation(), 2);
    }

    #[test]
    fn mismatched_attach_fails() {
        let r = w("aabbab");
        let mut d = VanKampenDiagram::single_face(0, &r);
        assert_eq!(d.attach_face(0, 2, 0, &r, Placement { inverted: false, offset: 0 }), Err(AttachError::LabelMismatch));
    }

    #[test]
    fn spur_keeps_validity() {
        let r = w("abAB");
        let mut d = VanKampenDiagram::single_face(0, &r);
        d.insert_spur(2, Letter::new(1, false));
        assert!(d.validate_embedding(None).is_empty());
        assert_eq!(d.boundary_word(), w("abaAAB"));
        assert!(!d.is_disk());
    }

    #[test]
    fn canonical_code_ignores_construction_order() {
        let r = w("abAB");
        let mut d1 = VanKampenDiagram::single_face(0, &r);
        // glue along "b" at position 1: orbit must end in B; r rotated by 0 ends in B
        d1.attach_face(1, 1, 0, &r, Placement { inverted: false, offset: 0 }).unwrap();
        let mut d2 = VanKampenDiagram::single_face(0, &r);
        d2.attach_face(3, 1, 0, &r, Placement { inverted: false, offset: 2 }).unwrap();
        assert!(d1.validate_embedding(None).is_empty());
        assert!(d2.validate_embedding(None).is_empty());
        assert_eq!(d1.canonical_code(), d2.canonical_code());
        let d3 = VanKampenDiagram::single_face(0, &r);
        assert_ne!(d1.canonical_code(), d3.canonical_code());
    }

    #[test]
    fn from_cycles_single_square() {
        let r = w("abAB");
        let d = VanKampenDiagram::from_cycles(4, std::slice::from_ref(&r), &[(0, vec![0, 1, 2, 3], r.clone())], (&[0, 1, 2, 3], &r))
            .unwrap();
        assert!(d.validate_embedding(None).is_empty());
    }
}
