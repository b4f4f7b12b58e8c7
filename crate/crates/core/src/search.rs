//! Bounded search for reduced van Kampen diagrams.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::diagram::CanonicalCode;
use crate::complex::{Placement, VanKampenDiagram, VertexId};
use crate::par;
use crate::words::{Letter, Presentation, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_faces: usize,
    /// Cap on the 1-cells of an enumerated diagram, or on intermediate word
    /// length in the word search.
    pub max_edges: usize,
    pub max_states: usize,
    pub time_limit: Option<Duration>,
}

impl Default for SearchBudget {
    fn default() -> SearchBudget {
        SearchBudget { max_faces: 4, max_edges: 256, max_states: 200_000, time_limit: None }
    }
}

impl SearchBudget {
    pub fn faces(max_faces: usize) -> SearchBudget {
        SearchBudget { max_faces, ..SearchBudget::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("search budget exhausted after {explored} states ({reason})")]
    BudgetExhausted { explored: usize, reason: String },
    #[error("labels do not match: {0}")]
    LabelMismatch(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagramCertificate {
    pub diagram: VanKampenDiagram,
    pub boundary: Word,
    pub reduced: bool,
}

impl DiagramCertificate {
    /// Re-reads the boundary and checks the diagram against the presentation.
    pub fn verify(&self, w: &Word, p: &Presentation) -> bool {
        self.diagram.boundary_word().free_reduce() == w.free_reduce()
            && self.diagram.validate_embedding(Some(p)).is_empty()
    }
}

/// One rotation `ρ = rotate(r^±, offset)` of a relator or its inverse.
#[derive(Clone, Debug)]
pub struct Rotation {
    pub word: Word,
    pub relator: usize,
    pub placement: Placement,
}

/// Rotations of all relators and inverses, indexed by every prefix.
pub struct RotationIndex {
    pub rotations: Vec<Rotation>,
    by_prefix: HashMap<Vec<Letter>, Vec<usize>>,
}

impl RotationIndex {
    pub fn new(p: &Presentation) -> RotationIndex {
        let mut rotations = Vec::new();
        let mut seen = HashSet::new();
        for (i, r) in p.relators.iter().enumerate() {
            for inverted in [false, true] {
                let base = if inverted { r.inverse() } else { r.clone() };
                for offset in 0..r.len() {
                    let word = base.rotate(offset);
                    if seen.insert((i, word.clone())) {
                        rotations.push(Rotation { word, relator: i, placement: Placement { inverted, offset } });
                    }
                }
            }
        }
        let mut by_prefix: HashMap<Vec<Letter>, Vec<usize>> = HashMap::new();
        for (k, rot) in rotations.iter().enumerate() {
            for len in 0..=rot.word.len() {
                by_prefix.entry(rot.word.letters()[..len].to_vec()).or_default().push(k);
            }
        }
        RotationIndex { rotations, by_prefix }
    }

    /// Rotations having `prefix` as a prefix.
    pub fn with_prefix(&self, prefix: &[Letter]) -> &[usize] {
        self.by_prefix.get(prefix).map_or(&[], Vec::as_slice)
    }

    /// Placements whose face orbit ends with `seg⁻¹`, i.e. faces that can be
    /// attached along a boundary segment reading `seg`.
    pub fn placements_along(&self, seg: &[Letter]) -> Vec<(usize, Placement)> {
        self.with_prefix(seg)
            .iter()
            .map(|&k| {
                let rot = &self.rotations[k];
                let n = rot.word.len();
                let pl = rot.placement;
                (rot.relator, Placement { inverted: !pl.inverted, offset: (n - pl.offset) % n })
            })
            .collect()
    }
}

/// Output of [`enumerate_reduced_diagrams`]. Diagrams are listed level by level
/// (by face count) and sorted by canonical code within a level.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub diagrams: Vec<VanKampenDiagram>,
    /// Number of diagrams with exactly `k + 1` faces.
    pub per_level: Vec<usize>,
    pub complete: bool,
    pub truncation: Option<String>,
}

fn new_face_is_reducible(d: &VanKampenDiagram, f: usize) -> bool {
    let faces = &d.complex.faces;
    let nf = &faces[f];
    faces.iter().enumerate().any(|(g, face)| {
        g != f && face.relator == nf.relator && face.boundary.iter().zip(&nf.boundary).any(|(a, b)| a == b)
    })
}

fn expand(d: &VanKampenDiagram, p: &Presentation, idx: &RotationIndex, max_edges: usize) -> Vec<(CanonicalCode, VanKampenDiagram)> {
    let mut out = Vec::new();
    let blen = d.boundary_len();
    let maxn = p.max_relator_len();
    let word = d.boundary_word();
    for start in 0..blen {
        for len in 1..=blen.min(maxn) {
            if len == blen && start > 0 {
                continue;
            }
            let seg: Vec<Letter> = (0..len).map(|i| word.letters()[(start + i) % blen]).collect();
            for (rel, pl) in idx.placements_along(&seg) {
                let r = &p.relators[rel];
                if r.len() == len {
                    // would close the sphere
                    continue;
                }
                let mut nd = d.clone();
                let Ok(f) = nd.attach_face(start, len, rel, r, pl) else { continue };
                if nd.complex.num_1cells() > max_edges || new_face_is_reducible(&nd, f) {
                    continue;
                }
                out.push((nd.canonical_code(), nd));
            }
        }
    }
    out
}

/// Reduced diagrams with at most `budget.max_faces` faces, up to labeled planar
/// isomorphism and reflection. Diagrams are grown by attaching a face along a
/// nonempty boundary segment, so faces hanging from a single vertex are not
/// produced.
pub fn enumerate_reduced_diagrams(p: &Presentation, budget: &SearchBudget) -> Enumeration {
    let started = Instant::now();
    let idx = RotationIndex::new(p);
    let mut diagrams = Vec::new();
    let mut per_level = Vec::new();
    let mut frontier: Vec<VanKampenDiagram> = Vec::new();
    let mut truncation = None;
    for k in 1..=budget.max_faces {
        let level: BTreeMap<CanonicalCode, VanKampenDiagram> = if k == 1 {
            p.relators
                .iter()
                .enumerate()
                .map(|(i, r)| VanKampenDiagram::single_face(i, r))
                .filter(|d| d.complex.num_1cells() <= budget.max_edges)
                .map(|d| (d.canonical_code(), d))
                .collect()
        } else {
            par::map_ref(&frontier, |d| expand(d, p, &idx, budget.max_edges)).into_iter().flatten().collect()
        };
        if level.is_empty() {
            break;
        }
        let room = budget.max_states.saturating_sub(diagrams.len());
        let mut next: Vec<VanKampenDiagram> = level.into_values().collect();
        if next.len() > room {
            next.truncate(room);
            truncation = Some(format!("max_states {} reached at {} faces", budget.max_states, k));
        }
        per_level.push(next.len());
        diagrams.extend(next.iter().cloned());
        frontier = next;
        if truncation.is_some() {
            break;
        }
        if let Some(limit) = budget.time_limit {
            if started.elapsed() > limit && k < budget.max_faces {
                truncation = Some(format!("time limit reached after {} faces", k));
                break;
            }
        }
    }
    Enumeration { diagrams, per_level, complete: truncation.is_none(), truncation }
}

#[derive(Clone, Debug)]
struct Move {
    parent: Word,
    start: usize,
    /// length of the replaced subword `u`
    len: usize,
    rotation: usize,
}

/// Searches for a van Kampen diagram with boundary `w`, breadth first in the
/// number of faces. The certificate has minimal area among diagrams within the
/// budget, hence is reduced.
///
/// `Ok(None)` means no diagram with at most `max_faces` faces exists; any
/// pruning makes the search return `BudgetExhausted` instead.
pub fn find_van_kampen(w: &Word, p: &Presentation, budget: &SearchBudget) -> Result<Option<DiagramCertificate>, SearchError> {
    let idx = RotationIndex::new(p);
    find_van_kampen_indexed(w, p, &idx, budget)
}

pub fn find_van_kampen_indexed(
    w: &Word,
    p: &Presentation,
    idx: &RotationIndex,
    budget: &SearchBudget,
) -> Result<Option<DiagramCertificate>, SearchError> {
    let started = Instant::now();
    let target = w.free_reduce();
    let mut parents: HashMap<Word, Option<Move>> = HashMap::new();
    parents.insert(target.clone(), None);
    if target.is_empty() {
        return Ok(Some(replay(&target, &parents, p, idx)));
    }
    let mut frontier = vec![target.clone()];
    let mut pruned = false;
    for _ in 0..budget.max_faces {
        let children: Vec<Vec<(Word, Move)>> = par::map_ref(&frontier, |x| {
            let mut out = Vec::new();
            let mut local_pruned = false;
            // |u| ≥ 1: a face peeled off a diagram always has a boundary edge
            for start in 0..x.len() {
                for len in 1..=(x.len() - start) {
                    for &k in idx.with_prefix(&x.letters()[start..start + len]) {
                        let rho = &idx.rotations[k].word;
                        let v_inv = Word::from_letters(rho.letters()[len..].to_vec()).inverse();
                        let mut next = x.letters()[..start].to_vec();
                        next.extend_from_slice(v_inv.letters());
                        next.extend_from_slice(&x.letters()[start + len..]);
                        let next = Word::from_letters(next).free_reduce();
                        if next.len() > budget.max_edges {
                            local_pruned = true;
                            continue;
                        }
                        out.push((next, Move { parent: x.clone(), start, len, rotation: k }));
                    }
                }
            }
            if local_pruned {
                // marker entry, filtered below
                out.push((Word::from_letters(vec![]), Move { parent: x.clone(), start: usize::MAX, len: 0, rotation: 0 }));
            }
            out
        });
        let mut next_frontier = Vec::new();
        for batch in children {
            for (word, mv) in batch {
                if mv.start == usize::MAX {
                    pruned = true;
                    continue;
                }
                if parents.contains_key(&word) {
                    continue;
                }
                let done = word.is_empty();
                parents.insert(word.clone(), Some(mv));
                if done {
                    return Ok(Some(replay(&target, &parents, p, idx)));
                }
                next_frontier.push(word);
                if parents.len() > budget.max_states {
                    return Err(SearchError::BudgetExhausted {
                        explored: parents.len(),
                        reason: "max_states".into(),
                    });
                }
            }
        }
        if let Some(limit) = budget.time_limit {
            if started.elapsed() > limit {
                return Err(SearchError::BudgetExhausted { explored: parents.len(), reason: "time limit".into() });
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        frontier = next_frontier;
    }
    if pruned {
        Err(SearchError::BudgetExhausted { explored: parents.len(), reason: "max_edges".into() })
    } else {
        Ok(None)
    }
}

/// Rebuilds the diagram from the empty word back to `target`. Each step
/// unreduces the current boundary with spurs and attaches the face of the move.
fn replay(target: &Word, parents: &HashMap<Word, Option<Move>>, p: &Presentation, idx: &RotationIndex) -> DiagramCertificate {
    let mut chain: Vec<&Move> = Vec::new();
    let mut cur = Word::empty();
    while let Some(Some(mv)) = parents.get(&cur) {
        chain.push(mv);
        cur = mv.parent.clone();
        if cur == *target {
            break;
        }
    }
    let mut d = VanKampenDiagram::empty();
    for mv in chain {
        let x = mv.parent.letters();
        let rot = &idx.rotations[mv.rotation];
        let v_inv = Word::from_letters(rot.word.letters()[mv.len..].to_vec()).inverse();
        let mut unreduced = x[..mv.start].to_vec();
        unreduced.extend_from_slice(v_inv.letters());
        unreduced.extend_from_slice(&x[mv.start + mv.len..]);
        unreduce_boundary(&mut d, &unreduced);
        let r = &p.relators[rot.relator];
        d.attach_face(mv.start, v_inv.len(), rot.relator, r, rot.placement)
            .expect("replayed move matches the boundary");
        debug_assert_eq!(d.boundary_word().letters(), x);
    }
    let reduced = d.complex.is_reduced();
    DiagramCertificate { boundary: d.boundary_word(), diagram: d, reduced }
}

/// Inserts spurs so that the boundary, which reads the free reduction of `t`,
/// reads `t` exactly. The boundary start is kept.
fn unreduce_boundary(d: &mut VanKampenDiagram, t: &[Letter]) {
    let mut partner = vec![usize::MAX; t.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (j, &l) in t.iter().enumerate() {
        match stack.last() {
            Some(&i) if t[i] == l.inverse() => {
                stack.pop();
                partner[i] = j;
                partner[j] = i;
            }
            _ => stack.push(j),
        }
    }
    let old = std::mem::take(&mut d.boundary);
    let mut kept = old.iter();
    let mut cur: VertexId = d.boundary_vertex_of(&old, 0);
    let mut open: Vec<usize> = Vec::new();
    let mut edge_at = vec![usize::MAX; t.len()];
    let mut nb = Vec::with_capacity(t.len());
    for (j, &l) in t.iter().enumerate() {
        if partner[j] == usize::MAX {
            let &e = kept.next().expect("kept letters match the boundary");
            debug_assert_eq!(d.complex.src(e), cur);
            nb.push(e);
            cur = d.complex.dst(e);
        } else if partner[j] > j {
            let u = d.complex.add_vertex();
            let e = d.complex.add_edge(cur, u, l);
            edge_at[j] = e;
            open.push(j);
            nb.push(e);
            cur = u;
        } else {
            let i = open.pop().expect("nested pairs");
            let e = d.complex.inv(edge_at[i]);
            nb.push(e);
            cur = d.complex.dst(e);
        }
    }
    d.boundary = nb;
}

impl VanKampenDiagram {
    fn boundary_vertex_of(&self, b: &[usize], p: usize) -> VertexId {
        if b.is_empty() {
            0
        } else {
            self.complex.src(b[p % b.len()])
        }
    }
}

/// The three arcs and the outer arc of the diagram that is not C̃(2): a disk cut
/// by a chord into two faces, enclosed by a third face touching it at one vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    /// Chord, read from the tangency vertex to the far vertex.
    pub chord: Word,
    /// Upper arc, read from the far vertex back to the tangency vertex.
    pub upper: Word,
    /// Lower arc, read from the tangency vertex to the far vertex.
    pub lower: Word,
    /// Outer arc, read round from the tangency vertex.
    pub outer: Word,
}

impl AnnulusSpec {
    /// Face words: `chord·upper`, `lower·chord⁻¹`, `outer·upper⁻¹·lower⁻¹`.
    pub fn relators(&self) -> [Word; 3] {
        [
            self.chord.concat(&self.upper),
            self.lower.concat(&self.chord.inverse()),
            self.outer.concat(&self.upper.inverse()).concat(&self.lower.inverse()),
        ]
    }

    pub fn presentation(&self, m: usize) -> Presentation {
        Presentation { m, relators: self.relators().to_vec(), meta: None }
    }

    /// Fixed instance with ℓ = 10 over two generators: arcs of lengths 8, 2, 2, 6.
    pub fn fixture() -> AnnulusSpec {
        AnnulusSpec {
            chord: crate::words::w("aababbab"),
            upper: crate::words::w("ab"),
            lower: crate::words::w("ba"),
            outer: crate::words::w("ababba"),
        }
    }

    /// Random instance with relator length `l` (a multiple of 5) and arcs in the
    /// proportions 0.8, 0.2, 0.2, 0.6.
    pub fn random(m: usize, l: usize, seed: u64) -> AnnulusSpec {
        assert!(l >= 5 && l.is_multiple_of(5));
        let mut rng = crate::words::seeded_rng(seed);
        let k = l / 5;
        loop {
            let s = AnnulusSpec {
                chord: crate::words::sample_reduced(m, 4 * k, &mut rng),
                upper: crate::words::sample_reduced(m, k, &mut rng),
                lower: crate::words::sample_reduced(m, k, &mut rng),
                outer: crate::words::sample_reduced(m, 3 * k, &mut rng),
            };
            let rels = s.relators();
            let distinct = rels[0] != rels[1] && rels[1] != rels[2] && rels[0] != rels[2];
            if distinct && rels.iter().all(Word::is_cyclically_reduced) {
                return s;
            }
        }
    }
}

/// Builds the three-face diagram of `spec` over `p`, which must contain the three
/// face words up to rotation and inversion.
pub fn build_annulus_witness(p: &Presentation, spec: &AnnulusSpec) -> Result<VanKampenDiagram, SearchError> {
    let (c, a1, a2, o) = (&spec.chord, &spec.upper, &spec.lower, &spec.outer);
    if c.is_empty() || a1.is_empty() || a2.is_empty() || o.is_empty() {
        return Err(SearchError::LabelMismatch("all arcs must be nonempty".into()));
    }
    let find = |word: &Word| -> Result<usize, SearchError> {
        p.relators
            .iter()
            .position(|r| {
                r.len() == word.len()
                    && (0..r.len()).any(|k| r.rotate(k) == *word || r.inverse().rotate(k) == *word)
            })
            .ok_or_else(|| SearchError::LabelMismatch(format!("{word} is not a relator up to rotation and inversion")))
    };
    let [w1, w2, w3] = spec.relators();
    let (i1, i2, i3) = (find(&w1)?, find(&w2)?, find(&w3)?);
    // vertex 0 is the tangency point, 1 the far end of the chord
    let mut next = 2;
    let mut arc = |len: usize, from: VertexId, to: VertexId| -> Vec<VertexId> {
        let mut v = vec![from];
        for _ in 1..len {
            v.push(next);
            next += 1;
        }
        v.push(to);
        v
    };
    let chord = arc(c.len(), 0, 1);
    let upper = arc(a1.len(), 1, 0);
    let lower = arc(a2.len(), 0, 1);
    let outer = arc(o.len(), 0, 0);
    let cycle = |parts: &[&[VertexId]]| -> Vec<VertexId> {
        parts.iter().flat_map(|s| s[..s.len() - 1].iter().copied()).collect()
    };
    let rev = |s: &[VertexId]| -> Vec<VertexId> { s.iter().rev().copied().collect() };
    let f1 = cycle(&[&chord, &upper]);
    let f2 = cycle(&[&lower, &rev(&chord)]);
    let f3 = cycle(&[&outer, &rev(&upper), &rev(&lower)]);
    let ob = cycle(&[&outer]);
    VanKampenDiagram::from_cycles(next, &p.relators, &[(i1, f1, w1), (i2, f2, w2), (i3, f3, w3)], (&ob, o))
        .map_err(SearchError::LabelMismatch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;

    #[test]
    fn relator_has_one_face_certificate() {
        let p = Presentation::parse(None, &["abab"]).unwrap();
        let c = find_van_kampen(&w("baba"), &p, &SearchBudget::faces(2)).unwrap().unwrap();
        assert_eq!(c.diagram.num_faces(), 1);
        assert!(c.verify(&w("baba"), &p));
        let e = find_van_kampen(&Word::empty(), &p, &SearchBudget::faces(2)).unwrap().unwrap();
        assert_eq!(e.diagram.num_faces(), 0);
    }

    #[test]
    fn commutator_square() {
        let p = Presentation::parse(None, &["abAB"]).unwrap();
        let word = w("aabAAB");
        let c = find_van_kampen(&word, &p, &SearchBudget::faces(3)).unwrap().unwrap();
        assert_eq!(c.diagram.num_faces(), 2);
        assert!(c.verify(&word, &p), "{:?}", c.diagram.validate_embedding(Some(&p)));
        assert_eq!(c.boundary, word);
        assert!(c.reduced);
    }

    #[test]
    fn free_group_has_no_diagram() {
        let p = Presentation::free(2);
        assert_eq!(find_van_kampen(&w("ab"), &p, &SearchBudget::faces(3)).unwrap().map(|c| c.boundary), None);
    }

    #[test]
    fn annulus_fixture_validates() {
        let s = AnnulusSpec::fixture();
        let p = s.presentation(2);
        p.check().unwrap();
        let d = build_annulus_witness(&p, &s).unwrap();
        assert!(d.validate_embedding(Some(&p)).is_empty(), "{:?}", d.validate_embedding(Some(&p)));
        assert_eq!(d.num_faces(), 3);
        assert_eq!(d.boundary_len(), 6);
        assert!(d.complex.is_reduced());
    }
}
