//! Pieces and the small cancellation conditions C'(λ), C(p) and a bounded C̃(p).

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::complex::{Placement, VanKampenDiagram};
use crate::par;
use crate::search::{enumerate_reduced_diagrams, RotationIndex, SearchBudget};
use crate::words::{Letter, Presentation, Word};

/// A cyclic position in a relator (or its inverse).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occurrence {
    pub relator: usize,
    pub inverted: bool,
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub word: Word,
    pub occurrences: Vec<Occurrence>,
}

/// Suffix-array-like index over every cyclic position of every relator and
/// inverse. `max_piece[s]` is the length of the longest word starting at site
/// `s` that also starts at some other site, capped by both relator lengths.
pub struct PieceIndex {
    words: Vec<Vec<Letter>>,
    base: Vec<usize>,
    site_word: Vec<u32>,
    sorted: Vec<u32>,
    rank: Vec<u32>,
    /// LCP of `sorted[i - 1]` and `sorted[i]`, truncated at the longest relator.
    lcp: Vec<u32>,
    /// The first `key_len` letter codes of each site, packed most significant first.
    keys: Vec<u128>,
    bits: u32,
    key_len: usize,
    pub max_piece: Vec<usize>,
}

impl PieceIndex {
    pub fn new(p: &Presentation) -> PieceIndex {
        let mut words = Vec::with_capacity(2 * p.relators.len());
        for r in &p.relators {
            words.push(r.letters().to_vec());
            words.push(r.inverse().into_letters());
        }
        let mut base = Vec::with_capacity(words.len() + 1);
        let mut site_word = Vec::new();
        let mut total = 0;
        for (k, w) in words.iter().enumerate() {
            base.push(total);
            total += w.len();
            site_word.extend(std::iter::repeat_n(k as u32, w.len()));
        }
        base.push(total);
        let bits = usize::BITS - (2 * p.m).saturating_sub(1).leading_zeros();
        let bits = bits.max(1);
        let cap = p.max_relator_len();
        let key_len = cap.min((128 / bits) as usize);
        let mut idx = PieceIndex {
            words,
            base,
            site_word,
            sorted: Vec::new(),
            rank: Vec::new(),
            lcp: Vec::new(),
            keys: Vec::new(),
            bits,
            key_len,
            max_piece: Vec::new(),
        };
        let ids: Vec<usize> = (0..total).collect();
        let pad = 128 - bits as usize * key_len;
        idx.keys = par::map_ref(&ids, |&s| {
            let k = (0..key_len).fold(0u128, |k, t| (k << bits) | idx.letter(s, t).code() as u128);
            k.checked_shl(pad as u32).unwrap_or(0)
        });
        let mut pairs: Vec<(u128, u32)> = idx.keys.iter().copied().zip(0..total as u32).collect();
        par::sort_by(&mut pairs, |a, b| {
            a.0.cmp(&b.0).then_with(|| idx.cmp_tail(a.1 as usize, b.1 as usize, cap)).then(a.1.cmp(&b.1))
        });
        let sorted: Vec<u32> = pairs.into_iter().map(|(_, s)| s).collect();
        let mut rank = vec![0u32; total];
        for (i, &s) in sorted.iter().enumerate() {
            rank[s as usize] = i as u32;
        }
        let lcp: Vec<u32> = (0..total)
            .map(|i| if i == 0 { 0 } else { idx.lce(sorted[i - 1] as usize, sorted[i] as usize, cap) as u32 })
            .collect();
        idx.sorted = sorted;
        idx.rank = rank;
        idx.lcp = lcp;
        idx.max_piece = par::map_ref(&ids, |&s| idx.scan_max(s));
        idx
    }

    pub fn num_sites(&self) -> usize {
        self.site_word.len()
    }

    pub fn site(&self, relator: usize, inverted: bool, position: usize) -> usize {
        self.base[2 * relator + usize::from(inverted)] + position
    }

    pub fn occurrence(&self, s: usize) -> Occurrence {
        let k = self.site_word[s] as usize;
        Occurrence { relator: k / 2, inverted: k % 2 == 1, position: s - self.base[k] }
    }

    pub fn site_len(&self, s: usize) -> usize {
        self.words[self.site_word[s] as usize].len()
    }

    fn letter(&self, s: usize, t: usize) -> Letter {
        let k = self.site_word[s] as usize;
        let w = &self.words[k];
        w[(s - self.base[k] + t) % w.len()]
    }

    pub fn window(&self, s: usize, len: usize) -> Vec<Letter> {
        (0..len).map(|t| self.letter(s, t)).collect()
    }

    /// Compares letters past the packed key.
    fn cmp_tail(&self, a: usize, b: usize, cap: usize) -> Ordering {
        for t in self.key_len..cap {
            match self.letter(a, t).code().cmp(&self.letter(b, t).code()) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    fn lce(&self, a: usize, b: usize, cap: usize) -> usize {
        let x = self.keys[a] ^ self.keys[b];
        if x != 0 {
            return (x.leading_zeros() / self.bits) as usize;
        }
        self.key_len
            + (self.key_len..cap).take_while(|&t| self.letter(a, t) == self.letter(b, t)).count()
    }

    fn scan_max(&self, s: usize) -> usize {
        let n = self.site_len(s);
        let i = self.rank[s] as usize;
        let mut best = 0;
        let mut run = usize::MAX;
        for j in (0..i).rev() {
            run = run.min(self.lcp[j + 1] as usize);
            if run <= best {
                break;
            }
            best = best.max(run.min(n).min(self.site_len(self.sorted[j] as usize)));
        }
        run = usize::MAX;
        for j in i + 1..self.sorted.len() {
            run = run.min(self.lcp[j] as usize);
            if run <= best || best == n {
                break;
            }
            best = best.max(run.min(n).min(self.site_len(self.sorted[j] as usize)));
        }
        best
    }

    /// Sites other than `s` whose window of length `len` equals that of `s`.
    pub fn partners(&self, s: usize, len: usize) -> Vec<usize> {
        let i = self.rank[s] as usize;
        let mut out = Vec::new();
        let mut j = i;
        while j > 0 && self.lcp[j] as usize >= len {
            j -= 1;
            out.push(self.sorted[j] as usize);
        }
        let mut j = i + 1;
        while j < self.sorted.len() && self.lcp[j] as usize >= len {
            out.push(self.sorted[j] as usize);
            j += 1;
        }
        out.retain(|&t| self.site_len(t) >= len);
        out.sort_unstable();
        out
    }

    pub fn max_piece_len(&self) -> usize {
        self.max_piece.iter().copied().max().unwrap_or(0)
    }

    /// Fewest pieces whose concatenation is the cyclic word of relator `i`
    /// (the inverse gives the same count). `None` if some letter lies in no piece.
    pub fn min_factorization(&self, i: usize) -> Option<(usize, Vec<usize>)> {
        let n = self.words[2 * i].len();
        let m: Vec<usize> = (0..n).map(|t| self.max_piece[self.base[2 * i] + t]).collect();
        if m.contains(&0) {
            return None;
        }
        let mut best: Option<(usize, Vec<usize>)> = None;
        for s0 in 0..n {
            // greedy farthest reach over [s0, s0 + n]
            let goal = s0 + n;
            let mut cuts = vec![s0];
            let mut end = s0;
            let mut pos = s0;
            let mut count = 0;
            while end < goal {
                let mut far = end;
                let mut arg = pos;
                for q in pos..=end.min(goal - 1) {
                    let reach = q + m[q % n];
                    if reach > far {
                        far = reach;
                        arg = q;
                    }
                }
                if far <= end {
                    break;
                }
                count += 1;
                if count > 1 {
                    cuts.push(arg);
                }
                pos = end + 1;
                end = far;
                if best.as_ref().is_some_and(|(b, _)| count >= *b) && end < goal {
                    break;
                }
            }
            if end >= goal && best.as_ref().is_none_or(|(b, _)| count < *b) {
                // the greedy picks interior cut points; record them modulo n
                best = Some((count, cuts.iter().map(|c| c % n).collect()));
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceWitness {
    pub word: Word,
    pub at: Occurrence,
    pub other: Occurrence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationWitness {
    pub relator: usize,
    pub pieces: usize,
    pub cuts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallCancelReport {
    pub num_relators: usize,
    pub max_piece_len: usize,
    /// `max |piece| / |r|` over piece occurrences; C'(λ) holds iff λ exceeds it.
    pub c_prime_lambda: Ratio<i64>,
    /// Largest p with C(p); `None` when no relator is a product of pieces.
    pub cp_max: Option<usize>,
    pub longest_piece: Option<PieceWitness>,
    pub shortest_factorization: Option<FactorizationWitness>,
}

/// Maximal pieces: each site's longest piece that does not extend one starting a
/// letter earlier, grouped by word with all its occurrences.
pub fn pieces(p: &Presentation) -> Vec<Piece> {
    let idx = PieceIndex::new(p);
    let mut by_word: HashMap<Vec<Letter>, BTreeSet<usize>> = HashMap::new();
    for s in 0..idx.num_sites() {
        let m = idx.max_piece[s];
        if m == 0 {
            continue;
        }
        let occ = idx.occurrence(s);
        let n = idx.site_len(s);
        let prev = idx.site(occ.relator, occ.inverted, (occ.position + n - 1) % n);
        if m < n && idx.max_piece[prev] > m {
            continue;
        }
        let word = idx.window(s, m);
        let entry = by_word.entry(word).or_default();
        entry.insert(s);
        entry.extend(idx.partners(s, m));
    }
    let mut out: Vec<Piece> = by_word
        .into_iter()
        .map(|(w, sites)| Piece {
            word: Word::from_letters(w),
            occurrences: sites.into_iter().map(|s| idx.occurrence(s)).collect(),
        })
        .collect();
    out.sort_by(|a, b| b.word.len().cmp(&a.word.len()).then_with(|| a.word.cmp(&b.word)));
    out
}

fn longest_piece_witness(idx: &PieceIndex) -> Option<PieceWitness> {
    let s = (0..idx.num_sites()).max_by_key(|&s| (idx.max_piece[s], std::cmp::Reverse(s)))?;
    let m = idx.max_piece[s];
    if m == 0 {
        return None;
    }
    let other = *idx.partners(s, m).first()?;
    Some(PieceWitness { word: Word::from_letters(idx.window(s, m)), at: idx.occurrence(s), other: idx.occurrence(other) })
}

pub fn report(p: &Presentation) -> SmallCancelReport {
    let idx = PieceIndex::new(p);
    let mut lambda = Ratio::from_integer(0);
    for s in 0..idx.num_sites() {
        let q = Ratio::new(idx.max_piece[s] as i64, idx.site_len(s) as i64);
        if q > lambda {
            lambda = q;
        }
    }
    let facts: Vec<Option<(usize, Vec<usize>)>> = (0..p.relators.len()).map(|i| idx.min_factorization(i)).collect();
    let shortest = facts
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.as_ref().map(|(k, cuts)| FactorizationWitness { relator: i, pieces: *k, cuts: cuts.clone() }))
        .min_by_key(|w| (w.pieces, w.relator));
    SmallCancelReport {
        num_relators: p.relators.len(),
        max_piece_len: idx.max_piece_len(),
        c_prime_lambda: lambda,
        cp_max: shortest.as_ref().map(|w| w.pieces),
        longest_piece: longest_piece_witness(&idx),
        shortest_factorization: shortest,
    }
}

/// C'(λ): every piece occurring in `r` is shorter than `λ|r|`. Windows of the
/// threshold length are hashed exactly; the scan stops at the first collision.
pub fn check_c_prime(p: &Presentation, lambda: Ratio<i64>) -> (bool, Option<PieceWitness>) {
    assert!(lambda > Ratio::from_integer(0) && lambda <= Ratio::from_integer(1), "λ must lie in (0, 1]");
    let threshold = |n: usize| -> usize {
        let t = (lambda * Ratio::from_integer(n as i64)).ceil().to_integer() as usize;
        t.max(1)
    };
    let mut cyc: Vec<(usize, bool, Vec<Letter>)> = Vec::new();
    for (i, r) in p.relators.iter().enumerate() {
        cyc.push((i, false, r.letters().to_vec()));
        cyc.push((i, true, r.inverse().into_letters()));
    }
    let thresholds: BTreeSet<usize> = p.relators.iter().map(|r| threshold(r.len())).collect();
    for t in thresholds {
        let mut seen: HashMap<Vec<Letter>, (Occurrence, bool)> = HashMap::new();
        for (i, inverted, w) in &cyc {
            let n = w.len();
            if n < t {
                continue;
            }
            let hits = threshold(n) <= t;
            for pos in 0..n {
                let key: Vec<Letter> = (0..t).map(|k| w[(pos + k) % n]).collect();
                let occ = Occurrence { relator: *i, inverted: *inverted, position: pos };
                match seen.get(&key) {
                    Some(&(first, first_hits)) if first_hits || hits => {
                        let (at, other) = if hits { (occ, first) } else { (first, occ) };
                        return (false, Some(PieceWitness { word: Word::from_letters(key), at, other }));
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(key, (occ, hits));
                    }
                }
            }
        }
    }
    (true, None)
}

/// C(p): no relator is a product of fewer than `pp` pieces. Holds vacuously when
/// no relator is a product of pieces at all.
pub fn check_cp(p: &Presentation, pp: usize) -> (bool, Option<FactorizationWitness>) {
    assert!(pp >= 2);
    let idx = PieceIndex::new(p);
    for i in 0..p.relators.len() {
        if let Some((k, cuts)) = idx.min_factorization(i) {
            if k < pp {
                return (false, Some(FactorizationWitness { relator: i, pieces: k, cuts }));
            }
        }
    }
    (true, None)
}

/// Faces whose boundary loop passes through some vertex twice.
pub fn non_simple_faces(d: &VanKampenDiagram) -> Vec<usize> {
    (0..d.num_faces())
        .filter(|&f| {
            let mut seen = std::collections::HashSet::new();
            !d.complex.faces[f].boundary.iter().all(|&e| seen.insert(d.complex.src(e)))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryViolation {
    pub face: usize,
    /// Components of `∂f ∩ γ` as inclusive ranges of vertex positions along γ.
    pub components: Vec<(usize, usize)>,
}

/// Faces meeting the boundary subpath `γ = boundary[start .. start + len]` in
/// two or more connected components. γ is assumed to be a simple path.
pub fn connected_boundary_check(d: &VanKampenDiagram, start: usize, len: usize) -> Vec<BoundaryViolation> {
    let c = &d.complex;
    let b = &d.boundary;
    if b.is_empty() {
        return Vec::new();
    }
    let gamma: Vec<usize> = (0..len).map(|i| b[(start + i) % b.len()]).collect();
    let mut verts: Vec<usize> = gamma.iter().map(|&e| c.src(e)).collect();
    if let Some(&last) = gamma.last() {
        verts.push(c.dst(last));
    } else {
        verts.push(d.boundary_vertex(start));
    }
    let mut out = Vec::new();
    for (f, face) in c.faces.iter().enumerate() {
        let fv: std::collections::HashSet<usize> = face.boundary.iter().map(|&e| c.src(e)).collect();
        let fe: std::collections::HashSet<usize> = face.boundary.iter().map(|&e| c.undirected(e)).collect();
        // cells along γ: vertex 0, edge 0, vertex 1, ...
        let mut comps = Vec::new();
        let mut open: Option<usize> = None;
        for i in 0..verts.len() {
            let v_in = fv.contains(&verts[i]);
            if v_in && open.is_none() {
                open = Some(i);
            }
            if !v_in {
                if let Some(s) = open.take() {
                    comps.push((s, i - 1));
                }
                continue;
            }
            let e_in = i < gamma.len() && fe.contains(&c.undirected(gamma[i]));
            if !e_in {
                comps.push((open.take().unwrap(), i));
            }
        }
        if let Some(s) = open {
            comps.push((s, verts.len() - 1));
        }
        if comps.len() >= 2 {
            out.push(BoundaryViolation { face: f, components: comps });
        }
    }
    out
}

#[derive(Clone, Debug)]
pub enum CTildeVerdict {
    /// No counterexample whose enclosed subdiagram has at most `k` faces.
    VerifiedUpTo { k: usize, subdiagrams: usize },
    Counterexample { diagram: VanKampenDiagram, enclosed_faces: usize, surrounding: usize },
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("search budget exhausted after {checked} enclosed subdiagrams: {reason}")]
pub struct BudgetExhausted {
    pub checked: usize,
    pub reason: String,
}

/// Bounded C̃(p) check. Every reduced diagram `D'` with at most `k` faces is
/// surrounded in all possible ways by `q < pp` faces, each glued along one
/// proper contiguous arc of `∂D'`, the arcs partitioning `∂D'`. The first
/// reduced result is returned as a counterexample.
pub fn check_c_tilde_bounded(p: &Presentation, pp: usize, k: usize, budget: &SearchBudget) -> Result<CTildeVerdict, BudgetExhausted> {
    assert!(pp >= 2);
    let b = SearchBudget { max_faces: k, ..budget.clone() };
    let en = enumerate_reduced_diagrams(p, &b);
    if !en.complete {
        return Err(BudgetExhausted { checked: en.diagrams.len(), reason: en.truncation.unwrap_or_default() });
    }
    let idx = RotationIndex::new(p);
    let found = par::map_ref(&en.diagrams, |d| surround(d, p, &idx, pp - 1));
    for (d, hit) in en.diagrams.iter().zip(found) {
        if let Some((diagram, q)) = hit {
            return Ok(CTildeVerdict::Counterexample { diagram, enclosed_faces: d.num_faces(), surrounding: q });
        }
    }
    Ok(CTildeVerdict::VerifiedUpTo { k, subdiagrams: en.diagrams.len() })
}

/// Tries to surround `d` with at most `qmax` faces.
fn surround(d: &VanKampenDiagram, p: &Presentation, idx: &RotationIndex, qmax: usize) -> Option<(VanKampenDiagram, usize)> {
    let blen = d.boundary_len();
    let word = d.boundary_word();
    for q in 1..=qmax.min(blen) {
        for first in 0..blen {
            // arcs [cut_i, cut_{i+1}) starting at `first`, wrapping round once
            let mut lens = vec![0usize; q];
            if let Some(hit) = partition(d, p, idx, &word, first, q, 0, blen, &mut lens) {
                return Some((hit, q));
            }
            if q == 1 {
                // a single arc covers everything; its start does not matter
                break;
            }
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn partition(
    d: &VanKampenDiagram,
    p: &Presentation,
    idx: &RotationIndex,
    word: &Word,
    first: usize,
    q: usize,
    i: usize,
    remaining: usize,
    lens: &mut Vec<usize>,
) -> Option<VanKampenDiagram> {
    if i + 1 == q {
        lens[i] = remaining;
        return place(d, p, idx, word, first, lens);
    }
    // later arcs need at least one edge each; keep the first arc's start canonical
    for len in 1..=remaining - (q - i - 1) {
        lens[i] = len;
        if let Some(h) = partition(d, p, idx, word, first, q, i + 1, remaining - len, lens) {
            return Some(h);
        }
    }
    None
}

fn place(d: &VanKampenDiagram, p: &Presentation, idx: &RotationIndex, word: &Word, first: usize, lens: &[usize]) -> Option<VanKampenDiagram> {
    let blen = word.len();
    let mut options: Vec<Vec<(usize, Placement)>> = Vec::new();
    let mut off = first;
    for &len in lens {
        let seg: Vec<Letter> = (0..len).map(|t| word.letters()[(off + t) % blen]).collect();
        let opts: Vec<_> = idx.placements_along(&seg).into_iter().filter(|(rel, _)| p.relators[*rel].len() > len).collect();
        if opts.is_empty() {
            return None;
        }
        options.push(opts);
        off += len;
    }
    let mut choice = vec![0usize; lens.len()];
    loop {
        if let Some(dd) = build_surrounded(d, p, first, lens, &options, &choice) {
            return Some(dd);
        }
        let mut k = 0;
        loop {
            if k == choice.len() {
                return None;
            }
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn build_surrounded(
    d: &VanKampenDiagram,
    p: &Presentation,
    first: usize,
    lens: &[usize],
    options: &[Vec<(usize, Placement)>],
    choice: &[usize],
) -> Option<VanKampenDiagram> {
    let mut dd = d.clone();
    dd.boundary.rotate_left(first % d.boundary_len());
    let mut pos = 0;
    for (i, &len) in lens.iter().enumerate() {
        let (rel, pl) = options[i][choice[i]];
        let before = dd.boundary_len();
        dd.attach_face(pos, len, rel, &p.relators[rel], pl).ok()?;
        pos += dd.boundary_len() + len - before;
    }
    if dd.complex.is_reduced() && dd.validate_embedding(Some(p)).is_empty() {
        Some(dd)
    } else {
        None
    }
}
