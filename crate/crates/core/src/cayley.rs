//! Word problem strategies, Cayley balls, geodesics and parallelism.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::search::{find_van_kampen_indexed, DiagramCertificate, RotationIndex, SearchBudget};
use crate::smallcancel::check_c_prime;
use crate::words::{Letter, Presentation, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CayleyError {
    #[error("strategy precondition failed: {0}")]
    StrategyPreconditionFailed(String),
    #[error("ball budget exhausted: more than {0} vertices")]
    BudgetExhausted(usize),
    #[error("word {0} is not a vertex of the ball")]
    OutOfBall(String),
    #[error("density must be below 1/2")]
    DensityOutOfRange,
    #[error("malformed ball file: {0}")]
    BadFile(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Free reduction only; decisive just for free presentations.
    FreeOnly,
    /// Dehn's algorithm; requires a verified C'(1/6) presentation.
    Dehn,
    /// Breadth-first diagram search with separating invariants as fallback.
    DiagramSearch(SearchBudget),
    /// Exact for presentations containing every commutator `[x_i, x_j]`.
    Abelian,
}

impl Strategy {
    pub fn name(&self) -> String {
        match self {
            Strategy::FreeOnly => "free".into(),
            Strategy::Dehn => "dehn".into(),
            Strategy::DiagramSearch(b) => format!("search:{}", b.max_faces),
            Strategy::Abelian => "abelian".into(),
        }
    }

    /// Parses `free`, `dehn`, `abelian` or `search:K`.
    pub fn parse(s: &str) -> Result<Strategy, String> {
        match s {
            "free" => Ok(Strategy::FreeOnly),
            "dehn" => Ok(Strategy::Dehn),
            "abelian" => Ok(Strategy::Abelian),
            _ => {
                let k = s
                    .strip_prefix("search:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| format!("unknown strategy {s:?}"))?;
                Ok(Strategy::DiagramSearch(SearchBudget::faces(k)))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Trivial,
    Nontrivial,
    Unknown,
}

/// One Dehn step on a cyclic word: the cyclic subword of length `len` at
/// `start` is more than half of `rotation`, and is replaced by the inverse of the rest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStep {
    pub before: Word,
    pub start: usize,
    pub len: usize,
    pub rotation: Word,
    pub after: Word,
}

impl RewriteStep {
    pub fn apply(c: &Word, start: usize, len: usize, rotation: &Word) -> Word {
        let n = c.len();
        let v_inv = Word::from_letters(rotation.letters()[len..].to_vec()).inverse();
        let rest: Vec<Letter> = (len..n).map(|t| c.letters()[(start + t) % n]).collect();
        v_inv.concat(&Word::from_letters(rest)).cyclic_reduce().0
    }

    pub fn is_valid(&self, p: &Presentation) -> bool {
        let n = self.before.len();
        let u_ok = self.len <= n
            && (0..self.len).all(|t| self.before.letters()[(self.start + t) % n] == self.rotation.letters()[t]);
        let is_rot = p.relators.iter().any(|r| {
            r.len() == self.rotation.len()
                && (0..r.len()).any(|k| r.rotate(k) == self.rotation || r.inverse().rotate(k) == self.rotation)
        });
        u_ok && is_rot && Self::apply(&self.before, self.start, self.len, &self.rotation) == self.after
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparatingInvariant {
    /// Image in the abelianization, outside the relator lattice.
    Abelianization { image: Vec<i64> },
    /// A permutation representation (images of the generators, applied left to
    /// right) under which the word is not the identity.
    Permutation { images: Vec<Vec<u8>> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Certificate {
    FreeReduction,
    Diagram(DiagramCertificate),
    /// Dehn rewriting trace; ends in the empty word when trivial, otherwise in a
    /// nonempty word containing no more than half of any relator.
    Rewriting(Vec<RewriteStep>),
    /// Integer combination of relator exponent vectors equal to the word's.
    Abelian { coefficients: Vec<i64> },
    Invariant(SeparatingInvariant),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WordProblemVerdict {
    pub status: Status,
    pub certificate: Option<Certificate>,
    pub strategy: String,
}

/// Integer row echelon basis of the relator exponent lattice.
#[derive(Clone, Debug)]
pub struct Lattice {
    m: usize,
    basis: Vec<Vec<i128>>,
    pivots: Vec<usize>,
}

impl Lattice {
    pub fn new(m: usize, rows: &[Vec<i64>]) -> Lattice {
        let mut rows: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        let mut basis = Vec::new();
        let mut pivots = Vec::new();
        for col in 0..m {
            loop {
                let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
                if nz.len() <= 1 {
                    if let Some(&i) = nz.first() {
                        let mut row = rows.swap_remove(i);
                        if row[col] < 0 {
                            row.iter_mut().for_each(|x| *x = -*x);
                        }
                        basis.push(row);
                        pivots.push(col);
                    }
                    break;
                }
                let &piv = nz.iter().min_by_key(|&&i| rows[i][col].abs()).unwrap();
                for &i in &nz {
                    if i != piv {
                        let q = rows[i][col].div_euclid(rows[piv][col]);
                        let pr = rows[piv].clone();
                        rows[i].iter_mut().zip(&pr).for_each(|(x, y)| *x -= q * y);
                    }
                }
            }
        }
        Lattice { m, basis, pivots }
    }

    /// Canonical representative of `v` modulo the lattice.
    pub fn reduce(&self, v: &[i64]) -> Vec<i64> {
        let mut v: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        for (row, &c) in self.basis.iter().zip(&self.pivots) {
            let q = v[c].div_euclid(row[c]);
            v.iter_mut().zip(row).for_each(|(x, y)| *x -= q * y);
        }
        v.into_iter().map(|x| x as i64).collect()
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.m
    }
}

pub fn exponent_vector(w: &Word, m: usize) -> Vec<i64> {
    let mut v = vec![0i64; m];
    for l in w.letters() {
        v[l.generator() - 1] += if l.is_inverse() { -1 } else { 1 };
    }
    v
}

type Perm = Vec<u8>;

fn perm_apply(w: &Word, images: &[Perm]) -> Perm {
    let k = images[0].len();
    let mut cur: Perm = (0..k as u8).collect();
    for l in w.letters() {
        let g = &images[l.generator() - 1];
        if l.is_inverse() {
            let mut inv = vec![0u8; k];
            for (i, &x) in g.iter().enumerate() {
                inv[x as usize] = i as u8;
            }
            cur = cur.iter().map(|&x| inv[x as usize]).collect();
        } else {
            cur = cur.iter().map(|&x| g[x as usize]).collect();
        }
    }
    cur
}

fn all_perms(k: usize) -> Vec<Perm> {
    fn rec(cur: &mut Perm, used: &mut Vec<bool>, out: &mut Vec<Perm>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i as u8);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Homomorphism-based invariants of a presentation.
pub struct Invariants {
    pub m: usize,
    pub lattice: Lattice,
    /// Nontrivial homomorphisms to S3 and S4 (only for small rank).
    pub representations: Vec<Vec<Perm>>,
}

impl Invariants {
    pub fn new(p: &Presentation) -> Invariants {
        let rows: Vec<Vec<i64>> = p.relators.iter().map(|r| exponent_vector(r, p.m)).collect();
        let lattice = Lattice::new(p.m, &rows);
        let mut representations = Vec::new();
        for k in [3usize, 4] {
            let perms = all_perms(k);
            let total = perms.len().checked_pow(p.m as u32).unwrap_or(usize::MAX);
            if total > 20_000 {
                continue;
            }
            let assigns: Vec<usize> = (0..total).collect();
            let found = par::map_ref(&assigns, |&code| {
                let mut c = code;
                let images: Vec<Perm> = (0..p.m)
                    .map(|_| {
                        let g = perms[c % perms.len()].clone();
                        c /= perms.len();
                        g
                    })
                    .collect();
                let id: Perm = (0..k as u8).collect();
                let nontrivial = images.iter().any(|g| *g != id);
                (nontrivial && p.relators.iter().all(|r| perm_apply(r, &images) == id)).then_some(images)
            });
            representations.extend(found.into_iter().flatten());
        }
        Invariants { m: p.m, lattice, representations }
    }

    pub fn separate(&self, w: &Word) -> Option<SeparatingInvariant> {
        let v = exponent_vector(w, self.m);
        if !self.lattice.contains(&v) {
            return Some(SeparatingInvariant::Abelianization { image: v });
        }
        for images in &self.representations {
            let k = images[0].len();
            if perm_apply(w, images) != (0..k as u8).collect::<Perm>() {
                return Some(SeparatingInvariant::Permutation { images: images.clone() });
            }
        }
        None
    }

    /// Hashable image of an element under all invariants.
    pub fn key(&self, w: &Word) -> Vec<i64> {
        let mut k = self.lattice.reduce(&exponent_vector(w, self.m));
        for images in self.representations.iter().take(8) {
            k.extend(perm_apply(w, images).into_iter().map(i64::from));
        }
        k
    }
}

/// Checks a separating invariant: it is a homomorphism and the word's image is nontrivial.
pub fn verify_invariant(inv: &SeparatingInvariant, w: &Word, p: &Presentation) -> bool {
    match inv {
        SeparatingInvariant::Abelianization { image } => {
            *image == exponent_vector(w, p.m) && !Invariants::new(p).lattice.contains(image)
        }
        SeparatingInvariant::Permutation { images } => {
            let k = images.first().map_or(0, Vec::len);
            let id: Perm = (0..k as u8).collect();
            images.len() == p.m && p.relators.iter().all(|r| perm_apply(r, images) == id) && perm_apply(w, images) != id
        }
    }
}

/// A presentation together with a strategy and cached indexes.
pub struct Solver {
    pub p: Presentation,
    pub strategy: Strategy,
    idx: RotationIndex,
    invariants: OnceLock<Invariants>,
}

impl Solver {
    pub fn new(p: &Presentation, strategy: Strategy) -> Result<Solver, CayleyError> {
        match &strategy {
            Strategy::Dehn => {
                if !check_c_prime(p, Ratio::new(1, 6)).0 {
                    return Err(CayleyError::StrategyPreconditionFailed("Dehn needs a verified C'(1/6) presentation".into()));
                }
            }
            Strategy::Abelian => {
                for i in 1..=p.m {
                    for j in i + 1..=p.m {
                        let c = Word::from_letters(vec![
                            Letter::new(i, false),
                            Letter::new(j, false),
                            Letter::new(i, true),
                            Letter::new(j, true),
                        ]);
                        let present = p.relators.iter().any(|r| {
                            r.len() == 4 && (0..4).any(|k| r.rotate(k) == c || r.inverse().rotate(k) == c)
                        });
                        if !present {
                            return Err(CayleyError::StrategyPreconditionFailed(format!(
                                "commutator {c} is not a relator"
                            )));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(Solver { p: p.clone(), strategy, idx: RotationIndex::new(p), invariants: OnceLock::new() })
    }

    pub fn invariants(&self) -> &Invariants {
        self.invariants.get_or_init(|| Invariants::new(&self.p))
    }

    /// Whether the strategy decides every word.
    pub fn is_complete(&self) -> bool {
        match self.strategy {
            Strategy::FreeOnly => self.p.is_free(),
            Strategy::Dehn | Strategy::Abelian => true,
            Strategy::DiagramSearch(_) => false,
        }
    }

    pub fn decide(&self, w: &Word) -> WordProblemVerdict {
        let strategy = self.strategy.name();
        let w = w.free_reduce();
        let verdict = |status, certificate| WordProblemVerdict { status, certificate, strategy: strategy.clone() };
        if w.is_empty() {
            return verdict(Status::Trivial, Some(Certificate::FreeReduction));
        }
        match &self.strategy {
            Strategy::FreeOnly => {
                if self.p.is_free() {
                    verdict(Status::Nontrivial, Some(Certificate::FreeReduction))
                } else {
                    verdict(Status::Unknown, None)
                }
            }
            Strategy::Dehn => {
                let trace = self.dehn(&w);
                let done = trace.last().map_or(w.cyclic_reduce().0.is_empty(), |s| s.after.is_empty());
                let status = if done { Status::Trivial } else { Status::Nontrivial };
                verdict(status, Some(Certificate::Rewriting(trace)))
            }
            Strategy::Abelian => {
                let v = exponent_vector(&w, self.p.m);
                if self.invariants().lattice.contains(&v) {
                    verdict(Status::Trivial, Some(Certificate::Abelian { coefficients: v }))
                } else {
                    verdict(Status::Nontrivial, Some(Certificate::Invariant(SeparatingInvariant::Abelianization { image: v })))
                }
            }
            Strategy::DiagramSearch(budget) => {
                if let Some(inv) = self.invariants().separate(&w) {
                    return verdict(Status::Nontrivial, Some(Certificate::Invariant(inv)));
                }
                match find_van_kampen_indexed(&w, &self.p, &self.idx, budget) {
                    Ok(Some(cert)) => verdict(Status::Trivial, Some(Certificate::Diagram(cert))),
                    _ => verdict(Status::Unknown, None),
                }
            }
        }
    }

    pub fn equal(&self, a: &Word, b: &Word) -> Status {
        self.decide(&a.concat(&b.inverse())).status
    }

    /// Dehn's algorithm on the cyclic reduction of `w`.
    pub fn dehn(&self, w: &Word) -> Vec<RewriteStep> {
        let mut c = w.cyclic_reduce().0;
        let maxn = self.p.max_relator_len();
        let mut trace = Vec::new();
        'outer: while !c.is_empty() {
            let n = c.len();
            for start in 0..n {
                for len in (1..=n.min(maxn)).rev() {
                    let u: Vec<Letter> = (0..len).map(|t| c.letters()[(start + t) % n]).collect();
                    let hit = self.idx.with_prefix(&u).iter().find(|&&k| 2 * len > self.idx.rotations[k].word.len());
                    if let Some(&k) = hit {
                        let rotation = self.idx.rotations[k].word.clone();
                        let after = RewriteStep::apply(&c, start, len, &rotation);
                        trace.push(RewriteStep { before: c.clone(), start, len, rotation, after: after.clone() });
                        c = after;
                        continue 'outer;
                    }
                }
            }
            break;
        }
        trace
    }
}

pub fn word_problem(w: &Word, p: &Presentation, strategy: Strategy) -> Result<WordProblemVerdict, CayleyError> {
    Ok(Solver::new(p, strategy)?.decide(w))
}

/// Checks a verdict's certificate independently of how it was produced.
pub fn verify_verdict(v: &WordProblemVerdict, w: &Word, p: &Presentation) -> bool {
    match (&v.status, &v.certificate) {
        (Status::Unknown, _) => true,
        (_, None) => false,
        (Status::Trivial, Some(Certificate::FreeReduction)) => w.free_reduce().is_empty(),
        (Status::Nontrivial, Some(Certificate::FreeReduction)) => p.is_free() && !w.free_reduce().is_empty(),
        (Status::Trivial, Some(Certificate::Diagram(c))) => c.verify(w, p),
        (s, Some(Certificate::Rewriting(trace))) => {
            let start = w.cyclic_reduce().0;
            let chained = trace.first().is_none_or(|t| t.before == start)
                && trace.windows(2).all(|x| x[0].after == x[1].before)
                && trace.iter().all(|t| t.is_valid(p));
            let end = trace.last().map_or(start, |t| t.after.clone());
            chained && ((*s == Status::Trivial) == end.is_empty())
        }
        (Status::Trivial, Some(Certificate::Abelian { coefficients })) => {
            *coefficients == exponent_vector(w, p.m) && Invariants::new(p).lattice.contains(coefficients)
        }
        (Status::Nontrivial, Some(Certificate::Invariant(inv))) => verify_invariant(inv, w, p),
        _ => false,
    }
}

/// A ball in the Cayley graph around the identity. Vertex words are
/// shortlex-minimal among the words proven equal during construction.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    pub m: usize,
    pub radius: usize,
    pub words: Vec<Word>,
    pub dist: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    /// Known edges `(letter, target)`; complete for vertices inside the radius.
    pub adj: Vec<Vec<(Letter, usize)>>,
    /// Some comparisons were undecided, so distinct vertices may be equal in G.
    pub approximate: bool,
    index: HashMap<Word, usize>,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl CayleyBall {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.radius + 1];
        for &d in &self.dist {
            s[d] += 1;
        }
        s
    }

    /// Vertex equal to `w` in the group, if in the ball.
    pub fn locate(&self, solver: &Solver, w: &Word) -> Option<usize> {
        let w = w.free_reduce();
        if let Some(&v) = self.index.get(&w) {
            return Some(v);
        }
        let key = solver.invariants().key(&w);
        self.buckets
            .get(&key)?
            .iter()
            .copied()
            .find(|&v| (self.dist[v] as isize - w.len() as isize).abs() <= w.len() as isize + self.radius as isize && solver.equal(&self.words[v], &w) == Status::Trivial)
    }

    pub fn vertex(&self, w: &Word) -> Result<usize, CayleyError> {
        self.index.get(&w.free_reduce()).copied().ok_or_else(|| CayleyError::OutOfBall(w.to_string()))
    }

    /// Graph distances from `v` inside the ball.
    pub fn distances_from(&self, v: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.words.len()];
        d[v] = 0;
        let mut q = VecDeque::from([v]);
        while let Some(x) = q.pop_front() {
            for &(_, y) in &self.adj[x] {
                if d[y] == usize::MAX {
                    d[y] = d[x] + 1;
                    q.push_back(y);
                }
            }
        }
        d
    }

    /// Sorted words and distances, tagged `CBAL`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut order: Vec<usize> = (0..self.words.len()).collect();
        order.sort_by(|&a, &b| self.words[a].shortlex_cmp(&self.words[b]));
        let mut out = b"CBAL".to_vec();
        for x in [1u32, self.m as u32, self.radius as u32] {
            out.extend(x.to_le_bytes());
        }
        out.push(u8::from(self.approximate));
        out.extend((order.len() as u32).to_le_bytes());
        for &v in &order {
            let w = &self.words[v];
            out.extend((w.len() as u16).to_le_bytes());
            out.extend(w.letters().iter().map(|l| l.code() as u8));
        }
        for &v in &order {
            out.extend((self.dist[v] as u32).to_le_bytes());
        }
        out
    }
}

/// Contents of a ball file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallFile {
    pub m: usize,
    pub radius: usize,
    pub approximate: bool,
    pub words: Vec<Word>,
    pub dist: Vec<usize>,
}

impl BallFile {
    pub fn from_bytes(b: &[u8]) -> Result<BallFile, CayleyError> {
        let mut cur = Cursor { b, pos: 0 };
        if cur.take(4)? != b"CBAL" {
            return Err(CayleyError::BadFile("missing CBAL tag".into()));
        }
        if cur.u32()? != 1 {
            return Err(CayleyError::BadFile("unsupported version".into()));
        }
        let m = cur.u32()? as usize;
        let radius = cur.u32()? as usize;
        let approximate = cur.take(1)?[0] != 0;
        let n = cur.u32()? as usize;
        let mut words = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let l = cur.take(2)?;
            let len = u16::from_le_bytes([l[0], l[1]]) as usize;
            let codes = cur.take(len)?;
            if codes.iter().any(|&c| c as usize >= 2 * m) {
                return Err(CayleyError::BadFile("letter out of range".into()));
            }
            words.push(Word::from_letters(codes.iter().map(|&c| Letter::from_code(c as usize)).collect()));
        }
        let mut dist = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            dist.push(cur.u32()? as usize);
        }
        if cur.pos != b.len() {
            return Err(CayleyError::BadFile("trailing bytes".into()));
        }
        Ok(BallFile { m, radius, approximate, words, dist })
    }
}

struct Cursor<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CayleyError> {
        let s = self.b.get(self.pos..self.pos + n).ok_or_else(|| CayleyError::BadFile("truncated".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CayleyError> {
        let v = self.take(4)?;
        Ok(u32::from_le_bytes([v[0], v[1], v[2], v[3]]))
    }
}

/// Ball of the given radius, grown breadth first in shortlex order.
pub fn ball(solver: &Solver, radius: usize, max_vertices: usize) -> Result<CayleyBall, CayleyError> {
    let letters: Vec<Letter> = Letter::alphabet(solver.p.m).collect();
    ball_with_order(solver, radius, max_vertices, &letters)
}

/// As [`ball`] with a custom letter order for expansion; the vertex set and
/// distances do not depend on it when the solver is complete.
pub fn ball_with_order(solver: &Solver, radius: usize, max_vertices: usize, letters: &[Letter]) -> Result<CayleyBall, CayleyError> {
    let inv = solver.invariants();
    let mut b = CayleyBall {
        m: solver.p.m,
        radius,
        words: vec![Word::empty()],
        dist: vec![0],
        parents: vec![Vec::new()],
        adj: vec![Vec::new()],
        approximate: false,
        index: HashMap::from([(Word::empty(), 0)]),
        buckets: HashMap::from([(inv.key(&Word::empty()), vec![0])]),
    };
    let mut level = vec![0usize];
    for k in 0..radius {
        let cands: Vec<(usize, Letter, Word)> = level
            .iter()
            .flat_map(|&v| letters.iter().map(move |&x| (v, x)))
            .map(|(v, x)| (v, x, b.words[v].concat(&Word::from_letters(vec![x])).free_reduce()))
            .collect();
        // compare each candidate against existing vertices at distance k − 1 or k in parallel
        let old: Vec<(Option<usize>, bool)> = {
            let b = &b;
            par::map_ref(&cands, |(_, _, y)| {
                if let Some(&u) = b.index.get(y) {
                    return (Some(u), false);
                }
                let mut unknown = false;
                let hit = b.buckets.get(&inv.key(y)).and_then(|vs| {
                    vs.iter().copied().filter(|&u| b.dist[u] + 1 >= k).find(|&u| match solver.equal(&b.words[u], y) {
                        Status::Trivial => true,
                        Status::Unknown => {
                            unknown = true;
                            false
                        }
                        Status::Nontrivial => false,
                    })
                });
                (hit, unknown && hit.is_none())
            })
        };
        b.approximate |= old.iter().any(|&(_, unknown)| unknown);
        let old = old.into_iter().map(|(hit, _)| hit);
        let mut next = Vec::new();
        for ((v, x, y), hit) in cands.into_iter().zip(old) {
            let target = match hit {
                Some(u) => u,
                None => {
                    // candidates of this level: same distance, compare sequentially
                    let key = inv.key(&y);
                    let mut unknown = false;
                    let found = b.buckets.get(&key).and_then(|vs| {
                        vs.iter().copied().filter(|&u| b.dist[u] == k + 1).find(|&u| match solver.equal(&b.words[u], &y) {
                            Status::Trivial => true,
                            Status::Unknown => {
                                unknown = true;
                                false
                            }
                            Status::Nontrivial => false,
                        })
                    });
                    if unknown && found.is_none() {
                        b.approximate = true;
                    }
                    match found {
                        Some(u) => u,
                        None => {
                            if b.words.len() >= max_vertices {
                                return Err(CayleyError::BudgetExhausted(max_vertices));
                            }
                            let u = b.words.len();
                            b.words.push(y.clone());
                            b.dist.push(k + 1);
                            b.parents.push(Vec::new());
                            b.adj.push(Vec::new());
                            b.index.insert(y, u);
                            b.buckets.entry(key).or_default().push(u);
                            next.push(u);
                            u
                        }
                    }
                }
            };
            if !b.adj[v].iter().any(|&(l, t)| l == x && t == target) {
                b.adj[v].push((x, target));
            }
            if !b.adj[target].iter().any(|&(l, t)| l == x.inverse() && t == v) {
                b.adj[target].push((x.inverse(), v));
            }
            if b.dist[target] == k + 1 && !b.parents[target].contains(&v) {
                b.parents[target].push(v);
            }
        }
        level = next;
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicSegment {
    pub vertices: Vec<usize>,
    pub label: Word,
}

impl GeodesicSegment {
    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }
}

/// All geodesics from `x` to `y` inside the ball graph, up to `max_paths`.
pub fn geodesics(b: &CayleyBall, x: &Word, y: &Word, max_paths: usize) -> Result<Vec<GeodesicSegment>, CayleyError> {
    let (vx, vy) = (b.vertex(x)?, b.vertex(y)?);
    let d = b.distances_from(vx);
    if d[vy] == usize::MAX {
        return Err(CayleyError::OutOfBall(y.to_string()));
    }
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>, Vec<Letter>)> = vec![(vy, vec![vy], Vec::new())];
    while let Some((v, path, labels)) = stack.pop() {
        if out.len() >= max_paths {
            break;
        }
        if v == vx {
            let vertices: Vec<usize> = path.into_iter().rev().collect();
            let label = Word::from_letters(labels.into_iter().rev().collect());
            out.push(GeodesicSegment { vertices, label });
            continue;
        }
        // edges u --l--> v with d[u] = d[v] − 1, visited in reverse so output is ordered
        let mut prev: Vec<(Letter, usize)> = b.adj[v]
            .iter()
            .filter(|&&(_, u)| d[u] != usize::MAX && d[u] + 1 == d[v])
            .map(|&(l, u)| (l.inverse(), u))
            .collect();
        prev.sort();
        prev.dedup();
        for (l, u) in prev.into_iter().rev() {
            let mut p2 = path.clone();
            p2.push(u);
            let mut l2 = labels.clone();
            l2.push(l);
            stack.push((u, p2, l2));
        }
    }
    out.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(out)
}

/// Vertex-disjoint with both endpoint pairs within `10δ`.
pub fn are_parallel(b: &CayleyBall, g1: &GeodesicSegment, g2: &GeodesicSegment, delta: Ratio<i64>) -> Result<bool, CayleyError> {
    if g1.vertices.is_empty() || g2.vertices.is_empty() {
        return Ok(false);
    }
    if g1.vertices.iter().any(|v| g2.vertices.contains(v)) {
        return Ok(false);
    }
    let bound = delta * Ratio::from_integer(10);
    let close = |a: usize, c: usize| -> Result<bool, CayleyError> {
        let d = b.distances_from(a)[c];
        if d == usize::MAX {
            return Err(CayleyError::OutOfBall(b.words[c].to_string()));
        }
        Ok(Ratio::from_integer(d as i64) <= bound)
    };
    Ok(close(g1.vertices[0], g2.vertices[0])? && close(*g1.vertices.last().unwrap(), *g2.vertices.last().unwrap())?)
}

/// `δ = 4ℓ / (1 − 2d)`.
pub fn delta_bound(d: Ratio<i64>, l: usize) -> Result<Ratio<i64>, CayleyError> {
    let one = Ratio::from_integer(1);
    if d >= Ratio::new(1, 2) {
        return Err(CayleyError::DensityOutOfRange);
    }
    Ok(Ratio::from_integer(4 * l as i64) / (one - d * 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;

    #[test]
    fn lattice_membership() {
        let l = Lattice::new(2, &[vec![2, 0], vec![0, 3]]);
        assert!(l.contains(&[4, -3]));
        assert!(!l.contains(&[1, 0]));
        assert_eq!(l.reduce(&[5, 7]), vec![1, 1]);
        let z = Lattice::new(3, &[vec![1, 1, 0], vec![1, -1, 0]]);
        assert!(z.contains(&[2, 0, 0]));
        assert!(!z.contains(&[1, 0, 0]));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_bound(Ratio::from_integer(0), 10).unwrap(), Ratio::from_integer(40));
        assert_eq!(delta_bound(Ratio::new(1, 4), 10).unwrap(), Ratio::from_integer(80));
        assert_eq!(delta_bound(Ratio::new(1, 6), 60).unwrap(), Ratio::from_integer(360));
        assert!(delta_bound(Ratio::new(1, 2), 10).is_err());
    }

    #[test]
    fn free_only() {
        let p = Presentation::free(2);
        let v = word_problem(&w("abBA"), &p, Strategy::FreeOnly).unwrap();
        assert_eq!(v.status, Status::Trivial);
        assert_eq!(word_problem(&w("ab"), &p, Strategy::FreeOnly).unwrap().status, Status::Nontrivial);
    }

    #[test]
    fn dehn_requires_c_prime_sixth() {
        let p = Presentation::parse(None, &["abAB"]).unwrap();
        assert!(matches!(Solver::new(&p, Strategy::Dehn), Err(CayleyError::StrategyPreconditionFailed(_))));
    }
}
