//! Band diagrams between parallel geodesics, layer analysis and the
//! multi-geodesic complex.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cayley::{are_parallel, geodesics, CayleyBall, GeodesicSegment, Solver, Status};
use crate::complex::{glue_mapped, path_complex, EdgeId, FaceId, PathRef, TwoComplex, VanKampenDiagram, VertexId};
use crate::par;
use crate::search::{find_van_kampen, SearchBudget};
use crate::words::{Letter, Presentation, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BandError {
    #[error("geodesics are not parallel: {0}")]
    NotParallel(String),
    #[error("geodesic of length {len} is shorter than 20δ = {need}")]
    TooShort { len: usize, need: String },
    #[error("no end cap meeting each geodesic in a single vertex: {0}")]
    NoEndCap(String),
    #[error("no diagram within budget: {0}")]
    NoDiagramWithinBudget(String),
    #[error("{0} is not in the ball")]
    OutOfBall(String),
    #[error("not a band: {0}")]
    BadShape(String),
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("density must be below 1/6")]
    DensityOutOfRange,
}

/// A geodesic given by its start and its label; vertex `t` is `start · label[..t]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub start: Word,
    pub label: Word,
}

impl GeodesicPath {
    pub fn new(start: Word, label: Word) -> GeodesicPath {
        GeodesicPath { start, label }
    }

    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    pub fn vertex_words(&self) -> Vec<Word> {
        (0..=self.label.len())
            .map(|t| self.start.concat(&Word::from_letters(self.label.letters()[..t].to_vec())).free_reduce())
            .collect()
    }

    pub fn end(&self) -> Word {
        self.start.concat(&self.label).free_reduce()
    }

    fn in_ball(&self, b: &CayleyBall, s: &Solver) -> Result<GeodesicSegment, BandError> {
        let vertices = self
            .vertex_words()
            .iter()
            .map(|x| b.locate(s, x).ok_or_else(|| BandError::OutOfBall(x.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GeodesicSegment { vertices, label: self.label.clone() })
    }
}

/// A reduced disk diagram whose boundary reads `side1 · cap_end · side2⁻¹ · cap_start`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandDiagram {
    pub diagram: VanKampenDiagram,
    /// x₁, y₁, y₂, x₂.
    pub corners: [VertexId; 4],
    /// Darts from x₁ to y₁.
    pub side1: Vec<EdgeId>,
    /// Darts from x₂ to y₂.
    pub side2: Vec<EdgeId>,
    /// Darts from y₁ to y₂.
    pub cap_end: Vec<EdgeId>,
    /// Darts from x₂ to x₁.
    pub cap_start: Vec<EdgeId>,
}

impl BandDiagram {
    /// Splits the boundary of `diagram` into the four paths.
    pub fn from_diagram(diagram: VanKampenDiagram, n1: usize, c1: usize, n2: usize) -> Result<BandDiagram, BandError> {
        let b = diagram.boundary.clone();
        if n1 + c1 + n2 > b.len() {
            return Err(BandError::BadShape(format!("side and cap lengths {} exceed boundary length {}", n1 + c1 + n2, b.len())));
        }
        let corner = |p: usize| diagram.boundary_vertex(p % b.len().max(1));
        let corners = [corner(0), corner(n1), corner(n1 + c1), corner(n1 + c1 + n2)];
        let distinct: HashSet<VertexId> = corners.iter().copied().collect();
        if distinct.len() != 4 {
            return Err(BandError::BadShape(format!("corners {corners:?} are not distinct")));
        }
        let c = &diagram.complex;
        let side2 = b[n1 + c1..n1 + c1 + n2].iter().rev().map(|&e| c.inv(e)).collect();
        Ok(BandDiagram {
            side1: b[..n1].to_vec(),
            cap_end: b[n1..n1 + c1].to_vec(),
            side2,
            cap_start: b[n1 + c1 + n2..].to_vec(),
            corners,
            diagram,
        })
    }

    pub fn complex(&self) -> &TwoComplex {
        &self.diagram.complex
    }

    pub fn side_word(&self, side: usize) -> Word {
        self.complex().path_word(if side == 1 { &self.side1 } else { &self.side2 })
    }

    fn side_sets(&self) -> [HashMap<EdgeId, usize>; 2] {
        let c = self.complex();
        let set = |s: &[EdgeId]| s.iter().enumerate().map(|(t, &e)| (c.undirected(e), t)).collect();
        [set(&self.side1), set(&self.side2)]
    }

    /// Face whose loop contains the edge, if any.
    fn face_of(&self, e: EdgeId) -> Option<FaceId> {
        let u = self.complex().undirected(e);
        self.complex().faces.iter().position(|f| f.boundary.iter().any(|&x| self.complex().undirected(x) == u))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    OneLayer,
    Side1Only,
    Side2Only,
    Interior,
}

/// Per-face contacts with the sides, counted along the face loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerClassification {
    pub status: Vec<Layer>,
    pub on_side1: Vec<usize>,
    pub on_side2: Vec<usize>,
    /// Intermediate edges of each face (loop darts on neither side).
    pub interior: Vec<Vec<EdgeId>>,
}

impl LayerClassification {
    pub fn int_len(&self, f: FaceId) -> usize {
        self.interior[f].len()
    }

    pub fn contact(&self, f: FaceId, side: usize) -> usize {
        if side == 1 {
            self.on_side1[f]
        } else {
            self.on_side2[f]
        }
    }
}

/// A face meets a side when they share an edge.
pub fn classify_layers(b: &BandDiagram) -> LayerClassification {
    let [s1, s2] = b.side_sets();
    let c = b.complex();
    let mut out = LayerClassification { status: Vec::new(), on_side1: Vec::new(), on_side2: Vec::new(), interior: Vec::new() };
    for f in &c.faces {
        let (mut a, mut z, mut int) = (0, 0, Vec::new());
        for &e in &f.boundary {
            let u = c.undirected(e);
            if s1.contains_key(&u) {
                a += 1;
            } else if s2.contains_key(&u) {
                z += 1;
            } else {
                int.push(e);
            }
        }
        out.status.push(match (a > 0, z > 0) {
            (true, true) => Layer::OneLayer,
            (true, false) => Layer::Side1Only,
            (false, true) => Layer::Side2Only,
            (false, false) => Layer::Interior,
        });
        out.on_side1.push(a);
        out.on_side2.push(z);
        out.interior.push(int);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PocketCase {
    /// The two 1-layer faces meet on both sides.
    MeetBoth,
    /// They meet on exactly one side.
    MeetOne,
    /// They do not meet on either side.
    MeetNeither,
}

/// Non-1-layer faces between two consecutive 1-layer faces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pocket {
    pub case: PocketCase,
    pub first: FaceId,
    pub second: FaceId,
    pub faces: Vec<FaceId>,
}

fn side_positions(b: &BandDiagram, f: FaceId, side: usize) -> Vec<usize> {
    let sets = b.side_sets();
    let c = b.complex();
    let mut v: Vec<usize> =
        c.faces[f].boundary.iter().filter_map(|&e| sets[side - 1].get(&c.undirected(e)).copied()).collect();
    v.sort_unstable();
    v
}

fn face_vertices(c: &TwoComplex, f: FaceId) -> HashSet<VertexId> {
    c.faces[f].boundary.iter().map(|&e| c.src(e)).collect()
}

/// Pockets between consecutive 1-layer faces (ordered along side 1).
pub fn interposed_cases(b: &BandDiagram) -> Vec<Pocket> {
    let lc = classify_layers(b);
    let c = b.complex();
    let nf = c.faces.len();
    let mut ones: Vec<FaceId> = (0..nf).filter(|&f| lc.status[f] == Layer::OneLayer).collect();
    ones.sort_by_key(|&f| side_positions(b, f, 1).first().copied());
    // dual adjacency through shared edges
    let mut by_edge: HashMap<EdgeId, Vec<FaceId>> = HashMap::new();
    for (f, face) in c.faces.iter().enumerate() {
        for &e in &face.boundary {
            by_edge.entry(c.undirected(e)).or_default().push(f);
        }
    }
    let mut adj: Vec<BTreeSet<FaceId>> = vec![BTreeSet::new(); nf];
    for fs in by_edge.values() {
        for &x in fs {
            for &y in fs {
                if x != y {
                    adj[x].insert(y);
                }
            }
        }
    }
    let mut comp = vec![usize::MAX; nf];
    let mut comps: Vec<Vec<FaceId>> = Vec::new();
    for s in 0..nf {
        if lc.status[s] == Layer::OneLayer || comp[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![s];
        comp[s] = id;
        let mut members = Vec::new();
        while let Some(x) = stack.pop() {
            members.push(x);
            for &y in &adj[x] {
                if lc.status[y] != Layer::OneLayer && comp[y] == usize::MAX {
                    comp[y] = id;
                    stack.push(y);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    let sides = |f: FaceId| (side_positions(b, f, 1), side_positions(b, f, 2));
    let mut out = Vec::new();
    for pair in ones.windows(2) {
        let (f1, f2) = (pair[0], pair[1]);
        let ((a1, a2), (b1, b2)) = (sides(f1), sides(f2));
        let gap = |x: &[usize], y: &[usize], t: usize| {
            let lo = x.iter().max().copied().unwrap_or(0).min(y.iter().max().copied().unwrap_or(0));
            let hi = x.iter().min().copied().unwrap_or(0).max(y.iter().min().copied().unwrap_or(0));
            lo < t && t < hi
        };
        let mut faces = Vec::new();
        for members in &comps {
            let touching: BTreeSet<FaceId> =
                members.iter().flat_map(|&x| adj[x].iter().copied()).filter(|&y| lc.status[y] == Layer::OneLayer).collect();
            if !touching.iter().all(|&y| y == f1 || y == f2) || touching.is_empty() {
                continue;
            }
            let p1: Vec<usize> = members.iter().flat_map(|&x| side_positions(b, x, 1)).collect();
            let p2: Vec<usize> = members.iter().flat_map(|&x| side_positions(b, x, 2)).collect();
            let inside = if p1.is_empty() && p2.is_empty() {
                touching.len() == 2
            } else {
                p1.iter().all(|&t| gap(&a1, &b1, t)) && p2.iter().all(|&t| gap(&a2, &b2, t))
            };
            if inside {
                faces.extend(members.iter().copied());
            }
        }
        if faces.is_empty() {
            continue;
        }
        faces.sort_unstable();
        let common: HashSet<VertexId> = face_vertices(c, f1).intersection(&face_vertices(c, f2)).copied().collect();
        let on_side = |s: &[EdgeId]| {
            let vs: HashSet<VertexId> = s.iter().flat_map(|&e| [c.src(e), c.dst(e)]).collect();
            common.iter().any(|v| vs.contains(v))
        };
        let case = match (on_side(&b.side1), on_side(&b.side2)) {
            (true, true) => PocketCase::MeetBoth,
            (false, false) => PocketCase::MeetNeither,
            _ => PocketCase::MeetOne,
        };
        out.push(Pocket { case, first: f1, second: f2, faces });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closeness {
    Close,
    Far,
}

/// A side edge of a band with its closeness to the other side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideEdge {
    pub side: usize,
    pub position: usize,
    pub face: Option<FaceId>,
    pub label: Closeness,
}

/// Close iff the edge's face meets the other side and `|Int(f)| ≤ |∂f ∩ other|`.
/// Edges on no face count as far.
pub fn close_far(b: &BandDiagram) -> Vec<SideEdge> {
    let lc = classify_layers(b);
    let mut out = Vec::new();
    for (side, darts) in [(1, &b.side1), (2, &b.side2)] {
        let other = 3 - side;
        for (position, &e) in darts.iter().enumerate() {
            let face = b.face_of(e);
            let close = face.is_some_and(|f| lc.contact(f, other) > 0 && lc.int_len(f) <= lc.contact(f, other));
            out.push(SideEdge { side, position, face, label: if close { Closeness::Close } else { Closeness::Far } });
        }
    }
    out
}

/// `2 + 4d/(1 − 6d)` for `d < 1/6`.
pub fn parallel_count_bound(d: Ratio<i64>) -> Result<Ratio<i64>, BandError> {
    if d >= Ratio::new(1, 6) || d < Ratio::from_integer(0) {
        return Err(BandError::DensityOutOfRange);
    }
    Ok(Ratio::from_integer(2) + d * 4 / (Ratio::from_integer(1) - d * 6))
}

/// First geodesic from `from` to `to` (shortlex on labels) meeting `g_from`
/// only at its start and `g_to` only at its end.
fn end_cap(
    ball: &CayleyBall,
    from: usize,
    to: usize,
    g_from: &HashSet<usize>,
    g_to: &HashSet<usize>,
) -> Result<GeodesicSegment, BandError> {
    let mut caps = geodesics(ball, &ball.words[from], &ball.words[to], 10_000).map_err(|e| BandError::OutOfBall(e.to_string()))?;
    caps.sort_by(|a, b| a.label.shortlex_cmp(&b.label));
    caps.into_iter()
        .find(|g| {
            let n = g.vertices.len();
            g.vertices.iter().enumerate().all(|(t, v)| {
                (t == 0 || !g_from.contains(v)) && (t + 1 == n || !g_to.contains(v))
            }) && !(n > 1 && (g_to.contains(&g.vertices[0]) || g_from.contains(&g.vertices[n - 1])))
        })
        .ok_or_else(|| BandError::NoEndCap(format!("{} → {}", ball.words[from], ball.words[to])))
}

/// Band diagram between two parallel geodesics, certified by diagram search.
pub fn build_band_diagram(
    g1: &GeodesicPath,
    g2: &GeodesicPath,
    solver: &Solver,
    ball: &CayleyBall,
    delta: Ratio<i64>,
    budget: &SearchBudget,
) -> Result<BandDiagram, BandError> {
    let need = delta * 20;
    for g in [g1, g2] {
        if Ratio::from_integer(g.len() as i64) < need {
            return Err(BandError::TooShort { len: g.len(), need: need.to_string() });
        }
    }
    let s1 = g1.in_ball(ball, solver)?;
    let s2 = g2.in_ball(ball, solver)?;
    if !are_parallel(ball, &s1, &s2, delta).map_err(|e| BandError::OutOfBall(e.to_string()))? {
        return Err(BandError::NotParallel(format!("{} and {} at δ = {delta}", g1.label, g2.label)));
    }
    let v1: HashSet<usize> = s1.vertices.iter().copied().collect();
    let v2: HashSet<usize> = s2.vertices.iter().copied().collect();
    let cap_end = end_cap(ball, *s1.vertices.last().unwrap(), *s2.vertices.last().unwrap(), &v1, &v2)?;
    let cap_start = end_cap(ball, s2.vertices[0], s1.vertices[0], &v2, &v1)?;
    let word = g1.label.concat(&cap_end.label).concat(&g2.label.inverse()).concat(&cap_start.label);
    let cert = find_van_kampen(&word, &solver.p, budget)
        .map_err(|e| BandError::NoDiagramWithinBudget(e.to_string()))?
        .ok_or_else(|| BandError::NoDiagramWithinBudget(format!("no diagram for {word}")))?;
    if cert.diagram.boundary_word() != word {
        return Err(BandError::BadShape(format!("diagram boundary {} differs from {word}", cert.diagram.boundary_word())));
    }
    BandDiagram::from_diagram(cert.diagram, g1.len(), cap_end.label.len(), g2.len())
}

/// Band fixture from vertex cycles. Faces and the boundary run counterclockwise;
/// `corners` index into `boundary` as x₁, y₁, y₂, x₂. Labels come from `label`,
/// and each face word must be a rotation of a relator of `p` or its inverse.
pub fn planar_band_with(
    num_vertices: usize,
    faces: &[Vec<VertexId>],
    boundary: &[VertexId],
    corners: [usize; 4],
    p: &Presentation,
    label: impl Fn(VertexId, VertexId) -> Letter,
) -> Result<BandDiagram, BandError> {
    let cyc_word = |vs: &[VertexId]| Word::from_letters((0..vs.len()).map(|i| label(vs[i], vs[(i + 1) % vs.len()])).collect());
    let mut fs = Vec::new();
    for vs in faces {
        let w = cyc_word(vs);
        let ri = p
            .relators
            .iter()
            .position(|r| r.len() == w.len() && (0..r.len()).any(|o| r.rotate(o) == w || r.inverse().rotate(o) == w))
            .ok_or_else(|| BandError::LabelMismatch(format!("face word {w} is not a relator")))?;
        fs.push((ri, vs.clone(), w));
    }
    let rot: Vec<VertexId> = boundary[corners[0]..].iter().chain(&boundary[..corners[0]]).copied().collect();
    let bw = cyc_word(&rot);
    let d = VanKampenDiagram::from_cycles(num_vertices, &p.relators, &fs, (&rot, &bw)).map_err(BandError::BadShape)?;
    let problems = d.validate_embedding(Some(p));
    if !problems.is_empty() {
        return Err(BandError::BadShape(format!("{problems:?}")));
    }
    let n = boundary.len();
    let at = |k: usize| (corners[k] + n - corners[0]) % n;
    BandDiagram::from_diagram(d, at(1), at(2) - at(1), at(3) - at(2))
}

/// As [`planar_band_with`], labeling every edge with its own generator; the
/// presentation is read off the faces.
pub fn planar_band(
    num_vertices: usize,
    faces: &[Vec<VertexId>],
    boundary: &[VertexId],
    corners: [usize; 4],
) -> Result<(Presentation, BandDiagram), BandError> {
    let mut ids: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    for vs in faces.iter().chain(std::iter::once(&boundary.to_vec())) {
        for i in 0..vs.len() {
            let (u, v) = (vs[i], vs[(i + 1) % vs.len()]);
            let n = ids.len();
            ids.entry((u.min(v), u.max(v))).or_insert(n + 1);
        }
    }
    let label = |u: VertexId, v: VertexId| Letter::new(ids[&(u.min(v), u.max(v))], u > v);
    let rels: Vec<Word> = faces
        .iter()
        .map(|vs| Word::from_letters((0..vs.len()).map(|i| label(vs[i], vs[(i + 1) % vs.len()])).collect()))
        .collect();
    let p = Presentation::new(ids.len(), rels).map_err(|e| BandError::BadShape(e.to_string()))?;
    let b = planar_band_with(num_vertices, faces, boundary, corners, &p, label)?;
    Ok((p, b))
}

/// An `n × h` grid of `abAB` squares; side 1 reads `aⁿ` from `e`, side 2 reads `aⁿ` from `bʰ`.
pub fn grid_band(n: usize, h: usize) -> BandDiagram {
    let id = |x: usize, y: usize| y * (n + 1) + x;
    let mut faces = Vec::new();
    for y in 0..h {
        for x in 0..n {
            faces.push(vec![id(x, y), id(x + 1, y), id(x + 1, y + 1), id(x, y + 1)]);
        }
    }
    let mut boundary: Vec<VertexId> = (0..n).map(|x| id(x, 0)).collect();
    boundary.extend((0..h).map(|y| id(n, y)));
    boundary.extend((1..=n).rev().map(|x| id(x, h)));
    boundary.extend((1..=h).rev().map(|y| id(0, y)));
    let corners = [0, n, n + h, 2 * n + h];
    let p = Presentation::parse(None, &["abAB"]).expect("valid");
    let label = |u: VertexId, v: VertexId| {
        let (ux, uy, vx, vy) = (u % (n + 1), u / (n + 1), v % (n + 1), v / (n + 1));
        match (vx as isize - ux as isize, vy as isize - uy as isize) {
            (1, 0) => Letter::new(1, false),
            (-1, 0) => Letter::new(1, true),
            (0, 1) => Letter::new(2, false),
            _ => Letter::new(2, true),
        }
    };
    planar_band_with((n + 1) * (h + 1), &faces, &boundary, corners, &p, label).expect("grid is a band")
}

/// The 2-complex `Y` glued from band diagrams `D_ij` along the geodesics.
#[derive(Clone, Debug)]
pub struct MultiGeodesicComplex {
    pub geodesics: Vec<GeodesicPath>,
    pub bands: Vec<((usize, usize), BandDiagram)>,
    pub complex: TwoComplex,
    /// Band owning each face of `Y`.
    pub face_band: Vec<usize>,
    /// Darts of `Y` along each geodesic.
    pub geodesic_edges: Vec<Vec<EdgeId>>,
    /// For each band, the `Y` darts of side 1 and side 2.
    pub band_sides: Vec<[Vec<EdgeId>; 2]>,
    pub geodesics_disjoint: bool,
}

impl MultiGeodesicComplex {
    /// Glues the given bands; band `(i, j)` has side 1 on `γ_i` and side 2 on `γ_j`.
    pub fn from_bands(
        geodesics: Vec<GeodesicPath>,
        bands: Vec<((usize, usize), BandDiagram)>,
        solver: &Solver,
    ) -> Result<MultiGeodesicComplex, BandError> {
        let k = geodesics.len();
        let mut parts: Vec<TwoComplex> = bands.iter().map(|(_, b)| b.complex().clone()).collect();
        let mut paths = Vec::new();
        for g in &geodesics {
            let (c, path) = path_complex(&g.label);
            paths.push(path);
            parts.push(c);
        }
        let nb = bands.len();
        let mut ids = Vec::new();
        for (bi, ((i, j), b)) in bands.iter().enumerate() {
            if *i >= k || *j >= k || i == j {
                return Err(BandError::BadShape(format!("band ({i}, {j}) with {k} geodesics")));
            }
            for (side, g) in [(1, *i), (2, *j)] {
                if b.side_word(side) != geodesics[g].label {
                    return Err(BandError::LabelMismatch(format!(
                        "band ({i}, {j}) side {side} reads {}, geodesic {g} reads {}",
                        b.side_word(side),
                        geodesics[g].label
                    )));
                }
                let darts = if side == 1 { b.side1.clone() } else { b.side2.clone() };
                ids.push((PathRef { part: bi, edges: darts }, PathRef { part: nb + g, edges: paths[g].clone() }));
            }
        }
        let (complex, map) = glue_mapped(&parts, &ids).map_err(|e| BandError::LabelMismatch(e.to_string()))?;
        let face_band = bands.iter().enumerate().flat_map(|(bi, (_, b))| std::iter::repeat_n(bi, b.complex().faces.len())).collect();
        let geodesic_edges = (0..k).map(|g| paths[g].iter().map(|&e| map[nb + g][e]).collect()).collect();
        let band_sides = bands
            .iter()
            .enumerate()
            .map(|(bi, (_, b))| [b.side1.iter().map(|&e| map[bi][e]).collect(), b.side2.iter().map(|&e| map[bi][e]).collect()])
            .collect();
        let vsets: Vec<Vec<Word>> = geodesics.iter().map(GeodesicPath::vertex_words).collect();
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
        let disjoint = par::map_ref(&pairs, |&(i, j)| {
            vsets[i].iter().all(|x| vsets[j].iter().all(|y| solver.equal(x, y) != Status::Trivial))
        })
        .into_iter()
        .all(|x| x);
        Ok(MultiGeodesicComplex { geodesics, bands, complex, face_band, geodesic_edges, band_sides, geodesics_disjoint: disjoint })
    }
}

/// Builds every band `D_ij`, `i < j`, by search and glues them.
pub fn build_multi_complex(
    geodesics: Vec<GeodesicPath>,
    solver: &Solver,
    ball: &CayleyBall,
    delta: Ratio<i64>,
    budget: &SearchBudget,
) -> Result<MultiGeodesicComplex, BandError> {
    let k = geodesics.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let built = par::map_ref(&pairs, |&(i, j)| build_band_diagram(&geodesics[i], &geodesics[j], solver, ball, delta, budget));
    let bands = pairs.into_iter().zip(built).map(|(ij, b)| b.map(|b| (ij, b))).collect::<Result<Vec<_>, _>>()?;
    MultiGeodesicComplex::from_bands(geodesics, bands, solver)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandReport {
    pub i: usize,
    pub j: usize,
    pub faces: usize,
    pub cancel: usize,
    pub one_layer_faces: usize,
    pub far_edges: usize,
    /// `4·Cancel(D_ij) + 400ℓ`.
    pub far_threshold: usize,
    pub far_within_threshold: bool,
    /// Faces with far edges on a side, by the three cases of the far-edge count:
    /// other side untouched, other side close, other side far.
    pub far_cases: [usize; 3],
    /// `|E_ij| ≤ Σ 2|Int(f)|`.
    pub far_within_int_bound: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AccountingReport {
    pub k: usize,
    pub faces: usize,
    pub ell: usize,
    pub cancel_y: usize,
    pub red_y: usize,
    pub sum_cancel_bands: usize,
    pub attachment_excess: usize,
    /// `Cancel(Y) = Σ Cancel(D_ij) + Σ (attachment degree − 1)⁺` over geodesic edges.
    pub recount_holds: bool,
    /// Per geodesic: edges lying on faces of two or more bands.
    pub shared_edges: Vec<usize>,
    pub complexity_bound: usize,
    pub complexity_ok: bool,
    pub d: String,
    pub epsilon: String,
    /// `Cancel(Y) − Red(Y)` against `(d + ε)|Y|ℓ`.
    pub inequality_lhs: String,
    pub inequality_rhs: String,
    pub inequality_holds: bool,
    pub k_bound: Option<String>,
    pub bands: Vec<BandReport>,
    pub geodesics_disjoint: bool,
    /// Reducible pairs of faces from different bands at a geodesic edge.
    pub cross_band_pairs: usize,
    /// Of those, pairs where the edge is close in both bands.
    pub both_close: usize,
}

impl MultiGeodesicComplex {
    pub fn report(&self, ell: usize, d: Ratio<i64>, eps: Ratio<i64>) -> AccountingReport {
        let y = &self.complex;
        let k = self.geodesics.len();
        let cancel_y = y.cancellation();
        let red_y = y.reduction_degree();
        let sum_cancel_bands: usize = self.bands.iter().map(|(_, b)| b.complex().cancellation()).sum();
        // per geodesic edge: number of bands with a face on it
        let mut attach: HashMap<EdgeId, usize> = HashMap::new();
        for (bi, (_, b)) in self.bands.iter().enumerate() {
            let bd = b.complex().edge_degrees();
            for (s, darts) in [&b.side1, &b.side2].into_iter().enumerate() {
                for (t, &e) in darts.iter().enumerate() {
                    if bd[b.complex().undirected(e)] > 0 {
                        *attach.entry(y.undirected(self.band_sides[bi][s][t])).or_default() += 1;
                    }
                }
            }
        }
        let attachment_excess: usize = attach.values().map(|&t| t.saturating_sub(1)).sum();
        let shared_edges = self
            .geodesic_edges
            .iter()
            .map(|es| es.iter().filter(|&&e| attach.get(&y.undirected(e)).copied().unwrap_or(0) >= 2).count())
            .collect();
        let faces = y.faces.len();
        let complexity_bound = 6 * (k * k.saturating_sub(1) / 2) * faces;
        let lhs = Ratio::from_integer(cancel_y as i64 - red_y as i64);
        let rhs = (d + eps) * Ratio::from_integer((faces * ell) as i64);

        // closeness per band, keyed by Y edge
        let mut close: Vec<HashMap<EdgeId, Closeness>> = Vec::new();
        let mut bands = Vec::new();
        for (bi, ((i, j), b)) in self.bands.iter().enumerate() {
            let lc = classify_layers(b);
            let cf = close_far(b);
            let mut m = HashMap::new();
            for se in &cf {
                m.insert(y.undirected(self.band_sides[bi][se.side - 1][se.position]), se.label);
            }
            close.push(m);
            let far: Vec<&SideEdge> = cf.iter().filter(|s| s.label == Closeness::Far).collect();
            let mut cases = [0usize; 3];
            let mut seen = HashSet::new();
            for se in &far {
                let Some(f) = se.face else { continue };
                if !seen.insert((f, se.side)) {
                    continue;
                }
                let other = 3 - se.side;
                let case = if lc.contact(f, other) == 0 {
                    0
                } else if lc.contact(f, se.side) > 0 && lc.int_len(f) <= lc.contact(f, se.side) {
                    1
                } else {
                    2
                };
                cases[case] += 1;
            }
            let c = b.complex().cancellation();
            let int_total: usize = (0..lc.status.len()).map(|f| lc.int_len(f)).sum();
            bands.push(BandReport {
                i: *i,
                j: *j,
                faces: b.diagram.num_faces(),
                cancel: c,
                one_layer_faces: lc.status.iter().filter(|&&s| s == Layer::OneLayer).count(),
                far_edges: far.len(),
                far_threshold: 4 * c + 400 * ell,
                far_within_threshold: far.len() <= 4 * c + 400 * ell,
                far_cases: cases,
                far_within_int_bound: far.iter().filter(|s| s.face.is_some()).count() <= 2 * int_total,
            });
        }
        let geo: HashSet<EdgeId> = self.geodesic_edges.iter().flatten().map(|&e| y.undirected(e)).collect();
        let mut cross = 0;
        let mut both = 0;
        for rp in y.reducible_pairs() {
            let (bf, bg) = (self.face_band[rp.first], self.face_band[rp.second]);
            let e = y.undirected(rp.edge);
            if bf == bg || !geo.contains(&e) {
                continue;
            }
            cross += 1;
            if close[bf].get(&e) == Some(&Closeness::Close) && close[bg].get(&e) == Some(&Closeness::Close) {
                both += 1;
            }
        }
        AccountingReport {
            k,
            faces,
            ell,
            cancel_y,
            red_y,
            sum_cancel_bands,
            attachment_excess,
            recount_holds: cancel_y == sum_cancel_bands + attachment_excess,
            shared_edges,
            complexity_bound,
            complexity_ok: y.complexity_at_most(complexity_bound.max(1)),
            d: d.to_string(),
            epsilon: eps.to_string(),
            inequality_lhs: lhs.to_string(),
            inequality_rhs: rhs.to_string(),
            inequality_holds: lhs <= rhs,
            k_bound: parallel_count_bound(d).ok().map(|r| r.to_string()),
            bands,
            geodesics_disjoint: self.geodesics_disjoint,
            cross_band_pairs: cross,
            both_close: both,
        }
    }
}

/// A reducible pair of `Y = D ∪ D′` with `f` in `D` and `g′` in the copy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubledPair {
    pub f: FaceId,
    /// Face of `D` corresponding to `g′`.
    pub g: FaceId,
    pub side: usize,
    /// Positions `[s, s′]` of `∂g ∩ side` along the side of `D`.
    pub segment: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct AnnularDouble {
    pub complex: TwoComplex,
    pub red: usize,
    pub pairs: Vec<DoubledPair>,
}

/// Glues `D` to a copy `D′` translated by `shift` positions along both sides:
/// side position `t + shift` of `D` meets position `t` of `D′`.
pub fn annular_double(b: &BandDiagram, shift: usize) -> Result<AnnularDouble, BandError> {
    let c = b.complex();
    let mut ids = Vec::new();
    for side in [1usize, 2] {
        let darts = if side == 1 { &b.side1 } else { &b.side2 };
        let n = darts.len();
        if shift >= n {
            return Err(BandError::BadShape(format!("shift {shift} leaves no overlap on a side of length {n}")));
        }
        for t in 0..n - shift {
            if c.label(darts[t + shift]) != c.label(darts[t]) {
                return Err(BandError::LabelMismatch(format!(
                    "side {side}: position {} reads {:?}, position {t} reads {:?}",
                    t + shift,
                    c.label(darts[t + shift]),
                    c.label(darts[t])
                )));
            }
        }
        ids.push((PathRef { part: 0, edges: darts[shift..].to_vec() }, PathRef { part: 1, edges: darts[..n - shift].to_vec() }));
    }
    let y = crate::complex::glue(&[c.clone(), c.clone()], &ids).map_err(|e| BandError::LabelMismatch(e.to_string()))?;
    let nf = c.faces.len();
    let sides = b.side_sets();
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for rp in y.reducible_pairs() {
        let (f, g) = if rp.first < nf && rp.second >= nf {
            (rp.first, rp.second - nf)
        } else if rp.second < nf && rp.first >= nf {
            (rp.second, rp.first - nf)
        } else {
            continue;
        };
        if !seen.insert((f, g)) {
            continue;
        }
        for side in [1usize, 2] {
            let pos: Vec<usize> =
                c.faces[g].boundary.iter().filter_map(|&e| sides[side - 1].get(&c.undirected(e)).copied()).collect();
            if let (Some(&lo), Some(&hi)) = (pos.iter().min(), pos.iter().max()) {
                pairs.push(DoubledPair { f, g, side, segment: (lo, hi) });
            }
        }
    }
    Ok(AnnularDouble { red: y.reduction_degree(), complex: y, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_bound_examples() {
        assert_eq!(parallel_count_bound(Ratio::new(1, 10)).unwrap(), Ratio::from_integer(3));
        assert_eq!(parallel_count_bound(Ratio::from_integer(0)).unwrap(), Ratio::from_integer(2));
        assert!(parallel_count_bound(Ratio::new(1, 6)).is_err());
    }

    #[test]
    fn grid_band_shape() {
        let b = grid_band(3, 1);
        assert_eq!(b.side_word(1).to_string(), "aaa");
        assert_eq!(b.side_word(2).to_string(), "aaa");
        assert!(classify_layers(&b).status.iter().all(|&s| s == Layer::OneLayer));
    }
}
