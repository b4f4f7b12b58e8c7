use std::collections::{BTreeMap, HashMap, VecDeque};

use num_rational::Ratio;
use rand::Rng;
use rgroups::cayley::*;
use rgroups::search::SearchBudget;
use rgroups::words::{sample_presentation, sample_reduced, seeded_rng, w, Letter, Presentation, Word};

/// ⟨a, b | abab⟩ is Z * Z/2 via x = ab. Normal forms are reduced strings over
/// {a, A, x} with xx and aA cancelled.
fn zz2_normal(word: &Word) -> String {
    let mut st: Vec<char> = Vec::new();
    for l in word.letters() {
        let toks: &[char] = match (l.generator(), l.is_inverse()) {
            (1, false) => &['a'],
            (1, true) => &['A'],
            (2, false) => &['A', 'x'],
            _ => &['x', 'a'],
        };
        for &t in toks {
            let cancels = matches!((st.last(), t), (Some('a'), 'A') | (Some('A'), 'a') | (Some('x'), 'x'));
            if cancels {
                st.pop();
            } else {
                st.push(t);
            }
        }
    }
    st.into_iter().collect()
}

/// Breadth-first ball in Z * Z/2 keyed by normal form.
fn zz2_ball(radius: usize) -> BTreeMap<String, usize> {
    let mut dist = BTreeMap::from([(String::new(), 0)]);
    let mut reps = VecDeque::from([Word::empty()]);
    while let Some(u) = reps.pop_front() {
        let d = dist[&zz2_normal(&u)];
        if d == radius {
            continue;
        }
        for l in Letter::alphabet(2) {
            let v = u.concat(&Word::from_letters(vec![l]));
            let key = zz2_normal(&v);
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(key) {
                e.insert(d + 1);
                reps.push_back(v);
            }
        }
    }
    dist
}

fn abab() -> Presentation {
    Presentation::parse(None, &["abab"]).unwrap()
}

fn search_solver(p: &Presentation) -> Solver {
    Solver::new(p, Strategy::DiagramSearch(SearchBudget::faces(4))).unwrap()
}

#[test]
fn free_sphere_sizes() {
    let s = Solver::new(&Presentation::free(2), Strategy::FreeOnly).unwrap();
    let b = ball(&s, 3, 10_000).unwrap();
    assert_eq!(b.sphere_sizes(), vec![1, 4, 12, 36]);
    assert!(!b.approximate);
    assert_eq!(ball(&s, 0, 10).unwrap().len(), 1);
    assert!(matches!(ball(&s, 3, 20), Err(CayleyError::BudgetExhausted(20))));
}

#[test]
fn abab_ball_matches_normal_form_oracle() {
    let p = abab();
    let s = search_solver(&p);
    let b = ball(&s, 3, 10_000).unwrap();
    assert!(!b.approximate);
    let oracle = zz2_ball(3);
    let mine: BTreeMap<String, usize> = (0..b.len()).map(|v| (zz2_normal(&b.words[v]), b.dist[v])).collect();
    assert_eq!(mine.len(), b.len(), "two vertices with the same normal form");
    assert_eq!(mine, oracle);
    assert_eq!(b.locate(&s, &w("abab")), Some(0));
    assert_eq!(b.dist[b.locate(&s, &w("BA")).unwrap()], 2);
}

#[test]
fn ball_invariants_and_triangle_inequality() {
    let p = abab();
    let s = search_solver(&p);
    let b = ball(&s, 3, 10_000).unwrap();
    for v in 0..b.len() {
        for &(_, u) in &b.adj[v] {
            assert!(b.dist[u].abs_diff(b.dist[v]) <= 1);
        }
        if v > 0 {
            assert!(b.parents[v].iter().all(|&u| b.dist[u] + 1 == b.dist[v]));
            assert!(!b.parents[v].is_empty());
        }
    }
    let mut rng = seeded_rng(3);
    let all: Vec<Vec<usize>> = (0..b.len()).map(|v| b.distances_from(v)).collect();
    for _ in 0..2000 {
        let (x, y, z) = (rng.gen_range(0..b.len()), rng.gen_range(0..b.len()), rng.gen_range(0..b.len()));
        assert!(all[x][z] <= all[x][y] + all[y][z]);
    }
}

#[test]
fn ball_independent_of_letter_order() {
    let p = abab();
    let s = search_solver(&p);
    let fwd = ball(&s, 3, 10_000).unwrap();
    let order: Vec<Letter> = Letter::alphabet(2).collect::<Vec<_>>().into_iter().rev().collect();
    let rev = ball_with_order(&s, 3, 10_000, &order).unwrap();
    let key = |b: &CayleyBall| -> BTreeMap<String, usize> { (0..b.len()).map(|v| (zz2_normal(&b.words[v]), b.dist[v])).collect() };
    assert_eq!(key(&fwd), key(&rev));

    let z2 = Presentation::parse(None, &["abAB"]).unwrap();
    let s = Solver::new(&z2, Strategy::Abelian).unwrap();
    let a = ball(&s, 4, 10_000).unwrap();
    let b = ball_with_order(&s, 4, 10_000, &order).unwrap();
    assert_eq!(a.sphere_sizes(), vec![1, 4, 8, 12, 16]);
    let ex = |b: &CayleyBall| -> BTreeMap<Vec<i64>, usize> {
        (0..b.len()).map(|v| (exponent_vector(&b.words[v], 2), b.dist[v])).collect()
    };
    assert_eq!(ex(&a), ex(&b));
}

/// Number of shortest paths from e to `target` in Z * Z/2, by oracle BFS.
fn zz2_geodesic_count(target: &Word) -> usize {
    let goal = zz2_normal(target);
    let mut seen = std::collections::HashSet::from([String::new()]);
    let mut layer: HashMap<String, (Word, usize)> = HashMap::from([(String::new(), (Word::empty(), 1))]);
    while !layer.contains_key(&goal) {
        let mut next: HashMap<String, (Word, usize)> = HashMap::new();
        for (u, c) in layer.values() {
            for l in Letter::alphabet(2) {
                let v = u.concat(&Word::from_letters(vec![l]));
                let k = zz2_normal(&v);
                if !seen.contains(&k) {
                    next.entry(k).or_insert((v, 0)).1 += c;
                }
            }
        }
        seen.extend(next.keys().cloned());
        layer = next;
    }
    layer[&goal].1
}

#[test]
fn abab_has_two_geodesics_to_ab() {
    let p = abab();
    let s = search_solver(&p);
    let b = ball(&s, 3, 10_000).unwrap();
    let gs = geodesics(&b, &Word::empty(), &w("ab"), 100).unwrap();
    let labels: Vec<String> = gs.iter().map(|g| g.label.to_string()).collect();
    assert_eq!(labels.len(), zz2_geodesic_count(&w("ab")));
    // ab = BA in this group
    assert_eq!(labels, vec!["ab", "BA"]);
}

#[test]
fn geodesic_basics() {
    let s = Solver::new(&Presentation::free(2), Strategy::FreeOnly).unwrap();
    let b = ball(&s, 4, 100_000).unwrap();
    let one = geodesics(&b, &w("ab"), &w("ab"), 10).unwrap();
    assert_eq!(one.len(), 1);
    assert!(one[0].is_empty());
    let mut rng = seeded_rng(9);
    for _ in 0..50 {
        let x = sample_reduced(2, rng.gen_range(0..3), &mut rng);
        let y = sample_reduced(2, rng.gen_range(0..4), &mut rng);
        let gs = geodesics(&b, &x, &y, 10).unwrap();
        assert_eq!(gs.len(), 1, "a tree has unique geodesics");
        let g = &gs[0];
        assert_eq!(g.label, x.inverse().concat(&y).free_reduce());
        assert_eq!(g.label, g.label.free_reduce());
        assert_eq!(g.vertices.len(), g.len() + 1);
    }
    assert!(matches!(geodesics(&b, &Word::empty(), &w("aaaaa"), 10), Err(CayleyError::OutOfBall(_))));
}

#[test]
fn geodesic_labels_follow_edges() {
    let p = abab();
    let s = search_solver(&p);
    let b = ball(&s, 3, 10_000).unwrap();
    for v in 0..b.len() {
        for g in geodesics(&b, &Word::empty(), &b.words[v], 100).unwrap() {
            assert_eq!(g.len(), b.dist[v]);
            assert_eq!(g.label, g.label.free_reduce());
            for (t, pair) in g.vertices.windows(2).enumerate() {
                assert!(b.adj[pair[0]].contains(&(g.label.letters()[t], pair[1])));
            }
        }
    }
}

#[test]
fn parallel_segments() {
    let s = Solver::new(&Presentation::free(2), Strategy::FreeOnly).unwrap();
    let b = ball(&s, 4, 100_000).unwrap();
    let seg = |x: &str, y: &str| geodesics(&b, &w(x), &w(y), 1).unwrap().remove(0);
    let g1 = seg("", "aa");
    let g2 = seg("b", "baa");
    assert!(!are_parallel(&b, &g1, &g1, Ratio::from_integer(1)).unwrap());
    // endpoint gaps are 1 and |AAbaa| = 5
    assert!(are_parallel(&b, &g1, &g2, Ratio::from_integer(1)).unwrap());
    assert!(!are_parallel(&b, &g1, &g2, Ratio::new(1, 5)).unwrap());
    // touching at the start vertex counts as intersecting
    assert!(!are_parallel(&b, &seg("", "aa"), &seg("", "bb"), Ratio::from_integer(10)).unwrap());
}

#[test]
fn delta_bound_and_the_ten_ell_simplification() {
    assert_eq!(delta_bound(Ratio::from_integer(0), 10).unwrap(), Ratio::from_integer(40));
    assert_eq!(delta_bound(Ratio::new(1, 4), 10).unwrap(), Ratio::from_integer(80));
    assert_eq!(delta_bound(Ratio::new(1, 6), 60).unwrap(), Ratio::from_integer(360));
    assert_eq!(delta_bound(Ratio::new(1, 2), 1), Err(CayleyError::DensityOutOfRange));
    // 4ℓ/(1 − 2d) ≤ 10ℓ exactly when d ≤ 3/10
    let ten_l = |l: i64| Ratio::from_integer(10 * l);
    for l in [1usize, 10, 60] {
        let ok = |d: Ratio<i64>| delta_bound(d, l).unwrap() <= ten_l(l as i64);
        assert!(ok(Ratio::new(3, 20)) && ok(Ratio::new(1, 4)) && ok(Ratio::new(3, 10)));
        assert!(!ok(Ratio::new(31, 100)));
    }
}

#[test]
fn ball_file_roundtrip() {
    let p = abab();
    let b = ball(&search_solver(&p), 3, 10_000).unwrap();
    let bytes = b.to_bytes();
    let f = BallFile::from_bytes(&bytes).unwrap();
    assert_eq!((f.m, f.radius, f.approximate, f.words.len()), (2, 3, false, b.len()));
    assert!(f.words.windows(2).all(|x| x[0].shortlex_cmp(&x[1]).is_lt()));
    for (word, d) in f.words.iter().zip(&f.dist) {
        assert_eq!(b.dist[b.vertex(word).unwrap()], *d);
    }
    assert!(BallFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(BallFile::from_bytes(b"CBAX").is_err());
}

#[test]
fn abab_is_trivial_with_one_face() {
    let p = abab();
    let v = word_problem(&w("abab"), &p, Strategy::DiagramSearch(SearchBudget::faces(2))).unwrap();
    assert_eq!(v.status, Status::Trivial);
    match &v.certificate {
        Some(Certificate::Diagram(c)) => assert_eq!(c.diagram.num_faces(), 1),
        c => panic!("{c:?}"),
    }
    assert!(verify_verdict(&v, &w("abab"), &p));
    let free = word_problem(&w("abBA"), &Presentation::free(2), Strategy::FreeOnly).unwrap();
    assert_eq!(free.status, Status::Trivial);
}

#[test]
fn dehn_precondition_is_enforced() {
    assert!(matches!(
        word_problem(&w("ab"), &abab(), Strategy::Dehn),
        Err(CayleyError::StrategyPreconditionFailed(_))
    ));
}

#[test]
fn dehn_handles_conjugated_relators() {
    let p = sample_presentation(2, 20, "0.01".parse().unwrap(), 7).unwrap();
    let s = Solver::new(&p, Strategy::Dehn).unwrap();
    let r = &p.relators[0];
    let x = w("abA").concat(r).concat(&w("aBA")).concat(&r.rotate(5).inverse());
    let v = s.decide(&x);
    assert_eq!(v.status, Status::Trivial);
    assert!(verify_verdict(&v, &x, &p));
    let y = w("abA").concat(&r.rotate(3));
    assert_eq!(s.decide(&y).status, Status::Nontrivial);
}

#[test]
fn dehn_agrees_with_diagram_search() {
    let p = sample_presentation(2, 20, "0.01".parse().unwrap(), 7).unwrap();
    let dehn = Solver::new(&p, Strategy::Dehn).unwrap();
    let search = search_solver(&p);
    let mut rng = seeded_rng(5);
    let mut words: Vec<Word> = (0..300).map(|_| sample_reduced(2, rng.gen_range(0..=12), &mut rng)).collect();
    // freely trivial words with cancellation inside
    words.extend((0..50).map(|_| {
        let u = sample_reduced(2, rng.gen_range(1..=6), &mut rng);
        Word::from_letters(u.letters().iter().chain(u.inverse().letters()).copied().collect())
    }));
    let mut definitive = 0;
    for x in &words {
        let a = dehn.decide(x);
        let b = search.decide(x);
        assert!(verify_verdict(&a, x, &p));
        assert!(verify_verdict(&b, x, &p));
        if b.status != Status::Unknown {
            definitive += 1;
            assert_eq!(a.status, b.status, "{x}");
        }
    }
    assert!(definitive > 300);
}
