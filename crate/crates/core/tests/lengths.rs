use std::collections::{BTreeMap, VecDeque};

use num_rational::Ratio;
use rgroups::cayley::{ball, CayleyBall, GeodesicSegment, Solver, Strategy};
use rgroups::lengths::*;
use rgroups::search::SearchBudget;
use rgroups::words::{w, Letter, Presentation, Word};

fn free() -> (Solver, CayleyBall) {
    let s = Solver::new(&Presentation::free(2), Strategy::FreeOnly).unwrap();
    let b = ball(&s, 6, 100_000).unwrap();
    (s, b)
}

fn abab() -> (Solver, CayleyBall) {
    let p = Presentation::parse(None, &["abab"]).unwrap();
    let s = Solver::new(&p, Strategy::DiagramSearch(SearchBudget::faces(4))).unwrap();
    let b = ball(&s, 8, 100_000).unwrap();
    (s, b)
}

/// Z * Z/2 with x = ab: normal form over a, A, x.
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
            if matches!((st.last(), t), (Some('a'), 'A') | (Some('A'), 'a') | (Some('x'), 'x')) {
                st.pop();
            } else {
                st.push(t);
            }
        }
    }
    st.into_iter().collect()
}

/// Word length and a representative for every element of the radius-`r` ball.
fn zz2_ball(r: usize) -> BTreeMap<String, (usize, Word)> {
    let mut out = BTreeMap::from([(String::new(), (0, Word::empty()))]);
    let mut q = VecDeque::from([Word::empty()]);
    while let Some(u) = q.pop_front() {
        let d = out[&zz2_normal(&u)].0;
        if d == r {
            continue;
        }
        for l in Letter::alphabet(2) {
            let v = u.concat(&Word::from_letters(vec![l]));
            out.entry(zz2_normal(&v)).or_insert_with(|| {
                q.push_back(v.clone());
                (d + 1, v)
            });
        }
    }
    out
}

#[test]
fn free_group_translation_lengths() {
    let (s, b) = free();
    assert_eq!(translation_length(&w("ab"), &s, &b).unwrap(), (2, 2));
    assert_eq!(translation_length(&w("abA"), &s, &b).unwrap(), (1, 1));
    assert_eq!(translation_length(&w("bbaBB"), &s, &b).unwrap(), (1, 1));
}

#[test]
fn free_group_stable_lengths() {
    let s = Solver::new(&Presentation::free(2), Strategy::FreeOnly).unwrap();
    let e = stable_length_estimate(&w("abA"), &s, None, 10, None).unwrap();
    assert_eq!(e.stable_samples, (1..=10).map(|n| (n, n + 2)).collect::<Vec<_>>());
    assert_eq!(e.stable_upper, Ratio::new(12, 10));
    assert_eq!((e.translation_lower, e.translation_upper), (1, 1));
    let ab = stable_length_estimate(&w("ab"), &s, None, 10, None).unwrap();
    assert_eq!(ab.stable_upper, Ratio::from_integer(2));
}

#[test]
fn translation_matches_brute_force_in_z_star_z2() {
    let (s, b) = abab();
    let oracle = zz2_ball(b.radius);
    for u in ["ab", "a", "b", "aab", "abb", "Ba", "aaB"] {
        let u = w(u);
        let mut best = oracle[&zz2_normal(&u)].0;
        for (d, x) in oracle.values() {
            if 2 * d + u.len() <= b.radius {
                let c = x.inverse().concat(&u).concat(x);
                if let Some((l, _)) = oracle.get(&zz2_normal(&c)) {
                    best = best.min(*l);
                }
            }
        }
        let (lo, hi) = translation_length(&u, &s, &b).unwrap();
        assert_eq!(hi, best, "{u}");
        assert!(lo <= hi);
    }
}

#[test]
fn torsion_has_zero_stable_length() {
    let (s, b) = abab();
    let e = stable_length_estimate(&w("ab"), &s, Some(&b), 4, Some(Ratio::new(1, 10))).unwrap();
    assert_eq!(e.stable_samples, vec![(1, 2), (2, 0), (3, 2), (4, 0)]);
    assert_eq!(e.stable_upper, Ratio::from_integer(0));
    assert_eq!(e.translation_upper, 2);
}

#[test]
fn subadditivity_and_monotone_estimates() {
    let (s, b) = abab();
    for u in ["a", "aab", "ab", "aBa", "b"] {
        let e = stable_length_estimate(&w(u), &s, Some(&b), 8, None).unwrap();
        let len: BTreeMap<usize, usize> = e.stable_samples.iter().copied().collect();
        for (&m, &lm) in &len {
            for (&n, &ln) in &len {
                if let Some(&l) = len.get(&(m + n)) {
                    assert!(l <= lm + ln, "{u}: |u^{}| > |u^{m}| + |u^{n}|", m + n);
                }
            }
        }
        let mut prev = None;
        for n_max in 1..=8 {
            let cur = stable_length_estimate(&w(u), &s, Some(&b), n_max, None).unwrap().stable_upper;
            if let Some(p) = prev {
                assert!(cur <= p, "{u} at n_max {n_max}");
            }
            prev = Some(cur);
        }
    }
}

fn segment(b: &CayleyBall, start: &str, label: &str) -> GeodesicSegment {
    let label = w(label);
    let vertices = (0..=label.len())
        .map(|k| b.vertex(&w(start).concat(&Word::from_letters(label.letters()[..k].to_vec()))).unwrap())
        .collect();
    GeodesicSegment { vertices, label }
}

#[test]
fn axis_checks() {
    let (s, b) = free();
    let r = axis_check(&w("ab"), &segment(&b, "BA", "abab"), &s, &b).unwrap();
    assert_eq!(r.value, 2);
    assert!(r.holds && r.checked > 0);
    let r = axis_check(&w("abA"), &segment(&b, "aBB", "bbbb"), &s, &b).unwrap();
    assert_eq!(r.value, 1);
    assert!(r.holds);
    // reversed direction
    let r = axis_check(&w("aBA"), &segment(&b, "aBB", "bbbb"), &s, &b).unwrap();
    assert_eq!(r.value, 1);
    assert!(matches!(
        axis_check(&w("ab"), &segment(&b, "aBB", "bbbb"), &s, &b),
        Err(LengthError::NotInvariant(_))
    ));
}

#[test]
fn svsw_certificate() {
    let (p, u, c) = svsw_example(&w("ab"), &w("ab"), &w("Ab"), 2).unwrap();
    assert_eq!(p.relators, vec![w("abababAb")]);
    assert_eq!(u, w("abab"));
    assert_eq!(c.u_squared, w("Baab"));
    assert_eq!(c.u_squared.len(), 4);
    assert!(c.one_relator_application);
    let d = c.diagram.as_ref().unwrap();
    assert_eq!(d.num_faces(), 2);
    assert!(c.diagram_valid);
    assert_eq!(c.red, 0);

    // s empty is accepted with a note
    let (_, u, c) = svsw_example(&Word::empty(), &w("ab"), &w("ab"), 2).unwrap();
    assert_eq!(u, w("ab"));
    assert!(c.note.is_some());
    assert!(c.one_relator_application);

    assert!(matches!(svsw_example(&w("a"), &w("b"), &w("A"), 2), Err(LengthError::NotReduced(_))));
}
