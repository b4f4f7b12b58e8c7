use std::collections::BTreeSet;

use rgroups::complex::VanKampenDiagram;
use rgroups::search::*;
use rgroups::words::{w, Presentation, Word};

/// Independent count of 2-face reduced diagrams: two face orbits `s·P` and
/// `s⁻¹·Q` built from vertex cycles, deduplicated by canonical code.
fn two_face_oracle(p: &Presentation) -> usize {
    let mut orbits: Vec<(usize, Word)> = Vec::new();
    for (i, r) in p.relators.iter().enumerate() {
        for x in [r.clone(), r.inverse()] {
            for o in 0..x.len() {
                orbits.push((i, x.rotate(o)));
            }
        }
    }
    let mut codes = BTreeSet::new();
    for (i, a) in &orbits {
        for (j, b) in &orbits {
            for k in 1..=a.len().min(b.len()) {
                let s = &a.letters()[..k];
                let t = Word::from_letters(b.letters()[..k].to_vec());
                if t != Word::from_letters(s.to_vec()).inverse() {
                    continue;
                }
                let (pl, ql) = (a.len() - k, b.len() - k);
                if pl == 0 && ql == 0 {
                    continue;
                }
                // shared arc x = 0 → … → k (or back to 0 when it is a whole loop)
                let closed = pl == 0 || ql == 0;
                let mut next = if closed { k } else { k + 1 };
                let y = if closed { 0 } else { k };
                let arc: Vec<usize> = (0..k).chain(std::iter::once(y)).collect();
                let mut fresh = |len: usize, from: usize, to: usize| -> Vec<usize> {
                    let mut v = vec![from];
                    for _ in 1..len {
                        v.push(next);
                        next += 1;
                    }
                    v.push(to);
                    v
                };
                let pp = if pl > 0 { fresh(pl, y, 0) } else { vec![y] };
                let qq = if ql > 0 { fresh(ql, 0, y) } else { vec![0] };
                let fa: Vec<usize> = arc[..k].iter().chain(&pp[..pp.len() - 1]).copied().collect();
                let rev: Vec<usize> = arc.iter().rev().copied().collect();
                let fb: Vec<usize> = rev[..k].iter().chain(&qq[..qq.len() - 1]).copied().collect();
                let outer: Vec<usize> = pp[..pp.len() - 1].iter().chain(&qq[..qq.len() - 1]).copied().collect();
                let ow = Word::from_letters(a.letters()[k..].iter().chain(&b.letters()[k..]).copied().collect());
                let Ok(d) = VanKampenDiagram::from_cycles(next, &p.relators, &[(*i, fa, a.clone()), (*j, fb, b.clone())], (&outer, &ow))
                else {
                    continue;
                };
                if d.validate_embedding(Some(p)).is_empty() && d.complex.is_reduced() {
                    codes.insert(d.canonical_code());
                }
            }
        }
    }
    codes.len()
}

#[test]
fn no_relators_no_diagrams() {
    let en = enumerate_reduced_diagrams(&Presentation::free(2), &SearchBudget::faces(3));
    assert!(en.diagrams.is_empty());
    assert!(en.complete);
}

#[test]
fn one_relator_one_face() {
    let p = Presentation::parse(None, &["aabab"]).unwrap();
    let en = enumerate_reduced_diagrams(&p, &SearchBudget::faces(1));
    assert_eq!(en.diagrams.len(), 1);
    assert_eq!(en.diagrams[0].boundary_word(), w("aabab"));
}

#[test]
fn two_face_count_matches_gluing_oracle() {
    for rels in [vec!["aabb", "aaBB"], vec!["abAB"], vec!["aabab", "abbAB"], vec!["aab", "abb"]] {
        let p = Presentation::parse(None, &rels).unwrap();
        let en = enumerate_reduced_diagrams(&p, &SearchBudget::faces(2));
        let oracle = two_face_oracle(&p);
        assert!(oracle > 0);
        assert_eq!(en.per_level.get(1).copied().unwrap_or(0), oracle, "{rels:?}");
    }
}

#[test]
fn aabb_includes_the_aa_gluing() {
    let p = Presentation::parse(None, &["aabb", "aaBB"]).unwrap();
    let en = enumerate_reduced_diagrams(&p, &SearchBudget::faces(2));
    let hit = en.diagrams.iter().any(|d| {
        d.num_faces() == 2
            && d.complex.cancellation() == 2
            && d.complex.faces.iter().map(|f| f.relator).collect::<BTreeSet<_>>().len() == 2
    });
    assert!(hit);
}

#[test]
fn levels_are_prefixes() {
    let p = Presentation::parse(None, &["aabb", "aaBB"]).unwrap();
    let a = enumerate_reduced_diagrams(&p, &SearchBudget::faces(2));
    let b = enumerate_reduced_diagrams(&p, &SearchBudget::faces(3));
    let ca: Vec<_> = a.diagrams.iter().map(VanKampenDiagram::canonical_code).collect();
    let cb: Vec<_> = b.diagrams.iter().map(VanKampenDiagram::canonical_code).collect();
    assert_eq!(ca[..], cb[..ca.len()]);
}

#[test]
fn enumeration_reports_truncation() {
    let p = Presentation::parse(None, &["abAB"]).unwrap();
    let budget = SearchBudget { max_states: 3, ..SearchBudget::faces(4) };
    let en = enumerate_reduced_diagrams(&p, &budget);
    assert!(!en.complete);
    assert_eq!(en.diagrams.len(), 3);
}

#[test]
fn certificates_are_sound() {
    let p = Presentation::parse(None, &["abAB"]).unwrap();
    for word in ["abAB", "baBA", "aabAAB", "abbABB", "aabbAABB", "abABabAB"] {
        let x = w(word);
        let c = find_van_kampen(&x, &p, &SearchBudget::faces(4)).unwrap().expect(word);
        assert!(c.verify(&x, &p), "{word}");
        assert!(c.reduced);
        assert_eq!(c.boundary, x);
    }
}

#[test]
fn absence_within_face_bound_is_definitive() {
    // in Z², ab ≠ 1, and no diagram with ≤ 3 faces exists
    let p = Presentation::parse(None, &["abAB"]).unwrap();
    let budget = SearchBudget { max_edges: 64, ..SearchBudget::faces(3) };
    assert!(find_van_kampen(&w("ab"), &p, &budget).unwrap().is_none());
    let tight = SearchBudget { max_edges: 3, ..SearchBudget::faces(3) };
    assert!(matches!(find_van_kampen(&w("ab"), &p, &tight), Err(SearchError::BudgetExhausted { .. })));
}

#[test]
fn annulus_rejects_mismatched_labels() {
    let s = AnnulusSpec::fixture();
    let p = s.presentation(2);
    let mut bad = s.clone();
    bad.chord = w("aababbaa");
    assert!(matches!(build_annulus_witness(&p, &bad), Err(SearchError::LabelMismatch(_))));
}

#[test]
fn random_annulus_specs_validate() {
    for seed in 0..10 {
        let s = AnnulusSpec::random(2, 10, seed);
        let p = s.presentation(2);
        let d = build_annulus_witness(&p, &s).unwrap();
        assert!(d.validate_embedding(Some(&p)).is_empty());
        assert_eq!(d.boundary_len(), 6);
        assert_eq!(d.isoperimetric_ratio(10).unwrap(), num_rational::Ratio::new(1, 5));
    }
}
