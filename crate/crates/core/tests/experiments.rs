use num_rational::Ratio;
use rgroups::experiments::*;
use rgroups::words::{sample_presentation, Density, Letter, Presentation};

fn config(extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
trials = 4
seed = 11
checks = ["c_prime(1/6)", "cp(4)", "piece_stats"]
grid = [
  {{ m = 2, l = 10, d = "0.1" }},
  {{ m = 3, l = 8, d = "1/5" }},
]
{extra}
"#
    ))
    .unwrap()
}

/// Longest common cyclic prefix of every pair of distinct sites.
fn pairwise_pieces(p: &Presentation) -> Vec<(usize, usize, usize)> {
    let mut words: Vec<Vec<Letter>> = Vec::new();
    for r in &p.relators {
        words.push(r.letters().to_vec());
        words.push(r.inverse().into_letters());
    }
    let sites: Vec<(usize, usize)> = words.iter().enumerate().flat_map(|(k, w)| (0..w.len()).map(move |i| (k, i))).collect();
    let mut out = Vec::new();
    for (a, &(ka, ia)) in sites.iter().enumerate() {
        for &(kb, ib) in &sites[a + 1..] {
            let (wa, wb) = (&words[ka], &words[kb]);
            let cap = wa.len().min(wb.len());
            let l = (0..cap).take_while(|&t| wa[(ia + t) % wa.len()] == wb[(ib + t) % wb.len()]).count();
            out.push((l, wa.len(), wb.len()));
        }
    }
    out
}

fn brute_c_prime(p: &Presentation, lambda: Ratio<i64>) -> bool {
    let th = |n: usize| (lambda * Ratio::from_integer(n as i64)).ceil().to_integer().max(1) as usize;
    pairwise_pieces(p).iter().all(|&(l, na, nb)| l < th(na).min(th(nb)))
}

#[test]
fn zero_trials_rejected() {
    let err = ExperimentConfig::from_toml("trials = 0\nseed = 1\nchecks = [\"cp(6)\"]\ngrid = [{ m = 2, l = 5, d = \"0.1\" }]");
    assert!(matches!(err, Err(ExperimentError::InvalidConfig(_))));
    let bad_check = ExperimentConfig::from_toml("trials = 1\nseed = 1\nchecks = [\"cp(1)\"]\ngrid = [{ m = 2, l = 5, d = \"0.1\" }]");
    assert!(bad_check.is_err());
}

#[test]
fn rows_are_ordered_and_match_oracles() {
    let cfg = config("");
    let rows = run(&cfg).unwrap();
    assert_eq!(rows.len(), cfg.trials * cfg.checks.len() * cfg.grid.len());
    let order: Vec<(usize, usize)> = rows.iter().map(|r| (r.cell, r.trial)).collect();
    let mut sorted = order.clone();
    sorted.sort();
    assert_eq!(order, sorted);
    for r in &rows {
        let cell = cfg.grid[r.cell];
        assert_eq!(r.seed, cfg.trial_seed(r.cell, r.trial));
        let p = sample_presentation(cell.m, cell.l, cell.d, r.seed).unwrap();
        match r.check.as_str() {
            "c_prime(1/6)" => {
                let expect = if brute_c_prime(&p, Ratio::new(1, 6)) { Outcome::True } else { Outcome::False };
                assert_eq!(r.result, expect, "seed {}", r.seed);
            }
            "piece_stats" => {
                let max = pairwise_pieces(&p).iter().map(|t| t.0).max().unwrap_or(0);
                assert_eq!(r.value, Some(max as f64 / cell.l as f64));
            }
            _ => assert!(matches!(r.result, Outcome::True | Outcome::False)),
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = config("");
    let csv = |rows: &[TrialRow]| {
        let mut buf = Vec::new();
        write_csv(rows, &mut buf, false).unwrap();
        buf
    };
    let a = csv(&run(&cfg).unwrap());
    let b = csv(&run(&cfg).unwrap());
    assert_eq!(a, b);
    assert!(a.starts_with(b"# schema=1\n"));
    assert_eq!(read_csv(&a[..]).unwrap(), run(&cfg).unwrap().into_iter().map(|r| TrialRow { wall_ms: 0, ..r }).collect::<Vec<_>>());
    assert!(matches!(read_csv(&b"cell,trial\n"[..]), Err(ExperimentError::Schema(_))));
}

#[test]
fn errors_stay_in_row_and_unknowns_stay_unknown() {
    let cfg = ExperimentConfig::from_toml(
        r#"
trials = 2
seed = 3
checks = ["ctilde(2,2)", "iso_ratio(3)"]
grid = [{ m = 1, l = 6, d = "0.2" }, { m = 2, l = 6, d = "0.3" }]
[budgets]
max_faces = 3
max_states = 2
"#,
    )
    .unwrap();
    let rows = run(&cfg).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows[..4].iter().all(|r| r.result == Outcome::Error && !r.error.is_empty()));
    assert!(rows[4..].iter().all(|r| r.result == Outcome::Unknown), "{rows:?}");
    let (cells, warnings) = summarize(&rows);
    assert_eq!(cells.len(), 2);
    assert_eq!(warnings.len(), 2);
    assert!(cells.iter().all(|c| c.rate.is_none() && c.unknown_frac == 1.0));
}

fn row(result: Outcome, value: Option<f64>) -> TrialRow {
    TrialRow {
        cell: 0,
        trial: 0,
        m: 2,
        l: 10,
        d: "1/10".into(),
        seed: 0,
        check: "cp(6)".into(),
        result,
        value,
        error: String::new(),
        wall_ms: 0,
    }
}

#[test]
fn summary_examples() {
    let (all, _) = summarize(&vec![row(Outcome::True, None); 4]);
    assert_eq!(all[0].rate, Some(1.0));

    let mixed = [Outcome::True, Outcome::True, Outcome::False, Outcome::Unknown, Outcome::True].map(|o| row(o, None));
    let (s, w) = summarize(&mixed);
    assert!(w.is_empty());
    assert_eq!((s[0].n_true, s[0].n_false, s[0].n_unknown), (3, 1, 1));
    assert_eq!(s[0].rate, Some(0.75));
    assert!((s[0].unknown_frac - 0.2).abs() < 1e-12);

    let (empty, w) = summarize(&[row(Outcome::Error, None)]);
    assert!(empty.is_empty());
    assert_eq!(w.len(), 1);

    let values = [0.2, 0.4, 0.6].map(|v| row(Outcome::Value, Some(v)));
    let (s, _) = summarize(&values);
    assert!((s[0].mean.unwrap() - 0.4).abs() < 1e-12);
    assert!((s[0].stderr.unwrap() - (0.04f64 / 3.0).sqrt()).abs() < 1e-12);
}

#[test]
fn seeds_do_not_collide_across_cells() {
    let cfg = config("");
    let seeds: std::collections::BTreeSet<u64> =
        (0..cfg.grid.len()).flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).map(|(c, t)| cfg.trial_seed(c, t)).collect();
    assert_eq!(seeds.len(), cfg.grid.len() * cfg.trials);
    assert_eq!(cfg.grid[1].d, "0.2".parse::<Density>().unwrap());
}
