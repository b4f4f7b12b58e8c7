use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rgroups::cayley::BallFile;
use serde_json::Value;

fn rg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgroups")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = rg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write_pres(dir: &Path, name: &str, relators: &[&str], m: usize) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::json!({ "m": m, "relators": relators }).to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sample_pieces_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let pres = dir.path().join("p.json");
    let p = pres.to_str().unwrap();
    let out = rg(&["sample", "--m", "2", "--l", "10", "--d", "0.1", "--seed", "5", "--out", p]);
    assert!(out.status.success());
    let again = rg(&["sample", "--m", "2", "--l", "10", "--d", "1/10", "--seed", "5"]);
    assert_eq!(fs::read(&pres).unwrap(), again.stdout);

    let report = dir.path().join("r.json");
    assert!(rg(&["pieces", "--pres", p, "--report", report.to_str().unwrap()]).status.success());
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["report"]["max_piece_len"].is_u64());

    let c = ok_json(&["check", "--pres", p, "--cond", "cprime:1"]);
    assert_eq!(c["holds"], Value::Bool(true));
    let c = ok_json(&["check", "--pres", p, "--cond", "ctilde:2", "--max-faces", "1"]);
    assert!(c["holds"].is_boolean() || c["holds"] == "unknown");
    assert!(!rg(&["check", "--pres", p, "--cond", "bogus:1"]).status.success());
}

#[test]
fn ball_file_and_geodesics() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_pres(dir.path(), "abab.json", &["abab"], 2);
    let bin = dir.path().join("ball.bin");
    let v = ok_json(&["ball", "--pres", &p, "--radius", "4", "--strategy", "search:4", "--out", bin.to_str().unwrap()]);
    let f = BallFile::from_bytes(&fs::read(&bin).unwrap()).unwrap();
    assert_eq!((f.m, f.radius), (2, 4));
    assert_eq!(v["vertices"].as_u64().unwrap() as usize, f.words.len());
    assert!(f.words.windows(2).all(|w| w[0].shortlex_cmp(&w[1]).is_lt()));

    let g = ok_json(&["geodesic", "--pres", &p, "--from", "", "--to", "ab"]);
    assert_eq!(g["count"], 2);
    let labels: Vec<&str> = g["geodesics"].as_array().unwrap().iter().map(|x| x["label"].as_str().unwrap()).collect();
    assert_eq!(labels, vec!["ab", "BA"]);
    assert!(!rg(&["ball", "--pres", &p, "--radius", "2", "--strategy", "dehn", "--out", bin.to_str().unwrap()]).status.success());
}

#[test]
fn band_and_multiband() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_pres(dir.path(), "z2.json", &["abAB"], 2);
    let b = ok_json(&["band", "--pres", &p, "--g1", "aaa", "--g2", "b/aaa", "--delta", "1/10", "--strategy", "abelian"]);
    assert_eq!(b["faces"], 3);
    assert_eq!(b["far"], 6);

    let p3 = write_pres(dir.path(), "z3.json", &["abAB", "acAC", "adAD", "bcBC", "bdBD", "cdCD", "bdC"], 4);
    let gfile = dir.path().join("g.txt");
    fs::write(&gfile, "# rows along a\naa\nb/aa\nc/aa\n").unwrap();
    let report = dir.path().join("report.json");
    let out = rg(&[
        "multiband", "--pres", &p3, "--geodesics", gfile.to_str().unwrap(), "--report", report.to_str().unwrap(),
        "--delta", "1/10", "--strategy", "abelian", "--max-faces", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!((r["k"].as_u64(), r["faces"].as_u64(), r["red_y"].as_u64()), (Some(3), Some(6), Some(0)));
    assert_eq!(r["recount_holds"], true);
}

#[test]
fn lengths_and_svsw() {
    let dir = tempfile::tempdir().unwrap();
    let free = write_pres(dir.path(), "f2.json", &[], 2);
    let e = ok_json(&["lengths", "--pres", &free, "--element", "abA", "--nmax", "10", "--strategy", "free"]);
    assert_eq!(e["stable_upper"], "6/5");
    assert_eq!(e["translation_upper"], 1);

    let s = ok_json(&["svsw", "--s", "ab", "--v", "ab", "--w", "Ab"]);
    assert_eq!(s["u"], "abab");
    assert_eq!(s["certificate"]["u_squared"], "Baab");
    assert_eq!(s["certificate"]["red"], 0);
    assert!(!rg(&["svsw", "--s", "a", "--v", "b", "--w", "A"]).status.success());
}

#[test]
fn enum_writes_diagrams_and_metrics_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_pres(dir.path(), "p.json", &["aabb"], 2);
    let out = dir.path().join("diagrams");
    let v = ok_json(&["enum", "--pres", &p, "--max-faces", "2", "--out", out.to_str().unwrap()]);
    let n = v["diagrams"].as_u64().unwrap() as usize;
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), n + 1);
    assert!(summary.starts_with("index,faces,boundary_length,isoperimetric_ratio"));
    let m = ok_json(&["metrics", "--complex", out.join("diagram_00000.json").to_str().unwrap(), "--l", "4"]);
    assert_eq!(m["num_faces"], 1);
    assert_eq!(m["isoperimetric_ratio"], "1");
}

#[test]
fn experiment_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "trials = 3\nseed = 4\nchecks = [\"c_prime(1/6)\", \"piece_stats\"]\n\
         grid = [{ m = 2, l = 10, d = \"0.1\" }, { m = 1, l = 10, d = \"0.1\" }]\n",
    )
    .unwrap();
    let rows = dir.path().join("rows.csv");
    let run = |path: &Path| rg(&["experiment", "--config", cfg.to_str().unwrap(), "--out", path.to_str().unwrap(), "--no-timing"]);
    assert!(run(&rows).status.success(), "per-trial errors keep exit code 0");
    let second = dir.path().join("rows2.csv");
    assert!(run(&second).status.success());
    assert_eq!(fs::read(&rows).unwrap(), fs::read(&second).unwrap());
    let text = fs::read_to_string(&rows).unwrap();
    assert!(text.starts_with("# schema=1\ncell,trial,m,l,d,seed,check,result,value,error,wall_ms\n"));
    assert_eq!(text.lines().count(), 2 + 12);

    let s = ok_json(&["summarize", "--rows", rows.to_str().unwrap(), "--json"]);
    assert_eq!(s.as_array().unwrap().len(), 2, "the all-error cell is omitted");
    let out = rg(&["summarize", "--rows", rows.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("omitted"));

    fs::write(&cfg, "trials = 0\nseed = 1\nchecks = [\"cp(6)\"]\ngrid = [{ m = 2, l = 5, d = \"0.1\" }]\n").unwrap();
    assert!(!run(&rows).status.success());
}
