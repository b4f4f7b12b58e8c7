use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use num_rational::Ratio;
use serde_json::json;

use rgroups::band::{
    build_band_diagram, build_multi_complex, classify_layers, close_far, interposed_cases, Closeness, GeodesicPath,
};
use rgroups::cayley::{ball, geodesics, CayleyBall, Solver, Strategy};
use rgroups::complex::{TwoComplex, VanKampenDiagram};
use rgroups::experiments::{read_csv, run, summarize, write_csv, write_summary_csv, ExperimentConfig};
use rgroups::lengths::{stable_length_estimate, svsw_example};
use rgroups::search::{enumerate_reduced_diagrams, SearchBudget};
use rgroups::smallcancel::{check_c_prime, check_c_tilde_bounded, check_cp, pieces, report, CTildeVerdict};
use rgroups::words::{parse_ratio, sample_presentation, Density, Presentation, Word};

#[derive(Parser)]
#[command(name = "rgroups", version, about = "Random groups at density d")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a presentation from the density model.
    Sample {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, allow_hyphen_values = true)]
        d: Density,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the metrics of a complex or diagram JSON file.
    Metrics {
        #[arg(long)]
        complex: PathBuf,
        /// Relator length for the isoperimetric ratio.
        #[arg(long)]
        l: Option<usize>,
    },
    /// Pieces and the small cancellation report.
    Pieces {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check cprime:λ, cp:p or ctilde:p.
    Check {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long)]
        cond: String,
        #[arg(long, default_value_t = 3)]
        max_faces: usize,
        #[arg(long, default_value_t = 200_000)]
        max_states: usize,
    },
    /// Enumerate reduced diagrams into a directory.
    Enum {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long)]
        max_faces: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        max_states: usize,
    },
    /// Build a Cayley ball and write it in the binary ball format.
    Ball {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value = "search:4")]
        strategy: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2_000_000)]
        max_vertices: usize,
    },
    /// All geodesics between two elements.
    Geodesic {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long, default_value = "")]
        from: String,
        #[arg(long, default_value = "")]
        to: String,
        #[arg(long, default_value = "search:4")]
        strategy: String,
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long, default_value_t = 100)]
        max_paths: usize,
    },
    /// Band diagram between two geodesics, each given as `start/label` or `label`.
    Band {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
        #[arg(long)]
        delta: String,
        #[arg(long, default_value = "search:4")]
        strategy: String,
        #[arg(long, default_value_t = 4)]
        max_faces: usize,
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Glued complex of pairwise band diagrams and its accounting report.
    Multiband {
        #[arg(long)]
        pres: PathBuf,
        /// One geodesic per line, `start/label` or `label`.
        #[arg(long)]
        geodesics: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        delta: String,
        /// Density used in the inequality check.
        #[arg(long, default_value = "0.1")]
        d: String,
        #[arg(long, default_value = "0.01")]
        eps: String,
        #[arg(long, default_value = "search:4")]
        strategy: String,
        #[arg(long, default_value_t = 4)]
        max_faces: usize,
        #[arg(long)]
        radius: Option<usize>,
    },
    /// Translation and stable length estimates for an element.
    Lengths {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long)]
        element: String,
        #[arg(long, default_value_t = 10)]
        nmax: usize,
        #[arg(long, default_value = "search:4")]
        strategy: String,
        #[arg(long, default_value_t = 8)]
        radius: usize,
        #[arg(long)]
        delta: Option<String>,
    },
    /// The `r = svsw` presentation with its `u² = w⁻¹v` certificate.
    Svsw {
        #[arg(long, default_value = "")]
        s: String,
        #[arg(long)]
        v: String,
        #[arg(long)]
        w: String,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Run a Monte Carlo experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write zero wall times so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Aggregate experiment rows per cell.
    Summarize {
        #[arg(long)]
        rows: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_pres(path: &Path) -> Result<Presentation> {
    Presentation::from_json(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn word(s: &str, m: usize) -> Result<Word> {
    let w: Word = s.parse().map_err(|e| anyhow!("{s:?}: {e}"))?;
    w.check_rank(m).map_err(|e| anyhow!("{s:?}: {e}"))?;
    Ok(w)
}

fn ratio(s: &str) -> Result<Ratio<i64>> {
    parse_ratio(s).map_err(|e| anyhow!("{e}"))
}

fn geodesic(s: &str, m: usize) -> Result<GeodesicPath> {
    let (start, label) = s.split_once('/').unwrap_or(("", s));
    Ok(GeodesicPath::new(word(start, m)?, word(label, m)?))
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn solver(p: &Presentation, strategy: &str) -> Result<Solver> {
    let s = Strategy::parse(strategy).map_err(|e| anyhow!(e))?;
    Solver::new(p, s).map_err(|e| anyhow!("{e}"))
}

fn make_ball(s: &Solver, radius: usize) -> Result<CayleyBall> {
    ball(s, radius, 2_000_000).map_err(|e| anyhow!("{e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Sample { m, l, d, seed, out } => {
            let p = sample_presentation(m, l, d, seed).map_err(|e| anyhow!("{e}"))?;
            match out {
                Some(path) => fs::write(&path, p.to_json() + "\n")?,
                None => println!("{}", p.to_json()),
            }
        }
        Cmd::Metrics { complex, l } => {
            let text = read(&complex)?;
            let value = match serde_json::from_str::<VanKampenDiagram>(&text) {
                Ok(d) => {
                    let mut v = serde_json::to_value(d.metrics())?;
                    if let Some(l) = l {
                        v["isoperimetric_ratio"] = json!(d.isoperimetric_ratio(l).ok().map(|r| r.to_string()));
                    }
                    v
                }
                Err(_) => {
                    let c: TwoComplex = serde_json::from_str(&text).context("neither a diagram nor a complex")?;
                    serde_json::to_value(c.metrics())?
                }
            };
            println!("{}", serde_json::to_string(&value)?);
        }
        Cmd::Pieces { pres, report: out } => {
            let p = load_pres(&pres)?;
            let v = json!({ "report": report(&p), "pieces": pieces(&p) });
            emit(&v, out.as_deref())?;
        }
        Cmd::Check { pres, cond, max_faces, max_states } => {
            let p = load_pres(&pres)?;
            let (name, arg) = cond.split_once(':').ok_or_else(|| anyhow!("expected NAME:ARG, got {cond:?}"))?;
            let v = match name {
                "cprime" => {
                    let lambda = ratio(arg)?;
                    if lambda <= Ratio::from_integer(0) || lambda > Ratio::from_integer(1) {
                        bail!("λ must lie in (0, 1]");
                    }
                    let (ok, w) = check_c_prime(&p, lambda);
                    json!({ "cond": cond, "holds": ok, "witness": w })
                }
                "cp" => {
                    let k: usize = arg.parse()?;
                    if k < 2 {
                        bail!("p must be at least 2");
                    }
                    let (ok, w) = check_cp(&p, k);
                    json!({ "cond": cond, "holds": ok, "witness": w })
                }
                "ctilde" => {
                    let k: usize = arg.parse()?;
                    let budget = SearchBudget { max_states, ..SearchBudget::faces(max_faces) };
                    match check_c_tilde_bounded(&p, k, max_faces, &budget) {
                        Ok(CTildeVerdict::VerifiedUpTo { k, subdiagrams }) => {
                            json!({ "cond": cond, "holds": true, "verified_up_to": k, "subdiagrams": subdiagrams })
                        }
                        Ok(CTildeVerdict::Counterexample { diagram, enclosed_faces, surrounding }) => json!({
                            "cond": cond, "holds": false, "enclosed_faces": enclosed_faces,
                            "surrounding": surrounding, "witness": diagram,
                        }),
                        Err(e) => json!({ "cond": cond, "holds": "unknown", "reason": e.to_string() }),
                    }
                }
                _ => bail!("unknown condition {name:?}; expected cprime, cp or ctilde"),
            };
            emit(&v, None)?;
        }
        Cmd::Enum { pres, max_faces, out, max_states } => {
            let p = load_pres(&pres)?;
            let e = enumerate_reduced_diagrams(&p, &SearchBudget { max_states, ..SearchBudget::faces(max_faces) });
            fs::create_dir_all(&out)?;
            let l = p.max_relator_len();
            let mut summary = String::from("index,faces,boundary_length,isoperimetric_ratio\n");
            for (i, d) in e.diagrams.iter().enumerate() {
                fs::write(out.join(format!("diagram_{i:05}.json")), serde_json::to_string_pretty(d)?)?;
                let iso = d.isoperimetric_ratio(l).map(|r| r.to_string()).unwrap_or_default();
                summary += &format!("{i},{},{},{iso}\n", d.num_faces(), d.boundary.len());
            }
            fs::write(out.join("summary.csv"), summary)?;
            if let Some(t) = &e.truncation {
                eprintln!("warning: enumeration truncated: {t}");
            }
            emit(&json!({ "diagrams": e.diagrams.len(), "per_level": e.per_level, "complete": e.complete }), None)?;
        }
        Cmd::Ball { pres, radius, strategy, out, max_vertices } => {
            let p = load_pres(&pres)?;
            let s = solver(&p, &strategy)?;
            let b = ball(&s, radius, max_vertices).map_err(|e| anyhow!("{e}"))?;
            fs::write(&out, b.to_bytes()).with_context(|| format!("writing {}", out.display()))?;
            emit(&json!({ "vertices": b.len(), "spheres": b.sphere_sizes(), "approximate": b.approximate }), None)?;
        }
        Cmd::Geodesic { pres, from, to, strategy, radius, max_paths } => {
            let p = load_pres(&pres)?;
            let (x, y) = (word(&from, p.m)?, word(&to, p.m)?);
            let s = solver(&p, &strategy)?;
            let (a, b) = (x.free_reduce().len(), y.free_reduce().len());
            let b = make_ball(&s, radius.unwrap_or(a + b + a.max(b)))?;
            let gs = geodesics(&b, &x, &y, max_paths).map_err(|e| anyhow!("{e}"))?;
            let list: Vec<_> = gs
                .iter()
                .map(|g| {
                    json!({ "label": g.label, "vertices": g.vertices.iter().map(|&v| b.words[v].to_string()).collect::<Vec<_>>() })
                })
                .collect();
            emit(&json!({ "count": gs.len(), "approximate": b.approximate, "geodesics": list }), None)?;
        }
        Cmd::Band { pres, g1, g2, delta, strategy, max_faces, radius, out } => {
            let p = load_pres(&pres)?;
            let (g1, g2) = (geodesic(&g1, p.m)?, geodesic(&g2, p.m)?);
            let s = solver(&p, &strategy)?;
            let reach = |g: &GeodesicPath| g.start.free_reduce().len() + g.len();
            let b = make_ball(&s, radius.unwrap_or(reach(&g1).max(reach(&g2)) + 2))?;
            let band =
                build_band_diagram(&g1, &g2, &s, &b, ratio(&delta)?, &SearchBudget::faces(max_faces)).map_err(|e| anyhow!("{e}"))?;
            let cf = close_far(&band);
            let v = json!({
                "faces": band.diagram.num_faces(),
                "layers": classify_layers(&band),
                "pockets": interposed_cases(&band),
                "close": cf.iter().filter(|e| e.label == Closeness::Close).count(),
                "far": cf.iter().filter(|e| e.label == Closeness::Far).count(),
                "side_edges": cf,
                "band": band,
            });
            emit(&v, out.as_deref())?;
        }
        Cmd::Multiband { pres, geodesics: file, report: out, delta, d, eps, strategy, max_faces, radius } => {
            let p = load_pres(&pres)?;
            let gs: Vec<GeodesicPath> = read(&file)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| geodesic(l, p.m))
                .collect::<Result<_>>()?;
            if gs.len() < 2 {
                bail!("need at least two geodesics");
            }
            let s = solver(&p, &strategy)?;
            let reach = gs.iter().map(|g| g.start.free_reduce().len() + g.len()).max().unwrap_or(0);
            let b = make_ball(&s, radius.unwrap_or(reach + 2))?;
            let y = build_multi_complex(gs, &s, &b, ratio(&delta)?, &SearchBudget::faces(max_faces)).map_err(|e| anyhow!("{e}"))?;
            let r = y.report(p.max_relator_len(), ratio(&d)?, ratio(&eps)?);
            emit(&serde_json::to_value(r)?, out.as_deref())?;
        }
        Cmd::Lengths { pres, element, nmax, strategy, radius, delta } => {
            let p = load_pres(&pres)?;
            let u = word(&element, p.m)?;
            let s = solver(&p, &strategy)?;
            let b = if p.is_free() { None } else { Some(make_ball(&s, radius)?) };
            let delta = delta.as_deref().map(ratio).transpose()?;
            let e = match &b {
                Some(b) => stable_length_estimate(&u, &s, Some(b), nmax, delta),
                None => stable_length_estimate(&u, &s, None, nmax, delta),
            }
            .map_err(|e| anyhow!("{e}"))?;
            emit(&serde_json::to_value(e)?, None)?;
        }
        Cmd::Svsw { s, v, w, m } => {
            let (sw, vw, ww): (Word, Word, Word) = (
                s.parse().map_err(|e| anyhow!("{e}"))?,
                v.parse().map_err(|e| anyhow!("{e}"))?,
                w.parse().map_err(|e| anyhow!("{e}"))?,
            );
            let m = m.unwrap_or_else(|| [&sw, &vw, &ww].iter().map(|x| x.max_generator()).max().unwrap_or(0).max(2));
            let (p, u, cert) = svsw_example(&sw, &vw, &ww, m).map_err(|e| anyhow!("{e}"))?;
            emit(&json!({ "presentation": p, "u": u, "certificate": cert }), None)?;
        }
        Cmd::Experiment { config, out, no_timing } => {
            let cfg = ExperimentConfig::from_toml(&read(&config)?)?;
            let rows = run(&cfg)?;
            let errors = rows.iter().filter(|r| r.result == rgroups::experiments::Outcome::Error).count();
            let f = fs::File::create(&out).with_context(|| format!("writing {}", out.display()))?;
            write_csv(&rows, std::io::BufWriter::new(f), !no_timing)?;
            eprintln!("{} rows, {errors} trial errors", rows.len());
        }
        Cmd::Summarize { rows, out, json } => {
            let f = fs::File::open(&rows).with_context(|| format!("reading {}", rows.display()))?;
            let (cells, warnings) = summarize(&read_csv(f)?);
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let mut buf = Vec::new();
            if json {
                buf = serde_json::to_vec_pretty(&cells)?;
                buf.push(b'\n');
            } else {
                write_summary_csv(&cells, &mut buf)?;
            }
            match out {
                Some(p) => fs::write(p, buf)?,
                None => std::io::stdout().write_all(&buf)?,
            }
        }
    }
    Ok(())
}
