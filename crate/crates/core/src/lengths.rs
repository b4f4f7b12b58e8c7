//! Translation and stable lengths, the axis check and the `r = svsw` example.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cayley::{CayleyBall, GeodesicSegment, Solver, Status};
use crate::complex::VanKampenDiagram;
use crate::words::{Presentation, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LengthError {
    #[error("{0} is not in the ball")]
    OutOfBall(String),
    #[error("the element does not translate the geodesic: {0}")]
    NotInvariant(String),
    #[error("not reduced: {0}")]
    NotReduced(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthEstimate {
    pub translation_lower: usize,
    pub translation_upper: usize,
    /// `(n, |uⁿ|)` for the powers whose length was resolved.
    pub stable_samples: Vec<(usize, usize)>,
    #[serde(with = "crate::ratio_str")]
    pub stable_upper: Ratio<i64>,
    #[serde(with = "crate::ratio_str::option")]
    pub delta_used: Option<Ratio<i64>>,
    /// `stable_upper ≥ translation_upper − 16δ`, evaluated only on exact balls.
    pub bracket_holds: Option<bool>,
    pub approximate: bool,
}

/// Group length of `w`: free reduction for free presentations, otherwise its
/// distance in the ball when located there.
fn group_length(w: &Word, solver: &Solver, ball: Option<&CayleyBall>) -> Option<usize> {
    if solver.p.is_free() {
        return Some(w.free_reduce().len());
    }
    let b = ball?;
    b.locate(solver, w).map(|v| b.dist[v])
}

/// Bounds on `[u] = inf_x |x⁻¹ux|`. The upper bound minimizes over ball vertices `x`
/// with `2|x| + |u|` inside the radius. The lower bound is exact for free groups
/// and otherwise 1 for nontrivial `u` (no conjugate of a nontrivial element is trivial).
pub fn translation_length(u: &Word, solver: &Solver, ball: &CayleyBall) -> Result<(usize, usize), LengthError> {
    let u = u.free_reduce();
    if solver.p.is_free() {
        let t = u.cyclic_reduce().0.len();
        return Ok((t, t));
    }
    let mut upper = ball.locate(solver, &u).map(|v| ball.dist[v]).ok_or_else(|| LengthError::OutOfBall(u.to_string()))?;
    for (v, x) in ball.words.iter().enumerate() {
        if 2 * ball.dist[v] + u.len() > ball.radius {
            continue;
        }
        let conj = x.inverse().concat(&u).concat(x).free_reduce();
        if let Some(c) = ball.locate(solver, &conj) {
            upper = upper.min(ball.dist[c]);
        }
    }
    let lower = match solver.decide(&u).status {
        Status::Trivial => 0,
        Status::Nontrivial => upper.min(1),
        Status::Unknown => 0,
    };
    Ok((lower, upper))
}

/// Samples `|uⁿ|` for `n ≤ n_max`; `stable_upper = min |uⁿ|/n` bounds the stable length by subadditivity.
pub fn stable_length_estimate(
    u: &Word,
    solver: &Solver,
    ball: Option<&CayleyBall>,
    n_max: usize,
    delta: Option<Ratio<i64>>,
) -> Result<LengthEstimate, LengthError> {
    if n_max == 0 {
        return Err(LengthError::BudgetExhausted("n_max must be at least 1".into()));
    }
    let mut samples = Vec::new();
    let mut power = Word::empty();
    for n in 1..=n_max {
        power = power.concat(u).free_reduce();
        match group_length(&power, solver, ball) {
            Some(l) => samples.push((n, l)),
            None => break,
        }
    }
    if samples.is_empty() {
        return Err(LengthError::BudgetExhausted(format!("{u} is not in the ball")));
    }
    let stable_upper = samples
        .iter()
        .map(|&(n, l)| Ratio::new(l as i64, n as i64))
        .min()
        .expect("nonempty");
    let (lo, hi) = match ball {
        Some(b) => translation_length(u, solver, b)?,
        None if solver.p.is_free() => {
            let t = u.free_reduce().cyclic_reduce().0.len();
            (t, t)
        }
        None => (0, samples[0].1),
    };
    let hi = hi.max(lo);
    let approximate = ball.is_some_and(|b| b.approximate) || !solver.is_complete();
    let bracket_holds = match (delta, approximate) {
        (Some(d), false) => Some(stable_upper >= Ratio::from_integer(hi as i64) - d * 16),
        _ => None,
    };
    Ok(LengthEstimate {
        translation_lower: lo,
        translation_upper: hi,
        stable_samples: samples,
        stable_upper,
        delta_used: delta,
        bracket_holds,
        approximate,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisReport {
    /// `|ux − x|` on the axis; both lengths equal this value.
    pub value: usize,
    /// Pairs `(x, n)` where `|uⁿx − x| = n|ux − x|` was checked.
    pub checked: usize,
    pub holds: bool,
}

/// Checks that `u` translates `γ` along itself and that `|uⁿx − x| = n|ux − x|` on the window.
pub fn axis_check(u: &Word, g: &GeodesicSegment, solver: &Solver, ball: &CayleyBall) -> Result<AxisReport, LengthError> {
    let image = |v: usize| -> Result<Option<usize>, LengthError> {
        let y = u.concat(&ball.words[v]);
        Ok(ball.locate(solver, &y).and_then(|w| g.vertices.iter().position(|&z| z == w)))
    };
    let n = g.vertices.len();
    // forward translation, or backward when γ runs against u
    let (shift, forward) = match image(g.vertices[0])? {
        Some(t) if t > 0 => (t, true),
        _ => match image(g.vertices[n - 1])? {
            Some(t) if t < n - 1 => (n - 1 - t, false),
            _ => return Err(LengthError::NotInvariant(format!("{u} does not move γ along itself"))),
        },
    };
    if shift == 0 {
        return Err(LengthError::NotInvariant(format!("{u} fixes a vertex of γ")));
    }
    for t in 0..n - shift {
        let (from, to) = if forward { (t, t + shift) } else { (t + shift, t) };
        if image(g.vertices[from])? != Some(to) {
            return Err(LengthError::NotInvariant(format!("u·γ({from}) ≠ γ({to})")));
        }
    }
    let mut checked = 0;
    let mut holds = true;
    for t in 0..n {
        let d = ball.distances_from(g.vertices[t]);
        let mut k = 1;
        while forward && t + k * shift < n || !forward && t >= k * shift {
            let s = if forward { t + k * shift } else { t - k * shift };
            holds &= d[g.vertices[s]] == k * shift;
            checked += 1;
            k += 1;
        }
    }
    Ok(AxisReport { value: shift, checked, holds })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvswCertificate {
    pub relator: Word,
    pub u: Word,
    /// `w⁻¹v`, equal to `u²` in the group.
    pub u_squared: Word,
    /// `u²·(w⁻¹v)⁻¹` freely reduced; a cyclic conjugate of `r^±`.
    pub relator_application: Word,
    pub one_relator_application: bool,
    pub diagram: Option<VanKampenDiagram>,
    pub diagram_valid: bool,
    pub red: usize,
    pub note: Option<String>,
}

fn is_rotation_of(x: &Word, r: &Word) -> bool {
    let (c, _) = x.cyclic_reduce();
    c.len() == r.len() && (0..r.len()).any(|k| r.rotate(k) == c || r.inverse().rotate(k) == c)
}

/// Presentation `{svsw}` with `u = sv`, a certificate that `u² = w⁻¹v`, and the
/// two-face diagram whose faces share an `s` segment at different positions.
pub fn svsw_example(s: &Word, v: &Word, w: &Word, m: usize) -> Result<(Presentation, Word, SvswCertificate), LengthError> {
    let r = s.concat(v).concat(s).concat(w);
    if !r.is_cyclically_reduced() {
        return Err(LengthError::NotReduced(format!("r = {r} is not cyclically reduced")));
    }
    let u = s.concat(v);
    if u.free_reduce() != u {
        return Err(LengthError::NotReduced(format!("u = {u} is not reduced")));
    }
    let p = Presentation::new(m, vec![r.clone()]).map_err(|e| LengthError::NotReduced(e.to_string()))?;
    let u_squared = w.inverse().concat(v).free_reduce();
    let app = u.concat(&u).concat(&u_squared.inverse()).free_reduce();
    let one = is_rotation_of(&app, &r);

    let mut note = None;
    let diagram = match svsw_diagram(s, v, w, &r) {
        Ok(d) => Some(d),
        Err(e) => {
            note = Some(e);
            None
        }
    };
    if s.is_empty() {
        note = Some("s is empty: r = vw and u = v, so the bound |v| + |w| holds trivially".into());
    }
    let diagram_valid = diagram.as_ref().is_some_and(|d| d.validate_embedding(Some(&p)).is_empty());
    let red = diagram.as_ref().map_or(0, |d| d.complex.reduction_degree());
    let cert = SvswCertificate {
        relator: r,
        u: u.clone(),
        u_squared,
        relator_application: app,
        one_relator_application: one,
        diagram,
        diagram_valid,
        red,
        note,
    };
    Ok((p, u, cert))
}

/// Two rectangles side by side: the left face reads `svsw` from its top-left
/// corner, the right one reads `svsw` from its bottom-left corner, and they
/// share the middle `s`.
fn svsw_diagram(s: &Word, v: &Word, w: &Word, r: &Word) -> Result<VanKampenDiagram, String> {
    let mut next = 0usize;
    let mut fresh = || {
        next += 1;
        next - 1
    };
    let tl = fresh();
    let bm = fresh();
    let tr = fresh();
    let (bl, tm, br) = if s.is_empty() { (tl, bm, tr) } else { (fresh(), fresh(), fresh()) };
    let mut path = |from: usize, to: usize, len: usize| -> Vec<usize> {
        let mut p = vec![from];
        for _ in 1..len {
            p.push(fresh());
        }
        if len > 0 {
            p.push(to);
        }
        p
    };
    let s_left = path(tl, bl, s.len());
    let v_bot = path(bl, bm, v.len());
    let s_mid = path(bm, tm, s.len());
    let w_top = path(tm, tl, w.len());
    let v_top = path(tm, tr, v.len());
    let s_right = path(tr, br, s.len());
    let w_bot = path(br, bm, w.len());
    let cycle = |parts: &[&Vec<usize>]| -> Vec<usize> { parts.iter().flat_map(|p| p[..p.len() - 1].iter().copied()).collect() };
    let left = cycle(&[&s_left, &v_bot, &s_mid, &w_top]);
    let right = cycle(&[&s_mid, &v_top, &s_right, &w_bot]);
    // the right face runs clockwise; reverse it
    let right_ccw: Vec<usize> = std::iter::once(right[0]).chain(right[1..].iter().rev().copied()).collect();
    let rev = |p: &Vec<usize>| p.iter().rev().copied().collect::<Vec<_>>();
    let outer = cycle(&[&s_left, &v_bot, &rev(&w_bot), &rev(&s_right), &rev(&v_top), &w_top]);
    let outer_word = s.concat(v).concat(&w.inverse()).concat(&s.inverse()).concat(&v.inverse()).concat(w);
    VanKampenDiagram::from_cycles(
        next,
        std::slice::from_ref(r),
        &[(0, left, r.clone()), (0, right_ccw, r.inverse())],
        (&outer, &outer_word),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;

    #[test]
    fn svsw_fixture() {
        let (p, u, c) = svsw_example(&w("ab"), &w("ab"), &w("Ab"), 2).unwrap();
        assert_eq!(p.relators[0], w("abababAb"));
        assert_eq!(u, w("abab"));
        assert_eq!(c.u_squared, w("Baab"));
        assert!(c.one_relator_application);
        assert!(c.diagram_valid);
        assert_eq!(c.red, 0);
    }
}
