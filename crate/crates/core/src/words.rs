//! Free-group words, cyclically reduced word counts, and the density-model
//! relator sampler.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest generator count expressible in the `a`–`z` text format.
pub const MAX_GENERATORS: usize = 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("invalid letter {0:?} in word")]
    InvalidLetter(char),
    #[error("generator {index} out of range for m = {m}")]
    GeneratorOutOfRange { index: usize, m: usize },
    #[error("relator {0} is not cyclically reduced")]
    NotCyclicallyReduced(String),
    #[error("relator {0} is empty")]
    EmptyRelator(usize),
    #[error("invalid density {0:?}")]
    InvalidDensity(String),
    #[error("density must lie in [0, 1], got {0}")]
    DensityOutOfRange(String),
    #[error("at least two generators are required, got {0}")]
    TooFewGenerators(usize),
    #[error("requested {requested} relators but only {available} words exist")]
    TooManyRelators { requested: String, available: String },
    #[error("relator length {len} exceeds l = {l}")]
    RelatorTooLong { len: usize, l: usize },
}

/// A generator `x_i` or its inverse. Stored as `+i` / `-i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter(i16);

impl Letter {
    /// `generator` is 1-based.
    pub fn new(generator: usize, inverted: bool) -> Letter {
        assert!(generator >= 1 && generator <= i16::MAX as usize);
        let g = generator as i16;
        Letter(if inverted { -g } else { g })
    }

    pub fn generator(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    /// Dense code in `0..2m`: `a = 0, A = 1, b = 2, B = 3, ...`.
    /// This is also the shortlex letter order.
    pub fn code(self) -> usize {
        2 * (self.generator() - 1) + usize::from(self.is_inverse())
    }

    pub fn from_code(code: usize) -> Letter {
        Letter::new(code / 2 + 1, code % 2 == 1)
    }

    pub fn to_char(self) -> char {
        let g = self.generator();
        assert!(g <= MAX_GENERATORS, "generator {g} has no text form");
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + (g - 1) as u8) as char
    }

    pub fn from_char(c: char) -> Result<Letter, WordError> {
        match c {
            'a'..='z' => Ok(Letter::new((c as u8 - b'a') as usize + 1, false)),
            'A'..='Z' => Ok(Letter::new((c as u8 - b'A') as usize + 1, true)),
            _ => Err(WordError::InvalidLetter(c)),
        }
    }

    /// All `2m` letters in shortlex order.
    pub fn alphabet(m: usize) -> impl Iterator<Item = Letter> {
        (0..2 * m).map(Letter::from_code)
    }
}

impl Serialize for Letter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_char(self.to_char())
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Letter, D::Error> {
        let c = char::deserialize(d)?;
        Letter::from_char(c).map_err(serde::de::Error::custom)
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.code().cmp(&other.code())
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.generator() <= MAX_GENERATORS {
            write!(f, "{}", self.to_char())
        } else {
            write!(f, "x{}{}", self.generator(), if self.is_inverse() { "^-1" } else { "" })
        }
    }
}

/// A word over `X ∪ X⁻¹`. Not necessarily reduced.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Word {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|l| l.generator()).max().unwrap_or(0)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn pow(&self, n: usize) -> Word {
        Word(self.0.iter().copied().cycle().take(self.len() * n).collect())
    }

    /// Cyclic rotation starting at `offset`.
    pub fn rotate(&self, offset: usize) -> Word {
        if self.is_empty() {
            return Word::empty();
        }
        let k = offset % self.len();
        let mut v = self.0[k..].to_vec();
        v.extend_from_slice(&self.0[..k]);
        Word(v)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && (self.len() < 2 || self.0[0] != self.0[self.len() - 1].inverse())
    }

    /// Unique freely reduced form.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Returns `(core, conjugator)` with `self = conjugator · core · conjugator⁻¹`
    /// in the free group and `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let r = self.free_reduce().0;
        let mut i = 0;
        let mut j = r.len();
        while j - i >= 2 && r[i] == r[j - 1].inverse() {
            i += 1;
            j -= 1;
        }
        (Word(r[i..j].to_vec()), Word(r[..i].to_vec()))
    }

    /// Shortlex comparison: shorter first, then letter order.
    pub fn shortlex_cmp(&self, other: &Word) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }

    /// Lexicographically least rotation (letter order), used as a cyclic key.
    pub fn min_rotation(&self) -> Word {
        (0..self.len().max(1))
            .map(|k| self.rotate(k))
            .min_by(|a, b| a.0.cmp(&b.0))
            .unwrap_or_default()
    }

    /// Every generator index at most `m`.
    pub fn check_rank(&self, m: usize) -> Result<(), WordError> {
        match self.0.iter().find(|l| l.generator() > m) {
            Some(l) => Err(WordError::GeneratorOutOfRange { index: l.generator(), m }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = WordError;

    /// Whitespace is ignored so `"ab AB"` parses as `abAB`.
    fn from_str(s: &str) -> Result<Word, WordError> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(Letter::from_char)
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Word, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Word {
        Word(v)
    }
}

/// Parse helper for tests and fixtures. Panics on invalid input.
pub fn w(s: &str) -> Word {
    s.parse().expect("valid word literal")
}

/// Density `d ∈ {−∞} ∪ [0, 1]`, exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Density {
    NegInfinity,
    Value(Ratio<i64>),
}

impl Density {
    pub fn value(&self) -> Option<Ratio<i64>> {
        match self {
            Density::NegInfinity => None,
            Density::Value(r) => Some(*r),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Density::NegInfinity => f64::NEG_INFINITY,
            Density::Value(r) => *r.numer() as f64 / *r.denom() as f64,
        }
    }
}

/// Parses decimals (`0.05`), fractions (`1/3`), integers, and `-inf`.
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>, WordError> {
    let bad = || WordError::InvalidDensity(s.to_string());
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if frac.len() > 15 || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let denom = 10i64.pow(frac.len() as u32);
    let i: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let f: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let r = Ratio::new(i * denom + f, denom);
    Ok(if neg { -r } else { r })
}

impl FromStr for Density {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Density, WordError> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("-inf") || t.eq_ignore_ascii_case("-infinity") {
            return Ok(Density::NegInfinity);
        }
        let r = parse_ratio(t)?;
        if r < Ratio::from_integer(0) || r > Ratio::from_integer(1) {
            return Err(WordError::DensityOutOfRange(t.to_string()));
        }
        Ok(Density::Value(r))
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::NegInfinity => write!(f, "-inf"),
            Density::Value(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Density::Value(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl Serialize for Density {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Density {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Density, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub l: usize,
    pub d: Density,
    pub seed: u64,
}

/// `⟨x_1, …, x_m | relators⟩` with cyclically reduced relators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub m: usize,
    pub relators: Vec<Word>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<SampleMeta>,
}

impl Presentation {
    pub fn new(m: usize, relators: Vec<Word>) -> Result<Presentation, WordError> {
        let p = Presentation { m, relators, meta: None };
        p.check()?;
        Ok(p)
    }

    pub fn free(m: usize) -> Presentation {
        Presentation { m, relators: Vec::new(), meta: None }
    }

    /// Parses relators given as text; `m` defaults to the largest generator used (at least 2).
    pub fn parse(m: Option<usize>, relators: &[&str]) -> Result<Presentation, WordError> {
        let rels = relators.iter().map(|s| s.parse()).collect::<Result<Vec<Word>, _>>()?;
        let m = m.unwrap_or_else(|| rels.iter().map(Word::max_generator).max().unwrap_or(0).max(2));
        Presentation::new(m, rels)
    }

    pub fn check(&self) -> Result<(), WordError> {
        if self.m < 2 {
            return Err(WordError::TooFewGenerators(self.m));
        }
        for (i, r) in self.relators.iter().enumerate() {
            if r.is_empty() {
                return Err(WordError::EmptyRelator(i));
            }
            r.check_rank(self.m)?;
            if !r.is_cyclically_reduced() {
                return Err(WordError::NotCyclicallyReduced(r.to_string()));
            }
            if let Some(meta) = &self.meta {
                if r.len() > meta.l {
                    return Err(WordError::RelatorTooLong { len: r.len(), l: meta.l });
                }
            }
        }
        Ok(())
    }

    pub fn is_free(&self) -> bool {
        self.relators.is_empty()
    }

    pub fn max_relator_len(&self) -> usize {
        self.relators.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("presentation serializes")
    }

    pub fn from_json(s: &str) -> Result<Presentation, String> {
        let p: Presentation = serde_json::from_str(s).map_err(|e| e.to_string())?;
        p.check().map_err(|e| e.to_string())?;
        Ok(p)
    }
}

/// Number of cyclically reduced words of length exactly `n` in the free group of rank `m`.
///
/// Closed form `(2m−1)^n + 1 + (m−1)(1 + (−1)^n)` for `n ≥ 1`, and 1 (the empty word) for `n = 0`.
pub fn count_cyclically_reduced(m: usize, n: usize) -> BigUint {
    assert!(m >= 2, "rank must be at least 2");
    if n == 0 {
        return BigUint::one();
    }
    let base = BigUint::from(2 * m - 1);
    let mut c = base.pow(n as u32) + BigUint::one();
    if n.is_multiple_of(2) {
        c += BigUint::from(2 * (m - 1));
    }
    c
}

/// `|B_l|`: cyclically reduced words of length `1..=l`.
pub fn count_ball(m: usize, l: usize) -> BigUint {
    (1..=l).map(|n| count_cyclically_reduced(m, n)).sum()
}

/// `⌊N^d⌋` computed exactly: for `d = p/q` this is the integer `q`-th root of `N^p`.
pub fn floor_power(n: &BigUint, d: Density) -> BigUint {
    match d {
        Density::NegInfinity => BigUint::zero(),
        Density::Value(r) => {
            let p = *r.numer() as u32;
            let q = *r.denom() as u32;
            if p == 0 {
                return BigUint::one();
            }
            n.pow(p).nth_root(q)
        }
    }
}

fn random_below<R: RngCore + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(!bound.is_zero());
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let excess = (bytes * 8) as u64 - bits;
    let mut buf = vec![0u8; bytes];
    loop {
        rng.fill_bytes(&mut buf);
        // big-endian: mask the top byte down to `bits`
        buf[0] &= 0xffu8 >> excess;
        let x = BigUint::from_bytes_be(&buf);
        if &x < bound {
            return x;
        }
    }
}

/// Uniform freely reduced word of length `n` (no cyclic condition).
pub fn sample_reduced<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Word {
    let mut v: Vec<Letter> = Vec::with_capacity(n);
    for i in 0..n {
        let l = if i == 0 {
            Letter::from_code(rng.gen_range(0..2 * m))
        } else {
            let prev_inv = v[i - 1].inverse().code();
            let mut c = rng.gen_range(0..2 * m - 1);
            if c >= prev_inv {
                c += 1;
            }
            Letter::from_code(c)
        };
        v.push(l);
    }
    Word(v)
}

/// Uniform cyclically reduced word of length exactly `n ≥ 1`, by rejection from
/// uniform reduced words.
pub fn sample_cyclically_reduced<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Word {
    assert!(n >= 1);
    loop {
        let w = sample_reduced(m, n, rng);
        if w.is_cyclically_reduced() {
            return w;
        }
    }
}

/// All cyclically reduced words of length exactly `n`, in shortlex order.
pub fn enumerate_cyclically_reduced(m: usize, n: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut cur: Vec<Letter> = Vec::with_capacity(n);
    fn rec(m: usize, n: usize, cur: &mut Vec<Letter>, out: &mut Vec<Word>) {
        if cur.len() == n {
            let w = Word(cur.clone());
            if w.is_cyclically_reduced() {
                out.push(w);
            }
            return;
        }
        for l in Letter::alphabet(m) {
            if cur.last().is_some_and(|&p| p == l.inverse()) {
                continue;
            }
            cur.push(l);
            rec(m, n, cur, out);
            cur.pop();
        }
    }
    rec(m, n, &mut cur, &mut out);
    out
}

/// Seeded RNG used throughout for reproducible streams.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples `G_l(m, d)`: a uniform `⌊|B_l|^d⌋`-subset of `B_l`. Relators are returned in
/// shortlex order.
pub fn sample_presentation(m: usize, l: usize, d: Density, seed: u64) -> Result<Presentation, WordError> {
    if m < 2 {
        return Err(WordError::TooFewGenerators(m));
    }
    if m > MAX_GENERATORS {
        return Err(WordError::GeneratorOutOfRange { index: m, m: MAX_GENERATORS });
    }
    let meta = Some(SampleMeta { l, d, seed });
    let strata: Vec<BigUint> = (1..=l).map(|n| count_cyclically_reduced(m, n)).collect();
    let total: BigUint = strata.iter().sum();
    let wanted = floor_power(&total, d);
    if wanted > total {
        return Err(WordError::TooManyRelators {
            requested: wanted.to_string(),
            available: total.to_string(),
        });
    }
    if wanted == total {
        let mut all: Vec<Word> = (1..=l).flat_map(|n| enumerate_cyclically_reduced(m, n)).collect();
        all.sort_by(Word::shortlex_cmp);
        return Ok(Presentation { m, relators: all, meta });
    }
    let count = wanted
        .to_usize()
        .ok_or_else(|| WordError::TooManyRelators { requested: wanted.to_string(), available: "usize".into() })?;

    let mut rng = seeded_rng(seed);
    // cumulative[k] = |B_{k+1}|; the stratum of x is the first k with x < cumulative[k]
    let cumulative: Vec<BigUint> = strata
        .iter()
        .scan(BigUint::zero(), |acc, s| {
            *acc += s;
            Some(acc.clone())
        })
        .collect();
    let mut seen: HashSet<Word> = HashSet::with_capacity(count);
    let mut drawn: Vec<Word> = Vec::with_capacity(count);
    while drawn.len() < count {
        let x = random_below(&total, &mut rng);
        let n = cumulative.partition_point(|c| c <= &x) + 1;
        let word = sample_cyclically_reduced(m, n, &mut rng);
        if seen.insert(word.clone()) {
            drawn.push(word);
        }
    }
    crate::par::sort_by(&mut drawn, Word::shortlex_cmp);
    Ok(Presentation { m, relators: drawn, meta })
}
