//! Exact score values.
//!
//! Precision, RR, RBP, AP and ERR scores are plain rationals. DCG-family
//! scores are sums of logarithmic discount weights `ln(b) / ln(d)`, which are
//! kept as rational coefficients over a canonical basis: every integer
//! `d >= 2` is written as `r^p` with `r` not a perfect power, so that
//! `ln(b)/ln(d) = (p_b / p_d) * ln(b)/ln(r)`. Weights sharing a root collapse
//! onto one coordinate (`1/log2(9)` is half of `1/log2(3)`); weights whose
//! roots differ are treated as linearly independent over the rationals.
//!
//! Comparisons between values with different normalizers cannot be settled
//! symbolically and fall back to 50 significant digit arithmetic.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use dashu_float::DBig;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Rational;

/// Significant decimal digits used by the high-precision fallback.
pub const HIGH_PRECISION_DIGITS: usize = 50;

/// Two values closer than this under the high-precision fallback compare equal.
const HIGH_PRECISION_TIE: &str = "1e-30";

/// Returns `(r, p)` with `n = r^p` and `p` maximal.
pub fn perfect_power_root(n: u64) -> (u64, u32) {
    assert!(n >= 2, "perfect_power_root needs n >= 2");
    for p in (2..=63u32).rev() {
        let guess = (n as f64).powf(1.0 / f64::from(p)).round() as u64;
        for r in guess.saturating_sub(1).max(2)..=guess + 1 {
            if r.checked_pow(p) == Some(n) {
                return (r, p);
            }
        }
    }
    (n, 1)
}

/// `Σ c_r · ln(base) / ln(r)` over roots `r`, with `base` itself a root.
///
/// The coordinate `r == base` is the rational part.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LogLinear {
    base: u64,
    terms: BTreeMap<u64, Rational>,
}

impl LogLinear {
    /// The empty sum for logarithm base `base` (any integer >= 2).
    pub fn zero(base: u64) -> Self {
        Self { base: perfect_power_root(base).0, terms: BTreeMap::new() }
    }

    pub fn rational(base: u64, value: Rational) -> Self {
        let mut out = Self::zero(base);
        let b = out.base;
        out.add_term(b, value);
        out
    }

    /// The weight `ln(base) / ln(d) = 1 / log_base(d)`.
    pub fn inverse_log(base: u64, d: u64) -> Self {
        let (rb, pb) = perfect_power_root(base);
        let (rd, pd) = perfect_power_root(d);
        let mut out = Self { base: rb, terms: BTreeMap::new() };
        out.add_term(rd, Rational::new(pb.into(), pd.into()));
        out
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn terms(&self) -> &BTreeMap<u64, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value when no irrational coordinate is present.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&self.base).cloned(),
            _ => None,
        }
    }

    fn add_term(&mut self, root: u64, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(root).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&root);
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &LogLinear, scale: &Rational) {
        assert_eq!(self.base, other.base, "mixing logarithm bases");
        if scale.is_zero() {
            return;
        }
        for (&r, c) in &other.terms {
            self.add_term(r, c * scale);
        }
    }

    pub fn scaled(&self, scale: &Rational) -> Self {
        let mut out = Self::zero(self.base);
        out.add_scaled(self, scale);
        out
    }

    pub fn sub(&self, other: &LogLinear) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::one());
        out
    }

    /// `Some(q)` when `self == q * other`.
    pub fn ratio_to(&self, other: &LogLinear) -> Option<Rational> {
        if self.base != other.base || other.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Rational::zero());
        }
        if self.terms.len() != other.terms.len() {
            return None;
        }
        let (r0, c0) = other.terms.iter().next().expect("non-empty");
        let q = self.terms.get(r0)? / c0;
        let proportional = other
            .terms
            .iter()
            .all(|(r, c)| self.terms.get(r).is_some_and(|s| *s == c * &q));
        proportional.then_some(q)
    }

    pub fn to_f64(&self) -> f64 {
        let lb = (self.base as f64).ln();
        self.terms
            .iter()
            .map(|(&r, c)| rational_to_f64(c) * lb / (r as f64).ln())
            .sum()
    }

    /// Sum of absolute term magnitudes; bounds the f64 rounding error of [`to_f64`](Self::to_f64).
    fn magnitude(&self) -> f64 {
        let lb = (self.base as f64).ln();
        self.terms
            .iter()
            .map(|(&r, c)| rational_to_f64(c).abs() * lb / (r as f64).ln())
            .sum()
    }

    pub fn to_high_precision(&self) -> DBig {
        let lb = ln_high(self.base);
        self.terms.iter().fold(hp(0), |acc, (&r, c)| {
            acc + rational_to_high(c) * lb.clone() / ln_high(r)
        })
    }

    fn fmt_terms(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (&r, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if r == self.base {
                write!(f, "{c}")?;
            } else if c.is_integer() {
                write!(f, "{c}/log{}({r})", self.base)?;
            } else {
                write!(f, "({c})/log{}({r})", self.base)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for LogLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_terms(f)
    }
}

/// A DCG-family value: a discounted gain sum, optionally divided by an ideal sum.
#[derive(Debug, Clone)]
pub struct LogScore {
    gain: LogLinear,
    ideal: Option<LogLinear>,
    approx: f64,
}

impl LogScore {
    pub fn gain(&self) -> &LogLinear {
        &self.gain
    }

    pub fn ideal(&self) -> Option<&LogLinear> {
        self.ideal.as_ref()
    }

    fn compatible(&self, other: &LogScore) -> bool {
        self.gain.base == other.gain.base && self.ideal == other.ideal
    }

    /// `value` expressed over this score's normalizer.
    fn lift(&self, value: &Rational) -> LogLinear {
        match &self.ideal {
            Some(ideal) => ideal.scaled(value),
            None => LogLinear::rational(self.gain.base, value.clone()),
        }
    }
}

/// A metric value, kept exact wherever the arithmetic allows it.
#[derive(Debug, Clone)]
pub enum ScoreValue {
    Exact(Rational),
    Log(LogScore),
}

impl ScoreValue {
    pub fn exact(value: Rational) -> Self {
        ScoreValue::Exact(value)
    }

    pub fn integer(value: i64) -> Self {
        ScoreValue::Exact(Rational::from_integer(value.into()))
    }

    /// `gain / ideal` (or `gain` alone), reduced to a rational whenever possible.
    ///
    /// The pair is canonicalized so the ideal's leading coefficient is 1;
    /// two values with proportional ideals then compare structurally.
    pub fn log_ratio(gain: LogLinear, ideal: Option<LogLinear>) -> Self {
        let (gain, ideal) = match ideal {
            None => match gain.as_rational() {
                Some(q) => return ScoreValue::Exact(q),
                None => (gain, None),
            },
            Some(ideal) => {
                assert!(!ideal.is_zero(), "zero normalizer");
                if let Some(q) = gain.ratio_to(&ideal) {
                    return ScoreValue::Exact(q);
                }
                if let Some(c) = ideal.as_rational() {
                    let g = gain.scaled(&c.recip());
                    return ScoreValue::log_ratio(g, None);
                }
                let lead = ideal.terms.values().next().expect("non-empty").recip();
                (gain.scaled(&lead), Some(ideal.scaled(&lead)))
            }
        };
        let approx = match &ideal {
            Some(i) => gain.to_f64() / i.to_f64(),
            None => gain.to_f64(),
        };
        ScoreValue::Log(LogScore { gain, ideal, approx })
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            ScoreValue::Exact(q) => Some(q),
            ScoreValue::Log(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScoreValue::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ScoreValue::Exact(q) => rational_to_f64(q),
            ScoreValue::Log(l) => l.approx,
        }
    }

    pub fn to_high_precision(&self) -> DBig {
        match self {
            ScoreValue::Exact(q) => rational_to_high(q),
            ScoreValue::Log(l) => match &l.ideal {
                Some(i) => l.gain.to_high_precision() / i.to_high_precision(),
                None => l.gain.to_high_precision(),
            },
        }
    }

    /// `self - other` when both live over the same normalizer.
    pub fn checked_sub(&self, other: &ScoreValue) -> Option<ScoreValue> {
        match (self, other) {
            (ScoreValue::Exact(a), ScoreValue::Exact(b)) => Some(ScoreValue::Exact(a - b)),
            (ScoreValue::Log(a), ScoreValue::Log(b)) if a.compatible(b) => {
                Some(ScoreValue::log_ratio(a.gain.sub(&b.gain), a.ideal.clone()))
            }
            (ScoreValue::Log(a), ScoreValue::Exact(b)) => {
                Some(ScoreValue::log_ratio(a.gain.sub(&a.lift(b)), a.ideal.clone()))
            }
            (ScoreValue::Exact(a), ScoreValue::Log(b)) => {
                Some(ScoreValue::log_ratio(b.lift(a).sub(&b.gain), b.ideal.clone()))
            }
            _ => None,
        }
    }

    /// Decimal rendering rounded half away from zero.
    pub fn format_decimal(&self, places: usize) -> String {
        match self {
            ScoreValue::Exact(q) => format_rational(q, places),
            ScoreValue::Log(_) => format_high_precision(&self.to_high_precision(), places),
        }
    }

    /// Exact symbolic rendering: `p/q` for rationals, weight sums otherwise.
    pub fn format_exact(&self) -> String {
        self.to_string()
    }

    fn sign_of_difference(a: &LogScore, b: &LogScore) -> Ordering {
        let diff = a.gain.sub(&b.gain);
        if diff.is_zero() {
            return Ordering::Equal;
        }
        let approx = diff.to_f64();
        if approx.abs() > 1e-9 * diff.magnitude().max(f64::MIN_POSITIVE) {
            return approx.partial_cmp(&0.0).expect("finite");
        }
        // Normalizers are positive, so the numerator difference decides.
        let high = diff.to_high_precision();
        high.partial_cmp(&hp(0)).expect("finite")
    }

    fn numeric_cmp(&self, other: &ScoreValue) -> Ordering {
        let (a, b) = (self.to_f64(), other.to_f64());
        if (a - b).abs() > 1e-9 {
            return a.partial_cmp(&b).expect("finite scores");
        }
        let diff = self.to_high_precision() - other.to_high_precision();
        let tie: DBig = HIGH_PRECISION_TIE.parse().expect("constant");
        if diff.clone().abs_cmp_lt(&tie) {
            Ordering::Equal
        } else {
            diff.partial_cmp(&hp(0)).expect("finite")
        }
    }
}

trait AbsLt {
    fn abs_cmp_lt(self, bound: &DBig) -> bool;
}

impl AbsLt for DBig {
    fn abs_cmp_lt(self, bound: &DBig) -> bool {
        let neg = -bound.clone();
        self < *bound && self > neg
    }
}

impl Ord for ScoreValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ScoreValue::Exact(a), ScoreValue::Exact(b)) => a.cmp(b),
            (ScoreValue::Log(a), ScoreValue::Log(b)) if a.compatible(b) => {
                Self::sign_of_difference(a, b)
            }
            (ScoreValue::Log(a), ScoreValue::Exact(q)) => {
                let lifted = LogScore { gain: a.lift(q), ideal: a.ideal.clone(), approx: 0.0 };
                Self::sign_of_difference(a, &lifted)
            }
            (ScoreValue::Exact(q), ScoreValue::Log(b)) => {
                let lifted = LogScore { gain: b.lift(q), ideal: b.ideal.clone(), approx: 0.0 };
                Self::sign_of_difference(&lifted, b)
            }
            _ => self.numeric_cmp(other),
        }
    }
}

impl PartialOrd for ScoreValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for ScoreValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ScoreValue {}

impl From<Rational> for ScoreValue {
    fn from(q: Rational) -> Self {
        ScoreValue::Exact(q)
    }
}

impl fmt::Display for ScoreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreValue::Exact(q) => write!(f, "{q}"),
            ScoreValue::Log(l) => match &l.ideal {
                None => l.gain.fmt_terms(f),
                Some(i) => write!(f, "[{}] / [{}]", l.gain, i),
            },
        }
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

fn hp(n: u64) -> DBig {
    DBig::from(n).with_precision(HIGH_PRECISION_DIGITS).value()
}

fn bigint_to_high(n: &BigInt) -> DBig {
    let parsed: DBig = n.to_string().parse().expect("integer literal");
    parsed.with_precision(HIGH_PRECISION_DIGITS).value()
}

pub fn rational_to_high(q: &Rational) -> DBig {
    bigint_to_high(q.numer()) / bigint_to_high(q.denom())
}

thread_local! {
    static LN_CACHE: RefCell<HashMap<u64, DBig>> = RefCell::new(HashMap::new());
}

/// `ln(n)` to [`HIGH_PRECISION_DIGITS`] digits, cached per thread.
pub fn ln_high(n: u64) -> DBig {
    LN_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| hp(n).ln())
            .clone()
    })
}

/// Rounds half away from zero to `places` decimals.
pub fn format_rational(q: &Rational, places: usize) -> String {
    let scale = BigInt::from(10u32).pow(places as u32);
    let scaled = q * Rational::from_integer(scale.clone());
    let (whole, frac) = scaled.numer().abs().div_rem(scaled.denom());
    let twice = frac * 2u32;
    let mut units = whole;
    if twice >= *scaled.denom() {
        units += 1u32;
    }
    let negative = q.is_negative() && !units.is_zero();
    let (int_part, frac_part) = units.div_rem(&scale);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if places > 0 {
        out.push('.');
        out.push_str(&format!("{:0>width$}", frac_part.to_string(), width = places));
    }
    out
}

/// Rounds a high-precision value half away from zero to `places` decimals.
pub fn format_high_precision(value: &DBig, places: usize) -> String {
    match parse_plain_decimal(&value.to_string()) {
        Some(q) => format_rational(&q, places),
        None => format!("{:.*}", places, value.to_f64().value()),
    }
}

/// Parses `12`, `-0.125`, `.5` or `3/4` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    parse_plain_decimal(text)
}

pub(crate) fn parse_plain_decimal(text: &str) -> Option<Rational> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let q = Rational::new(numer, denom);
    Some(if negative { -q } else { q })
}
