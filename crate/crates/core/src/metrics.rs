//! Effectiveness metrics: categorical to numeric mappings from a SERP to a score.
//!
//! Every metric consumes the SERP's grades through a [`GainMap`]; binary
//! evaluation is the two-grade case of the same code. Metrics with a binary
//! definition (RR, R1, AP) count any grade above 0 as relevant.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{LogLinear, ScoreValue};
use crate::model::{gain_vector, GainMap, GradeCensus, Serp};
use crate::Rational;

/// Rank discount used by DCG and NDCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Discount {
    /// `log2(1 + d)` at every rank `d`.
    Microsoft,
    /// 1 up to rank `base`, then `log_base(d)`.
    JarvelinKekalainen { base: u64 },
}

impl Discount {
    fn log_base(&self) -> u64 {
        match self {
            Discount::Microsoft => 2,
            Discount::JarvelinKekalainen { base } => *base,
        }
    }

    /// `1 / discount(rank)` for a 1-based rank.
    pub fn weight(&self, rank: usize) -> LogLinear {
        let rank = rank as u64;
        match *self {
            Discount::Microsoft => LogLinear::inverse_log(2, rank + 1),
            Discount::JarvelinKekalainen { base } if rank <= base => {
                LogLinear::rational(base, Rational::one())
            }
            Discount::JarvelinKekalainen { base } => LogLinear::inverse_log(base, rank),
        }
    }
}

/// Evaluation depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Depth {
    At(usize),
    /// The whole SERP.
    #[default]
    Full,
}

impl Depth {
    pub fn resolve(&self, serp_len: usize) -> usize {
        match self {
            Depth::At(k) => *k,
            Depth::Full => serp_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Metric {
    Precision,
    ReciprocalRank,
    /// Rank of the first relevant document; lower is better.
    FirstRelevantRank,
    Rbp { persistence: Rational },
    AveragePrecision,
    Dcg(Discount),
    Ndcg(Discount),
    ExpectedReciprocalRank,
}

/// A metric together with its parameters and evaluation depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetricSpec {
    metric: Metric,
    depth: Depth,
}

impl MetricSpec {
    pub fn new(metric: Metric, depth: Depth) -> Result<Self> {
        if depth == Depth::At(0) {
            return Err(Error::Parameter("depth k must be at least 1".into()));
        }
        match &metric {
            Metric::Rbp { persistence } => check_persistence(persistence)?,
            Metric::Dcg(Discount::JarvelinKekalainen { base })
            | Metric::Ndcg(Discount::JarvelinKekalainen { base })
                if *base < 2 =>
            {
                return Err(Error::Parameter(format!("discount base must be >= 2, got {base}")));
            }
            _ => {}
        }
        Ok(Self { metric, depth })
    }

    pub fn precision(k: usize) -> Self {
        Self::new(Metric::Precision, Depth::At(k)).expect("valid")
    }

    pub fn rr(depth: Depth) -> Self {
        Self::new(Metric::ReciprocalRank, depth).expect("valid")
    }

    pub fn r1(depth: Depth) -> Self {
        Self::new(Metric::FirstRelevantRank, depth).expect("valid")
    }

    /// RBP with persistence 1/2.
    pub fn rbp_half(depth: Depth) -> Self {
        let persistence = Rational::new(1.into(), 2.into());
        Self::new(Metric::Rbp { persistence }, depth).expect("valid")
    }

    pub fn ap(depth: Depth) -> Self {
        Self::new(Metric::AveragePrecision, depth).expect("valid")
    }

    pub fn ndcg(depth: Depth) -> Self {
        Self::new(Metric::Ndcg(Discount::Microsoft), depth).expect("valid")
    }

    pub fn err(depth: Depth) -> Self {
        Self::new(Metric::ExpectedReciprocalRank, depth).expect("valid")
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn depth(&self) -> Depth {
        self.depth
    }

    /// Whether larger values mean better SERPs. Only R1 runs the other way.
    pub fn higher_is_better(&self) -> bool {
        self.metric != Metric::FirstRelevantRank
    }

    pub fn value(&self, serp: &Serp, map: &GainMap, census: &GradeCensus) -> Result<ScoreValue> {
        serp.validate(map.scale())?;
        let k = self.depth.resolve(serp.len());
        match &self.metric {
            Metric::Precision => precision_at_k(serp, map, k),
            Metric::ReciprocalRank => Ok(reciprocal_rank(serp, k)),
            Metric::FirstRelevantRank => Ok(rank_first_relevant(serp, k)),
            Metric::Rbp { persistence } => rbp(serp, map, persistence, k),
            Metric::AveragePrecision => average_precision(serp, census, k),
            Metric::Dcg(d) => dcg(serp, map, *d, k),
            Metric::Ndcg(d) => ndcg(serp, map, census, *d, k),
            Metric::ExpectedReciprocalRank => expected_reciprocal_rank(serp, map, k),
        }
    }

    pub fn score(&self, serp: &Serp, map: &GainMap, census: &GradeCensus) -> Result<Score> {
        Ok(Score { value: self.value(serp, map, census)?, spec: self.clone(), topic: None })
    }
}

/// Report label, e.g. `ndcg@10`, `rbp_0.5@5`, `ndcg_jk2@10`, `ap`.
impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let discount = |d: &Discount| match d {
            Discount::Microsoft => String::new(),
            Discount::JarvelinKekalainen { base } => format!("_jk{base}"),
        };
        let name = match &self.metric {
            Metric::Precision => "prec".to_string(),
            Metric::ReciprocalRank => "rr".into(),
            Metric::FirstRelevantRank => "r1".into(),
            Metric::Rbp { persistence } => format!("rbp_{}", compact_decimal(persistence)),
            Metric::AveragePrecision => "ap".into(),
            Metric::Dcg(d) => format!("dcg{}", discount(d)),
            Metric::Ndcg(d) => format!("ndcg{}", discount(d)),
            Metric::ExpectedReciprocalRank => "err".into(),
        };
        match self.depth {
            Depth::At(k) => write!(f, "{name}@{k}"),
            Depth::Full => f.write_str(&name),
        }
    }
}

fn compact_decimal(q: &Rational) -> String {
    for places in 0..=12 {
        let text = crate::exact::format_rational(q, places);
        if crate::exact::parse_rational(&text).as_ref() == Some(q) {
            return text;
        }
    }
    q.to_string()
}

/// A metric value for one SERP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    pub value: ScoreValue,
    pub spec: MetricSpec,
    pub topic: Option<String>,
}

impl Score {
    pub fn for_topic(mut self, topic: impl Into<String>) -> Self {
        self.topic = Some(topic.into());
        self
    }
}

/// Anything that assigns a value to each SERP of a universe.
pub trait Scorer {
    fn label(&self) -> String;
    fn score_serp(&self, serp: &Serp, map: &GainMap, census: &GradeCensus) -> Result<ScoreValue>;

    fn higher_is_better(&self) -> bool {
        true
    }
}

impl Scorer for MetricSpec {
    fn label(&self) -> String {
        self.to_string()
    }

    fn score_serp(&self, serp: &Serp, map: &GainMap, census: &GradeCensus) -> Result<ScoreValue> {
        self.value(serp, map, census)
    }

    fn higher_is_better(&self) -> bool {
        MetricSpec::higher_is_better(self)
    }
}

/// Adapts a closure into a [`Scorer`].
pub struct FnScorer<F> {
    label: String,
    f: F,
}

impl<F> FnScorer<F>
where
    F: Fn(&Serp) -> ScoreValue,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self { label: label.into(), f }
    }
}

impl<F> Scorer for FnScorer<F>
where
    F: Fn(&Serp) -> ScoreValue,
{
    fn label(&self) -> String {
        self.label.clone()
    }

    fn score_serp(&self, serp: &Serp, _: &GainMap, _: &GradeCensus) -> Result<ScoreValue> {
        Ok((self.f)(serp))
    }
}

fn check_persistence(phi: &Rational) -> Result<()> {
    if *phi <= Rational::zero() || *phi >= Rational::one() {
        return Err(Error::Parameter(format!("persistence must lie in (0, 1), got {phi}")));
    }
    Ok(())
}

fn top(serp: &Serp, k: usize) -> &[u8] {
    &serp.grades()[..k.min(serp.len())]
}

fn ratio(n: usize, d: usize) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Mean gain over the first `k` ranks; missing ranks count as zero.
pub fn precision_at_k(serp: &Serp, map: &GainMap, k: usize) -> Result<ScoreValue> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let gains = gain_vector(&serp.truncate_or_pad(k.min(serp.len())), map)?;
    let sum: Rational = gains.into_iter().sum();
    Ok(ScoreValue::exact(sum / Rational::from_integer(k.into())))
}

pub fn reciprocal_rank(serp: &Serp, k: usize) -> ScoreValue {
    match top(serp, k).iter().position(|&g| g > 0) {
        Some(i) => ScoreValue::exact(ratio(1, i + 1)),
        None => ScoreValue::integer(0),
    }
}

/// R1: the first relevant rank, or `k + 1` when no relevant document is in the top `k`.
pub fn rank_first_relevant(serp: &Serp, k: usize) -> ScoreValue {
    let rank = top(serp, k).iter().position(|&g| g > 0).map_or(k + 1, |i| i + 1);
    ScoreValue::integer(rank as i64)
}

/// `(1 - φ) Σ φ^(i-1) g_i` over the first `k` ranks.
pub fn rbp(serp: &Serp, map: &GainMap, persistence: &Rational, k: usize) -> Result<ScoreValue> {
    check_persistence(persistence)?;
    let mut weight = Rational::one() - persistence;
    let mut total = Rational::zero();
    for &g in top(serp, k) {
        let gain = map.gain(g)?;
        if !gain.is_zero() {
            total += &weight * gain;
        }
        weight *= persistence;
    }
    Ok(ScoreValue::exact(total))
}

/// Binary AP: the precision at each relevant rank within `k`, summed and divided by the recall base.
pub fn average_precision(serp: &Serp, census: &GradeCensus, k: usize) -> Result<ScoreValue> {
    let recall_base = census.relevant();
    if recall_base == 0 {
        return Err(Error::UndefinedMetric {
            metric: "ap".into(),
            reason: "no relevant documents in the recall base".into(),
        });
    }
    let mut found = 0usize;
    let mut total = Rational::zero();
    for (i, &g) in top(serp, k).iter().enumerate() {
        if g > 0 {
            found += 1;
            total += ratio(found, i + 1);
        }
    }
    Ok(ScoreValue::exact(total / Rational::from_integer(recall_base.into())))
}

fn discounted_sum(gains: &[Rational], discount: Discount) -> LogLinear {
    let mut sum = LogLinear::zero(discount.log_base());
    for (i, g) in gains.iter().enumerate() {
        if !g.is_zero() {
            sum.add_scaled(&discount.weight(i + 1), g);
        }
    }
    sum
}

pub fn dcg(serp: &Serp, map: &GainMap, discount: Discount, k: usize) -> Result<ScoreValue> {
    let gains = gain_vector(&serp.truncate_or_pad(k.min(serp.len())), map)?;
    Ok(ScoreValue::log_ratio(discounted_sum(&gains, discount), None))
}

pub fn ndcg(
    serp: &Serp,
    map: &GainMap,
    census: &GradeCensus,
    discount: Discount,
    k: usize,
) -> Result<ScoreValue> {
    let ideal = discounted_sum(&ideal_gain_vector(census, map, k)?, discount);
    if ideal.is_zero() {
        return Err(Error::UndefinedMetric {
            metric: "ndcg".into(),
            reason: "ideal DCG is zero".into(),
        });
    }
    let gains = gain_vector(&serp.truncate_or_pad(k.min(serp.len())), map)?;
    Ok(ScoreValue::log_ratio(discounted_sum(&gains, discount), Some(ideal)))
}

/// The `k` largest gains the census can supply, in non-increasing order, zero padded.
pub fn ideal_gain_vector(census: &GradeCensus, map: &GainMap, k: usize) -> Result<Vec<Rational>> {
    let mut out = Vec::with_capacity(k);
    for grade in (0..census.counts().len()).rev() {
        let count = census.counts()[grade];
        if count == 0 {
            continue;
        }
        let grade = u8::try_from(grade).map_err(|_| Error::InvalidGrade {
            grade,
            size: map.gains().len(),
        })?;
        let gain = map.gain(grade)?;
        let take = (count as usize).min(k - out.len());
        out.resize(out.len() + take, gain.clone());
        if out.len() == k {
            break;
        }
    }
    out.resize(k, Rational::zero());
    Ok(out)
}

/// Cascade ERR with gains used directly as stopping probabilities.
pub fn expected_reciprocal_rank(serp: &Serp, map: &GainMap, k: usize) -> Result<ScoreValue> {
    let gains = gain_vector(&serp.truncate_or_pad(k.min(serp.len())), map)?;
    err_from_gains(&gains)
}

pub fn err_from_gains(gains: &[Rational]) -> Result<ScoreValue> {
    let mut reach = Rational::one();
    let mut total = Rational::zero();
    for (i, g) in gains.iter().enumerate() {
        if *g < Rational::zero() || *g > Rational::one() {
            return Err(Error::Parameter(format!("stopping probability {g} outside [0, 1]")));
        }
        total += &reach * g / Rational::from_integer((i + 1).into());
        reach *= Rational::one() - g;
        if reach.is_zero() {
            break;
        }
    }
    Ok(ScoreValue::exact(total))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn serp(s: &str) -> Serp {
        s.parse().unwrap()
    }

    fn bin() -> GainMap {
        GainMap::binary()
    }

    #[test]
    fn precision_examples() {
        assert_eq!(precision_at_k(&serp("10010"), &bin(), 5).unwrap(), q(2, 5).into());
        assert_eq!(precision_at_k(&serp("01100"), &bin(), 4).unwrap(), q(1, 2).into());
        assert_eq!(precision_at_k(&serp("000"), &bin(), 3).unwrap(), q(0, 1).into());
        // short SERP counts the missing ranks as non-relevant
        assert_eq!(precision_at_k(&serp("1"), &bin(), 4).unwrap(), q(1, 4).into());
        assert!(precision_at_k(&serp("1"), &bin(), 0).is_err());
    }

    #[test]
    fn graded_precision_is_mean_gain() {
        let map = GainMap::four_level();
        assert_eq!(precision_at_k(&serp("13002"), &map, 5).unwrap(), q(2, 5).into());
    }

    #[test]
    fn rr_and_r1() {
        assert_eq!(reciprocal_rank(&serp("00110"), 5), q(1, 3).into());
        assert_eq!(reciprocal_rank(&serp("00011"), 5), q(1, 4).into());
        assert_eq!(reciprocal_rank(&serp("00000"), 5), q(0, 1).into());
        assert_eq!(reciprocal_rank(&serp("00011"), 3), q(0, 1).into());
        assert_eq!(rank_first_relevant(&serp("01000"), 5), ScoreValue::integer(2));
        assert_eq!(rank_first_relevant(&serp("10000"), 5), ScoreValue::integer(1));
        assert_eq!(rank_first_relevant(&serp("00000"), 5), ScoreValue::integer(6));
    }

    #[test]
    fn rbp_examples() {
        let half = q(1, 2);
        assert_eq!(rbp(&serp("11000"), &bin(), &half, 5).unwrap(), q(3, 4).into());
        assert_eq!(rbp(&serp("10001"), &bin(), &half, 5).unwrap(), q(17, 32).into());
        assert_eq!(rbp(&serp("00011"), &bin(), &half, 5).unwrap(), q(3, 32).into());
        assert!(rbp(&serp("1"), &bin(), &q(1, 1), 5).is_err());
        assert!(rbp(&serp("1"), &bin(), &q(0, 1), 5).is_err());
        assert!(MetricSpec::new(Metric::Rbp { persistence: q(3, 2) }, Depth::Full).is_err());
    }

    #[test]
    fn ap_examples() {
        let c = GradeCensus::binary(3, 2);
        assert_eq!(average_precision(&serp("10100"), &c, 5).unwrap(), q(5, 6).into());
        assert_eq!(average_precision(&serp("10001"), &c, 5).unwrap(), q(7, 10).into());
        assert_eq!(average_precision(&serp("11"), &GradeCensus::binary(0, 2), 2).unwrap(), q(1, 1).into());
        let err = average_precision(&serp("00"), &GradeCensus::binary(2, 0), 2).unwrap_err();
        assert!(matches!(err, Error::UndefinedMetric { .. }));
    }

    #[test]
    fn ndcg_examples() {
        let c = GradeCensus::binary(3, 2);
        let v = ndcg(&serp("01100"), &bin(), &c, Discount::Microsoft, 5).unwrap();
        assert_eq!(v.format_decimal(4), "0.6934");
        let v = ndcg(&serp("11000"), &bin(), &c, Discount::Microsoft, 5).unwrap();
        assert_eq!(v, q(1, 1).into());
        let v = ndcg(&serp("001"), &bin(), &GradeCensus::binary(3, 3), Discount::Microsoft, 3).unwrap();
        assert_eq!(v.format_decimal(3), "0.235");
        let err = ndcg(&serp("00"), &bin(), &GradeCensus::binary(2, 0), Discount::Microsoft, 2);
        assert!(matches!(err, Err(Error::UndefinedMetric { .. })));
    }

    #[test]
    fn jk_discount_weights() {
        let jk = Discount::JarvelinKekalainen { base: 2 };
        assert_eq!(jk.weight(1).as_rational(), Some(q(1, 1)));
        assert_eq!(jk.weight(2).as_rational(), Some(q(1, 1)));
        assert_eq!(jk.weight(4).as_rational(), Some(q(1, 2)));
        assert!(jk.weight(3).as_rational().is_none());
        let jk3 = Discount::JarvelinKekalainen { base: 3 };
        assert_eq!(jk3.weight(3).as_rational(), Some(q(1, 1)));
        assert_eq!(jk3.weight(9).as_rational(), Some(q(1, 2)));
        assert!((jk3.weight(4).to_f64() - 1.0 / 4f64.log(3.0)).abs() < 1e-12);
    }

    #[test]
    fn ideal_vectors() {
        let v = ideal_gain_vector(&GradeCensus::binary(3, 2), &bin(), 5).unwrap();
        assert_eq!(v, vec![q(1, 1), q(1, 1), q(0, 1), q(0, 1), q(0, 1)]);
        let census = GradeCensus::new(vec![0, 2, 0, 1]);
        let v = ideal_gain_vector(&census, &GainMap::four_level(), 3).unwrap();
        assert_eq!(v, vec![q(1, 1), q(1, 4), q(1, 4)]);
        let v = ideal_gain_vector(&GradeCensus::binary(0, 1), &bin(), 3).unwrap();
        assert_eq!(v, vec![q(1, 1), q(0, 1), q(0, 1)]);
        assert!(ideal_gain_vector(&GradeCensus::new(vec![0, 0, 1]), &bin(), 2).is_err());
    }

    #[test]
    fn err_examples() {
        assert_eq!(expected_reciprocal_rank(&serp("010"), &bin(), 3).unwrap(), q(1, 2).into());
        assert_eq!(expected_reciprocal_rank(&serp("000"), &bin(), 3).unwrap(), q(0, 1).into());
        assert_eq!(expected_reciprocal_rank(&serp("111"), &bin(), 3).unwrap(), q(1, 1).into());
        assert!(err_from_gains(&[q(3, 2)]).is_err());
        // graded: 1/4 + (3/4)(1/2)(3/4)
        let v = expected_reciprocal_rank(&serp("12"), &GainMap::four_level(), 2).unwrap();
        assert_eq!(v, (q(1, 4) + q(9, 32)).into());
    }

    #[test]
    fn labels() {
        assert_eq!(MetricSpec::rbp_half(Depth::At(5)).to_string(), "rbp_0.5@5");
        assert_eq!(MetricSpec::ap(Depth::Full).to_string(), "ap");
        let jk = MetricSpec::new(Metric::Ndcg(Discount::JarvelinKekalainen { base: 2 }), Depth::At(10));
        assert_eq!(jk.unwrap().to_string(), "ndcg_jk2@10");
        assert!(MetricSpec::new(Metric::Dcg(Discount::JarvelinKekalainen { base: 1 }), Depth::Full).is_err());
        assert!(MetricSpec::new(Metric::Precision, Depth::At(0)).is_err());
    }

    #[test]
    fn spec_rejects_bad_grades() {
        let spec = MetricSpec::rr(Depth::Full);
        assert!(spec.value(&serp("12"), &bin(), &GradeCensus::binary(1, 1)).is_err());
    }
}
