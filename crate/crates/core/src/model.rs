//! Relevance grades, gain maps, SERPs and the judgment/run data they are built from.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::Rational;

/// An index into a [`GradeScale`]; 0 is the lowest grade.
pub type Grade = u8;

/// Ordered relevance labels, lowest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GradeScale {
    labels: Vec<String>,
}

impl GradeScale {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidScale(format!(
                "need at least 2 grades, got {}",
                labels.len()
            )));
        }
        if labels.len() > usize::from(Grade::MAX) + 1 {
            return Err(Error::InvalidScale(format!("too many grades ({})", labels.len())));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidScale(format!("duplicate label {label:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// Labels `G0`, `G1`, ... `G{size-1}`.
    pub fn numbered(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| format!("G{i}")))
    }

    pub fn binary() -> Self {
        Self::numbered(2).expect("two grades")
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, grade: Grade) -> Option<&str> {
        self.labels.get(usize::from(grade)).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<Grade> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as Grade)
    }

    pub fn check(&self, grade: Grade) -> Result<()> {
        if usize::from(grade) < self.size() {
            Ok(())
        } else {
            Err(Error::InvalidGrade { grade: grade.into(), size: self.size() })
        }
    }
}

/// Ordinal to numeric mapping: one exact gain in `[0, 1]` per grade.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GainMap {
    scale: GradeScale,
    gains: Vec<Rational>,
}

impl GainMap {
    pub fn new(scale: GradeScale, gains: Vec<Rational>) -> Result<Self> {
        if gains.len() != scale.size() {
            return Err(Error::InvalidGainMap(format!(
                "{} gains for {} grades",
                gains.len(),
                scale.size()
            )));
        }
        let zero = Rational::zero();
        let one = Rational::one();
        for (i, g) in gains.iter().enumerate() {
            if *g < zero || *g > one {
                return Err(Error::InvalidGainMap(format!("gain {g} of grade {i} outside [0, 1]")));
            }
        }
        if gains.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGainMap("gains must be non-decreasing in grade".into()));
        }
        if gains.iter().all(Zero::is_zero) {
            return Err(Error::InvalidGainMap("at least one gain must be positive".into()));
        }
        Ok(Self { scale, gains })
    }

    /// `G0 -> 0`, `G1 -> 1`.
    pub fn binary() -> Self {
        Self::new(GradeScale::binary(), vec![Rational::zero(), Rational::one()])
            .expect("binary map is valid")
    }

    /// The four-level utility map `G0 -> 0`, `G1 -> 1/4`, `G2 -> 3/4`, `G3 -> 1`.
    pub fn four_level() -> Self {
        let gains = [(0, 1), (1, 4), (3, 4), (1, 1)]
            .into_iter()
            .map(|(n, d)| Rational::new(n.into(), d.into()))
            .collect();
        Self::new(GradeScale::numbered(4).expect("four grades"), gains).expect("valid map")
    }

    /// Evenly spaced gains `i / (size - 1)`.
    pub fn linear(scale: GradeScale) -> Self {
        let top = BigInt::from(scale.size() - 1);
        let gains = (0..scale.size())
            .map(|i| Rational::new(BigInt::from(i), top.clone()))
            .collect();
        Self::new(scale, gains).expect("valid map")
    }

    /// The exponential transform `(2^g - 1) / 2^gmax` used by classic ERR.
    pub fn exponential(scale: GradeScale) -> Self {
        let top = BigInt::one() << (scale.size() - 1);
        let gains = (0..scale.size())
            .map(|g| Rational::new((BigInt::one() << g) - 1, top.clone()))
            .collect();
        Self::new(scale, gains).expect("valid map")
    }

    pub fn scale(&self) -> &GradeScale {
        &self.scale
    }

    pub fn gains(&self) -> &[Rational] {
        &self.gains
    }

    pub fn gain(&self, grade: Grade) -> Result<&Rational> {
        self.gains
            .get(usize::from(grade))
            .ok_or(Error::InvalidGrade { grade: grade.into(), size: self.gains.len() })
    }

    pub fn is_binary_identity(&self) -> bool {
        self.gains.len() == 2 && self.gains[0].is_zero() && self.gains[1].is_one()
    }
}

/// A ranked list of relevance grades; position 0 is the top of the ranking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Serp {
    grades: Vec<Grade>,
}

impl Serp {
    pub fn new(grades: Vec<Grade>) -> Result<Self> {
        if grades.is_empty() {
            return Err(Error::EmptySerp);
        }
        Ok(Self { grades })
    }

    pub fn grades(&self) -> &[Grade] {
        &self.grades
    }

    pub fn len(&self) -> usize {
        self.grades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    pub fn validate(&self, scale: &GradeScale) -> Result<()> {
        self.grades.iter().try_for_each(|&g| scale.check(g))
    }

    /// Same SERP with the grade at `position` replaced.
    pub fn with_grade(&self, position: usize, grade: Grade) -> Self {
        let mut grades = self.grades.clone();
        grades[position] = grade;
        Self { grades }
    }

    /// The first `k` grades, padded with grade 0 when the SERP is shorter.
    pub fn truncate_or_pad(&self, k: usize) -> Self {
        let mut grades: Vec<Grade> = self.grades.iter().copied().take(k).collect();
        grades.resize(k.max(1), 0);
        Self { grades }
    }
}

impl fmt::Display for Serp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.grades.iter().all(|&g| g < 10) {
            for g in &self.grades {
                write!(f, "{g}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.grades.iter().map(ToString::to_string).collect();
            f.write_str(&parts.join(","))
        }
    }
}

/// Accepts either packed digits (`10010`) or a comma separated list (`1,0,12`).
impl FromStr for Serp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |what: &str| Error::Parameter(format!("cannot parse SERP {s:?}: {what}"));
        let grades = if s.contains(',') {
            s.split(',')
                .map(|p| p.trim().parse::<Grade>().map_err(|_| bad(p)))
                .collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as Grade).ok_or_else(|| bad("not a digit")))
                .collect::<Result<Vec<_>>>()?
        };
        Self::new(grades)
    }
}

/// Number of documents of each grade judged for a topic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GradeCensus {
    counts: Vec<u64>,
}

impl GradeCensus {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    /// `n0` non-relevant and `n1` relevant documents.
    pub fn binary(n0: u64, n1: u64) -> Self {
        Self::new(vec![n0, n1])
    }

    pub fn of_serp(serp: &Serp, grades: usize) -> Self {
        let mut counts = vec![0; grades.max(serp.grades.iter().map(|&g| usize::from(g) + 1).max().unwrap_or(0))];
        for &g in serp.grades() {
            counts[usize::from(g)] += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, grade: Grade) -> u64 {
        self.counts.get(usize::from(grade)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The recall base: documents with grade above 0.
    pub fn relevant(&self) -> u64 {
        self.counts.iter().skip(1).sum()
    }

    /// Whether `serp` uses no grade more often than the census provides.
    pub fn admits(&self, serp: &Serp) -> bool {
        let mut used = vec![0u64; self.counts.len()];
        for &g in serp.grades() {
            match used.get_mut(usize::from(g)) {
                Some(u) => *u += 1,
                None => return false,
            }
        }
        used.iter().zip(&self.counts).all(|(u, c)| u <= c)
    }
}

/// Judged documents for one topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicJudgments {
    topic: String,
    judged: BTreeMap<String, Grade>,
    census: GradeCensus,
}

impl TopicJudgments {
    pub fn new<I>(topic: impl Into<String>, judged: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Grade)>,
    {
        let topic = topic.into();
        let mut map = BTreeMap::new();
        for (doc, grade) in judged {
            if map.contains_key(&doc) {
                return Err(Error::Integrity {
                    line: 0,
                    message: format!("topic {topic}: document {doc} judged twice"),
                });
            }
            map.insert(doc, grade);
        }
        let size = map.values().map(|&g| usize::from(g) + 1).max().unwrap_or(0).max(2);
        let mut counts = vec![0u64; size];
        for &g in map.values() {
            counts[usize::from(g)] += 1;
        }
        Ok(Self { topic, judged: map, census: GradeCensus::new(counts) })
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn judged(&self) -> &BTreeMap<String, Grade> {
        &self.judged
    }

    pub fn grade(&self, doc: &str) -> Option<Grade> {
        self.judged.get(doc).copied()
    }

    pub fn census(&self) -> &GradeCensus {
        &self.census
    }
}

/// One system's ranking for one topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRanking {
    topic: String,
    tag: String,
    docs: Vec<String>,
}

impl RunRanking {
    pub fn new(topic: impl Into<String>, tag: impl Into<String>, docs: Vec<String>) -> Result<Self> {
        let topic = topic.into();
        let mut seen = HashSet::new();
        for doc in &docs {
            if !seen.insert(doc.as_str()) {
                return Err(Error::Integrity {
                    line: 0,
                    message: format!("topic {topic}: document {doc} ranked twice"),
                });
            }
        }
        Ok(Self { topic, tag: tag.into(), docs })
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Documents in rank order, rank 1 first.
    pub fn docs(&self) -> &[String] {
        &self.docs
    }
}

/// What to do with a ranked document that has no judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnjudgedPolicy {
    #[default]
    NonRelevant,
    Error,
}

/// Maps each grade of `serp` to its gain.
pub fn gain_vector(serp: &Serp, map: &GainMap) -> Result<Vec<Rational>> {
    serp.grades().iter().map(|&g| map.gain(g).cloned()).collect()
}

/// The depth-`k` SERP a run produced for a topic.
pub fn serp_from_run(
    run: &RunRanking,
    judgments: &TopicJudgments,
    k: usize,
    policy: UnjudgedPolicy,
) -> Result<Serp> {
    if k == 0 {
        return Err(Error::Parameter("evaluation depth must be at least 1".into()));
    }
    if run.topic() != judgments.topic() {
        return Err(Error::Join(format!(
            "run topic {} does not match judgments topic {}",
            run.topic(),
            judgments.topic()
        )));
    }
    let mut grades = Vec::with_capacity(k);
    for doc in run.docs().iter().take(k) {
        let grade = match (judgments.grade(doc), policy) {
            (Some(g), _) => g,
            (None, UnjudgedPolicy::NonRelevant) => 0,
            (None, UnjudgedPolicy::Error) => {
                return Err(Error::Unjudged { topic: run.topic().into(), doc: doc.clone() })
            }
        };
        grades.push(grade);
    }
    grades.resize(k, 0);
    Serp::new(grades)
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

    #[test]
    fn four_level_gain_vector() {
        let map = GainMap::four_level();
        let gains = gain_vector(&serp("13002"), &map).unwrap();
        assert_eq!(gains, vec![q(1, 4), q(1, 1), q(0, 1), q(0, 1), q(3, 4)]);
    }

    #[test]
    fn lowest_grade_maps_to_zero() {
        for map in [GainMap::binary(), GainMap::four_level()] {
            let gains = gain_vector(&serp("000"), &map).unwrap();
            assert!(gains.iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn binary_identity() {
        let gains = gain_vector(&serp("101"), &GainMap::binary()).unwrap();
        assert_eq!(gains, vec![q(1, 1), q(0, 1), q(1, 1)]);
    }

    #[test]
    fn grade_out_of_range() {
        let err = gain_vector(&serp("102"), &GainMap::binary()).unwrap_err();
        assert_eq!(err, Error::InvalidGrade { grade: 2, size: 2 });
    }

    #[test]
    fn gain_map_validation() {
        let scale = GradeScale::binary();
        assert!(GainMap::new(scale.clone(), vec![q(1, 1), q(0, 1)]).is_err());
        assert!(GainMap::new(scale.clone(), vec![q(0, 1), q(0, 1)]).is_err());
        assert!(GainMap::new(scale.clone(), vec![q(0, 1), q(3, 2)]).is_err());
        assert!(GainMap::new(scale, vec![q(0, 1)]).is_err());
        assert!(GradeScale::new(["a", "a"]).is_err());
        assert!(GradeScale::new(["a"]).is_err());
    }

    #[test]
    fn exponential_map() {
        let map = GainMap::exponential(GradeScale::numbered(3).unwrap());
        assert_eq!(map.gains(), &[q(0, 1), q(1, 4), q(3, 4)]);
    }

    #[test]
    fn serp_parsing() {
        assert_eq!(serp("10010").grades(), &[1, 0, 0, 1, 0]);
        assert_eq!(serp("1, 0, 12").grades(), &[1, 0, 12]);
        assert_eq!(serp("1,0,12").to_string(), "1,0,12");
        assert!("".parse::<Serp>().is_err());
        assert!("1a".parse::<Serp>().is_err());
    }

    fn judgments(pairs: &[(&str, Grade)]) -> TopicJudgments {
        TopicJudgments::new("q1", pairs.iter().map(|(d, g)| (d.to_string(), *g))).unwrap()
    }

    fn run(docs: &[&str]) -> RunRanking {
        RunRanking::new("q1", "sys", docs.iter().map(|d| d.to_string()).collect()).unwrap()
    }

    #[test]
    fn serp_from_run_lookup_and_padding() {
        let j = judgments(&[("dA", 1), ("dC", 1)]);
        let s = serp_from_run(&run(&["dA", "dB", "dC"]), &j, 3, UnjudgedPolicy::NonRelevant).unwrap();
        assert_eq!(s.grades(), &[1, 0, 1]);

        let j = judgments(&[("dA", 1)]);
        let s = serp_from_run(&run(&["dA"]), &j, 3, UnjudgedPolicy::NonRelevant).unwrap();
        assert_eq!(s.grades(), &[1, 0, 0]);

        let j = judgments(&[]);
        let s = serp_from_run(&run(&["dA", "dB"]), &j, 2, UnjudgedPolicy::NonRelevant).unwrap();
        assert_eq!(s.grades(), &[0, 0]);
    }

    #[test]
    fn serp_from_run_errors() {
        let j = judgments(&[("dA", 1)]);
        let err = serp_from_run(&run(&["dA", "dB"]), &j, 2, UnjudgedPolicy::Error).unwrap_err();
        assert!(matches!(err, Error::Unjudged { .. }));

        let other = TopicJudgments::new("q2", vec![]).unwrap();
        let err = serp_from_run(&run(&["dA"]), &other, 2, UnjudgedPolicy::NonRelevant).unwrap_err();
        assert!(matches!(err, Error::Join(_)));

        assert!(serp_from_run(&run(&["dA"]), &j, 0, UnjudgedPolicy::NonRelevant).is_err());
    }

    #[test]
    fn census_from_judgments() {
        let j = judgments(&[("a", 0), ("b", 2), ("c", 2)]);
        assert_eq!(j.census().counts(), &[1, 0, 2]);
        assert_eq!(j.census().relevant(), 2);
        assert!(j.census().admits(&serp("22")));
        assert!(!j.census().admits(&serp("21")));
        assert!(RunRanking::new("q", "t", vec!["a".into(), "a".into()]).is_err());
    }
}
