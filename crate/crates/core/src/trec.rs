//! Qrels, run and gain-map files, and the evaluation that joins them.
//!
//! Formats (whitespace separated, one record per line, blank lines ignored):
//!
//! * qrels: `topic iteration doc grade`
//! * run: `topic Q0 doc rank score tag`
//! * gain map: `label value`, value a decimal (`0.75`) or a fraction (`3/4`)
//!
//! Reports are tab separated `metric topic score` lines, one per topic and
//! metric, followed by an `all` line holding the mean over scored topics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;

use dashu_float::DBig;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{format_high_precision, format_rational, parse_rational, ScoreValue};
use crate::metrics::MetricSpec;
use crate::model::{
    serp_from_run, GainMap, Grade, GradeScale, RunRanking, TopicJudgments, UnjudgedPolicy,
};
use crate::Rational;

/// Judgments keyed by topic.
pub type Qrels = BTreeMap<String, TopicJudgments>;

/// Rankings keyed by topic.
pub type Runs = BTreeMap<String, RunRanking>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QrelsOptions {
    /// Negative grades become 0 instead of being rejected.
    pub clamp_negative: bool,
}

impl Default for QrelsOptions {
    fn default() -> Self {
        Self { clamp_negative: true }
    }
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::Parse { line: i + 1, message: e.to_string() })),
    })
}

fn fields<'a>(line: &'a str, number: usize, expected: usize, what: &str) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = line.split_whitespace().collect();
    if cols.len() != expected {
        return Err(Error::Parse {
            line: number,
            message: format!("{what} record needs {expected} columns, found {}", cols.len()),
        });
    }
    Ok(cols)
}

pub fn parse_qrels<R: BufRead>(reader: R, options: QrelsOptions) -> Result<Qrels> {
    let mut topics: BTreeMap<String, Vec<(String, Grade)>> = BTreeMap::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for entry in lines(reader) {
        let (number, line) = entry?;
        let cols = fields(&line, number, 4, "qrels")?;
        let (topic, doc) = (cols[0].to_string(), cols[2].to_string());
        let raw: i64 = cols[3].parse().map_err(|_| Error::Parse {
            line: number,
            message: format!("grade {:?} is not an integer", cols[3]),
        })?;
        let grade = match raw {
            r if r < 0 && options.clamp_negative => 0,
            r if r < 0 => {
                return Err(Error::Parse { line: number, message: format!("negative grade {r}") })
            }
            r => Grade::try_from(r).map_err(|_| Error::Parse {
                line: number,
                message: format!("grade {r} is too large"),
            })?,
        };
        if let Some(first) = seen.insert((topic.clone(), doc.clone()), number) {
            return Err(Error::Integrity {
                line: number,
                message: format!("topic {topic}: document {doc} already judged on line {first}"),
            });
        }
        topics.entry(topic).or_default().push((doc, grade));
    }
    topics
        .into_iter()
        .map(|(topic, judged)| Ok((topic.clone(), TopicJudgments::new(topic, judged)?)))
        .collect()
}

struct RunRecord {
    doc: String,
    rank: i64,
    score: f64,
}

/// Documents are ordered by descending score, then ascending rank field, then doc id.
pub fn parse_run<R: BufRead>(reader: R) -> Result<Runs> {
    let mut topics: BTreeMap<String, (String, Vec<RunRecord>)> = BTreeMap::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for entry in lines(reader) {
        let (number, line) = entry?;
        let cols = fields(&line, number, 6, "run")?;
        let rank: i64 = cols[3].parse().map_err(|_| Error::Parse {
            line: number,
            message: format!("rank {:?} is not an integer", cols[3]),
        })?;
        let score: f64 = cols[4].parse().map_err(|_| Error::Parse {
            line: number,
            message: format!("score {:?} is not a number", cols[4]),
        })?;
        if !score.is_finite() {
            return Err(Error::Parse { line: number, message: format!("score {score} is not finite") });
        }
        let (topic, doc) = (cols[0].to_string(), cols[2].to_string());
        if let Some(first) = seen.insert((topic.clone(), doc.clone()), number) {
            return Err(Error::Integrity {
                line: number,
                message: format!("topic {topic}: document {doc} already ranked on line {first}"),
            });
        }
        topics
            .entry(topic)
            .or_insert_with(|| (cols[5].to_string(), Vec::new()))
            .1
            .push(RunRecord { doc, rank, score });
    }
    topics
        .into_iter()
        .map(|(topic, (tag, mut records))| {
            records.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(Ordering::Equal)
                    .then(a.rank.cmp(&b.rank))
                    .then_with(|| a.doc.cmp(&b.doc))
            });
            let docs = records.into_iter().map(|r| r.doc).collect();
            Ok((topic.clone(), RunRanking::new(topic, tag, docs)?))
        })
        .collect()
}

fn label_index(label: &str) -> Option<usize> {
    let digits = label.strip_prefix('G').unwrap_or(label);
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Reads `label value` lines.
///
/// Labels of the form `3` or `G3` name grade indices, which must cover
/// `0..m` exactly once; any other labels take their grade from line order.
pub fn parse_gain_map<R: BufRead>(reader: R) -> Result<GainMap> {
    let mut entries = Vec::new();
    for entry in lines(reader) {
        let (number, line) = entry?;
        let cols = fields(&line, number, 2, "gain map")?;
        let value = parse_rational(cols[1]).ok_or_else(|| Error::Parse {
            line: number,
            message: format!("gain {:?} is neither a decimal nor a fraction", cols[1]),
        })?;
        entries.push((number, cols[0].to_string(), value));
    }
    let indices: Option<Vec<usize>> = entries.iter().map(|(_, l, _)| label_index(l)).collect();
    if let Some(indices) = indices {
        let mut slots: Vec<Option<usize>> = vec![None; entries.len()];
        for (pos, &i) in indices.iter().enumerate() {
            let line = entries[pos].0;
            match slots.get_mut(i) {
                Some(slot @ None) => *slot = Some(pos),
                Some(Some(_)) => {
                    return Err(Error::Integrity { line, message: format!("grade {i} listed twice") })
                }
                None => {
                    return Err(Error::Integrity {
                        line,
                        message: format!("grade {i} leaves a gap; grades must run 0..{}", entries.len()),
                    })
                }
            }
        }
        let ordered: Vec<usize> = slots.into_iter().map(|s| s.expect("filled")).collect();
        entries = ordered.into_iter().map(|p| entries[p].clone()).collect();
    }
    let scale = GradeScale::new(entries.iter().map(|(_, l, _)| l.clone()))?;
    GainMap::new(scale, entries.into_iter().map(|(_, _, v)| v).collect())
}

pub fn write_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (topic, j) in qrels {
        for (doc, grade) in j.judged() {
            let _ = writeln!(out, "{topic} 0 {doc} {grade}");
        }
    }
    out
}

/// Rank `r` of `m` documents is written with score `m - r + 1`.
pub fn write_run(runs: &Runs) -> String {
    let mut out = String::new();
    for (topic, run) in runs {
        let m = run.docs().len();
        for (i, doc) in run.docs().iter().enumerate() {
            let _ = writeln!(out, "{topic} Q0 {doc} {} {} {}", i + 1, m - i, run.tag());
        }
    }
    out
}

pub fn write_gain_map(map: &GainMap) -> String {
    let mut out = String::new();
    for (label, gain) in map.scale().labels().iter().zip(map.gains()) {
        let _ = writeln!(out, "{label}\t{gain}");
    }
    out
}

/// What to do when a metric is undefined for a topic (e.g. AP with no relevant documents).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UndefinedPolicy {
    #[default]
    Skip,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// SERP depth; defaults to each ranking's length.
    pub depth: Option<usize>,
    pub unjudged: UnjudgedPolicy,
    pub undefined: UndefinedPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicScore {
    pub metric: String,
    pub topic: String,
    pub value: ScoreValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub metric: String,
    pub topic: String,
    pub reason: String,
}

/// Mean over topics: exact when every per-topic value is rational.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanValue {
    Exact(Rational),
    Approximate(DBig),
}

impl MeanValue {
    pub fn format_decimal(&self, places: usize) -> String {
        match self {
            MeanValue::Exact(q) => format_rational(q, places),
            MeanValue::Approximate(x) => format_high_precision(x, places),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            MeanValue::Exact(q) => Some(q),
            MeanValue::Approximate(_) => None,
        }
    }

    fn of(values: &[&ScoreValue]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let exact: Option<Vec<&Rational>> = values.iter().map(|v| v.as_rational()).collect();
        Some(match exact {
            Some(qs) => {
                let sum = qs.into_iter().fold(Rational::zero(), |acc, q| acc + q);
                MeanValue::Exact(sum / Rational::from_integer(n.into()))
            }
            None => {
                let sum = values
                    .iter()
                    .map(|v| v.to_high_precision())
                    .fold(DBig::ZERO, |acc, x| acc + x);
                MeanValue::Approximate(sum / DBig::from(n as u64))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricMean {
    pub metric: String,
    pub topics: usize,
    pub mean: MeanValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub scores: Vec<TopicScore>,
    pub means: Vec<MetricMean>,
    pub skipped: Vec<Skipped>,
}

impl ScoreReport {
    pub fn mean(&self, metric: &str) -> Option<&MeanValue> {
        self.means.iter().find(|m| m.metric == metric).map(|m| &m.mean)
    }

    /// `metric<TAB>topic<TAB>score`, metrics in request order, topics sorted, `all` last.
    pub fn to_tsv(&self, places: usize) -> String {
        self.render(|v| v.format_decimal(places), |m| m.format_decimal(places))
    }

    /// Like [`ScoreReport::to_tsv`] but with exact closed forms; approximate means keep 30 places.
    pub fn to_tsv_exact(&self) -> String {
        self.render(ScoreValue::format_exact, |m| match m {
            MeanValue::Exact(q) => q.to_string(),
            MeanValue::Approximate(_) => m.format_decimal(30),
        })
    }

    fn render(
        &self,
        score: impl Fn(&ScoreValue) -> String,
        mean: impl Fn(&MeanValue) -> String,
    ) -> String {
        let mut out = String::new();
        let mut metrics: Vec<&str> = Vec::new();
        for s in &self.scores {
            if !metrics.contains(&s.metric.as_str()) {
                metrics.push(&s.metric);
            }
        }
        for m in &self.means {
            if !metrics.contains(&m.metric.as_str()) {
                metrics.push(&m.metric);
            }
        }
        for metric in metrics {
            for s in self.scores.iter().filter(|s| s.metric == metric) {
                let _ = writeln!(out, "{}\t{}\t{}", s.metric, s.topic, score(&s.value));
            }
            if let Some(m) = self.means.iter().find(|m| m.metric == metric) {
                let _ = writeln!(out, "{}\tall\t{}", m.metric, mean(&m.mean));
            }
        }
        out
    }

    pub fn skipped_tsv(&self) -> String {
        let mut out = String::new();
        for s in &self.skipped {
            let _ = writeln!(out, "{}\t{}\tskipped: {}", s.metric, s.topic, s.reason);
        }
        out
    }
}

/// Scores every topic present in both the runs and the judgments.
pub fn evaluate(
    runs: &Runs,
    qrels: &Qrels,
    map: &GainMap,
    specs: &[MetricSpec],
    options: &EvalOptions,
) -> Result<ScoreReport> {
    let common: Vec<(&RunRanking, &TopicJudgments)> = runs
        .iter()
        .filter_map(|(topic, run)| qrels.get(topic).map(|j| (run, j)))
        .collect();
    if common.is_empty() {
        return Err(Error::Join("no topic appears in both the run and the qrels".into()));
    }
    let mut serps = Vec::with_capacity(common.len());
    for (run, judgments) in &common {
        let depth = options.depth.unwrap_or(run.docs().len().max(1));
        let serp = serp_from_run(run, judgments, depth, options.unjudged)?;
        for (g, &count) in judgments.census().counts().iter().enumerate() {
            if count > 0 && g >= map.scale().size() {
                return Err(Error::InvalidGrade { grade: g, size: map.scale().size() });
            }
        }
        serps.push((judgments, serp));
    }

    let mut report = ScoreReport { scores: Vec::new(), means: Vec::new(), skipped: Vec::new() };
    for spec in specs {
        let label = spec.to_string();
        let mut values = Vec::new();
        for (judgments, serp) in &serps {
            match spec.value(serp, map, judgments.census()) {
                Ok(value) => {
                    report.scores.push(TopicScore {
                        metric: label.clone(),
                        topic: judgments.topic().to_string(),
                        value,
                    });
                    values.push(report.scores.len() - 1);
                }
                Err(e @ Error::UndefinedMetric { .. }) => match options.undefined {
                    UndefinedPolicy::Skip => report.skipped.push(Skipped {
                        metric: label.clone(),
                        topic: judgments.topic().to_string(),
                        reason: e.to_string(),
                    }),
                    UndefinedPolicy::Fail => return Err(e),
                },
                Err(e) => return Err(e),
            }
        }
        let refs: Vec<&ScoreValue> = values.iter().map(|&i| &report.scores[i].value).collect();
        if let Some(mean) = MeanValue::of(&refs) {
            report.means.push(MetricMean { metric: label, topics: refs.len(), mean });
        }
    }
    Ok(report)
}
