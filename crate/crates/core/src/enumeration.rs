//! SERP universes and their distinct score sets.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exact::ScoreValue;
use crate::intervalize::Intervalizer;
use crate::metrics::Scorer;
use crate::model::{GainMap, Grade, GradeCensus, Serp};

/// Which SERP classes a universe holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UniverseMode {
    /// Every ordering of the census's documents (`n! / Π n_g!` classes).
    FullPermutations(GradeCensus),
    /// Every length-`depth` grade sequence, optionally limited to what a census can supply.
    Prefixes { depth: usize, grades: usize, cap: Option<GradeCensus> },
    /// An explicit member list.
    Custom { grades: usize, census: GradeCensus },
}

impl UniverseMode {
    pub fn binary_permutations(n0: u64, n1: u64) -> Self {
        UniverseMode::FullPermutations(GradeCensus::binary(n0, n1))
    }

    pub fn binary_prefixes(depth: usize) -> Self {
        UniverseMode::Prefixes { depth, grades: 2, cap: None }
    }

    pub fn grades(&self) -> usize {
        match self {
            UniverseMode::FullPermutations(c) => c.counts().len().max(2),
            UniverseMode::Prefixes { grades, cap, .. } => {
                (*grades).max(cap.as_ref().map_or(0, |c| c.counts().len()))
            }
            UniverseMode::Custom { grades, .. } => *grades,
        }
    }

    /// Census used for recall-base normalization of the universe's members.
    ///
    /// An uncapped prefix universe behaves as if `depth` documents of every grade exist.
    pub fn census(&self) -> GradeCensus {
        match self {
            UniverseMode::FullPermutations(c) => c.clone(),
            UniverseMode::Prefixes { cap: Some(c), .. } => c.clone(),
            UniverseMode::Prefixes { depth, grades, cap: None } => {
                GradeCensus::new(vec![*depth as u64; *grades])
            }
            UniverseMode::Custom { census, .. } => census.clone(),
        }
    }

    fn caps_and_length(&self) -> (Vec<Option<u64>>, usize) {
        match self {
            UniverseMode::FullPermutations(c) => {
                (c.counts().iter().map(|&n| Some(n)).collect(), c.total() as usize)
            }
            UniverseMode::Prefixes { depth, cap: Some(c), .. } => {
                let mut caps: Vec<Option<u64>> = c.counts().iter().map(|&n| Some(n)).collect();
                caps.resize(self.grades(), Some(0));
                (caps, *depth)
            }
            UniverseMode::Prefixes { depth, grades, cap: None } => (vec![None; *grades], *depth),
            UniverseMode::Custom { .. } => (Vec::new(), 0),
        }
    }
}

/// Size guards on enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_depth: usize,
    pub max_size: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_depth: 20, max_size: 1 << 20 }
    }
}

impl Limits {
    pub fn unlimited() -> Self {
        Self { max_depth: usize::MAX, max_size: u128::MAX }
    }
}

/// Number of members `enumerate` would produce, saturating at `u128::MAX`.
pub fn universe_size(mode: &UniverseMode) -> u128 {
    let (caps, length) = mode.caps_and_length();
    if let UniverseMode::Custom { .. } = mode {
        return 0;
    }
    // ways[j]: sequences of length j over the grades seen so far
    let mut ways = vec![0u128; length + 1];
    ways[0] = 1;
    for cap in caps {
        let mut next = vec![0u128; length + 1];
        for (j, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let room = (length - j) as u64;
            let most = cap.map_or(room, |c| c.min(room));
            let mut choose = 1u128;
            for a in 0..=most as usize {
                if a > 0 {
                    choose = choose.saturating_mul((j + a) as u128) / a as u128;
                }
                next[j + a] = next[j + a].saturating_add(w.saturating_mul(choose));
            }
        }
        ways = next;
    }
    ways[length]
}

/// An enumerated set of SERP classes in canonical (descending lexicographic) order.
#[derive(Debug, Clone)]
pub struct SerpUniverse {
    mode: UniverseMode,
    members: Vec<Serp>,
    index: HashMap<Serp, usize>,
}

impl SerpUniverse {
    pub fn enumerate(mode: UniverseMode) -> Result<Self> {
        Self::enumerate_with(mode, Limits::default())
    }

    pub fn enumerate_with(mode: UniverseMode, limits: Limits) -> Result<Self> {
        let (caps, length) = mode.caps_and_length();
        match &mode {
            UniverseMode::FullPermutations(c) if c.total() == 0 => {
                return Err(Error::Parameter("census must contain at least one document".into()));
            }
            UniverseMode::Prefixes { depth: 0, .. } => {
                return Err(Error::Parameter("prefix depth must be at least 1".into()));
            }
            UniverseMode::Prefixes { grades, .. } if *grades < 2 => {
                return Err(Error::Parameter("at least two grades are needed".into()));
            }
            UniverseMode::Custom { .. } => {
                return Err(Error::Parameter("use SerpUniverse::from_members for custom universes".into()));
            }
            _ => {}
        }
        if mode.grades() > usize::from(Grade::MAX) + 1 {
            return Err(Error::Parameter("too many grades".into()));
        }
        let size = universe_size(&mode);
        let depth_exceeded = matches!(mode, UniverseMode::Prefixes { .. }) && length > limits.max_depth;
        if depth_exceeded || size > limits.max_size {
            return Err(Error::Capacity {
                size,
                depth: length,
                max_depth: limits.max_depth,
                max_size: limits.max_size,
            });
        }
        let mut members = Vec::with_capacity(size as usize);
        let mut remaining = caps;
        let mut current = Vec::with_capacity(length);
        generate(&mut remaining, length, &mut current, &mut members);
        if members.is_empty() {
            return Err(Error::Parameter("census cannot fill a SERP of that depth".into()));
        }
        Ok(Self::build(mode, members))
    }

    /// A universe over an explicit list of same-length SERPs.
    pub fn from_members(members: Vec<Serp>, grades: usize, census: GradeCensus) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::Parameter("universe must be non-empty".into()));
        };
        let len = first.len();
        if let Some(bad) = members.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch { left: len, right: bad.len() });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = members.iter().find(|s| !seen.insert(*s)) {
            return Err(Error::Parameter(format!("duplicate member {dup}")));
        }
        Ok(Self::build(UniverseMode::Custom { grades, census }, members))
    }

    fn build(mode: UniverseMode, members: Vec<Serp>) -> Self {
        let index = members.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Self { mode, members, index }
    }

    pub fn mode(&self) -> &UniverseMode {
        &self.mode
    }

    pub fn members(&self) -> &[Serp] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grades(&self) -> usize {
        self.mode.grades()
    }

    pub fn census(&self) -> GradeCensus {
        self.mode.census()
    }

    pub fn index_of(&self, serp: &Serp) -> Option<usize> {
        self.index.get(serp).copied()
    }

    pub fn contains(&self, serp: &Serp) -> bool {
        self.index.contains_key(serp)
    }

    /// Scores every member, in member order.
    pub fn scores<S: Scorer + ?Sized>(&self, scorer: &S, map: &GainMap) -> Result<Vec<ScoreValue>> {
        if map.scale().size() < self.grades() {
            return Err(Error::InvalidGainMap(format!(
                "gain map covers {} grades, universe uses {}",
                map.scale().size(),
                self.grades()
            )));
        }
        let census = self.census();
        self.members.iter().map(|s| scorer.score_serp(s, map, &census)).collect()
    }
}

fn generate(
    remaining: &mut [Option<u64>],
    length: usize,
    current: &mut Vec<Grade>,
    out: &mut Vec<Serp>,
) {
    if current.len() == length {
        out.push(Serp::new(current.clone()).expect("length >= 1"));
        return;
    }
    for g in (0..remaining.len()).rev() {
        match remaining[g] {
            Some(0) => continue,
            Some(n) => remaining[g] = Some(n - 1),
            None => {}
        }
        current.push(g as Grade);
        generate(remaining, length, current, out);
        current.pop();
        if let Some(n) = remaining[g] {
            remaining[g] = Some(n + 1);
        }
    }
}

/// Sorted distinct metric values over a universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreSet {
    label: String,
    values: Vec<ScoreValue>,
}

impl ScoreSet {
    pub fn from_values(label: impl Into<String>, mut values: Vec<ScoreValue>) -> Self {
        values.sort();
        values.dedup();
        Self { label: label.into(), values }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Ascending.
    pub fn values(&self) -> &[ScoreValue] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, value: &ScoreValue) -> Option<usize> {
        self.values.binary_search(value).ok()
    }

    /// `count: N` followed by one `exact<TAB>decimal` line per value.
    pub fn listing(&self, places: usize) -> String {
        let mut out = format!("count: {}\n", self.values.len());
        for v in &self.values {
            let _ = writeln!(out, "{}\t{}", v.format_exact(), v.format_decimal(places));
        }
        out
    }
}

pub fn distinct_scores<S: Scorer + ?Sized>(
    scorer: &S,
    universe: &SerpUniverse,
    map: &GainMap,
) -> Result<ScoreSet> {
    Ok(ScoreSet::from_values(scorer.label(), universe.scores(scorer, map)?))
}

/// One TSV row per member: the SERP, then raw (and intervalized, when an
/// intervalizer is supplied) score per metric.
pub fn universe_report(
    universe: &SerpUniverse,
    map: &GainMap,
    columns: &[(&dyn Scorer, Option<&Intervalizer>)],
    places: usize,
) -> Result<String> {
    let mut header = vec!["serp".to_string()];
    let mut table = Vec::with_capacity(columns.len());
    for (scorer, iv) in columns {
        header.push(scorer.label());
        if iv.is_some() {
            header.push(format!("{}:interval", scorer.label()));
        }
        table.push(universe.scores(*scorer, map)?);
    }
    let mut out = header.join("\t");
    out.push('\n');
    for (row, serp) in universe.members().iter().enumerate() {
        out.push_str(&serp.to_string());
        for ((_, iv), scores) in columns.iter().zip(&table) {
            let raw = &scores[row];
            let _ = write!(out, "\t{}", raw.format_decimal(places));
            if let Some(iv) = iv {
                let mapped = iv.map(raw)?;
                let _ = write!(out, "\t{}", crate::exact::format_rational(&mapped, places));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Depth, MetricSpec};

    fn strings(u: &SerpUniverse) -> Vec<String> {
        u.members().iter().map(ToString::to_string).collect()
    }

    #[test]
    fn permutations_in_table_order() {
        let u = SerpUniverse::enumerate(UniverseMode::binary_permutations(3, 2)).unwrap();
        assert_eq!(
            strings(&u),
            ["11000", "10100", "10010", "10001", "01100", "01010", "01001", "00110", "00101", "00011"]
        );
    }

    #[test]
    fn prefix_counts() {
        let u = SerpUniverse::enumerate(UniverseMode::binary_prefixes(3)).unwrap();
        assert_eq!(u.len(), 8);
        let u = SerpUniverse::enumerate(UniverseMode::binary_prefixes(1)).unwrap();
        assert_eq!(strings(&u), ["1", "0"]);
        let capped = UniverseMode::Prefixes { depth: 4, grades: 2, cap: Some(GradeCensus::binary(3, 2)) };
        // one or two 1s among four positions
        assert_eq!(universe_size(&capped), 4 + 6);
        assert_eq!(SerpUniverse::enumerate(capped).unwrap().len(), 10);
    }

    #[test]
    fn graded_sizes() {
        let mode = UniverseMode::FullPermutations(GradeCensus::new(vec![2, 1, 2]));
        assert_eq!(universe_size(&mode), 30);
        assert_eq!(SerpUniverse::enumerate(mode).unwrap().len(), 30);
        let mode = UniverseMode::Prefixes { depth: 3, grades: 4, cap: None };
        assert_eq!(universe_size(&mode), 64);
    }

    #[test]
    fn guards() {
        let err = SerpUniverse::enumerate(UniverseMode::binary_prefixes(21)).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
        let limits = Limits { max_depth: 30, max_size: 1 << 30 };
        assert!(SerpUniverse::enumerate_with(UniverseMode::binary_prefixes(3), limits).is_ok());
        let tiny = Limits { max_depth: 20, max_size: 4 };
        assert!(SerpUniverse::enumerate_with(UniverseMode::binary_prefixes(3), tiny).is_err());
        assert!(SerpUniverse::enumerate(UniverseMode::binary_prefixes(0)).is_err());
        assert!(SerpUniverse::enumerate(UniverseMode::binary_permutations(0, 0)).is_err());
        let starved = UniverseMode::Prefixes { depth: 4, grades: 2, cap: Some(GradeCensus::binary(1, 1)) };
        assert!(SerpUniverse::enumerate(starved).is_err());
    }

    #[test]
    fn custom_universe_checks() {
        let a: Serp = "10".parse().unwrap();
        let b: Serp = "100".parse().unwrap();
        assert!(SerpUniverse::from_members(vec![a.clone(), b], 2, GradeCensus::binary(2, 1)).is_err());
        assert!(SerpUniverse::from_members(vec![a.clone(), a], 2, GradeCensus::binary(2, 1)).is_err());
        assert!(SerpUniverse::from_members(vec![], 2, GradeCensus::binary(2, 1)).is_err());
    }

    #[test]
    fn listing_format() {
        let u = SerpUniverse::enumerate(UniverseMode::binary_prefixes(2)).unwrap();
        let set = distinct_scores(&MetricSpec::rr(Depth::Full), &u, &GainMap::binary()).unwrap();
        assert_eq!(set.listing(4), "count: 3\n0\t0.0000\n1/2\t0.5000\n1\t1.0000\n");
    }
}
