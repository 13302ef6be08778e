//! Mapping a metric's distinct score set onto equi-spaced points of `[0, 1]`.

use std::fmt::Write as _;

use num_traits::Zero;

use crate::enumeration::{distinct_scores, ScoreSet, SerpUniverse};
use crate::error::{Error, Result};
use crate::exact::{format_rational, ScoreValue};
use crate::metrics::Scorer;
use crate::model::GainMap;
use crate::Rational;

/// The order-preserving bijection `v_i -> (i - 1) / (m - 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intervalizer {
    source: ScoreSet,
}

impl Intervalizer {
    pub fn from_score_set(source: ScoreSet) -> Result<Self> {
        if source.len() < 2 {
            return Err(Error::DegenerateScale(source.len()));
        }
        Ok(Self { source })
    }

    pub fn label(&self) -> &str {
        self.source.label()
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn sources(&self) -> &[ScoreValue] {
        self.source.values()
    }

    pub fn target(&self, index: usize) -> Rational {
        Rational::new(index.into(), (self.len() - 1).into())
    }

    pub fn targets(&self) -> Vec<Rational> {
        (0..self.len()).map(|i| self.target(i)).collect()
    }

    /// The target of a raw score; scores outside the source set are rejected.
    pub fn map(&self, raw: &ScoreValue) -> Result<Rational> {
        self.source
            .position(raw)
            .map(|i| self.target(i))
            .ok_or_else(|| Error::Unmapped(raw.format_exact()))
    }

    /// `source<TAB>source-decimal<TAB>target<TAB>target-decimal` per value.
    pub fn table(&self, places: usize) -> String {
        let mut out = String::from("source\tsource_decimal\ttarget\ttarget_decimal\n");
        for (i, v) in self.sources().iter().enumerate() {
            let t = self.target(i);
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                v.format_exact(),
                v.format_decimal(places),
                t,
                format_rational(&t, places)
            );
        }
        out
    }
}

pub fn build_intervalizer<S: Scorer + ?Sized>(
    scorer: &S,
    universe: &SerpUniverse,
    map: &GainMap,
) -> Result<Intervalizer> {
    Intervalizer::from_score_set(distinct_scores(scorer, universe, map)?)
}

pub fn intervalize_score(intervalizer: &Intervalizer, raw: &ScoreValue) -> Result<Rational> {
    intervalizer.map(raw)
}

/// Consecutive differences of a score set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapReport {
    pub equispaced: bool,
    pub gaps: Vec<ScoreValue>,
}

impl GapReport {
    pub fn of(set: &ScoreSet) -> Result<Self> {
        if set.len() < 2 {
            return Err(Error::DegenerateScale(set.len()));
        }
        let gaps = set
            .values()
            .windows(2)
            .map(|w| {
                w[1].checked_sub(&w[0]).ok_or_else(|| {
                    Error::Parameter("score values have no common normalizer".into())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let equispaced = gaps.windows(2).all(|w| w[0] == w[1]);
        Ok(Self { equispaced, gaps })
    }

    /// The common gap when equi-spaced.
    pub fn spacing(&self) -> Option<&ScoreValue> {
        self.equispaced.then(|| &self.gaps[0])
    }
}

pub fn equispacing_check<S: Scorer + ?Sized>(
    scorer: &S,
    universe: &SerpUniverse,
    map: &GainMap,
) -> Result<GapReport> {
    GapReport::of(&distinct_scores(scorer, universe, map)?)
}

/// Arithmetic mean of intervalized targets.
pub fn mean_target(targets: &[Rational]) -> Option<Rational> {
    if targets.is_empty() {
        return None;
    }
    let sum: Rational = targets.iter().fold(Rational::zero(), |acc, t| acc + t);
    Some(sum / Rational::from_integer(targets.len().into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::UniverseMode;
    use crate::metrics::{Depth, MetricSpec};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn two_values_map_to_endpoints() {
        let u = SerpUniverse::enumerate(UniverseMode::binary_prefixes(1)).unwrap();
        let iv = build_intervalizer(&MetricSpec::rr(Depth::Full), &u, &GainMap::binary()).unwrap();
        assert_eq!(iv.targets(), vec![q(0, 1), q(1, 1)]);
        assert_eq!(iv.map(&ScoreValue::integer(1)).unwrap(), q(1, 1));
        assert_eq!(iv.map(&ScoreValue::integer(0)).unwrap(), q(0, 1));
    }

    #[test]
    fn unmapped_and_degenerate() {
        let u = SerpUniverse::enumerate(UniverseMode::binary_prefixes(3)).unwrap();
        let iv = build_intervalizer(&MetricSpec::rr(Depth::Full), &u, &GainMap::binary()).unwrap();
        assert!(matches!(iv.map(&q(1, 4).into()), Err(Error::Unmapped(_))));
        let single = ScoreSet::from_values("x", vec![ScoreValue::integer(1)]);
        assert_eq!(Intervalizer::from_score_set(single).unwrap_err(), Error::DegenerateScale(1));
    }

    #[test]
    fn rr_gaps_not_uniform() {
        let u = SerpUniverse::enumerate(UniverseMode::binary_prefixes(3)).unwrap();
        let report = equispacing_check(&MetricSpec::rr(Depth::Full), &u, &GainMap::binary()).unwrap();
        assert!(!report.equispaced);
        assert_eq!(report.gaps, vec![q(1, 3).into(), q(1, 6).into(), q(1, 2).into()]);
    }

    #[test]
    fn mean_of_targets() {
        assert_eq!(mean_target(&[q(0, 1), q(1, 1), q(1, 2)]), Some(q(1, 2)));
        assert_eq!(mean_target(&[]), None);
    }
}
