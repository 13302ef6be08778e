//! The non-inferiority order on SERPs.
//!
//! Rule 1 is pointwise grade dominance. Rule 2 holds when the second SERP
//! can be reached from the first by swapping higher grades rightwards past
//! strictly lower ones; it is evaluated through the equivalent prefix
//! condition: same grade multiset, and for every prefix length and grade
//! threshold the first SERP has at least as many documents at or above the
//! threshold.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use fixedbitset::FixedBitSet;

use crate::enumeration::SerpUniverse;
use crate::error::{Error, Result};
use crate::exact::ScoreValue;
use crate::metrics::Scorer;
use crate::model::{GainMap, Serp};

/// Why one SERP is non-inferior to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Rule1,
    Rule2,
    Transitive,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Rule1 => "rule1",
            Provenance::Rule2 => "rule2",
            Provenance::Transitive => "transitive",
        })
    }
}

fn same_length(a: &Serp, b: &Serp) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left: a.len(), right: b.len() })
    }
}

/// Every grade of `better` is at least the corresponding grade of `worse`.
pub fn rule1_non_inferior(better: &Serp, worse: &Serp) -> Result<bool> {
    same_length(better, worse)?;
    Ok(better.grades().iter().zip(worse.grades()).all(|(a, b)| a >= b))
}

/// `worse` is `better` with some higher grades moved rightwards past strictly lower ones.
pub fn rule2_non_inferior(better: &Serp, worse: &Serp) -> Result<bool> {
    same_length(better, worse)?;
    let grades = better
        .grades()
        .iter()
        .chain(worse.grades())
        .map(|&g| usize::from(g) + 1)
        .max()
        .unwrap_or(1);
    // running[g]: count of grades >= g in the prefix so far (better minus worse)
    let mut running = vec![0i64; grades];
    for (&a, &b) in better.grades().iter().zip(worse.grades()) {
        for (g, slot) in running.iter_mut().enumerate().skip(1) {
            *slot += i64::from(usize::from(a) >= g) - i64::from(usize::from(b) >= g);
            if *slot < 0 {
                return Ok(false);
            }
        }
    }
    Ok(running.iter().all(|&d| d == 0))
}

/// The reflexive-transitive closure of Rule 1 and Rule 2 over a universe.
#[derive(Debug, Clone)]
pub struct DominanceRelation<'u> {
    universe: &'u SerpUniverse,
    /// `below[i]` holds `j` iff member `i` is non-inferior to member `j`.
    below: Vec<FixedBitSet>,
}

impl<'u> DominanceRelation<'u> {
    pub fn build(universe: &'u SerpUniverse) -> Self {
        let members = universe.members();
        let n = members.len();
        let mut below: Vec<FixedBitSet> = (0..n).map(|_| FixedBitSet::with_capacity(n)).collect();
        for (i, a) in members.iter().enumerate() {
            for (j, b) in members.iter().enumerate() {
                if i == j || generator(a, b).is_some() {
                    below[i].insert(j);
                }
            }
        }
        for k in 0..n {
            let via = below[k].clone();
            for row in below.iter_mut() {
                if row.contains(k) {
                    row.union_with(&via);
                }
            }
        }
        Self { universe, below }
    }

    pub fn universe(&self) -> &SerpUniverse {
        self.universe
    }

    fn index(&self, serp: &Serp) -> Result<usize> {
        self.universe
            .index_of(serp)
            .ok_or_else(|| Error::NotInUniverse(serp.to_string()))
    }

    /// By member index.
    pub fn holds(&self, better: usize, worse: usize) -> bool {
        self.below[better].contains(worse)
    }

    pub fn provenance(&self, better: &Serp, worse: &Serp) -> Result<Option<Provenance>> {
        let (i, j) = (self.index(better)?, self.index(worse)?);
        if !self.holds(i, j) {
            return Ok(None);
        }
        Ok(Some(generator(better, worse).unwrap_or(Provenance::Transitive)))
    }

    /// All ordered pairs `(better, worse)` of distinct members in the relation.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.below
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.ones().filter(move |&j| j != i).map(move |j| (i, j)))
    }

    pub fn hasse(&self) -> HasseDiagram {
        let members = self.universe.members();
        let n = members.len();
        let strict: Vec<FixedBitSet> = self
            .below
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.set(i, false);
                r
            })
            .collect();
        let mut edges = Vec::new();
        for i in 0..n {
            let mut implied = FixedBitSet::with_capacity(n);
            for c in strict[i].ones() {
                implied.union_with(&strict[c]);
            }
            let mut covers = strict[i].clone();
            covers.difference_with(&implied);
            for j in covers.ones() {
                let rule = generator(&members[i], &members[j])
                    .expect("a covering pair is a generator pair");
                edges.push(HasseEdge { upper: i, lower: j, rule });
            }
        }
        HasseDiagram { nodes: members.to_vec(), edges }
    }
}

/// Rule 1 first, so a pair satisfying both is tagged Rule 1.
fn generator(a: &Serp, b: &Serp) -> Option<Provenance> {
    if rule1_non_inferior(a, b).unwrap_or(false) {
        Some(Provenance::Rule1)
    } else if rule2_non_inferior(a, b).unwrap_or(false) {
        Some(Provenance::Rule2)
    } else {
        None
    }
}

/// Non-inferiority within `universe`, with the reason it holds.
pub fn non_inferior(better: &Serp, worse: &Serp, universe: &SerpUniverse) -> Result<Option<Provenance>> {
    DominanceRelation::build(universe).provenance(better, worse)
}

/// A covering pair: `upper` is non-inferior to `lower` with nothing in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HasseEdge {
    pub upper: usize,
    pub lower: usize,
    pub rule: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HasseDiagram {
    nodes: Vec<Serp>,
    edges: Vec<HasseEdge>,
}

impl HasseDiagram {
    pub fn nodes(&self) -> &[Serp] {
        &self.nodes
    }

    pub fn edges(&self) -> &[HasseEdge] {
        &self.edges
    }

    pub fn edge_count(&self, rule: Provenance) -> usize {
        self.edges.iter().filter(|e| e.rule == rule).count()
    }

    pub fn edge_serps(&self, edge: &HasseEdge) -> (&Serp, &Serp) {
        (&self.nodes[edge.upper], &self.nodes[edge.lower])
    }

    /// Graphviz text. Nodes sorted by grade sequence, edges point from the
    /// non-inferior SERP; Rule 1 edges are solid and Rule 2 edges dashed.
    pub fn to_dot(&self) -> String {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].cmp(&self.nodes[b]));
        let mut rank = vec![0; self.nodes.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let mut edges = self.edges.clone();
        edges.sort_by_key(|e| (rank[e.upper], rank[e.lower]));

        let mut out = String::from("digraph hasse {\n  rankdir=TB;\n  node [shape=plaintext];\n");
        for &i in &order {
            let _ = writeln!(out, "  \"{}\";", self.nodes[i]);
        }
        for e in &edges {
            let style = match e.rule {
                Provenance::Rule1 => "solid",
                _ => "dashed",
            };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [style={style}];",
                self.nodes[e.upper], self.nodes[e.lower]
            );
        }
        out.push_str("}\n");
        out
    }
}

pub fn hasse(universe: &SerpUniverse) -> HasseDiagram {
    DominanceRelation::build(universe).hasse()
}

/// A pair ordered by non-inferiority whose scores disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub better: Serp,
    pub worse: Serp,
    pub better_score: ScoreValue,
    pub worse_score: ScoreValue,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.better,
            self.worse,
            self.better_score.format_decimal(6),
            self.worse_score.format_decimal(6)
        )
    }
}

fn scores_for<S: Scorer + ?Sized>(scorer: &S, universe: &SerpUniverse, map: &GainMap) -> Result<Vec<ScoreValue>> {
    universe
        .scores(scorer, map)
        .map_err(|e| Error::Audit(format!("{} is not defined on every member: {e}", scorer.label())))
}

/// `Less` when `a` is a worse score than `b` under the scorer's direction.
fn oriented<S: Scorer + ?Sized>(scorer: &S, a: &ScoreValue, b: &ScoreValue) -> Ordering {
    if scorer.higher_is_better() {
        a.cmp(b)
    } else {
        b.cmp(a)
    }
}

/// Every pair with `better ≽ worse` whose score ranks `better` strictly lower.
pub fn audit_metric<S: Scorer + ?Sized>(
    scorer: &S,
    universe: &SerpUniverse,
    map: &GainMap,
) -> Result<Vec<Violation>> {
    let scores = scores_for(scorer, universe, map)?;
    let relation = DominanceRelation::build(universe);
    let members = universe.members();
    Ok(relation
        .pairs()
        .filter(|&(i, j)| oriented(scorer, &scores[i], &scores[j]) == Ordering::Less)
        .map(|(i, j)| Violation {
            better: members[i].clone(),
            worse: members[j].clone(),
            better_score: scores[i].clone(),
            worse_score: scores[j].clone(),
        })
        .collect())
}

/// Covering edges of `rule` across which the score fails to increase strictly.
pub fn non_strict_edges<S: Scorer + ?Sized>(
    scorer: &S,
    universe: &SerpUniverse,
    diagram: &HasseDiagram,
    map: &GainMap,
    rule: Provenance,
) -> Result<Vec<Violation>> {
    let scores = scores_for(scorer, universe, map)?;
    let mut out = Vec::new();
    for e in diagram.edges().iter().filter(|e| e.rule == rule) {
        let (upper, lower) = diagram.edge_serps(e);
        let (i, j) = (
            universe.index_of(upper).ok_or_else(|| Error::NotInUniverse(upper.to_string()))?,
            universe.index_of(lower).ok_or_else(|| Error::NotInUniverse(lower.to_string()))?,
        );
        if oriented(scorer, &scores[i], &scores[j]) != Ordering::Greater {
            out.push(Violation {
                better: upper.clone(),
                worse: lower.clone(),
                better_score: scores[i].clone(),
                worse_score: scores[j].clone(),
            });
        }
    }
    Ok(out)
}
