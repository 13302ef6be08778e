//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

/// Every sequence reachable from `start` by swapping a grade rightwards
/// with a strictly lower grade further right (positions need not be adjacent).
pub fn swap_closure(start: &[u8]) -> HashSet<Vec<u8>> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.to_vec());
    queue.push_back(start.to_vec());
    while let Some(s) = queue.pop_front() {
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                if s[i] > s[j] {
                    let mut t = s.clone();
                    t.swap(i, j);
                    if seen.insert(t.clone()) {
                        queue.push_back(t);
                    }
                }
            }
        }
    }
    seen
}

/// All sequences of `length` over `grades` symbols.
pub fn all_sequences(length: usize, grades: u8) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..length {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..grades).map(move |g| {
                    let mut t = s.clone();
                    t.push(g);
                    t
                })
            })
            .collect();
    }
    out
}

/// All distinct orderings of a multiset given per-grade counts.
pub fn all_permutations(counts: &[usize]) -> Vec<Vec<u8>> {
    let n: usize = counts.iter().sum();
    all_sequences(n, counts.len() as u8)
        .into_iter()
        .filter(|s| (0..counts.len()).all(|g| s.iter().filter(|&&x| x as usize == g).count() == counts[g]))
        .collect()
}

pub fn microsoft_weight(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

pub fn jk_weight(rank: usize, base: f64) -> f64 {
    if (rank as f64) <= base {
        1.0
    } else {
        1.0 / (rank as f64).log(base)
    }
}

/// Plain floating point NDCG with the ideal taken from `ideal_gains` (any order).
pub fn float_ndcg(gains: &[f64], ideal_gains: &[f64], weight: impl Fn(usize) -> f64) -> f64 {
    let dcg = |g: &[f64]| g.iter().enumerate().map(|(i, x)| x * weight(i + 1)).sum::<f64>();
    let mut ideal = ideal_gains.to_vec();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ideal.truncate(gains.len());
    dcg(gains) / dcg(&ideal)
}

/// Number of clusters among `values` when neighbours closer than `tol` merge.
pub fn float_distinct(values: &[f64], tol: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for x in v {
        if x - last > tol {
            count += 1;
        }
        last = x;
    }
    count
}

/// Covering pairs of a relation given as an adjacency predicate over `n` items,
/// computed by definition: `a > b` with no `c` strictly between.
pub fn brute_force_covers(n: usize, leq: impl Fn(usize, usize) -> bool) -> HashSet<(usize, usize)> {
    // leq(a, b): a is non-inferior to b
    let mut out = HashSet::new();
    for a in 0..n {
        for b in 0..n {
            if a == b || !leq(a, b) {
                continue;
            }
            let between = (0..n).any(|c| c != a && c != b && leq(a, c) && leq(c, b));
            if !between {
                out.insert((a, b));
            }
        }
    }
    out
}
