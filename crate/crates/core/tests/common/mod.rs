//! Brute-force reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's numeric code. Each function restates
//! a definition as directly as possible and trades speed for obviousness.

#![allow(dead_code)]

use std::collections::BTreeMap;

use mas_classify::dataset::{AttributeSpec, Class, Dataset};
use mas_classify::runtime::{AgentMessage, BeliefWrite, TraceRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Column-wise min-max scaling, constant columns to zero.
pub fn min_max(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows[0].len();
    let mut out = vec![vec![0.0; d]; rows.len()];
    for j in 0..d {
        let lo = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
        for (i, r) in rows.iter().enumerate() {
            out[i][j] = if hi > lo { (r[j] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    out
}

/// Potential weights straight from the definition.
pub fn weights(rows: &[Vec<f64>]) -> Vec<f64> {
    let v = min_max(rows);
    let d = rows[0].len();
    let cells = (v.len() * d) as f64;
    let g: f64 = v.iter().flatten().sum::<f64>() / cells;
    (0..d)
        .map(|j| {
            let constant = rows.iter().all(|r| r[j] == rows[0][j]);
            if constant {
                0.0
            } else {
                v.iter().map(|r| (r[j] - g).abs()).sum()
            }
        })
        .collect()
}

/// Same weights in ratio form, `Σ |v/g - 1|`.
pub fn ratio_weights(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let v = min_max(rows);
    let d = rows[0].len();
    let g: f64 = v.iter().flatten().sum::<f64>() / (v.len() * d) as f64;
    if g <= 0.0 {
        return None;
    }
    Some(
        (0..d)
            .map(|j| {
                if rows.iter().all(|r| r[j] == rows[0][j]) {
                    0.0
                } else {
                    v.iter().map(|r| (r[j] / g - 1.0).abs()).sum()
                }
            })
            .collect(),
    )
}

/// Column indices by descending weight, lower index first on ties.
pub fn argsort_desc(w: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    // insertion sort keeps equal keys in index order
    for i in 1..idx.len() {
        let mut k = i;
        while k > 0 && w[idx[k - 1]] < w[idx[k]] {
            idx.swap(k - 1, k);
            k -= 1;
        }
    }
    idx
}

/// Best training accuracy over every partition a threshold can induce.
///
/// A threshold only matters through which distinct scores lie at or above
/// it, so every cut between sorted distinct values (plus "all" and "none")
/// is tried with both polarities.
pub fn best_correct(scores: &[f64], labels: &[Class]) -> usize {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut cuts: Vec<Option<f64>> = distinct.iter().copied().map(Some).collect();
    cuts.push(None);
    let mut best = 0;
    for cut in cuts {
        let mut above = 0;
        let mut below = 0;
        for (s, l) in scores.iter().zip(labels) {
            let hi = cut.is_some_and(|c| *s >= c);
            if hi == (*l == Class::One) {
                above += 1;
            } else {
                below += 1;
            }
        }
        best = best.max(above).max(below);
    }
    best
}

pub fn majority(labels: &[Class]) -> usize {
    let ones = labels.iter().filter(|l| **l == Class::One).count();
    ones.max(labels.len() - ones)
}

/// Index of the closest main site by squared distance, lowest id on ties.
pub fn nearest<'a>(p: (f64, f64), mains: &[(&'a str, (f64, f64))]) -> &'a str {
    let d2 = |q: (f64, f64)| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
    let mut best = mains[0];
    for m in &mains[1..] {
        let (a, b) = (d2(m.1), d2(best.1));
        if a < b || (a == b && m.0 < best.0) {
            best = *m;
        }
    }
    best.0
}

/// Random labeled dataset with both classes present.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, lo: f64, hi: f64) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect();
    let mut labels: Vec<Class> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { Class::One } else { Class::Two })
        .collect();
    labels[0] = Class::One;
    labels[n - 1] = Class::Two;
    dataset(rows, Some(labels))
}

pub fn dataset(rows: Vec<Vec<f64>>, labels: Option<Vec<Class>>) -> Dataset {
    let d = rows[0].len();
    let attrs = (0..d).map(|j| AttributeSpec::numeric(format!("a{j}"), "t")).collect();
    let ids = (0..rows.len()).map(|i| format!("r{i:05}")).collect();
    Dataset::new(attrs, ids, rows, labels).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Audit recomputed from the trace and message log alone.
pub fn trace_violations(
    trace: &[TraceRecord],
    messages: &[AgentMessage],
    beliefs: &[BeliefWrite],
    reply_required: &[&str],
) -> Vec<String> {
    let mut out = Vec::new();

    // every emitted event is dispatched exactly once: ids 1..=N, no repeats
    let mut ids: Vec<u64> = trace.iter().map(|r| r.event_id).collect();
    ids.sort_unstable();
    if ids != (1..=trace.len() as u64).collect::<Vec<_>>() {
        out.push(format!("event ids not a gapless run: {ids:?}"));
    }

    // every sent message is delivered exactly once
    let mut delivered: BTreeMap<u64, usize> = BTreeMap::new();
    for r in trace {
        if let Some(m) = r.message_id {
            *delivered.entry(m).or_default() += 1;
        }
    }
    for m in messages {
        if delivered.get(&m.id) != Some(&1) {
            out.push(format!("message {} delivered {:?} times", m.id, delivered.get(&m.id)));
        }
    }

    // per-pair delivery order equals send order
    let by_id: BTreeMap<u64, &AgentMessage> = messages.iter().map(|m| (m.id, m)).collect();
    let mut last: BTreeMap<(String, String), u64> = BTreeMap::new();
    for r in trace {
        let Some(m) = r.message_id.and_then(|id| by_id.get(&id)) else { continue };
        let key = (m.from.clone(), m.to.clone());
        if let Some(prev) = last.get(&key) {
            if *prev > m.id {
                out.push(format!("{}->{} out of order at {}", m.from, m.to, m.id));
            }
        }
        last.insert(key, m.id);
    }

    // each message needing a reply has exactly one
    for m in messages.iter().filter(|m| reply_required.contains(&m.performative.as_str())) {
        let replies = messages.iter().filter(|r| r.correlation_id == Some(m.id)).count();
        if replies != 1 {
            out.push(format!("message {} has {replies} replies", m.id));
        }
    }

    // per-key versions run 1, 2, 3, ...
    let mut seen: BTreeMap<&str, u64> = BTreeMap::new();
    for w in beliefs {
        let v = seen.entry(&w.key).or_insert(0);
        *v += 1;
        if w.version != *v {
            out.push(format!("belief {} version {} expected {}", w.key, w.version, v));
        }
    }
    out
}
