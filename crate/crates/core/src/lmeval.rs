//! Zero-shot spoken language model probes: contrastive accuracy over
//! minimal pairs and semantic similarity correlation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{FeatureSequence, FrameSlice, ScoreTable};
use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContrastPair {
    pub pair_id: String,
    /// The word or grammatical item.
    pub legal: String,
    /// The nonword or ungrammatical item.
    pub illegal: String,
}

/// Parses `pair_id legal_id illegal_id` lines.
pub fn parse_pair_file(text: &str) -> Result<Vec<ContrastPair>> {
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() || f[0].starts_with('#') {
            continue;
        }
        if f.len() != 3 {
            return Err(Error::malformed(
                i + 1,
                format!("expected 3 fields, found {}", f.len()),
            ));
        }
        if !seen.insert(f[0]) {
            return Err(Error::DuplicateId(f[0].to_string()));
        }
        pairs.push(ContrastPair {
            pair_id: f[0].into(),
            legal: f[1].into(),
            illegal: f[2].into(),
        });
    }
    Ok(pairs)
}

pub fn read_pair_file(path: &Path) -> Result<Vec<ContrastPair>> {
    parse_pair_file(&read_to_string(path)?).map_err(|e| e.in_file(path))
}

/// Share of pairs whose legal member scores higher; ties count one half.
pub fn contrastive_accuracy(pairs: &[ContrastPair], scores: &ScoreTable) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairSet);
    }
    let score = |id: &String| {
        scores
            .get(id)
            .copied()
            .ok_or_else(|| Error::MissingScore(id.clone()))
    };
    let mut twice_hits: u64 = 0;
    for p in pairs {
        let (a, b) = (score(&p.legal)?, score(&p.illegal)?);
        if a > b {
            twice_hits += 2;
        } else if a == b {
            twice_hits += 1;
        }
    }
    Ok(twice_hits as f64 / (2 * pairs.len()) as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Mean,
    Max,
    Min,
}

/// Elementwise reduction of all frames.
pub fn pool(frames: FrameSlice<'_>, mode: Pooling) -> Result<Vec<f64>> {
    let mut rows = frames.frames();
    let Some(first) = rows.next() else {
        return Err(Error::EmptySequence);
    };
    let mut acc = first.to_vec();
    for row in rows {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a = match mode {
                Pooling::Mean => *a + v,
                Pooling::Max => a.max(v),
                Pooling::Min => a.min(v),
            };
        }
    }
    if mode == Pooling::Mean {
        let n = frames.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    Ok(acc)
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    let constant = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
    if xs.len() < 2 || constant(xs) || constant(ys) {
        return Err(Error::ConstantInput);
    }
    Ok(pearson(&average_ranks(xs), &average_ranks(ys)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityRecord {
    pub word1: String,
    pub word2: String,
    /// Human similarity judgment on a 0-10 scale.
    pub human_score: f64,
    pub dataset: String,
}

/// Parses `word1 word2 human_score dataset` lines.
pub fn parse_similarity_file(text: &str) -> Result<Vec<SimilarityRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() || f[0].starts_with('#') {
            continue;
        }
        if f.len() != 4 {
            return Err(Error::malformed(
                i + 1,
                format!("expected 4 fields, found {}", f.len()),
            ));
        }
        let human_score = f[2]
            .parse::<f64>()
            .ok()
            .filter(|s| (0.0..=10.0).contains(s))
            .ok_or_else(|| {
                Error::malformed(i + 1, format!("human score {:?} not in [0, 10]", f[2]))
            })?;
        out.push(SimilarityRecord {
            word1: f[0].into(),
            word2: f[1].into(),
            human_score,
            dataset: f[3].into(),
        });
    }
    Ok(out)
}

pub fn read_similarity_file(path: &Path) -> Result<Vec<SimilarityRecord>> {
    parse_similarity_file(&read_to_string(path)?).map_err(|e| e.in_file(path))
}

/// Groups `word#k` feature sequences by word, tokens ordered by `k`.
pub fn group_word_tokens(
    features: BTreeMap<String, FeatureSequence>,
) -> BTreeMap<String, Vec<FeatureSequence>> {
    let mut keyed: BTreeMap<String, Vec<(u64, String, FeatureSequence)>> = BTreeMap::new();
    for (id, seq) in features {
        let (word, k) = match id.rsplit_once('#') {
            Some((w, k)) => (w.to_string(), k.parse().unwrap_or(u64::MAX)),
            None => (id.clone(), 0),
        };
        keyed.entry(word).or_default().push((k, id, seq));
    }
    keyed
        .into_iter()
        .map(|(w, mut tokens)| {
            tokens.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
            (w, tokens.into_iter().map(|t| t.2).collect())
        })
        .collect()
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum();
    let nv: f64 = v.iter().map(|a| a * a).sum();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv).sqrt()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetScore {
    pub rho: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SsimiReport {
    pub per_dataset: BTreeMap<String, DatasetScore>,
    /// Datasets whose correlation is undefined.
    pub dropped: Vec<String>,
    /// Pair-count weighted mean of the per-dataset correlations, times 100.
    pub weighted: f64,
    pub warnings: Vec<String>,
}

/// Correlates pooled-embedding cosine similarity with human judgments.
///
/// Words with several tokens get one similarity per token pair, averaged
/// per record.
pub fn ssimi(
    records: &[SimilarityRecord],
    embeddings: &BTreeMap<String, Vec<FeatureSequence>>,
    mode: Pooling,
) -> Result<SsimiReport> {
    let mut pooled: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
    for r in records {
        for w in [&r.word1, &r.word2] {
            if pooled.contains_key(w.as_str()) {
                continue;
            }
            let tokens = embeddings
                .get(w)
                .filter(|t| !t.is_empty())
                .ok_or_else(|| Error::MissingWord(w.clone()))?;
            let vecs = tokens
                .iter()
                .map(|t| pool(t.all(), mode))
                .collect::<Result<_>>()?;
            pooled.insert(w, vecs);
        }
    }

    let mut by_dataset: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let (t1, t2) = (&pooled[r.word1.as_str()], &pooled[r.word2.as_str()]);
        let mut sum = 0.0;
        for u in t1 {
            for v in t2 {
                sum += cosine_similarity(u, v);
            }
        }
        let sim = sum / (t1.len() * t2.len()) as f64;
        let entry = by_dataset.entry(&r.dataset).or_default();
        entry.0.push(sim);
        entry.1.push(r.human_score);
    }

    let mut report = SsimiReport::default();
    let (mut num, mut den) = (0.0, 0usize);
    for (name, (model, human)) in by_dataset {
        match spearman(&model, &human) {
            Ok(rho) => {
                num += model.len() as f64 * rho;
                den += model.len();
                report.per_dataset.insert(
                    name.to_string(),
                    DatasetScore {
                        rho,
                        pairs: model.len(),
                    },
                );
            }
            Err(e) => {
                report.warnings.push(format!("dataset {name} dropped: {e}"));
                report.dropped.push(name.to_string());
            }
        }
    }
    if den == 0 {
        report
            .warnings
            .push("no dataset has a defined correlation; weighted score reported as 0".into());
    } else {
        report.weighted = 100.0 * num / den as f64;
    }
    Ok(report)
}
