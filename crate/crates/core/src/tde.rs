//! Spoken term discovery scores.
//!
//! Fragments are first projected onto the gold phone alignment; every score
//! is then computed on phone transcripts and phone-index spans.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{self, ClusterSet, Fragment, GoldCorpus, Utterance, SILENCE};
use crate::error::{Error, Result};

/// A partially covered phone is kept when the fragment holds more than this
/// much of it, in seconds...
pub const MIN_OVERLAP_SECONDS: f64 = 0.030;
/// ...or more than this fraction of its duration.
pub const MIN_OVERLAP_FRACTION: f64 = 0.5;

/// n-gram lengths delimiting the discoverable part and the type lexicon.
pub const MIN_NGRAM: usize = 3;
pub const MAX_NGRAM: usize = 20;

const FP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedFragment {
    pub fragment: Fragment,
    /// Half-open phone index range; empty spans sit at the phone boundary
    /// nearest the fragment midpoint.
    pub phone_span: (usize, usize),
    /// Gold phones of the span, silence removed.
    pub transcript: Vec<String>,
}

impl ProjectedFragment {
    pub fn is_empty(&self) -> bool {
        self.transcript.is_empty()
    }
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Projects a fragment onto the phones of its utterance.
pub fn project(fragment: &Fragment, utt: &Utterance) -> ProjectedFragment {
    let phones = &utt.phones;
    let iv = (fragment.onset, fragment.offset);
    let first = phones.partition_point(|p| p.offset <= fragment.onset);
    let mut span: Option<(usize, usize)> = None;
    for (k, p) in phones.iter().enumerate().skip(first) {
        if p.onset >= fragment.offset {
            break;
        }
        let ov = overlap(iv, (p.onset, p.offset));
        if ov > MIN_OVERLAP_SECONDS + FP_SLACK
            || ov > MIN_OVERLAP_FRACTION * p.duration() + FP_SLACK
        {
            span = Some(match span {
                None => (k, k + 1),
                Some((s, _)) => (s, k + 1),
            });
        }
    }
    let phone_span = span.unwrap_or_else(|| {
        let mid = 0.5 * (fragment.onset + fragment.offset);
        let k = (0..=phones.len())
            .min_by(|&i, &j| {
                (utt.boundary_time(i) - mid)
                    .abs()
                    .total_cmp(&(utt.boundary_time(j) - mid).abs())
            })
            .unwrap_or(0);
        (k, k)
    });
    let transcript = phones[phone_span.0..phone_span.1]
        .iter()
        .filter(|p| p.phone != SILENCE)
        .map(|p| p.phone.clone())
        .collect();
    ProjectedFragment {
        fragment: fragment.clone(),
        phone_span,
        transcript,
    }
}

/// Projected fragments, cluster by cluster in class-id order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Projection {
    pub clusters: Vec<(String, Vec<ProjectedFragment>)>,
}

impl Projection {
    /// Validates and projects every fragment.
    pub fn new(clusters: &ClusterSet, corpus: &GoldCorpus) -> Result<Self> {
        clusters.validate(corpus)?;
        let list: Vec<(&String, &Vec<Fragment>)> = clusters.clusters.iter().collect();
        let clusters = list
            .par_iter()
            .map(|(id, frags)| {
                let projected = frags
                    .iter()
                    .map(|f| project(f, corpus.get(&f.utterance).expect("validated")))
                    .collect::<Vec<_>>();
                ((*id).clone(), projected)
            })
            .collect();
        Ok(Projection { clusters })
    }

    pub fn fragments(&self) -> impl Iterator<Item = &ProjectedFragment> {
        self.clusters.iter().flat_map(|(_, f)| f)
    }
}

/// Unit-cost Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(row[j + 1] + 1);
        }
    }
    row[b.len()]
}

pub fn normalized_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    edit_distance(a, b) as f64 / a.len().max(b.len()) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NedScore {
    pub ned: f64,
    pub pairs: usize,
    pub skipped_pairs: usize,
}

/// Mean normalized edit distance over within-cluster fragment pairs.
///
/// Pairs are tallied by their (distance, length) fraction and summed in
/// key order, so the result does not depend on cluster order.
pub fn ned(projection: &Projection) -> Result<NedScore> {
    let per_cluster: Vec<(BTreeMap<(usize, usize), u64>, usize)> = projection
        .clusters
        .par_iter()
        .map(|(_, frags)| {
            let (mut tally, mut skipped) = (BTreeMap::new(), 0);
            for (i, a) in frags.iter().enumerate() {
                for b in &frags[i + 1..] {
                    if a.is_empty() || b.is_empty() {
                        skipped += 1;
                    } else {
                        let key = (
                            edit_distance(&a.transcript, &b.transcript),
                            a.transcript.len().max(b.transcript.len()),
                        );
                        *tally.entry(key).or_insert(0u64) += 1;
                    }
                }
            }
            (tally, skipped)
        })
        .collect();
    let (mut tally, mut skipped) = (BTreeMap::new(), 0);
    for (t, k) in per_cluster {
        for (key, n) in t {
            *tally.entry(key).or_insert(0u64) += n;
        }
        skipped += k;
    }
    let pairs: u64 = tally.values().sum();
    if pairs == 0 {
        return Err(Error::NoValidPairs);
    }
    let sum: f64 = tally
        .into_iter()
        .map(|((d, len), n)| n as f64 * d as f64 / len as f64)
        .sum();
    Ok(NedScore {
        ned: sum / pairs as f64,
        pairs: pairs as usize,
        skipped_pairs: skipped,
    })
}

/// Marks the phones covered by a SIL-free n-gram (3 <= n <= 20) whose
/// transcript occurs at least twice in the corpus.
pub fn discoverable_part(corpus: &GoldCorpus) -> BTreeMap<String, Vec<bool>> {
    let mut symbols: HashMap<&str, u32> = HashMap::new();
    let coded: Vec<(&str, Vec<Option<u32>>)> = corpus
        .iter()
        .map(|u| {
            let ids = u
                .phones
                .iter()
                .map(|p| {
                    (p.phone != SILENCE).then(|| {
                        let next = symbols.len() as u32;
                        *symbols.entry(p.phone.as_str()).or_insert(next)
                    })
                })
                .collect();
            (u.id.as_str(), ids)
        })
        .collect();
    // contiguous SIL-free runs
    let runs: Vec<(usize, usize, Vec<u32>)> = coded
        .iter()
        .enumerate()
        .flat_map(|(ui, (_, ids))| {
            let mut out = Vec::new();
            let mut k = 0;
            while k < ids.len() {
                if ids[k].is_none() {
                    k += 1;
                    continue;
                }
                let start = k;
                while k < ids.len() && ids[k].is_some() {
                    k += 1;
                }
                let syms = ids[start..k].iter().map(|s| s.expect("run")).collect();
                out.push((ui, start, syms));
            }
            out
        })
        .collect();

    let mut marks: Vec<Vec<bool>> = coded
        .iter()
        .map(|(_, ids)| vec![false; ids.len()])
        .collect();
    for n in MIN_NGRAM..=MAX_NGRAM {
        let mut counts: HashMap<&[u32], u32> = HashMap::new();
        for (_, _, syms) in &runs {
            for w in syms.windows(n) {
                *counts.entry(w).or_default() += 1;
            }
        }
        for (ui, start, syms) in &runs {
            for (i, w) in syms.windows(n).enumerate() {
                if counts[w] >= 2 {
                    marks[*ui][start + i..start + i + n]
                        .iter_mut()
                        .for_each(|m| *m = true);
                }
            }
        }
    }
    coded
        .iter()
        .map(|(id, _)| id.to_string())
        .zip(marks)
        .collect()
}

/// Share of discoverable phones lying inside some fragment's span.
pub fn coverage(
    projection: &Projection,
    discoverable: &BTreeMap<String, Vec<bool>>,
) -> Result<f64> {
    let total: usize = discoverable
        .values()
        .map(|m| m.iter().filter(|&&d| d).count())
        .sum();
    if total == 0 {
        return Err(Error::EmptyDiscoverablePart);
    }
    let mut covered: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for f in projection.fragments() {
        let marks = &discoverable[&f.fragment.utterance];
        let cov = covered
            .entry(f.fragment.utterance.as_str())
            .or_insert_with(|| vec![false; marks.len()]);
        for k in f.phone_span.0..f.phone_span.1 {
            cov[k] |= marks[k];
        }
    }
    let hit: usize = covered
        .values()
        .map(|c| c.iter().filter(|&&x| x).count())
        .sum();
    Ok(hit as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let fscore = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            fscore,
        }
    }

    fn ratio(hits: usize, discovered: usize, gold: usize) -> Self {
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Prf::new(div(hits, discovered), div(hits, gold))
    }
}

fn choose2(n: usize) -> u64 {
    (n as u64) * (n.saturating_sub(1) as u64) / 2
}

/// Pairs with a positive time intersection among fragments of one
/// utterance.
fn overlapping_pairs(mut intervals: Vec<(f64, f64)>) -> u64 {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut n = 0;
    for (i, a) in intervals.iter().enumerate() {
        for b in &intervals[i + 1..] {
            if b.0 >= a.1 {
                break;
            }
            n += 1;
        }
    }
    n
}

fn non_overlapping_pairs<'a>(frags: impl IntoIterator<Item = &'a ProjectedFragment>) -> u64 {
    let mut by_utt: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    let mut total = 0;
    for f in frags {
        by_utt
            .entry(&f.fragment.utterance)
            .or_default()
            .push((f.fragment.onset, f.fragment.offset));
        total += 1;
    }
    choose2(total) - by_utt.into_values().map(overlapping_pairs).sum::<u64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupingScore {
    pub scores: Prf,
    pub cluster_pairs: u64,
    pub gold_pairs: u64,
}

/// Grouping precision and recall.
///
/// Within-cluster pairs are compared against the non-overlapping pairs of
/// discovered fragments sharing a transcript. Per type `t`, precision
/// weighs `|same-type good pairs| / |cluster pairs containing t|` by the
/// share of pair memberships held by `t`; recall weighs the good share of
/// gold pairs of `t` by the share of gold pairs of type `t`. Fragments with
/// empty transcripts take no part.
pub fn grouping(projection: &Projection) -> GroupingScore {
    // numbered in transcript order so sums do not follow cluster order
    let type_ids: BTreeMap<&[String], usize> = projection
        .fragments()
        .filter(|f| !f.is_empty())
        .map(|f| f.transcript.as_slice())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let n_types = type_ids.len();
    let mut occ = vec![0u64; n_types];
    let mut with_type = vec![0u64; n_types];
    let mut good = vec![0u64; n_types];
    let mut cluster_pairs = 0;
    for (_, frags) in &projection.clusters {
        let valid: Vec<&ProjectedFragment> = frags.iter().filter(|f| !f.is_empty()).collect();
        let n = valid.len();
        cluster_pairs += choose2(n);
        let mut by_type: BTreeMap<usize, Vec<&ProjectedFragment>> = BTreeMap::new();
        for f in &valid {
            by_type
                .entry(type_ids[f.transcript.as_slice()])
                .or_default()
                .push(f);
        }
        for (t, members) in by_type {
            let c = members.len();
            occ[t] += (c * (n - 1)) as u64;
            with_type[t] += choose2(n) - choose2(n - c);
            good[t] += non_overlapping_pairs(members);
        }
    }
    let mut all_by_type: Vec<Vec<&ProjectedFragment>> = vec![Vec::new(); n_types];
    for f in projection.fragments().filter(|f| !f.is_empty()) {
        all_by_type[type_ids[f.transcript.as_slice()]].push(f);
    }
    let gold: Vec<u64> = all_by_type.into_iter().map(non_overlapping_pairs).collect();
    let gold_pairs: u64 = gold.iter().sum();

    // The recall weights cancel: sum_t good_t / sum_t gold_t.
    let occ_total: u64 = occ.iter().sum();
    let mut weighted = 0.0;
    for t in 0..n_types {
        if with_type[t] > 0 {
            weighted += occ[t] as f64 * (good[t] as f64 / with_type[t] as f64);
        }
    }
    let precision = if occ_total > 0 {
        weighted / occ_total as f64
    } else {
        0.0
    };
    let good_total: u64 = good.iter().sum();
    let recall = if gold_pairs > 0 {
        good_total as f64 / gold_pairs as f64
    } else {
        0.0
    };
    GroupingScore {
        scores: Prf::new(precision, recall),
        cluster_pairs,
        gold_pairs,
    }
}

fn in_lexicon_range(t: &[String]) -> bool {
    (MIN_NGRAM..=MAX_NGRAM).contains(&t.len())
}

fn word_transcript(utt: &Utterance, span: (usize, usize)) -> Vec<String> {
    utt.phones[span.0..span.1]
        .iter()
        .filter(|p| p.phone != SILENCE)
        .map(|p| p.phone.clone())
        .collect()
}

/// Type precision and recall against the gold lexicon (3 to 20 phones).
pub fn type_scores(projection: &Projection, corpus: &GoldCorpus) -> Prf {
    let discovered: BTreeSet<&[String]> = projection
        .fragments()
        .map(|f| f.transcript.as_slice())
        .filter(|t| in_lexicon_range(t))
        .collect();
    let gold: BTreeSet<Vec<String>> = corpus
        .iter()
        .flat_map(|u| {
            u.words
                .iter()
                .map(move |w| word_transcript(u, w.phone_span))
        })
        .filter(|t| in_lexicon_range(t))
        .collect();
    let hits = discovered.iter().filter(|t| gold.contains(**t)).count();
    Prf::ratio(hits, discovered.len(), gold.len())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SegmentationScore {
    pub token: Prf,
    pub boundary: Prf,
}

/// Token and boundary scores against the gold word segmentation.
///
/// Boundaries are phone positions strictly inside an utterance.
pub fn segmentation(projection: &Projection, corpus: &GoldCorpus) -> SegmentationScore {
    let mut tokens: BTreeSet<(&str, usize, usize)> = BTreeSet::new();
    let mut bounds: BTreeSet<(&str, usize)> = BTreeSet::new();
    for f in projection.fragments() {
        let utt = f.fragment.utterance.as_str();
        let len = corpus.get(utt).map_or(0, |u| u.phones.len());
        let (s, e) = f.phone_span;
        for k in [s, e] {
            if k > 0 && k < len {
                bounds.insert((utt, k));
            }
        }
        if e > s {
            tokens.insert((utt, s, e));
        }
    }
    let mut gold_tokens: BTreeSet<(&str, usize, usize)> = BTreeSet::new();
    let mut gold_bounds: BTreeSet<(&str, usize)> = BTreeSet::new();
    for u in corpus.iter() {
        let len = u.phones.len();
        for w in &u.words {
            let (s, e) = w.phone_span;
            gold_tokens.insert((&u.id, s, e));
            for k in [s, e] {
                if k > 0 && k < len {
                    gold_bounds.insert((&u.id, k));
                }
            }
        }
    }
    let token_hits = tokens.intersection(&gold_tokens).count();
    let bound_hits = bounds.intersection(&gold_bounds).count();
    SegmentationScore {
        token: Prf::ratio(token_hits, tokens.len(), gold_tokens.len()),
        boundary: Prf::ratio(bound_hits, bounds.len(), gold_bounds.len()),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TdeCounts {
    pub clusters: usize,
    pub fragments: usize,
    pub empty_fragments: usize,
    pub ned_pairs: usize,
    pub ned_skipped_pairs: usize,
    pub cluster_pairs: u64,
    pub gold_pairs: u64,
    pub discoverable_phones: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TdeReport {
    pub ned: f64,
    pub coverage: f64,
    pub grouping: Prf,
    #[serde(rename = "type")]
    pub types: Prf,
    pub token: Prf,
    pub boundary: Prf,
    pub counts: TdeCounts,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// All term discovery scores for a class file. Undefined scores are
/// reported as 0 with a warning.
pub fn run_tde(clusters: &ClusterSet, corpus: &GoldCorpus) -> Result<TdeReport> {
    let projection = Projection::new(clusters, corpus)?;
    let mut warnings = Vec::new();
    let mut counts = TdeCounts {
        clusters: projection.clusters.len(),
        fragments: projection.fragments().count(),
        empty_fragments: projection.fragments().filter(|f| f.is_empty()).count(),
        ..TdeCounts::default()
    };
    if counts.empty_fragments > 0 {
        warnings.push(format!(
            "{} fragments project to an empty transcript",
            counts.empty_fragments
        ));
    }

    let ned = match ned(&projection) {
        Ok(s) => {
            counts.ned_pairs = s.pairs;
            counts.ned_skipped_pairs = s.skipped_pairs;
            s.ned
        }
        Err(e) => {
            warnings.push(format!("ned: {e}; reported as 0"));
            0.0
        }
    };

    let discoverable = discoverable_part(corpus);
    counts.discoverable_phones = discoverable
        .values()
        .map(|m| m.iter().filter(|&&d| d).count())
        .sum();
    let coverage = coverage(&projection, &discoverable).unwrap_or_else(|e| {
        warnings.push(format!("coverage: {e}; reported as 0"));
        0.0
    });

    let group = grouping(&projection);
    counts.cluster_pairs = group.cluster_pairs;
    counts.gold_pairs = group.gold_pairs;
    if group.cluster_pairs == 0 || group.gold_pairs == 0 {
        warnings.push(format!(
            "grouping: {}; undefined terms reported as 0",
            Error::EmptyPairSet
        ));
    }
    let types = type_scores(&projection, corpus);
    let seg = segmentation(&projection, corpus);

    Ok(TdeReport {
        ned,
        coverage,
        grouping: group.scores,
        types,
        token: seg.token,
        boundary: seg.boundary,
        counts,
        warnings,
    })
}

pub fn run_tde_file(class_file: &Path, corpus: &GoldCorpus) -> Result<TdeReport> {
    let clusters = corpus::read_class_file(class_file)?;
    run_tde(&clusters, corpus).map_err(|e| e.in_file(class_file))
}

/// One cluster per gold word type, holding all of its occurrences.
pub fn gold_word_clusters(corpus: &GoldCorpus) -> ClusterSet {
    let mut by_type: BTreeMap<Vec<String>, Vec<Fragment>> = BTreeMap::new();
    for u in corpus.iter() {
        for w in &u.words {
            by_type
                .entry(word_transcript(u, w.phone_span))
                .or_default()
                .push(Fragment {
                    utterance: u.id.clone(),
                    onset: w.onset,
                    offset: w.offset,
                });
        }
    }
    let clusters = by_type
        .into_values()
        .enumerate()
        .map(|(i, frags)| (format!("{}", i + 1), frags))
        .collect();
    ClusterSet { clusters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_phone_alignment, parse_word_alignment};

    fn corpus(phones: &str, words: &str) -> GoldCorpus {
        let p = parse_phone_alignment(phones).unwrap();
        let w = parse_word_alignment(words, &p).unwrap();
        GoldCorpus::from_layers(p, Some(w), None, None).unwrap()
    }

    fn son() -> GoldCorpus {
        corpus(
            "u 0.00 0.10 s\nu 0.10 0.20 o\nu 0.20 0.30 n\n",
            "u 0.0 0.3 son\n",
        )
    }

    fn frag(u: &str, on: f64, off: f64) -> Fragment {
        Fragment {
            utterance: u.into(),
            onset: on,
            offset: off,
        }
    }

    fn transcript(c: &GoldCorpus, on: f64, off: f64) -> Vec<String> {
        project(&frag("u", on, off), c.get("u").unwrap()).transcript
    }

    #[test]
    fn projection_rule() {
        let c = son();
        assert_eq!(transcript(&c, 0.08, 0.22), vec!["o"]);
        assert_eq!(transcript(&c, 0.00, 0.14), vec!["s", "o"]);
        assert_eq!(transcript(&c, 0.10, 0.20), vec!["o"]);
        assert!(transcript(&c, 0.09, 0.11).is_empty());
    }

    #[test]
    fn short_phone_kept_by_fraction() {
        let c = corpus("u 0.00 0.04 a\nu 0.04 0.20 b\n", "u 0 0.2 ab\n");
        // 25 ms of a 40 ms phone: under 30 ms but over half
        assert_eq!(transcript(&c, 0.015, 0.20), vec!["a", "b"]);
    }

    #[test]
    fn levenshtein() {
        let s = |x: &str| x.split(' ').map(String::from).collect::<Vec<_>>();
        assert_eq!(normalized_edit_distance(&s("r o s e"), &s("r o s e")), 0.0);
        assert_eq!(
            normalized_edit_distance(&s("r o s e"), &s("p r o s e")),
            0.2
        );
        assert_eq!(normalized_edit_distance(&s("a b"), &s("c d")), 1.0);
        assert_eq!(edit_distance::<u8>(&[], &[1, 2]), 2);
        assert_eq!(edit_distance(b"kitten", b"sitting"), 3);
    }

    #[test]
    fn discoverable_repeats() {
        let two = corpus(
            "u 0 0.1 a\nu 0.1 0.2 b\nu 0.2 0.3 c\nv 0 0.1 a\nv 0.1 0.2 b\nv 0.2 0.3 c\n",
            "",
        );
        let d = discoverable_part(&two);
        assert!(d.values().flatten().all(|&x| x));
        let one = corpus("u 0 0.1 a\nu 0.1 0.2 b\nu 0.2 0.3 c\n", "");
        assert!(discoverable_part(&one).values().flatten().all(|&x| !x));
        let embedded = corpus(
            "u 0 0.1 x\nu 0.1 0.2 a\nu 0.2 0.3 b\nu 0.3 0.4 c\nu 0.4 0.5 y\nv 0 0.1 a\nv 0.1 0.2 b\nv 0.2 0.3 c\n",
            "",
        );
        assert_eq!(
            discoverable_part(&embedded)["u"],
            vec![false, true, true, true, false]
        );
    }

    fn clusters(spec: &[(&str, &[(&str, f64, f64)])]) -> ClusterSet {
        ClusterSet {
            clusters: spec
                .iter()
                .map(|(id, frags)| {
                    (
                        id.to_string(),
                        frags.iter().map(|&(u, a, b)| frag(u, a, b)).collect(),
                    )
                })
                .collect(),
        }
    }

    fn abc_twice() -> GoldCorpus {
        corpus(
            "u 0 0.1 a\nu 0.1 0.2 b\nu 0.2 0.3 c\nu 0.3 0.4 d\nv 0 0.1 a\nv 0.1 0.2 b\nv 0.2 0.3 c\nv 0.3 0.4 e\n",
            "u 0 0.3 abc\nu 0.3 0.4 d\nv 0 0.3 abc\nv 0.3 0.4 e\n",
        )
    }

    #[test]
    fn coverage_counts_phones() {
        let c = abc_twice();
        let none = Projection::new(&ClusterSet::default(), &c).unwrap();
        let disc = discoverable_part(&c);
        assert_eq!(coverage(&none, &disc).unwrap(), 0.0);
        let half = Projection::new(&clusters(&[("1", &[("u", 0.0, 0.3)])]), &c).unwrap();
        assert_eq!(coverage(&half, &disc).unwrap(), 0.5);
        let all =
            Projection::new(&clusters(&[("1", &[("u", 0.0, 0.4), ("v", 0.0, 0.4)])]), &c).unwrap();
        assert_eq!(coverage(&all, &disc).unwrap(), 1.0);
    }

    #[test]
    fn grouping_examples() {
        let c = abc_twice();
        let same =
            Projection::new(&clusters(&[("1", &[("u", 0.0, 0.3), ("v", 0.0, 0.3)])]), &c).unwrap();
        let g = grouping(&same).scores;
        assert_eq!((g.precision, g.recall), (1.0, 1.0));

        let mixed =
            Projection::new(&clusters(&[("1", &[("u", 0.0, 0.3), ("v", 0.3, 0.4)])]), &c).unwrap();
        let g = grouping(&mixed);
        assert_eq!(g.scores, Prf::new(0.0, 0.0));
        assert_eq!(g.gold_pairs, 0);

        // four "abc" fragments in two pure clusters: 2 of 6 gold pairs found
        let c4 = corpus(
            "u 0 0.1 a\nu 0.1 0.2 b\nu 0.2 0.3 c\nu 0.3 0.4 a\nu 0.4 0.5 b\nu 0.5 0.6 c\n\
             v 0 0.1 a\nv 0.1 0.2 b\nv 0.2 0.3 c\nv 0.3 0.4 a\nv 0.4 0.5 b\nv 0.5 0.6 c\n",
            "",
        );
        let split = Projection::new(
            &clusters(&[
                ("1", &[("u", 0.0, 0.3), ("u", 0.3, 0.6)]),
                ("2", &[("v", 0.0, 0.3), ("v", 0.3, 0.6)]),
            ]),
            &c4,
        )
        .unwrap();
        let g = grouping(&split).scores;
        assert_eq!(g.precision, 1.0);
        assert!((g.recall - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_pairs_only_leave_gold_set() {
        let c = abc_twice();
        let p =
            Projection::new(&clusters(&[("1", &[("u", 0.0, 0.3), ("u", 0.0, 0.3)])]), &c).unwrap();
        let g = grouping(&p);
        assert_eq!((g.cluster_pairs, g.gold_pairs), (1, 0));
        assert_eq!(g.scores.precision, 0.0);
    }

    #[test]
    fn type_filter() {
        let c = abc_twice();
        let exact = Projection::new(&clusters(&[("1", &[("u", 0.0, 0.3)])]), &c).unwrap();
        assert_eq!(type_scores(&exact, &c), Prf::new(1.0, 1.0));
        let junk =
            Projection::new(&clusters(&[("1", &[("u", 0.0, 0.3), ("u", 0.1, 0.4)])]), &c).unwrap();
        assert_eq!(type_scores(&junk, &c), Prf::new(0.5, 1.0));
        let short =
            Projection::new(&clusters(&[("1", &[("u", 0.0, 0.3), ("u", 0.2, 0.4)])]), &c).unwrap();
        assert_eq!(type_scores(&short, &c), Prf::new(1.0, 1.0));
    }

    #[test]
    fn segmentation_examples() {
        let c = corpus(
            "u 0 0.1 a\nu 0.1 0.2 b\nu 0.2 0.3 c\nu 0.3 0.4 d\nu 0.4 0.5 e\nu 0.5 0.6 f\n",
            "u 0 0.2 ab\nu 0.2 0.4 cd\nu 0.4 0.6 ef\n",
        );
        let gold = Projection::new(&gold_word_clusters(&c), &c).unwrap();
        let s = segmentation(&gold, &c);
        assert_eq!((s.token.fscore, s.boundary.fscore), (1.0, 1.0));

        let whole = Projection::new(&clusters(&[("1", &[("u", 0.0, 0.6)])]), &c).unwrap();
        let s = segmentation(&whole, &c);
        assert_eq!(s.token.fscore, 0.0);
        assert_eq!((s.boundary.precision, s.boundary.recall), (0.0, 0.0));

        let halves =
            Projection::new(&clusters(&[("1", &[("u", 0.0, 0.1), ("u", 0.1, 0.2)])]), &c).unwrap();
        let s = segmentation(&halves, &c);
        assert_eq!(s.token.precision, 0.0);
        assert!(s.boundary.precision < 1.0);
    }

    #[test]
    fn gold_words_score_perfectly() {
        let c = abc_twice();
        let r = run_tde(&gold_word_clusters(&c), &c).unwrap();
        assert_eq!(r.ned, 0.0);
        assert_eq!(r.grouping, Prf::new(1.0, 1.0));
        assert_eq!(r.types.fscore, 1.0);
        assert_eq!(r.token.fscore, 1.0);
        assert_eq!(r.boundary.fscore, 1.0);
    }

    #[test]
    fn empty_class_file_scores_zero() {
        let c = abc_twice();
        let r = run_tde(&ClusterSet::default(), &c).unwrap();
        assert_eq!(r.ned, 0.0);
        assert_eq!(r.coverage, 0.0);
        assert_eq!(r.grouping, Prf::default());
        assert_eq!(r.token, Prf::default());
        assert!(!r.warnings.is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn projection_is_monotone(on in 0.0f64..0.3, len in 0.001f64..0.3, grow_l in 0.0f64..0.1, grow_r in 0.0f64..0.1) {
                let c = son();
                let u = c.get("u").unwrap();
                let off = (on + len).min(0.3);
                prop_assume!(off > on);
                let small = project(&frag("u", on, off), u);
                let big = project(&frag("u", (on - grow_l).max(0.0), (off + grow_r).min(0.3)), u);
                if !small.is_empty() {
                    prop_assert!(big.phone_span.0 <= small.phone_span.0 && small.phone_span.1 <= big.phone_span.1);
                }
            }

            #[test]
            fn ned_symmetric(a in prop::collection::vec(0u8..4, 1..8), b in prop::collection::vec(0u8..4, 1..8)) {
                prop_assert_eq!(normalized_edit_distance(&a, &b), normalized_edit_distance(&b, &a));
                let v = normalized_edit_distance(&a, &b);
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
