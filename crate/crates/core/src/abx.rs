//! Minimal-pair ABX discriminability over triphone tokens.
//!
//! Items are triphones of the gold alignment; a cell pairs two center
//! phones sharing a context (and speaker constraint). Each cell's
//! symmetrized discriminability is averaged over speakers, then contexts,
//! then phone pairs, and reported as an error rate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, FeatureSequence, FrameSlice, GoldCorpus, SILENCE};
use crate::dissim::{self, DissimKind, Normalization, PreparedFrames};
use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriphoneItem {
    pub utterance: String,
    pub onset: f64,
    pub offset: f64,
    pub center: String,
    pub context: (String, String),
    pub speaker: String,
}

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Within,
    Across,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Within => "within",
            Mode::Across => "across",
        }
    }
}

/// One triphone per window of three consecutive phones, none of which is
/// silence or in `exclude`.
pub fn extract_items(corpus: &GoldCorpus, exclude: &BTreeSet<String>) -> Vec<TriphoneItem> {
    let mut items = Vec::new();
    for utt in corpus.iter() {
        for w in utt.phones.windows(3) {
            if w.iter()
                .any(|p| p.phone == SILENCE || exclude.contains(&p.phone))
            {
                continue;
            }
            items.push(TriphoneItem {
                utterance: utt.id.clone(),
                onset: w[0].onset,
                offset: w[2].offset,
                center: w[1].phone.clone(),
                context: (w[0].phone.clone(), w[2].phone.clone()),
                speaker: utt.speaker.clone(),
            });
        }
    }
    items
}

const ITEM_HEADER: &str = "#file onset offset #phone prev-phone next-phone speaker";

pub fn format_item_file(items: &[TriphoneItem]) -> String {
    let mut out = format!("{ITEM_HEADER}\n");
    for it in items {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            it.utterance, it.onset, it.offset, it.center, it.context.0, it.context.1, it.speaker
        );
    }
    out
}

/// Parses an item file; lines starting with `#` are headers or comments.
pub fn parse_item_file(text: &str) -> Result<Vec<TriphoneItem>> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(Error::malformed(
                i + 1,
                format!("expected 7 fields, found {}", f.len()),
            ));
        }
        let time = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite() && *t >= 0.0)
                .ok_or_else(|| Error::malformed(i + 1, format!("invalid time {s:?}")))
        };
        let (onset, offset) = (time(f[1])?, time(f[2])?);
        if offset <= onset {
            return Err(Error::malformed(i + 1, "offset must be greater than onset"));
        }
        items.push(TriphoneItem {
            utterance: f[0].to_string(),
            onset,
            offset,
            center: f[3].to_string(),
            context: (f[4].to_string(), f[5].to_string()),
            speaker: f[6].to_string(),
        });
    }
    Ok(items)
}

pub fn read_item_file(path: &Path) -> Result<Vec<TriphoneItem>> {
    parse_item_file(&read_to_string(path)?).map_err(|e| e.in_file(path))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum SpeakerKey {
    Within(String),
    /// Speaker of `a` and `b`, then speaker of `x`.
    Across(String, String),
}

/// A scored minimal-pair cell. Items are indices into the item list.
///
/// `a`/`b` hold the tokens of the two centers; `x_a`/`x_b` the X
/// candidates for each direction. In within mode `x_a == a` and the
/// `x != a` exclusion applies; across, the X pools come from the other
/// speaker.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbxCell {
    pub mode: Mode,
    pub pair: (String, String),
    pub context: (String, String),
    pub speakers: SpeakerKey,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub x_a: Vec<usize>,
    pub x_b: Vec<usize>,
}

impl AbxCell {
    fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.x_a)
            .chain(&self.x_b)
            .copied()
    }

    fn meets_minimum(&self) -> bool {
        match self.mode {
            Mode::Within => self.a.len() >= 2 && self.b.len() >= 2,
            Mode::Across => {
                !self.a.is_empty()
                    && !self.b.is_empty()
                    && !self.x_a.is_empty()
                    && !self.x_b.is_empty()
            }
        }
    }

    /// Drops items rejected by `keep`; fails if the cell falls below the
    /// minimum counts.
    pub fn retain(&self, keep: impl Fn(usize) -> bool) -> Result<AbxCell> {
        let f = |v: &[usize]| v.iter().copied().filter(|&i| keep(i)).collect::<Vec<_>>();
        let cell = AbxCell {
            a: f(&self.a),
            b: f(&self.b),
            x_a: f(&self.x_a),
            x_b: f(&self.x_b),
            ..self.clone()
        };
        if cell.meets_minimum() {
            Ok(cell)
        } else {
            Err(Error::DegenerateCell)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CellEnumeration {
    pub cells: Vec<AbxCell>,
    /// Candidate cells rejected for having too few tokens.
    pub skipped: usize,
}

type CenterMap = BTreeMap<String, Vec<usize>>;

/// Enumerates all cells of `mode`, sorted by (pair, context, speakers).
pub fn enumerate_cells(items: &[TriphoneItem], mode: Mode) -> CellEnumeration {
    let mut out = CellEnumeration::default();
    match mode {
        Mode::Within => {
            let mut buckets: BTreeMap<(&(String, String), &str), CenterMap> = BTreeMap::new();
            for (i, it) in items.iter().enumerate() {
                buckets
                    .entry((&it.context, it.speaker.as_str()))
                    .or_default()
                    .entry(it.center.clone())
                    .or_default()
                    .push(i);
            }
            for ((context, speaker), centers) in buckets {
                let list: Vec<(&String, &Vec<usize>)> = centers.iter().collect();
                for (i, (p1, a)) in list.iter().enumerate() {
                    for (p2, b) in &list[i + 1..] {
                        if a.len() < 2 || b.len() < 2 {
                            out.skipped += 1;
                            continue;
                        }
                        out.cells.push(AbxCell {
                            mode,
                            pair: ((*p1).clone(), (*p2).clone()),
                            context: context.clone(),
                            speakers: SpeakerKey::Within(speaker.to_string()),
                            a: (*a).clone(),
                            b: (*b).clone(),
                            x_a: (*a).clone(),
                            x_b: (*b).clone(),
                        });
                    }
                }
            }
        }
        Mode::Across => {
            let mut buckets: BTreeMap<&(String, String), BTreeMap<&str, CenterMap>> =
                BTreeMap::new();
            for (i, it) in items.iter().enumerate() {
                buckets
                    .entry(&it.context)
                    .or_default()
                    .entry(it.speaker.as_str())
                    .or_default()
                    .entry(it.center.clone())
                    .or_default()
                    .push(i);
            }
            for (context, speakers) in buckets {
                for (s_ab, centers) in &speakers {
                    let list: Vec<(&String, &Vec<usize>)> = centers.iter().collect();
                    for (s_x, x_centers) in &speakers {
                        if s_x == s_ab {
                            continue;
                        }
                        for (i, (p1, a)) in list.iter().enumerate() {
                            for (p2, b) in &list[i + 1..] {
                                let (xa, xb) = (x_centers.get(*p1), x_centers.get(*p2));
                                match (xa, xb) {
                                    (Some(xa), Some(xb)) => out.cells.push(AbxCell {
                                        mode,
                                        pair: ((*p1).clone(), (*p2).clone()),
                                        context: context.clone(),
                                        speakers: SpeakerKey::Across(
                                            s_ab.to_string(),
                                            s_x.to_string(),
                                        ),
                                        a: (*a).clone(),
                                        b: (*b).clone(),
                                        x_a: xa.clone(),
                                        x_b: xb.clone(),
                                    }),
                                    (None, None) => {}
                                    _ => out.skipped += 1,
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out.cells.sort_by(|x, y| {
        (&x.pair, &x.context, &x.speakers).cmp(&(&y.pair, &y.context, &y.speakers))
    });
    out
}

/// One direction of the discriminability: share of (a, b, x) triples with
/// `d(a, x) < d(b, x)`, ties counting one half.
fn one_direction(a: &[usize], b: &[usize], x: &[usize], d: &impl Fn(usize, usize) -> f64) -> f64 {
    // twice the score, kept integral so the sum is exact
    let mut score: u64 = 0;
    let mut triples: u64 = 0;
    for &ai in a {
        for &xi in x {
            if xi == ai {
                continue;
            }
            let dax = d(ai, xi);
            for &bi in b {
                let dbx = d(bi, xi);
                if dax < dbx {
                    score += 2;
                } else if dax == dbx {
                    score += 1;
                }
                triples += 1;
            }
        }
    }
    score as f64 / (2 * triples) as f64
}

/// Symmetrized discriminability of a cell under the token dissimilarity
/// `d(token, x)`.
pub fn delta_by(cell: &AbxCell, d: impl Fn(usize, usize) -> f64) -> Result<f64> {
    if !cell.meets_minimum() {
        return Err(Error::DegenerateCell);
    }
    let ab = one_direction(&cell.a, &cell.b, &cell.x_a, &d);
    let ba = one_direction(&cell.b, &cell.a, &cell.x_b, &d);
    Ok((ab + ba) / 2.0)
}

/// Symmetrized discriminability of a cell from per-item frame slices.
///
/// Items whose slice is `None` are dropped first.
pub fn delta(
    cell: &AbxCell,
    slices: &[Option<FrameSlice<'_>>],
    kind: DissimKind,
    norm: Normalization,
) -> Result<f64> {
    let cell = cell.retain(|i| slices.get(i).is_some_and(Option::is_some))?;
    let mut prepared: BTreeMap<usize, PreparedFrames> = BTreeMap::new();
    for i in cell.members() {
        if let std::collections::btree_map::Entry::Vacant(e) = prepared.entry(i) {
            let frames = slices[i].expect("retained");
            e.insert(PreparedFrames::new(frames, kind)?);
        }
    }
    let mut dist = BTreeMap::new();
    let mut buf = Vec::new();
    for (&i, pi) in &prepared {
        for (&j, pj) in &prepared {
            if i != j {
                pi.cost_matrix(pj, &mut buf)?;
                dist.insert((i, j), dissim::align(&buf, pi.len(), pj.len(), false, norm));
            }
        }
    }
    delta_by(&cell, |t, x| dist[&(t, x)])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCell {
    pub pair: (String, String),
    pub context: (String, String),
    pub speakers: SpeakerKey,
    pub delta: f64,
}

impl ScoredCell {
    pub fn new(cell: &AbxCell, delta: f64) -> Self {
        ScoredCell {
            pair: cell.pair.clone(),
            context: cell.context.clone(),
            speakers: cell.speakers.clone(),
            delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbxReport {
    pub mode: Mode,
    pub error_rate: f64,
    /// Error rate per phone pair, keyed `p1/p2`.
    pub pair_errors: BTreeMap<String, f64>,
    pub cells: usize,
    pub skipped_cells: usize,
    pub dropped_items: usize,
    pub warnings: Vec<String>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

/// Averages cells over speakers, then contexts, then phone pairs.
///
/// Cells are sorted by key before any reduction.
pub fn aggregate(cells: &[ScoredCell], mode: Mode) -> Result<AbxReport> {
    if cells.is_empty() {
        return Err(Error::NoCells);
    }
    let mut by_context: BTreeMap<
        (&(String, String), &(String, String)),
        BTreeMap<&SpeakerKey, f64>,
    > = BTreeMap::new();
    for c in cells {
        by_context
            .entry((&c.pair, &c.context))
            .or_default()
            .insert(&c.speakers, c.delta);
    }
    let mut by_pair: BTreeMap<&(String, String), Vec<f64>> = BTreeMap::new();
    for ((pair, _), speakers) in by_context {
        by_pair
            .entry(pair)
            .or_default()
            .push(mean(speakers.into_values()));
    }
    let pair_scores: BTreeMap<String, f64> = by_pair
        .into_iter()
        .map(|(pair, contexts)| (format!("{}/{}", pair.0, pair.1), mean(contexts)))
        .collect();
    let overall = mean(pair_scores.values().copied());
    Ok(AbxReport {
        mode,
        error_rate: 1.0 - overall,
        pair_errors: pair_scores.into_iter().map(|(k, v)| (k, 1.0 - v)).collect(),
        cells: cells.len(),
        skipped_cells: 0,
        dropped_items: 0,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbxConfig {
    pub mode: Mode,
    pub kind: DissimKind,
    pub norm: Normalization,
    /// Phones that never form items, in addition to silence.
    pub exclude: BTreeSet<String>,
}

impl AbxConfig {
    pub fn new(mode: Mode, kind: DissimKind) -> Self {
        AbxConfig {
            mode,
            kind,
            norm: Normalization::default(),
            exclude: BTreeSet::new(),
        }
    }
}

/// Full pipeline: mines items from the gold corpus and reads
/// `<feature_dir>/<utt>.txt` for every utterance holding items.
pub fn run_abx(corpus: &GoldCorpus, feature_dir: &Path, config: &AbxConfig) -> Result<AbxReport> {
    let items = extract_items(corpus, &config.exclude);
    let ids: BTreeSet<&str> = items.iter().map(|i| i.utterance.as_str()).collect();
    let features = corpus::load_feature_dir(feature_dir, ids)?;
    score_items(&items, &features, config)
}

/// Scores a prepared item list against in-memory features.
pub fn score_items(
    items: &[TriphoneItem],
    features: &BTreeMap<String, FeatureSequence>,
    config: &AbxConfig,
) -> Result<AbxReport> {
    let mut warnings = Vec::new();

    let prepared: Vec<Option<PreparedFrames>> = items
        .par_iter()
        .map(|it| {
            let seq = features
                .get(&it.utterance)
                .ok_or_else(|| Error::MissingFeatureFile(it.utterance.clone()))?;
            match seq.slice(it.onset, it.offset) {
                Ok(frames) => PreparedFrames::new(frames, config.kind)
                    .map(Some)
                    .map_err(|e| e.in_file(format!("{}.txt", it.utterance))),
                Err(Error::EmptySlice { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let dropped = prepared.iter().filter(|p| p.is_none()).count();
    if dropped > 0 {
        warnings.push(format!(
            "{dropped} items have no frames in their interval and were dropped"
        ));
    }
    if config.kind == DissimKind::Angular {
        let used: BTreeSet<&str> = items.iter().map(|i| i.utterance.as_str()).collect();
        let zeros: usize = used
            .iter()
            .filter_map(|id| features.get(*id))
            .map(|seq| {
                (0..seq.len())
                    .filter(|&i| dissim::is_zero(seq.frame(i)))
                    .count()
            })
            .sum();
        if zeros > 0 {
            warnings.push(format!(
                "{zeros} all-zero frames score 0.5 against every frame"
            ));
        }
    }

    let kept: Vec<usize> = (0..items.len())
        .filter(|&i| prepared[i].is_some())
        .collect();
    let kept_items: Vec<TriphoneItem> = kept.iter().map(|&i| items[i].clone()).collect();
    let frames: Vec<&PreparedFrames> = kept
        .iter()
        .map(|&i| prepared[i].as_ref().expect("kept"))
        .collect();
    let enumeration = enumerate_cells(&kept_items, config.mode);

    // Cells sharing a context (and speaker, within) reuse one distance matrix.
    let mut groups: BTreeMap<(&(String, String), Option<&str>), Vec<usize>> = BTreeMap::new();
    for (ci, cell) in enumeration.cells.iter().enumerate() {
        let speaker = match &cell.speakers {
            SpeakerKey::Within(s) => Some(s.as_str()),
            SpeakerKey::Across(..) => None,
        };
        groups.entry((&cell.context, speaker)).or_default().push(ci);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();

    let scored: Vec<Vec<(usize, f64)>> = groups
        .par_iter()
        .map(|cell_ids| -> Result<Vec<(usize, f64)>> {
            let members: Vec<usize> = cell_ids
                .iter()
                .flat_map(|&ci| enumeration.cells[ci].members())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let matrix = DistanceMatrix::compute(&members, &frames, config.norm)?;
            cell_ids
                .iter()
                .map(|&ci| {
                    delta_by(&enumeration.cells[ci], |t, x| matrix.get(t, x)).map(|d| (ci, d))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut flat: Vec<(usize, f64)> = scored.into_iter().flatten().collect();
    flat.sort_by_key(|&(ci, _)| ci);
    let scored_cells: Vec<ScoredCell> = flat
        .into_iter()
        .map(|(ci, d)| ScoredCell::new(&enumeration.cells[ci], d))
        .collect();

    let mut report = aggregate(&scored_cells, config.mode)?;
    report.skipped_cells = enumeration.skipped;
    report.dropped_items = dropped;
    report.warnings = warnings;
    Ok(report)
}

/// Ordered token dissimilarities `d(token, x)` among a set of items.
struct DistanceMatrix {
    members: Vec<usize>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    fn compute(members: &[usize], frames: &[&PreparedFrames], norm: Normalization) -> Result<Self> {
        let n = members.len();
        let rows: Vec<Vec<(usize, f64, f64)>> = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| -> Result<Vec<(usize, f64, f64)>> {
                let fi = frames[members[i]];
                let mut row = Vec::with_capacity(n - i);
                for j in i + 1..n {
                    let fj = frames[members[j]];
                    fi.cost_matrix(fj, buf)?;
                    let ij = dissim::align(buf, fi.len(), fj.len(), false, norm);
                    let ji = dissim::align(buf, fi.len(), fj.len(), true, norm);
                    row.push((j, ij, ji));
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (j, ij, ji) in row {
                values[i * n + j] = ij;
                values[j * n + i] = ji;
            }
        }
        Ok(DistanceMatrix {
            members: members.to_vec(),
            values,
        })
    }

    fn get(&self, token: usize, x: usize) -> f64 {
        let n = self.members.len();
        let t = self.members.binary_search(&token).expect("token in group");
        let x = self.members.binary_search(&x).expect("x in group");
        self.values[t * n + x]
    }
}
