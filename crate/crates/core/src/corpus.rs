//! Input formats: gold alignments, frame features, class files and score
//! tables.
//!
//! All formats are UTF-8 text, whitespace separated, with times in seconds.
//! Parsers take the file contents; the `read_*` helpers wrap them with file
//! context for error messages.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{read_to_string, Error, Result};

/// Label for inserted and excluded silence tokens.
pub const SILENCE: &str = "SIL";

/// Alignment jitter accepted between consecutive tokens, in seconds.
pub const ALIGN_TOLERANCE: f64 = 0.001;

// Guard against decimal round-off when comparing against the tolerance.
const FP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhoneToken {
    pub onset: f64,
    pub offset: f64,
    pub phone: String,
}

impl PhoneToken {
    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }

    pub fn is_silence(&self) -> bool {
        self.phone == SILENCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordToken {
    pub onset: f64,
    pub offset: f64,
    pub word: String,
    /// Half-open range of phone indices covered by the word.
    pub phone_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub phones: Vec<PhoneToken>,
    pub words: Vec<WordToken>,
    pub duration: f64,
}

impl Utterance {
    /// Time of the boundary before phone `k` (`k == phones.len()` is the end).
    pub fn boundary_time(&self, k: usize) -> f64 {
        if k < self.phones.len() {
            self.phones[k].onset
        } else {
            self.phones.last().map_or(0.0, |p| p.offset)
        }
    }

    pub fn start(&self) -> f64 {
        self.phones.first().map_or(0.0, |p| p.onset)
    }
}

/// Phone tokens per utterance, sorted by onset and gap-free.
pub type PhoneLayer = BTreeMap<String, Vec<PhoneToken>>;
pub type WordLayer = BTreeMap<String, Vec<WordToken>>;

/// Immutable gold alignment data shared by every metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GoldCorpus {
    pub utterances: BTreeMap<String, Utterance>,
}

impl GoldCorpus {
    /// Assembles a corpus from parsed layers.
    ///
    /// Without a speaker map each utterance is its own speaker. Durations
    /// default to the offset of the last phone.
    pub fn from_layers(
        phones: PhoneLayer,
        words: Option<WordLayer>,
        speakers: Option<&BTreeMap<String, String>>,
        durations: Option<&BTreeMap<String, f64>>,
    ) -> Result<Self> {
        let mut words = words.unwrap_or_default();
        let mut utterances = BTreeMap::new();
        for (id, phones) in phones {
            let speaker = match speakers {
                Some(map) => map
                    .get(&id)
                    .cloned()
                    .ok_or_else(|| Error::MissingSpeaker(id.clone()))?,
                None => id.clone(),
            };
            let last = phones.last().map_or(0.0, |p| p.offset);
            let duration = match durations.and_then(|d| d.get(&id)) {
                Some(&d) if d + ALIGN_TOLERANCE + FP_SLACK < last => {
                    return Err(Error::DurationTooShort(id));
                }
                Some(&d) => d.max(last),
                None => last,
            };
            let words = words.remove(&id).unwrap_or_default();
            utterances.insert(
                id.clone(),
                Utterance {
                    id,
                    speaker,
                    phones,
                    words,
                    duration,
                },
            );
        }
        if let Some(id) = words.keys().next() {
            return Err(Error::UnknownUtterance(id.clone()));
        }
        Ok(GoldCorpus { utterances })
    }

    /// Loads a corpus directory.
    ///
    /// `phones.txt` is required; `words.txt`, `speakers.txt` (`utt speaker`)
    /// and `durations.txt` (`utt duration_s`) are read when present.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let phones_path = dir.join("phones.txt");
        let phones = parse_phone_alignment(&read_to_string(&phones_path)?)
            .map_err(|e| e.in_file(&phones_path))?;
        let words_path = dir.join("words.txt");
        let words = if words_path.exists() {
            let text = read_to_string(&words_path)?;
            Some(parse_word_alignment(&text, &phones).map_err(|e| e.in_file(&words_path))?)
        } else {
            None
        };
        let speakers = optional(dir, "speakers.txt", parse_speakers)?;
        let durations = optional(dir, "durations.txt", parse_durations)?;
        GoldCorpus::from_layers(phones, words, speakers.as_ref(), durations.as_ref())
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.utterances.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances.values()
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn durations(&self) -> BTreeMap<String, f64> {
        self.iter().map(|u| (u.id.clone(), u.duration)).collect()
    }
}

fn optional<T>(dir: &Path, name: &str, parse: fn(&str) -> Result<T>) -> Result<Option<T>> {
    let path = dir.join(name);
    if !path.exists() {
        return Ok(None);
    }
    parse(&read_to_string(&path)?)
        .map(Some)
        .map_err(|e| e.in_file(&path))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

fn parse_time(field: &str, line: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(t) if t.is_finite() && t >= 0.0 => Ok(t),
        _ => Err(Error::malformed(line, format!("invalid time {field:?}"))),
    }
}

fn parse_interval(on: &str, off: &str, line: usize) -> Result<(f64, f64)> {
    let onset = parse_time(on, line)?;
    let offset = parse_time(off, line)?;
    if offset <= onset {
        return Err(Error::malformed(line, "offset must be greater than onset"));
    }
    Ok((onset, offset))
}

/// Parses `utt onset offset phone` lines.
///
/// Gaps longer than [`ALIGN_TOLERANCE`] become explicit [`SILENCE`] tokens;
/// shorter gaps and overlaps are snapped shut.
pub fn parse_phone_alignment(text: &str) -> Result<PhoneLayer> {
    let mut raw: BTreeMap<String, Vec<(PhoneToken, usize)>> = BTreeMap::new();
    for (line, fields) in records(text) {
        if fields.len() != 4 {
            return Err(Error::malformed(
                line,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let (onset, offset) = parse_interval(fields[1], fields[2], line)?;
        raw.entry(fields[0].to_string()).or_default().push((
            PhoneToken {
                onset,
                offset,
                phone: fields[3].to_string(),
            },
            line,
        ));
    }

    let mut layer = PhoneLayer::new();
    for (utt, mut tokens) in raw {
        tokens.sort_by(|a, b| a.0.onset.total_cmp(&b.0.onset));
        let mut out: Vec<PhoneToken> = Vec::with_capacity(tokens.len());
        for (mut token, line) in tokens {
            if let Some(prev) = out.last() {
                let gap = token.onset - prev.offset;
                if gap < -(ALIGN_TOLERANCE + FP_SLACK) {
                    return Err(Error::Overlap {
                        utterance: utt,
                        line,
                    });
                }
                if gap > ALIGN_TOLERANCE + FP_SLACK {
                    let sil = PhoneToken {
                        onset: prev.offset,
                        offset: token.onset,
                        phone: SILENCE.to_string(),
                    };
                    out.push(sil);
                } else {
                    token.onset = prev.offset;
                    if token.offset <= token.onset {
                        return Err(Error::Overlap {
                            utterance: utt,
                            line,
                        });
                    }
                }
            }
            out.push(token);
        }
        layer.insert(utt, out);
    }
    Ok(layer)
}

fn boundary_index(phones: &[PhoneToken], time: f64) -> Option<usize> {
    let k = phones.partition_point(|p| p.onset < time);
    // candidates: onset of k, onset of k-1, or the final offset
    let mut best: Option<(usize, f64)> = None;
    for cand in [k.saturating_sub(1), k, k + 1]
        .into_iter()
        .filter(|&c| c <= phones.len())
    {
        let t = if cand < phones.len() {
            phones[cand].onset
        } else {
            phones.last()?.offset
        };
        let err = (t - time).abs();
        if err <= ALIGN_TOLERANCE + FP_SLACK && best.is_none_or(|(_, e)| err < e) {
            best = Some((cand, err));
        }
    }
    best.map(|(c, _)| c)
}

/// Parses `utt onset offset word` lines against an existing phone layer.
pub fn parse_word_alignment(text: &str, phones: &PhoneLayer) -> Result<WordLayer> {
    let mut layer = WordLayer::new();
    let mut lines: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (line, fields) in records(text) {
        if fields.len() != 4 {
            return Err(Error::malformed(
                line,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let utt = fields[0];
        let (onset, offset) = parse_interval(fields[1], fields[2], line)?;
        let tokens = phones
            .get(utt)
            .ok_or_else(|| Error::UnknownUtterance(utt.to_string()))?;
        let mismatch = |time| Error::BoundaryMismatch {
            utterance: utt.to_string(),
            time,
        };
        let start = boundary_index(tokens, onset).ok_or_else(|| mismatch(onset))?;
        let end = boundary_index(tokens, offset).ok_or_else(|| mismatch(offset))?;
        if end <= start {
            return Err(mismatch(offset));
        }
        layer.entry(utt.to_string()).or_default().push(WordToken {
            onset,
            offset,
            word: fields[3].to_string(),
            phone_span: (start, end),
        });
        lines.entry(utt.to_string()).or_default().push(line);
    }
    for (utt, words) in layer.iter_mut() {
        let mut order: Vec<usize> = (0..words.len()).collect();
        order.sort_by_key(|&i| words[i].phone_span);
        let line_nos = &lines[utt];
        let sorted: Vec<WordToken> = order.iter().map(|&i| words[i].clone()).collect();
        for (w, pair) in sorted.windows(2).zip(order.windows(2)) {
            if w[1].phone_span.0 < w[0].phone_span.1 {
                return Err(Error::Overlap {
                    utterance: utt.clone(),
                    line: line_nos[pair[1]],
                });
            }
        }
        *words = sorted;
    }
    Ok(layer)
}

/// Parses `utt speaker` lines.
pub fn parse_speakers(text: &str) -> Result<BTreeMap<String, String>> {
    two_column(text, |v, _| Ok(v.to_string()))
}

/// Parses the utterance metadata file, `utt duration_s` lines.
pub fn parse_durations(text: &str) -> Result<BTreeMap<String, f64>> {
    two_column(text, parse_time)
}

fn two_column<T>(
    text: &str,
    value: impl Fn(&str, usize) -> Result<T>,
) -> Result<BTreeMap<String, T>> {
    let mut map = BTreeMap::new();
    for (line, fields) in records(text) {
        if fields.len() != 2 {
            return Err(Error::malformed(
                line,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let v = value(fields[1], line)?;
        if map.insert(fields[0].to_string(), v).is_some() {
            return Err(Error::DuplicateId(fields[0].to_string()));
        }
    }
    Ok(map)
}

/// Time-stamped frame embeddings for one utterance.
///
/// Frames are stored row-major in a flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub utterance_id: String,
    dim: usize,
    times: Vec<f64>,
    data: Vec<f64>,
}

impl FeatureSequence {
    /// Builds a sequence from rows, checking dimensions and time order.
    pub fn new(utterance_id: impl Into<String>, frames: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let Some(dim) = frames.first().map(|f| f.1.len()) else {
            return Err(Error::EmptyFile);
        };
        if dim == 0 {
            return Err(Error::DimMismatch {
                line: 1,
                expected: 1,
                found: 0,
            });
        }
        let mut times = Vec::with_capacity(frames.len());
        let mut data = Vec::with_capacity(frames.len() * dim);
        for (i, (t, v)) in frames.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    line: i + 1,
                    expected: dim,
                    found: v.len(),
                });
            }
            if times.last().is_some_and(|&p| t <= p) {
                return Err(Error::NonMonotonicTime { line: i + 1 });
            }
            times.push(t);
            data.extend(v);
        }
        Ok(FeatureSequence {
            utterance_id: utterance_id.into(),
            dim,
            times,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn all(&self) -> FrameSlice<'_> {
        FrameSlice {
            dim: self.dim,
            times: &self.times,
            data: &self.data,
        }
    }

    /// Frames whose timestamp lies in `[onset, offset)`.
    pub fn slice(&self, onset: f64, offset: f64) -> Result<FrameSlice<'_>> {
        let start = self.times.partition_point(|&t| t < onset);
        let end = self.times.partition_point(|&t| t < offset).max(start);
        if start == end {
            return Err(Error::EmptySlice { onset, offset });
        }
        Ok(FrameSlice {
            dim: self.dim,
            times: &self.times[start..end],
            data: &self.data[start * self.dim..end * self.dim],
        })
    }
}

/// Borrowed run of consecutive frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSlice<'a> {
    dim: usize,
    times: &'a [f64],
    data: &'a [f64],
}

impl<'a> FrameSlice<'a> {
    /// Wraps a flat row-major buffer; timestamps are the frame indices.
    pub fn from_rows(dim: usize, data: &'a [f64]) -> Self {
        assert!(
            dim > 0 && data.len().is_multiple_of(dim),
            "buffer is not a whole number of frames"
        );
        FrameSlice {
            dim,
            times: &[],
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Timestamps, empty for slices built with [`FrameSlice::from_rows`].
    pub fn times(&self) -> &'a [f64] {
        self.times
    }

    pub fn frame(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + 'a {
        self.data.chunks_exact(self.dim)
    }
}

/// Frames of `seq` with `onset <= timestamp < offset`.
pub fn slice_frames(seq: &FeatureSequence, onset: f64, offset: f64) -> Result<FrameSlice<'_>> {
    seq.slice(onset, offset)
}

/// Parses a feature file: `timestamp v_1 ... v_d` per line.
pub fn parse_features(utterance_id: &str, text: &str) -> Result<FeatureSequence> {
    let mut times = Vec::new();
    let mut data = Vec::new();
    let mut dim = 0;
    for (line, fields) in records(text) {
        let t: f64 = fields[0]
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| Error::malformed(line, format!("invalid timestamp {:?}", fields[0])))?;
        let n = fields.len() - 1;
        if times.is_empty() {
            if n == 0 {
                return Err(Error::malformed(line, "frame has no values"));
            }
            dim = n;
        } else if n != dim {
            return Err(Error::DimMismatch {
                line,
                expected: dim,
                found: n,
            });
        }
        if times.last().is_some_and(|&p| t <= p) {
            return Err(Error::NonMonotonicTime { line });
        }
        for f in &fields[1..] {
            let v: f64 = f
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::malformed(line, format!("invalid value {f:?}")))?;
            data.push(v);
        }
        times.push(t);
    }
    if times.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(FeatureSequence {
        utterance_id: utterance_id.to_string(),
        dim,
        times,
        data,
    })
}

/// Reads a feature file; the utterance id is the file stem.
pub fn read_features(path: &Path) -> Result<FeatureSequence> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_features(&id, &read_to_string(path)?).map_err(|e| e.in_file(path))
}

/// Loads `<dir>/<id>.txt` for every requested utterance, in parallel.
pub fn load_feature_dir<'a>(
    dir: &Path,
    ids: impl IntoIterator<Item = &'a str>,
) -> Result<BTreeMap<String, FeatureSequence>> {
    let ids: Vec<&str> = ids.into_iter().collect();
    ids.par_iter()
        .map(|&id| {
            let path = dir.join(format!("{id}.txt"));
            if !path.is_file() {
                return Err(Error::MissingFeatureFile(id.to_string()));
            }
            read_features(&path).map(|f| (id.to_string(), f))
        })
        .collect()
}

/// Loads every `*.txt` feature file in `dir`, keyed by file stem.
pub fn load_all_features(dir: &Path) -> Result<BTreeMap<String, FeatureSequence>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.extension().is_some_and(|e| e == "txt") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .par_iter()
        .map(|p| read_features(p).map(|f| (f.utterance_id.clone(), f)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fragment {
    pub utterance: String,
    pub onset: f64,
    pub offset: f64,
}

/// Discovered fragments grouped by class id.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClusterSet {
    pub clusters: BTreeMap<String, Vec<Fragment>>,
}

impl ClusterSet {
    pub fn fragment_count(&self) -> usize {
        self.clusters.values().map(Vec::len).sum()
    }

    /// Checks every fragment against the corpus extent.
    pub fn validate(&self, corpus: &GoldCorpus) -> Result<()> {
        for frag in self.clusters.values().flatten() {
            let utt = corpus
                .get(&frag.utterance)
                .ok_or_else(|| Error::UnknownUtterance(frag.utterance.clone()))?;
            let slack = ALIGN_TOLERANCE + FP_SLACK;
            if frag.onset + slack < utt.start() || frag.offset > utt.duration + slack {
                return Err(Error::FragmentOutOfRange {
                    utterance: frag.utterance.clone(),
                    onset: frag.onset,
                    offset: frag.offset,
                });
            }
        }
        Ok(())
    }
}

/// Parses a class file: `Class <id>` headers, `utt onset offset` fragment
/// lines, blocks separated by blank lines.
pub fn parse_class_file(text: &str) -> Result<ClusterSet> {
    let mut set = ClusterSet::default();
    let mut open: Option<(String, Vec<Fragment>)> = None;

    fn close(set: &mut ClusterSet, block: Option<(String, Vec<Fragment>)>) -> Result<()> {
        if let Some((id, frags)) = block {
            if frags.is_empty() {
                return Err(Error::EmptyClass(id));
            }
            if set.clusters.insert(id.clone(), frags).is_some() {
                return Err(Error::DuplicateId(id));
            }
        }
        Ok(())
    }

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            close(&mut set, open.take())?;
            continue;
        }
        if fields[0] == "Class" {
            if fields.len() < 2 {
                return Err(Error::malformed(line_no, "class header without id"));
            }
            close(&mut set, open.take())?;
            open = Some((fields[1].to_string(), Vec::new()));
            continue;
        }
        let Some((_, frags)) = open.as_mut() else {
            return Err(Error::malformed(
                line_no,
                "fragment outside of a class block",
            ));
        };
        if fields.len() != 3 {
            return Err(Error::malformed(
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let (onset, offset) = parse_interval(fields[1], fields[2], line_no)?;
        frags.push(Fragment {
            utterance: fields[0].to_string(),
            onset,
            offset,
        });
    }
    close(&mut set, open)?;
    Ok(set)
}

pub fn read_class_file(path: &Path) -> Result<ClusterSet> {
    parse_class_file(&read_to_string(path)?).map_err(|e| e.in_file(path))
}

pub fn format_class_file(set: &ClusterSet) -> String {
    let mut out = String::new();
    for (id, frags) in &set.clusters {
        let _ = writeln!(out, "Class {id}");
        for f in frags {
            let _ = writeln!(out, "{} {} {}", f.utterance, f.onset, f.offset);
        }
        out.push('\n');
    }
    out
}

/// Model scores keyed by item id.
pub type ScoreTable = BTreeMap<String, f64>;

/// Parses `item_id score` lines.
pub fn parse_score_table(text: &str) -> Result<ScoreTable> {
    two_column(text, |v, line| {
        v.parse::<f64>()
            .ok()
            .filter(|s| !s.is_nan())
            .ok_or_else(|| Error::malformed(line, format!("invalid score {v:?}")))
    })
}

pub fn read_score_table(path: &Path) -> Result<ScoreTable> {
    parse_score_table(&read_to_string(path)?).map_err(|e| e.in_file(path))
}

pub fn format_phone_alignment(corpus: &GoldCorpus) -> String {
    let mut out = String::new();
    for u in corpus.iter() {
        for p in &u.phones {
            let _ = writeln!(out, "{} {} {} {}", u.id, p.onset, p.offset, p.phone);
        }
    }
    out
}

pub fn format_word_alignment(corpus: &GoldCorpus) -> String {
    let mut out = String::new();
    for u in corpus.iter() {
        for w in &u.words {
            let _ = writeln!(out, "{} {} {} {}", u.id, w.onset, w.offset, w.word);
        }
    }
    out
}

pub fn format_speakers(corpus: &GoldCorpus) -> String {
    corpus
        .iter()
        .map(|u| format!("{} {}\n", u.id, u.speaker))
        .collect()
}

pub fn format_durations(corpus: &GoldCorpus) -> String {
    corpus
        .iter()
        .map(|u| format!("{} {}\n", u.id, u.duration))
        .collect()
}

pub fn format_features(seq: &FeatureSequence) -> String {
    let mut out = String::new();
    for (i, t) in seq.times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for v in seq.frame(i) {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn format_score_table(table: &ScoreTable) -> String {
    table.iter().map(|(k, v)| format!("{k} {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_phone_record() {
        let layer = parse_phone_alignment("u1 0.00 0.10 s\n").unwrap();
        assert_eq!(
            layer["u1"],
            vec![PhoneToken {
                onset: 0.0,
                offset: 0.10,
                phone: "s".into()
            }]
        );
    }

    #[test]
    fn inverted_interval_is_rejected() {
        let err = parse_phone_alignment("u1 0.10 0.05 o\n").unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }), "{err}");
    }

    #[test]
    fn gap_becomes_silence() {
        let layer = parse_phone_alignment("u1 0.00 0.10 s\nu1 0.12 0.20 o\n").unwrap();
        let phones: Vec<_> = layer["u1"]
            .iter()
            .map(|p| (p.onset, p.offset, p.phone.as_str()))
            .collect();
        assert_eq!(
            phones,
            vec![(0.0, 0.10, "s"), (0.10, 0.12, SILENCE), (0.12, 0.20, "o")]
        );
    }

    #[test]
    fn sub_millisecond_jitter_is_snapped() {
        let layer =
            parse_phone_alignment("u1 0.0 0.1 s\nu1 0.1005 0.2 o\nu1 0.1995 0.3 n\n").unwrap();
        let p = &layer["u1"];
        assert_eq!(p.len(), 3);
        assert_eq!(p[1].onset, p[0].offset);
        assert_eq!(p[2].onset, p[1].offset);
    }

    #[test]
    fn overlap_reports_line() {
        let err = parse_phone_alignment("u1 0.0 0.1 s\nu1 0.05 0.2 o\n").unwrap_err();
        assert!(
            matches!(err, Error::Overlap { ref utterance, line: 2 } if utterance == "u1"),
            "{err}"
        );
    }

    #[test]
    fn wrong_field_count_and_bad_numbers() {
        assert!(matches!(
            parse_phone_alignment("u1 0.0 0.1\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_phone_alignment("\nu1 0.0 x s\n"),
            Err(Error::MalformedLine { line: 2, .. })
        ));
    }

    fn son() -> PhoneLayer {
        parse_phone_alignment("u1 0.00 0.10 s\nu1 0.10 0.20 o\nu1 0.20 0.30 n\n").unwrap()
    }

    #[test]
    fn word_spans() {
        let words = parse_word_alignment("u1 0.00 0.30 son\n", &son()).unwrap();
        assert_eq!(words["u1"][0].phone_span, (0, 3));
        let err = parse_word_alignment("u1 0.00 0.15 so\n", &son()).unwrap_err();
        assert!(matches!(err, Error::BoundaryMismatch { .. }));
    }

    #[test]
    fn two_words_partition_five_phones() {
        let phones = parse_phone_alignment(
            "u 0.0 0.1 a\nu 0.1 0.2 b\nu 0.2 0.3 c\nu 0.3 0.4 d\nu 0.4 0.5 e\n",
        )
        .unwrap();
        let words = parse_word_alignment("u 0.2 0.5 cde\nu 0.0 0.2 ab\n", &phones).unwrap();
        let spans: Vec<_> = words["u"].iter().map(|w| w.phone_span).collect();
        assert_eq!(spans, vec![(0, 2), (2, 5)]);
    }

    #[test]
    fn word_in_unknown_utterance() {
        assert!(matches!(
            parse_word_alignment("u9 0.0 0.3 x\n", &son()),
            Err(Error::UnknownUtterance(_))
        ));
    }

    #[test]
    fn features_parse() {
        let f = parse_features("u1", "0.01 1.0 0.0\n0.02 0.0 1.0").unwrap();
        assert_eq!((f.len(), f.dim()), (2, 2));
        assert_eq!(f.frame(1), &[0.0, 1.0]);
    }

    #[test]
    fn feature_errors() {
        assert!(matches!(
            parse_features("u", "0.01 1 2 3\n0.02 1 2\n"),
            Err(Error::DimMismatch {
                line: 2,
                expected: 3,
                found: 2
            })
        ));
        assert!(matches!(parse_features("u", ""), Err(Error::EmptyFile)));
        assert!(matches!(
            parse_features("u", "0.02 1\n0.01 1\n"),
            Err(Error::NonMonotonicTime { line: 2 })
        ));
        assert!(matches!(
            parse_features("u", "0.02 1\n0.02 1\n"),
            Err(Error::NonMonotonicTime { line: 2 })
        ));
    }

    #[test]
    fn half_open_slicing() {
        let f = parse_features("u", "0.01 1\n0.02 2\n0.03 3\n").unwrap();
        let s = slice_frames(&f, 0.015, 0.03).unwrap();
        assert_eq!(s.times(), &[0.02]);
        assert_eq!(slice_frames(&f, 0.0, 1.0).unwrap().len(), 3);
        assert!(matches!(
            slice_frames(&f, 0.5, 0.6),
            Err(Error::EmptySlice { .. })
        ));
    }

    #[test]
    fn class_file_blocks() {
        let set = parse_class_file("Class 1\nu1 0.0 0.5\nu2 1.0 1.5\n\n").unwrap();
        assert_eq!(set.clusters.len(), 1);
        assert_eq!(set.clusters["1"].len(), 2);
        let two = parse_class_file("Class a\nu1 0 1\n\nClass b\nu1 1 2\n\n").unwrap();
        assert_eq!(two.clusters.len(), 2);
    }

    #[test]
    fn class_file_errors() {
        assert!(matches!(parse_class_file("Class 1\n\n"), Err(Error::EmptyClass(id)) if id == "1"));
        assert!(matches!(
            parse_class_file("Class 1\nClass 2\nu 0 1\n\n"),
            Err(Error::EmptyClass(_))
        ));
        assert!(matches!(
            parse_class_file("u1 0 1\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_class_file("Class 1\nu1 0\n\n"),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_class_file("Class 1\nu 0 1\n\nClass 1\nu 1 2\n"),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn class_file_validation() {
        let corpus = GoldCorpus::from_layers(son(), None, None, None).unwrap();
        let ok = parse_class_file("Class 1\nu1 0.0 0.3\n\n").unwrap();
        ok.validate(&corpus).unwrap();
        let unknown = parse_class_file("Class 1\nu2 0.0 0.3\n\n").unwrap();
        assert!(matches!(
            unknown.validate(&corpus),
            Err(Error::UnknownUtterance(_))
        ));
        let outside = parse_class_file("Class 1\nu1 0.2 0.9\n\n").unwrap();
        assert!(matches!(
            outside.validate(&corpus),
            Err(Error::FragmentOutOfRange { .. })
        ));
    }

    #[test]
    fn score_tables() {
        assert_eq!(parse_score_table("w1 -3.2\nw2 -5.0").unwrap().len(), 2);
        assert!(
            matches!(parse_score_table("w1 1\nw1 2\n"), Err(Error::DuplicateId(id)) if id == "w1")
        );
        assert!(matches!(
            parse_score_table("w1 abc\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn corpus_durations_and_speakers() {
        let speakers = parse_speakers("u1 spk\n").unwrap();
        let durations = parse_durations("u1 0.5\n").unwrap();
        let c = GoldCorpus::from_layers(son(), None, Some(&speakers), Some(&durations)).unwrap();
        assert_eq!(c.get("u1").unwrap().speaker, "spk");
        assert_eq!(c.get("u1").unwrap().duration, 0.5);
        let short = parse_durations("u1 0.2\n").unwrap();
        assert!(matches!(
            GoldCorpus::from_layers(son(), None, None, Some(&short)),
            Err(Error::DurationTooShort(_))
        ));
        let none = BTreeMap::new();
        assert!(matches!(
            GoldCorpus::from_layers(son(), None, Some(&none), None),
            Err(Error::MissingSpeaker(_))
        ));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn cluster_set() -> impl Strategy<Value = ClusterSet> {
            let frag =
                ("[a-z][a-z0-9]{0,5}", 0u32..10_000, 1u32..5_000).prop_map(|(u, on, len)| {
                    Fragment {
                        utterance: u,
                        onset: on as f64 / 1000.0,
                        offset: (on + len) as f64 / 1000.0,
                    }
                });
            prop::collection::btree_map(
                "[A-Za-z0-9_]{1,6}",
                prop::collection::vec(frag, 1..6),
                0..6,
            )
            .prop_map(|clusters| ClusterSet { clusters })
        }

        proptest! {
            #[test]
            fn class_file_round_trip(set in cluster_set()) {
                let text = format_class_file(&set);
                prop_assert_eq!(parse_class_file(&text).unwrap(), set);
            }

            #[test]
            fn slices_compose(n in 1usize..40, cuts in prop::collection::vec(0.0f64..0.5, 3)) {
                let frames = (0..n).map(|i| (0.005 + 0.01 * i as f64, vec![i as f64])).collect();
                let seq = FeatureSequence::new("u", frames).unwrap();
                let mut c = cuts.clone();
                c.sort_by(f64::total_cmp);
                let times = |a: f64, b: f64| seq.slice(a, b).map(|s| s.times().to_vec()).unwrap_or_default();
                let mut joined = times(c[0], c[1]);
                joined.extend(times(c[1], c[2]));
                prop_assert_eq!(joined, times(c[0], c[2]));
            }
        }
    }
}
