//! Seeded toy corpora and naive reference scorers.
//!
//! [`generate`] builds a gold alignment, frame embeddings, unit streams, a
//! gold-word class file and spoken-LM probe material from a
//! [`ToyLanguageSpec`]. [`oracle_abx`] and [`oracle_tde`] recompute the
//! corresponding metrics by brute force, without the cell and pair
//! machinery of the production modules, for cross-checking on small inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::abx::Mode;
use crate::corpus::{
    self, ClusterSet, FeatureSequence, Fragment, GoldCorpus, PhoneToken, ScoreTable, Utterance,
    WordToken, SILENCE,
};
use crate::dissim::{self, DissimKind};
use crate::error::{Error, Result};
use crate::lmeval::{ContrastPair, SimilarityRecord};
use crate::tde::{self, Prf, TdeCounts, TdeReport};

pub const MAX_WORD_LENGTH: usize = 8;

/// How frame embeddings are derived from the gold phone under each frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
#[derive(Default)]
pub enum EmbeddingScheme {
    #[default]
    GoldOneHot,
    /// One-hot plus i.i.d. Gaussian noise.
    NoisyOneHot {
        sigma: f64,
    },
    /// Noisy one-hot plus a fixed Gaussian offset per speaker.
    SpeakerShifted {
        sigma: f64,
        sigma_speaker: f64,
    },
    /// Softmax of noisy one-hot logits divided by `temperature`; frames are
    /// probability vectors.
    Posteriorgram {
        sigma: f64,
        temperature: f64,
    },
}


/// Parameters of a toy language and its recordings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyLanguageSpec {
    /// Number of phones, named `p00`, `p01`, ...
    pub inventory: usize,
    /// Explicit lexicon, word to phone names. When empty, `lexicon_size`
    /// random words are drawn.
    #[serde(default)]
    pub lexicon: BTreeMap<String, Vec<String>>,
    #[serde(default = "default_lexicon_size")]
    pub lexicon_size: usize,
    /// Inclusive phone-count range of random words.
    #[serde(default = "default_word_length")]
    pub word_length: (usize, usize),
    pub speakers: usize,
    pub utterances: usize,
    /// Inclusive word-count range per utterance.
    #[serde(default = "default_words_per_utterance")]
    pub words_per_utterance: (usize, usize),
    /// Seconds between frames.
    #[serde(default = "default_frame_period")]
    pub frame_period: f64,
    /// Inclusive range of phone durations, whole milliseconds.
    #[serde(default = "default_phone_duration")]
    pub phone_duration_ms: (u32, u32),
    /// Embedding dimension; one-hot coordinates beyond the inventory stay 0.
    #[serde(default)]
    pub feature_dim: Option<usize>,
    #[serde(default)]
    pub embedding: EmbeddingScheme,
    #[serde(default)]
    pub seed: u64,
}

fn default_lexicon_size() -> usize {
    20
}
fn default_word_length() -> (usize, usize) {
    (2, 6)
}
fn default_words_per_utterance() -> (usize, usize) {
    (3, 8)
}
fn default_frame_period() -> f64 {
    0.01
}
fn default_phone_duration() -> (u32, u32) {
    (50, 150)
}

impl ToyLanguageSpec {
    /// A spec with every optional field at its default.
    pub fn new(inventory: usize, speakers: usize, utterances: usize, seed: u64) -> Self {
        ToyLanguageSpec {
            inventory,
            lexicon: BTreeMap::new(),
            lexicon_size: default_lexicon_size(),
            word_length: default_word_length(),
            speakers,
            utterances,
            words_per_utterance: default_words_per_utterance(),
            frame_period: default_frame_period(),
            phone_duration_ms: default_phone_duration(),
            feature_dim: None,
            embedding: EmbeddingScheme::GoldOneHot,
            seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ToyLanguageSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn phone_names(&self) -> Vec<String> {
        (0..self.inventory).map(|i| format!("p{i:02}")).collect()
    }

    pub fn dim(&self) -> usize {
        self.feature_dim.unwrap_or(self.inventory)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.inventory < 2 {
            return bad(format!(
                "inventory must hold at least 2 phones, got {}",
                self.inventory
            ));
        }
        if self.speakers == 0 || self.utterances == 0 {
            return bad("speaker and utterance counts must be at least 1".into());
        }
        if self.dim() < self.inventory {
            return bad(format!(
                "feature_dim {} is smaller than the inventory",
                self.dim()
            ));
        }
        let (wmin, wmax) = self.words_per_utterance;
        if wmin == 0 || wmin > wmax {
            return bad(format!(
                "invalid words_per_utterance range [{wmin}, {wmax}]"
            ));
        }
        let (dmin, dmax) = self.phone_duration_ms;
        if dmin == 0 || dmin > dmax {
            return bad(format!("invalid phone_duration_ms range [{dmin}, {dmax}]"));
        }
        if !(self.frame_period.is_finite() && self.frame_period > 0.0) {
            return bad(format!(
                "frame_period must be positive, got {}",
                self.frame_period
            ));
        }
        let sigmas: &[f64] = match &self.embedding {
            EmbeddingScheme::GoldOneHot => &[],
            EmbeddingScheme::NoisyOneHot { sigma } => &[*sigma],
            EmbeddingScheme::SpeakerShifted {
                sigma,
                sigma_speaker,
            } => &[*sigma, *sigma_speaker],
            EmbeddingScheme::Posteriorgram { sigma, temperature } => {
                if !(temperature.is_finite() && *temperature > 0.0) {
                    return bad(format!("temperature must be positive, got {temperature}"));
                }
                &[*sigma]
            }
        };
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("noise scales must be finite and non-negative".into());
        }
        if self.lexicon.is_empty() {
            let (lmin, lmax) = self.word_length;
            if self.lexicon_size == 0 {
                return bad("lexicon_size must be at least 1".into());
            }
            if lmin == 0 || lmin > lmax || lmax > MAX_WORD_LENGTH {
                return bad(format!(
                    "word_length range [{lmin}, {lmax}] must lie within [1, {MAX_WORD_LENGTH}]"
                ));
            }
            let k = self.inventory as f64;
            let space: f64 = (lmin..=lmax)
                .map(|n| k * (k - 1.0).powi(n as i32 - 1))
                .sum();
            if space < self.lexicon_size as f64 {
                return bad(format!(
                    "only {space} distinct words fit the inventory and lengths"
                ));
            }
        } else {
            let phones: BTreeSet<String> = self.phone_names().into_iter().collect();
            for (word, seq) in &self.lexicon {
                if word.is_empty() || word.contains(char::is_whitespace) || word.contains('#') {
                    return bad(format!("invalid word name {word:?}"));
                }
                if seq.is_empty() || seq.len() > MAX_WORD_LENGTH {
                    return bad(format!(
                        "word {word} must have 1 to {MAX_WORD_LENGTH} phones"
                    ));
                }
                if let Some(p) = seq.iter().find(|p| !phones.contains(*p)) {
                    return bad(format!("word {word} uses unknown phone {p}"));
                }
                if seq.windows(2).any(|w| w[0] == w[1]) {
                    return bad(format!("word {word} repeats a phone back to back"));
                }
            }
        }
        Ok(())
    }
}

/// Everything [`generate`] produces, in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub spec: ToyLanguageSpec,
    pub lexicon: BTreeMap<String, Vec<String>>,
    pub corpus: GoldCorpus,
    pub features: BTreeMap<String, FeatureSequence>,
    /// Gold phone transcription per utterance as (onset, phone) units.
    pub units: BTreeMap<String, Vec<(f64, String)>>,
    pub classes: ClusterSet,
    pub lexical_pairs: Vec<ContrastPair>,
    pub lexical_scores: ScoreTable,
    pub syntactic_pairs: Vec<ContrastPair>,
    pub syntactic_scores: ScoreTable,
    pub similarity: Vec<SimilarityRecord>,
    /// Word-token embeddings keyed `word#k`.
    pub semantic: BTreeMap<String, FeatureSequence>,
}

/// Draws a corpus from `spec`. The same spec always yields the same corpus.
pub fn generate(spec: &ToyLanguageSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phone_names = spec.phone_names();
    let lexicon = if spec.lexicon.is_empty() {
        random_lexicon(spec, &phone_names, &mut rng)
    } else {
        spec.lexicon.clone()
    };
    let words: Vec<&String> = lexicon.keys().collect();
    let phone_index: HashMap<&str, usize> = phone_names
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let dim = spec.dim();

    let speaker_names: Vec<String> = (0..spec.speakers).map(|s| format!("s{s:02}")).collect();
    let speaker_offsets: Vec<Vec<f64>> = match spec.embedding {
        EmbeddingScheme::SpeakerShifted { sigma_speaker, .. } => (0..spec.speakers)
            .map(|_| {
                (0..dim)
                    .map(|_| sigma_speaker * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect(),
        _ => vec![vec![0.0; dim]; spec.speakers],
    };

    let mut utterances = BTreeMap::new();
    let mut features = BTreeMap::new();
    let mut units = BTreeMap::new();
    for u in 0..spec.utterances {
        let s = u % spec.speakers;
        let id = format!("{}_u{u:04}", speaker_names[s]);
        let n_words = rng.random_range(spec.words_per_utterance.0..=spec.words_per_utterance.1);
        let mut phones = Vec::new();
        let mut word_tokens = Vec::new();
        let mut t_ms: u64 = 0;
        for _ in 0..n_words {
            // aligned phones never repeat back to back, across words either
            let prev = phones.last().map(|p: &PhoneToken| p.phone.as_str());
            let allowed: Vec<&String> = words
                .iter()
                .copied()
                .filter(|w| Some(lexicon[*w][0].as_str()) != prev)
                .collect();
            let w = *allowed.choose(&mut rng).ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "no word may follow phone {}",
                    prev.unwrap_or_default()
                ))
            })?;
            let start = phones.len();
            let w_on = t_ms;
            for p in &lexicon[w] {
                let d =
                    rng.random_range(spec.phone_duration_ms.0..=spec.phone_duration_ms.1) as u64;
                phones.push(PhoneToken {
                    onset: ms(t_ms),
                    offset: ms(t_ms + d),
                    phone: p.clone(),
                });
                t_ms += d;
            }
            word_tokens.push(WordToken {
                onset: ms(w_on),
                offset: ms(t_ms),
                word: w.clone(),
                phone_span: (start, phones.len()),
            });
        }
        let duration = ms(t_ms);

        let n_frames = (duration / spec.frame_period + 1e-9).floor() as usize;
        let mut frames = Vec::with_capacity(n_frames);
        let mut k = 0;
        for f in 0..n_frames {
            let t = (f as f64 + 0.5) * spec.frame_period;
            while k + 1 < phones.len() && t >= phones[k].offset {
                k += 1;
            }
            let label = phone_index[phones[k].phone.as_str()];
            frames.push((
                t,
                embed(spec.embedding, label, dim, &speaker_offsets[s], &mut rng),
            ));
        }
        features.insert(id.clone(), FeatureSequence::new(id.clone(), frames)?);
        units.insert(
            id.clone(),
            phones.iter().map(|p| (p.onset, p.phone.clone())).collect(),
        );
        utterances.insert(
            id.clone(),
            Utterance {
                id,
                speaker: speaker_names[s].clone(),
                phones,
                words: word_tokens,
                duration,
            },
        );
    }
    let corpus = GoldCorpus { utterances };
    let classes = tde::gold_word_clusters(&corpus);

    let (lexical_pairs, lexical_scores) =
        lexical_material(&lexicon, &corpus, &phone_names, &mut rng);
    let (syntactic_pairs, syntactic_scores) = syntactic_material(&corpus);
    let (similarity, semantic) = semantic_material(&lexicon, &corpus, &features)?;

    Ok(SyntheticCorpus {
        spec: spec.clone(),
        lexicon,
        corpus,
        features,
        units,
        classes,
        lexical_pairs,
        lexical_scores,
        syntactic_pairs,
        syntactic_scores,
        similarity,
        semantic,
    })
}

fn as_refs(s: &[String]) -> Vec<&str> {
    s.iter().map(String::as_str).collect()
}

fn ms(t: u64) -> f64 {
    t as f64 / 1000.0
}

fn random_lexicon(
    spec: &ToyLanguageSpec,
    phones: &[String],
    rng: &mut ChaCha8Rng,
) -> BTreeMap<String, Vec<String>> {
    let mut seen = BTreeSet::new();
    let mut lexicon = BTreeMap::new();
    let width = spec.lexicon_size.saturating_sub(1).to_string().len().max(3);
    while lexicon.len() < spec.lexicon_size {
        let n = rng.random_range(spec.word_length.0..=spec.word_length.1);
        let mut seq: Vec<String> = Vec::with_capacity(n);
        while seq.len() < n {
            let p = phones.choose(rng).expect("inventory");
            if seq.last() != Some(p) {
                seq.push(p.clone());
            }
        }
        if seen.insert(seq.clone()) {
            lexicon.insert(format!("w{:0width$}", lexicon.len()), seq);
        }
    }
    lexicon
}

fn embed(
    scheme: EmbeddingScheme,
    label: usize,
    dim: usize,
    offset: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[label] = 1.0;
    let mut noise = |sigma: f64, v: &mut [f64]| {
        if sigma > 0.0 {
            v.iter_mut()
                .for_each(|x| *x += sigma * rng.sample::<f64, _>(StandardNormal));
        }
    };
    match scheme {
        EmbeddingScheme::GoldOneHot => {}
        EmbeddingScheme::NoisyOneHot { sigma } => noise(sigma, &mut v),
        EmbeddingScheme::SpeakerShifted { sigma, .. } => {
            noise(sigma, &mut v);
            v.iter_mut().zip(offset).for_each(|(x, o)| *x += o);
        }
        EmbeddingScheme::Posteriorgram { sigma, temperature } => {
            noise(sigma, &mut v);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            v.iter_mut()
                .for_each(|x| *x = ((*x - max) / temperature).exp());
            let total: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= total);
        }
    }
    v
}

/// Add-one smoothed bigram model over symbol sequences with boundary
/// markers; scores are mean log2 transition probabilities.
struct Bigram<'a> {
    unigram: HashMap<&'a str, u64>,
    bigram: HashMap<(&'a str, &'a str), u64>,
    vocab: usize,
}

const BOUNDARY: &str = "<s>";

impl<'a> Bigram<'a> {
    fn train(sequences: impl IntoIterator<Item = Vec<&'a str>>, vocab: usize) -> Self {
        let mut unigram = HashMap::new();
        let mut bigram = HashMap::new();
        for seq in sequences {
            let padded: Vec<&str> = std::iter::once(BOUNDARY)
                .chain(seq)
                .chain(std::iter::once(BOUNDARY))
                .collect();
            for w in padded.windows(2) {
                *unigram.entry(w[0]).or_insert(0) += 1;
                *bigram.entry((w[0], w[1])).or_insert(0) += 1;
            }
        }
        Bigram {
            unigram,
            bigram,
            vocab: vocab + 1,
        }
    }

    fn score(&self, seq: &[&str]) -> f64 {
        let padded: Vec<&str> = std::iter::once(BOUNDARY)
            .chain(seq.iter().copied())
            .chain(std::iter::once(BOUNDARY))
            .collect();
        let mut total = 0.0;
        for w in padded.windows(2) {
            let c = self.bigram.get(&(w[0], w[1])).copied().unwrap_or(0) as f64;
            let n = self.unigram.get(w[0]).copied().unwrap_or(0) as f64;
            total += ((c + 1.0) / (n + self.vocab as f64)).log2();
        }
        total / (padded.len() - 1) as f64
    }
}

/// Word/nonword pairs scored by a phone bigram model of the corpus.
fn lexical_material(
    lexicon: &BTreeMap<String, Vec<String>>,
    corpus: &GoldCorpus,
    phones: &[String],
    rng: &mut ChaCha8Rng,
) -> (Vec<ContrastPair>, ScoreTable) {
    let lm = Bigram::train(
        corpus
            .iter()
            .map(|u| u.phones.iter().map(|p| p.phone.as_str()).collect()),
        phones.len(),
    );
    let known: BTreeSet<&Vec<String>> = lexicon.values().collect();
    let mut pairs = Vec::new();
    let mut scores = ScoreTable::new();
    for (i, (word, seq)) in lexicon.iter().enumerate() {
        let mut nonword = None;
        for _ in 0..100 {
            let mut cand = seq.clone();
            if seq.len() > 1 && rng.random_bool(0.5) {
                cand.shuffle(rng);
            } else {
                let k = rng.random_range(0..cand.len());
                cand[k] = phones.choose(rng).expect("inventory").clone();
            }
            if !known.contains(&cand) && cand.windows(2).all(|w| w[0] != w[1]) {
                nonword = Some(cand);
                break;
            }
        }
        let Some(nonword) = nonword else { continue };
        let illegal = format!("{word}_x");
        scores.insert(word.clone(), lm.score(&as_refs(seq)));
        scores.insert(illegal.clone(), lm.score(&as_refs(&nonword)));
        pairs.push(ContrastPair {
            pair_id: format!("lex{i:04}"),
            legal: word.clone(),
            illegal,
        });
    }
    (pairs, scores)
}

/// Utterance word orders against their reversal, scored by a word bigram
/// model of the corpus.
fn syntactic_material(corpus: &GoldCorpus) -> (Vec<ContrastPair>, ScoreTable) {
    let sentences: Vec<(&str, Vec<&str>)> = corpus
        .iter()
        .map(|u| {
            (
                u.id.as_str(),
                u.words.iter().map(|w| w.word.as_str()).collect(),
            )
        })
        .collect();
    let vocab = sentences
        .iter()
        .flat_map(|s| s.1.iter())
        .collect::<BTreeSet<_>>()
        .len();
    let lm = Bigram::train(sentences.iter().map(|s| s.1.clone()), vocab);
    let mut pairs = Vec::new();
    let mut scores = ScoreTable::new();
    for (id, words) in &sentences {
        let reversed: Vec<&str> = words.iter().rev().copied().collect();
        if reversed == *words {
            continue;
        }
        let (legal, illegal) = (format!("{id}_fwd"), format!("{id}_rev"));
        scores.insert(legal.clone(), lm.score(words));
        scores.insert(illegal.clone(), lm.score(&reversed));
        pairs.push(ContrastPair {
            pair_id: format!("syn_{id}"),
            legal,
            illegal,
        });
    }
    (pairs, scores)
}

/// Up to this many tokens per word are exported as semantic embeddings.
const TOKENS_PER_WORD: usize = 3;
/// Similarity records cover pairs among this many attested words.
const SIMILARITY_WORDS: usize = 30;

/// Human-like similarity of attested word pairs (phonological overlap on
/// a 0-10 scale, split over two datasets) and word-token embeddings.
fn semantic_material(
    lexicon: &BTreeMap<String, Vec<String>>,
    corpus: &GoldCorpus,
    features: &BTreeMap<String, FeatureSequence>,
) -> Result<(Vec<SimilarityRecord>, BTreeMap<String, FeatureSequence>)> {
    let mut tokens: BTreeMap<&str, usize> = BTreeMap::new();
    let mut semantic = BTreeMap::new();
    for u in corpus.iter() {
        let seq = &features[&u.id];
        for w in &u.words {
            let k = tokens.entry(w.word.as_str()).or_insert(0);
            if *k >= TOKENS_PER_WORD {
                continue;
            }
            let Ok(slice) = seq.slice(w.onset, w.offset) else {
                continue;
            };
            let key = format!("{}#{}", w.word, k);
            let frames = slice
                .frames()
                .zip(slice.times())
                .map(|(f, &t)| (t, f.to_vec()))
                .collect();
            semantic.insert(key.clone(), FeatureSequence::new(key, frames)?);
            *k += 1;
        }
    }
    let attested: Vec<&str> = tokens
        .iter()
        .filter(|(w, &k)| k > 0 && semantic.contains_key(&format!("{w}#0")))
        .map(|(w, _)| *w)
        .take(SIMILARITY_WORDS)
        .collect();
    let mut records = Vec::new();
    for (i, a) in attested.iter().enumerate() {
        for (j, b) in attested.iter().enumerate().skip(i + 1) {
            let (pa, pb) = (&lexicon[*a], &lexicon[*b]);
            let len = pa.len().max(pb.len());
            let same = len - tde::edit_distance(pa, pb);
            records.push(SimilarityRecord {
                word1: a.to_string(),
                word2: b.to_string(),
                human_score: 10.0 * same as f64 / len as f64,
                dataset: if (i + j) % 2 == 0 { "synth" } else { "libri" }.into(),
            });
        }
    }
    Ok((records, semantic))
}

impl SyntheticCorpus {
    /// Writes `corpus/` (gold files and probe definitions), `submission/`
    /// (features, units, classes, scores, semantic embeddings) and
    /// `spec.json` under `out`.
    pub fn write(&self, out: &Path) -> Result<()> {
        let gold = out.join("corpus");
        let sub = out.join("submission");
        for dir in [
            gold.clone(),
            sub.join("features"),
            sub.join("units"),
            sub.join("semantic"),
        ] {
            std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
        }
        let write = |path: std::path::PathBuf, text: String| {
            std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
        };
        write(
            out.join("spec.json"),
            serde_json::to_string_pretty(&self.spec)? + "\n",
        )?;
        write(
            gold.join("phones.txt"),
            corpus::format_phone_alignment(&self.corpus),
        )?;
        write(
            gold.join("words.txt"),
            corpus::format_word_alignment(&self.corpus),
        )?;
        write(
            gold.join("speakers.txt"),
            corpus::format_speakers(&self.corpus),
        )?;
        write(
            gold.join("durations.txt"),
            corpus::format_durations(&self.corpus),
        )?;
        write(
            gold.join("lexicon.txt"),
            self.lexicon
                .iter()
                .map(|(w, p)| format!("{w} {}\n", p.join(" ")))
                .collect(),
        )?;
        write(
            gold.join("lexical_pairs.txt"),
            format_pairs(&self.lexical_pairs),
        )?;
        write(
            gold.join("syntactic_pairs.txt"),
            format_pairs(&self.syntactic_pairs),
        )?;
        write(
            gold.join("similarity.txt"),
            format_similarity(&self.similarity),
        )?;

        for (id, seq) in &self.features {
            write(
                sub.join("features").join(format!("{id}.txt")),
                corpus::format_features(seq),
            )?;
        }
        for (id, units) in &self.units {
            write(
                sub.join("units").join(format!("{id}.txt")),
                units.iter().map(|(t, s)| format!("{t} {s}\n")).collect(),
            )?;
        }
        for (id, seq) in &self.semantic {
            write(
                sub.join("semantic").join(format!("{id}.txt")),
                corpus::format_features(seq),
            )?;
        }
        write(
            sub.join("classes.txt"),
            corpus::format_class_file(&self.classes),
        )?;
        write(
            sub.join("lexical_scores.txt"),
            corpus::format_score_table(&self.lexical_scores),
        )?;
        write(
            sub.join("syntactic_scores.txt"),
            corpus::format_score_table(&self.syntactic_scores),
        )?;
        Ok(())
    }
}

pub fn format_pairs(pairs: &[ContrastPair]) -> String {
    pairs
        .iter()
        .map(|p| format!("{} {} {}\n", p.pair_id, p.legal, p.illegal))
        .collect()
}

pub fn format_similarity(records: &[SimilarityRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            r.word1, r.word2, r.human_score, r.dataset
        );
    }
    out
}

/// Random clusters mixing word-aligned, phone-aligned and arbitrary
/// fragments, with millisecond jitter and occasional duplicates.
pub fn random_class_file(corpus: &GoldCorpus, seed: u64, max_fragments: usize) -> ClusterSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let utts: Vec<&Utterance> = corpus.iter().filter(|u| !u.phones.is_empty()).collect();
    let to_ms = |t: f64| (t * 1000.0).round() as i64;
    let mut set = ClusterSet::default();
    let n_clusters = rng.random_range(1..=12usize);
    let mut budget = max_fragments.max(1);
    for c in 0..n_clusters {
        let size = rng.random_range(1..=8usize).min(budget);
        let mut frags: Vec<Fragment> = Vec::new();
        for _ in 0..size {
            let u = *utts.choose(&mut rng).expect("corpus has phones");
            let dur = to_ms(u.duration);
            let (on, off) = match rng.random_range(0..10) {
                0 if !frags.is_empty() => {
                    let f = frags.choose(&mut rng).expect("non-empty").clone();
                    frags.push(f);
                    continue;
                }
                0..=3 if !u.words.is_empty() => {
                    let w = u.words.choose(&mut rng).expect("words");
                    (to_ms(w.onset), to_ms(w.offset))
                }
                0..=6 => {
                    let k = rng.random_range(0..u.phones.len());
                    let n = rng.random_range(1..=5usize).min(u.phones.len() - k);
                    (to_ms(u.phones[k].onset), to_ms(u.phones[k + n - 1].offset))
                }
                _ => {
                    let on = rng.random_range(0..dur.max(1));
                    (on, on + rng.random_range(20..=600))
                }
            };
            let jitter = |rng: &mut ChaCha8Rng| {
                if rng.random_bool(0.5) {
                    rng.random_range(-20..=20)
                } else {
                    0
                }
            };
            let on = (on + jitter(&mut rng)).clamp(0, dur - 1);
            let off = (off + jitter(&mut rng)).clamp(on + 1, dur);
            frags.push(Fragment {
                utterance: u.id.clone(),
                onset: on as f64 / 1000.0,
                offset: off as f64 / 1000.0,
            });
        }
        budget -= frags.len().min(budget);
        set.clusters.insert(format!("c{c}"), frags);
        if budget == 0 {
            break;
        }
    }
    set
}

/// Consecutive fragments of `period` seconds, one cluster each.
pub fn periodic_segmentation(corpus: &GoldCorpus, period: f64) -> ClusterSet {
    let mut set = ClusterSet::default();
    for u in corpus.iter() {
        let mut t = u.start();
        while t < u.duration - 1e-9 {
            let end = (t + period).min(u.duration);
            let id = format!("{}", set.clusters.len());
            set.clusters.insert(
                id,
                vec![Fragment {
                    utterance: u.id.clone(),
                    onset: t,
                    offset: end,
                }],
            );
            t = end;
        }
    }
    set
}

// ---------------------------------------------------------------------------
// ABX oracle

struct Token {
    center: String,
    context: (String, String),
    speaker: String,
    frames: Vec<Vec<f64>>,
}

/// Plain DTW over a full table: minimum summed cost, preferring a
/// diagonal, then a row advance, then a column advance on equal cost;
/// cost divided by the path length.
fn naive_dtw(a: &[Vec<f64>], b: &[Vec<f64>], kind: DissimKind) -> Result<f64> {
    let (n, m) = (a.len(), b.len());
    let mut cost = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            cost[i][j] = match kind {
                DissimKind::Angular => dissim::angular(&a[i], &b[j]),
                DissimKind::SymmetricKl => dissim::symmetric_kl(&a[i], &b[j])?,
            };
        }
    }
    let mut acc = vec![vec![(0.0f64, 0usize); m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut best: Option<(f64, usize)> = None;
            for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
                if i >= di && j >= dj {
                    let cand = acc[i - di][j - dj];
                    if best.is_none_or(|b| cand.0 < b.0) {
                        best = Some(cand);
                    }
                }
            }
            let (c, len) = best.unwrap_or((0.0, 0));
            acc[i][j] = (c + cost[i][j], len + 1);
        }
    }
    let (c, len) = acc[n - 1][m - 1];
    Ok(c / len as f64)
}

fn mean_of(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Reference ABX error rate by exhaustive triple enumeration, path-length
/// normalized DTW.
pub fn oracle_abx(
    corpus: &GoldCorpus,
    features: &BTreeMap<String, FeatureSequence>,
    mode: Mode,
    kind: DissimKind,
) -> Result<f64> {
    let mut tokens = Vec::new();
    for u in corpus.iter() {
        let p = &u.phones;
        for k in 1..p.len().saturating_sub(1) {
            if [&p[k - 1], &p[k], &p[k + 1]]
                .iter()
                .any(|t| t.phone == SILENCE)
            {
                continue;
            }
            let seq = features
                .get(&u.id)
                .ok_or_else(|| Error::MissingFeatureFile(u.id.clone()))?;
            let frames: Vec<Vec<f64>> = seq
                .times()
                .iter()
                .enumerate()
                .filter(|(_, &t)| t >= p[k - 1].onset && t < p[k + 1].offset)
                .map(|(i, _)| seq.frame(i).to_vec())
                .collect();
            if frames.is_empty() {
                continue;
            }
            tokens.push(Token {
                center: p[k].phone.clone(),
                context: (p[k - 1].phone.clone(), p[k + 1].phone.clone()),
                speaker: u.speaker.clone(),
                frames,
            });
        }
    }

    let mut memo: HashMap<(usize, usize), f64> = HashMap::new();
    let mut d = |t: usize, x: usize| -> Result<f64> {
        if let Some(&v) = memo.get(&(t, x)) {
            return Ok(v);
        }
        let v = naive_dtw(&tokens[t].frames, &tokens[x].frames, kind)?;
        memo.insert((t, x), v);
        Ok(v)
    };

    let centers: BTreeSet<&String> = tokens.iter().map(|t| &t.center).collect();
    let contexts: BTreeSet<&(String, String)> = tokens.iter().map(|t| &t.context).collect();
    let speakers: BTreeSet<&String> = tokens.iter().map(|t| &t.speaker).collect();
    let select = |center: &str, ctx: &(String, String), spk: &str| -> Vec<usize> {
        (0..tokens.len())
            .filter(|&i| {
                tokens[i].center == center && &tokens[i].context == ctx && tokens[i].speaker == spk
            })
            .collect()
    };
    let centers: Vec<&String> = centers.into_iter().collect();

    let mut pair_scores = Vec::new();
    for (i, p1) in centers.iter().enumerate() {
        for p2 in &centers[i + 1..] {
            let mut context_scores = Vec::new();
            for ctx in &contexts {
                let mut speaker_scores = Vec::new();
                for s in &speakers {
                    let x_speakers: Vec<&String> = match mode {
                        Mode::Within => vec![*s],
                        Mode::Across => speakers.iter().copied().filter(|x| x != s).collect(),
                    };
                    for sx in x_speakers {
                        let a = select(p1, ctx, s);
                        let b = select(p2, ctx, s);
                        let xa = select(p1, ctx, sx);
                        let xb = select(p2, ctx, sx);
                        let enough = match mode {
                            Mode::Within => a.len() >= 2 && b.len() >= 2,
                            Mode::Across => {
                                !a.is_empty() && !b.is_empty() && !xa.is_empty() && !xb.is_empty()
                            }
                        };
                        if !enough {
                            continue;
                        }
                        let mut directional =
                            |a: &[usize], b: &[usize], xs: &[usize]| -> Result<f64> {
                                let (mut score, mut count) = (0.0, 0.0);
                                for &ai in a {
                                    for &bi in b {
                                        for &xi in xs {
                                            if xi == ai {
                                                continue;
                                            }
                                            let (dax, dbx) = (d(ai, xi)?, d(bi, xi)?);
                                            score += if dax < dbx {
                                                1.0
                                            } else if dax == dbx {
                                                0.5
                                            } else {
                                                0.0
                                            };
                                            count += 1.0;
                                        }
                                    }
                                }
                                Ok(score / count)
                            };
                        let ab = directional(&a, &b, &xa)?;
                        let ba = directional(&b, &a, &xb)?;
                        speaker_scores.push((ab + ba) / 2.0);
                    }
                }
                if !speaker_scores.is_empty() {
                    context_scores.push(mean_of(&speaker_scores));
                }
            }
            if !context_scores.is_empty() {
                pair_scores.push(mean_of(&context_scores));
            }
        }
    }
    if pair_scores.is_empty() {
        return Err(Error::NoCells);
    }
    Ok(1.0 - mean_of(&pair_scores))
}

// ---------------------------------------------------------------------------
// Term discovery oracle

struct Projected {
    utt: String,
    onset: f64,
    offset: f64,
    span: (usize, usize),
    transcript: Vec<String>,
}

fn naive_project(f: &Fragment, u: &Utterance) -> Projected {
    let mut kept = Vec::new();
    for (k, p) in u.phones.iter().enumerate() {
        let ov = f.offset.min(p.offset) - f.onset.max(p.onset);
        if ov > 0.0
            && (ov > tde::MIN_OVERLAP_SECONDS + 1e-9
                || ov > tde::MIN_OVERLAP_FRACTION * (p.offset - p.onset) + 1e-9)
        {
            kept.push(k);
        }
    }
    let span = match (kept.first(), kept.last()) {
        (Some(&s), Some(&e)) => (s, e + 1),
        _ => {
            let mid = (f.onset + f.offset) / 2.0;
            let mut best = 0;
            for k in 0..=u.phones.len() {
                let t = if k < u.phones.len() {
                    u.phones[k].onset
                } else {
                    u.phones[k - 1].offset
                };
                let tb = if best < u.phones.len() {
                    u.phones[best].onset
                } else {
                    u.phones[best - 1].offset
                };
                if (t - mid).abs() < (tb - mid).abs() {
                    best = k;
                }
            }
            (best, best)
        }
    };
    let transcript = u.phones[span.0..span.1]
        .iter()
        .filter(|p| p.phone != SILENCE)
        .map(|p| p.phone.clone())
        .collect();
    Projected {
        utt: f.utterance.clone(),
        onset: f.onset,
        offset: f.offset,
        span,
        transcript,
    }
}

fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in t[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
        }
    }
    t[a.len()][b.len()]
}

fn overlaps(a: &Projected, b: &Projected) -> bool {
    a.utt == b.utt && a.offset.min(b.offset) - a.onset.max(b.onset) > 0.0
}

fn prf(hits: usize, found: usize, gold: usize) -> Prf {
    let p = if found == 0 {
        0.0
    } else {
        hits as f64 / found as f64
    };
    let r = if gold == 0 {
        0.0
    } else {
        hits as f64 / gold as f64
    };
    Prf::new(p, r)
}

/// Reference term discovery scores with every pair materialized.
pub fn oracle_tde(corpus: &GoldCorpus, clusters: &ClusterSet) -> Result<TdeReport> {
    clusters.validate(corpus)?;
    let mut frags: Vec<Projected> = Vec::new();
    let mut cluster_of: Vec<usize> = Vec::new();
    for (ci, members) in clusters.clusters.values().enumerate() {
        for f in members {
            let u = corpus
                .get(&f.utterance)
                .ok_or_else(|| Error::UnknownUtterance(f.utterance.clone()))?;
            frags.push(naive_project(f, u));
            cluster_of.push(ci);
        }
    }
    let n = frags.len();
    let valid = |i: usize| !frags[i].transcript.is_empty();
    let mut report = TdeReport {
        counts: TdeCounts {
            clusters: clusters.clusters.len(),
            fragments: n,
            empty_fragments: (0..n).filter(|&i| !valid(i)).count(),
            ..TdeCounts::default()
        },
        ..TdeReport::default()
    };

    // NED
    let (mut ned_values, mut skipped) = (Vec::new(), 0);
    for i in 0..n {
        for j in i + 1..n {
            if cluster_of[i] != cluster_of[j] {
                continue;
            }
            if !valid(i) || !valid(j) {
                skipped += 1;
                continue;
            }
            let (a, b) = (&frags[i].transcript, &frags[j].transcript);
            ned_values.push(levenshtein(a, b) as f64 / a.len().max(b.len()) as f64);
        }
    }
    // summed in sorted order so fragment order cannot matter
    ned_values.sort_by(f64::total_cmp);
    let ned_pairs = ned_values.len();
    report.ned = if ned_pairs > 0 {
        ned_values.iter().sum::<f64>() / ned_pairs as f64
    } else {
        0.0
    };
    report.counts.ned_pairs = ned_pairs;
    report.counts.ned_skipped_pairs = skipped;

    // discoverable part and coverage
    let mut ngram_count: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    let windows = |u: &Utterance| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for s in 0..u.phones.len() {
            for len in tde::MIN_NGRAM..=tde::MAX_NGRAM {
                let e = s + len;
                if e <= u.phones.len() && u.phones[s..e].iter().all(|p| p.phone != SILENCE) {
                    out.push((s, e));
                }
            }
        }
        out
    };
    let phones_of = |u: &Utterance, s: usize, e: usize| {
        u.phones[s..e]
            .iter()
            .map(|p| p.phone.clone())
            .collect::<Vec<_>>()
    };
    for u in corpus.iter() {
        for (s, e) in windows(u) {
            *ngram_count.entry(phones_of(u, s, e)).or_insert(0) += 1;
        }
    }
    let mut discoverable: BTreeSet<(String, usize)> = BTreeSet::new();
    for u in corpus.iter() {
        for (s, e) in windows(u) {
            if ngram_count[&phones_of(u, s, e)] >= 2 {
                for k in s..e {
                    discoverable.insert((u.id.clone(), k));
                }
            }
        }
    }
    report.counts.discoverable_phones = discoverable.len();
    let covered: BTreeSet<(String, usize)> = frags
        .iter()
        .flat_map(|f| (f.span.0..f.span.1).map(move |k| (f.utt.clone(), k)))
        .filter(|k| discoverable.contains(k))
        .collect();
    report.coverage = if discoverable.is_empty() {
        0.0
    } else {
        covered.len() as f64 / discoverable.len() as f64
    };

    // grouping
    let cluster_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| cluster_of[i] == cluster_of[j] && valid(i) && valid(j))
        .collect();
    let gold_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            valid(i)
                && valid(j)
                && frags[i].transcript == frags[j].transcript
                && !overlaps(&frags[i], &frags[j])
        })
        .collect();
    let types: BTreeSet<&Vec<String>> = (0..n)
        .filter(|&i| valid(i))
        .map(|i| &frags[i].transcript)
        .collect();
    let occ_total: usize = 2 * cluster_pairs.len();
    let (mut precision, mut recall) = (0.0, 0.0);
    for t in &types {
        let is_t = |i: usize| &frags[i].transcript == *t;
        let occ = cluster_pairs
            .iter()
            .map(|&(i, j)| usize::from(is_t(i)) + usize::from(is_t(j)))
            .sum::<usize>();
        let with_t = cluster_pairs
            .iter()
            .filter(|&&(i, j)| is_t(i) || is_t(j))
            .count();
        let good = cluster_pairs
            .iter()
            .filter(|&&(i, j)| is_t(i) && is_t(j) && !overlaps(&frags[i], &frags[j]))
            .count();
        let gold = gold_pairs.iter().filter(|&&(i, _)| is_t(i)).count();
        if with_t > 0 {
            precision += occ as f64 / occ_total as f64 * (good as f64 / with_t as f64);
        }
        if gold > 0 {
            recall += gold as f64 / gold_pairs.len() as f64 * (good as f64 / gold as f64);
        }
    }
    report.grouping = Prf::new(precision, recall);
    report.counts.cluster_pairs = cluster_pairs.len() as u64;
    report.counts.gold_pairs = gold_pairs.len() as u64;

    // types
    let in_range = |t: &Vec<String>| t.len() >= tde::MIN_NGRAM && t.len() <= tde::MAX_NGRAM;
    let found_types: BTreeSet<&Vec<String>> = frags
        .iter()
        .map(|f| &f.transcript)
        .filter(|t| in_range(t))
        .collect();
    let gold_types: BTreeSet<Vec<String>> = corpus
        .iter()
        .flat_map(|u| {
            u.words.iter().map(move |w| {
                u.phones[w.phone_span.0..w.phone_span.1]
                    .iter()
                    .filter(|p| p.phone != SILENCE)
                    .map(|p| p.phone.clone())
                    .collect()
            })
        })
        .filter(in_range)
        .collect();
    report.types = prf(
        found_types
            .iter()
            .filter(|t| gold_types.contains(**t))
            .count(),
        found_types.len(),
        gold_types.len(),
    );

    // tokens and boundaries
    let inner = |utt: &str, k: usize| k > 0 && k < corpus.get(utt).map_or(0, |u| u.phones.len());
    let found_tokens: BTreeSet<(String, usize, usize)> = frags
        .iter()
        .filter(|f| f.span.1 > f.span.0)
        .map(|f| (f.utt.clone(), f.span.0, f.span.1))
        .collect();
    let found_bounds: BTreeSet<(String, usize)> = frags
        .iter()
        .flat_map(|f| [f.span.0, f.span.1].map(|k| (f.utt.clone(), k)))
        .filter(|(u, k)| inner(u, *k))
        .collect();
    let gold_tokens: BTreeSet<(String, usize, usize)> = corpus
        .iter()
        .flat_map(|u| {
            u.words
                .iter()
                .map(move |w| (u.id.clone(), w.phone_span.0, w.phone_span.1))
        })
        .collect();
    let gold_bounds: BTreeSet<(String, usize)> = gold_tokens
        .iter()
        .flat_map(|(u, s, e)| [(u.clone(), *s), (u.clone(), *e)])
        .filter(|(u, k)| inner(u, *k))
        .collect();
    report.token = prf(
        found_tokens.intersection(&gold_tokens).count(),
        found_tokens.len(),
        gold_tokens.len(),
    );
    report.boundary = prf(
        found_bounds.intersection(&gold_bounds).count(),
        found_bounds.len(),
        gold_bounds.len(),
    );
    Ok(report)
}
