#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use zrc::abx;
use zrc::corpus::{self, FeatureSequence};
use zrc::synth::{self, EmbeddingScheme, SyntheticCorpus, ToyLanguageSpec};

/// Small corpora (at most `max_items` triphone items) with enough repeated
/// contexts to fill within and across cells.
pub fn small_spec(seed: u64, embedding: EmbeddingScheme) -> ToyLanguageSpec {
    let speakers = 2 + seed.is_multiple_of(3) as usize;
    let mut spec = ToyLanguageSpec::new(4, speakers, 30, seed);
    spec.lexicon_size = 8;
    spec.word_length = (1, 3);
    spec.words_per_utterance = (2, 4);
    spec.embedding = embedding;
    spec
}

/// Generates `spec`, dropping utterances until at most `max_items` items
/// remain.
pub fn generate_capped(spec: &ToyLanguageSpec, max_items: usize) -> SyntheticCorpus {
    let mut spec = spec.clone();
    loop {
        let s = synth::generate(&spec).expect("valid spec");
        let n = abx::extract_items(&s.corpus, &BTreeSet::new()).len();
        if n <= max_items || spec.utterances == 1 {
            return s;
        }
        spec.utterances -= 1;
    }
}

pub fn write_features(dir: &Path, features: &BTreeMap<String, FeatureSequence>) {
    std::fs::create_dir_all(dir).unwrap();
    for (id, seq) in features {
        std::fs::write(dir.join(format!("{id}.txt")), corpus::format_features(seq)).unwrap();
    }
}

/// The corpus used by the command-line tests.
pub fn integration_spec() -> ToyLanguageSpec {
    let mut spec = ToyLanguageSpec::new(6, 3, 24, 77);
    spec.lexicon_size = 12;
    spec.word_length = (1, 5);
    spec.words_per_utterance = (2, 5);
    spec.embedding = EmbeddingScheme::SpeakerShifted {
        sigma: 0.2,
        sigma_speaker: 0.3,
    };
    spec
}

/// Writes the integration corpus under `root` and returns `root`.
pub fn write_integration_corpus(root: &Path) -> PathBuf {
    synth::generate(&integration_spec())
        .unwrap()
        .write(root)
        .unwrap();
    root.to_path_buf()
}

pub fn zrc_bin() -> &'static str {
    env!("CARGO_BIN_EXE_zrc")
}

/// Relative path and contents of every file below `root`.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Roughly `items` triphone items over 12 phones and 4 speakers, with
/// 39-dim noisy one-hot frames.
pub fn performance_spec(items: usize) -> ToyLanguageSpec {
    let mut spec = ToyLanguageSpec::new(12, 4, items / 14 + 1, 2024);
    spec.lexicon_size = 60;
    spec.word_length = (2, 5);
    spec.words_per_utterance = (3, 6);
    spec.feature_dim = Some(39);
    spec.embedding = EmbeddingScheme::NoisyOneHot { sigma: 0.3 };
    spec
}
