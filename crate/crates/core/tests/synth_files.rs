mod common;

use std::collections::BTreeSet;

use zrc::abx::{self, AbxConfig, Mode};
use zrc::bitrate;
use zrc::corpus::{self, GoldCorpus};
use zrc::dissim::DissimKind;
use zrc::lmeval;
use zrc::synth::{self, EmbeddingScheme, ToyLanguageSpec};

#[test]
fn every_parser_accepts_written_files() {
    let schemes = [
        EmbeddingScheme::GoldOneHot,
        EmbeddingScheme::NoisyOneHot { sigma: 0.4 },
        EmbeddingScheme::SpeakerShifted {
            sigma: 0.1,
            sigma_speaker: 0.5,
        },
        EmbeddingScheme::Posteriorgram {
            sigma: 0.3,
            temperature: 0.5,
        },
    ];
    for (seed, scheme) in schemes.into_iter().enumerate() {
        let mut spec = common::integration_spec();
        spec.seed = seed as u64;
        spec.embedding = scheme;
        let s = synth::generate(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        s.write(dir.path()).unwrap();
        let (gold_dir, sub) = (dir.path().join("corpus"), dir.path().join("submission"));

        let gold = GoldCorpus::load_dir(&gold_dir).unwrap();
        assert_eq!(gold, s.corpus);
        let spec_back = ToyLanguageSpec::from_json(
            &std::fs::read_to_string(dir.path().join("spec.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(spec_back, spec);

        let features = corpus::load_all_features(&sub.join("features")).unwrap();
        assert_eq!(features.len(), s.features.len());
        for (id, seq) in &features {
            let orig = &s.features[id];
            assert_eq!((seq.len(), seq.dim()), (orig.len(), orig.dim()));
        }

        let classes = corpus::read_class_file(&sub.join("classes.txt")).unwrap();
        classes.validate(&gold).unwrap();
        assert_eq!(classes.fragment_count(), s.classes.fragment_count());

        let seqs = bitrate::load_units(&sub.join("units"), &gold.durations(), Some(&gold)).unwrap();
        assert_eq!(seqs.len(), s.units.len());

        let lexical = lmeval::read_pair_file(&gold_dir.join("lexical_pairs.txt")).unwrap();
        assert_eq!(lexical, s.lexical_pairs);
        let syntactic = lmeval::read_pair_file(&gold_dir.join("syntactic_pairs.txt")).unwrap();
        assert_eq!(syntactic, s.syntactic_pairs);
        let scores = corpus::read_score_table(&sub.join("lexical_scores.txt")).unwrap();
        assert_eq!(scores.len(), s.lexical_scores.len());
        corpus::read_score_table(&sub.join("syntactic_scores.txt")).unwrap();

        let similarity = lmeval::read_similarity_file(&gold_dir.join("similarity.txt")).unwrap();
        assert_eq!(similarity.len(), s.similarity.len());
        let semantic = corpus::load_all_features(&sub.join("semantic")).unwrap();
        assert_eq!(semantic.len(), s.semantic.len());

        let items = abx::extract_items(&gold, &BTreeSet::new());
        let written = abx::parse_item_file(&abx::format_item_file(&items)).unwrap();
        assert_eq!(written, items);
    }
}

#[test]
fn speaker_offsets_hurt_across_more_than_within() {
    let mut spec = ToyLanguageSpec::new(6, 4, 60, 9);
    spec.lexicon_size = 16;
    spec.word_length = (1, 4);
    spec.embedding = EmbeddingScheme::SpeakerShifted {
        sigma: 0.05,
        sigma_speaker: 1.5,
    };
    let s = synth::generate(&spec).unwrap();
    let items = abx::extract_items(&s.corpus, &BTreeSet::new());
    let score = |mode| {
        abx::score_items(
            &items,
            &s.features,
            &AbxConfig::new(mode, DissimKind::Angular),
        )
        .unwrap()
    };
    let (within, across) = (score(Mode::Within), score(Mode::Across));
    eprintln!(
        "within {:.4} across {:.4}",
        within.error_rate, across.error_rate
    );
    assert!(across.error_rate > within.error_rate);
}

#[test]
fn generation_is_reproducible_on_disk() {
    let spec = common::integration_spec();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth::generate(&spec).unwrap().write(a.path()).unwrap();
    synth::generate(&spec).unwrap().write(b.path()).unwrap();
    assert_eq!(common::tree(a.path()), common::tree(b.path()));
    let mut other = spec.clone();
    other.seed += 1;
    let c = tempfile::tempdir().unwrap();
    synth::generate(&other).unwrap().write(c.path()).unwrap();
    assert_ne!(common::tree(a.path()), common::tree(c.path()));
}
