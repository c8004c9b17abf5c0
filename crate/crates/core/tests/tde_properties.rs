mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zrc::corpus::ClusterSet;
use zrc::synth::{self, EmbeddingScheme};
use zrc::tde::{self, Projection, TdeReport};

/// Renames classes in a random order and shuffles fragments inside each.
fn reshuffle(set: &ClusterSet, seed: u64) -> ClusterSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = (0..set.clusters.len()).collect();
    ids.shuffle(&mut rng);
    let mut clusters = BTreeMap::new();
    for (fragments, id) in set.clusters.values().zip(ids) {
        let mut fragments = fragments.clone();
        fragments.shuffle(&mut rng);
        clusters.insert(format!("c{id:04}"), fragments);
    }
    ClusterSet { clusters }
}

fn scores(r: &TdeReport) -> Vec<f64> {
    let mut v = vec![r.ned, r.coverage];
    for p in [r.grouping, r.types, r.token, r.boundary] {
        v.extend([p.precision, p.recall, p.fscore]);
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cluster_order_does_not_change_reports(seed in 0u64..1000, shuffle in any::<u64>()) {
        let s = synth::generate(&common::small_spec(seed, EmbeddingScheme::GoldOneHot)).unwrap();
        let set = synth::random_class_file(&s.corpus, seed, 60);
        let shuffled = reshuffle(&set, shuffle);
        let a = tde::run_tde(&set, &s.corpus).unwrap();
        let b = tde::run_tde(&shuffled, &s.corpus).unwrap();
        prop_assert_eq!(scores(&a), scores(&b));
        prop_assert_eq!(&a.counts, &b.counts);
        let oa = synth::oracle_tde(&s.corpus, &set).unwrap();
        let ob = synth::oracle_tde(&s.corpus, &shuffled).unwrap();
        prop_assert_eq!(scores(&oa), scores(&ob));
    }

    #[test]
    fn scores_are_bounded(seed in 0u64..1000) {
        let s = synth::generate(&common::small_spec(seed, EmbeddingScheme::GoldOneHot)).unwrap();
        let set = synth::random_class_file(&s.corpus, seed ^ 0x5eed, 80);
        let r = tde::run_tde(&set, &s.corpus).unwrap();
        for v in scores(&r) {
            prop_assert!((0.0..=1.0).contains(&v), "{} out of range", v);
        }
    }

    #[test]
    fn token_hits_imply_boundary_hits(seed in 0u64..1000, keep in 0.0f64..1.0) {
        // Gold words with some dropped: every discovered token is a hit,
        // so boundary precision must be perfect as well.
        let s = synth::generate(&common::small_spec(seed, EmbeddingScheme::GoldOneHot)).unwrap();
        let gold = tde::gold_word_clusters(&s.corpus);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clusters = BTreeMap::new();
        for (id, frags) in gold.clusters {
            let kept: Vec<_> = frags.into_iter().filter(|_| rand::Rng::random_bool(&mut rng, keep)).collect();
            if !kept.is_empty() {
                clusters.insert(id, kept);
            }
        }
        prop_assume!(!clusters.is_empty());
        let set = ClusterSet { clusters };
        let projection = Projection::new(&set, &s.corpus).unwrap();
        let seg = tde::segmentation(&projection, &s.corpus);
        prop_assert_eq!(seg.token.precision, 1.0);
        prop_assert!(seg.boundary.precision == 1.0 || seg.boundary.recall == 0.0);
    }
}

#[test]
fn periodic_baseline_is_reported() {
    let s = synth::generate(&common::integration_spec()).unwrap();
    let baseline = synth::periodic_segmentation(&s.corpus, 0.120);
    let r = tde::run_tde(&baseline, &s.corpus).unwrap();
    eprintln!(
        "120 ms periodic segmentation: token F {:.3}, boundary F {:.3}, ned {:.3}, coverage {:.3}",
        r.token.fscore, r.boundary.fscore, r.ned, r.coverage
    );
    let gold = tde::run_tde(&tde::gold_word_clusters(&s.corpus), &s.corpus).unwrap();
    assert!(r.token.fscore < gold.token.fscore);
}
