mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use zrc::corpus::FeatureSequence;
use zrc::lmeval::{self, Pooling};
use zrc::synth::{self, EmbeddingScheme};

fn scaled(
    features: &BTreeMap<String, FeatureSequence>,
    factor: f64,
) -> BTreeMap<String, FeatureSequence> {
    features
        .iter()
        .map(|(id, seq)| {
            let frames = (0..seq.len())
                .map(|i| {
                    (
                        seq.times()[i],
                        seq.frame(i).iter().map(|x| x * factor).collect(),
                    )
                })
                .collect();
            (
                id.clone(),
                FeatureSequence::new(id.clone(), frames).unwrap(),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mean_pooled_ssimi_ignores_embedding_scale(seed in 0u64..500, factor in 0.01f64..100.0) {
        let mut spec = common::integration_spec();
        spec.seed = seed;
        spec.embedding = EmbeddingScheme::NoisyOneHot { sigma: 0.5 };
        let s = synth::generate(&spec).unwrap();
        let base = lmeval::ssimi(&s.similarity, &lmeval::group_word_tokens(s.semantic.clone()), Pooling::Mean);
        let other = lmeval::ssimi(&s.similarity, &lmeval::group_word_tokens(scaled(&s.semantic, factor)), Pooling::Mean);
        match (base, other) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a.weighted - b.weighted).abs() < 1e-9, "{} vs {}", a.weighted, b.weighted);
                prop_assert_eq!(a.per_dataset.len(), b.per_dataset.len());
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }
}
