//! Natural-language slice descriptions: prototypes in the shared embedding
//! space are matched against a corpus of phrase embeddings.

mod corpus;

use thiserror::Error;

use crate::dataset::{
    DataError, EmbeddingMatrix, LabeledSplit, RankedPhrase, SliceDescription, SliceScores,
};
use crate::scalar::Scalar;

pub use corpus::PhraseCorpus;

#[derive(Debug, Error)]
pub enum DescribeError {
    #[error("slice weights sum to zero")]
    ZeroMass,
    #[error("class {0} has no examples")]
    EmptyClass(usize),
    #[error("phrase corpus is empty")]
    EmptyCorpus,
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("synonym map: {0}")]
    Json(#[from] serde_json::Error),
}

/// A slice's weighted mean embedding and its most common class.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePrototype {
    pub vector: Vec<f64>,
    pub slice: usize,
    pub dominant_class: usize,
}

fn weighted_mean<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    weights: &[f64],
) -> Result<Vec<f64>, DescribeError> {
    if weights.len() != emb.n() {
        return Err(DescribeError::InvalidInput(format!(
            "{} weights for {} examples",
            weights.len(),
            emb.n()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(DescribeError::ZeroMass);
    }
    let mut out = vec![0.0; emb.d()];
    for (z, &w) in emb.rows().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(z) {
            *o += w * v.as_f64();
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(out)
}

/// `sum_i w_i z_i / sum_i w_i`.
pub fn slice_prototype<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    weights: &[f64],
) -> Result<Vec<f64>, DescribeError> {
    weighted_mean(emb, weights)
}

/// Unweighted mean embedding of class `c`.
pub fn class_prototype<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    c: usize,
) -> Result<Vec<f64>, DescribeError> {
    let weights: Vec<f64> = split
        .labels()
        .iter()
        .map(|&y| if y == c { 1.0 } else { 0.0 })
        .collect();
    weighted_mean(emb, &weights).map_err(|e| match e {
        DescribeError::ZeroMass => DescribeError::EmptyClass(c),
        other => other,
    })
}

/// Class carrying the most score-weighted label mass, ties to the lower class.
pub fn dominant_class(split: &LabeledSplit, weights: &[f64]) -> usize {
    let mut mass = vec![0.0; split.num_classes()];
    for (&y, &w) in split.labels().iter().zip(weights) {
        mass[y] += w;
    }
    crate::dataset::argmax_lower(&mass)
}

/// Prototype of column `slice` of `scores` on the fitting data.
pub fn build_prototype<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    scores: &SliceScores<T>,
    slice: usize,
) -> Result<SlicePrototype, DescribeError> {
    if slice >= scores.k_hat() {
        return Err(DescribeError::InvalidInput(format!(
            "no score column {slice}"
        )));
    }
    let weights: Vec<f64> = scores.column(slice).iter().map(|v| v.as_f64()).collect();
    Ok(SlicePrototype {
        vector: slice_prototype(emb, &weights)?,
        slice,
        dominant_class: dominant_class(split, &weights),
    })
}

/// Phrases ordered by agreement with the distilled prototype.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub phrases: Vec<RankedPhrase>,
    /// Set when the distilled prototype is the zero vector.
    pub degenerate: bool,
}

/// Ranks corpus phrases by `z_text . (prototype - class_prototype)`, or by
/// cosine similarity when `cosine` is set. Ties keep corpus order; `top`
/// truncates the list.
pub fn rank_phrases(
    proto: &SlicePrototype,
    class_proto: &[f64],
    corpus: &PhraseCorpus,
    top: usize,
    cosine: bool,
) -> Result<Ranking, DescribeError> {
    if corpus.is_empty() {
        return Err(DescribeError::EmptyCorpus);
    }
    let d = corpus.embeddings().d();
    for found in [proto.vector.len(), class_proto.len()] {
        if found != d {
            return Err(DescribeError::DimensionMismatch { expected: d, found });
        }
    }
    let query: Vec<f64> = proto
        .vector
        .iter()
        .zip(class_proto)
        .map(|(a, b)| a - b)
        .collect();
    let query_norm = query.iter().map(|v| v * v).sum::<f64>().sqrt();
    let degenerate = query_norm == 0.0;
    let scores: Vec<f64> = corpus
        .embeddings()
        .rows()
        .map(|t| {
            let dot: f64 = t.iter().zip(&query).map(|(a, b)| a * b).sum();
            if cosine && !degenerate {
                let tn = t.iter().map(|v| v * v).sum::<f64>().sqrt();
                if tn > 0.0 {
                    dot / (tn * query_norm)
                } else {
                    0.0
                }
            } else {
                dot
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(top);
    Ok(Ranking {
        phrases: order
            .into_iter()
            .map(|i| RankedPhrase {
                phrase: corpus.phrases()[i].clone(),
                score: scores[i],
            })
            .collect(),
        degenerate,
    })
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn contains_tokens(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Whether `name` or any synonym occurs as whole tokens in one of the first
/// `k` phrases.
pub fn name_recall_at_k(
    ranked: &[RankedPhrase],
    name: &str,
    synonyms: &[String],
    k: usize,
) -> bool {
    let targets: Vec<Vec<String>> = std::iter::once(name)
        .chain(synonyms.iter().map(String::as_str))
        .map(tokenize)
        .collect();
    ranked.iter().take(k).any(|p| {
        let tokens = tokenize(&p.phrase);
        targets.iter().any(|t| contains_tokens(&tokens, t))
    })
}

/// Describes every score column using prototypes built on the fitting data.
pub fn describe_slices<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    scores: &SliceScores<T>,
    corpus: &PhraseCorpus,
    top: usize,
    cosine: bool,
) -> Result<Vec<SliceDescription>, DescribeError> {
    let class_protos: Vec<Option<Vec<f64>>> = (0..split.num_classes())
        .map(|c| match class_prototype(emb, split, c) {
            Ok(v) => Ok(Some(v)),
            Err(DescribeError::EmptyClass(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_, _>>()?;
    (0..scores.k_hat())
        .map(|j| {
            let proto = match build_prototype(emb, split, scores, j) {
                Ok(p) => p,
                Err(DescribeError::ZeroMass) => {
                    return Ok(SliceDescription {
                        slice: j,
                        dominant_class: 0,
                        phrases: Vec::new(),
                        degenerate: true,
                    })
                }
                Err(e) => return Err(e),
            };
            let class_proto = class_protos[proto.dominant_class]
                .clone()
                .ok_or(DescribeError::EmptyClass(proto.dominant_class))?;
            let ranking = rank_phrases(&proto, &class_proto, corpus, top, cosine)?;
            Ok(SliceDescription {
                slice: j,
                dominant_class: proto.dominant_class,
                phrases: ranking.phrases,
                degenerate: ranking.degenerate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SplitParts;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_emb(n: usize, d: usize, seed: u64) -> EmbeddingMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        EmbeddingMatrix::new(
            n,
            d,
            (0..n * d)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect(),
        )
        .unwrap()
    }

    fn corpus(rows: Vec<Vec<f64>>) -> PhraseCorpus {
        let phrases = (0..rows.len()).map(|i| format!("phrase {i}")).collect();
        PhraseCorpus::new(phrases, EmbeddingMatrix::from_rows(&rows).unwrap()).unwrap()
    }

    fn phrase(s: &str) -> RankedPhrase {
        RankedPhrase {
            phrase: s.into(),
            score: 0.0,
        }
    }

    #[test]
    fn delta_and_uniform_weights() {
        let emb = random_emb(10, 3, 1);
        let mut w = vec![0.0; 10];
        w[4] = 2.5;
        assert_eq!(slice_prototype(&emb, &w).unwrap(), emb.row(4).to_vec());
        let mean = slice_prototype(&emb, &[1.0; 10]).unwrap();
        for k in 0..3 {
            let m: f64 = emb.rows().map(|r| r[k]).sum::<f64>() / 10.0;
            assert!((mean[k] - m).abs() < 1e-15);
        }
        assert!(matches!(
            slice_prototype(&emb, &[0.0; 10]),
            Err(DescribeError::ZeroMass)
        ));
    }

    #[test]
    fn weighted_mean_matches_two_pass_oracle() {
        let emb = random_emb(100, 8, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let proto = slice_prototype(&emb, &w).unwrap();
        let total: f64 = w.iter().sum();
        for k in 0..8 {
            let normalized: Vec<f64> = w.iter().map(|x| x / total).collect();
            let m: f64 = (0..100).map(|i| normalized[i] * emb.row(i)[k]).sum();
            assert!((proto[k] - m).abs() < 1e-10);
        }
    }

    #[test]
    fn class_prototypes_use_indicator_weights() {
        let emb = random_emb(6, 2, 4);
        let split = LabeledSplit::new(SplitParts {
            num_classes: 3,
            labels: vec![0, 1, 0, 1, 1, 0],
            predictions: vec![0; 6],
            prediction_probs: None,
            slice_names: vec!["s".into()],
            slices: vec![vec![false; 6]],
        })
        .unwrap();
        let p1 = class_prototype(&emb, &split, 1).unwrap();
        for k in 0..2 {
            let m = (emb.row(1)[k] + emb.row(3)[k] + emb.row(4)[k]) / 3.0;
            assert!((p1[k] - m).abs() < 1e-12);
        }
        assert!(matches!(
            class_prototype(&emb, &split, 2),
            Err(DescribeError::EmptyClass(2))
        ));
        assert_eq!(dominant_class(&split, &[0.1, 0.9, 0.0, 0.0, 0.0, 0.5]), 1);
    }

    #[test]
    fn aligned_phrase_ranks_first() {
        let d = 10;
        let mut rows: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut v = vec![0.0; d];
                v[i] = 1.0;
                v
            })
            .collect();
        let target = vec![0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        rows[7] = target.clone();
        rows[3] = vec![0.0; d];
        let proto = SlicePrototype {
            vector: target,
            slice: 0,
            dominant_class: 0,
        };
        let r = rank_phrases(&proto, &vec![0.0; d], &corpus(rows), 3, false).unwrap();
        assert_eq!(r.phrases[0].phrase, "phrase 7");
        assert!(!r.degenerate);
    }

    #[test]
    fn zero_query_keeps_corpus_order() {
        let c = corpus(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![3.0, 3.0]]);
        let proto = SlicePrototype {
            vector: vec![0.5, 0.5],
            slice: 0,
            dominant_class: 0,
        };
        let r = rank_phrases(&proto, &[0.5, 0.5], &c, 10, false).unwrap();
        assert!(r.degenerate);
        let names: Vec<&str> = r.phrases.iter().map(|p| p.phrase.as_str()).collect();
        assert_eq!(names, vec!["phrase 0", "phrase 1", "phrase 2"]);
        assert!(r.phrases.iter().all(|p| p.score == 0.0));
    }

    #[test]
    fn hand_computed_dot_products() {
        // query (1, -2): scores 1, -4, -1
        let c = corpus(vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]);
        let proto = SlicePrototype {
            vector: vec![2.0, -1.0],
            slice: 0,
            dominant_class: 0,
        };
        let r = rank_phrases(&proto, &[1.0, 1.0], &c, 3, false).unwrap();
        let got: Vec<(&str, f64)> = r
            .phrases
            .iter()
            .map(|p| (p.phrase.as_str(), p.score))
            .collect();
        assert_eq!(
            got,
            vec![("phrase 0", 1.0), ("phrase 2", -1.0), ("phrase 1", -4.0)]
        );
        let cos = rank_phrases(&proto, &[1.0, 1.0], &c, 1, true).unwrap();
        assert!((cos.phrases[0].score - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn name_recall_examples() {
        assert!(name_recall_at_k(&[phrase("a photo of sky")], "sky", &[], 1));
        let ranked = [
            phrase("a red car"),
            phrase("the open road"),
            phrase("cloudy skies"),
        ];
        assert!(name_recall_at_k(&ranked, "sky", &["skies".into()], 3));
        assert!(!name_recall_at_k(&ranked, "sky", &["skies".into()], 2));
        let vehicles: Vec<RankedPhrase> = (0..10)
            .map(|i| phrase(&format!("vehicle number {i}")))
            .collect();
        assert!(!name_recall_at_k(&vehicles, "cat", &[], 10));
        assert!(!name_recall_at_k(&[phrase("a category")], "cat", &[], 1));
        assert!(name_recall_at_k(
            &[phrase("Patient with a Chest-Tube.")],
            "chest tube",
            &[],
            1
        ));
    }

    proptest! {
        #[test]
        fn ordering_ignores_orthogonal_shifts_and_query_scale(
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..20),
            shift in -5.0f64..5.0,
            scale in 0.1f64..10.0,
        ) {
            // the query lies in the first two coordinates; shifting along the third is orthogonal
            let proto = SlicePrototype { vector: vec![0.6, -0.3, 0.0], slice: 0, dominant_class: 0 };
            let base = rank_phrases(&proto, &[0.0; 3], &corpus(raw.clone()), raw.len(), false).unwrap();
            let shifted: Vec<Vec<f64>> = raw.iter().map(|r| vec![r[0], r[1], r[2] + shift]).collect();
            let moved = rank_phrases(&proto, &[0.0; 3], &corpus(shifted), raw.len(), false).unwrap();
            let scaled_proto = SlicePrototype { vector: proto.vector.iter().map(|v| v * scale).collect(), ..proto.clone() };
            let scaled = rank_phrases(&scaled_proto, &[0.0; 3], &corpus(raw.clone()), raw.len(), false).unwrap();
            let names = |r: &Ranking| r.phrases.iter().map(|p| p.phrase.clone()).collect::<Vec<_>>();
            prop_assert_eq!(names(&base), names(&moved));
            prop_assert_eq!(names(&base), names(&scaled));
        }

        #[test]
        fn prototype_ignores_weight_scale(
            w in prop::collection::vec(0.01f64..1.0, 12),
            c in 0.01f64..100.0,
        ) {
            let emb = random_emb(12, 4, 9);
            let a = slice_prototype(&emb, &w).unwrap();
            let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
            let b = slice_prototype(&emb, &scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn recall_is_monotone_in_k(
            words in prop::collection::vec(prop::sample::select(vec!["sky", "car", "dog", "skies", "road"]), 1..12),
        ) {
            let ranked: Vec<RankedPhrase> = words.iter().map(|w| phrase(&format!("a {w}"))).collect();
            let mut prev = false;
            for k in 1..=ranked.len() {
                let now = name_recall_at_k(&ranked, "sky", &["skies".into()], k);
                prop_assert!(!prev || now);
                prev = now;
            }
        }
    }
}
