use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::dataset::{load_embeddings, DataError, EmbeddingMatrix};

use super::DescribeError;

/// Candidate phrases and their text embeddings, row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseCorpus {
    phrases: Vec<String>,
    groups: Vec<Option<String>>,
    embeddings: EmbeddingMatrix<f64>,
    synonyms: BTreeMap<String, Vec<String>>,
}

impl PhraseCorpus {
    pub fn new(
        phrases: Vec<String>,
        embeddings: EmbeddingMatrix<f64>,
    ) -> Result<Self, DescribeError> {
        if phrases.len() != embeddings.n() {
            return Err(DescribeError::InvalidInput(format!(
                "{} phrases but {} embedding rows",
                phrases.len(),
                embeddings.n()
            )));
        }
        let groups = vec![None; phrases.len()];
        Ok(Self {
            phrases,
            groups,
            embeddings,
            synonyms: BTreeMap::new(),
        })
    }

    /// Reads `phrases.tsv` (phrase, optional tab and synonym-group id) and
    /// the aligned embedding file.
    pub fn load(
        phrases_path: impl AsRef<Path>,
        emb_path: impl AsRef<Path>,
    ) -> Result<Self, DescribeError> {
        let path = phrases_path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let mut phrases = Vec::new();
        let mut groups = Vec::new();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            phrases.push(parts.next().unwrap_or_default().to_string());
            groups.push(
                parts
                    .next()
                    .map(|g| g.trim().to_string())
                    .filter(|g| !g.is_empty()),
            );
        }
        let embeddings = load_embeddings(emb_path)?;
        let mut corpus = Self::new(phrases, embeddings)?;
        corpus.groups = groups;
        Ok(corpus)
    }

    /// Attaches a synonym map from a JSON object of name to phrase list.
    pub fn with_synonyms_file(mut self, path: impl AsRef<Path>) -> Result<Self, DescribeError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        self.synonyms = serde_json::from_str(&text)?;
        Ok(self)
    }

    pub fn with_synonyms(mut self, synonyms: BTreeMap<String, Vec<String>>) -> Self {
        self.synonyms = synonyms;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn groups(&self) -> &[Option<String>] {
        &self.groups
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix<f64> {
        &self.embeddings
    }

    /// Synonyms listed for `name`, plus every phrase sharing a synonym group
    /// with a phrase spelled exactly `name`.
    pub fn synonyms_for(&self, name: &str) -> Vec<String> {
        let mut out = self.synonyms.get(name).cloned().unwrap_or_default();
        let wanted: Vec<&String> = self
            .phrases
            .iter()
            .zip(&self.groups)
            .filter(|(p, _)| p.as_str() == name)
            .filter_map(|(_, g)| g.as_ref())
            .collect();
        for (p, g) in self.phrases.iter().zip(&self.groups) {
            if g.as_ref().is_some_and(|g| wanted.contains(&g)) && p != name && !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::save_embeddings;

    #[test]
    fn loads_tsv_with_groups_and_synonyms() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("phrases.tsv"),
            "sky\tg1\nskies\tg1\na car\n",
        )
        .unwrap();
        let emb = EmbeddingMatrix::new(3, 2, vec![1.0, 0.0, 0.9, 0.1, 0.0, 1.0]).unwrap();
        save_embeddings(&emb, dir.path().join("phrases.emb")).unwrap();
        fs::write(dir.path().join("syn.json"), r#"{"sky": ["heavens"]}"#).unwrap();
        let c = PhraseCorpus::load(
            dir.path().join("phrases.tsv"),
            dir.path().join("phrases.emb"),
        )
        .unwrap()
        .with_synonyms_file(dir.path().join("syn.json"))
        .unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.groups()[2], None);
        assert_eq!(
            c.synonyms_for("sky"),
            vec!["heavens".to_string(), "skies".to_string()]
        );
    }

    #[test]
    fn misaligned_corpus_is_rejected() {
        let emb = EmbeddingMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(PhraseCorpus::new(vec!["a".into()], emb).is_err());
    }
}
