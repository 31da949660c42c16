//! Tokenization and tf-idf vocabulary selection.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Lowercase and split on any non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Token dictionary selected by corpus tf-idf, ids dense in ranking order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    /// tf-idf score of each retained token, by id.
    scores: Vec<f64>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    pub fn score(&self, id: u32) -> f64 {
        self.scores[id as usize]
    }

    /// Rebuild from persisted (token, score) rows already in id order.
    pub fn from_rows(rows: Vec<(String, f64)>) -> Self {
        let mut v = Vocabulary::default();
        for (id, (token, score)) in rows.into_iter().enumerate() {
            v.token_to_id.insert(token.clone(), id as u32);
            v.id_to_token.push(token);
            v.scores.push(score);
        }
        v
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, f64)> {
        self.id_to_token
            .iter()
            .map(String::as_str)
            .zip(self.scores.iter().copied())
    }
}

/// Select the top `limit` tokens by `tf(w) * ln(N / df(w))`, where `tf` is
/// the total corpus count, `df` the number of documents containing the
/// token, and `N` the document count. Stopwords are dropped before ranking;
/// score ties break lexicographically ascending. Ids follow ranking order.
pub fn build_vocabulary(
    docs: &[String],
    limit: usize,
    stopwords: &HashSet<String>,
) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n_docs = docs.len() as f64;
    let mut tf: HashMap<String, u64> = HashMap::new();
    let mut df: HashMap<String, u64> = HashMap::new();
    for doc in docs {
        let mut seen: HashSet<String> = HashSet::new();
        for token in tokenize(doc) {
            if stopwords.contains(&token) {
                continue;
            }
            if seen.insert(token.clone()) {
                *df.entry(token.clone()).or_insert(0) += 1;
            }
            *tf.entry(token).or_insert(0) += 1;
        }
    }

    let mut scored: Vec<(String, f64)> = tf
        .into_iter()
        .map(|(token, count)| {
            let docs_with = df[&token] as f64;
            let score = count as f64 * (n_docs / docs_with).ln();
            (token, score)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("tf-idf scores are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(limit);
    Ok(Vocabulary::from_rows(scored))
}

/// Map a text to token ids: out-of-vocabulary tokens are dropped, then the
/// sequence is truncated to `max_len` preserving order.
pub fn encode_document(text: &str, vocab: &Vocabulary, max_len: usize) -> Vec<u32> {
    tokenize(text)
        .into_iter()
        .filter_map(|t| vocab.id_of(&t))
        .take(max_len)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_stops() -> HashSet<String> {
        HashSet::new()
    }

    #[test]
    fn degenerate_idf_keeps_all_with_lexicographic_ids() {
        // One document: every idf is ln(1) = 0, all scores 0, ties keep both
        // tokens in lexicographic order.
        let v = build_vocabulary(&["a b b".into()], 10, &no_stops()).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.id_of("a"), Some(0));
        assert_eq!(v.id_of("b"), Some(1));
        assert_eq!(v.score(0), 0.0);
    }

    #[test]
    fn rare_token_outranks_ubiquitous_one() {
        // x: df=2 so idf=0; y: 1 * ln 2 > 0. With limit 1 only y survives.
        let v = build_vocabulary(&["x".into(), "x y".into()], 1, &no_stops()).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.id_of("y"), Some(0));
        assert_eq!(v.id_of("x"), None);
        assert!((v.score(0) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn stopwords_never_retained() {
        let stops: HashSet<String> = ["the".to_string()].into_iter().collect();
        let v = build_vocabulary(
            &["the the the cat".into(), "the dog".into()],
            10,
            &stops,
        )
        .unwrap();
        assert_eq!(v.id_of("the"), None);
        assert!(v.id_of("cat").is_some());
        assert!(v.id_of("dog").is_some());
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(build_vocabulary(&[], 5, &no_stops()).is_err());
    }

    #[test]
    fn encode_drops_oov_and_truncates() {
        let v = build_vocabulary(&["alpha beta gamma".into(), "alpha".into()], 10, &no_stops())
            .unwrap();
        assert_eq!(encode_document("zzz qqq", &v, 300), Vec::<u32>::new());
        let full = encode_document("beta zzz alpha beta", &v, 300);
        assert_eq!(full.len(), 3);
        // Cap counts surviving tokens, not raw ones.
        let capped = encode_document("zzz beta zzz alpha beta gamma", &v, 2);
        assert_eq!(capped.len(), 2);
        assert_eq!(capped[0], v.id_of("beta").unwrap());
        assert_eq!(capped[1], v.id_of("alpha").unwrap());
    }

    #[test]
    fn tokenize_lowercases_and_splits_punctuation() {
        assert_eq!(
            tokenize("Hello, World! x2"),
            vec!["hello", "world", "x2"]
        );
    }
}
