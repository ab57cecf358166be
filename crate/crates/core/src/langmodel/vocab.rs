use std::collections::HashMap;

use super::{LmError, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Frequency-ranked word vocabulary with `PAD` at index 0 and `UNK` at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LmVocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl LmVocabulary {
    /// Rebuilds a vocabulary from its token list (as stored in a model
    /// artifact).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD_ID] != PAD || tokens[UNK_ID] != UNK {
            return Err(LmError::Vocabulary(
                "token list must start with the PAD and UNK entries".into(),
            ));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(LmError::Vocabulary(format!("duplicate token `{t}`")));
            }
        }
        Ok(LmVocabulary { tokens, index })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }
}

/// Keeps the `cap − 2` most frequent tokens (ties lexicographic) after the
/// reserved entries.
pub fn fit_vocab<D: AsRef<[String]>>(texts: &[D], cap: usize) -> Result<LmVocabulary> {
    if cap < 2 {
        return Err(LmError::Vocabulary(format!("cap {cap} leaves no room for PAD and UNK")));
    }
    let ranked = crate::corpus::top_frequent_words(texts, cap - 2);
    if ranked.is_empty() {
        return Err(LmError::Vocabulary("no tokens to build a vocabulary from".into()));
    }
    let mut tokens = vec![PAD.to_string(), UNK.to_string()];
    tokens.extend(
        ranked
            .into_iter()
            .map(|(t, _)| t)
            .filter(|t| t != PAD && t != UNK),
    );
    LmVocabulary::from_tokens(tokens)
}

/// Token ids right-padded with `PAD` (or truncated) to `seq_len`; unknown
/// tokens map to `UNK`.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &LmVocabulary, seq_len: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = tokens
        .iter()
        .take(seq_len)
        .map(|t| vocab.id(t.as_ref()).unwrap_or(UNK_ID))
        .collect();
    ids.resize(seq_len, PAD_ID);
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reserved_slots_and_counts() {
        let v = fit_vocab(&[toks(&["a", "a", "b"])], 5).unwrap();
        assert_eq!(v.tokens(), [PAD, UNK, "a", "b"]);
    }

    #[test]
    fn truncation_and_ties() {
        let words: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let v = fit_vocab(&[words], 5).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(&v.tokens()[2..], ["t0", "t1", "t2"]);
        let v = fit_vocab(&[toks(&["b", "a"])], 10).unwrap();
        assert_eq!(v.id("a"), Some(2));
        assert_eq!(v.id("b"), Some(3));
        assert!(fit_vocab(&[Vec::<String>::new()], 10).is_err());
    }

    #[test]
    fn encoding() {
        let v = LmVocabulary::from_tokens(toks(&[PAD, UNK, "a"])).unwrap();
        assert_eq!(encode(&["a"], &v, 3), vec![2, 0, 0]);
        assert_eq!(encode(&["z"], &v, 3), vec![1, 0, 0]);
        assert_eq!(encode(&["a", "z", "a", "a", "a"], &v, 3), vec![2, 1, 2]);
    }

    #[test]
    fn from_tokens_checks_layout() {
        assert!(LmVocabulary::from_tokens(toks(&["a", UNK])).is_err());
        assert!(LmVocabulary::from_tokens(toks(&[PAD, UNK, "a", "a"])).is_err());
    }
}
