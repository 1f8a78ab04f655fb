use std::collections::HashMap;

use sha2::{Digest, Sha256};

pub const UNK: &str = "<unk>";

/// Lowercased token index with `<unk>` at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        v.add(UNK);
        v
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocabulary::new();
        for t in tokens {
            v.add(t.as_ref());
        }
        v
    }

    /// Adds a token (lowercased) if new; returns its index.
    pub fn add(&mut self, token: &str) -> usize {
        let key = token.to_lowercase();
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(key.clone(), i);
        self.tokens.push(key);
        i
    }

    pub fn unk(&self) -> usize {
        0
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(&token.to_lowercase()).copied()
    }

    /// Index of the token, or `<unk>`.
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(0)
    }

    pub fn lookup_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
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

    /// First 8 bytes of SHA-256 over the newline-joined token list.
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }
}
