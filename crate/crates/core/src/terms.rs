//! Normalized term bags used for requirement matching.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A set of normalized terms: lowercase alphanumeric tokens longer than one
/// character, deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermBag(BTreeSet<String>);

impl TermBag {
    /// Tokenizes free text: lowercase, split on anything that is not
    /// alphanumeric, drop tokens of length one or less.
    pub fn from_text(text: &str) -> Self {
        TermBag(normalize_tokens(text).collect())
    }

    /// Normalizes each token independently and merges the results.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        TermBag(tokens.into_iter().flat_map(normalize_tokens).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl fmt::Display for TermBag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for term in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            f.write_str(term)?;
        }
        Ok(())
    }
}

fn normalize_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| t.chars().count() > 1).map(str::to_lowercase)
}

/// Normalizes a single lexicon term; `None` unless it yields exactly one token.
pub fn normalize_term(text: &str) -> Option<String> {
    let mut tokens = text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty());
    let only = tokens.next()?;
    tokens.next().is_none().then(|| only.to_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_rules() {
        let bag = TermBag::from_text("Measure the Plasma-level, a B 42");
        let terms: Vec<_> = bag.iter().collect();
        assert_eq!(terms, ["42", "level", "measure", "plasma", "the"]);
        assert!(TermBag::from_text("R").is_empty());
        assert_eq!(TermBag::from_tokens(["Blood", "blood"]).len(), 1);
    }

    #[test]
    fn single_terms() {
        assert_eq!(normalize_term("Blood"), Some("blood".into()));
        assert_eq!(normalize_term("two words"), None);
        assert_eq!(normalize_term("--"), None);
    }
}
