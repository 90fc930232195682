use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lexer::lex;

/// Multiset of normalized comment strings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommentBag(BTreeMap<String, usize>);

impl CommentBag {
    pub fn insert(&mut self, comment: String) {
        *self.0.entry(comment).or_insert(0) += 1;
    }

    /// Total number of entries, counting multiplicity.
    pub fn len(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, comment: &str) -> usize {
        self.0.get(comment).copied().unwrap_or(0)
    }

    /// Size of the multiset intersection.
    pub fn intersection_count(&self, other: &CommentBag) -> usize {
        self.0
            .iter()
            .map(|(text, n)| (*n).min(other.count(text)))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Strips the `#` leader, trims, and collapses internal whitespace runs.
/// Returns `None` when nothing is left.
pub fn normalize_comment(raw: &str) -> Option<String> {
    let text = raw.trim_start().trim_start_matches('#');
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        None
    } else {
        Some(words.join(" "))
    }
}

/// Every full-line and trailing comment in `body`, normalized. String
/// literals (docstrings included) never contribute.
pub fn extract_body_comments(body: &str) -> CommentBag {
    let lexed = lex(body);
    let mut bag = CommentBag::default();
    if lexed.unterminated {
        for raw in line_scan_comments(body) {
            if let Some(c) = normalize_comment(raw) {
                bag.insert(c);
            }
        }
        return bag;
    }
    for tok in lexed.comments() {
        if let Some(c) = normalize_comment(tok.text) {
            bag.insert(c);
        }
    }
    bag
}

/// Per-line fallback: the text after the first `#` that is not inside a
/// single-line quote.
fn line_scan_comments(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter_map(|line| {
        let mut quote: Option<char> = None;
        let mut escaped = false;
        for (i, ch) in line.char_indices() {
            if escaped {
                escaped = false;
                continue;
            }
            match (quote, ch) {
                (Some(_), '\\') => escaped = true,
                (Some(q), c) if c == q => quote = None,
                (None, '\'' | '"') => quote = Some(ch),
                (None, '#') => return Some(&line[i..]),
                _ => {}
            }
        }
        None
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_line_and_trailing_comments_normalize_together() {
        let bag = extract_body_comments("    # Compute  hash\n    x = 1  #  Compute hash\n");
        assert_eq!(bag.len(), 2);
        assert_eq!(bag.count("Compute hash"), 2);
    }

    #[test]
    fn no_comments_is_empty() {
        assert!(extract_body_comments("    return a + b\n").is_empty());
    }

    #[test]
    fn bare_hash_is_dropped() {
        assert!(extract_body_comments("    #\n    x = 1\n    ##   \n").is_empty());
    }

    #[test]
    fn docstrings_and_string_hashes_do_not_count() {
        let body = "    \"\"\"Doc # not a comment\"\"\"\n    s = '# nope'  # yes\n";
        let bag = extract_body_comments(body);
        assert_eq!(bag.len(), 1);
        assert_eq!(bag.count("yes"), 1);
    }

    #[test]
    fn unterminated_string_falls_back_to_line_scan() {
        let body = "    x = '''open\n    # inside\n    y = 'a#b'  # tail\n";
        let bag = extract_body_comments(body);
        assert_eq!(bag.count("inside"), 1);
        assert_eq!(bag.count("tail"), 1);
        assert_eq!(bag.len(), 2);
    }

    #[test]
    fn intersection_is_multiset_min() {
        let a = extract_body_comments("# same\n# same\n# other\n");
        let b = extract_body_comments("# same\n");
        assert_eq!(a.intersection_count(&b), 1);
        assert_eq!(b.intersection_count(&a), 1);
    }
}
