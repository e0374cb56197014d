//! Caption tokenization and the heuristics used to count caption objects.

use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    /// First token of the text or first after `.`, `!`, `?`.
    pub sentence_start: bool,
}

pub trait Tokenizer: Send + Sync {
    fn tokenize<'a>(&self, text: &'a str) -> Vec<Token<'a>>;

    fn count(&self, text: &str) -> usize {
        self.tokenize(text).len()
    }
}

/// Splits on Unicode whitespace and punctuation. Apostrophes and hyphens
/// between two alphanumerics stay inside the token ("Yosemite's",
/// "arc-shaped").
#[derive(Debug, Clone, Copy, Default)]
pub struct WordTokenizer;

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

impl Tokenizer for WordTokenizer {
    fn tokenize<'a>(&self, text: &'a str) -> Vec<Token<'a>> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut tokens = Vec::new();
        let mut sentence_start = true;
        let mut i = 0;
        while i < chars.len() {
            let (start, c) = chars[i];
            if !c.is_alphanumeric() {
                if matches!(c, '.' | '!' | '?') {
                    sentence_start = true;
                }
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < chars.len() {
                let c = chars[j].1;
                if c.is_alphanumeric() {
                    j += 1;
                } else if is_joiner(c) && chars.get(j + 1).is_some_and(|(_, n)| n.is_alphanumeric()) {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |(b, _)| *b);
            tokens.push(Token {
                text: &text[start..end],
                sentence_start,
            });
            sentence_start = false;
            i = j;
        }
        tokens
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProperNounContext {
    pub sentence_start: bool,
}

pub trait ProperNounClassifier: Send + Sync {
    fn is_proper(&self, word: &str, context: ProperNounContext) -> bool;
}

/// Title-case words that are usually not names in image captions.
pub const DEFAULT_COMMON_WORDS: &[&str] = &[
    "i", "a", "an", "the", "and", "or", "of", "in", "on", "at", "by", "for", "with", "to", "from",
    "photo", "photograph", "image", "picture", "stock", "wallpaper", "poster", "print", "art",
    "painting", "vintage", "home", "design", "new", "old", "page", "free", "best", "beautiful",
    "girl", "boy", "woman", "man", "dog", "cat", "house", "garden", "wedding", "dress",
];

/// Capitalized, not at a sentence start, not in the common-word allowlist.
#[derive(Debug, Clone)]
pub struct CapitalizationHeuristic {
    common: HashSet<String>,
}

impl Default for CapitalizationHeuristic {
    fn default() -> Self {
        CapitalizationHeuristic::with_common_words(DEFAULT_COMMON_WORDS.iter().copied())
    }
}

impl CapitalizationHeuristic {
    pub fn with_common_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        CapitalizationHeuristic {
            common: words.into_iter().map(str::to_lowercase).collect(),
        }
    }
}

impl ProperNounClassifier for CapitalizationHeuristic {
    fn is_proper(&self, word: &str, context: ProperNounContext) -> bool {
        let Some(first) = word.chars().next() else {
            return false;
        };
        if !first.is_uppercase() || context.sentence_start {
            return false;
        }
        let base = word
            .trim_end_matches("'s")
            .trim_end_matches("\u{2019}s")
            .to_lowercase();
        !self.common.contains(&base)
    }
}

/// Default proper-noun test.
pub fn classify_proper_noun(word: &str, context: ProperNounContext) -> bool {
    CapitalizationHeuristic::default().is_proper(word, context)
}

pub trait NounExtractor: Send + Sync {
    /// Tokens of `text` judged to be nouns, with their context.
    fn nouns<'a>(&self, text: &'a str) -> Vec<Token<'a>>;
}

/// Function words and frequent non-noun caption words.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "nor", "of", "in", "on", "at", "by", "for", "with",
    "to", "from", "into", "onto", "over", "under", "above", "below", "near", "behind", "between",
    "through", "about", "as", "is", "are", "was", "were", "be", "been", "being", "am", "has",
    "have", "had", "do", "does", "did", "this", "that", "these", "those", "it", "its", "he",
    "she", "they", "them", "his", "her", "their", "our", "your", "my", "we", "you", "i", "me",
    "who", "which", "what", "while", "when", "where", "how", "not", "no", "so", "very", "up",
    "down", "out", "off", "all", "some", "any", "each", "every", "more", "most", "s", "vs",
];

/// Every alphabetic token that is not a stopword. This over-counts (verbs and
/// adjectives pass); swap in a tagger-backed extractor for real analysis.
#[derive(Debug, Clone)]
pub struct StopwordNounExtractor {
    stopwords: HashSet<String>,
}

impl Default for StopwordNounExtractor {
    fn default() -> Self {
        StopwordNounExtractor {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl NounExtractor for StopwordNounExtractor {
    fn nouns<'a>(&self, text: &'a str) -> Vec<Token<'a>> {
        WordTokenizer
            .tokenize(text)
            .into_iter()
            .filter(|t| t.text.chars().any(char::is_alphabetic))
            .filter(|t| !self.stopwords.contains(&t.text.to_lowercase()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(text: &str) -> Vec<&str> {
        WordTokenizer.tokenize(text).iter().map(|t| t.text).collect()
    }

    #[test]
    fn tokenizer_splits_on_space_and_punctuation() {
        assert_eq!(WordTokenizer.count("a red car"), 3);
        assert_eq!(
            words("Yosemite's Rainbow.  Yosemite National Park, California."),
            vec!["Yosemite's", "Rainbow", "Yosemite", "National", "Park", "California"]
        );
        assert_eq!(words("arc-shaped -- x"), vec!["arc-shaped", "x"]);
        assert_eq!(words(""), Vec::<&str>::new());
    }

    #[test]
    fn sentence_starts() {
        let t = WordTokenizer.tokenize("Big sky. Blue Lake! and more");
        let starts: Vec<bool> = t.iter().map(|t| t.sentence_start).collect();
        assert_eq!(starts, vec![true, false, true, false, true, false]);
    }

    #[test]
    fn proper_noun_heuristic() {
        let mid = ProperNounContext { sentence_start: false };
        assert!(classify_proper_noun("Yosemite", mid));
        assert!(!classify_proper_noun("rainbow", mid));
        assert!(!classify_proper_noun("Rainbow", ProperNounContext { sentence_start: true }));
        assert!(!classify_proper_noun("Photo", mid));
        assert!(!classify_proper_noun("", mid));
    }

    #[test]
    fn noun_extractor_drops_stopwords() {
        let n: Vec<&str> = StopwordNounExtractor::default()
            .nouns("A dog on the beach in 2019")
            .iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(n, vec!["dog", "beach"]);
    }
}
