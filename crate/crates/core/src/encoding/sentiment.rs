//! Lexicon sentiment in [-1, 1].

use super::embed::tokenize;

const LEXICON: &[(&str, f64)] = &[
    ("love", 0.8),
    ("adore", 0.8),
    ("enjoy", 0.6),
    ("like", 0.6),
    ("great", 0.7),
    ("happy", 0.7),
    ("hate", -0.8),
    ("awful", -0.8),
    ("dislike", -0.6),
    ("sad", -0.7),
    ("terrible", -0.7),
];

pub fn lexicon_score(word: &str) -> Option<f64> {
    LEXICON.iter().find(|(w, _)| *w == word).map(|&(_, s)| s)
}

/// Mean lexicon score over the tokens of `text`; 0.0 when nothing matches.
pub fn sentiment_of_text(text: &str) -> f64 {
    let hits: Vec<f64> = tokenize(text).filter_map(|t| lexicon_score(&t)).collect();
    if hits.is_empty() {
        return 0.0;
    }
    (hits.iter().sum::<f64>() / hits.len() as f64).clamp(-1.0, 1.0)
}

/// An extractor-supplied hint wins (clamped); otherwise fall back to the
/// lexicon over `text`.
pub fn sentiment(hint: Option<f64>, text: &str) -> f64 {
    match hint {
        Some(h) if h.is_finite() => h.clamp(-1.0, 1.0),
        _ => sentiment_of_text(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_examples() {
        assert_eq!(sentiment_of_text("the meeting is at noon"), 0.0);
        assert_eq!(sentiment_of_text("I love hiking"), 0.8);
        assert_eq!(sentiment_of_text("I love it but I hate the crowds"), 0.0);
        assert!((sentiment_of_text("great but sad") - 0.0).abs() < 1e-12);
        assert!((sentiment_of_text("I like it, it is great") - 0.65).abs() < 1e-12);
    }

    #[test]
    fn hint_is_clamped_and_preferred() {
        assert_eq!(sentiment(Some(3.0), "I hate it"), 1.0);
        assert_eq!(sentiment(Some(-0.25), "I love it"), -0.25);
        assert_eq!(sentiment(None, "I hate it"), -0.8);
        assert_eq!(sentiment(Some(f64::NAN), "I dislike it"), -0.6);
    }
}
