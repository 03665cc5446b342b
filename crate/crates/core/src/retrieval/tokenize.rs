use unicode_segmentation::UnicodeSegmentation;

/// Splits on Unicode word boundaries, drops punctuation-only segments and
/// case-folds every word. Digits are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(fold).collect()
}

// Full lowercase mapping plus the two folds it does not cover for
// German/Greek text.
fn fold(word: &str) -> String {
    let mut out = String::with_capacity(word.len());
    for c in word.chars() {
        match c {
            'ß' | 'ẞ' => out.push_str("ss"),
            'ς' => out.push('σ'),
            _ => out.extend(c.to_lowercase()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            tokenize("Wie melde ich mich an?"),
            vec!["wie", "melde", "ich", "mich", "an"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("FAQ-71"), vec!["faq", "71"]);
    }

    #[test]
    fn folding() {
        assert_eq!(tokenize("STRASSE Straße"), vec!["strasse", "strasse"]);
        assert_eq!(tokenize("Ärger, ÜBER!"), vec!["ärger", "über"]);
        assert!(tokenize(" ... !? ").is_empty());
    }
}
