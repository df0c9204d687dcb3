use unicode_normalization::UnicodeNormalization;

/// NFC-normalized, trimmed copy of `s`. All text comparisons go through this.
pub fn normalize(s: &str) -> String {
    s.trim().nfc().collect()
}
