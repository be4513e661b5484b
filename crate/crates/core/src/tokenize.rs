/// Identifies the tokenization rule in written artifacts.
pub const TOKENIZER_VERSION: &str = "whitespace-v1";

/// Splits on runs of whitespace, keeping punctuation attached and casing intact.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}
