//! Tokenize a sentence and list every candidate span up to a window size.

use gesture_labeler::prelude::*;

fn main() {
    let s = TokenizedSentence::new("demo", "Hey,  I'm so sorry!");
    println!("tokens: {:?}", tokenize(&s.text));
    let w_max = 3;
    for start in 0..s.len() {
        for win in 1..=w_max.min(s.len() - start) {
            println!("[{start}, {}) {:?}", start + win, s.span_text(start, win).unwrap());
        }
    }
}
