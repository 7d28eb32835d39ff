//! Planted-topic corpus: documents drawn from disjoint vocabularies.

use anflo_core::TokenList;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOPICS: usize = 3;
pub const WORDS_PER_TOPIC: usize = 20;
pub const DOCS: usize = 60;
pub const DOC_LEN: usize = 40;

pub fn vocabulary(topic: usize) -> Vec<String> {
    let stems = ["river", "piano", "comet"];
    (0..WORDS_PER_TOPIC)
        .map(|i| format!("{}{}", stems[topic], (b'a' + i as u8) as char))
        .collect()
}

/// (document, generating topic) pairs; topics interleaved.
pub fn corpus(seed: u64) -> Vec<(TokenList, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocabs: Vec<Vec<String>> = (0..TOPICS).map(vocabulary).collect();
    (0..DOCS)
        .map(|d| {
            let topic = d % TOPICS;
            let words = (0..DOC_LEN)
                .map(|_| vocabs[topic][rng.gen_range(0..WORDS_PER_TOPIC)].clone())
                .collect();
            (TokenList(words), topic)
        })
        .collect()
}
