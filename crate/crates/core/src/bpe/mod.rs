//! Byte pair encoding with the number of merge operations as the only
//! capacity parameter.

mod learn;
mod segment;
mod symbol;
mod table;

pub use learn::{count_pairs, learn_bpe};
pub use segment::{
    apply_bpe, segment_word, unsegment, unsegment_lenient, unsegment_line, vocabulary, Piece,
    SegmentedSentence,
};
pub use symbol::{word_symbols, Symbol, WordCounts, CONTINUATION};
pub use table::{MergeRule, MergeTable, HEADER};
