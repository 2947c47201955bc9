//! Building the concatenated word/POS/shape embedding table, with case
//! folding and per-POS unknown-word vectors.

use std::io::Cursor;

use deontic::embed::{read_vectors, EmbeddingDims, EmbeddingSetup};
use deontic::text::Sentence;

fn main() {
    let dims = EmbeddingDims { word: 4, pos: 3, shape: 2 };

    // desk-scale mode: random vectors for words seen at least twice
    let corpus = ["the", "Supplier", "shall", "the", "Supplier", "shall", "deliver"];
    let table = EmbeddingSetup::with_dims(dims).build(&corpus, 7).unwrap();
    println!("vocabulary: {:?}", table.vocab());
    println!("trainable parameters: {}", table.parameter_count());

    let s = Sentence::from_text("THE Supplier shall not deliver.", None);
    let enc = table.encode(&s);
    for (t, row) in s.tokens.iter().zip(&enc.words) {
        println!("{:<10} known={:<5} row={:?}", t.surface, table.is_known(&t.surface), row);
    }
    let m = table.embed_sentence(&s).unwrap();
    println!("sentence matrix {:?} (word {} + pos {} + shape {})", m.shape(), dims.word, dims.pos, dims.shape);

    // pretrained vectors in text format, with unk-<tag> entries
    let text = "3 4\nshall 0.1 0.2 0.3 0.4\nnot -0.5 0.1 0.0 0.2\nunk-nn 0.01 0.01 0.01 0.01\n";
    let mut setup = EmbeddingSetup::with_dims(dims);
    setup.words = Some(read_vectors(Cursor::new(text), 4).unwrap());
    let table = setup.build(&[], 7).unwrap();
    println!("\npretrained vocabulary: {:?}", table.vocab());
    println!("'not' -> {:?}", &table.lookup(&s.tokens[3]).unwrap()[..4]);
}
