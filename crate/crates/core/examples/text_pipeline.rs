//! Sentence splitting, tokenization, POS tags and token shapes for a
//! section containing a clause list.

use deontic::text::{assemble_section, ClassLabel, MAX_SECTION_SENTENCES};

const SECTION: &str = "Provider is not entitled to suspend this Agreement prior to the lapse of the fifth year. \
The Receiving Party will: (i) keep the Confidential Information secret and confidential; \
(ii) not disclose the Confidential Information to any person other than in accordance with Clauses 13.3; and \
(iii) not use the Confidential Information other than for the purposes of this Agreement.";

fn main() {
    let labels = [
        ClassLabel::Prohibition,
        ClassLabel::ObligationListIntro,
        ClassLabel::ObligationListItem,
        ClassLabel::ProhibitionListItem,
        ClassLabel::ProhibitionListItem,
    ];
    let sections = assemble_section("contract-1", "7.2", SECTION, &labels, MAX_SECTION_SENTENCES).unwrap();
    for section in &sections {
        println!("section {}/{}: {} sentences", section.doc_id, section.section_id, section.sentence_count());
        for s in &section.sentences {
            let span = s.span.clone().unwrap();
            println!("\n[{}] bytes {}..{}  {}", s.label.unwrap().display_name(), span.start, span.end, s.text);
            for t in &s.tokens {
                println!("    {:<14} {:<5} {}", t.surface, t.pos.as_str(), t.shape.key());
            }
        }
    }
}
