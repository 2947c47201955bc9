//! Template generator for contract-like sections.
//!
//! Plain sections mix None, Obligation and Prohibition sentences. List
//! sections have an intro ending in `:` and enumerated items. Under a
//! positive intro an item is an ObligationListItem unless it carries its own
//! "not"; under a negative intro every item is a ProhibitionListItem and
//! none carries a negation, so only the intro tells them apart from
//! obligation items.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cluster::similarity;
use super::{Corpus, Provenance};
use crate::text::{ClassLabel, Section, Sentence, MAX_SECTION_SENTENCES};

const PARTIES: &[&str] = &[
    "the Supplier",
    "the Client",
    "the Provider",
    "the Customer",
    "the Receiving Party",
    "the Disclosing Party",
    "each Party",
    "the Contractor",
    "the Licensee",
    "the Licensor",
    "the Company",
    "the Consultant",
    "the Buyer",
    "the Seller",
    "the Service Provider",
    "the Processor",
    "the Tenant",
    "the Distributor",
];

const STAFF: &[&str] = &[
    "Provider staff",
    "employee of the Supplier",
    "subcontractor of the Contractor",
    "member of the Project Team",
    "agent of the Distributor",
    "person engaged by the Consultant",
    "officer of the Company",
];

const OBLIGE: &[&str] = &[
    "shall",
    "must",
    "will",
    "is obliged to",
    "is required to",
    "agrees to",
    "undertakes to",
    "shall at all times",
    "shall promptly",
    "will use reasonable endeavours to",
    "is responsible to",
    "shall be obliged to",
];

const FORBID: &[&str] = &[
    "shall not",
    "must not",
    "will not",
    "may not",
    "is not entitled to",
    "is not permitted to",
    "shall in no event",
    "agrees not to",
    "undertakes not to",
    "shall not at any time",
    "must never",
    "is not allowed to",
];

const PERMIT: &[&str] = &[
    "may",
    "is entitled to",
    "may at its discretion",
    "has the right to",
    "is permitted to",
    "may from time to time",
];

const ACTIONS: &[&str] = &[
    "deliver the Goods to the Delivery Address",
    "pay the Fees within thirty days of the date of each invoice",
    "disclose the Confidential Information to any third party",
    "process the Personal Data in accordance with the written instructions of the Client",
    "assign or transfer any of its rights under this Agreement",
    "keep the Confidential Information secret and confidential",
    "provide the Services with reasonable skill and care",
    "comply with all applicable laws and regulations",
    "maintain adequate insurance cover with a reputable insurer",
    "notify the other Party of any actual or suspected breach",
    "use the Software for any purpose other than the Permitted Purpose",
    "subcontract any of its obligations to another provider",
    "suspend the performance of the Services",
    "solicit the employment of any employee of the other Party",
    "retain copies of the Deliverables after termination",
    "make any public announcement concerning this Agreement",
    "grant access to the Premises to authorised personnel",
    "remove the Equipment from the Site",
    "modify or reverse engineer the Source Code",
    "meet and comply with the Approved Requirements",
    "take such measures to prevent these actions",
    "provide services to any Customer Competitor",
    "transfer any Personal Data outside the European Economic Area",
    "keep complete and accurate records of all transactions",
    "return all documents containing Confidential Information",
    "appoint a project manager for the duration of the Project",
    "issue a credit note for any disputed amount",
    "sell the Products below the recommended retail price",
    "engage suitably qualified personnel for the Works",
    "obtain all necessary licences and permits",
    "charge any additional fees for the Support Services",
    "repair any damage caused to the Property",
    "allow its employees to work on the Premises unsupervised",
    "store the Client Data on servers located outside the United Kingdom",
    "report on the progress of the Works every month",
    "terminate this Agreement without cause",
    "create any security interest over the Assets",
    "ensure that its personnel observe the Site rules",
    "install the Hardware in accordance with the Specification",
    "carry out regular backups of the Client Data",
];

const NOUN_ITEMS: &[&str] = &[
    "in the case of the Client, employees of the Supplier engaged in the provision of the Services",
    "in the case of the Supplier, employees of the Client engaged in the Project",
    "any documents relating to the Services",
    "the source code of the Software",
    "copies of all invoices issued under this Agreement",
    "the names of the members of the Project Team",
    "any information concerning the business of the Customer",
    "the technical specifications of the Products",
    "details of any security incident",
    "the results of any audit carried out under this Agreement",
    "the annual accounts of the Company",
    "any samples supplied by the Buyer",
    "the pricing terms set out in Schedule 3",
    "the customer lists of the Distributor",
    "any materials containing Personal Data",
];

const NOUN_INTRO_VERBS: &[&str] = &[
    "directly solicit the employment of",
    "disclose to any third party",
    "provide to the other Party",
    "deliver to the Client",
    "make available to the auditors",
    "publish or distribute",
    "retain after termination",
    "supply to the Buyer on request",
];

const OPENERS: &[&str] = &[
    "Subject to Clause 4.2 and without prejudice to any other rights under this Agreement,",
    "Except as otherwise expressly provided in this Schedule,",
    "During the Term and for a period of two years thereafter,",
    "Notwithstanding anything to the contrary in the Order Form,",
    "In consideration of the payment of the Fees,",
    "Upon the expiry or termination of this Agreement for any reason,",
    "With effect from the Commencement Date,",
    "Save where the parties agree otherwise in writing,",
    "For the avoidance of doubt,",
    "Throughout the performance of the Services,",
    "Unless required to do so by law,",
    "In respect of each Order placed under this Agreement,",
];

const CLOSERS: &[&str] = &[
    "in accordance with the terms and conditions of this Agreement",
    "without the prior written consent of the other Party",
    "at its own cost and expense",
    "as soon as reasonably practicable",
    "for the duration of the Term",
    "in a timely and professional manner",
    "to the extent permitted by applicable law",
    "in connection with the performance of its obligations",
    "in any jurisdiction where the Services are provided",
    "during normal business hours",
    "in accordance with Good Industry Practice and the Security Policy",
    "in respect of any period before the Effective Date",
    "by reference to the most recent Monthly Service Report",
    "in each of the territories listed in Schedule 3",
    "within the time limits set out in the Implementation Plan",
    "in a manner consistent with the Data Protection Legislation",
];

const TERMS: &[(&str, &str)] = &[
    ("Confidential Information", "all information disclosed by one Party to the other in connection with this Agreement"),
    ("Services", "the services described in Schedule 2 together with any related deliverables"),
    ("Business Day", "a day other than a Saturday, Sunday or public holiday in England"),
    ("Effective Date", "the date on which this Agreement is signed by both parties"),
    ("Deliverables", "all documents, products and materials developed by the Supplier as part of the Services"),
    ("Fees", "the charges payable by the Client for the supply of the Services"),
    ("Personal Data", "any information relating to an identified or identifiable natural person"),
    ("Term", "the period starting on the Effective Date and ending on the termination of this Agreement"),
    ("Intellectual Property Rights", "patents, copyrights, trade marks and all similar rights in any part of the world"),
    ("Premises", "the premises of the Client at which the Services are to be performed"),
];

const STATEMENTS: &[&str] = &[
    "This Agreement is governed by the laws of England and Wales.",
    "The headings in this Agreement are for convenience only and do not affect its interpretation.",
    "This Agreement constitutes the entire agreement between the parties relating to its subject matter.",
    "Words in the singular include the plural and words in the plural include the singular.",
    "Each Party has the power and authority to enter into this Agreement.",
    "The Schedules form part of this Agreement and have effect as if set out in full in the body of this Agreement.",
    "References to a statute include any subordinate legislation made under it.",
    "This Agreement may be executed in any number of counterparts.",
    "The rights and remedies provided under this Agreement are in addition to those provided by law.",
    "No failure or delay by a party to exercise any right shall operate as a waiver of that right.",
    "A person who is not a party to this Agreement has no rights to enforce any of its terms.",
    "If any provision of this Agreement is found to be invalid, the remaining provisions remain in force.",
];

const DETAILS: &[&str] = &["determined", "agreed", "specified", "set out", "described"];
const DETAIL_PLACES: &[&str] = &[
    "the individual contracts",
    "the relevant Order Form",
    "the Statement of Work",
    "a separate written agreement",
    "Schedule 4",
    "the Service Level Agreement",
];
const DETAIL_TOPICS: &[&str] = &["Details", "The delivery schedule", "The applicable rates", "The acceptance criteria", "The service levels"];
const NOTHING_TARGETS: &[&str] = &[
    "restrict either Party's right to recruit",
    "limit the liability of either Party for fraud",
    "prevent the Client from engaging other suppliers",
    "affect the rights of the Supplier under Clause 9",
    "create a partnership between the parties",
];

const MARKERS: [&[&str]; 3] = [
    &["(a)", "(b)", "(c)", "(d)", "(e)", "(f)"],
    &["(i)", "(ii)", "(iii)", "(iv)", "(v)", "(vi)"],
    &["(1)", "(2)", "(3)", "(4)", "(5)", "(6)"],
];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty pool")
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

const ASIDES: &[&str] = &[
    "acting reasonably and in good faith",
    "subject to the terms of this Agreement",
    "in its capacity as data processor",
    "together with its affiliates",
    "at the request of the Steering Committee",
    "having regard to the Service Levels",
    "as between the parties",
    "in addition to its other responsibilities under the Services Agreement",
    "through its employees, agents and permitted subcontractors",
    "on behalf of itself and each member of its Group",
];

/// Optional opener, aside and closers around a clause, so the deontic cue
/// sits away from both ends of longer sentences.
fn frame(rng: &mut ChaCha8Rng, subject: &str, rest: &str) -> String {
    let mut s = String::new();
    if rng.gen_bool(0.7) {
        s.push_str(pick(rng, OPENERS));
        s.push(' ');
        s.push_str(subject);
    } else {
        s.push_str(&capitalize(subject));
    }
    if rng.gen_bool(0.5) {
        s.push_str(", ");
        s.push_str(pick(rng, ASIDES));
        s.push(',');
    }
    s.push(' ');
    s.push_str(rest);
    let closers = match rng.gen_range(0..20) {
        0..=3 => 0,
        4..=10 => 1,
        11..=16 => 2,
        _ => 3,
    };
    for k in 0..closers {
        s.push_str(if k == 0 { " " } else { pick(rng, &[" and ", ", "]) });
        s.push_str(pick(rng, CLOSERS));
    }
    s.push('.');
    s
}

fn obligation(rng: &mut ChaCha8Rng) -> String {
    let subject = pick(rng, PARTIES);
    let rest = format!("{} {}", pick(rng, OBLIGE), pick(rng, ACTIONS));
    frame(rng, subject, &rest)
}

fn prohibition(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0..=1 => {
            let modal = pick(rng, &["shall", "will", "may"]);
            let mut s = format!("No {} {} {}", pick(rng, STAFF), modal, pick(rng, ACTIONS));
            if rng.gen_bool(0.5) {
                s.push(' ');
                s.push_str(pick(rng, CLOSERS));
            }
            s.push('.');
            s
        }
        2 => {
            let modal = pick(rng, &["shall", "will"]);
            format!("Under no circumstances {} {} {}.", modal, pick(rng, PARTIES), pick(rng, ACTIONS))
        }
        _ => {
            let subject = pick(rng, PARTIES);
            let rest = format!("{} {}", pick(rng, FORBID), pick(rng, ACTIONS));
            frame(rng, subject, &rest)
        }
    }
}

fn none(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0..=2 => {
            let (term, def) = TERMS.choose(rng).expect("non-empty");
            format!("\"{term}\" means {def}.")
        }
        3..=4 => pick(rng, STATEMENTS).to_string(),
        5..=7 => {
            let subject = pick(rng, PARTIES);
            let rest = format!("{} {}", pick(rng, PERMIT), pick(rng, ACTIONS));
            frame(rng, subject, &rest)
        }
        8 => format!(
            "{} {} be {} in {}.",
            pick(rng, DETAIL_TOPICS),
            pick(rng, &["shall", "will"]),
            pick(rng, DETAILS),
            pick(rng, DETAIL_PLACES)
        ),
        _ => format!(
            "Nothing in this {} {} {}.",
            pick(rng, &["section", "Clause", "Agreement", "Schedule"]),
            pick(rng, &["will", "shall"]),
            pick(rng, NOTHING_TARGETS)
        ),
    }
}

fn plain(rng: &mut ChaCha8Rng) -> (String, ClassLabel) {
    let r: f64 = rng.gen();
    if r < 0.47 {
        (none(rng), ClassLabel::None)
    } else if r < 0.83 {
        (obligation(rng), ClassLabel::Obligation)
    } else {
        (prohibition(rng), ClassLabel::Prohibition)
    }
}

/// Intro plus items for one clause list.
fn clause_list(rng: &mut ChaCha8Rng, max_items: usize) -> Vec<(String, ClassLabel)> {
    let negative = rng.gen_bool(0.35);
    let nominal = rng.gen_bool(0.3);
    let subject = pick(rng, PARTIES);
    let modal = if negative { pick(rng, FORBID) } else { pick(rng, OBLIGE) };
    let verb = if nominal { format!(" {}", pick(rng, NOUN_INTRO_VERBS)) } else { String::new() };
    let lead = if rng.gen_bool(0.3) {
        format!("{} {}", pick(rng, OPENERS), subject)
    } else {
        capitalize(subject)
    };
    let mut out = vec![(format!("{lead} {modal}{verb}:"), ClassLabel::ObligationListIntro)];

    let n = rng.gen_range(2..=5).min(max_items.max(1));
    let markers = MARKERS.choose(rng).expect("non-empty");
    let joiner = pick(rng, &["and", "or"]);
    let pool: &[&str] = if nominal { NOUN_ITEMS } else { ACTIONS };
    let mut bodies: Vec<&str> = pool.choose_multiple(rng, n).copied().collect();
    bodies.shuffle(rng);
    for (k, body) in bodies.into_iter().enumerate() {
        let local_not = !negative && !nominal && rng.gen_bool(0.25);
        let label = if negative || local_not {
            ClassLabel::ProhibitionListItem
        } else {
            ClassLabel::ObligationListItem
        };
        let sep = if nominal { "," } else { ";" };
        let end = if k + 1 == n {
            ".".to_string()
        } else if k + 2 == n {
            format!("{sep} {joiner}")
        } else {
            sep.to_string()
        };
        let lead = if local_not {
            pick(rng, &["not", "not", "in no event", "never"]).to_string() + " "
        } else if !nominal && rng.gen_bool(0.15) {
            "only ".to_string()
        } else {
            String::new()
        };
        let tail = if rng.gen_bool(0.35) {
            format!(" {}", pick(rng, CLOSERS))
        } else {
            String::new()
        };
        out.push((format!("{} {lead}{body}{tail}{end}", markers[k]), label));
    }
    out
}

fn section_sentences(rng: &mut ChaCha8Rng) -> Vec<(String, ClassLabel)> {
    let mut out = Vec::new();
    if rng.gen_bool(0.6) {
        for _ in 0..rng.gen_range(1..=6) {
            out.push(plain(rng));
        }
        return out;
    }
    for _ in 0..rng.gen_range(0..=3) {
        out.push(plain(rng));
    }
    let lists = if rng.gen_bool(0.2) { 2 } else { 1 };
    for _ in 0..lists {
        let room = MAX_SECTION_SENTENCES.saturating_sub(out.len() + 1);
        if room < 2 {
            break;
        }
        out.extend(clause_list(rng, room));
    }
    for _ in 0..rng.gen_range(0..=3) {
        if out.len() < MAX_SECTION_SENTENCES {
            out.push(plain(rng));
        }
    }
    out
}

/// Sentences joined by single spaces, each with its byte span.
fn build_section(doc_id: String, section_id: String, parts: Vec<(String, ClassLabel)>) -> Section {
    let mut offset = 0;
    let sentences = parts
        .into_iter()
        .map(|(text, label)| {
            let mut s = Sentence::from_text(&text, Some(label));
            s.span = Some(offset..offset + text.len());
            offset += text.len() + 1;
            s
        })
        .collect();
    Section {
        doc_id,
        section_id,
        sentences,
    }
}

const SECTIONS_PER_DOC: usize = 12;

/// `n` sections of 1 to 15 sentences, identical for identical seeds.
pub fn generate_synthetic(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sections = (0..n)
        .map(|i| {
            build_section(
                format!("synth-{:04}", i / SECTIONS_PER_DOC),
                format!("{}", i % SECTIONS_PER_DOC + 1),
                section_sentences(&mut rng),
            )
        })
        .collect();
    Corpus::new(
        sections,
        Provenance {
            source: "synthetic".into(),
            seed: Some(seed),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ListAccounting {
    pub items: usize,
    /// Items labeled ProhibitionListItem with no negation of their own.
    pub intro_only: usize,
}

impl ListAccounting {
    pub fn fraction(&self) -> f64 {
        if self.items == 0 {
            0.0
        } else {
            self.intro_only as f64 / self.items as f64
        }
    }
}

const NEGATIONS: &[&str] = &["not", "no", "never", "nothing", "cannot"];

/// Counts list items whose label cannot be read off their own tokens.
pub fn list_item_accounting(corpus: &Corpus) -> ListAccounting {
    let mut acc = ListAccounting { items: 0, intro_only: 0 };
    for s in corpus.sections.iter().flat_map(|s| &s.sentences) {
        match s.label {
            Some(ClassLabel::ObligationListItem) => acc.items += 1,
            Some(ClassLabel::ProhibitionListItem) => {
                acc.items += 1;
                let negated = s
                    .tokens
                    .iter()
                    .any(|t| NEGATIONS.contains(&t.surface.to_lowercase().as_str()));
                if !negated {
                    acc.intro_only += 1;
                }
            }
            _ => {}
        }
    }
    acc
}

const TWEAKS: &[(&str, &str)] = &[
    ("thirty", "sixty"),
    ("Supplier", "Vendor"),
    ("Client", "Buyer"),
    ("Agreement", "Contract"),
    ("Services", "Works"),
    ("shall", "will"),
    ("any", "all"),
    ("the", "this"),
];

/// Appends `count` near-copies of randomly chosen sections, each differing
/// from its source by one word swap and at least 0.9 similar to it by
/// character edit distance. Returns the corpus and `(source, copy)` indices.
pub fn inject_near_duplicates(corpus: &Corpus, count: usize, seed: u64) -> (Corpus, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = corpus.clone();
    let mut pairs = Vec::new();
    let n = corpus.sections.len();
    if n == 0 {
        return (out, pairs);
    }
    let mut attempts = 0;
    while pairs.len() < count && attempts < count * 50 {
        attempts += 1;
        let src = rng.gen_range(0..n);
        let original = &corpus.sections[src];
        let k = rng.gen_range(0..original.sentences.len());
        let (from, to) = *TWEAKS.choose(&mut rng).expect("non-empty");
        let text = &original.sentences[k].text;
        let Some(at) = text.find(from) else { continue };
        let edited = format!("{}{}{}", &text[..at], to, &text[at + from.len()..]);
        let mut copy = original.clone();
        copy.section_id = format!("{}-dup{}", original.section_id, pairs.len() + 1);
        let mut offset = 0;
        for (j, s) in copy.sentences.iter_mut().enumerate() {
            if j == k {
                *s = Sentence::from_text(&edited, s.label);
            }
            s.span = Some(offset..offset + s.text.len());
            offset += s.text.len() + 1;
        }
        let a: Vec<char> = original.text().chars().collect();
        let b: Vec<char> = copy.text().chars().collect();
        if similarity(&a, &b) < 0.9 {
            continue;
        }
        out.sections.push(copy);
        pairs.push((src, out.sections.len() - 1));
    }
    (out, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, render_corpus};
    use crate::text::split_sentences;

    #[test]
    fn seeded_generation_is_identical() {
        assert_eq!(generate_synthetic(40, 9), generate_synthetic(40, 9));
        assert_ne!(generate_synthetic(40, 9), generate_synthetic(40, 10));
    }

    #[test]
    fn sections_have_between_one_and_fifteen_sentences() {
        let c = generate_synthetic(300, 1);
        assert!(c
            .sections
            .iter()
            .all(|s| (1..=MAX_SECTION_SENTENCES).contains(&s.sentences.len())));
    }

    #[test]
    fn every_label_appears_in_a_thousand_sections() {
        let counts = generate_synthetic(1000, 2).label_counts();
        assert!(counts.iter().all(|&n| n > 0), "{counts:?}");
        // None and Obligation dominate
        let (none, obl) = (counts[0], counts[1]);
        assert!(counts[2..].iter().all(|&n| n < none && n < obl), "{counts:?}");
    }

    #[test]
    fn the_splitter_recovers_generated_sentences() {
        for section in generate_synthetic(300, 3).sections {
            let text = section.text();
            let got: Vec<&str> = split_sentences(&text).into_iter().map(|s| s.text).collect();
            let want: Vec<&str> = section.sentences.iter().map(|s| s.text.as_str()).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn labels_follow_the_recipe() {
        for section in generate_synthetic(300, 4).sections {
            let mut intro_negative = None;
            for s in &section.sentences {
                let words: Vec<String> = s.tokens.iter().map(|t| t.surface.to_lowercase()).collect();
                let has = |w: &str| words.iter().any(|x| x == w);
                match s.label.unwrap() {
                    ClassLabel::ObligationListIntro => {
                        assert!(s.text.ends_with(':'));
                        intro_negative = Some(has("not") || has("never") || has("no"));
                    }
                    ClassLabel::ObligationListItem => {
                        assert_eq!(intro_negative, Some(false));
                        assert!(!has("not") && !has("never"));
                    }
                    ClassLabel::ProhibitionListItem => {
                        let neg = intro_negative.expect("item after intro");
                        assert!(neg || has("not") || has("never") || has("no"), "{}", s.text);
                    }
                    _ => {
                        assert!(!s.text.ends_with(':'));
                    }
                }
            }
        }
    }

    #[test]
    fn enough_items_depend_on_their_intro() {
        let acc = list_item_accounting(&generate_synthetic(1000, 5));
        assert!(acc.fraction() >= 0.10, "{acc:?}");
    }

    #[test]
    fn generated_corpus_round_trips() {
        let c = generate_synthetic(50, 6);
        assert_eq!(parse_corpus(&render_corpus(&c)).unwrap(), c);
    }

    #[test]
    fn near_duplicates_are_similar() {
        let c = generate_synthetic(50, 7);
        let (d, pairs) = inject_near_duplicates(&c, 10, 1);
        assert_eq!(pairs.len(), 10);
        assert_eq!(d.sections.len(), 60);
        for (a, b) in pairs {
            let x: Vec<char> = d.sections[a].text().chars().collect();
            let y: Vec<char> = d.sections[b].text().chars().collect();
            assert!(similarity(&x, &y) >= 0.9);
            assert_ne!(x, y);
        }
    }
}
