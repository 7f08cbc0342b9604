//! The embedded corpus is the contract for the file format: every entry
//! parses, survives a serialize/parse round trip, and carries the metadata
//! selftest depends on.

use feffcheck::corpus::ENTRIES;
use feffcheck::format;

#[test]
fn every_corpus_entry_parses_and_round_trips() {
    assert!(!ENTRIES.is_empty());
    for &(name, text) in ENTRIES {
        let a = format::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = format::serialize(&a);
        let b = format::parse(&again).unwrap_or_else(|e| panic!("{name} reserialized: {e}"));
        assert_eq!(a, b, "{name} does not round trip");
    }
}

#[test]
fn corpus_entries_are_annotated_and_sorted() {
    for &(name, text) in ENTRIES {
        let f = format::parse(text).unwrap();
        assert!(f.expected_verdict.is_some(), "{name} lacks expected_verdict");
        assert!(name.ends_with(".geom"), "{name}");
    }
    for pair in ENTRIES.windows(2) {
        assert!(pair[0].0 < pair[1].0, "corpus out of order at {}", pair[1].0);
    }
}

#[test]
fn corpus_covers_both_parities_and_all_reachable_verdicts() {
    use feffcheck::report::Verdict;
    let mut dims = Vec::new();
    let mut verdicts = Vec::new();
    for &(_, text) in ENTRIES {
        let f = format::parse(text).unwrap();
        dims.push(f.dimension);
        verdicts.push(f.expected_verdict.unwrap());
    }
    assert!(dims.contains(&3) && dims.contains(&4));
    for v in [
        Verdict::FeffermanLocal,
        Verdict::OddDimNilpotent,
        Verdict::HypothesesFail,
        Verdict::InconclusiveSign,
    ] {
        assert!(verdicts.contains(&v), "no corpus entry expects {v}");
    }
}

#[test]
fn whitespace_and_comments_do_not_change_the_parse() {
    let (_, text) = ENTRIES[0];
    let noisy: String = text
        .lines()
        .map(|l| format!("  {l}   # trailing note\n"))
        .collect();
    let a = format::parse(text).unwrap();
    let b = format::parse(&noisy).unwrap();
    assert_eq!(a, b);
}
