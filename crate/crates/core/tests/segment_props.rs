use abbrev_core::segment::{baseline_segment, boundary_offsets, dict_segment, score_boundaries, AbbrevLexicon};
use abbrev_core::synth::{generate_text, SynthSpec};
use proptest::prelude::*;

const STEMS: [&str; 6] = ["гл", "др", "т", "е", "г", "Вт"];

fn text() -> impl Strategy<Value = String> {
    let piece = prop::sample::select(vec![
        "гл",
        "др",
        "т",
        "е",
        "г",
        "Вт",
        "Он",
        "она",
        "Москва",
        "дом",
        ".",
        ". ",
        ", ",
        " ",
        "  ",
        "\n",
        "3.14",
        "12",
        "a1",
        "!",
        "?",
        "ё",
        "Ж",
    ]);
    prop::collection::vec(piece, 0..40).prop_map(|v| v.concat())
}

fn lexicon(mask: u8) -> AbbrevLexicon {
    AbbrevLexicon::new(
        STEMS
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| *s),
        false,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn token_spans_are_lossless(t in text(), mask in 0u8..64) {
        let seg = dict_segment(&t, &lexicon(mask));
        let mut rebuilt = String::new();
        let mut pos = 0;
        for tok in &seg.tokens {
            prop_assert!(tok.start >= pos && tok.end > tok.start && tok.end <= t.len());
            let gap = &t[pos..tok.start];
            prop_assert!(gap.chars().all(char::is_whitespace));
            rebuilt.push_str(gap);
            prop_assert_eq!(&t[tok.start..tok.end], tok.text.as_str());
            rebuilt.push_str(&tok.text);
            pos = tok.end;
        }
        rebuilt.push_str(&t[pos..]);
        prop_assert_eq!(rebuilt, t);
    }

    #[test]
    fn sentences_partition_tokens(t in text(), mask in 0u8..64) {
        let seg = dict_segment(&t, &lexicon(mask));
        let mut next = 0;
        for s in &seg.sentences {
            prop_assert_eq!(s.first_token, next);
            prop_assert!(s.end_token > s.first_token);
            prop_assert_eq!(s.start, seg.tokens[s.first_token].start);
            prop_assert_eq!(s.end, seg.tokens[s.end_token - 1].end);
            next = s.end_token;
        }
        prop_assert_eq!(next, seg.tokens.len());
    }

    #[test]
    fn empty_dictionary_equals_baseline(t in text()) {
        let seg = dict_segment(&t, &AbbrevLexicon::default());
        prop_assert_eq!(boundary_offsets(&seg.sentences), boundary_offsets(&baseline_segment(&t)));
    }

    #[test]
    fn adding_a_stem_never_adds_boundaries(t in text(), mask in 0u8..64, extra in 0usize..6) {
        let smaller = dict_segment(&t, &lexicon(mask)).sentences.len();
        let larger = dict_segment(&t, &lexicon(mask | (1 << extra))).sentences.len();
        prop_assert!(larger <= smaller);
    }

    #[test]
    fn abbreviation_kind_matches_dictionary(t in text(), mask in 0u8..64) {
        use abbrev_core::segment::TokenKind;
        let lex = lexicon(mask);
        for tok in dict_segment(&t, &lex).tokens {
            let hit = tok.text.strip_suffix('.').is_some_and(|stem| lex.contains(stem));
            prop_assert_eq!(tok.kind == TokenKind::AbbreviationWithPeriod, hit);
        }
    }
}

#[test]
fn dictionary_beats_baseline_on_planted_text() {
    let mut spec = SynthSpec::new(21);
    spec.random_abbrevs = 20;
    spec.random_commons = 200;
    spec.titles = vec!["г".to_string(), "ул".to_string()];
    let out = generate_text(&spec, 300).unwrap();
    let (abbrevs, _) = spec.resolve_words();
    let lex = AbbrevLexicon::new(abbrevs.keys(), false).with_titles(&spec.titles);
    let dict = score_boundaries(
        &boundary_offsets(&dict_segment(&out.text, &lex).sentences),
        &out.gold.boundaries,
    );
    let base = score_boundaries(&boundary_offsets(&baseline_segment(&out.text)), &out.gold.boundaries);
    assert!(dict.f1 > base.f1, "dict {dict:?} vs baseline {base:?}");
    assert_eq!(dict.f1, 1.0);
}

#[test]
fn large_lexicon_lookups() {
    let words: Vec<String> = (0..9000).map(|i| format!("сл{i}")).collect();
    let lex = AbbrevLexicon::new(&words, true);
    assert_eq!(lex.len(), 9000);
    let hits = (0..1_000_000).filter(|i| lex.contains(&words[i % 9000])).count();
    assert_eq!(hits, 1_000_000);
}
