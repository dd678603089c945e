//! Alignment against exhaustive enumeration on short strings.

use factreward_core::align::{lcs_locate, resolve_spans, substring_locate, AlignError};
use factreward_core::annotation::SentenceAnnotation;
use proptest::prelude::*;

/// Longest common subsequence length by enumerating every subsequence of `a`.
fn brute_lcs(a: &[char], b: &[char]) -> usize {
    let n = a.len();
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let sub: Vec<char> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| a[i]).collect();
        if is_subsequence(&sub, b) {
            best = len;
        }
    }
    best
}

fn is_subsequence(sub: &[char], of: &[char]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|c| it.any(|d| d == c))
}

/// Expected LCS range: smallest end whose prefix already holds a maximal
/// alignment, then the largest start whose window still does.
fn brute_lcs_range(a: &[char], b: &[char]) -> Option<(usize, usize)> {
    let best = brute_lcs(a, b);
    if best == 0 {
        return None;
    }
    let end = (1..=b.len()).find(|&e| brute_lcs(a, &b[..e]) == best)?;
    let start = (0..end).rev().find(|&s| brute_lcs(a, &b[s..end]) == best)?;
    Some((start, end))
}

/// Longest common substring by checking every substring of `b`.
fn brute_substring(a: &[char], b: &[char]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for start in 0..b.len() {
        for end in start + 1..=b.len() {
            let piece = &b[start..end];
            let occurs = a.windows(piece.len()).any(|w| w == piece);
            let longer = best.is_none_or(|(s, e)| end - start > e - s);
            if occurs && longer {
                best = Some((start, end));
            }
        }
    }
    best
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

fn small_string() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!['a', 'c', 'g', 't']), 1..=12)
        .prop_map(|v| v.into_iter().collect())
}

#[test]
fn worked_pairs() {
    let hit = lcs_locate("ABD", "XABCD").unwrap();
    assert_eq!((hit.matched, hit.range.start, hit.range.end), (3, 1, 5));
    assert_eq!(brute_lcs_range(&chars("ABD"), &chars("XABCD")), Some((1, 5)));

    let hit = substring_locate("banana", "ban banana").unwrap();
    assert_eq!((hit.matched, hit.range.start, hit.range.end), (6, 4, 10));
    assert_eq!(brute_substring(&chars("banana"), &chars("ban banana")), Some((4, 10)));

    assert_eq!(brute_substring(&chars("abc"), &chars("xxaxxbxxc")), Some((2, 3)));
    let hit = substring_locate("abc", "xxaxxbxxc").unwrap();
    assert_eq!((hit.matched, hit.range.start, hit.range.end), (1, 2, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lcs_matches_enumeration(a in small_string(), b in small_string()) {
        let (ac, bc) = (chars(&a), chars(&b));
        match (lcs_locate(&a, &b), brute_lcs_range(&ac, &bc)) {
            (Ok(hit), Some((start, end))) => {
                prop_assert_eq!(hit.matched, brute_lcs(&ac, &bc));
                prop_assert_eq!((hit.range.start, hit.range.end), (start, end));
                prop_assert!(hit.ratio > 0.0 && hit.ratio <= 1.0);
            }
            (Err(AlignError::NoAlignment), None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
        }
    }

    #[test]
    fn substring_matches_enumeration(a in small_string(), b in small_string()) {
        let (ac, bc) = (chars(&a), chars(&b));
        match (substring_locate(&a, &b), brute_substring(&ac, &bc)) {
            (Ok(hit), Some((start, end))) => {
                prop_assert_eq!(hit.matched, end - start);
                prop_assert_eq!((hit.range.start, hit.range.end), (start, end));
                prop_assert!(ac.windows(end - start).any(|w| w == &bc[start..end]));
            }
            (Err(AlignError::NoAlignment), None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
        }
    }

    #[test]
    fn appending_to_haystack_never_hurts(a in small_string(), b in small_string(), extra in small_string()) {
        let longer = format!("{b}{extra}");
        let matched = |r: Result<factreward_core::AlignmentResult, AlignError>| r.map_or(0, |h| h.matched);
        prop_assert!(matched(lcs_locate(&a, &longer)) >= matched(lcs_locate(&a, &b)));
        prop_assert!(matched(substring_locate(&a, &longer)) >= matched(substring_locate(&a, &b)));
    }

    #[test]
    fn resolved_spans_stay_nested_and_in_bounds(
        parts in prop::collection::vec((small_string(), prop::collection::vec(small_string(), 1..4)), 1..5),
        noise in small_string(),
        min_ratio in 0.0f64..=1.0,
    ) {
        let sentences: Vec<SentenceAnnotation> = parts
            .iter()
            .enumerate()
            .map(|(i, (text, stmts))| SentenceAnnotation::new(i + 1, text.clone()).with_statements(stmts.clone()))
            .collect();
        let response = format!("{noise}{}", parts.iter().map(|p| p.0.as_str()).collect::<Vec<_>>().join(" "));
        let len = response.chars().count();
        for sentence in resolve_spans(&response, &sentences, min_ratio) {
            prop_assert_eq!(sentence.span.is_none(), sentence.unresolved);
            if let Some(span) = sentence.span {
                prop_assert!(span.start < span.end && span.end <= len);
            }
            for statement in &sentence.statements {
                prop_assert_eq!(statement.span.is_none(), statement.unresolved);
                if let Some(span) = statement.span {
                    prop_assert!(span.end <= len);
                    prop_assert!(sentence.span.unwrap().contains_range(&span));
                }
            }
        }
    }
}

#[test]
fn worked_example_statement_resolves_exactly() {
    let response = "It is difficult to say which game has been released in more versions without more information, so I can only guess based on my training data.\nArthur's Magazine was likely started first. It was possibly founded in 1923 by Arthur K. Watson, a prominent publisher in the field of men's magazines.";
    let sentence = SentenceAnnotation::new(1, "Arthur's Magazine was likely started first.")
        .with_statements(["Arthur's Magazine was likely started first."]);
    let resolved = resolve_spans(response, &[sentence], 0.7);
    let span = resolved[0].span.unwrap();
    let text: String = response.chars().skip(span.start).take(span.len()).collect();
    assert_eq!(text, "Arthur's Magazine was likely started first.");
    assert_eq!(resolved[0].statements[0].span, Some(span));
    let hit = lcs_locate(&resolved[0].statements[0].text, &text).unwrap();
    assert_eq!(hit.ratio, 1.0);
}
