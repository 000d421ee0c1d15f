//! Cold-start metrics against a brute-force classify-and-sum oracle.
//!
//! The oracle works on the raw byte strings the fixture vocabulary was built
//! from and re-derives every class with its own (deliberately naive) rules.

use proptest::prelude::*;
use tokscope_core::coldstart::{
    compute_kap, compute_nlp, compute_pkp, compute_stap, compute_stp, formatting_probs, top_k_by_class,
    ColdStartDistribution,
};
use tokscope_core::vocab::BYTE_LEVEL;
use tokscope_core::{Classifier, SymbolSet, TokenClass, TokenId, Vocabulary};

const TOL: f64 = 1e-12;

const KEYWORDS: &[&str] = &["def", "import", "class", "void", "int", "from", "package", "is", "in", "if", "or"];
const WORDS: &[&str] = &["the", "and", "of", "is", "in", "The", "you"];
const SYMBOLS: &str = "{}[]()<>;:,.#@$%^&*+-=/\\|!?~`'\"";

/// Candidate surfaces: keywords, words, punctuation, whitespace and noise.
fn pieces() -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = Vec::new();
    for k in KEYWORDS.iter().chain(WORDS) {
        out.push(k.as_bytes().to_vec());
        out.push(format!(" {k}").into_bytes());
        out.push(format!("  {k}").into_bytes());
    }
    for s in ["**", "#", "//", "(", " (", ")\n\n", "%c", "#!/", "#include", "::", "->", "x1=", "=="] {
        out.push(s.as_bytes().to_vec());
    }
    for s in ["\t", "\n", "  ", "    ", "\n\n", " ", "\r\n", " \t"] {
        out.push(s.as_bytes().to_vec());
    }
    for s in ["cat", "dog", "ing", "tion", "Ġ", "é", "漢"] {
        out.push(s.as_bytes().to_vec());
    }
    out.push(vec![0xff, b'(']);
    out.push(vec![0xe6, 0xbc]);
    let mut seen = std::collections::HashSet::new();
    out.retain(|p| seen.insert(p.clone()));
    out
}

struct Oracle;

impl Oracle {
    fn strip(bytes: &[u8]) -> &[u8] {
        if bytes.len() >= 2 && bytes[0] == b' ' && bytes[1] != b' ' {
            &bytes[1..]
        } else if bytes == b" " {
            b""
        } else {
            bytes
        }
    }

    fn keyword(bytes: &[u8]) -> bool {
        KEYWORDS.iter().any(|k| k.as_bytes() == Self::strip(bytes))
    }

    fn natural(bytes: &[u8]) -> bool {
        let lowered = String::from_utf8_lossy(Self::strip(bytes)).to_lowercase();
        WORDS.iter().any(|w| w.to_lowercase() == lowered)
    }

    fn formatting(bytes: &[u8]) -> bool {
        !bytes.is_empty() && bytes.iter().all(|b| matches!(b, b' ' | b'\t' | b'\n' | b'\r'))
    }

    fn special(bytes: &[u8]) -> bool {
        if Self::keyword(bytes) {
            return false;
        }
        if Self::formatting(bytes) {
            return true;
        }
        let text = String::from_utf8_lossy(bytes);
        let has_symbol = text.chars().any(|c| SYMBOLS.contains(c));
        let mut run = 0;
        let mut longest = 0;
        for c in text.chars() {
            if c.is_alphanumeric() {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        has_symbol && longest <= 2
    }
}

#[derive(Debug, Clone)]
struct Fixture {
    raw: Vec<Vec<u8>>,
    probs: Vec<f64>,
    dense: bool,
}

fn fixture() -> impl Strategy<Value = Fixture> {
    let pool = pieces();
    let n = pool.len();
    (
        proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..n),
        proptest::collection::vec(0u32..300, 0..900),
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(move |(chosen, noise, dense, seed)| {
            let mut raw: Vec<Vec<u8>> = chosen.into_iter().map(|i| pool[i].clone()).collect();
            for x in noise {
                let word = format!("n{x}").into_bytes();
                if !raw.contains(&word) {
                    raw.push(word);
                }
            }
            raw.truncate(1000);
            // xorshift weights, heavy-tailed so a few tokens dominate
            let mut state = seed | 1;
            let mut weights: Vec<f64> = raw
                .iter()
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                    if u < 0.1 {
                        0.0
                    } else {
                        u.powi(8)
                    }
                })
                .collect();
            if weights.iter().all(|&w| w == 0.0) {
                weights[0] = 1.0;
            }
            let total: f64 = weights.iter().sum();
            let keep = if dense { 1.0 } else { 0.7 };
            Fixture {
                raw,
                probs: weights.iter().map(|w| w / total * keep).collect(),
                dense,
            }
        })
}

fn build(f: &Fixture) -> (Vocabulary, ColdStartDistribution) {
    let entries = f
        .raw
        .iter()
        .enumerate()
        .map(|(i, b)| (BYTE_LEVEL.encode(b), i as TokenId))
        .collect();
    let vocab = Vocabulary::from_parts("oracle", entries, vec![]).unwrap();
    let probs = f.probs.iter().enumerate().map(|(i, &p)| (i as TokenId, p)).collect();
    let dist = ColdStartDistribution::new("oracle-model", &vocab, probs, f.dense).unwrap();
    (vocab, dist)
}

fn classifier() -> Classifier {
    Classifier::new(KEYWORDS, WORDS, SymbolSet::new(SYMBOLS.chars()).unwrap())
}

fn oracle_sum(f: &Fixture, pred: impl Fn(&[u8]) -> bool) -> f64 {
    f.raw
        .iter()
        .zip(&f.probs)
        .filter(|(b, _)| pred(b))
        .map(|(_, p)| p)
        .sum()
}

fn oracle_top(f: &Fixture, pred: impl Fn(&[u8]) -> bool, k: usize) -> Vec<(TokenId, f64)> {
    let mut members: Vec<(TokenId, f64)> = f
        .raw
        .iter()
        .zip(&f.probs)
        .enumerate()
        .filter(|(_, (b, _))| pred(b))
        .map(|(i, (_, &p))| (i as TokenId, p))
        .collect();
    // selection by repeated scan, independent of the library's sort
    let mut out = Vec::new();
    while out.len() < k && !members.is_empty() {
        let mut best = 0;
        for (j, m) in members.iter().enumerate() {
            let b = members[best];
            if m.1 > b.1 || (m.1 == b.1 && m.0 < b.0) {
                best = j;
            }
        }
        out.push(members.remove(best));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metrics_match_brute_force(f in fixture(), k in 1usize..6) {
        let (vocab, dist) = build(&f);
        let c = classifier();
        let index = c.index(&vocab);

        let pkp = oracle_sum(&f, Oracle::keyword);
        let stp = oracle_sum(&f, Oracle::special);
        let nlp = oracle_sum(&f, Oracle::natural);
        prop_assert!((compute_pkp(&dist, &index) - pkp).abs() <= TOL);
        prop_assert!((compute_stp(&dist, &index) - stp).abs() <= TOL);
        prop_assert!((compute_nlp(&dist, &index) - nlp).abs() <= TOL);

        let n_kw = f.raw.iter().filter(|b| Oracle::keyword(b)).count();
        match compute_kap(&dist, &index) {
            Ok(kap) => prop_assert!((kap - pkp / n_kw as f64).abs() <= TOL),
            Err(_) => prop_assert_eq!(n_kw, 0),
        }
        let n_sp = f.raw.iter().filter(|b| Oracle::special(b)).count();
        match compute_stap(&dist, &index) {
            Ok(stap) => prop_assert!((stap - stp / n_sp as f64).abs() <= TOL),
            Err(_) => prop_assert_eq!(n_sp, 0),
        }

        for (class, pred) in [
            (TokenClass::ProgrammingKeyword, Oracle::keyword as fn(&[u8]) -> bool),
            (TokenClass::SpecialToken, Oracle::special),
        ] {
            let got: Vec<(TokenId, f64)> = top_k_by_class(&dist, &index, class, k)
                .unwrap()
                .iter()
                .map(|t| (t.id, t.probability))
                .collect();
            prop_assert_eq!(got, oracle_top(&f, pred, k));
        }

        let fmt = formatting_probs(&dist, &vocab);
        for (cell, text) in [
            (fmt.tab, &b"\t"[..]),
            (fmt.newline, b"\n"),
            (fmt.two_spaces, b"  "),
            (fmt.four_spaces, b"    "),
        ] {
            let expected = f.raw.iter().position(|b| b == text).map_or(0.0, |i| f.probs[i]);
            prop_assert_eq!(cell.present, f.raw.iter().any(|b| b == text));
            prop_assert!((cell.probability - expected).abs() <= TOL);
        }
    }

    #[test]
    fn keyword_and_special_mass_is_bounded(f in fixture()) {
        let (vocab, dist) = build(&f);
        let c = classifier();
        let index = c.index(&vocab);
        let pkp = compute_pkp(&dist, &index);
        let stp = compute_stp(&dist, &index);
        prop_assert!((0.0..=1.0 + 1e-9).contains(&pkp));
        prop_assert!(pkp + stp <= 1.0 + 1e-9);
        // keyword and special classes are disjoint by construction
        for (id, classes) in index.iter() {
            prop_assert!(
                !(classes.contains(TokenClass::ProgrammingKeyword) && classes.contains(TokenClass::SpecialToken)),
                "token {} carries both classes", id
            );
        }
    }

    #[test]
    fn truncated_dump_is_a_lower_bound(f in fixture(), keep in 1usize..50) {
        let (vocab, dist) = build(&f);
        let c = classifier();
        let index = c.index(&vocab);
        let top = dist.truncate_top_k(keep);
        prop_assert!(compute_pkp(&top, &index) <= compute_pkp(&dist, &index) + TOL);
        prop_assert!(compute_stp(&top, &index) <= compute_stp(&dist, &index) + TOL);
        prop_assert!((top.total_mass() - dist.total_mass()).abs() <= 1e-9);
    }
}

#[test]
fn vocabulary_order_does_not_matter() {
    let f = Fixture {
        raw: pieces(),
        probs: {
            let n = pieces().len() as f64;
            vec![1.0 / n; pieces().len()]
        },
        dense: true,
    };
    let (vocab, dist) = build(&f);
    let c = classifier();
    let forward = compute_pkp(&dist, &c.index(&vocab));

    let mut reversed = f.clone();
    reversed.raw.reverse();
    let (vocab_r, dist_r) = build(&reversed);
    let backward = compute_pkp(&dist_r, &c.index(&vocab_r));
    assert!((forward - backward).abs() <= TOL);
}
