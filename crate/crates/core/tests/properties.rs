mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::sample::select;

use common::{fixture_kb, java};
use throwguard_core::chain::{build_exception_prompt, ChainResult, Termination};
use throwguard_core::java::{analyze, extract_invocations, UnhandledException};
use throwguard_core::kb::{parse_throws_clause, ExceptionHierarchy, ROOT};
use throwguard_core::{loop_stats, PromptMode};

fn all_types() -> Vec<String> {
    ExceptionHierarchy::shipped().types().map(str::to_string).collect()
}

#[test]
fn shipped_hierarchy_is_reflexive_and_acyclic() {
    let h = ExceptionHierarchy::shipped();
    let types = all_types();
    assert!(types.len() > 50);
    for t in &types {
        assert!(h.is_subtype(t, t), "{t}");
        let chain = h.ancestors(t);
        let mut dedup = chain.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), chain.len(), "cycle through {t}");
        if t != ROOT {
            assert_eq!(chain.last().map(String::as_str), Some(ROOT), "{t}");
        }
    }
    assert!(h.is_subtype("ArrayIndexOutOfBoundsException", "IndexOutOfBoundsException"));
    assert!(!h.is_subtype("IndexOutOfBoundsException", "ArrayIndexOutOfBoundsException"));
}

proptest! {
    #[test]
    fn subtyping_is_transitive_and_antisymmetric(
        a in select(all_types()),
        b in select(all_types()),
        c in select(all_types()),
    ) {
        let h = ExceptionHierarchy::shipped();
        if h.is_subtype(&a, &b) && h.is_subtype(&b, &c) {
            prop_assert!(h.is_subtype(&a, &c));
        }
        if h.is_subtype(&a, &b) && h.is_subtype(&b, &a) {
            prop_assert!(h.same(&a, &b));
        }
    }

    #[test]
    fn unknown_exceptions_sit_under_the_root(name in "[A-Z][a-z]{3,8}Zzz(Exception|Error)") {
        let h = ExceptionHierarchy::shipped();
        prop_assert!(h.is_subtype(&name, ROOT));
        prop_assert!(!h.is_subtype(&name, "java.lang.RuntimeException"));
    }
}

fn results(loops: &[(usize, bool)]) -> Vec<ChainResult> {
    loops
        .iter()
        .map(|&(n, ok)| {
            let mut per_loop: Vec<usize> = (0..n).map(|i| n - i).collect();
            if let Some(last) = per_loop.last_mut() {
                *last = 0;
            }
            ChainResult {
                final_code: String::new(),
                loop_count: n,
                unhandled_per_loop: per_loop,
                termination: if ok { Termination::Converged } else { Termination::LoopCapReached },
                transcript: Vec::new(),
                quality: None,
            }
        })
        .collect()
}

fn loop_set() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((1usize..=10, any::<bool>()), 1..40)
}

proptest! {
    #[test]
    fn loop_stats_ignore_order(set in loop_set().prop_shuffle(), seed in any::<u64>()) {
        let rs = results(&set);
        let mut shuffled = rs.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        shuffled.reverse();
        prop_assert_eq!(loop_stats(&rs).unwrap(), loop_stats(&shuffled).unwrap());
    }

    #[test]
    fn within_k_is_monotone(set in loop_set()) {
        let s = loop_stats(&results(&set)).unwrap();
        let mut prev = 0.0;
        for k in 0..=12 {
            let w = s.within_k(k);
            prop_assert!(w >= prev);
            prop_assert!(w <= 1.0);
            prev = w;
        }
        prop_assert_eq!(s.completed(), set.iter().filter(|(_, ok)| *ok).count());
        prop_assert_eq!(s.histogram.values().sum::<usize>(), s.completed());
    }
}

const KEYWORDS: [&str; 12] = [
    "int", "for", "if", "new", "try", "do", "class", "void", "public", "static", "return", "throw",
];

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9]{0,7}".prop_filter("not a keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

fn rename(src: &str, names: &[(&str, &str)]) -> String {
    let mut out = String::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        let w = std::mem::take(word);
        out.push_str(names.iter().find(|(f, _)| *f == w).map(|(_, t)| *t).unwrap_or(&w));
    };
    for ch in src.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            word.push(ch);
        } else {
            flush(&mut word, &mut out);
            out.push(ch);
        }
    }
    flush(&mut word, &mut out);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn alpha_renaming_preserves_the_report(
        names in prop::collection::hash_set(ident(), 5),
        file in select(vec![
            "variant_a_incomplete.java",
            "variant_b_incorrect.java",
            "variant_c_abuse.java",
            "variant_d_good.java",
            "priority_mix.java",
        ]),
    ) {
        let names: Vec<String> = names.into_iter().collect();
        let kb = fixture_kb();
        let src = java(file);
        let map = [("v", names[0].as_str()), ("i", names[1].as_str()), ("j", names[2].as_str()),
                   ("a", names[3].as_str()), ("b", names[4].as_str())];
        let renamed = rename(&src, &map);
        let before = analyze(&src, &kb).unwrap();
        let after = analyze(&renamed, &kb).unwrap();
        prop_assert_eq!(before.label, after.label);
        prop_assert_eq!(before.unhandled, after.unhandled);
    }

    #[test]
    fn unrelated_statements_do_not_change_the_label(
        filler in prop::collection::vec(select(vec![
            "int unused = 0;",
            "String note = \"x\";",
            "// a comment",
            "System.out.println(\"log\");",
            "long t = System.nanoTime();",
        ]), 0..4),
        file in select(vec![
            "variant_a_incomplete.java",
            "variant_b_incorrect.java",
            "variant_c_abuse.java",
            "variant_d_good.java",
        ]),
    ) {
        let kb = fixture_kb();
        let src = java(file);
        let marker = "int i, int j) {";
        let at = src.find(marker).unwrap() + marker.len();
        let padded = format!("{}\n        {}{}", &src[..at], filler.join("\n        "), &src[at..]);
        prop_assert_eq!(analyze(&src, &kb).unwrap().label, analyze(&padded, &kb).unwrap().label);
    }

    #[test]
    fn extraction_never_panics(src in "[a-z(){};.=<> \n0-9\"]{0,80}") {
        let _ = extract_invocations(&src);
    }

    #[test]
    fn throws_clause_round_trips(
        exc in "[A-Z][a-z]{2,8}(Exception|Error)",
        cond in "if [a-z ]{1,30}[a-z]",
    ) {
        let spec = parse_throws_clause(&format!("Throws: {exc} - {cond}.")).unwrap();
        prop_assert_eq!(&spec.exception, &exc);
        prop_assert_eq!(&spec.condition, &cond);
        prop_assert!(spec.guardable);
    }

    #[test]
    fn fine_prompt_has_one_sentence_per_item(n in 1usize..6) {
        let items: Vec<UnhandledException> = (0..n)
            .map(|k| UnhandledException {
                fqn: format!("a.B.m{k}(int x)"),
                exception: "IllegalStateException".into(),
                condition: format!("if x is {k}"),
            })
            .collect();
        let p = build_exception_prompt(PromptMode::Fine, &items).unwrap();
        prop_assert_eq!(p.matches("Please check ").count(), n);
        prop_assert!(!p.ends_with('.'));
        let coarse = build_exception_prompt(PromptMode::Coarse, &items).unwrap();
        prop_assert_eq!(coarse, "Please pay attention to IllegalStateException.");
    }
}

#[test]
fn hierarchy_edges_have_known_parents() {
    let h = ExceptionHierarchy::shipped();
    let edges: &BTreeMap<String, String> = h.edges();
    for parent in edges.values() {
        assert!(parent == ROOT || edges.contains_key(parent), "{parent}");
    }
}
