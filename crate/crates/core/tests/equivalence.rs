mod common;

use common::{check_equivalence, load_corpus, run_program, stress_config};
use transformcode::ast::Language;
use transformcode::augment::{AugmentConfig, TransformKind};

fn assert_clean(language: Language) {
    let report = check_equivalence(language, 20, &[AugmentConfig::default(), stress_config()]);
    for f in &report.failures {
        eprintln!("---\n{f}");
    }
    assert!(report.failures.is_empty(), "{} failures", report.failures.len());
    assert!(report.programs >= 20);
    eprintln!("{language}: {report:?}");
    for kind in TransformKind::ALL {
        if kind == TransformKind::AddTryCatch && language == Language::C {
            assert!(!report.applied.contains_key(&kind));
            continue;
        }
        assert!(
            report.applied.get(&kind).copied().unwrap_or(0) > 0,
            "{kind} never applied"
        );
    }
}

#[test]
fn java_anchors_preserve_output() {
    assert_clean(Language::Java);
}

#[test]
fn c_anchors_preserve_output() {
    if !common::c_compiler_available() {
        eprintln!("gcc not found; skipping");
        return;
    }
    assert_clean(Language::C);
}

#[test]
fn corpus_programs_run_and_have_five_inputs() {
    for lang in Language::ALL {
        if lang == Language::C && !common::c_compiler_available() {
            continue;
        }
        let corpus = load_corpus(lang);
        assert!(corpus.len() >= 20);
        for p in corpus {
            assert!(p.inputs.len() >= 5, "{}", p.name);
            run_program(lang, &p.source, &p.inputs).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }
}
