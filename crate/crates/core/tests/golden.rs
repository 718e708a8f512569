//! Golden corpus: every program's OBJ digest and exact diagnostic text.
//! Run with `BLESS=1` to rewrite `tests/corpus/golden.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shapecraft::geometry::io::write_obj;
use shapecraft::program::{render_diagnostics, run_source, DiagnosticKind, BUILTINS, DEFAULT_STATEMENT_BUDGET};

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Golden {
    obj_sha256: Option<String>,
    diagnostics: String,
}

struct Outcome {
    golden: Golden,
    kinds: Vec<DiagnosticKind>,
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

fn programs() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "dsl"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn run(src: &str) -> Outcome {
    let budget = src
        .lines()
        .find_map(|l| l.strip_prefix("# budget: "))
        .map_or(DEFAULT_STATEMENT_BUDGET, |n| n.trim().parse().unwrap());
    match run_source(src, budget) {
        Ok(scene) => {
            let parts: Vec<_> = scene.objects.iter().map(|(k, m)| m.clone().with_tag(k.as_str())).collect();
            let obj = write_obj(&parts);
            Outcome {
                golden: Golden {
                    obj_sha256: Some(format!("{:x}", Sha256::digest(obj.as_bytes()))),
                    diagnostics: render_diagnostics(&scene.warnings),
                },
                kinds: Vec::new(),
            }
        }
        Err(d) => Outcome {
            kinds: d.iter().filter(|x| x.is_error()).map(|x| x.kind).collect(),
            golden: Golden {
                obj_sha256: None,
                diagnostics: render_diagnostics(&d),
            },
        },
    }
}

#[test]
fn corpus_matches_golden() {
    let progs = programs();
    assert!(progs.len() >= 30, "corpus has {} programs", progs.len());
    let mut got = BTreeMap::new();
    let mut kinds = BTreeSet::new();
    for (name, src) in &progs {
        let a = run(src);
        let b = run(src);
        assert_eq!(a.golden, b.golden, "{name} is not deterministic");
        kinds.extend(a.kinds.iter().map(|k| format!("{k:?}")));
        got.insert(name.clone(), a.golden);
    }
    let path = corpus_dir().join("golden.json");
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    let want: BTreeMap<String, Golden> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for (name, g) in &got {
        assert_eq!(Some(g), want.get(name), "{name} differs from golden");
    }
    assert_eq!(got.len(), want.len());

    for k in [
        DiagnosticKind::Syntax,
        DiagnosticKind::UnknownBuiltin,
        DiagnosticKind::UnboundIdentifier,
        DiagnosticKind::ArityMismatch,
        DiagnosticKind::TypeMismatch,
        DiagnosticKind::Kernel,
        DiagnosticKind::StatementBudgetExceeded,
        DiagnosticKind::TooLarge,
    ] {
        assert!(kinds.contains(&format!("{k:?}")), "no corpus program produces {k:?}");
    }
}

#[test]
fn corpus_uses_every_builtin() {
    let text: String = programs().into_iter().map(|(_, s)| s).collect();
    for b in BUILTINS {
        assert!(text.contains(&format!("{}(", b.name)), "builtin {} is not in the corpus", b.name);
    }
}

#[test]
fn text_is_rejected() {
    let src = std::fs::read_to_string(corpus_dir().join("23_err_text.dsl")).unwrap();
    assert_eq!(run(&src).golden.diagnostics, "line 1: error: unsupported builtin 'text'\n");
}
