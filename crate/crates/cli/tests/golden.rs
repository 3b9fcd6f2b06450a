//! Reports of the fixture commands against frozen copies in
//! `fixtures/golden/`. Regenerate with `EXCOMP_BLESS=1`.

use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

const CASES: &[(&str, &[&str], i32)] = &[
    ("check-f1", &["check", "fixtures/f1.doctrine.json"], 0),
    ("check-f2", &["check", "fixtures/f2.doctrine.json"], 0),
    ("check-frobenius", &["check", "fixtures/mutants/frobenius.doctrine.json"], 1),
    ("check-functoriality", &["check", "fixtures/mutants/broken-functoriality.doctrine.json"], 1),
    ("check-malformed", &["check", "fixtures/golden/not-json.txt"], 2),
    ("complete-f0", &["complete", "fixtures/f0.doctrine.json"], 0),
    ("complete-f1", &["complete", "fixtures/f1-explicit.doctrine.json"], 0),
    ("complete-twice-budget", &["complete", "fixtures/f2.doctrine.json", "--twice", "--budget", "30"], 3),
    ("laws-adjunction-f2", &["laws", "fixtures/f2.doctrine.json", "--suite", "adjunction"], 0),
    ("laws-kz-pairs", &["laws", "fixtures/pairs.json", "--suite", "kz"], 0),
    ("laws-algebra-mutant", &["laws", "fixtures/mutants/constant-top.action.json", "--suite", "algebra"], 1),
    ("laws-elementary-f2", &["laws", "fixtures/f2.doctrine.json", "--suite", "elementary"], 0),
    ("cq-contained", &["cq", "fixtures/graph.sig.json", "fixtures/loop.query.json"], 0),
    ("cq-not-contained", &["cq", "fixtures/graph.sig.json", "fixtures/loop-converse.query.json"], 0),
    ("cq-parse-error", &["cq", "fixtures/graph.sig.json", "fixtures/bad.query.json"], 2),
    ("cq-compare", &["cq", "fixtures/unary.sig.json", "--compare-completion", "1,1,2"], 0),
    ("exact-diagonal", &["exact", "fixtures/powerset5.doctrine.json", "fixtures/diagonal.per.json", "--verify-laws"], 0),
    ("exact-non-symmetric", &["exact", "fixtures/powerset5.doctrine.json", "fixtures/mutants/non-symmetric.per.json"], 1),
    ("exact-budget-0", &["exact", "fixtures/powerset5.doctrine.json", "fixtures/diagonal.per.json", "--budget", "0"], 3),
];

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_excomp")).args(args).current_dir(root()).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn reports_match_golden_copies() {
    let bless = std::env::var_os("EXCOMP_BLESS").is_some();
    let dir = root().join("fixtures/golden");
    let mut stale = Vec::new();
    for (name, args, code) in CASES {
        let (got, stdout) = run(args);
        assert_eq!(got, *code, "{name}: exit code\n{stdout}");
        let path = dir.join(format!("{name}.json"));
        if bless {
            std::fs::write(&path, &stdout).unwrap();
        } else if std::fs::read_to_string(&path).ok().as_deref() != Some(stdout.as_str()) {
            stale.push(name.to_string());
        }
    }
    assert!(stale.is_empty(), "reports differ from golden copies: {stale:?}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["cq", "fixtures/graph.sig.json", "--sample", "50", "--seed", "3"];
    assert_eq!(run(&args), run(&args));
}

#[test]
fn completion_dump_is_written() {
    let out = std::env::temp_dir().join(format!("excomp-golden-{}.cmp.json", std::process::id()));
    let (code, _) = run(&["complete", "fixtures/f1.doctrine.json", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let dump: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    std::fs::remove_file(&out).ok();
    assert_eq!(dump["schema_version"], 1);
    let counts: Vec<usize> = dump["fibers"].as_array().unwrap().iter().map(|f| f["classes"].as_array().unwrap().len()).collect();
    assert_eq!(counts, vec![2, 4, 6]);
}
