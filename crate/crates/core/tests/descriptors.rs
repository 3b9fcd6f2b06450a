//! The descriptor files under `fixtures/` load, and the spelled-out F1
//! descriptor builds the same doctrine as the generated one.

use std::path::{Path, PathBuf};

use excomp::io::DoctrineFile;

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn descriptors(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".doctrine.json"))
        .collect();
    out.sort();
    out
}

#[test]
fn every_descriptor_loads() {
    let mut n = 0;
    for dir in [fixtures_dir(), fixtures_dir().join("mutants")] {
        for path in descriptors(&dir) {
            DoctrineFile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert_eq!(n, 11, "descriptor count");
}

#[test]
fn explicit_f1_matches_the_generated_one() {
    let a = DoctrineFile::load(&fixtures_dir().join("f1.doctrine.json")).unwrap();
    let b = DoctrineFile::load(&fixtures_dir().join("f1-explicit.doctrine.json")).unwrap();
    let (p, q) = (&a.doctrine, &b.doctrine);
    let (c, d) = (p.base(), q.base());
    assert_eq!(c.num_objects(), d.num_objects());
    assert_eq!(c.num_arrows(), d.num_arrows());
    assert_eq!(p.fibers(), q.fibers());
    for f in 0..c.num_arrows() {
        let g = d.arrow_by_name(&c.arrow_name(f)).unwrap();
        for x in p.fiber(c.tgt(f)).elements() {
            assert_eq!(p.reindex(f, x), q.reindex(g, x));
        }
    }
    assert_eq!(a.lambda.len(), b.lambda.len());
    let (ea, eb) = (a.existential.unwrap(), b.existential.unwrap());
    for &f in ea.lambda.members() {
        let g = d.arrow_by_name(&c.arrow_name(f)).unwrap();
        for x in p.fiber(c.src(f)).elements() {
            assert_eq!(ea.apply(c, f, x), eb.apply(d, g, x));
        }
    }
}
