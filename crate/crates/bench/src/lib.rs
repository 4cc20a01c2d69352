//! Shared inputs for the benchmarks.

use std::path::PathBuf;

use fluid_core::syntax::{parse_source, SourceFile};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Source text of a corpus file by stem.
pub fn source(name: &str) -> String {
    let p = corpus_dir().join(format!("{name}.fluid"));
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn load(name: &str) -> SourceFile {
    parse_source(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every corpus file as `(stem, text)`, sorted by stem.
pub fn all_sources() -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "fluid").then(|| {
                let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
                let text = std::fs::read_to_string(&p).unwrap();
                (stem, text)
            })
        })
        .collect();
    v.sort();
    v
}

#[cfg(test)]
mod tests {
    #[test]
    fn corpus_loads() {
        let all = super::all_sources();
        assert!(all.len() >= 20);
        for (name, _) in &all {
            super::load(name);
        }
    }
}
