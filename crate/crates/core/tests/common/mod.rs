#![allow(dead_code)]

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use fluid_core::dapp::{collect_d_applications, DApp};
use fluid_core::engine::{Engine, Origin, RoundState};
use fluid_core::eval::{eval_standard, random_value, EvalError, Value, ValueBounds};
use fluid_core::expr::Expr;
use fluid_core::skolem::universal_prefix;
use fluid_core::syntax::{parse_source, SourceFile};
use fluid_core::task::Task;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// All corpus files, sorted by name.
pub fn corpus_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "fluid"))
        .collect();
    v.sort();
    v
}

pub fn stem(p: &std::path::Path) -> String {
    p.file_stem().unwrap().to_string_lossy().into_owned()
}

pub fn load(name: &str) -> SourceFile {
    let path = corpus_dir().join(format!("{name}.fluid"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_source(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn all_fixtures() -> Vec<(String, SourceFile)> {
    corpus_files()
        .iter()
        .map(|p| {
            let n = stem(p);
            let sf = load(&n);
            (n, sf)
        })
        .collect()
}

/// `--max-rounds` from an expectation's arguments, if given.
pub fn max_rounds(args: &[String]) -> Option<usize> {
    args.iter()
        .position(|a| a == "--max-rounds")
        .and_then(|i| args.get(i + 1))
        .and_then(|v| v.parse().ok())
}

/// Fixtures expected to prove valid under plain `prove`, with their budgets.
pub fn plain_valid() -> Vec<(String, SourceFile, usize)> {
    all_fixtures()
        .into_iter()
        .filter_map(|(n, sf)| {
            let e = sf
                .expectations
                .iter()
                .find(|e| e.mode == "prove" && e.outcome == "valid")?;
            let k = max_rounds(&e.args).unwrap_or(8);
            Some((n, sf, k))
        })
        .collect()
}

/// Fixtures whose goal holds in the standard model according to some
/// `valid` expectation.
pub fn true_goals() -> Vec<(String, SourceFile)> {
    all_fixtures()
        .into_iter()
        .filter(|(_, sf)| {
            sf.expectations
                .iter()
                .any(|e| (e.mode == "prove" || e.mode == "prove-contracts") && e.outcome == "valid")
        })
        .collect()
}

fn collected(task: &Task, st: &RoundState) -> BTreeSet<DApp> {
    let fs = st
        .formulas
        .iter()
        .filter(|(o, _)| !matches!(o, Origin::Contract(_)))
        .map(|(_, f)| f);
    collect_d_applications(&task.sig, fs)
}

/// Steps the engine through `rounds + 1` checks. Formulas only grow, the
/// instantiated set only grows, and every new instantiation occurred in
/// the goal or unfolding formulas of the previous round.
pub fn audit(task: &Task, mut engine: Engine<'_>, rounds: usize) -> Result<(), String> {
    for r in 0..=rounds {
        let before_f: Vec<_> = engine.state.formulas.clone();
        let before_i = engine.state.instantiated.clone();
        let occurring = collected(task, &engine.state);
        let rec = engine.step(r < rounds).map_err(|e| e.to_string())?.clone();
        let st = &engine.state;
        if st.formulas.len() < before_f.len() || st.formulas[..before_f.len()] != before_f[..] {
            return Err(format!("round {r}: formulas shrank or changed"));
        }
        if !before_i.is_subset(&st.instantiated) {
            return Err(format!("round {r}: instantiated shrank"));
        }
        for d in &rec.new_instantiations {
            if !occurring.contains(d) {
                return Err(format!("round {r}: {d} instantiated without occurring"));
            }
        }
        if rec.verdict.is_unsat() || rec.verdict.is_failure() {
            break;
        }
    }
    Ok(())
}

/// Evaluates the goal matrix on `n` random ground instances (ADT depth at
/// most 6, integers in [-20, 20], fuel 10^5). Returns the number of true
/// instances and of instances that ran out of fuel; any false instance or
/// evaluation error is reported.
pub fn soundness(task: &Task, n: usize, seed: u64) -> Result<(usize, usize), String> {
    let bounds = ValueBounds::default();
    let (vars, body) = universal_prefix(&task.goal).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ok, mut skipped) = (0, 0);
    for _ in 0..n {
        let binding: BTreeMap<String, Expr> = vars
            .iter()
            .map(|v| {
                let val = random_value(&task.sig, &v.sort, bounds, &mut rng).expect("inhabited sort");
                (v.name.clone(), val.to_expr())
            })
            .collect();
        let ground = body.instantiate(&binding);
        match eval_standard(&task.sig, &task.defs, &ground, 100_000) {
            Ok(Value::Bool(true)) => ok += 1,
            Ok(v) => return Err(format!("counterexample {binding:?} gives {v}")),
            Err(EvalError::FuelExhausted(_) | EvalError::DepthExceeded(_)) => skipped += 1,
            Err(e) => return Err(format!("{e} on {binding:?}")),
        }
    }
    Ok((ok, skipped))
}
