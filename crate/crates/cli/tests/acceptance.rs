//! Acceptance checks. Runs without the test harness and prints one line per
//! criterion; exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use common::oracle::{full_instantiation, OracleVerdict};
use fluid_core::acyclic::{check_fluid, computational_closure, FluidOptions, ObligationStatus};
use fluid_core::contracts::{run_uqfr_contracts, simulation_check, ContractScope};
use fluid_core::dapp::DApp;
use fluid_core::engine::{run_uqfr, Engine, EngineConfig, EngineResult, Outcome};
use fluid_core::expr::Expr;
use fluid_core::smt::Verdict;

type Check = Result<String, String>;
type Tree = Vec<(PathBuf, Vec<u8>)>;
type Criterion = (&'static str, fn() -> Check);

fn prove(name: &str, rounds: usize) -> Result<EngineResult, String> {
    let sf = common::load(name);
    run_uqfr(&sf.task, &EngineConfig::with_rounds(rounds)).map_err(|e| format!("{name}: {e}"))
}

fn valid_rounds(name: &str, r: &EngineResult) -> Result<usize, String> {
    match r.outcome {
        Outcome::Valid { rounds, .. } => Ok(rounds),
        ref o => Err(format!("{name}: expected valid, got {o:?}")),
    }
}

fn exhausted(name: &str, r: &EngineResult) -> Result<(), String> {
    if r.outcome.is_exhausted() {
        Ok(())
    } else {
        Err(format!("{name}: expected budget exhausted, got {:?}", r.outcome))
    }
}

fn consts(r: &EngineResult) -> Vec<Expr> {
    r.state.constants.iter().map(|v| Expr::Var(v.clone())).collect()
}

fn require(r: &EngineResult, apps: &[DApp], name: &str) -> Result<(), String> {
    let missing: Vec<String> = apps
        .iter()
        .filter(|a| !r.state.instantiated.contains(a))
        .map(|a| a.to_string())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(format!("{name}: missing instantiations {missing:?}"))
    }
}

fn nil() -> Expr {
    Expr::ctor("Nil", vec![])
}

fn tail(e: Expr) -> Expr {
    Expr::dtor("tail", e)
}

fn insert_into_nil() -> Check {
    let sf = common::load("insert_nil");
    let r = prove("insert_nil", 2)?;
    let rounds = valid_rounds("insert_nil", &r)?;
    let k = consts(&r)[0].clone();
    let ins = DApp::new("insert", vec![nil(), k]);
    let srt = DApp::new("sorted", vec![ins.to_expr()]);
    let required = [ins, srt];
    require(&r, &required, "insert_nil")?;
    let base: BTreeSet<DApp> = required.iter().cloned().collect();
    let next = computational_closure(&sf.task.sig, &base, &sf.task.defs, 1);
    let stray: Vec<String> = r
        .state
        .instantiated
        .iter()
        .filter(|d| !next.contains(d))
        .map(|d| d.to_string())
        .collect();
    if !stray.is_empty() {
        return Err(format!("instantiations beyond one further round: {stray:?}"));
    }
    Ok(format!(
        "valid after {rounds} round(s), {} instantiation(s)",
        r.state.instantiated.len()
    ))
}

fn insert_strengthened_and_contracts() -> Check {
    let r = prove("insert_vc_leon", 6)?;
    let rounds = valid_rounds("insert_vc_leon", &r)?;
    let c = consts(&r);
    let (x, k) = (c[0].clone(), c[1].clone());
    let ins = Expr::call("insert", vec![x.clone(), k.clone()]);
    let ins_t = Expr::call("insert", vec![tail(x.clone()), k.clone()]);
    let mut req = vec![
        DApp::new("insert", vec![x.clone(), k.clone()]),
        DApp::new("insert", vec![tail(x.clone()), k.clone()]),
    ];
    for t in [x.clone(), tail(x), ins, ins_t] {
        req.push(DApp::new("sorted", vec![t]));
    }
    require(&r, &req, "insert_vc_leon")?;

    let sf = common::load("insert_vc_simple");
    let rc =
        run_uqfr_contracts(&sf.task, &EngineConfig::with_rounds(6), ContractScope::Calls).map_err(|e| e.to_string())?;
    let crounds = valid_rounds("insert_vc_simple with contracts", &rc)?;
    Ok(format!(
        "strengthened VC valid in {rounds} round(s); simple with contracts valid in {crounds}"
    ))
}

fn negatives() -> Check {
    for name in ["insert_vc_simple", "sorted_membership"] {
        let r = prove(name, 6)?;
        exhausted(name, &r)?;
        if let Some(bad) = r.records.iter().find(|x| x.verdict != Verdict::Sat) {
            return Err(format!("{name}: round {} was {}", bad.round, bad.verdict));
        }
    }
    Ok("both exhausted at budget 6 with sat in every round".into())
}

fn peano() -> Check {
    let r = prove("peano_zeroL", 5)?;
    valid_rounds("peano_zeroL", &r)?;
    if r.state.instantiated.len() != 1 {
        return Err(format!("zeroL used {} instantiations", r.state.instantiated.len()));
    }
    let r = prove("peano_zeroR", 5)?;
    valid_rounds("peano_zeroR", &r)?;
    let n = consts(&r)[0].clone();
    let z = Expr::ctor("Z", vec![]);
    require(
        &r,
        &[
            DApp::new("plus", vec![z.clone(), z.clone()]),
            DApp::new("plus", vec![Expr::ctor("S", vec![n]), z]),
        ],
        "peano_zeroR",
    )?;
    exhausted("peano_comm_direct", &prove("peano_comm_direct", 5)?)?;
    exhausted("peano_comm_partial", &prove("peano_comm_partial", 5)?)?;
    valid_rounds("peano_comm_full", &prove("peano_comm_full", 5)?)?;
    Ok("zeroL 1 instantiation, zeroR valid, comm direct/partial exhausted, comm full valid".into())
}

fn map_law() -> Check {
    exhausted("map_get_set", &prove("map_get_set", 5)?)?;
    let r = prove("map_get_set_inductive", 5)?;
    let rounds = valid_rounds("map_get_set_inductive", &r)?;
    Ok(format!("direct exhausted at 5, inductive valid in {rounds}"))
}

fn bin(args: &[&str]) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_fluid"))
        .current_dir(root())
        .args(args)
        .output()
        .ok()?
        .status
        .code()
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn acyclicity() -> Check {
    let report = |name: &str| check_fluid(&common::load(name).task, &FluidOptions::default());
    let merge = report("merge");
    let obs: Vec<_> = merge.obligations.iter().filter(|o| o.caller == "merge").collect();
    if !merge.is_fluid() || obs.len() != 2 {
        return Err(format!("merge: fluid {}, {} obligations", merge.is_fluid(), obs.len()));
    }
    for o in &obs {
        match o.status {
            ObligationStatus::AcceptedSemantic { rounds } if rounds <= 2 => {}
            ref s => return Err(format!("merge obligation {}: {s:?}", o.index)),
        }
    }
    let length = report("length");
    if !length.is_fluid()
        || !length
            .obligations
            .iter()
            .all(|o| o.status == ObligationStatus::AcceptedStructural)
    {
        return Err("length not accepted structurally".into());
    }
    let forever = report("forever");
    let fo: Vec<_> = forever.obligations.iter().filter(|o| o.caller == "forever").collect();
    if !forever.is_fluid()
        || fo.is_empty()
        || !fo
            .iter()
            .all(|o| matches!(o.status, ObligationStatus::AcceptedSemantic { .. }))
    {
        return Err("forever not accepted semantically".into());
    }
    let std_r = report("std_R");
    if std_r.is_fluid()
        || !std_r
            .obligations
            .iter()
            .any(|o| o.caller == "R" && matches!(o.status, ObligationStatus::Rejected { .. }))
    {
        return Err("std_R not rejected".into());
    }
    let codes: Vec<(&str, Option<i32>, i32)> = [("merge", 0), ("length", 0), ("forever", 0), ("std_R", 2)]
        .into_iter()
        .map(|(n, want)| (n, bin(&["check-acyclicity", &format!("corpus/{n}.fluid")]), want))
        .collect();
    if let Some((n, got, want)) = codes.iter().find(|(_, got, want)| *got != Some(*want)) {
        return Err(format!("{n}: exit {got:?}, want {want}"));
    }
    Ok("merge 2 semantic, length structural, forever semantic, std_R rejected; exit codes 0/0/0/2".into())
}

fn simulation() -> Check {
    let cfg = EngineConfig::default();
    let sf = common::load("length_contract");
    let rep = simulation_check(&sf.task, 3, ContractScope::Calls, &cfg).map_err(|e| e.to_string())?;
    if !rep.contract_differences_empty() {
        return Err(format!("length_contract contract differences: {:?}", rep.rounds));
    }
    let mut n = 0;
    for (name, sf) in common::all_fixtures() {
        if sf.task.contracts.is_empty() {
            continue;
        }
        let k = sf
            .expectations
            .iter()
            .find(|e| e.mode == "simulate")
            .and_then(|e| {
                e.args
                    .iter()
                    .position(|a| a == "--k")
                    .and_then(|i| e.args.get(i + 1)?.parse().ok())
            })
            .unwrap_or(3);
        let rep = simulation_check(&sf.task, k, ContractScope::Calls, &cfg).map_err(|e| format!("{name}: {e}"))?;
        if !rep.verdicts_agree {
            return Err(format!("{name}: direct {} vs reduced {}", rep.direct, rep.reduced));
        }
        n += 1;
    }
    Ok(format!(
        "length_contract k=3 contract instances agree; verdicts agree on {n} contracted fixtures"
    ))
}

fn engine_properties() -> Check {
    let mut fixtures = 0;
    for (name, sf) in common::all_fixtures() {
        let k = sf
            .expectations
            .iter()
            .find_map(|e| common::max_rounds(&e.args))
            .unwrap_or(4);
        let cfg = EngineConfig::with_rounds(k);
        let e = Engine::new(&sf.task, &cfg).map_err(|e| format!("{name}: {e}"))?;
        common::audit(&sf.task, e, k).map_err(|m| format!("{name}: {m}"))?;
        fixtures += 1;
    }
    let mut evaluated = 0;
    let mut valid = 0;
    for (name, sf) in common::true_goals() {
        let (ok, _) = common::soundness(&sf.task, 100, 0x5eed).map_err(|m| format!("{name}: {m}"))?;
        evaluated += ok;
        valid += 1;
    }
    Ok(format!(
        "monotone and thrifty on {fixtures} fixtures; {evaluated} true instances over {valid} valid fixtures, no counterexamples"
    ))
}

fn oracle() -> Check {
    let mut n = 0;
    for (name, sf, k) in common::plain_valid() {
        let engine = run_uqfr(&sf.task, &EngineConfig::with_rounds(k)).map_err(|e| e.to_string())?;
        if !engine.outcome.is_valid() {
            return Err(format!("{name}: engine {:?}", engine.outcome));
        }
        match full_instantiation(&sf.task, 6.min(k)) {
            OracleVerdict::Valid { .. } => n += 1,
            o => return Err(format!("{name}: oracle {o:?}")),
        }
    }
    Ok(format!("oracle and engine both valid on {n} fixtures"))
}

fn read_tree(dir: &Path) -> Tree {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let files: Vec<String> = common::corpus_files()
        .iter()
        .map(|p| format!("corpus/{}", p.file_name().unwrap().to_string_lossy()))
        .collect();
    let run = |mode: &str| -> Result<(Vec<u8>, Tree), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut args = vec![
            mode,
            "--json",
            "--max-rounds",
            "4",
            "--emit-smt",
            dir.path().to_str().unwrap(),
        ];
        args.extend(files.iter().map(String::as_str));
        let out = Command::new(env!("CARGO_BIN_EXE_fluid"))
            .current_dir(root())
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        Ok((out.stdout, read_tree(dir.path())))
    };
    let mut scripts = 0;
    for mode in ["prove", "prove-contracts"] {
        let (j1, t1) = run(mode)?;
        let (j2, t2) = run(mode)?;
        if j1 != j2 {
            return Err(format!("{mode}: JSON reports differ"));
        }
        if t1 != t2 {
            return Err(format!("{mode}: emitted scripts differ"));
        }
        scripts += t1.len();
    }
    Ok(format!(
        "{scripts} emitted scripts and both JSON reports identical across runs"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("insert into Nil", insert_into_nil),
        (
            "insert VC, strengthened form and contracts",
            insert_strengthened_and_contracts,
        ),
        ("negative insert and membership VCs", negatives),
        ("Peano suite", peano),
        ("map get/set law", map_law),
        ("acyclicity", acyclicity),
        ("contract reduction simulation", simulation),
        ("engine properties", engine_properties),
        ("oracle equivalence", oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let res = check();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {:>2} PASS {title} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {title} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
