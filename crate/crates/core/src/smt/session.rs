//! A solver process driven over standard input and output.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Instant;

use super::encode::{self, EncodeError};
use super::{SolverConfig, SolverVerdict, Verdict};
use crate::expr::{Expr, Var};
use crate::sig::Signature;

struct Proc {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Proc {
    fn spawn(cfg: &SolverConfig) -> std::io::Result<Proc> {
        let mut child = Command::new(&cfg.executable)
            .args(cfg.effective_args())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Proc {
            child,
            stdin,
            lines: rx,
        })
    }

    fn send(&mut self, text: &str) -> std::io::Result<()> {
        self.stdin.write_all(text.as_bytes())?;
        self.stdin.flush()
    }

    /// Lines printed before `marker`, or `None` on timeout.
    fn read_until(&mut self, marker: &str, deadline: Instant) -> Result<Option<Vec<String>>, String> {
        let mut out = Vec::new();
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    if line.trim().trim_matches('"') == marker {
                        return Ok(Some(out));
                    }
                    out.push(line);
                }
                Err(RecvTimeoutError::Timeout) => return Ok(None),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(format!("solver exited unexpectedly; output: {}", out.join("\n")));
                }
            }
        }
    }
}

impl Drop for Proc {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Accumulates declarations and assertions for one task. Assertions are only
/// ever added, so an incremental session needs no push or pop: each check
/// sends what is new since the previous one. Non-incremental sessions start a
/// fresh process per check and send the whole script.
pub struct Session {
    cfg: SolverConfig,
    history: Vec<String>,
    sent: usize,
    declared: BTreeSet<Var>,
    proc: Option<Proc>,
    checks: usize,
    last: Option<Verdict>,
}

impl Session {
    pub fn new(cfg: SolverConfig, sig: &Signature) -> Session {
        let history = encode::preamble(sig, &cfg.logic).lines().map(str::to_string).collect();
        Session {
            cfg,
            history,
            sent: 0,
            declared: BTreeSet::new(),
            proc: None,
            checks: 0,
            last: None,
        }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn assert(&mut self, e: &Expr) -> Result<(), EncodeError> {
        let line = encode::assertion(e, self.cfg.tester)?;
        for c in encode::constants([e]) {
            if self.declared.insert(c.clone()) {
                self.history.push(encode::declare_const(&c));
            }
        }
        self.history.push(line);
        Ok(())
    }

    /// The full script so far, ending in `(check-sat)`.
    pub fn script(&self) -> String {
        let mut s = self.history.join("\n");
        s.push_str("\n(check-sat)\n");
        s
    }

    pub fn check(&mut self) -> SolverVerdict {
        let start = Instant::now();
        let (verdict, transcript) = match self.run_check() {
            Ok(r) => r,
            Err(detail) => {
                self.proc = None;
                (Verdict::ProcessError(detail), String::new())
            }
        };
        self.last = Some(verdict.clone());
        SolverVerdict {
            verdict,
            transcript,
            elapsed: start.elapsed(),
        }
    }

    fn run_check(&mut self) -> Result<(Verdict, String), String> {
        if !self.cfg.incremental {
            self.proc = None;
        }
        if self.proc.is_none() {
            let p = Proc::spawn(&self.cfg).map_err(|e| format!("cannot start {}: {e}", self.cfg.executable))?;
            self.proc = Some(p);
            self.sent = 0;
        }
        self.checks += 1;
        let marker = format!("fluid-sync-{}", self.checks);
        let mut text = String::new();
        for l in &self.history[self.sent..] {
            text.push_str(l);
            text.push('\n');
        }
        text.push_str(&format!("(check-sat)\n(echo \"{marker}\")\n"));
        let deadline = Instant::now() + self.cfg.timeout();
        let proc = self.proc.as_mut().unwrap();
        proc.send(&text).map_err(|e| format!("write to solver failed: {e}"))?;
        self.sent = self.history.len();
        match proc.read_until(&marker, deadline)? {
            None => {
                self.proc = None;
                Ok((Verdict::Timeout, String::new()))
            }
            Some(lines) => {
                let transcript = lines.join("\n");
                Ok((parse_verdict(&lines), transcript))
            }
        }
    }

    /// The solver's model after a `sat` verdict, verbatim.
    pub fn model_hint(&mut self) -> Option<String> {
        if self.last != Some(Verdict::Sat) {
            return None;
        }
        let marker = format!("fluid-model-{}", self.checks);
        let proc = self.proc.as_mut()?;
        proc.send(&format!("(get-model)\n(echo \"{marker}\")\n")).ok()?;
        let lines = proc
            .read_until(&marker, Instant::now() + self.cfg.timeout())
            .ok()
            .flatten()?;
        if lines.iter().any(|l| is_error_line(l)) {
            return None;
        }
        Some(lines.join("\n"))
    }
}

fn is_error_line(l: &str) -> bool {
    let t = l.trim();
    t.starts_with("(error") || t == "unsupported"
}

/// The verdict is the last output line, which must read exactly `sat`,
/// `unsat` or `unknown`. Any error line makes the check a process error.
fn parse_verdict(lines: &[String]) -> Verdict {
    if let Some(e) = lines.iter().find(|l| is_error_line(l)) {
        return Verdict::ProcessError(e.trim().to_string());
    }
    match lines.iter().rev().map(|l| l.trim()).find(|l| !l.is_empty()) {
        Some("sat") => Verdict::Sat,
        Some("unsat") => Verdict::Unsat,
        Some("unknown") => Verdict::Unknown,
        Some(other) => Verdict::ProcessError(format!("unexpected solver output: {other}")),
        None => Verdict::ProcessError("no solver output".to_string()),
    }
}

/// Runs one complete script in a fresh process.
pub fn check_script(cfg: &SolverConfig, script: &str) -> Verdict {
    let run = || -> Result<Verdict, String> {
        let mut p = Proc::spawn(cfg).map_err(|e| format!("cannot start {}: {e}", cfg.executable))?;
        p.send(script).map_err(|e| e.to_string())?;
        p.send("(echo \"fluid-sync-0\")\n").map_err(|e| e.to_string())?;
        Ok(match p.read_until("fluid-sync-0", Instant::now() + cfg.timeout())? {
            None => Verdict::Timeout,
            Some(lines) => parse_verdict(&lines),
        })
    };
    run().unwrap_or_else(Verdict::ProcessError)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_requires_exact_reply() {
        let l = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(parse_verdict(&l(&["unsat"])), Verdict::Unsat);
        assert_eq!(parse_verdict(&l(&["sat"])), Verdict::Sat);
        assert!(parse_verdict(&l(&["unsat!"])).is_failure());
        assert!(parse_verdict(&l(&["(error \"x\")", "unsat"])).is_failure());
        assert!(parse_verdict(&l(&[])).is_failure());
    }

    #[test]
    fn missing_executable_is_a_process_error() {
        let cfg = SolverConfig {
            executable: "/nonexistent/solver".into(),
            ..SolverConfig::default()
        };
        let mut s = Session::new(cfg, &Signature::new());
        assert!(s.check().verdict.is_failure());
    }
}
