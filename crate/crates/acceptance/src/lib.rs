//! Runner for acceptance criteria: each check prints one line,
//! `PASS <n> <name>: <detail>` or `FAIL <n> <name>: <reason>`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

/// What a check reports on success or failure.
pub type Verdict = Result<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub number: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {}: {} [{:.1} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.number,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Runs one check, turning panics into failures, and prints its line.
pub fn run(number: u32, name: &'static str, check: impl FnOnce() -> Verdict) -> Outcome {
    let start = Instant::now();
    let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
        let message = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into());
        Err(format!("panic: {message}"))
    });
    let (passed, detail) = match verdict {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    let outcome = Outcome {
        number,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    };
    println!("{}", outcome.line());
    outcome
}

/// `Ok(detail)` when `ok`, otherwise `Err(detail)`.
pub fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}
