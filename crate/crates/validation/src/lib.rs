//! Sequential runner for numbered acceptance criteria.

use std::time::{Duration, Instant};

/// Result of one criterion: pass flag and a one-line description of the numbers.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }

    /// Passes only if every part passes; details are joined with `; `.
    pub fn all(parts: Vec<Outcome>) -> Self {
        Outcome {
            pass: parts.iter().all(|p| p.pass),
            detail: parts
                .iter()
                .map(|p| format!("{} [{}]", p.detail, if p.pass { "ok" } else { "fail" }))
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    /// Stated runtime limit; `None` when the criterion states none.
    pub limit: Option<Duration>,
    pub run: fn() -> Outcome,
}

/// Verdict and printed line for a finished criterion; running over the
/// stated limit fails it.
pub fn verdict(c: &Criterion, outcome: &Outcome, elapsed: Duration) -> (bool, String) {
    let in_time = c.limit.map_or(true, |l| elapsed <= l);
    let pass = outcome.pass && in_time;
    let limit = c.limit.map_or(String::new(), |l| format!(", limit {:.0} s", l.as_secs_f64()));
    let text = format!(
        "criterion {:>2} {:<34} {}  ({:.1} s{limit}{}) {}",
        c.id,
        c.name,
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        if in_time { "" } else { ", over time" },
        outcome.detail
    );
    (pass, text)
}

/// Runs the criteria whose ids are in `only` (all if empty), prints one
/// line each and returns the number of failures.
pub fn run_all(criteria: &[Criterion], only: &[u32]) -> usize {
    let mut failures = 0;
    for c in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, text) = verdict(c, &outcome, elapsed);
        if !pass {
            failures += 1;
        }
        println!("{text}");
    }
    failures
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok() -> Outcome {
        Outcome::new(true, "fine")
    }

    #[test]
    fn over_time_fails() {
        let c = Criterion {
            id: 1,
            name: "x",
            limit: Some(Duration::from_secs(1)),
            run: ok,
        };
        assert!(verdict(&c, &ok(), Duration::from_millis(10)).0);
        let (pass, text) = verdict(&c, &ok(), Duration::from_secs(2));
        assert!(!pass);
        assert!(text.contains("over time"));
    }

    #[test]
    fn all_needs_every_part() {
        let o = Outcome::all(vec![ok(), Outcome::new(false, "bad")]);
        assert!(!o.pass);
        assert_eq!(o.detail, "fine [ok]; bad [fail]");
    }
}
