use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// How `observed` is compared with `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// |observed - target| <= tolerance
    Within,
    /// observed - target <= tolerance
    AtMost,
    /// target - observed <= tolerance
    AtLeast,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Within => "within",
            Criterion::AtMost => "at_most",
            Criterion::AtLeast => "at_least",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: String,
    pub observed: f64,
    pub target: f64,
    pub criterion: Criterion,
    pub tolerance: f64,
    pub se: Option<f64>,
    pub verdict: Verdict,
    pub seed: u64,
    /// Wall-clock seconds; kept out of serialized reports so they stay
    /// reproducible.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl TestReport {
    /// Builds a report and its verdict. A report whose Monte Carlo SE
    /// exceeds half the tolerance is inconclusive.
    pub fn new(
        statistic: impl Into<String>,
        observed: f64,
        target: f64,
        criterion: Criterion,
        tolerance: f64,
        se: Option<f64>,
        seed: u64,
    ) -> Self {
        let gap = match criterion {
            Criterion::Within => (observed - target).abs(),
            Criterion::AtMost => observed - target,
            Criterion::AtLeast => target - observed,
        };
        let verdict = if se.is_some_and(|s| s > tolerance / 2.0) {
            Verdict::Inconclusive
        } else if gap <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            statistic: statistic.into(),
            observed,
            target,
            criterion,
            tolerance,
            se,
            verdict,
            seed,
            runtime_secs: 0.0,
        }
    }

    pub fn named(mut self, statistic: impl Into<String>) -> Self {
        self.statistic = statistic.into();
        self
    }

    pub fn with_runtime(mut self, secs: f64) -> Self {
        self.runtime_secs = secs;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Fail dominates inconclusive, which dominates pass.
pub fn overall_verdict<'a>(reports: impl IntoIterator<Item = &'a TestReport>) -> Verdict {
    let mut out = Verdict::Pass;
    for r in reports {
        match r.verdict {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Inconclusive => out = Verdict::Inconclusive,
            Verdict::Pass => {}
        }
    }
    out
}
