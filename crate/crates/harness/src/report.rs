//! Comparison reports: one row per checked statistic, each with an explicit
//! tolerance and the invariant it guards.

use std::fmt;

/// How a measured value is compared with its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// `|measured - expected| <= tol`.
    Absolute(f64),
    /// `|measured - expected| <= tol * |expected|`.
    Relative(f64),
    /// `measured >= bound`.
    AtLeast(f64),
    /// `measured <= bound`.
    AtMost(f64),
    /// `lo < measured < hi`.
    Open { lo: f64, hi: f64 },
    /// `|measured - expected| <= k * sigma`.
    Sigma { k: f64, sigma: f64 },
}

impl Tolerance {
    pub fn accepts(&self, expected: f64, measured: f64) -> bool {
        if !measured.is_finite() {
            return false;
        }
        match *self {
            Self::Absolute(t) => (measured - expected).abs() <= t,
            Self::Relative(t) => (measured - expected).abs() <= t * expected.abs(),
            Self::AtLeast(b) => measured >= b,
            Self::AtMost(b) => measured <= b,
            Self::Open { lo, hi } => lo < measured && measured < hi,
            Self::Sigma { k, sigma } => (measured - expected).abs() <= k * sigma,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Absolute(_) => "abs",
            Self::Relative(_) => "rel",
            Self::AtLeast(_) => "min",
            Self::AtMost(_) => "max",
            Self::Open { .. } => "open",
            Self::Sigma { .. } => "sigma",
        }
    }

    fn value(&self) -> String {
        match *self {
            Self::Absolute(t) | Self::Relative(t) | Self::AtLeast(t) | Self::AtMost(t) => fmt_num(t),
            Self::Open { lo, hi } => format!("({} {})", fmt_num(lo), fmt_num(hi)),
            Self::Sigma { k, sigma } => format!("{k}x{}", fmt_num(sigma)),
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Absolute(t) => write!(f, "|diff| <= {t:e}"),
            Self::Relative(t) => write!(f, "|diff| <= {t:e} * |expected|"),
            Self::AtLeast(b) => write!(f, ">= {b:e}"),
            Self::AtMost(b) => write!(f, "<= {b:e}"),
            Self::Open { lo, hi } => write!(f, "in ({lo:e}, {hi:e})"),
            Self::Sigma { k, sigma } => write!(f, "|diff| <= {k} sigma (sigma = {sigma:e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub statistic: String,
    pub expected: f64,
    pub measured: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
    /// Invariant or property this row guards, e.g. `particles: GVM equilibrium`.
    pub invariant: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    /// Set when the run could not establish its own preconditions, such as
    /// statistical stationarity.
    pub inconclusive: Option<String>,
}

/// 17 significant digits, round-trips every `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

impl ComparisonReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            ..Self::default()
        }
    }

    pub fn check(&mut self, statistic: &str, expected: f64, measured: f64, tolerance: Tolerance, invariant: &str) -> bool {
        let pass = tolerance.accepts(expected, measured);
        self.rows.push(ReportRow {
            statistic: statistic.to_string(),
            expected,
            measured,
            tolerance,
            pass,
            invariant: invariant.to_string(),
        });
        pass
    }

    pub fn mark_inconclusive(&mut self, reason: impl Into<String>) {
        self.inconclusive = Some(reason.into());
    }

    pub fn all_pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass) && self.inconclusive.is_none()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn row(&self, statistic: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.statistic == statistic)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("experiment,statistic,expected,measured,tolerance_kind,tolerance,pass,invariant\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.experiment,
                r.statistic,
                fmt_num(r.expected),
                fmt_num(r.measured),
                r.tolerance.kind(),
                r.tolerance.value(),
                r.pass,
                r.invariant.replace(',', ";")
            ));
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("experiment {}\n", self.experiment);
        for r in &self.rows {
            s.push_str(&format!(
                "  [{}] {}: expected {:.6e}, measured {:.6e}, tolerance {}\n",
                if r.pass { "PASS" } else { "FAIL" },
                r.statistic,
                r.expected,
                r.measured,
                r.tolerance
            ));
            if !r.pass {
                s.push_str(&format!("         violates: {}\n", r.invariant));
            }
        }
        if let Some(why) = &self.inconclusive {
            s.push_str(&format!("  INCONCLUSIVE: {why}\n"));
        }
        let failed = self.failures().count();
        s.push_str(&format!(
            "  {} rows, {} failed => {}\n",
            self.rows.len(),
            failed,
            if self.all_pass() { "PASS" } else { "FAIL" }
        ));
        s
    }
}
