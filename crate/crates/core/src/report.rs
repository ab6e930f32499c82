//! Diagnostics reports: one row per check per sample time.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One measured quantity against its bound. A positive margin always
/// means slack: `bound - measured` for upper bounds, `measured - bound`
/// for lower bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub check: String,
    pub t: f64,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub verdict: Verdict,
    /// Soft checks are reported but never fail a run.
    pub hard: bool,
}

impl ReportEntry {
    /// Upper-bound check `measured ≤ bound`.
    pub fn upper(check: &str, t: f64, measured: f64, bound: f64) -> Self {
        let ok = measured.is_finite() && measured <= bound;
        ReportEntry {
            check: check.to_string(),
            t,
            measured,
            bound,
            margin: bound - measured,
            verdict: Verdict::from_bool(ok),
            hard: true,
        }
    }

    /// Lower-bound check `measured ≥ bound`.
    pub fn lower(check: &str, t: f64, measured: f64, bound: f64) -> Self {
        let ok = measured.is_finite() && measured >= bound;
        ReportEntry {
            check: check.to_string(),
            t,
            measured,
            bound,
            margin: measured - bound,
            verdict: Verdict::from_bool(ok),
            hard: true,
        }
    }

    pub fn inconclusive(check: &str, t: f64) -> Self {
        ReportEntry {
            check: check.to_string(),
            t,
            measured: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            verdict: Verdict::Inconclusive,
            hard: true,
        }
    }

    pub fn soft(mut self) -> Self {
        self.hard = false;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Free-form `key = value` lines echoing the configuration.
    pub echo: Vec<(String, String)>,
    pub entries: Vec<ReportEntry>,
}

/// Fixed-format float: 9 significant digits in scientific notation, or a
/// literal for non-finite values. Identical inputs always print identically.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

impl DiagnosticsReport {
    pub fn push(&mut self, e: ReportEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, es: impl IntoIterator<Item = ReportEntry>) {
        self.entries.extend(es);
    }

    /// Entries whose failure decides the run.
    pub fn hard_failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| e.hard && e.verdict == Verdict::Fail)
    }

    pub fn all_hard_pass(&self) -> bool {
        self.hard_failures().next().is_none()
    }

    pub fn entries_for<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a ReportEntry> + 'a {
        self.entries.iter().filter(move |e| e.check == check)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("check,t,measured,bound,margin,pass\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                e.check,
                fmt_float(e.t),
                fmt_float(e.measured),
                fmt_float(e.bound),
                fmt_float(e.margin),
                e.verdict.as_str()
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Human-readable summary: configuration echo, per-check worst margin,
    /// and the overall verdict.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.echo {
            let _ = writeln!(s, "{k} = {v}");
        }
        if !self.echo.is_empty() {
            s.push('\n');
        }
        let mut names: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !names.contains(&e.check.as_str()) {
                names.push(&e.check);
            }
        }
        for name in names {
            let rows: Vec<&ReportEntry> = self.entries_for(name).collect();
            let fails = rows.iter().filter(|e| e.verdict == Verdict::Fail).count();
            let inconc = rows.iter().filter(|e| e.verdict == Verdict::Inconclusive).count();
            let worst = rows
                .iter()
                .filter(|e| e.margin.is_finite())
                .map(|e| e.margin)
                .fold(f64::INFINITY, f64::min);
            let kind = if rows.iter().any(|e| e.hard) { "hard" } else { "soft" };
            let _ = writeln!(
                s,
                "{name:<28} {kind} rows={} fail={fails} inconclusive={inconc} worst_margin={}",
                rows.len(),
                if worst.is_finite() { fmt_float(worst) } else { "n/a".into() }
            );
        }
        let _ = writeln!(s, "\nverdict: {}", if self.all_hard_pass() { "PASS" } else { "FAIL" });
        s
    }
}
