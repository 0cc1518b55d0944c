//! Flat key/value run reports and CSV tables. Reports must come out
//! byte-identical for identical configs, so every line is pushed in a fixed
//! order and floats always print as {:.16e}. Wall time never enters a
//! report; main prints it to stderr.

use std::fmt::Display;

/// Scientific notation with 17 significant digits, the report and CSV
/// number format.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct RunReport {
    experiment: &'static str,
    lines: Vec<(String, String)>,
    checks_total: usize,
    checks_failed: usize,
    csv: Option<Csv>,
}

impl RunReport {
    pub fn new(experiment: &'static str, seed: Option<u64>) -> Self {
        let mut r = RunReport {
            experiment,
            lines: Vec::new(),
            checks_total: 0,
            checks_failed: 0,
            csv: None,
        };
        r.kv("experiment", experiment);
        r.kv("schema_version", 1);
        if let Some(s) = seed {
            // No command draws random numbers; the seed is echoed so a
            // future randomized suite keeps the interface.
            r.kv("seed", s);
        }
        r
    }

    pub fn experiment(&self) -> &'static str {
        self.experiment
    }

    pub fn kv(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn kv_f(&mut self, key: impl Into<String>, value: f64) {
        self.lines.push((key.into(), fmt_f(value)));
    }

    /// Pass/fail check of the form value <= tolerance; three lines per
    /// check, counted into the summary.
    pub fn check_le(&mut self, name: &str, value: f64, tol: f64) -> bool {
        self.kv_f(format!("check.{name}.value"), value);
        self.kv_f(format!("check.{name}.tolerance"), tol);
        let ok = value <= tol;
        self.record(name, ok);
        ok
    }

    /// Pass/fail check that a boolean landed where expected.
    pub fn check_is(&mut self, name: &str, actual: bool, expected: bool) -> bool {
        self.kv(format!("check.{name}.expected"), expected);
        self.kv(format!("check.{name}.actual"), actual);
        let ok = actual == expected;
        self.record(name, ok);
        ok
    }

    fn record(&mut self, name: &str, ok: bool) {
        self.kv(
            format!("check.{name}.status"),
            if ok { "pass" } else { "fail" },
        );
        self.checks_total += 1;
        if !ok {
            self.checks_failed += 1;
        }
    }

    pub fn set_csv(&mut self, csv: Csv) {
        self.csv = Some(csv);
    }

    pub fn csv(&self) -> Option<&Csv> {
        self.csv.as_ref()
    }

    pub fn failed(&self) -> bool {
        self.checks_failed > 0
    }

    /// Appends the summary block and renders the whole report.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out.push_str(&format!("summary.checks_total = {}\n", self.checks_total));
        out.push_str(&format!("summary.checks_failed = {}\n", self.checks_failed));
        out.push_str(&format!(
            "status = {}\n",
            if self.checks_failed == 0 {
                "pass"
            } else {
                "fail"
            }
        ));
        out
    }
}

/// Plot-ready table: comma separated, header row, '.' decimal separator,
/// every value in scientific notation.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: Vec<String>) -> Self {
        Csv {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.iter().map(|&v| fmt_f(v)).collect());
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_print_with_seventeen_significant_digits() {
        assert_eq!(fmt_f(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn report_tracks_checks_and_renders_deterministically() {
        let mut r = RunReport::new("demo", Some(7));
        r.kv_f("result.max", 0.25);
        assert!(r.check_le("small", 1e-9, 1e-6));
        assert!(!r.check_le("large", 2.0, 1e-6));
        let text = r.render();
        assert!(text.starts_with("experiment = demo\nschema_version = 1\nseed = 7\n"));
        assert!(text.contains("check.small.status = pass\n"));
        assert!(text.contains("check.large.status = fail\n"));
        assert!(text.ends_with("summary.checks_total = 2\nsummary.checks_failed = 1\nstatus = fail\n"));
        assert!(r.failed());
    }

    #[test]
    fn csv_renders_header_and_rows() {
        let mut c = Csv::new(vec!["s".into(), "y".into()]);
        c.push(&[1.0, 0.5]);
        let text = c.render();
        assert_eq!(
            text,
            "s,y\n1.0000000000000000e0,5.0000000000000000e-1\n"
        );
    }
}
