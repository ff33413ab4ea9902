//! CSV report rows.

use fjopt_core::Scalar;
use serde::Serialize;

use crate::number::decimal;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub digest: String,
    pub quantity: String,
    pub value_decimal: String,
    /// Lossless "p/q" for exact values, empty otherwise.
    pub value_rational: String,
    pub bound: String,
    pub pass: bool,
}

impl ReportRow {
    pub fn new<S: Scalar>(
        experiment: &str,
        digest: &str,
        quantity: impl Into<String>,
        value: &S,
        bound: impl Into<String>,
        pass: bool,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            digest: digest.to_string(),
            quantity: quantity.into(),
            value_decimal: decimal(value.to_f64()),
            value_rational: value.to_rational_string().unwrap_or_default(),
            bound: bound.into(),
            pass,
        }
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    /// A row carrying a count or label rather than a measured number.
    pub fn note(experiment: &str, digest: &str, quantity: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            experiment: experiment.to_string(),
            digest: digest.to_string(),
            quantity: quantity.into(),
            value_decimal: String::new(),
            value_rational: text.into(),
            bound: String::new(),
            pass: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(|a, b| {
            (&a.experiment, &a.digest, &a.quantity).cmp(&(&b.experiment, &b.digest, &b.quantity))
        });
        Self { rows }
    }

    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    pub fn failed(&self) -> usize {
        self.rows.len() - self.passed()
    }

    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["experiment", "digest", "quantity", "value_decimal", "value_rational", "bound", "pass"])
                .expect("in-memory write");
        }
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fjopt_core::Rational;

    #[test]
    fn sorted_csv_with_header() {
        let a = ReportRow::new("b", "d", "q", &Rational::from_ratio(4, 3), "= 4/3", true);
        let b = ReportRow::new("a", "d", "q", &0.5f64, "<= 1", false);
        let rep = Report::new(vec![a, b]);
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "experiment,digest,quantity,value_decimal,value_rational,bound,pass");
        assert_eq!(lines[1], "a,d,q,5.0000000000000000e-1,,<= 1,false");
        assert_eq!(lines[2], "b,d,q,1.3333333333333333e0,4/3,= 4/3,true");
        assert_eq!((rep.passed(), rep.failed()), (1, 1));
        assert_eq!(Report::default().to_csv().lines().count(), 1);
    }
}
