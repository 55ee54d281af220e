//! CSV emission with a byte-stable contract: every file this module writes
//! can be parsed back and re-emitted identically.

use std::fmt;

/// Shortest round-trip representation of an f64 (Rust's `Display` contract);
/// NaN and infinities serialize as `NaN` / `inf` / `-inf`, which `parse`
/// accepts back.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// One CSV document: a header row plus data rows. Fields are plain (no
/// quoting); writers must not put commas inside fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        assert!(
            row.iter().all(|f| !f.contains(',') && !f.contains('\n')),
            "CSV fields must not contain separators"
        );
        self.rows.push(row);
    }

    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Csv, String> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| "empty CSV document".to_string())?
            .split(',')
            .map(|s| s.to_string())
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
            if row.len() != header.len() {
                return Err(format!("row {} has {} fields, expected {}", i + 2, row.len(), header.len()));
            }
            rows.push(row);
        }
        Ok(Csv { header, rows })
    }
}

impl fmt::Display for Csv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}
