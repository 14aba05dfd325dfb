//! Bit-stable CSV formatting: `,` delimiter, `.` decimal point, 17
//! significant digits.

use std::fmt::Write;

pub fn num(x: f64) -> String {
    if x == 0.0 {
        // Normalise −0.
        "0.0000000000000000e0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Accumulates `#`-comment header lines, a column header and rows.
#[derive(Debug, Clone, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(comments: &[String], columns: &[String]) -> Self {
        let mut text = String::new();
        for c in comments {
            let _ = writeln!(text, "# {c}");
        }
        let _ = writeln!(text, "{}", columns.join(","));
        Table { text }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn finish(self) -> String {
        self.text
    }
}
