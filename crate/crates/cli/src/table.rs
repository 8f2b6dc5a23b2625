use std::fs;
use std::io;
use std::path::Path;

/// Column data plus a metadata block, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    /// Short table kind, used in the file name (`spectrum`, `sweep`, ...).
    pub kind: String,
    pub columns: Vec<String>,
    /// Row-major; `None` marks a value that could not be computed.
    pub rows: Vec<Vec<Option<f64>>>,
    /// Comment lines, without the leading `# `.
    pub metadata: Vec<String>,
}

impl OutputTable {
    pub fn new(kind: &str, columns: Vec<String>) -> Self {
        Self {
            kind: kind.to_string(),
            columns,
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row arity must match the header"
        );
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Twelve significant digits in `d.ddddddddddde±XX` form. Non-finite input
/// yields an empty field.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn render_csv(table: &OutputTable) -> String {
    let mut out = String::new();
    for line in &table.metadata {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let fields: Vec<String> = row
            .iter()
            .map(|v| v.map(format_number).unwrap_or_default())
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(table: &OutputTable, path: &Path) -> io::Result<()> {
    fs::write(path, render_csv(table))
}
