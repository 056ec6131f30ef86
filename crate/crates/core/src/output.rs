//! Output formatting shared by the pipelines and the CLI: RFC-4180 CSV with
//! '.' decimal separator and 12 significant digits, plus JSON manifests.

use std::fs;
use std::io;
use std::path::Path;

/// Format a float with 12 significant digits (scientific notation).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        // normalize -0.0 so identical configurations give identical bytes
        return "0.00000000000e0".to_string();
    }
    format!("{:.11e}", x)
}

/// One CSV file: header plus rows, CRLF line endings.
pub fn csv_table(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push_str("\r\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_sig(*v)).collect();
        out.push_str(&cells.join(","));
        out.push_str("\r\n");
    }
    out
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)
}

pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig(-0.0), "0.00000000000e0");
        assert_eq!(fmt_sig(0.0001234567890123), "1.23456789012e-4");
    }

    #[test]
    fn csv_uses_crlf() {
        let table = csv_table(&["a", "b"], vec![vec![1.0, 2.0]].into_iter());
        assert!(table.starts_with("a,b\r\n"));
        assert!(table.ends_with("\r\n"));
    }
}
