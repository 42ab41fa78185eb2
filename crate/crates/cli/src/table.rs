//! Plain-text tables: `#`-prefixed metadata lines, a `# columns:` line and
//! tab-separated rows. Floats are written with 17 significant digits so a
//! re-read reproduces every `f64` bit for bit.

use std::fs;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub kind: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Lossless text form of an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            kind: kind.to_string(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column_str(&self, name: &str) -> Result<Vec<&str>, CliError> {
        let i = self
            .column_index(name)
            .ok_or_else(|| CliError::Table(format!("{} table has no column `{name}`", self.kind)))?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>, CliError> {
        self.column_str(name)?
            .into_iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::Table(format!("column `{name}`: `{v}` is not a number")))
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("# ris-dfrc table: {}\n", self.kind);
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!("# columns: {}\n", self.columns.join("\t")));
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut table = Table::default();
        let mut saw_columns = false;
        for (n, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("# ") {
                if saw_columns {
                    return Err(CliError::Table(format!("line {}: metadata after the columns line", n + 1)));
                }
                if let Some(kind) = rest.strip_prefix("ris-dfrc table: ") {
                    table.kind = kind.to_string();
                } else if let Some(cols) = rest.strip_prefix("columns: ") {
                    table.columns = cols.split('\t').map(str::to_string).collect();
                    saw_columns = true;
                } else if let Some((k, v)) = rest.split_once(": ") {
                    table.meta.push((k.to_string(), v.to_string()));
                } else {
                    return Err(CliError::Table(format!("line {}: malformed metadata `{line}`", n + 1)));
                }
            } else if line.is_empty() {
                continue;
            } else {
                if !saw_columns {
                    return Err(CliError::Table(format!("line {}: data before the columns line", n + 1)));
                }
                let row: Vec<String> = line.split('\t').map(str::to_string).collect();
                if row.len() != table.columns.len() {
                    return Err(CliError::Table(format!(
                        "line {}: expected {} fields, got {}",
                        n + 1,
                        table.columns.len(),
                        row.len()
                    )));
                }
                table.rows.push(row);
            }
        }
        if !saw_columns {
            return Err(CliError::Table("missing `# columns:` line".into()));
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Table(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn render_and_parse() {
        let mut t = Table::new("demo", &["a", "b"]).with_meta("seed", 3);
        t.push(vec!["1".into(), fmt_f64(0.1)]);
        let back = Table::parse(&t.render()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.meta_value("seed"), Some("3"));
        assert_eq!(back.column_f64("b").unwrap(), vec![0.1]);
        assert!(back.column_f64("c").is_err());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Table::parse("1\t2\n").is_err());
        assert!(Table::parse("# columns: a\tb\n1\n").is_err());
        assert!(Table::parse("# columns: a\n1\n# late: x\n").is_err());
    }

    #[test]
    fn special_values_round_trip() {
        for x in [0.0, -0.0, f64::INFINITY, f64::NEG_INFINITY, f64::MIN_POSITIVE, 5e-324, f64::MAX] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }

    proptest! {
        #[test]
        fn floats_round_trip_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(!x.is_nan());
            let back: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
