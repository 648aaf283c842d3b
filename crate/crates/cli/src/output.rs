//! CSV tables with shortest round-trip numbers.

use std::path::{Path, PathBuf};

use bosefield::Mode;

use crate::CliError;

/// Shortest decimal that parses back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn mode(m: Mode) -> String {
    format!("{} {}", m.0, m.1)
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        let io = |e: csv::Error| CliError::Io { path: path.clone(), message: e.to_string() };
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 2.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn table_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.5), mode(Mode(-1, 2))]);
        let p = t.write(dir.path(), "t.csv").unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "a,b\n1.5,-1 2\n");
    }
}
