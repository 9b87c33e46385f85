use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::config::ExperimentConfig;

/// `# key: value` header lines shared by every artifact.
#[derive(Debug, Clone, Default)]
pub struct Header {
    lines: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let mut h = Self::default();
        h.push("weaktime", command);
        h.push("experiment", &cfg.name);
        h.push("config_sha256", cfg.hash());
        h.push("config", cfg.to_json());
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        // Newlines would break the one-line-per-key layout.
        let value = value.to_string().replace('\n', " ");
        self.lines.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn render(&self, out: &mut String) {
        for (k, v) in &self.lines {
            let _ = writeln!(out, "# {k}: {v}");
        }
    }
}

/// Renders a CSV document: header block, column names, rows.
pub fn render_csv(header: &Header, columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    header.render(&mut out);
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_file(dir: &Path, file_name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(file_name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Header lines and numeric rows of a CSV produced by [`render_csv`].
#[derive(Debug, Clone)]
pub struct ParsedCsv {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ParsedCsv {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Config embedded in the header.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let text = self.header_value("config").ok_or_else(|| {
            crate::Error::InvalidConfig(vec!["artifact header carries no config".into()])
        })?;
        ExperimentConfig::from_json(text)
    }
}

pub fn parse_csv(text: &str) -> Result<ParsedCsv> {
    let mut header = Vec::new();
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once(": ") {
                header.push((k.to_string(), v.to_string()));
            }
        } else if columns.is_empty() {
            columns = line.split(',').map(str::to_string).collect();
        } else if !line.is_empty() {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            rows.push(row);
        }
    }
    Ok(ParsedCsv { header, columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_values_and_config() {
        let cfg = ExperimentConfig::reference();
        let mut h = Header::new("fig1", &cfg);
        h.push("t_max", 1294.5);
        let rows = vec![vec![0.0, 1.5e-300, f64::NAN], vec![0.1, 0.25, -3.0]];
        let text = render_csv(&h, &["t", "a", "b"], &rows);
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.columns, ["t", "a", "b"]);
        assert_eq!(parsed.rows[1], rows[1]);
        assert_eq!(parsed.rows[0][1], 1.5e-300);
        assert!(parsed.rows[0][2].is_nan());
        assert_eq!(parsed.config().unwrap(), cfg);
        assert_eq!(parsed.header_value("t_max"), Some("1294.5"));
    }
}
