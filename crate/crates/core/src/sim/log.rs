use std::io::{self, Write};
use std::path::Path;

use crate::dynamics::Leg;

/// Column-major record of one run; every simulation step appends a row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    columns: Vec<String>,
    data: Vec<f64>,
}

fn xyz(prefix: &str, unit: &str) -> [String; 3] {
    ["x", "y", "z"].map(|a| format!("{prefix}_{a}[{unit}]"))
}

fn six(prefix: &str) -> [String; 6] {
    ["px", "py", "pz", "vx", "vy", "vz"].map(|a| {
        let unit = if a.starts_with('p') { "m" } else { "m/s" };
        format!("{prefix}_{a}[{unit}]")
    })
}

/// Header of the standard run log, in row order.
pub fn standard_columns() -> Vec<String> {
    let mut c = vec!["t[s]".to_string()];
    c.extend(xyz("p", "m"));
    for i in 0..3 {
        for j in 0..3 {
            c.push(format!("R_{i}{j}[-]"));
        }
    }
    c.extend(xyz("v", "m/s"));
    c.extend(xyz("w", "rad/s"));
    for leg in Leg::ALL {
        let l = leg.label();
        c.extend([format!("phi_{l}[rad]"), format!("gamma_{l}[rad]"), format!("r_{l}[m]")]);
    }
    for leg in Leg::ALL {
        let l = leg.label();
        c.extend([format!("dphi_{l}[rad/s]"), format!("dgamma_{l}[rad/s]"), format!("dr_{l}[m/s]")]);
    }
    for leg in Leg::ALL {
        c.extend(xyz(&format!("grf_{}", leg.label()), "N"));
    }
    for leg in Leg::ALL {
        c.push(format!("stance_{}[-]", leg.label()));
    }
    c.extend(xyz("tip_f1", "N"));
    c.extend(xyz("tip_f2", "N"));
    c.extend((0..6).map(|k| format!("h_r_{k}[N]")));
    c.extend((0..6).map(|k| format!("h_w_{k}[N]")));
    c.extend(six("x_r"));
    c.extend(six("x_w"));
    c.extend(["branch[-]", "V[-]", "governed[-]"].map(String::from));
    c
}

impl TrajectoryLog {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, data: Vec::new() }
    }

    pub fn standard() -> Self {
        Self::new(standard_columns())
    }

    pub fn with_capacity(columns: Vec<String>, rows: usize) -> Self {
        let n = columns.len();
        Self { columns, data: Vec::with_capacity(rows * n) }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.columns.len().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "log row width");
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.columns.len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.columns.len().max(1))
    }

    /// Index of the column whose name, with or without its unit suffix, is `name`.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name || c.split('[').next() == Some(name))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = self.columns.iter().map(|c| csv_field(c)).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for row in self.rows() {
            line.clear();
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                // Shortest round-trip representation: deterministic and lossless.
                line.push_str(&x.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()
    }

    /// Reads a CSV written by [`TrajectoryLog::write_csv`] (or any numeric CSV
    /// with a header row).
    pub fn read_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        let columns: Vec<String> = split_csv_line(header);
        let mut log = Self::new(columns);
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = split_csv_line(line).iter().map(|f| f.parse::<f64>()).collect();
            let row = row.map_err(|e| format!("row {}: {e}", i + 2))?;
            if row.len() != log.columns.len() {
                return Err(format!("row {}: expected {} fields, got {}", i + 2, log.columns.len(), row.len()));
            }
            log.push_row(&row);
        }
        Ok(log)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(ch) = chars.next() {
        match (ch, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    out.push(cur);
    out
}
