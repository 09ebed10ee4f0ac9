//! Independent runs over a list of values for one config key.

use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;

use super::config::{ConfigError, SimConfig};
use super::metrics::{summary_row, RunMetrics, SUMMARY_COLUMNS};
use super::run::{run, RunOutput};

/// Environment variable that caps the sweep worker count.
pub const THREADS_ENV: &str = "ERGSIM_THREADS";

#[derive(Debug)]
pub struct SweepEntry {
    pub value: String,
    pub result: Result<RunOutput, ConfigError>,
}

#[derive(Debug, Default)]
pub struct SweepTable {
    pub param: String,
    pub entries: Vec<SweepEntry>,
}

impl SweepTable {
    pub fn metrics(&self) -> impl Iterator<Item = (&str, &RunMetrics)> {
        self.entries.iter().filter_map(|e| e.result.as_ref().ok().map(|o| (e.value.as_str(), &o.metrics)))
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &ConfigError)> {
        self.entries.iter().filter_map(|e| e.result.as_ref().err().map(|err| (e.value.as_str(), err)))
    }

    /// Summary CSV with one row per successful value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", SUMMARY_COLUMNS.join(","))?;
        for (value, m) in self.metrics() {
            let row = summary_row(value, m);
            let fields: Vec<String> = row
                .iter()
                .map(|f| if f.contains([',', '"']) { format!("\"{}\"", f.replace('"', "\"\"")) } else { f.clone() })
                .collect();
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut w = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

fn configure(base: &SimConfig, param: &str, value: &str) -> Result<SimConfig, ConfigError> {
    let mut cfg = base.clone();
    cfg.set(param, value)?;
    cfg.validate()?;
    Ok(cfg)
}

/// One run per value. Invalid values yield an error entry; the rest still run.
pub fn sweep(base: &SimConfig, param: &str, values: &[String]) -> Result<SweepTable, ConfigError> {
    if !SimConfig::keys().contains(&param) {
        return Err(ConfigError::UnknownKey(param.to_string()));
    }
    let job = || {
        values
            .par_iter()
            .map(|v| SweepEntry { value: v.clone(), result: configure(base, param, v).and_then(|c| run(&c)) })
            .collect::<Vec<_>>()
    };
    let entries = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?
            .install(job),
        None => job(),
    };
    Ok(SweepTable { param: param.to_string(), entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_values_give_empty_table() {
        let t = sweep(&SimConfig::default(), "ground.mu_s", &[]).unwrap();
        assert!(t.entries.is_empty());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(sweep(&SimConfig::default(), "ground.nope", &["1".into()]).is_err());
    }

    #[test]
    fn bad_value_does_not_stop_the_others() {
        let mut base = SimConfig::default();
        base.set("gait.n_steps", "1").unwrap();
        let t = sweep(&base, "ground.mu_s", &["abc".into(), "0.4".into()]).unwrap();
        assert_eq!(t.failures().count(), 1);
        assert_eq!(t.metrics().count(), 1);
    }
}
