use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// 17 significant digits, enough to read back the same `f64`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

/// CSV text with `\n` line endings.
pub fn csv_text(header: &[String], rows: &[Vec<f64>], leading: Option<&[String]>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for (i, row) in rows.iter().enumerate() {
        let mut record: Vec<String> = leading.map(|l| vec![l[i].clone()]).unwrap_or_default();
        record.extend(row.iter().map(|&x| fmt_float(x)));
        w.write_record(&record)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Where artifacts go: a directory, or standard output and standard error.
pub enum Sink {
    Dir(PathBuf),
    Console,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        match dir {
            Some(d) => {
                fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
                Ok(Sink::Dir(d))
            }
            None => Ok(Sink::Console),
        }
    }

    /// The main artifact: a file in the directory, or standard output.
    pub fn primary(&self, name: &str, text: &str) -> Result<()> {
        match self {
            Sink::Dir(d) => write_file(&d.join(name), text),
            Sink::Console => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    /// A side report: a file in the directory, or standard error.
    pub fn report(&self, name: &str, text: &str) -> Result<()> {
        match self {
            Sink::Dir(d) => write_file(&d.join(name), text),
            Sink::Console => {
                std::io::stderr().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    log::info!("writing {}", path.display());
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
