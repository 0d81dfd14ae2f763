//! CSV emission. Every file starts with a `#` line that reproduces the run,
//! then a header row. Floats use Rust's shortest round-trip formatting, so
//! identical inputs give identical bytes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::{ArgMatches, Command};

/// Flags that do not influence results and are left out of the
/// reproduction line.
const NON_RESULT_FLAGS: [&str; 2] = ["threads", "out"];

/// `scatterkit <sub> --flag value ...` with every flag of `cmd` (defaults
/// included) in sorted order.
pub fn reproduction_line(cmd: &Command, m: &ArgMatches) -> String {
    let mut ids: Vec<&str> = cmd.get_arguments().map(|a| a.get_id().as_str()).collect();
    ids.sort_unstable();
    let mut line = format!("scatterkit {}", cmd.get_name());
    for id in ids {
        if NON_RESULT_FLAGS.contains(&id) || !m.ids().any(|i| i.as_str() == id) {
            continue;
        }
        let Some(raw) = m.get_raw(id) else { continue };
        let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        if vals.is_empty() {
            continue;
        }
        line.push_str(&format!(" --{} {}", id.replace('_', "-"), vals.join(",")));
    }
    line
}

pub struct Csv {
    out: Box<dyn Write>,
}

impl Csv {
    /// Writes the comment and header lines to `path`, or stdout when `None`.
    pub fn create(path: Option<&Path>, comment: &str, header: &[&str]) -> io::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        let mut csv = Self { out };
        writeln!(csv.out, "# {comment}")?;
        writeln!(csv.out, "{}", header.join(","))?;
        Ok(csv)
    }

    pub fn row<I, T>(&mut self, fields: I) -> io::Result<()>
    where
        I: IntoIterator<Item = T>,
        T: Into<Field>,
    {
        let cells: Vec<String> = fields.into_iter().map(|f| f.into().0).collect();
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn comment(&mut self, text: &str) -> io::Result<()> {
        writeln!(self.out, "# {text}")
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// One formatted CSV cell.
pub struct Field(String);

/// Shortest round-trip digits; exponent form outside `[1e-4, 1e15)`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field(format_f64(v))
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field(v.to_string())
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field(v.to_string())
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field(v)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field(if v { "1" } else { "0" }.to_string())
    }
}
