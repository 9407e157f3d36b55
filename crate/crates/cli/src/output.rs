use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Lowest level written to dB columns; exact nulls would otherwise print -inf.
pub const DB_FLOOR: f64 = -300.0;

pub fn db(x: f64) -> f64 {
    if x.is_nan() {
        x
    } else {
        x.max(DB_FLOOR)
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("bad output path {}", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let io = |e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

/// A CSV table built in memory.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut text = String::from(header);
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{f}").expect("string write");
        }
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// Collects artifacts written by one run.
pub struct Sink {
    pub dir: PathBuf,
    pub plot: bool,
    pub artifacts: Vec<String>,
}

/// How a CSV should be plotted.
pub enum Plot<'a> {
    /// Column 2 against column 1.
    Line { xlabel: &'a str, ylabel: &'a str },
    /// Column 3 against column 1, one curve per value of the integer in
    /// column 2.
    PerCore {
        xlabel: &'a str,
        ylabel: &'a str,
        cores: &'a [usize],
    },
}

impl Sink {
    pub fn new(dir: PathBuf, plot: bool) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            plot,
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), contents)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, csv: Csv, plot: Option<Plot>) -> Result<(), CliError> {
        self.write(name, &csv.into_bytes())?;
        if let (true, Some(p)) = (self.plot, plot) {
            let script = gnuplot(name, &p);
            let gp = name.trim_end_matches(".csv").to_string() + ".gp";
            self.write(&gp, script.as_bytes())?;
        }
        Ok(())
    }
}

fn gnuplot(csv: &str, plot: &Plot) -> String {
    let png = csv.trim_end_matches(".csv").to_string() + ".png";
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    writeln!(s, "set output '{png}'").unwrap();
    s.push_str("set grid\n");
    match plot {
        Plot::Line { xlabel, ylabel } => {
            writeln!(s, "set xlabel '{xlabel}'\nset ylabel '{ylabel}'").unwrap();
            writeln!(s, "plot '{csv}' using 1:2 skip 1 with lines notitle").unwrap();
        }
        Plot::PerCore { xlabel, ylabel, cores } => {
            writeln!(s, "set xlabel '{xlabel}'\nset ylabel '{ylabel}'").unwrap();
            let curves: Vec<String> = cores
                .iter()
                .map(|k| format!("'{csv}' using 1:($2=={k}?$3:1/0) skip 1 with lines title 'core {k}'"))
                .collect();
            writeln!(s, "plot {}", curves.join(", \\\n     ")).unwrap();
        }
    }
    s
}
