//! `records.csv`: a version line followed by a fixed header.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use vmc_core::experiment::RunRecord;

pub const VERSION_LINE: &str = "# vmc records v1";

pub const HEADER: [&str; 13] = [
    "k",
    "energy",
    "energy_variance",
    "grad_norm",
    "full_grad_norm",
    "mu_k",
    "alpha_k",
    "beta_k",
    "rank_k",
    "delta_norm",
    "step_norm",
    "eta_k",
    "wall_ms",
];

pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{VERSION_LINE}")?;
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, record: &RunRecord) -> Result<()> {
        self.inner.serialize(record)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != VERSION_LINE {
        bail!("{}: unsupported records version line `{}`", path.display(), first.trim_end());
    }
    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
    if header != HEADER {
        bail!("{}: unexpected header {:?}", path.display(), header);
    }
    csv.deserialize()
        .map(|r| r.with_context(|| format!("parsing {}", path.display())))
        .collect()
}
