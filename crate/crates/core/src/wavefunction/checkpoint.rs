//! Plain-text RBM checkpoints.
//!
//! ```text
//! # vmc rbm checkpoint
//! version 1
//! n_visible 10
//! n_hidden 50
//! n_params 560
//! <one parameter per line, canonical (a, b, W) order>
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! checkpoint reloads bit-for-bit.

use std::io::{BufRead, Write};

use super::Rbm;
use crate::error::{Result, VmcError};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "# vmc rbm checkpoint";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub rbm: Rbm,
    pub params: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(out: &mut W, rbm: &Rbm, params: &[f64]) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "version {CHECKPOINT_VERSION}")?;
    writeln!(out, "n_visible {}", rbm.n_visible())?;
    writeln!(out, "n_hidden {}", rbm.n_hidden())?;
    writeln!(out, "n_params {}", params.len())?;
    for p in params {
        writeln!(out, "{p:?}")?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<Checkpoint> {
    let bad = |msg: String| VmcError::Checkpoint(msg);
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file".into()))?
            .map_err(|e| bad(e.to_string()))
    };
    if next()?.trim() != MAGIC {
        return Err(bad("missing header".into()));
    }
    let mut field = |name: &str| -> Result<usize> {
        let line = next()?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some(key), Some(value)) if key == name => value
                .parse()
                .map_err(|_| bad(format!("bad value for {name}: {value}"))),
            _ => Err(bad(format!("expected `{name} <value>`, got `{line}`"))),
        }
    };
    let version = field("version")?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(bad(format!("unsupported version {version}")));
    }
    let rbm = Rbm::new(field("n_visible")?, field("n_hidden")?);
    let n_params = field("n_params")?;
    if n_params != rbm.n_params() {
        return Err(bad(format!(
            "n_params {n_params} inconsistent with N = {}, D = {}",
            rbm.n_visible(),
            rbm.n_hidden()
        )));
    }
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        let line = next()?;
        params.push(
            line.trim()
                .parse()
                .map_err(|_| bad(format!("bad parameter `{line}`")))?,
        );
    }
    Ok(Checkpoint { rbm, params })
}
