//! `truth.json`: the planted signal dimensions of a synthetic corpus.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Entry {
    sense: String,
    signal_dims: Vec<usize>,
}

pub fn write_truth<W: Write>(signal: &BTreeMap<String, Vec<usize>>, mut out: W) -> io::Result<()> {
    let entries: Vec<Entry> = signal.iter().map(|(s, d)| Entry { sense: s.clone(), signal_dims: d.clone() }).collect();
    serde_json::to_writer_pretty(&mut out, &entries)?;
    out.write_all(b"\n")?;
    out.flush()
}

pub fn read_truth<R: Read>(reader: R, label: &Path) -> Result<BTreeMap<String, Vec<usize>>> {
    let entries: Vec<Entry> = serde_json::from_reader(reader).map_err(|e| Error::parse(label, e.line(), e))?;
    let mut out = BTreeMap::new();
    for e in entries {
        let mut dims = e.signal_dims;
        dims.sort_unstable();
        if out.insert(e.sense.clone(), dims).is_some() {
            return Err(Error::Invalid(format!("{}: duplicate sense `{}`", label.display(), e.sense)));
        }
    }
    Ok(out)
}
