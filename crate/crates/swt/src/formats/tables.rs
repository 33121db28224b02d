//! Plain-text tables: sense inventory, taxonomy, gold key, predictions and
//! score reports.
//!
//! Blank lines and lines starting with `#` are skipped on input.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};
use std::path::Path;

use swt_core::corpus::{SenseInventory, Taxonomy};
use swt_core::knn::{EvalReport, GoldKey, Prediction, Source};

use crate::{Error, Result};

fn content_lines<'a, R: BufRead + 'a>(
    reader: R,
    label: &'a Path,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, line)| match line {
        Err(e) => Some(Err(Error::io(label, e))),
        Ok(l) => {
            let t = l.trim_end_matches(['\r', '\n']);
            if t.trim().is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
    })
}

/// `lemma<TAB>pos<TAB>sense1,sense2,...`, first sense first.
pub fn read_inventory<R: BufRead>(reader: R, label: &Path) -> Result<SenseInventory> {
    let mut inv = SenseInventory::new();
    for line in content_lines(reader, label) {
        let (n, line) = line?;
        let cols: Vec<&str> = line.split('\t').collect();
        let [lemma, pos, senses] = cols[..] else {
            return Err(Error::parse(label, n, format!("expected 3 tab-separated columns, found {}", cols.len())));
        };
        let senses: Vec<String> =
            senses.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        inv.insert(lemma, pos, senses).map_err(|e| Error::parse(label, n, e))?;
    }
    Ok(inv)
}

pub fn write_inventory<W: Write>(inv: &SenseInventory, mut out: W) -> io::Result<()> {
    for (lemma, pos, senses) in inv.iter() {
        writeln!(out, "{lemma}\t{pos}\t{}", senses.join(","))?;
    }
    out.flush()
}

/// One edge per line `a<TAB>b`; a single column declares an isolated node.
pub fn read_taxonomy<R: BufRead>(reader: R, label: &Path) -> Result<Taxonomy> {
    let mut tax = Taxonomy::new();
    for line in content_lines(reader, label) {
        let (n, line) = line?;
        let cols: Vec<&str> = line.split('\t').collect();
        match cols[..] {
            [a] => {
                tax.add_node(a);
            }
            [a, b] => tax.add_edge(a, b).map_err(|e| Error::parse(label, n, e))?,
            _ => return Err(Error::parse(label, n, format!("expected 1 or 2 columns, found {}", cols.len()))),
        }
    }
    Ok(tax)
}

pub fn write_taxonomy<W: Write>(tax: &Taxonomy, mut out: W) -> io::Result<()> {
    let edges = tax.edges();
    let mut linked = BTreeSet::new();
    for (a, b) in &edges {
        writeln!(out, "{a}\t{b}")?;
        linked.insert(*a);
        linked.insert(*b);
    }
    for node in tax.nodes().filter(|n| !linked.contains(n)) {
        writeln!(out, "{node}")?;
    }
    out.flush()
}

/// `instance_id sense [sense...]`; any listed sense counts as correct.
pub fn read_gold<R: BufRead>(reader: R, label: &Path) -> Result<GoldKey> {
    let mut gold = GoldKey::new();
    for line in content_lines(reader, label) {
        let (n, line) = line?;
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("non-blank line");
        let senses: Vec<String> = fields.map(String::from).collect();
        if senses.is_empty() {
            return Err(Error::parse(label, n, format!("instance `{id}` has no sense")));
        }
        if gold.insert(id.to_string(), senses).is_some() {
            return Err(Error::parse(label, n, format!("duplicate instance `{id}`")));
        }
    }
    Ok(gold)
}

pub fn write_gold<W: Write>(gold: &GoldKey, mut out: W) -> io::Result<()> {
    for (id, senses) in gold {
        writeln!(out, "{id} {}", senses.join(" "))?;
    }
    out.flush()
}

/// `instance_id sense`; unattempted instances are omitted.
pub fn write_predictions<W: Write>(predictions: &[Prediction], mut out: W) -> io::Result<()> {
    for p in predictions {
        if let Some(s) = &p.sense_id {
            writeln!(out, "{} {s}", p.instance_id)?;
        }
    }
    out.flush()
}

/// Reads a predictions file back; the source of every line is unknown, so
/// it is recorded as [`Source::Knn`].
pub fn read_predictions<R: BufRead>(reader: R, label: &Path) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for line in content_lines(reader, label) {
        let (n, line) = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [id, sense] = fields[..] else {
            return Err(Error::parse(label, n, "expected `instance_id sense`"));
        };
        out.push(Prediction { instance_id: id.into(), sense_id: Some(sense.into()), source: Source::Knn });
    }
    Ok(out)
}

pub const REPORT_HEADER: &str = "method\tdataset\tP\tR\tF1";
/// Dataset label of the micro-average over all instances.
pub const ALL_DATASETS: &str = "ALL";

/// Appends one row per dataset plus an [`ALL_DATASETS`] row.
pub fn report_rows(method: &str, report: &EvalReport) -> Vec<String> {
    let row = |dataset: &str, c: &swt_core::knn::Counts| {
        format!("{method}\t{dataset}\t{:.6}\t{:.6}\t{:.6}", c.precision(), c.recall(), c.f1())
    };
    let mut rows: Vec<String> = report.per_dataset.iter().map(|(d, c)| row(d, c)).collect();
    rows.push(row(ALL_DATASETS, &report.overall));
    rows
}

pub fn write_report<W: Write>(rows: &[String], mut out: W) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()
}
