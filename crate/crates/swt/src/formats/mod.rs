//! On-disk formats shared by every subcommand.

pub mod embeddings;
pub mod tables;
pub mod truth;
pub mod weights;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::{Error, Result};

pub use embeddings::{load_embeddings, EmbeddingFormat};

/// Opens `path` for buffered reading.
pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}
