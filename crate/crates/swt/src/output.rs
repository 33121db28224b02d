//! Atomic output: every file is written to a temporary sibling and renamed
//! into place only once the whole command has succeeded.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::{Error, Result};

/// Output files staged for a single command. Dropping without
/// [`Staged::commit`] removes every temporary file.
#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes the content of `path` into a temporary file next to it.
    pub fn write<F>(&mut self, path: &Path, fill: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        let dir = parent_dir(path);
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
        {
            let mut w = BufWriter::new(tmp.as_file_mut());
            fill(&mut w).map_err(|e| Error::io(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Renames every staged file onto its destination.
    pub fn commit(self) -> Result<()> {
        for (tmp, dest) in self.files {
            tmp.persist(&dest).map_err(|e| Error::io(&dest, e.error))?;
        }
        Ok(())
    }
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Fails unless `path` can be created: its directory must exist and the path
/// must not be a directory.
pub fn check_output(path: &Path) -> Result<()> {
    let dir = parent_dir(path);
    if !dir.is_dir() {
        return Err(Error::io(path, io::Error::new(io::ErrorKind::NotFound, "output directory does not exist")));
    }
    if path.is_dir() {
        return Err(Error::Invalid(format!("{}: output path is a directory", path.display())));
    }
    Ok(())
}

pub fn check_input(path: &Path) -> Result<()> {
    match fs::metadata(path) {
        Ok(m) if m.is_file() => Ok(()),
        Ok(_) => Err(Error::Invalid(format!("{}: not a regular file", path.display()))),
        Err(e) => Err(Error::io(path, e)),
    }
}
