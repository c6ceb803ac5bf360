//! Output files. Every file gets a `<name>.meta.json` sidecar holding the
//! resolved configuration that produced it.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

/// Formats a double with 17 significant digits, which round-trips exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutputDir {
    root: PathBuf,
    config: Value,
    written: Vec<String>,
}

impl OutputDir {
    /// Creates `root` if needed and checks that it accepts files.
    pub fn create(root: &Path, config: Value) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| {
            CliError::Validation(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        let probe = root.join(".fhd-write-probe");
        File::create(&probe)
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| {
                CliError::Validation(format!(
                    "output directory {} is not writable: {e}",
                    root.display()
                ))
            })?;
        Ok(Self {
            root: root.to_path_buf(),
            config,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Names of the data files written so far (sidecars excluded).
    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = BufWriter::new(File::create(self.root.join(name))?);
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        self.finish(name)
    }

    pub fn write_json<T: Serialize + ?Sized>(
        &mut self,
        name: &str,
        value: &T,
    ) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("cannot serialize {name}: {e}")))?;
        fs::write(self.root.join(name), text + "\n")?;
        self.finish(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.root.join(name), text)?;
        self.finish(name)
    }

    fn finish(&mut self, name: &str) -> Result<(), CliError> {
        let meta = json!({
            "file": name,
            "generator": concat!("fhd ", env!("CARGO_PKG_VERSION")),
            "config": self.config,
        });
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        fs::write(self.root.join(format!("{name}.meta.json")), text + "\n")?;
        self.written.push(name.to_string());
        Ok(())
    }
}
