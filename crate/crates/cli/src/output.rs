//! Table destinations and the JSON sidecar written next to every table file.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

/// Where a table goes: a file (with sidecar) or standard output.
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Sink { path }
    }

    pub fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    /// `<table>.json` next to the table; nothing when writing to stdout.
    pub fn write_sidecar<C: Serialize, R: Serialize>(
        &self,
        command: &str,
        config: &C,
        results: &R,
    ) -> anyhow::Result<Option<PathBuf>> {
        let Some(table) = &self.path else {
            return Ok(None);
        };
        let path = sidecar_path(table);
        let doc = json!({
            "command": command,
            "table": table.file_name().map(|n| n.to_string_lossy().into_owned()),
            "config": serde_json::to_value(config)?,
            "results": serde_json::to_value(results)?,
            "environment": environment(),
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(Some(path))
    }
}

pub fn sidecar_path(table: &Path) -> PathBuf {
    let mut name = table.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Build and host facts that can change numerical output. No clock values,
/// so repeated runs produce identical sidecars.
fn environment() -> Value {
    json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "target_os": std::env::consts::OS,
        "target_arch": std::env::consts::ARCH,
        "debug_build": cfg!(debug_assertions),
        "available_parallelism": std::thread::available_parallelism().map(|n| n.get()).ok(),
    })
}
