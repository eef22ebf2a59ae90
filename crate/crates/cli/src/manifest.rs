use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::Failure;

/// Written next to every output file as `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub command: &'a str,
    /// Resolved configuration, enough to re-run the command.
    pub config: &'a C,
    pub argv: Vec<String>,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub threads: usize,
    pub wall_clock_secs: f64,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes `body` to `out` (or stdout) and, for files, the manifest.
pub fn emit<C: Serialize>(
    command: &str,
    config: &C,
    seed: Option<u64>,
    out: Option<&Path>,
    body: &str,
    started: Instant,
) -> Result<(), Failure> {
    let Some(out) = out else {
        print!("{body}");
        return Ok(());
    };
    std::fs::write(out, body)?;
    let m = RunManifest {
        command,
        config,
        argv: std::env::args().collect(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        outputs: vec![out.to_path_buf()],
        threads: rayon::current_num_threads(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    std::fs::write(manifest_path(out), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}
