//! Run artifacts: one directory per run holding `config-echo.json` (the
//! effective configuration after CLI overrides), `raw.csv` (a timestamped
//! comment line, a header row, then payload rows), and `summary.json`.
//! Payload rows are bit-reproducible for a fixed config and master seed; the
//! timestamp line is the only part that varies between reruns.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fluctlab::{Error, Result};

use crate::config::ExperimentConfig;
use crate::runner::RunOutput;

pub const CONFIG_ECHO: &str = "config-echo.json";
pub const RAW_CSV: &str = "raw.csv";
pub const SUMMARY_JSON: &str = "summary.json";

fn resource(path: &Path, what: &str, e: impl std::fmt::Display) -> Error {
    Error::Resource(format!("{what} {}: {e}", path.display()))
}

/// Output directory resolution: `--out` flag, then the config's `output`
/// field, then `runs/<experiment>-seed<seed>` under the working directory.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.output.clone()).unwrap_or_else(|| {
        PathBuf::from("runs").join(format!("{}-seed{}", config.experiment.name(), config.seed))
    })
}

pub fn write_artifacts(
    dir: &Path,
    effective: &ExperimentConfig,
    output: &RunOutput,
) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| resource(dir, "cannot create output directory", e))?;

    let echo_path = dir.join(CONFIG_ECHO);
    let echo = serde_json::to_string_pretty(effective)
        .map_err(|e| Error::Contract(format!("config echo serialization failed: {e}")))?;
    std::fs::write(&echo_path, echo.as_bytes())
        .map_err(|e| resource(&echo_path, "cannot write", e))?;

    let csv_path = dir.join(RAW_CSV);
    let mut payload = Vec::new();
    {
        let mut writer = csv::Writer::from_writer(&mut payload);
        writer
            .write_record(&output.csv_header)
            .and_then(|()| output.csv_rows.iter().try_for_each(|r| writer.write_record(r)))
            .and_then(|()| writer.flush().map_err(csv::Error::from))
            .map_err(|e| resource(&csv_path, "cannot encode", e))?;
    }
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or_default();
    let mut file = std::fs::File::create(&csv_path)
        .map_err(|e| resource(&csv_path, "cannot create", e))?;
    writeln!(file, "# generated-unix-ms: {stamp}")
        .and_then(|()| file.write_all(&payload))
        .map_err(|e| resource(&csv_path, "cannot write", e))?;

    let summary_path = dir.join(SUMMARY_JSON);
    let summary = serde_json::to_string_pretty(&output.summary)
        .map_err(|e| Error::Contract(format!("summary serialization failed: {e}")))?;
    std::fs::write(&summary_path, summary.as_bytes())
        .map_err(|e| resource(&summary_path, "cannot write", e))?;
    Ok(())
}
