//! Artifact writing and the run manifest.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use rydex::io::Table;
use rydex::Config;

use crate::{Command, Common, Format};

/// One named table with unit notes for its CSV preamble.
pub struct NamedTable {
    pub name: String,
    pub table: Table,
    pub units: Vec<String>,
}

/// What a subcommand produced.
pub struct Report {
    pub summary: Value,
    pub tables: Vec<NamedTable>,
}

impl Report {
    pub fn summary(summary: Value) -> Self {
        Self {
            summary,
            tables: Vec::new(),
        }
    }

    pub fn with_table(mut self, name: &str, table: Table, units: &[&str]) -> Self {
        self.tables.push(NamedTable {
            name: name.to_string(),
            table,
            units: units.iter().map(|s| s.to_string()).collect(),
        });
        self
    }
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_path: Option<String>,
    pub config: Value,
    pub seed: u64,
    pub arguments: Value,
    /// SHA-256 over everything above; independent of output paths and timing.
    pub hash: String,
    pub outputs: Vec<String>,
    pub duration_s: f64,
}

impl Manifest {
    pub fn new(name: &str, cmd: &Command, common: &Common, cfg: &Config) -> Self {
        let config: Value = serde_json::to_value(cfg).expect("config serializes");
        let arguments = json!({ "command": cmd, "common": common });
        let mut h = Sha256::new();
        for part in [
            env!("CARGO_PKG_VERSION").to_string(),
            name.to_string(),
            arguments.to_string(),
            config.to_string(),
        ] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        let hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            tool: "rydex",
            version: env!("CARGO_PKG_VERSION"),
            command: name.to_string(),
            config_path: common.config.as_ref().map(|p| p.display().to_string()),
            config,
            seed: cfg.link.seed,
            arguments,
            hash,
            outputs: Vec::new(),
            duration_s: 0.0,
        }
    }
}

fn preamble(m: &Manifest, t: &NamedTable) -> Vec<String> {
    let mut p = vec![
        format!("manifest_sha256={}", m.hash),
        format!("command={}", m.command),
    ];
    p.extend(t.units.iter().cloned());
    p
}

fn full_json(report: &Report, m: &Manifest, with_tables: bool) -> Value {
    let mut v = json!({
        "manifest_sha256": m.hash,
        "command": m.command,
        "config": m.config,
        "result": report.summary,
    });
    if with_tables && !report.tables.is_empty() {
        let tables: serde_json::Map<String, Value> = report
            .tables
            .iter()
            .map(|t| (t.name.clone(), t.table.to_json()))
            .collect();
        v["tables"] = Value::Object(tables);
    }
    v
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serializes");
    s.push('\n');
    s
}

fn write(dir: &Path, name: &str, text: &str, m: &mut Manifest) -> std::io::Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    m.outputs.push(path.display().to_string());
    Ok(())
}

pub fn emit(report: &Report, mut m: Manifest, common: &Common, start: Instant) -> std::io::Result<()> {
    let Some(dir) = &common.out else {
        let text = match common.format {
            Format::Csv => match report.tables.first() {
                Some(t) => t.table.to_csv(&preamble(&m, t)),
                None => pretty(&full_json(report, &m, false)),
            },
            Format::Json => pretty(&full_json(report, &m, true)),
        };
        print!("{text}");
        return Ok(());
    };
    std::fs::create_dir_all(dir)?;
    let stem = m.command.replace('-', "_");
    match common.format {
        Format::Csv => {
            for t in &report.tables {
                let text = t.table.to_csv(&preamble(&m, t));
                write(dir, &format!("{}.csv", t.name), &text, &mut m)?;
            }
            write(dir, &format!("{stem}.json"), &pretty(&full_json(report, &m, false)), &mut m)?;
        }
        Format::Json => {
            write(dir, &format!("{stem}.json"), &pretty(&full_json(report, &m, true)), &mut m)?;
        }
    }
    let mut snapshot = serde_json::to_string_pretty(&m.config).expect("JSON serializes");
    snapshot.push('\n');
    write(dir, &format!("{stem}.config.json"), &snapshot, &mut m)?;
    m.duration_s = start.elapsed().as_secs_f64();
    let path = dir.join(format!("{stem}.manifest.json"));
    std::fs::write(&path, pretty(&serde_json::to_value(&m).expect("manifest serializes")))?;
    eprintln!("wrote {} files to {} (manifest {})", m.outputs.len() + 1, dir.display(), &m.hash[..12]);
    Ok(())
}
