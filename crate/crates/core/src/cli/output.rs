//! CSV and JSON formatting plus on-disk writing of run outputs.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::normalized_db;
use crate::cli::run::{RunOutput, Stamp};
use crate::numerics::C64;
use crate::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn complex_json(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// CSV with a leading `#` provenance line.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(stamp: &Stamp, columns: &[&str]) -> Self {
        let mut text = format!("# config_sha256={} seed={}\n", stamp.config_sha256, stamp.seed);
        text.push_str(&columns.join(","));
        text.push('\n');
        Table { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// `n,re,im,magnitude_db` with magnitudes normalised to the profile peak.
pub fn profile_csv(x: &[C64], stamp: &Stamp) -> String {
    let db = normalized_db(&x.iter().map(|z| z.norm()).collect::<Vec<_>>());
    let mut t = Table::new(stamp, &["n", "re", "im", "magnitude_db"]);
    for (n, (z, d)) in x.iter().zip(&db).enumerate() {
        t.row(&[n.to_string(), z.re.to_string(), z.im.to_string(), d.to_string()]);
    }
    t.finish()
}

pub fn write_output(dir: &Path, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, content) in &out.files {
        fs::write(dir.join(name), content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stamp() -> Stamp {
        Stamp { config_sha256: sha256_hex(b"abc"), seed: 9 }
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn profile_csv_layout() {
        let csv = profile_csv(&[C64::new(0.0, 2.0), C64::new(0.2, 0.0)], &stamp());
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# config_sha256=ba7816bf") && lines[0].ends_with("seed=9"));
        assert_eq!(lines[1], "n,re,im,magnitude_db");
        assert_eq!(lines[2], "0,0,2,0");
        assert!(lines[3].starts_with("1,0.2,0,-20"));
        assert_eq!(lines.len(), 4);
    }
}
