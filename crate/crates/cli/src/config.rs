//! Flat key-value configuration files. Keys mirror the long flag names;
//! flags given on the command line win over the file.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                format!("{}:{}: expected key = value", path.display(), lineno + 1)
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key '{key}': cannot parse '{raw}'")),
        }
    }

    /// Canonical "key = value" listing used for the provenance hash.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// FNV-1a over the canonical configuration string.
pub fn config_hash(canonical: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canonical.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Lengths may be written either as plain integers or as powers like 2^15.
pub fn parse_length(raw: &str) -> Result<u64, String> {
    if let Some((base, exp)) = raw.split_once('^') {
        let base: u64 = base
            .trim()
            .parse()
            .map_err(|_| format!("bad length '{raw}'"))?;
        let exp: u32 = exp
            .trim()
            .parse()
            .map_err(|_| format!("bad length '{raw}'"))?;
        base.checked_pow(exp)
            .ok_or_else(|| format!("length '{raw}' overflows"))
    } else {
        raw.trim()
            .parse()
            .map_err(|_| format!("bad length '{raw}'"))
    }
}
