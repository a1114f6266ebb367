//! File formats: stamped CSV tables, JSON documents and the plot manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ionthermo::estimators::EvolutionTrace;
use ionthermo::shots::{ReadoutModel, ShotRecord, ShotTable};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn stamp(hash: &str) -> String {
    format!("# ionthermo {VERSION} config-hash={hash}")
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub columns: Vec<String>,
    pub description: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub files: Vec<ManifestEntry>,
}

/// Writer for every file a command produces.
pub struct Output {
    dir: PathBuf,
    hash: String,
    command: String,
    entries: Vec<ManifestEntry>,
}

impl Output {
    pub fn new(dir: &Path, command: &str, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            command: command.to_string(),
            entries: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>], description: &str) -> Result<PathBuf, CliError> {
        let mut buf = stamp(&self.hash).into_bytes();
        buf.push(b'\n');
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(columns)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        let path = self.path(name);
        fs::write(&path, buf)?;
        self.entries.push(ManifestEntry {
            file: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            description: description.to_string(),
        });
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T, description: &str) -> Result<PathBuf, CliError> {
        let doc = Stamped {
            ionthermo: VERSION,
            config_hash: &self.hash,
            body: value,
        };
        let path = self.path(name);
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        self.entries.push(ManifestEntry {
            file: name.to_string(),
            columns: Vec::new(),
            description: description.to_string(),
        });
        Ok(path)
    }

    /// Write `<command>.manifest.json` listing everything produced.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            command: self.command.clone(),
            version: VERSION.to_string(),
            config_hash: self.hash.clone(),
            files: self.entries,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Stamped<'a, T> {
    ionthermo: &'a str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Metadata stored next to a shot table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSidecar {
    pub seed: Option<u64>,
    pub config_hash: String,
    pub readout: ReadoutModel,
    pub n_ions: usize,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn shot_rows(table: &ShotTable) -> Vec<Vec<String>> {
    table
        .records()
        .map(|r| vec![num(r.time_us), r.rep.to_string(), r.ion.to_string(), r.outcome.to_string()])
        .collect()
}

pub const SHOT_COLUMNS: [&str; 4] = ["time_us", "rep", "ion", "outcome"];

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn column_map(path: &Path, rdr: &mut csv::Reader<fs::File>, required: &[&str], optional: &[&str]) -> Result<BTreeMap<String, usize>, CliError> {
    let headers = rdr.headers()?.clone();
    let mut map = BTreeMap::new();
    for (k, h) in headers.iter().enumerate() {
        map.insert(h.to_string(), k);
    }
    for r in required {
        if !map.contains_key(*r) {
            return Err(CliError::Data(format!(
                "{}: missing column '{r}' (expected {})",
                path.display(),
                required.iter().chain(optional).copied().collect::<Vec<_>>().join(", ")
            )));
        }
    }
    Ok(map)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T, CliError> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec
        .get(idx)
        .ok_or_else(|| CliError::Data(format!("{}: line {line}: missing field '{name}'", path.display())))?;
    raw.parse()
        .map_err(|_| CliError::Data(format!("{}: line {line}: cannot parse {name} from '{raw}'", path.display())))
}

/// Read a shot table and, when present, its JSON sidecar.
pub fn read_shots(path: &Path) -> Result<(ShotTable, Option<ShotSidecar>), CliError> {
    let mut rdr = reader(path)?;
    let cols = column_map(path, &mut rdr, &SHOT_COLUMNS, &[])?;
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let outcome: u8 = field(path, &rec, cols["outcome"], "outcome")?;
        if outcome > 1 {
            let line = rec.position().map_or(0, |p| p.line());
            return Err(CliError::Data(format!("{}: line {line}: outcome must be 0 or 1", path.display())));
        }
        records.push(ShotRecord {
            time_us: field(path, &rec, cols["time_us"], "time_us")?,
            rep: field(path, &rec, cols["rep"], "rep")?,
            ion: field(path, &rec, cols["ion"], "ion")?,
            outcome,
        });
    }
    let side_path = sidecar_path(path);
    let sidecar = if side_path.exists() {
        let text = fs::read_to_string(&side_path)?;
        Some(
            serde_json::from_str::<ShotSidecar>(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", side_path.display())))?,
        )
    } else {
        None
    };
    let table = ShotTable::from_records(&records, sidecar.as_ref().and_then(|s| s.seed))?;
    Ok((table, sidecar))
}

/// Read a `time_us, ion, pe[, sigma]` trace. Returns whether sigma was
/// present; without it every sigma is 1.
pub fn read_trace(path: &Path) -> Result<(EvolutionTrace, bool), CliError> {
    let mut rdr = reader(path)?;
    let cols = column_map(path, &mut rdr, &["time_us", "ion", "pe"], &["sigma"])?;
    let has_sigma = cols.contains_key("sigma");
    let mut rows: Vec<(f64, usize, f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let sigma = if has_sigma { field(path, &rec, cols["sigma"], "sigma")? } else { 1.0 };
        rows.push((
            field(path, &rec, cols["time_us"], "time_us")?,
            field(path, &rec, cols["ion"], "ion")?,
            field(path, &rec, cols["pe"], "pe")?,
            sigma,
        ));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no rows", path.display())));
    }
    let n_ions = rows.iter().map(|r| r.1).max().unwrap_or(0) + 1;
    let mut times: Vec<f64> = rows.iter().map(|r| r.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut x = vec![vec![f64::NAN; times.len()]; n_ions];
    let mut sigma = vec![vec![f64::NAN; times.len()]; n_ions];
    for (t, i, p, s) in rows {
        let j = times.partition_point(|v| *v < t);
        if !x[i][j].is_nan() {
            return Err(CliError::Data(format!("{}: duplicate row for t = {t} us, ion {i}", path.display())));
        }
        x[i][j] = p;
        sigma[i][j] = s;
    }
    if x.iter().flatten().any(|v| v.is_nan()) {
        return Err(CliError::Data(format!("{}: every ion needs a row at every time", path.display())));
    }
    Ok((
        EvolutionTrace {
            times_us: times,
            x,
            sigma,
            n_shots: 0,
        },
        has_sigma,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2e-300, 123456.789, -0.0, 0.27461817] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn stamp_format() {
        assert_eq!(stamp("0123456789abcdef"), format!("# ionthermo {VERSION} config-hash=0123456789abcdef"));
    }
}
