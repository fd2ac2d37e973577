//! Columnar output tables (CSV or binary) and run manifests.
//!
//! Binary layout, little endian: magic `EORC`, `u32` version, the manifest id
//! and config hash as `u16`-length-prefixed UTF-8, `u32` column count,
//! `u64` row count, the column names (length-prefixed), then each column as
//! contiguous `f64`s.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const BIN_MAGIC: &[u8; 4] = b"EORC";
pub const BIN_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Bin,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Bin => "bin",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "bin" => Ok(Format::Bin),
            other => Err(format!("unknown format `{other}` (expected csv or bin)")),
        }
    }
}

/// Named `f64` columns of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let columns = vec![Vec::new(); names.len()];
        Table { names, columns }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.names.len(), "row width");
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(&self.columns[k])
    }
}

/// Provenance carried by every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub manifest_id: String,
    pub config_hash: String,
    /// Extra `key = value` lines (CSV only).
    pub notes: Vec<(String, String)>,
}

/// Shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Writes `dir/stem.<ext>` and returns its path.
pub fn write_table(
    dir: &Path,
    stem: &str,
    format: Format,
    header: &Header,
    table: &Table,
) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        Format::Csv => write_csv(&mut w, header, table),
        Format::Bin => write_bin(&mut w, header, table),
    }
    .and_then(|_| w.flush());
    res.map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_csv(w: &mut impl Write, header: &Header, table: &Table) -> std::io::Result<()> {
    writeln!(w, "# manifest = {}", header.manifest_id)?;
    writeln!(w, "# config = {}", header.config_hash)?;
    for (k, v) in &header.notes {
        writeln!(w, "# {k} = {v}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(&table.names)?;
    for r in 0..table.n_rows() {
        csv.write_record(table.columns.iter().map(|c| fmt_f64(c[r])))?;
    }
    csv.flush()
}

fn put_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    let len = u16::try_from(s.len()).map_err(|_| std::io::Error::other("string too long"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn write_bin(w: &mut impl Write, header: &Header, table: &Table) -> std::io::Result<()> {
    w.write_all(BIN_MAGIC)?;
    w.write_all(&BIN_VERSION.to_le_bytes())?;
    put_str(w, &header.manifest_id)?;
    put_str(w, &header.config_hash)?;
    w.write_all(&(table.names.len() as u32).to_le_bytes())?;
    w.write_all(&(table.n_rows() as u64).to_le_bytes())?;
    for n in &table.names {
        put_str(w, n)?;
    }
    for c in &table.columns {
        for v in c {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg.into())
}

fn get<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn get_str(r: &mut impl Read) -> std::io::Result<String> {
    let len = u16::from_le_bytes(get(r)?) as usize;
    let mut b = vec![0u8; len];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|_| invalid("non-UTF-8 string"))
}

pub fn read_bin(path: &Path) -> Result<(Header, Table)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_bin_from(&mut BufReader::new(file)).map_err(|e| Error::io(path, e))
}

fn read_bin_from(r: &mut impl Read) -> std::io::Result<(Header, Table)> {
    if &get::<4>(r)? != BIN_MAGIC {
        return Err(invalid("not an EORC file"));
    }
    let version = u32::from_le_bytes(get(r)?);
    if version != BIN_VERSION {
        return Err(invalid(format!("unsupported version {version}")));
    }
    let manifest_id = get_str(r)?;
    let config_hash = get_str(r)?;
    let n_cols = u32::from_le_bytes(get(r)?) as usize;
    let n_rows = u64::from_le_bytes(get(r)?) as usize;
    let names = (0..n_cols)
        .map(|_| get_str(r))
        .collect::<std::io::Result<Vec<_>>>()?;
    let mut columns = Vec::with_capacity(n_cols);
    for _ in 0..n_cols {
        let col = (0..n_rows)
            .map(|_| get::<8>(r).map(f64::from_le_bytes))
            .collect::<std::io::Result<Vec<_>>>()?;
        columns.push(col);
    }
    Ok((
        Header {
            manifest_id,
            config_hash,
            notes: Vec::new(),
        },
        Table { names, columns },
    ))
}

/// Parses a CSV table written by [`write_table`], header comments included.
pub fn read_csv(path: &Path) -> Result<(Header, Table)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::io(path, invalid(msg));
    let mut notes = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line[1..].split_once('=') {
            notes.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let take = |key: &str, notes: &mut Vec<(String, String)>| {
        let k = notes.iter().position(|(n, _)| n == key);
        k.map(|k| notes.remove(k).1)
            .ok_or_else(|| bad(format!("missing `{key}` header line")))
    };
    let manifest_id = take("manifest", &mut notes)?;
    let config_hash = take("config", &mut notes)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut table = Table::new(names);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| bad(format!("bad number `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != table.names.len() {
            return Err(bad("ragged row".into()));
        }
        table.push_row(&row);
    }
    Ok((
        Header {
            manifest_id,
            config_hash,
            notes,
        },
        table,
    ))
}

/// Everything needed to re-run a subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub subcommand: String,
    pub config: PathBuf,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub id: String,
    pub config_hash: String,
    pub out_dir: PathBuf,
    /// Seconds since the Unix epoch. Kept out of every data file so that
    /// re-runs stay byte-identical.
    pub timestamp: u64,
    pub outputs: Vec<String>,
    pub invocation: Invocation,
}

impl RunManifest {
    /// Identifier derived from the config contents and the invocation, so
    /// equal runs share it regardless of file locations or time.
    pub fn id_for(config_hash: &str, inv: &Invocation) -> String {
        let mut inv = inv.clone();
        inv.config = PathBuf::new();
        let body = toml::to_string(&inv).expect("invocation serializes");
        let digest = Sha256::digest(format!("{config_hash}\n{body}").as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Header, Table) {
        let mut t = Table::new(["a", "b"]);
        t.push_row(&[1.0, -2.5e-300]);
        t.push_row(&[f64::MAX, 0.1 + 0.2]);
        let h = Header {
            manifest_id: "abc".into(),
            config_hash: "def".into(),
            notes: vec![("scheme".into(), "mw-mw".into())],
        };
        (h, t)
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (h, t) = sample();
        let p = write_table(dir.path(), "x", Format::Csv, &h, &t).unwrap();
        let (h2, t2) = read_csv(&p).unwrap();
        assert_eq!(h2, h);
        assert_eq!(t2, t);
    }

    #[test]
    fn bin_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (h, t) = sample();
        let p = write_table(dir.path(), "x", Format::Bin, &h, &t).unwrap();
        let (h2, t2) = read_bin(&p).unwrap();
        assert_eq!(h2.manifest_id, h.manifest_id);
        assert_eq!(h2.config_hash, h.config_hash);
        assert_eq!(t2, t);
        std::fs::write(&p, b"NOPE").unwrap();
        assert!(read_bin(&p).is_err());
    }

    #[test]
    fn manifest_id_ignores_output_location() {
        let inv = Invocation {
            subcommand: "shots".into(),
            config: "c.toml".into(),
            format: Format::Csv,
            scheme: Some("mw-mw".into()),
            state: None,
            shots: Some(10),
            seed: Some(1),
            sweep: None,
        };
        let a = RunManifest::id_for("h", &inv);
        let mut moved = inv.clone();
        moved.config = "/elsewhere/c.toml".into();
        assert_eq!(a, RunManifest::id_for("h", &moved));
        let mut other = inv;
        other.seed = Some(2);
        assert_ne!(a, RunManifest::id_for("h", &other));
    }
}
