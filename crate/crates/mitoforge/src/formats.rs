//! On-disk formats: manifest, predictions and labels CSV; weights, config
//! and provenance JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mitoforge_core::ensemble::{EnsemblePrediction, GreedyFit, LabeledSet, PredictionMatrix};
use mitoforge_core::pipeline::{AugmentConfig, ManifestRecord, Provenance};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{invalid, CliError, Result};

pub const MANIFEST_HEADER: [&str; 6] = ["id", "path", "label", "group", "domain", "split"];
pub const LABELS_HEADER: [&str; 3] = ["id", "label", "domain"];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn json_err(path: &Path) -> impl Fn(serde_json::Error) -> CliError + '_ {
    move |source| CliError::Json {
        path: path.to_path_buf(),
        source,
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn expect_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(csv_err(path))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(invalid!(
            "{}: expected header {}, found {}",
            path.display(),
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        ));
    }
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path: &Path, expected: &[&str]) -> Result<Vec<T>> {
    let mut reader = open_csv(path)?;
    expect_header(path, &mut reader, expected)?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_err(path))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    for row in rows {
        writer.serialize(row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    read_rows(path, &MANIFEST_HEADER)
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    write_rows(path, records)
}

/// Reads a predictions CSV (`id,prob_0,…,prob_{C-1}`) named after its file stem.
pub fn read_predictions(path: &Path) -> Result<PredictionMatrix> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    read_predictions_named(path, name)
}

pub fn read_predictions_named(path: &Path, name: String) -> Result<PredictionMatrix> {
    let mut reader = open_csv(path)?;
    let header = reader.headers().map_err(csv_err(path))?.clone();
    let classes = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("id".to_string())
        .chain((0..classes).map(|c| format!("prob_{c}")))
        .collect();
    if classes < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(invalid!(
            "{}: expected header id,prob_0,…,prob_{{C-1}} with C >= 2",
            path.display()
        ));
    }
    let mut ids = Vec::new();
    let mut probs = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        ids.push(row[0].to_string());
        for field in row.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| invalid!("{}: row {}: bad probability {field:?}", path.display(), line + 2))?;
            probs.push(v);
        }
    }
    PredictionMatrix::new(name, ids, classes, probs)
        .map_err(|e| invalid!("{}: {e}", path.display()))
}

pub fn write_predictions(path: &Path, pred: &EnsemblePrediction) -> Result<()> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain((0..pred.classes).map(|c| format!("prob_{c}")))
        .collect();
    writer.write_record(&header).map_err(csv_err(path))?;
    for (i, id) in pred.ids.iter().enumerate() {
        let row = &pred.probs[i * pred.classes..(i + 1) * pred.classes];
        let fields = std::iter::once(id.clone()).chain(row.iter().map(|v| v.to_string()));
        writer.write_record(fields).map_err(csv_err(path))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

#[derive(serde::Deserialize)]
struct LabelRow {
    id: String,
    label: usize,
    domain: String,
}

/// Reads a labels CSV (`id,label,domain`) for a `classes`-way problem.
pub fn read_labels(path: &Path, classes: usize) -> Result<LabeledSet> {
    let rows: Vec<LabelRow> = read_rows(path, &LABELS_HEADER)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut domains = Vec::with_capacity(rows.len());
    for r in rows {
        ids.push(r.id);
        labels.push(r.label);
        domains.push(r.domain);
    }
    LabeledSet::new(ids, labels, domains, classes).map_err(|e| invalid!("{}: {e}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(json_err(path))
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(json_err(path))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_config(path: &Path) -> Result<AugmentConfig> {
    read_json(path)
}

pub fn read_weights(path: &Path) -> Result<GreedyFit> {
    read_json(path)
}

/// One JSON object per line, in the given order.
pub fn write_provenance(path: &Path, log: &[Provenance]) -> Result<()> {
    let mut out = create(path)?;
    for p in log {
        serde_json::to_writer(&mut out, p).map_err(json_err(path))?;
        out.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_provenance(path: &Path) -> Result<Vec<Provenance>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(json_err(path)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleRow {
    pub draw: usize,
    pub index: usize,
    pub id: String,
}

pub fn write_samples(path: &Path, rows: &[SampleRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_samples(path: &Path) -> Result<Vec<SampleRow>> {
    read_rows(path, &["draw", "index", "id"])
}
