//! CSV ingestion and export (optionally gzip-compressed).

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use nalgebra::DMatrix;
use spike_core::ClassSample;

use crate::error::{HarnessError, Result};
use crate::json::format_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// One sample per row, one feature per column (plus the label column).
    #[default]
    SamplesAsRows,
    /// One feature per row; the first column names the row and the label
    /// row is the one named like the label column.
    FeaturesAsRows,
}

/// A labelled two-class dataset, observations as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    /// `p × n`.
    pub features: DMatrix<f64>,
    /// 1 or 2 per observation.
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    pub sample_names: Option<Vec<String>>,
    pub label_name: String,
    /// Position of the label among the header fields (samples-as-rows) or
    /// among the rows (features-as-rows).
    pub label_position: usize,
    pub source_path: String,
}

impl DatasetTable {
    pub fn new(features: DMatrix<f64>, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != features.ncols() {
            return Err(HarnessError::Ingestion(format!(
                "{} labels for {} observations",
                labels.len(),
                features.ncols()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1 && l != 2) {
            return Err(HarnessError::Ingestion(format!("label {l} is not 1 or 2")));
        }
        let feature_names = (1..=features.nrows()).map(|i| format!("f{i}")).collect();
        Ok(Self {
            features,
            labels,
            feature_names,
            sample_names: None,
            label_name: "label".into(),
            label_position: 0,
            source_path: String::new(),
        })
    }

    pub fn p(&self) -> usize {
        self.features.nrows()
    }

    pub fn n(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let n1 = self.labels.iter().filter(|&&l| l == 1).count();
        [n1, self.labels.len() - n1]
    }

    /// Column indices of one class (1 or 2), in file order.
    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.labels[j] == class).collect()
    }

    pub fn class_matrix(&self, class: u8) -> DMatrix<f64> {
        self.features.select_columns(&self.class_indices(class))
    }

    pub fn class_sample(&self, class: u8) -> Result<ClassSample> {
        ClassSample::new(self.class_matrix(class))
            .map_err(|e| HarnessError::Ingestion(format!("class {class} in {}: {e}", self.source_path)))
    }
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn Read>> {
    let io_err = |e| HarnessError::io(path.display().to_string(), e);
    let mut file = File::open(path).map_err(io_err)?;
    let mut magic = [0u8; 2];
    let got = file.read(&mut magic).map_err(io_err)?;
    let file = File::open(path).map_err(io_err)?;
    let reader = BufReader::with_capacity(1 << 20, file);
    if got == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

fn parse_value(field: &str, line: u64, col: usize, name: &str) -> Result<f64> {
    let t = field.trim();
    let v: f64 = t.parse().map_err(|_| {
        if t.is_empty() {
            HarnessError::Ingestion(format!("missing value at line {line}, column {col} ({name})"))
        } else {
            HarnessError::Ingestion(format!(
                "cannot parse '{t}' at line {line}, column {col} ({name})"
            ))
        }
    })?;
    if !v.is_finite() {
        return Err(HarnessError::Ingestion(format!(
            "non-finite value '{t}' at line {line}, column {col} ({name})"
        )));
    }
    Ok(v)
}

fn parse_label(field: &str, line: u64, col: usize) -> Result<u8> {
    match field.trim().parse::<f64>() {
        Ok(1.0) => Ok(1),
        Ok(2.0) => Ok(2),
        _ => Err(HarnessError::Ingestion(format!(
            "unknown label '{}' at line {line}, column {col}; expected 1 or 2",
            field.trim()
        ))),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    let at = e
        .position()
        .map(|p| format!(" at line {}", p.line()))
        .unwrap_or_default();
    HarnessError::Ingestion(format!("{}{at}: {e}", path.display()))
}

/// Reads a labelled CSV file. Gzip input is detected from its magic bytes.
pub fn ingest_csv(path: &Path, orientation: Orientation, label_col: &str) -> Result<DatasetTable> {
    let (table, found) = read_csv(path, orientation, label_col)?;
    if !found {
        return Err(HarnessError::Ingestion(format!(
            "{}: no {} named '{label_col}'",
            path.display(),
            match orientation {
                Orientation::SamplesAsRows => "column",
                Orientation::FeaturesAsRows => "row",
            }
        )));
    }
    Ok(table)
}

/// Observations to classify; labels are returned when the label column exists.
pub fn ingest_points(
    path: &Path,
    orientation: Orientation,
    label_col: &str,
) -> Result<(DMatrix<f64>, Option<Vec<u8>>)> {
    let (table, found) = read_csv(path, orientation, label_col)?;
    Ok((table.features, found.then_some(table.labels)))
}

fn read_csv(path: &Path, orientation: Orientation, label_col: &str) -> Result<(DatasetTable, bool)> {
    let reader = open_maybe_gz(path)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut table = match orientation {
        Orientation::SamplesAsRows => read_samples_as_rows(path, &mut rdr, header, label_col)?,
        Orientation::FeaturesAsRows => read_features_as_rows(path, &mut rdr, header, label_col)?,
    };
    table.0.source_path = path.display().to_string();
    Ok(table)
}

fn read_samples_as_rows<R: Read>(
    path: &Path,
    rdr: &mut csv::Reader<R>,
    header: Vec<String>,
    label_col: &str,
) -> Result<(DatasetTable, bool)> {
    let label_pos = header.iter().position(|h| h == label_col);
    let label_idx = label_pos.unwrap_or(usize::MAX);
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let p = feature_names.len();
    if p == 0 {
        return Err(HarnessError::Ingestion(format!(
            "{}: no feature columns",
            path.display()
        )));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0;
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(|e| csv_err(path, e))? {
        let line = record.position().map_or(0, |p| p.line());
        n += 1;
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                labels.push(parse_label(field, line, i + 1)?);
            } else {
                values.push(parse_value(field, line, i + 1, &header[i])?);
            }
        }
    }
    let features = DMatrix::from_vec(p, n, values);
    let table = DatasetTable {
        features,
        labels,
        feature_names,
        sample_names: None,
        label_name: label_col.to_string(),
        label_position: label_pos.unwrap_or(0),
        source_path: String::new(),
    };
    Ok((table, label_pos.is_some()))
}

fn read_features_as_rows<R: Read>(
    path: &Path,
    rdr: &mut csv::Reader<R>,
    header: Vec<String>,
    label_col: &str,
) -> Result<(DatasetTable, bool)> {
    if header.len() < 2 {
        return Err(HarnessError::Ingestion(format!(
            "{}: no sample columns",
            path.display()
        )));
    }
    let n = header.len() - 1;
    let mut values = Vec::new();
    let mut feature_names = Vec::new();
    let mut labels = None;
    let mut label_position = 0;
    let mut record = csv::StringRecord::new();
    let mut row = 0;
    while rdr.read_record(&mut record).map_err(|e| csv_err(path, e))? {
        let line = record.position().map_or(0, |p| p.line());
        let name = record.get(0).unwrap_or("").trim().to_string();
        if name == label_col && labels.is_none() {
            let l: Result<Vec<u8>> = record
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, f)| parse_label(f, line, i + 1))
                .collect();
            labels = Some(l?);
            label_position = row;
        } else {
            for (i, field) in record.iter().enumerate().skip(1) {
                values.push(parse_value(field, line, i + 1, &name)?);
            }
            feature_names.push(name);
        }
        row += 1;
    }
    let found = labels.is_some();
    let labels = labels.unwrap_or_default();
    let p = feature_names.len();
    if p == 0 {
        return Err(HarnessError::Ingestion(format!(
            "{}: no feature rows",
            path.display()
        )));
    }
    let table = DatasetTable {
        features: DMatrix::from_row_slice(p, n, &values),
        labels,
        feature_names,
        sample_names: Some(header[1..].to_vec()),
        label_name: label_col.to_string(),
        label_position,
        source_path: String::new(),
    };
    Ok((table, found))
}

/// Writes the table back as samples-as-rows CSV with the label column in
/// its original position. Values use the shortest round-trip representation.
pub fn export_csv<W: Write>(table: &DatasetTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let pos = table.label_position.min(table.p());
    let mut header: Vec<&str> = table.feature_names.iter().map(String::as_str).collect();
    header.insert(pos, &table.label_name);
    let wrap = |e: csv::Error| HarnessError::Ingestion(format!("cannot write CSV: {e}"));
    w.write_record(&header).map_err(wrap)?;
    for j in 0..table.n() {
        let mut row: Vec<String> = table.features.column(j).iter().map(|v| v.to_string()).collect();
        row.insert(pos, table.labels[j].to_string());
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| HarnessError::io("CSV output", e))
}

/// Writes a plain table with a header row; floats use 17 significant digits.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    let mut w = csv::Writer::from_writer(file);
    let wrap = |e: csv::Error| HarnessError::Config(format!("cannot write {}: {e}", path.display()));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(path.display().to_string(), e))
}

pub(crate) fn cell(v: f64) -> String {
    format_f64(v)
}
