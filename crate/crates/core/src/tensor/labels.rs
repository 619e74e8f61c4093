use std::collections::HashSet;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Binary attribute table: one row per sample, one column per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeLabels {
    pub sample_ids: Vec<String>,
    pub attributes: Vec<String>,
    values: Array2<u8>,
}

impl AttributeLabels {
    pub fn new(sample_ids: Vec<String>, attributes: Vec<String>, values: Array2<u8>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &attributes {
            if !seen.insert(a.as_str()) {
                return Err(Error::Format(format!("duplicate attribute name `{a}`")));
            }
        }
        if values.dim() != (sample_ids.len(), attributes.len()) {
            return Err(Error::Format(format!(
                "label matrix is {:?}, expected ({}, {})",
                values.dim(),
                sample_ids.len(),
                attributes.len()
            )));
        }
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::Format(format!("non-binary label value {v}")));
        }
        Ok(Self {
            sample_ids,
            attributes,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn values(&self) -> &Array2<u8> {
        &self.values
    }

    pub fn column(&self, attr: &str) -> Result<Vec<u8>> {
        let idx = self
            .attributes
            .iter()
            .position(|a| a == attr)
            .ok_or_else(|| Error::AttributeNotFound(attr.to_string()))?;
        Ok(self.values.column(idx).to_vec())
    }
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<AttributeLabels> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labels(file).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_labels<R: std::io::Read>(reader: R) -> Result<AttributeLabels> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if header.is_empty() {
        return Err(Error::Format("missing header".into()));
    }
    if &header[0] != "sample_id" {
        return Err(Error::Format(format!(
            "first header column must be `sample_id`, found `{}`",
            &header[0]
        )));
    }
    let attributes: Vec<String> = header.iter().skip(1).map(str::to_string).collect();

    let mut sample_ids = Vec::new();
    let mut flat = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("row {}: {e}", row + 1)))?;
        sample_ids.push(record[0].to_string());
        for (col, cell) in record.iter().skip(1).enumerate() {
            let v = match cell.trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::Format(format!(
                        "row {}, attribute `{}`: non-binary cell {other:?}",
                        row + 1,
                        attributes[col]
                    )))
                }
            };
            flat.push(v);
        }
    }
    let values = Array2::from_shape_vec((sample_ids.len(), attributes.len()), flat)
        .map_err(|e| Error::Format(e.to_string()))?;
    AttributeLabels::new(sample_ids, attributes, values)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &AttributeLabels) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let io_err = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut header = vec!["sample_id".to_string()];
    header.extend(labels.attributes.iter().cloned());
    wtr.write_record(&header).map_err(io_err)?;
    for (i, id) in labels.sample_ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(labels.values.row(i).iter().map(|v| v.to_string()));
        wtr.write_record(&rec).map_err(io_err)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_valid_table() {
        let src = "sample_id,Male,Smiling\na,1,0\nb,0,0\nc,1,1\n";
        let labels = parse_labels(src.as_bytes()).unwrap();
        assert_eq!(labels.values().dim(), (3, 2));
        assert_eq!(labels.column("Smiling").unwrap(), vec![0, 0, 1]);
        assert_eq!(labels.sample_ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn rejects_non_binary_cell() {
        let err = parse_labels("sample_id,Male\na,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn header_only_is_empty_but_valid() {
        let labels = parse_labels("sample_id,Male,Hat\n".as_bytes()).unwrap();
        assert!(labels.is_empty());
        assert_eq!(labels.attributes.len(), 2);
    }

    #[test]
    fn rejects_duplicates_ragged_rows_and_missing_cells() {
        assert!(parse_labels("sample_id,A,A\nx,0,1\n".as_bytes()).is_err());
        assert!(parse_labels("sample_id,A,B\nx,0\n".as_bytes()).is_err());
        assert!(parse_labels("sample_id,A\nx,\n".as_bytes()).is_err());
    }

    #[test]
    fn unknown_attribute() {
        let labels = parse_labels("sample_id,A\nx,0\n".as_bytes()).unwrap();
        assert!(matches!(labels.column("B"), Err(Error::AttributeNotFound(_))));
    }
}
