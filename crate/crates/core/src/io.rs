//! CSV data exchange and chain persistence.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MlabsError, Result};
use crate::model::{Dataset, ModelState};
use crate::sampler::{Chain, ChainKind, Diagnostics};

pub const CHAIN_FORMAT: &str = "mlabs-chain";
pub const CHAIN_VERSION: u32 = 1;

/// A numeric table with named columns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

fn parse_cell(s: &str, row: usize, col: &str) -> Result<f64> {
    let t = s.trim();
    let missing = t.is_empty() || matches!(t.to_ascii_lowercase().as_str(), "na" | "nan" | "null");
    if missing {
        return Err(MlabsError::Input(format!(
            "missing value in column '{col}' at data row {}",
            row + 1
        )));
    }
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            MlabsError::Input(format!(
                "non-numeric value '{t}' in column '{col}' at data row {}",
                row + 1
            ))
        })
}

pub fn read_table<P: AsRef<Path>>(path: P) -> Result<Table> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .zip(&headers)
            .map(|(cell, name)| parse_cell(cell, i, name))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MlabsError::Input("CSV has no data rows".into()));
    }
    Ok(Table { headers, rows })
}

/// Splits a table into predictors (every other column, in file order) and
/// the named response.
pub fn table_to_dataset(table: &Table, response: &str) -> Result<Dataset> {
    let r = table.column_index(response).ok_or_else(|| {
        MlabsError::Config(format!("response column '{response}' not found in CSV"))
    })?;
    let keep: Vec<usize> = (0..table.headers.len()).filter(|&j| j != r).collect();
    let names = keep.iter().map(|&j| table.headers[j].clone()).collect();
    let columns = keep
        .iter()
        .map(|&j| table.rows.iter().map(|row| row[j]).collect())
        .collect();
    let y = table.rows.iter().map(|row| row[r]).collect();
    Dataset::with_names(columns, y, names)
}

pub fn read_dataset<P: AsRef<Path>>(path: P, response: &str) -> Result<Dataset> {
    table_to_dataset(&read_table(path)?, response)
}

/// Predictor rows in the order of `names`; other columns are ignored.
pub fn read_predictors<P: AsRef<Path>>(path: P, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let table = read_table(path)?;
    let idx = names
        .iter()
        .map(|n| {
            table.column_index(n).ok_or_else(|| {
                MlabsError::Input(format!("predictor column '{n}' not found in CSV"))
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(table
        .rows
        .iter()
        .map(|row| idx.iter().map(|&j| row[j]).collect())
        .collect())
}

/// Writes predictors then the response under `response`.
pub fn write_dataset<P: AsRef<Path>>(path: P, data: &Dataset, response: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = data.names().iter().map(String::as_str).collect();
    header.push(response);
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.columns().iter().map(|c| c[i].to_string()).collect();
        rec.push(data.y()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes report rows with a header derived from the row type.
pub fn write_rows<P: AsRef<Path>, T: Serialize>(path: P, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table<P: AsRef<Path>>(path: P, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// First line of a chain file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainHeader {
    pub format: String,
    pub version: u32,
    pub kind: ChainKind,
    /// Predictor names in training order.
    pub names: Vec<String>,
}

impl ChainHeader {
    pub fn new(kind: ChainKind, names: Vec<String>) -> Self {
        ChainHeader {
            format: CHAIN_FORMAT.into(),
            version: CHAIN_VERSION,
            kind,
            names,
        }
    }
}

pub fn save_chain<P: AsRef<Path>>(path: P, chain: &Chain, names: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = ChainHeader::new(chain.kind, names.to_vec());
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for s in &chain.samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a chain file; diagnostics are not persisted and come back empty.
pub fn load_chain<P: AsRef<Path>>(path: P) -> Result<(ChainHeader, Chain)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| MlabsError::Input("chain file is empty".into()))??;
    let header: ChainHeader = serde_json::from_str(&first)?;
    if header.format != CHAIN_FORMAT {
        return Err(MlabsError::Input(format!(
            "not a chain file (format '{}')",
            header.format
        )));
    }
    if header.version != CHAIN_VERSION {
        return Err(MlabsError::Input(format!(
            "unsupported chain version {}",
            header.version
        )));
    }
    let mut samples = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: ModelState = serde_json::from_str(&line)?;
        if s.max_variable().is_some_and(|v| v >= header.names.len()) {
            return Err(MlabsError::Input(
                "chain sample uses an unknown predictor".into(),
            ));
        }
        samples.push(s);
    }
    let chain = Chain {
        kind: header.kind,
        samples,
        diagnostics: Diagnostics::default(),
    };
    Ok((header, chain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::KnotSequence;
    use crate::tensor::{AtomFactor, BasisAtom};

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "a,y,b\n1,2,3\n4,5,6.5\n").unwrap();
        let d = read_dataset(&p, "y").unwrap();
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.y(), &[2.0, 5.0]);
        assert_eq!(d.columns()[1], vec![3.0, 6.5]);
        assert!(matches!(read_dataset(&p, "z"), Err(MlabsError::Config(_))));

        let out = dir.path().join("o.csv");
        write_dataset(&out, &d, "y").unwrap();
        let back = read_dataset(&out, "y").unwrap();
        assert_eq!(back, d);

        std::fs::write(&p, "a,y\n1,\n").unwrap();
        assert!(matches!(read_dataset(&p, "y"), Err(MlabsError::Input(_))));
        std::fs::write(&p, "a,y\n1,NA\n").unwrap();
        assert!(matches!(read_dataset(&p, "y"), Err(MlabsError::Input(_))));
    }

    #[test]
    fn chain_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        let mut s = ModelState::new(0.1 + 0.2, 1.0 / 3.0, std::f64::consts::PI);
        s.atoms.push(
            BasisAtom::new(
                vec![AtomFactor::new(
                    1,
                    KnotSequence::new(2, vec![-0.1, 1.0 / 7.0, 0.5, 0.9]).unwrap(),
                )],
                -2.0 / 3.0,
            )
            .unwrap(),
        );
        let chain = Chain {
            kind: ChainKind::Regression,
            samples: vec![s.clone(), ModelState::new(1e-300, 5e-324, 1e300)],
            diagnostics: Diagnostics::default(),
        };
        save_chain(&p, &chain, &["a".into(), "b".into()]).unwrap();
        let (h, back) = load_chain(&p).unwrap();
        assert_eq!(h.names.len(), 2);
        assert_eq!(back.samples, chain.samples);

        // a chain referencing a predictor the header does not list is rejected
        save_chain(&p, &chain, &["a".into()]).unwrap();
        assert!(load_chain(&p).is_err());
    }
}
