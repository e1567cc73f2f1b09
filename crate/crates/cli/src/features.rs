//! Document feature tables as CSV: `entity,year,f1,...,fk`.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use textscale_core::DocKey;

pub struct Features {
    pub keys: Vec<DocKey>,
    pub rows: Vec<Vec<f64>>,
}

pub fn write<W: Write>(out: W, keys: &[DocKey], rows: &[Vec<f64>]) -> Result<()> {
    let k = rows.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["entity".to_string(), "year".to_string()];
    header.extend((1..=k).map(|t| format!("f{t}")));
    w.write_record(&header)?;
    for (key, row) in keys.iter().zip(rows) {
        let mut rec = vec![key.entity.clone(), key.year.to_string()];
        rec.extend(row.iter().map(|v| format!("{v:.17e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read<R: Read>(input: R) -> Result<Features> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "entity" || &headers[1] != "year" {
        bail!("feature file needs `entity,year` followed by at least one feature column");
    }
    let mut keys = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let year: i32 = rec[1]
            .trim()
            .parse()
            .with_context(|| format!("line {line}: bad year"))?;
        keys.push(DocKey::new(rec[0].trim(), year)?);
        let row = rec
            .iter()
            .skip(2)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("line {line}: bad number {v:?}"))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Features { keys, rows })
}
