//! Score tables: one score per document key, optionally with a standard
//! error and confidence interval. Read from and written to CSV.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::DocKey;
use crate::error::{Error, Result};
use crate::wordscores::{TrainingSet, WordscoresResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub key: DocKey,
    pub score: f64,
    pub std_error: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

impl ScoreRow {
    pub fn new(key: DocKey, score: f64) -> Self {
        ScoreRow {
            key,
            score,
            std_error: None,
            ci: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreTable {
    rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn new(rows: Vec<ScoreRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for row in &rows {
            if !seen.insert(&row.key) {
                return Err(Error::DuplicateKey(row.key.clone()));
            }
            if !row.score.is_finite() {
                return Err(Error::NonFinite(format!("score for {}", row.key)));
            }
        }
        Ok(ScoreTable { rows })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (DocKey, f64)>) -> Result<Self> {
        ScoreTable::new(pairs.into_iter().map(|(k, s)| ScoreRow::new(k, s)).collect())
    }

    pub fn rows(&self) -> &[ScoreRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, key: &DocKey) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| &r.key == key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &DocKey> {
        self.rows.iter().map(|r| &r.key)
    }

    /// Rows whose year is in `years`.
    pub fn filter_years(&self, years: &[i32]) -> ScoreTable {
        ScoreTable {
            rows: self
                .rows
                .iter()
                .filter(|r| years.contains(&r.key.year))
                .cloned()
                .collect(),
        }
    }

    pub fn sorted_by_key(&self) -> ScoreTable {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.key.cmp(&b.key));
        ScoreTable { rows }
    }

    pub fn to_training_set(&self) -> Result<TrainingSet> {
        TrainingSet::new(self.rows.iter().map(|r| (r.key.clone(), r.score)).collect())
    }

    /// Writes `entity,year,score` and, when any row carries them,
    /// `std_error,ci_low,ci_high` columns (empty where missing).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let extended = self.rows.iter().any(|r| r.std_error.is_some() || r.ci.is_some());
        let mut w = csv::Writer::from_writer(out);
        if extended {
            w.write_record(["entity", "year", "score", "std_error", "ci_low", "ci_high"])?;
        } else {
            w.write_record(["entity", "year", "score"])?;
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![r.key.entity.clone(), r.key.year.to_string(), r.score.to_string()];
            if extended {
                rec.push(opt(r.std_error));
                rec.push(opt(r.ci.map(|c| c.0)));
                rec.push(opt(r.ci.map(|c| c.1)));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is UTF-8")
    }

    /// Reads a CSV with `entity` and `year` columns and a score taken from
    /// `score` or, failing that, `rescaled`. `std_error`, `ci_low` and
    /// `ci_high` are picked up when present.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let entity = col("entity").ok_or_else(|| Error::parse(1, "missing `entity` column"))?;
        let year = col("year").ok_or_else(|| Error::parse(1, "missing `year` column"))?;
        let score = col("score")
            .or_else(|| col("rescaled"))
            .ok_or_else(|| Error::parse(1, "missing `score` column"))?;
        let (se, lo, hi) = (col("std_error"), col("ci_low"), col("ci_high"));
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let field = |c: usize| record.get(c).map(str::trim).unwrap_or("");
            let number = |c: usize| -> Result<f64> {
                let v: f64 = field(c)
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad number {:?}", field(c))))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite(format!("line {line}: {v}")))
                }
            };
            let optional = |c: Option<usize>| -> Result<Option<f64>> {
                match c {
                    Some(c) if !field(c).is_empty() => number(c).map(Some),
                    _ => Ok(None),
                }
            };
            let y: i32 = field(year)
                .parse()
                .map_err(|_| Error::parse(line, format!("bad year {:?}", field(year))))?;
            let key = DocKey::new(field(entity), y)?;
            let ci = match (optional(lo)?, optional(hi)?) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            };
            rows.push(ScoreRow {
                key,
                score: number(score)?,
                std_error: optional(se)?,
                ci,
            });
        }
        ScoreTable::new(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ScoreTable::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

impl From<&WordscoresResult> for ScoreTable {
    fn from(result: &WordscoresResult) -> Self {
        ScoreTable {
            rows: result
                .scores
                .iter()
                .map(|s| {
                    let r = s.rescaled.expect("result scores are rescaled");
                    ScoreRow {
                        key: s.key.clone(),
                        score: r.score,
                        std_error: Some(r.std_error),
                        ci: Some((r.ci_low, r.ci_high)),
                    }
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let text = "entity,year,score\nBR,1992,0.25\nAR,1992,-1.5\n";
        let t = ScoreTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.to_csv_string(), text);
    }

    #[test]
    fn extended_columns() {
        let rows = vec![ScoreRow {
            key: DocKey::new("X", 1).unwrap(),
            score: 0.1,
            std_error: Some(0.01),
            ci: Some((0.08, 0.12)),
        }];
        let t = ScoreTable::new(rows).unwrap();
        let back = ScoreTable::read_csv(t.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScoreTable::read_csv("entity,year,score\nA,x,1\n".as_bytes()).is_err());
        assert!(ScoreTable::read_csv("entity,year,score\nA,1,NaN\n".as_bytes()).is_err());
        assert!(ScoreTable::read_csv("entity,year,score\nA,1,1\nA,1,2\n".as_bytes()).is_err());
        assert!(ScoreTable::read_csv("entity,score\nA,1\n".as_bytes()).is_err());
    }
}
