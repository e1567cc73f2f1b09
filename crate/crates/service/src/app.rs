//! Service state and operations, independent of HTTP: corpora, training sets,
//! the job queue and its workers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use textscale_core::corpus::build_corpus;
use textscale_core::{
    run_batch, BatchSpec, CorpusInputs, FeatureCache, RawDocument, ScoreTable, SparseTermMatrix, TrainSplit,
};
use tokio::sync::mpsc;

use crate::error::{ApiError, StoreError};
use crate::store::{
    content_id, now_secs, sha256_hex, CorpusEntry, JobRecord, JobState, ScoreTableEntry, Store, TrainingSetEntry,
};

/// Message recorded on jobs that were running when the service stopped.
pub const INTERRUPTED: &str = "interrupted: the service stopped while this job was running";

/// One change to a training set. A `null` score removes the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    pub entity: String,
    pub year: i32,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRequest {
    pub corpus_id: String,
    pub training_set_id: String,
    pub spec: BatchSpec,
    #[serde(default)]
    pub train_years: Option<Vec<i32>>,
}

/// Corpus source: raw documents, or a term matrix in its text format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusUpload {
    pub name: String,
    #[serde(default)]
    pub documents: Option<Vec<DocumentUpload>>,
    #[serde(default)]
    pub matrix: Option<String>,
    #[serde(default)]
    pub stoplist: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentUpload {
    pub entity: String,
    pub year: i32,
    pub text: String,
}

struct LoadedCorpus {
    inputs: CorpusInputs,
    features: FeatureCache,
}

pub struct App {
    store: Store,
    queue: mpsc::UnboundedSender<String>,
    corpora: Mutex<HashMap<String, Arc<LoadedCorpus>>>,
}

impl App {
    /// Opens the store, fails jobs that were interrupted mid-run, re-queues
    /// the ones that never started, and starts `workers` workers. Must be
    /// called inside a tokio runtime.
    pub fn open(data_dir: impl AsRef<std::path::Path>, workers: usize) -> Result<Arc<App>, StoreError> {
        let store = Store::open(data_dir)?;
        let pending = store.update(|m| {
            let now = now_secs();
            for job in m.jobs.values_mut().filter(|j| j.state == JobState::Running) {
                job.state = JobState::Failed;
                job.finished_at = Some(now);
                job.error = Some(INTERRUPTED.into());
            }
            Ok(m.jobs
                .values()
                .filter(|j| j.state == JobState::Queued)
                .map(|j| j.id.clone())
                .collect::<Vec<_>>())
        })?;
        let (tx, rx) = mpsc::unbounded_channel();
        let app = Arc::new(App {
            store,
            queue: tx,
            corpora: Mutex::new(HashMap::new()),
        });
        let rx = Arc::new(tokio::sync::Mutex::new(rx));
        for _ in 0..workers.max(1) {
            tokio::spawn(worker(app.clone(), rx.clone()));
        }
        for id in pending {
            app.queue.send(id).expect("workers hold the receiver");
        }
        Ok(app)
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    // -- corpora --------------------------------------------------------------

    pub fn add_corpus(&self, upload: CorpusUpload) -> Result<CorpusEntry, ApiError> {
        let matrix = match (upload.documents, upload.matrix) {
            (Some(docs), None) => {
                let docs = docs
                    .into_iter()
                    .map(|d| {
                        Ok(RawDocument {
                            key: textscale_core::DocKey::new(d.entity, d.year).map_err(bad)?,
                            text: d.text,
                        })
                    })
                    .collect::<Result<Vec<_>, ApiError>>()?;
                build_corpus(&docs).map_err(bad)?
            }
            (None, Some(text)) => SparseTermMatrix::read_from(text.as_bytes()).map_err(bad)?,
            _ => return Err(ApiError::bad_request("give exactly one of `documents` or `matrix`")),
        };
        let stoplist: Vec<String> = upload.stoplist.iter().map(|w| w.trim().to_lowercase()).collect();
        let matrix_obj = self.store.put_object(matrix.to_text().as_bytes())?;
        let stop_obj = self.store.put_object(stoplist.join("\n").as_bytes())?;
        let id = content_id(
            "corpus",
            &sha256_hex(format!("{}:{}", matrix_obj.hash, stop_obj.hash).as_bytes()),
        );
        let entry = CorpusEntry {
            id: id.clone(),
            name: upload.name,
            matrix: matrix_obj,
            stoplist: stop_obj,
            n_docs: matrix.n_docs(),
            n_words: matrix.n_words(),
            created_at: now_secs(),
        };
        Ok(self
            .store
            .update(|m| Ok(m.corpora.entry(id).or_insert(entry).clone()))?)
    }

    pub fn corpus(&self, id: &str) -> Result<CorpusEntry, ApiError> {
        self.store
            .read(|m| m.corpora.get(id).cloned())
            .ok_or_else(|| ApiError::not_found("corpus", id))
    }

    fn loaded_corpus(&self, id: &str) -> Result<Arc<LoadedCorpus>, String> {
        if let Some(c) = self.corpora.lock().expect("corpus cache").get(id) {
            return Ok(c.clone());
        }
        let entry = self.corpus(id).map_err(|e| e.message)?;
        let matrix_bytes = self.store.get_object(&entry.matrix).map_err(|e| e.to_string())?;
        let matrix = SparseTermMatrix::read_from(matrix_bytes.as_slice()).map_err(|e| e.to_string())?;
        let stop_bytes = self.store.get_object(&entry.stoplist).map_err(|e| e.to_string())?;
        let stoplist = String::from_utf8_lossy(&stop_bytes)
            .lines()
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        let loaded = Arc::new(LoadedCorpus {
            inputs: CorpusInputs::new(matrix, stoplist),
            features: FeatureCache::default(),
        });
        let mut cache = self.corpora.lock().expect("corpus cache");
        Ok(cache.entry(id.to_string()).or_insert(loaded).clone())
    }

    // -- training sets --------------------------------------------------------

    /// Validates and stores a training-set CSV exactly as given.
    pub fn add_training_set(&self, csv: &[u8], parent: Option<String>) -> Result<TrainingSetEntry, ApiError> {
        let table = ScoreTable::read_csv(csv).map_err(bad)?;
        if table.is_empty() {
            return Err(ApiError::bad_request("training set has no rows"));
        }
        let obj = self.store.put_object(csv)?;
        let id = content_id("ts", &obj.hash);
        let entry = TrainingSetEntry {
            id: id.clone(),
            csv: obj,
            n_rows: table.len(),
            parent,
            created_at: now_secs(),
        };
        Ok(self
            .store
            .update(|m| Ok(m.training_sets.entry(id).or_insert(entry).clone()))?)
    }

    pub fn training_set(&self, id: &str) -> Result<TrainingSetEntry, ApiError> {
        self.store
            .read(|m| m.training_sets.get(id).cloned())
            .ok_or_else(|| ApiError::not_found("training set", id))
    }

    pub fn training_set_csv(&self, id: &str) -> Result<Vec<u8>, ApiError> {
        let entry = self.training_set(id)?;
        Ok(self.store.get_object(&entry.csv)?)
    }

    pub fn training_table(&self, id: &str) -> Result<ScoreTable, ApiError> {
        let csv = self.training_set_csv(id)?;
        ScoreTable::read_csv(csv.as_slice()).map_err(|e| ApiError::internal(e.to_string()))
    }

    /// Makes a new training set from `id` with `edits` applied; the original
    /// is never touched. Edits may change, add or (with a null score) remove
    /// rows; each key may appear once.
    pub fn clone_training_set(&self, id: &str, edits: &[Edit]) -> Result<TrainingSetEntry, ApiError> {
        let mut rows = self.training_table(id)?.rows().to_vec();
        let mut seen = std::collections::HashSet::new();
        for edit in edits {
            let key = textscale_core::DocKey::new(edit.entity.clone(), edit.year).map_err(bad)?;
            if !seen.insert(key.clone()) {
                return Err(ApiError::bad_request(format!("{key} is edited more than once")));
            }
            let pos = rows.iter().position(|r| r.key == key);
            match (edit.score, pos) {
                (Some(s), _) if !s.is_finite() => {
                    return Err(ApiError::bad_request(format!("score for {key} is not finite")))
                }
                (Some(s), Some(i)) => rows[i] = textscale_core::ScoreRow::new(key, s),
                (Some(s), None) => rows.push(textscale_core::ScoreRow::new(key, s)),
                (None, Some(i)) => {
                    rows.remove(i);
                }
                (None, None) => return Err(ApiError::bad_request(format!("cannot remove {key}: not in the set"))),
            }
        }
        if rows.is_empty() {
            return Err(ApiError::bad_request("edits would leave the training set empty"));
        }
        let table = ScoreTable::new(rows).map_err(bad)?;
        self.add_training_set(table.to_csv_string().as_bytes(), Some(id.to_string()))
    }

    // -- jobs -----------------------------------------------------------------

    pub fn submit_job(&self, req: JobRequest) -> Result<JobRecord, ApiError> {
        req.spec.validate().map_err(bad)?;
        let job = self.store.update(|m| {
            // Checked under the manifest lock so the references cannot race.
            if !m.corpora.contains_key(&req.corpus_id) {
                return Ok(Err(ApiError::not_found("corpus", &req.corpus_id)));
            }
            if !m.training_sets.contains_key(&req.training_set_id) {
                return Ok(Err(ApiError::not_found("training set", &req.training_set_id)));
            }
            m.next_job += 1;
            let job = JobRecord {
                id: format!("job-{:06}", m.next_job),
                corpus_id: req.corpus_id,
                training_set_id: req.training_set_id,
                spec: req.spec,
                train_years: req.train_years,
                state: JobState::Queued,
                created_at: now_secs(),
                started_at: None,
                finished_at: None,
                result: None,
                error: None,
            };
            m.jobs.insert(job.id.clone(), job.clone());
            Ok(Ok(job))
        })??;
        self.queue
            .send(job.id.clone())
            .map_err(|_| ApiError::internal("job queue is closed"))?;
        Ok(job)
    }

    pub fn job(&self, id: &str) -> Result<JobRecord, ApiError> {
        self.store
            .read(|m| m.jobs.get(id).cloned())
            .ok_or_else(|| ApiError::not_found("job", id))
    }

    /// The result table of a finished job, with its store entry.
    pub fn job_scores(&self, id: &str) -> Result<(ScoreTableEntry, ScoreTable), ApiError> {
        let job = self.job(id)?;
        let table_id = match (job.state, &job.result) {
            (JobState::Done, Some(t)) => t.clone(),
            (JobState::Failed, _) => {
                return Err(ApiError::conflict(format!(
                    "job {id} failed: {}",
                    job.error.unwrap_or_default()
                )))
            }
            _ => return Err(ApiError::conflict(format!("job {id} is not done yet"))),
        };
        let entry = self
            .store
            .read(|m| m.score_tables.get(&table_id).cloned())
            .ok_or_else(|| ApiError::internal(format!("score table {table_id} is missing")))?;
        let bytes = self.store.get_object(&entry.csv)?;
        let table = ScoreTable::read_csv(bytes.as_slice()).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok((entry, table))
    }

    fn start(&self, id: &str) -> Result<Option<JobRecord>, StoreError> {
        self.store.update(|m| {
            Ok(m.jobs.get_mut(id).filter(|j| j.state == JobState::Queued).map(|j| {
                j.state = JobState::Running;
                j.started_at = Some(now_secs());
                j.clone()
            }))
        })
    }

    /// Runs the batch for `job`, returning the result table as CSV and its
    /// row count.
    fn execute(&self, job: &JobRecord) -> Result<(String, usize), String> {
        let corpus = self.loaded_corpus(&job.corpus_id)?;
        let training = self.training_table(&job.training_set_id).map_err(|e| e.message)?;
        let split = TrainSplit::new(training, job.train_years.clone());
        let table = run_batch(&corpus.inputs, &job.spec, &split, &corpus.features).map_err(|e| e.to_string())?;
        Ok((table.to_csv_string(), table.len()))
    }

    fn finish(&self, id: &str, outcome: Result<(String, usize), String>) -> Result<(), StoreError> {
        let result = match outcome {
            Ok((csv, n_rows)) => {
                let obj = self.store.put_object(csv.as_bytes())?;
                Ok(ScoreTableEntry {
                    id: content_id("scores", &obj.hash),
                    csv: obj,
                    n_rows,
                })
            }
            Err(e) => Err(e),
        };
        self.store.update(|m| {
            let job = m.jobs.get_mut(id).expect("running jobs stay in the manifest");
            job.finished_at = Some(now_secs());
            match result {
                Ok(entry) => {
                    job.state = JobState::Done;
                    job.result = Some(entry.id.clone());
                    m.score_tables.entry(entry.id.clone()).or_insert(entry);
                }
                Err(e) => {
                    job.state = JobState::Failed;
                    job.error = Some(e);
                }
            }
            Ok(())
        })
    }
}

fn bad(e: impl std::fmt::Display) -> ApiError {
    ApiError::bad_request(e.to_string())
}

async fn worker(app: Arc<App>, rx: Arc<tokio::sync::Mutex<mpsc::UnboundedReceiver<String>>>) {
    loop {
        let Some(id) = rx.lock().await.recv().await else {
            return;
        };
        let job = match app.start(&id) {
            Ok(Some(job)) => job,
            Ok(None) => continue,
            Err(e) => {
                tracing::error!(job = %id, "could not start job: {e}");
                continue;
            }
        };
        let runner = app.clone();
        let outcome = tokio::task::spawn_blocking(move || runner.execute(&job))
            .await
            .unwrap_or_else(|e| Err(format!("job panicked: {e}")));
        if let Err(e) = app.finish(&id, outcome) {
            tracing::error!(job = %id, "could not record job outcome: {e}");
        }
    }
}
