//! File-backed store: content-addressed objects under `objects/` plus a single
//! JSON manifest that is replaced atomically on every change.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use textscale_core::BatchSpec;

use crate::error::StoreError;

const MANIFEST: &str = "manifest.json";
const OBJECTS: &str = "objects";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// A stored blob: its id, content hash, and path relative to the data dir.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRef {
    pub hash: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub name: String,
    pub matrix: ObjectRef,
    pub stoplist: ObjectRef,
    pub n_docs: usize,
    pub n_words: usize,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSetEntry {
    pub id: String,
    pub csv: ObjectRef,
    pub n_rows: usize,
    /// Set when this set was made by editing another.
    pub parent: Option<String>,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTableEntry {
    pub id: String,
    pub csv: ObjectRef,
    pub n_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub corpus_id: String,
    pub training_set_id: String,
    pub spec: BatchSpec,
    pub train_years: Option<Vec<i32>>,
    pub state: JobState,
    pub created_at: u64,
    pub started_at: Option<u64>,
    pub finished_at: Option<u64>,
    /// Score table id, present exactly when the job is done.
    pub result: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub next_job: u64,
    pub corpora: BTreeMap<String, CorpusEntry>,
    pub training_sets: BTreeMap<String, TrainingSetEntry>,
    pub score_tables: BTreeMap<String, ScoreTableEntry>,
    pub jobs: BTreeMap<String, JobRecord>,
}

impl Manifest {
    fn object_refs(&self) -> impl Iterator<Item = &ObjectRef> {
        self.corpora
            .values()
            .flat_map(|c| [&c.matrix, &c.stoplist])
            .chain(self.training_sets.values().map(|t| &t.csv))
            .chain(self.score_tables.values().map(|s| &s.csv))
    }
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    manifest: Mutex<Manifest>,
}

impl Store {
    /// Opens or creates a store, checking every referenced object against its
    /// hash.
    pub fn open(root: impl AsRef<Path>) -> Result<Store, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join(OBJECTS))?;
        let path = root.join(MANIFEST);
        let manifest: Manifest = if path.exists() {
            serde_json::from_slice(&fs::read(&path)?)?
        } else {
            Manifest::default()
        };
        for obj in manifest.object_refs() {
            let bytes =
                fs::read(root.join(&obj.path)).map_err(|e| StoreError::Corrupt(format!("{}: {e}", obj.path)))?;
            if sha256_hex(&bytes) != obj.hash {
                return Err(StoreError::Corrupt(format!("{} does not match its hash", obj.path)));
            }
        }
        let store = Store {
            root,
            manifest: Mutex::new(manifest),
        };
        if !path.exists() {
            store.update(|_| Ok(()))?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn snapshot(&self) -> Manifest {
        self.read(Manifest::clone)
    }

    pub fn read<T>(&self, f: impl FnOnce(&Manifest) -> T) -> T {
        f(&self.manifest.lock().expect("manifest lock"))
    }

    /// Applies `f` to a copy of the manifest and persists it; the in-memory
    /// manifest only changes once the new file is in place.
    pub fn update<T>(&self, f: impl FnOnce(&mut Manifest) -> Result<T, StoreError>) -> Result<T, StoreError> {
        let mut guard = self.manifest.lock().expect("manifest lock");
        let mut next = guard.clone();
        let out = f(&mut next)?;
        let bytes = serde_json::to_vec_pretty(&next)?;
        write_atomic(&self.root.join(MANIFEST), &bytes)?;
        *guard = next;
        Ok(out)
    }

    /// Stores `bytes` under their hash. Writing the same content twice is a
    /// no-op.
    pub fn put_object(&self, bytes: &[u8]) -> Result<ObjectRef, StoreError> {
        let hash = sha256_hex(bytes);
        let rel = format!("{OBJECTS}/{hash}");
        let path = self.root.join(&rel);
        if !path.exists() {
            write_atomic(&path, bytes)?;
        }
        Ok(ObjectRef { hash, path: rel })
    }

    pub fn get_object(&self, obj: &ObjectRef) -> Result<Vec<u8>, StoreError> {
        let bytes = fs::read(self.root.join(&obj.path))?;
        if sha256_hex(&bytes) != obj.hash {
            return Err(StoreError::Corrupt(format!("{} does not match its hash", obj.path)));
        }
        Ok(bytes)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Short id from a content hash.
pub fn content_id(prefix: &str, hash: &str) -> String {
    format!("{prefix}-{}", &hash[..16])
}
