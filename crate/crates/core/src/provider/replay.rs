use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{CompletionProvider, FinishReason, GenerationRequest, GenerationResult, ProviderError};
use crate::prompt::Hyperparams;

const UNTAGGED_FILE: &str = "untagged";

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureRecord {
    pub key: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<FinishReason>,
}

impl FixtureRecord {
    pub fn new(request: &GenerationRequest, result: &GenerationResult) -> Self {
        Self {
            key: request.fixture_key(),
            prompt: request.prompt_text.clone(),
            temperature: request.hyperparams.temperature,
            max_tokens: request.hyperparams.max_tokens,
            text: result.text.clone(),
            finish_reason: Some(result.finish_reason),
        }
    }

    fn expected_key(&self) -> String {
        let hp = Hyperparams {
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            model_name: String::new(),
        };
        GenerationRequest::new(self.prompt.clone(), hp).fixture_key()
    }
}

/// Recorded exchanges, one JSON-lines file per task in a directory.
#[derive(Debug, Default)]
pub struct FixtureStore {
    dir: Option<PathBuf>,
    records: RwLock<HashMap<String, FixtureRecord>>,
    writer: Mutex<()>,
}

impl FixtureStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads every `*.jsonl` file in `dir`. The directory must exist.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir)
            .map_err(|e| ProviderError::Io(format!("{}: {e}", dir.display())))?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();

        let mut records: HashMap<String, FixtureRecord> = HashMap::new();
        for path in files {
            let text = fs::read_to_string(&path)
                .map_err(|e| ProviderError::Io(format!("{}: {e}", path.display())))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let at = || format!("{}:{}", path.display(), i + 1);
                let record: FixtureRecord = serde_json::from_str(line)
                    .map_err(|e| ProviderError::Io(format!("{}: {e}", at())))?;
                if record.key != record.expected_key() {
                    return Err(ProviderError::Io(format!(
                        "{}: key does not match prompt and hyperparameters",
                        at()
                    )));
                }
                match records.get(&record.key) {
                    Some(prev) if prev.text != record.text => {
                        return Err(ProviderError::FixtureConflict { key: record.key })
                    }
                    Some(_) => {}
                    None => {
                        records.insert(record.key.clone(), record);
                    }
                }
            }
        }
        Ok(Self {
            dir: Some(dir.to_path_buf()),
            records: RwLock::new(records),
            writer: Mutex::new(()),
        })
    }

    /// Like [`FixtureStore::open`], creating the directory if needed.
    pub fn open_or_create(dir: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| ProviderError::Io(format!("{}: {e}", dir.display())))?;
        Self::open(dir)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<FixtureRecord> {
        self.records.read().unwrap().get(key).cloned()
    }

    pub fn lookup(&self, request: &GenerationRequest) -> Option<FixtureRecord> {
        self.get(&request.fixture_key())
    }

    /// Stores an exchange. Re-recording identical text is a no-op.
    pub fn record(
        &self,
        request: &GenerationRequest,
        result: &GenerationResult,
    ) -> Result<(), ProviderError> {
        let _guard = self.writer.lock().unwrap();
        let record = FixtureRecord::new(request, result);
        if let Some(prev) = self.get(&record.key) {
            return if prev.text == record.text {
                Ok(())
            } else {
                Err(ProviderError::FixtureConflict { key: record.key })
            };
        }
        if let Some(dir) = &self.dir {
            let stem = request.task_kind().map_or(UNTAGGED_FILE, |t| t.as_str());
            let path = dir.join(format!("{stem}.jsonl"));
            let mut line = serde_json::to_string(&record).expect("records serialize");
            line.push('\n');
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .and_then(|mut f| f.write_all(line.as_bytes()))
                .map_err(|e| ProviderError::Io(format!("{}: {e}", path.display())))?;
        }
        self.records.write().unwrap().insert(record.key.clone(), record);
        Ok(())
    }
}

/// Serves recorded exchanges; misses are errors, never live calls.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    store: Arc<FixtureStore>,
}

impl ReplayProvider {
    pub fn new(store: Arc<FixtureStore>) -> Self {
        Self { store }
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ProviderError> {
        Ok(Self::new(Arc::new(FixtureStore::open(dir)?)))
    }

    pub fn store(&self) -> &Arc<FixtureStore> {
        &self.store
    }
}

impl CompletionProvider for ReplayProvider {
    fn id(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        request.validate()?;
        let key = request.fixture_key();
        let record = self
            .store
            .get(&key)
            .ok_or(ProviderError::FixtureMiss { key })?;
        Ok(GenerationResult {
            text: record.text,
            finish_reason: record.finish_reason.unwrap_or(FinishReason::Stop),
            provider: self.id().to_string(),
        })
    }
}

/// Passes requests to `inner` and records every successful exchange.
pub struct RecordingProvider<P> {
    inner: P,
    store: Arc<FixtureStore>,
    id: String,
}

impl<P: CompletionProvider> RecordingProvider<P> {
    pub fn new(inner: P, store: Arc<FixtureStore>) -> Self {
        let id = format!("record:{}", inner.id());
        Self { inner, store, id }
    }

    pub fn store(&self) -> &Arc<FixtureStore> {
        &self.store
    }
}

impl<P: CompletionProvider> CompletionProvider for RecordingProvider<P> {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        let result = self.inner.complete(request)?;
        self.store.record(request, &result)?;
        Ok(result)
    }
}
