use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use super::record::AnnotationRecord;
use super::AnnotationError;

struct Inner {
    file: File,
    records: Vec<AnnotationRecord>,
}

/// Append-only JSONL store. Each accepted record is flushed to disk before
/// `append` returns; appends from concurrent callers are serialized.
pub struct AnnotationStore {
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for AnnotationStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnnotationStore").field("path", &self.path).finish()
    }
}

impl AnnotationStore {
    /// Opens or creates the store and replays existing records. A final line
    /// cut short by a crash is dropped and truncated away; a bad line
    /// anywhere else is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref().to_path_buf();
        let unwritable = |e: std::io::Error| AnnotationError::StoreUnwritable {
            path: path.display().to_string(),
            reason: e.to_string(),
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(unwritable)?;
        let mut content = String::new();
        file.read_to_string(&mut content)?;

        let mut records = Vec::new();
        let mut good_len = 0usize;
        let mut offset = 0usize;
        let mut lineno = 0usize;
        while offset < content.len() {
            lineno += 1;
            let rest = &content[offset..];
            let (line, complete) = match rest.find('\n') {
                Some(i) => (&rest[..i], true),
                None => (rest, false),
            };
            let next = offset + line.len() + usize::from(complete);
            if line.trim().is_empty() {
                offset = next;
                good_len = next;
                continue;
            }
            match serde_json::from_str::<AnnotationRecord>(line) {
                Ok(r) => {
                    records.push(r);
                    good_len = next;
                }
                Err(_) if !complete => break,
                Err(e) => {
                    return Err(AnnotationError::Corrupt {
                        line: lineno,
                        reason: e.to_string(),
                    })
                }
            }
            offset = next;
        }
        if good_len < content.len() {
            file.set_len(good_len as u64).map_err(unwritable)?;
        } else if !content.is_empty() && !content.ends_with('\n') {
            file.write_all(b"\n").map_err(unwritable)?;
        }
        file.seek(SeekFrom::End(0))?;
        file.sync_data().map_err(unwritable)?;
        Ok(Self {
            path,
            inner: Mutex::new(Inner { file, records }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates, timestamps if needed, and durably appends the record.
    pub fn append(&self, mut record: AnnotationRecord) -> Result<AnnotationRecord, AnnotationError> {
        record.validate()?;
        if record.timestamp == 0 {
            record.timestamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(1);
        }
        let mut line = serde_json::to_string(&record).map_err(|e| AnnotationError::Invalid(e.to_string()))?;
        line.push('\n');
        let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        let unwritable = |e: std::io::Error| AnnotationError::StoreUnwritable {
            path: self.path.display().to_string(),
            reason: e.to_string(),
        };
        inner.file.write_all(line.as_bytes()).map_err(unwritable)?;
        inner.file.sync_data().map_err(unwritable)?;
        inner.records.push(record.clone());
        Ok(record)
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).records.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
