//! Spent-nullifier set backed by an append-only log.
//!
//! One entry per line, `0x` followed by 64 lowercase hex digits. A final line
//! without a newline is a torn write and is truncated on open. Any other bad
//! line is corruption.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;

use crate::field_poseidon::FieldElement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InsertOutcome {
    Fresh,
    Replay,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("nullifier log {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("nullifier log {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("append to nullifier log failed: {0}")]
    Append(#[source] io::Error),
}

trait LogSink: Send {
    fn append(&mut self, line: &[u8]) -> io::Result<()>;
}

impl LogSink for File {
    fn append(&mut self, line: &[u8]) -> io::Result<()> {
        self.write_all(line)?;
        self.sync_data()
    }
}

struct Inner {
    set: HashSet<FieldElement>,
    order: Vec<FieldElement>,
    sink: Option<Box<dyn LogSink>>,
}

/// Thread-safe set of spent nullifiers. `check_and_insert` is atomic with
/// respect to other callers in the process; a log file must have a single
/// owning process.
pub struct NullifierSet {
    inner: Mutex<Inner>,
    path: Option<PathBuf>,
}

impl std::fmt::Debug for NullifierSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NullifierSet")
            .field("path", &self.path)
            .field("len", &self.len())
            .finish()
    }
}

fn parse_line(line: &str) -> Option<FieldElement> {
    let digits = line.strip_prefix("0x")?;
    if digits.len() != 64 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    FieldElement::from_hex(line).ok()
}

impl NullifierSet {
    /// A registry with no backing file.
    pub fn in_memory() -> Self {
        Self::with_sink(None, Vec::new(), None)
    }

    fn with_sink(
        sink: Option<Box<dyn LogSink>>,
        order: Vec<FieldElement>,
        path: Option<PathBuf>,
    ) -> Self {
        Self {
            inner: Mutex::new(Inner {
                set: order.iter().copied().collect(),
                order,
                sink,
            }),
            path,
        }
    }

    /// Opens or creates the log at `path` and loads its entries.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| RegistryError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io_err)?;

        let mut content = Vec::new();
        file.read_to_end(&mut content).map_err(io_err)?;

        let complete = match content.iter().rposition(|&b| b == b'\n') {
            Some(i) => i + 1,
            None => 0,
        };
        if complete < content.len() {
            log::warn!(
                "nullifier log {}: truncating torn final line ({} bytes)",
                path.display(),
                content.len() - complete
            );
            file.set_len(complete as u64).map_err(io_err)?;
            file.seek(SeekFrom::End(0)).map_err(io_err)?;
        }

        let mut order = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in BufReader::new(&content[..complete]).lines().enumerate() {
            let line = line.map_err(io_err)?;
            let corrupt = |message: String| RegistryError::Corrupt {
                path: path.clone(),
                line: i + 1,
                message,
            };
            let n =
                parse_line(&line).ok_or_else(|| corrupt(format!("not a nullifier: {line:?}")))?;
            if !seen.insert(n) {
                return Err(corrupt(format!("duplicate entry {line}")));
            }
            order.push(n);
        }
        Ok(Self::with_sink(Some(Box::new(file)), order, Some(path)))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        // A panic while holding the lock cannot leave the set and log out of
        // step: the set is only updated after a successful append.
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Records `n` if unseen. A fresh entry is durably appended before this
    /// returns; if the append fails the set is left unchanged.
    pub fn check_and_insert(&self, n: FieldElement) -> Result<InsertOutcome, RegistryError> {
        let mut inner = self.lock();
        if inner.set.contains(&n) {
            return Ok(InsertOutcome::Replay);
        }
        if let Some(sink) = inner.sink.as_mut() {
            let line = format!("{}\n", n.to_hex());
            sink.append(line.as_bytes())
                .map_err(RegistryError::Append)?;
        }
        inner.set.insert(n);
        inner.order.push(n);
        Ok(InsertOutcome::Fresh)
    }

    pub fn contains(&self, n: &FieldElement) -> bool {
        self.lock().set.contains(n)
    }

    pub fn len(&self) -> usize {
        self.lock().order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries in insertion order.
    pub fn entries(&self) -> Vec<FieldElement> {
        self.lock().order.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn fe(i: u64) -> FieldElement {
        FieldElement::from_u64(i)
    }

    struct Failing;

    impl LogSink for Failing {
        fn append(&mut self, _: &[u8]) -> io::Result<()> {
            Err(io::Error::other("disk full"))
        }
    }

    #[test]
    fn absent_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let set = NullifierSet::open(dir.path().join("n.log")).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn fresh_then_replay() {
        let set = NullifierSet::in_memory();
        assert_eq!(set.check_and_insert(fe(1)).unwrap(), InsertOutcome::Fresh);
        assert_eq!(set.check_and_insert(fe(1)).unwrap(), InsertOutcome::Replay);
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn reopen_reproduces_set() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.log");
        {
            let set = NullifierSet::open(&path).unwrap();
            for i in 0..3 {
                set.check_and_insert(fe(i)).unwrap();
            }
        }
        let set = NullifierSet::open(&path).unwrap();
        assert_eq!(set.entries(), vec![fe(0), fe(1), fe(2)]);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
    }

    #[test]
    fn torn_line_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.log");
        std::fs::write(&path, format!("{}\n0x12ab", fe(5).to_hex())).unwrap();
        let set = NullifierSet::open(&path).unwrap();
        assert_eq!(set.entries(), vec![fe(5)]);
        set.check_and_insert(fe(6)).unwrap();
        drop(set);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n{}\n", fe(5).to_hex(), fe(6).to_hex()));
    }

    #[test]
    fn corrupt_line_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.log");
        std::fs::write(&path, format!("{}\nhello\n", fe(5).to_hex())).unwrap();
        match NullifierSet::open(&path) {
            Err(RegistryError::Corrupt { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected corruption, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_line_is_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.log");
        let h = fe(5).to_hex();
        std::fs::write(&path, format!("{h}\n{h}\n")).unwrap();
        assert!(matches!(
            NullifierSet::open(&path),
            Err(RegistryError::Corrupt { line: 2, .. })
        ));
    }

    #[test]
    fn failed_append_rolls_back() {
        let set = NullifierSet::with_sink(Some(Box::new(Failing)), Vec::new(), None);
        assert!(matches!(
            set.check_and_insert(fe(9)),
            Err(RegistryError::Append(_))
        ));
        assert!(!set.contains(&fe(9)));
        assert!(set.is_empty());
    }

    #[test]
    fn concurrent_inserts_are_exactly_once() {
        let set = Arc::new(NullifierSet::in_memory());
        let fresh: usize = std::thread::scope(|s| {
            let handles: Vec<_> = (0..4)
                .map(|_| {
                    let set = Arc::clone(&set);
                    s.spawn(move || {
                        (0..250u64)
                            .filter(|i| {
                                set.check_and_insert(fe(*i)).unwrap() == InsertOutcome::Fresh
                            })
                            .count()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        });
        assert_eq!(fresh, 250);
        assert_eq!(set.len(), 250);
    }
}
