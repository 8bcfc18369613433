use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use medcourse_core::exam::Letter;
use medcourse_core::scheduler::Grade;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Shown,
    Answered { letter: Letter },
    Revealed,
    Graded { grade: Grade },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Shown => "shown",
            EventKind::Answered { .. } => "answered",
            EventKind::Revealed => "revealed",
            EventKind::Graded { .. } => "graded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub user_id: String,
    pub item_id: String,
    #[serde(flatten)]
    pub kind: EventKind,
    pub at: DateTime<Utc>,
}

/// Append-only JSONL log, one event per line, flushed per append.
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let mut log = Self { path, file };
        log.repair_tail()?;
        Ok(log)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// A crash mid-write can leave a partial last line; cut it so the next
    /// append starts on a fresh line.
    fn repair_tail(&mut self) -> io::Result<()> {
        let bytes = fs::read(&self.path)?;
        if bytes.is_empty() || bytes.ends_with(b"\n") {
            return Ok(());
        }
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        log::warn!("{}: dropping {} bytes of incomplete event", self.path.display(), bytes.len() - keep);
        self.file.set_len(keep as u64)?;
        Ok(())
    }

    pub fn append_all(&mut self, events: &[SessionEvent]) -> io::Result<()> {
        let mut buf = Vec::new();
        for ev in events {
            serde_json::to_writer(&mut buf, ev)?;
            buf.push(b'\n');
        }
        self.file.write_all(&buf)?;
        self.file.flush()?;
        self.file.sync_data()
    }

    /// All complete events in order. A final line without its newline is a
    /// torn write and is ignored.
    pub fn read(path: impl AsRef<Path>) -> io::Result<Vec<SessionEvent>> {
        let path = path.as_ref();
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut reader = BufReader::new(File::open(path)?);
        let mut out = Vec::new();
        let mut line = String::new();
        let mut line_no = 0;
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            line_no += 1;
            if !line.ends_with('\n') {
                break;
            }
            if line.trim().is_empty() {
                continue;
            }
            let ev = serde_json::from_str(&line).map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("{}:{line_no}: {e}", path.display()))
            })?;
            out.push(ev);
        }
        Ok(out)
    }
}
