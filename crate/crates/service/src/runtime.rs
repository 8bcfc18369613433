use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use medcourse_core::config::Config;
use medcourse_core::evalkit::AnnotationRecord;
use medcourse_core::exam::Letter;
use medcourse_core::genpipe::QuestionReport;
use medcourse_core::scheduler::Grade;
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::course::Course;
use crate::engine::{
    AnnotationIntakeError, GradeOutcome, ItemPayload, LearnerState, RevealPayload, SessionEngine,
    SessionError,
};
use crate::events::{EventLog, SessionEvent};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Annotation(#[from] AnnotationIntakeError),
    #[error("storage: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Data(String),
}

/// Files under a data directory.
#[derive(Debug, Clone)]
pub struct DataDir {
    pub root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn courses(&self) -> PathBuf {
        self.root.join("courses")
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn events(&self) -> PathBuf {
        self.root.join("events.jsonl")
    }

    pub fn snapshot(&self) -> PathBuf {
        self.root.join("snapshot.json")
    }

    pub fn annotations(&self) -> PathBuf {
        self.root.join("annotations.jsonl")
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn load_config(&self) -> Result<Config, ServiceError> {
        let path = self.config();
        if path.exists() {
            Config::load(&path).map_err(|e| ServiceError::Data(e.to_string()))
        } else {
            Ok(Config::default())
        }
    }
}

/// Every `*.json` file in `dir`, by file name.
pub fn read_json_dir<T: DeserializeOwned>(dir: &Path) -> Result<Vec<T>, ServiceError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| ServiceError::Data(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

/// The engine plus its durable state. Events reach the log before they
/// are applied in memory.
pub struct Runtime {
    engine: SessionEngine,
    log: EventLog,
    dir: DataDir,
    snapshot_every: u64,
}

impl Runtime {
    /// Loads courses and reports, restores the snapshot if any, then
    /// replays the log tail.
    pub fn open(dir: DataDir, snapshot_every: u64) -> Result<Self, ServiceError> {
        let config = dir.load_config()?;
        let courses: Vec<Course> = read_json_dir(&dir.courses())?;
        for c in &courses {
            c.validate().map_err(|e| ServiceError::Data(format!("course {}: {e}", c.course_id)))?;
        }
        let reports: Vec<QuestionReport> = read_json_dir(&dir.reports())?;
        let mut engine = SessionEngine::new(courses, reports, config.threshold(), config.daily_new_cap);

        let events = EventLog::read(dir.events())?;
        let mut skip = 0;
        if dir.snapshot().exists() {
            let state: LearnerState = serde_json::from_str(&fs::read_to_string(dir.snapshot())?)
                .map_err(|e| ServiceError::Data(format!("snapshot: {e}")))?;
            if state.events_applied as usize <= events.len() {
                skip = state.events_applied as usize;
                engine.restore(state);
            } else {
                log::warn!("snapshot is ahead of the event log; replaying from the start");
            }
        }
        engine.apply_all(&events[skip..])?;

        if dir.annotations().exists() {
            let text = fs::read_to_string(dir.annotations())?;
            for rec in AnnotationRecord::parse_jsonl(&text).map_err(ServiceError::Data)? {
                engine.store_annotation(rec);
            }
        }
        let log = EventLog::open(dir.events())?;
        Ok(Self {
            engine,
            log,
            dir,
            snapshot_every: snapshot_every.max(1),
        })
    }

    pub fn engine(&self) -> &SessionEngine {
        &self.engine
    }

    pub fn data_dir(&self) -> &DataDir {
        &self.dir
    }

    fn commit(&mut self, events: &[SessionEvent]) -> Result<(), ServiceError> {
        if events.is_empty() {
            return Ok(());
        }
        self.log.append_all(events)?;
        let before = self.engine.state().events_applied;
        self.engine.apply_all(events)?;
        let after = self.engine.state().events_applied;
        if after / self.snapshot_every != before / self.snapshot_every {
            self.snapshot()?;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Result<(), ServiceError> {
        let json = serde_json::to_vec(self.engine.state()).map_err(io::Error::other)?;
        write_atomic(&self.dir.snapshot(), &json)?;
        Ok(())
    }

    pub fn next(&mut self, user: &str, now: DateTime<Utc>) -> Result<Option<ItemPayload>, ServiceError> {
        match self.engine.next(user, now)? {
            Some((payload, events)) => {
                self.commit(&events)?;
                Ok(Some(payload))
            }
            None => Ok(None),
        }
    }

    pub fn answer(&mut self, user: &str, item: &str, letter: Letter, now: DateTime<Utc>) -> Result<RevealPayload, ServiceError> {
        let (reveal, events) = self.engine.answer(user, item, letter, now)?;
        self.commit(&events)?;
        Ok(reveal)
    }

    pub fn grade(&mut self, user: &str, item: &str, grade: Grade, now: DateTime<Utc>) -> Result<GradeOutcome, ServiceError> {
        let (outcome, events) = self.engine.grade(user, item, grade, now)?;
        self.commit(&events)?;
        Ok(outcome)
    }

    pub fn submit_annotation(&mut self, question_id: &str, record: AnnotationRecord) -> Result<(), ServiceError> {
        self.engine.check_annotation(question_id, &record)?;
        let mut line = serde_json::to_vec(&record).map_err(io::Error::other)?;
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(self.dir.annotations())?;
        f.write_all(&line)?;
        f.sync_data()?;
        self.engine.store_annotation(record);
        Ok(())
    }
}
