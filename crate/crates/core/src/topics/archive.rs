//! Append-only store of run records, one JSON file per run.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::engine::{RunRecord, RUN_SCHEMA};
use crate::responses::SurveyId;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("run {0} already archived")]
    Exists(String),
    #[error("run {0} not found")]
    NotFound(String),
}

#[derive(Debug, Clone)]
pub struct RunArchive {
    dir: PathBuf,
}

impl RunArchive {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, run_id: &str) -> PathBuf {
        self.dir.join(format!("{run_id}.json"))
    }

    /// Writes a new record. Existing runs are never overwritten.
    pub fn append(&self, record: &RunRecord) -> Result<PathBuf, ArchiveError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ArchiveError::Io { path, source }
        };
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let path = self.path_for(&record.run_id);
        let mut file = match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(ArchiveError::Exists(record.run_id.clone()))
            }
            Err(e) => return Err(io(&path)(e)),
        };
        let mut text = serde_json::to_string_pretty(record).expect("record serializes");
        text.push('\n');
        file.write_all(text.as_bytes()).map_err(io(&path))?;
        Ok(path)
    }

    fn read(path: &Path) -> Result<RunRecord, ArchiveError> {
        let text = fs::read_to_string(path).map_err(|source| ArchiveError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|e| ArchiveError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if record.schema != RUN_SCHEMA {
            return Err(ArchiveError::Corrupt {
                path: path.to_path_buf(),
                message: format!("schema {:?}, expected {RUN_SCHEMA:?}", record.schema),
            });
        }
        Ok(record)
    }

    pub fn load(&self, run_id: &str) -> Result<RunRecord, ArchiveError> {
        let path = self.path_for(run_id);
        if !path.exists() {
            return Err(ArchiveError::NotFound(run_id.to_owned()));
        }
        Self::read(&path)
    }

    /// All runs ordered by start time, then run id. A missing directory is
    /// an empty archive.
    pub fn load_all(&self) -> Result<Vec<RunRecord>, ArchiveError> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => {
                return Err(ArchiveError::Io {
                    path: self.dir.clone(),
                    source,
                })
            }
        };
        let mut paths: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut runs = paths.iter().map(|p| Self::read(p)).collect::<Result<Vec<_>, _>>()?;
        runs.sort_by(|a, b| a.started_at.cmp(&b.started_at).then_with(|| a.run_id.cmp(&b.run_id)));
        Ok(runs)
    }

    pub fn for_survey(&self, survey: SurveyId) -> Result<Vec<RunRecord>, ArchiveError> {
        Ok(self
            .load_all()?
            .into_iter()
            .filter(|r| r.survey_id == survey)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::engine::{run_pipeline, EngineConfig, QuestionSpec};
    use crate::topics::mock::KeywordLlm;

    fn record(survey: SurveyId) -> RunRecord {
        let qs = [QuestionSpec { question_id: "q".into(), text: "Q".into() }];
        run_pipeline(&KeywordLlm::default(), survey, &[], &qs, &EngineConfig::default())
    }

    #[test]
    fn append_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let archive = RunArchive::new(dir.path().join("runs"));
        let a = record(SurveyId::RepositoryUrl);
        let b = record(SurveyId::DonationPlatformUrl);
        archive.append(&a).unwrap();
        archive.append(&b).unwrap();
        assert!(matches!(archive.append(&a), Err(ArchiveError::Exists(_))));
        assert_eq!(archive.load(&a.run_id).unwrap(), a);
        assert_eq!(archive.load_all().unwrap(), vec![a.clone(), b]);
        assert_eq!(archive.for_survey(SurveyId::RepositoryUrl).unwrap(), vec![a]);
        assert!(matches!(archive.load("nope"), Err(ArchiveError::NotFound(_))));
    }

    #[test]
    fn missing_dir_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(RunArchive::new(dir.path().join("x")).load_all().unwrap().is_empty());
    }
}
