use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{StudyConfig, PAGE_SIZE};
use super::session::{draw_session, Session};
use super::StudyError;
use crate::condition::{Algorithm, Modality};

/// Millisecond wall clock, injectable so tests and simulations control time.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        ManualClock(AtomicU64::new(start_ms))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }

    pub fn advance_secs(&self, secs: u64) {
        self.0.fetch_add(secs * 1000, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    AttentionFailed,
    TooFast,
    Incomplete,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::AttentionFailed => "attention_failed",
            ExclusionReason::TooFast => "too_fast",
            ExclusionReason::Incomplete => "incomplete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Inclusion {
    Included,
    Excluded(ExclusionReason),
}

impl Inclusion {
    pub fn is_included(self) -> bool {
        self == Inclusion::Included
    }
}

/// The exclusion rule. Attention is checked first, so an inattentive and
/// hasty participant is reported as `attention_failed`.
pub fn decide_inclusion(
    attention_answer: &str,
    expected: &str,
    duration_s: f64,
    min_duration_s: u64,
    complete: bool,
) -> Inclusion {
    if !complete {
        Inclusion::Excluded(ExclusionReason::Incomplete)
    } else if attention_answer.trim() != expected.trim() {
        Inclusion::Excluded(ExclusionReason::AttentionFailed)
    } else if duration_s < min_duration_s as f64 {
        Inclusion::Excluded(ExclusionReason::TooFast)
    } else {
        Inclusion::Included
    }
}

/// Body of the finalize call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalizeRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    pub expertise: u8,
    pub attention_answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub age: Option<u32>,
    pub gender: Option<String>,
    pub expertise: u8,
    pub attention_answer: String,
    pub duration_s: f64,
    pub inclusion: Inclusion,
}

/// One line of the on-disk log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogRecord {
    SessionCreated {
        session: Session,
    },
    RankingSubmitted {
        session_id: String,
        page: u8,
        ordered_ids: Vec<String>,
        at_ms: u64,
    },
    Finalized {
        session_id: String,
        at_ms: u64,
        record: ParticipantRecord,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PageItem {
    pub stimulus_id: String,
    pub audio: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PageView {
    pub page: u8,
    pub modality: Modality,
    pub items: Vec<PageItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRow {
    pub participant_id: String,
    pub stimulus_id: String,
    pub algorithm: Algorithm,
    pub modality: Modality,
    pub ranking: u8,
    pub expertise: u8,
    pub age: Option<u32>,
    pub gender: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionLine {
    pub participant_id: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResponseExport {
    pub rows: Vec<ExportRow>,
    pub exclusions: Vec<ExclusionLine>,
}

impl ResponseExport {
    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record([
                "participant_id",
                "stimulus_id",
                "algorithm",
                "modality",
                "ranking",
                "expertise",
                "age",
                "gender",
            ])
            .expect("in-memory write");
        }
        for row in &self.rows {
            w.serialize(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn exclusions_csv(&self) -> String {
        let mut out = String::from("participant_id,reason\n");
        for e in &self.exclusions {
            out.push_str(&format!("{},{}\n", e.participant_id, e.reason.as_str()));
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Entry {
    session: Session,
    rankings: [Option<Vec<String>>; 2],
    record: Option<ParticipantRecord>,
}

struct Log {
    path: PathBuf,
    file: File,
}

struct State {
    entries: Vec<Entry>,
    index: HashMap<String, usize>,
    rng: ChaCha8Rng,
    log: Option<Log>,
}

impl State {
    fn apply(&mut self, record: LogRecord) -> Result<(), String> {
        match record {
            LogRecord::SessionCreated { session } => {
                if self.index.contains_key(&session.id) {
                    return Err(format!("duplicate session {}", session.id));
                }
                self.index.insert(session.id.clone(), self.entries.len());
                self.entries.push(Entry {
                    session,
                    rankings: [None, None],
                    record: None,
                });
            }
            LogRecord::RankingSubmitted {
                session_id,
                page,
                ordered_ids,
                ..
            } => {
                let entry = self.entry_mut(&session_id)?;
                let slot = entry
                    .rankings
                    .get_mut(usize::from(page).wrapping_sub(1))
                    .ok_or("bad page")?;
                if slot.is_some() {
                    return Err(format!("page {page} of {session_id} submitted twice"));
                }
                *slot = Some(ordered_ids);
            }
            LogRecord::Finalized {
                session_id,
                at_ms,
                record,
            } => {
                let entry = self.entry_mut(&session_id)?;
                if entry.record.is_some() {
                    return Err(format!("{session_id} finalized twice"));
                }
                entry.session.finalized_at_ms = Some(at_ms);
                entry.record = Some(record);
            }
        }
        Ok(())
    }

    fn entry_mut(&mut self, id: &str) -> Result<&mut Entry, String> {
        let i = *self
            .index
            .get(id)
            .ok_or_else(|| format!("unknown session {id}"))?;
        Ok(&mut self.entries[i])
    }

    fn entry(&self, id: &str) -> Result<&Entry, StudyError> {
        self.index
            .get(id)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| StudyError::NotFound(id.to_string()))
    }

    /// Writes the record to disk before it becomes visible in memory.
    fn commit(&mut self, record: LogRecord) -> Result<(), StudyError> {
        if let Some(log) = &mut self.log {
            let mut line = serde_json::to_string(&record).expect("log records serialize");
            line.push('\n');
            log.file
                .write_all(line.as_bytes())
                .and_then(|_| log.file.flush())
                .map_err(|source| StudyError::Io {
                    path: log.path.clone(),
                    source,
                })?;
        }
        self.apply(record).map_err(StudyError::InvalidResponse)
    }
}

/// The study service core. All mutations go through one lock, so each
/// session sees its events in order, the log has one writer and exports
/// observe a consistent snapshot.
pub struct StudyEngine {
    config: StudyConfig,
    clock: Arc<dyn Clock>,
    state: Mutex<State>,
}

impl StudyEngine {
    pub fn in_memory(
        config: StudyConfig,
        seed: u64,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, StudyError> {
        config.validate()?;
        Ok(StudyEngine {
            config,
            clock,
            state: Mutex::new(State {
                entries: Vec::new(),
                index: HashMap::new(),
                rng: ChaCha8Rng::seed_from_u64(seed),
                log: None,
            }),
        })
    }

    /// Opens (or creates) the record log at `path`, replaying existing
    /// records to rebuild the index.
    pub fn open(
        config: StudyConfig,
        path: &Path,
        seed: u64,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, StudyError> {
        let engine = Self::in_memory(config, seed, clock)?;
        let io = |source| StudyError::Io {
            path: path.to_path_buf(),
            source,
        };
        {
            let mut state = engine.lock();
            if path.exists() {
                let reader = BufReader::new(File::open(path).map_err(io)?);
                for (n, line) in reader.lines().enumerate() {
                    let line = line.map_err(io)?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let fail = |reason: String| StudyError::Log {
                        line: n + 1,
                        reason,
                    };
                    let record: LogRecord =
                        serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
                    state.apply(record).map_err(fail)?;
                }
            }
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(io)?;
            state.log = Some(Log {
                path: path.to_path_buf(),
                file,
            });
        }
        Ok(engine)
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn session_count(&self) -> usize {
        self.lock().entries.len()
    }

    pub fn create_session(&self, consent: bool) -> Result<Session, StudyError> {
        if !consent {
            return Err(StudyError::ConsentRequired);
        }
        let mut state = self.lock();
        let mut session = loop {
            let s = draw_session(&self.config, &mut state.rng)?;
            if !state.index.contains_key(&s.id) {
                break s;
            }
        };
        session.created_at_ms = self.clock.now_ms();
        state.commit(LogRecord::SessionCreated {
            session: session.clone(),
        })?;
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<Session, StudyError> {
        Ok(self.lock().entry(id)?.session.clone())
    }

    pub fn ranking(&self, id: &str, page: u8) -> Result<Option<Vec<String>>, StudyError> {
        let slot = page_slot(page)?;
        Ok(self.lock().entry(id)?.rankings[slot].clone())
    }

    pub fn participant(&self, id: &str) -> Result<Option<ParticipantRecord>, StudyError> {
        Ok(self.lock().entry(id)?.record.clone())
    }

    pub fn page(&self, id: &str, page: u8) -> Result<PageView, StudyError> {
        let slot = page_slot(page)?;
        let state = self.lock();
        let session = &state.entry(id)?.session;
        let modality = session.page_modality(slot);
        let items = session.pages[slot]
            .iter()
            .map(|sid| PageItem {
                stimulus_id: sid.clone(),
                audio: self
                    .config
                    .stimulus(sid)
                    .map(|s| s.audio.get(modality).to_string())
                    .unwrap_or_default(),
            })
            .collect();
        Ok(PageView {
            page,
            modality,
            items,
        })
    }

    pub fn submit_ranking(
        &self,
        id: &str,
        page: u8,
        ordered_ids: Vec<String>,
    ) -> Result<(), StudyError> {
        let slot = page_slot(page)?;
        let mut state = self.lock();
        let entry = state.entry(id)?;
        if entry.session.finalized_at_ms.is_some() {
            return Err(StudyError::AlreadyFinalized);
        }
        if entry.rankings[slot].is_some() {
            return Err(StudyError::AlreadySubmitted(page));
        }
        validate_permutation(&entry.session.pages[slot], &ordered_ids)?;
        let at_ms = self.clock.now_ms();
        state.commit(LogRecord::RankingSubmitted {
            session_id: id.to_string(),
            page,
            ordered_ids,
            at_ms,
        })
    }

    pub fn finalize(&self, id: &str, request: FinalizeRequest) -> Result<Inclusion, StudyError> {
        if !(1..=6).contains(&request.expertise) {
            return Err(StudyError::InvalidResponse(format!(
                "expertise must be between 1 and 6, got {}",
                request.expertise
            )));
        }
        let mut state = self.lock();
        let entry = state.entry(id)?;
        if entry.record.is_some() {
            return Err(StudyError::AlreadyFinalized);
        }
        if let Some(missing) = entry.rankings.iter().position(Option::is_none) {
            return Err(StudyError::Incomplete(missing as u8 + 1));
        }
        let at_ms = self.clock.now_ms();
        let duration_s = at_ms.saturating_sub(entry.session.created_at_ms) as f64 / 1000.0;
        let inclusion = decide_inclusion(
            &request.attention_answer,
            &self.config.attention_check.expected,
            duration_s,
            self.config.min_duration_s,
            true,
        );
        let record = ParticipantRecord {
            age: request.age,
            gender: request.gender.filter(|g| !g.trim().is_empty()),
            expertise: request.expertise,
            attention_answer: request.attention_answer,
            duration_s,
            inclusion,
        };
        state.commit(LogRecord::Finalized {
            session_id: id.to_string(),
            at_ms,
            record,
        })?;
        Ok(inclusion)
    }

    /// Analysis rows for included participants and one exclusion line for
    /// every other session, in creation order. Sessions never finalized are
    /// reported as incomplete.
    pub fn export(&self) -> ResponseExport {
        let state = self.lock();
        let mut out = ResponseExport::default();
        for entry in &state.entries {
            let participant_id = entry.session.id.clone();
            let record = match &entry.record {
                Some(r) if r.inclusion.is_included() => r,
                Some(r) => {
                    let Inclusion::Excluded(reason) = r.inclusion else {
                        unreachable!()
                    };
                    out.exclusions.push(ExclusionLine {
                        participant_id,
                        reason,
                    });
                    continue;
                }
                None => {
                    out.exclusions.push(ExclusionLine {
                        participant_id,
                        reason: ExclusionReason::Incomplete,
                    });
                    continue;
                }
            };
            for (slot, ranking) in entry.rankings.iter().enumerate() {
                let modality = entry.session.page_modality(slot);
                for (pos, sid) in ranking.iter().flatten().enumerate() {
                    let algorithm = self
                        .config
                        .stimulus(sid)
                        .map(|s| s.algorithm)
                        .expect("validated stimulus id");
                    out.rows.push(ExportRow {
                        participant_id: participant_id.clone(),
                        stimulus_id: sid.clone(),
                        algorithm,
                        modality,
                        ranking: pos as u8 + 1,
                        expertise: record.expertise,
                        age: record.age,
                        gender: record.gender.clone(),
                    });
                }
            }
        }
        out
    }
}

fn page_slot(page: u8) -> Result<usize, StudyError> {
    match page {
        1 | 2 => Ok(usize::from(page) - 1),
        other => Err(StudyError::InvalidPage(other)),
    }
}

fn validate_permutation(page: &[String], ordered: &[String]) -> Result<(), StudyError> {
    if ordered.len() != PAGE_SIZE {
        return Err(StudyError::InvalidResponse(format!(
            "expected {PAGE_SIZE} ids, got {}",
            ordered.len()
        )));
    }
    for (i, id) in ordered.iter().enumerate() {
        if !page.contains(id) {
            return Err(StudyError::InvalidResponse(format!(
                "`{id}` is not on this page"
            )));
        }
        if ordered[..i].contains(id) {
            return Err(StudyError::InvalidResponse(format!("`{id}` appears twice")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::config::sample_config;

    fn engine() -> (StudyEngine, Arc<ManualClock>) {
        let clock = Arc::new(ManualClock::new(1_000_000));
        (
            StudyEngine::in_memory(sample_config(), 7, clock.clone()).unwrap(),
            clock,
        )
    }

    fn request(answer: &str) -> FinalizeRequest {
        FinalizeRequest {
            age: Some(30),
            gender: None,
            expertise: 3,
            attention_answer: answer.into(),
        }
    }

    fn complete(engine: &StudyEngine, id: &str) {
        let s = engine.session(id).unwrap();
        for page in 1..=2u8 {
            engine
                .submit_ranking(id, page, s.pages[page as usize - 1].clone())
                .unwrap();
        }
    }

    #[test]
    fn consent_gates_sessions() {
        let (e, _) = engine();
        assert!(matches!(
            e.create_session(false),
            Err(StudyError::ConsentRequired)
        ));
        assert_eq!(e.session_count(), 0);
    }

    #[test]
    fn ranking_validation() {
        let (e, _) = engine();
        let s = e.create_session(true).unwrap();
        let mut short = s.pages[0].clone();
        short.pop();
        assert!(matches!(
            e.submit_ranking(&s.id, 1, short),
            Err(StudyError::InvalidResponse(_))
        ));
        assert!(matches!(
            e.submit_ranking(&s.id, 1, s.pages[1].clone()),
            Err(StudyError::InvalidResponse(_))
        ));
        let mut dup = s.pages[0].clone();
        dup[3] = dup[0].clone();
        assert!(e.submit_ranking(&s.id, 1, dup).is_err());
        e.submit_ranking(&s.id, 1, s.pages[0].clone()).unwrap();
        assert_eq!(e.ranking(&s.id, 1).unwrap(), Some(s.pages[0].clone()));
        assert!(matches!(
            e.submit_ranking(&s.id, 1, s.pages[0].clone()),
            Err(StudyError::AlreadySubmitted(1))
        ));
        assert!(matches!(
            e.submit_ranking("nope", 1, vec![]),
            Err(StudyError::NotFound(_))
        ));
        assert!(matches!(
            e.finalize(&s.id, request("Agree")),
            Err(StudyError::Incomplete(2))
        ));
    }

    #[test]
    fn duration_threshold() {
        let (e, clock) = engine();
        let cases = [
            (400, "Agree", Inclusion::Included),
            (209, "Agree", Inclusion::Excluded(ExclusionReason::TooFast)),
            (210, "Agree", Inclusion::Included),
            (
                600,
                "Disagree",
                Inclusion::Excluded(ExclusionReason::AttentionFailed),
            ),
        ];
        for (secs, answer, want) in cases {
            let s = e.create_session(true).unwrap();
            complete(&e, &s.id);
            clock.advance_secs(secs);
            assert_eq!(e.finalize(&s.id, request(answer)).unwrap(), want);
            assert!(matches!(
                e.finalize(&s.id, request(answer)),
                Err(StudyError::AlreadyFinalized)
            ));
        }
        let export = e.export();
        assert_eq!(export.rows.len(), 16);
        assert_eq!(export.exclusions.len(), 2);
    }

    #[test]
    fn log_replay_rebuilds_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        let clock = Arc::new(ManualClock::new(0));
        let first = StudyEngine::open(sample_config(), &path, 1, clock.clone()).unwrap();
        let s = first.create_session(true).unwrap();
        complete(&first, &s.id);
        clock.advance_secs(300);
        first.finalize(&s.id, request("Agree")).unwrap();
        first.create_session(true).unwrap();
        let before = first.export();
        drop(first);

        let second = StudyEngine::open(sample_config(), &path, 2, clock).unwrap();
        assert_eq!(second.export(), before);
        assert_eq!(before.rows.len(), 8);
        assert_eq!(before.exclusions[0].reason, ExclusionReason::Incomplete);
    }
}
