use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::state::{AppState, Event};

const JOURNAL: &str = "journal.jsonl";
const SNAPSHOT: &str = "snapshot.json";

#[derive(Serialize, Deserialize)]
struct Entry {
    seq: u64,
    #[serde(flatten)]
    event: Event,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    state: AppState,
}

/// Append-only event log with periodic full snapshots.
///
/// Each entry carries a sequence number and the snapshot records the last
/// one it includes, so entries left in the log by a crash between writing
/// a snapshot and truncating the log are skipped on replay.
pub struct Journal {
    dir: PathBuf,
    file: File,
    seq: u64,
    since_snapshot: usize,
    snapshot_every: usize,
}

impl Journal {
    /// Opens `dir`, creating it if needed, and rebuilds the persisted state.
    pub fn open(dir: &Path, snapshot_every: usize) -> io::Result<(Self, AppState)> {
        fs::create_dir_all(dir)?;
        let (mut seq, mut state) = match fs::read(dir.join(SNAPSHOT)) {
            Ok(bytes) => {
                let snap: Snapshot = serde_json::from_slice(&bytes).map_err(invalid)?;
                (snap.seq, snap.state)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => (0, AppState::default()),
            Err(e) => return Err(e),
        };
        let mut since_snapshot = 0;
        let path = dir.join(JOURNAL);
        if path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&path)?).lines().collect::<Result<_, _>>()?;
            let last = lines.len().saturating_sub(1);
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: Entry = match serde_json::from_str(line) {
                    Ok(e) => e,
                    // a torn final write from a crash
                    Err(_) if i == last => break,
                    Err(e) => return Err(invalid(e)),
                };
                if entry.seq <= seq {
                    continue;
                }
                state.apply(entry.event).map_err(|m| io::Error::new(io::ErrorKind::InvalidData, m))?;
                seq = entry.seq;
                since_snapshot += 1;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((
            Self {
                dir: dir.to_owned(),
                file,
                seq,
                since_snapshot,
                snapshot_every,
            },
            state,
        ))
    }

    /// Durably appends `event`.
    pub fn append(&mut self, event: &Event) -> io::Result<()> {
        #[derive(Serialize)]
        struct EntryRef<'a> {
            seq: u64,
            #[serde(flatten)]
            event: &'a Event,
        }
        let mut line = serde_json::to_vec(&EntryRef {
            seq: self.seq + 1,
            event,
        })
        .map_err(invalid)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.seq += 1;
        self.since_snapshot += 1;
        Ok(())
    }

    /// Writes a snapshot of `state` once enough entries have accumulated.
    /// `state` must include every appended event.
    pub fn maybe_snapshot(&mut self, state: &AppState) -> io::Result<()> {
        if self.since_snapshot < self.snapshot_every {
            return Ok(());
        }
        self.snapshot(state)
    }

    pub fn snapshot(&mut self, state: &AppState) -> io::Result<()> {
        #[derive(Serialize)]
        struct SnapshotRef<'a> {
            seq: u64,
            state: &'a AppState,
        }
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        let bytes = serde_json::to_vec(&SnapshotRef { seq: self.seq, state }).map_err(invalid)?;
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(SNAPSHOT))?;
        self.file.set_len(0)?;
        self.file.sync_all()?;
        self.since_snapshot = 0;
        Ok(())
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }
}

fn invalid(e: serde_json::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e)
}

#[cfg(test)]
mod tests {
    use chrono::{TimeZone, Utc};

    use super::*;
    use crate::state::ChatMessage;
    use storygraph_core::story::{FormatMode, Project, Stakeholder, UserStory};

    fn events() -> Vec<Event> {
        let at = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let story = UserStory::create("st-1".into(), "p".into(), "u".into(), "As a cook, I want to see orders so that I can cook", at, FormatMode::Strict).unwrap();
        vec![
            Event::ProjectCreated {
                project: Project {
                    id: "p".into(),
                    name: "Diner".into(),
                    scenario_text: "run a diner".into(),
                    member_ids: Default::default(),
                },
                founders: vec![Stakeholder {
                    id: "u".into(),
                    display_name: "U".into(),
                }],
            },
            Event::StoriesPut {
                stories: vec![story],
                story_counter: 1,
            },
            Event::Chat {
                message: ChatMessage {
                    id: "m-1".into(),
                    project_id: "p".into(),
                    sender_id: "u".into(),
                    body: "hello".into(),
                    sent_at: at,
                    seq: 1,
                },
                chat_counter: 1,
            },
        ]
    }

    fn run(snapshot_every: usize) {
        let dir = tempfile::tempdir().unwrap();
        let (mut j, mut state) = Journal::open(dir.path(), snapshot_every).unwrap();
        for e in events() {
            j.append(&e).unwrap();
            state.apply(e).unwrap();
            j.maybe_snapshot(&state).unwrap();
        }
        let before = state.to_json();
        drop(j);
        let (j, recovered) = Journal::open(dir.path(), snapshot_every).unwrap();
        assert_eq!(recovered.to_json(), before);
        assert_eq!(j.seq(), 3);
    }

    #[test]
    fn replays_log_only() {
        run(100);
    }

    #[test]
    fn replays_snapshot_plus_tail() {
        run(2);
        run(1);
    }

    #[test]
    fn skips_entries_already_in_snapshot_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let (mut j, mut state) = Journal::open(dir.path(), 100).unwrap();
        for e in events() {
            j.append(&e).unwrap();
            state.apply(e).unwrap();
        }
        // snapshot written but log not truncated, then a torn line
        let log = fs::read(dir.path().join(JOURNAL)).unwrap();
        j.snapshot(&state).unwrap();
        let mut log = log;
        log.extend_from_slice(b"{\"seq\":4,\"ev");
        fs::write(dir.path().join(JOURNAL), log).unwrap();
        drop(j);
        let (_, recovered) = Journal::open(dir.path(), 100).unwrap();
        assert_eq!(recovered, state);
    }
}
