//! Patient records, update sessions and the log that persists them.
//!
//! Every write goes to the log before it touches memory, so a failed append
//! leaves the store unchanged. Writes to one patient are serialized by a
//! per-patient lock; inference for a new observation runs outside it and is
//! checked against the record revision before anything is stored.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use oius::bn::Network;
use oius::detection::{contradiction_probability, detect, AndOrTree, DetectionError, Observation, ObservationSet, Timestamp};
use oius::recommender::{oora, predict, Prediction, RecommendationTree};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ServiceError, AND_PROPOSITION, OR_PROPOSITION};
use crate::wal::{Wal, WalEvent};

type Result<T> = std::result::Result<T, ServiceError>;

/// Source of commit and audit timestamps.
pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

/// Seconds since the Unix epoch from the system clock.
pub fn system_clock() -> Clock {
    Arc::new(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs() as Timestamp)
            .unwrap_or(0)
    })
}

/// One change to a record's observation set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuditAction {
    Insert { observation: Observation },
    Replace { observation: Observation },
    Delete { variable: String },
}

impl AuditAction {
    fn apply(&self, set: &mut ObservationSet) {
        match self {
            Self::Insert { observation } | Self::Replace { observation } => {
                set.insert(observation.clone());
            }
            Self::Delete { variable } => {
                set.remove(variable);
            }
        }
    }
}

/// An audit log entry. `digest` chains the previous entry's digest with this
/// entry's revision, timestamp and action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub revision: u64,
    pub timestamp: Timestamp,
    pub action: AuditAction,
    pub digest: String,
}

fn chain_digest(previous: &str, revision: u64, timestamp: Timestamp, action: &AuditAction) -> String {
    let payload = serde_json::to_string(action).expect("actions serialize");
    let mut h = Sha256::new();
    h.update(previous.as_bytes());
    h.update(format!("\n{revision}\n{timestamp}\n").as_bytes());
    h.update(payload.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("audit entry {0} has a digest that does not match its content")]
    Digest(usize),
    #[error("audit entry {0} breaks the revision sequence")]
    Revision(usize),
    #[error("audit log ends at revision {log}, record is at {record}")]
    Head { log: u64, record: u64 },
}

/// Everything stored for one person.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub observations: ObservationSet,
    pub revision: u64,
    pub audit_log: Vec<AuditEntry>,
}

impl PatientRecord {
    fn new(patient_id: String) -> Self {
        Self { patient_id, observations: ObservationSet::new(), revision: 0, audit_log: Vec::new() }
    }

    fn append(&mut self, timestamp: Timestamp, action: AuditAction) {
        let previous = self.audit_log.last().map_or("", |e| e.digest.as_str());
        let digest = chain_digest(previous, self.revision, timestamp, &action);
        action.apply(&mut self.observations);
        self.audit_log.push(AuditEntry { revision: self.revision, timestamp, action, digest });
    }

    /// Rebuilds the observation set from an empty one by applying the audit
    /// log, checking digests and revisions on the way.
    pub fn replay(&self) -> std::result::Result<ObservationSet, ReplayError> {
        let mut set = ObservationSet::new();
        let mut previous = "";
        let mut revision = 0;
        for (i, e) in self.audit_log.iter().enumerate() {
            if e.digest != chain_digest(previous, e.revision, e.timestamp, &e.action) {
                return Err(ReplayError::Digest(i));
            }
            if e.revision != revision && e.revision != revision + 1 || e.revision == 0 {
                return Err(ReplayError::Revision(i));
            }
            revision = e.revision;
            previous = &e.digest;
            e.action.apply(&mut set);
        }
        if revision != self.revision {
            return Err(ReplayError::Head { log: revision, record: self.revision });
        }
        Ok(set)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Open,
    Committed,
    Abandoned,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Open => "open",
            Self::Committed => "committed",
            Self::Abandoned => "abandoned",
        })
    }
}

/// What to do with one leaf of the recommendation tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Keep,
    Replace { state: String },
    Delete,
}

/// A pending or finished review of one new observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateSession {
    pub session_id: String,
    pub patient_id: String,
    pub new_observation: Observation,
    /// P(o_new | stored observations) when the session was opened.
    pub probability: f64,
    /// The recommendation tree in its text form; absent when the observation
    /// was consistent.
    #[serde(default, with = "tree_text")]
    pub recommendation: Option<RecommendationTree>,
    /// Keyed by leaf variable; a missing leaf counts as kept.
    pub decisions: BTreeMap<String, Decision>,
    pub state: SessionState,
    pub base_revision: u64,
    /// The committed session this one was opened after.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_of: Option<String>,
}

mod tree_text {
    use oius::recommender::RecommendationTree;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(tree: &Option<RecommendationTree>, s: S) -> Result<S::Ok, S::Error> {
        match tree {
            Some(t) => s.serialize_some(&t.to_text()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<RecommendationTree>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|text| RecommendationTree::from_text(&text).map_err(D::Error::custom))
            .transpose()
    }
}

/// A stored observation that the others make ε-contradictory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFinding {
    pub observation: Observation,
    pub probability: f64,
}

/// Result of a successful commit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitOutcome {
    pub record: PatientRecord,
    pub session: UpdateSession,
    /// Opened when the new observation is still ε-contradictory afterwards.
    pub residual_session: Option<UpdateSession>,
    pub sweep: Vec<SweepFinding>,
}

pub struct Store {
    net: Arc<Network>,
    epsilon: f64,
    clock: Clock,
    patients: RwLock<HashMap<String, Arc<Mutex<PatientRecord>>>>,
    sessions: RwLock<HashMap<String, UpdateSession>>,
    next_patient: AtomicU64,
    next_session: AtomicU64,
    wal: Option<Mutex<Wal>>,
}

fn poisoned<T>(_: T) -> ServiceError {
    ServiceError::Storage("lock poisoned by a panicked writer".into())
}

impl Store {
    /// A store that keeps nothing on disk.
    pub fn in_memory(net: Network, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ServiceError::Config(format!("epsilon {epsilon} is outside (0, 1)")));
        }
        Ok(Self {
            net: Arc::new(net),
            epsilon,
            clock: system_clock(),
            patients: RwLock::default(),
            sessions: RwLock::default(),
            next_patient: AtomicU64::new(1),
            next_session: AtomicU64::new(1),
            wal: None,
        })
    }

    /// Opens or creates the log at `path` and replays it.
    pub fn open(net: Network, epsilon: f64, path: &Path) -> Result<Self> {
        let mut store = Self::in_memory(net, epsilon)?;
        let (wal, events) = Wal::open(path)?;
        for event in events {
            store.restore(event)?;
        }
        for (id, handle) in store.patients.get_mut().map_err(poisoned)? {
            let record = handle.lock().map_err(poisoned)?;
            match record.replay() {
                Ok(set) if set == record.observations => {}
                Ok(_) => return Err(ServiceError::Storage(format!("record `{id}` does not match its audit log"))),
                Err(e) => return Err(ServiceError::Storage(format!("record `{id}`: {e}"))),
            }
        }
        store.wal = Some(Mutex::new(wal));
        Ok(store)
    }

    /// Replaces the clock used for commit and audit timestamps.
    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    /// The current time by the store's clock.
    pub fn now(&self) -> Timestamp {
        (self.clock)()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn restore(&mut self, event: WalEvent) -> Result<()> {
        let patients = self.patients.get_mut().map_err(poisoned)?;
        let sessions = self.sessions.get_mut().map_err(poisoned)?;
        match event {
            WalEvent::Create { record } => {
                bump(&self.next_patient, &record.patient_id, 'p');
                patients.insert(record.patient_id.clone(), Arc::new(Mutex::new(record)));
            }
            WalEvent::Commit { patient_id, revision, entries, session } => {
                let handle = patients
                    .get(&patient_id)
                    .ok_or_else(|| ServiceError::Storage(format!("commit for unknown patient `{patient_id}`")))?;
                let mut record = handle.lock().map_err(poisoned)?;
                for e in &entries {
                    e.action.apply(&mut record.observations);
                }
                record.audit_log.extend(entries);
                record.revision = revision;
                bump(&self.next_session, &session.session_id, 's');
                sessions.insert(session.session_id.clone(), session);
            }
            WalEvent::Session { session } => {
                bump(&self.next_session, &session.session_id, 's');
                sessions.insert(session.session_id.clone(), session);
            }
        }
        Ok(())
    }

    fn log(&self, event: &WalEvent) -> Result<()> {
        match &self.wal {
            Some(wal) => wal.lock().map_err(poisoned)?.append(event),
            None => Ok(()),
        }
    }

    fn handle(&self, patient_id: &str) -> Result<Arc<Mutex<PatientRecord>>> {
        self.patients
            .read()
            .map_err(poisoned)?
            .get(patient_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownPatient(patient_id.to_string()))
    }

    pub fn patient(&self, patient_id: &str) -> Result<PatientRecord> {
        let handle = self.handle(patient_id)?;
        let record = handle.lock().map_err(poisoned)?.clone();
        Ok(record)
    }

    pub fn session(&self, session_id: &str) -> Result<UpdateSession> {
        self.sessions
            .read()
            .map_err(poisoned)?
            .get(session_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(session_id.to_string()))
    }

    /// Sessions of one patient, oldest first.
    pub fn sessions_of(&self, patient_id: &str) -> Result<Vec<UpdateSession>> {
        let mut found: Vec<UpdateSession> = self
            .sessions
            .read()
            .map_err(poisoned)?
            .values()
            .filter(|s| s.patient_id == patient_id)
            .cloned()
            .collect();
        found.sort_by_key(|s| session_number(&s.session_id));
        Ok(found)
    }

    fn new_session_id(&self) -> String {
        format!("s{}", self.next_session.fetch_add(1, Ordering::Relaxed))
    }

    /// The recommendation tree at the precision of its text form, so that
    /// sessions read back from the log or the API compare equal.
    fn recommend(&self, tree: &AndOrTree, new_obs: &Observation) -> Result<RecommendationTree> {
        let full = oora(tree, &self.net, new_obs)?;
        RecommendationTree::from_text(&full.to_text()).map_err(|e| ServiceError::Inference(e.to_string()))
    }

    fn check_observation(&self, obs: &Observation) -> Result<()> {
        let v = self.net.var_id(&obs.variable)?;
        self.net.state_id(v, &obs.state)?;
        Ok(())
    }

    /// Creates a record, optionally seeded with observations. The seed must
    /// pass the consistency sweep.
    pub fn create_patient(&self, patient_id: Option<String>, initial: Vec<Observation>) -> Result<PatientRecord> {
        let mut seed = ObservationSet::new();
        for obs in initial {
            self.check_observation(&obs)?;
            if let Some(old) = seed.insert(obs) {
                return Err(ServiceError::InvalidObservation(format!("`{}` given twice", old.variable)));
            }
        }
        let findings = self.sweep_set(&seed)?;
        if !findings.is_empty() {
            return Err(ServiceError::InconsistentRecord(findings));
        }
        if let Some(id) = &patient_id {
            let valid = !id.is_empty()
                && id.len() <= 128
                && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
            if !valid {
                return Err(ServiceError::InvalidPatientId(id.clone()));
            }
        }

        let mut patients = self.patients.write().map_err(poisoned)?;
        let id = match patient_id {
            Some(id) if patients.contains_key(&id) => return Err(ServiceError::PatientExists(id)),
            Some(id) => id,
            None => loop {
                let id = format!("p{}", self.next_patient.fetch_add(1, Ordering::Relaxed));
                if !patients.contains_key(&id) {
                    break id;
                }
            },
        };
        let mut record = PatientRecord::new(id.clone());
        if !seed.is_empty() {
            record.revision = 1;
            let now = (self.clock)();
            for obs in seed.iter() {
                record.append(now, AuditAction::Insert { observation: obs });
            }
        }
        self.log(&WalEvent::Create { record: record.clone() })?;
        patients.insert(id, Arc::new(Mutex::new(record.clone())));
        Ok(record)
    }

    /// Runs detection on a new observation. A consistent one is stored at
    /// once and comes back in a committed session; a contradictory one opens
    /// a session carrying the recommendation tree.
    pub fn submit_observation(&self, patient_id: &str, new_obs: Observation) -> Result<UpdateSession> {
        self.check_observation(&new_obs)?;
        let handle = self.handle(patient_id)?;
        loop {
            let (stored, revision) = {
                let r = handle.lock().map_err(poisoned)?;
                (r.observations.clone(), r.revision)
            };
            if stored.get(&new_obs.variable).is_some_and(|o| o.state == new_obs.state) {
                return Err(ServiceError::DuplicateObservation {
                    variable: new_obs.variable.clone(),
                    state: new_obs.state.clone(),
                });
            }
            let (probability, tree) = match detect(&self.net, &stored, &new_obs, self.epsilon) {
                Ok(found) => (found.probability, found.tree),
                // improbable on its own: no stored observation is to blame
                Err(DetectionError::NoCandidates { probability }) => (probability, None),
                Err(e) => return Err(e.into()),
            };

            let mut session = UpdateSession {
                session_id: String::new(),
                patient_id: patient_id.to_string(),
                new_observation: new_obs.clone(),
                probability,
                recommendation: None,
                decisions: BTreeMap::new(),
                state: SessionState::Open,
                base_revision: revision,
                residual_of: None,
            };
            if let Some(tree) = tree {
                session.recommendation = Some(self.recommend(&tree, &new_obs)?);
                session.session_id = self.new_session_id();
                let mut sessions = self.sessions.write().map_err(poisoned)?;
                self.log(&WalEvent::Session { session: session.clone() })?;
                sessions.insert(session.session_id.clone(), session.clone());
                return Ok(session);
            }

            let mut record = handle.lock().map_err(poisoned)?;
            if record.revision != revision {
                continue;
            }
            session.session_id = self.new_session_id();
            session.state = SessionState::Committed;
            let mut next = record.clone();
            next.revision += 1;
            next.append((self.clock)(), store_action(&next.observations, new_obs.clone()));
            self.commit_logged(&mut record, next, session.clone())?;
            return Ok(session);
        }
    }

    /// Writes the commit to the log, then swaps in the new record and session.
    fn commit_logged(&self, record: &mut PatientRecord, next: PatientRecord, session: UpdateSession) -> Result<()> {
        let entries = next.audit_log[record.audit_log.len()..].to_vec();
        let mut sessions = self.sessions.write().map_err(poisoned)?;
        self.log(&WalEvent::Commit {
            patient_id: next.patient_id.clone(),
            revision: next.revision,
            entries,
            session: session.clone(),
        })?;
        *record = next;
        sessions.insert(session.session_id.clone(), session);
        Ok(())
    }

    /// Applies the decisions of an open session. Leaves without a decision
    /// are kept. Fails without changing anything when the session is not
    /// open, the record has moved on, or the decisions break a proposition.
    pub fn commit_session(&self, session_id: &str, decisions: BTreeMap<String, Decision>) -> Result<CommitOutcome> {
        let patient_id = self.session(session_id)?.patient_id;
        let handle = self.handle(&patient_id)?;
        let mut record = handle.lock().map_err(poisoned)?;
        let session = self.session(session_id)?;
        if session.state != SessionState::Open {
            return Err(ServiceError::SessionNotOpen {
                session_id: session_id.to_string(),
                state: session.state.to_string(),
            });
        }
        if record.revision != session.base_revision {
            return Err(ServiceError::StaleRevision { expected: session.base_revision, actual: record.revision });
        }
        let tree = session
            .recommendation
            .as_ref()
            .ok_or_else(|| ServiceError::InvalidDecision("session has no recommendation".into()))?;
        self.check_decisions(tree, &decisions)?;

        let now = (self.clock)();
        let mut next = record.clone();
        next.revision += 1;
        for leaf in tree.leaves() {
            match decisions.get(&leaf.variable) {
                Some(Decision::Delete) => next.append(now, AuditAction::Delete { variable: leaf.variable.clone() }),
                Some(Decision::Replace { state }) => next.append(
                    now,
                    AuditAction::Replace { observation: Observation::new(leaf.variable.clone(), state.clone(), now) },
                ),
                Some(Decision::Keep) | None => {}
            }
        }
        let new_obs = session.new_observation.clone();
        next.append(now, store_action(&next.observations, new_obs.clone()));
        let committed = UpdateSession { decisions, state: SessionState::Committed, ..session };
        self.commit_logged(&mut record, next.clone(), committed.clone())?;
        drop(record);

        let sweep = self.sweep_set(&next.observations)?;
        let residual_session = self.residual(&next, &new_obs, session_id)?;
        Ok(CommitOutcome { record: next, session: committed, residual_session, sweep })
    }

    fn check_decisions(&self, tree: &RecommendationTree, decisions: &BTreeMap<String, Decision>) -> Result<()> {
        for (variable, decision) in decisions {
            let leaf = tree
                .leaves()
                .find(|l| &l.variable == variable)
                .ok_or_else(|| ServiceError::InvalidDecision(format!("`{variable}` is not in the recommendation")))?;
            if let Decision::Replace { state } = decision {
                let v = self.net.var_id(variable)?;
                self.net
                    .state_id(v, state)
                    .map_err(|_| ServiceError::InvalidDecision(format!("`{state}` is not a state of `{variable}`")))?;
                if *state == leaf.old_state {
                    return Err(ServiceError::InvalidDecision(format!(
                        "replacing `{variable}` with its stored state `{state}`"
                    )));
                }
            }
        }
        let changed = |variable: &str| decisions.get(variable).is_some_and(|d| *d != Decision::Keep);
        for g in &tree.groups {
            if let Some(kept) = g.and_set.iter().find(|l| !changed(&l.variable)) {
                return Err(ServiceError::InvariantViolated {
                    proposition: AND_PROPOSITION,
                    detail: format!("`{}` is kept", kept.variable),
                });
            }
            if !g.or_set.is_empty() && !g.or_set.iter().any(|l| changed(&l.variable)) {
                let names: Vec<&str> = g.or_set.iter().map(|l| l.variable.as_str()).collect();
                return Err(ServiceError::InvariantViolated {
                    proposition: OR_PROPOSITION,
                    detail: format!("all of [{}] are kept", names.join(", ")),
                });
            }
        }
        Ok(())
    }

    /// Re-runs detection for the committed observation and opens a new
    /// session if a contradiction remains.
    fn residual(&self, record: &PatientRecord, new_obs: &Observation, after: &str) -> Result<Option<UpdateSession>> {
        let found = match detect(&self.net, &record.observations, new_obs, self.epsilon) {
            Ok(found) => found,
            Err(DetectionError::NoCandidates { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let Some(tree) = found.tree else { return Ok(None) };
        let session = UpdateSession {
            session_id: self.new_session_id(),
            patient_id: record.patient_id.clone(),
            new_observation: new_obs.clone(),
            probability: found.probability,
            recommendation: Some(self.recommend(&tree, new_obs)?),
            decisions: BTreeMap::new(),
            state: SessionState::Open,
            base_revision: record.revision,
            residual_of: Some(after.to_string()),
        };
        let mut sessions = self.sessions.write().map_err(poisoned)?;
        self.log(&WalEvent::Session { session: session.clone() })?;
        sessions.insert(session.session_id.clone(), session.clone());
        Ok(Some(session))
    }

    /// Closes an open session without touching the record.
    pub fn abandon_session(&self, session_id: &str) -> Result<UpdateSession> {
        let handle = self.handle(&self.session(session_id)?.patient_id)?;
        let _record = handle.lock().map_err(poisoned)?;
        let mut sessions = self.sessions.write().map_err(poisoned)?;
        let session = sessions.get(session_id).ok_or_else(|| ServiceError::UnknownSession(session_id.to_string()))?;
        if session.state != SessionState::Open {
            return Err(ServiceError::SessionNotOpen {
                session_id: session_id.to_string(),
                state: session.state.to_string(),
            });
        }
        let abandoned = UpdateSession { state: SessionState::Abandoned, ..session.clone() };
        self.log(&WalEvent::Session { session: abandoned.clone() })?;
        sessions.insert(session_id.to_string(), abandoned.clone());
        Ok(abandoned)
    }

    /// Most likely value of an unobserved variable for one patient.
    pub fn predict(&self, patient_id: &str, target: &str) -> Result<Prediction> {
        let record = self.patient(patient_id)?;
        Ok(predict(&self.net, &record.observations, target)?)
    }

    /// Stored observations of one patient that the others make
    /// ε-contradictory.
    pub fn sweep(&self, patient_id: &str) -> Result<Vec<SweepFinding>> {
        self.sweep_set(&self.patient(patient_id)?.observations)
    }

    /// Replays each observation as new against the rest. Observations that
    /// are ε-improbable even with nothing else known are not reported, since
    /// no other observation can be blamed for them.
    pub fn sweep_set(&self, set: &ObservationSet) -> Result<Vec<SweepFinding>> {
        let mut findings = Vec::new();
        for obs in set.iter() {
            let mut rest = set.clone();
            rest.remove(&obs.variable);
            let probability = contradiction_probability(&self.net, &rest, &obs)?;
            if probability <= self.epsilon
                && contradiction_probability(&self.net, &ObservationSet::new(), &obs)? > self.epsilon
            {
                findings.push(SweepFinding { observation: obs, probability });
            }
        }
        Ok(findings)
    }
}

fn store_action(set: &ObservationSet, observation: Observation) -> AuditAction {
    if set.contains(&observation.variable) {
        AuditAction::Replace { observation }
    } else {
        AuditAction::Insert { observation }
    }
}

fn session_number(id: &str) -> u64 {
    id.strip_prefix('s').and_then(|n| n.parse().ok()).unwrap_or(u64::MAX)
}

/// Keeps the id counter past `id` when it has the generated form.
fn bump(counter: &AtomicU64, id: &str, prefix: char) {
    if let Some(n) = id.strip_prefix(prefix).and_then(|n| n.parse::<u64>().ok()) {
        counter.fetch_max(n + 1, Ordering::Relaxed);
    }
}
