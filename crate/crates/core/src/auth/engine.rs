use std::collections::HashMap;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::{
    decide, AuditEntry, AuditLog, AuthDecision, AuthError, CredentialHash, PolicyConfig, Reason,
    UserRecord, UserStore, MIN_SECRET_LEN,
};
use crate::beacon::{DeviceRole, FeatureEncoder, ScanSnapshot};
use crate::ml::Classifier;

/// Source of "now" in milliseconds since the Unix epoch.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> i64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> i64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0)
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicI64);

impl ManualClock {
    pub fn new(start_ms: i64) -> Self {
        Self(AtomicI64::new(start_ms))
    }

    pub fn set(&self, ms: i64) {
        self.0.store(ms, Ordering::SeqCst);
    }

    pub fn advance(&self, ms: i64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> i64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    AwaitingScans,
    Decided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthSession {
    pub session_id: String,
    pub username: String,
    pub state: SessionState,
    pub mobile_scan: Option<ScanSnapshot>,
    pub login_scan: Option<ScanSnapshot>,
    pub created_at: i64,
    pub decision: Option<AuthDecision>,
}

impl AuthSession {
    fn slot(&mut self, role: DeviceRole) -> &mut Option<ScanSnapshot> {
        match role {
            DeviceRole::Mobile => &mut self.mobile_scan,
            DeviceRole::Login => &mut self.login_scan,
        }
    }

    pub fn is_decided(&self) -> bool {
        self.state == SessionState::Decided
    }
}

/// Owns users, sessions and the trained model. A session's decision is
/// written once and never changes afterwards.
pub struct AuthEngine {
    users: UserStore,
    audit: AuditLog,
    sessions: Mutex<HashMap<String, Arc<Mutex<AuthSession>>>>,
    model: Arc<dyn Classifier + Send + Sync>,
    encoder: FeatureEncoder,
    policy: PolicyConfig,
    clock: Arc<dyn Clock>,
    credential_iterations: u32,
}

impl AuthEngine {
    pub fn new(
        model: Arc<dyn Classifier + Send + Sync>,
        encoder: FeatureEncoder,
        policy: PolicyConfig,
        users: UserStore,
        audit: AuditLog,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, AuthError> {
        policy.validate()?;
        Ok(Self {
            users,
            audit,
            sessions: Mutex::new(HashMap::new()),
            model,
            encoder,
            policy,
            clock,
            credential_iterations: CredentialHash::DEFAULT_ITERATIONS,
        })
    }

    /// PBKDF2 work factor for users enrolled from now on.
    pub fn with_credential_iterations(mut self, iterations: u32) -> Self {
        self.credential_iterations = iterations.max(1);
        self
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy
    }

    pub fn users(&self) -> &UserStore {
        &self.users
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn enroll(
        &self,
        username: &str,
        secret: &str,
        mobile_device_id: &str,
        login_device_id: &str,
    ) -> Result<UserRecord, AuthError> {
        for (field, value) in [
            ("username", username),
            ("mobile_device_id", mobile_device_id),
            ("login_device_id", login_device_id),
        ] {
            if value.trim().is_empty() {
                return Err(AuthError::InvalidRequest(format!("{field} must not be empty")));
            }
        }
        if secret.chars().count() < MIN_SECRET_LEN {
            return Err(AuthError::WeakSecret);
        }
        if self.users.get(username).is_some() {
            return Err(AuthError::DuplicateUser(username.to_string()));
        }
        let record = UserRecord {
            username: username.to_string(),
            credential_hash: CredentialHash::with_iterations(secret, self.credential_iterations),
            mobile_device_id: mobile_device_id.to_string(),
            login_device_id: login_device_id.to_string(),
            enrolled_at: self.clock.now_ms(),
        };
        self.users.insert(record.clone())?;
        let mut entry = AuditEntry::new(record.enrolled_at, "enroll");
        entry.username = Some(record.username.clone());
        self.audit.append(entry)?;
        Ok(record)
    }

    /// Checks the first factor and opens a session. A wrong secret yields a
    /// session that is already decided as a denial.
    pub fn begin(&self, username: &str, secret: &str) -> Result<AuthSession, AuthError> {
        let user = self
            .users
            .get(username)
            .ok_or_else(|| AuthError::UnknownUser(username.to_string()))?;
        let now = self.clock.now_ms();
        let mut session = AuthSession {
            session_id: uuid::Uuid::new_v4().to_string(),
            username: user.username.clone(),
            state: SessionState::AwaitingScans,
            mobile_scan: None,
            login_scan: None,
            created_at: now,
            decision: None,
        };
        let mut entry = AuditEntry::new(now, "begin");
        entry.username = Some(user.username.clone());
        entry.session_id = Some(session.session_id.clone());
        self.audit.append(entry)?;
        if !user.credential_hash.verify(secret) {
            self.finish(&mut session, AuthDecision::deny(Reason::FirstFactorFailed, now))?;
        }
        self.sessions
            .lock()
            .insert(session.session_id.clone(), Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn submit_scan(
        &self,
        session_id: &str,
        device_id: &str,
        snapshot: ScanSnapshot,
    ) -> Result<AuthSession, AuthError> {
        let handle = self.session(session_id)?;
        let mut session = handle.lock();
        self.expire(&mut session)?;
        if session.is_decided() {
            return Err(AuthError::SessionDecided);
        }
        let user = self
            .users
            .get(&session.username)
            .ok_or_else(|| AuthError::UnknownUser(session.username.clone()))?;
        let role = if device_id == user.mobile_device_id {
            DeviceRole::Mobile
        } else if device_id == user.login_device_id {
            DeviceRole::Login
        } else {
            return Err(AuthError::ForeignDevice(device_id.to_string()));
        };
        if snapshot.device_id() != device_id {
            return Err(AuthError::InvalidRequest(
                "snapshot device_id does not match the submitting device".into(),
            ));
        }
        if snapshot.role() != role {
            return Err(AuthError::InvalidRequest(format!(
                "device {device_id:?} is enrolled as {role}, snapshot says {}",
                snapshot.role()
            )));
        }
        let slot = session.slot(role);
        if slot.is_some() {
            return Err(AuthError::DuplicateRoleSubmission(role));
        }
        *slot = Some(snapshot);

        let mut entry = AuditEntry::new(self.clock.now_ms(), "submit_scan");
        entry.username = Some(session.username.clone());
        entry.session_id = Some(session.session_id.clone());
        entry.device_id = Some(device_id.to_string());
        self.audit.append(entry)?;

        if let (Some(m), Some(l)) = (&session.mobile_scan, &session.login_scan) {
            let verdict = decide(m, l, self.model.as_ref(), &self.encoder, &self.policy);
            let decision = AuthDecision::new(&verdict, self.clock.now_ms());
            self.finish(&mut session, decision)?;
        }
        Ok(session.clone())
    }

    pub fn status(&self, session_id: &str) -> Result<AuthSession, AuthError> {
        let handle = self.session(session_id)?;
        let mut session = handle.lock();
        self.expire(&mut session)?;
        Ok(session.clone())
    }

    /// Returns the decided session, or `MissingScan` while a scan is still
    /// outstanding and the session has not timed out.
    pub fn decide_session(&self, session_id: &str) -> Result<AuthSession, AuthError> {
        let session = self.status(session_id)?;
        if session.is_decided() {
            Ok(session)
        } else {
            Err(AuthError::MissingScan)
        }
    }

    fn session(&self, session_id: &str) -> Result<Arc<Mutex<AuthSession>>, AuthError> {
        self.sessions
            .lock()
            .get(session_id)
            .cloned()
            .ok_or_else(|| AuthError::UnknownSession(session_id.to_string()))
    }

    fn expire(&self, session: &mut AuthSession) -> Result<(), AuthError> {
        let now = self.clock.now_ms();
        if !session.is_decided() && now.saturating_sub(session.created_at) > self.policy.scan_timeout_ms {
            self.finish(session, AuthDecision::deny(Reason::MissingScan, now))?;
        }
        Ok(())
    }

    fn finish(&self, session: &mut AuthSession, decision: AuthDecision) -> Result<(), AuthError> {
        if session.is_decided() {
            return Err(AuthError::SessionDecided);
        }
        session.decision = Some(decision);
        session.state = SessionState::Decided;
        let mut entry = AuditEntry::new(decision.decided_at, "decided");
        entry.username = Some(session.username.clone());
        entry.session_id = Some(session.session_id.clone());
        entry.outcome = Some(decision.outcome);
        entry.reason = Some(decision.reason);
        entry.authentic_fraction = decision.authentic_fraction;
        self.audit.append(entry)
    }
}
