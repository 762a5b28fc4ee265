use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::{AuthError, CredentialHash, Outcome, Reason};

pub const USERS_FILE: &str = "users.json";
pub const AUDIT_FILE: &str = "audit.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub username: String,
    pub credential_hash: CredentialHash,
    pub mobile_device_id: String,
    pub login_device_id: String,
    pub enrolled_at: i64,
}

impl UserRecord {
    pub fn owns_device(&self, device_id: &str) -> bool {
        self.mobile_device_id == device_id || self.login_device_id == device_id
    }
}

/// Enrolled users, optionally mirrored to `users.json` in a data directory.
///
/// Every change rewrites the file through a temporary sibling and a rename,
/// so a crash leaves either the old or the new contents.
#[derive(Debug)]
pub struct UserStore {
    users: RwLock<BTreeMap<String, UserRecord>>,
    path: Option<PathBuf>,
}

impl UserStore {
    pub fn in_memory() -> Self {
        Self {
            users: RwLock::new(BTreeMap::new()),
            path: None,
        }
    }

    /// Loads `users.json` from `dir`, creating the directory if needed.
    pub fn open(dir: &Path) -> Result<Self, AuthError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(USERS_FILE);
        let users = if path.exists() {
            let text = fs::read_to_string(&path)?;
            let list: Vec<UserRecord> = serde_json::from_str(&text)
                .map_err(|e| AuthError::Storage(format!("{}: {e}", path.display())))?;
            list.into_iter().map(|u| (u.username.clone(), u)).collect()
        } else {
            BTreeMap::new()
        };
        Ok(Self {
            users: RwLock::new(users),
            path: Some(path),
        })
    }

    pub fn get(&self, username: &str) -> Option<UserRecord> {
        self.users.read().get(username).cloned()
    }

    pub fn len(&self) -> usize {
        self.users.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds a user whose name and device ids are not yet taken.
    pub fn insert(&self, record: UserRecord) -> Result<(), AuthError> {
        let mut users = self.users.write();
        if users.contains_key(&record.username) {
            return Err(AuthError::DuplicateUser(record.username));
        }
        if record.mobile_device_id == record.login_device_id {
            return Err(AuthError::DuplicateDeviceId(record.login_device_id));
        }
        for id in [&record.mobile_device_id, &record.login_device_id] {
            if users.values().any(|u| u.owns_device(id)) {
                return Err(AuthError::DuplicateDeviceId(id.clone()));
            }
        }
        let name = record.username.clone();
        users.insert(name.clone(), record);
        if let Err(e) = self.persist(&users) {
            users.remove(&name);
            return Err(e);
        }
        Ok(())
    }

    fn persist(&self, users: &BTreeMap<String, UserRecord>) -> Result<(), AuthError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let list: Vec<&UserRecord> = users.values().collect();
        let text = serde_json::to_string_pretty(&list).map_err(|e| AuthError::Storage(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        {
            let mut f = File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// One line of the audit log. Never carries secrets or raw scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub at: i64,
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub username: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<Reason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authentic_fraction: Option<f64>,
}

impl AuditEntry {
    pub fn new(at: i64, event: &str) -> Self {
        Self {
            at,
            event: event.to_string(),
            username: None,
            session_id: None,
            device_id: None,
            outcome: None,
            reason: None,
            authentic_fraction: None,
        }
    }
}

/// Append-only JSON-lines log. Entries are also kept in memory.
#[derive(Debug)]
pub struct AuditLog {
    file: Option<Mutex<File>>,
    entries: Mutex<Vec<AuditEntry>>,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self {
            file: None,
            entries: Mutex::new(Vec::new()),
        }
    }

    pub fn open(dir: &Path) -> Result<Self, AuthError> {
        fs::create_dir_all(dir)?;
        let file = OpenOptions::new().create(true).append(true).open(dir.join(AUDIT_FILE))?;
        Ok(Self {
            file: Some(Mutex::new(file)),
            entries: Mutex::new(Vec::new()),
        })
    }

    pub fn append(&self, entry: AuditEntry) -> Result<(), AuthError> {
        if let Some(file) = &self.file {
            let mut line = serde_json::to_string(&entry).map_err(|e| AuthError::Storage(e.to_string()))?;
            line.push('\n');
            file.lock().write_all(line.as_bytes())?;
        }
        self.entries.lock().push(entry);
        Ok(())
    }

    pub fn entries(&self) -> Vec<AuditEntry> {
        self.entries.lock().clone()
    }
}
