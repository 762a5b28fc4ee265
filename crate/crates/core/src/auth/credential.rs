use pbkdf2::pbkdf2_hmac;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

const SALT_LEN: usize = 16;
const HASH_LEN: usize = 32;

/// PBKDF2-HMAC-SHA256 of a first-factor secret.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialHash {
    pub iterations: u32,
    #[serde(with = "hex")]
    pub salt: Vec<u8>,
    #[serde(with = "hex")]
    pub hash: Vec<u8>,
}

impl std::fmt::Debug for CredentialHash {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CredentialHash")
            .field("iterations", &self.iterations)
            .finish_non_exhaustive()
    }
}

fn derive(secret: &str, salt: &[u8], iterations: u32) -> Vec<u8> {
    let mut out = vec![0u8; HASH_LEN];
    pbkdf2_hmac::<Sha256>(secret.as_bytes(), salt, iterations, &mut out);
    out
}

impl CredentialHash {
    pub const DEFAULT_ITERATIONS: u32 = 100_000;

    pub fn new(secret: &str) -> Self {
        Self::with_iterations(secret, Self::DEFAULT_ITERATIONS)
    }

    /// Fresh random salt, caller-chosen work factor.
    pub fn with_iterations(secret: &str, iterations: u32) -> Self {
        let mut salt = vec![0u8; SALT_LEN];
        rand::rng().fill_bytes(&mut salt);
        Self::with_salt(secret, salt, iterations)
    }

    pub fn with_salt(secret: &str, salt: Vec<u8>, iterations: u32) -> Self {
        let hash = derive(secret, &salt, iterations);
        Self {
            iterations,
            salt,
            hash,
        }
    }

    /// Constant-time comparison against a candidate secret.
    pub fn verify(&self, secret: &str) -> bool {
        let candidate = derive(secret, &self.salt, self.iterations);
        candidate.len() == self.hash.len()
            && candidate
                .iter()
                .zip(&self.hash)
                .fold(0u8, |acc, (a, b)| acc | (a ^ b))
                == 0
    }
}
