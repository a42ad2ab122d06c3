use std::collections::BTreeMap;
use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::{LedgerError, Result};

/// SHA-256 digest of a blob.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        Self(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).ok()?;
        Some(Self(out))
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", &self.to_hex()[..12])
    }
}

impl Serialize for ContentHash {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::from_hex(&s).ok_or_else(|| serde::de::Error::custom("expected 64 hex digits"))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlobStore {
    blobs: BTreeMap<ContentHash, Vec<u8>>,
}

impl BlobStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, blob: &[u8]) -> ContentHash {
        let hash = ContentHash::of(blob);
        self.blobs.entry(hash).or_insert_with(|| blob.to_vec());
        hash
    }

    pub fn get(&self, hash: &ContentHash) -> Result<&[u8]> {
        self.blobs
            .get(hash)
            .map(Vec::as_slice)
            .ok_or(LedgerError::BlobNotFound(*hash))
    }

    pub fn len(&self) -> usize {
        self.blobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blobs.is_empty()
    }
}

/// Thread-safe store shared by all peers of a session.
#[derive(Debug, Default)]
pub struct SharedStore(RwLock<BlobStore>);

impl SharedStore {
    pub fn put(&self, blob: &[u8]) -> ContentHash {
        self.0.write().expect("store lock poisoned").put(blob)
    }

    pub fn get(&self, hash: &ContentHash) -> Result<Vec<u8>> {
        self.0
            .read()
            .expect("store lock poisoned")
            .get(hash)
            .map(<[u8]>::to_vec)
    }

    pub fn len(&self) -> usize {
        self.0.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
