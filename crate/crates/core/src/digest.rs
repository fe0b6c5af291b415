use alloc::string::String;
use core::fmt::Write;

use sha2::{Digest, Sha256};

/// Lower-case hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let out = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in out.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Digest of an ordered list of names, one per line.
pub fn names_digest<S: AsRef<str>>(names: &[S]) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_ref().as_bytes());
        h.update(b"\n");
    }
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}
