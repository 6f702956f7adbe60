//! Stable 64-bit hashing for seeded synthesis.
//!
//! Everything deterministic in this crate (mock backends, hash embeddings)
//! keys its random streams off FNV-1a rather than `std`'s hasher, which is
//! randomized per process. The rule is published so tests can recompute
//! values independently: offset basis `0xcbf29ce484222325`, prime
//! `0x100000001b3`, one XOR-multiply round per byte.

pub const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_extend(FNV_OFFSET_BASIS, bytes)
}

/// Continue an FNV-1a stream, allowing multi-part keys without
/// concatenation.
pub fn fnv1a64_extend(state: u64, bytes: &[u8]) -> u64 {
    let mut hash = state;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Hash a sequence of parts with a single-byte separator between them, so
/// `["ab", "c"]` and `["a", "bc"]` key different streams.
pub fn fnv1a64_parts<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> u64 {
    let mut hash = FNV_OFFSET_BASIS;
    for part in parts {
        hash = fnv1a64_extend(hash, part);
        hash = fnv1a64_extend(hash, &[0x1f]);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vectors() {
        // Published FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn parts_are_separator_delimited() {
        assert_ne!(
            fnv1a64_parts([b"ab".as_slice(), b"c".as_slice()]),
            fnv1a64_parts([b"a".as_slice(), b"bc".as_slice()])
        );
    }
}
