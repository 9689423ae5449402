use std::fmt;
use std::str::FromStr;

use crate::crypto::ChunkRef;
use crate::TAG_SIZE;

/// Handle of a stored content: the root node's reference and the tree height.
///
/// Binary form is 33 bytes (`root ‖ height`); text form is 64 hex digits, a
/// colon and the decimal height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentKey {
    pub root: ChunkRef,
    pub height: u8,
}

pub const CONTENT_KEY_LEN: usize = TAG_SIZE + 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed content key: {0}")]
pub struct ParseKeyError(String);

impl ContentKey {
    pub fn new(root: ChunkRef, height: u8) -> Self {
        Self { root, height }
    }

    pub fn to_bytes(&self) -> [u8; CONTENT_KEY_LEN] {
        let mut out = [0u8; CONTENT_KEY_LEN];
        out[..TAG_SIZE].copy_from_slice(self.root.as_bytes());
        out[TAG_SIZE] = self.height;
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ParseKeyError> {
        if bytes.len() != CONTENT_KEY_LEN {
            return Err(ParseKeyError(format!("{} bytes", bytes.len())));
        }
        let root = ChunkRef::from_slice(&bytes[..TAG_SIZE]).expect("length checked");
        Ok(Self::new(root, bytes[TAG_SIZE]))
    }
}

impl fmt::Display for ContentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.root.to_hex(), self.height)
    }
}

impl FromStr for ContentKey {
    type Err = ParseKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseKeyError(s.to_owned());
        let (hex_root, height) = s.trim().split_once(':').ok_or_else(bad)?;
        if hex_root.len() != 2 * TAG_SIZE {
            return Err(bad());
        }
        let root = hex::decode(hex_root).map_err(|_| bad())?;
        let height: u8 = height.parse().map_err(|_| bad())?;
        Ok(Self::new(ChunkRef::from_slice(&root).ok_or_else(bad)?, height))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_form() {
        let key = ContentKey::new(ChunkRef([0xab; 32]), 7);
        let text = key.to_string();
        assert_eq!(text, format!("{}:7", "ab".repeat(32)));
        assert_eq!(text.parse::<ContentKey>().unwrap(), key);
        assert!("abcd:1".parse::<ContentKey>().is_err());
        assert!(format!("{}:256", "ab".repeat(32)).parse::<ContentKey>().is_err());
        assert!("ab".repeat(32).parse::<ContentKey>().is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(root in any::<[u8; 32]>(), height in any::<u8>()) {
            let key = ContentKey::new(ChunkRef(root), height);
            let bytes = key.to_bytes();
            prop_assert_eq!(bytes.len(), 33);
            prop_assert_eq!(ContentKey::from_bytes(&bytes).unwrap(), key);
            prop_assert_eq!(key.to_string().parse::<ContentKey>().unwrap(), key);
        }
    }
}
