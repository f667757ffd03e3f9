//! Golden corpus of reference frames shared with other implementations.
//!
//! One `type_name hex` pair per line. Blank lines and lines starting with
//! `#` are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{decode_msg, AnyMessage, CodecError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenEntry {
    pub type_name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum GoldenError {
    #[error("line {line}: expected `type_name hex`")]
    Malformed { line: usize },
    #[error("line {line}: invalid hex")]
    Hex { line: usize },
    #[error("line {line}: {source}")]
    Decode {
        line: usize,
        #[source]
        source: CodecError,
    },
}

pub fn parse_corpus(text: &str) -> Result<Vec<GoldenEntry>, GoldenError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (Some(type_name), Some(hex), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(GoldenError::Malformed { line });
        };
        let bytes = decode_hex(hex).ok_or(GoldenError::Hex { line })?;
        entries.push(GoldenEntry {
            type_name: type_name.to_string(),
            bytes,
        });
    }
    Ok(entries)
}

/// Decode every entry of a corpus, reporting the first failing line.
pub fn decode_corpus(text: &str) -> Result<Vec<AnyMessage>, GoldenError> {
    let mut out = Vec::new();
    for (idx, entry) in parse_corpus(text)?.into_iter().enumerate() {
        let msg = decode_msg(&entry.type_name, &entry.bytes)
            .map_err(|source| GoldenError::Decode { line: idx + 1, source })?;
        out.push(msg);
    }
    Ok(out)
}

pub fn format_entry(type_name: &str, bytes: &[u8]) -> String {
    let mut s = String::with_capacity(type_name.len() + 1 + bytes.len() * 2);
    s.push_str(type_name);
    s.push(' ');
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn decode_hex(s: &str) -> Option<Vec<u8>> {
    if s.len() % 2 != 0 {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_skips_comments() {
        let text = "# header\n\nGripperCmd 0100000000\n";
        let entries = parse_corpus(text).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].bytes, vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse_corpus("Pose"), Err(GoldenError::Malformed { line: 1 })));
        assert!(matches!(parse_corpus("Pose 0g"), Err(GoldenError::Hex { line: 1 })));
        assert!(matches!(parse_corpus("Pose 012"), Err(GoldenError::Hex { line: 1 })));
    }

    #[test]
    fn format_is_lowercase_hex() {
        assert_eq!(format_entry("X", &[0xAB, 0x01]), "X ab01");
    }
}
