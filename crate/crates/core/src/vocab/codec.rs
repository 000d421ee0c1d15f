//! Byte-level surface codec.
//!
//! Byte-level BPE vocabularies store every token as text over a 256-character
//! alphabet: printable bytes keep their own codepoint and the remaining bytes
//! (control characters, space, DEL, NBSP, soft hyphen, ...) are shifted into
//! U+0100 and up, in ascending byte order. Space therefore shows up as `Ġ`
//! (U+0120) and newline as `Ċ` (U+010A).

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// Highest codepoint produced by the byte-level alphabet, plus one.
const INVERSE_LEN: usize = 256 + 68;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("codepoint {codepoint:?} at char {position} is outside the byte-level alphabet")]
    UnknownCodepoint { codepoint: char, position: usize },
}

/// Bijection between the 256 byte values and their printable codepoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteCodec {
    forward: [char; 256],
    inverse: [Option<u8>; INVERSE_LEN],
}

/// The standard byte-level alphabet.
pub static BYTE_LEVEL: ByteCodec = ByteCodec::byte_level();

const fn maps_to_itself(byte: u8) -> bool {
    matches!(byte, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF)
}

impl ByteCodec {
    pub const fn byte_level() -> Self {
        let mut forward = ['\0'; 256];
        let mut inverse = [None; INVERSE_LEN];
        let mut shifted = 0u32;
        let mut byte = 0usize;
        while byte < 256 {
            let codepoint = if maps_to_itself(byte as u8) {
                byte as u32
            } else {
                shifted += 1;
                255 + shifted
            };
            forward[byte] = match char::from_u32(codepoint) {
                Some(c) => c,
                None => panic!("byte-level codepoints are always valid"),
            };
            inverse[codepoint as usize] = Some(byte as u8);
            byte += 1;
        }
        Self { forward, inverse }
    }

    #[inline]
    pub fn encode_byte(&self, byte: u8) -> char {
        self.forward[byte as usize]
    }

    #[inline]
    pub fn decode_char(&self, c: char) -> Option<u8> {
        self.inverse.get(c as usize).copied().flatten()
    }

    /// Maps a byte string to its surface form.
    pub fn encode(&self, bytes: &[u8]) -> String {
        bytes.iter().map(|&b| self.encode_byte(b)).collect()
    }

    /// Maps a surface form back to raw bytes.
    pub fn decode(&self, surface: &str) -> Result<Vec<u8>, CodecError> {
        surface
            .chars()
            .enumerate()
            .map(|(position, codepoint)| {
                self.decode_char(codepoint)
                    .ok_or(CodecError::UnknownCodepoint { codepoint, position })
            })
            .collect()
    }

    /// Whether every char of `surface` belongs to the alphabet.
    pub fn is_encoded(&self, surface: &str) -> bool {
        surface.chars().all(|c| self.decode_char(c).is_some())
    }

    /// Iterates over the `(byte, codepoint)` pairs of the mapping.
    pub fn pairs(&self) -> impl Iterator<Item = (u8, char)> + '_ {
        self.forward.iter().enumerate().map(|(b, &c)| (b as u8, c))
    }
}

impl Default for ByteCodec {
    fn default() -> Self {
        Self::byte_level()
    }
}

/// Decodes `surface` with the standard byte-level alphabet.
pub fn decode_surface(surface: &str) -> Result<Vec<u8>, CodecError> {
    BYTE_LEVEL.decode(surface)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use proptest::prelude::*;

    #[test]
    fn forward_is_a_bijection() {
        let image: BTreeSet<char> = BYTE_LEVEL.pairs().map(|(_, c)| c).collect();
        assert_eq!(image.len(), 256);
        for (byte, c) in BYTE_LEVEL.pairs() {
            assert_eq!(BYTE_LEVEL.decode_char(c), Some(byte));
        }
    }

    #[test]
    fn printable_ascii_is_identity() {
        for b in b'!'..=b'~' {
            assert_eq!(BYTE_LEVEL.encode_byte(b), b as char);
        }
    }

    #[test]
    fn whitespace_lands_in_the_shifted_block() {
        assert_eq!(BYTE_LEVEL.encode_byte(b' '), '\u{0120}');
        assert_eq!(BYTE_LEVEL.encode_byte(b'\n'), '\u{010A}');
        assert_eq!(BYTE_LEVEL.encode_byte(b'\t'), '\u{0109}');
        assert_eq!(BYTE_LEVEL.encode_byte(0x00), '\u{0100}');
        assert_eq!(BYTE_LEVEL.encode_byte(0x7F), '\u{0121}');
        assert_eq!(BYTE_LEVEL.encode_byte(0xAD), '\u{0143}');
    }

    #[test]
    fn decodes_table_surfaces() {
        assert_eq!(decode_surface("Ġ(").unwrap(), b" (");
        assert_eq!(decode_surface("abc").unwrap(), b"abc");
        assert_eq!(decode_surface("Ċ").unwrap(), b"\n");
        assert_eq!(decode_surface(")ĊĊ").unwrap(), b")\n\n");
        // Fullwidth colon followed by '<'.
        assert_eq!(
            decode_surface("\u{00ef}\u{00bc}\u{013c}<").unwrap(),
            "\u{ff1a}<".as_bytes()
        );
    }

    #[test]
    fn rejects_codepoints_outside_the_alphabet() {
        let err = decode_surface("a▁b").unwrap_err();
        assert_eq!(
            err,
            CodecError::UnknownCodepoint {
                codepoint: '▁',
                position: 1
            }
        );
        assert!(!BYTE_LEVEL.is_encoded("<｜begin▁of▁sentence｜>"));
    }

    proptest! {
        #[test]
        fn bytes_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let surface = BYTE_LEVEL.encode(&bytes);
            prop_assert_eq!(BYTE_LEVEL.decode(&surface).unwrap(), bytes);
        }
    }
}
