//! Deterministic word tokenizer.
//!
//! Text is split on whitespace; inside each whitespace-delimited chunk, runs of
//! alphanumeric characters form one token, every other character (punctuation,
//! symbols) becomes a token of its own, and characters of scripts written
//! without spaces (CJK and friends) fall back to one token per character.
//!
//! Tokens that are not preceded by whitespace are *glued*. In string form a
//! glued token carries the [`GLUE`] prefix so that [`detokenize`] can restore
//! the original spacing: `"Shoe size (cm)"` becomes
//! `["Shoe", "size", "(", "##cm", "##)"]` and joins back exactly.

/// Prefix marking a token attached to its predecessor without whitespace.
pub const GLUE: &str = "##";

/// One token with its character offsets in the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    /// Character offset of the first character.
    pub start: usize,
    /// Character offset one past the last character.
    pub end: usize,
    pub glued: bool,
}

impl Piece {
    /// String form used in token sequences, with the glue prefix if attached.
    pub fn marked(&self) -> String {
        if self.glued {
            format!("{GLUE}{}", self.text)
        } else {
            self.text.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tokenizer;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Space,
    Word,
    Single,
}

fn is_unspaced_script(c: char) -> bool {
    matches!(c as u32,
        0x0E00..=0x0EFF      // Thai, Lao
        | 0x1000..=0x109F    // Myanmar
        | 0x2E80..=0x9FFF    // CJK radicals, kana, CJK unified
        | 0xA000..=0xA4CF    // Yi
        | 0xAC00..=0xD7AF    // Hangul syllables
        | 0xF900..=0xFAFF    // CJK compatibility
        | 0xFF66..=0xFF9F    // half-width katakana
        | 0x20000..=0x2FA1F)
}

fn classify(c: char) -> Class {
    if c.is_whitespace() {
        Class::Space
    } else if c.is_alphanumeric() && !is_unspaced_script(c) {
        Class::Word
    } else {
        Class::Single
    }
}

impl Tokenizer {
    pub fn pieces(&self, text: &str) -> Vec<Piece> {
        let mut out: Vec<Piece> = Vec::new();
        let mut current: Option<Piece> = None;
        let mut after_space = true;
        for (pos, c) in text.chars().enumerate() {
            match classify(c) {
                Class::Space => {
                    out.extend(current.take());
                    after_space = true;
                }
                Class::Word => {
                    if let Some(piece) = current.as_mut() {
                        piece.text.push(c);
                        piece.end = pos + 1;
                    } else {
                        current = Some(Piece {
                            text: c.to_string(),
                            start: pos,
                            end: pos + 1,
                            glued: !after_space && !out.is_empty(),
                        });
                    }
                    after_space = false;
                }
                Class::Single => {
                    out.extend(current.take());
                    out.push(Piece {
                        text: c.to_string(),
                        start: pos,
                        end: pos + 1,
                        glued: !after_space && !out.is_empty(),
                    });
                    after_space = false;
                }
            }
        }
        out.extend(current);
        out
    }

    /// Token strings in marked form (glued tokens carry [`GLUE`]).
    pub fn tokens(&self, text: &str) -> Vec<String> {
        self.pieces(text).iter().map(Piece::marked).collect()
    }

    pub fn count(&self, text: &str) -> usize {
        self.pieces(text).len()
    }
}

/// Inverse of [`Tokenizer::tokens`] on whitespace-normalized text. A glue
/// prefix on the first token is dropped.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        match tok.strip_prefix(GLUE) {
            Some(rest) if !rest.is_empty() => out.push_str(rest),
            _ => {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(tok);
            }
        }
    }
    out
}

/// Trims and collapses every whitespace run to a single ASCII space.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
