//! Tokenizer for the query language. Keywords are not reserved here; the
//! parser matches them contextually and case-insensitively, while
//! identifiers stay case-sensitive.

use super::QueryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    LParen,
    RParen,
    Comma,
    Semi,
    Star,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset into the query text.
    pub pos: usize,
    pub text: String,
}

impl Token {
    pub fn end(&self) -> usize {
        self.pos + self.text.len()
    }

    /// Case-insensitive keyword match.
    pub fn is_kw(&self, kw: &str) -> bool {
        self.kind == TokenKind::Ident && self.text.eq_ignore_ascii_case(kw)
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, QueryError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
            }
            b'(' | b')' | b',' | b';' | b'*' => {
                let kind = match b {
                    b'(' => TokenKind::LParen,
                    b')' => TokenKind::RParen,
                    b',' => TokenKind::Comma,
                    b';' => TokenKind::Semi,
                    _ => TokenKind::Star,
                };
                tokens.push(Token {
                    kind,
                    pos: i,
                    text: (b as char).to_string(),
                });
                i += 1;
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident,
                    pos: start,
                    text: text[start..i].to_string(),
                });
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Number,
                    pos: start,
                    text: text[start..i].to_string(),
                });
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return Err(QueryError::Syntax {
                    position: i,
                    expected: "an identifier, number, or punctuation".into(),
                    found: format!("`{ch}`"),
                });
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_query_shapes() {
        let toks = tokenize("SELECT poi_id, SUM(v) OVER (RADIUS 2.5 ON location);").unwrap();
        let kinds: Vec<TokenKind> = toks.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Ident,
                TokenKind::Ident,
                TokenKind::Comma,
                TokenKind::Ident,
                TokenKind::LParen,
                TokenKind::Ident,
                TokenKind::RParen,
                TokenKind::Ident,
                TokenKind::LParen,
                TokenKind::Ident,
                TokenKind::Number,
                TokenKind::Ident,
                TokenKind::Ident,
                TokenKind::RParen,
                TokenKind::Semi,
            ]
        );
        assert!(toks[0].is_kw("select"));
        assert_eq!(toks[10].text, "2.5");
    }

    #[test]
    fn unknown_character_reports_position() {
        let err = tokenize("SELECT @ FROM t").unwrap_err();
        match err {
            QueryError::Syntax { position, .. } => assert_eq!(position, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numbers_with_exponents() {
        let toks = tokenize("1 2.5 3e4 5.5E-2").unwrap();
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["1", "2.5", "3e4", "5.5E-2"]);
    }
}
