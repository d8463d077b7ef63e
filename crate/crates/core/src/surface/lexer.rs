use std::fmt;

use crate::typecheck::Pos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Arrow,
    Colon,
    Dot,
    Comma,
    Semi,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Eq,
    Bang,
    Question,
    Lt,
    Minus,
    At,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Str(s) => return write!(f, "{s:?}"),
            Tok::Arrow => "`->`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Eq => "`=`",
            Tok::Bang => "`!`",
            Tok::Question => "`?`",
            Tok::Lt => "`<`",
            Tok::Minus => "`-`",
            Tok::At => "`@`",
            Tok::Eof => "end of file",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1u32, 0usize);
    let pos_at =
        |i: usize, line: u32, line_start: usize| Pos::new(line, (src[line_start..i].chars().count() + 1) as u32);

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let pos = pos_at(i, line, line_start);
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i]
                .parse()
                .map_err(|_| LexError { pos, message: format!("integer literal {} out of range", &src[start..i]) })?;
            Tok::Int(n)
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                match src[i..].chars().next() {
                    None | Some('\n') => return Err(LexError { pos, message: "unterminated string literal".into() }),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = src[i + 1..].chars().next();
                        match esc {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            _ => return Err(LexError { pos, message: "invalid escape in string literal".into() }),
                        }
                        i += 2;
                    }
                    Some(ch) => {
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            Tok::Str(s)
        } else {
            i += 1;
            match c {
                b'-' if bytes.get(i) == Some(&b'>') => {
                    i += 1;
                    Tok::Arrow
                }
                b'-' => Tok::Minus,
                b':' => Tok::Colon,
                b'.' => Tok::Dot,
                b',' => Tok::Comma,
                b';' => Tok::Semi,
                b'{' => Tok::LBrace,
                b'}' => Tok::RBrace,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'[' => Tok::LBracket,
                b']' => Tok::RBracket,
                b'=' => Tok::Eq,
                b'!' => Tok::Bang,
                b'?' => Tok::Question,
                b'<' => Tok::Lt,
                b'@' => Tok::At,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    return Err(LexError { pos, message: format!("unexpected character {ch:?}") });
                }
            }
        };
        out.push(Token { tok, pos, start, end: i });
    }
    out.push(Token { tok: Tok::Eof, pos: pos_at(i, line, line_start), start: i, end: i });
    Ok(out)
}
