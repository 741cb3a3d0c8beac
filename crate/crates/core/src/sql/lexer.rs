use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Bare or backtick-quoted identifier. Quoted ones are never keywords.
    Ident { text: String, quoted: bool },
    Number(String),
    /// String literal, quotes included.
    Str(String),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

const SYMBOLS: [&str; 15] = [
    "<=", ">=", "!=", "<>", "(", ")", ",", ".", "*", "=", "<", ">", ";", "-", "+",
];

pub(crate) fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out: Vec<Token> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == '\'' || c == '"' {
            i += 1;
            loop {
                match bytes.get(i) {
                    None => {
                        return Err(Error::SqlSyntax {
                            offset: start,
                            message: "unterminated string literal".into(),
                        })
                    }
                    Some(&b) if b as char == c => {
                        // doubled quote escapes itself
                        if bytes.get(i + 1) == Some(&b) {
                            i += 2;
                        } else {
                            i += 1;
                            break;
                        }
                    }
                    Some(_) => i += 1,
                }
            }
            out.push(Token {
                tok: Tok::Str(text[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        if c == '`' {
            let close = text[i + 1..].find('`').ok_or(Error::SqlSyntax {
                offset: start,
                message: "unterminated quoted identifier".into(),
            })?;
            out.push(Token {
                tok: Tok::Ident {
                    text: text[i + 1..i + 1 + close].to_string(),
                    quoted: true,
                },
                offset: start,
            });
            i += close + 2;
            continue;
        }
        let negative_number = c == '-'
            && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())
            && !matches!(
                out.last().map(|t| &t.tok),
                Some(Tok::Ident { .. } | Tok::Number(_) | Tok::Str(_) | Tok::Sym(")"))
            );
        if c.is_ascii_digit() || negative_number {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Number(text[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' || !c.is_ascii() {
            let rest = &text[i..];
            let len = rest
                .char_indices()
                .find(|(_, ch)| !(ch.is_alphanumeric() || *ch == '_'))
                .map_or(rest.len(), |(j, _)| j);
            out.push(Token {
                tok: Tok::Ident {
                    text: rest[..len].to_string(),
                    quoted: false,
                },
                offset: start,
            });
            i += len;
            continue;
        }
        match SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            Some(s) => {
                out.push(Token {
                    tok: Tok::Sym(s),
                    offset: start,
                });
                i += s.len();
            }
            None => {
                return Err(Error::SqlSyntax {
                    offset: start,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}
