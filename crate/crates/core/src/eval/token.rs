use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// An individual token. The derived order is the canonical one: black first,
/// numbers ascending, tuples and sets lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    Black,
    Num(i64),
    Tup(Vec<Token>),
    Set(BTreeSet<Token>),
}

impl Token {
    pub fn as_num(&self) -> Option<i64> {
        match self {
            Token::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn tuple(items: impl IntoIterator<Item = Token>) -> Token {
        Token::Tup(items.into_iter().collect())
    }

    pub fn set(items: impl IntoIterator<Item = Token>) -> Token {
        Token::Set(items.into_iter().collect())
    }

    /// Ids built from tokens for formats that only allow `[A-Za-z0-9_]`.
    pub fn flat_id(&self) -> String {
        match self {
            Token::Black => "b".to_string(),
            Token::Num(n) if *n < 0 => format!("m{}", n.unsigned_abs()),
            Token::Num(n) => n.to_string(),
            Token::Tup(items) => items
                .iter()
                .map(Token::flat_id)
                .collect::<Vec<_>>()
                .join("_"),
            Token::Set(items) => {
                let inner = items
                    .iter()
                    .map(Token::flat_id)
                    .collect::<Vec<_>>()
                    .join("_");
                format!("s{inner}e")
            }
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Black => f.write_str("."),
            Token::Num(n) => write!(f, "{n}"),
            Token::Tup(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
            Token::Set(items) => {
                f.write_str("{")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed token `{0}`")]
pub struct TokenParseError(pub String);

impl FromStr for Token {
    type Err = TokenParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = TokenReader {
            src: s.as_bytes(),
            pos: 0,
        };
        let tok = p.token().ok_or_else(|| TokenParseError(s.to_string()))?;
        if p.pos != s.len() {
            return Err(TokenParseError(s.to_string()));
        }
        Ok(tok)
    }
}

struct TokenReader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl TokenReader<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn token(&mut self) -> Option<Token> {
        match self.peek()? {
            b'.' => {
                self.pos += 1;
                Some(Token::Black)
            }
            b'(' => {
                self.pos += 1;
                let items = self.list(b')')?;
                (items.len() >= 2).then_some(Token::Tup(items))
            }
            b'{' => {
                self.pos += 1;
                let items = self.list(b'}')?;
                Some(Token::Set(items.into_iter().collect()))
            }
            b'-' | b'0'..=b'9' => {
                let start = self.pos;
                self.pos += 1;
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
                std::str::from_utf8(&self.src[start..self.pos])
                    .ok()?
                    .parse()
                    .ok()
                    .map(Token::Num)
            }
            _ => None,
        }
    }

    fn list(&mut self, close: u8) -> Option<Vec<Token>> {
        let mut items = Vec::new();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Some(items);
        }
        loop {
            items.push(self.token()?);
            match self.peek()? {
                b',' => self.pos += 1,
                c if c == close => {
                    self.pos += 1;
                    return Some(items);
                }
                _ => return None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let mut v = [
            Token::set([Token::Num(1)]),
            Token::tuple([Token::Num(1), Token::Num(2)]),
            Token::Num(2),
            Token::Black,
            Token::Num(1),
        ];
        v.sort();
        assert_eq!(v[0], Token::Black);
        assert_eq!(v[1], Token::Num(1));
        assert_eq!(v[2], Token::Num(2));
        assert!(matches!(v[3], Token::Tup(_)));
        assert!(matches!(v[4], Token::Set(_)));
    }

    #[test]
    fn display_and_parse() {
        let t = Token::tuple([Token::Num(1), Token::set([Token::Num(3), Token::Black])]);
        let s = t.to_string();
        assert_eq!(s, "(1,{.,3})");
        assert_eq!(s.parse::<Token>().unwrap(), t);
        assert_eq!("{}".parse::<Token>().unwrap(), Token::set([]));
        assert!("(1)".parse::<Token>().is_err());
        assert!("1x".parse::<Token>().is_err());
    }

    #[test]
    fn flat_ids_are_alphanumeric() {
        let t = Token::tuple([Token::Num(1), Token::Black, Token::set([Token::Num(2)])]);
        let id = t.flat_id();
        assert!(
            id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'),
            "{id}"
        );
    }
}
