use super::ParseDiagnostic;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const SYMBOLS: [&str; 26] = [
    "..", "->", "||", "&&", "!=", "<=", ">=", "=", "<", ">", "!", "(", ")", "{", "}", "[", "]",
    ",", ";", ":", "|", "\\", "+", "-", "*", ".",
];

pub(crate) fn lex(src: &str) -> Result<Vec<Spanned>, ParseDiagnostic> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut rest = src;
    while let Some(c) = rest.chars().next() {
        let (l, cl) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if c == '#' || rest.starts_with("//") {
            let end = rest.find('\n').unwrap_or(rest.len());
            col += rest[..end].chars().count();
            rest = &rest[end..];
            continue;
        }
        let len = if c.is_ascii_alphabetic() || c == '_' {
            let n = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '\''))
                .unwrap_or(rest.len());
            out.push(Spanned {
                tok: Tok::Ident(rest[..n].to_string()),
                line: l,
                column: cl,
            });
            n
        } else if c.is_ascii_digit() {
            let n = rest
                .find(|ch: char| !ch.is_ascii_digit())
                .unwrap_or(rest.len());
            let v = rest[..n].parse().map_err(|_| {
                ParseDiagnostic::error(l, cl, format!("integer `{}` is too large", &rest[..n]))
            })?;
            out.push(Spanned {
                tok: Tok::Int(v),
                line: l,
                column: cl,
            });
            n
        } else if let Some(s) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            out.push(Spanned {
                tok: Tok::Sym(s),
                line: l,
                column: cl,
            });
            s.len()
        } else {
            return Err(ParseDiagnostic::error(
                l,
                cl,
                format!("unexpected character `{c}`"),
            ));
        };
        col += len;
        rest = &rest[len..];
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}
