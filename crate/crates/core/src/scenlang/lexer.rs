use super::Diagnostic;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Arrow,
    Ge,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Arrow => "`->`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, m: String| Diagnostic {
        line,
        column,
        message: m,
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let adv = |i: &mut usize, n: usize, line: &mut usize, col: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            adv(&mut i, 1, &mut line, &mut col);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                adv(&mut i, 1, &mut line, &mut col);
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '\u{2192}' => Some(Tok::Arrow),
            _ => None,
        };
        if let Some(t) = single {
            out.push(Spanned {
                tok: t,
                line: l0,
                column: c0,
            });
            adv(&mut i, 1, &mut line, &mut col);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Spanned {
                tok: Tok::Arrow,
                line: l0,
                column: c0,
            });
            adv(&mut i, 2, &mut line, &mut col);
            continue;
        }
        if c == '>' && chars.get(i + 1) == Some(&'=') {
            out.push(Spanned {
                tok: Tok::Ge,
                line: l0,
                column: c0,
            });
            adv(&mut i, 2, &mut line, &mut col);
            continue;
        }
        if c.is_ascii_digit()
            || ((c == '-' || c == '+' || c == '.')
                && chars
                    .get(i + 1)
                    .is_some_and(|d| d.is_ascii_digit() || *d == '.'))
        {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text: String = chars[start..j].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| err(l0, c0, format!("malformed number `{text}`")))?;
            if !v.is_finite() {
                return Err(err(l0, c0, format!("number `{text}` is out of range")));
            }
            out.push(Spanned {
                tok: Tok::Num(v),
                line: l0,
                column: c0,
            });
            let n = j - i;
            adv(&mut i, n, &mut line, &mut col);
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..j].iter().collect()),
                line: l0,
                column: c0,
            });
            let n = j - i;
            adv(&mut i, n, &mut line, &mut col);
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            adv(&mut i, 1, &mut line, &mut col);
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(err(l0, c0, "unterminated string".into()));
                };
                match ch {
                    '"' => {
                        adv(&mut i, 1, &mut line, &mut col);
                        break;
                    }
                    '\n' => return Err(err(line, col, "newline in string".into())),
                    '\\' => {
                        let (el, ec) = (line, col);
                        let Some(&e) = chars.get(i + 1) else {
                            return Err(err(el, ec, "unterminated escape".into()));
                        };
                        match e {
                            '"' => s.push('"'),
                            '\\' => s.push('\\'),
                            'n' => s.push('\n'),
                            't' => s.push('\t'),
                            'r' => s.push('\r'),
                            'u' => {
                                if chars.get(i + 2) != Some(&'{') {
                                    return Err(err(el, ec, "expected `{` after \\u".into()));
                                }
                                let mut k = i + 3;
                                let mut hex = String::new();
                                while k < chars.len() && chars[k] != '}' && hex.len() <= 6 {
                                    hex.push(chars[k]);
                                    k += 1;
                                }
                                if chars.get(k) != Some(&'}') {
                                    return Err(err(el, ec, "unterminated \\u escape".into()));
                                }
                                let ch = u32::from_str_radix(&hex, 16)
                                    .ok()
                                    .and_then(char::from_u32)
                                    .ok_or_else(|| {
                                        err(el, ec, format!("invalid code point `{hex}`"))
                                    })?;
                                s.push(ch);
                                let n = k + 1 - i;
                                adv(&mut i, n, &mut line, &mut col);
                                continue;
                            }
                            other => {
                                return Err(err(el, ec, format!("unknown escape `\\{other}`")))
                            }
                        }
                        adv(&mut i, 2, &mut line, &mut col);
                    }
                    _ => {
                        s.push(ch);
                        adv(&mut i, 1, &mut line, &mut col);
                    }
                }
            }
            out.push(Spanned {
                tok: Tok::Str(s),
                line: l0,
                column: c0,
            });
            continue;
        }
        return Err(err(l0, c0, format!("unexpected character {c:?}")));
    }
    Ok(out)
}
