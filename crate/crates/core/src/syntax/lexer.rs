use super::ast::Span;
use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    /// Punctuation and operators, including `<-`, `->`, `<=`, `>=`.
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMS: &[&str] =
    &["<-", "->", "<=", ">=", "(", ")", "[", "]", "{", "}", ",", ";", ":", ".", "=", "<", ">", "+", "-", "*", "!"];

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, chars: &[char]| {
        let c = chars[*i];
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, &chars);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, &chars);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col, &chars);
            }
            toks.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, &chars);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| ParseError {
                line: span.line,
                col: span.col,
                message: format!("integer literal {text} out of range"),
                expected: vec![],
            })?;
            toks.push(Token { tok: Tok::Int(n), span });
            continue;
        }
        if c == '\'' {
            advance(&mut i, &mut line, &mut col, &chars);
            let mut s = String::new();
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(ParseError {
                        line: span.line,
                        col: span.col,
                        message: "unterminated string literal".into(),
                        expected: vec!["'".into()],
                    });
                };
                advance(&mut i, &mut line, &mut col, &chars);
                match d {
                    '\'' => break,
                    '\\' => {
                        let Some(&e) = chars.get(i) else { continue };
                        advance(&mut i, &mut line, &mut col, &chars);
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                    }
                    other => s.push(other),
                }
            }
            toks.push(Token { tok: Tok::Str(s), span });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym = SYMS.iter().find(|s| rest.starts_with(**s));
        match sym {
            Some(s) => {
                for _ in 0..s.len() {
                    advance(&mut i, &mut line, &mut col, &chars);
                }
                toks.push(Token { tok: Tok::Sym(s), span });
            }
            None => {
                return Err(ParseError { line, col, message: format!("unexpected character `{c}`"), expected: vec![] })
            }
        }
    }
    toks.push(Token { tok: Tok::Eof, span: Span::new(line, col) });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_arrows_and_comments() {
        let toks = lex("x:<int> <- f // note\n 'a\\'b'").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("x".into()),
                Tok::Sym(":"),
                Tok::Sym("<"),
                Tok::Ident("int".into()),
                Tok::Sym(">"),
                Tok::Sym("<-"),
                Tok::Ident("f".into()),
                Tok::Str("a'b".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks[7].span.line, 2);
    }
}
