use super::Span;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Fun,
    If,
    Else,
    New,
    Trace,
    Untrace,
    Let,
    True,
    False,
    Undefined,
    Null,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Assign,
    EqEq,
    Plus,
    Minus,
    Star,
    Less,
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Ident(x) => format!("identifier `{x}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Fun => "fun",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::New => "new",
            Tok::Trace => "trace",
            Tok::Untrace => "untrace",
            Tok::Let => "let",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Undefined => "undefined",
            Tok::Null => "null",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Less => "<",
            Tok::Arrow => "->",
            Tok::Num(_) | Tok::Str(_) | Tok::Ident(_) | Tok::Eof => "",
        }
    }

    /// Whether an expression may end with this token; decides if a
    /// following `-digit` is subtraction or a negative literal.
    fn ends_operand(&self) -> bool {
        matches!(
            self,
            Tok::Num(_)
                | Tok::Str(_)
                | Tok::Ident(_)
                | Tok::True
                | Tok::False
                | Tok::Undefined
                | Tok::Null
                | Tok::RParen
                | Tok::RBrace
                | Tok::RBracket
        )
    }
}

#[derive(Debug)]
pub(crate) struct LexError {
    pub span: Span,
    pub message: String,
}

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, Span)>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out: Vec<(Tok, Span)> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let prev_ends_operand = out.last().map(|(t, _)| t.ends_operand()).unwrap_or(false);
        let negative_literal =
            c == '-' && !prev_ends_operand && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || negative_literal {
            let start = i;
            bump!();
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while i < j {
                        bump!();
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<f64>().map_err(|_| LexError {
                span,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(n), span));
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            bump!();
            let mut s = String::new();
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(LexError {
                        span,
                        message: "unterminated string literal".into(),
                    });
                };
                bump!();
                if d == quote {
                    break;
                }
                if d == '\\' {
                    let Some(&esc) = chars.get(i) else {
                        return Err(LexError {
                            span,
                            message: "unterminated string literal".into(),
                        });
                    };
                    bump!();
                    s.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '0' => '\0',
                        other => other,
                    });
                } else {
                    s.push(d);
                }
            }
            out.push((Tok::Str(s), span));
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "fun" => Tok::Fun,
                "if" => Tok::If,
                "else" => Tok::Else,
                "new" => Tok::New,
                "trace" => Tok::Trace,
                "untrace" => Tok::Untrace,
                "let" => Tok::Let,
                "true" => Tok::True,
                "false" => Tok::False,
                "undefined" => Tok::Undefined,
                "null" => Tok::Null,
                _ => Tok::Ident(word),
            };
            out.push((tok, span));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('=', _) => (Tok::Assign, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('<', _) => (Tok::Less, 1),
            _ => {
                return Err(LexError {
                    span,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        for _ in 0..width {
            bump!();
        }
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}
