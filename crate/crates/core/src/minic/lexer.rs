use super::diag::{Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Integer or character literal. Kept wide so `-9223372036854775808`
    /// can be folded by the parser.
    Int(i128),
    Str(String),
    Ident(String),
    KwInt,
    KwVoid,
    KwIf,
    KwElse,
    KwWhile,
    KwFor,
    KwSwitch,
    KwCase,
    KwDefault,
    KwGoto,
    KwReturn,
    KwBreak,
    KwContinue,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Colon,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Amp,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer {n}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Eof => "end of input".into(),
            other => format!("'{}'", other.spelling()),
        }
    }

    fn spelling(&self) -> &'static str {
        match self {
            Tok::KwInt => "int",
            Tok::KwVoid => "void",
            Tok::KwIf => "if",
            Tok::KwElse => "else",
            Tok::KwWhile => "while",
            Tok::KwFor => "for",
            Tok::KwSwitch => "switch",
            Tok::KwCase => "case",
            Tok::KwDefault => "default",
            Tok::KwGoto => "goto",
            Tok::KwReturn => "return",
            Tok::KwBreak => "break",
            Tok::KwContinue => "continue",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Amp => "&",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }
}

fn lex_error(line: u32, col: u32, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(DiagnosticKind::Lexical, line, col, msg)
}

fn escape(cur: &mut Cursor<'_>, line: u32, col: u32) -> Result<char, Diagnostic> {
    match cur.bump() {
        Some('n') => Ok('\n'),
        Some('t') => Ok('\t'),
        Some('r') => Ok('\r'),
        Some('v') => Ok('\u{b}'),
        Some('f') => Ok('\u{c}'),
        Some('0') => Ok('\0'),
        Some('\\') => Ok('\\'),
        Some('\'') => Ok('\''),
        Some('"') => Ok('"'),
        Some(c) => Err(lex_error(line, col, format!("unknown escape '\\{c}'"))),
        None => Err(lex_error(line, col, "unterminated escape")),
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') => {
                    let mut look = cur.chars.clone();
                    look.next();
                    match look.next() {
                        Some('/') => {
                            while let Some(c) = cur.peek() {
                                if c == '\n' {
                                    break;
                                }
                                cur.bump();
                            }
                        }
                        Some('*') => {
                            let (line, col) = (cur.line, cur.col);
                            cur.bump();
                            cur.bump();
                            let mut closed = false;
                            while let Some(c) = cur.bump() {
                                if c == '*' && cur.eat('/') {
                                    closed = true;
                                    break;
                                }
                            }
                            if !closed {
                                return Err(lex_error(line, col, "unterminated block comment"));
                            }
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }
        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                line,
                col,
            });
            return Ok(out);
        };
        let tok = match c {
            '0'..='9' => {
                let mut digits = String::from(c);
                while let Some(d) = cur.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                if cur.peek().is_some_and(|d| d.is_ascii_alphabetic() || d == '_') {
                    return Err(lex_error(line, col, "malformed number"));
                }
                let value: i128 = digits
                    .parse()
                    .map_err(|_| lex_error(line, col, "integer literal too large"))?;
                if value > i64::MAX as i128 + 1 {
                    return Err(lex_error(line, col, "integer literal too large"));
                }
                Tok::Int(value)
            }
            '\'' => {
                let ch = match cur.bump() {
                    Some('\\') => escape(&mut cur, line, col)?,
                    Some('\'') | None | Some('\n') => {
                        return Err(lex_error(line, col, "empty character literal"))
                    }
                    Some(ch) => ch,
                };
                if !cur.eat('\'') {
                    return Err(lex_error(line, col, "unterminated character literal"));
                }
                if !ch.is_ascii() {
                    return Err(lex_error(line, col, "non-ASCII character literal"));
                }
                Tok::Int(ch as i128)
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        Some('"') => break,
                        Some('\\') => s.push(escape(&mut cur, line, col)?),
                        Some('\n') | None => {
                            return Err(lex_error(line, col, "unterminated string literal"))
                        }
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::from(c);
                while let Some(d) = cur.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        ident.push(d);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                match ident.as_str() {
                    "int" => Tok::KwInt,
                    "void" => Tok::KwVoid,
                    "if" => Tok::KwIf,
                    "else" => Tok::KwElse,
                    "while" => Tok::KwWhile,
                    "for" => Tok::KwFor,
                    "switch" => Tok::KwSwitch,
                    "case" => Tok::KwCase,
                    "default" => Tok::KwDefault,
                    "goto" => Tok::KwGoto,
                    "return" => Tok::KwReturn,
                    "break" => Tok::KwBreak,
                    "continue" => Tok::KwContinue,
                    _ => Tok::Ident(ident),
                }
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '%' => Tok::Percent,
            '=' if cur.eat('=') => Tok::EqEq,
            '=' => Tok::Assign,
            '!' if cur.eat('=') => Tok::NotEq,
            '!' => Tok::Bang,
            '<' if cur.eat('=') => Tok::Le,
            '<' => Tok::Lt,
            '>' if cur.eat('=') => Tok::Ge,
            '>' => Tok::Gt,
            '&' if cur.eat('&') => Tok::AndAnd,
            '&' => Tok::Amp,
            '|' if cur.eat('|') => Tok::OrOr,
            other => {
                return Err(lex_error(
                    line,
                    col,
                    format!("unexpected character '{}'", other.escape_default()),
                ))
            }
        };
        out.push(Token { tok, line, col });
    }
}
