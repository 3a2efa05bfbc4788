use super::ast::{Span, TimeUnit};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Ident(String),
    Int(String),
    Float(String),
    Duration { text: String, unit: TimeUnit },
    Hertz(String),
    Str(String),
    Input,
    Output,
    Trigger,
    Import,
    If,
    Then,
    Else,
    True,
    False,
    And,
    Or,
    Not,
    ColonEq,
    Colon,
    At,
    LParen,
    RParen,
    Comma,
    Dot,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Sigma,
    IntegralSign,
    Infinity,
    Eof,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Int(s) | Token::Float(s) => format!("number `{s}`"),
            Token::Duration { text, unit } => format!("duration `{text}{}`", unit.suffix()),
            Token::Hertz(s) => format!("frequency `{s}Hz`"),
            Token::Str(_) => "string literal".into(),
            Token::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Token::Input => "input",
            Token::Output => "output",
            Token::Trigger => "trigger",
            Token::Import => "import",
            Token::If => "if",
            Token::Then => "then",
            Token::Else => "else",
            Token::True => "true",
            Token::False => "false",
            Token::And => "and",
            Token::Or => "or",
            Token::Not => "!",
            Token::ColonEq => ":=",
            Token::Colon => ":",
            Token::At => "@",
            Token::LParen => "(",
            Token::RParen => ")",
            Token::Comma => ",",
            Token::Dot => ".",
            Token::Plus => "+",
            Token::Minus => "-",
            Token::Star => "*",
            Token::Slash => "/",
            Token::Eq => "=",
            Token::Ne => "!=",
            Token::Lt => "<",
            Token::Le => "<=",
            Token::Gt => ">",
            Token::Ge => ">=",
            Token::Sigma => "Σ",
            Token::IntegralSign => "∫",
            Token::Infinity => "∞",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub token: Token,
    pub span: Span,
}

pub fn tokenize(source: &str) -> Result<Vec<Spanned>, ParseError> {
    Lexer { src: source, pos: 0, line: 1, column: 1 }.run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

fn is_ident_start(c: char) -> bool {
    (c.is_alphabetic() || c == '_') && c != 'Σ'
}

fn is_ident_continue(c: char) -> bool {
    (c.is_alphanumeric() || c == '_') && c != 'Σ'
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span { start: self.pos, end: self.pos, line: self.line, column: self.column }
    }

    fn error(&self, at: Span, message: impl Into<String>) -> ParseError {
        ParseError { line: at.line, column: at.column, message: message.into(), expected: Vec::new() }
    }

    fn run(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let start = self.here();
            let Some(c) = self.peek() else {
                out.push(Spanned { token: Token::Eof, span: start });
                return Ok(out);
            };
            let token = if c.is_ascii_digit() {
                self.number(start)?
            } else if is_ident_start(c) {
                self.word()
            } else if c == '"' {
                self.string(start)?
            } else {
                self.symbol(start)?
            };
            let mut span = start;
            span.end = self.pos;
            out.push(Spanned { token, span });
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn digits(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
    }

    fn number(&mut self, start: Span) -> Result<Token, ParseError> {
        let begin = self.pos;
        let mut fractional = false;
        self.digits();
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some(c) if c.is_ascii_digit()) {
            fractional = true;
            self.bump();
            self.digits();
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let exp_digit = match self.peek_at(1) {
                Some(c) if c.is_ascii_digit() => true,
                Some('+' | '-') => matches!(self.peek_at(2), Some(c) if c.is_ascii_digit()),
                _ => false,
            };
            if exp_digit {
                fractional = true;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                self.digits();
            }
        }
        let text = self.src[begin..self.pos].to_string();
        let suffix_begin = self.pos;
        while matches!(self.peek(), Some(c) if is_ident_continue(c)) {
            self.bump();
        }
        let suffix = &self.src[suffix_begin..self.pos];
        if suffix.is_empty() {
            return Ok(if fractional { Token::Float(text) } else { Token::Int(text) });
        }
        if suffix == "Hz" {
            return Ok(Token::Hertz(text));
        }
        match TimeUnit::from_suffix(suffix) {
            Some(unit) => Ok(Token::Duration { text, unit }),
            None => Err(self.error(
                start,
                format!("invalid numeric suffix `{suffix}` (expected one of s, min, h, Hz)"),
            )),
        }
    }

    fn word(&mut self) -> Token {
        let begin = self.pos;
        while matches!(self.peek(), Some(c) if is_ident_continue(c)) {
            self.bump();
        }
        match &self.src[begin..self.pos] {
            "input" => Token::Input,
            "output" => Token::Output,
            "trigger" => Token::Trigger,
            "import" => Token::Import,
            "if" => Token::If,
            "then" => Token::Then,
            "else" => Token::Else,
            "true" => Token::True,
            "false" => Token::False,
            "and" => Token::And,
            "or" => Token::Or,
            w => Token::Ident(w.to_string()),
        }
    }

    fn string(&mut self, start: Span) -> Result<Token, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.error(start, "unterminated string literal")),
                Some('"') => return Ok(Token::Str(s)),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    _ => return Err(self.error(start, "invalid escape in string literal")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn symbol(&mut self, start: Span) -> Result<Token, ParseError> {
        let c = self.bump().expect("caller checked");
        let next = self.peek();
        let two = |lexer: &mut Self, tok: Token| {
            lexer.bump();
            tok
        };
        Ok(match (c, next) {
            (':', Some('=')) => two(self, Token::ColonEq),
            (':', _) => Token::Colon,
            ('!', Some('=')) => two(self, Token::Ne),
            ('!', _) | ('¬', _) => Token::Not,
            ('<', Some('=')) => two(self, Token::Le),
            ('>', Some('=')) => two(self, Token::Ge),
            ('<', _) => Token::Lt,
            ('>', _) => Token::Gt,
            ('=', _) => Token::Eq,
            ('≠', _) => Token::Ne,
            ('≤', _) => Token::Le,
            ('≥', _) => Token::Ge,
            ('∧', _) => Token::And,
            ('∨', _) => Token::Or,
            ('@', _) => Token::At,
            ('(', _) => Token::LParen,
            (')', _) => Token::RParen,
            (',', _) => Token::Comma,
            ('.', _) => Token::Dot,
            ('+', _) => Token::Plus,
            ('-', _) => Token::Minus,
            ('*', _) => Token::Star,
            ('/', _) => Token::Slash,
            ('Σ', _) => Token::Sigma,
            ('∫', _) => Token::IntegralSign,
            ('∞', _) => Token::Infinity,
            (other, _) => return Err(self.error(start, format!("unexpected character `{other}`"))),
        })
    }
}
