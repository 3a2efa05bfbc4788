use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Spanned, Token};
use super::ParseError;
use crate::types::SemType;

/// Parses specification source text.
pub fn parse_spec(source: &str) -> Result<SpecificationAst, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let ast = parser.specification()?;
    check_unique_names(&ast)?;
    Ok(ast)
}

fn check_unique_names(ast: &SpecificationAst) -> Result<(), ParseError> {
    let mut seen: HashMap<&str, Span> = HashMap::new();
    let names = ast.inputs.iter().map(|i| &i.name).chain(ast.outputs.iter().map(|o| &o.name));
    for name in names {
        if let Some(first) = seen.insert(&name.name, name.span) {
            return Err(ParseError {
                line: name.span.line,
                column: name.span.column,
                message: format!("duplicate declaration of `{}` (first declared at {first})", name.name),
                expected: Vec::new(),
            });
        }
    }
    Ok(())
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == token {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let span = self.span();
        ParseError {
            line: span.line,
            column: span.column,
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn error_at(&self, span: Span, message: impl Into<String>) -> ParseError {
        ParseError { line: span.line, column: span.column, message: message.into(), expected: Vec::new() }
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<Span, ParseError> {
        if self.peek() == &token {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&[what]))
        }
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Token::Ident(name) => {
                let span = self.advance().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    /// Consumes an identifier that must spell `word` (argument labels, method names).
    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Token::Ident(w) if w == word => {
                self.advance();
                Ok(())
            }
            _ => Err(self.unexpected(&[word])),
        }
    }

    fn specification(&mut self) -> Result<SpecificationAst, ParseError> {
        let mut ast = SpecificationAst::default();
        loop {
            let start = self.span();
            match self.peek() {
                Token::Eof => return Ok(ast),
                Token::Import => {
                    self.advance();
                    self.ident()?;
                }
                Token::Input => {
                    self.advance();
                    let name = self.ident()?;
                    self.expect(Token::Colon, "`:`")?;
                    let ty = self.sem_type()?;
                    ast.inputs.push(InputDecl { name, ty, span: start });
                }
                Token::Output => {
                    self.advance();
                    let name = self.ident()?;
                    let ty = if self.eat(&Token::Colon) { Some(self.sem_type()?) } else { None };
                    let frequency = self.frequency()?;
                    self.expect(Token::ColonEq, "`:=`")?;
                    let expr = self.expr()?;
                    ast.outputs.push(OutputDecl { name, ty, frequency, expr, span: start });
                }
                Token::Trigger => {
                    self.advance();
                    let frequency = self.frequency()?;
                    let condition = self.expr()?;
                    let message = match self.peek().clone() {
                        Token::Str(s) => {
                            self.advance();
                            s
                        }
                        _ => return Err(self.unexpected(&["string literal", "operator"])),
                    };
                    ast.triggers.push(TriggerDecl { frequency, condition, message, span: start });
                }
                _ => return Err(self.unexpected(&["`input`", "`output`", "`trigger`", "`import`"])),
            }
        }
    }

    fn sem_type(&mut self) -> Result<SemType, ParseError> {
        let span = self.span();
        match self.peek() {
            Token::Ident(name) => {
                let ty = name.parse::<SemType>().map_err(|_| {
                    let mut e = self.error_at(span, format!("unknown type `{name}`"));
                    e.expected = SemType::ALL.iter().map(|t| t.name().to_string()).collect();
                    e
                })?;
                self.advance();
                Ok(ty)
            }
            _ => Err(self.unexpected(&["type"])),
        }
    }

    fn frequency(&mut self) -> Result<Option<Frequency>, ParseError> {
        if !self.eat(&Token::At) {
            return Ok(None);
        }
        let span = self.span();
        match self.peek().clone() {
            Token::Hertz(text) => {
                self.advance();
                let zero = crate::time::Decimal::parse(&text).is_none_or(|d| d.is_zero());
                if zero {
                    return Err(self.error_at(span, "frequency must be strictly positive"));
                }
                Ok(Some(Frequency { text }))
            }
            _ => Err(self.unexpected(&["frequency such as `1Hz`"])),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let Some(op) = binary_op(self.peek()) else { return Ok(lhs) };
            let prec = op.precedence();
            if prec < min_prec {
                return Ok(lhs);
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            if op.is_comparison() {
                if let Some(next) = binary_op(self.peek()) {
                    if next.is_comparison() {
                        return Err(self.error_at(
                            self.span(),
                            "comparison operators do not associate; add parentheses",
                        ));
                    }
                }
            }
            let span = Span { end: rhs.span.end, ..lhs.span };
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let op = match self.peek() {
            Token::Minus => UnaryOp::Neg,
            Token::Not => UnaryOp::Not,
            Token::If => return self.conditional(),
            _ => return self.primary(),
        };
        self.advance();
        let operand = self.unary()?;
        Ok(Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, span })
    }

    fn conditional(&mut self) -> Result<Expr, ParseError> {
        let span = self.expect(Token::If, "`if`")?;
        let cond = self.expr()?;
        self.expect(Token::Then, "`then`")?;
        let then = self.expr()?;
        self.expect(Token::Else, "`else`")?;
        let otherwise = self.expr()?;
        Ok(Expr {
            kind: ExprKind::If { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) },
            span,
        })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Token::True => {
                self.advance();
                ExprKind::Literal(Literal::Bool(true))
            }
            Token::False => {
                self.advance();
                ExprKind::Literal(Literal::Bool(false))
            }
            Token::Int(text) => {
                if text.parse::<u64>().is_err() {
                    return Err(self.error_at(span, format!("integer literal `{text}` out of range")));
                }
                self.advance();
                ExprKind::Literal(Literal::Int(text))
            }
            Token::Float(text) => {
                self.advance();
                ExprKind::Literal(Literal::Float(text))
            }
            Token::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                return Ok(inner);
            }
            Token::Ident(_) => {
                let ident = self.ident()?;
                if self.peek() == &Token::LParen {
                    return self.call(ident);
                }
                if self.peek() == &Token::Dot {
                    return self.access(ident);
                }
                ExprKind::Stream(ident)
            }
            _ => {
                return Err(self.unexpected(&["expression", "`(`", "identifier", "literal", "`if`"]));
            }
        };
        Ok(Expr { kind, span })
    }

    fn call(&mut self, function: Ident) -> Result<Expr, ParseError> {
        enum Callee {
            Unary(UnaryOp),
            Cast(CastKind),
        }
        let callee = match function.name.as_str() {
            "abs" => Callee::Unary(UnaryOp::Abs),
            "sqrt" => Callee::Unary(UnaryOp::Sqrt),
            "Int" => Callee::Cast(CastKind::Int),
            "Float" => Callee::Cast(CastKind::Float),
            "cast" => Callee::Cast(CastKind::Cast),
            other => {
                let mut e = self.error_at(function.span, format!("unknown function `{other}`"));
                e.expected = ["abs", "sqrt", "Int", "Float", "cast"].map(String::from).to_vec();
                return Err(e);
            }
        };
        self.expect(Token::LParen, "`(`")?;
        let operand = Box::new(self.expr()?);
        self.expect(Token::RParen, "`)`")?;
        let kind = match callee {
            Callee::Unary(op) => ExprKind::Unary { op, operand },
            Callee::Cast(kind) => ExprKind::Cast { kind, operand },
        };
        Ok(Expr { kind, span: function.span })
    }

    fn access(&mut self, stream: Ident) -> Result<Expr, ParseError> {
        let span = stream.span;
        self.expect(Token::Dot, "`.`")?;
        let method_span = self.span();
        let method = match self.peek() {
            Token::Ident(m) => m.clone(),
            _ => return Err(self.unexpected(&["offset", "hold", "aggregate"])),
        };
        let kind = match method.as_str() {
            "offset" => {
                self.advance();
                self.expect(Token::LParen, "`(`")?;
                self.keyword("by")?;
                self.expect(Token::Colon, "`:`")?;
                let negative = self.eat(&Token::Minus);
                let by_span = self.span();
                let by = match self.peek().clone() {
                    Token::Int(text) => {
                        self.advance();
                        text.parse::<u32>()
                            .map_err(|_| self.error_at(by_span, "offset out of range"))?
                    }
                    _ => return Err(self.unexpected(&["integer offset"])),
                };
                if !negative || by == 0 {
                    return Err(self.error_at(by_span, "offsets must be strictly negative"));
                }
                self.expect(Token::RParen, "`)`")?;
                let default = self.defaults()?;
                ExprKind::Offset { stream, by, default }
            }
            "hold" => {
                self.advance();
                self.expect(Token::LParen, "`(`")?;
                self.expect(Token::RParen, "`)`")?;
                let default = self.defaults()?;
                ExprKind::Hold { stream, default }
            }
            "aggregate" => {
                self.advance();
                self.expect(Token::LParen, "`(`")?;
                self.keyword("over")?;
                self.expect(Token::Colon, "`:`")?;
                let dur_span = self.span();
                let duration = match self.peek().clone() {
                    Token::Duration { text, unit } => {
                        self.advance();
                        let d = WindowDuration::Finite { text, unit };
                        match d.nanos() {
                            Some(0) => return Err(self.error_at(dur_span, "window duration must be positive")),
                            Some(_) => d,
                            None => {
                                return Err(self.error_at(
                                    dur_span,
                                    "window duration must be a whole number of nanoseconds",
                                ))
                            }
                        }
                    }
                    Token::Infinity => {
                        self.advance();
                        WindowDuration::Infinite
                    }
                    _ => return Err(self.unexpected(&["duration such as `5s`", "`∞`"])),
                };
                self.expect(Token::Comma, "`,`")?;
                self.keyword("using")?;
                self.expect(Token::Colon, "`:`")?;
                let function = self.window_function()?;
                self.expect(Token::RParen, "`)`")?;
                let default = self.defaults()?;
                ExprKind::Window { stream, duration, function, default }
            }
            _ => {
                let mut e = self.error_at(method_span, format!("unknown stream access `{method}`"));
                e.expected = ["offset", "hold", "aggregate"].map(String::from).to_vec();
                return Err(e);
            }
        };
        Ok(Expr { kind, span })
    }

    fn window_function(&mut self) -> Result<WindowFunction, ParseError> {
        const EXPECTED: &[&str] = &["count", "sum", "Σ", "avg", "min", "max", "integral", "∫"];
        let f = match self.peek() {
            Token::Sigma => WindowFunction::Sum,
            Token::IntegralSign => WindowFunction::Integral,
            Token::Ident(name) => match name.as_str() {
                "count" => WindowFunction::Count,
                "sum" => WindowFunction::Sum,
                "avg" => WindowFunction::Avg,
                "min" => WindowFunction::Min,
                "max" => WindowFunction::Max,
                "integral" => WindowFunction::Integral,
                _ => return Err(self.unexpected(EXPECTED)),
            },
            _ => return Err(self.unexpected(EXPECTED)),
        };
        self.advance();
        Ok(f)
    }

    fn defaults(&mut self) -> Result<Option<Box<Expr>>, ParseError> {
        let is_defaults = self.peek() == &Token::Dot
            && matches!(&self.tokens.get(self.pos + 1).map(|t| &t.token), Some(Token::Ident(w)) if w == "defaults");
        if !is_defaults {
            return Ok(None);
        }
        self.advance();
        self.advance();
        self.expect(Token::LParen, "`(`")?;
        self.keyword("to")?;
        self.expect(Token::Colon, "`:`")?;
        let value = self.expr()?;
        self.expect(Token::RParen, "`)`")?;
        Ok(Some(Box::new(value)))
    }
}

fn binary_op(token: &Token) -> Option<BinaryOp> {
    Some(match token {
        Token::Plus => BinaryOp::Add,
        Token::Minus => BinaryOp::Sub,
        Token::Star => BinaryOp::Mul,
        Token::Slash => BinaryOp::Div,
        Token::And => BinaryOp::And,
        Token::Or => BinaryOp::Or,
        Token::Eq => BinaryOp::Eq,
        Token::Ne => BinaryOp::Ne,
        Token::Lt => BinaryOp::Lt,
        Token::Le => BinaryOp::Le,
        Token::Gt => BinaryOp::Gt,
        Token::Ge => BinaryOp::Ge,
        _ => return None,
    })
}
