//! Arithmetic expressions in θ and ω with structural differentiation.
//!
//! Grammar, loosest to tightest: `+ -`, `* /`, unary minus, `^`
//! (right-associative). Atoms are numeric literals (scientific notation
//! accepted), the variables `theta` and `omega`, the constant `pi`
//! (unicode θ, ω, π work too), parentheses, and the functions
//! `sin`, `cos`, `exp`, `abs`.

use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("expression error: {0}")]
pub struct ExprError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Theta,
    Omega,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, theta: f64, omega: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var(Var::Theta) => theta,
            Expr::Var(Var::Omega) => omega,
            Expr::Neg(u) => -u.eval(theta, omega),
            Expr::Add(a, b) => a.eval(theta, omega) + b.eval(theta, omega),
            Expr::Sub(a, b) => a.eval(theta, omega) - b.eval(theta, omega),
            Expr::Mul(a, b) => a.eval(theta, omega) * b.eval(theta, omega),
            Expr::Div(a, b) => a.eval(theta, omega) / b.eval(theta, omega),
            Expr::Pow(a, b) => a.eval(theta, omega).powf(b.eval(theta, omega)),
            Expr::Sin(u) => u.eval(theta, omega).sin(),
            Expr::Cos(u) => u.eval(theta, omega).cos(),
            Expr::Exp(u) => u.eval(theta, omega).exp(),
            Expr::Abs(u) => u.eval(theta, omega).abs(),
        }
    }

    /// Structural partial derivative.
    ///
    /// # Errors
    ///
    /// Powers are differentiable when either side is constant; `u^v` with
    /// both sides variable is rejected.
    pub fn diff(&self, var: Var) -> Result<Expr, ExprError> {
        Ok(match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(u) => neg(u.diff(var)?),
            Expr::Add(a, b) => add(a.diff(var)?, b.diff(var)?),
            Expr::Sub(a, b) => sub(a.diff(var)?, b.diff(var)?),
            Expr::Mul(a, b) => add(
                mul(a.diff(var)?, (**b).clone()),
                mul((**a).clone(), b.diff(var)?),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.diff(var)?, (**b).clone()),
                    mul((**a).clone(), b.diff(var)?),
                ),
                mul((**b).clone(), (**b).clone()),
            ),
            Expr::Pow(a, b) => match (&**a, &**b) {
                (_, Expr::Num(c)) => mul(
                    mul(Expr::Num(*c), pow((**a).clone(), Expr::Num(c - 1.0))),
                    a.diff(var)?,
                ),
                (Expr::Num(c), _) if *c > 0.0 => mul(
                    mul(Expr::Num(c.ln()), pow((**a).clone(), (**b).clone())),
                    b.diff(var)?,
                ),
                _ => {
                    return Err(ExprError(
                        "a power is differentiable only with a constant base or exponent".into(),
                    ))
                }
            },
            Expr::Sin(u) => mul(Expr::Cos(u.clone()), u.diff(var)?),
            Expr::Cos(u) => neg(mul(Expr::Sin(u.clone()), u.diff(var)?)),
            Expr::Exp(u) => mul(Expr::Exp(u.clone()), u.diff(var)?),
            // Valid away from the zeros of the argument.
            Expr::Abs(u) => mul(div((**u).clone(), Expr::Abs(u.clone())), u.diff(var)?),
        })
    }
}

// Folding constructors keep derivative trees from ballooning.
fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (Expr::Num(z), b) if z == 0.0 => b,
        (a, Expr::Num(z)) if z == 0.0 => a,
        (a, b) => Expr::Add(a.into(), b.into()),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (a, Expr::Num(z)) if z == 0.0 => a,
        (Expr::Num(z), b) if z == 0.0 => neg(b),
        (a, b) => Expr::Sub(a.into(), b.into()),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => Expr::Num(-x),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(a.into()),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (Expr::Num(z), _) | (_, Expr::Num(z)) if z == 0.0 => Expr::Num(0.0),
        (Expr::Num(o), b) if o == 1.0 => b,
        (a, Expr::Num(o)) if o == 1.0 => a,
        (a, b) => Expr::Mul(a.into(), b.into()),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(z), b) if z == 0.0 && !matches!(b, Expr::Num(y) if y == 0.0) => Expr::Num(0.0),
        (a, Expr::Num(o)) if o == 1.0 => a,
        (a, b) => Expr::Div(a.into(), b.into()),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(o)) if *o == 1.0 => a,
        (_, Expr::Num(z)) if *z == 0.0 => Expr::Num(1.0),
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x.powf(*y)),
        _ => Expr::Pow(a.into(), b.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            'θ' => {
                tokens.push(Token::Ident("theta".into()));
                i += 1;
            }
            'ω' => {
                tokens.push(Token::Ident("omega".into()));
                i += 1;
            }
            'π' => {
                tokens.push(Token::Ident("pi".into()));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // Exponent part: e or E, optional sign, then digits.
                if i < chars.len()
                    && (chars[i] == 'e' || chars[i] == 'E')
                    && chars
                        .get(i + 1)
                        .is_some_and(|&d| d.is_ascii_digit() || d == '+' || d == '-')
                {
                    i += 2;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| ExprError(format!("bad number `{text}`")))?;
                tokens.push(Token::Num(value));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(ExprError(format!("unexpected character `{other}`"))),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: &Token, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ExprError(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek() {
            let op = match op {
                Token::Plus => Expr::Add as fn(_, _) -> _,
                Token::Minus => Expr::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = op(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        while let Some(op) = self.peek() {
            let op = match op {
                Token::Star => Expr::Mul as fn(_, _) -> _,
                Token::Slash => Expr::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = op(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            // Right-associative; the exponent may carry its own unary minus.
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(&Token::RParen, "a closing parenthesis")?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::LParen) {
                    self.pos += 1;
                    let arg = Box::new(self.expr()?);
                    self.expect(&Token::RParen, "a closing parenthesis")?;
                    match name.as_str() {
                        "sin" => Ok(Expr::Sin(arg)),
                        "cos" => Ok(Expr::Cos(arg)),
                        "exp" => Ok(Expr::Exp(arg)),
                        "abs" => Ok(Expr::Abs(arg)),
                        other => Err(ExprError(format!("unknown function `{other}`"))),
                    }
                } else {
                    match name.as_str() {
                        "theta" => Ok(Expr::Var(Var::Theta)),
                        "omega" => Ok(Expr::Var(Var::Omega)),
                        "pi" => Ok(Expr::Num(PI)),
                        other => Err(ExprError(format!("unknown name `{other}`"))),
                    }
                }
            }
            _ => Err(ExprError("expected a value".into())),
        }
    }
}

/// Parses the expression source.
///
/// # Errors
///
/// `ExprError` with the offending token on malformed input.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(ExprError("empty expression".into()));
    }
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(ExprError(format!(
            "trailing input after position {}",
            parser.pos
        )));
    }
    Ok(expr)
}

/// Parses into a shareable evaluator (θ, ω) → value.
///
/// # Errors
///
/// Propagates parse failures.
pub fn compiled(src: &str) -> Result<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>, ExprError> {
    let expr = parse(src)?;
    Ok(Arc::new(move |t, w| expr.eval(t, w)))
}
