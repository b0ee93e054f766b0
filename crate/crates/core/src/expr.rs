//! Motion expressions: a small arithmetic/trigonometric language in one time
//! variable `t`.
//!
//! Grammar:
//!
//! ```text
//! expr    := term { ("+" | "-") term }
//! term    := factor { ("*" | "/") factor }
//! factor  := "-" factor | primary [ "^" integer ]
//! primary := number | "t" | "pi" | ("sin" | "cos" | "sqrt") "(" expr ")" | "(" expr ")"
//! ```
//!
//! The printer emits the minimal parenthesization, so `parse(e.to_string())`
//! reproduces `e` for every tree the parser can produce.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum MotionExpr {
    Const(f64),
    Time,
    Neg(Box<MotionExpr>),
    Add(Box<MotionExpr>, Box<MotionExpr>),
    Sub(Box<MotionExpr>, Box<MotionExpr>),
    Mul(Box<MotionExpr>, Box<MotionExpr>),
    Div(Box<MotionExpr>, Box<MotionExpr>),
    Sin(Box<MotionExpr>),
    Cos(Box<MotionExpr>),
    Sqrt(Box<MotionExpr>),
    Pow(Box<MotionExpr>, u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at position {position}: {kind}")]
pub struct ParseError {
    /// Character offset into the source text.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("expected {expected}, found {found}")]
    Unexpected {
        expected: &'static str,
        found: String,
    },
    #[error("unknown identifier `{0}` (allowed: t, pi, sin, cos, sqrt)")]
    UnknownIdentifier(String),
    #[error("invalid number literal `{0}`")]
    InvalidNumber(String),
    #[error("exponent must be a non-negative integer, found `{0}`")]
    BadExponent(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{subexpr}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    /// The offending subexpression, printed.
    pub subexpr: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalErrorKind {
    #[error("square root of negative value {0}")]
    SqrtOfNegative(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
}

impl MotionExpr {
    pub fn constant(value: f64) -> Self {
        MotionExpr::Const(value)
    }

    pub fn time() -> Self {
        MotionExpr::Time
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        let tok = parser.peek();
        if tok.kind != Tok::Eof {
            return Err(ParseError {
                position: tok.position,
                kind: ParseErrorKind::Unexpected {
                    expected: "operator or end of input",
                    found: tok.kind.describe(),
                },
            });
        }
        Ok(expr)
    }

    /// Evaluates the expression at time `t`. Never returns NaN or an infinity.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        use MotionExpr::*;
        let value = match self {
            Const(c) => *c,
            Time => t,
            Neg(e) => -e.eval(t)?,
            Add(a, b) => a.eval(t)? + b.eval(t)?,
            Sub(a, b) => a.eval(t)? - b.eval(t)?,
            Mul(a, b) => a.eval(t)? * b.eval(t)?,
            Div(a, b) => {
                let num = a.eval(t)?;
                let den = b.eval(t)?;
                if den == 0.0 {
                    return Err(self.fail(EvalErrorKind::DivisionByZero));
                }
                num / den
            }
            Sin(e) => e.eval(t)?.sin(),
            Cos(e) => e.eval(t)?.cos(),
            Sqrt(e) => {
                let x = e.eval(t)?;
                if x < 0.0 {
                    return Err(self.fail(EvalErrorKind::SqrtOfNegative(x)));
                }
                x.sqrt()
            }
            Pow(e, n) => e.eval(t)?.powi(*n as i32),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.fail(EvalErrorKind::NonFinite))
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        use MotionExpr::*;
        match self {
            Const(_) | Time => 1,
            Neg(e) | Sin(e) | Cos(e) | Sqrt(e) | Pow(e, _) => 1 + e.size(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn fail(&self, kind: EvalErrorKind) -> EvalError {
        EvalError {
            kind,
            subexpr: self.to_string(),
        }
    }

    fn precedence(&self) -> u8 {
        use MotionExpr::*;
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) | Pow(..) => 3,
            Const(c) if c.is_sign_negative() => 3,
            Const(_) | Time | Sin(_) | Cos(_) | Sqrt(_) => 4,
        }
    }

    fn write_in(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            f.write_str("(")?;
            self.write_bare(f)?;
            f.write_str(")")
        } else {
            self.write_bare(f)
        }
    }

    fn write_bare(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use MotionExpr::*;
        match self {
            Const(c) if *c == PI => f.write_str("pi"),
            Const(c) if c.is_sign_negative() => write!(f, "-{}", -c),
            Const(c) => write!(f, "{c}"),
            Time => f.write_str("t"),
            Neg(e) => {
                f.write_str("-")?;
                e.write_in(f, 3)
            }
            Add(a, b) => binary(f, a, "+", b, 1),
            Sub(a, b) => binary(f, a, "-", b, 1),
            Mul(a, b) => binary(f, a, "*", b, 2),
            Div(a, b) => binary(f, a, "/", b, 2),
            Sin(e) => write!(f, "sin({e})"),
            Cos(e) => write!(f, "cos({e})"),
            Sqrt(e) => write!(f, "sqrt({e})"),
            Pow(e, n) => {
                e.write_in(f, 4)?;
                write!(f, "^{n}")
            }
        }
    }
}

fn binary(
    f: &mut fmt::Formatter<'_>,
    lhs: &MotionExpr,
    op: &str,
    rhs: &MotionExpr,
    prec: u8,
) -> fmt::Result {
    lhs.write_in(f, prec)?;
    f.write_str(op)?;
    rhs.write_in(f, prec + 1)
}

impl fmt::Display for MotionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_bare(f)
    }
}

impl std::str::FromStr for MotionExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MotionExpr::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    position: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let kind = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_digit() || c == '.' => {
                i = scan_number(&chars, i);
                tokens.push(Token {
                    kind: Tok::Number(chars[start..i].iter().collect()),
                    position: start,
                });
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: Tok::Ident(chars[start..i].iter().collect()),
                    position: start,
                });
                continue;
            }
            other => {
                return Err(ParseError {
                    position: i,
                    kind: ParseErrorKind::UnexpectedChar(other),
                })
            }
        };
        tokens.push(Token {
            kind,
            position: start,
        });
        i += 1;
    }
    tokens.push(Token {
        kind: Tok::Eof,
        position: chars.len(),
    });
    Ok(tokens)
}

// digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ]; validity is checked by
// the f64 parser afterwards.
fn scan_number(chars: &[char], mut i: usize) -> usize {
    let digits = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
    };
    digits(&mut i);
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        digits(&mut i);
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            i = j;
            digits(&mut i);
        }
    }
    i
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != Tok::Eof {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: Tok, expected: &'static str) -> Result<(), ParseError> {
        let tok = self.bump();
        if tok.kind == kind {
            Ok(())
        } else {
            Err(ParseError {
                position: tok.position,
                kind: ParseErrorKind::Unexpected {
                    expected,
                    found: tok.kind.describe(),
                },
            })
        }
    }

    fn expr(&mut self) -> Result<MotionExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().kind {
                Tok::Plus => {
                    self.bump();
                    lhs = MotionExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = MotionExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<MotionExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().kind {
                Tok::Star => {
                    self.bump();
                    lhs = MotionExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = MotionExpr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<MotionExpr, ParseError> {
        if self.peek().kind == Tok::Minus {
            self.bump();
            return Ok(MotionExpr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek().kind != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let tok = self.bump();
        match &tok.kind {
            Tok::Number(s) if s.chars().all(|c| c.is_ascii_digit()) => {
                let n = s.parse::<u32>().map_err(|_| ParseError {
                    position: tok.position,
                    kind: ParseErrorKind::BadExponent(s.clone()),
                })?;
                Ok(MotionExpr::Pow(Box::new(base), n))
            }
            other => Err(ParseError {
                position: tok.position,
                kind: ParseErrorKind::BadExponent(match other {
                    Tok::Number(s) => s.clone(),
                    other => other.describe(),
                }),
            }),
        }
    }

    fn primary(&mut self) -> Result<MotionExpr, ParseError> {
        let tok = self.bump();
        match tok.kind {
            Tok::Number(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(MotionExpr::Const(v)),
                _ => Err(ParseError {
                    position: tok.position,
                    kind: ParseErrorKind::InvalidNumber(s),
                }),
            },
            Tok::Ident(name) => match name.as_str() {
                "t" => Ok(MotionExpr::Time),
                "pi" => Ok(MotionExpr::Const(PI)),
                "sin" | "cos" | "sqrt" => {
                    self.expect(Tok::LParen, "`(`")?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(match name.as_str() {
                        "sin" => MotionExpr::Sin(arg),
                        "cos" => MotionExpr::Cos(arg),
                        _ => MotionExpr::Sqrt(arg),
                    })
                }
                _ => Err(ParseError {
                    position: tok.position,
                    kind: ParseErrorKind::UnknownIdentifier(name),
                }),
            },
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(ParseError {
                position: tok.position,
                kind: ParseErrorKind::Unexpected {
                    expected: "expression",
                    found: other.describe(),
                },
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::MotionExpr::*;
    use super::*;
    use proptest::prelude::*;

    fn b(e: MotionExpr) -> Box<MotionExpr> {
        Box::new(e)
    }

    #[test]
    fn parses_single_function() {
        assert_eq!(MotionExpr::parse("sin(t)").unwrap(), Sin(b(Time)));
    }

    #[test]
    fn parses_radius_formula() {
        let expected = Sqrt(b(Add(b(Const(1.0)), b(Pow(b(Sin(b(Time))), 2)))));
        assert_eq!(MotionExpr::parse("sqrt(1+sin(t)^2)").unwrap(), expected);
        assert_eq!(
            MotionExpr::parse(" sqrt( 1 + sin ( t ) ^ 2 ) ").unwrap(),
            expected
        );
    }

    #[test]
    fn unbalanced_paren_reports_end_position() {
        let err = MotionExpr::parse("sin(").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(matches!(err.kind, ParseErrorKind::Unexpected { .. }));
    }

    #[test]
    fn rejects_unknown_identifiers() {
        let err = MotionExpr::parse("2*tan(t)").unwrap_err();
        assert_eq!(err.position, 2);
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("tan".into()));
        assert!(MotionExpr::parse("x").is_err());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(MotionExpr::parse("").is_err());
        assert!(MotionExpr::parse("2t").is_err());
        assert!(MotionExpr::parse("t^-1").is_err());
        assert!(MotionExpr::parse("t^1.5").is_err());
        assert!(MotionExpr::parse("1e999").is_err());
        assert!(MotionExpr::parse("sin t").is_err());
        assert!(MotionExpr::parse("(t").is_err());
        assert!(MotionExpr::parse("t)").is_err());
        assert!(MotionExpr::parse("t # 1").is_err());
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(MotionExpr::parse("-t^2").unwrap(), Neg(b(Pow(b(Time), 2))));
        assert_eq!(
            MotionExpr::parse("-2*t").unwrap(),
            Mul(b(Neg(b(Const(2.0)))), b(Time))
        );
        assert_eq!(MotionExpr::parse("(-t)^2").unwrap().eval(3.0).unwrap(), 9.0);
    }

    #[test]
    fn operators_are_left_associative() {
        let e = MotionExpr::parse("8-4-2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 2.0);
        let e = MotionExpr::parse("8/4/2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn evaluates_numbers_and_pi() {
        let e = MotionExpr::parse("2.5e1 + pi - 1.").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 25.0 + PI - 1.0);
        assert_eq!(
            MotionExpr::parse("cos(2*pi)").unwrap().eval(0.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn domain_errors_are_reported() {
        let err = MotionExpr::parse("1+sqrt(t-2)")
            .unwrap()
            .eval(1.0)
            .unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::SqrtOfNegative(-1.0));
        assert_eq!(err.subexpr, "sqrt(t-2)");
        let err = MotionExpr::parse("1/sin(t)")
            .unwrap()
            .eval(0.0)
            .unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        let err = MotionExpr::parse("(10^300)*(10^300)")
            .unwrap()
            .eval(0.0)
            .unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::NonFinite);
    }

    #[test]
    fn prints_minimal_parentheses() {
        for src in [
            "sqrt(1+sin(t)^2)",
            "-sqrt(2+sin(t)^2)",
            "(t-1)*2",
            "t-(t-1)",
            "t/(t*2)",
            "(-t)^2",
            "(t^2)^3",
            "--t",
            "t*-t",
            "pi/2",
        ] {
            let e = MotionExpr::parse(src).unwrap();
            assert_eq!(e.to_string(), src);
        }
    }

    fn arb_expr() -> impl Strategy<Value = MotionExpr> {
        let leaf = prop_oneof![
            Just(Time),
            Just(Const(PI)),
            (0u32..1000).prop_map(|k| Const(k as f64 / 8.0)),
            (1e-9f64..1e9).prop_map(Const),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Neg(b(e))),
                inner.clone().prop_map(|e| Sin(b(e))),
                inner.clone().prop_map(|e| Cos(b(e))),
                inner.clone().prop_map(|e| Sqrt(b(e))),
                (inner.clone(), 0u32..5).prop_map(|(e, n)| Pow(b(e), n)),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Add(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Sub(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Mul(b(x), b(y))),
                (inner.clone(), inner).prop_map(|(x, y)| Div(b(x), b(y))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = MotionExpr::parse(&printed).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn eval_is_deterministic_and_never_nan(e in arb_expr(), t in -10.0f64..10.0) {
            match (e.eval(t), e.eval(t)) {
                (Ok(x), Ok(y)) => {
                    prop_assert!(x.is_finite());
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
                (Err(x), Err(y)) => prop_assert_eq!(x, y),
                _ => prop_assert!(false, "non-deterministic evaluation"),
            }
        }
    }
}
