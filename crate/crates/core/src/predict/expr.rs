//! A small arithmetic expression language for analytic ground-truth models.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            right-associative
//! atom    := number | feature | func '(' sum (',' sum)* ')'
//!          | feature '==' string | '(' sum ')'
//! ```
//!
//! So `-x^2` is `-(x^2)` and `2^3^2` is `2^9`. Feature names are bare
//! identifiers or backtick-quoted (`` `petal width` ``). Categorical features
//! may only appear as the left side of an `==` test against a string level.

use std::fmt;

use super::{check_row_width, PredictError, Predictor};
use crate::tabular::{FeatureKind, FeatureSpec, Row, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Expression tree. Feature references are indices into the bound schema.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Feature(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    LevelEq { feature: usize, level: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown feature `{name}` at offset {offset}")]
    UnknownFeature { name: String, offset: usize },
    #[error("categorical feature `{name}` used arithmetically at offset {offset}")]
    CategoricalArithmetic { name: String, offset: usize },
    #[error("`==` needs a categorical feature, `{name}` at offset {offset} is numeric")]
    NumericEquality { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("non-finite intermediate result")]
    NonFinite,
    #[error("feature {0} has the wrong value type")]
    WrongType(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Op(char),
    EqEq,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut out = Vec::new();
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() {
            let start = self.pos;
            let c = bytes[self.pos];
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    self.pos += 1;
                    continue;
                }
                b'+' | b'-' | b'*' | b'/' | b'^' => {
                    self.pos += 1;
                    out.push((start, Tok::Op(c as char)));
                }
                b'(' => {
                    self.pos += 1;
                    out.push((start, Tok::LParen));
                }
                b')' => {
                    self.pos += 1;
                    out.push((start, Tok::RParen));
                }
                b',' => {
                    self.pos += 1;
                    out.push((start, Tok::Comma));
                }
                b'=' => {
                    if bytes.get(self.pos + 1) == Some(&b'=') {
                        self.pos += 2;
                        out.push((start, Tok::EqEq));
                    } else {
                        return Err(Self::syntax(start, "expected `==`"));
                    }
                }
                b'"' => {
                    let rest = &self.src[start + 1..];
                    let end = rest
                        .find('"')
                        .ok_or_else(|| Self::syntax(start, "unterminated string"))?;
                    out.push((start, Tok::Str(rest[..end].to_string())));
                    self.pos = start + 1 + end + 1;
                }
                b'`' => {
                    let rest = &self.src[start + 1..];
                    let end = rest
                        .find('`')
                        .ok_or_else(|| Self::syntax(start, "unterminated quoted name"))?;
                    out.push((start, Tok::Ident(rest[..end].to_string())));
                    self.pos = start + 1 + end + 1;
                }
                b'0'..=b'9' | b'.' => out.push((start, self.number()?)),
                c if c == b'_' || c.is_ascii_alphabetic() => {
                    while self.pos < bytes.len()
                        && (bytes[self.pos] == b'_' || bytes[self.pos].is_ascii_alphanumeric())
                    {
                        self.pos += 1;
                    }
                    out.push((start, Tok::Ident(self.src[start..self.pos].to_string())));
                }
                _ => {
                    let ch = self.src[start..].chars().next().unwrap_or('?');
                    return Err(Self::syntax(start, format!("unexpected character `{ch}`")));
                }
            }
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                look += 1;
            }
            if look < bytes.len() && bytes[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| Self::syntax(start, format!("bad number `{}`", &self.src[start..self.pos])))
    }
}

struct Parser<'s> {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
    schema: &'s [FeatureSpec],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.idx).map_or(self.end, |(o, _)| *o)
    }

    fn unexpected(&self, what: &str) -> ParseError {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(t) => format!("{t:?}"),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {what}, found {found}"),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.idx += 1;
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.idx += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.idx += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.idx += 1;
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.idx += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.idx += 1;
                let e = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.idx += 1;
                if self.peek() == Some(&Tok::LParen) {
                    if let Some(func) = Func::from_name(&name) {
                        return self.call(func);
                    }
                }
                let feature = self
                    .schema
                    .iter()
                    .position(|f| f.name == name)
                    .ok_or_else(|| ParseError::UnknownFeature {
                        name: name.clone(),
                        offset,
                    })?;
                let categorical = !self.schema[feature].kind.is_numeric();
                if self.peek() == Some(&Tok::EqEq) {
                    if !categorical {
                        return Err(ParseError::NumericEquality { name, offset });
                    }
                    self.idx += 1;
                    match self.peek().cloned() {
                        Some(Tok::Str(level)) => {
                            self.idx += 1;
                            Ok(Expr::LevelEq { feature, level })
                        }
                        _ => Err(self.unexpected("a quoted level")),
                    }
                } else if categorical {
                    Err(ParseError::CategoricalArithmetic { name, offset })
                } else {
                    Ok(Expr::Feature(feature))
                }
            }
            _ => Err(self.unexpected("a number, feature, function or `(`")),
        }
    }

    fn call(&mut self, func: Func) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.sum()?];
        while self.peek() == Some(&Tok::Comma) {
            self.idx += 1;
            args.push(self.sum()?);
        }
        if args.len() != func.arity() {
            return Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!(
                    "`{}` takes {} argument(s), got {}",
                    func.name(),
                    func.arity(),
                    args.len()
                ),
            });
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(Expr::Call(func, args))
    }
}

/// Parses `source` against `schema`, resolving feature names to indices.
pub fn parse_expression(source: &str, schema: &[FeatureSpec]) -> Result<ExpressionModel, ParseError> {
    let toks = Lexer { src: source, pos: 0 }.tokens()?;
    let mut p = Parser {
        toks,
        idx: 0,
        end: source.len(),
        schema,
    };
    let ast = p.sum()?;
    if p.peek().is_some() {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(ExpressionModel {
        source: source.to_string(),
        ast,
        schema: schema.to_vec(),
    })
}

fn checked(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    /// Evaluates against one row; domain errors are reported, never NaN.
    pub fn eval(&self, row: &[Value]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Feature(j) => row[*j].as_num().ok_or(EvalError::WrongType(*j)),
            Expr::Neg(e) => Ok(-e.eval(row)?),
            Expr::LevelEq { feature, level } => {
                let v = row[*feature].as_cat().ok_or(EvalError::WrongType(*feature))?;
                Ok(if v == level { 1.0 } else { 0.0 })
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(row)?, b.eval(row)?);
                match op {
                    BinOp::Add => checked(a + b),
                    BinOp::Sub => checked(a - b),
                    BinOp::Mul => checked(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero)
                        } else {
                            checked(a / b)
                        }
                    }
                    BinOp::Pow => checked(a.powf(b)),
                }
            }
            Expr::Call(f, args) => {
                let x = args[0].eval(row)?;
                match f {
                    Func::Abs => Ok(x.abs()),
                    Func::Exp => checked(x.exp()),
                    Func::Log => {
                        if x <= 0.0 {
                            Err(EvalError::LogDomain(x))
                        } else {
                            Ok(x.ln())
                        }
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            Err(EvalError::SqrtDomain(x))
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Min => Ok(x.min(args[1].eval(row)?)),
                    Func::Max => Ok(x.max(args[1].eval(row)?)),
                }
            }
        }
    }

    /// Renders fully parenthesised source that parses back to the same tree.
    pub fn to_source(&self, schema: &[FeatureSpec]) -> String {
        let mut s = String::new();
        self.write_source(schema, &mut s);
        s
    }

    fn write_source(&self, schema: &[FeatureSpec], out: &mut String) {
        use std::fmt::Write;
        match self {
            Expr::Num(v) => {
                // negative literals need parentheses since `-` is an operator
                if *v < 0.0 {
                    let _ = write!(out, "(-{:?})", -v);
                } else {
                    let _ = write!(out, "{v:?}");
                }
            }
            Expr::Feature(j) => out.push_str(&quote_name(&schema[*j].name)),
            Expr::Neg(e) => {
                out.push_str("(-");
                e.write_source(schema, out);
                out.push(')');
            }
            Expr::LevelEq { feature, level } => {
                let _ = write!(out, "({} == \"{}\")", quote_name(&schema[*feature].name), level);
            }
            Expr::Binary(op, a, b) => {
                out.push('(');
                a.write_source(schema, out);
                let _ = write!(out, " {} ", op.symbol());
                b.write_source(schema, out);
                out.push(')');
            }
            Expr::Call(f, args) => {
                out.push_str(f.name());
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    a.write_source(schema, out);
                }
                out.push(')');
            }
        }
    }
}

fn quote_name(name: &str) -> String {
    let bare = name
        .chars()
        .next()
        .is_some_and(|c| c == '_' || c.is_ascii_alphabetic())
        && name.chars().all(|c| c == '_' || c.is_ascii_alphanumeric())
        && Func::from_name(name).is_none();
    if bare {
        name.to_string()
    } else {
        format!("`{name}`")
    }
}

/// A parsed expression bound to a feature schema.
#[derive(Debug, Clone)]
pub struct ExpressionModel {
    source: String,
    ast: Expr,
    schema: Vec<FeatureSpec>,
}

impl ExpressionModel {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval_row(&self, row: &[Value]) -> Result<f64, EvalError> {
        self.ast.eval(row)
    }
}

impl fmt::Display for ExpressionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Predictor for ExpressionModel {
    fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        check_row_width(&self.schema, rows)?;
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                self.ast.eval(r).map_err(|e| match e {
                    EvalError::WrongType(j) => PredictError::WrongValueType {
                        feature: self.schema[j].name.clone(),
                        expected: match self.schema[j].kind {
                            FeatureKind::Numeric => "numeric",
                            FeatureKind::Categorical { .. } => "categorical",
                        },
                    },
                    source => PredictError::Eval { row: i, source },
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<FeatureSpec> {
        vec![
            FeatureSpec {
                name: "x1".into(),
                kind: FeatureKind::Numeric,
            },
            FeatureSpec {
                name: "x2".into(),
                kind: FeatureKind::Numeric,
            },
            FeatureSpec {
                name: "c1".into(),
                kind: FeatureKind::Categorical {
                    levels: vec!["a".into(), "b".into()],
                },
            },
        ]
    }

    fn row(x1: f64, x2: f64, c: &str) -> Row {
        vec![Value::Num(x1), Value::Num(x2), Value::Cat(c.into())]
    }

    fn eval(src: &str, r: &Row) -> f64 {
        parse_expression(src, &schema()).unwrap().eval_row(r).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("1+2*3", &row(0.0, 0.0, "a")), 7.0);
        assert_eq!(eval("2*x1 + x2^2", &row(3.0, 2.0, "a")), 10.0);
        assert_eq!(eval("-x1^2", &row(3.0, 0.0, "a")), -9.0);
        assert_eq!(eval("2^3^2", &row(0.0, 0.0, "a")), 512.0);
        assert_eq!(eval("2^-1", &row(0.0, 0.0, "a")), 0.5);
        assert_eq!(eval("10 - 4 - 3", &row(0.0, 0.0, "a")), 3.0);
        assert_eq!(eval("12 / 3 / 2", &row(0.0, 0.0, "a")), 2.0);
        assert_eq!(eval("(1+2)*3", &row(0.0, 0.0, "a")), 9.0);
    }

    #[test]
    fn functions_and_levels() {
        let r = row(-4.0, 9.0, "b");
        assert_eq!(eval("abs(x1) + sqrt(x2)", &r), 7.0);
        assert_eq!(eval("max(x1, x2) - min(x1, x2)", &r), 13.0);
        assert_eq!(eval("c1 == \"b\"", &r), 1.0);
        assert_eq!(eval("3 * (c1 == \"a\")", &r), 0.0);
        assert_eq!(eval("log(exp(2))", &r), 2.0);
        assert_eq!(eval("1.5e1", &r), 15.0);
    }

    #[test]
    fn incomplete_expression_offset() {
        let err = parse_expression("x1 *", &schema()).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn unknown_feature_rejected() {
        let err = parse_expression("x1 + zz", &schema()).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownFeature {
                name: "zz".into(),
                offset: 5
            }
        );
    }

    #[test]
    fn categorical_arithmetic_rejected() {
        assert!(matches!(
            parse_expression("c1 + 1", &schema()),
            Err(ParseError::CategoricalArithmetic { .. })
        ));
        assert!(matches!(
            parse_expression("x1 == \"a\"", &schema()),
            Err(ParseError::NumericEquality { .. })
        ));
    }

    #[test]
    fn trailing_garbage() {
        assert!(matches!(
            parse_expression("x1 x2", &schema()),
            Err(ParseError::Syntax { offset: 3, .. })
        ));
        assert!(parse_expression("(x1", &schema()).is_err());
        assert!(parse_expression("min(x1)", &schema()).is_err());
        assert!(parse_expression("", &schema()).is_err());
    }

    #[test]
    fn domain_errors() {
        let r = row(-1.0, 0.0, "a");
        let m = parse_expression("log(x1)", &schema()).unwrap();
        assert_eq!(m.eval_row(&r), Err(EvalError::LogDomain(-1.0)));
        let m = parse_expression("sqrt(x1)", &schema()).unwrap();
        assert_eq!(m.eval_row(&r), Err(EvalError::SqrtDomain(-1.0)));
        let m = parse_expression("1 / x2", &schema()).unwrap();
        assert_eq!(m.eval_row(&r), Err(EvalError::DivisionByZero));
        let m = parse_expression("log(x2)", &schema()).unwrap();
        assert!(m.predict_batch(&[r]).is_err());
    }

    #[test]
    fn predict_batch_identity_and_empty() {
        let m = parse_expression("x1", &schema()).unwrap();
        let out = m
            .predict_batch(&[row(1.0, 0.0, "a"), row(2.0, 0.0, "a")])
            .unwrap();
        assert_eq!(out, [1.0, 2.0]);
        assert!(m.predict_batch(&[]).unwrap().is_empty());
    }

    #[test]
    fn backtick_names_and_function_named_features() {
        let schema = vec![
            FeatureSpec {
                name: "petal width".into(),
                kind: FeatureKind::Numeric,
            },
            FeatureSpec {
                name: "exp".into(),
                kind: FeatureKind::Numeric,
            },
        ];
        let m = parse_expression("`petal width` * exp", &schema).unwrap();
        assert_eq!(m.eval_row(&[Value::Num(2.0), Value::Num(3.0)]).unwrap(), 6.0);
        let printed = m.ast().to_source(&schema);
        let again = parse_expression(&printed, &schema).unwrap();
        assert_eq!(again.ast(), m.ast());
    }
}
