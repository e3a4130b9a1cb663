//! Integer/boolean expressions: parsing, type checking and evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::value::{Store, Type, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Eq,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(BigInt),
    Bool(bool),
    Var(String),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// Variables read by the expression.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Not(e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Infers the type of the expression under the given declarations.
    pub fn type_of(&self, decls: &BTreeMap<String, Type>) -> Result<Type> {
        let type_err = |msg: String| Error::Type { msg, node: None };
        match self {
            Expr::Int(_) => Ok(Type::Int),
            Expr::Bool(_) => Ok(Type::Bool),
            Expr::Var(v) => decls
                .get(v)
                .copied()
                .ok_or_else(|| Error::UnknownVariable(v.clone())),
            Expr::Not(e) => match e.type_of(decls)? {
                Type::Bool => Ok(Type::Bool),
                t => Err(type_err(format!("`!` applied to {t} in `{self}`"))),
            },
            Expr::Bin(op, l, r) => {
                let (lt, rt) = (l.type_of(decls)?, r.type_of(decls)?);
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Lt | BinOp::Le => {
                        if lt != Type::Int || rt != Type::Int {
                            return Err(type_err(format!("`{}` needs int operands in `{self}`", op.symbol())));
                        }
                        Ok(if matches!(op, BinOp::Lt | BinOp::Le) { Type::Bool } else { Type::Int })
                    }
                    BinOp::Eq => {
                        if lt != rt {
                            return Err(type_err(format!("`==` compares {lt} with {rt} in `{self}`")));
                        }
                        Ok(Type::Bool)
                    }
                    BinOp::And | BinOp::Or => {
                        if lt != Type::Bool || rt != Type::Bool {
                            return Err(type_err(format!("`{}` needs bool operands in `{self}`", op.symbol())));
                        }
                        Ok(Type::Bool)
                    }
                }
            }
        }
    }

    /// Evaluates the expression in `store`. Reading an unbound variable is an error.
    pub fn eval(&self, store: &Store) -> Result<Value> {
        match self {
            Expr::Int(n) => Ok(Value::Int(n.clone())),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Var(v) => store.get(v).cloned().ok_or_else(|| Error::UndefinedVariable {
                var: v.clone(),
                node: None,
            }),
            Expr::Not(e) => Ok(Value::Bool(!expect_bool(e.eval(store)?)?)),
            Expr::Bin(op, l, r) => {
                // Short-circuiting would hide undefined reads on the right.
                let (lv, rv) = (l.eval(store)?, r.eval(store)?);
                Ok(match op {
                    BinOp::Add => Value::Int(expect_int(lv)? + expect_int(rv)?),
                    BinOp::Sub => Value::Int(expect_int(lv)? - expect_int(rv)?),
                    BinOp::Mul => Value::Int(expect_int(lv)? * expect_int(rv)?),
                    BinOp::Lt => Value::Bool(expect_int(lv)? < expect_int(rv)?),
                    BinOp::Le => Value::Bool(expect_int(lv)? <= expect_int(rv)?),
                    BinOp::Eq => {
                        if lv.ty() != rv.ty() {
                            return Err(runtime_type("`==` on values of different types"));
                        }
                        Value::Bool(lv == rv)
                    }
                    BinOp::And => Value::Bool(expect_bool(lv)? & expect_bool(rv)?),
                    BinOp::Or => Value::Bool(expect_bool(lv)? | expect_bool(rv)?),
                })
            }
        }
    }

    /// Evaluates a boolean condition.
    pub fn eval_bool(&self, store: &Store) -> Result<bool> {
        expect_bool(self.eval(store)?)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Or, ..) => 1,
            Expr::Bin(BinOp::And, ..) => 2,
            Expr::Bin(BinOp::Lt | BinOp::Le | BinOp::Eq, ..) => 3,
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 4,
            Expr::Bin(BinOp::Mul, ..) => 5,
            Expr::Not(_) => 6,
            _ => 7,
        }
    }
}

fn runtime_type(msg: &str) -> Error {
    Error::Type {
        msg: msg.to_string(),
        node: None,
    }
}

fn expect_int(v: Value) -> Result<BigInt> {
    match v {
        Value::Int(n) => Ok(n),
        Value::Bool(_) => Err(runtime_type("expected an int, found a bool")),
    }
}

fn expect_bool(v: Value) -> Result<bool> {
    match v {
        Value::Bool(b) => Ok(b),
        Value::Int(_) => Err(runtime_type("expected a bool, found an int")),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Not(e) => {
                if e.precedence() < self.precedence() {
                    write!(f, "!({e})")
                } else {
                    write!(f, "!{e}")
                }
            }
            Expr::Bin(op, l, r) => {
                let prec = self.precedence();
                // Left-associative: the right operand needs parens at equal
                // precedence. Comparisons do not chain, so neither side may
                // be a bare comparison.
                let cmp = matches!(op, BinOp::Lt | BinOp::Le | BinOp::Eq);
                if l.precedence() < prec || (cmp && l.precedence() == prec) {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if r.precedence() <= prec {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

/// Parses an expression; `col` offsets reported error columns.
pub fn parse_expr(text: &str, line: usize, col: usize) -> Result<Expr> {
    let tokens = tokenize(text, line, col)?;
    let mut parser = ExprParser {
        tokens,
        pos: 0,
        line,
        end_col: col + text.len(),
    };
    let e = parser.or()?;
    if let Some((tok, c)) = parser.tokens.get(parser.pos) {
        return Err(Error::Syntax {
            line,
            col: *c,
            msg: format!("unexpected `{}` after expression", tok.describe()),
        });
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => n.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Op(s) => (*s).to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn tokenize(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>> {
    const OPS: &[(&str, &str)] = &[
        ("<=", "<="),
        ("≤", "<="),
        ("==", "=="),
        ("&&", "&&"),
        ("∧", "&&"),
        ("||", "||"),
        ("∨", "||"),
        ("<", "<"),
        ("+", "+"),
        ("-", "-"),
        ("−", "-"),
        ("*", "*"),
        ("!", "!"),
        ("¬", "!"),
    ];
    let mut out = Vec::new();
    let mut i = 0;
    let bytes = text.as_bytes();
    'outer: while i < text.len() {
        let col = col0 + text[..i].chars().count();
        let c = text[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '(' {
            out.push((Tok::LParen, col));
            i += 1;
            continue;
        }
        if c == ')' {
            out.push((Tok::RParen, col));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < text.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((Tok::Int(text[start..i].parse().unwrap()), col));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < text.len() {
                let ch = text[i..].chars().next().unwrap();
                if ch.is_alphanumeric() || ch == '_' {
                    i += ch.len_utf8();
                } else {
                    break;
                }
            }
            let word = &text[start..i];
            let tok = match word {
                "not" => Tok::Op("!"),
                "and" => Tok::Op("&&"),
                "or" => Tok::Op("||"),
                _ => Tok::Ident(word.to_string()),
            };
            out.push((tok, col));
            continue;
        }
        for (lexeme, op) in OPS {
            if text[i..].starts_with(lexeme) {
                out.push((Tok::Op(op), col));
                i += lexeme.len();
                continue 'outer;
            }
        }
        return Err(Error::Syntax {
            line,
            col,
            msg: format!("unexpected character `{c}` in expression"),
        });
    }
    Ok(out)
}

struct ExprParser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl ExprParser {
    fn peek_op(&self) -> Option<&'static str> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(op), _)) => Some(op),
            _ => None,
        }
    }

    fn error(&self, msg: &str) -> Error {
        let col = self
            .tokens
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.end_col);
        Error::Syntax {
            line: self.line,
            col,
            msg: msg.to_string(),
        }
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Self) -> Result<Expr>,
    ) -> Result<Expr> {
        let mut lhs = next(self)?;
        while let Some(op) = self.peek_op() {
            let Some((_, bin)) = ops.iter().find(|(s, _)| *s == op) else {
                break;
            };
            self.pos += 1;
            let rhs = next(self)?;
            lhs = Expr::bin(*bin, lhs, rhs);
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr> {
        self.binary_level(&[("||", BinOp::Or)], Self::and)
    }

    fn and(&mut self) -> Result<Expr> {
        self.binary_level(&[("&&", BinOp::And)], Self::cmp)
    }

    fn cmp(&mut self) -> Result<Expr> {
        // Comparisons do not chain.
        let lhs = self.sum()?;
        let op = match self.peek_op() {
            Some("<") => BinOp::Lt,
            Some("<=") => BinOp::Le,
            Some("==") => BinOp::Eq,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.sum()?;
        Ok(Expr::bin(op, lhs, rhs))
    }

    fn sum(&mut self) -> Result<Expr> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::product)
    }

    fn product(&mut self) -> Result<Expr> {
        self.binary_level(&[("*", BinOp::Mul)], Self::unary)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some("!") {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("expected an expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Int(n) => Ok(Expr::Int(n)),
            Tok::Ident(name) => Ok(match name.as_str() {
                "true" => Expr::Bool(true),
                "false" => Expr::Bool(false),
                _ => Expr::Var(name),
            }),
            Tok::LParen => {
                let e = self.or()?;
                match self.tokens.get(self.pos) {
                    Some((Tok::RParen, _)) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(self.error("expected `)`")),
                }
            }
            other => {
                self.pos -= 1;
                Err(self.error(&format!("unexpected `{}`", other.describe())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Expr {
        parse_expr(text, 1, 1).unwrap()
    }

    #[test]
    fn evaluates_increment() {
        let s = Store::new().with("q", 1);
        assert_eq!(p("q+1").eval(&s).unwrap(), Value::int(2));
    }

    #[test]
    fn undefined_read_names_the_variable() {
        let s = Store::new().with("b", true);
        match p("h").eval(&s) {
            Err(Error::UndefinedVariable { var, .. }) => assert_eq!(var, "h"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn evaluates_boolean_connectives() {
        let s = Store::new().with("b", false).with("q", 0);
        assert_eq!(p("¬b ∧ q==0").eval(&s).unwrap(), Value::Bool(true));
        assert_eq!(p("!b && q == 0").eval(&s).unwrap(), Value::Bool(true));
        assert_eq!(p("b || q < 0").eval(&s).unwrap(), Value::Bool(false));
        assert_eq!(p("not b and q <= 0").eval(&s).unwrap(), Value::Bool(true));
    }

    #[test]
    fn precedence_and_associativity() {
        let s = Store::new();
        assert_eq!(p("1 + 2 * 3").eval(&s).unwrap(), Value::int(7));
        assert_eq!(p("10 - 3 - 2").eval(&s).unwrap(), Value::int(5));
        assert_eq!(p("10 - (3 - 2)").eval(&s).unwrap(), Value::int(9));
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for text in ["10 - (3 - 2)", "!(a && b) || c", "(x + 1) * y < 3", "!!a", "a == (b == c)", "(a == b) == c"] {
            let e = p(text);
            assert_eq!(p(&e.to_string()), e, "{text} -> {e}");
        }
    }

    #[test]
    fn type_errors_are_reported() {
        let decls: BTreeMap<String, Type> =
            [("q".to_string(), Type::Int), ("b".to_string(), Type::Bool)].into();
        assert_eq!(p("q + 1 < 3 && b").type_of(&decls).unwrap(), Type::Bool);
        assert!(matches!(p("q && b").type_of(&decls), Err(Error::Type { .. })));
        assert!(matches!(p("q == b").type_of(&decls), Err(Error::Type { .. })));
        assert!(matches!(p("z + 1").type_of(&decls), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn syntax_errors_carry_columns() {
        match parse_expr("q + * 2", 4, 10) {
            Err(Error::Syntax { line, col, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(col, 14);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_expr("(q + 1", 1, 1).is_err());
        assert!(parse_expr("q $ 1", 1, 1).is_err());
    }
}
