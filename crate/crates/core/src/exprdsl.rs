//! A small scalar expression language for scenario files.
//!
//! Grammar (whitespace-insensitive, standard precedence):
//!
//! ```text
//! expr   := term  (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          // right-associative
//! atom   := number | 't' | 'x1'..'xN' | fn '(' expr {',' expr} ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-t^2` is `-(t^2)`. Functions:
//! `sin`, `cos`, `exp`, `log`, `sqrt`, `atan`, `abs` (one argument) and
//! `min`, `max` (two arguments). There are no conditionals: piecewise
//! behavior on/off the jump set is expressed with [`TwoBranchExpr`].

use std::fmt;

use thiserror::Error;

/// Parse or evaluation failure for the expression language.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("domain error in `{subexpr}`: {message}")]
    Domain { subexpr: String, message: String },
}

impl ExprError {
    /// Parse-time errors are configuration problems; `Domain` is a runtime
    /// numeric failure.
    pub fn is_parse(&self) -> bool {
        !matches!(self, ExprError::Domain { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Atan,
    Abs,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }
}

/// Abstract syntax tree of a scalar expression over `t` and `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// The time variable `t` (or the scalar variable in univariate mode).
    Time,
    /// State variable by zero-based index: `x1` is `Var(0)`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// Largest state-variable index referenced, if any (zero-based).
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Num(_) | Expr::Time => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) => e.max_var_index(),
            Expr::Bin(_, a, b) => a.max_var_index().max(b.max_var_index()),
            Expr::Call(_, args) => args.iter().filter_map(|a| a.max_var_index()).max(),
        }
    }
}

/// Parse `src` against a system of `dimension` state variables.
pub fn parse(src: &str, dimension: usize) -> Result<Expr, ExprError> {
    Parser::new(src, VarMode::System { dimension }).parse_all()
}

/// Parse `src` with a single scalar variable named `var` (used for class-K
/// envelopes written over `s`). The variable occupies the `t` slot of the
/// AST; evaluate with [`eval_univariate`].
pub fn parse_univariate(src: &str, var: &str) -> Result<Expr, ExprError> {
    Parser::new(src, VarMode::Univariate { name: var }).parse_all()
}

/// Evaluate an expression at time `t` and state `x`.
pub fn eval(e: &Expr, t: f64, x: &[f64]) -> Result<f64, ExprError> {
    match e {
        Expr::Num(v) => Ok(*v),
        Expr::Time => Ok(t),
        Expr::Var(i) => x.get(*i).copied().ok_or_else(|| ExprError::Domain {
            subexpr: format!("x{}", i + 1),
            message: format!("state has dimension {}", x.len()),
        }),
        Expr::Neg(inner) => Ok(-eval(inner, t, x)?),
        Expr::Bin(op, a, b) => {
            let av = eval(a, t, x)?;
            let bv = eval(b, t, x)?;
            Ok(match op {
                BinOp::Add => av + bv,
                BinOp::Sub => av - bv,
                BinOp::Mul => av * bv,
                BinOp::Div => av / bv,
                BinOp::Pow => av.powf(bv),
            })
        }
        Expr::Call(f, args) => {
            let a0 = eval(&args[0], t, x)?;
            match f {
                Func::Sin => Ok(a0.sin()),
                Func::Cos => Ok(a0.cos()),
                Func::Exp => Ok(a0.exp()),
                Func::Atan => Ok(a0.atan()),
                Func::Abs => Ok(a0.abs()),
                Func::Log => {
                    if a0 <= 0.0 {
                        Err(ExprError::Domain {
                            subexpr: print(e),
                            message: format!("log of non-positive value {a0}"),
                        })
                    } else {
                        Ok(a0.ln())
                    }
                }
                Func::Sqrt => {
                    if a0 < 0.0 {
                        Err(ExprError::Domain {
                            subexpr: print(e),
                            message: format!("sqrt of negative value {a0}"),
                        })
                    } else {
                        Ok(a0.sqrt())
                    }
                }
                Func::Min => Ok(a0.min(eval(&args[1], t, x)?)),
                Func::Max => Ok(a0.max(eval(&args[1], t, x)?)),
            }
        }
    }
}

/// Evaluate a univariate expression (parsed with [`parse_univariate`]) at `s`.
pub fn eval_univariate(e: &Expr, s: f64) -> Result<f64, ExprError> {
    eval(e, s, &[])
}

/// Render back to source form; `parse(print(e))` is structurally equal to `e`
/// for any parsed `e`.
pub fn print(e: &Expr) -> String {
    print_with_var(e, "t")
}

pub fn print_with_var(e: &Expr, var: &str) -> String {
    let mut s = String::new();
    write_expr(e, var, &mut s);
    s
}

// Precedence levels used by both the parser and the printer:
// 1 add/sub, 2 mul/div, 3 unary minus, 4 pow, 5 atoms.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        Expr::Num(_) | Expr::Time | Expr::Var(_) | Expr::Call(..) => 5,
    }
}

fn write_expr(e: &Expr, var: &str, out: &mut String) {
    let paren = |child: &Expr, needs: bool, out: &mut String| {
        if needs {
            out.push('(');
            write_expr(child, var, out);
            out.push(')');
        } else {
            write_expr(child, var, out);
        }
    };
    match e {
        Expr::Num(v) => out.push_str(&format!("{v:?}")),
        Expr::Time => out.push_str(var),
        Expr::Var(i) => out.push_str(&format!("x{}", i + 1)),
        Expr::Neg(inner) => {
            out.push('-');
            // The operand of unary minus parses at `power` level.
            paren(inner, prec(inner) < 4, out);
        }
        Expr::Bin(op, a, b) => {
            let (sym, level) = match op {
                BinOp::Add => ("+", 1),
                BinOp::Sub => ("-", 1),
                BinOp::Mul => ("*", 2),
                BinOp::Div => ("/", 2),
                BinOp::Pow => ("^", 4),
            };
            if *op == BinOp::Pow {
                // Left of `^` must be an atom; the exponent parses at `unary`.
                paren(a, prec(a) < 5, out);
                out.push('^');
                paren(b, prec(b) < 3, out);
            } else {
                paren(a, prec(a) < level, out);
                out.push_str(sym);
                // Left-associative: an equal-precedence right child needs parens.
                paren(b, prec(b) <= level, out);
            }
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_expr(a, var, out);
            }
            out.push(')');
        }
    }
}

/// A scalar expression split into on/off-jump branches; the jump branch
/// defaults to the continuous one.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBranchExpr {
    pub continuous: Expr,
    pub jump: Option<Expr>,
}

impl TwoBranchExpr {
    pub fn new(continuous: Expr) -> Self {
        TwoBranchExpr {
            continuous,
            jump: None,
        }
    }

    pub fn with_jump(continuous: Expr, jump: Expr) -> Self {
        TwoBranchExpr {
            continuous,
            jump: Some(jump),
        }
    }

    pub fn jump_branch(&self) -> &Expr {
        self.jump.as_ref().unwrap_or(&self.continuous)
    }

    pub fn max_var_index(&self) -> Option<usize> {
        self.continuous
            .max_var_index()
            .max(self.jump.as_ref().and_then(|j| j.max_var_index()))
    }
}

enum VarMode<'a> {
    System { dimension: usize },
    Univariate { name: &'a str },
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    mode: VarMode<'a>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, mode: VarMode<'a>) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            mode,
        }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Err(self.syntax(0, "empty expression"));
        }
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.syntax(self.pos, "unexpected trailing input"));
        }
        Ok(e)
    }

    fn syntax(&self, offset: usize, msg: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            offset,
            message: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::Bin(BinOp::Add, Box::new(acc), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::Bin(BinOp::Sub, Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = Expr::Bin(BinOp::Mul, Box::new(acc), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = Expr::Bin(BinOp::Div, Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.syntax(self.pos, "unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax(self.pos, "expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.syntax(self.pos, format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self
                .bytes
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_digit())
            {
                self.pos += 1;
            }
        }
        if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self
                .bytes
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_digit())
            {
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_digit())
                {
                    self.pos += 1;
                }
            } else {
                // `1e` not followed by digits: the `e` belongs to something else.
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| self.syntax(start, format!("invalid number `{text}`")))
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];

        if self.peek() == Some(b'(') {
            let f = Func::from_name(name).ok_or_else(|| ExprError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            })?;
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.peek() == Some(b',') {
                self.pos += 1;
                args.push(self.expr()?);
            }
            if self.peek() != Some(b')') {
                return Err(self.syntax(self.pos, "expected `)` or `,`"));
            }
            self.pos += 1;
            if args.len() != f.arity() {
                return Err(ExprError::Arity {
                    name: f.name().to_string(),
                    expected: f.arity(),
                    got: args.len(),
                });
            }
            return Ok(Expr::Call(f, args));
        }

        match &self.mode {
            VarMode::Univariate { name: var } => {
                if name == *var {
                    return Ok(Expr::Time);
                }
            }
            VarMode::System { dimension } => {
                if name == "t" {
                    return Ok(Expr::Time);
                }
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(idx) = rest.parse::<usize>() {
                        if idx >= 1 && idx <= *dimension {
                            return Ok(Expr::Var(idx - 1));
                        }
                        return Err(ExprError::UnknownIdentifier {
                            name: format!("{name} (dimension is {dimension})"),
                            offset: start,
                        });
                    }
                }
            }
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, t: f64, x: &[f64]) -> f64 {
        eval(&parse(src, x.len()).unwrap(), t, x).unwrap()
    }

    #[test]
    fn arctan_field_example() {
        let got = ev("-t*atan(x1)", 2.0, &[1.0]);
        assert!((got - (-2.0 * std::f64::consts::FRAC_PI_4)).abs() < 1e-15);
    }

    #[test]
    fn allee_field_vanishes_at_threshold() {
        assert_eq!(ev("x1*(1 - x1/100)*(x1/50 - 1)*0.001", 0.0, &[50.0]), 0.0);
    }

    #[test]
    fn constant_one() {
        assert_eq!(ev("1", 123.0, &[]), 1.0);
    }

    #[test]
    fn impulse_gain_example() {
        let got = ev("exp(2/4)-1", 0.0, &[]);
        assert!((got - (0.5f64.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn min_clamps() {
        assert_eq!(ev("min(3, t)", 5.0, &[]), 3.0);
    }

    #[test]
    fn sum_of_squares() {
        assert_eq!(ev("x1^2 + x2^2", 0.0, &[1.0, 2.0]), 5.0);
    }

    #[test]
    fn precedence_pow_over_unary_minus() {
        assert_eq!(ev("-t^2", 3.0, &[]), -9.0);
        assert_eq!(ev("2^-2", 0.0, &[]), 0.25);
        // right-associative
        assert_eq!(ev("2^3^2", 0.0, &[]), 512.0);
    }

    #[test]
    fn syntax_error_carries_offset() {
        match parse("1 + * 2", 0) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_rejected() {
        assert!(matches!(
            parse("foo + 1", 0),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        // variable index above the dimension
        assert!(matches!(
            parse("x3", 2),
            Err(ExprError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn arity_mismatch_rejected() {
        assert!(matches!(
            parse("sin(1, 2)", 0),
            Err(ExprError::Arity { .. })
        ));
        assert!(matches!(parse("min(1)", 0), Err(ExprError::Arity { .. })));
    }

    #[test]
    fn log_of_negative_is_domain_error() {
        let e = parse("log(t)", 0).unwrap();
        assert!(matches!(
            eval(&e, -1.0, &[]),
            Err(ExprError::Domain { .. })
        ));
        let e = parse("sqrt(t)", 0).unwrap();
        assert!(matches!(
            eval(&e, -4.0, &[]),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn print_round_trips_structurally() {
        for src in [
            "-t*atan(x1)",
            "x1*(1 - x1/100)*(x1/50 - 1)*0.001",
            "2^-2",
            "1 - 2 - 3",
            "1 - (2 - 3)",
            "-(t + 1)",
            "-t^2",
            "(-t)^2",
            "min(3, t) * max(t, x1)",
            "2^(t+1)^3",
            "t/(1 + t^2)",
        ] {
            let ast = parse(src, 1).unwrap();
            let printed = print(&ast);
            let reparsed = parse(&printed, 1).unwrap();
            assert_eq!(ast, reparsed, "round-trip failed for `{src}` -> `{printed}`");
        }
    }

    #[test]
    fn univariate_mode_uses_custom_variable() {
        let e = parse_univariate("s^2", "s").unwrap();
        assert_eq!(eval_univariate(&e, 3.0).unwrap(), 9.0);
        // `t` is not a variable in this mode
        assert!(parse_univariate("t^2", "s").is_err());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let e = parse("sin(t)*exp(x1)/(1+t^2)", 1).unwrap();
        let a = eval(&e, 0.7, &[0.3]).unwrap();
        let b = eval(&e, 0.7, &[0.3]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
