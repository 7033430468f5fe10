//! Expression trees for defining functions and map families.

use std::fmt;

/// The closed set of variables an expression may reference.
///
/// `u` stands for Re w; `zb`/`wb` are the conjugated coordinates.
/// `a` is the family parameter and `j` the family index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Z,
    W,
    U,
    Zb,
    Wb,
    A,
    J,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::Z => "z",
            Var::W => "w",
            Var::U => "u",
            Var::Zb => "zb",
            Var::Wb => "wb",
            Var::A => "a",
            Var::J => "j",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Some(match s {
            "z" => Var::Z,
            "w" => Var::W,
            "u" => Var::U,
            "zb" => Var::Zb,
            "wb" => Var::Wb,
            "a" => Var::A,
            "j" => Var::J,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Re,
    Im,
    Abs,
    Conj,
    Exp,
    Log,
    Sqrt,
    Neg,
}

impl UnOp {
    pub fn name(self) -> &'static str {
        match self {
            UnOp::Re => "re",
            UnOp::Im => "im",
            UnOp::Abs => "abs",
            UnOp::Conj => "conj",
            UnOp::Exp => "exp",
            UnOp::Log => "log",
            UnOp::Sqrt => "sqrt",
            UnOp::Neg => "neg",
        }
    }

    pub fn from_name(s: &str) -> Option<UnOp> {
        Some(match s {
            "re" => UnOp::Re,
            "im" => UnOp::Im,
            "abs" => UnOp::Abs,
            "conj" => UnOp::Conj,
            "exp" => UnOp::Exp,
            "log" => UnOp::Log,
            "sqrt" => UnOp::Sqrt,
            "neg" => UnOp::Neg,
            _ => return None,
        })
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

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Literal with real and imaginary part. The lexer only produces pure
    /// real or pure imaginary literals; mixed literals arise programmatically.
    Lit(f64, f64),
    Var(Var),
    Un(UnOp, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn lit(re: f64) -> Expr {
        Expr::Lit(re, 0.0)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn un(op: UnOp, e: Expr) -> Expr {
        Expr::Un(op, Box::new(e))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Lit(..) | Expr::Var(_) => 1,
            Expr::Un(_, e) => 1 + e.node_count(),
            Expr::Bin(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Does this subtree depend on the coordinates (z, w) in any form?
    pub fn depends_on_coords(&self) -> bool {
        match self {
            Expr::Lit(..) => false,
            Expr::Var(v) => matches!(v, Var::Z | Var::W | Var::U | Var::Zb | Var::Wb),
            Expr::Un(_, e) => e.depends_on_coords(),
            Expr::Bin(_, a, b) => a.depends_on_coords() || b.depends_on_coords(),
        }
    }

    /// Syntactic holomorphy in (z, w): no conjugated coordinates and no
    /// real-part/modulus operator applied to a coordinate-dependent subtree.
    /// Conjugation of the parameter `a` alone is allowed.
    pub fn is_holomorphic(&self) -> bool {
        self.holomorphy_violation().is_none()
    }

    /// First violation found, as a human-readable reason.
    pub fn holomorphy_violation(&self) -> Option<String> {
        match self {
            Expr::Lit(..) => None,
            Expr::Var(v) => match v {
                Var::Zb | Var::Wb | Var::U => Some(format!("uses `{}`", v.name())),
                _ => None,
            },
            Expr::Un(op, e) => {
                if matches!(op, UnOp::Re | UnOp::Im | UnOp::Abs | UnOp::Conj) && e.depends_on_coords() {
                    return Some(format!("applies `{}` to a z/w-dependent subexpression", op.name()));
                }
                e.holomorphy_violation()
            }
            Expr::Bin(_, a, b) => a.holomorphy_violation().or_else(|| b.holomorphy_violation()),
        }
    }

    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Lit(..) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Expr::Un(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Substitute every occurrence of `var` by `replacement`.
    pub fn subst(&self, var: Var, replacement: &Expr) -> Expr {
        match self {
            Expr::Lit(..) => self.clone(),
            Expr::Var(v) => {
                if *v == var {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Un(op, e) => Expr::un(*op, e.subst(var, replacement)),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.subst(var, replacement), b.subst(var, replacement)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Un(UnOp::Neg, _) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Lit(re, im) => {
                if *im == 0.0 {
                    write!(f, "{}", re)?;
                } else if *re == 0.0 {
                    if *im == 1.0 {
                        write!(f, "i")?;
                    } else {
                        write!(f, "{}i", im)?;
                    }
                } else {
                    write!(f, "({} + {}i)", re, im)?;
                }
            }
            Expr::Var(v) => write!(f, "{}", v.name())?,
            Expr::Un(UnOp::Neg, e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 3)?;
            }
            Expr::Un(op, e) => {
                write!(f, "{}(", op.name())?;
                e.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Bin(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 1),
                    // the right operand of - and / needs strictly higher precedence
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => ("*", 2, 2),
                    BinOp::Div => ("/", 2, 3),
                    // right-associative
                    BinOp::Pow => ("^", 5, 4),
                };
                a.fmt_prec(f, lp)?;
                write!(f, "{}", sym)?;
                b.fmt_prec(f, rp)?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
