//! The `.cdl` experiment file format.
//!
//! ```text
//! # comment
//! domain {
//!   rho = abs(z)^4;          # graph form: Im w > rho(z, zb, u)
//!   # or any number of implicit constraints r < 0:
//!   r = abs(z) - 1;
//!   r = abs(w) - 1;
//!   radius = 2;
//! }
//! family {
//!   f = z;
//!   g = (w - a)/(1 - conj(a)*w);
//!   alpha(j) = 1 - 2^(-j);   # or: alpha = [0.5, 0.75, 0.875];
//!   limit = 1;
//! }
//! experiment {
//!   q = (0, 0);
//!   jmin = 1; jmax = 12;
//!   grid = 5; gridradius = 0.5;
//!   cloud = 2000; cloudboundary = 500; cloudradius = 3;
//!   seed = 7;
//!   mode = auto;             # frankel | variety | auto
//!   tol.zero = 1e-3;
//! }
//! target {                   # optional closed-form limit map
//!   f = z; g = w/(1 - w);
//! }
//! ```

use super::ast::Expr;
use super::eval::{eval, Bindings};
use super::lexer::{lex, Tok};
use super::parser::{expr, Cursor};
use crate::domain::{DefiningFunction, DomainSpec};
use crate::error::{Error, ParseError, Result};
use crate::family::{MapFamily, Schedule};
use crate::scalar::{CPair, Cx, Real};
use num_complex::Complex;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMode {
    Frankel,
    Variety,
    Auto,
}

impl ScalingMode {
    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::Frankel => "frankel",
            ScalingMode::Variety => "variety",
            ScalingMode::Auto => "auto",
        }
    }
}

/// Named thresholds. Any of them can be overridden by a `tol.<name>` key.
#[derive(Debug, Clone)]
pub struct Tolerances<T: Real> {
    /// |lambda| at j_max below which an eigenvalue counts as vanishing.
    pub zero: T,
    /// minimal per-step decrease of ln|lambda| for the vanishing trend.
    pub zero_trend: T,
    /// discriminant modulus below which an eigenpair is degenerate.
    pub eig_degenerate: T,
    /// |det J| below which a Jacobian is degenerate.
    pub det_degenerate: T,
    /// |det| of the unit-eigenvector matrix below which scaling refuses.
    pub eigvec_indep: T,
    /// relative spread around the running median that still counts as flat.
    pub norm_flat: T,
    /// per-step slope of ln M_j above which the norms count as growing.
    pub norm_growth: T,
    /// consecutive-cloud distance under which a scaling run counts as Cauchy.
    pub hausdorff: T,
    /// scaled-sup threshold certifying the flat-boundary collapse.
    pub collapse: T,
    /// relative tolerance of the m_z doubling test.
    pub mz: T,
    /// Cauchy threshold for the boundary-fit ratios.
    pub fit_cauchy: T,
    /// allowed imaginary residue of real-valued defining functions.
    pub real_imag: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            zero: T::of(1e-3),
            zero_trend: T::of(0.1),
            eig_degenerate: T::of(1e-9),
            det_degenerate: T::of(1e-14),
            eigvec_indep: T::of(0.1),
            norm_flat: T::of(1.0),
            norm_growth: T::of(0.2),
            hausdorff: T::of(0.05),
            collapse: T::of(1e-12),
            mz: T::of(0.25),
            fit_cauchy: T::of(1e-2),
            real_imag: T::of(1e-12),
        }
    }
}

impl<T: Real> Tolerances<T> {
    fn set(&mut self, name: &str, v: T) -> std::result::Result<(), String> {
        match name {
            "zero" => self.zero = v,
            "zero_trend" => self.zero_trend = v,
            "eig_degenerate" => self.eig_degenerate = v,
            "det_degenerate" => self.det_degenerate = v,
            "eigvec_indep" => self.eigvec_indep = v,
            "norm_flat" => self.norm_flat = v,
            "norm_growth" => self.norm_growth = v,
            "hausdorff" => self.hausdorff = v,
            "collapse" => self.collapse = v,
            "mz" => self.mz = v,
            "fit_cauchy" => self.fit_cauchy = v,
            "real_imag" => self.real_imag = v,
            _ => return Err(format!("unknown tolerance `tol.{name}`")),
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, T)> {
        vec![
            ("zero", self.zero),
            ("zero_trend", self.zero_trend),
            ("eig_degenerate", self.eig_degenerate),
            ("det_degenerate", self.det_degenerate),
            ("eigvec_indep", self.eigvec_indep),
            ("norm_flat", self.norm_flat),
            ("norm_growth", self.norm_growth),
            ("hausdorff", self.hausdorff),
            ("collapse", self.collapse),
            ("mz", self.mz),
            ("fit_cauchy", self.fit_cauchy),
            ("real_imag", self.real_imag),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct GridSpec<T: Real> {
    /// lattice points per real axis (a 5-lattice disc-filtered gives 21 points
    /// per complex coordinate).
    pub n: usize,
    pub radius: T,
    pub jitter_per_cell: usize,
    /// finite-difference step for the conjugate-derivative residual.
    pub cr_step: T,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        GridSpec { n: 5, radius: T::of(0.5), jitter_per_cell: 10, cr_step: T::of(1e-4) }
    }
}

#[derive(Debug, Clone)]
pub struct CloudSpec<T: Real> {
    pub n_interior: usize,
    pub n_boundary: usize,
    pub radius: T,
}

impl<T: Real> Default for CloudSpec<T> {
    fn default() -> Self {
        CloudSpec { n_interior: 2000, n_boundary: 500, radius: T::of(3.0) }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig<T: Real> {
    pub name: String,
    pub domain: DomainSpec<T>,
    pub family: MapFamily<T>,
    /// Optional closed-form limit map used as a convergence target.
    pub target: Option<(Expr, Expr)>,
    pub q: CPair<T>,
    pub j_min: u32,
    pub j_max: u32,
    pub grid: GridSpec<T>,
    pub cloud: CloudSpec<T>,
    pub seed: u64,
    pub mode: ScalingMode,
    pub tol: Tolerances<T>,
    pub output_dir: Option<String>,
}

impl<T: Real> ExperimentConfig<T> {
    /// Semantic checks that need evaluation: interior base point and a
    /// strictly contracting schedule.
    pub fn validate(&self) -> Result<()> {
        if !self.domain.is_member(self.q) {
            return Err(Error::Precondition("base point q is not inside the domain".into()));
        }
        if self.j_min == 0 || self.j_min > self.j_max {
            return Err(Error::Precondition("need 1 <= jmin <= jmax".into()));
        }
        self.family.validate_schedule(self.j_min, self.j_max)?;
        if let DomainSpec::Graph { rho } = &self.domain {
            rho.check_real(self.tol.real_imag)?;
            if rho.normalized {
                let v0 = rho.value(Complex::new(T::zero(), T::zero()), T::zero())?;
                if v0.abs() > T::of(1e-10) {
                    return Err(Error::Precondition("normalized defining function must vanish at the origin".into()));
                }
            }
        }
        Ok(())
    }
}

struct SectionEntry {
    key: String,
    sub_key: Option<String>,
    fn_arg: Option<String>,
    value: EntryValue,
}

enum EntryValue {
    Expr(Expr),
    Pair(Expr, Expr),
    List(Vec<Expr>),
    Word(String),
}

fn const_eval<T: Real>(e: &Expr, where_: &str) -> Result<Cx<T>> {
    let env: Bindings<Cx<T>> = Bindings::default();
    eval(e, &env).map_err(|err| Error::Parse(ParseError::Config(format!("{where_}: {err}"))))
}

fn const_real<T: Real>(e: &Expr, where_: &str) -> Result<T> {
    let v = const_eval::<T>(e, where_)?;
    if v.im != T::zero() {
        return Err(Error::Parse(ParseError::Config(format!("{where_}: expected a real value"))));
    }
    Ok(v.re)
}

fn const_usize<T: Real>(e: &Expr, where_: &str) -> Result<usize> {
    let v = const_real::<T>(e, where_)?;
    let f = v.to_f64().unwrap_or(f64::NAN);
    if !f.is_finite() || f < 0.0 || f.fract() != 0.0 {
        return Err(Error::Parse(ParseError::Config(format!("{where_}: expected a nonnegative integer"))));
    }
    Ok(f as usize)
}

fn parse_entry(cur: &mut Cursor) -> std::result::Result<SectionEntry, ParseError> {
    let t = cur.peek().clone();
    let key = match t.tok {
        Tok::Ident(name) => {
            cur.bump();
            name
        }
        _ => {
            return Err(ParseError::Syntax { line: t.line, col: t.col, expected: "entry key".into() })
        }
    };
    let mut sub_key = None;
    let mut fn_arg = None;
    if matches!(cur.peek().tok, Tok::Dot) {
        cur.bump();
        let t = cur.peek().clone();
        match t.tok {
            Tok::Ident(name) => {
                cur.bump();
                sub_key = Some(name);
            }
            _ => {
                return Err(ParseError::Syntax { line: t.line, col: t.col, expected: "name after `.`".into() })
            }
        }
    } else if matches!(cur.peek().tok, Tok::LParen) {
        cur.bump();
        let t = cur.peek().clone();
        match t.tok {
            Tok::Ident(name) => {
                cur.bump();
                fn_arg = Some(name);
            }
            _ => {
                return Err(ParseError::Syntax { line: t.line, col: t.col, expected: "argument name".into() })
            }
        }
        cur.expect(&Tok::RParen, "`)`")?;
    }
    cur.expect(&Tok::Eq, "`=`")?;

    let value = match cur.peek().tok.clone() {
        Tok::LParen => {
            // try a pair `(expr, expr)`; fall back to a parenthesized expression
            let mut probe = cur.clone();
            probe.bump();
            match pair_tail(&mut probe) {
                Ok(pair) => {
                    *cur = probe;
                    pair
                }
                Err(_) => EntryValue::Expr(expr(cur)?),
            }
        }
        Tok::LBracket => {
            cur.bump();
            let mut items = Vec::new();
            if !matches!(cur.peek().tok, Tok::RBracket) {
                loop {
                    items.push(expr(cur)?);
                    if matches!(cur.peek().tok, Tok::Comma) {
                        cur.bump();
                    } else {
                        break;
                    }
                }
            }
            cur.expect(&Tok::RBracket, "`]`")?;
            EntryValue::List(items)
        }
        Tok::Ident(w) if matches!(w.as_str(), "frankel" | "variety" | "auto" | "true" | "false") => {
            cur.bump();
            EntryValue::Word(w)
        }
        _ => EntryValue::Expr(expr(cur)?),
    };
    cur.expect(&Tok::Semi, "`;`")?;
    Ok(SectionEntry { key, sub_key, fn_arg, value })
}

fn pair_tail(cur: &mut Cursor) -> std::result::Result<EntryValue, ParseError> {
    let first = expr(cur)?;
    cur.expect(&Tok::Comma, "`,`")?;
    let second = expr(cur)?;
    cur.expect(&Tok::RParen, "`)`")?;
    Ok(EntryValue::Pair(first, second))
}

fn check_vars(e: &Expr, allowed: &[super::ast::Var], what: &str) -> Result<()> {
    for v in e.free_vars() {
        if !allowed.contains(&v) {
            return Err(Error::Parse(ParseError::Config(format!(
                "{what} must not reference `{}`",
                v.name()
            ))));
        }
    }
    Ok(())
}

/// Parse a `.cdl` file into a fully resolved configuration.
pub fn parse_config<T: Real>(src: &str, name: &str) -> Result<ExperimentConfig<T>> {
    let toks = lex(src).map_err(Error::Parse)?;
    let mut cur = Cursor::new(&toks);

    let mut rho: Option<Expr> = None;
    let mut constraints: Vec<Expr> = Vec::new();
    let mut radius: Option<T> = None;
    let mut normalized = false;
    let mut fam_f: Option<Expr> = None;
    let mut fam_g: Option<Expr> = None;
    let mut schedule: Option<Schedule> = None;
    let mut limit: Option<Cx<T>> = None;
    let mut target_f: Option<Expr> = None;
    let mut target_g: Option<Expr> = None;
    let mut q: Option<CPair<T>> = None;
    let mut j_min = 1u32;
    let mut j_max = 12u32;
    let mut grid: GridSpec<T> = GridSpec::default();
    let mut cloud: CloudSpec<T> = CloudSpec::default();
    let mut seed = 7u64;
    let mut mode = ScalingMode::Auto;
    let mut tol: Tolerances<T> = Tolerances::default();
    let mut output_dir: Option<String> = None;

    let cfg_err = |msg: String| Error::Parse(ParseError::Config(msg));

    while !cur.at_eof() {
        let t = cur.peek().clone();
        let section = match t.tok {
            Tok::Ident(name) => {
                cur.bump();
                name
            }
            _ => {
                return Err(Error::Parse(ParseError::Syntax {
                    line: t.line,
                    col: t.col,
                    expected: "section name (domain, family, experiment, target)".into(),
                }))
            }
        };
        cur.expect(&Tok::LBrace, "`{`").map_err(Error::Parse)?;
        while !matches!(cur.peek().tok, Tok::RBrace) {
            let entry = parse_entry(&mut cur).map_err(Error::Parse)?;
            match (section.as_str(), entry.key.as_str()) {
                ("domain", "rho") => rho = Some(entry.expect_expr("domain.rho")?),
                ("domain", "r") => constraints.push(entry.expect_expr("domain.r")?),
                ("domain", "radius") => radius = Some(const_real(&entry.expect_expr("domain.radius")?, "domain.radius")?),
                ("domain", "normalized") => normalized = entry.expect_word("domain.normalized")? == "true",
                ("family", "f") => fam_f = Some(entry.expect_expr("family.f")?),
                ("family", "g") => fam_g = Some(entry.expect_expr("family.g")?),
                ("family", "alpha") => {
                    schedule = Some(match entry.value {
                        EntryValue::List(items) => {
                            let mut vals = Vec::new();
                            for it in &items {
                                let v = const_eval::<T>(it, "family.alpha list")?;
                                vals.push((v.re.to_f64().unwrap(), v.im.to_f64().unwrap()));
                            }
                            Schedule::List(vals)
                        }
                        EntryValue::Expr(e) => {
                            if entry.fn_arg.as_deref() != Some("j") {
                                return Err(cfg_err("family.alpha in closed form must be written `alpha(j) = ...`".into()));
                            }
                            Schedule::Formula(e)
                        }
                        _ => return Err(cfg_err("family.alpha expects an expression or a list".into())),
                    })
                }
                ("family", "limit") => limit = Some(const_eval(&entry.expect_expr("family.limit")?, "family.limit")?),
                ("target", "f") => target_f = Some(entry.expect_expr("target.f")?),
                ("target", "g") => target_g = Some(entry.expect_expr("target.g")?),
                ("experiment", "q") => match entry.value {
                    EntryValue::Pair(a, b) => {
                        q = Some((const_eval(&a, "experiment.q")?, const_eval(&b, "experiment.q")?))
                    }
                    _ => return Err(cfg_err("experiment.q expects a pair `(c, c)`".into())),
                },
                ("experiment", "jmin") => j_min = const_usize::<T>(&entry.expect_expr("jmin")?, "jmin")? as u32,
                ("experiment", "jmax") => j_max = const_usize::<T>(&entry.expect_expr("jmax")?, "jmax")? as u32,
                ("experiment", "grid") => grid.n = const_usize::<T>(&entry.expect_expr("grid")?, "grid")?,
                ("experiment", "gridradius") => grid.radius = const_real(&entry.expect_expr("gridradius")?, "gridradius")?,
                ("experiment", "jitter") => grid.jitter_per_cell = const_usize::<T>(&entry.expect_expr("jitter")?, "jitter")?,
                ("experiment", "crstep") => grid.cr_step = const_real(&entry.expect_expr("crstep")?, "crstep")?,
                ("experiment", "cloud") => cloud.n_interior = const_usize::<T>(&entry.expect_expr("cloud")?, "cloud")?,
                ("experiment", "cloudboundary") => {
                    cloud.n_boundary = const_usize::<T>(&entry.expect_expr("cloudboundary")?, "cloudboundary")?
                }
                ("experiment", "cloudradius") => {
                    cloud.radius = const_real(&entry.expect_expr("cloudradius")?, "cloudradius")?
                }
                ("experiment", "seed") => seed = const_usize::<T>(&entry.expect_expr("seed")?, "seed")? as u64,
                ("experiment", "mode") => {
                    mode = match entry.expect_word("experiment.mode")?.as_str() {
                        "frankel" => ScalingMode::Frankel,
                        "variety" => ScalingMode::Variety,
                        "auto" => ScalingMode::Auto,
                        other => return Err(cfg_err(format!("unknown mode `{other}`"))),
                    }
                }
                ("experiment", "out") => {
                    output_dir = Some(match entry.value {
                        EntryValue::Word(w) => w,
                        EntryValue::Expr(e) => e.to_string(),
                        _ => return Err(cfg_err("experiment.out expects a path word".into())),
                    })
                }
                ("experiment", "tol") => {
                    let sub = entry
                        .sub_key
                        .clone()
                        .ok_or_else(|| cfg_err("tolerances are written `tol.<name> = <real>;`".into()))?;
                    let v = const_real(&entry.expect_expr("tol")?, "tol")?;
                    tol.set(&sub, v).map_err(cfg_err)?;
                }
                (sec, key) => return Err(cfg_err(format!("unknown entry `{key}` in section `{sec}`"))),
            }
        }
        cur.expect(&Tok::RBrace, "`}`").map_err(Error::Parse)?;
    }

    use super::ast::Var;
    let domain = match (rho, constraints.is_empty()) {
        (Some(e), true) => {
            check_vars(&e, &[Var::Z, Var::Zb, Var::U], "domain.rho")?;
            DomainSpec::Graph {
                rho: DefiningFunction {
                    expr: e,
                    validity_radius: radius.unwrap_or_else(|| T::of(1.0)),
                    normalized,
                },
            }
        }
        (None, false) => {
            for c in &constraints {
                check_vars(c, &[Var::Z, Var::W, Var::Zb, Var::Wb, Var::U], "domain.r")?;
            }
            DomainSpec::Implicit {
                constraints,
                radius: radius.unwrap_or_else(|| T::of(2.0)),
            }
        }
        (Some(_), false) => return Err(cfg_err("domain: give either `rho` or `r` constraints, not both".into())),
        (None, true) => return Err(cfg_err("domain: missing defining function".into())),
    };

    // the geometric schedule toward 1 is the default
    let (schedule, limit) = match (schedule, limit) {
        (Some(s), Some(l)) => (s, l),
        (None, None) => {
            let default = super::parser::parse_expr("1 - 2^(-j)").expect("builtin schedule");
            (Schedule::Formula(default), Complex::new(T::one(), T::zero()))
        }
        (Some(_), None) => return Err(cfg_err("family.limit missing".into())),
        (None, Some(_)) => return Err(cfg_err("family.alpha missing".into())),
    };
    if let Schedule::Formula(e) = &schedule {
        check_vars(e, &[Var::J], "family.alpha")?;
    }
    let fam_f = fam_f.ok_or_else(|| cfg_err("family.f missing".into()))?;
    let fam_g = fam_g.ok_or_else(|| cfg_err("family.g missing".into()))?;
    for (what, e) in [("family.f", &fam_f), ("family.g", &fam_g)] {
        check_vars(e, &[Var::Z, Var::W, Var::A, Var::J], what)?;
    }
    let family = MapFamily::new(fam_f, fam_g, schedule, limit)?;

    let target = match (target_f, target_g) {
        (Some(f), Some(g)) => {
            for (what, e) in [("target.f", &f), ("target.g", &g)] {
                check_vars(e, &[Var::Z, Var::W, Var::Zb, Var::Wb, Var::U], what)?;
            }
            Some((f, g))
        }
        (None, None) => None,
        _ => return Err(cfg_err("target needs both f and g".into())),
    };

    Ok(ExperimentConfig {
        name: name.to_string(),
        domain,
        family,
        target,
        q: q.ok_or_else(|| cfg_err("experiment.q missing".into()))?,
        j_min,
        j_max,
        grid,
        cloud,
        seed,
        mode,
        tol,
        output_dir,
    })
}

impl SectionEntry {
    fn expect_expr(&self, what: &str) -> Result<Expr> {
        match &self.value {
            EntryValue::Expr(e) => Ok(e.clone()),
            _ => Err(Error::Parse(ParseError::Config(format!("{what}: expected an expression")))),
        }
    }
    fn expect_word(&self, what: &str) -> Result<String> {
        match &self.value {
            EntryValue::Word(w) => Ok(w.clone()),
            _ => Err(Error::Parse(ParseError::Config(format!("{what}: expected a bare word")))),
        }
    }
}

impl<T: Real> fmt::Display for ExperimentConfig<T> {
    /// Canonical form: printing, reparsing and printing again is a fixed point.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain {{")?;
        match &self.domain {
            DomainSpec::Graph { rho } => {
                writeln!(f, "  rho = {};", rho.expr)?;
                writeln!(f, "  radius = {};", rho.validity_radius)?;
                if rho.normalized {
                    writeln!(f, "  normalized = true;")?;
                }
            }
            DomainSpec::Implicit { constraints, radius } => {
                for c in constraints {
                    writeln!(f, "  r = {};", c)?;
                }
                writeln!(f, "  radius = {};", radius)?;
            }
        }
        writeln!(f, "}}")?;
        writeln!(f, "family {{")?;
        writeln!(f, "  f = {};", self.family.f)?;
        writeln!(f, "  g = {};", self.family.g)?;
        match &self.family.schedule {
            Schedule::Formula(e) => writeln!(f, "  alpha(j) = {};", e)?,
            Schedule::List(vs) => {
                let items: Vec<String> = vs
                    .iter()
                    .map(|(re, im)| {
                        if *im == 0.0 {
                            format!("{re}")
                        } else if *re == 0.0 {
                            format!("{im}i")
                        } else {
                            format!("{re} + {im}i")
                        }
                    })
                    .collect();
                writeln!(f, "  alpha = [{}];", items.join(", "))?;
            }
        }
        writeln!(f, "  limit = {};", fmt_cx(self.family.param_limit))?;
        writeln!(f, "}}")?;
        writeln!(f, "experiment {{")?;
        writeln!(f, "  q = ({}, {});", fmt_cx(self.q.0), fmt_cx(self.q.1))?;
        writeln!(f, "  jmin = {};", self.j_min)?;
        writeln!(f, "  jmax = {};", self.j_max)?;
        writeln!(f, "  grid = {};", self.grid.n)?;
        writeln!(f, "  gridradius = {};", self.grid.radius)?;
        writeln!(f, "  jitter = {};", self.grid.jitter_per_cell)?;
        writeln!(f, "  crstep = {};", self.grid.cr_step)?;
        writeln!(f, "  cloud = {};", self.cloud.n_interior)?;
        writeln!(f, "  cloudboundary = {};", self.cloud.n_boundary)?;
        writeln!(f, "  cloudradius = {};", self.cloud.radius)?;
        writeln!(f, "  seed = {};", self.seed)?;
        writeln!(f, "  mode = {};", self.mode.name())?;
        if let Some(out) = &self.output_dir {
            writeln!(f, "  out = {};", out)?;
        }
        for (name, v) in self.tol.entries() {
            writeln!(f, "  tol.{} = {};", name, v)?;
        }
        writeln!(f, "}}")?;
        if let Some((tf, tg)) = &self.target {
            writeln!(f, "target {{")?;
            writeln!(f, "  f = {};", tf)?;
            writeln!(f, "  g = {};", tg)?;
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

fn fmt_cx<T: Real>(c: Cx<T>) -> String {
    if c.im == T::zero() {
        format!("{}", c.re)
    } else if c.re == T::zero() {
        format!("{}i", c.im)
    } else {
        format!("({} + {}i)", c.re, c.im)
    }
}
