//! Expression graphs over `ℝⁿ` with symbolic differentiation.
//!
//! Every library-provided field is an [`Expr`]; its gradient, Hessian and
//! higher derivatives are again expressions, so derivative oracles compose
//! exactly through lifted derivatives of any order. Subexpressions are shared
//! (`Arc`), and both differentiation and substitution are memoized on node
//! identity so shared subgraphs are visited once.
//!
//! User functions without a closed form enter through [`Expr::opaque`]; their
//! partial derivatives are central finite differences and the expression is
//! then reported as not exact (see [`Expr::is_exact`]).

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

/// Step of the finite-difference fallback used for opaque functions.
pub const FD_STEP: f64 = 1e-5;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Unary elementary functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Tanh,
    Ln,
    /// k-th derivative of the bump profile `s(q) = exp(1 - 1/(1-q))` for
    /// `q < 1`, `0` otherwise.
    Bump(u32),
}

#[derive(Clone)]
pub struct Opaque {
    name: Arc<str>,
    f: ScalarFn,
    args: Vec<Expr>,
    /// Partial derivative indices applied to `f`, innermost first.
    partials: Vec<usize>,
}

enum Node {
    Const(f64),
    Var(usize),
    Add(Expr, Expr),
    Mul(Expr, Expr),
    Neg(Expr),
    PowI(Expr, i32),
    PowF(Expr, f64),
    Func(Func, Expr),
    Opaque(Opaque),
}

/// A shared, immutable expression node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn node(n: Node) -> Self {
        Expr(Arc::new(n))
    }

    fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(c: f64) -> Self {
        Self::node(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(i: usize) -> Self {
        Self::node(Node::Var(i))
    }

    /// Wraps an arbitrary function of the given argument expressions.
    pub fn opaque(name: &str, f: ScalarFn, args: Vec<Expr>) -> Self {
        Self::node(Node::Opaque(Opaque {
            name: Arc::from(name),
            f,
            args,
            partials: Vec::new(),
        }))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn powi(&self, n: i32) -> Self {
        match (n, self.as_const()) {
            (0, _) => Self::one(),
            (1, _) => self.clone(),
            (_, Some(c)) => Self::constant(c.powi(n)),
            _ => Self::node(Node::PowI(self.clone(), n)),
        }
    }

    pub fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return Self::one();
        }
        if p == 1.0 {
            return self.clone();
        }
        match self.as_const() {
            Some(c) => Self::constant(c.powf(p)),
            None => Self::node(Node::PowF(self.clone(), p)),
        }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        self.powi(-1)
    }

    pub fn apply(&self, f: Func) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(eval_func(f, c)),
            None => Self::node(Node::Func(f, self.clone())),
        }
    }

    pub fn exp(&self) -> Self {
        self.apply(Func::Exp)
    }

    pub fn sin(&self) -> Self {
        self.apply(Func::Sin)
    }

    pub fn cos(&self) -> Self {
        self.apply(Func::Cos)
    }

    pub fn tanh(&self) -> Self {
        self.apply(Func::Tanh)
    }

    pub fn ln(&self) -> Self {
        self.apply(Func::Ln)
    }

    pub fn bump_profile(&self) -> Self {
        self.apply(Func::Bump(0))
    }

    /// Sum of an iterator of expressions (zero when empty).
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Self {
        terms.into_iter().fold(Self::zero(), |acc, t| acc + t)
    }

    /// Product of an iterator of expressions (one when empty).
    pub fn product<I: IntoIterator<Item = Expr>>(terms: I) -> Self {
        terms.into_iter().fold(Self::one(), |acc, t| acc * t)
    }

    /// Dot product of two expression vectors.
    pub fn dot(a: &[Expr], b: &[Expr]) -> Self {
        Self::sum(a.iter().zip(b).map(|(x, y)| x * y))
    }

    /// Partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        let mut memo = HashMap::new();
        self.diff_memo(var, &mut memo)
    }

    /// All first partials `∂/∂x_0 .. ∂/∂x_{dim-1}`.
    pub fn gradient(&self, dim: usize) -> Vec<Expr> {
        (0..dim).map(|i| self.diff(i)).collect()
    }

    fn diff_memo(&self, var: usize, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(d) = memo.get(&self.key()) {
            return d.clone();
        }
        let d = match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => a.diff_memo(var, memo) + b.diff_memo(var, memo),
            Node::Mul(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                da * b + a * db
            }
            Node::Neg(a) => -a.diff_memo(var, memo),
            Node::PowI(a, n) => {
                let da = a.diff_memo(var, memo);
                Expr::constant(*n as f64) * a.powi(n - 1) * da
            }
            Node::PowF(a, p) => {
                let da = a.diff_memo(var, memo);
                Expr::constant(*p) * a.powf(p - 1.0) * da
            }
            Node::Func(f, a) => {
                let da = a.diff_memo(var, memo);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    let outer = match f {
                        Func::Exp => self.clone(),
                        Func::Sin => a.cos(),
                        Func::Cos => -a.sin(),
                        Func::Tanh => Expr::one() - self.powi(2),
                        Func::Ln => a.recip(),
                        Func::Bump(k) => a.apply(Func::Bump(k + 1)),
                    };
                    outer * da
                }
            }
            Node::Opaque(op) => Expr::sum(op.args.iter().enumerate().map(|(j, arg)| {
                let da = arg.diff_memo(var, memo);
                if da.is_zero() {
                    return Expr::zero();
                }
                let mut partials = op.partials.clone();
                partials.push(j);
                let inner = Expr::node(Node::Opaque(Opaque {
                    name: op.name.clone(),
                    f: op.f.clone(),
                    args: op.args.clone(),
                    partials,
                }));
                inner * da
            })),
        };
        memo.insert(self.key(), d.clone());
        d
    }

    /// Replaces every `Var(i)` by `vars[i]`.
    ///
    /// Panics if a variable index is out of range.
    pub fn substitute(&self, vars: &[Expr]) -> Expr {
        self.map_vars(&|i| vars[i].clone())
    }

    /// Renumbers variables `i ↦ i + offset`.
    pub fn shift_vars(&self, offset: usize) -> Expr {
        if offset == 0 {
            return self.clone();
        }
        self.map_vars(&|i| Expr::var(i + offset))
    }

    pub fn map_vars(&self, f: &dyn Fn(usize) -> Expr) -> Expr {
        let mut memo = HashMap::new();
        self.map_vars_memo(f, &mut memo)
    }

    fn map_vars_memo(&self, f: &dyn Fn(usize) -> Expr, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.key()) {
            return e.clone();
        }
        let e = match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(i) => f(*i),
            Node::Add(a, b) => a.map_vars_memo(f, memo) + b.map_vars_memo(f, memo),
            Node::Mul(a, b) => a.map_vars_memo(f, memo) * b.map_vars_memo(f, memo),
            Node::Neg(a) => -a.map_vars_memo(f, memo),
            Node::PowI(a, n) => a.map_vars_memo(f, memo).powi(*n),
            Node::PowF(a, p) => a.map_vars_memo(f, memo).powf(*p),
            Node::Func(g, a) => a.map_vars_memo(f, memo).apply(*g),
            Node::Opaque(op) => Expr::node(Node::Opaque(Opaque {
                name: op.name.clone(),
                f: op.f.clone(),
                args: op.args.iter().map(|a| a.map_vars_memo(f, memo)).collect(),
                partials: op.partials.clone(),
            })),
        };
        memo.insert(self.key(), e.clone());
        e
    }

    fn visit(&self, seen: &mut HashMap<usize, ()>, f: &mut dyn FnMut(&Node)) {
        if seen.insert(self.key(), ()).is_some() {
            return;
        }
        f(&self.0);
        match &*self.0 {
            Node::Const(_) | Node::Var(_) => {}
            Node::Add(a, b) | Node::Mul(a, b) => {
                a.visit(seen, f);
                b.visit(seen, f);
            }
            Node::Neg(a) | Node::PowI(a, _) | Node::PowF(a, _) | Node::Func(_, a) => a.visit(seen, f),
            Node::Opaque(op) => op.args.iter().for_each(|a| a.visit(seen, f)),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut m: Option<usize> = None;
        self.visit(&mut HashMap::new(), &mut |n| {
            if let Node::Var(i) = n {
                m = Some(m.map_or(*i, |c| c.max(*i)));
            }
        });
        m
    }

    /// Flags for which of the variables `0..n` occur in the graph.
    pub fn vars_used(&self, n: usize) -> Vec<bool> {
        let mut used = vec![false; n];
        self.visit(&mut HashMap::new(), &mut |node| {
            if let Node::Var(i) = node {
                if *i < n {
                    used[*i] = true;
                }
            }
        });
        used
    }

    /// False when the graph contains a finite-difference fallback node.
    pub fn is_exact(&self) -> bool {
        let mut exact = true;
        self.visit(&mut HashMap::new(), &mut |n| {
            if let Node::Opaque(op) = n {
                if !op.partials.is_empty() {
                    exact = false;
                }
            }
        });
        exact
    }

    /// True when the graph contains any opaque user function.
    pub fn has_opaque(&self) -> bool {
        let mut found = false;
        self.visit(&mut HashMap::new(), &mut |n| {
            if matches!(n, Node::Opaque(_)) {
                found = true;
            }
        });
        found
    }

    /// Total degree when the expression is a polynomial in its variables.
    pub fn polynomial_degree(&self) -> Option<u32> {
        let mut memo = HashMap::new();
        self.poly_deg(&mut memo)
    }

    fn poly_deg(&self, memo: &mut HashMap<usize, Option<u32>>) -> Option<u32> {
        if let Some(d) = memo.get(&self.key()) {
            return *d;
        }
        let d = match &*self.0 {
            Node::Const(_) => Some(0),
            Node::Var(_) => Some(1),
            Node::Add(a, b) => Some(a.poly_deg(memo)?.max(b.poly_deg(memo)?)),
            Node::Mul(a, b) => Some(a.poly_deg(memo)? + b.poly_deg(memo)?),
            Node::Neg(a) => a.poly_deg(memo),
            Node::PowI(a, n) if *n >= 0 => Some(a.poly_deg(memo)? * (*n as u32)),
            _ => None,
        };
        memo.insert(self.key(), d);
        d
    }

    /// Convenience evaluation; compiles a throwaway tape.
    pub fn eval(&self, x: &[f64]) -> f64 {
        Tape::compile(std::slice::from_ref(self)).eval(x)[0]
    }
}

fn bump_poly(k: u32) -> Vec<f64> {
    // s^(k)(q) = P_k(u) exp(1-u), u = 1/(1-q), P_{k+1} = u^2 (P_k' - P_k)
    let mut p = vec![1.0];
    for _ in 0..k {
        let mut next = vec![0.0; p.len() + 2];
        for (i, c) in p.iter().enumerate() {
            next[i + 2] -= c;
            if i > 0 {
                next[i + 1] += c * i as f64;
            }
        }
        p = next;
    }
    p
}

fn eval_bump(k: u32, q: f64) -> f64 {
    if q >= 1.0 {
        return 0.0;
    }
    let u = 1.0 / (1.0 - q);
    let e = (1.0 - u).exp();
    if e == 0.0 {
        return 0.0;
    }
    if k == 0 {
        return e;
    }
    let p = bump_poly(k);
    let poly = p.iter().rev().fold(0.0, |acc, c| acc * u + c);
    poly * e
}

fn eval_func(f: Func, x: f64) -> f64 {
    match f {
        Func::Exp => x.exp(),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tanh => x.tanh(),
        Func::Ln => x.ln(),
        Func::Bump(k) => eval_bump(k, x),
    }
}

fn eval_opaque(f: &ScalarFn, args: &mut [f64], partials: &[usize]) -> f64 {
    match partials.split_last() {
        None => f(args),
        Some((&j, rest)) => {
            let x0 = args[j];
            args[j] = x0 + FD_STEP;
            let fp = eval_opaque(f, args, rest);
            args[j] = x0 - FD_STEP;
            let fm = eval_opaque(f, args, rest);
            args[j] = x0;
            (fp - fm) / (2.0 * FD_STEP)
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(a), _) if a == 0.0 => rhs,
            (_, Some(b)) if b == 0.0 => self,
            _ => Expr::node(Node::Add(self, rhs)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::zero(),
            (Some(a), _) if a == 1.0 => rhs,
            (_, Some(b)) if b == 1.0 => self,
            _ => Expr::node(Node::Mul(self, rhs)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match &*self.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => Expr::node(Node::Neg(self)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

macro_rules! ref_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr { $tr::$m(self.clone(), rhs.clone()) }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { $tr::$m(self.clone(), rhs) }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr { $tr::$m(self, rhs.clone()) }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr { $tr::$m(self, Expr::constant(rhs)) }
        }
        impl $tr<f64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr { $tr::$m(self.clone(), Expr::constant(rhs)) }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { $tr::$m(Expr::constant(self), rhs) }
        }
        impl $tr<&Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr { $tr::$m(Expr::constant(self), rhs.clone()) }
        }
    )*};
}
ref_ops!(Add add, Mul mul, Sub sub);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{i}"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Neg(a) => write!(f, "-{a}"),
            Node::PowI(a, n) => write!(f, "{a}^{n}"),
            Node::PowF(a, p) => write!(f, "{a}^{p}"),
            Node::Func(g, a) => write!(f, "{g:?}({a})"),
            Node::Opaque(op) => {
                write!(f, "{}", op.name)?;
                for j in &op.partials {
                    write!(f, "'{j}")?;
                }
                write!(f, "(")?;
                for (i, a) in op.args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

enum Instr {
    Const(f64),
    Var(usize),
    Add(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    PowI(usize, i32),
    PowF(usize, f64),
    Func(Func, usize),
    Opaque { f: ScalarFn, args: Vec<usize>, partials: Vec<usize> },
}

/// A linearized expression DAG; each shared node is evaluated once.
pub struct Tape {
    instrs: Vec<Instr>,
    outputs: Vec<usize>,
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut tape = Tape { instrs: Vec::new(), outputs: Vec::new() };
        let mut slots = HashMap::new();
        for e in exprs {
            let s = tape.emit(e, &mut slots);
            tape.outputs.push(s);
        }
        tape
    }

    fn emit(&mut self, e: &Expr, slots: &mut HashMap<usize, usize>) -> usize {
        if let Some(&s) = slots.get(&e.key()) {
            return s;
        }
        let instr = match &*e.0 {
            Node::Const(c) => Instr::Const(*c),
            Node::Var(i) => Instr::Var(*i),
            Node::Add(a, b) => {
                let (a, b) = (self.emit(a, slots), self.emit(b, slots));
                Instr::Add(a, b)
            }
            Node::Mul(a, b) => {
                let (a, b) = (self.emit(a, slots), self.emit(b, slots));
                Instr::Mul(a, b)
            }
            Node::Neg(a) => Instr::Neg(self.emit(a, slots)),
            Node::PowI(a, n) => Instr::PowI(self.emit(a, slots), *n),
            Node::PowF(a, p) => Instr::PowF(self.emit(a, slots), *p),
            Node::Func(g, a) => Instr::Func(*g, self.emit(a, slots)),
            Node::Opaque(op) => Instr::Opaque {
                f: op.f.clone(),
                args: op.args.iter().map(|a| self.emit(a, slots)).collect(),
                partials: op.partials.clone(),
            },
        };
        self.instrs.push(instr);
        let s = self.instrs.len() - 1;
        slots.insert(e.key(), s);
        s
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut vals: Vec<f64> = Vec::with_capacity(self.instrs.len());
        for instr in &self.instrs {
            let v = match instr {
                Instr::Const(c) => *c,
                Instr::Var(i) => x[*i],
                Instr::Add(a, b) => vals[*a] + vals[*b],
                Instr::Mul(a, b) => vals[*a] * vals[*b],
                Instr::Neg(a) => -vals[*a],
                Instr::PowI(a, n) => vals[*a].powi(*n),
                Instr::PowF(a, p) => vals[*a].powf(*p),
                Instr::Func(g, a) => eval_func(*g, vals[*a]),
                Instr::Opaque { f, args, partials } => {
                    let mut a: Vec<f64> = args.iter().map(|&s| vals[s]).collect();
                    eval_opaque(f, &mut a, partials)
                }
            };
            vals.push(v);
        }
        self.outputs.iter().map(|&s| vals[s]).collect()
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tape({} instrs, {} outputs)", self.instrs.len(), self.outputs.len())
    }
}
