//! Random closed programs for the property suites.
//!
//! Programs are generated as source text under a small type discipline
//! (numbers, strings, booleans, objects and functions) so most of them run
//! without a type error, then parsed. Without the recursion flag every
//! function is let-bound and simply typed, hence every program terminates.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::syntax::{parse, Expr};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceSites {
    Any,
    /// Exactly one trace site per program.
    Single,
    None,
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_depth: usize,
    /// Heap-stored countdown recursion.
    pub recursion: bool,
    pub untrace: bool,
    pub traces: TraceSites,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 5,
            recursion: false,
            untrace: true,
            traces: TraceSites::Any,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Ty {
    Num,
    Str,
    Bool,
    Obj,
    Fun(Box<Ty>, Box<Ty>),
}

const BASE: [Ty; 4] = [Ty::Num, Ty::Str, Ty::Bool, Ty::Obj];
const STRINGS: [&str; 5] = ["a", "b", "f", "g", "uid"];
const KEYS: [&str; 3] = ["f", "g", "h"];
const MODES: [&str; 2] = ["T", "S"];
const CLASSES: [&str; 2] = ["#DOM", "c"];

/// Substitution bodies for trace sites: one per runtime kind.
pub const SUBSTITUTION_BODIES: [&str; 7] =
    ["0", "1", "\"a\"", "true", "false", "new(null)", "undefined"];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    cfg: &'r GenConfig,
    scope: Vec<(String, Ty)>,
    fresh: usize,
    traces: usize,
}

impl<'r, R: Rng> Gen<'r, R> {
    fn name(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        xs.choose(self.rng).unwrap()
    }

    fn fun_ty(&mut self, depth: usize) -> Ty {
        let arg = if depth > 1 && self.rng.gen_bool(0.2) {
            Ty::Fun(Box::new(Ty::Num), Box::new(Ty::Num))
        } else {
            self.pick(&BASE).clone()
        };
        Ty::Fun(Box::new(arg), Box::new(self.pick(&BASE).clone()))
    }

    fn vars(&self, ty: &Ty) -> Vec<String> {
        self.scope
            .iter()
            .filter(|(_, t)| t == ty)
            .map(|(x, _)| x.clone())
            .collect()
    }

    fn may_trace(&self) -> bool {
        match self.cfg.traces {
            TraceSites::Any => true,
            TraceSites::Single => self.traces == 0,
            TraceSites::None => false,
        }
    }

    fn leaf(&mut self, ty: &Ty) -> String {
        let vars = self.vars(ty);
        if !vars.is_empty() && self.rng.gen_bool(0.6) {
            return self.pick(&vars).clone();
        }
        match ty {
            Ty::Num => self.rng.gen_range(-2..6).to_string(),
            Ty::Str => format!("{:?}", self.pick(&STRINGS)),
            Ty::Bool => self.rng.gen_bool(0.5).to_string(),
            Ty::Obj => "new(null)".to_string(),
            Ty::Fun(a, r) => self.lambda(a, r, 0),
        }
    }

    fn lambda(&mut self, arg: &Ty, ret: &Ty, depth: usize) -> String {
        let x = self.name();
        self.scope.push((x.clone(), arg.clone()));
        let body = self.expr(ret, depth);
        self.scope.pop();
        format!("fun({x}){{ {body} }}")
    }

    /// Prefers objects in scope so reads and writes share receivers.
    fn receiver(&mut self, d: usize) -> String {
        let vars = self.vars(&Ty::Obj);
        if !vars.is_empty() && self.rng.gen_bool(0.6) {
            self.pick(&vars).clone()
        } else {
            self.expr(&Ty::Obj, d)
        }
    }

    fn key(&mut self, depth: usize) -> String {
        let vars = self.vars(&Ty::Str);
        match self.rng.gen_range(0..7) {
            0 | 1 if !vars.is_empty() => self.pick(&vars).clone(),
            2 if depth > 0 => self.expr(&Ty::Str, depth - 1),
            3 if self.may_trace() => {
                self.traces += 1;
                format!("trace({:?})", self.pick(&KEYS))
            }
            _ => format!("{:?}", self.pick(&KEYS)),
        }
    }

    fn expr(&mut self, ty: &Ty, depth: usize) -> String {
        if depth == 0 {
            return self.leaf(ty);
        }
        let d = depth - 1;
        let choice = self.rng.gen_range(0..100);
        match choice {
            0..=11 => self.leaf(ty),
            12..=21 if self.may_trace() => {
                self.traces += 1;
                let body = self.expr(ty, d);
                if self.rng.gen_bool(0.5) {
                    format!("trace({body})")
                } else {
                    let mode = *self.pick(&MODES);
                    let class = *self.pick(&CLASSES);
                    format!("trace({body}, {mode:?}, {class:?})")
                }
            }
            22..=27 if self.cfg.untrace => {
                let body = self.expr(ty, d);
                let class = *self.pick(&CLASSES);
                format!("untrace({body}, \"T\"->\"S\", {class:?})")
            }
            28..=39 => {
                let c = self.expr(&Ty::Bool, d);
                let a = self.expr(ty, d);
                let b = self.expr(ty, d);
                format!("(if ({c}) {{ {a} }} else {{ {b} }})")
            }
            40..=51 => {
                let bound_ty = if self.rng.gen_bool(0.45) {
                    self.fun_ty(d)
                } else {
                    self.pick(&BASE).clone()
                };
                let bound = self.expr(&bound_ty, d);
                let x = self.name();
                self.scope.push((x.clone(), bound_ty));
                let body = self.expr(ty, d);
                self.scope.pop();
                format!("(let {x} = {bound}; {body})")
            }
            52..=61 => {
                let arg_ty = self.pick(&BASE).clone();
                let f_ty = Ty::Fun(Box::new(arg_ty.clone()), Box::new(ty.clone()));
                let fvars = self.vars(&f_ty);
                let f = match self.rng.gen_range(0..10) {
                    0..=3 if !fvars.is_empty() => self.pick(&fvars).clone(),
                    // Computed callees: traced, conditional or let-bound.
                    0..=6 => format!("({})", self.expr(&f_ty, d)),
                    _ => format!("({})", self.lambda(&arg_ty, ty, d)),
                };
                let a = self.expr(&arg_ty, d);
                format!("{f}({a})")
            }
            62..=69 if self.cfg.recursion && *ty == Ty::Num => self.countdown(d),
            70..=79 => self.twice(ty, d),
            _ => self.typed(ty, d),
        }
    }

    /// Forms specific to one type.
    fn typed(&mut self, ty: &Ty, d: usize) -> String {
        match ty {
            Ty::Num => match self.rng.gen_range(0..5) {
                0 | 1 => {
                    let op = *self.pick(&["+", "-", "*"]);
                    let a = self.expr(&Ty::Num, d);
                    let b = self.expr(&Ty::Num, d);
                    format!("({a} {op} {b})")
                }
                2 | 3 => {
                    let o = self.receiver(d);
                    let k = self.key(d);
                    format!("({o})[{k}]")
                }
                _ => {
                    let o = self.receiver(d);
                    let k = self.key(d);
                    let v = self.expr(&Ty::Num, d);
                    format!("(({o})[{k}] = {v})")
                }
            },
            Ty::Str => {
                let a = self.expr(&Ty::Str, d);
                let b = self.expr(&Ty::Str, d);
                format!("({a} + {b})")
            }
            Ty::Bool if self.rng.gen_bool(0.3) => {
                let o = self.receiver(d);
                let k = self.key(d);
                let n = self.expr(&Ty::Num, d);
                format!("(({o})[{k}] == {n})")
            }
            Ty::Bool => {
                let operand = self.pick(&BASE).clone();
                let op = match operand {
                    Ty::Num | Ty::Str if self.rng.gen_bool(0.5) => "<",
                    _ => "==",
                };
                let a = self.expr(&operand, d);
                let b = self.expr(&operand, d);
                format!("({a} {op} {b})")
            }
            Ty::Obj => {
                if self.rng.gen_bool(0.3) {
                    let p = self.expr(&Ty::Obj, d);
                    format!("new({p})")
                } else {
                    // Populate a fresh object so reads can hit.
                    let x = self.name();
                    let k = self.key(d);
                    let v = self.expr(&Ty::Num, d);
                    format!("(let {x} = new(null); let _ = {x}[{k}] = {v}; {x})")
                }
            }
            Ty::Fun(a, r) => self.lambda(a, r, d),
        }
    }

    /// A let-bound function applied to two arguments, so its allocation
    /// sites and summary see more than one call.
    fn twice(&mut self, ty: &Ty, d: usize) -> String {
        let arg_ty = self.pick(&BASE).clone();
        let f = self.name();
        let lam = self.lambda(&arg_ty, ty, d);
        self.scope.push((
            f.clone(),
            Ty::Fun(Box::new(arg_ty.clone()), Box::new(ty.clone())),
        ));
        let a = self.expr(&arg_ty, d);
        let b = self.expr(&arg_ty, d);
        self.scope.pop();
        format!("(let {f} = {lam}; let _ = {f}({a}); {f}({b}))")
    }

    /// A function stored in a heap cell that calls itself through the cell
    /// a bounded number of times.
    fn countdown(&mut self, d: usize) -> String {
        let cell = self.name();
        let n = self.name();
        self.scope.push((n.clone(), Ty::Num));
        let base = self.expr(&Ty::Num, d.min(1));
        let step = self.expr(&Ty::Num, d.min(1));
        self.scope.pop();
        let start = self.rng.gen_range(0..4);
        format!(
            "(let {cell} = new(null); \
             let _ = {cell}[\"go\"] = fun({n}){{ if ({n} < 1) {{ {base} }} else {{ {cell}[\"go\"]({n} - 1) + {step} }} }}; \
             {cell}[\"go\"]({start}))"
        )
    }
}

/// Source text of a random closed program.
pub fn generate_source(rng: &mut impl Rng, cfg: &GenConfig) -> String {
    for _ in 0..32 {
        let mut g = Gen {
            rng: &mut *rng,
            cfg,
            scope: Vec::new(),
            fresh: 0,
            traces: 0,
        };
        let ty = g.pick(&BASE).clone();
        let src = g.expr(&ty, cfg.max_depth);
        if cfg.traces != TraceSites::Single || g.traces == 1 {
            return src;
        }
    }
    // Rarely reached: fall back to a program whose result uses the site.
    let mut g = Gen {
        rng,
        cfg,
        scope: vec![("t".into(), Ty::Num)],
        fresh: 0,
        traces: 1,
    };
    let body = g.expr(&Ty::Num, cfg.max_depth);
    format!("let t = trace(1); {body}")
}

pub fn generate(rng: &mut impl Rng, cfg: &GenConfig) -> Expr {
    let src = generate_source(rng, cfg);
    parse(&src).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{src}"))
}
