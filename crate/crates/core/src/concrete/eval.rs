use std::sync::Arc;

use thiserror::Error;

use crate::marks::{Mark, MarkSet};
use crate::syntax::{Const, Expr};

use super::ops::op_apply;
use super::value::{proto_lookup, Closure, Env, Heap, Storable, TaintedValue, Value};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("type error: {value} is not a function")]
    NotCallable { value: String },
    #[error("type error: property access on non-object {value}")]
    NotAnObject { value: String },
    #[error("type error: property key {value} is not a string")]
    NonStringKey { value: String },
    #[error("unbound variable `{name}`")]
    Unbound { name: String },
    #[error("step budget of {budget} rule applications exceeded")]
    StepBudget { budget: u64 },
    #[error("evaluation nested deeper than {limit}")]
    DepthLimit { limit: usize },
}

impl EvalError {
    /// Budget or depth exhaustion, as opposed to a stuck (ill-typed) state.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            EvalError::StepBudget { .. } | EvalError::DepthLimit { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of rule applications per run.
    pub step_budget: u64,
    /// Maximum nesting of rule applications.
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            step_budget: 1_000_000,
            max_depth: 4_000,
        }
    }
}

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_SEGMENT: usize = 4 * 1024 * 1024;

/// Hooks into rule applications, used by the property oracles.
pub trait EvalObserver {
    /// Called when `e`, evaluated under context `ctx`, returns `result`.
    fn on_return(&mut self, _e: &Expr, _ctx: &MarkSet, _result: &TaintedValue) {}

    /// Called when a property write stores `stored`; `required` is the
    /// join of the receiver, key and context marks.
    fn on_store(&mut self, _required: &MarkSet, _stored: &TaintedValue) {}
}

pub struct NoObserver;

impl EvalObserver for NoObserver {}

/// Big-step evaluator with mark propagation.
pub struct Evaluator<'o> {
    limits: Limits,
    steps: u64,
    depth: usize,
    observer: &'o mut dyn EvalObserver,
}

/// Evaluates a closed program from the empty heap and environment.
pub fn run(e: &Expr, limits: Limits) -> Result<(Heap, TaintedValue), EvalError> {
    let mut heap = Heap::new();
    let v = Evaluator::new(limits).eval(&mut heap, &Env::new(), &MarkSet::new(), e)?;
    Ok((heap, v))
}

/// `H, ρ, κ ⊢ e ⇓ H' | ω` with default limits; `heap` is updated in place.
pub fn eval(
    heap: &mut Heap,
    env: &Env,
    ctx: &MarkSet,
    e: &Expr,
) -> Result<TaintedValue, EvalError> {
    Evaluator::new(Limits::default()).eval(heap, env, ctx, e)
}

impl Evaluator<'static> {
    pub fn new(limits: Limits) -> Self {
        // A zero-sized observer needs no backing storage.
        let observer: &'static mut NoObserver = Box::leak(Box::new(NoObserver));
        Evaluator {
            limits,
            steps: 0,
            depth: 0,
            observer,
        }
    }
}

impl<'o> Evaluator<'o> {
    pub fn with_observer(limits: Limits, observer: &'o mut dyn EvalObserver) -> Self {
        Evaluator {
            limits,
            steps: 0,
            depth: 0,
            observer,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn eval(
        &mut self,
        heap: &mut Heap,
        env: &Env,
        ctx: &MarkSet,
        e: &Expr,
    ) -> Result<TaintedValue, EvalError> {
        self.steps += 1;
        if self.steps > self.limits.step_budget {
            return Err(EvalError::StepBudget {
                budget: self.limits.step_budget,
            });
        }
        if self.depth >= self.limits.max_depth {
            return Err(EvalError::DepthLimit {
                limit: self.limits.max_depth,
            });
        }
        self.depth += 1;
        let r = stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || {
            self.step(heap, env, ctx, e)
        });
        self.depth -= 1;
        if let Ok(v) = &r {
            self.observer.on_return(e, ctx, v);
        }
        r
    }

    fn step(
        &mut self,
        heap: &mut Heap,
        env: &Env,
        ctx: &MarkSet,
        e: &Expr,
    ) -> Result<TaintedValue, EvalError> {
        match e {
            Expr::Const(c) => Ok(TaintedValue::new(Value::Const(c.clone()), ctx.clone())),
            Expr::Var(x) => env
                .get(x)
                .cloned()
                .map(|v| v.with(ctx))
                .ok_or_else(|| EvalError::Unbound { name: x.clone() }),
            Expr::Lam(lam) => {
                let closure = Closure {
                    env: env.clone(),
                    lambda: Arc::clone(lam),
                };
                let loc = heap.alloc(lam.label, Storable::function(closure));
                Ok(TaintedValue::new(Value::Loc(loc), ctx.clone()))
            }
            Expr::Op(op, a, b) => {
                let v0 = self.eval(heap, env, ctx, a)?;
                let v1 = self.eval(heap, env, ctx, b)?;
                let v = op_apply(*op, &v0.value, &v1.value);
                Ok(TaintedValue::new(v, v0.deps.join(&v1.deps)))
            }
            Expr::New(site, proto) => {
                let p = self.eval(heap, env, ctx, proto)?;
                // The stored prototype drops its marks; they flow into the
                // returned location only.
                let loc = heap.alloc(*site, Storable::object(p.value));
                Ok(TaintedValue::new(Value::Loc(loc), p.deps))
            }
            Expr::App(f, a) => {
                let callee = self.eval(heap, env, ctx, f)?;
                let closure = callee
                    .value
                    .as_loc()
                    .and_then(|l| heap.get(l))
                    .and_then(|s| s.closure.clone())
                    .ok_or_else(|| EvalError::NotCallable {
                        value: callee.value.to_string(),
                    })?;
                let arg = self.eval(heap, env, ctx, a)?;
                let body_env = closure.env.bind(&closure.lambda.param, arg);
                let body_ctx = ctx.join(&callee.deps);
                self.eval(heap, &body_env, &body_ctx, &closure.lambda.body)
            }
            Expr::If(c, t, f) => {
                let cond = self.eval(heap, env, ctx, c)?;
                let branch_ctx = ctx.join(&cond.deps);
                let taken = if cond.value == Value::Const(Const::Bool(true)) {
                    t
                } else {
                    f
                };
                self.eval(heap, env, &branch_ctx, taken)
            }
            Expr::Get(o, k) => {
                let obj = self.eval(heap, env, ctx, o)?;
                let loc = obj.value.as_loc().ok_or_else(|| EvalError::NotAnObject {
                    value: obj.value.to_string(),
                })?;
                let key = self.eval(heap, env, ctx, k)?;
                let Value::Const(Const::Str(name)) = &key.value else {
                    return Err(EvalError::NonStringKey {
                        value: key.value.to_string(),
                    });
                };
                let storable = heap.get(loc).expect("locations are never dangling");
                Ok(proto_lookup(heap, storable, name)
                    .with(&obj.deps)
                    .with(&key.deps))
            }
            Expr::Put(o, k, v) => {
                let obj = self.eval(heap, env, ctx, o)?;
                let loc = obj.value.as_loc().ok_or_else(|| EvalError::NotAnObject {
                    value: obj.value.to_string(),
                })?;
                let key = self.eval(heap, env, ctx, k)?;
                let Value::Const(Const::Str(name)) = key.value.clone() else {
                    return Err(EvalError::NonStringKey {
                        value: key.value.to_string(),
                    });
                };
                let val = self.eval(heap, env, ctx, v)?;
                let stored = val.clone().with(&obj.deps).with(&key.deps);
                self.observer
                    .on_store(&obj.deps.join(&key.deps).join(ctx), &stored);
                heap.get_mut(loc)
                    .expect("locations are never dangling")
                    .object
                    .insert(name, stored);
                Ok(val)
            }
            Expr::Trace {
                label,
                mode,
                class,
                body,
            } => {
                let mut inner = ctx.clone();
                inner.insert(Mark::new(*label, mode.clone(), class.clone()));
                self.eval(heap, env, &inner, body)
            }
            Expr::Untrace {
                from,
                to,
                class,
                body,
            } => {
                let v = self.eval(heap, env, ctx, body)?;
                Ok(TaintedValue::new(
                    v.value,
                    v.deps.reclassify(from, to, class),
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, ClassId, Label, Mode};

    fn eval_src(src: &str) -> TaintedValue {
        run(&parse(src).unwrap(), Limits::default()).unwrap().1
    }

    fn labels(v: &TaintedValue) -> Vec<u32> {
        v.deps.iter().map(|m| m.label.id()).collect()
    }

    #[test]
    fn traced_constant_carries_its_label() {
        let v = eval_src("trace(4711)");
        assert_eq!(v.value, Value::Const(Const::Num(4711.0)));
        assert_eq!(labels(&v), vec![1]);
    }

    #[test]
    fn constant_under_empty_context_is_unmarked() {
        let v = eval_src("4711");
        assert!(v.deps.is_empty());
    }

    #[test]
    fn branch_inherits_condition_marks() {
        let v = eval_src("if (trace(true)) { 1 } else { 2 }");
        assert_eq!(v.value, Value::Const(Const::Num(1.0)));
        assert_eq!(labels(&v), vec![1]);
    }

    #[test]
    fn non_true_condition_takes_else_branch() {
        let v = eval_src("if (1) { 1 } else { 2 }");
        assert_eq!(v.value, Value::Const(Const::Num(2.0)));
    }

    #[test]
    fn property_roundtrip_keeps_marks() {
        let e = parse("let o = new(null); let _ = o[\"f\"] = trace(1); o[\"f\"]").unwrap();
        let trace_label = e.trace_labels()[0];
        let v = run(&e, Limits::default()).unwrap().1;
        assert_eq!(v.value, Value::Const(Const::Num(1.0)));
        assert_eq!(
            v.deps.labels().into_iter().collect::<Vec<_>>(),
            vec![trace_label]
        );
    }

    #[test]
    fn untrace_reclassifies_matching_marks() {
        let v = eval_src("untrace(trace(1, \"T\", \"#DOM\"), \"T\"->\"S\", \"#DOM\")");
        let m: Vec<_> = v.deps.iter().cloned().collect();
        assert_eq!(
            m,
            vec![Mark::new(
                Label::new(1, Default::default()),
                Mode::new("S"),
                ClassId::new("#DOM").unwrap()
            )]
        );
    }

    #[test]
    fn new_binds_prototype_marks_to_location_only() {
        let mut heap = Heap::new();
        let e = parse("new(trace(new(null)))").unwrap();
        let v = Evaluator::new(Limits::default())
            .eval(&mut heap, &Env::new(), &MarkSet::new(), &e)
            .unwrap();
        assert_eq!(v.deps.len(), 1);
        let outer = heap.get(v.value.as_loc().unwrap()).unwrap();
        assert!(matches!(outer.proto, Value::Loc(_)));
    }

    #[test]
    fn missing_property_still_carries_receiver_marks() {
        let v = eval_src("trace(new(null))[\"g\"]");
        assert_eq!(v.value, Value::UNDEFINED);
        assert_eq!(labels(&v), vec![1]);
    }

    #[test]
    fn callee_marks_flow_into_body_context() {
        let v = eval_src("trace(fun(x){ 1 })(2)");
        assert_eq!(labels(&v), vec![1]);
    }

    #[test]
    fn type_errors() {
        let run_src = |s: &str| run(&parse(s).unwrap(), Limits::default()).unwrap_err();
        assert!(matches!(run_src("1(2)"), EvalError::NotCallable { .. }));
        assert!(matches!(
            run_src("new(null)(2)"),
            EvalError::NotCallable { .. }
        ));
        assert!(matches!(run_src("1[\"f\"]"), EvalError::NotAnObject { .. }));
        assert!(matches!(
            run_src("new(null)[1] = 2"),
            EvalError::NonStringKey { .. }
        ));
    }

    #[test]
    fn nontermination_hits_the_budget() {
        let e = parse("let o = new(null); let _ = o[\"f\"] = fun(x){ o[\"f\"](x) }; o[\"f\"](1)")
            .unwrap();
        let limits = Limits {
            step_budget: 10_000,
            max_depth: 100_000,
        };
        let err = std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn(move || run(&e, limits).unwrap_err())
            .unwrap()
            .join()
            .unwrap();
        assert!(err.is_resource(), "{err}");
    }

    #[test]
    fn depth_limit_is_a_resource_error() {
        let e = parse("fun(f){ f(f) }(fun(f){ f(f) })").unwrap();
        let err = run(
            &e,
            Limits {
                step_budget: u64::MAX,
                max_depth: 200,
            },
        )
        .unwrap_err();
        assert_eq!(err, EvalError::DepthLimit { limit: 200 });
    }

    #[test]
    fn evaluation_is_deterministic() {
        let e =
            parse("let o = new(null); let f = fun(x){ o[\"k\"] = x }; let _ = f(trace(3)); new(o)")
                .unwrap();
        assert_eq!(run(&e, Limits::default()), run(&e, Limits::default()));
    }
}
