//! Planner selection and shared plumbing.
//!
//! Four planners cover the four tractable classes: the macro planner for IR
//! and (with relaxed graphs) RIR, the reversible planner for AR, and the
//! acyclic planner for AOR. [`plan`] either runs a requested planner or picks
//! the first class the problem belongs to, in the order IR, RIR, AOR, AR.

pub mod acyclic;
pub mod ir;
pub mod reversible;

use thiserror::Error;

use crate::arena::{MacroArena, Metrics, PlanLength};
use crate::graph::{
    build_graph, is_inverted_tree_reducible, is_reversible_in, GraphKind, Verdict,
    DEFAULT_REVERSIBILITY_BUDGET,
};
use crate::model::{PlanningProblem, Step, Var};

#[derive(Clone, Debug)]
pub struct Options {
    /// Prune dominated states and unreachable-goal start states in the
    /// IR/RIR search. Off by default; solution lengths are unaffected.
    pub pruning: bool,
    /// Report every alternative solution, not just the first.
    pub all_solutions: bool,
    /// Treat Unknown reversibility verdicts as reversible.
    pub assume_reversible: bool,
    /// Run the requested planner even when class membership fails.
    pub force: bool,
    /// Causal graph kind override for the AR/AOR planners; None picks the
    /// first kind with an acyclic graph.
    pub kind: Option<GraphKind>,
    /// Cap on Cartesian products of parent macros and alternative plans.
    pub compose_cap: usize,
    /// State cap per reversibility check before reporting Unknown.
    pub reversibility_budget: u64,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            pruning: false,
            all_solutions: false,
            assume_reversible: false,
            force: false,
            kind: None,
            compose_cap: 100_000,
            reversibility_budget: DEFAULT_REVERSIBILITY_BUDGET,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PlannerChoice {
    Auto,
    /// Macro planner on the conventional causal graph.
    Ir,
    /// Macro planner on the relaxed causal graph.
    Rir,
    /// Reversible planner.
    Ar,
    /// Acyclic planner.
    Aor,
}

impl std::str::FromStr for PlannerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<PlannerChoice, String> {
        match s {
            "auto" => Ok(PlannerChoice::Auto),
            "ir" => Ok(PlannerChoice::Ir),
            "rir" => Ok(PlannerChoice::Rir),
            "ar" => Ok(PlannerChoice::Ar),
            "aor" => Ok(PlannerChoice::Aor),
            other => Err(format!(
                "unknown planner `{other}` (expected auto, ir, rir, ar, or aor)"
            )),
        }
    }
}

impl std::fmt::Display for PlannerChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PlannerChoice::Auto => "auto",
            PlannerChoice::Ir => "ir",
            PlannerChoice::Rir => "rir",
            PlannerChoice::Ar => "ar",
            PlannerChoice::Aor => "aor",
        };
        write!(f, "{s}")
    }
}

#[derive(Error, Debug)]
pub enum PlanError {
    #[error("no plan found")]
    NoPlan,
    #[error("class requirement not met: {0}")]
    ClassViolation(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// A successful planner run: the macro arena, the chosen plan (a step
/// sequence over the arena), optional alternatives, and instrumentation.
#[derive(Debug)]
pub struct PlanResult {
    /// The planner that actually ran (never `Auto`).
    pub planner: PlannerChoice,
    pub kind: GraphKind,
    pub arena: MacroArena,
    pub plan: Vec<Step>,
    pub all_plans: Option<Vec<Vec<Step>>>,
    pub metrics: Metrics,
    pub warnings: Vec<String>,
}

pub fn plan(
    problem: &PlanningProblem,
    choice: PlannerChoice,
    opts: &Options,
) -> Result<PlanResult, PlanError> {
    match choice {
        PlannerChoice::Ir => ir::plan_ir(problem, GraphKind::Conventional, opts),
        PlannerChoice::Rir => ir::plan_ir(problem, GraphKind::Relaxed, opts),
        PlannerChoice::Ar => reversible::plan_reversible(problem, opts),
        PlannerChoice::Aor => acyclic::plan_acyclic(problem, opts),
        PlannerChoice::Auto => {
            if is_inverted_tree_reducible(problem, GraphKind::Conventional) {
                ir::plan_ir(problem, GraphKind::Conventional, opts)
            } else if is_inverted_tree_reducible(problem, GraphKind::Relaxed) {
                ir::plan_ir(problem, GraphKind::Relaxed, opts)
            } else if acyclic_kind_with(problem, opts, false).is_some() {
                acyclic::plan_acyclic(problem, opts)
            } else if acyclic_kind_with(problem, opts, true).is_some() {
                reversible::plan_reversible(problem, opts)
            } else {
                Err(PlanError::ClassViolation(
                    "problem is not in IR, RIR, AOR, or AR; \
                     rerun a specific planner with --force to attempt anyway"
                        .into(),
                ))
            }
        }
    }
}

/// First graph kind under which the problem is acyclic and the required
/// variables (all of them for AR, only reduction outdegree > 1 for AOR) are
/// reversible. Conventional is preferred.
fn acyclic_kind_with(problem: &PlanningProblem, opts: &Options, all_vars: bool) -> Option<GraphKind> {
    for kind in [GraphKind::Conventional, GraphKind::Relaxed] {
        if let Some(k) = opts.kind {
            if k != kind {
                continue;
            }
        }
        let g = build_graph(problem, kind);
        if !g.is_acyclic() {
            continue;
        }
        let reduction = g.transitive_reduction().expect("acyclic");
        let need: Vec<Var> = problem
            .schema
            .vars()
            .filter(|&v| all_vars || reduction.outdegree(v) > 1)
            .collect();
        let ok = need.iter().all(|&v| {
            match is_reversible_in(problem, v, &g, opts.reversibility_budget) {
                Verdict::Yes => true,
                Verdict::Unknown => opts.assume_reversible,
                Verdict::No => false,
            }
        });
        if ok {
            return Some(kind);
        }
    }
    None
}

/// Per-variable reversibility gate used by the AR/AOR entry points. Returns
/// a warning to record, or an error unless `force`/`assume_reversible` apply.
pub(crate) fn gate_reversibility(
    problem: &PlanningProblem,
    graph: &crate::graph::CausalGraph,
    vars: impl IntoIterator<Item = Var>,
    opts: &Options,
    warnings: &mut Vec<String>,
) -> Result<(), PlanError> {
    for v in vars {
        let name = problem.schema.name(v);
        match is_reversible_in(problem, v, graph, opts.reversibility_budget) {
            Verdict::Yes => {}
            Verdict::Unknown => {
                if opts.assume_reversible {
                    warnings.push(format!(
                        "reversibility of `{name}` unresolved within budget; assumed reversible"
                    ));
                } else {
                    return Err(PlanError::ClassViolation(format!(
                        "reversibility of `{name}` unresolved within budget; \
                         rerun with --assume-reversible to proceed"
                    )));
                }
            }
            Verdict::No => {
                if opts.force {
                    warnings.push(format!("variable `{name}` is not reversible; forced"));
                } else {
                    return Err(PlanError::ClassViolation(format!(
                        "variable `{name}` is not reversible"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Appends each step of `t` to each sequence of `s`, with a size cap.
pub(crate) fn product_cap(
    s: Vec<(Vec<Step>, PlanLength)>,
    t: &[(Step, PlanLength)],
    cap: usize,
) -> Result<Vec<(Vec<Step>, PlanLength)>, PlanError> {
    if s.len().saturating_mul(t.len()) > cap {
        return Err(PlanError::Resource(format!(
            "macro combination count exceeds cap {cap}"
        )));
    }
    let mut out = Vec::with_capacity(s.len() * t.len());
    for (seq, len) in &s {
        for (step, slen) in t {
            let mut seq2 = seq.clone();
            seq2.push(*step);
            out.push((seq2, len.clone() + slen.clone()));
        }
    }
    Ok(out)
}


/// Fills the derived metrics and assembles the result.
pub(crate) fn finish(
    planner: PlannerChoice,
    kind: GraphKind,
    arena: MacroArena,
    plan: Vec<Step>,
    all_plans: Option<Vec<Vec<Step>>>,
    mut metrics: Metrics,
    warnings: Vec<String>,
) -> Result<PlanResult, PlanError> {
    metrics.macros_generated = arena.num_macros() as u64;
    metrics.macros_used = arena.reachable_macros(&plan).len() as u64;
    metrics.expanded_length = arena
        .expanded_length(&plan)
        .map_err(|e| PlanError::Internal(e.to_string()))?;
    Ok(PlanResult {
        planner,
        kind,
        arena,
        plan,
        all_plans,
        metrics,
        warnings,
    })
}
