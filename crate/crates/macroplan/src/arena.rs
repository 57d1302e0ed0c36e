//! Macro arena and plan algebra: the global DAG store of macros, memoized
//! arbitrary-precision expanded lengths, bounded expansion, and streaming
//! plan validation.
//!
//! Macros reference earlier arena entries only, so the reference graph is a
//! DAG by construction and expanded lengths are a single bottom-up sum.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::{
    Action, ActionId, MacroId, PartialState, PlanningProblem, Step, Var,
};

/// Expanded plan length. Exponential-length plans exceed 64 bits well inside
/// the benchmark range, so lengths are arbitrary precision throughout.
pub type PlanLength = BigUint;

#[derive(Error, Debug)]
pub enum ArenaError {
    #[error("unknown step identifier {0:?}")]
    UnknownStep(Step),
    #[error("macro sequence is not well-defined for its pre-condition (step {0})")]
    IllDefinedSequence(usize),
    #[error("macro post-condition does not equal pre ⊕ post(seq)")]
    PostMismatch,
    #[error("expansion limit exceeded; full length is {0}")]
    LimitExceeded(PlanLength),
}

/// `⟨pre, seq, post⟩` with pre and post total over the owner's variable set.
#[derive(Clone, Debug)]
pub struct Macro {
    pub owner: Var,
    pub pre: PartialState,
    pub steps: Vec<Step>,
    pub post: PartialState,
}

/// Append-only store of the actions and macros a planner run produces.
#[derive(Clone, Debug)]
pub struct MacroArena {
    actions: Vec<Action>,
    macros: Vec<Macro>,
    lengths: Vec<PlanLength>,
    by_owner: BTreeMap<Var, Vec<MacroId>>,
}

impl MacroArena {
    pub fn new(actions: Vec<Action>) -> MacroArena {
        MacroArena {
            actions,
            macros: Vec::new(),
            lengths: Vec::new(),
            by_owner: BTreeMap::new(),
        }
    }

    pub fn for_problem(problem: &PlanningProblem) -> MacroArena {
        MacroArena::new(problem.actions.clone())
    }

    pub fn action(&self, id: ActionId) -> Option<&Action> {
        self.actions.get(id.0)
    }

    pub fn get(&self, id: MacroId) -> Option<&Macro> {
        self.macros.get(id.0)
    }

    pub fn num_macros(&self) -> usize {
        self.macros.len()
    }

    pub fn macro_ids(&self) -> impl Iterator<Item = MacroId> {
        (0..self.macros.len()).map(MacroId)
    }

    pub fn macros_of(&self, owner: Var) -> &[MacroId] {
        self.by_owner.get(&owner).map_or(&[], |v| v.as_slice())
    }

    fn check_step(&self, step: Step) -> Result<(), ArenaError> {
        let known = match step {
            Step::Action(a) => a.0 < self.actions.len(),
            Step::Macro(m) => m.0 < self.macros.len(),
        };
        if known {
            Ok(())
        } else {
            Err(ArenaError::UnknownStep(step))
        }
    }

    pub fn step_pre(&self, step: Step) -> Result<&PartialState, ArenaError> {
        self.check_step(step)?;
        Ok(match step {
            Step::Action(a) => &self.actions[a.0].pre,
            Step::Macro(m) => &self.macros[m.0].pre,
        })
    }

    /// A macro step contributes its recorded post-condition, total over the
    /// owner's variable set, which makes the ⊕-fold exact.
    pub fn step_post(&self, step: Step) -> Result<&PartialState, ArenaError> {
        self.check_step(step)?;
        Ok(match step {
            Step::Action(a) => &self.actions[a.0].post,
            Step::Macro(m) => &self.macros[m.0].post,
        })
    }

    /// `post(seq) = post(a_1) ⊕ … ⊕ post(a_k)`.
    pub fn seq_post(&self, steps: &[Step]) -> Result<PartialState, ArenaError> {
        let mut out = PartialState::empty();
        for &step in steps {
            out.compose_in_place(self.step_post(step)?);
        }
        Ok(out)
    }

    /// Def 2.1: each step's pre-condition matches the cumulative state.
    /// Returns the index of the first violating step on failure.
    pub fn seq_well_defined(
        &self,
        steps: &[Step],
        s: &PartialState,
    ) -> Result<Result<(), usize>, ArenaError> {
        let mut cur = s.clone();
        for (i, &step) in steps.iter().enumerate() {
            if !cur.matches(self.step_pre(step)?) {
                return Ok(Err(i));
            }
            cur.compose_in_place(self.step_post(step)?);
        }
        Ok(Ok(()))
    }

    pub fn macro_well_defined(&self, m: &Macro) -> Result<bool, ArenaError> {
        if self.seq_well_defined(&m.steps, &m.pre)?.is_err() {
            return Ok(false);
        }
        Ok(m.pre.compose(&self.seq_post(&m.steps)?) == m.post)
    }

    /// Inserts a macro after checking it is well-defined. Steps may only
    /// reference existing entries, so insertion cannot create a cycle.
    pub fn add_macro(&mut self, m: Macro) -> Result<MacroId, ArenaError> {
        if let Err(i) = self.seq_well_defined(&m.steps, &m.pre)? {
            return Err(ArenaError::IllDefinedSequence(i));
        }
        if m.pre.compose(&self.seq_post(&m.steps)?) != m.post {
            return Err(ArenaError::PostMismatch);
        }
        Ok(self.push(m))
    }

    /// Inserts without the well-definedness check. Used when reloading plan
    /// files, where validation is a separate, diagnosable step.
    pub fn add_macro_unchecked(&mut self, m: Macro) -> Result<MacroId, ArenaError> {
        for &step in &m.steps {
            self.check_step(step)?;
        }
        Ok(self.push(m))
    }

    fn push(&mut self, m: Macro) -> MacroId {
        let len = m
            .steps
            .iter()
            .map(|&s| self.step_len(s).expect("steps checked"))
            .sum();
        let id = MacroId(self.macros.len());
        self.by_owner.entry(m.owner).or_default().push(id);
        self.macros.push(m);
        self.lengths.push(len);
        id
    }

    pub fn step_len(&self, step: Step) -> Result<PlanLength, ArenaError> {
        self.check_step(step)?;
        Ok(match step {
            Step::Action(_) => PlanLength::one(),
            Step::Macro(m) => self.lengths[m.0].clone(),
        })
    }

    /// Memoized expanded length of a sequence; never expands the DAG.
    pub fn expanded_length(&self, steps: &[Step]) -> Result<PlanLength, ArenaError> {
        let mut total = PlanLength::zero();
        for &step in steps {
            total += self.step_len(step)?;
        }
        Ok(total)
    }

    /// Left-to-right unfolding into primitive actions, refused when the
    /// result would exceed `limit`.
    pub fn expand(&self, steps: &[Step], limit: u64) -> Result<Vec<ActionId>, ArenaError> {
        let total = self.expanded_length(steps)?;
        if total > PlanLength::from(limit) {
            return Err(ArenaError::LimitExceeded(total));
        }
        let mut out = Vec::new();
        for action in self.expansion(steps) {
            out.push(action?);
        }
        Ok(out)
    }

    /// Streaming left-to-right expansion over an explicit stack of
    /// (sequence, position) frames; memory is bounded by DAG depth.
    pub fn expansion<'a>(&'a self, steps: &'a [Step]) -> Expansion<'a> {
        Expansion {
            arena: self,
            stack: vec![(steps, 0)],
        }
    }

    /// Distinct macros reachable from `steps` in the reference DAG,
    /// including the referenced macros themselves.
    pub fn reachable_macros(&self, steps: &[Step]) -> Vec<MacroId> {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack: Vec<MacroId> = steps
            .iter()
            .filter_map(|s| match s {
                Step::Macro(m) => Some(*m),
                Step::Action(_) => None,
            })
            .collect();
        while let Some(m) = stack.pop() {
            if !seen.insert(m) {
                continue;
            }
            for &step in &self.macros[m.0].steps {
                if let Step::Macro(inner) = step {
                    stack.push(inner);
                }
            }
        }
        seen.into_iter().collect()
    }
}

pub struct Expansion<'a> {
    arena: &'a MacroArena,
    stack: Vec<(&'a [Step], usize)>,
}

impl<'a> Iterator for Expansion<'a> {
    type Item = Result<ActionId, ArenaError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (steps, pos) = self.stack.last_mut()?;
            if *pos >= steps.len() {
                self.stack.pop();
                continue;
            }
            let step = steps[*pos];
            *pos += 1;
            match step {
                Step::Action(a) => {
                    if self.arena.action(a).is_none() {
                        return Some(Err(ArenaError::UnknownStep(step)));
                    }
                    return Some(Ok(a));
                }
                Step::Macro(m) => match self.arena.get(m) {
                    Some(mac) => self.stack.push((&mac.steps, 0)),
                    None => return Some(Err(ArenaError::UnknownStep(step))),
                },
            }
        }
    }
}

/// Outcome of validating a plan against a problem.
#[derive(Debug)]
pub enum Validation {
    Valid {
        length: PlanLength,
    },
    /// `index` is the position of the first violating primitive action in the
    /// flat expansion; `None` means the final state missed the goal.
    Invalid {
        index: Option<u64>,
        reason: String,
    },
    /// The plan's expanded length exceeds the simulation budget; the first
    /// `checked` actions were verified applicable.
    BudgetExceeded {
        length: PlanLength,
        checked: u64,
    },
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid { .. })
    }
}

/// Simulates the lazily expanded plan from `init`, checking applicability of
/// every primitive action and the goal at the end. Full validation only when
/// the expanded length fits within `budget` steps.
pub fn validate(
    arena: &MacroArena,
    plan: &[Step],
    problem: &PlanningProblem,
    budget: u64,
) -> Result<Validation, ArenaError> {
    let length = arena.expanded_length(plan)?;
    let full = length <= PlanLength::from(budget);
    let mut state = problem.init.clone();
    let mut index: u64 = 0;
    for action in arena.expansion(plan) {
        if index >= budget {
            return Ok(Validation::BudgetExceeded {
                length,
                checked: index,
            });
        }
        let id = action?;
        let a = arena.action(id).expect("expansion yields known actions");
        if !state.matches(&a.pre) {
            return Ok(Validation::Invalid {
                index: Some(index),
                reason: format!("action `{}` not applicable at step {}", a.name, index),
            });
        }
        state.compose_in_place(&a.post);
        index += 1;
    }
    debug_assert!(full, "expansion shorter than its computed length");
    if state.matches(&problem.goal) {
        Ok(Validation::Valid { length })
    } else {
        Ok(Validation::Invalid {
            index: None,
            reason: "final state does not satisfy the goal".into(),
        })
    }
}

/// Instrumentation counters for a planner run.
#[derive(Clone, Debug, Default)]
pub struct Metrics {
    /// Total states dequeued across all subproblem searches per variable
    /// (the g_v feed).
    pub states_visited: BTreeMap<Var, u64>,
    /// Largest number of states dequeued in any single search for a variable.
    pub max_states_per_search: BTreeMap<Var, u64>,
    pub macros_generated: u64,
    pub macros_used: u64,
    pub expanded_length: PlanLength,
    pub frontier_peak: u64,
}

impl Metrics {
    pub fn record_search(&mut self, v: Var, states: u64) {
        *self.states_visited.entry(v).or_default() += states;
        let m = self.max_states_per_search.entry(v).or_default();
        *m = (*m).max(states);
    }
}
