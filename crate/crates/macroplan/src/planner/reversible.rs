//! Reversible planner.
//!
//! Satisfies the goal one variable at a time in topological order. For each
//! variable it breadth-first searches the joint domain of the small set W of
//! variables that can change together with it; every action application is
//! wrapped with sequences that first satisfy the action's pre-condition and
//! then restore every touched variable outside the action's post-condition.
//! All sub-results are memoized, so repeated corridor-style movements are
//! solved once and shared.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::arena::{Macro, MacroArena, Metrics};
use crate::graph::{build_graph, is_reversible_in, w_set, CausalGraph, GraphKind, Verdict};
use crate::model::{ActionId, MacroId, PartialState, PlanningProblem, Step, Val, Var};

use super::{finish, gate_reversibility, Options, PlanError, PlanResult, PlannerChoice};

pub(crate) fn plan_reversible(
    problem: &PlanningProblem,
    opts: &Options,
) -> Result<PlanResult, PlanError> {
    let mut warnings = Vec::new();
    let (kind, graph) = choose_kind(problem, opts, &mut warnings);
    gate_reversibility(problem, &graph, problem.schema.vars(), opts, &mut warnings)?;

    let mut arena = MacroArena::for_problem(problem);
    let mut metrics = Metrics::default();
    let plan = {
        let mut run = RevRun::new(
            problem,
            &graph,
            kind == GraphKind::Relaxed,
            &mut arena,
            &mut metrics,
        );
        let pair = run.compose(&BTreeSet::new(), &problem.init, &problem.goal)?;
        let (seq, _reset) = pair.ok_or(PlanError::NoPlan)?;
        seq
    };

    // the search only enqueues verified sequences, so this is a hard check
    let internal = |e: crate::arena::ArenaError| PlanError::Internal(e.to_string());
    if arena
        .seq_well_defined(&plan, &problem.init)
        .map_err(internal)?
        .is_err()
    {
        return Err(PlanError::Internal("returned plan is ill-defined".into()));
    }
    let post = arena.seq_post(&plan).map_err(internal)?;
    if !problem.init.compose(&post).matches(&problem.goal) {
        return Err(PlanError::NoPlan);
    }
    let all_plans = opts.all_solutions.then(|| vec![plan.clone()]);
    finish(PlannerChoice::Ar, kind, arena, plan, all_plans, metrics, warnings)
}

/// Prefers an acyclic graph kind whose variables all pass the reversibility
/// gate, then any acyclic kind, then the first kind with a warning (the
/// search itself only needs a variable order, not acyclicity).
fn choose_kind(
    problem: &PlanningProblem,
    opts: &Options,
    warnings: &mut Vec<String>,
) -> (GraphKind, CausalGraph) {
    let kinds: Vec<GraphKind> = match opts.kind {
        Some(k) => vec![k],
        None => vec![GraphKind::Conventional, GraphKind::Relaxed],
    };
    let mut acyclic: Option<(GraphKind, CausalGraph)> = None;
    for &k in &kinds {
        let g = build_graph(problem, k);
        if !g.is_acyclic() {
            continue;
        }
        let all_pass = problem.schema.vars().all(|v| {
            match is_reversible_in(problem, v, &g, opts.reversibility_budget) {
                Verdict::Yes => true,
                Verdict::Unknown => opts.assume_reversible,
                Verdict::No => false,
            }
        });
        if all_pass {
            return (k, g);
        }
        if acyclic.is_none() {
            acyclic = Some((k, g));
        }
    }
    if let Some(found) = acyclic {
        return found;
    }
    warnings.push(format!(
        "the {} causal graph is cyclic; proceeding with a pseudo-topological variable order",
        kinds[0]
    ));
    (kinds[0], build_graph(problem, kinds[0]))
}

/// Kahn's algorithm with deterministic cycle breaking: when no ready node
/// remains, the smallest remaining identifier is emitted anyway.
fn pseudo_topological_order(g: &CausalGraph) -> Vec<Var> {
    let mut indeg: BTreeMap<Var, usize> = g.nodes().iter().map(|&v| (v, 0)).collect();
    for (_, v) in g.edges() {
        *indeg.get_mut(&v).expect("edge endpoint") += 1;
    }
    let mut remaining: BTreeSet<Var> = g.nodes().clone();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .find(|v| indeg[v] == 0)
            .or_else(|| remaining.iter().next())
            .copied()
            .expect("non-empty");
        remaining.remove(&next);
        order.push(next);
        for w in g.successors(next) {
            if remaining.contains(&w) {
                let d = indeg.get_mut(&w).expect("node");
                *d = d.saturating_sub(1);
            }
        }
    }
    order
}

/// Shared state of one reversible-planner run. Also embedded by the acyclic
/// planner for the reversible legs of its compositions.
pub(crate) struct RevRun<'a> {
    problem: &'a PlanningProblem,
    graph: &'a CausalGraph,
    /// Exclude actions with effects on descendants of the solved variable
    /// (the relaxed-graph variant of the action filter).
    relaxed: bool,
    pub(crate) arena: &'a mut MacroArena,
    pub(crate) metrics: &'a mut Metrics,
    pub(crate) topo_index: BTreeMap<Var, usize>,
    w_cache: BTreeMap<Var, BTreeSet<Var>>,
    solve_memo: HashMap<(Var, PartialState, Val), Option<MacroId>>,
    /// Keys of solve calls currently on the recursion stack; re-entrant
    /// calls report failure (without caching it) to break dependency cycles.
    solve_stack: HashSet<(Var, PartialState, Val)>,
    #[allow(clippy::type_complexity)]
    compose_memo: HashMap<(BTreeSet<Var>, PartialState, PartialState), Option<(Vec<Step>, Vec<Step>)>>,
}

impl<'a> RevRun<'a> {
    pub(crate) fn new(
        problem: &'a PlanningProblem,
        graph: &'a CausalGraph,
        relaxed: bool,
        arena: &'a mut MacroArena,
        metrics: &'a mut Metrics,
    ) -> RevRun<'a> {
        let topo_index = pseudo_topological_order(graph)
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        RevRun {
            problem,
            graph,
            relaxed,
            arena,
            metrics,
            topo_index,
            w_cache: BTreeMap::new(),
            solve_memo: HashMap::new(),
            solve_stack: HashSet::new(),
            compose_memo: HashMap::new(),
        }
    }

    fn w_of(&mut self, v: Var) -> BTreeSet<Var> {
        if let Some(w) = self.w_cache.get(&v) {
            return w.clone();
        }
        let w = w_set(self.problem, self.graph, v);
        self.w_cache.insert(v, w.clone());
        w
    }

    /// Satisfies `x` in `s` one variable at a time. Returns the satisfying
    /// sequence and the sequence resetting every variable outside `u` back
    /// to its value in `s`, or None when some subgoal is unreachable.
    #[allow(clippy::type_complexity)]
    pub(crate) fn compose(
        &mut self,
        u: &BTreeSet<Var>,
        s: &PartialState,
        x: &PartialState,
    ) -> Result<Option<(Vec<Step>, Vec<Step>)>, PlanError> {
        let mut scope = BTreeSet::new();
        for (w, _) in x.iter() {
            scope.extend(self.graph.closure(w));
        }
        let key = (u.clone(), s.restrict(&scope), x.clone());
        if let Some(hit) = self.compose_memo.get(&key) {
            return Ok(hit.clone());
        }

        let mut vars: Vec<Var> = x.scope().collect();
        vars.sort_by_key(|v| self.topo_index[v]);
        // macros are prepended, so the sequence runs in reverse topological
        // order; resets run forward
        let mut sats: Vec<Step> = Vec::new();
        let mut resets: Vec<Step> = Vec::new();
        let mut failed = false;
        for w in vars {
            let d = x.get(w).expect("scope var");
            let cur = s.get(w).expect("s must assign every goal variable");
            if cur == d {
                continue;
            }
            match self.solve(w, s, d)? {
                None => {
                    failed = true;
                    break;
                }
                Some(m) => {
                    sats.push(Step::Macro(m));
                    if !u.contains(&w) {
                        let s2 = s.compose(&PartialState::singleton(w, d));
                        match self.solve(w, &s2, cur)? {
                            None => {
                                failed = true;
                                break;
                            }
                            Some(m2) => resets.push(Step::Macro(m2)),
                        }
                    }
                }
            }
        }
        let out = if failed {
            None
        } else {
            sats.reverse();
            Some((sats, resets))
        };
        self.compose_memo.insert(key, out.clone());
        Ok(out)
    }

    /// Breadth-first search over W-projections for a macro moving `v` to `d`
    /// in `s` while restoring every other variable.
    pub(crate) fn solve(
        &mut self,
        v: Var,
        s: &PartialState,
        d: Val,
    ) -> Result<Option<MacroId>, PlanError> {
        let scope = self.graph.closure(v);
        let w = self.w_of(v);
        let non_w: BTreeSet<Var> = scope.difference(&w).copied().collect();
        // variables outside W cannot have moved since the initial state;
        // the memo key below is only sound under this invariant
        assert!(
            s.restrict(&non_w) == self.problem.init.restrict(&non_w),
            "reversible search invariant violated for `{}`",
            self.problem.schema.name(v)
        );
        let key = (v, s.restrict(&w), d);
        if let Some(&hit) = self.solve_memo.get(&key) {
            return Ok(hit);
        }
        if !self.solve_stack.insert(key.clone()) {
            return Ok(None);
        }

        let internal = |e: crate::arena::ArenaError| PlanError::Internal(e.to_string());
        if s.get(v) == Some(d) {
            let pre = s.restrict(&scope);
            let id = self
                .arena
                .add_macro(Macro {
                    owner: v,
                    pre: pre.clone(),
                    steps: Vec::new(),
                    post: pre,
                })
                .map_err(internal)?;
            self.solve_stack.remove(&key);
            self.solve_memo.insert(key, Some(id));
            return Ok(Some(id));
        }

        let desc = self.graph.descendants(v);
        let a_prime: Vec<ActionId> = self
            .problem
            .actions
            .iter()
            .enumerate()
            .filter(|(_, a)| {
                !a.dummy
                    && a.post.contains_var(v)
                    && (!self.relaxed || !a.post.scope().any(|u2| desc.contains(&u2)))
            })
            .map(|(i, _)| ActionId(i))
            .collect();

        let start = s.restrict(&w);
        let target = start.compose(&PartialState::singleton(v, d));
        let mut queue: VecDeque<(PartialState, Vec<Step>)> =
            VecDeque::from([(start.clone(), Vec::new())]);
        let mut visited: HashSet<PartialState> = HashSet::from([start]);
        let mut found: Option<Vec<Step>> = None;
        let mut dequeued: u64 = 0;
        'bfs: while let Some((p, seq)) = queue.pop_front() {
            dequeued += 1;
            if p == target {
                found = Some(seq);
                break 'bfs;
            }
            for &aid in &a_prime {
                let a = &self.problem.actions[aid.0];
                // the search state is the W-projection, so the action must
                // agree with p on every W variable, not just on v
                if !p.matches(&a.pre) {
                    continue;
                }
                let full = s.compose(&p);
                let succ = p.compose(&a.post.restrict(&w));
                if visited.contains(&succ) {
                    continue;
                }
                let u: BTreeSet<Var> = a.post.scope_set();
                let Some((seq2, seq3)) = self.compose(&u, &full, &a.pre)? else {
                    continue;
                };
                let mut block = seq2;
                block.push(Step::Action(aid));
                block.extend(seq3);
                // with non-unary actions the composed block may interleave
                // badly; verify it before trusting the projected successor
                if self
                    .arena
                    .seq_well_defined(&block, &full)
                    .map_err(internal)?
                    .is_err()
                {
                    continue;
                }
                let reached = full.compose(&self.arena.seq_post(&block).map_err(internal)?);
                if reached != s.compose(&succ) {
                    continue;
                }
                visited.insert(succ.clone());
                let mut nseq = seq.clone();
                nseq.extend(block);
                queue.push_back((succ, nseq));
                self.metrics.frontier_peak =
                    self.metrics.frontier_peak.max(queue.len() as u64);
            }
        }
        self.metrics.record_search(v, dequeued);

        let out = match found {
            None => None,
            Some(steps) => {
                let pre = s.restrict(&scope);
                let post = pre.compose(&PartialState::singleton(v, d));
                let id = self
                    .arena
                    .add_macro(Macro {
                        owner: v,
                        pre,
                        steps,
                        post,
                    })
                    .map_err(internal)?;
                Some(id)
            }
        };
        self.solve_stack.remove(&key);
        self.solve_memo.insert(key, out);
        Ok(out)
    }
}
