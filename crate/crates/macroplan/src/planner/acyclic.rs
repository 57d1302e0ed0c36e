//! Acyclic planner.
//!
//! Combines the two search styles: variables with reduction outdegree ≤ 1
//! ("lowdeg") are solved with per-variable macro searches as in the macro
//! planner, while variables with outdegree > 1 are required to be reversible
//! and are satisfied and reset around each action with the reversible
//! planner's machinery, so that generated macros never leave side effects on
//! shared ancestors. The problem is augmented with a dummy goal variable
//! whose compose call at the top level yields the plan.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use num_traits::Zero;

use crate::arena::{Macro, MacroArena, Metrics, PlanLength};
use crate::graph::{augment, build_graph, Augmented, GraphKind};
use crate::model::{ActionId, MacroId, PartialState, PlanningProblem, Step, Var};

use super::{
    finish, gate_reversibility, product_cap, Options, PlanError, PlanResult, PlannerChoice,
};
use super::reversible::RevRun;

pub(crate) fn plan_acyclic(
    problem: &PlanningProblem,
    opts: &Options,
) -> Result<PlanResult, PlanError> {
    let mut warnings = Vec::new();
    let kinds: Vec<GraphKind> = match opts.kind {
        Some(k) => vec![k],
        None => vec![GraphKind::Conventional, GraphKind::Relaxed],
    };

    // prefer an acyclic kind whose outdegree > 1 variables pass the
    // reversibility gate silently; otherwise any acyclic kind
    let mut chosen: Option<GraphKind> = None;
    let mut acyclic_fallback: Option<GraphKind> = None;
    for &k in &kinds {
        let g = build_graph(problem, k);
        if !g.is_acyclic() {
            continue;
        }
        if acyclic_fallback.is_none() {
            acyclic_fallback = Some(k);
        }
        let reduction = g.transitive_reduction().expect("acyclic");
        let highdeg = problem.schema.vars().filter(|&v| reduction.outdegree(v) > 1);
        let mut probe = Vec::new();
        if gate_reversibility(problem, &g, highdeg, opts, &mut probe).is_ok() {
            chosen = Some(k);
            warnings.extend(probe);
            break;
        }
    }
    let kind = match chosen.or(acyclic_fallback) {
        Some(k) => k,
        None => {
            return Err(PlanError::ClassViolation(
                "AOR: the causal graph is cyclic under every graph kind".into(),
            ))
        }
    };
    let graph = build_graph(problem, kind);
    if chosen.is_none() {
        // run the gate for real so force/assume handling and messages apply
        let reduction = graph.transitive_reduction().expect("acyclic");
        let highdeg = problem.schema.vars().filter(|&v| reduction.outdegree(v) > 1);
        gate_reversibility(problem, &graph, highdeg, opts, &mut warnings)?;
    }

    let aug = augment(problem, kind).map_err(|e| PlanError::Internal(e.to_string()))?;
    // outdegree over original variables only; edges into the dummy goal
    // variable do not make a variable "shared"
    let base_reduction = graph.transitive_reduction().expect("acyclic");
    let lowdeg: BTreeSet<Var> = problem
        .schema
        .vars()
        .filter(|&v| base_reduction.outdegree(v) <= 1)
        .chain([aug.vstar])
        .collect();

    let mut arena = MacroArena::for_problem(problem);
    let mut metrics = Metrics::default();
    let candidates = {
        let rev = RevRun::new(
            &aug.problem,
            &aug.graph,
            kind == GraphKind::Relaxed,
            &mut arena,
            &mut metrics,
        );
        let mut run = AcyRun {
            aug: &aug,
            opts,
            rev,
            lowdeg,
            relaxed: kind == GraphKind::Relaxed,
            solve_memo: HashMap::new(),
            counter: 0,
        };
        let res = run.compose(aug.vstar, &aug.problem.init, &problem.goal)?;
        let Some((s_set, seq, _resets)) = res else {
            return Err(PlanError::NoPlan);
        };
        let mut candidates: Vec<Vec<Step>> = Vec::new();
        for (seq4, _) in s_set {
            let mut plan = seq4;
            plan.extend(seq.iter().copied());
            candidates.push(plan);
        }
        candidates
    };

    // keep only candidates that actually reach the goal from init
    let internal = |e: crate::arena::ArenaError| PlanError::Internal(e.to_string());
    let mut valid: Vec<Vec<Step>> = Vec::new();
    for plan in candidates {
        if arena
            .seq_well_defined(&plan, &problem.init)
            .map_err(internal)?
            .is_err()
        {
            continue;
        }
        let post = arena.seq_post(&plan).map_err(internal)?;
        if problem.init.compose(&post).matches(&problem.goal) {
            valid.push(plan);
        }
    }
    let Some(plan) = valid.first().cloned() else {
        return Err(PlanError::NoPlan);
    };
    let all_plans = opts.all_solutions.then_some(valid);
    finish(PlannerChoice::Aor, kind, arena, plan, all_plans, metrics, warnings)
}

struct AcyRun<'a> {
    aug: &'a Augmented,
    opts: &'a Options,
    rev: RevRun<'a>,
    /// Original variables with reduction outdegree ≤ 1, plus the dummy root.
    lowdeg: BTreeSet<Var>,
    relaxed: bool,
    solve_memo: HashMap<(Var, PartialState), Vec<MacroId>>,
    counter: u64,
}

impl AcyRun<'_> {
    fn next_id(&mut self) -> u64 {
        self.counter += 1;
        self.counter
    }

    /// Ways to satisfy `x` from `p`: a set of lowdeg parent-macro sequences,
    /// plus one satisfying sequence and one reset sequence for the shared
    /// (outdegree > 1) variables of `x`. None on a dead end.
    #[allow(clippy::type_complexity)]
    fn compose(
        &mut self,
        v: Var,
        p: &PartialState,
        x: &PartialState,
    ) -> Result<Option<(Vec<(Vec<Step>, PlanLength)>, Vec<Step>, Vec<Step>)>, PlanError> {
        let xprime = x.restrict(&self.lowdeg);
        let mut s_set: Vec<(Vec<Step>, PlanLength)> = vec![(Vec::new(), PlanLength::zero())];
        for w in self.aug.reduction.parents(v) {
            if !self.lowdeg.contains(&w) {
                continue;
            }
            let wscope = self.aug.reduction.closure(w);
            let pw = p.restrict(&wscope);
            let xw = xprime.restrict(&wscope);
            if pw.matches(&xw) {
                continue;
            }
            let macros = self.solve(w, &pw)?;
            let t: Vec<(Step, PlanLength)> = macros
                .iter()
                .filter(|&&id| {
                    self.rev
                        .arena
                        .get(id)
                        .expect("owned macro")
                        .post
                        .matches(&xw)
                })
                .map(|&id| {
                    let len = self
                        .rev
                        .arena
                        .step_len(Step::Macro(id))
                        .expect("known macro");
                    (Step::Macro(id), len)
                })
                .collect();
            if t.is_empty() {
                return Ok(None);
            }
            s_set = product_cap(s_set, &t, self.opts.compose_cap)?;
        }

        // shared variables, satisfied in reverse topological order and reset
        // in forward order
        let mut hvars: Vec<Var> = x
            .scope()
            .filter(|w| !self.lowdeg.contains(w))
            .collect();
        hvars.sort_by_key(|w| self.rev.topo_index[w]);
        let mut sats: Vec<Step> = Vec::new();
        let mut resets: Vec<Step> = Vec::new();
        for &w in hvars.iter().rev() {
            let wscope = self.aug.reduction.closure(w);
            let pw = p.restrict(&wscope);
            let xw = x.restrict(&wscope);
            if pw.matches(&xw) {
                continue;
            }
            match self.rev.compose(&BTreeSet::new(), &pw, &xw)? {
                None => return Ok(None),
                Some((sat, reset)) => {
                    sats.extend(sat);
                    let mut r = reset;
                    r.extend(resets);
                    resets = r;
                }
            }
        }
        Ok(Some((s_set, sats, resets)))
    }

    /// Macro search for a lowdeg variable, memoized by start state.
    fn solve(&mut self, v: Var, s: &PartialState) -> Result<Vec<MacroId>, PlanError> {
        let key = (v, s.clone());
        if let Some(hit) = self.solve_memo.get(&key) {
            return Ok(hit.clone());
        }
        let internal = |e: crate::arena::ArenaError| PlanError::Internal(e.to_string());
        let problem = &self.aug.problem;
        let scope = self.aug.reduction.closure(v);
        let desc = self.aug.reduction.descendants(v);

        let mut z_list: Vec<PartialState> = Vec::new();
        let mut z_seen: BTreeSet<PartialState> = BTreeSet::new();
        for a in &problem.actions {
            if !a.post.scope().any(|u| desc.contains(&u)) {
                continue;
            }
            let z = a.pre.restrict(&scope);
            if !z.is_empty() && z_seen.insert(z.clone()) {
                z_list.push(z);
            }
        }
        let a_prime: Vec<ActionId> = problem
            .actions
            .iter()
            .enumerate()
            .filter(|(_, a)| {
                !a.dummy
                    && a.post.contains_var(v)
                    && (!self.relaxed || !a.post.scope().any(|u| desc.contains(&u)))
            })
            .map(|(i, _)| ActionId(i))
            .collect();

        let mut dist: HashMap<PartialState, PlanLength> = HashMap::new();
        let mut paths: HashMap<PartialState, Vec<Step>> = HashMap::new();
        let mut heap: BinaryHeap<Reverse<(PlanLength, u64, PartialState)>> = BinaryHeap::new();
        dist.insert(s.clone(), PlanLength::zero());
        paths.insert(s.clone(), Vec::new());
        heap.push(Reverse((PlanLength::zero(), self.next_id(), s.clone())));
        let mut settled: HashSet<PartialState> = HashSet::new();
        let mut emitted: Vec<(PartialState, Vec<Step>, PlanLength)> = Vec::new();
        let mut emit_index: HashMap<PartialState, usize> = HashMap::new();
        let mut visited: u64 = 0;

        while let Some(Reverse((len, _, p))) = heap.pop() {
            if settled.contains(&p) {
                continue;
            }
            settled.insert(p.clone());
            visited += 1;
            let seq = paths.get(&p).expect("queued state has a path").clone();

            for zi in 0..z_list.len() {
                let z = z_list[zi].clone();
                if !z.get(v).map_or(true, |d| p.get(v) == Some(d)) {
                    continue;
                }
                let Some((s_set, _, _)) = self.compose(v, &p, &z)? else {
                    continue;
                };
                for (seq4, l4) in s_set {
                    if self
                        .rev
                        .arena
                        .seq_well_defined(&seq4, &p)
                        .map_err(internal)?
                        .is_err()
                    {
                        continue;
                    }
                    let q = p.compose(&self.rev.arena.seq_post(&seq4).map_err(internal)?);
                    let mlen = len.clone() + l4;
                    let mut steps = seq.clone();
                    steps.extend(seq4);
                    match emit_index.get(&q) {
                        Some(&j) if emitted[j].2 <= mlen => {}
                        slot => match slot.copied() {
                            Some(j) => emitted[j] = (q, steps, mlen),
                            None => {
                                emit_index.insert(q.clone(), emitted.len());
                                emitted.push((q, steps, mlen));
                            }
                        },
                    }
                }
            }

            for ai in 0..a_prime.len() {
                let aid = a_prime[ai];
                let pre = problem.actions[aid.0].pre.clone();
                if !pre.get(v).map_or(true, |d| p.get(v) == Some(d)) {
                    continue;
                }
                let Some((s_set, sats, resets)) = self.compose(v, &p, &pre)? else {
                    continue;
                };
                for (seq4, _) in s_set {
                    let mut block = seq4;
                    block.extend(sats.iter().copied());
                    block.push(Step::Action(aid));
                    block.extend(resets.iter().copied());
                    // shared-ancestor resets can clash with non-unary
                    // effects; trust only simulated blocks
                    if self
                        .rev
                        .arena
                        .seq_well_defined(&block, &p)
                        .map_err(internal)?
                        .is_err()
                    {
                        continue;
                    }
                    let post = self.rev.arena.seq_post(&block).map_err(internal)?;
                    let succ = p.compose(&post.restrict(&scope));
                    if settled.contains(&succ) {
                        continue;
                    }
                    if cfg!(debug_assertions) {
                        // reset soundness: shared variables an action does
                        // not change must come back to their previous values
                        let apost = &problem.actions[aid.0].post;
                        for w in scope.iter() {
                            if !self.lowdeg.contains(w) && !apost.contains_var(*w) {
                                debug_assert_eq!(
                                    succ.get(*w),
                                    p.get(*w),
                                    "shared variable left modified"
                                );
                            }
                        }
                    }
                    let nlen = len.clone()
                        + self
                            .rev
                            .arena
                            .expanded_length(&block)
                            .map_err(internal)?;
                    if dist.get(&succ).map_or(true, |d| nlen < *d) {
                        let mut nseq = seq.clone();
                        nseq.extend(block);
                        dist.insert(succ.clone(), nlen.clone());
                        paths.insert(succ.clone(), nseq);
                        heap.push(Reverse((nlen, self.next_id(), succ)));
                        self.rev.metrics.frontier_peak =
                            self.rev.metrics.frontier_peak.max(heap.len() as u64);
                    }
                }
            }
        }
        self.rev.metrics.record_search(v, visited);

        let mut ids = Vec::with_capacity(emitted.len());
        for (q, steps, _) in emitted {
            let id = self
                .rev
                .arena
                .add_macro(Macro {
                    owner: v,
                    pre: s.clone(),
                    steps,
                    post: q,
                })
                .map_err(internal)?;
            ids.push(id);
        }
        self.solve_memo.insert(key, ids.clone());
        Ok(ids)
    }
}
