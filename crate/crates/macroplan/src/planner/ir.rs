//! Macro planner for inverted-tree-reducible problems.
//!
//! Works per normalized component. For each variable, bottom-up over the
//! reduction, it solves the projected subproblems with an implicit-graph
//! Dijkstra search: type-1 successors apply an action changing the variable
//! (prefixed by parent macros from `compose`), type-2 emissions record a
//! macro to each state matching a projected pre-condition. The relaxed
//! variant changes only which pre-conditions are projected, which actions
//! change the variable "locally", and how the worklist is reseeded.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use num_traits::Zero;

use crate::arena::{Macro, MacroArena, Metrics, PlanLength};
use crate::graph::{normalize, GraphKind, NormalizedComponent};
use crate::model::{ActionId, MacroId, PartialState, PlanningProblem, Step, Var};

use super::{finish, product_cap, Options, PlanError, PlanResult, PlannerChoice};

/// A macro candidate before materialization into the arena.
struct Emitted {
    pre: PartialState,
    post: PartialState,
    steps: Vec<Step>,
    len: PlanLength,
}

pub(crate) fn plan_ir(
    problem: &PlanningProblem,
    kind: GraphKind,
    opts: &Options,
) -> Result<PlanResult, PlanError> {
    let class = match kind {
        GraphKind::Conventional => "IR",
        GraphKind::Relaxed => "RIR",
    };
    let planner = match kind {
        GraphKind::Conventional => PlannerChoice::Ir,
        GraphKind::Relaxed => PlannerChoice::Rir,
    };
    let comps = normalize(problem, kind).map_err(|_| {
        PlanError::ClassViolation(format!("{class}: the {kind} causal graph is cyclic"))
    })?;
    let mut warnings = Vec::new();
    for c in &comps {
        if !c.reduction.is_inverted_tree() {
            if opts.force {
                warnings.push(format!(
                    "{class}: a component reduction is not an inverted tree; forced"
                ));
            } else {
                return Err(PlanError::ClassViolation(format!(
                    "{class}: the transitive reduction of the {kind} causal graph \
                     is not an inverted tree"
                )));
            }
        }
    }

    let mut arena = MacroArena::for_problem(problem);
    let mut metrics = Metrics::default();
    // best-first solution macros per component: (id, length)
    let mut solutions: Vec<Vec<(MacroId, PlanLength)>> = Vec::new();
    for c in &comps {
        let parents = c.reduction.parents(c.vstar);
        if parents.len() != 1 {
            return Err(PlanError::ClassViolation(
                "goal variables do not funnel into a single root of the reduction".into(),
            ));
        }
        let root = *parents.iter().next().expect("checked");
        {
            let mut run = IrRun {
                comp: c,
                relaxed: kind == GraphKind::Relaxed,
                opts,
                arena: &mut arena,
                metrics: &mut metrics,
                counter: 0,
                done: BTreeSet::new(),
            };
            run.get_macros(root)?;
        }
        let scope = c.reduction.closure(root);
        let init_proj = c.problem.init.restrict(&scope);
        let mut sols: Vec<(MacroId, PlanLength)> = arena
            .macros_of(root)
            .iter()
            .filter(|&&id| {
                let m = arena.get(id).expect("owned macro");
                m.pre == init_proj && m.post.matches(&c.problem.goal)
            })
            .map(|&id| {
                let len = arena.step_len(Step::Macro(id)).expect("known macro");
                (id, len)
            })
            .collect();
        if sols.is_empty() {
            return Err(PlanError::NoPlan);
        }
        // arena order is emission order, so a stable sort keeps first-wins ties
        sols.sort_by_key(|(_, len)| len.clone());
        solutions.push(sols);
    }

    let plan: Vec<Step> = solutions
        .iter()
        .map(|sols| Step::Macro(sols[0].0))
        .collect();
    let all_plans = if opts.all_solutions {
        let mut plans: Vec<(Vec<Step>, PlanLength)> = vec![(Vec::new(), PlanLength::zero())];
        for sols in &solutions {
            let t: Vec<(Step, PlanLength)> = sols
                .iter()
                .map(|(id, len)| (Step::Macro(*id), len.clone()))
                .collect();
            plans = product_cap(plans, &t, opts.compose_cap)?;
        }
        Some(plans.into_iter().map(|(steps, _)| steps).collect())
    } else {
        None
    };
    finish(planner, kind, arena, plan, all_plans, metrics, warnings)
}

struct IrRun<'a> {
    comp: &'a NormalizedComponent,
    relaxed: bool,
    opts: &'a Options,
    arena: &'a mut MacroArena,
    metrics: &'a mut Metrics,
    /// Monotone tie-breaker: earlier queue insertions win among equal lengths.
    counter: u64,
    done: BTreeSet<Var>,
}

impl IrRun<'_> {
    fn next_id(&mut self) -> u64 {
        self.counter += 1;
        self.counter
    }

    /// Generates and materializes all macros for `v`, parents first.
    fn get_macros(&mut self, v: Var) -> Result<(), PlanError> {
        if self.done.contains(&v) {
            return Ok(());
        }
        for w in self.comp.reduction.parents(v) {
            self.get_macros(w)?;
        }
        let p = &self.comp.problem;
        let scope = self.comp.reduction.closure(v);
        let desc = self.comp.reduction.descendants(v);

        // projected pre-conditions of actions operating below v
        let mut z_list: Vec<PartialState> = Vec::new();
        let mut z_seen: BTreeSet<PartialState> = BTreeSet::new();
        for a in &p.actions {
            let below = if self.relaxed {
                a.post.scope().any(|u| desc.contains(&u))
            } else {
                a.post.scope().all(|u| desc.contains(&u))
            };
            if !below {
                continue;
            }
            let z = a.pre.restrict(&scope);
            if !z.is_empty() && z_seen.insert(z.clone()) {
                z_list.push(z);
            }
        }

        // actions changing v itself; in the relaxed variant only those whose
        // other effects stay out of Desc(v)
        let o_actions: Vec<ActionId> = p
            .actions
            .iter()
            .enumerate()
            .filter(|(_, a)| {
                a.post.contains_var(v)
                    && (!self.relaxed || !a.post.scope().any(|u| desc.contains(&u)))
            })
            .map(|(i, _)| ActionId(i))
            .collect();

        // relaxed worklist reseeding: applying a below-v action moves the
        // projected state to post(m) ⊕ (post(a) | V_v)
        let seed_actions: Vec<&crate::model::Action> = if self.relaxed {
            p.actions
                .iter()
                .filter(|a| {
                    !a.dummy
                        && a.post.scope().any(|u| desc.contains(&u))
                        && !a.pre.restrict(&scope).is_empty()
                })
                .collect()
        } else {
            Vec::new()
        };

        let init_proj = p.init.restrict(&scope);
        let goal_proj = p.goal.restrict(&scope);
        let mut queue: Vec<PartialState> = vec![init_proj.clone()];
        let mut seen: HashSet<PartialState> = queue.iter().cloned().collect();
        let mut acc: Vec<Emitted> = Vec::new();
        let mut bad: HashSet<PartialState> = HashSet::new();
        let mut i = 0;
        while i < queue.len() {
            let s = queue[i].clone();
            i += 1;
            let emitted = self.solve(v, &s, &scope, &z_list, &o_actions)?;
            if self.opts.pruning && !goal_proj.is_empty() {
                let goal_reachable = emitted.iter().any(|m| m.post.matches(&goal_proj));
                if !goal_reachable {
                    if s == init_proj {
                        // projected goal unreachable from the projected init
                        return Err(PlanError::NoPlan);
                    }
                    bad.insert(s.clone());
                }
            }
            if self.relaxed {
                for m in &emitted {
                    for a in &seed_actions {
                        if m.post.matches(&a.pre) {
                            let t = m.post.compose(&a.post.restrict(&scope));
                            if seen.insert(t.clone()) {
                                queue.push(t);
                            }
                        }
                    }
                }
            } else {
                for m in &emitted {
                    if seen.insert(m.post.clone()) {
                        queue.push(m.post.clone());
                    }
                }
            }
            acc.extend(emitted);
        }

        for m in acc {
            if self.opts.pruning && (bad.contains(&m.pre) || bad.contains(&m.post)) {
                continue;
            }
            self.arena
                .add_macro(Macro {
                    owner: v,
                    pre: m.pre,
                    steps: m.steps,
                    post: m.post,
                })
                .map_err(|e| PlanError::Internal(format!("emitted macro rejected: {e}")))?;
        }
        self.done.insert(v);
        Ok(())
    }

    /// Dijkstra over projected states of `scope`, rooted at `s`. Returns the
    /// macros emitted for this start state, in emission order.
    fn solve(
        &mut self,
        v: Var,
        s: &PartialState,
        scope: &BTreeSet<Var>,
        z_list: &[PartialState],
        o_actions: &[ActionId],
    ) -> Result<Vec<Emitted>, PlanError> {
        let mut dist: HashMap<PartialState, PlanLength> = HashMap::new();
        let mut paths: HashMap<PartialState, Vec<Step>> = HashMap::new();
        let mut heap: BinaryHeap<Reverse<(PlanLength, u64, PartialState)>> = BinaryHeap::new();
        dist.insert(s.clone(), PlanLength::zero());
        paths.insert(s.clone(), Vec::new());
        heap.push(Reverse((PlanLength::zero(), self.next_id(), s.clone())));

        let mut settled: Vec<(PartialState, PlanLength)> = Vec::new();
        let mut settled_set: HashSet<PartialState> = HashSet::new();
        let mut emitted: Vec<Emitted> = Vec::new();
        let mut emit_index: HashMap<PartialState, usize> = HashMap::new();
        let mut visited: u64 = 0;

        while let Some(Reverse((len, _, p))) = heap.pop() {
            if settled_set.contains(&p) {
                continue;
            }
            settled_set.insert(p.clone());
            let seq = paths.get(&p).expect("queued state has a path").clone();

            if self.opts.pruning {
                // dominated state: an earlier-settled state with the same
                // value of v reaches p at no extra cost via parent macros
                let mut dominated = false;
                for (t, tlen) in &settled {
                    if t.get(v) != p.get(v) {
                        continue;
                    }
                    if let Some(l3) = self.compose_len(v, t, &p)? {
                        if tlen.clone() + l3 <= len {
                            dominated = true;
                            break;
                        }
                    }
                }
                if dominated {
                    continue;
                }
            }
            visited += 1;
            settled.push((p.clone(), len.clone()));

            // type-2: emit a macro for every projected pre-condition
            // compatible with the current value of v
            for z in z_list {
                if !z.get(v).map_or(true, |d| p.get(v) == Some(d)) {
                    continue;
                }
                for (seq2, l2) in self.compose(v, &p, z)? {
                    let q = p.compose(
                        &self
                            .arena
                            .seq_post(&seq2)
                            .map_err(|e| PlanError::Internal(e.to_string()))?,
                    );
                    let mlen = len.clone() + l2;
                    if self.opts.pruning {
                        // an earlier-settled state matching z that reaches q
                        // at no extra cost makes this macro redundant
                        let mut covered = false;
                        for (t, tlen) in settled.iter().take(settled.len() - 1) {
                            if t.get(v) != q.get(v) || !t.matches(z) {
                                continue;
                            }
                            if let Some(l3) = self.compose_len(v, t, &q)? {
                                if tlen.clone() + l3 <= mlen {
                                    covered = true;
                                    break;
                                }
                            }
                        }
                        if covered {
                            continue;
                        }
                    }
                    let mut steps = seq.clone();
                    steps.extend(seq2);
                    match emit_index.get(&q) {
                        Some(&j) if emitted[j].len <= mlen => {}
                        slot => {
                            let rec = Emitted {
                                pre: s.clone(),
                                post: q.clone(),
                                steps,
                                len: mlen,
                            };
                            match slot.copied() {
                                Some(j) => emitted[j] = rec,
                                None => {
                                    emit_index.insert(q.clone(), emitted.len());
                                    emitted.push(rec);
                                }
                            }
                        }
                    }
                }
            }

            // type-1: apply an action changing v, prefixed by parent macros
            // satisfying its pre-condition
            for &aid in o_actions {
                let a = &self.comp.problem.actions[aid.0];
                if !a.pre.get(v).map_or(true, |d| p.get(v) == Some(d)) {
                    continue;
                }
                for (seq2, l2) in self.compose(v, &p, &a.pre)? {
                    let mut succ = p.compose(
                        &self
                            .arena
                            .seq_post(&seq2)
                            .map_err(|e| PlanError::Internal(e.to_string()))?,
                    );
                    succ.compose_in_place(&a.post.restrict(scope));
                    if settled_set.contains(&succ) {
                        continue;
                    }
                    let nlen = len.clone() + l2 + PlanLength::from(1u32);
                    let improves = dist.get(&succ).map_or(true, |d| nlen < *d);
                    if improves {
                        let mut nseq = seq.clone();
                        nseq.extend(seq2);
                        nseq.push(Step::Action(aid));
                        dist.insert(succ.clone(), nlen.clone());
                        paths.insert(succ.clone(), nseq);
                        heap.push(Reverse((nlen, self.next_id(), succ)));
                        self.metrics.frontier_peak =
                            self.metrics.frontier_peak.max(heap.len() as u64);
                    }
                }
            }
        }
        self.metrics.record_search(v, visited);
        Ok(emitted)
    }

    /// All ways to satisfy `x` from `p` using one macro per mismatching
    /// parent of `v`, with lengths; empty when some parent has no macro.
    fn compose(
        &self,
        v: Var,
        p: &PartialState,
        x: &PartialState,
    ) -> Result<Vec<(Vec<Step>, PlanLength)>, PlanError> {
        let mut s_set: Vec<(Vec<Step>, PlanLength)> = vec![(Vec::new(), PlanLength::zero())];
        for w in self.comp.reduction.parents(v) {
            let wscope = self.comp.reduction.closure(w);
            let pw = p.restrict(&wscope);
            let xw = x.restrict(&wscope);
            if pw.matches(&xw) {
                continue;
            }
            let t: Vec<(Step, PlanLength)> = self
                .arena
                .macros_of(w)
                .iter()
                .filter(|&&id| {
                    let m = self.arena.get(id).expect("owned macro");
                    m.pre == pw && m.post.matches(&xw)
                })
                .map(|&id| {
                    let len = self.arena.step_len(Step::Macro(id)).expect("known macro");
                    (Step::Macro(id), len)
                })
                .collect();
            if t.is_empty() {
                return Ok(Vec::new());
            }
            s_set = product_cap(s_set, &t, self.opts.compose_cap)?;
        }
        Ok(s_set)
    }

    /// Length of the unique parent-macro sequence from `t` to the fully
    /// specified state `q`, if it exists. Used only by pruning.
    fn compose_len(
        &self,
        v: Var,
        t: &PartialState,
        q: &PartialState,
    ) -> Result<Option<PlanLength>, PlanError> {
        let seqs = self.compose(v, t, q)?;
        Ok(seqs.into_iter().map(|(_, len)| len).min())
    }
}
