//! Causal graphs (conventional and relaxed), transitive reduction, goal
//! normalization with the dummy root variable, reversibility checks, and
//! membership in the classes IR, RIR, AR, and AOR.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::model::{Action, ActionId, PartialState, PlanningProblem, Val, Var};

#[derive(Error, Debug, PartialEq, Eq)]
pub enum GraphError {
    #[error("causal graph contains a cycle")]
    Cyclic,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum GraphKind {
    Conventional,
    Relaxed,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphKind::Conventional => write!(f, "conventional"),
            GraphKind::Relaxed => write!(f, "relaxed"),
        }
    }
}

/// Directed graph over problem variables with derived reachability queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalGraph {
    pub kind: GraphKind,
    nodes: BTreeSet<Var>,
    out: BTreeMap<Var, BTreeSet<Var>>,
    inc: BTreeMap<Var, BTreeSet<Var>>,
}

impl CausalGraph {
    pub fn new(kind: GraphKind, nodes: BTreeSet<Var>) -> CausalGraph {
        CausalGraph {
            kind,
            nodes,
            out: BTreeMap::new(),
            inc: BTreeMap::new(),
        }
    }

    pub fn add_edge(&mut self, from: Var, to: Var) {
        debug_assert!(self.nodes.contains(&from) && self.nodes.contains(&to));
        self.out.entry(from).or_default().insert(to);
        self.inc.entry(to).or_default().insert(from);
    }

    pub fn nodes(&self) -> &BTreeSet<Var> {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (Var, Var)> + '_ {
        self.out
            .iter()
            .flat_map(|(u, vs)| vs.iter().map(move |v| (*u, *v)))
    }

    pub fn num_edges(&self) -> usize {
        self.out.values().map(|s| s.len()).sum()
    }

    pub fn has_edge(&self, from: Var, to: Var) -> bool {
        self.out.get(&from).is_some_and(|s| s.contains(&to))
    }

    pub fn successors(&self, v: Var) -> impl Iterator<Item = Var> + '_ {
        self.out.get(&v).into_iter().flatten().copied()
    }

    /// `Pa(v)`: variables on incoming edges.
    pub fn parents(&self, v: Var) -> BTreeSet<Var> {
        self.inc.get(&v).cloned().unwrap_or_default()
    }

    pub fn outdegree(&self, v: Var) -> usize {
        self.out.get(&v).map_or(0, |s| s.len())
    }

    pub fn ancestors(&self, v: Var) -> BTreeSet<Var> {
        self.reach(v, |g, u| g.inc.get(&u))
    }

    pub fn descendants(&self, v: Var) -> BTreeSet<Var> {
        self.reach(v, |g, u| g.out.get(&u))
    }

    fn reach<'a, F>(&'a self, v: Var, next: F) -> BTreeSet<Var>
    where
        F: Fn(&'a CausalGraph, Var) -> Option<&'a BTreeSet<Var>>,
    {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &w in next(self, u).into_iter().flatten() {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.remove(&v);
        seen
    }

    /// `{v} ∪ Anc(v)`: the variable set of v's subproblem.
    pub fn closure(&self, v: Var) -> BTreeSet<Var> {
        let mut s = self.ancestors(v);
        s.insert(v);
        s
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Nodes in an order where every edge points forward; ties broken by
    /// ascending identifier for determinism.
    pub fn topological_order(&self) -> Result<Vec<Var>, GraphError> {
        let mut indeg: BTreeMap<Var, usize> = self.nodes.iter().map(|&v| (v, 0)).collect();
        for (_, v) in self.edges() {
            *indeg.get_mut(&v).unwrap() += 1;
        }
        let mut ready: BTreeSet<Var> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for w in self.successors(v) {
                let d = indeg.get_mut(&w).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(w);
                }
            }
        }
        if order.len() == self.nodes.len() {
            Ok(order)
        } else {
            Err(GraphError::Cyclic)
        }
    }

    /// Unique minimal edge set with the same transitive closure. DFS-based
    /// reachability elimination; fine at desk scale.
    pub fn transitive_reduction(&self) -> Result<CausalGraph, GraphError> {
        if !self.is_acyclic() {
            return Err(GraphError::Cyclic);
        }
        let desc: BTreeMap<Var, BTreeSet<Var>> = self
            .nodes
            .iter()
            .map(|&v| (v, self.descendants(v)))
            .collect();
        let mut reduced = CausalGraph::new(self.kind, self.nodes.clone());
        for (u, v) in self.edges() {
            let redundant = self
                .successors(u)
                .any(|w| w != v && desc[&w].contains(&v));
            if !redundant {
                reduced.add_edge(u, v);
            }
        }
        Ok(reduced)
    }

    /// Inverted tree: every outdegree ≤ 1 with a unique outdegree-0 root.
    pub fn is_inverted_tree(&self) -> bool {
        self.is_acyclic()
            && self.nodes.iter().all(|&v| self.outdegree(v) <= 1)
            && self.nodes.iter().filter(|&&v| self.outdegree(v) == 0).count() == 1
    }

    /// The unique outdegree-0 node, when there is exactly one.
    pub fn root(&self) -> Option<Var> {
        let mut roots = self.nodes.iter().filter(|&&v| self.outdegree(v) == 0);
        let r = roots.next().copied();
        if roots.next().is_some() {
            None
        } else {
            r
        }
    }
}

fn graph_nodes(problem: &PlanningProblem) -> BTreeSet<Var> {
    problem.schema.var_set()
}

/// Conventional causal graph: edge (w, v) iff w ≠ v and some action has w in
/// its pre- or post-condition and v in its post-condition.
pub fn causal_graph(problem: &PlanningProblem) -> CausalGraph {
    causal_graph_over(problem, &graph_nodes(problem))
}

pub fn causal_graph_over(problem: &PlanningProblem, nodes: &BTreeSet<Var>) -> CausalGraph {
    let mut g = CausalGraph::new(GraphKind::Conventional, nodes.clone());
    for a in &problem.actions {
        for v in a.post.scope() {
            if !nodes.contains(&v) {
                continue;
            }
            for w in a.pre.scope().chain(a.post.scope()) {
                if w != v && nodes.contains(&w) {
                    g.add_edge(w, v);
                }
            }
        }
    }
    g
}

/// Relaxed causal graph per the three-clause definition: pre-only edges are
/// kept, and for a shared post-condition {w, v} the edge (w, v) is present
/// when w can change without v, or when v can never change without w.
pub fn relaxed_causal_graph(problem: &PlanningProblem) -> CausalGraph {
    relaxed_causal_graph_over(problem, &graph_nodes(problem))
}

pub fn relaxed_causal_graph_over(problem: &PlanningProblem, nodes: &BTreeSet<Var>) -> CausalGraph {
    let mut g = CausalGraph::new(GraphKind::Relaxed, nodes.clone());
    let acts = &problem.actions;
    for a in acts {
        for v in a.post.scope() {
            if !nodes.contains(&v) {
                continue;
            }
            // clause 1: w in pre(a) but not in post(a)
            for w in a.pre.scope() {
                if w != v && !a.post.contains_var(w) && nodes.contains(&w) {
                    g.add_edge(w, v);
                }
            }
            // clause 2: w and v share a post-condition
            for w in a.post.scope() {
                if w == v || !nodes.contains(&w) {
                    continue;
                }
                let clause_2a = acts
                    .iter()
                    .any(|a2| a2.post.contains_var(w) && !a2.post.contains_var(v));
                let clause_2b = !acts
                    .iter()
                    .any(|a2| !a2.post.contains_var(w) && a2.post.contains_var(v));
                if clause_2a || clause_2b {
                    g.add_edge(w, v);
                }
            }
        }
    }
    g
}

pub fn build_graph(problem: &PlanningProblem, kind: GraphKind) -> CausalGraph {
    match kind {
        GraphKind::Conventional => causal_graph(problem),
        GraphKind::Relaxed => relaxed_causal_graph(problem),
    }
}

fn build_graph_over(
    problem: &PlanningProblem,
    kind: GraphKind,
    nodes: &BTreeSet<Var>,
) -> CausalGraph {
    match kind {
        GraphKind::Conventional => causal_graph_over(problem, nodes),
        GraphKind::Relaxed => relaxed_causal_graph_over(problem, nodes),
    }
}

/// One independently solvable piece of a normalized problem, augmented with
/// the dummy root v* and dummy action a* = ⟨goal; v* = 1⟩.
#[derive(Clone, Debug)]
pub struct NormalizedComponent {
    /// Component variables including v*.
    pub vars: BTreeSet<Var>,
    pub problem: PlanningProblem,
    pub graph: CausalGraph,
    pub reduction: CausalGraph,
    pub vstar: Var,
    pub astar: ActionId,
}

/// Iteratively deletes sink variables outside the goal scope, splits the rest
/// into weakly connected components, and augments each with a component-local
/// v* and a*. Action identifiers of the original problem are preserved.
pub fn normalize(
    problem: &PlanningProblem,
    kind: GraphKind,
) -> Result<Vec<NormalizedComponent>, GraphError> {
    let g = build_graph(problem, kind);
    if !g.is_acyclic() {
        return Err(GraphError::Cyclic);
    }
    let goal_vars = problem.goal.scope_set();
    let mut active = problem.schema.var_set();
    loop {
        let g = build_graph_over(problem, kind, &active);
        // ascending identifier order keeps elimination deterministic
        let victim = active
            .iter()
            .find(|&&v| g.outdegree(v) == 0 && !goal_vars.contains(&v))
            .copied();
        match victim {
            Some(v) => {
                active.remove(&v);
            }
            None => break,
        }
    }

    // weakly connected components of the surviving graph
    let g = build_graph_over(problem, kind, &active);
    let mut undirected: BTreeMap<Var, BTreeSet<Var>> = BTreeMap::new();
    for (u, v) in g.edges() {
        undirected.entry(u).or_default().insert(v);
        undirected.entry(v).or_default().insert(u);
    }
    let mut unassigned = active.clone();
    let mut components: Vec<BTreeSet<Var>> = Vec::new();
    while let Some(&start) = unassigned.iter().next() {
        let mut comp = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            if !comp.insert(u) {
                continue;
            }
            unassigned.remove(&u);
            for &w in undirected.get(&u).into_iter().flatten() {
                if !comp.contains(&w) {
                    stack.push(w);
                }
            }
        }
        components.push(comp);
    }

    let mut out = Vec::new();
    for comp in components {
        let goal_c = problem.goal.restrict(&comp);
        if goal_c.is_empty() {
            continue;
        }
        let mut schema = problem.schema.clone();
        let vstar = schema.add_var("v*", vec!["0".into(), "1".into()]);
        let mut actions: Vec<Action> = problem.actions.clone();
        // actions changing deleted variables are inert: their post-condition
        // scope lies outside the component, so planners never select them
        let astar = ActionId(actions.len());
        actions.push(Action {
            name: "a*".into(),
            pre: goal_c.clone(),
            post: PartialState::singleton(vstar, Val(1)),
            dummy: true,
        });
        let init = problem.init.compose(&PartialState::singleton(vstar, Val(0)));
        let sub = PlanningProblem {
            schema,
            init,
            goal: goal_c,
            actions,
        };
        let mut nodes = comp.clone();
        nodes.insert(vstar);
        let graph = build_graph_over(&sub, kind, &nodes);
        let reduction = graph.transitive_reduction()?;
        out.push(NormalizedComponent {
            vars: nodes,
            problem: sub,
            graph,
            reduction,
            vstar,
            astar,
        });
    }
    Ok(out)
}

/// A whole problem augmented with v* and a*, without sink elimination or
/// component splitting. Used by the acyclic planner, whose dummy root may
/// have several parents.
#[derive(Clone, Debug)]
pub struct Augmented {
    pub problem: PlanningProblem,
    pub graph: CausalGraph,
    /// Reduction of the augmented graph; restricted to the original
    /// variables it equals the reduction of the original graph, since v*
    /// has no outgoing edges.
    pub reduction: CausalGraph,
    pub vstar: Var,
    pub astar: ActionId,
}

pub fn augment(problem: &PlanningProblem, kind: GraphKind) -> Result<Augmented, GraphError> {
    let mut schema = problem.schema.clone();
    let vstar = schema.add_var("v*", vec!["0".into(), "1".into()]);
    let mut actions = problem.actions.clone();
    let astar = ActionId(actions.len());
    actions.push(Action {
        name: "a*".into(),
        pre: problem.goal.clone(),
        post: PartialState::singleton(vstar, Val(1)),
        dummy: true,
    });
    let init = problem.init.compose(&PartialState::singleton(vstar, Val(0)));
    let sub = PlanningProblem {
        schema,
        init,
        goal: problem.goal.clone(),
        actions,
    };
    let graph = build_graph(&sub, kind);
    let reduction = graph.transitive_reduction()?;
    Ok(Augmented {
        problem: sub,
        graph,
        reduction,
        vstar,
        astar,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::No, _) | (_, Verdict::No) => Verdict::No,
            (Verdict::Unknown, _) | (_, Verdict::Unknown) => Verdict::Unknown,
            _ => Verdict::Yes,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Yes => write!(f, "Yes"),
            Verdict::No => write!(f, "No"),
            Verdict::Unknown => write!(f, "Unknown"),
        }
    }
}

/// Default cap on projected states explored by a reversibility check.
pub const DEFAULT_REVERSIBILITY_BUDGET: u64 = 1_000_000;

/// Explicit search over the states of `V_v = {v} ∪ Anc(v)` (in the given
/// graph kind) under the actions whose post-conditions stay inside `V_v`.
/// Yes iff every reachable projected state can reach the projected initial
/// state back; Unknown once the reachable count exceeds `budget`.
pub fn is_reversible(problem: &PlanningProblem, v: Var, kind: GraphKind, budget: u64) -> Verdict {
    let g = build_graph(problem, kind);
    is_reversible_in(problem, v, &g, budget)
}

pub fn is_reversible_in(
    problem: &PlanningProblem,
    v: Var,
    graph: &CausalGraph,
    budget: u64,
) -> Verdict {
    let scope = graph.closure(v);
    let acts: Vec<&Action> = problem
        .actions
        .iter()
        .filter(|a| !a.dummy && a.post.scope().all(|w| scope.contains(&w)))
        .collect();
    let start = problem.init.restrict(&scope);

    let mut index: HashMap<PartialState, usize> = HashMap::new();
    let mut states: Vec<PartialState> = vec![start.clone()];
    index.insert(start, 0);
    let mut edges_rev: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = VecDeque::from([0usize]);
    while let Some(i) = frontier.pop_front() {
        let s = states[i].clone();
        for a in &acts {
            if !s.matches(&a.pre) {
                continue;
            }
            let t = s.compose(&a.post);
            let j = match index.get(&t) {
                Some(&j) => j,
                None => {
                    if states.len() as u64 >= budget {
                        return Verdict::Unknown;
                    }
                    let j = states.len();
                    states.push(t.clone());
                    index.insert(t, j);
                    edges_rev.push(Vec::new());
                    frontier.push_back(j);
                    j
                }
            };
            edges_rev[j].push(i);
        }
    }

    // backward reachability to the projected initial state
    let mut can_return = vec![false; states.len()];
    can_return[0] = true;
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        for &p in &edges_rev[i] {
            if !can_return[p] {
                can_return[p] = true;
                stack.push(p);
            }
        }
    }
    if can_return.iter().all(|&b| b) {
        Verdict::Yes
    } else {
        Verdict::No
    }
}

/// The joint-search variable set W of the reversible solver: variables of
/// `V_v` appearing in the post-condition of an action that also changes v or
/// one of its descendants.
pub fn w_set(problem: &PlanningProblem, graph: &CausalGraph, v: Var) -> BTreeSet<Var> {
    let scope = graph.closure(v);
    let mut desc_and_v = graph.descendants(v);
    desc_and_v.insert(v);
    let mut w = BTreeSet::new();
    for a in &problem.actions {
        if a.dummy {
            continue;
        }
        if a.post.scope().any(|u| desc_and_v.contains(&u)) {
            for u in a.post.scope() {
                if scope.contains(&u) {
                    w.insert(u);
                }
            }
        }
    }
    w
}

/// Inverted tree reducibility: the chosen causal graph is acyclic and every
/// normalized component's reduction is an inverted tree.
pub fn is_inverted_tree_reducible(problem: &PlanningProblem, kind: GraphKind) -> bool {
    match normalize(problem, kind) {
        Ok(components) => components.iter().all(|c| c.reduction.is_inverted_tree()),
        Err(GraphError::Cyclic) => false,
    }
}

/// Class membership and instrumentation parameters for one problem.
#[derive(Clone, Debug)]
pub struct ClassReport {
    pub ir: Verdict,
    pub rir: Verdict,
    pub ar: BTreeMap<GraphKind, Verdict>,
    pub aor: BTreeMap<GraphKind, Verdict>,
    /// Per-variable reversibility, per graph kind (acyclic kinds only).
    pub reversibility: BTreeMap<GraphKind, BTreeMap<Var, Verdict>>,
    /// Max domain size 𝒟.
    pub max_domain: usize,
    /// Max |W| per acyclic graph kind.
    pub max_w: BTreeMap<GraphKind, usize>,
}

impl ClassReport {
    pub fn ar_overall(&self) -> Verdict {
        Self::overall(&self.ar)
    }

    pub fn aor_overall(&self) -> Verdict {
        Self::overall(&self.aor)
    }

    fn overall(per_kind: &BTreeMap<GraphKind, Verdict>) -> Verdict {
        if per_kind.values().any(|&v| v == Verdict::Yes) {
            Verdict::Yes
        } else if per_kind.values().any(|&v| v == Verdict::Unknown) {
            Verdict::Unknown
        } else {
            Verdict::No
        }
    }

    pub fn verdict_for(&self, class: &str) -> Verdict {
        match class {
            "ir" => self.ir,
            "rir" => self.rir,
            "ar" => self.ar_overall(),
            "aor" => self.aor_overall(),
            _ => Verdict::Unknown,
        }
    }
}

pub fn classify(problem: &PlanningProblem, budget: u64) -> ClassReport {
    let ir = if is_inverted_tree_reducible(problem, GraphKind::Conventional) {
        Verdict::Yes
    } else {
        Verdict::No
    };
    let rir = if is_inverted_tree_reducible(problem, GraphKind::Relaxed) {
        Verdict::Yes
    } else {
        Verdict::No
    };

    let mut ar = BTreeMap::new();
    let mut aor = BTreeMap::new();
    let mut reversibility = BTreeMap::new();
    let mut max_w = BTreeMap::new();
    for kind in [GraphKind::Conventional, GraphKind::Relaxed] {
        let g = build_graph(problem, kind);
        if !g.is_acyclic() {
            ar.insert(kind, Verdict::No);
            aor.insert(kind, Verdict::No);
            continue;
        }
        let verdicts: BTreeMap<Var, Verdict> = problem
            .schema
            .vars()
            .map(|v| (v, is_reversible_in(problem, v, &g, budget)))
            .collect();
        let ar_verdict = verdicts
            .values()
            .fold(Verdict::Yes, |acc, &v| acc.and(v));
        // AOR needs reversibility only where the reduction has outdegree > 1
        let reduction = g.transitive_reduction().expect("acyclic");
        let aor_verdict = verdicts
            .iter()
            .filter(|(&v, _)| reduction.outdegree(v) > 1)
            .fold(Verdict::Yes, |acc, (_, &v)| acc.and(v));
        max_w.insert(
            kind,
            problem
                .schema
                .vars()
                .map(|v| w_set(problem, &g, v).len())
                .max()
                .unwrap_or(0),
        );
        ar.insert(kind, ar_verdict);
        aor.insert(kind, aor_verdict);
        reversibility.insert(kind, verdicts);
    }

    let max_domain = problem
        .schema
        .vars()
        .map(|v| problem.schema.domain_size(v))
        .max()
        .unwrap_or(0);

    ClassReport {
        ir,
        rir,
        ar,
        aor,
        reversibility,
        max_domain,
        max_w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Schema;

    fn ps(pairs: &[(u32, u32)]) -> PartialState {
        PartialState::from_pairs(pairs.iter().map(|&(v, d)| (Var(v), Val(d))))
    }

    /// The five-variable diamond: v1..v4 feed v5, with v3/v4 covering v1/v2.
    fn fig1_graph() -> CausalGraph {
        let nodes: BTreeSet<Var> = (0..5).map(Var).collect();
        let mut g = CausalGraph::new(GraphKind::Conventional, nodes);
        // v1 -> v3, v2 -> v3, v2 -> v4, and all of v1..v4 -> v5
        g.add_edge(Var(0), Var(2));
        g.add_edge(Var(1), Var(2));
        g.add_edge(Var(1), Var(3));
        g.add_edge(Var(0), Var(4));
        g.add_edge(Var(1), Var(4));
        g.add_edge(Var(2), Var(4));
        g.add_edge(Var(3), Var(4));
        g
    }

    #[test]
    fn reduction_keeps_only_covering_edges() {
        let g = fig1_graph();
        let r = g.transitive_reduction().unwrap();
        assert_eq!(r.parents(Var(4)), BTreeSet::from([Var(2), Var(3)]));
        // ancestors and descendants are preserved
        for v in g.nodes().iter().copied() {
            assert_eq!(g.ancestors(v), r.ancestors(v));
            assert_eq!(g.descendants(v), r.descendants(v));
        }
    }

    #[test]
    fn reduction_of_chain_is_fixed_point() {
        let nodes: BTreeSet<Var> = (0..4).map(Var).collect();
        let mut g = CausalGraph::new(GraphKind::Conventional, nodes);
        for i in 0..3 {
            g.add_edge(Var(i), Var(i + 1));
        }
        let r = g.transitive_reduction().unwrap();
        assert_eq!(r, g);
        assert!(r.is_inverted_tree());
    }

    #[test]
    fn cyclic_graph_is_rejected() {
        let nodes: BTreeSet<Var> = (0..2).map(Var).collect();
        let mut g = CausalGraph::new(GraphKind::Conventional, nodes);
        g.add_edge(Var(0), Var(1));
        g.add_edge(Var(1), Var(0));
        assert_eq!(g.transitive_reduction().unwrap_err(), GraphError::Cyclic);
        assert!(!g.is_acyclic());
    }

    fn two_chain_problem() -> PlanningProblem {
        // two independent two-variable chains with goals on both roots
        let schema = Schema::new(
            (0..4)
                .map(|i| (format!("v{i}"), vec!["0".into(), "1".into()]))
                .collect(),
        )
        .unwrap();
        let acts = vec![
            Action::new("a0", ps(&[(0, 0)]), ps(&[(0, 1)])),
            Action::new("a1", ps(&[(0, 1), (1, 0)]), ps(&[(1, 1)])),
            Action::new("b0", ps(&[(2, 0)]), ps(&[(2, 1)])),
            Action::new("b1", ps(&[(2, 1), (3, 0)]), ps(&[(3, 1)])),
        ];
        PlanningProblem {
            schema,
            init: ps(&[(0, 0), (1, 0), (2, 0), (3, 0)]),
            goal: ps(&[(1, 1), (3, 1)]),
            actions: acts,
        }
    }

    #[test]
    fn normalize_splits_independent_chains() {
        let p = two_chain_problem();
        let comps = normalize(&p, GraphKind::Conventional).unwrap();
        assert_eq!(comps.len(), 2);
        for c in &comps {
            assert!(c.reduction.is_inverted_tree());
            assert_eq!(c.reduction.root(), Some(c.vstar));
            assert!(c.problem.actions[c.astar.0].dummy);
        }
    }

    #[test]
    fn normalize_without_elimination_only_adds_vstar() {
        // goal on the unique root: nothing gets deleted
        let p = {
            let mut p = two_chain_problem();
            p.goal = ps(&[(1, 1)]);
            p
        };
        let comps = normalize(&p, GraphKind::Conventional).unwrap();
        // second chain has no goal and is dropped entirely
        assert_eq!(comps.len(), 1);
        let c = &comps[0];
        assert_eq!(
            c.vars,
            BTreeSet::from([Var(0), Var(1), c.vstar])
        );
        assert!(c.graph.has_edge(Var(1), c.vstar));
    }

    #[test]
    fn sink_elimination_restricts_to_goal_support() {
        // chain v0 -> v1 -> v2 with goal on v1: v2 is a non-goal sink
        let schema = Schema::new(
            (0..3)
                .map(|i| (format!("v{i}"), vec!["0".into(), "1".into()]))
                .collect(),
        )
        .unwrap();
        let p = PlanningProblem {
            schema,
            init: ps(&[(0, 0), (1, 0), (2, 0)]),
            goal: ps(&[(1, 1)]),
            actions: vec![
                Action::new("a0", ps(&[(0, 0)]), ps(&[(0, 1)])),
                Action::new("a1", ps(&[(0, 1), (1, 0)]), ps(&[(1, 1)])),
                Action::new("a2", ps(&[(1, 1), (2, 0)]), ps(&[(2, 1)])),
            ],
        };
        let comps = normalize(&p, GraphKind::Conventional).unwrap();
        assert_eq!(comps.len(), 1);
        assert!(!comps[0].vars.contains(&Var(2)));
    }

    #[test]
    fn reversibility_of_toggle_and_one_way_vars() {
        let schema = Schema::new(vec![("v0".into(), vec!["0".into(), "1".into()])]).unwrap();
        let base = PlanningProblem {
            schema,
            init: ps(&[(0, 0)]),
            goal: ps(&[(0, 1)]),
            actions: vec![Action::new("up", ps(&[(0, 0)]), ps(&[(0, 1)]))],
        };
        assert_eq!(
            is_reversible(&base, Var(0), GraphKind::Conventional, 1000),
            Verdict::No
        );
        let mut both = base.clone();
        both.actions
            .push(Action::new("down", ps(&[(0, 1)]), ps(&[(0, 0)])));
        assert_eq!(
            is_reversible(&both, Var(0), GraphKind::Conventional, 1000),
            Verdict::Yes
        );
        assert_eq!(
            is_reversible(&both, Var(0), GraphKind::Conventional, 1),
            Verdict::Unknown
        );
    }
}
