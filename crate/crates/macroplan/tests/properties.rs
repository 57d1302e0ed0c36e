//! Randomized invariants: state-algebra laws, causal-graph reductions,
//! class-membership implications, and planner self-consistency. The full
//! high-volume runs live in the acceptance suite; these proptest versions
//! shrink counterexamples.

use std::collections::BTreeSet;

use proptest::prelude::*;

use macroplan::arena::validate;
use macroplan::domains::{DomainSpec, RandomIrMode};
use macroplan::graph::{
    build_graph, is_inverted_tree_reducible, is_reversible, CausalGraph, GraphKind, Verdict,
};
use macroplan::model::{Action, PartialState, PlanningProblem, Schema, Val, Var};
use macroplan::oracle::{self, OracleResult};
use macroplan::planner::{plan, Options, PlanError, PlannerChoice};

const NV: u32 = 4;
const DOM: u32 = 3;

fn state(max_len: usize) -> impl Strategy<Value = PartialState> {
    prop::collection::btree_map(0..NV, 0..DOM, 0..=max_len)
        .prop_map(|m| PartialState::from_pairs(m.into_iter().map(|(v, d)| (Var(v), Val(d)))))
}

fn schema() -> Schema {
    Schema::new(
        (0..NV)
            .map(|i| {
                (
                    format!("v{i}"),
                    (0..DOM).map(|d| format!("d{d}")).collect(),
                )
            })
            .collect(),
    )
    .expect("fixed schema")
}

fn problem() -> impl Strategy<Value = PlanningProblem> {
    let action = (state(2), prop::collection::btree_map(0..NV, 0..DOM, 1..=2)).prop_map(
        |(pre, post)| {
            let post =
                PartialState::from_pairs(post.into_iter().map(|(v, d)| (Var(v), Val(d))));
            (pre, post)
        },
    );
    (
        prop::collection::vec(action, 1..=8),
        prop::collection::vec(0..DOM, NV as usize),
        prop::collection::btree_map(0..NV, 0..DOM, 1..=2),
    )
        .prop_map(|(actions, init, goal)| PlanningProblem {
            schema: schema(),
            init: PartialState::from_pairs(
                init.into_iter()
                    .enumerate()
                    .map(|(i, d)| (Var(i as u32), Val(d))),
            ),
            goal: PartialState::from_pairs(goal.into_iter().map(|(v, d)| (Var(v), Val(d)))),
            actions: actions
                .into_iter()
                .enumerate()
                .map(|(i, (pre, post))| Action::new(format!("a{i}"), pre, post))
                .collect(),
        })
}

fn random_ir_spec() -> impl Strategy<Value = DomainSpec> {
    (
        any::<u64>(),
        1u32..=3,
        1u32..=2,
        2u32..=3,
        0.0f64..=1.0,
        prop_oneof![
            Just(RandomIrMode::Free),
            Just(RandomIrMode::FullPre),
            Just(RandomIrMode::Shared),
        ],
    )
        .prop_map(|(seed, depth, branch, max_domain, density, mode)| DomainSpec::RandomIr {
            seed,
            depth,
            branch,
            max_domain,
            density,
            mode,
        })
}

/// Problems whose conventional causal graph is acyclic by construction:
/// every action is unary and its precondition only mentions the affected
/// variable and lower-numbered ones.
fn layered_problem() -> impl Strategy<Value = PlanningProblem> {
    let action = (0..NV).prop_flat_map(|t| {
        (
            Just(t),
            prop::collection::btree_map(0..=t, 0..DOM, 0..=2),
            0..DOM,
        )
    });
    (
        prop::collection::vec(action, 1..=8),
        prop::collection::vec(0..DOM, NV as usize),
    )
        .prop_map(|(actions, init)| PlanningProblem {
            schema: schema(),
            init: PartialState::from_pairs(
                init.into_iter()
                    .enumerate()
                    .map(|(i, d)| (Var(i as u32), Val(d))),
            ),
            goal: PartialState::singleton(Var(0), Val(0)),
            actions: actions
                .into_iter()
                .enumerate()
                .map(|(i, (t, pre, val))| {
                    Action::new(
                        format!("a{i}"),
                        PartialState::from_pairs(
                            pre.into_iter().map(|(v, d)| (Var(v), Val(d))),
                        ),
                        PartialState::singleton(Var(t), Val(val)),
                    )
                })
                .collect(),
        })
}

/// Edges only from smaller to larger identifiers, so acyclic by construction.
fn dag() -> impl Strategy<Value = CausalGraph> {
    prop::collection::btree_set((0u32..6, 0u32..6), 0..=12).prop_map(|pairs| {
        let mut g = CausalGraph::new(GraphKind::Conventional, (0..6).map(Var).collect());
        for (a, b) in pairs {
            if a < b {
                g.add_edge(Var(a), Var(b));
            }
        }
        g
    })
}

proptest! {
    #[test]
    fn compose_is_associative_with_identity(s in state(4), t in state(4), u in state(4)) {
        prop_assert_eq!(s.compose(&t).compose(&u), s.compose(&t.compose(&u)));
        prop_assert_eq!(PartialState::empty().compose(&s), s.clone());
        prop_assert_eq!(s.compose(&PartialState::empty()), s.clone());
        prop_assert_eq!(s.compose(&s), s);
    }

    #[test]
    fn compose_is_right_biased_over_the_scope_union(s in state(4), t in state(4)) {
        let c = s.compose(&t);
        let scope: BTreeSet<Var> = s.scope().chain(t.scope()).collect();
        prop_assert_eq!(c.scope_set(), scope.clone());
        for v in scope {
            prop_assert_eq!(c.get(v), t.get(v).or(s.get(v)));
        }
    }

    #[test]
    fn restrict_distributes_over_compose(s in state(4), t in state(4), w in state(4)) {
        let w = w.scope_set();
        prop_assert_eq!(
            s.compose(&t).restrict(&w),
            s.restrict(&w).compose(&t.restrict(&w))
        );
    }

    #[test]
    fn matches_is_symmetric_and_respects_compose(s in state(4), t in state(4)) {
        prop_assert_eq!(s.matches(&t), t.matches(&s));
        prop_assert!(s.matches(&s));
        if s.matches(&t) {
            // on agreeing states, composition is union in both orders
            prop_assert_eq!(s.compose(&t), t.compose(&s));
        }
        // a composed state always matches its right operand
        prop_assert!(s.compose(&t).matches(&t));
    }

    #[test]
    fn transitive_reduction_is_idempotent_and_preserves_reachability(g in dag()) {
        let r = g.transitive_reduction().expect("acyclic by construction");
        let rr = r.transitive_reduction().expect("still acyclic");
        prop_assert_eq!(&r, &rr);
        for &v in g.nodes() {
            prop_assert_eq!(g.ancestors(v), r.ancestors(v));
            prop_assert_eq!(g.descendants(v), r.descendants(v));
        }
        // reduction only removes edges
        for (a, b) in r.edges() {
            prop_assert!(g.has_edge(a, b));
        }
    }

    #[test]
    fn relaxed_graph_is_a_subgraph_of_the_conventional_graph(p in problem()) {
        let conv = build_graph(&p, GraphKind::Conventional);
        let relaxed = build_graph(&p, GraphKind::Relaxed);
        for (a, b) in relaxed.edges() {
            prop_assert!(conv.has_edge(a, b), "extra relaxed edge ({a:?}, {b:?})");
        }
    }

    #[test]
    fn reversible_variables_have_reversible_predecessors(p in layered_problem()) {
        let g = build_graph(&p, GraphKind::Conventional);
        prop_assert!(g.is_acyclic());
        for (w, v) in g.edges() {
            if is_reversible(&p, v, GraphKind::Conventional, 100_000) == Verdict::Yes {
                prop_assert_ne!(
                    is_reversible(&p, w, GraphKind::Conventional, 100_000),
                    Verdict::No,
                    "{:?} reversible but its predecessor {:?} is not",
                    v,
                    w
                );
            }
        }
    }

    #[test]
    fn random_ir_instances_are_ir_and_therefore_rir(spec in random_ir_spec()) {
        let p = spec.generate().expect("valid spec");
        prop_assert!(is_inverted_tree_reducible(&p, GraphKind::Conventional));
        prop_assert!(is_inverted_tree_reducible(&p, GraphKind::Relaxed));
    }

    #[test]
    fn planner_macros_are_well_defined_and_pruning_preserves_length(
        spec in random_ir_spec()
    ) {
        let p = spec.generate().expect("valid spec");
        let plain = plan(&p, PlannerChoice::Ir, &Options::default());
        let pruned = plan(
            &p,
            PlannerChoice::Ir,
            &Options { pruning: true, ..Options::default() },
        );
        match (plain, pruned) {
            (Ok(a), Ok(b)) => {
                for id in a.arena.macro_ids() {
                    let m = a.arena.get(id).unwrap();
                    prop_assert!(a.arena.macro_well_defined(m).unwrap());
                }
                prop_assert_eq!(
                    a.metrics.expanded_length,
                    b.metrics.expanded_length
                );
                let v = validate(&a.arena, &a.plan, &p, 100_000).unwrap();
                prop_assert!(v.is_valid());
            }
            (Err(PlanError::NoPlan), Err(PlanError::NoPlan)) => {}
            (a, b) => prop_assert!(
                false,
                "pruning changed the outcome: {:?} vs {:?}",
                a.map(|r| r.metrics.expanded_length),
                b.map(|r| r.metrics.expanded_length)
            ),
        }
    }

    #[test]
    fn planner_length_agrees_with_the_oracle_on_random_ir(seed in any::<u64>()) {
        let spec = DomainSpec::RandomIr {
            seed,
            depth: 2,
            branch: 2,
            max_domain: 3,
            density: 0.5,
            mode: RandomIrMode::Free,
        };
        let p = spec.generate().expect("valid spec");
        let planned = plan(&p, PlannerChoice::Ir, &Options::default());
        match oracle::solve(&p, 100_000) {
            OracleResult::Solved { length, .. } => {
                let r = planned.expect("oracle solved but planner failed");
                prop_assert_eq!(
                    r.metrics.expanded_length,
                    macroplan::arena::PlanLength::from(length)
                );
            }
            OracleResult::Unsolvable => {
                prop_assert!(matches!(planned, Err(PlanError::NoPlan)));
            }
            OracleResult::CapExceeded => {}
        }
    }
}
