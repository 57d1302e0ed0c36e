//! Explicit-state breadth-first search used as an independent reference for
//! plan lengths and solvability. Depends only on the model layer; it shares
//! no search or macro machinery with the planners.

use std::collections::{HashMap, VecDeque};

use crate::model::{ActionId, PartialState, PlanningProblem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    /// Shortest plan length together with one witness action sequence.
    Solved {
        length: u64,
        witness: Vec<ActionId>,
    },
    /// Entire reachable state space explored without hitting the goal.
    Unsolvable,
    /// More than `cap` states reachable; no verdict.
    CapExceeded,
}

impl OracleResult {
    pub fn length(&self) -> Option<u64> {
        match self {
            OracleResult::Solved { length, .. } => Some(*length),
            _ => None,
        }
    }
}

/// Uniform-cost breadth-first search from the initial state. All actions cost
/// one, so BFS depth is the optimal plan length.
pub fn solve(problem: &PlanningProblem, cap: u64) -> OracleResult {
    let acts: Vec<(ActionId, &crate::model::Action)> = problem
        .actions
        .iter()
        .enumerate()
        .map(|(i, a)| (ActionId(i), a))
        .collect();

    if problem.init.matches(&problem.goal) {
        return OracleResult::Solved {
            length: 0,
            witness: Vec::new(),
        };
    }

    // parent pointers: state index -> (predecessor index, action)
    let mut states: Vec<PartialState> = vec![problem.init.clone()];
    let mut index: HashMap<PartialState, usize> = HashMap::new();
    index.insert(problem.init.clone(), 0);
    let mut parent: Vec<Option<(usize, ActionId)>> = vec![None];
    let mut depth: Vec<u64> = vec![0];
    let mut queue = VecDeque::from([0usize]);

    while let Some(i) = queue.pop_front() {
        let s = states[i].clone();
        for &(id, a) in &acts {
            if !s.matches(&a.pre) {
                continue;
            }
            let t = s.compose(&a.post);
            if index.contains_key(&t) {
                continue;
            }
            if states.len() as u64 >= cap {
                return OracleResult::CapExceeded;
            }
            let j = states.len();
            index.insert(t.clone(), j);
            parent.push(Some((i, id)));
            depth.push(depth[i] + 1);
            if t.matches(&problem.goal) {
                let mut witness = Vec::new();
                let mut cur = j;
                while let Some((p, id)) = parent[cur] {
                    witness.push(id);
                    cur = p;
                }
                witness.reverse();
                return OracleResult::Solved {
                    length: depth[j],
                    witness,
                };
            }
            states.push(t);
            queue.push_back(j);
        }
    }
    OracleResult::Unsolvable
}
