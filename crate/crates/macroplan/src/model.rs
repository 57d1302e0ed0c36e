//! Multi-valued planning model: variables, partial states, actions, problems.
//!
//! Partial states form the algebra everything else is built on: `restrict`
//! projects onto a variable set, `matches` checks agreement on the scope
//! intersection, and `compose` merges with the right operand winning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Interned variable identifier. Display names live in the [`Schema`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(pub u32);

/// Interned value identifier, meaningful only relative to a variable's domain.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Val(pub u32);

/// Index of an action in its [`PlanningProblem`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ActionId(pub usize);

/// Index of a macro in a `MacroArena`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MacroId(pub usize);

/// A plan element: either a primitive action or a macro reference.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Step {
    Action(ActionId),
    Macro(MacroId),
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("duplicate value `{1}` in domain of `{0}`")]
    DuplicateValue(String, String),
    #[error("value {1:?} out of domain for variable {0:?}")]
    ValueOutOfDomain(Var, Val),
    #[error("unknown variable {0:?}")]
    UnknownVariable(Var),
    #[error("action `{0}` has an empty post-condition")]
    EmptyPost(String),
    #[error("initial state is not total")]
    InitNotTotal,
    #[error("goal is empty")]
    EmptyGoal,
    #[error("action `{0}` is not applicable in the given state")]
    NotApplicable(String),
}

#[derive(Clone, Debug)]
pub struct VarInfo {
    pub name: String,
    pub values: Vec<String>,
}

/// Variable set and per-variable finite domains.
#[derive(Clone, Debug)]
pub struct Schema {
    vars: Vec<VarInfo>,
}

impl Schema {
    pub fn new(vars: Vec<(String, Vec<String>)>) -> Result<Schema, ModelError> {
        let mut seen = BTreeSet::new();
        for (name, values) in &vars {
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateVariable(name.clone()));
            }
            if values.is_empty() {
                return Err(ModelError::EmptyDomain(name.clone()));
            }
            let mut vals = BTreeSet::new();
            for val in values {
                if !vals.insert(val.clone()) {
                    return Err(ModelError::DuplicateValue(name.clone(), val.clone()));
                }
            }
        }
        Ok(Schema {
            vars: vars
                .into_iter()
                .map(|(name, values)| VarInfo { name, values })
                .collect(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.vars.len() as u32).map(Var)
    }

    pub fn var_set(&self) -> BTreeSet<Var> {
        self.vars().collect()
    }

    pub fn contains(&self, v: Var) -> bool {
        (v.0 as usize) < self.vars.len()
    }

    pub fn name(&self, v: Var) -> &str {
        &self.vars[v.0 as usize].name
    }

    pub fn domain_size(&self, v: Var) -> usize {
        self.vars[v.0 as usize].values.len()
    }

    pub fn value_name(&self, v: Var, val: Val) -> &str {
        &self.vars[v.0 as usize].values[val.0 as usize]
    }

    pub fn domain(&self, v: Var) -> impl Iterator<Item = Val> + '_ {
        (0..self.domain_size(v) as u32).map(Val)
    }

    pub fn lookup_var(&self, name: &str) -> Option<Var> {
        self.vars
            .iter()
            .position(|i| i.name == name)
            .map(|i| Var(i as u32))
    }

    pub fn lookup_val(&self, v: Var, name: &str) -> Option<Val> {
        self.vars[v.0 as usize]
            .values
            .iter()
            .position(|x| x == name)
            .map(|i| Val(i as u32))
    }

    pub fn in_domain(&self, v: Var, val: Val) -> bool {
        self.contains(v) && (val.0 as usize) < self.domain_size(v)
    }

    /// Appends a fresh variable, returning its identifier. Used for the dummy
    /// goal variable introduced by normalization.
    pub fn add_var(&mut self, name: impl Into<String>, values: Vec<String>) -> Var {
        let v = Var(self.vars.len() as u32);
        self.vars.push(VarInfo {
            name: name.into(),
            values,
        });
        v
    }
}

/// An assignment of values to a subset of the variables. A state is a partial
/// state that is total over the schema.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct PartialState(BTreeMap<Var, Val>);

impl PartialState {
    pub fn empty() -> PartialState {
        PartialState(BTreeMap::new())
    }

    pub fn singleton(v: Var, val: Val) -> PartialState {
        PartialState(BTreeMap::from([(v, val)]))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Val)>) -> PartialState {
        PartialState(pairs.into_iter().collect())
    }

    pub fn get(&self, v: Var) -> Option<Val> {
        self.0.get(&v).copied()
    }

    pub fn insert(&mut self, v: Var, val: Val) {
        self.0.insert(v, val);
    }

    pub fn remove(&mut self, v: Var) {
        self.0.remove(&v);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn scope(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.keys().copied()
    }

    pub fn scope_set(&self) -> BTreeSet<Var> {
        self.0.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, Val)> + '_ {
        self.0.iter().map(|(v, d)| (*v, *d))
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.0.contains_key(&v)
    }

    /// `x | W`: restriction of the scope to `V_x` intersected with `W`.
    pub fn restrict(&self, w: &BTreeSet<Var>) -> PartialState {
        PartialState(
            self.0
                .iter()
                .filter(|(v, _)| w.contains(v))
                .map(|(v, d)| (*v, *d))
                .collect(),
        )
    }

    /// `x ~ y`: agreement on every variable in the scope intersection.
    pub fn matches(&self, other: &PartialState) -> bool {
        // iterate over the smaller map
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .iter()
            .all(|(v, d)| large.get(v).map_or(true, |e| e == d))
    }

    /// `x ⊕ y`: union of scopes with the right operand winning conflicts.
    pub fn compose(&self, other: &PartialState) -> PartialState {
        let mut out = self.0.clone();
        for (v, d) in &other.0 {
            out.insert(*v, *d);
        }
        PartialState(out)
    }

    pub fn compose_in_place(&mut self, other: &PartialState) {
        for (v, d) in &other.0 {
            self.0.insert(*v, *d);
        }
    }

    pub fn is_total(&self, schema: &Schema) -> bool {
        self.0.len() == schema.num_vars() && self.scope().all(|v| schema.contains(v))
    }

    pub fn display<'a>(&'a self, schema: &'a Schema) -> DisplayPartialState<'a> {
        DisplayPartialState {
            state: self,
            schema,
        }
    }
}

pub struct DisplayPartialState<'a> {
    state: &'a PartialState,
    schema: &'a Schema,
}

impl fmt::Display for DisplayPartialState<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (v, d)) in self.state.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "{}={}",
                self.schema.name(v),
                self.schema.value_name(v, d)
            )?;
        }
        write!(f, ")")
    }
}

/// A primitive operator `⟨pre; post⟩`.
#[derive(Clone, Debug)]
pub struct Action {
    pub name: String,
    pub pre: PartialState,
    pub post: PartialState,
    /// Set for the dummy action `a* = ⟨goal; v* = 1⟩` added by normalization.
    pub dummy: bool,
}

impl Action {
    pub fn new(name: impl Into<String>, pre: PartialState, post: PartialState) -> Action {
        Action {
            name: name.into(),
            pre,
            post,
            dummy: false,
        }
    }

    pub fn is_unary(&self) -> bool {
        self.post.len() == 1
    }
}

/// `P = ⟨V, init, goal, A⟩`.
#[derive(Clone, Debug)]
pub struct PlanningProblem {
    pub schema: Schema,
    pub init: PartialState,
    pub goal: PartialState,
    pub actions: Vec<Action>,
}

impl PlanningProblem {
    /// Checks init totality, scoping, and domain membership for every
    /// component of the problem.
    pub fn check(&self) -> Result<(), ModelError> {
        if !self.init.is_total(&self.schema) {
            return Err(ModelError::InitNotTotal);
        }
        if self.goal.is_empty() {
            return Err(ModelError::EmptyGoal);
        }
        let check_state = |x: &PartialState| -> Result<(), ModelError> {
            for (v, d) in x.iter() {
                if !self.schema.contains(v) {
                    return Err(ModelError::UnknownVariable(v));
                }
                if !self.schema.in_domain(v, d) {
                    return Err(ModelError::ValueOutOfDomain(v, d));
                }
            }
            Ok(())
        };
        check_state(&self.init)?;
        check_state(&self.goal)?;
        for a in &self.actions {
            if a.post.is_empty() {
                return Err(ModelError::EmptyPost(a.name.clone()));
            }
            check_state(&a.pre)?;
            check_state(&a.post)?;
        }
        Ok(())
    }

    pub fn action(&self, id: ActionId) -> &Action {
        &self.actions[id.0]
    }

    /// Applies `a` in the total state `s`, yielding `s ⊕ post(a)`.
    pub fn apply(&self, s: &PartialState, id: ActionId) -> Result<PartialState, ModelError> {
        let a = self.action(id);
        if !s.matches(&a.pre) {
            return Err(ModelError::NotApplicable(a.name.clone()));
        }
        Ok(s.compose(&a.post))
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len()).map(ActionId)
    }

    pub fn lookup_action(&self, name: &str) -> Option<ActionId> {
        self.actions
            .iter()
            .position(|a| a.name == name)
            .map(ActionId)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema2() -> Schema {
        Schema::new(vec![
            ("v1".into(), vec!["A".into(), "B".into()]),
            ("v2".into(), vec!["A".into(), "B".into()]),
        ])
        .unwrap()
    }

    fn ps(pairs: &[(u32, u32)]) -> PartialState {
        PartialState::from_pairs(pairs.iter().map(|&(v, d)| (Var(v), Val(d))))
    }

    #[test]
    fn restrict_drops_out_of_scope_vars() {
        let x = ps(&[(0, 0), (1, 1)]);
        let w = BTreeSet::from([Var(0)]);
        assert_eq!(x.restrict(&w), ps(&[(0, 0)]));
        assert_eq!(x.restrict(&BTreeSet::new()), PartialState::empty());
    }

    #[test]
    fn matches_on_scope_intersection() {
        assert!(ps(&[(0, 0)]).matches(&ps(&[(1, 1)])));
        assert!(ps(&[(0, 0), (1, 1)]).matches(&ps(&[(1, 1)])));
        assert!(!ps(&[(0, 0)]).matches(&ps(&[(0, 1)])));
    }

    #[test]
    fn compose_right_operand_wins() {
        assert_eq!(ps(&[(0, 0)]).compose(&ps(&[(0, 1)])), ps(&[(0, 1)]));
        let x = ps(&[(0, 0)]);
        assert_eq!(x.compose(&PartialState::empty()), x);
        assert_eq!(
            ps(&[(0, 0)]).compose(&ps(&[(1, 1)])),
            ps(&[(0, 0), (1, 1)])
        );
    }

    #[test]
    fn apply_respects_preconditions() {
        let schema = schema2();
        let a = Action::new("a", ps(&[(0, 0)]), ps(&[(0, 1)]));
        let p = PlanningProblem {
            schema,
            init: ps(&[(0, 0), (1, 0)]),
            goal: ps(&[(0, 1)]),
            actions: vec![a],
        };
        let s1 = p.apply(&p.init.clone(), ActionId(0)).unwrap();
        assert_eq!(s1, ps(&[(0, 1), (1, 0)]));
        assert!(matches!(
            p.apply(&s1, ActionId(0)),
            Err(ModelError::NotApplicable(_))
        ));
    }

    #[test]
    fn schema_rejects_duplicates_and_empty_domains() {
        assert!(Schema::new(vec![
            ("v".into(), vec!["0".into()]),
            ("v".into(), vec!["0".into()])
        ])
        .is_err());
        assert!(Schema::new(vec![("v".into(), vec![])]).is_err());
        assert!(Schema::new(vec![("v".into(), vec!["0".into(), "0".into()])]).is_err());
    }
}
