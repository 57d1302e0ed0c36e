//! Text formats: `.mvp` problem files, `.plan` macro-plan files, DOT export
//! of causal graphs, and benchmark rows.
//!
//! The `.mvp` grammar is line-oriented:
//!
//! ```text
//! # comment
//! var  <name> <value>+
//! init <name>=<value>      (one per variable, all variables required)
//! goal <name>=<value>      (at least one)
//! action <name>
//!   pre  <name>=<value>*
//!   post <name>=<value>+
//! ```
//!
//! Serialization is canonical: `serialize_problem(parse_problem(t))` equals
//! `serialize_problem` of any problem equal to the one `t` denotes.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use thiserror::Error;

use crate::arena::{Macro, MacroArena, PlanLength};
use crate::graph::CausalGraph;
use crate::model::{
    Action, ActionId, MacroId, PartialState, PlanningProblem, Schema, Step, Var,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid problem: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("invalid plan: {0}")]
    Arena(#[from] crate::arena::ArenaError),
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Parse {
        line,
        msg: msg.into(),
    })
}

const RESERVED: &[char] = &['=', '{', '}', '[', ']', '#'];

fn check_name(line: usize, tok: &str) -> Result<(), IoError> {
    if tok.is_empty() || tok.contains(RESERVED) {
        return err(line, format!("invalid name `{tok}`"));
    }
    Ok(())
}

/// Strips comments and returns (1-based line number, significant tokens,
/// indented?) triples.
fn logical_lines(text: &str) -> Vec<(usize, Vec<&str>, bool)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let indented = line.starts_with(' ') || line.starts_with('\t');
        out.push((i + 1, toks, indented));
    }
    out
}

pub fn parse_problem(text: &str) -> Result<PlanningProblem, IoError> {
    let lines = logical_lines(text);

    // first pass: the schema
    let mut vars: Vec<(String, Vec<String>)> = Vec::new();
    for (ln, toks, _) in &lines {
        if toks[0] != "var" {
            continue;
        }
        if toks.len() < 3 {
            return err(*ln, "`var` needs a name and at least one value");
        }
        for t in &toks[1..] {
            check_name(*ln, t)?;
        }
        vars.push((
            toks[1].to_string(),
            toks[2..].iter().map(|s| s.to_string()).collect(),
        ));
    }
    let schema = Schema::new(vars)?;

    let assign = |ln: usize, tok: &str| -> Result<(Var, crate::model::Val), IoError> {
        let (name, val) = tok
            .split_once('=')
            .ok_or(IoError::Parse {
                line: ln,
                msg: format!("expected <name>=<value>, got `{tok}`"),
            })?;
        let v = schema
            .lookup_var(name)
            .ok_or(IoError::Parse {
                line: ln,
                msg: format!("unknown variable `{name}`"),
            })?;
        let d = schema.lookup_val(v, val).ok_or(IoError::Parse {
            line: ln,
            msg: format!("value `{val}` is outside the domain of `{name}`"),
        })?;
        Ok((v, d))
    };
    let state = |ln: usize, toks: &[&str]| -> Result<PartialState, IoError> {
        let mut s = PartialState::empty();
        for t in toks {
            let (v, d) = assign(ln, t)?;
            if s.get(v).is_some() {
                return err(ln, format!("`{}` assigned twice", schema.name(v)));
            }
            s.insert(v, d);
        }
        Ok(s)
    };

    // second pass: init, goal, actions
    let mut init = PartialState::empty();
    let mut goal = PartialState::empty();
    let mut actions: Vec<Action> = Vec::new();
    // (line, name, pre, post) of the action currently being read
    let mut open: Option<(usize, String, Option<PartialState>, Option<PartialState>)> = None;

    let mut close = |open: &mut Option<(usize, String, Option<PartialState>, Option<PartialState>)>|
     -> Result<(), IoError> {
        if let Some((ln, name, pre, post)) = open.take() {
            let post = match post {
                Some(p) if !p.is_empty() => p,
                _ => return err(ln, format!("action `{name}` needs a non-empty `post` line")),
            };
            actions.push(Action::new(name, pre.unwrap_or_default(), post));
        }
        Ok(())
    };

    for (ln, toks, indented) in &lines {
        let (ln, toks) = (*ln, toks.as_slice());
        match toks[0] {
            "pre" | "post" if *indented => {
                let Some((_, name, pre, post)) = open.as_mut() else {
                    return err(ln, format!("`{}` outside an action", toks[0]));
                };
                let slot = if toks[0] == "pre" { pre } else { post };
                if slot.is_some() {
                    return err(ln, format!("duplicate `{}` for action `{name}`", toks[0]));
                }
                *slot = Some(state(ln, &toks[1..])?);
            }
            "var" => close(&mut open)?,
            "init" => {
                close(&mut open)?;
                if toks.len() != 2 {
                    return err(ln, "`init` takes exactly one <name>=<value>");
                }
                let (v, d) = assign(ln, toks[1])?;
                if init.get(v).is_some() {
                    return err(ln, format!("`{}` initialized twice", schema.name(v)));
                }
                init.insert(v, d);
            }
            "goal" => {
                close(&mut open)?;
                if toks.len() != 2 {
                    return err(ln, "`goal` takes exactly one <name>=<value>");
                }
                let (v, d) = assign(ln, toks[1])?;
                if goal.get(v).is_some() {
                    return err(ln, format!("goal for `{}` given twice", schema.name(v)));
                }
                goal.insert(v, d);
            }
            "action" => {
                close(&mut open)?;
                if toks.len() != 2 {
                    return err(ln, "`action` takes exactly one name");
                }
                check_name(ln, toks[1])?;
                open = Some((ln, toks[1].to_string(), None, None));
            }
            other => return err(ln, format!("unknown directive `{other}`")),
        }
    }
    close(&mut open)?;

    for v in schema.vars() {
        if init.get(v).is_none() {
            return err(
                text.lines().count(),
                format!("`init` missing for variable `{}`", schema.name(v)),
            );
        }
    }

    let problem = PlanningProblem {
        schema,
        init,
        goal,
        actions,
    };
    problem.check()?;
    Ok(problem)
}

fn fmt_state(schema: &Schema, s: &PartialState) -> String {
    s.iter()
        .map(|(v, d)| format!("{}={}", schema.name(v), schema.value_name(v, d)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn serialize_problem(problem: &PlanningProblem) -> String {
    let schema = &problem.schema;
    let mut out = String::new();
    for v in schema.vars() {
        write!(out, "var {}", schema.name(v)).unwrap();
        for d in schema.domain(v) {
            write!(out, " {}", schema.value_name(v, d)).unwrap();
        }
        out.push('\n');
    }
    for v in schema.vars() {
        if let Some(d) = problem.init.get(v) {
            writeln!(out, "init {}={}", schema.name(v), schema.value_name(v, d)).unwrap();
        }
    }
    for (v, d) in problem.goal.iter() {
        writeln!(out, "goal {}={}", schema.name(v), schema.value_name(v, d)).unwrap();
    }
    for a in &problem.actions {
        if a.dummy {
            continue;
        }
        writeln!(out, "action {}", a.name).unwrap();
        writeln!(out, "  pre {}", fmt_state(schema, &a.pre)).unwrap();
        writeln!(out, "  post {}", fmt_state(schema, &a.post)).unwrap();
    }
    out
}

/// Writes the plan and every macro reachable from it. Step tokens are `a<N>`
/// for the N-th action of the problem file and `m<N>` for a macro line.
pub fn write_plan(schema: &Schema, arena: &MacroArena, plan: &[Step]) -> String {
    let fmt_step = |s: &Step| match s {
        Step::Action(a) => format!("a{}", a.0),
        Step::Macro(m) => format!("m{}", m.0),
    };
    let mut out = String::new();
    for id in arena.reachable_macros(plan) {
        let m = arena.get(id).expect("reachable macro");
        writeln!(
            out,
            "macro {} owner {} pre{{{}}} post{{{}}} steps[{}]",
            id.0,
            schema.name(m.owner),
            fmt_state(schema, &m.pre),
            fmt_state(schema, &m.post),
            m.steps.iter().map(fmt_step).collect::<Vec<_>>().join(" "),
        )
        .unwrap();
    }
    writeln!(
        out,
        "plan {}",
        plan.iter().map(fmt_step).collect::<Vec<_>>().join(" "),
    )
    .unwrap();
    out
}

/// Reads a plan against its problem. Macros are re-validated on insertion,
/// so a structurally ill-formed plan file is rejected here.
pub fn read_plan(
    text: &str,
    problem: &PlanningProblem,
) -> Result<(MacroArena, Vec<Step>), IoError> {
    let schema = &problem.schema;
    let mut arena = MacroArena::for_problem(problem);
    // file-local macro numbers to arena ids
    let mut ids: HashMap<usize, MacroId> = HashMap::new();

    let step = |ids: &HashMap<usize, MacroId>, ln: usize, tok: &str| -> Result<Step, IoError> {
        let (kind, num) = tok.split_at(1);
        let n: usize = num
            .parse()
            .map_err(|_| IoError::Parse {
                line: ln,
                msg: format!("bad step token `{tok}`"),
            })?;
        match kind {
            "a" if n < problem.actions.len() => Ok(Step::Action(ActionId(n))),
            "a" => err(ln, format!("action index {n} out of range")),
            "m" => ids
                .get(&n)
                .map(|&m| Step::Macro(m))
                .ok_or(IoError::Parse {
                    line: ln,
                    msg: format!("macro {n} used before its definition"),
                }),
            _ => err(ln, format!("bad step token `{tok}`")),
        }
    };
    let state = |ln: usize, body: &str| -> Result<PartialState, IoError> {
        let mut s = PartialState::empty();
        for tok in body.split_whitespace() {
            let (name, val) = tok.split_once('=').ok_or(IoError::Parse {
                line: ln,
                msg: format!("expected <name>=<value>, got `{tok}`"),
            })?;
            let v = schema.lookup_var(name).ok_or(IoError::Parse {
                line: ln,
                msg: format!("unknown variable `{name}`"),
            })?;
            let d = schema.lookup_val(v, val).ok_or(IoError::Parse {
                line: ln,
                msg: format!("value `{val}` is outside the domain of `{name}`"),
            })?;
            s.insert(v, d);
        }
        Ok(s)
    };
    let mut plan: Option<Vec<Step>> = None;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("plan") {
            if plan.is_some() {
                return err(ln, "duplicate `plan` line");
            }
            let mut steps = Vec::new();
            for tok in rest.split_whitespace() {
                steps.push(step(&ids, ln, tok)?);
            }
            plan = Some(steps);
            continue;
        }
        let Some(rest) = line.strip_prefix("macro ") else {
            return err(ln, "expected a `macro` or `plan` line");
        };
        // grammar: macro <n> owner <var> pre{...} post{...} steps[...]
        let (head, steps_part) = rest.split_once("steps[").ok_or(IoError::Parse {
            line: ln,
            msg: "missing `steps[...]`".into(),
        })?;
        let steps_body = steps_part.strip_suffix(']').ok_or(IoError::Parse {
            line: ln,
            msg: "unterminated `steps[`".into(),
        })?;
        // pre{...} and post{...} may contain spaces; cut on the keywords
        let (head, pre_post) = head.split_once("pre{").ok_or(IoError::Parse {
            line: ln,
            msg: "missing `pre{...}`".into(),
        })?;
        let (pre_body, post_part) = pre_post.split_once("post{").ok_or(IoError::Parse {
            line: ln,
            msg: "missing `post{...}`".into(),
        })?;
        let pre_body = pre_body.trim().strip_suffix('}').ok_or(IoError::Parse {
            line: ln,
            msg: "unterminated `pre{`".into(),
        })?;
        let pre = state(ln, pre_body)?;
        let post = state(
            ln,
            post_part.trim().strip_suffix('}').ok_or(IoError::Parse {
                line: ln,
                msg: "unterminated `post{`".into(),
            })?,
        )?;
        let head_toks: Vec<&str> = head.split_whitespace().collect();
        let [num, kw, owner_name] = head_toks.as_slice() else {
            return err(ln, "expected `macro <n> owner <variable>`");
        };
        if *kw != "owner" {
            return err(ln, "expected `owner` after the macro number");
        }
        let n: usize = num.parse().map_err(|_| IoError::Parse {
            line: ln,
            msg: format!("bad macro number `{num}`"),
        })?;
        if ids.contains_key(&n) {
            return err(ln, format!("macro {n} defined twice"));
        }
        let owner = schema.lookup_var(owner_name).ok_or(IoError::Parse {
            line: ln,
            msg: format!("unknown variable `{owner_name}`"),
        })?;
        let mut steps = Vec::new();
        for tok in steps_body.split_whitespace() {
            steps.push(step(&ids, ln, tok)?);
        }
        let id = arena.add_macro(Macro {
            owner,
            pre,
            steps,
            post,
        })?;
        ids.insert(n, id);
    }
    let plan = plan.ok_or(IoError::Parse {
        line: text.lines().count(),
        msg: "missing `plan` line".into(),
    })?;
    Ok((arena, plan))
}

/// One DOT digraph. With `reduced` given, its edges are drawn solid and the
/// edges of `graph` missing from it dashed; otherwise all edges are solid.
pub fn emit_dot(schema: &Schema, graph: &CausalGraph, reduced: Option<&CausalGraph>) -> String {
    let name = |v: Var| -> String {
        if schema.contains(v) {
            schema.name(v).to_string()
        } else {
            // augmentation variables lie outside the original schema
            format!("v{}", v.0)
        }
    };
    let mut out = String::from("digraph causal {\n");
    for &v in graph.nodes() {
        writeln!(out, "  \"{}\";", name(v)).unwrap();
    }
    for (u, v) in graph.edges() {
        let dashed = reduced.is_some_and(|r| !r.has_edge(u, v));
        writeln!(
            out,
            "  \"{}\" -> \"{}\"{};",
            name(u),
            name(v),
            if dashed { " [style=dashed]" } else { "" },
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// One benchmark result line, mirroring the columns of a planner comparison
/// table: instance, time, macro counts, and exact plan length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRow {
    pub instance: String,
    pub millis: u64,
    pub macros_generated: u64,
    pub macros_used: u64,
    pub expanded_length: PlanLength,
    pub planner: String,
    pub verdicts: String,
}

pub const BENCH_HEADER: &str =
    "instance\ttime_ms\tmacros_generated\tmacros_used\texpanded_length\tplanner\tverdicts";

impl BenchRow {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.instance,
            self.millis,
            self.macros_generated,
            self.macros_used,
            self.expanded_length,
            self.planner,
            self.verdicts,
        )
    }

    pub fn parse_tsv(line: &str) -> Result<BenchRow, IoError> {
        let f: Vec<&str> = line.split('\t').collect();
        let [instance, millis, gen, used, len, planner, verdicts] = f.as_slice() else {
            return err(1, "bench row needs 7 tab-separated fields");
        };
        let int = |s: &str| -> Result<u64, IoError> {
            s.parse().map_err(|_| IoError::Parse {
                line: 1,
                msg: format!("bad integer `{s}`"),
            })
        };
        Ok(BenchRow {
            instance: instance.to_string(),
            millis: int(millis)?,
            macros_generated: int(gen)?,
            macros_used: int(used)?,
            expanded_length: len.parse::<BigUint>().map_err(|_| IoError::Parse {
                line: 1,
                msg: format!("bad length `{len}`"),
            })?,
            planner: planner.to_string(),
            verdicts: verdicts.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::validate;
    use crate::domains::DomainSpec;
    use crate::graph::{build_graph, GraphKind};
    use crate::planner::{plan, Options, PlannerChoice};

    fn problem(spec: &str) -> PlanningProblem {
        spec.parse::<DomainSpec>().unwrap().generate().unwrap()
    }

    #[test]
    fn round_trips_all_generated_domains() {
        for spec in [
            "hanoi:3",
            "jb_counter:4",
            "dd_chain:4",
            "gripper:2",
            "maze_gripper:rooms=4,balls=2",
            "logistics",
            "fig5",
            "fig5:reversible",
            "rir_pair",
        ] {
            let p = problem(spec);
            let text = serialize_problem(&p);
            let q = parse_problem(&text).unwrap_or_else(|e| panic!("{spec}: {e}"));
            assert_eq!(text, serialize_problem(&q), "{spec}");
            assert_eq!(p.init, q.init, "{spec}");
            assert_eq!(p.goal, q.goal, "{spec}");
            assert_eq!(p.actions.len(), q.actions.len(), "{spec}");
        }
    }

    #[test]
    fn parse_reports_positioned_errors() {
        let missing_init = "var v a b\nvar w a b\ninit v=a\ngoal w=b\naction x\n  pre\n  post w=b\n";
        let e = parse_problem(missing_init).unwrap_err().to_string();
        assert!(e.contains("`init` missing for variable `w`"), "{e}");

        let bad_domain = "var v a b\ninit v=a\ngoal v=c\n";
        let e = parse_problem(bad_domain).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("outside the domain"), "{e}");

        let bad_directive = "var v a b\nfrobnicate\n";
        let e = parse_problem(bad_directive).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn plan_files_round_trip_and_validate() {
        let p = problem("hanoi:4");
        let r = plan(&p, PlannerChoice::Ir, &Options::default()).unwrap();
        let text = write_plan(&p.schema, &r.arena, &r.plan);
        let (arena, steps) = read_plan(&text, &p).unwrap();
        let v = validate(&arena, &steps, &p, 1_000_000).unwrap();
        assert!(v.is_valid());
        assert_eq!(
            arena.expanded_length(&steps).unwrap(),
            r.metrics.expanded_length
        );
    }

    #[test]
    fn dot_marks_removed_edges_dashed() {
        let p = problem("hanoi:3");
        let g = build_graph(&p, GraphKind::Conventional);
        let r = g.transitive_reduction().unwrap();
        let dot = emit_dot(&p.schema, &g, Some(&r));
        assert!(dot.starts_with("digraph"));
        // hanoi(3): the edge from the smallest to the largest disc is
        // implied transitively, so the reduction drops it
        assert!(dot.contains("[style=dashed]"));
        let plain = emit_dot(&p.schema, &r, None);
        assert!(!plain.contains("dashed"));
    }

    #[test]
    fn bench_rows_reparse() {
        let row = BenchRow {
            instance: "hanoi:60".into(),
            millis: 42,
            macros_generated: 533,
            macros_used: 177,
            expanded_length: BigUint::from(2u8).pow(60) - 1u8,
            planner: "ir".into(),
            verdicts: "ir=yes".into(),
        };
        let back = BenchRow::parse_tsv(&row.to_tsv()).unwrap();
        assert_eq!(row, back);
    }
}
