//! Command-line interface.
//!
//! `run` is the whole program: it parses `argv`, writes to the given sink,
//! and returns the process exit code, so tests can drive it in-process.
//! Exit codes: 0 success, 1 no plan / unsolvable / invalid, 2 usage or
//! input errors, 3 resource caps.

use std::collections::HashMap;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use crate::arena::{validate, Validation};
use crate::domains::DomainSpec;
use crate::graph::{build_graph, classify, GraphKind, Verdict};
use crate::io::{
    emit_dot, parse_problem, read_plan, serialize_problem, write_plan, BenchRow, IoError,
    BENCH_HEADER,
};
use crate::model::PlanningProblem;
use crate::oracle::{self, OracleResult};
use crate::planner::{plan as run_planner, Options, PlanError, PlannerChoice};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

const STATE_CAP_VAR: &str = "MACROPLAN_STATE_CAP";
const DEFAULT_STATE_CAP: u64 = 1_000_000;

#[derive(Parser)]
#[command(
    name = "macroplan",
    version,
    about = "Causal-graph analysis and macro-based planning for multi-valued planning problems",
    disable_help_flag = false
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Conventional,
    Relaxed,
}

impl From<KindArg> for GraphKind {
    fn from(k: KindArg) -> GraphKind {
        match k {
            KindArg::Conventional => GraphKind::Conventional,
            KindArg::Relaxed => GraphKind::Relaxed,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a problem (IR/RIR/AR/AOR) and optionally print its causal
    /// graph as DOT
    Analyze {
        file: PathBuf,
        /// Emit the causal graph as a DOT digraph; edges removed by the
        /// transitive reduction are dashed
        #[arg(long)]
        dot: bool,
        /// Graph kind used for the DOT output
        #[arg(long, value_enum, default_value_t = KindArg::Conventional)]
        kind: KindArg,
    },
    /// Plan a problem; the resulting macro plan is printed (or written with
    /// --out) with metrics as leading comments
    Plan {
        file: PathBuf,
        /// auto picks the first applicable class in the order ir, rir, aor, ar
        #[arg(long, default_value_t = PlannerChoice::Auto)]
        planner: PlannerChoice,
        /// Prune macros that cannot take part in any solution
        #[arg(long)]
        prune: bool,
        /// Enumerate every macro-level solution, not just the first
        #[arg(long)]
        all_solutions: bool,
        /// Treat variables whose reversibility is undecided within the
        /// budget as reversible
        #[arg(long)]
        assume_reversible: bool,
        /// Run the chosen planner even where its class test fails
        #[arg(long)]
        force: bool,
        /// Restrict the planner to one causal-graph kind
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Write the plan file here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the expanded length of a plan file
    Length { plan: PathBuf },
    /// Print the first primitive actions of a plan file, one per line
    Expand {
        plan: PathBuf,
        /// Maximum number of actions to print
        #[arg(long)]
        limit: u64,
        /// Problem file used to print action names instead of indices
        #[arg(long)]
        problem: Option<PathBuf>,
    },
    /// Check a plan file against its problem
    Validate { file: PathBuf, plan: PathBuf },
    /// Print a generated problem, e.g. `gen hanoi:5`
    Gen { spec: String },
    /// Breadth-first search for a shortest plan (exponential; small inputs)
    Oracle {
        file: PathBuf,
        /// State cap; defaults to $MACROPLAN_STATE_CAP or 1000000
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Run a generated suite and print one TSV row per instance,
    /// e.g. `bench hanoi 10..60 step 10`
    Bench {
        /// Domain name, `<start>..<end>` range, and optional `step <k>`
        suite: Vec<String>,
    },
}

pub fn run(args: &[String], out: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    let r = match cli.cmd {
        Cmd::Analyze { file, dot, kind } => cmd_analyze(out, &file, dot, kind.into()),
        Cmd::Plan {
            file,
            planner,
            prune,
            all_solutions,
            assume_reversible,
            force,
            kind,
            out: out_file,
        } => {
            let opts = Options {
                pruning: prune,
                all_solutions,
                assume_reversible,
                force,
                kind: kind.map(GraphKind::from),
                ..Options::default()
            };
            cmd_plan(out, &file, planner, &opts, out_file.as_deref())
        }
        Cmd::Length { plan } => cmd_length(out, &plan),
        Cmd::Expand {
            plan,
            limit,
            problem,
        } => cmd_expand(out, &plan, limit, problem.as_deref()),
        Cmd::Validate { file, plan } => cmd_validate(out, &file, &plan),
        Cmd::Gen { spec } => cmd_gen(out, &spec),
        Cmd::Oracle { file, cap } => cmd_oracle(out, &file, cap.unwrap_or_else(state_cap)),
        Cmd::Bench { suite } => cmd_bench(out, &suite),
    };
    match r {
        Ok(code) => code,
        Err((code, msg)) => {
            let _ = writeln!(out, "{msg}");
            code
        }
    }
}

type CmdResult = Result<i32, (i32, String)>;

fn state_cap() -> u64 {
    std::env::var(STATE_CAP_VAR)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_STATE_CAP)
}

fn read_to_string(path: &Path) -> Result<String, (i32, String)> {
    std::fs::read_to_string(path)
        .map_err(|e| (EXIT_USAGE, format!("error: cannot read {}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<PlanningProblem, (i32, String)> {
    let text = read_to_string(path)?;
    parse_problem(&text).map_err(|e| (EXIT_USAGE, format!("error: {}: {e}", path.display())))
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Yes => "yes",
        Verdict::No => "no",
        Verdict::Unknown => "unknown",
    }
}

fn w(out: &mut dyn Write, line: impl Display) -> Result<(), (i32, String)> {
    writeln!(out, "{line}").map_err(|e| (EXIT_RESOURCE, format!("error: write failed: {e}")))
}

fn cmd_analyze(out: &mut dyn Write, file: &Path, dot: bool, kind: GraphKind) -> CmdResult {
    let problem = load_problem(file)?;
    let report = classify(&problem, state_cap());
    w(out, format!("ir {}", verdict_str(report.ir)))?;
    w(out, format!("rir {}", verdict_str(report.rir)))?;
    for (label, per_kind) in [("ar", &report.ar), ("aor", &report.aor)] {
        let cells: Vec<String> = per_kind
            .iter()
            .map(|(k, &v)| format!("{k}={}", verdict_str(v)))
            .collect();
        w(out, format!("{label} {}", cells.join(" ")))?;
    }
    w(out, format!("max_domain {}", report.max_domain))?;
    let cells: Vec<String> = report
        .max_w
        .iter()
        .map(|(k, n)| format!("{k}={n}"))
        .collect();
    w(out, format!("max_w {}", cells.join(" ")))?;
    if dot {
        let g = build_graph(&problem, kind);
        let text = match g.transitive_reduction() {
            Ok(reduced) => emit_dot(&problem.schema, &g, Some(&reduced)),
            Err(_) => emit_dot(&problem.schema, &g, None),
        };
        w(out, text.trim_end())?;
    }
    Ok(EXIT_OK)
}

fn plan_error(e: PlanError) -> (i32, String) {
    match e {
        PlanError::Resource(_) => (EXIT_RESOURCE, format!("resource: {e}")),
        _ => (EXIT_FAIL, format!("fail: {e}")),
    }
}

fn cmd_plan(
    out: &mut dyn Write,
    file: &Path,
    choice: PlannerChoice,
    opts: &Options,
    out_file: Option<&Path>,
) -> CmdResult {
    let problem = load_problem(file)?;
    let started = Instant::now();
    let result = run_planner(&problem, choice, opts).map_err(plan_error)?;
    let millis = started.elapsed().as_millis();
    for warning in &result.warnings {
        w(out, format!("# warning: {warning}"))?;
    }
    w(out, format!("# planner {}", result.planner))?;
    w(out, format!("# kind {}", result.kind))?;
    w(out, format!("# time_ms {millis}"))?;
    w(out, format!("# length {}", result.metrics.expanded_length))?;
    w(
        out,
        format!("# macros_generated {}", result.metrics.macros_generated),
    )?;
    w(out, format!("# macros_used {}", result.metrics.macros_used))?;
    if let Some(all) = &result.all_plans {
        w(out, format!("# solutions {}", all.len()))?;
    }
    let text = write_plan(&problem.schema, &result.arena, &result.plan);
    match out_file {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            (
                EXIT_USAGE,
                format!("error: cannot write {}: {e}", path.display()),
            )
        })?,
        None => w(out, text.trim_end())?,
    }
    Ok(EXIT_OK)
}

/// Step lengths of every `macro` line plus the `plan` step tokens, read
/// without the problem file: only the step structure is interpreted.
fn plan_skeleton(text: &str) -> Result<(HashMap<usize, Vec<String>>, Vec<String>), (i32, String)> {
    let parse_err = |ln: usize, msg: String| (EXIT_USAGE, format!("error: line {ln}: {msg}"));
    let mut macros: HashMap<usize, Vec<String>> = HashMap::new();
    let mut plan: Option<Vec<String>> = None;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("plan") {
            plan = Some(rest.split_whitespace().map(|s| s.to_string()).collect());
        } else if let Some(rest) = line.strip_prefix("macro ") {
            let num: usize = rest
                .split_whitespace()
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(ln, "bad macro number".into()))?;
            let body = rest
                .split_once("steps[")
                .and_then(|(_, b)| b.strip_suffix(']'))
                .ok_or_else(|| parse_err(ln, "missing `steps[...]`".into()))?;
            macros.insert(num, body.split_whitespace().map(|s| s.to_string()).collect());
        } else {
            return Err(parse_err(ln, "expected a `macro` or `plan` line".into()));
        }
    }
    let plan = plan.ok_or_else(|| parse_err(text.lines().count(), "missing `plan` line".into()))?;
    Ok((macros, plan))
}

fn token_macro(tok: &str) -> Option<usize> {
    tok.strip_prefix('m').and_then(|n| n.parse().ok())
}

fn token_action(tok: &str) -> Option<usize> {
    tok.strip_prefix('a').and_then(|n| n.parse().ok())
}

fn cmd_length(out: &mut dyn Write, plan: &Path) -> CmdResult {
    let text = read_to_string(plan)?;
    let (macros, steps) = plan_skeleton(&text)?;
    let bad = |tok: &str| (EXIT_USAGE, format!("error: bad step token `{tok}`"));
    // macro files list definitions before use, so one pass in file order
    // would suffice; a fixpoint loop keeps this independent of line order
    let mut lengths: HashMap<usize, BigUint> = HashMap::new();
    let mut remaining: Vec<usize> = macros.keys().copied().collect();
    remaining.sort_unstable();
    loop {
        let mut progressed = false;
        remaining.retain(|&id| {
            let mut total = BigUint::from(0u8);
            for tok in &macros[&id] {
                if token_action(tok).is_some() {
                    total += 1u8;
                } else if let Some(m) = token_macro(tok) {
                    match lengths.get(&m) {
                        Some(l) => total += l,
                        None => return true,
                    }
                } else {
                    return true;
                }
            }
            lengths.insert(id, total);
            progressed = true;
            false
        });
        if remaining.is_empty() || !progressed {
            break;
        }
    }
    let mut total = BigUint::from(0u8);
    for tok in &steps {
        if token_action(tok).is_some() {
            total += 1u8;
        } else {
            let m = token_macro(tok).ok_or_else(|| bad(tok))?;
            total += lengths.get(&m).ok_or_else(|| bad(tok))?;
        }
    }
    w(out, total)?;
    Ok(EXIT_OK)
}

fn cmd_expand(
    out: &mut dyn Write,
    plan: &Path,
    limit: u64,
    problem: Option<&Path>,
) -> CmdResult {
    let text = read_to_string(plan)?;
    let (macros, steps) = plan_skeleton(&text)?;
    let names: Option<Vec<String>> = match problem {
        Some(p) => Some(
            load_problem(p)?
                .actions
                .iter()
                .map(|a| a.name.clone())
                .collect(),
        ),
        None => None,
    };
    let bad = |tok: &str| (EXIT_USAGE, format!("error: bad step token `{tok}`"));
    // explicit stack of (token list, position) frames; macro tokens expand
    // in place, so output streams without materializing the full sequence
    let mut stack: Vec<(&[String], usize)> = vec![(&steps, 0)];
    let mut emitted = 0u64;
    'walk: while let Some((toks, i)) = stack.pop() {
        if i >= toks.len() {
            continue;
        }
        let tok = &toks[i];
        stack.push((toks, i + 1));
        if let Some(a) = token_action(tok) {
            if emitted == limit {
                w(out, "...")?;
                break 'walk;
            }
            emitted += 1;
            match &names {
                Some(names) => {
                    let name = names.get(a).ok_or_else(|| bad(tok))?;
                    w(out, name)?;
                }
                None => w(out, tok)?,
            }
        } else {
            let m = token_macro(tok).ok_or_else(|| bad(tok))?;
            let body = macros.get(&m).ok_or_else(|| bad(tok))?;
            if stack.len() > macros.len() + 1 {
                return Err((EXIT_USAGE, "error: cyclic macro references".into()));
            }
            stack.push((body, 0));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_validate(out: &mut dyn Write, file: &Path, plan: &Path) -> CmdResult {
    let problem = load_problem(file)?;
    let text = read_to_string(plan)?;
    let (arena, steps) = match read_plan(&text, &problem) {
        Ok(x) => x,
        Err(e @ IoError::Arena(_)) => {
            w(out, format!("fail: {e}"))?;
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err((EXIT_USAGE, format!("error: {}: {e}", plan.display()))),
    };
    let outcome = validate(&arena, &steps, &problem, state_cap())
        .map_err(|e| (EXIT_USAGE, format!("error: {e}")))?;
    match outcome {
        Validation::Valid { length } => {
            w(out, format!("valid length {length}"))?;
            Ok(EXIT_OK)
        }
        Validation::BudgetExceeded { .. } => {
            w(out, "resource: validation budget exceeded")?;
            Ok(EXIT_RESOURCE)
        }
        invalid => {
            w(out, format!("fail: {invalid:?}"))?;
            Ok(EXIT_FAIL)
        }
    }
}

fn cmd_gen(out: &mut dyn Write, spec: &str) -> CmdResult {
    let spec: DomainSpec = spec
        .parse()
        .map_err(|e| (EXIT_USAGE, format!("error: {e}")))?;
    let problem = spec
        .generate()
        .map_err(|e| (EXIT_USAGE, format!("error: {e}")))?;
    w(out, serialize_problem(&problem).trim_end())?;
    Ok(EXIT_OK)
}

fn cmd_oracle(out: &mut dyn Write, file: &Path, cap: u64) -> CmdResult {
    let problem = load_problem(file)?;
    match oracle::solve(&problem, cap) {
        OracleResult::Solved { length, .. } => {
            w(out, format!("length {length}"))?;
            Ok(EXIT_OK)
        }
        OracleResult::Unsolvable => {
            w(out, "unsolvable")?;
            Ok(EXIT_FAIL)
        }
        OracleResult::CapExceeded => {
            w(out, format!("resource: state cap {cap} exceeded"))?;
            Ok(EXIT_RESOURCE)
        }
    }
}

/// `bench <domain> <start>..<end> [step <k>]`; instances are domain specs
/// `<domain>:<n>`, except maze_gripper where n is the ball count in a
/// 101-room corridor.
fn cmd_bench(out: &mut dyn Write, suite: &[String]) -> CmdResult {
    let usage = || {
        (
            EXIT_USAGE,
            "error: expected `bench <domain> <start>..<end> [step <k>]`".to_string(),
        )
    };
    let (domain, range, step) = match suite {
        [d, r] => (d, r, 1u32),
        [d, r, kw, k] if kw == "step" => (d, r, k.parse().map_err(|_| usage())?),
        _ => return Err(usage()),
    };
    let (lo, hi) = range.split_once("..").ok_or_else(usage)?;
    let (lo, hi): (u32, u32) = (
        lo.parse().map_err(|_| usage())?,
        hi.parse().map_err(|_| usage())?,
    );
    if step == 0 || lo > hi {
        return Err(usage());
    }

    w(out, BENCH_HEADER)?;
    for n in (lo..=hi).step_by(step as usize) {
        let instance = format!("{domain}:{n}");
        let spec_text = if domain == "maze_gripper" {
            format!("maze_gripper:rooms=101,balls={n}")
        } else {
            instance.clone()
        };
        let spec: DomainSpec = spec_text
            .parse()
            .map_err(|e| (EXIT_USAGE, format!("error: {instance}: {e}")))?;
        let problem = spec
            .generate()
            .map_err(|e| (EXIT_USAGE, format!("error: {instance}: {e}")))?;
        let started = Instant::now();
        let result =
            run_planner(&problem, PlannerChoice::Auto, &Options::default()).map_err(plan_error)?;
        let millis = started.elapsed().as_millis() as u64;
        // structural verdicts only: per-variable reversibility search would
        // dominate the timings this table is about
        let verdicts = format!(
            "ir={} rir={}",
            if crate::graph::is_inverted_tree_reducible(&problem, GraphKind::Conventional) {
                "yes"
            } else {
                "no"
            },
            if crate::graph::is_inverted_tree_reducible(&problem, GraphKind::Relaxed) {
                "yes"
            } else {
                "no"
            },
        );
        let row = BenchRow {
            instance,
            millis,
            macros_generated: result.metrics.macros_generated,
            macros_used: result.metrics.macros_used,
            expanded_length: result.metrics.expanded_length.clone(),
            planner: result.planner.to_string(),
            verdicts,
        };
        w(out, row.to_tsv())?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> (i32, String) {
        let mut argv = vec!["macroplan".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let mut buf = Vec::new();
        let code = run(&argv, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn gen_plan_validate_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let (code, problem_text) = cli(&["gen", "hanoi:4"]);
        assert_eq!(code, EXIT_OK);
        let mvp = write_tmp(&dir, "hanoi4.mvp", &problem_text);
        let plan_path = dir.path().join("hanoi4.plan");

        let (code, plan_out) = cli(&[
            "plan",
            mvp.to_str().unwrap(),
            "--out",
            plan_path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{plan_out}");
        assert!(plan_out.contains("# planner ir"), "{plan_out}");
        assert!(plan_out.contains("# length 15"), "{plan_out}");

        let (code, len_out) = cli(&["length", plan_path.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(len_out.trim(), "15");

        let (code, val_out) = cli(&[
            "validate",
            mvp.to_str().unwrap(),
            plan_path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{val_out}");
        assert!(val_out.starts_with("valid length 15"), "{val_out}");

        let (code, exp_out) = cli(&[
            "expand",
            plan_path.to_str().unwrap(),
            "--limit",
            "3",
            "--problem",
            mvp.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = exp_out.lines().collect();
        assert_eq!(lines.len(), 4, "{exp_out}"); // 3 actions + "..."
        assert_eq!(lines[3], "...");

        let (code, orc_out) = cli(&["oracle", mvp.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(orc_out.trim(), "length 15");
    }

    #[test]
    fn analyze_reports_classes_and_dot() {
        let dir = tempfile::tempdir().unwrap();
        let (_, text) = cli(&["gen", "gripper:2"]);
        let mvp = write_tmp(&dir, "gripper2.mvp", &text);
        let (code, out) = cli(&["analyze", mvp.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("ir no"), "{out}");
        assert!(out.contains("relaxed=yes"), "{out}");

        let (code, out) = cli(&["analyze", mvp.to_str().unwrap(), "--dot", "--kind", "relaxed"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("digraph"), "{out}");
    }

    #[test]
    fn unsolvable_problem_fails_with_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let (_, text) = cli(&["gen", "fig5"]);
        let mvp = write_tmp(&dir, "fig5.mvp", &text);
        let (code, out) = cli(&["plan", mvp.to_str().unwrap()]);
        assert_eq!(code, EXIT_FAIL);
        assert!(out.contains("fail"), "{out}");
        let (code, out) = cli(&["oracle", mvp.to_str().unwrap()]);
        assert_eq!(code, EXIT_FAIL);
        assert_eq!(out.trim(), "unsolvable");
    }

    #[test]
    fn usage_errors_exit_two() {
        let (code, _) = cli(&["frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, out) = cli(&["gen", "hanoi:notanumber"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.starts_with("error:"), "{out}");
        let (code, _) = cli(&["plan", "/nonexistent.mvp"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn bench_emits_reparsable_tsv() {
        let (code, out) = cli(&["bench", "hanoi", "3..5"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some(BENCH_HEADER));
        let rows: Vec<BenchRow> = lines.map(|l| BenchRow::parse_tsv(l).unwrap()).collect();
        assert_eq!(rows.len(), 3);
        for (row, n) in rows.iter().zip(3u32..) {
            assert_eq!(row.instance, format!("hanoi:{n}"));
            assert_eq!(
                row.expanded_length,
                BigUint::from(2u8).pow(n) - 1u8,
            );
            assert_eq!(row.planner, "ir");
        }
    }
}
