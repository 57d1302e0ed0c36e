//! Deterministic generators for the benchmark domains and a seeded random
//! generator of inverted-tree instances for property testing.

use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arena::PlanLength;
use crate::model::{Action, PartialState, PlanningProblem, Schema, Val, Var};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RandomIrMode {
    /// Pre-conditions on the direct tree children only.
    Free,
    /// Pre-conditions fully specified over the variable's whole subtree.
    FullPre,
    /// All actions achieving the same value share one parent pre-condition,
    /// and re-achieving the initial value requires the initial parent values.
    Shared,
}

#[derive(Clone, PartialEq, Debug)]
pub enum DomainSpec {
    Hanoi {
        n: u32,
    },
    JbCounter {
        n: u32,
    },
    DdChain {
        n: u32,
    },
    Gripper {
        n: u32,
    },
    MazeGripper {
        rooms: u32,
        balls: u32,
    },
    Logistics {
        cities: u32,
        locs: u32,
        trucks_per_city: u32,
        airplanes: u32,
        packages: u32,
    },
    Fig5 {
        reversible: bool,
    },
    RirPair,
    RandomIr {
        seed: u64,
        depth: u32,
        branch: u32,
        max_domain: u32,
        density: f64,
        mode: RandomIrMode,
    },
}

#[derive(Debug, PartialEq, Eq)]
pub struct SpecParseError(pub String);

impl std::fmt::Display for SpecParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid domain spec: {}", self.0)
    }
}

impl std::error::Error for SpecParseError {}

impl DomainSpec {
    pub fn generate(&self) -> Result<PlanningProblem, SpecParseError> {
        let p = match *self {
            DomainSpec::Hanoi { n } => hanoi(positive(n, "discs")?),
            DomainSpec::JbCounter { n } => jb_counter(positive(n, "variables")?),
            DomainSpec::DdChain { n } => dd_chain(positive(n, "variables")?),
            DomainSpec::Gripper { n } => gripper(positive(n, "balls")?),
            DomainSpec::MazeGripper { rooms, balls } => {
                if rooms < 2 {
                    return Err(SpecParseError("need at least 2 rooms".into()));
                }
                maze_gripper(rooms, positive(balls, "balls")?)
            }
            DomainSpec::Logistics {
                cities,
                locs,
                trucks_per_city,
                airplanes,
                packages,
            } => {
                positive(cities, "cities")?;
                positive(locs, "locations per city")?;
                positive(packages, "packages")?;
                logistics(cities, locs, trucks_per_city, airplanes, packages)
            }
            DomainSpec::Fig5 { reversible } => fig5(reversible),
            DomainSpec::RirPair => rir_pair(),
            DomainSpec::RandomIr {
                seed,
                depth,
                branch,
                max_domain,
                density,
                mode,
            } => {
                if max_domain < 2 {
                    return Err(SpecParseError("domain sizes must be at least 2".into()));
                }
                if !(0.0..=1.0).contains(&density) {
                    return Err(SpecParseError("density must lie in [0, 1]".into()));
                }
                random_ir(seed, depth, positive(branch, "branching")?, max_domain, density, mode)
            }
        };
        debug_assert!(p.check().is_ok());
        Ok(p)
    }

    /// Closed-form optimal plan length, where one is known.
    pub fn expected_optimum(&self) -> Option<PlanLength> {
        let two = BigUint::from(2u32);
        match *self {
            DomainSpec::Hanoi { n } | DomainSpec::JbCounter { n } => {
                Some(two.pow(n) - BigUint::one())
            }
            DomainSpec::DdChain { n } => Some(two.pow(n + 1) - two),
            _ => None,
        }
    }
}

fn positive(n: u32, what: &str) -> Result<u32, SpecParseError> {
    if n == 0 {
        Err(SpecParseError(format!("{what} count must be positive")))
    } else {
        Ok(n)
    }
}

impl FromStr for DomainSpec {
    type Err = SpecParseError;

    /// `name` or `name:args`, where args are either a single integer (the
    /// size parameter) or comma-separated `key=value` pairs.
    fn from_str(s: &str) -> Result<DomainSpec, SpecParseError> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let size = |default: Option<u32>| -> Result<u32, SpecParseError> {
            match args {
                Some(a) => a
                    .parse()
                    .map_err(|_| SpecParseError(format!("expected integer size in `{s}`"))),
                None => default.ok_or_else(|| SpecParseError(format!("`{name}` needs a size"))),
            }
        };
        let kv = || -> Result<Vec<(&str, &str)>, SpecParseError> {
            args.unwrap_or("")
                .split(',')
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.split_once('=')
                        .ok_or_else(|| SpecParseError(format!("expected key=value, got `{p}`")))
                })
                .collect()
        };
        let lookup = |pairs: &[(&str, &str)], key: &str, default: u64| -> Result<u64, SpecParseError> {
            for (k, v) in pairs {
                if *k == key {
                    return v
                        .parse()
                        .map_err(|_| SpecParseError(format!("bad value for `{key}`")));
                }
            }
            Ok(default)
        };
        match name {
            "hanoi" => Ok(DomainSpec::Hanoi { n: size(None)? }),
            "jb_counter" => Ok(DomainSpec::JbCounter { n: size(None)? }),
            "dd_chain" => Ok(DomainSpec::DdChain { n: size(None)? }),
            "gripper" => Ok(DomainSpec::Gripper { n: size(None)? }),
            "maze_gripper" => {
                let pairs = kv()?;
                Ok(DomainSpec::MazeGripper {
                    rooms: lookup(&pairs, "rooms", 2)? as u32,
                    balls: lookup(&pairs, "balls", 1)? as u32,
                })
            }
            "logistics" => {
                let pairs = kv()?;
                Ok(DomainSpec::Logistics {
                    cities: lookup(&pairs, "cities", 2)? as u32,
                    locs: lookup(&pairs, "locs", 2)? as u32,
                    trucks_per_city: lookup(&pairs, "trucks", 1)? as u32,
                    airplanes: lookup(&pairs, "planes", 1)? as u32,
                    packages: lookup(&pairs, "packages", 2)? as u32,
                })
            }
            "fig5" => match args {
                None => Ok(DomainSpec::Fig5 { reversible: false }),
                Some("reversible") => Ok(DomainSpec::Fig5 { reversible: true }),
                Some(other) => Err(SpecParseError(format!(
                    "fig5 takes only `reversible`, got `{other}`"
                ))),
            },
            "rir_pair" => Ok(DomainSpec::RirPair),
            "random_ir" => {
                let pairs = kv()?;
                let density = match pairs.iter().find(|(k, _)| *k == "density") {
                    Some((_, v)) => v
                        .parse()
                        .map_err(|_| SpecParseError("bad value for `density`".into()))?,
                    None => 0.5,
                };
                let mode = match pairs.iter().find(|(k, _)| *k == "mode") {
                    Some((_, "free")) | None => RandomIrMode::Free,
                    Some((_, "full_pre")) => RandomIrMode::FullPre,
                    Some((_, "shared")) => RandomIrMode::Shared,
                    Some((_, other)) => {
                        return Err(SpecParseError(format!("unknown random_ir mode `{other}`")))
                    }
                };
                Ok(DomainSpec::RandomIr {
                    seed: lookup(&pairs, "seed", 0)?,
                    depth: lookup(&pairs, "depth", 3)? as u32,
                    branch: lookup(&pairs, "branch", 2)? as u32,
                    max_domain: lookup(&pairs, "dom", 3)? as u32,
                    density,
                    mode,
                })
            }
            other => Err(SpecParseError(format!("unknown domain `{other}`"))),
        }
    }
}

fn ps(pairs: impl IntoIterator<Item = (u32, u32)>) -> PartialState {
    PartialState::from_pairs(pairs.into_iter().map(|(v, d)| (Var(v), Val(d))))
}

/// Tower of Hanoi with n discs on 3 pegs. Moving disc i from peg j to peg k
/// requires all smaller discs on the third peg.
fn hanoi(n: u32) -> PlanningProblem {
    let pegs = ["A", "B", "C"];
    let schema = Schema::new(
        (1..=n)
            .map(|i| (format!("v{i}"), pegs.iter().map(|p| p.to_string()).collect()))
            .collect(),
    )
    .unwrap();
    let mut actions = Vec::new();
    for i in 0..n {
        for j in 0..3u32 {
            for k in 0..3u32 {
                if j == k {
                    continue;
                }
                let l = 3 - j - k;
                let mut pre: Vec<(u32, u32)> = (0..i).map(|s| (s, l)).collect();
                pre.push((i, j));
                actions.push(Action::new(
                    format!("move{}_{}{}", i + 1, pegs[j as usize], pegs[k as usize]),
                    ps(pre),
                    ps([(i, k)]),
                ));
            }
        }
    }
    PlanningProblem {
        schema,
        init: ps((0..n).map(|i| (i, 0))),
        goal: ps((0..n).map(|i| (i, 2))),
        actions,
    }
}

/// The binary-counter chain of Jonsson and Bäckström: toggling v_i requires
/// v_{i-1} = 1 and all earlier variables 0; optimal plans count to 2^n − 1.
fn jb_counter(n: u32) -> PlanningProblem {
    let schema = Schema::new(
        (1..=n)
            .map(|i| (format!("v{i}"), vec!["0".into(), "1".into()]))
            .collect(),
    )
    .unwrap();
    let mut actions = Vec::new();
    for i in 0..n {
        let mut pre: Vec<(u32, u32)> = (0..i.saturating_sub(1)).map(|s| (s, 0)).collect();
        if i > 0 {
            pre.push((i - 1, 1));
        }
        let mut up = pre.clone();
        up.push((i, 0));
        actions.push(Action::new(format!("a{}", i + 1), ps(up), ps([(i, 1)])));
        let mut down = pre;
        down.push((i, 1));
        actions.push(Action::new(format!("a{}'", i + 1), ps(down), ps([(i, 0)])));
    }
    let mut goal: Vec<(u32, u32)> = (0..n - 1).map(|i| (i, 0)).collect();
    goal.push((n - 1, 1));
    PlanningProblem {
        schema,
        init: ps((0..n).map(|i| (i, 0))),
        goal: ps(goal),
        actions,
    }
}

/// The three-valued chain of Domshlak and Dinitz; optimum 2^{n+1} − 2. The
/// goal constrains only the last variable: that is the encoding whose
/// optimum matches the published closed form (goaling every variable adds
/// return trips and inflates the optimum).
fn dd_chain(n: u32) -> PlanningProblem {
    let schema = Schema::new(
        (1..=n)
            .map(|i| (format!("v{i}"), vec!["0".into(), "1".into(), "2".into()]))
            .collect(),
    )
    .unwrap();
    let mut actions = Vec::new();
    for i in 0..n {
        // (pre on v_{i-1}, pre on v_i, post on v_i), dropped for the first var
        let scheme = [(2, 0, 1), (0, 1, 2), (2, 2, 1), (0, 1, 0)];
        for (k, &(pp, from, to)) in scheme.iter().enumerate() {
            let mut pre = Vec::new();
            if i > 0 {
                pre.push((i - 1, pp));
            }
            pre.push((i, from));
            actions.push(Action::new(
                format!("a{}_{}", i + 1, k + 1),
                ps(pre),
                ps([(i, to)]),
            ));
        }
    }
    PlanningProblem {
        schema,
        init: ps((0..n).map(|i| (i, 0))),
        goal: ps([(n - 1, 2)]),
        actions,
    }
}

/// Two-room GRIPPER: robot location, held-ball count 0..2, and one variable
/// per ball with values room 0, room 1, or held (R).
fn gripper(n: u32) -> PlanningProblem {
    let mut vars = vec![
        ("vl".to_string(), vec!["0".into(), "1".into()]),
        ("vh".to_string(), vec!["0".into(), "1".into(), "2".into()]),
    ];
    for i in 1..=n {
        vars.push((format!("b{i}"), vec!["0".into(), "1".into(), "R".into()]));
    }
    let schema = Schema::new(vars).unwrap();
    let (vl, vh) = (0u32, 1u32);
    let ball = |i: u32| 2 + i;
    let mut actions = Vec::new();
    for a in 0..2u32 {
        actions.push(Action::new(
            format!("move_{}_{}", a, 1 - a),
            ps([(vl, a)]),
            ps([(vl, 1 - a)]),
        ));
    }
    for i in 0..n {
        for a in 0..2u32 {
            for b in 0..2u32 {
                actions.push(Action::new(
                    format!("pick_b{}_r{}_h{}", i + 1, a, b),
                    ps([(vl, a), (vh, b), (ball(i), a)]),
                    ps([(vh, b + 1), (ball(i), 2)]),
                ));
                actions.push(Action::new(
                    format!("drop_b{}_r{}_h{}", i + 1, a, b + 1),
                    ps([(vl, a), (vh, b + 1), (ball(i), 2)]),
                    ps([(vh, b), (ball(i), a)]),
                ));
            }
        }
    }
    PlanningProblem {
        schema,
        init: ps([(vl, 0), (vh, 0)].into_iter().chain((0..n).map(|i| (ball(i), 0)))),
        goal: ps((0..n).map(|i| (ball(i), 1))),
        actions,
    }
}

/// GRIPPER over a serpentine corridor of `rooms` rooms; the robot moves only
/// between adjacent rooms and may pick up and drop balls only in the first
/// and last room. Shortest corridor traversal is rooms − 1 steps.
fn maze_gripper(rooms: u32, balls: u32) -> PlanningProblem {
    let room_names: Vec<String> = (0..rooms).map(|r| format!("r{r}")).collect();
    let mut ball_dom = room_names.clone();
    ball_dom.push("H".into());
    let held = rooms; // value index of "H"
    let mut vars = vec![
        ("vl".to_string(), room_names.clone()),
        ("vh".to_string(), vec!["0".into(), "1".into(), "2".into()]),
    ];
    for i in 1..=balls {
        vars.push((format!("b{i}"), ball_dom.clone()));
    }
    let schema = Schema::new(vars).unwrap();
    let (vl, vh) = (0u32, 1u32);
    let ball = |i: u32| 2 + i;
    let mut actions = Vec::new();
    for r in 0..rooms - 1 {
        actions.push(Action::new(
            format!("move_r{}_r{}", r, r + 1),
            ps([(vl, r)]),
            ps([(vl, r + 1)]),
        ));
        actions.push(Action::new(
            format!("move_r{}_r{}", r + 1, r),
            ps([(vl, r + 1)]),
            ps([(vl, r)]),
        ));
    }
    let ends = [0, rooms - 1];
    for i in 0..balls {
        for &a in &ends {
            for b in 0..2u32 {
                actions.push(Action::new(
                    format!("pick_b{}_r{}_h{}", i + 1, a, b),
                    ps([(vl, a), (vh, b), (ball(i), a)]),
                    ps([(vh, b + 1), (ball(i), held)]),
                ));
                actions.push(Action::new(
                    format!("drop_b{}_r{}_h{}", i + 1, a, b + 1),
                    ps([(vl, a), (vh, b + 1), (ball(i), held)]),
                    ps([(vh, b), (ball(i), a)]),
                ));
            }
        }
    }
    PlanningProblem {
        schema,
        init: ps([(vl, 0), (vh, 0)].into_iter().chain((0..balls).map(|i| (ball(i), 0)))),
        goal: ps((0..balls).map(|i| (ball(i), rooms - 1))),
        actions,
    }
}

/// LOGISTICS with `cities` cities of `locs` locations each (location 0 of a
/// city is its airport), trucks confined to their city, airplanes confined
/// to airports, and packages starting in the last location of the first city
/// with goals in the last location of the last city.
fn logistics(
    cities: u32,
    locs: u32,
    trucks_per_city: u32,
    airplanes: u32,
    packages: u32,
) -> PlanningProblem {
    let loc_name = |c: u32, l: u32| format!("c{c}l{l}");
    let all_locs: Vec<(u32, u32)> = (0..cities)
        .flat_map(|c| (0..locs).map(move |l| (c, l)))
        .collect();

    // vehicle variables first, then packages; a vehicle's domain is the list
    // of location names it may occupy
    let mut vars: Vec<(String, Vec<String>)> = Vec::new();
    let mut vehicles: Vec<(String, Vec<String>)> = Vec::new();
    for c in 0..cities {
        for t in 0..trucks_per_city {
            vehicles.push((
                format!("t{c}_{t}"),
                (0..locs).map(|l| loc_name(c, l)).collect(),
            ));
        }
    }
    for k in 0..airplanes {
        vehicles.push((
            format!("u{k}"),
            (0..cities).map(|c| loc_name(c, 0)).collect(),
        ));
    }
    vars.extend(vehicles.iter().cloned());
    // package domain: every location, then every vehicle
    let mut pkg_dom: Vec<String> = all_locs.iter().map(|&(c, l)| loc_name(c, l)).collect();
    pkg_dom.extend(vehicles.iter().map(|(n, _)| n.clone()));
    for p in 0..packages {
        vars.push((format!("p{p}"), pkg_dom.clone()));
    }
    let schema = Schema::new(vars).unwrap();

    let num_vehicles = vehicles.len() as u32;
    let pkg = |p: u32| num_vehicles + p;
    let mut actions = Vec::new();
    for (vi, (vname, dom)) in vehicles.iter().enumerate() {
        let vi = vi as u32;
        for l1 in 0..dom.len() as u32 {
            for l2 in 0..dom.len() as u32 {
                if l1 != l2 {
                    actions.push(Action::new(
                        format!("move_{}_{}_{}", vname, dom[l1 as usize], dom[l2 as usize]),
                        ps([(vi, l1)]),
                        ps([(vi, l2)]),
                    ));
                }
            }
        }
        for l in 0..dom.len() as u32 {
            // package value index of this location / this vehicle
            let loc_val = schema
                .lookup_val(Var(pkg(0)), &dom[l as usize])
                .expect("package domain covers all locations");
            let veh_val = schema
                .lookup_val(Var(pkg(0)), vname)
                .expect("package domain covers all vehicles");
            for p in 0..packages {
                actions.push(Action::new(
                    format!("load_p{}_{}_{}", p, vname, dom[l as usize]),
                    PartialState::from_pairs([(Var(vi), Val(l)), (Var(pkg(p)), loc_val)]),
                    PartialState::from_pairs([(Var(pkg(p)), veh_val)]),
                ));
                actions.push(Action::new(
                    format!("unload_p{}_{}_{}", p, vname, dom[l as usize]),
                    PartialState::from_pairs([(Var(vi), Val(l)), (Var(pkg(p)), veh_val)]),
                    PartialState::from_pairs([(Var(pkg(p)), loc_val)]),
                ));
            }
        }
    }

    // vehicles at their airports; packages in the last location of city 0
    let mut init = PartialState::empty();
    for (vi, (_, dom)) in vehicles.iter().enumerate() {
        let _ = dom;
        init.insert(Var(vi as u32), Val(0));
    }
    let start = schema
        .lookup_val(Var(pkg(0)), &loc_name(0, locs - 1))
        .unwrap();
    let end = schema
        .lookup_val(Var(pkg(0)), &loc_name(cities - 1, locs - 1))
        .unwrap();
    let mut goal = PartialState::empty();
    for p in 0..packages {
        init.insert(Var(pkg(p)), start);
        goal.insert(Var(pkg(p)), end);
    }
    PlanningProblem {
        schema,
        init,
        goal,
        actions,
    }
}

/// The three-variable diamond whose per-variable subproblems look solvable
/// even though the joint problem is not; `reversible` adds the two actions
/// that return v1 to 0 and make the problem solvable.
fn fig5(reversible: bool) -> PlanningProblem {
    let schema = Schema::new(vec![
        ("v1".into(), vec!["0".into(), "1".into(), "2".into()]),
        ("v2".into(), vec!["0".into(), "1".into()]),
        ("v3".into(), vec!["0".into(), "1".into()]),
    ])
    .unwrap();
    let mut actions = vec![
        Action::new("a1_1", ps([(0, 0)]), ps([(0, 1)])),
        Action::new("a1_2", ps([(0, 0)]), ps([(0, 2)])),
        Action::new("a2_1", ps([(0, 1), (1, 0)]), ps([(1, 1)])),
        Action::new("a3_1", ps([(0, 2), (2, 0)]), ps([(2, 1)])),
    ];
    if reversible {
        actions.push(Action::new("a1_3", ps([(0, 1)]), ps([(0, 0)])));
        actions.push(Action::new("a1_4", ps([(0, 2)]), ps([(0, 0)])));
    }
    PlanningProblem {
        schema,
        init: ps([(0, 0), (1, 0), (2, 0)]),
        goal: ps([(1, 1), (2, 1)]),
        actions,
    }
}

/// The two-variable example whose third action is non-unary: in the relaxed
/// graph only the edge (v, w) remains, so the problem is in RIR but not IR.
fn rir_pair() -> PlanningProblem {
    let schema = Schema::new(vec![
        (
            "v".into(),
            vec!["0".into(), "1".into(), "2".into(), "3".into()],
        ),
        ("w".into(), vec!["0".into(), "1".into()]),
    ])
    .unwrap();
    PlanningProblem {
        schema,
        init: ps([(0, 0), (1, 0)]),
        goal: ps([(0, 3), (1, 1)]),
        actions: vec![
            Action::new("a1", ps([(0, 0)]), ps([(0, 1)])),
            Action::new("a2", ps([(0, 2)]), ps([(0, 3)])),
            Action::new("a3", ps([(0, 1), (1, 0)]), ps([(0, 2), (1, 1)])),
        ],
    }
}

/// Random instance over an inverted tree of unary actions. Every action on a
/// variable carries pre-conditions on all its tree children, so the causal
/// graph's transitive reduction is the tree by construction.
fn random_ir(
    seed: u64,
    depth: u32,
    branch: u32,
    max_domain: u32,
    density: f64,
    mode: RandomIrMode,
) -> PlanningProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // build the tree: node 0 is the root; children point toward their parent
    let mut parent: Vec<Option<u32>> = vec![None];
    let mut level: Vec<Vec<u32>> = vec![vec![0]];
    for d in 1..=depth {
        let mut next = Vec::new();
        for &p in &level[(d - 1) as usize] {
            let kids = rng.gen_range(1..=branch);
            for _ in 0..kids {
                let id = parent.len() as u32;
                parent.push(Some(p));
                next.push(id);
            }
        }
        if next.is_empty() {
            break;
        }
        level.push(next);
    }
    let n = parent.len() as u32;
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n as usize];
    for v in 1..n {
        children[parent[v as usize].unwrap() as usize].push(v);
    }
    // subtree below each node (the variable's ancestors in the causal graph)
    fn subtree(children: &[Vec<u32>], v: u32, out: &mut Vec<u32>) {
        for &c in &children[v as usize] {
            out.push(c);
            subtree(children, c, out);
        }
    }

    let dom: Vec<u32> = (0..n).map(|_| rng.gen_range(2..=max_domain)).collect();
    let schema = Schema::new(
        (0..n)
            .map(|v| {
                (
                    format!("v{v}"),
                    (0..dom[v as usize]).map(|d| d.to_string()).collect(),
                )
            })
            .collect(),
    )
    .unwrap();
    let init: Vec<u32> = (0..n).map(|v| rng.gen_range(0..dom[v as usize])).collect();

    let mut actions = Vec::new();
    for v in 0..n {
        let pre_vars: Vec<u32> = match mode {
            RandomIrMode::Free | RandomIrMode::Shared => children[v as usize].clone(),
            RandomIrMode::FullPre => {
                let mut s = Vec::new();
                subtree(&children, v, &mut s);
                s
            }
        };
        // one fixed child assignment per achieved value in shared mode
        let shared_pre: Vec<Vec<(u32, u32)>> = (0..dom[v as usize])
            .map(|d| {
                if d == init[v as usize] {
                    pre_vars.iter().map(|&w| (w, init[w as usize])).collect()
                } else {
                    pre_vars
                        .iter()
                        .map(|&w| (w, rng.gen_range(0..dom[w as usize])))
                        .collect()
                }
            })
            .collect();
        let mut emitted = false;
        for from in 0..dom[v as usize] {
            for to in 0..dom[v as usize] {
                if from == to {
                    continue;
                }
                let keep = rng.gen_bool(density);
                // every pair is sampled so the stream stays aligned across
                // modes; a variable always gets at least one action
                let forced = !emitted && from + 1 == dom[v as usize] && {
                    let last_to = if from == 0 { 1 } else { 0 };
                    to == last_to
                };
                if !keep && !forced {
                    continue;
                }
                emitted = true;
                let mut pre: Vec<(u32, u32)> = match mode {
                    RandomIrMode::Shared => shared_pre[to as usize].clone(),
                    _ => pre_vars
                        .iter()
                        .map(|&w| (w, rng.gen_range(0..dom[w as usize])))
                        .collect(),
                };
                pre.push((v, from));
                actions.push(Action::new(
                    format!("a{}_{}_{}", v, from, to),
                    ps(pre),
                    ps([(v, to)]),
                ));
            }
        }
    }

    // goal on the root keeps the augmented reduction an inverted tree
    let goal_root = rng.gen_range(0..dom[0]);
    PlanningProblem {
        schema,
        init: ps((0..n).map(|v| (v, init[v as usize]))),
        goal: ps([(0, goal_root)]),
        actions,
    }
}
