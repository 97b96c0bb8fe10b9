//! End-to-end acceptance checks, one PASS/FAIL line each. Exits non-zero if
//! any check fails. `ACCEPTANCE_ONLY=2,5` runs a subset.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dsvrp::controller::{run_online, ControllerConfig};
use dsvrp::eval::{exact_q, q_bar_traces, q_bar_with, try_to_serve, two_stage_value, ExactRoot, OracleLimits, TraceEvent};
use dsvrp::experiment::{fig1_demo, performance_profile, run_campaign, Manifest, MeanTable, ProfilePoint};
use dsvrp::instance::{
    generate_dynamic_instance, synthetic_base, ClassProfile, GeneratorOptions, InstanceParts, ProbabilitySlice,
    SyntheticBase,
};
use dsvrp::plan::{compute_schedule, initial_fleet, total_travel_ticks};
use dsvrp::scenario::sample_scenario;
use dsvrp::search::{shake, MoveContext, MoveKind, Rotor};
use dsvrp::time::{epoch_ticks, Ticks};
use dsvrp::{Instance, Request, RoutePlan, Scenario, Strategy, TimeWindow, VehicleState, Visit, DEPOT};

type Outcome = Result<String, String>;

fn main() {
    let checks: [(&str, fn() -> Outcome); 10] = [
        ("fig1 nonanticipation example", fig1),
        ("Q-bar bounds the exact value", upper_bound),
        ("nonanticipative simulation", nonanticipativity),
        ("schedule properties", schedules),
        ("cheapest insertion matches enumeration", insertion_oracle),
        ("determinism", determinism),
        ("hill-climb monotonicity", monotonicity),
        ("directional benchmark GSA-df < GLS-df", directional),
        ("operator rotation", rotation),
        ("performance profile", profile),
    ];
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(k + 1))) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = check();
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- instances

/// Random instance with positive travel times and `n` customers.
fn random_parts(rng: &mut ChaCha8Rng, n: usize, horizon: u32, vehicles: usize) -> InstanceParts {
    let size = n + 1;
    let mut travel = vec![0; size * size];
    for i in 0..size {
        for j in 0..size {
            if i != j {
                travel[i * size + j] = rng.gen_range(3..=25);
            }
        }
    }
    let mut windows = vec![TimeWindow::new(0, horizon)];
    for _ in 0..n {
        let a = rng.gen_range(1..=horizon);
        let b = rng.gen_range(a..=horizon);
        windows.push(if rng.gen_bool(0.3) { TimeWindow::new(1, horizon) } else { TimeWindow::new(a, b) });
    }
    InstanceParts {
        name: "random".into(),
        horizon,
        coords: vec![],
        travel,
        demand: (0..size).map(|i| if i == 0 { 0.0 } else { f64::from(rng.gen_range(1..=4u32)) }).collect(),
        service: (0..size).map(|i| if i == 0 { 0 } else { rng.gen_range(1..=2) }).collect(),
        windows,
        vehicles,
        capacity: f64::from(rng.gen_range(4..=12u32)),
        probability: vec![],
        requests: vec![],
    }
}

fn random_probabilities(rng: &mut ChaCha8Rng, n: usize, horizon: u32) -> Vec<ProbabilitySlice> {
    let mut out = vec![];
    for vertex in 1..=n {
        if rng.gen_bool(0.7) {
            let start = rng.gen_range(1..=horizon);
            let end = rng.gen_range(start..=horizon);
            let total = rng.gen_range(0.2..0.9);
            out.push(ProbabilitySlice { start, end, vertex, per_epoch: total / f64::from(end - start + 1) });
        }
    }
    out
}

fn desk(class: u8, i: u64) -> Instance {
    let base = synthetic_base(&SyntheticBase::desk(i + 1)).expect("base");
    let profile = ClassProfile::for_class(class).expect("class");
    generate_dynamic_instance(&base, &profile, 1000 + i, GeneratorOptions { horizon: 120 }).expect("instance")
}

/// Greedy plan for the deterministic requests, starting at epoch 1.
fn greedy_plan(inst: &Instance, strategy: Strategy) -> (RoutePlan, u32) {
    let mut plan = RoutePlan::empty(inst.vehicles(), strategy, false);
    let fleet = initial_fleet(inst);
    let mut rejected = 0;
    for &r in inst.deterministic_requests() {
        match try_to_serve(inst, &plan, &fleet, r, epoch_ticks(1)) {
            Some(ins) => plan.routes[ins.vehicle].insert(ins.position, Visit::service(r)),
            None => rejected += 1,
        }
    }
    (plan, rejected)
}

// ----------------------------------------------------------------- criteria

fn fig1() -> Outcome {
    let t0 = Instant::now();
    let d = fig1_demo().map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed().as_secs_f64();
    ensure(d.exact_to_c == 1.0 && d.exact_to_b == 1.5 && d.two_stage_to_b == 0.0, || format!("{d:?}"))?;
    ensure(d.multistage_choice == 'c' && d.two_stage_choice == 'b', || format!("{d:?}"))?;
    ensure(elapsed < 1.0, || format!("took {elapsed:.3}s"))?;
    Ok(format!(
        "exact c={} b={}, two-stage b={}, choices {}/{} in {:.0}ms",
        d.exact_to_c,
        d.exact_to_b,
        d.two_stage_to_b,
        d.multistage_choice,
        d.two_stage_choice,
        elapsed * 1000.0
    ))
}

fn upper_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let limits = OracleLimits::default();
    let (mut cases, mut strict, mut gaps) = (0, 0, 0);
    while cases < 500 {
        let n = rng.gen_range(1..=5);
        let h = rng.gen_range(4..=12);
        let vehicles = rng.gen_range(1..=2);
        let mut p = random_parts(&mut rng, n, h, vehicles);
        p.probability = random_probabilities(&mut rng, n, h);
        let known = rng.gen_range(0..=2.min(n));
        p.requests = (0..known).map(|k| Request::new(rng.gen_range(1..=n), 0, k as u32)).collect();
        p.requests.sort_by_key(|r| (r.reveal_epoch, r.arrival_index));
        let inst = Instance::from_parts(p).map_err(|e| e.to_string())?;
        let strategy = if rng.gen_bool(0.5) { Strategy::DriveFirst } else { Strategy::WaitFirst };
        let (plan, _) = greedy_plan(&inst, strategy);
        let fleet = initial_fleet(&inst);
        let count = rng.gen_range(1..=4);
        let scenarios: Vec<Scenario> = (0..count).map(|_| sample_scenario(&inst, 1, &mut rng)).collect();
        let weights = vec![1.0; count];
        let root = ExactRoot { epoch: 0, fleet: fleet.clone(), pending: plan.service_requests(), past_rejections: 0 };
        let q = q_bar_with(&inst, &fleet, &plan, &scenarios, 0, epoch_ticks(1)).mean;
        let exact = exact_q(&inst, &root, &scenarios, &weights, &limits).map_err(|e| e.to_string())?;
        let two = two_stage_value(&inst, &root, &scenarios, &weights, &limits).map_err(|e| e.to_string())?;
        ensure(q >= exact - 1e-9, || format!("case {cases}: Q-bar {q} < exact {exact}\n{}", plan.dump()))?;
        ensure(two <= exact + 1e-9, || format!("case {cases}: two-stage {two} > exact {exact}"))?;
        cases += 1;
        strict += usize::from(q > exact + 1e-9);
        gaps += usize::from(two < exact - 1e-9);
    }
    Ok(format!("{cases} instances, 0 violations; Q-bar strictly above exact in {strict}, two-stage strictly below in {gaps}"))
}

fn nonanticipativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut evaluations, mut pairs, mut nonempty) = (0, 0, 0);
    while evaluations < 200 {
        let inst = desk(4, evaluations as u64 % 5);
        let (plan, _) = greedy_plan(&inst, Strategy::DriveFirst);
        let fleet = initial_fleet(&inst);
        let mut pool = vec![];
        let mut cuts = vec![];
        for _ in 0..3 {
            let a = sample_scenario(&inst, 1, &mut rng);
            let split = rng.gen_range(2..=inst.horizon());
            let tail = sample_scenario(&inst, split, &mut rng);
            let mut reveals: Vec<(u32, usize)> = a.reveals.iter().copied().filter(|&(e, _)| e < split).collect();
            reveals.extend(tail.reveals.iter().copied());
            let b = Scenario::new(1, reveals);
            // first epoch at which the two realizations differ
            let by_epoch = |s: &Scenario| {
                let mut m: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
                for &(e, v) in &s.reveals {
                    m.entry(e).or_default().push(v);
                }
                m
            };
            let (ma, mb) = (by_epoch(&a), by_epoch(&b));
            let Some(cut) = (1..=inst.horizon()).find(|e| ma.get(e) != mb.get(e)) else { continue };
            cuts.push((pool.len(), cut));
            pool.push(a);
            pool.push(b);
        }
        let traces = q_bar_traces(&inst, &fleet, &plan, &pool, 0, epoch_ticks(1));
        for &(i, cut) in &cuts {
            let prefix = |t: &[TraceEvent]| t.iter().filter(|e| e.epoch() < cut).cloned().collect::<Vec<_>>();
            let (pa, pb) = (prefix(&traces[i]), prefix(&traces[i + 1]));
            ensure(pa == pb, || format!("evaluation {evaluations}: prefixes before epoch {cut} differ"))?;
            pairs += 1;
            nonempty += usize::from(!pa.is_empty());
        }
        evaluations += 1;
    }
    Ok(format!("{evaluations} evaluations, {pairs} prefix-sharing pairs identical ({nonempty} with a non-empty prefix)"))
}

fn random_routes(rng: &mut ChaCha8Rng, inst: &Instance, max_len: usize, relocations: bool) -> Vec<Vec<Visit>> {
    let mut vertices: Vec<usize> = inst.customers().collect();
    vertices.shuffle(rng);
    let len = rng.gen_range(0..=max_len.min(vertices.len()));
    let mut routes = vec![vec![]; inst.vehicles()];
    for (k, &v) in vertices[..len].iter().enumerate() {
        let visit = if relocations && rng.gen_bool(0.3) {
            Visit::relocation(v)
        } else {
            Visit::service(Request::new(v, rng.gen_range(0..=1), k as u32))
        };
        routes[rng.gen_range(0..inst.vehicles())].push(visit);
    }
    routes
}

fn schedules() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut feasible, mut tries, mut visits) = (0, 0, 0);
    while feasible < 1000 {
        tries += 1;
        let n = rng.gen_range(2..=12);
        let vehicles = rng.gen_range(1..=3);
        let p = random_parts(&mut rng, n, 120, vehicles);
        let inst = Instance::from_parts(p).map_err(|e| e.to_string())?;
        let fleet = initial_fleet(&inst);
        let routes = if rng.gen_bool(0.5) {
            random_routes(&mut rng, &inst, 8, false)
        } else {
            // long feasible routes: cheapest insertion in random order
            let mut order: Vec<usize> = inst.customers().collect();
            order.shuffle(&mut rng);
            let mut p = RoutePlan::empty(inst.vehicles(), Strategy::DriveFirst, false);
            for (k, v) in order.into_iter().enumerate() {
                let r = Request::new(v, 0, k as u32);
                if let Some(ins) = try_to_serve(&inst, &p, &fleet, r, epoch_ticks(1)) {
                    p.routes[ins.vehicle].insert(ins.position, Visit::service(r));
                }
            }
            p.routes
        };
        let plan = |strategy| RoutePlan { routes: routes.clone(), strategy, relocation: false };
        let now = epoch_ticks(1);
        let Some(df) = compute_schedule(&plan(Strategy::DriveFirst), &inst, &fleet, now) else { continue };
        feasible += 1;
        let wf = compute_schedule(&plan(Strategy::WaitFirst), &inst, &fleet, now)
            .ok_or_else(|| format!("route {feasible}: feasible under DF but not WF"))?;
        for (a, b) in df.routes.iter().zip(&wf.routes) {
            for (x, y) in a.visits.iter().zip(&b.visits) {
                ensure(y.start >= x.start, || format!("route {feasible}: WF start {} < DF start {}", y.start, x.start))?;
                visits += 1;
            }
        }
        let ro = compute_schedule(&plan(Strategy::RelocationOnly), &inst, &fleet, now);
        ensure(ro.as_ref() == Some(&df), || format!("route {feasible}: RO schedule differs from DF"))?;
    }
    Ok(format!("{feasible} feasible routes ({tries} drawn), {visits} visits compared, RO = DF on all"))
}

fn insertion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut cases, mut served) = (0, 0);
    while cases < 1000 {
        let n = rng.gen_range(2..=8);
        let vehicles = rng.gen_range(1..=2);
        let mut p = random_parts(&mut rng, n, 40, vehicles);
        p.probability = random_probabilities(&mut rng, n, 40);
        let inst = Instance::from_parts(p).map_err(|e| e.to_string())?;
        let strategy = [Strategy::DriveFirst, Strategy::WaitFirst, Strategy::CustomWait, Strategy::RelocationOnly]
            [rng.gen_range(0..4)];
        let relocation = strategy == Strategy::RelocationOnly;
        let mut routes = random_routes(&mut rng, &inst, 8 - vehicles, relocation);
        if strategy == Strategy::CustomWait {
            for v in routes.iter_mut().flatten() {
                v.wait = rng.gen_range(0..=2);
            }
        }
        let plan = RoutePlan { routes, strategy, relocation };
        let epoch = rng.gen_range(1..=4);
        let now = epoch_ticks(epoch);
        let fleet: Vec<VehicleState> = (0..vehicles)
            .map(|_| VehicleState {
                vertex: if rng.gen_bool(0.5) { DEPOT } else { rng.gen_range(1..=n) },
                free: now + rng.gen_range(-1..=2) * 10,
                load: f64::from(rng.gen_range(0..=2u32)),
                at_relocation: false,
                done: false,
            })
            .collect();
        if compute_schedule(&plan, &inst, &fleet, now).is_none() {
            continue;
        }
        let positions: usize = plan.routes.iter().map(|r| r.len() + 1).sum();
        if positions > 8 {
            continue;
        }
        let request = Request::new(rng.gen_range(1..=n), epoch, 0);
        let base = total_travel_ticks(&plan, &inst, &fleet);
        let mut best: Option<(Ticks, usize, usize)> = None;
        for k in 0..vehicles {
            for pos in 0..=plan.routes[k].len() {
                let mut q = plan.clone();
                q.routes[k].insert(pos, Visit::service(request));
                if compute_schedule(&q, &inst, &fleet, now).is_some() {
                    let c = (total_travel_ticks(&q, &inst, &fleet) - base, k, pos);
                    if best.map_or(true, |b| c < b) {
                        best = Some(c);
                    }
                }
            }
        }
        let got = try_to_serve(&inst, &plan, &fleet, request, now).map(|i| (i.cost, i.vehicle, i.position));
        ensure(got == best, || format!("case {cases}: tryToServe {got:?}, enumeration {best:?}\n{}", plan.dump()))?;
        served += usize::from(got.is_some());
        cases += 1;
    }
    Ok(format!("{cases} cases agree ({served} insertable)"))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).expect("readable directory") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("inside").to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).expect("readable file"));
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let inst = desk(4, 0);
    for id in ["GSA-df", "GSA-ro", "GLS-df", "EXP"] {
        let cfg = ControllerConfig { seed: 11, ..ControllerConfig::for_algorithm(id).expect("known") };
        let a = run_online(&inst, &cfg).map_err(|e| e.to_string())?;
        let b = run_online(&inst, &cfg).map_err(|e| e.to_string())?;
        ensure(a.log.to_json() == b.log.to_json(), || format!("{id}: decision logs differ"))?;
        ensure(a.events_jsonl() == b.events_jsonl(), || format!("{id}: event logs differ"))?;
    }
    let manifest = Manifest::parse(
        r#"
[[instances]]
id = "det-1"
[instances.generate]
class = 4
seed = 7
base_seed = 7
customers = 12
horizon = 60

[[instances]]
id = "det-2"
[instances.generate]
class = 6
seed = 8
base_seed = 8
customers = 12
horizon = 60

[[runs]]
algorithm = "GSA-df"
seeds = [0, 1]
[runs.overrides]
epoch_budget = 40

[[runs]]
algorithm = "GLS-df"
seeds = [0, 1]
"#,
    )
    .map_err(|e| e.to_string())?;
    let (x, y) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let a = run_campaign(&manifest, x.path(), x.path(), 4).map_err(|e| e.to_string())?;
    let b = run_campaign(&manifest, y.path(), y.path(), 1).map_err(|e| e.to_string())?;
    let (ta, tb) = (read_tree(&a.dir), read_tree(&b.dir));
    ensure(a.dir.file_name() == b.dir.file_name(), || "campaign directory names differ".into())?;
    ensure(ta == tb, || "campaign outputs differ".into())?;
    Ok(format!("4 algorithms x 2 runs identical; campaign of {} runs identical across {} files", a.reports.len(), ta.len()))
}

fn monotonicity() -> Outcome {
    let inst = desk(6, 0);
    let cfg = ControllerConfig::for_algorithm("GSA-df").expect("known");
    let out = run_online(&inst, &cfg).map_err(|e| e.to_string())?;
    let mut steps = 0;
    for w in out.trace.windows(2) {
        if (w[0].epoch, w[0].generation) == (w[1].epoch, w[1].generation) {
            ensure(w[1].value <= w[0].value, || format!("increase at epoch {} generation {}", w[1].epoch, w[1].generation))?;
            steps += 1;
        }
    }
    ensure(steps > 0, || "no improvement step recorded".into())?;
    Ok(format!("{steps} improvement steps over {} trace points, none increasing", out.trace.len()))
}

fn directional() -> Outcome {
    let mut totals = [0u32; 2];
    for i in 0..5 {
        let inst = desk(6, i);
        ensure(inst.customer_count() == 25 && inst.horizon() == 120, || "unexpected desk size".into())?;
        for (a, id) in ["GSA-df", "GLS-df"].into_iter().enumerate() {
            for seed in 0..5 {
                let cfg = ControllerConfig { seed, ..ControllerConfig::for_algorithm(id).expect("known") };
                totals[a] += run_online(&inst, &cfg).map_err(|e| e.to_string())?.log.rejected;
            }
        }
    }
    let (gsa, gls) = (f64::from(totals[0]) / 25.0, f64::from(totals[1]) / 25.0);
    ensure(gsa < gls, || format!("mean rejections GSA-df {gsa} vs GLS-df {gls}"))?;
    Ok(format!("mean rejections over 25 runs: GSA-df {gsa} < GLS-df {gls}"))
}

fn rotation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inst = desk(1, 2);
    let (plan, _) = greedy_plan(&inst, Strategy::DriveFirst);
    let ctx = MoveContext { instance: &inst, start_epoch: 1 };
    let mut rotor = Rotor::new(Strategy::DriveFirst, false);
    let base = rotor.operators().to_vec();
    ensure(base.len() == 4, || format!("{} base operators", base.len()))?;
    let mut applied: Vec<MoveKind> = vec![];
    let mut current = plan;
    for _ in 0..400 {
        let (next, kind) = shake(&current, &mut rotor, &ctx, &mut rng);
        applied.push(kind);
        if rng.gen_bool(0.5) {
            current = next;
        }
    }
    let mut windows = 0;
    for start in 0..40 {
        for m in [1, 3, 10, 25] {
            let w = &applied[start..start + 4 * m];
            for op in &base {
                let count = w.iter().filter(|k| *k == op).count();
                ensure(count == m, || format!("{op} applied {count} times in a window of {}", 4 * m))?;
            }
            windows += 1;
        }
    }
    Ok(format!("{windows} windows, each base operator exactly m times"))
}

fn fraction_at(points: &[ProfilePoint], x: f64) -> f64 {
    points.iter().filter(|p| p.ratio <= x).map(|p| p.fraction).fold(0.0, f64::max)
}

fn profile() -> Outcome {
    let table = MeanTable::from_cells([
        ("i1", "A", 2.0),
        ("i1", "B", 4.0),
        ("i1", "C", 3.0),
        ("i2", "A", 0.0),
        ("i2", "B", 0.0),
        ("i2", "C", 1.0),
        ("i3", "A", 5.0),
        ("i3", "B", 5.0),
        ("i3", "C", 10.0),
        ("i4", "A", 3.0),
        ("i4", "B", 1.0),
        ("i4", "C", 2.0),
    ]);
    let pts = |v: &[(f64, f64)]| v.iter().map(|&(ratio, fraction)| ProfilePoint { ratio, fraction }).collect::<Vec<_>>();
    let expected: BTreeMap<String, Vec<ProfilePoint>> = [
        ("A".to_string(), pts(&[(1.0, 0.75), (3.0, 1.0)])),
        ("B".to_string(), pts(&[(1.0, 0.75), (2.0, 1.0)])),
        ("C".to_string(), pts(&[(1.5, 0.25), (2.0, 0.75), (f64::INFINITY, 1.0)])),
    ]
    .into_iter()
    .collect();
    let got = performance_profile(&table);
    ensure(got == expected, || format!("{got:?}"))?;
    let c = &got["C"];
    let samples = [(1.0, 0.0), (1.5, 0.25), (1.9, 0.25), (2.0, 0.75), (1e9, 0.75), (f64::INFINITY, 1.0)];
    for (x, y) in samples {
        ensure(fraction_at(c, x) == y, || format!("C at {x}: {}", fraction_at(c, x)))?;
    }
    Ok("3 algorithms x 4 instances match the hand-computed step curves".into())
}
