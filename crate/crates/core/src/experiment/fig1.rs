use serde::{Deserialize, Serialize};

use crate::controller::{choose_expectation, ExactScenario};
use crate::eval::{exact_q, two_stage_value, ExactMove, ExactRoot, OracleError, OracleLimits};
use crate::instance::{fig1_fixture, Fig1Vertices as V, Instance};
use crate::plan::{initial_fleet, RoutePlan, Strategy};
use crate::scenario::Scenario;

/// The two equiprobable futures of the fixture.
pub fn fig1_scenarios() -> Vec<Scenario> {
    let at = |vs: [usize; 3]| Scenario::new(1, vs.iter().map(|&v| (V::REVEAL_EPOCH, v)).collect());
    vec![at([V::D, V::E, V::F]), at([V::G, V::H, V::I])]
}

/// Limits wide enough for the nine-vertex fixture.
pub fn fig1_limits() -> OracleLimits {
    OracleLimits { max_vertices: 9, max_remaining_epochs: 30, max_scenarios: 8 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Demo {
    pub exact_to_b: f64,
    pub exact_to_c: f64,
    pub two_stage_to_b: f64,
    pub two_stage_to_c: f64,
    /// Choice of the rule minimizing the value with nonanticipativity.
    pub multistage_choice: char,
    /// Choice of the rule minimizing the two-stage relaxation.
    pub two_stage_choice: char,
    /// Choice of the Expectation rule with a per-scenario exact solver.
    pub expectation_choice: char,
    /// After going to `b`, value of heading for `d` or `g` at epoch 3.
    pub from_b_to_d: f64,
    pub from_b_to_g: f64,
}

fn lower(a: (char, f64), b: (char, f64)) -> char {
    if b.1 < a.1 {
        b.0
    } else {
        a.0
    }
}

/// Evaluates travelling to `b` or `c` at epoch 1 under both values.
pub fn fig1_demo() -> Result<Fig1Demo, OracleError> {
    let inst = fig1_fixture();
    let scenarios = fig1_scenarios();
    let w = [0.5, 0.5];
    let lim = fig1_limits();
    let root = ExactRoot { epoch: 0, fleet: initial_fleet(&inst), pending: vec![], past_rejections: 0 };
    let go = |from: &ExactRoot, v| from.step(&inst, &[ExactMove::Relocate(v)]).expect("vehicle is idle");
    let (at_b, at_c) = (go(&root, V::B), go(&root, V::C));
    let exact_to_b = exact_q(&inst, &at_b, &scenarios, &w, &lim)?;
    let exact_to_c = exact_q(&inst, &at_c, &scenarios, &w, &lim)?;
    let two_stage_to_b = two_stage_value(&inst, &at_b, &scenarios, &w, &lim)?;
    let two_stage_to_c = two_stage_value(&inst, &at_c, &scenarios, &w, &lim)?;

    // the vehicle reaches b at the start of epoch 3
    let waiting = at_b.step(&inst, &[ExactMove::Wait]).expect("waiting is allowed");
    let from_b_to_d = exact_q(&inst, &go(&waiting, V::D), &scenarios, &w, &lim)?;
    let from_b_to_g = exact_q(&inst, &go(&waiting, V::G), &scenarios, &w, &lim)?;

    Ok(Fig1Demo {
        exact_to_b,
        exact_to_c,
        two_stage_to_b,
        two_stage_to_c,
        multistage_choice: lower(('b', exact_to_b), ('c', exact_to_c)),
        two_stage_choice: lower(('b', two_stage_to_b), ('c', two_stage_to_c)),
        expectation_choice: expectation_choice(&inst, &root, &scenarios, lim),
        from_b_to_d,
        from_b_to_g,
    })
}

fn expectation_choice(inst: &Instance, root: &ExactRoot, scenarios: &[Scenario], limits: OracleLimits) -> char {
    let plan = RoutePlan::empty(1, Strategy::DriveFirst, false);
    let candidates = [vec![ExactMove::Relocate(V::B)], vec![ExactMove::Relocate(V::C)]];
    let (i, _) = choose_expectation(inst, root, &plan, &candidates, scenarios, &ExactScenario { limits })
        .expect("two candidates");
    ['b', 'c'][i]
}
