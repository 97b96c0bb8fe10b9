#![allow(dead_code)]

use dsvrp::instance::InstanceParts;
use dsvrp::time::Ticks;
use dsvrp::TimeWindow;

/// One vehicle, unit demands and services, every arc `t` ticks, windows
/// spanning the horizon and no requests.
pub fn uniform(n: usize, t: Ticks, horizon: u32) -> InstanceParts {
    let size = n + 1;
    let mut travel = vec![t; size * size];
    for i in 0..size {
        travel[i * size + i] = 0;
    }
    let mut windows = vec![TimeWindow::new(1, horizon); size];
    windows[0] = TimeWindow::new(0, horizon);
    InstanceParts {
        name: "uniform".into(),
        horizon,
        coords: vec![],
        travel,
        demand: (0..size).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect(),
        service: (0..size).map(|i| u32::from(i != 0)).collect(),
        windows,
        vehicles: 1,
        capacity: 100.0,
        probability: vec![],
        requests: vec![],
    }
}

pub fn set_travel(p: &mut InstanceParts, i: usize, j: usize, t: Ticks) {
    let size = p.windows.len();
    p.travel[i * size + j] = t;
    p.travel[j * size + i] = t;
}
