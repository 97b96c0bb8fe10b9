use super::{Instance, InstanceParts, ProbabilitySlice, Request, TimeWindow};

/// Vertex ids of the nonanticipation example.
#[derive(Debug, Clone, Copy)]
pub struct Fig1Vertices;

impl Fig1Vertices {
    pub const A: usize = 0;
    pub const B: usize = 1;
    pub const C: usize = 2;
    pub const D: usize = 3;
    pub const E: usize = 4;
    pub const F: usize = 5;
    pub const G: usize = 6;
    pub const H: usize = 7;
    pub const I: usize = 8;
    /// Epoch at which either `{d,e,f}` or `{g,h,i}` is revealed.
    pub const REVEAL_EPOCH: u32 = 4;
}

/// The two-branch nonanticipation example: one vehicle at `a` at epoch 1,
/// short arcs (travel 2) along `a→b→{d,g}`, `a→c→{e,h}`, `d→e→f→a` and
/// `g→h→i→a`, every other arc 20. Either `{d,e,f}` or `{g,h,i}` is revealed at
/// epoch 4, each with probability 1/2; the replayed realization is `{d,e,f}`.
///
/// Windows `[1,5]` on `d,g`, `[1,10]` on `e,h` and `[1,12]` on `f,i` make
/// `d`/`g` reachable only by a vehicle that commits to them at epoch 3 from
/// `b`, while `e`/`h` and `f`/`i` stay reachable from `c` after the reveal.
/// The depot closes at 30 so that a vehicle stranded on the wrong branch
/// can still drive straight home.
pub fn fig1_fixture() -> Instance {
    use Fig1Vertices as V;
    let size = 9;
    let arcs = [
        (V::A, V::B),
        (V::A, V::C),
        (V::B, V::D),
        (V::B, V::G),
        (V::C, V::E),
        (V::C, V::H),
        (V::D, V::E),
        (V::E, V::F),
        (V::G, V::H),
        (V::H, V::I),
        (V::F, V::A),
        (V::I, V::A),
    ];
    let mut travel = vec![200; size * size];
    for i in 0..size {
        travel[i * size + i] = 0;
    }
    for (i, j) in arcs {
        travel[i * size + j] = 20;
    }
    let mut windows = vec![TimeWindow::new(1, 30); size];
    windows[V::A] = TimeWindow::new(0, 30);
    for (v, hi) in [(V::D, 5), (V::G, 5), (V::E, 10), (V::H, 10), (V::F, 12), (V::I, 12)] {
        windows[v] = TimeWindow::new(1, hi);
    }
    let probability = [V::D, V::E, V::F, V::G, V::H, V::I]
        .into_iter()
        .map(|vertex| ProbabilitySlice { start: V::REVEAL_EPOCH, end: V::REVEAL_EPOCH, vertex, per_epoch: 0.5 })
        .collect();
    let requests = [V::D, V::E, V::F]
        .into_iter()
        .enumerate()
        .map(|(k, v)| Request::new(v, V::REVEAL_EPOCH, k as u32))
        .collect();
    Instance::from_parts(InstanceParts {
        name: "fig1".into(),
        horizon: 30,
        coords: vec![],
        travel,
        demand: (0..size).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect(),
        service: (0..size).map(|i| u32::from(i != 0)).collect(),
        windows,
        vehicles: 1,
        capacity: 10.0,
        probability,
        requests,
    })
    .expect("fixture is valid")
}
