//! Dynamic benchmark classes and a Solomon-like base instance generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{euclidean_travel, Instance, InstanceError, InstanceParts, ProbabilitySlice, Request, TimeWindow, DEPOT};
use crate::time::{epoch_ticks, Ticks, TICKS_PER_EPOCH};

/// Row of the instance-class table: per-region probability that the single
/// request of a region is known a priori, revealed early or revealed late.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub class_id: u8,
    /// Nominal degree of dynamism reported for the class.
    pub dod: f64,
    pub p_initial: f64,
    pub p_early: f64,
    pub p_late: f64,
}

impl ClassProfile {
    pub fn for_class(class_id: u8) -> Result<ClassProfile, InstanceError> {
        let (dod, p_initial, p_early, p_late) = match class_id {
            1..=3 => (0.44, 0.5, 0.25, 0.25),
            4 => (0.57, 0.2, 0.2, 0.6),
            5 => (0.81, 0.1, 0.1, 0.8),
            6 => (1.0, 0.0, 0.3, 0.7),
            other => return Err(InstanceError::UnknownClass(other)),
        };
        Ok(ClassProfile { class_id, dod, p_initial, p_early, p_late })
    }

    /// Expected share of dynamic requests among all requests implied by the
    /// slice probabilities.
    pub fn expected_dynamic_share(&self) -> f64 {
        let total = self.p_initial + self.p_early + self.p_late;
        if total == 0.0 {
            0.0
        } else {
            (self.p_early + self.p_late) / total
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    /// Horizon of the generated instance; the base instance's time data is
    /// rescaled so that its depot due date maps onto it.
    pub horizon: u32,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions { horizon: 480 }
    }
}

impl GeneratorOptions {
    /// Early and late reveal slices: the first and second thirds of the horizon.
    pub fn slices(&self) -> ((u32, u32), (u32, u32)) {
        let third = self.horizon / 3;
        ((1, third), (third + 1, 2 * third))
    }
}

/// Draws one realization of a dynamic benchmark instance from `base`.
///
/// Each region independently receives a deterministic request, an early
/// request, a late request or nothing, with the class probabilities; reveal
/// epochs are uniform inside their slice and the last third of the horizon
/// never reveals anything.
pub fn generate_dynamic_instance(
    base: &Instance,
    profile: &ClassProfile,
    seed: u64,
    options: GeneratorOptions,
) -> Result<Instance, InstanceError> {
    match profile.class_id {
        5 => return Err(InstanceError::UnsupportedClass(5)),
        1..=4 | 6 => {}
        other => return Err(InstanceError::UnknownClass(other)),
    }
    if base.customer_count() == 0 {
        return Err(InstanceError::Invalid("base instance has no customers".into()));
    }
    let h = options.horizon;
    if h < 3 {
        return Err(InstanceError::Invalid("horizon too short for three slices".into()));
    }
    let ((e0, e1), (l0, l1)) = options.slices();
    let mut parts = rescale(base, h);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn: Vec<(u32, u64, usize)> = Vec::new();
    for v in base.customers() {
        let u: f64 = rng.gen();
        let epoch = if u < profile.p_initial {
            Some(0)
        } else if u < profile.p_initial + profile.p_early {
            Some(rng.gen_range(e0..=e1))
        } else if u < profile.p_initial + profile.p_early + profile.p_late {
            Some(rng.gen_range(l0..=l1))
        } else {
            None
        };
        if let Some(epoch) = epoch {
            drawn.push((epoch, rng.gen(), v));
        }
    }
    // deterministic requests keep vertex order, same-epoch reveals arrive in random order
    drawn.sort_by_key(|&(epoch, key, v)| (epoch, if epoch == 0 { v as u64 } else { key }));
    let mut requests = Vec::with_capacity(drawn.len());
    let mut last_epoch = u32::MAX;
    let mut next_index = 0;
    for (epoch, _, v) in drawn {
        if epoch != last_epoch {
            last_epoch = epoch;
            next_index = 0;
        }
        requests.push(Request::new(v, epoch, next_index));
        next_index += 1;
    }
    parts.requests = requests;

    let mut probability = Vec::new();
    for v in base.customers() {
        for ((start, end), p) in [((e0, e1), profile.p_early), ((l0, l1), profile.p_late)] {
            if p > 0.0 {
                probability.push(ProbabilitySlice { start, end, vertex: v, per_epoch: p / f64::from(end - start + 1) });
            }
        }
    }
    parts.probability = probability;
    parts.name = format!("{}-c{}-s{}", base.name(), profile.class_id, seed);
    Instance::from_parts(parts)
}

fn rescale(base: &Instance, horizon: u32) -> InstanceParts {
    let mut parts = base.parts().clone();
    let l0 = base.window(DEPOT).latest.max(1);
    if l0 == horizon {
        parts.horizon = horizon;
        return parts;
    }
    let f = f64::from(horizon) / f64::from(l0);
    parts.horizon = horizon;
    parts.travel = base.parts().travel.iter().map(|&t| ((t as f64) * f + 1e-9).floor() as Ticks).collect();
    parts.service = base
        .parts()
        .service
        .iter()
        .enumerate()
        .map(|(i, &d)| if i == DEPOT { 0 } else { ((f64::from(d) * f).round() as u32).clamp(1, horizon) })
        .collect();
    parts.windows = base
        .parts()
        .windows
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let lo_min = if i == DEPOT { 0 } else { 1 };
            let hi = ((f64::from(w.latest) * f).floor() as u32).min(horizon);
            let lo = ((f64::from(w.earliest) * f).ceil() as u32).max(lo_min).min(hi);
            TimeWindow::new(lo, hi.max(lo_min))
        })
        .collect();
    parts
}

/// Share of dynamic requests (revealed after epoch 0) among all requests.
pub fn realized_dynamic_share(instance: &Instance) -> f64 {
    let total = instance.requests().len();
    if total == 0 {
        return 0.0;
    }
    let dynamic = instance.requests().iter().filter(|r| r.reveal_epoch > 0).count();
    dynamic as f64 / total as f64
}

/// Parameters of a random Solomon RC-like static instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBase {
    pub customers: usize,
    pub vehicles: usize,
    pub capacity: f64,
    /// Depot due date.
    pub horizon: u32,
    pub service: u32,
    /// Side of the square service area.
    pub area: f64,
    pub seed: u64,
}

impl SyntheticBase {
    /// Defaults sized for quick experiments: 25 customers over 120 epochs.
    pub fn desk(seed: u64) -> Self {
        SyntheticBase { customers: 25, vehicles: 3, capacity: 200.0, horizon: 120, service: 5, area: 50.0, seed }
    }
}

/// Random static instance in the style of the RC family: half of the
/// customers are clustered, half uniformly scattered, with wide time windows.
pub fn synthetic_base(spec: &SyntheticBase) -> Result<Instance, InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let side = spec.area;
    let depot = (side / 2.0, side / 2.0);
    let clusters: Vec<(f64, f64)> =
        (0..3).map(|_| (rng.gen_range(0.15..0.85) * side, rng.gen_range(0.15..0.85) * side)).collect();
    let mut coords = vec![depot];
    for c in 0..spec.customers {
        let p = if c % 2 == 0 {
            let (cx, cy) = clusters[rng.gen_range(0..clusters.len())];
            let spread = side * 0.08;
            (
                (cx + rng.gen_range(-2.0..2.0) * spread).clamp(0.0, side),
                (cy + rng.gen_range(-2.0..2.0) * spread).clamp(0.0, side),
            )
        } else {
            (rng.gen_range(0.0..side), rng.gen_range(0.0..side))
        };
        coords.push(p);
    }
    let travel = euclidean_travel(&coords);
    let size = coords.len();
    let h = spec.horizon;
    let mut windows = vec![TimeWindow::new(0, h)];
    let mut service = vec![0];
    let mut demand = vec![0.0];
    for v in 1..size {
        let d = spec.service.clamp(1, h);
        let out = travel[v];
        let back = travel[v * size];
        // service must start late enough to be reached and early enough to return
        let first = (crate::time::ceil_epoch(out) / TICKS_PER_EPOCH).max(1) as u32;
        let last_ticks = epoch_ticks(h) - back - epoch_ticks(d);
        let last = if last_ticks <= 0 { first } else { (last_ticks / TICKS_PER_EPOCH) as u32 };
        let last = last.max(first).min(h);
        let centre = rng.gen_range(first..=last);
        let half = (rng.gen_range(0.15..0.35) * f64::from(h)).round() as u32;
        let lo = centre.saturating_sub(half).max(first);
        let hi = (centre + half).min(last);
        windows.push(TimeWindow::new(lo, hi.max(lo)));
        service.push(d);
        demand.push(f64::from(rng.gen_range(5..=25u32)));
    }
    let requests = (1..size).map(|v| Request::new(v, 0, (v - 1) as u32)).collect();
    Instance::from_parts(InstanceParts {
        name: format!("syn{}-{}", spec.customers, spec.seed),
        horizon: h,
        coords,
        travel,
        demand,
        service,
        windows,
        vehicles: spec.vehicles,
        capacity: spec.capacity,
        probability: vec![],
        requests,
    })
}
