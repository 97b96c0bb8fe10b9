//! Self-contained text format for dynamic instances.
//!
//! ```text
//! [STATIC]
//! name rc101-c6-s1
//! horizon 480
//! vehicles 25
//! capacity 200
//! vertices 101
//! coords 1
//! # id x y demand ready due service
//! 0 40 50 0 0 480 0
//! ...
//! travel
//! 0.0 12.4 ...            (one row per vertex)
//! [REVEALS]
//! # vertex epoch arrival
//! 17 0 0
//! [PROBABILITY]
//! # start end vertex per_epoch
//! 1 160 17 0.001875
//! ```

use std::fmt::Write as _;

use super::{Instance, InstanceError, InstanceParts, ProbabilitySlice, Request, TimeWindow};
use crate::time::{round_to_ticks, Ticks, TICKS_PER_EPOCH};

fn fmt_ticks(t: Ticks) -> String {
    format!("{}.{}", t / TICKS_PER_EPOCH, (t % TICKS_PER_EPOCH).abs())
}

pub fn write_dynamic_instance(instance: &Instance) -> String {
    let p = instance.parts();
    let size = instance.vertex_count();
    let mut out = String::new();
    let has_coords = !p.coords.is_empty();
    let _ = writeln!(out, "[STATIC]");
    let _ = writeln!(out, "name {}", p.name);
    let _ = writeln!(out, "horizon {}", p.horizon);
    let _ = writeln!(out, "vehicles {}", p.vehicles);
    let _ = writeln!(out, "capacity {}", p.capacity);
    let _ = writeln!(out, "vertices {size}");
    let _ = writeln!(out, "coords {}", u8::from(has_coords));
    let _ = writeln!(out, "# id x y demand ready due service");
    for v in 0..size {
        let (x, y) = if has_coords { p.coords[v] } else { (0.0, 0.0) };
        let w = p.windows[v];
        let _ = writeln!(out, "{v} {x} {y} {} {} {} {}", p.demand[v], w.earliest, w.latest, p.service[v]);
    }
    let _ = writeln!(out, "travel");
    for i in 0..size {
        let row: Vec<String> = (0..size).map(|j| fmt_ticks(p.travel[i * size + j])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    let _ = writeln!(out, "[REVEALS]");
    let _ = writeln!(out, "# vertex epoch arrival");
    for r in instance.requests() {
        let _ = writeln!(out, "{} {} {}", r.vertex, r.reveal_epoch, r.arrival_index);
    }
    let _ = writeln!(out, "[PROBABILITY]");
    let _ = writeln!(out, "# start end vertex per_epoch");
    for s in &p.probability {
        let _ = writeln!(out, "{} {} {} {}", s.start, s.end, s.vertex, s.per_epoch);
    }
    out
}

#[derive(PartialEq)]
enum Section {
    None,
    Static,
    Travel,
    Reveals,
    Probability,
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, InstanceError> {
    tok.parse::<T>().map_err(|_| InstanceError::Parse { line, message: format!("bad number {tok:?}") })
}

pub fn read_dynamic_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut section = Section::None;
    let mut parts = InstanceParts {
        name: String::new(),
        horizon: 0,
        coords: vec![],
        travel: vec![],
        demand: vec![],
        service: vec![],
        windows: vec![],
        vehicles: 0,
        capacity: 0.0,
        probability: vec![],
        requests: vec![],
    };
    let mut size: Option<usize> = None;
    let mut has_coords = true;
    let mut seen = Vec::<bool>::new();
    let mut travel_rows = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match trimmed {
            "[STATIC]" => {
                section = Section::Static;
                continue;
            }
            "[REVEALS]" => {
                section = Section::Reveals;
                continue;
            }
            "[PROBABILITY]" => {
                section = Section::Probability;
                continue;
            }
            "travel" if section == Section::Static => {
                section = Section::Travel;
                continue;
            }
            _ => {}
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match section {
            Section::None => {
                return Err(InstanceError::Parse { line, message: "content before [STATIC]".into() });
            }
            Section::Static => match tokens[0] {
                "name" => parts.name = trimmed["name".len()..].trim().to_string(),
                "horizon" if tokens.len() == 2 => parts.horizon = num(tokens[1], line)?,
                "vehicles" if tokens.len() == 2 => parts.vehicles = num(tokens[1], line)?,
                "capacity" if tokens.len() == 2 => parts.capacity = num(tokens[1], line)?,
                "coords" if tokens.len() == 2 => has_coords = tokens[1] == "1",
                "vertices" if tokens.len() == 2 => {
                    let n: usize = num(tokens[1], line)?;
                    size = Some(n);
                    parts.coords = vec![(0.0, 0.0); n];
                    parts.demand = vec![0.0; n];
                    parts.service = vec![0; n];
                    parts.windows = vec![TimeWindow::new(0, 0); n];
                    seen = vec![false; n];
                }
                _ if tokens.len() == 7 => {
                    let n = size.ok_or(InstanceError::Parse { line, message: "vertex record before 'vertices'".into() })?;
                    let id: usize = num(tokens[0], line)?;
                    if id >= n {
                        return Err(InstanceError::Parse { line, message: format!("vertex id {id} out of range") });
                    }
                    if seen[id] {
                        return Err(InstanceError::DuplicateVertex(id));
                    }
                    seen[id] = true;
                    parts.coords[id] = (num(tokens[1], line)?, num(tokens[2], line)?);
                    parts.demand[id] = num(tokens[3], line)?;
                    parts.windows[id] = TimeWindow::new(num(tokens[4], line)?, num(tokens[5], line)?);
                    parts.service[id] = num(tokens[6], line)?;
                }
                _ => return Err(InstanceError::Parse { line, message: format!("unrecognised line {trimmed:?}") }),
            },
            Section::Travel => {
                let n = size.ok_or(InstanceError::Parse { line, message: "travel before 'vertices'".into() })?;
                if tokens.len() != n || travel_rows >= n {
                    return Err(InstanceError::Parse { line, message: "travel matrix has wrong shape".into() });
                }
                for tok in tokens {
                    parts.travel.push(round_to_ticks(num::<f64>(tok, line)?));
                }
                travel_rows += 1;
            }
            Section::Reveals => {
                if tokens.len() != 3 {
                    return Err(InstanceError::Parse { line, message: "expected 'vertex epoch arrival'".into() });
                }
                parts.requests.push(Request::new(num(tokens[0], line)?, num(tokens[1], line)?, num(tokens[2], line)?));
            }
            Section::Probability => {
                if tokens.len() != 4 {
                    return Err(InstanceError::Parse { line, message: "expected 'start end vertex p'".into() });
                }
                parts.probability.push(ProbabilitySlice {
                    start: num(tokens[0], line)?,
                    end: num(tokens[1], line)?,
                    vertex: num(tokens[2], line)?,
                    per_epoch: num(tokens[3], line)?,
                });
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(InstanceError::Invalid(format!("vertex {missing} has no record")));
    }
    if !has_coords {
        parts.coords.clear();
    }
    Instance::from_parts(parts)
}
