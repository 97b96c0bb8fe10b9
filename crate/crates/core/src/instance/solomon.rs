use super::{euclidean_travel, Instance, InstanceError, InstanceParts, Request, TimeWindow};

struct Record {
    line: usize,
    id: usize,
    x: f64,
    y: f64,
    demand: f64,
    ready: f64,
    due: f64,
    service: f64,
}

/// Parses a Solomon-style VRPTW file.
///
/// Lines whose first token is not numeric (titles, column headings) are
/// skipped. The first all-numeric line with two fields is the
/// `vehicles capacity` header; every other numeric line must hold the seven
/// columns `id x y demand ready due service`. The horizon is the depot due
/// date, every customer becomes a deterministic request and `P` is zero.
pub fn parse_static_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut header: Option<(usize, f64)> = None;
    let mut records: Vec<Record> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(first) = tokens.first() else { continue };
        if first.parse::<f64>().is_err() {
            continue;
        }
        let mut values = Vec::with_capacity(tokens.len());
        for tok in &tokens {
            let v = tok.parse::<f64>().map_err(|_| InstanceError::Parse {
                line,
                message: format!("non-numeric field {tok:?}"),
            })?;
            values.push(v);
        }
        match values.len() {
            2 if header.is_none() && records.is_empty() => {
                if values[0] < 1.0 || values[0].fract() != 0.0 {
                    return Err(InstanceError::Parse { line, message: "vehicle count must be a positive integer".into() });
                }
                header = Some((values[0] as usize, values[1]));
            }
            7 => {
                if values[0] < 0.0 || values[0].fract() != 0.0 {
                    return Err(InstanceError::Parse { line, message: "vertex id must be a nonnegative integer".into() });
                }
                records.push(Record {
                    line,
                    id: values[0] as usize,
                    x: values[1],
                    y: values[2],
                    demand: values[3],
                    ready: values[4],
                    due: values[5],
                    service: values[6],
                });
            }
            n => {
                return Err(InstanceError::Parse { line, message: format!("expected 7 fields, found {n}") });
            }
        }
    }
    let (vehicles, capacity) = header.ok_or(InstanceError::Parse {
        line: 0,
        message: "missing vehicle count / capacity header".into(),
    })?;
    if records.is_empty() {
        return Err(InstanceError::Parse { line: 0, message: "no vertex records".into() });
    }

    let size = records.len();
    let mut slots: Vec<Option<&Record>> = vec![None; size];
    for r in &records {
        if r.id >= size {
            return Err(InstanceError::Parse { line: r.line, message: format!("vertex id {} out of range", r.id) });
        }
        if slots[r.id].is_some() {
            return Err(InstanceError::DuplicateVertex(r.id));
        }
        slots[r.id] = Some(r);
    }
    let recs: Vec<&Record> = slots.into_iter().map(|s| s.expect("ids are a permutation")).collect();

    let horizon = recs[0].due.floor() as u32;
    let coords: Vec<(f64, f64)> = recs.iter().map(|r| (r.x, r.y)).collect();
    let windows = recs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let lo = if i == 0 { r.ready.max(0.0) } else { r.ready.max(1.0) };
            let hi = r.due.min(horizon as f64);
            TimeWindow::new(lo.ceil() as u32, hi.floor() as u32)
        })
        .collect();
    let service = recs
        .iter()
        .enumerate()
        .map(|(i, r)| if i == 0 { 0 } else { (r.service.ceil() as u32).max(1) })
        .collect();
    let requests = (1..size).map(|v| Request::new(v, 0, (v - 1) as u32)).collect();
    let name = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .filter(|l| l.split_whitespace().next().is_some_and(|t| t.parse::<f64>().is_err()))
        .unwrap_or("static")
        .to_string();

    Instance::from_parts(InstanceParts {
        name,
        horizon,
        travel: euclidean_travel(&coords),
        coords,
        demand: recs.iter().map(|r| r.demand).collect(),
        service,
        windows,
        vehicles,
        capacity,
        probability: vec![],
        requests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "\
TINY
VEHICLE
NUMBER     CAPACITY
  2         50

CUSTOMER
CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME
    0      0          0          0          0        100          0
    1      3          4          7          5          5           1
";

    #[test]
    fn three_four_five_triangle() {
        let inst = parse_static_instance(TINY).unwrap();
        assert_eq!(inst.travel_time(0, 1), 5.0);
        assert_eq!(inst.travel_time(1, 0), 5.0);
        assert_eq!(inst.customer_count(), 1);
        assert_eq!(inst.vehicles(), 2);
        assert_eq!(inst.capacity(), 50.0);
        assert_eq!(inst.horizon(), 100);
        assert_eq!(inst.name(), "TINY");
    }

    #[test]
    fn window_passthrough_and_deterministic_requests() {
        let inst = parse_static_instance(TINY).unwrap();
        assert_eq!(inst.window(1), TimeWindow::new(5, 5));
        assert_eq!(inst.service(1), 1);
        assert_eq!(inst.requests(), &[Request::new(1, 0, 0)]);
        assert_eq!(inst.reveal_probability(3, 1), 0.0);
    }

    #[test]
    fn malformed_record_reports_line() {
        let bad = TINY.replace("    1      3          4          7          5          5           1", "    1      3          4          7");
        match parse_static_instance(&bad) {
            Err(InstanceError::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("unexpected {other:?}"),
        }
        let bad = TINY.replace("7          5          5", "7          x          5");
        assert!(matches!(parse_static_instance(&bad), Err(InstanceError::Parse { line: 9, .. })));
    }

    #[test]
    fn duplicate_vertex_is_rejected() {
        let dup = format!("{TINY}    1      1          1          1          5          9           1\n");
        assert_eq!(parse_static_instance(&dup).unwrap_err(), InstanceError::DuplicateVertex(1));
    }

    #[test]
    fn missing_header() {
        let text = "    0      0          0          0          0        100          0\n";
        assert!(matches!(parse_static_instance(text), Err(InstanceError::Parse { .. })));
    }

    #[test]
    fn irrational_distances_are_truncated() {
        let text = "X\n1 10\n0 0 0 0 0 50 0\n1 1 1 1 1 40 1\n";
        let inst = parse_static_instance(text).unwrap();
        assert_eq!(inst.travel_ticks(0, 1), 14);
    }
}
