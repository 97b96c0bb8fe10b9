use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::MeanTable;

/// `fraction` of the instances on which the algorithm is within `ratio`
/// of the best.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub ratio: f64,
    pub fraction: f64,
}

/// `value / best`, with `0/0 = 1` and `v/0 = +∞`.
pub fn profile_ratio(value: f64, best: f64) -> f64 {
    match (value == 0.0, best == 0.0) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        _ => value / best,
    }
}

/// Step curve per algorithm: one point per distinct ratio, the fraction of
/// instances at or below it. Curves reach 1, at `x = ∞` if some ratio is
/// infinite. Instances with a missing cell are left out.
pub fn performance_profile(table: &MeanTable) -> BTreeMap<String, Vec<ProfilePoint>> {
    let mut ratios: BTreeMap<&str, Vec<f64>> = table.algorithms.iter().map(|a| (a.as_str(), vec![])).collect();
    for i in &table.instances {
        let values: Option<Vec<f64>> = table.algorithms.iter().map(|a| table.mean(i, a)).collect();
        let Some(values) = values else {
            warn!("instance {i} has missing cells; left out of the profile");
            continue;
        };
        let best = values.iter().copied().fold(f64::INFINITY, f64::min);
        for (a, v) in table.algorithms.iter().zip(values) {
            ratios.get_mut(a.as_str()).expect("known algorithm").push(profile_ratio(v, best));
        }
    }
    ratios
        .into_iter()
        .map(|(a, mut r)| {
            r.sort_by(f64::total_cmp);
            let n = r.len() as f64;
            let mut points: Vec<ProfilePoint> = vec![];
            for (k, &ratio) in r.iter().enumerate() {
                let fraction = (k + 1) as f64 / n;
                match points.last_mut() {
                    Some(p) if p.ratio == ratio => p.fraction = fraction,
                    _ => points.push(ProfilePoint { ratio, fraction }),
                }
            }
            (a.to_string(), points)
        })
        .collect()
}

/// `algorithm,ratio,fraction` rows; infinite ratios print as `inf`.
pub fn profile_csv(profile: &BTreeMap<String, Vec<ProfilePoint>>) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["algorithm", "ratio", "fraction"]).expect("in-memory write");
    for (a, points) in profile {
        for p in points {
            w.write_record([a.clone(), p.ratio.to_string(), p.fraction.to_string()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
