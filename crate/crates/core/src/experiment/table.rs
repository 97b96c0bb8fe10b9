use std::collections::{BTreeMap, BTreeSet};

use super::RunReport;

/// Group of an instance id: everything before its last `-`, so `rc101-3`
/// belongs to `rc101`. Ids without a `-` form their own group.
pub fn instance_group(id: &str) -> &str {
    id.rsplit_once('-').map_or(id, |(g, _)| g)
}

/// Rounds to one decimal, halves away from zero.
pub fn round1(x: f64) -> f64 {
    let scaled = x * 10.0;
    // absorb representation error such as 0.35 * 10 = 3.4999999999999996
    (scaled + 1e-9 * scaled.signum()).round() / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub runs: usize,
    pub failures: usize,
}

/// Mean rejections per `(instance, algorithm)`, with per-group `Avg` and
/// overall `AVG` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTable {
    pub instances: Vec<String>,
    pub algorithms: Vec<String>,
    cells: BTreeMap<(String, String), Cell>,
}

impl MeanTable {
    /// Table from precomputed cell means (one run each). Later duplicates
    /// replace earlier ones.
    pub fn from_cells<I, A>(cells: impl IntoIterator<Item = (I, A, f64)>) -> MeanTable
    where
        I: Into<String>,
        A: Into<String>,
    {
        let mut table = MeanTable { instances: vec![], algorithms: vec![], cells: BTreeMap::new() };
        for (i, a, mean) in cells {
            table.cells.insert((i.into(), a.into()), Cell { mean, runs: 1, failures: 0 });
        }
        table.index();
        table
    }

    fn index(&mut self) {
        let inst: BTreeSet<&String> = self.cells.keys().map(|(i, _)| i).collect();
        let alg: BTreeSet<&String> = self.cells.keys().map(|(_, a)| a).collect();
        self.instances = inst.into_iter().cloned().collect();
        self.algorithms = alg.into_iter().cloned().collect();
    }

    pub fn cell(&self, instance: &str, algorithm: &str) -> Option<Cell> {
        self.cells.get(&(instance.to_string(), algorithm.to_string())).copied()
    }

    /// Mean of the cell, `None` when no run succeeded.
    pub fn mean(&self, instance: &str, algorithm: &str) -> Option<f64> {
        self.cell(instance, algorithm).filter(|c| c.runs > 0).map(|c| c.mean)
    }

    /// `(instance, algorithm)` pairs without a successful run.
    pub fn missing(&self) -> Vec<(String, String)> {
        let mut out = vec![];
        for i in &self.instances {
            for a in &self.algorithms {
                if self.mean(i, a).is_none() {
                    out.push((i.clone(), a.clone()));
                }
            }
        }
        out
    }

    /// Groups in first-appearance order of the sorted instance ids.
    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = vec![];
        for i in &self.instances {
            let g = instance_group(i);
            if !out.iter().any(|x| x == g) {
                out.push(g.to_string());
            }
        }
        out
    }

    fn group_members(&self, group: &str) -> impl Iterator<Item = &String> + '_ {
        let group = group.to_string();
        self.instances.iter().filter(move |i| instance_group(i) == group)
    }

    /// Mean of the group's cells; `None` if any is missing.
    pub fn group_avg(&self, group: &str, algorithm: &str) -> Option<f64> {
        let values: Option<Vec<f64>> = self.group_members(group).map(|i| self.mean(i, algorithm)).collect();
        mean(&values?)
    }

    /// Mean of the group averages.
    pub fn grand_avg(&self, algorithm: &str) -> Option<f64> {
        let values: Option<Vec<f64>> = self.groups().iter().map(|g| self.group_avg(g, algorithm)).collect();
        mean(&values?)
    }

    /// Published-table view: group averages rounded to one decimal, and the
    /// overall average taken over those rounded values before rounding.
    pub fn rounded_group_avg(&self, group: &str, algorithm: &str) -> Option<f64> {
        self.group_avg(group, algorithm).map(round1)
    }

    pub fn rounded_grand_avg(&self, algorithm: &str) -> Option<f64> {
        let values: Option<Vec<f64>> = self.groups().iter().map(|g| self.rounded_group_avg(g, algorithm)).collect();
        mean(&values?).map(round1)
    }

    /// Rows: one per instance, an `Avg <group>` row after each group and a
    /// final `AVG` row. Missing values are empty fields.
    pub fn to_csv(&self, rounded: bool) -> String {
        let fmt = |v: Option<f64>| match v {
            None => String::new(),
            Some(x) if rounded => format!("{:.1}", round1(x)),
            Some(x) => x.to_string(),
        };
        let mut w = csv::Writer::from_writer(vec![]);
        let mut header = vec!["instance".to_string()];
        header.extend(self.algorithms.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for g in self.groups() {
            for i in self.group_members(&g) {
                let mut row = vec![i.clone()];
                row.extend(self.algorithms.iter().map(|a| fmt(self.mean(i, a))));
                w.write_record(&row).expect("in-memory write");
            }
            let mut row = vec![format!("Avg {g}")];
            row.extend(self.algorithms.iter().map(|a| fmt(self.group_avg(&g, a))));
            w.write_record(&row).expect("in-memory write");
        }
        let mut row = vec!["AVG".to_string()];
        row.extend(self.algorithms.iter().map(|a| {
            if rounded {
                fmt(self.rounded_grand_avg(a))
            } else {
                fmt(self.grand_avg(a))
            }
        }));
        w.write_record(&row).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Mean rejections over seeds per `(instance, algorithm)`. Failed runs are
/// counted but not averaged; a cell with no successful run is missing.
pub fn aggregate(reports: &[RunReport]) -> MeanTable {
    let mut sums: BTreeMap<(String, String), (u64, usize, usize)> = BTreeMap::new();
    for r in reports {
        let e = sums.entry((r.instance_id.clone(), r.algorithm_id.clone())).or_default();
        if r.succeeded() {
            e.0 += u64::from(r.rejections);
            e.1 += 1;
        } else {
            e.2 += 1;
        }
    }
    let cells = sums
        .into_iter()
        .map(|(k, (sum, runs, failures))| {
            let mean = if runs == 0 { f64::NAN } else { sum as f64 / runs as f64 };
            (k, Cell { mean, runs, failures })
        })
        .collect();
    let mut table = MeanTable { instances: vec![], algorithms: vec![], cells };
    table.index();
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::IterationStats;

    fn report(i: &str, a: &str, seed: u64, rejections: u32) -> RunReport {
        RunReport {
            instance_id: i.into(),
            algorithm_id: a.into(),
            seed,
            rejections,
            accepted: 0,
            revealed: rejections,
            iterations: IterationStats::default(),
            event_log_path: None,
            error: None,
        }
    }

    #[test]
    fn cell_means() {
        let t = aggregate(&[report("x-1", "A", 0, 2), report("x-1", "A", 1, 4), report("x-1", "B", 0, 7)]);
        assert_eq!(t.mean("x-1", "A"), Some(3.0));
        assert_eq!(t.mean("x-1", "B"), Some(7.0));
    }

    #[test]
    fn missing_cells_are_reported() {
        let mut failed = report("x-2", "B", 0, 0);
        failed.error = Some("boom".into());
        let t = aggregate(&[report("x-1", "A", 0, 1), report("x-2", "A", 0, 1), report("x-1", "B", 0, 1), failed]);
        assert_eq!(t.missing(), vec![("x-2".to_string(), "B".to_string())]);
        assert_eq!(t.cell("x-2", "B").unwrap().failures, 1);
        assert_eq!(t.group_avg("x", "B"), None);
        assert_eq!(t.grand_avg("A"), Some(1.0));
        assert!(t.to_csv(false).contains("x-2,1,\n"));
    }

    #[test]
    fn permutation_invariant() {
        let mut rs = vec![
            report("a-1", "A", 0, 2),
            report("a-1", "A", 1, 5),
            report("b-1", "A", 0, 1),
            report("b-1", "B", 0, 3),
            report("a-1", "B", 0, 0),
        ];
        let t1 = aggregate(&rs);
        rs.reverse();
        let t2 = aggregate(&rs);
        assert_eq!(t1, t2);
        assert_eq!(t1.to_csv(false), t2.to_csv(false));
    }

    #[test]
    fn groups_use_last_dash() {
        assert_eq!(instance_group("rc101-c1-s3"), "rc101-c1");
        assert_eq!(instance_group("plain"), "plain");
        let t = MeanTable::from_cells([("g-1", "A", 1.0), ("g-2", "A", 2.0), ("h-1", "A", 6.0)]);
        assert_eq!(t.groups(), vec!["g", "h"]);
        assert_eq!(t.group_avg("g", "A"), Some(1.5));
        assert_eq!(t.grand_avg("A"), Some(3.75));
    }

    #[test]
    fn rounding() {
        assert_eq!(round1(0.35), 0.4);
        assert_eq!(round1(1.16), 1.2);
        assert_eq!(round1(0.6333), 0.6);
        assert_eq!(round1(0.65), 0.7);
    }
}
