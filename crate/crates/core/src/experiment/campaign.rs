use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{aggregate, performance_profile, profile_csv, RunReport};
use crate::controller::{run_online, ClockMode, ControllerConfig};
use crate::instance::{
    generate_dynamic_instance, parse_static_instance, read_dynamic_instance, synthetic_base, write_dynamic_instance,
    ClassProfile, GeneratorOptions, Instance, InstanceError, SyntheticBase,
};

/// Experiment manifest, written as TOML:
///
/// ```toml
/// [[instances]]
/// id = "desk1-c6"
/// [instances.generate]
/// class = 6
/// seed = 1000
/// base_seed = 1
///
/// [[runs]]
/// algorithm = "GSA-df"
/// seeds = [0, 1, 2]
/// [runs.overrides]
/// epoch_budget = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub instances: Vec<InstanceEntry>,
    pub runs: Vec<RunEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceEntry {
    pub id: String,
    /// Dynamic instance file, relative to the manifest.
    pub file: Option<PathBuf>,
    pub generate: Option<GenerateSpec>,
}

/// A generated class instance over a static base: a Solomon file if
/// `base_file` is given, a synthetic base otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub class: u8,
    pub seed: u64,
    #[serde(default)]
    pub base_seed: u64,
    pub base_file: Option<PathBuf>,
    pub customers: Option<usize>,
    pub vehicles: Option<usize>,
    /// Horizon of the generated instance; 120 for synthetic bases, 480
    /// for Solomon files unless given.
    pub horizon: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub algorithm: String,
    pub seeds: Vec<u64>,
    /// Subset of instance ids; all instances when absent.
    pub instances: Option<Vec<String>>,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub pool_size: Option<usize>,
    pub resample_period: Option<usize>,
    pub insertion_budget: Option<usize>,
    pub offline_budget: Option<usize>,
    pub epoch_budget: Option<usize>,
    pub clock: Option<ClockMode>,
    pub temperature: Option<f64>,
    pub cooling_rate: Option<f64>,
    pub expectation_candidates: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ControllerConfig) {
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { config.$field = v; })* };
        }
        set!(pool_size, resample_period, insertion_budget, offline_budget, epoch_budget, clock, expectation_candidates);
        if let Some(t) = self.temperature {
            config.annealing.temperature = t;
        }
        if let Some(c) = self.cooling_rate {
            config.annealing.cooling_rate = c;
        }
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("instance {id}: {source}")]
    Instance { id: String, source: InstanceError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io { path: path.to_path_buf(), source }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, CampaignError> {
        let m: Manifest = toml::from_str(text).map_err(|e| CampaignError::Manifest(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Manifest(m));
        let mut ids = std::collections::BTreeSet::new();
        for i in &self.instances {
            if !ids.insert(&i.id) {
                return bad(format!("duplicate instance id {:?}", i.id));
            }
            if i.id.is_empty() || !i.id.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c)) {
                return bad(format!("instance id {:?} must be non-empty and use only [A-Za-z0-9._-]", i.id));
            }
            if i.file.is_some() == i.generate.is_some() {
                return bad(format!("instance {:?} needs exactly one of file or generate", i.id));
            }
        }
        for r in &self.runs {
            let mut cfg = ControllerConfig::for_algorithm(&r.algorithm).map_err(|e| CampaignError::Manifest(e.to_string()))?;
            r.overrides.apply(&mut cfg);
            cfg.validate().map_err(|e| CampaignError::Manifest(format!("{}: {e}", r.algorithm)))?;
            for id in r.instances.iter().flatten() {
                if !ids.contains(id) {
                    return bad(format!("run {} names unknown instance {id:?}", r.algorithm));
                }
            }
        }
        Ok(())
    }

    /// Loads or generates every instance; relative paths are resolved
    /// against `base_dir`.
    pub fn resolve_instances(&self, base_dir: &Path) -> Result<Vec<(String, Instance)>, CampaignError> {
        self.instances
            .iter()
            .map(|entry| {
                let wrap = |source| CampaignError::Instance { id: entry.id.clone(), source };
                let inst = match (&entry.file, &entry.generate) {
                    (Some(file), _) => {
                        let path = base_dir.join(file);
                        read_dynamic_instance(&fs::read_to_string(&path).map_err(io(&path))?).map_err(wrap)?
                    }
                    (None, Some(g)) => g.build(base_dir).map_err(|e| match e {
                        CampaignError::Instance { source, .. } => wrap(source),
                        other => other,
                    })?,
                    (None, None) => unreachable!("checked at parse time"),
                };
                Ok((entry.id.clone(), inst))
            })
            .collect()
    }
}

impl GenerateSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Instance, CampaignError> {
        let wrap = |source| CampaignError::Instance { id: String::new(), source };
        let (base, default_horizon) = match &self.base_file {
            Some(file) => {
                let path = base_dir.join(file);
                (parse_static_instance(&fs::read_to_string(&path).map_err(io(&path))?).map_err(wrap)?, 480)
            }
            None => {
                let mut spec = SyntheticBase::desk(self.base_seed);
                if let Some(c) = self.customers {
                    spec.customers = c;
                }
                if let Some(v) = self.vehicles {
                    spec.vehicles = v;
                }
                (synthetic_base(&spec).map_err(wrap)?, spec.horizon)
            }
        };
        let profile = ClassProfile::for_class(self.class).map_err(wrap)?;
        let options = GeneratorOptions { horizon: self.horizon.unwrap_or(default_horizon) };
        generate_dynamic_instance(&base, &profile, self.seed, options).map_err(wrap)
    }
}

/// One planned run of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub instance: usize,
    pub config: ControllerConfig,
}

/// Where a finished campaign lives and what it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub dir: PathBuf,
    pub reports: Vec<RunReport>,
    /// Runs executed now; the rest were found on disk.
    pub executed: usize,
    pub missing_cells: Vec<(String, String)>,
}

fn run_stem(instance_id: &str, config: &ControllerConfig) -> String {
    format!("{instance_id}__{}__s{}", config.algorithm_id(), config.seed)
}

/// Directory name from the manifest and the instances it resolves to, so
/// that editing an instance file changes the campaign.
pub fn campaign_hash(manifest: &Manifest, instances: &[(String, Instance)]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(manifest).expect("manifest serializes"));
    for (id, inst) in instances {
        h.update(id.as_bytes());
        h.update(write_dynamic_instance(inst));
    }
    hex::encode(h.finalize())[..16].to_string()
}

/// Runs every `(instance, algorithm, seed)` of the manifest under
/// `out_root/campaign-<hash>`, at most `parallelism` at a time. Runs with a
/// report on disk are not repeated; tables and profiles are rebuilt from
/// all reports. A failing run is recorded in its report.
pub fn run_campaign(
    manifest: &Manifest,
    base_dir: &Path,
    out_root: &Path,
    parallelism: usize,
) -> Result<CampaignSummary, CampaignError> {
    let instances = manifest.resolve_instances(base_dir)?;
    let dir = out_root.join(format!("campaign-{}", campaign_hash(manifest, &instances)));
    for sub in ["instances", "reports", "events"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io(&p))?;
    }
    let p = dir.join("manifest.toml");
    write(&p, &toml::to_string(manifest).expect("manifest serializes"))?;
    for (id, inst) in &instances {
        write(&dir.join("instances").join(format!("{id}.dsvrp")), &write_dynamic_instance(inst))?;
    }

    let index: BTreeMap<&str, usize> = instances.iter().enumerate().map(|(k, (id, _))| (id.as_str(), k)).collect();
    let mut specs = vec![];
    for r in &manifest.runs {
        let mut base = ControllerConfig::for_algorithm(&r.algorithm).map_err(|e| CampaignError::Manifest(e.to_string()))?;
        r.overrides.apply(&mut base);
        let ids: Vec<usize> = match &r.instances {
            Some(ids) => ids.iter().map(|id| index[id.as_str()]).collect(),
            None => (0..instances.len()).collect(),
        };
        for &instance in &ids {
            for &seed in &r.seeds {
                specs.push(RunSpec { instance, config: ControllerConfig { seed, ..base.clone() } });
            }
        }
    }

    let mut reports = vec![];
    let mut todo = vec![];
    for spec in specs {
        let id = &instances[spec.instance].0;
        let path = dir.join("reports").join(format!("{}.json", run_stem(id, &spec.config)));
        match fs::read_to_string(&path).ok().and_then(|t| serde_json::from_str::<RunReport>(&t).ok()) {
            Some(r) if r.succeeded() => reports.push(r),
            _ => todo.push(spec),
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| CampaignError::Manifest(format!("thread pool: {e}")))?;
    let results: Vec<(RunReport, Option<String>)> = pool.install(|| {
        todo.par_iter()
            .map(|spec| {
                let (id, inst) = &instances[spec.instance];
                match run_online(inst, &spec.config) {
                    Ok(out) => (RunReport::from_output(id, &spec.config, &out), Some(out.events_jsonl())),
                    Err(e) => (RunReport::failed(id, &spec.config, e), None),
                }
            })
            .collect()
    });
    let executed = results.len();
    for (mut report, events) in results {
        let stem = format!("{}__{}__s{}", report.instance_id, report.algorithm_id, report.seed);
        if let Some(events) = events {
            let rel = format!("events/{stem}.jsonl");
            write(&dir.join(&rel), &events)?;
            report.event_log_path = Some(rel);
        }
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write(&dir.join("reports").join(format!("{stem}.json")), &(json + "\n"))?;
        reports.push(report);
    }
    reports.sort_by(|a, b| (&a.instance_id, &a.algorithm_id, a.seed).cmp(&(&b.instance_id, &b.algorithm_id, b.seed)));

    let table = aggregate(&reports);
    write(&dir.join("table.csv"), &table.to_csv(false))?;
    write(&dir.join("table_rounded.csv"), &table.to_csv(true))?;
    write(&dir.join("profile.csv"), &profile_csv(&performance_profile(&table)))?;
    Ok(CampaignSummary { dir, reports, executed, missing_cells: table.missing() })
}

/// All reports in a campaign's `reports/` directory, in file-name order.
pub fn load_reports(dir: &Path) -> Result<Vec<RunReport>, CampaignError> {
    let reports_dir = dir.join("reports");
    let mut paths: Vec<PathBuf> = fs::read_dir(&reports_dir)
        .map_err(io(&reports_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io(p))?;
            serde_json::from_str(&text).map_err(|e| CampaignError::Manifest(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<(), CampaignError> {
    fs::write(path, contents).map_err(io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[[instances]]
id = "tiny-1"
[instances.generate]
class = 6
seed = 3
base_seed = 2
customers = 6
vehicles = 2
horizon = 30

[[runs]]
algorithm = "GLS-df"
seeds = [0, 1]
[runs.overrides]
epoch_budget = 10
offline_budget = 10
"#;

    #[test]
    fn manifest_errors() {
        assert!(Manifest::parse("runs = []\ninstances = [{ id = \"a\" }]").is_err());
        assert!(Manifest::parse("runs = [{ algorithm = \"MSA\", seeds = [0] }]\ninstances = []").is_err());
        assert!(Manifest::parse("runs = []\ninstances = []\nextra = 1").is_err());
        let m = Manifest::parse(SMALL).unwrap();
        assert_eq!(m.runs[0].overrides.epoch_budget, Some(10));
    }

    #[test]
    fn campaign_is_idempotent() {
        let tmp = tempfile::tempdir().unwrap();
        let m = Manifest::parse(SMALL).unwrap();
        let first = run_campaign(&m, tmp.path(), tmp.path(), 2).unwrap();
        assert_eq!((first.reports.len(), first.executed), (2, 2));
        let table = fs::read_to_string(first.dir.join("table.csv")).unwrap();
        let second = run_campaign(&m, tmp.path(), tmp.path(), 2).unwrap();
        assert_eq!(second.executed, 0);
        assert_eq!(second.dir, first.dir);
        assert_eq!(fs::read_to_string(second.dir.join("table.csv")).unwrap(), table);
        assert_eq!(load_reports(&first.dir).unwrap(), first.reports);
        assert!(first.dir.join("events/tiny-1__GLS-df__s0.jsonl").exists());
    }
}
