//! Campaigns of runs, mean-rejection tables, performance profiles and the
//! nonanticipation demonstration.

mod campaign;
mod fig1;
mod profile;
mod report;
mod table;

pub use campaign::{
    campaign_hash, load_reports, run_campaign, CampaignError, CampaignSummary, GenerateSpec, InstanceEntry, Manifest,
    Overrides, RunEntry, RunSpec,
};
pub use fig1::{fig1_demo, fig1_limits, fig1_scenarios, Fig1Demo};
pub use profile::{performance_profile, profile_csv, profile_ratio, ProfilePoint};
pub use report::{IterationStats, RunReport};
pub use table::{aggregate, instance_group, round1, Cell, MeanTable};
