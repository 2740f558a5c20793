//! Run reports and their on-disk form: `report.json`, `summary.csv`,
//! `cdf_<policy>.csv` and `confusion_<classifier>.csv`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Scenario, ScenarioConfig};
use crate::error::Result;
use crate::learner::{ClassifierKind, FeatureMode};
use crate::metrics::ConfusionMatrix;
use crate::policy::PolicyKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: PolicyKind,
    pub mean_effective_throughput: f64,
    /// Mean divided by the optimal policy's mean in the same run.
    pub normalized_mean: f64,
    pub requests: u64,
    pub grants: u64,
    pub cdf: Vec<(f64, f64)>,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub partition: usize,
    pub learn_size: usize,
    pub exploit_size: usize,
    pub misclassified: u64,
    pub mu: f64,
    pub roc_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub kind: ClassifierKind,
    pub feature_mode: FeatureMode,
    pub confusion: ConfusionMatrix,
    pub misclassified: u64,
    pub mu: f64,
    /// Over the pooled exploitation scores; absent when one class is missing.
    pub roc_auc: Option<f64>,
    pub training_size: usize,
    pub exploit_size: usize,
    pub elevated_error: bool,
    pub partitions: Vec<PartitionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub threshold_sub6: f64,
    pub threshold_mmwave: f64,
    pub p_learning: f64,
    pub p_exploitation: f64,
    pub q_exploitation: f64,
    pub seed: u64,
    pub ue_count: usize,
    pub t_c_sub6: f64,
    pub t_c_mmwave: f64,
    pub policies: Vec<PolicyReport>,
    pub classifier: Option<ClassifierReport>,
}

impl RunReport {
    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicyReport> {
        self.policies.iter().find(|p| p.policy == kind)
    }

    pub fn normalized(&self, kind: PolicyKind) -> Option<f64> {
        self.policy(kind).map(|p| p.normalized_mean)
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    /// The config file exactly as given, if any.
    config_text: Option<&'a str>,
    effective_config: &'a ScenarioConfig,
    runs: &'a [RunReport],
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per policy per run; floats use Rust's shortest round-trip form.
pub fn summary_csv(runs: &[RunReport]) -> String {
    let mut out = String::from(
        "run,scenario,threshold_sub6,threshold_mmwave,p_learning,p_exploitation,q_exploitation,policy,\
         mean_effective_throughput,normalized_mean,requests,grants,classifier,feature_mode,misclassified,mu,roc_auc\n",
    );
    for (i, r) in runs.iter().enumerate() {
        for p in &r.policies {
            let (kind, mode, e, mu, auc) = match &r.classifier {
                Some(c) if p.policy == PolicyKind::Proposed => (
                    c.kind.to_string(),
                    c.feature_mode.to_string(),
                    c.misclassified.to_string(),
                    c.mu.to_string(),
                    opt(c.roc_auc),
                ),
                _ => Default::default(),
            };
            out.push_str(&format!(
                "{i},{},{},{},{},{},{},{},{},{},{},{},{kind},{mode},{e},{mu},{auc}\n",
                r.scenario,
                r.threshold_sub6,
                r.threshold_mmwave,
                r.p_learning,
                r.p_exploitation,
                r.q_exploitation,
                p.policy,
                p.mean_effective_throughput,
                p.normalized_mean,
                p.requests,
                p.grants,
            ));
        }
    }
    out
}

pub fn cdf_csv(p: &PolicyReport) -> String {
    let mut out = String::from("rate_bps,cdf\n");
    for (x, f) in &p.cdf {
        out.push_str(&format!("{x},{f}\n"));
    }
    out
}

pub fn confusion_csv(c: &ConfusionMatrix) -> String {
    format!(
        "true_class,predicted_0,predicted_1\n0,{},{}\n1,{},{}\n",
        c.counts[0][0], c.counts[0][1], c.counts[1][0], c.counts[1][1]
    )
}

fn write(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Writes every output file into `dir`. With several runs, the per-run CDF
/// and confusion files carry a `_<run>` suffix.
pub fn write_outputs(dir: &Path, config_text: Option<&str>, cfg: &ScenarioConfig, runs: &[RunReport]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = ReportFile { config_text, effective_config: cfg, runs };
    write(&dir.join("report.json"), &serde_json::to_string_pretty(&file)?)?;
    write(&dir.join("summary.csv"), &summary_csv(runs))?;
    let suffix = |i: usize| if runs.len() == 1 { String::new() } else { format!("_{i}") };
    for (i, r) in runs.iter().enumerate() {
        for p in &r.policies {
            write(&dir.join(format!("cdf_{}{}.csv", p.policy, suffix(i))), &cdf_csv(p))?;
        }
        if let Some(c) = &r.classifier {
            write(&dir.join(format!("confusion_{}{}.csv", c.kind, suffix(i))), &confusion_csv(&c.confusion))?;
        }
    }
    Ok(())
}
