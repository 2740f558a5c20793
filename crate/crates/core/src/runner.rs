//! Scenario orchestration: link rates, framing, per-partition learning and
//! exploitation, and sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{achievable_rate, best_beam, search_codebook, snr, Band, BandConfig};
use crate::config::{ScenarioConfig, ELEVATED_ERROR};
use crate::dataset::{BlockageModel, ChannelSource, SyntheticSceneConfig};
use crate::error::{Error, Result};
use crate::framing::{
    beamwidth_rad, coherence_time_mmwave, coherence_time_sub6, kmh_to_mps, FrameSchedule, MobilityConfig,
};
use crate::learner::{
    assemble_features, gbt_grid, mlp_grid, split_learn_exploit, stratified_partition, train_gbt, train_mlp,
    ClassifierKind, FeatureRow, Phase, TrainedModel, TrainingContext,
};
use crate::metrics::{misclassification, roc_auc, throughput_stats, ConfusionMatrix};
use crate::policy::{apply_proposed, decide, PolicyKind, UserRecord};
use crate::report::{ClassifierReport, PartitionReport, PolicyReport, RunReport};
use crate::seed;

/// Achievable rates of one UE on each band, with the mmWave rate for both
/// blockage states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeLink {
    pub ue_id: u64,
    pub coords: [f64; 3],
    pub rate_sub6: f64,
    pub rate_mm_nb: f64,
    pub rate_mm_b: f64,
}

impl UeLink {
    pub fn rate_mmwave(&self, blocked: bool) -> f64 {
        if blocked {
            self.rate_mm_b
        } else {
            self.rate_mm_nb
        }
    }
}

/// Best-beam rates for the UEs at `indices` of `source`, computed in parallel.
pub fn link_rates<S: ChannelSource + ?Sized>(
    source: &S,
    indices: &[usize],
    sub6: &BandConfig,
    mmwave: &BandConfig,
) -> Result<Vec<UeLink>> {
    let cb_sub6 = search_codebook(sub6)?;
    let cb_mm = search_codebook(mmwave)?;
    indices
        .par_iter()
        .map(|&i| {
            let s = source.sample(i);
            let rate = |band: &BandConfig, cb, h| -> Result<f64> {
                let (_, gain) = best_beam(h, cb)?;
                Ok(achievable_rate(band, snr(band, gain)))
            };
            Ok(UeLink {
                ue_id: s.ue_id,
                coords: s.coords,
                rate_sub6: rate(sub6, &cb_sub6, &s.h_sub6)?,
                rate_mm_nb: rate(mmwave, &cb_mm, &s.h_mm_nb)?,
                rate_mm_b: rate(mmwave, &cb_mm, &s.h_mm_b)?,
            })
        })
        .collect()
}

/// Everything a run needs that does not depend on thresholds or blockage.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub links: Vec<UeLink>,
    pub schedule: FrameSchedule,
    /// Serving band of each UE before any decision.
    pub initial_band: Vec<Band>,
}

/// Frame timing from the UE population: 1st-percentile coherence times over
/// per-UE travel directions and BS distances.
pub fn frame_schedule(
    cfg: &ScenarioConfig,
    links: &[UeLink],
    bs_position: [f64; 3],
    sub6: &BandConfig,
    mmwave: &BandConfig,
) -> Result<FrameSchedule> {
    let speed = kmh_to_mps(cfg.speed_kmh);
    let alphas = MobilityConfig { speed_mps: speed, rng_seed: cfg.seed }.sample_alphas(links.len())?;
    let distances: Vec<f64> = links
        .iter()
        .map(|l| l.coords.iter().zip(&bs_position).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    let schedule = FrameSchedule {
        t_c_sub6: coherence_time_sub6(sub6.center_frequency_hz, speed, &alphas)?,
        t_c_mmwave: coherence_time_mmwave(&distances, speed, &alphas, beamwidth_rad(mmwave.antennas_y))?,
        t_beam: cfg.t_beam,
        codebook_size_sub6: sub6.codebook_size,
        codebook_size_mmwave: mmwave.codebook_size,
        gap_fraction: cfg.rho,
        signaling_overhead: cfg.beta,
        slots_per_frame: 2,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Rates, framing and initial band assignment for a run. `scale` below the
/// source size keeps a seeded subset of UEs. Without a known BS position the
/// synthetic scene's default is assumed.
pub fn prepare<S: ChannelSource + ?Sized>(
    cfg: &ScenarioConfig,
    source: &S,
    bs_position: Option<[f64; 3]>,
) -> Result<Prepared> {
    cfg.validate()?;
    let (sub6, mmwave) = cfg.bands();
    let n = source.len();
    let want = cfg.ue_count().min(n);
    let indices: Vec<usize> = if want < n {
        let mut rng = seed::rng(cfg.seed, 0, "subsample");
        let mut v = rand::seq::index::sample(&mut rng, n, want).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..n).collect()
    };
    if indices.len() < cfg.t_simulation {
        return Err(Error::InsufficientData(format!(
            "{} UEs cannot fill {} partitions",
            indices.len(),
            cfg.t_simulation
        )));
    }
    let links = link_rates(source, &indices, &sub6, &mmwave)?;
    let bs = bs_position.unwrap_or(SyntheticSceneConfig::default().bs_position);
    let schedule = frame_schedule(cfg, &links, bs, &sub6, &mmwave)?;
    let frac = cfg.initial_sub6_fraction();
    let key = seed::derive(cfg.seed, 0, "initial-band");
    let initial_band =
        links.iter().map(|l| if seed::unit_uniform(key, l.ue_id) < frac { Band::Sub6 } else { Band::MmWave }).collect();
    Ok(Prepared { links, schedule, initial_band })
}

/// Exploitation-side settings that can change without retraining: the
/// classifier only sees learning data at `p_learning` with `x7 = 1`, so the
/// thresholds and the exploitation blockage are free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub threshold_sub6: f64,
    pub threshold_mmwave: f64,
    pub p_exploitation: f64,
}

impl Variant {
    pub fn base(cfg: &ScenarioConfig) -> Self {
        Self {
            threshold_sub6: cfg.threshold_sub6,
            threshold_mmwave: cfg.threshold_mmwave,
            p_exploitation: cfg.p_learning,
        }
    }
}

fn record(prep: &Prepared, i: usize, t: usize, blockage: &BlockageModel, thr: (f64, f64)) -> UserRecord {
    let l = &prep.links[i];
    UserRecord::new(
        l.ue_id,
        t,
        prep.initial_band[i],
        l.rate_sub6,
        l.rate_mmwave(blockage.is_blocked(l.ue_id)),
        thr.0,
        thr.1,
        l.coords,
    )
}

struct Accumulator {
    samples: Vec<Vec<f64>>,
    requests: Vec<u64>,
    grants: Vec<u64>,
    confusion: ConfusionMatrix,
    scores: Vec<f64>,
    truth: Vec<bool>,
    partitions: Vec<PartitionReport>,
}

impl Accumulator {
    fn new() -> Self {
        let n = PolicyKind::ALL.len();
        Self {
            samples: vec![Vec::new(); n],
            requests: vec![0; n],
            grants: vec![0; n],
            confusion: ConfusionMatrix::default(),
            scores: Vec::new(),
            truth: Vec::new(),
            partitions: Vec::new(),
        }
    }
}

fn policy_slot(kind: PolicyKind) -> usize {
    PolicyKind::ALL.iter().position(|&k| k == kind).unwrap()
}

fn train(cfg: &ScenarioConfig, rows: &[FeatureRow], t: usize) -> Result<TrainedModel> {
    let ctx = TrainingContext { feature_mode: cfg.feature_mode, partition_id: t, folds: cfg.folds, seed: cfg.seed };
    let partition_seed = seed::derive(cfg.seed, t as u64, "model-init");
    match cfg.classifier {
        ClassifierKind::Mlp => {
            let base = crate::learner::MlpHyperparams { seed: partition_seed, ..cfg.mlp_base() };
            train_mlp(rows, &mlp_grid(&base), ctx)
        }
        ClassifierKind::Gbt => {
            let base = crate::learner::GbtHyperparams { seed: partition_seed, ..cfg.gbt_base() };
            train_gbt(rows, &gbt_grid(&base), ctx)
        }
    }
}

/// Algorithm loop over partitions for one learn/exploit split, evaluating
/// every variant against the same per-partition classifier.
pub fn run_variants(
    cfg: &ScenarioConfig,
    prep: &Prepared,
    variants: &[Variant],
    policies: &[PolicyKind],
) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    for v in variants {
        BlockageModel::new(v.p_exploitation, cfg.seed)?;
    }
    let schedule = &prep.schedule;
    let learn_blockage = BlockageModel::new(cfg.p_learning, cfg.seed)?;
    let base_thr = (cfg.threshold_sub6, cfg.threshold_mmwave);
    let labels: Vec<bool> =
        (0..prep.links.len()).map(|i| record(prep, i, 0, &learn_blockage, base_thr).true_grant()).collect();
    let partitions = stratified_partition(&labels, cfg.t_simulation, &mut seed::rng(cfg.seed, 0, "partition"))?;
    let with_classifier = policies.contains(&PolicyKind::Proposed);
    let mut acc: Vec<Accumulator> = variants.iter().map(|_| Accumulator::new()).collect();
    let mut training_size = 0;

    for (t, part) in partitions.iter().enumerate() {
        let (learn, exploit) =
            split_learn_exploit(part, cfg.q_exploitation, &mut seed::rng(cfg.seed, t as u64, "split"))?;
        training_size += learn.len();
        let mut model = if with_classifier {
            let learn_records: Vec<UserRecord> =
                learn.iter().map(|&i| record(prep, i, t, &learn_blockage, base_thr)).collect();
            let rows = assemble_features(&learn_records, schedule, cfg.feature_mode, Phase::Learning)?;
            Some(train(cfg, &rows, t)?)
        } else {
            None
        };

        for (v, a) in variants.iter().zip(acc.iter_mut()) {
            let blockage = BlockageModel::new(v.p_exploitation, cfg.seed)?;
            let thr = (v.threshold_sub6, v.threshold_mmwave);
            let records: Vec<UserRecord> = exploit.iter().map(|&i| record(prep, i, t, &blockage, thr)).collect();
            let prediction = match &model {
                Some(m) if !records.is_empty() => {
                    let rows = assemble_features(&records, schedule, cfg.feature_mode, Phase::Exploitation)?;
                    Some(m.predict(&rows)?)
                }
                _ => None,
            };
            let mut kinds = policies.to_vec();
            if !kinds.contains(&PolicyKind::Optimal) {
                kinds.push(PolicyKind::Optimal);
            }
            for kind in kinds {
                let slot = policy_slot(kind);
                for (k, rec) in records.iter().enumerate() {
                    let out = match kind {
                        PolicyKind::Proposed => {
                            let p = prediction.as_ref().ok_or_else(|| Error::Config("classifier missing".into()))?;
                            apply_proposed(rec.clone(), schedule, p.labels[k])
                        }
                        other => decide(other, rec.clone(), schedule, None)?,
                    };
                    a.samples[slot].push(out.effective_rate);
                    a.requests[slot] += u64::from(out.x_br);
                    a.grants[slot] += u64::from(out.y == Some(true));
                }
            }
            if let Some(p) = prediction {
                let truth: Vec<bool> = records.iter().map(UserRecord::true_grant).collect();
                let c = ConfusionMatrix::from_predictions(&truth, &p.labels)?;
                let (e, mu) = misclassification(&c)?;
                a.partitions.push(PartitionReport {
                    partition: t,
                    learn_size: learn.len(),
                    exploit_size: records.len(),
                    misclassified: e,
                    mu,
                    roc_auc: roc_auc(&p.scores, &truth).ok(),
                });
                a.confusion.merge(&c);
                a.scores.extend(p.scores);
                a.truth.extend(truth);
            }
        }
        if let Some(m) = model.as_mut() {
            m.invalidate();
        }
    }

    let mut reports = Vec::with_capacity(variants.len());
    for (v, a) in variants.iter().zip(acc) {
        let optimal_mean = throughput_stats(&a.samples[policy_slot(PolicyKind::Optimal)])?.mean;
        let mut policy_reports = Vec::new();
        for &kind in PolicyKind::ALL.iter().filter(|k| policies.contains(k)) {
            let slot = policy_slot(kind);
            let stats = throughput_stats(&a.samples[slot])?;
            policy_reports.push(PolicyReport {
                policy: kind,
                mean_effective_throughput: stats.mean,
                normalized_mean: if optimal_mean > 0.0 { stats.mean / optimal_mean } else { f64::NAN },
                requests: a.requests[slot],
                grants: a.grants[slot],
                cdf: stats.cdf,
                samples: a.samples[slot].clone(),
            });
        }
        let classifier = if with_classifier {
            let (e, mu) = misclassification(&a.confusion)?;
            Some(ClassifierReport {
                kind: cfg.classifier,
                feature_mode: cfg.feature_mode,
                confusion: a.confusion,
                misclassified: e,
                mu,
                roc_auc: roc_auc(&a.scores, &a.truth).ok(),
                training_size,
                exploit_size: a.truth.len(),
                elevated_error: mu > ELEVATED_ERROR,
                partitions: a.partitions,
            })
        } else {
            None
        };
        reports.push(RunReport {
            scenario: cfg.scenario,
            threshold_sub6: v.threshold_sub6,
            threshold_mmwave: v.threshold_mmwave,
            p_learning: cfg.p_learning,
            p_exploitation: v.p_exploitation,
            q_exploitation: cfg.q_exploitation,
            seed: cfg.seed,
            ue_count: prep.links.len(),
            t_c_sub6: schedule.t_c_sub6,
            t_c_mmwave: schedule.t_c_mmwave,
            policies: policy_reports,
            classifier,
        });
    }
    Ok(reports)
}

pub fn run_scenario(cfg: &ScenarioConfig, prep: &Prepared) -> Result<RunReport> {
    let mut r = run_variants(cfg, prep, &[Variant::base(cfg)], &cfg.policy.policies())?;
    Ok(r.remove(0))
}

/// One run per threshold, applied to `cfg.threshold_sweep_band` (both bands
/// when unset).
pub fn run_threshold_sweep(cfg: &ScenarioConfig, prep: &Prepared, thresholds: &[f64]) -> Result<Vec<RunReport>> {
    let variants: Vec<Variant> = thresholds
        .iter()
        .map(|&thr| {
            let base = Variant::base(cfg);
            match cfg.threshold_sweep_band {
                Some(Band::Sub6) => Variant { threshold_sub6: thr, ..base },
                Some(Band::MmWave) => Variant { threshold_mmwave: thr, ..base },
                None => Variant { threshold_sub6: thr, threshold_mmwave: thr, ..base },
            }
        })
        .collect();
    run_variants(cfg, prep, &variants, &cfg.policy.policies())
}

/// Learning stays at `p_learning`; exploitation runs at each probability.
pub fn run_blockage_sweep(cfg: &ScenarioConfig, prep: &Prepared, probabilities: &[f64]) -> Result<Vec<RunReport>> {
    let variants: Vec<Variant> =
        probabilities.iter().map(|&p| Variant { p_exploitation: p, ..Variant::base(cfg) }).collect();
    run_variants(cfg, prep, &variants, &cfg.policy.policies())
}

/// One full run per learning fraction `q`, i.e. `q_exploitation = 1 − q`.
pub fn run_training_sweep(cfg: &ScenarioConfig, prep: &Prepared, fractions: &[f64]) -> Result<Vec<RunReport>> {
    fractions
        .iter()
        .map(|&q| {
            let c = ScenarioConfig { q_exploitation: 1.0 - q, ..cfg.clone() };
            run_scenario(&c, prep)
        })
        .collect()
}
