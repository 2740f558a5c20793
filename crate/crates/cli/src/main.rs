use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bandswitch::channel::Band;
use bandswitch::config::{PolicySelection, Scenario, ScenarioConfig};
use bandswitch::dataset::{load_channel_file, write_channel_file, ChannelFileHeader, ChannelSource, SyntheticScene};
use bandswitch::learner::{ClassifierKind, FeatureMode};
use bandswitch::report::{write_outputs, RunReport};
use bandswitch::runner::{self, Prepared};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Dual-band (sub-6 GHz / mmWave) band-switch policy simulator.
#[derive(Parser)]
#[command(name = "bandswitch-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write the report files.
    Run(Common),
    /// Repeat a scenario over several band-switch thresholds.
    SweepThreshold {
        #[command(flatten)]
        common: Common,
        /// Thresholds in bits/s, comma separated. Defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Band whose threshold is swept.
        #[arg(long, value_enum)]
        band: Option<SweepBand>,
    },
    /// Repeat a scenario over exploitation-phase blockage probabilities.
    SweepBlockage {
        #[command(flatten)]
        common: Common,
        /// Probabilities, comma separated. Defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        probabilities: Option<Vec<f64>>,
    },
    /// Repeat a scenario over learning-set fractions.
    SweepTraining {
        #[command(flatten)]
        common: Common,
        /// Learning fractions, comma separated. Defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
    },
    /// Write the synthetic scene as a channel file.
    ExportSynthetic {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scale: Option<f64>,
        /// Output path (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Flat JSON config; echoed verbatim into report.json.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel file path, or `synthetic`.
    #[arg(long, default_value = "synthetic")]
    data: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    policy: Option<PolicySelection>,
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    #[arg(long)]
    feature_mode: Option<FeatureMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of the full UE population to simulate.
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepBand {
    Sub6,
    Mmwave,
    Both,
}

fn load_config(path: Option<&Path>) -> Result<(ScenarioConfig, Option<String>)> {
    match path {
        None => Ok((ScenarioConfig::default(), None)),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let cfg = ScenarioConfig::from_json(&text).with_context(|| format!("config {}", p.display()))?;
            Ok((cfg, Some(text)))
        }
    }
}

impl Common {
    fn config(&self) -> Result<(ScenarioConfig, Option<String>)> {
        let (mut cfg, text) = load_config(self.config.as_deref())?;
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if let Some(p) = self.policy {
            cfg.policy = p;
        }
        if let Some(c) = self.classifier {
            cfg.classifier = c;
        }
        if let Some(m) = self.feature_mode {
            cfg.feature_mode = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.scale {
            cfg.scale = s;
        }
        cfg.validate()?;
        Ok((cfg, text))
    }

    fn prepare(&self, cfg: &ScenarioConfig) -> Result<Prepared> {
        let (sub6, mmwave) = cfg.bands();
        if self.data == "synthetic" {
            let scene = SyntheticScene::new(cfg.scene(), &sub6, &mmwave)?;
            let bs = scene.config().bs_position;
            return Ok(runner::prepare(cfg, &scene, Some(bs))?);
        }
        let path = Path::new(&self.data);
        let file = load_channel_file(path, &sub6, &mmwave).with_context(|| format!("loading {}", path.display()))?;
        if file.samples.is_empty() {
            bail!("{} holds no UEs", path.display());
        }
        Ok(runner::prepare(cfg, &file.samples, file.header.bs_position)?)
    }

    fn finish(&self, cfg: &ScenarioConfig, text: Option<&str>, runs: &[RunReport]) -> Result<()> {
        write_outputs(&self.out, text, cfg, runs).with_context(|| format!("writing to {}", self.out.display()))?;
        print_summary(runs);
        Ok(())
    }
}

fn print_summary(runs: &[RunReport]) {
    for (i, r) in runs.iter().enumerate() {
        let mut line = format!(
            "run {i} scenario {} thr {}/{} p {}:",
            r.scenario, r.threshold_sub6, r.threshold_mmwave, r.p_exploitation
        );
        for p in &r.policies {
            line.push_str(&format!(" {} {:.3}", p.policy, p.normalized_mean));
        }
        if let Some(c) = &r.classifier {
            line.push_str(&format!(" | {} mu {:.4}", c.kind, c.mu));
            if c.elevated_error {
                line.push_str(" (elevated)");
            }
        }
        println!("{line}");
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(common) => {
            let (cfg, text) = common.config()?;
            let prep = common.prepare(&cfg)?;
            let run = runner::run_scenario(&cfg, &prep)?;
            common.finish(&cfg, text.as_deref(), &[run])
        }
        Command::SweepThreshold { common, thresholds, band } => {
            let (mut cfg, text) = common.config()?;
            if let Some(b) = band {
                cfg.threshold_sweep_band = match b {
                    SweepBand::Sub6 => Some(Band::Sub6),
                    SweepBand::Mmwave => Some(Band::MmWave),
                    SweepBand::Both => None,
                };
            }
            if let Some(t) = thresholds {
                cfg.threshold_sweep = t;
            }
            cfg.validate()?;
            let prep = common.prepare(&cfg)?;
            let runs = runner::run_threshold_sweep(&cfg, &prep, &cfg.threshold_sweep)?;
            common.finish(&cfg, text.as_deref(), &runs)
        }
        Command::SweepBlockage { common, probabilities } => {
            let (mut cfg, text) = common.config()?;
            if let Some(p) = probabilities {
                cfg.p_exploitation = p;
            }
            cfg.validate()?;
            let prep = common.prepare(&cfg)?;
            let runs = runner::run_blockage_sweep(&cfg, &prep, &cfg.p_exploitation)?;
            common.finish(&cfg, text.as_deref(), &runs)
        }
        Command::SweepTraining { common, fractions } => {
            let (mut cfg, text) = common.config()?;
            if let Some(f) = fractions {
                cfg.q_training = f;
            }
            cfg.validate()?;
            let prep = common.prepare(&cfg)?;
            let runs = runner::run_training_sweep(&cfg, &prep, &cfg.q_training)?;
            common.finish(&cfg, text.as_deref(), &runs)
        }
        Command::ExportSynthetic { config, seed, scale, out } => {
            let (mut cfg, _) = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = scale {
                cfg.scale = s;
            }
            cfg.validate()?;
            let (sub6, mmwave) = cfg.bands();
            let scene = SyntheticScene::new(cfg.scene(), &sub6, &mmwave)?;
            let header = ChannelFileHeader {
                bs_position: Some(scene.config().bs_position),
                ..ChannelFileHeader::new(&sub6, &mmwave)
            };
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_channel_file(BufWriter::new(file), &header, &scene.samples())?;
            eprintln!("wrote {} UEs to {}", scene.len(), out.display());
            Ok(())
        }
    }
}
