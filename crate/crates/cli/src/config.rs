//! Plain-text experiment configuration.
//!
//! The format is one `key = value` pair per line; `#` starts a comment.
//! Lists are comma-separated. Schema violations are reported with their
//! line number. Example:
//!
//! ```text
//! experiment = sweep-lifespan
//! alpha = 0.5
//! n_modes = 128
//! eps = 0.05, 0.1, 0.2, 0.4
//! growth_factor = 2.0
//! cap_multiplier = 5.0
//! seed = 42
//! out_dir = results/lifespan
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail};

use crate::experiments::{
    default_domain_length, CancellationArgs, Common, EnergyReportArgs, IdentityArgs, LabCommand,
    LifespanArgs, RateSweepArgs, SimulateArgs, SymbolArgs,
};

/// A fully parsed configuration: the experiment plus run settings.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub command: LabCommand,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

struct Entries {
    values: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> anyhow::Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {line_no}: expected 'key = value', got '{raw}'");
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                bail!("line {line_no}: empty key or value");
            }
            if let Some((first_line, _)) = values.get(&key) {
                bail!("line {line_no}: key '{key}' already set on line {first_line}");
            }
            values.insert(key, (line_no, value));
        }
        Ok(Self { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key).map(|(_, v)| v)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> anyhow::Result<Option<T>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some((line, value)) => value.parse::<T>().map(Some).map_err(|_| {
                anyhow!(
                    "line {line}: value '{value}' for '{key}' is not a valid {}",
                    std::any::type_name::<T>()
                )
            }),
        }
    }

    fn take_list(&mut self, key: &str) -> anyhow::Result<Option<Vec<f64>>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some((line, value)) => {
                let mut out = Vec::new();
                for piece in value.split(',') {
                    let piece = piece.trim();
                    out.push(piece.parse::<f64>().map_err(|_| {
                        anyhow!("line {line}: '{piece}' in '{key}' is not a number")
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    fn reject_unknown(&self) -> anyhow::Result<()> {
        if let Some((key, (line, _))) = self.values.iter().next() {
            bail!("line {line}: unknown key '{key}' for this experiment");
        }
        Ok(())
    }
}

/// Parse an experiment configuration file's contents.
pub fn parse(text: &str) -> anyhow::Result<RunPlan> {
    let mut entries = Entries::parse(text)?;
    let experiment = entries
        .take("experiment")
        .ok_or_else(|| anyhow!("missing required key 'experiment'"))?;

    let seed = entries.take_parsed::<u64>("seed")?;
    let out_dir = entries.take("out_dir").map(PathBuf::from);

    let common = Common {
        alpha: entries.take_parsed("alpha")?.unwrap_or(0.5),
        n_modes: entries.take_parsed("n_modes")?.unwrap_or(256),
        domain_length: entries
            .take_parsed("domain_length")?
            .unwrap_or_else(default_domain_length),
    };

    let command = match experiment.as_str() {
        "simulate" => LabCommand::Simulate(SimulateArgs {
            eps: entries.take_parsed("eps")?.unwrap_or(1e-2),
            profile: entries.take("profile").unwrap_or_else(|| "three-mode".into()),
            t_end: entries.take_parsed("t_end")?.unwrap_or(10.0),
            dt: entries.take_parsed("dt")?.unwrap_or(1e-2),
            record_stride: entries.take_parsed("record_stride")?.unwrap_or(10),
            sobolev_n: entries.take_parsed("sobolev_n")?.unwrap_or(2),
            common,
        }),
        "sweep-energy-rate" => LabCommand::SweepEnergyRate(RateSweepArgs {
            eps: entries
                .take_list("eps")?
                .unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.4]),
            profile: entries.take("profile").unwrap_or_else(|| "three-mode".into()),
            sobolev_n: entries.take_parsed("sobolev_n")?.unwrap_or(2),
            window: entries.take_parsed("window")?.unwrap_or(1.0),
            dt: entries.take_parsed("dt")?.unwrap_or(0.05),
            sample_stride: entries.take_parsed("sample_stride")?.unwrap_or(5),
            common,
        }),
        "sweep-lifespan" => LabCommand::SweepLifespan(LifespanArgs {
            eps: entries
                .take_list("eps")?
                .unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.4]),
            profile: entries.take("profile").unwrap_or_else(|| "three-mode".into()),
            sobolev_n: entries.take_parsed("sobolev_n")?.unwrap_or(2),
            growth_factor: entries.take_parsed("growth_factor")?.unwrap_or(2.0),
            cap_multiplier: entries.take_parsed("cap_multiplier")?.unwrap_or(5.0),
            dt: entries.take_parsed("dt")?.unwrap_or(0.05),
            common,
        }),
        "verify-symbol" => LabCommand::VerifySymbol(SymbolArgs {
            alpha: common.alpha,
            samples: entries.take_parsed("samples")?.unwrap_or(10_000),
        }),
        "verify-cancellation" => LabCommand::VerifyCancellation(CancellationArgs {
            eps: entries
                .take_list("eps")?
                .unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]),
            common,
        }),
        "verify-identities" => LabCommand::VerifyIdentities(IdentityArgs {
            k: entries.take_parsed("k")?.unwrap_or(2),
            band: entries.take_parsed("band")?.unwrap_or(32),
            kernel_samples: entries.take_parsed("kernel_samples")?.unwrap_or(10_000),
            common,
        }),
        "energy-report" => LabCommand::EnergyReport(EnergyReportArgs {
            eps: entries.take_parsed("eps")?.unwrap_or(1e-2),
            profile: entries.take("profile").unwrap_or_else(|| "three-mode".into()),
            sobolev_n: entries.take_parsed("sobolev_n")?.unwrap_or(3),
            common,
        }),
        other => bail!(
            "unknown experiment '{other}' (expected simulate, sweep-energy-rate, \
             sweep-lifespan, verify-symbol, verify-cancellation, verify-identities \
             or energy-report)"
        ),
    };
    entries.reject_unknown()?;
    Ok(RunPlan {
        command,
        seed,
        out_dir,
    })
}
