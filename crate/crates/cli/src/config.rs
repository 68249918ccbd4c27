use std::path::PathBuf;

use alpha_lab::suite::Tolerances;
use anyhow::{anyhow, Context};

/// Settings shared by every subcommand.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    pub no_timestamp: bool,
    pub csv: bool,
}

impl RunConfig {
    /// Applies `NAME=VALUE` tolerance overrides; unknown names and values that
    /// are not positive are rejected.
    pub fn from_args(
        seed: u64,
        overrides: &[String],
        output: Option<PathBuf>,
        no_timestamp: bool,
        csv: bool,
    ) -> anyhow::Result<Self> {
        let mut tolerances = Tolerances::default();
        for item in overrides {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("tolerance override `{item}` is not NAME=VALUE"))?;
            let value: f64 = value
                .trim()
                .parse()
                .with_context(|| format!("tolerance `{name}` is not a number"))?;
            tolerances.set(name.trim(), value).map_err(|e| {
                let defaults = Tolerances::default();
                let known: Vec<&str> = defaults.names().collect();
                anyhow!("{e} (known: {})", known.join(", "))
            })?;
        }
        Ok(Self {
            seed,
            tolerances,
            output,
            no_timestamp,
            csv,
        })
    }
}
