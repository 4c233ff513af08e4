use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use smectic_core::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Energy,
    Besov,
    Entropy,
    Sweep,
    Minimize,
    Tail,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_possible_value().expect("no skipped variants");
        f.write_str(s.get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Single value, comma list, or dyadic range `2^-a..2^-b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EpsInput", into = "String")]
pub struct EpsList {
    source: String,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EpsInput {
    Number(f64),
    Text(String),
    List(Vec<f64>),
}

impl TryFrom<EpsInput> for EpsList {
    type Error = anyhow::Error;
    fn try_from(input: EpsInput) -> anyhow::Result<Self> {
        match input {
            EpsInput::Number(x) => format!("{x}").parse(),
            EpsInput::Text(s) => s.parse(),
            EpsInput::List(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",").parse(),
        }
    }
}

impl From<EpsList> for String {
    fn from(e: EpsList) -> String {
        e.source
    }
}

fn parse_value(s: &str) -> anyhow::Result<f64> {
    let s = s.trim();
    let v = match s.strip_prefix("2^") {
        Some(exp) => 2f64.powi(exp.parse::<i32>().with_context(|| format!("bad exponent in '{s}'"))?),
        None => s.parse::<f64>().with_context(|| format!("bad eps value '{s}'"))?,
    };
    if !(v > 0.0 && v.is_finite()) {
        bail!("eps must be positive, got {s}");
    }
    Ok(v)
}

impl FromStr for EpsList {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let values = if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (parse_value(a)?, parse_value(b)?);
            let steps = (a / b).log2();
            if (steps - steps.round()).abs() > 1e-9 {
                bail!("range '{s}' is not dyadic");
            }
            let n = steps.round() as i32;
            (0..=n.abs()).map(|k| a * 2f64.powi(-k * n.signum())).collect()
        } else {
            s.split(',').map(parse_value).collect::<anyhow::Result<Vec<_>>>()?
        };
        Ok(Self { source: s.to_string(), values })
    }
}

impl EpsList {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Anchor given as `pinned:N` or `penalty:LAMBDA`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AnchorSpec {
    Pinned(usize),
    Penalty(f64),
}

impl FromStr for AnchorSpec {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s.split_once(':') {
            Some(("pinned", n)) => Ok(Self::Pinned(n.parse().context("pinned count")?)),
            Some(("penalty", l)) => Ok(Self::Penalty(l.parse().context("penalty weight")?)),
            _ => bail!("anchor must be 'pinned:N' or 'penalty:LAMBDA', got '{s}'"),
        }
    }
}

impl TryFrom<String> for AnchorSpec {
    type Error = anyhow::Error;
    fn try_from(s: String) -> anyhow::Result<Self> {
        s.parse()
    }
}

impl From<AnchorSpec> for String {
    fn from(a: AnchorSpec) -> String {
        match a {
            AnchorSpec::Pinned(n) => format!("pinned:{n}"),
            AnchorSpec::Penalty(l) => format!("penalty:{l}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "smectic", version, about = "Pseudo-spectral laboratory for the periodic 2D smectic energy")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON config; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grid as N1xN2.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// E, E1,E2,..., or 2^-a..2^-b
    #[arg(long)]
    pub eps: Option<EpsList>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Shock amplitude.
    #[arg(long)]
    pub c: Option<f64>,
    /// Mollification width.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Field header file.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Jump profile JSON.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Band limit of generated random fields.
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Number of seeds for verify, starting at --seed.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// pinned:N or penalty:LAMBDA
    #[arg(long)]
    pub anchor: Option<AnchorSpec>,
}

/// Fully resolved run parameters; echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(with = "grid_text")]
    pub grid: GridSpec,
    pub seed: u64,
    pub eps: Option<EpsList>,
    pub p: Option<f64>,
    pub s: Option<f64>,
    pub c: f64,
    pub delta: Option<f64>,
    pub out: PathBuf,
    pub format: Option<Format>,
    pub field: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub kmax: Option<usize>,
    pub max_iters: usize,
    pub seeds: usize,
    pub anchor: Option<AnchorSpec>,
    /// Exponent range of the increment grid `2^-lo .. 2^-hi`.
    pub h_range: (i32, i32),
    pub tail_m: Vec<u64>,
}

mod grid_text {
    use serde::{Deserialize, Deserializer, Serializer};
    use smectic_core::GridSpec;

    pub fn serialize<S: Serializer>(g: &GridSpec, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(g)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GridSpec, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            grid: GridSpec::new(256, 256).expect("default grid"),
            seed: 0,
            eps: None,
            p: None,
            s: None,
            c: 0.5,
            delta: None,
            out: PathBuf::from("out"),
            format: None,
            field: None,
            profile: None,
            kmax: None,
            max_iters: 1000,
            seeds: 1,
            anchor: None,
            h_range: (1, 12),
            tail_m: vec![4, 8, 16, 32],
        }
    }
}

/// Config-file entries; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    #[serde(default, with = "opt_grid")]
    grid: Option<GridSpec>,
    seed: Option<u64>,
    eps: Option<EpsList>,
    p: Option<f64>,
    s: Option<f64>,
    c: Option<f64>,
    delta: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    field: Option<PathBuf>,
    profile: Option<PathBuf>,
    kmax: Option<usize>,
    max_iters: Option<usize>,
    seeds: Option<usize>,
    anchor: Option<AnchorSpec>,
    h_range: Option<(i32, i32)>,
    tail_m: Option<Vec<u64>>,
}

mod opt_grid {
    use serde::{Deserialize, Deserializer};
    use smectic_core::GridSpec;

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<GridSpec>, D::Error> {
        Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

macro_rules! overlay {
    ($cfg:ident, $src:ident; $($field:ident),*) => {
        $( if let Some(v) = $src.$field { $cfg.$field = v; } )*
    };
}

macro_rules! overlay_opt {
    ($cfg:ident, $src:ident; $($field:ident),*) => {
        $( if $src.$field.is_some() { $cfg.$field = $src.$field; } )*
    };
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> anyhow::Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let file: FileConfig = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            overlay!(cfg, file; grid, seed, c, out, max_iters, seeds, h_range, tail_m);
            overlay_opt!(cfg, file; command, format, eps, p, s, delta, field, profile, kmax, anchor);
        }
        overlay!(cfg, cli; grid, seed, c, out, max_iters, seeds);
        overlay_opt!(cfg, cli; command, format, eps, p, s, delta, field, profile, kmax, anchor);
        if cfg.command.is_none() {
            bail!("no command given (verify, energy, besov, entropy, sweep, minimize or tail)");
        }
        if cfg.seeds == 0 {
            bail!("--seeds must be at least 1");
        }
        if !(cfg.c > 0.0 && cfg.c.is_finite()) {
            bail!("--c must be positive");
        }
        Ok(cfg)
    }

    pub fn command(&self) -> Command {
        self.command.expect("resolved config has a command")
    }

    /// Energy and minimize reports default to JSON, tables to CSV.
    pub fn format(&self) -> Format {
        self.format.unwrap_or(match self.command() {
            Command::Energy | Command::Minimize => Format::Json,
            _ => Format::Csv,
        })
    }

    pub fn eps_values(&self, default: &[f64]) -> Vec<f64> {
        self.eps.as_ref().map(|e| e.values().to_vec()).unwrap_or_else(|| default.to_vec())
    }

    /// `kmax` for generated fields. Defaults to `min(n1, n2) / 8` for the
    /// identity suite and `min(n1, n2) / 32` elsewhere.
    pub fn kmax(&self) -> usize {
        let divisor = if self.command == Some(Command::Verify) { 8 } else { 32 };
        self.kmax.unwrap_or((self.grid.n1().min(self.grid.n2()) / divisor).max(1))
    }
}
