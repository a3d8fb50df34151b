//! Run configuration: a JSON file whose fields the command-line flags
//! override, validated before anything is computed.

use std::path::Path;

use anyhow::{bail, Context};
use ndslab::constructions::{AtlasParams, LemmaParams, Recipe, StageParams};
use ndslab::rational::parse_q;
use ndslab::Q;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lemma,
    #[default]
    Main,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// `A`, `R`, `R<i>`, `S` or `1..n`.
    pub times: Option<String>,
    /// Exact rationals as strings.
    pub epsilons: Option<Vec<String>>,
    pub n_list: Option<Vec<usize>>,
    pub steps: Option<u64>,
    pub grid: Option<u64>,
    pub delta: Option<String>,
    pub pairs: Option<usize>,
    pub seed: Option<u64>,
    pub block: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub atlas: AtlasParams,
    pub family: Family,
    pub stages: StageParams,
    pub lemma: LemmaParams,
    pub lemma_stages: usize,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            atlas: AtlasParams::default(),
            family: Family::Main,
            stages: StageParams::default(),
            lemma: LemmaParams::default(),
            lemma_stages: 5,
            analysis: AnalysisConfig::default(),
        }
    }
}

/// Flags shared by every command; each one overrides the config file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Atlas depth D.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Gap ratio, as p/q.
    #[arg(long, global = true)]
    pub rho: Option<String>,
    /// Weight base of the atlas lengths.
    #[arg(long, global = true)]
    pub base: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub family: Option<Family>,
    /// Sampling times: A (all), R, R<i>, S, or 1..n.
    #[arg(long, global = true)]
    pub times: Option<String>,
    /// Number of steps, or the horizon of a scan.
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    /// Comma-separated list of p/q values.
    #[arg(long, global = true)]
    pub epsilon: Option<String>,
    /// Output path; stdout when absent.
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<std::path::PathBuf>,
}

impl RunConfig {
    pub fn load(args: &CommonArgs) -> anyhow::Result<RunConfig> {
        let mut cfg = match &args.config {
            Some(path) => read_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(d) = args.depth {
            cfg.atlas.depth = d;
        }
        if let Some(r) = &args.rho {
            cfg.atlas.rho = parse_q(r).context("--rho")?;
        }
        if let Some(b) = args.base {
            cfg.atlas.base = b;
        }
        if let Some(f) = args.family {
            cfg.family = f;
        }
        if let Some(t) = &args.times {
            cfg.analysis.times = Some(t.clone());
        }
        if let Some(s) = args.steps {
            cfg.analysis.steps = Some(s);
        }
        if let Some(e) = &args.epsilon {
            cfg.analysis.epsilons = Some(e.split(',').map(|s| s.trim().to_string()).collect());
        }
        cfg.validate_static()?;
        Ok(cfg)
    }

    /// Checks that need no construction.
    fn validate_static(&self) -> anyhow::Result<()> {
        if self.lemma_stages == 0 {
            bail!("lemma_stages must be at least 1");
        }
        self.lemma.validate(self.lemma_stages)?;
        if let Some(t) = &self.analysis.times {
            TimesSel::parse(t)?;
        }
        for e in self.epsilons()?.unwrap_or_default() {
            if e <= Q::from_integer(0.into()) {
                bail!("epsilon must be positive, got {e}");
            }
        }
        if let Some(d) = self.delta()? {
            if d <= Q::from_integer(0.into()) {
                bail!("delta must be positive, got {d}");
            }
        }
        if self.analysis.steps == Some(0) {
            bail!("steps must be at least 1");
        }
        if matches!(self.analysis.grid, Some(0)) {
            bail!("grid must be at least 1");
        }
        Ok(())
    }

    pub fn epsilons(&self) -> anyhow::Result<Option<Vec<Q>>> {
        self.analysis
            .epsilons
            .as_ref()
            .map(|v| v.iter().map(|s| parse_q(s).context("epsilon")).collect())
            .transpose()
    }

    pub fn delta(&self) -> anyhow::Result<Option<Q>> {
        self.analysis.delta.as_deref().map(|s| parse_q(s).context("delta")).transpose()
    }

    pub fn recipe(&self) -> Recipe {
        match self.family {
            Family::Lemma => Recipe::Lemma { params: self.lemma.clone(), stages: self.lemma_stages },
            Family::Main => Recipe::Main { atlas: self.atlas.clone(), params: self.stages.clone() },
        }
    }
}

fn read_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TimesSel {
    All,
    R(usize),
    S,
    Range(u64),
}

impl TimesSel {
    pub fn parse(s: &str) -> anyhow::Result<TimesSel> {
        let s = s.trim();
        Ok(match s {
            "A" => TimesSel::All,
            "S" => TimesSel::S,
            "R" => TimesSel::R(1),
            _ if s.starts_with('R') => TimesSel::R(s[1..].parse().context("--times R<i>")?),
            _ => match s.split_once("..") {
                Some(("1", n)) => TimesSel::Range(n.parse().context("--times 1..n")?),
                _ => bail!("unknown times selector {s:?}; expected A, R, R<i>, S or 1..n"),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_selectors() {
        assert_eq!(TimesSel::parse("S").unwrap(), TimesSel::S);
        assert_eq!(TimesSel::parse("R").unwrap(), TimesSel::R(1));
        assert_eq!(TimesSel::parse("R2").unwrap(), TimesSel::R(2));
        assert_eq!(TimesSel::parse("1..12").unwrap(), TimesSel::Range(12));
        assert!(TimesSel::parse("2..5").is_err());
        assert!(TimesSel::parse("x").is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.atlas, cfg.atlas);
        let partial: RunConfig = serde_json::from_str(r#"{"family":"lemma"}"#).unwrap();
        assert_eq!(partial.family, Family::Lemma);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }
}
