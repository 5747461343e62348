//! Experiment configuration: JSON, schema-checked before any sampling.

use std::path::{Path, PathBuf};

use bigjump_core::asymptotics::SeriesOptions;
use bigjump_core::rare_sets::RareSetSpec;
use bigjump_core::risk_engine::{ModelBundle, PremiumSpec, Regime, TruncationPolicy};
use bigjump_core::tail_laws::{log_grid, TailLaw};
use bigjump_core::{ClaimModel, DependenceSpec, InterArrivalLaw, LevyModel, RareSet, RuinKind, RuinSetPreset, WeightLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 0xB16_7A11;
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Omitted for comonotone dependence, whose claims are implied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claims: Option<ClaimModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levy: Option<LevyModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<InterArrivalLaw>,
    #[serde(default = "independent")]
    pub dependence: DependenceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<RareSetSpec>,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premiums: Option<PremiumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexSection>,
    #[serde(default)]
    pub outputs: OutputSection,
}

fn independent() -> DependenceSpec {
    DependenceSpec::Independent
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub samples: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub truncation: TruncationPolicy,
    pub x_grid: XGrid,
    pub series: SeriesOptions,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            workers: None,
            truncation: TruncationPolicy::default(),
            x_grid: XGrid::Log { log: LogGrid { lo: 10.0, hi: 1000.0, points: 9 } },
            series: SeriesOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XGrid {
    Points(Vec<f64>),
    Log { log: LogGrid },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl XGrid {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        let grid = match self {
            XGrid::Points(p) => p.clone(),
            XGrid::Log { log } => {
                if !(log.lo > 0.0 && log.hi > log.lo && log.points >= 2) {
                    return Err(CliError::schema("mc.x_grid.log", "need 0 < lo < hi and at least 2 points"));
                }
                log_grid(log.lo, log.hi, log.points)
            }
        };
        if grid.is_empty() || grid.iter().any(|x| !(*x > 0.0 && x.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::schema("mc.x_grid", "must be a non-empty, strictly increasing list of positive numbers"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PremiumSection {
    pub rates: Vec<f64>,
    pub ruin_set: RuinKind,
    pub allocation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<TailLaw>,
    /// One value per line, or the `column` of a comma-separated file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_file: Option<PathBuf>,
    #[serde(default)]
    pub column: usize,
    /// Hill order statistic count; defaults to 1% of the sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hill_k: Option<usize>,
    /// `[lo, hi]` of the x-window for the Matuszewska and Karamata estimators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: None, formats: vec![Format::Csv] }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::schema(if path == "." { "<root>" } else { &path }, &e.into_inner().to_string())
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.seed {
            self.mc.seed = s;
        }
        if let Some(n) = o.samples {
            self.mc.samples = n;
        }
        if let Some(w) = o.workers {
            self.mc.workers = Some(w);
        }
        if let Some(out) = &o.out {
            self.outputs.directory = Some(out.clone());
        }
        self.check()
    }

    fn check(&self) -> Result<(), CliError> {
        if self.mc.samples == 0 {
            return Err(CliError::schema("mc.samples", "must be positive"));
        }
        if self.mc.workers == Some(0) {
            return Err(CliError::schema("mc.workers", "must be positive"));
        }
        self.mc.truncation.validate().map_err(|e| CliError::schema("mc.truncation", &e.to_string()))?;
        self.mc.series.validate().map_err(|e| CliError::schema("mc.series", &e.to_string()))?;
        self.mc.x_grid.resolve()?;
        Ok(())
    }

    /// Canonical JSON: keys sorted at every level, no whitespace.
    pub fn canonical_json(&self) -> String {
        canonical(&serde_json::to_value(self).expect("config serializes"))
    }

    /// SHA-256 of the canonical form, ignoring settings that cannot change
    /// results (worker count, output directory).
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.mc.workers = None;
        c.outputs.directory = None;
        hex::encode(Sha256::digest(c.canonical_json().as_bytes()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.outputs.directory.clone().unwrap_or_else(|| PathBuf::from("bigjump-out"))
    }

    pub fn weight_law(&self) -> Result<WeightLaw, CliError> {
        let levy = self.levy.clone().ok_or_else(|| CliError::schema("levy", "section is required"))?;
        let arrival = self.arrivals.clone().ok_or_else(|| CliError::schema("arrivals", "section is required"))?;
        Ok(WeightLaw::Discount { levy, arrival })
    }

    pub fn bundle(&self) -> Result<ModelBundle, CliError> {
        let regime = self.regime.clone().ok_or_else(|| CliError::schema("regime", "section is required"))?;
        Ok(ModelBundle::new(self.claims.clone(), self.weight_law()?, self.dependence.clone(), regime)?)
    }

    pub fn rare_set(&self) -> Result<RareSet, CliError> {
        let spec = self.set.as_ref().ok_or_else(|| CliError::schema("set", "section is required"))?;
        Ok(spec.build()?)
    }

    pub fn premiums(&self) -> Result<(PremiumSpec, RuinSetPreset), CliError> {
        let p = self.premiums.as_ref().ok_or_else(|| CliError::schema("premiums", "section is required for ruin runs"))?;
        let spec = PremiumSpec { rates: p.rates.clone() };
        let ruin = RuinSetPreset::new(p.ruin_set, p.allocation.clone()).map_err(|e| CliError::schema("premiums.allocation", &e.to_string()))?;
        Ok((spec, ruin))
    }
}

fn canonical(v: &serde_json::Value) -> String {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys.iter().map(|k| format!("{}:{}", Value::String((*k).clone()), canonical(&map[*k]))).collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(canonical).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}
