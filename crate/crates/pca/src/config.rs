//! Experiment configuration: flat `key = value` lines under `[section]`
//! headers.
//!
//! ```text
//! [model]
//! kernel = nn          # or: explicit
//! dim = 2
//! J = 1.0
//! # explicit kernels list offsets and weights in matching order
//! # offsets = 1,0; -1,0; 0,1; 0,-1
//! # weights = 1; 1; 1; 1
//!
//! [scan]
//! beta = 0.2, 0.3, 0.5, 0.6
//! L = 0, 1, 2
//! n = 1, 2, 4, 8
//! samples = 100000
//! seed = 2024
//! mode = exact-only    # or: mc-allowed
//! mc_samples = 2000
//! mc_burn_in = 200
//! mc_window = 100
//!
//! [output]
//! dir = out
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use pca_core::analysis::ScanConfig;
use pca_core::exact::{GapMode, McOptions};
use pca_core::lattice::Site;
use pca_core::noise::RandomnessKey;
use pca_core::rule::InteractionKernel;

/// A rejected configuration, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scan: ScanConfig,
    pub out_dir: PathBuf,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("model", &["kernel", "dim", "J", "offsets", "weights"]),
    ("scan", &["beta", "L", "n", "samples", "seed", "mode", "mc_samples", "mc_burn_in", "mc_window"]),
    ("output", &["dir"]),
];

/// Raw `section.key → value` pairs, later overridable from the command line.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::new("file", e.to_string()))?;
        let mut raw = RawConfig::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(ConfigError::new(k, "key outside any [section]"));
                }
                continue;
            };
            for (k, v) in props.iter() {
                raw.set(section, k, v)?;
            }
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("file", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let known = KNOWN.iter().find(|(s, _)| *s == section).ok_or_else(|| ConfigError::new(format!("[{section}]"), "unknown section"))?;
        if !known.1.contains(&key) {
            return Err(ConfigError::new(format!("{section}.{key}"), "unknown key"));
        }
        let value = strip_comment(value);
        self.entries.retain(|(s, k, _)| !(s == section && k == key));
        self.entries.push((section.into(), key.into(), value.into()));
        Ok(())
    }

    /// `section.key=value`.
    pub fn set_override(&mut self, entry: &str) -> Result<(), ConfigError> {
        let (path, value) = entry.split_once('=').ok_or_else(|| ConfigError::new(entry, "expected section.key=value"))?;
        let (section, key) = path.trim().split_once('.').ok_or_else(|| ConfigError::new(path, "expected section.key"))?;
        self.set(section, key, value.trim())
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.iter().find(|(s, k, _)| s == section && k == key).map(|e| e.2.as_str())
    }

    fn parse_one<T: FromStr>(&self, section: &str, key: &str, default: Option<T>) -> Result<T, ConfigError> {
        match self.get(section, key) {
            Some(v) => v.parse().map_err(|_| ConfigError::new(format!("{section}.{key}"), format!("cannot parse {v:?}"))),
            None => default.ok_or_else(|| ConfigError::new(format!("{section}.{key}"), "missing")),
        }
    }

    fn parse_list<T: FromStr>(&self, section: &str, key: &str, sep: char) -> Result<Vec<T>, ConfigError> {
        let Some(v) = self.get(section, key) else {
            return Ok(Vec::new());
        };
        v.split(sep)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| ConfigError::new(format!("{section}.{key}"), format!("cannot parse {s:?}"))))
            .collect()
    }

    pub fn into_experiment(self) -> Result<ExperimentConfig, ConfigError> {
        let kernel = self.kernel()?;
        let betas: Vec<f64> = self.parse_list("scan", "beta", ',')?;
        if betas.is_empty() {
            return Err(ConfigError::new("scan.beta", "grid is empty"));
        }
        if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(ConfigError::new("scan.beta", format!("{b} is not a finite non-negative number")));
        }
        let radii: Vec<u32> = self.parse_list("scan", "L", ',')?;
        let horizons: Vec<u64> = self.parse_list("scan", "n", ',')?;
        if radii.is_empty() && horizons.is_empty() {
            return Err(ConfigError::new("scan.L", "both L and n grids are empty"));
        }
        let samples: u64 = self.parse_one("scan", "samples", Some(10_000))?;
        if samples == 0 && !horizons.is_empty() {
            return Err(ConfigError::new("scan.samples", "must be at least 1"));
        }
        let seed: u64 = self.parse_one("scan", "seed", Some(0))?;
        let gap_mode = match self.get("scan", "mode").unwrap_or("exact-only") {
            "exact-only" => GapMode::ExactOnly,
            "mc-allowed" => GapMode::Auto(McOptions {
                samples: self.parse_one("scan", "mc_samples", Some(2000))?,
                burn_in: self.parse_one("scan", "mc_burn_in", Some(200))?,
                window: self.parse_one("scan", "mc_window", Some(100))?,
                key: RandomnessKey::new(seed),
            }),
            other => return Err(ConfigError::new("scan.mode", format!("{other:?} is neither exact-only nor mc-allowed"))),
        };
        if let GapMode::Auto(o) = gap_mode {
            if o.samples < 2 || o.window == 0 {
                return Err(ConfigError::new("scan.mc_samples", "Monte Carlo gaps need at least 2 samples and a non-empty window"));
            }
        }
        let out_dir = PathBuf::from(self.get("output", "dir").unwrap_or("out"));
        let scan = ScanConfig { kernel, betas, radii, horizons, samples, seed, gap_mode };
        scan.validate().map_err(|e| ConfigError::new("scan", e.to_string()))?;
        Ok(ExperimentConfig { scan, out_dir })
    }

    fn kernel(&self) -> Result<InteractionKernel, ConfigError> {
        let dim: usize = self.parse_one("model", "dim", Some(2))?;
        let err = |e: pca_core::Error| ConfigError::new("model", e.to_string());
        match self.get("model", "kernel").unwrap_or("nn") {
            "nn" => {
                let j: f64 = self.parse_one("model", "J", Some(1.0))?;
                InteractionKernel::nearest_neighbor(dim, j).map_err(err)
            }
            "explicit" => {
                let offsets = self.get("model", "offsets").ok_or_else(|| ConfigError::new("model.offsets", "missing"))?;
                let sites = offsets
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|o| {
                        let coords: Vec<i32> = o
                            .split(',')
                            .map(|c| c.trim().parse())
                            .collect::<Result<_, _>>()
                            .map_err(|_| ConfigError::new("model.offsets", format!("cannot parse {o:?}")))?;
                        if coords.len() != dim {
                            return Err(ConfigError::new("model.offsets", format!("{o:?} has {} coordinates, dim is {dim}", coords.len())));
                        }
                        Site::new(&coords).map_err(|e| ConfigError::new("model.offsets", e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let weights: Vec<f64> = self.parse_list("model", "weights", ';')?;
                if weights.len() != sites.len() {
                    return Err(ConfigError::new("model.weights", format!("{} weights for {} offsets", weights.len(), sites.len())));
                }
                InteractionKernel::new(dim, sites.into_iter().zip(weights)).map_err(err)
            }
            other => Err(ConfigError::new("model.kernel", format!("{other:?} is neither nn nor explicit"))),
        }
    }
}

/// Drop a trailing `# …` or `; …` comment that the INI reader keeps inline.
fn strip_comment(v: &str) -> &str {
    let cut = v.find(" #").or_else(|| v.find("\t#")).unwrap_or(v.len());
    v[..cut].trim()
}
