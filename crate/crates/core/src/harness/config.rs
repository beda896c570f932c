//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! target = uniform          # uniform | constant | path to a PGM/PNG file
//! size = 512
//! symmetrize = false
//! scheme = binary-phase
//! sweep = 1, 2, 4, 8, 16
//! runs = 100
//! seed = 7
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{OsprError, Result};
use crate::metrics::DynamicRange;
use crate::noise::RicianConvention;
use crate::ospr::{QuantizationScheme, RngSpec};
use crate::target::{induce_symmetry, load_target, EnergyPolicy, TargetImage};

pub const DEFAULT_SWEEP: [usize; 13] = [1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 24, 30];

/// Where target amplitudes come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSource {
    Uniform,
    Constant,
    File(PathBuf),
}

impl TargetSource {
    pub fn label(&self) -> String {
        match self {
            TargetSource::Uniform => "uniform".into(),
            TargetSource::Constant => "constant".into(),
            TargetSource::File(p) => p.display().to_string(),
        }
    }
}

impl FromStr for TargetSource {
    type Err = OsprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "" => Err(OsprError::InvalidArgument("empty target".into())),
            "uniform" => Ok(TargetSource::Uniform),
            "constant" => Ok(TargetSource::Constant),
            path => Ok(TargetSource::File(PathBuf::from(path))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub target: TargetSource,
    /// Side length of builtin targets; file targets keep their own size.
    pub size: usize,
    pub symmetrize: bool,
    pub scheme: QuantizationScheme,
    pub sweep: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub dynamic_range: DynamicRange,
    pub convention: RicianConvention,
    /// Subframe count for `generate`.
    pub subframes: usize,
    /// Histogram bins for `ssim-components`.
    pub bins: usize,
    pub mandrill: Option<PathBuf>,
    pub peppers: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            target: TargetSource::Uniform,
            size: 512,
            symmetrize: false,
            scheme: QuantizationScheme::BinaryPhase,
            sweep: DEFAULT_SWEEP.to_vec(),
            runs: 100,
            seed: 0,
            out: PathBuf::from("out"),
            threads: 0,
            dynamic_range: DynamicRange::default(),
            convention: RicianConvention::default(),
            subframes: 16,
            bins: 64,
            mandrill: None,
            peppers: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, location: &str) -> Result<T> {
    value.parse().map_err(|_| {
        OsprError::config(location, format!("`{key}`: cannot parse `{value}`"))
    })
}

fn parse_bool(key: &str, value: &str, location: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(OsprError::config(
            location,
            format!("`{key}`: expected true or false, got `{value}`"),
        )),
    }
}

fn parse_sweep(value: &str, location: &str) -> Result<Vec<usize>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_value("sweep", s, location))
        .collect()
}

fn with_location(e: OsprError, location: &str) -> OsprError {
    match e {
        OsprError::Config { .. } => e,
        other => OsprError::config(location, other.to_string()),
    }
}

impl ExperimentConfig {
    /// Parse config text on top of the defaults. `origin` names the source
    /// in diagnostics, which read `origin:line`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let location = format!("{origin}:{}", i + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                OsprError::config(&location, format!("expected `key = value`, got `{line}`"))
            })?;
            cfg.set(key.trim(), value.trim(), &location)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| OsprError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Set one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str, location: &str) -> Result<()> {
        match key {
            "target" => self.target = value.parse().map_err(|e| with_location(e, location))?,
            "size" => self.size = parse_value(key, value, location)?,
            "symmetrize" => self.symmetrize = parse_bool(key, value, location)?,
            "scheme" => self.scheme = value.parse().map_err(|e| with_location(e, location))?,
            "sweep" => self.sweep = parse_sweep(value, location)?,
            "runs" => self.runs = parse_value(key, value, location)?,
            "seed" => self.seed = parse_value(key, value, location)?,
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = parse_value(key, value, location)?,
            "dynamic_range" => {
                self.dynamic_range = value.parse().map_err(|e| with_location(e, location))?
            }
            "convention" => {
                self.convention = value.parse().map_err(|e| with_location(e, location))?
            }
            "subframes" => self.subframes = parse_value(key, value, location)?,
            "bins" => self.bins = parse_value(key, value, location)?,
            "mandrill" => self.mandrill = Some(PathBuf::from(value)),
            "peppers" => self.peppers = Some(PathBuf::from(value)),
            other => {
                return Err(OsprError::config(location, format!("unknown key `{other}`")))
            }
        }
        Ok(())
    }

    /// Apply a `key=value` override given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let location = format!("--set {assignment}");
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            OsprError::config(&location, "expected KEY=VALUE")
        })?;
        self.set(key.trim(), value.trim(), &location)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Err(OsprError::config(field, message));
        if self.runs == 0 {
            return bad("runs", "runs must be >= 1".into());
        }
        if self.sweep.is_empty() {
            return bad("sweep", "sweep must not be empty".into());
        }
        if self.sweep[0] == 0 {
            return bad("sweep", "subframe counts must be >= 1".into());
        }
        if self.sweep.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sweep", format!("sweep must be strictly increasing, got {:?}", self.sweep));
        }
        if self.size < 2 {
            return bad("size", format!("size must be >= 2, got {}", self.size));
        }
        if self.subframes == 0 {
            return bad("subframes", "subframes must be >= 1".into());
        }
        if self.bins == 0 {
            return bad("bins", "bins must be >= 1".into());
        }
        Ok(())
    }

    pub fn rng(&self) -> RngSpec {
        RngSpec::new(self.seed, 0)
    }

    pub fn max_subframes(&self) -> usize {
        self.sweep.last().copied().unwrap_or(1)
    }

    /// Build the configured target, symmetrised if requested.
    pub fn load_target(&self) -> Result<TargetImage> {
        let t = match &self.target {
            TargetSource::Uniform => TargetImage::uniform(self.size, self.size, self.seed)?,
            TargetSource::Constant => TargetImage::constant(self.size, self.size)?,
            TargetSource::File(path) => load_target(path, EnergyPolicy::UnitMeanSquare)?,
        };
        Ok(if self.symmetrize { induce_symmetry(&t) } else { t })
    }

    /// The configuration as parseable text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sweep: Vec<String> = self.sweep.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "target = {}", self.target.label());
        let _ = writeln!(s, "size = {}", self.size);
        let _ = writeln!(s, "symmetrize = {}", self.symmetrize);
        let _ = writeln!(s, "scheme = {}", self.scheme.name());
        let _ = writeln!(s, "sweep = {}", sweep.join(","));
        let _ = writeln!(s, "runs = {}", self.runs);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "dynamic_range = {}", self.dynamic_range.describe());
        let _ = writeln!(s, "convention = {}", self.convention.name());
        let _ = writeln!(s, "subframes = {}", self.subframes);
        let _ = writeln!(s, "bins = {}", self.bins);
        if let Some(p) = &self.mandrill {
            let _ = writeln!(s, "mandrill = {}", p.display());
        }
        if let Some(p) = &self.peppers {
            let _ = writeln!(s, "peppers = {}", p.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "# campaign\ntarget = constant\nsize = 64 # small\nsweep = 1, 2 ,4\nruns=5\n\nsymmetrize = yes\nscheme = none\ndynamic_range = span\n";
        let cfg = ExperimentConfig::parse(text, "c.cfg").unwrap();
        assert_eq!(cfg.target, TargetSource::Constant);
        assert_eq!(cfg.size, 64);
        assert_eq!(cfg.sweep, vec![1, 2, 4]);
        assert_eq!(cfg.runs, 5);
        assert!(cfg.symmetrize);
        assert_eq!(cfg.scheme, QuantizationScheme::None);
        assert_eq!(cfg.dynamic_range, DynamicRange::IntensitySpan);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text(), "echo").unwrap(), cfg);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let err = ExperimentConfig::parse("runs = 3\nsize = big\n", "x.cfg").unwrap_err();
        match err {
            OsprError::Config { location, message } => {
                assert_eq!(location, "x.cfg:2");
                assert!(message.contains("size"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = ExperimentConfig::parse("colour = red", "x.cfg").unwrap_err();
        assert!(err.to_string().contains("x.cfg:1"));
        let err = ExperimentConfig::parse("scheme = ternary", "x.cfg").unwrap_err();
        assert!(matches!(err, OsprError::Config { .. }));
        assert_eq!(err.exit_code(), 1);
        assert!(ExperimentConfig::parse("just words", "x.cfg").is_err());
    }

    #[test]
    fn validation_rules() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.sweep = vec![1, 4, 4];
        assert!(cfg.validate().is_err());
        cfg.sweep = vec![];
        assert!(cfg.validate().is_err());
        cfg.sweep = vec![0, 1];
        assert!(cfg.validate().is_err());
        cfg.sweep = vec![1];
        cfg.runs = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_override("seed=42").unwrap();
        assert_eq!(cfg.seed, 42);
        assert!(cfg.apply_override("seed").is_err());
    }
}
