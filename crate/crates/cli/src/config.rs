//! Run configuration: one TOML file, overridable from the command line.

use std::path::{Path, PathBuf};

use invcircle::orbit::{seed_lattice, ClassifyConfig, ScanRequest};
use invcircle::tangent::TangentConfig;
use invcircle::tracer::{ParamPoint, RhoEvalConfig, TraceConfig};
use invcircle::MapParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub b: f64,
    /// Seed for the jitter of initial tangent frames.
    pub seed: u64,
    pub out: PathBuf,
    pub point: PointSection,
    pub scan: ScanSection,
    pub rotation: RhoEvalConfig,
    pub trace: TraceSection,
    pub analysis: TangentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            b: 0.5,
            seed: 0,
            out: PathBuf::from("out"),
            point: PointSection::default(),
            scan: ScanSection::default(),
            rotation: RhoEvalConfig::default(),
            trace: TraceSection::default(),
            analysis: TangentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointSection {
    pub m1: f64,
    pub m2: f64,
}

impl Default for PointSection {
    fn default() -> Self {
        Self { m1: 0.7, m2: -0.23 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub m1_range: [f64; 2],
    pub m2_range: [f64; 2],
    /// Grid nodes along M1 and M2.
    pub resolution: [usize; 2],
    pub seeds_per_axis: usize,
    pub seed_extent: f64,
    pub classify: ClassifyConfig,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            m1_range: [-0.5, 1.5],
            m2_range: [-1.0, 0.5],
            resolution: [200, 150],
            seeds_per_axis: 3,
            seed_extent: 1.5,
            classify: ClassifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    /// The map pipeline.
    Map,
    /// `r = M1`, a test hook with straight contours.
    Affine,
    /// `r = |(M1, M2)|`, a test hook with circular contours.
    Circular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSection {
    pub field: FieldKind,
    pub seed_start: [f64; 2],
    pub seed_end: [f64; 2],
    /// Attach exponents and bundle angles to each accepted point.
    pub analyze: bool,
    pub search: TraceConfig,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            field: FieldKind::Map,
            seed_start: [0.68, -0.23],
            seed_end: [0.71, -0.23],
            analyze: true,
            search: TraceConfig {
                initial_direction: [1.0, 0.4],
                ..TraceConfig::default()
            },
        }
    }
}

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub b: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub target_rho: Option<f64>,
    pub n: Option<usize>,
    pub delay: Option<usize>,
}

/// 1-based line of `key` inside `[section]` (or at top level), if present.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| format!(" at line {}", text[..s.start].matches('\n').count() + 1))
                .unwrap_or_default();
            CliError::Config(format!("{origin}{at}: {}", e.message()))
        })?;
        cfg.validate().map_err(|(section, key, msg)| {
            let at = key_line(text, section, key)
                .map(|l| format!(" at line {l}"))
                .unwrap_or_default();
            let dotted = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            CliError::Config(format!("{origin}{at}: {dotted}: {msg}"))
        })?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text, &p.display().to_string())
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.b {
            self.b = v;
        }
        if let Some(v) = o.m1 {
            self.point.m1 = v;
        }
        if let Some(v) = o.m2 {
            self.point.m2 = v;
        }
        if let Some(v) = o.target_rho {
            self.trace.search.target = v;
        }
        if let Some(v) = o.n {
            self.rotation.n = v;
        }
        if let Some(v) = o.delay {
            self.rotation.embedding.delay = v;
        }
        self.validate()
            .map_err(|(section, key, msg)| CliError::Config(format!("command line: {section}.{key}: {msg}")))
    }

    /// Checks every entry; errors name the section and key.
    fn validate(&self) -> Result<(), (&'static str, &'static str, String)> {
        let msg = |e: invcircle::Error| e.to_string();
        if !(self.b != 0.0 && self.b.is_finite()) {
            return Err(("", "b", "must be finite and non-zero".into()));
        }
        MapParams::new(self.b, self.point.m1, self.point.m2).map_err(|e| ("point", "m1", msg(e)))?;
        let s = &self.scan;
        if s.resolution[0] < 1 || s.resolution[1] < 1 {
            return Err(("scan", "resolution", "must be at least 1 in each axis".into()));
        }
        if s.seeds_per_axis < 1 {
            return Err(("scan", "seeds_per_axis", "must be at least 1".into()));
        }
        if !(s.m1_range.iter().chain(&s.m2_range).all(|v| v.is_finite())) {
            return Err(("scan", "m1_range", "ranges must be finite".into()));
        }
        s.classify.validate().map_err(|e| ("scan.classify", "n_keep", msg(e)))?;
        self.rotation.validate().map_err(|e| ("rotation", "n", msg(e)))?;
        self.trace
            .search
            .validate()
            .map_err(|e| ("trace.search", "radius", msg(e)))?;
        self.analysis.validate().map_err(|e| ("analysis", "window", msg(e)))?;
        Ok(())
    }

    pub fn point(&self) -> ParamPoint {
        ParamPoint::new(self.point.m1, self.point.m2)
    }

    pub fn scan_request(&self) -> ScanRequest {
        let s = &self.scan;
        ScanRequest {
            b: self.b,
            m1_range: (s.m1_range[0], s.m1_range[1]),
            m2_range: (s.m2_range[0], s.m2_range[1]),
            resolution: (s.resolution[0], s.resolution[1]),
            seeds: seed_lattice(s.seeds_per_axis, s.seed_extent),
            classify: s.classify,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the effective configuration,
    /// output directory excluded.
    pub fn hash(&self) -> String {
        let mut content = self.clone();
        content.out = PathBuf::new();
        let digest = Sha256::digest(content.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse(&cfg.to_toml(), "test").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = RunConfig::parse("b = 0.5\n[scan]\nresolution = [2, 2]\nbogus = 1\n", "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        let err = RunConfig::parse("b = 0.5\n\n[scan]\nresolution = [0, 2]\n", "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        assert!(err.to_string().contains("scan.resolution"), "{err}");
        let err = RunConfig::parse("\nb = 0.0\n", "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            b: Some(0.4),
            m1: Some(0.1),
            delay: Some(4),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!((cfg.b, cfg.point.m1, cfg.rotation.embedding.delay), (0.4, 0.1, 4));
        assert!(cfg
            .apply(&Overrides {
                b: Some(0.0),
                ..Overrides::default()
            })
            .is_err());
    }
}
