//! Study configuration: a flat `key = value` text file overridable by
//! command-line flags of the same names.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    Sphere,
    Torus,
}

impl std::str::FromStr for SurfaceKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(SurfaceKind::Sphere),
            "torus" => Ok(SurfaceKind::Torus),
            other => bail!("unknown surface '{other}' (expected sphere or torus)"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => bail!("unknown format '{other}' (expected csv or json)"),
        }
    }
}

/// Parameters of one study run.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub surface: SurfaceKind,
    pub k: usize,
    /// Geometry degree.
    pub s: usize,
    /// Element degree.
    pub r: usize,
    /// Number of refinement levels in the study.
    pub levels: usize,
    /// Coarsest refinement level included.
    pub base_level: usize,
    /// Spherical-harmonic degree of the manufactured solution.
    pub ell: u32,
    pub quad_degree: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Treat the mesh itself as the exact surface (no geometric crime);
    /// isolates the finite element error from the geometry error.
    pub exact_geometry: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            surface: SurfaceKind::Sphere,
            k: 0,
            s: 1,
            r: 1,
            levels: 4,
            base_level: 1,
            ell: 2,
            quad_degree: 6,
            seed: 42,
            out: None,
            format: OutputFormat::Csv,
            exact_geometry: false,
        }
    }
}

impl StudyConfig {
    /// Parse a flat `key = value` file ('#' starts a comment).
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {} is not 'key = value': {raw}", lineno + 1);
            };
            self.apply_key(key.trim(), value.trim())
                .with_context(|| format!("config line {}", lineno + 1))?;
        }
        Ok(())
    }

    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('_', "-").as_str() {
            "surface" => self.surface = value.parse()?,
            "k" => self.k = value.parse()?,
            "s" => self.s = value.parse()?,
            "r" => self.r = value.parse()?,
            "levels" => self.levels = value.parse()?,
            "base-level" => self.base_level = value.parse()?,
            "ell" => self.ell = value.parse()?,
            "quad-degree" => self.quad_degree = value.parse()?,
            "seed" => self.seed = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "exact-geometry" => {
                self.exact_geometry = value.parse().map_err(|_| anyhow::anyhow!("bad bool"))?
            }
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    /// Enforce the supported parameter combinations.
    pub fn validate(&self) -> Result<()> {
        if self.k > 2 {
            bail!("k must be 0, 1 or 2");
        }
        if !(1..=2).contains(&self.s) || !(1..=2).contains(&self.r) {
            bail!("geometry and element degrees must be 1 or 2");
        }
        if self.r == 2 && self.k != 0 {
            bail!("r = 2 elements are only wired up for k = 0");
        }
        if self.surface == SurfaceKind::Torus && (self.s != 1 || self.r != 1) {
            bail!("torus studies are restricted to s = 1, r = 1");
        }
        if self.levels < 1 {
            bail!("need at least one level");
        }
        if !(1..=3).contains(&self.ell) {
            bail!("manufactured solutions ship for ell = 1, 2, 3");
        }
        if self.quad_degree < 2 * self.s {
            bail!("quadrature degree must be at least 2s");
        }
        Ok(())
    }

    /// Levels included in the run.
    pub fn level_range(&self) -> std::ops::Range<usize> {
        self.base_level..self.base_level + self.levels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_round_trip() {
        let dir = std::env::temp_dir().join("hodgelab-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("study.cfg");
        std::fs::write(&path, "surface = torus\nk = 1\nlevels = 3 # comment\nquad_degree = 4\n")
            .unwrap();
        let mut cfg = StudyConfig::default();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.surface, SurfaceKind::Torus);
        assert_eq!(cfg.k, 1);
        assert_eq!(cfg.levels, 3);
        assert_eq!(cfg.quad_degree, 4);
    }

    #[test]
    fn invalid_combinations_rejected() {
        let cfg = StudyConfig { r: 2, k: 1, ..StudyConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = StudyConfig { surface: SurfaceKind::Torus, s: 2, ..StudyConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
