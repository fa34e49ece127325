//! Run settings from command-line flags and TOML files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use mhdmg_core::multigrid::default_interval;
use mhdmg_core::vanka::VankaVariant;

/// Every setting is optional; unset ones fall back to the per-verb defaults.
/// Keys in a config file use the flag names with `_` for `-`.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: Option<usize>,
    pub levels: Option<usize>,
    /// A variant name, or `all` for the Hartmann table.
    pub variant: Option<String>,
    pub re: Option<f64>,
    pub rem: Option<f64>,
    pub cycle: Option<[usize; 2]>,
    pub cheb: Option<[f64; 2]>,
    pub dt: Option<f64>,
    pub tfinal: Option<f64>,
    pub out: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub balanced: Option<bool>,
    pub coarse_correction: Option<bool>,
    pub max_iterations: Option<usize>,
    pub ha_start: Option<f64>,
    pub ha_step: Option<f64>,
    pub ha_max: Option<f64>,
    pub meshes: Option<Vec<usize>>,
    pub coarse: Option<usize>,
    pub direct: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `self` with every setting present in `top` replaced.
    pub fn overridden_by(mut self, top: &RunConfig) -> RunConfig {
        overlay!(
            self, top, mesh, levels, variant, re, rem, cycle, cheb, dt, tfinal, out, epsilon, balanced,
            coarse_correction, max_iterations, ha_start, ha_step, ha_max, meshes, coarse, direct
        );
        self
    }

    pub fn variants(&self, default: &[VankaVariant]) -> anyhow::Result<Vec<VankaVariant>> {
        match self.variant.as_deref() {
            None => Ok(default.to_vec()),
            Some("all") => Ok(VankaVariant::ALL.to_vec()),
            Some(name) => Ok(vec![VankaVariant::parse(name)?]),
        }
    }
}

/// Multigrid and Krylov settings shared by the runners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub variant: VankaVariant,
    pub cycle: (usize, usize),
    pub cheb: (f64, f64),
    pub max_iterations: usize,
    pub coarse_correction: bool,
}

impl SolverSettings {
    pub fn new(variant: VankaVariant) -> Self {
        SolverSettings {
            variant,
            cycle: (2, 2),
            cheb: default_interval(variant),
            max_iterations: 200,
            coarse_correction: true,
        }
    }

    /// Applies the solver-related settings of `cfg`.
    pub fn with(mut self, cfg: &RunConfig) -> Self {
        if let Some([a, b]) = cfg.cycle {
            self.cycle = (a, b);
        }
        if let Some([a, b]) = cfg.cheb {
            self.cheb = (a, b);
        }
        if let Some(m) = cfg.max_iterations {
            self.max_iterations = m;
        }
        if let Some(c) = cfg.coarse_correction {
            self.coarse_correction = c;
        }
        self
    }
}

/// Coarsest resolution for a finest mesh of `mesh` cells per side after
/// `levels − 1` uniform refinements.
pub fn coarsest(mesh: usize, levels: usize) -> anyhow::Result<usize> {
    if levels == 0 || levels > 12 {
        bail!("level count {levels} out of range");
    }
    let f = 1usize << (levels - 1);
    if mesh == 0 || mesh % f != 0 {
        bail!("a {mesh}x{mesh} mesh is not {} refinements of an integer grid", levels - 1);
    }
    Ok(mesh / f)
}
