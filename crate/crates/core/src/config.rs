//! Run configuration: TOML file, command-line overrides and defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::curve::Curve;
use crate::serial::vec2;
use crate::verify::manifest::{self, Bound};
use crate::{c64, CVec2, Error, Result};

pub const DEFAULT_BRANCH: [f64; 5] = [0.0, 1.0, 2.0, 3.0, 4.0];

/// Parameters shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub branch: [f64; 5],
    /// Point of `T_1` used by the operators built from `K` and by the
    /// magnetic regime.
    pub c: CVec2,
    /// `None` selects the half-period `(Omega_11/2 - Omega_21/2, Omega_12/2 - Omega_22/2)`.
    pub cprime: Option<CVec2>,
    /// Real pair for the regime with singular coefficients.
    pub theorem1_c: CVec2,
    pub theorem1_cprime: CVec2,
    pub seed: u64,
    pub grid: usize,
    /// Multiplies every upper-bound tolerance.
    pub tol_scale: f64,
    /// Tolerances by check name; filled from the manifest defaults.
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            branch: DEFAULT_BRANCH,
            c: [c64(0.0, 0.13), c64(0.0, 0.29)],
            cprime: None,
            theorem1_c: [c64(0.13, 0.0), c64(0.29, 0.0)],
            theorem1_cprime: [c64(0.31, 0.0), c64(0.17, 0.0)],
            seed: 42,
            grid: 10,
            tol_scale: 1.0,
            tolerances: manifest::default_tolerances(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Keys accepted in a TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    branch: Option<[f64; 5]>,
    #[serde(default, with = "opt_cvec2")]
    c: Option<CVec2>,
    #[serde(default, with = "opt_cvec2")]
    cprime: Option<CVec2>,
    #[serde(default, with = "opt_cvec2")]
    theorem1_c: Option<CVec2>,
    #[serde(default, with = "opt_cvec2")]
    theorem1_cprime: Option<CVec2>,
    seed: Option<u64>,
    grid: Option<usize>,
    tol_scale: Option<f64>,
    tolerances: Option<BTreeMap<String, f64>>,
    output_dir: Option<PathBuf>,
}

mod opt_cvec2 {
    use serde::{Deserialize, Deserializer};

    use crate::{CVec2, C64};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CVec2>, D::Error> {
        let a = Option::<[[f64; 2]; 2]>::deserialize(d)?;
        Ok(a.map(|a| [C64::new(a[0][0], a[0][1]), C64::new(a[1][0], a[1][1])]))
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub branch: Option<[f64; 5]>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub tol_scale: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Parses TOML text over the defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg = RunConfig::default();
        if let Some(b) = file.branch {
            cfg.branch = b;
        }
        if let Some(c) = file.c {
            cfg.c = c;
        }
        cfg.cprime = file.cprime;
        if let Some(c) = file.theorem1_c {
            cfg.theorem1_c = c;
        }
        if let Some(c) = file.theorem1_cprime {
            cfg.theorem1_cprime = c;
        }
        if let Some(s) = file.seed {
            cfg.seed = s;
        }
        if let Some(g) = file.grid {
            cfg.grid = g;
        }
        if let Some(t) = file.tol_scale {
            cfg.tol_scale = t;
        }
        if let Some(o) = file.output_dir {
            cfg.output_dir = o;
        }
        if let Some(tols) = file.tolerances {
            for (name, v) in tols {
                if !cfg.tolerances.contains_key(&name) {
                    let valid: Vec<&str> = cfg.tolerances.keys().map(String::as_str).collect();
                    return Err(Error::Config(format!(
                        "unknown tolerance `{name}`; valid names: {}",
                        valid.join(", ")
                    )));
                }
                cfg.tolerances.insert(name, v);
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_toml(&text)
    }

    /// File (if any), then overrides, then validation.
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(b) = ov.branch {
            self.branch = b;
        }
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(g) = ov.grid {
            self.grid = g;
        }
        if let Some(t) = ov.tol_scale {
            self.tol_scale = t;
        }
        if let Some(o) = &ov.output_dir {
            self.output_dir = o.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        Curve::new(self.branch)?;
        if self.grid < 2 {
            return Err(Error::Config(format!("grid must be at least 2, got {}", self.grid)));
        }
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return Err(Error::Config(format!("tol_scale must be positive, got {}", self.tol_scale)));
        }
        for (name, v) in &self.tolerances {
            let lower = manifest::spec(name).is_some_and(|s| s.bound == Bound::Lower);
            if !v.is_finite() || *v < 0.0 || (!lower && *v == 0.0) {
                return Err(Error::Config(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Effective tolerance of a check; upper bounds scale with `tol_scale`.
    pub fn tolerance(&self, name: &str) -> f64 {
        let spec = manifest::spec(name).unwrap_or_else(|| panic!("check `{name}` missing from the manifest"));
        let base = self.tolerances.get(name).copied().unwrap_or(spec.default);
        match spec.bound {
            Bound::Upper => base * self.tol_scale,
            Bound::Lower => base,
        }
    }

    /// Everything that influences results; the output directory is left out.
    pub fn to_json(&self) -> Value {
        json!({
            "branch": self.branch,
            "c": vec2(self.c),
            "cprime": self.cprime.map(vec2),
            "theorem1_c": vec2(self.theorem1_c),
            "theorem1_cprime": vec2(self.theorem1_cprime),
            "seed": self.seed,
            "grid": self.grid,
            "tol_scale": self.tol_scale,
            "tolerances": self.tolerances,
        })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.to_json()).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Serializable view used in artifacts.
#[derive(Debug, Serialize)]
pub struct ConfigStamp {
    pub config_hash: String,
    pub config: Value,
}

impl From<&RunConfig> for ConfigStamp {
    fn from(cfg: &RunConfig) -> Self {
        ConfigStamp {
            config_hash: cfg.hash(),
            config: cfg.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let e = RunConfig::from_toml("sede = 3").unwrap_err().to_string();
        assert!(e.contains("sede") && e.contains("seed") && e.contains("branch"), "{e}");
    }

    #[test]
    fn unknown_tolerance_is_rejected() {
        let e = RunConfig::from_toml("[tolerances]\nnot_a_check = 1.0").unwrap_err().to_string();
        assert!(e.contains("not_a_check") && e.contains("fay_residual"), "{e}");
    }

    #[test]
    fn bad_branch_surfaces_curve_error() {
        let cfg = RunConfig::from_toml("branch = [1.0, 0.0, 2.0, 3.0, 4.0]").unwrap();
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("non-increasing branch points"), "{e}");
    }

    #[test]
    fn overrides_win_and_change_the_hash() {
        let mut cfg = RunConfig::from_toml("seed = 3\ngrid = 4").unwrap();
        let h = cfg.hash();
        cfg.apply(&Overrides {
            seed: Some(7),
            ..Overrides::default()
        });
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.grid, 4);
        assert_ne!(cfg.hash(), h);
    }

    #[test]
    fn tol_scale_applies_to_upper_bounds_only() {
        let mut cfg = RunConfig::default();
        let up = cfg.tolerance("fay_residual");
        let low = cfg.tolerance("theorem1_blowup");
        cfg.tol_scale = 10.0;
        assert_eq!(cfg.tolerance("fay_residual"), 10.0 * up);
        assert_eq!(cfg.tolerance("theorem1_blowup"), low);
    }

    #[test]
    fn complex_pairs_parse() {
        let cfg = RunConfig::from_toml("c = [[0.0, 0.2], [0.0, 0.1]]").unwrap();
        assert_eq!(cfg.c, [c64(0.0, 0.2), c64(0.0, 0.1)]);
    }
}
