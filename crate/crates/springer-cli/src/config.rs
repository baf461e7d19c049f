//! Run configuration: one structured-text file per run, validated against
//! the core constructors before any computation starts.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use springer_core::momentgraph::Space;
use springer_core::rootdata::{
    build_root_datum, AffineWeyl, DatumSpec, LatticeCharacter, RootDatum, ValuationProfile,
};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunConfig {
    #[serde(default)]
    pub datum: DatumConfig,
    #[serde(default)]
    pub valuations: ValuationConfig,
    #[serde(default)]
    pub s: Option<CharacterConfig>,
    #[serde(default)]
    pub kappa: Option<CharacterConfig>,
    #[serde(default)]
    pub frobenius: FrobeniusConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatumConfig {
    #[serde(rename = "type", default = "default_type")]
    pub cartan: String,
    #[serde(default = "default_form")]
    pub form: String,
    pub pairing: Option<Vec<Vec<i64>>>,
    pub roots: Option<Vec<Vec<i64>>>,
    pub coroots: Option<Vec<Vec<i64>>>,
}

fn default_type() -> String {
    "A1".into()
}

fn default_form() -> String {
    "sc".into()
}

impl Default for DatumConfig {
    fn default() -> Self {
        DatumConfig {
            cartan: default_type(),
            form: default_form(),
            pairing: None,
            roots: None,
            coroots: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ValuationConfig {
    /// Equal valuation on every root.
    pub equal: Option<u32>,
    /// Per-root values keyed `alpha1, alpha2, ...`.
    #[serde(flatten)]
    pub named: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharacterConfig {
    pub order: u32,
    pub values: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrobeniusConfig {
    #[serde(default = "default_q")]
    pub q: Vec<u64>,
    /// "id" or "w" (the reflection in the first positive root), optionally
    /// with a translation part, e.g. "w+1".
    #[serde(default = "default_tau")]
    pub tau: String,
}

fn default_q() -> Vec<u64> {
    vec![2]
}

fn default_tau() -> String {
    "id".into()
}

impl Default for FrobeniusConfig {
    fn default() -> Self {
        FrobeniusConfig {
            q: default_q(),
            tau: default_tau(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsConfig {
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    #[serde(default = "default_mmax")]
    pub mmax: usize,
    #[serde(default = "default_window")]
    pub window: i64,
    #[serde(default = "default_vmax")]
    pub vmax: u32,
    #[serde(default = "default_degree_max")]
    pub degree_max: u32,
    #[serde(default = "default_jcap")]
    pub jcap: u32,
}

fn default_kmax() -> u32 {
    4
}
fn default_mmax() -> usize {
    6
}
fn default_window() -> i64 {
    13
}
fn default_vmax() -> u32 {
    4
}
fn default_degree_max() -> u32 {
    6
}
fn default_jcap() -> u32 {
    8
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            kmax: default_kmax(),
            mmax: default_mmax(),
            window: default_window(),
            vmax: default_vmax(),
            degree_max: default_degree_max(),
            jcap: default_jcap(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "springer-out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).context("parsing config")?;
        Ok(cfg)
    }

    pub fn datum(&self) -> Result<RootDatum> {
        let spec = if let (Some(pairing), Some(roots), Some(coroots)) = (
            self.datum.pairing.clone(),
            self.datum.roots.clone(),
            self.datum.coroots.clone(),
        ) {
            DatumSpec::Explicit {
                pairing,
                roots,
                coroots,
            }
        } else {
            DatumSpec::Named {
                cartan: self.datum.cartan.clone(),
                adjoint: match self.datum.form.as_str() {
                    "adjoint" => true,
                    "sc" => false,
                    other => {
                        bail!("unknown lattice form {other:?} (expected \"sc\" or \"adjoint\")")
                    }
                },
            }
        };
        Ok(build_root_datum(&spec)?)
    }

    pub fn valuations(&self, d: &RootDatum) -> Result<ValuationProfile> {
        if let Some(v) = self.valuations.equal {
            return Ok(ValuationProfile::equal(d, v));
        }
        if self.valuations.named.is_empty() {
            return Ok(ValuationProfile::equal(d, 1));
        }
        let mut values = vec![0u32; d.num_positive_roots()];
        for (key, v) in &self.valuations.named {
            let Some(idx) = key
                .strip_prefix("alpha")
                .and_then(|i| i.parse::<usize>().ok())
            else {
                bail!("valuation key {key:?} is not of the form alphaN");
            };
            if idx == 0 || idx > values.len() {
                bail!(
                    "valuation key {key:?} out of range: the datum has {} positive roots",
                    values.len()
                );
            }
            values[idx - 1] = *v;
        }
        Ok(ValuationProfile::new(values))
    }

    pub fn character(cfg: &Option<CharacterConfig>, d: &RootDatum) -> Result<LatticeCharacter> {
        match cfg {
            None => Ok(LatticeCharacter::trivial(d.rank())),
            Some(c) => {
                if c.order == 0 {
                    bail!("character order must be positive");
                }
                if c.values.len() != d.rank() {
                    bail!(
                        "character needs {} exponents, got {}",
                        d.rank(),
                        c.values.len()
                    );
                }
                Ok(LatticeCharacter {
                    order: c.order,
                    exponents: c.values.clone(),
                })
            }
        }
    }

    pub fn tau(&self, d: &RootDatum, override_tau: Option<&str>) -> Result<AffineWeyl> {
        let text = override_tau.unwrap_or(&self.frobenius.tau);
        parse_tau(text, d)
    }
}

pub fn parse_tau(text: &str, d: &RootDatum) -> Result<AffineWeyl> {
    let (finite_part, shift) = match text.split_once('+') {
        Some((f, s)) => (
            f.trim(),
            s.trim()
                .parse::<i64>()
                .with_context(|| format!("bad translation in tau {text:?}"))?,
        ),
        None => (text.trim(), 0),
    };
    let mut tau = match finite_part {
        "id" | "" => AffineWeyl::identity(d.rank()),
        "w" | "w_alpha" | "w1" => {
            if d.num_positive_roots() == 0 {
                bail!("the datum has no roots, so no reflection is available");
            }
            AffineWeyl::from_reflection(d, 0)
        }
        other => bail!("unknown tau {other:?} (expected \"id\" or \"w\")"),
    };
    if shift != 0 {
        let mut t = vec![0i64; d.rank()];
        t[0] = shift;
        tau = AffineWeyl::from_translation(t).compose(&tau);
    }
    Ok(tau)
}

pub fn parse_space(text: &str) -> Result<Space> {
    match text {
        "grassmannian" => Ok(Space::Grassmannian),
        "flag" => Ok(Space::Flag),
        other => bail!("unknown space {other:?} (expected \"grassmannian\" or \"flag\")"),
    }
}
