use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::DynamicsConfig;
use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;
use crate::gossip::TopologyKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Synchronous,
    Async,
    GeneratorTest,
    AveragedOde,
    Sweep,
}

/// A complete experiment description. Every section except `[experiment]`
/// and `[manifold]` may be omitted; [`ExperimentConfig::resolve`] fills in
/// the defaults so the echoed config is self-contained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub manifold: ManifoldSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub gossip: GossipSection,
    #[serde(default)]
    pub generator: GeneratorSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Number of agents `N`.
    pub population: usize,
    /// Latent dimension `m`.
    pub latent_dim: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "defaults::steps")]
    pub steps: usize,
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "defaults::metrics_every")]
    pub metrics_every: usize,
    /// Frobenius norm of the Gaussian initial `W`.
    #[serde(default = "defaults::init_frobenius")]
    pub init_frobenius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default = "defaults::eta_x")]
    pub eta_x: f64,
    #[serde(default = "defaults::eta_w")]
    pub eta_w: f64,
    #[serde(default = "defaults::diffusion")]
    pub diffusion: f64,
    #[serde(default = "defaults::one")]
    pub beta: f64,
    #[serde(default = "defaults::one")]
    pub gamma: f64,
    #[serde(default = "defaults::one")]
    pub lambda_reg: f64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let d = DynamicsConfig::default();
        DynamicsSection {
            eta_x: d.eta_x,
            eta_w: d.eta_w,
            diffusion: d.diffusion,
            beta: d.beta,
            gamma: d.gamma,
            lambda_reg: d.lambda_reg,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Values of `η_w / η_x`; `η_x` is held fixed.
    #[serde(default = "defaults::ratios")]
    pub ratios: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { ratios: defaults::ratios() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GossipSection {
    /// `ring`, `complete` or `random_regular`.
    #[serde(default = "defaults::topology")]
    pub topology: String,
    /// Degree for `random_regular`.
    #[serde(default = "defaults::degree")]
    pub degree: usize,
}

impl Default for GossipSection {
    fn default() -> Self {
        GossipSection { topology: defaults::topology(), degree: defaults::degree() }
    }
}

impl GossipSection {
    pub fn kind(&self) -> Result<TopologyKind> {
        match self.topology.as_str() {
            "ring" => Ok(TopologyKind::Ring),
            "complete" => Ok(TopologyKind::Complete),
            "random_regular" => Ok(TopologyKind::RandomRegular(self.degree)),
            other => Err(Error::Config(format!("gossip.topology: unknown topology {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    /// Swarm sizes of the schedule, paired index-wise with `radii`.
    #[serde(default = "defaults::sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "defaults::radii")]
    pub radii: Vec<f64>,
    /// Test function: `cos` (first coordinate over the radius) or `z` (last).
    #[serde(default = "defaults::field")]
    pub field: String,
    /// Potential: `zero`, or `cos`/`z` as for `field`.
    #[serde(default = "defaults::potential")]
    pub potential: String,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        GeneratorSection {
            sizes: defaults::sizes(),
            radii: defaults::radii(),
            field: defaults::field(),
            potential: defaults::potential(),
        }
    }
}

/// Manifold parameters. Only `kind` is required; the parameters relevant to
/// the kind are filled with defaults and the rest must be absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub major: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Explicit spectrum for `synthetic_spectrum`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    /// Power-law spectrum `λ_k = top_eigenvalue · k^(−decay)` when no
    /// explicit `eigenvalues` are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_eigenvalue: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_seed: Option<u64>,
}

mod defaults {
    pub fn steps() -> usize {
        15_000
    }
    pub fn seeds() -> Vec<u64> {
        vec![0, 1, 2, 3, 4]
    }
    pub fn metrics_every() -> usize {
        100
    }
    pub fn init_frobenius() -> f64 {
        0.5
    }
    pub fn eta_x() -> f64 {
        1e-2
    }
    pub fn eta_w() -> f64 {
        1e-3
    }
    pub fn diffusion() -> f64 {
        0.5
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn ratios() -> Vec<f64> {
        vec![1.5, 0.05, 0.001]
    }
    pub fn topology() -> String {
        "ring".into()
    }
    pub fn degree() -> usize {
        4
    }
    pub fn sizes() -> Vec<usize> {
        vec![500, 2000, 8000]
    }
    pub fn radii() -> Vec<f64> {
        vec![0.45, 0.30, 0.20]
    }
    pub fn field() -> String {
        "cos".into()
    }
    pub fn potential() -> String {
        "zero".into()
    }
}

impl ManifoldSection {
    /// Fills the defaults for `kind`, rejects parameters that do not belong
    /// to it, and builds the manifold.
    pub fn resolve(&self) -> Result<(ManifoldSection, ManifoldSpec)> {
        let mut out = ManifoldSection { kind: self.kind.clone(), ..Default::default() };
        let mut used: Vec<&str> = Vec::new();
        let spec = match self.kind.as_str() {
            "circle" => {
                used.push("radius");
                out.radius = Some(self.radius.unwrap_or(1.0));
                ManifoldSpec::Circle { radius: out.radius.unwrap() }
            }
            "sphere" => {
                used.extend(["radius", "ambient_dim"]);
                out.radius = Some(self.radius.unwrap_or(1.0));
                out.ambient_dim = Some(self.ambient_dim.unwrap_or(3));
                ManifoldSpec::Sphere { radius: out.radius.unwrap(), ambient_dim: out.ambient_dim.unwrap() }
            }
            "swiss_roll" => {
                used.extend(["t_min", "t_max", "height", "scale"]);
                out.t_min = Some(self.t_min.unwrap_or(1.5 * PI));
                out.t_max = Some(self.t_max.unwrap_or(4.5 * PI));
                out.height = Some(self.height.unwrap_or(2.0));
                out.scale = Some(self.scale.unwrap_or(0.1));
                ManifoldSpec::SwissRoll {
                    t_min: out.t_min.unwrap(),
                    t_max: out.t_max.unwrap(),
                    height: out.height.unwrap(),
                    scale: out.scale.unwrap(),
                }
            }
            "s_curve" => {
                used.extend(["height", "scale"]);
                out.height = Some(self.height.unwrap_or(2.0));
                out.scale = Some(self.scale.unwrap_or(1.0));
                ManifoldSpec::SCurve { height: out.height.unwrap(), scale: out.scale.unwrap() }
            }
            "torus" => {
                used.extend(["major", "minor"]);
                out.major = Some(self.major.unwrap_or(2.0));
                out.minor = Some(self.minor.unwrap_or(0.5));
                ManifoldSpec::Torus { major: out.major.unwrap(), minor: out.minor.unwrap() }
            }
            "moebius_strip" => {
                used.extend(["radius", "half_width"]);
                out.radius = Some(self.radius.unwrap_or(1.0));
                out.half_width = Some(self.half_width.unwrap_or(0.4));
                ManifoldSpec::MoebiusStrip { radius: out.radius.unwrap(), half_width: out.half_width.unwrap() }
            }
            "synthetic_spectrum" => {
                used.extend(["eigenvalues", "ambient_dim", "top_eigenvalue", "decay", "rotation_seed"]);
                let eigenvalues = match &self.eigenvalues {
                    Some(e) => {
                        if self.top_eigenvalue.is_some() || self.decay.is_some() {
                            return Err(Error::Config(
                                "manifold: give either eigenvalues or top_eigenvalue/decay, not both".into(),
                            ));
                        }
                        e.clone()
                    }
                    None => {
                        let dim = self.ambient_dim.unwrap_or(100);
                        let top = self.top_eigenvalue.unwrap_or(1.0);
                        let decay = self.decay.unwrap_or(1.0);
                        out.ambient_dim = Some(dim);
                        out.top_eigenvalue = Some(top);
                        out.decay = Some(decay);
                        (1..=dim).map(|k| top * (k as f64).powf(-decay)).collect()
                    }
                };
                if let (Some(e), Some(d)) = (&self.eigenvalues, self.ambient_dim) {
                    if e.len() != d {
                        return Err(Error::Config(format!("manifold: {} eigenvalues but ambient_dim = {d}", e.len())));
                    }
                }
                if self.eigenvalues.is_some() {
                    out.eigenvalues = Some(eigenvalues.clone());
                }
                out.rotation_seed = Some(self.rotation_seed.unwrap_or(0));
                ManifoldSpec::synthetic(eigenvalues, out.rotation_seed.unwrap())
                    .map_err(|e| Error::Config(format!("manifold: {e}")))?
            }
            other => return Err(Error::Config(format!("manifold.kind: unknown manifold {other:?}"))),
        };
        let present = [
            ("radius", self.radius.is_some()),
            ("ambient_dim", self.ambient_dim.is_some()),
            ("t_min", self.t_min.is_some()),
            ("t_max", self.t_max.is_some()),
            ("height", self.height.is_some()),
            ("scale", self.scale.is_some()),
            ("major", self.major.is_some()),
            ("minor", self.minor.is_some()),
            ("half_width", self.half_width.is_some()),
            ("eigenvalues", self.eigenvalues.is_some()),
            ("top_eigenvalue", self.top_eigenvalue.is_some()),
            ("decay", self.decay.is_some()),
            ("rotation_seed", self.rotation_seed.is_some()),
        ];
        if let Some((name, _)) = present.iter().find(|(name, set)| *set && !used.contains(name)) {
            return Err(Error::Config(format!("manifold.{name} does not apply to kind {:?}", self.kind)));
        }
        spec.validate().map_err(|e| Error::Config(format!("manifold: {e}")))?;
        Ok((out, spec))
    }
}

/// A validated configuration with its manifold built and defaults echoed.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub manifold: ManifoldSpec,
    pub hash: String,
}

impl Resolved {
    pub fn dynamics(&self) -> DynamicsConfig {
        let d = &self.config.dynamics;
        DynamicsConfig {
            eta_x: d.eta_x,
            eta_w: d.eta_w,
            diffusion: d.diffusion,
            beta: d.beta,
            gamma: d.gamma,
            lambda_reg: d.lambda_reg,
            steps: self.config.experiment.steps,
        }
    }

    /// A copy with a different configuration, re-validated and re-hashed.
    pub fn with(&self, edit: impl FnOnce(&mut ExperimentConfig)) -> Result<Resolved> {
        let mut config = self.config.clone();
        edit(&mut config);
        config.resolve()
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    /// Validates, fills defaults and hashes the canonical form.
    pub fn resolve(&self) -> Result<Resolved> {
        let (manifold_section, manifold) = self.manifold.resolve()?;
        let mut config = self.clone();
        config.manifold = manifold_section;
        let e = &config.experiment;
        let n = manifold.ambient_dim();
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::Config(format!("experiment.{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        positive("population", e.population)?;
        positive("latent_dim", e.latent_dim)?;
        positive("steps", e.steps)?;
        positive("metrics_every", e.metrics_every)?;
        if e.latent_dim > n {
            return Err(Error::Config(format!("experiment.latent_dim = {} exceeds ambient dimension {n}", e.latent_dim)));
        }
        if e.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds must not be empty".into()));
        }
        if !(e.init_frobenius > 0.0) || !e.init_frobenius.is_finite() {
            return Err(Error::Config("experiment.init_frobenius must be positive".into()));
        }
        let d = &config.dynamics;
        for (name, v) in [
            ("eta_x", d.eta_x),
            ("eta_w", d.eta_w),
            ("diffusion", d.diffusion),
            ("beta", d.beta),
            ("gamma", d.gamma),
            ("lambda_reg", d.lambda_reg),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("dynamics.{name} must be finite and non-negative, got {v}")));
            }
        }
        if d.eta_x > 0.0 && d.eta_w > d.eta_x {
            log::warn!(
                "eta_w = {} exceeds eta_x = {}: the plasticity is no longer slow and the averaging argument does not apply",
                d.eta_w,
                d.eta_x
            );
        }
        if config.sweep.ratios.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::Config("sweep.ratios must be finite and non-negative".into()));
        }
        config.gossip.kind()?;
        let g = &config.generator;
        if g.sizes.len() != g.radii.len() || g.sizes.is_empty() {
            return Err(Error::Config("generator.sizes and generator.radii must be non-empty and of equal length".into()));
        }
        if g.radii.iter().any(|r| !(*r > 0.0)) || g.sizes.iter().any(|&s| s < 2) {
            return Err(Error::Config("generator schedule needs radii > 0 and sizes ≥ 2".into()));
        }
        for (name, v) in [("field", &g.field), ("potential", &g.potential)] {
            if !["cos", "z"].contains(&v.as_str()) && !(name == "potential" && v == "zero") {
                return Err(Error::Config(format!("generator.{name}: unknown choice {v:?}")));
            }
        }
        let hash = config_hash(&config);
        Ok(Resolved { config, manifold, hash })
    }
}

/// SHA-256 of the canonical JSON form of the resolved config.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serialises");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_config(path: &Path) -> Result<Resolved> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml(&text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[experiment]\npopulation = 500\nlatent_dim = 2\n\n[manifold]\nkind = \"swiss_roll\"\n";

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let r = ExperimentConfig::from_toml(MINIMAL).unwrap().resolve().unwrap();
        let e = &r.config.experiment;
        assert_eq!((e.steps, e.metrics_every, e.mode), (15_000, 100, Mode::Synchronous));
        assert_eq!(e.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!(e.init_frobenius, 0.5);
        assert_eq!(r.dynamics(), DynamicsConfig::default());
        assert_eq!(r.config.manifold.scale, Some(0.1));
        assert_eq!(r.manifold, ManifoldSpec::swiss_roll_default());
        assert_eq!(r.config.sweep.ratios, vec![1.5, 0.05, 0.001]);
    }

    #[test]
    fn echo_round_trips_to_the_same_hash() {
        let r = ExperimentConfig::from_toml(MINIMAL).unwrap().resolve().unwrap();
        let echoed = toml::to_string(&r.config).unwrap();
        let again = ExperimentConfig::from_toml(&echoed).unwrap().resolve().unwrap();
        assert_eq!(again.hash, r.hash);
        assert_eq!(r.hash.len(), 64);
        let other = r.with(|c| c.dynamics.eta_w = 2e-3).unwrap();
        assert_ne!(other.hash, r.hash);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ExperimentConfig::from_toml("[experiment]\npopulation = 500\nlatent_dim = = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn missing_and_misplaced_fields_are_named() {
        let err = ExperimentConfig::from_toml("[experiment]\npopulation = 5\n[manifold]\nkind = \"circle\"\n").unwrap_err();
        assert!(err.to_string().contains("latent_dim"), "{err}");
        let bad = MINIMAL.replace("kind = \"swiss_roll\"", "kind = \"circle\"\nmajor = 2.0");
        let err = ExperimentConfig::from_toml(&bad).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("manifold.major"), "{err}");
        let wide = MINIMAL.replace("latent_dim = 2", "latent_dim = 4");
        assert!(ExperimentConfig::from_toml(&wide).unwrap().resolve().is_err());
    }

    #[test]
    fn sweep_ratios_are_read() {
        let text = format!("{MINIMAL}\n[sweep]\nratios = [1.5, 0.05, 0.001]\n");
        let r = ExperimentConfig::from_toml(&text).unwrap().resolve().unwrap();
        assert_eq!(r.config.sweep.ratios.len(), 3);
    }

    #[test]
    fn power_law_spectrum() {
        let text = "[experiment]\npopulation = 10\nlatent_dim = 2\n[manifold]\nkind = \"synthetic_spectrum\"\nambient_dim = 4\ntop_eigenvalue = 8.0\ndecay = 1.0\n";
        let r = ExperimentConfig::from_toml(text).unwrap().resolve().unwrap();
        match &r.manifold {
            ManifoldSpec::SyntheticSpectrum { eigenvalues, .. } => assert_eq!(eigenvalues, &vec![8.0, 4.0, 8.0 / 3.0, 2.0]),
            other => panic!("{other:?}"),
        }
    }
}
