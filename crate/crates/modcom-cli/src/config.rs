//! Run configuration: the TOML file schema, command-line overrides, and
//! the fully resolved settings a run executes against. Precedence is
//! command-line flag over config file over built-in default.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use modcom::models::{ModelKind, ModelSpec};

/// Tolerance keys understood by the runner, with their defaults.
pub const TOLERANCE_KEYS: [(&str, f64); 2] = [
    // Threshold for the conditional-independence implication checks.
    ("markov", 1e-9),
    // Eigenvalue floor of the dense modular-operator logarithms.
    ("floor", 1e-12),
];

/// Scalar computations and reports the runner knows how to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Computation {
    J,
    Ccc,
    Tee,
    Cmi,
    Current,
    EdgeCurrent,
    VerifyMarkov,
    VerifyGaussian,
}

impl Computation {
    pub fn name(&self) -> &'static str {
        match self {
            Computation::J => "j",
            Computation::Ccc => "ccc",
            Computation::Tee => "tee",
            Computation::Cmi => "cmi",
            Computation::Current => "current",
            Computation::EdgeCurrent => "edge-current",
            Computation::VerifyMarkov => "verify-markov",
            Computation::VerifyGaussian => "verify-gaussian",
        }
    }
}

/// State-representation backend selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum Backend {
    /// Exact dense representation (synthetic qudit models).
    Dense,
    /// Covariance-matrix representation (fermionic lattice models).
    Gaussian,
    /// Pick by model kind: lattice fermions run Gaussian, the rest dense.
    Auto,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Dense => "dense",
            Backend::Gaussian => "gaussian",
            Backend::Auto => "auto",
        }
    }

    /// Resolve `auto` against a model kind.
    pub fn resolve(self, kind: Option<ModelKind>) -> Backend {
        match self {
            Backend::Auto => match kind {
                Some(k) if k.is_fermionic_lattice() => Backend::Gaussian,
                _ => Backend::Dense,
            },
            other => other,
        }
    }
}

/// Disk radius: a single value or a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusSpec {
    One(u32),
    Sweep(Vec<u32>),
}

impl RadiusSpec {
    pub fn list(&self) -> Vec<u32> {
        match self {
            RadiusSpec::One(r) => vec![*r],
            RadiusSpec::Sweep(rs) => rs.clone(),
        }
    }
}

/// One partition-deformation step: reassign a cell to a region.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformStep {
    /// Coarse cell `[q, r]`.
    pub cell: [i32; 2],
    /// Target region: "a", "b", or "c".
    pub to: String,
}

/// Geometry section: the coarse disk and its tripartition.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Disk radius in coarse cells (single value or sweep array).
    pub radius: Option<RadiusSpec>,
    /// Disk center `[q, r]`; defaults to the middle of the coarse lattice.
    pub center: Option<[i32; 2]>,
    /// Boundary-cut index for edge-current reports.
    pub cut: Option<usize>,
    /// Deformation script applied to the standard partition, in order.
    #[serde(default)]
    pub deform: Vec<DeformStep>,
    /// Explicit site blocks `[A, B, C]` for dense models (site indices).
    pub regions: Option<[Vec<usize>; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputationSection {
    pub kind: Computation,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory reports are written into.
    pub dir: Option<PathBuf>,
    /// Render current maps as SVG alongside the JSON.
    pub emit_svg: Option<bool>,
}

/// The TOML file schema.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub geometry: Geometry,
    pub computation: Option<ComputationSection>,
    pub backend: Option<Backend>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputSection,
    /// Overrides `model.seed` when set (the command-line flag wins over
    /// both).
    pub seed: Option<u64>,
}

/// Command-line overrides collected by the argument parser.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub backend: Option<Backend>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub emit_svg: bool,
    pub tols: Vec<String>,
    pub radius: Option<u32>,
    pub cut: Option<usize>,
    pub symbolic: bool,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub computation: Computation,
    pub model: Option<ModelSpec>,
    pub backend: Backend,
    pub radii: Vec<u32>,
    pub center: Option<[i32; 2]>,
    pub cut: usize,
    pub deform: Vec<DeformStep>,
    pub regions: Option<[Vec<usize>; 3]>,
    pub tolerances: BTreeMap<String, f64>,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    /// True when the current/edge-current run is exact-rational.
    pub symbolic: bool,
}

impl Resolved {
    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }
}

fn parse_tol_overrides(
    base: &mut BTreeMap<String, f64>,
    pairs: &[String],
) -> Result<(), String> {
    for pair in pairs {
        let Some((key, val)) = pair.split_once('=') else {
            return Err(format!("tolerance override `{pair}` is not KEY=VAL"));
        };
        if !TOLERANCE_KEYS.iter().any(|(k, _)| *k == key) {
            return Err(format!(
                "unknown tolerance key `{key}` (known: {})",
                TOLERANCE_KEYS.map(|(k, _)| k).join(", ")
            ));
        }
        let parsed: f64 = val
            .parse()
            .map_err(|_| format!("tolerance value `{val}` is not a number"))?;
        if !(parsed.is_finite() && parsed > 0.0) {
            return Err(format!("tolerance `{key}` must be positive and finite"));
        }
        base.insert(key.to_string(), parsed);
    }
    Ok(())
}

/// Merge the config file and command-line overrides into a resolved run.
pub fn resolve(
    computation: Computation,
    config: RunConfig,
    over: Overrides,
) -> Result<Resolved, String> {
    let mut model = config.model;
    if let Some(spec) = model.as_mut() {
        if let Some(seed) = config.seed {
            spec.seed = seed;
        }
        if let Some(seed) = over.seed {
            spec.seed = seed;
        }
    }
    let backend = over
        .backend
        .or(config.backend)
        .unwrap_or(Backend::Auto)
        .resolve(model.as_ref().map(|m| m.kind));
    let mut tolerances: BTreeMap<String, f64> = TOLERANCE_KEYS
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    for (key, val) in &config.tolerances {
        if !TOLERANCE_KEYS.iter().any(|(k, _)| k == key) {
            return Err(format!("unknown tolerance key `{key}` in config"));
        }
        if !(val.is_finite() && *val > 0.0) {
            return Err(format!("tolerance `{key}` must be positive and finite"));
        }
        tolerances.insert(key.clone(), *val);
    }
    parse_tol_overrides(&mut tolerances, &over.tols)?;
    let radii = match (over.radius, &config.geometry.radius) {
        (Some(r), _) => vec![r],
        (None, Some(spec)) => spec.list(),
        (None, None) => vec![3],
    };
    if radii.is_empty() {
        return Err("radius sweep is empty".into());
    }
    let symbolic = over.symbolic || model.is_none();
    Ok(Resolved {
        computation,
        model,
        backend,
        radii,
        center: config.geometry.center,
        cut: over.cut.or(config.geometry.cut).unwrap_or(0),
        deform: config.geometry.deform,
        regions: config.geometry.regions,
        tolerances,
        out_dir: over
            .out
            .or(config.output.dir)
            .unwrap_or_else(|| PathBuf::from(".")),
        emit_svg: over.emit_svg || config.output.emit_svg.unwrap_or(false),
        symbolic,
    })
}
