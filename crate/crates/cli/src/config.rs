//! Run configuration: a flat TOML file with one table per section, parsed
//! into a fully validated [`RunConfig`]. Unknown keys are hard errors.

use std::path::PathBuf;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use mcwf::ensemble::{InitialMixture, Unraveling};
use mcwf::jump::DEFAULT_DELTA_P_MAX;
use mcwf::model::HomodyneScheme;
use mcwf::presets::{
    damped_cavity_model, three_level_model, two_level_model, CavityParams, ThreeLevelParams,
    TwoLevelParams,
};
use mcwf::{DenseOperator, LindbladModel, StateVector, TimeGrid};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid config: {0}")]
    Model(#[from] mcwf::Error),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// The on-disk schema. Matrices are arrays of rows; every complex entry is a
/// `[re, im]` pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    pub observables: ObservablesSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub preset: String,
    // two_level
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    // damped_cavity
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<f64>,
    // three_level
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_strong: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_weak: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_strong: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_weak: Option<f64>,
    // explicit
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_ops: Option<Vec<Vec<Vec<[f64; 2]>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub engine: String,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_p_max: Option<f64>,
}

fn default_sample_every() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<Vec<MixtureComponent>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesSection {
    /// Named presets: `population:k` / `projector:k` (the population of
    /// basis state `k`) or `number` (the Fock number operator).
    #[serde(default)]
    pub names: Vec<String>,
    /// Explicit Hermitian matrices, labeled `obs0`, `obs1`, ...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<[f64; 2]>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub results: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

/// Which engine a run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EngineChoice {
    Trajectory(Unraveling),
    MasterEquation,
}

/// Model origin, kept for preset-specific runtime checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    TwoLevel,
    DampedCavity { n_max: usize },
    ThreeLevel,
    Explicit,
}

/// A fully validated run: every section resolved into engine-ready values.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// The (seed-resolved) file contents, echoed into manifests.
    pub raw: ConfigFile,
    pub model: LindbladModel,
    pub preset: PresetKind,
    pub engine: EngineChoice,
    pub grid: TimeGrid,
    pub n_traj: usize,
    pub master_seed: u64,
    /// `(label, operator)` pairs in output-column order.
    pub observables: Vec<(String, DenseOperator)>,
    pub mixture: InitialMixture,
    pub delta_p_max: f64,
    pub results_path: PathBuf,
    pub events_path: Option<PathBuf>,
    pub manifest_path: PathBuf,
}

/// Parse and validate a config file; `seed_override` replaces the file's
/// `master_seed` when given.
pub fn parse_config(text: &str, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let mut file: ConfigFile = toml::from_str(text)?;
    if let Some(seed) = seed_override {
        file.run.master_seed = Some(seed);
    }
    resolve(file)
}

/// Validate an already-deserialized [`ConfigFile`] (used by replay).
pub fn resolve(file: ConfigFile) -> Result<RunConfig, ConfigError> {
    let (model, preset) = build_model(&file.model)?;
    let engine = build_engine(&file.run)?;
    let grid = TimeGrid::new(
        file.run.t_start,
        file.run.t_end,
        file.run.dt,
        file.run.sample_every,
    )?;
    let delta_p_max = match file.run.delta_p_max {
        Some(v) if v > 0.0 => v,
        Some(v) => return Err(invalid(format!("delta_p_max must be > 0, got {v}"))),
        None => DEFAULT_DELTA_P_MAX,
    };

    let (n_traj, master_seed) = match engine {
        EngineChoice::MasterEquation => (
            file.run.n_traj.unwrap_or(1),
            file.run.master_seed.unwrap_or(0),
        ),
        EngineChoice::Trajectory(_) => {
            let n = file.run.n_traj.ok_or_else(|| {
                invalid("missing required key `n_traj` in [run] for a trajectory engine")
            })?;
            if n < 2 {
                return Err(invalid(format!(
                    "n_traj must be >= 2 for trajectory engines, got {n}"
                )));
            }
            let seed = file.run.master_seed.ok_or_else(|| {
                invalid("missing required key `master_seed` in [run] for a trajectory engine")
            })?;
            (n, seed)
        }
    };

    let observables = build_observables(&file.observables, model.dim())?;
    let mixture = build_mixture(file.initial.as_ref(), preset, model.dim())?;

    let results_path = file.output.results.clone();
    if results_path.as_os_str().is_empty() {
        return Err(invalid("output.results path is empty"));
    }
    let manifest_path = file.output.manifest.clone().unwrap_or_else(|| {
        let mut p = results_path.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });

    Ok(RunConfig {
        model,
        preset,
        engine,
        grid,
        n_traj,
        master_seed,
        observables,
        mixture,
        delta_p_max,
        results_path,
        events_path: file.output.events.clone(),
        manifest_path,
        raw: file,
    })
}

fn require(field: Option<f64>, key: &str, preset: &str) -> Result<f64, ConfigError> {
    field.ok_or_else(|| {
        invalid(format!(
            "missing required key `{key}` for preset \"{preset}\""
        ))
    })
}

/// Every key that does not belong to the chosen preset must be absent.
fn forbid_foreign_keys(section: &ModelSection, preset: &str) -> Result<(), ConfigError> {
    let mut present: Vec<&str> = Vec::new();
    macro_rules! mark {
        ($($field:ident),*) => {
            $(if section.$field.is_some() { present.push(stringify!($field)); })*
        };
    }
    mark!(
        gamma,
        rabi,
        detuning,
        kappa,
        n_max,
        drive,
        gamma_strong,
        gamma_weak,
        rabi_strong,
        rabi_weak,
        dim,
        hamiltonian,
        jump_ops
    );
    let allowed: &[&str] = match preset {
        "two_level" => &["gamma", "rabi", "detuning"],
        "damped_cavity" => &["kappa", "n_max", "drive"],
        "three_level" => &["gamma_strong", "gamma_weak", "rabi_strong", "rabi_weak"],
        "explicit" => &["dim", "hamiltonian", "jump_ops"],
        _ => &[],
    };
    for key in present {
        if !allowed.contains(&key) {
            return Err(invalid(format!(
                "key `{key}` does not apply to preset \"{preset}\""
            )));
        }
    }
    Ok(())
}

fn build_model(section: &ModelSection) -> Result<(LindbladModel, PresetKind), ConfigError> {
    forbid_foreign_keys(section, section.preset.as_str())?;
    match section.preset.as_str() {
        "two_level" => {
            let params = TwoLevelParams {
                gamma: require(section.gamma, "gamma", "two_level")?,
                rabi: section.rabi.unwrap_or(0.0),
                detuning: section.detuning.unwrap_or(0.0),
            };
            Ok((two_level_model(&params)?, PresetKind::TwoLevel))
        }
        "damped_cavity" => {
            let n_max = section
                .n_max
                .ok_or_else(|| invalid("missing required key `n_max` for preset \"damped_cavity\""))?;
            let params = CavityParams {
                kappa: require(section.kappa, "kappa", "damped_cavity")?,
                n_max,
                drive: section.drive.unwrap_or(0.0),
            };
            Ok((damped_cavity_model(&params)?, PresetKind::DampedCavity { n_max }))
        }
        "three_level" => {
            let params = ThreeLevelParams {
                gamma_strong: require(section.gamma_strong, "gamma_strong", "three_level")?,
                gamma_weak: require(section.gamma_weak, "gamma_weak", "three_level")?,
                rabi_strong: section.rabi_strong.unwrap_or(0.0),
                rabi_weak: section.rabi_weak.unwrap_or(0.0),
            };
            Ok((three_level_model(&params)?, PresetKind::ThreeLevel))
        }
        "explicit" => {
            let dim = section
                .dim
                .ok_or_else(|| invalid("missing required key `dim` for preset \"explicit\""))?;
            let rows = section.hamiltonian.as_ref().ok_or_else(|| {
                invalid("missing required key `hamiltonian` for preset \"explicit\"")
            })?;
            let h = parse_matrix(rows, dim, "hamiltonian")?;
            if !h.is_hermitian(1e-10) {
                return Err(invalid("hamiltonian not Hermitian"));
            }
            let mut ops = Vec::new();
            if let Some(list) = &section.jump_ops {
                for (k, rows) in list.iter().enumerate() {
                    ops.push(parse_matrix(rows, dim, &format!("jump_ops[{k}]"))?);
                }
            }
            Ok((LindbladModel::new(h, ops)?, PresetKind::Explicit))
        }
        other => Err(invalid(format!(
            "unknown preset \"{other}\" (expected two_level, damped_cavity, three_level or explicit)"
        ))),
    }
}

fn parse_matrix(
    rows: &[Vec<[f64; 2]>],
    dim: usize,
    what: &str,
) -> Result<DenseOperator, ConfigError> {
    if rows.len() != dim {
        return Err(invalid(format!(
            "{what}: expected {dim} rows, got {}",
            rows.len()
        )));
    }
    let mut m: Array2<Complex64> = Array2::zeros((dim, dim));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(invalid(format!(
                "{what}: row {i} has {} entries, expected {dim}",
                row.len()
            )));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            m[[i, j]] = Complex64::new(re, im);
        }
    }
    Ok(DenseOperator::from_matrix(m)?)
}

fn build_engine(run: &RunSection) -> Result<EngineChoice, ConfigError> {
    let engine = run.engine.as_str();
    if engine != "finite_mu" {
        if run.mu.is_some() {
            return Err(invalid(format!(
                "key `mu` only applies to engine \"finite_mu\" (engine is \"{engine}\")"
            )));
        }
        if run.scheme.is_some() {
            return Err(invalid(format!(
                "key `scheme` only applies to engine \"finite_mu\" (engine is \"{engine}\")"
            )));
        }
    }
    Ok(match engine {
        "euler_order1" => EngineChoice::Trajectory(Unraveling::EulerOrder1),
        "rk4_nonhermitian" => EngineChoice::Trajectory(Unraveling::Rk4NonHermitian),
        "waiting_time" => EngineChoice::Trajectory(Unraveling::WaitingTime),
        "ito_complex" => EngineChoice::Trajectory(Unraveling::ItoComplex),
        "ito_real" => EngineChoice::Trajectory(Unraveling::ItoReal),
        "finite_mu" => {
            let mu = run.mu.ok_or_else(|| {
                invalid("missing required key `mu` in [run] for engine \"finite_mu\"")
            })?;
            let scheme = match run.scheme.as_deref() {
                None | Some("two_phase") => HomodyneScheme::TwoPhase,
                Some("four_phase") => HomodyneScheme::FourPhase,
                Some(other) => {
                    return Err(invalid(format!(
                        "unknown scheme \"{other}\" (expected two_phase or four_phase)"
                    )))
                }
            };
            EngineChoice::Trajectory(Unraveling::FiniteMu { mu, scheme })
        }
        "master_equation" => EngineChoice::MasterEquation,
        other => {
            return Err(invalid(format!(
                "unknown engine \"{other}\" (expected euler_order1, rk4_nonhermitian, \
                 waiting_time, ito_complex, ito_real, finite_mu or master_equation)"
            )))
        }
    })
}

fn build_observables(
    section: &ObservablesSection,
    dim: usize,
) -> Result<Vec<(String, DenseOperator)>, ConfigError> {
    let mut out = Vec::new();
    for name in &section.names {
        out.push((sanitize_label(name), named_observable(name, dim)?));
    }
    if let Some(matrices) = &section.matrices {
        for (k, rows) in matrices.iter().enumerate() {
            let label = format!("obs{k}");
            let op = parse_matrix(rows, dim, &format!("observables.matrices[{k}]"))?;
            if !op.is_hermitian(1e-10) {
                return Err(invalid(format!(
                    "observables.matrices[{k}] is not Hermitian"
                )));
            }
            out.push((label, op));
        }
    }
    if out.is_empty() {
        return Err(invalid(
            "no observables given (set observables.names or observables.matrices)",
        ));
    }
    Ok(out)
}

fn named_observable(name: &str, dim: usize) -> Result<DenseOperator, ConfigError> {
    if name == "number" {
        return Ok(DenseOperator::number_operator(dim));
    }
    for prefix in ["population:", "projector:"] {
        if let Some(rest) = name.strip_prefix(prefix) {
            let k: usize = rest
                .parse()
                .map_err(|_| invalid(format!("bad basis index in observable \"{name}\"")))?;
            if k >= dim {
                return Err(invalid(format!(
                    "observable \"{name}\": index {k} out of range for dimension {dim}"
                )));
            }
            return Ok(DenseOperator::basis_projector(dim, k)?);
        }
    }
    Err(invalid(format!(
        "unknown observable \"{name}\" (expected population:k, projector:k or number)"
    )))
}

fn sanitize_label(name: &str) -> String {
    name.replace(':', "_")
}

fn build_mixture(
    initial: Option<&InitialSection>,
    preset: PresetKind,
    dim: usize,
) -> Result<InitialMixture, ConfigError> {
    let Some(section) = initial else {
        let k = default_ground_index(preset)
            .ok_or_else(|| invalid("explicit models require an [initial] section"))?;
        return Ok(InitialMixture::pure(StateVector::basis(dim, k)?));
    };
    let given = [
        section.state.is_some(),
        section.amplitudes.is_some(),
        section.mixture.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if given != 1 {
        return Err(invalid(
            "[initial] must set exactly one of `state`, `amplitudes` or `mixture`",
        ));
    }
    if let Some(name) = &section.state {
        return Ok(InitialMixture::pure(named_state(name, preset, dim)?));
    }
    if let Some(amps) = &section.amplitudes {
        return Ok(InitialMixture::pure(parse_state(amps, dim)?));
    }
    let components = section.mixture.as_ref().expect("checked above");
    let mut parts = Vec::new();
    for (k, comp) in components.iter().enumerate() {
        let state = match (&comp.state, &comp.amplitudes) {
            (Some(name), None) => named_state(name, preset, dim)?,
            (None, Some(amps)) => parse_state(amps, dim)?,
            _ => {
                return Err(invalid(format!(
                    "mixture component {k} must set exactly one of `state` or `amplitudes`"
                )))
            }
        };
        parts.push((comp.p, state));
    }
    Ok(InitialMixture::new(parts)?)
}

fn default_ground_index(preset: PresetKind) -> Option<usize> {
    match preset {
        // two-level basis order is (|e>, |g>)
        PresetKind::TwoLevel => Some(1),
        PresetKind::DampedCavity { .. } => Some(0),
        PresetKind::ThreeLevel => Some(0),
        PresetKind::Explicit => None,
    }
}

fn named_state(name: &str, preset: PresetKind, dim: usize) -> Result<StateVector, ConfigError> {
    match name {
        "ground" => {
            let k = default_ground_index(preset)
                .ok_or_else(|| invalid("state \"ground\" is undefined for explicit models"))?;
            Ok(StateVector::basis(dim, k)?)
        }
        "excited" => {
            if preset != PresetKind::TwoLevel {
                return Err(invalid(
                    "state \"excited\" is only defined for the two_level preset",
                ));
            }
            Ok(StateVector::basis(dim, 0)?)
        }
        other => {
            if let Some(rest) = other.strip_prefix("basis:") {
                let k: usize = rest
                    .parse()
                    .map_err(|_| invalid(format!("bad basis index in state \"{other}\"")))?;
                return Ok(StateVector::basis(dim, k)?);
            }
            Err(invalid(format!(
                "unknown state \"{other}\" (expected ground, excited or basis:k)"
            )))
        }
    }
}

fn parse_state(amps: &[[f64; 2]], dim: usize) -> Result<StateVector, ConfigError> {
    if amps.len() != dim {
        return Err(invalid(format!(
            "initial amplitudes have length {}, expected {dim}",
            amps.len()
        )));
    }
    let v: Array1<Complex64> = amps
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    Ok(StateVector::normalized(v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RABI_CONFIG: &str = r#"
[model]
preset = "two_level"
gamma = 1.0
rabi = 3.0
detuning = 0.0

[run]
engine = "euler_order1"
t_end = 10.0
dt = 1e-3
sample_every = 100
n_traj = 100
master_seed = 42

[observables]
names = ["population:0"]

[output]
results = "results.csv"
"#;

    #[test]
    fn minimal_rabi_config_parses() {
        let config = parse_config(RABI_CONFIG, None).unwrap();
        assert_eq!(config.model.dim(), 2);
        assert_eq!(config.n_traj, 100);
        assert_eq!(config.master_seed, 42);
        assert_eq!(config.grid.n_steps(), 10_000);
        assert_eq!(config.observables[0].0, "population_0");
        assert!(matches!(
            config.engine,
            EngineChoice::Trajectory(Unraveling::EulerOrder1)
        ));
        // default initial state for two_level is |g> = basis 1
        let comps = config.mixture.components();
        assert_eq!(comps.len(), 1);
        assert!((comps[0].1.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
        // default manifest path derives from the results path
        assert_eq!(
            config.manifest_path.to_string_lossy(),
            "results.csv.manifest.json"
        );
    }

    #[test]
    fn seed_override_applies() {
        let config = parse_config(RABI_CONFIG, Some(7)).unwrap();
        assert_eq!(config.master_seed, 7);
    }

    #[test]
    fn finite_mu_requires_mu() {
        let text = RABI_CONFIG.replace("engine = \"euler_order1\"", "engine = \"finite_mu\"");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.to_string().contains("`mu`"), "{err}");
    }

    #[test]
    fn mu_forbidden_outside_finite_mu() {
        let text = RABI_CONFIG.replace("dt = 1e-3", "dt = 1e-3\nmu = 10.0");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.to_string().contains("`mu`"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = RABI_CONFIG.replace("gamma = 1.0", "gamma = 1.0\ngama = 2.0");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
    }

    #[test]
    fn foreign_preset_keys_are_rejected() {
        let text = RABI_CONFIG.replace("gamma = 1.0", "gamma = 1.0\nkappa = 0.5");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.to_string().contains("kappa"), "{err}");
    }

    #[test]
    fn non_hermitian_explicit_hamiltonian_rejected() {
        let text = r#"
[model]
preset = "explicit"
dim = 2
hamiltonian = [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]

[run]
engine = "master_equation"
t_end = 1.0
dt = 1e-2

[initial]
state = "basis:0"

[observables]
names = ["population:0"]

[output]
results = "out.csv"
"#;
        let err = parse_config(text, None).unwrap_err();
        assert!(
            err.to_string().contains("hamiltonian not Hermitian"),
            "{err}"
        );
    }

    #[test]
    fn unknown_engine_rejected() {
        let text = RABI_CONFIG.replace("euler_order1", "does_not_exist");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.to_string().contains("unknown engine"), "{err}");
    }

    #[test]
    fn master_equation_needs_no_seed() {
        let text = RABI_CONFIG
            .replace("engine = \"euler_order1\"", "engine = \"master_equation\"")
            .replace("n_traj = 100\n", "")
            .replace("master_seed = 42\n", "");
        let config = parse_config(&text, None).unwrap();
        assert!(matches!(config.engine, EngineChoice::MasterEquation));
    }

    #[test]
    fn mixture_initial_state() {
        let text = RABI_CONFIG.replace(
            "[observables]",
            "[initial]\nmixture = [{ p = 0.5, state = \"excited\" }, { p = 0.5, state = \"ground\" }]\n\n[observables]",
        );
        let config = parse_config(&text, None).unwrap();
        assert_eq!(config.mixture.components().len(), 2);
    }

    #[test]
    fn observable_validation() {
        let text = RABI_CONFIG.replace("population:0", "population:7");
        assert!(parse_config(&text, None).is_err());
        let text = RABI_CONFIG.replace("population:0", "something");
        assert!(parse_config(&text, None).is_err());
    }
}
