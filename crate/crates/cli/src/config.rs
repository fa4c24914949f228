use std::fmt;
use std::path::{Path, PathBuf};

use pcyl_core::geometry::{alpha_critical, Interval, Profile};
use pcyl_core::spectral::{CountOptions, EigenOptions, ResonanceOptions};
use pcyl_core::transfer::StepControl;
use serde::{Deserialize, Serialize};

/// Indentation parameters of the tabulated runs.
pub const TABLE1_ALPHAS: [f64; 10] = [0.7, 0.75, 0.8, 0.825, 0.85, 0.9, 0.925, 0.95, 0.96, 0.97];
/// Distances `ε = α* − α` of the tabulated gap runs.
pub const TABLE2_EPSILONS: [f64; 10] = [0.3, 0.25, 0.2, 0.175, 0.15, 0.1, 0.075, 0.05, 0.04, 0.03];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Eig,
    Res,
    Scatter,
    RefFd,
    Table1,
    Table2,
    Sweep,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Eig => "eig",
            Problem::Res => "res",
            Problem::Scatter => "scatter",
            Problem::RefFd => "ref-fd",
            Problem::Table1 => "table1",
            Problem::Table2 => "table2",
            Problem::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `1 − α(e^{−(x−γ)²} + e^{−(x+γ)²})`.
    Indented,
    /// `φ ≡ 1`.
    Uniform,
    /// The indented profile at `α = α*(γ)`, cut just before the touching point.
    Pinched,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Interval of the Dirichlet problem; `(0, γ)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    pub truncate_x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    /// Fixed truncation; the adaptive search is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    /// Largest change of `ω` between consecutive truncations accepted as converged.
    pub adaptive_tol: f64,
    pub n_start: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative bracket width of the real eigenvalue search.
    pub root: f64,
    pub contour_r0: f64,
    pub target_r: f64,
    pub winding_quality: f64,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    /// Starting `ω` for `eig` and `res`; derived from a coarse finite-difference solve when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_omega_im: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdConfig {
    pub nx: usize,
    pub ny: usize,
    pub levels: usize,
    /// Width at which the pinched profile is cut off.
    pub cusp_cut: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    /// Only rows with `ε` below this enter the exponent fit.
    pub fit_eps_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<Problem>,
    pub profile: ProfileConfig,
    pub domain: DomainConfig,
    pub modes: ModesConfig,
    pub tolerances: Tolerances,
    pub search: SearchConfig,
    pub scatter: ScatterConfig,
    pub fd: FdConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: None,
            profile: ProfileConfig { family: Family::Indented, alpha: None, gamma: 2.0 },
            domain: DomainConfig { interval: None, truncate_x: 5.4 },
            modes: ModesConfig { n_modes: None, adaptive_tol: 1e-4, n_start: 2 },
            tolerances: Tolerances {
                root: 1e-10,
                contour_r0: 0.05,
                target_r: 1e-4,
                winding_quality: 0.05,
                rtol: 1e-8,
                atol: 1e-10,
            },
            search: SearchConfig { seed_omega: None, seed_omega_im: None },
            scatter: ScatterConfig {
                omega_min: std::f64::consts::PI + 0.1,
                omega_max: 2.0 * std::f64::consts::PI - 0.1,
                samples: 20,
            },
            fd: FdConfig { nx: 40, ny: 20, levels: 3, cusp_cut: 0.01 },
            sweep: SweepConfig { alphas: TABLE1_ALPHAS.to_vec(), fit_eps_max: 0.2 },
            output: OutputConfig { path: None, format: Format::Csv },
        }
    }
}

/// Partial configuration as read from a file: every section and key may be omitted.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    problem: Option<Problem>,
    profile: Option<toml::Table>,
    domain: Option<toml::Table>,
    modes: Option<toml::Table>,
    tolerances: Option<toml::Table>,
    search: Option<toml::Table>,
    scatter: Option<toml::Table>,
    fd: Option<toml::Table>,
    sweep: Option<toml::Table>,
    output: Option<toml::Table>,
}

impl RunConfig {
    /// Parses a configuration, filling omitted keys with defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        let mut full = toml::Table::try_from(RunConfig::default()).map_err(|e| bad(e.to_string()))?;
        if let Some(p) = file.problem {
            full.insert("problem".into(), toml::Value::String(p.name().into()));
        }
        let sections = [
            ("profile", file.profile),
            ("domain", file.domain),
            ("modes", file.modes),
            ("tolerances", file.tolerances),
            ("search", file.search),
            ("scatter", file.scatter),
            ("fd", file.fd),
            ("sweep", file.sweep),
            ("output", file.output),
        ];
        for (name, section) in sections {
            let Some(section) = section else { continue };
            let target = full
                .entry(name)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| bad(format!("config: [{name}] is not a table")))?;
            for (k, v) in section {
                target.insert(k, v);
            }
        }
        full.try_into().map_err(|e: toml::de::Error| bad(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical serialization; parsing it yields an identical configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical serialization with the output path removed, as lowercase hex.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.output.path = None;
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn step_control(&self) -> StepControl {
        StepControl::with_tolerances(self.tolerances.rtol, self.tolerances.atol)
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions { tol: self.tolerances.root, ..EigenOptions::default() }
    }

    pub fn resonance_options(&self) -> ResonanceOptions {
        ResonanceOptions {
            initial_radius: self.tolerances.contour_r0,
            target_radius: self.tolerances.target_r,
            count: CountOptions { max_quality: self.tolerances.winding_quality, ..CountOptions::default() },
            ..ResonanceOptions::default()
        }
    }

    /// Profile named by the configuration at the configured `α`.
    pub fn profile(&self) -> Result<Profile, ConfigError> {
        self.profile_at(self.profile.alpha)
    }

    pub fn profile_at(&self, alpha: Option<f64>) -> Result<Profile, ConfigError> {
        let gamma = self.profile.gamma;
        match self.profile.family {
            Family::Indented => {
                let alpha = alpha.ok_or_else(|| bad("the indented profile needs alpha"))?;
                Profile::indented(alpha, gamma).map_err(|e| bad(e.to_string()))
            }
            Family::Uniform => Interval::half_line(0.0).map(Profile::uniform).map_err(|e| bad(e.to_string())),
            Family::Pinched => Err(bad("the pinched profile is only available for ref-fd")),
        }
    }

    /// Interval of the Dirichlet problem.
    pub fn interval(&self) -> [f64; 2] {
        self.domain.interval.unwrap_or([0.0, self.profile.gamma])
    }

    pub fn alpha_critical(&self) -> f64 {
        alpha_critical(self.profile.gamma)
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let problem = self.problem.ok_or_else(|| bad("no problem selected"))?;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.profile.gamma) {
            return Err(bad("gamma must be positive"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("root", t.root),
            ("contour_r0", t.contour_r0),
            ("target_r", t.target_r),
            ("winding_quality", t.winding_quality),
            ("rtol", t.rtol),
            ("atol", t.atol),
            ("adaptive_tol", self.modes.adaptive_tol),
        ] {
            if !pos(v) {
                return Err(bad(format!("{name} must be positive")));
            }
        }
        if t.target_r > t.contour_r0 {
            return Err(bad("target_r must not exceed contour_r0"));
        }
        if t.target_r < pcyl_core::spectral::MIN_CONTOUR_RADIUS {
            return Err(bad("target_r is below the smallest admissible contour radius"));
        }
        match self.modes.n_modes {
            Some(0) => return Err(bad("n_modes must be at least 1")),
            Some(n) if n > pcyl_core::spectral::MAX_ADAPTIVE_MODES => return Err(bad("n_modes is too large")),
            None if self.modes.n_start < 2 || self.modes.n_start >= pcyl_core::spectral::MAX_ADAPTIVE_MODES => {
                return Err(bad("n_start must satisfy 2 <= n_start < 40"))
            }
            _ => {}
        }
        let [a, b] = self.interval();
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(bad("interval must satisfy a < b"));
        }
        if !pos(self.domain.truncate_x) {
            return Err(bad("truncate_x must be positive"));
        }
        if self.profile.family == Family::Pinched && problem != Problem::RefFd {
            return Err(bad("the pinched profile is only available for ref-fd"));
        }
        match problem {
            Problem::Eig | Problem::Res | Problem::Scatter => {
                let profile = self.profile()?;
                if problem == Problem::Eig {
                    profile.check_positive(a, b).map_err(|e| bad(e.to_string()))?;
                } else {
                    profile
                        .validate_tail(self.domain.truncate_x, pcyl_core::geometry::DEFAULT_TAIL_TOL)
                        .map_err(|e| bad(e.to_string()))?;
                }
                if problem == Problem::Scatter {
                    let s = &self.scatter;
                    let pi = std::f64::consts::PI;
                    if !(s.omega_min > pi && s.omega_min <= s.omega_max && s.omega_max < 2.0 * pi) || s.samples == 0 {
                        return Err(bad("scatter needs pi < omega_min <= omega_max < 2 pi and samples > 0"));
                    }
                }
            }
            Problem::RefFd => {
                if self.fd.nx < pcyl_core::reference_fd::MIN_CELLS || self.fd.ny < pcyl_core::reference_fd::MIN_CELLS {
                    return Err(bad("fd grids need nx, ny >= 8"));
                }
                if self.fd.levels < 3 {
                    return Err(bad("fd needs at least three levels"));
                }
                if self.profile.family == Family::Pinched {
                    if !(self.fd.cusp_cut > 0.0 && self.fd.cusp_cut < 1.0) {
                        return Err(bad("cusp_cut must lie in (0, 1)"));
                    }
                } else {
                    self.profile()?.check_positive(a, b).map_err(|e| bad(e.to_string()))?;
                }
            }
            Problem::Table1 | Problem::Table2 | Problem::Sweep => {
                if self.profile.family != Family::Indented {
                    return Err(bad("tables and sweeps use the indented profile"));
                }
                let crit = self.alpha_critical();
                let alphas: Vec<f64> = match problem {
                    Problem::Table1 => TABLE1_ALPHAS.to_vec(),
                    Problem::Table2 => TABLE2_EPSILONS.iter().map(|e| crit - e).collect(),
                    _ => self.sweep.alphas.clone(),
                };
                for alpha in alphas {
                    let p = Profile::indented(alpha, self.profile.gamma).map_err(|e| bad(e.to_string()))?;
                    p.validate_tail(self.domain.truncate_x, pcyl_core::geometry::DEFAULT_TAIL_TOL)
                        .map_err(|e| bad(format!("alpha {alpha}: {e}")))?;
                }
                if !pos(self.sweep.fit_eps_max) {
                    return Err(bad("fit_eps_max must be positive"));
                }
            }
        }
        Ok(())
    }
}
