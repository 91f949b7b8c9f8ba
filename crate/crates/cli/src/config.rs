//! TOML run configuration and its field-by-field validation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use symplab::eulerian::{cfl_time_step, step_count, SolverOptions};
use symplab::experiments::{build_bump_potential, NonuniformParams};
use symplab::field::{ScalarField, VectorField};
use symplab::grid::{Grid, GridSpec};
use symplab::interp::InterpOptions;
use symplab::lagrangian::{GeodesicOptions, InversionOptions};
use symplab::random;
use symplab::symplectic::sympl_grad;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

#[derive(Debug)]
pub enum ConfigError {
    /// Unreadable file or malformed TOML; the message carries the position.
    Parse(String),
    Invalid(Vec<Issue>),
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn eight() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// `u_0 = A sin(2π x_1/L)`, all other components zero.
    SteadyShear {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `∇_ω` of a bump potential, scaled to max-abs `amplitude`.
    SymplGradBump {
        #[serde(default)]
        center: Option<Vec<f64>>,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `∇_ω` of `Π_j sin(2π k_j x_j/L)` over axes with `k_j ≠ 0`, scaled to max-abs `amplitude`.
    SymplGradTrig {
        wavenumbers: Vec<i64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    RandomSymplectic {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "two")]
        decay: f64,
        #[serde(default = "eight")]
        band: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Random vector field with independent components (not symplectic).
    RandomField {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "two")]
        decay: f64,
        #[serde(default = "eight")]
        band: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub diagnostics: String,
    pub snapshot: String,
    pub map: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            diagnostics: "diagnostics.csv".into(),
            snapshot: "final.snap".into(),
            map: "map.snap".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LagrangianConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub interp_factor: usize,
    pub stencil: usize,
}

impl Default for LagrangianConfig {
    fn default() -> Self {
        let inv = InversionOptions::default();
        LagrangianConfig {
            tol: inv.tol,
            max_iter: inv.max_iter,
            interp_factor: inv.interp.factor,
            stencil: inv.interp.stencil,
        }
    }
}

fn two_pi() -> f64 {
    2.0 * PI
}
fn default_s() -> f64 {
    3.0
}
fn default_diag_every() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub points: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "one")]
    pub cutoff_radius: f64,
    #[serde(default = "one")]
    pub t_final: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default = "default_diag_every")]
    pub diag_every: usize,
    #[serde(default)]
    pub project_each_step: bool,
    pub initial: InitialCondition,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub lagrangian: LagrangianConfig,
    #[serde(default)]
    pub nonuniform: Option<NonuniformParams>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `--seed` and `--out`.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<&Path>) {
        if let Some(s) = seed {
            match &mut self.initial {
                InitialCondition::RandomSymplectic { seed, .. } | InitialCondition::RandomField { seed, .. } => {
                    *seed = Some(s)
                }
                _ => {}
            }
        }
        if let Some(dir) = out {
            self.output.dir = dir.to_path_buf();
        }
    }

    /// Every violated constraint, in declaration order.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut push = |field: &str, message: String| {
            out.push(Issue {
                field: field.into(),
                message,
            })
        };
        if self.n == 0 {
            push("n", "n must be at least 1".into());
        }
        if self.points < 4 || self.points % 2 != 0 {
            push("points", format!("points must be even and at least 4, got {}", self.points));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            push("length", format!("length must be positive, got {}", self.length));
        }
        let bound = self.n as f64 + 1.0;
        if !(self.s > bound) {
            push("s", format!("s must exceed {bound} (2n/2 + 1), got {}", self.s));
        }
        if !(self.cutoff_radius > 0.0) {
            push("cutoff_radius", format!("cutoff_radius must be positive, got {}", self.cutoff_radius));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            push("t_final", format!("t_final must be positive, got {}", self.t_final));
        }
        match (self.dt, self.cfl) {
            (Some(_), Some(_)) => push("dt", "dt and cfl are mutually exclusive".into()),
            (None, None) => push("dt", "one of dt or cfl is required".into()),
            (Some(dt), None) => {
                if self.t_final > 0.0 {
                    if let Err(e) = step_count(self.t_final, dt) {
                        push("dt", e.to_string());
                    }
                }
            }
            (None, Some(c)) => {
                if !(c > 0.0 && c.is_finite()) {
                    push("cfl", format!("cfl must be positive, got {c}"));
                }
            }
        }
        if self.diag_every == 0 {
            push("diag_every", "diag_every must be at least 1".into());
        }
        let dim = 2 * self.n;
        let amplitude_ok = |a: f64| a.is_finite();
        match &self.initial {
            InitialCondition::Zero => {}
            InitialCondition::SteadyShear { amplitude } => {
                if !amplitude_ok(*amplitude) {
                    push("initial.amplitude", "amplitude must be finite".into());
                }
            }
            InitialCondition::SymplGradBump {
                center,
                radius,
                amplitude,
            } => {
                if let Some(c) = center {
                    if c.len() != dim {
                        push("initial.center", format!("center needs {dim} coordinates, got {}", c.len()));
                    }
                }
                if !(*radius > 0.0 && *radius < 0.25 * self.length) {
                    push("initial.radius", format!("radius must lie in (0, L/4), got {radius}"));
                }
                if !amplitude_ok(*amplitude) {
                    push("initial.amplitude", "amplitude must be finite".into());
                }
            }
            InitialCondition::SymplGradTrig {
                wavenumbers,
                amplitude,
            } => {
                if wavenumbers.len() != dim {
                    push(
                        "initial.wavenumbers",
                        format!("wavenumbers needs {dim} entries, got {}", wavenumbers.len()),
                    );
                } else if wavenumbers.iter().all(|&k| k == 0) {
                    push("initial.wavenumbers", "at least one wavenumber must be nonzero".into());
                } else if wavenumbers.iter().any(|k| k.unsigned_abs() as usize > (self.points.max(1) - 1) / 3) {
                    push("initial.wavenumbers", "wavenumbers exceed the two-thirds band".into());
                }
                if !amplitude_ok(*amplitude) {
                    push("initial.amplitude", "amplitude must be finite".into());
                }
            }
            InitialCondition::RandomSymplectic {
                seed,
                decay,
                band,
                amplitude,
            }
            | InitialCondition::RandomField {
                seed,
                decay,
                band,
                amplitude,
            } => {
                if seed.is_none() {
                    push("initial.seed", "seed is required for random generators".into());
                }
                if !decay.is_finite() {
                    push("initial.decay", "decay must be finite".into());
                }
                if *band == 0 {
                    push("initial.band", "band must be at least 1".into());
                }
                if !amplitude_ok(*amplitude) {
                    push("initial.amplitude", "amplitude must be finite".into());
                }
            }
        }
        let lg = &self.lagrangian;
        if !(lg.tol > 0.0) {
            push("lagrangian.tol", "tol must be positive".into());
        }
        if lg.max_iter == 0 {
            push("lagrangian.max_iter", "max_iter must be at least 1".into());
        }
        if lg.interp_factor == 0 {
            push("lagrangian.interp_factor", "interp_factor must be at least 1".into());
        }
        if lg.stencil < 2 || lg.stencil % 2 != 0 {
            push("lagrangian.stencil", "stencil must be even and at least 2".into());
        }
        if let Some(p) = &self.nonuniform {
            if let Err(e) = p.validate() {
                push("nonuniform", e.to_string());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }

    pub fn grid(&self) -> symplab::Result<Grid> {
        Grid::new(GridSpec::new(self.n, self.points, self.length)?)
    }

    pub fn initial_velocity(&self, grid: &Grid) -> symplab::Result<VectorField> {
        let len = grid.length();
        let base = 2.0 * PI / len;
        let unit_max = |mut u: VectorField, a: f64| {
            let m = u.max_abs();
            if m > 0.0 {
                u.scale(a / m);
            }
            u
        };
        Ok(match &self.initial {
            InitialCondition::Zero => VectorField::zeros(grid),
            InitialCondition::SteadyShear { amplitude } => VectorField::from_fn(grid, |x, o| {
                o.iter_mut().for_each(|c| *c = 0.0);
                o[0] = amplitude * (base * x[1]).sin();
            }),
            InitialCondition::SymplGradBump {
                center,
                radius,
                amplitude,
            } => {
                let c = center.clone().unwrap_or_else(|| vec![0.5 * len; grid.dim()]);
                unit_max(sympl_grad(&build_bump_potential(&c, *radius, grid)?), *amplitude)
            }
            InitialCondition::SymplGradTrig {
                wavenumbers,
                amplitude,
            } => {
                let h = ScalarField::from_fn(grid, |x| {
                    wavenumbers
                        .iter()
                        .zip(x)
                        .filter(|(k, _)| **k != 0)
                        .map(|(&k, &xi)| (base * k as f64 * xi).sin())
                        .product()
                });
                unit_max(sympl_grad(&h), *amplitude)
            }
            InitialCondition::RandomSymplectic {
                seed,
                decay,
                band,
                amplitude,
            } => random::symplectic(grid, &mut random::seeded(seed.unwrap_or_default()), *decay, *band)
                .scaled(*amplitude),
            InitialCondition::RandomField {
                seed,
                decay,
                band,
                amplitude,
            } => random::vector(grid, &mut random::seeded(seed.unwrap_or_default()), *decay, *band)
                .scaled(*amplitude),
        })
    }

    /// `dt` as configured, or the CFL step for `u0` over `[0, t_final]`.
    pub fn time_step(&self, u0: &VectorField, t_final: f64) -> f64 {
        match (self.dt, self.cfl) {
            (Some(dt), _) => dt,
            (None, Some(c)) => cfl_time_step(u0, t_final, c),
            (None, None) => t_final,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            s: self.s,
            cutoff_radius: self.cutoff_radius,
            diag_every: self.diag_every,
            project_each_step: self.project_each_step,
            ..SolverOptions::default()
        }
    }

    pub fn geodesic_options(&self) -> GeodesicOptions {
        GeodesicOptions {
            cutoff_radius: self.cutoff_radius,
            inversion: InversionOptions {
                tol: self.lagrangian.tol,
                max_iter: self.lagrangian.max_iter,
                interp: InterpOptions {
                    factor: self.lagrangian.interp_factor,
                    stencil: self.lagrangian.stencil,
                },
            },
        }
    }

    pub fn output_path(&self, name: &str) -> PathBuf {
        self.output.dir.join(name)
    }
}
