//! `symplab` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 numerical failure,
//! 4 resolution guard. Errors are printed to stderr as one JSON object.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use symplab::eulerian::{cfl_time_step, integrate_with, write_diagnostics_csv};
use symplab::experiments::{oracle_2d_solve, prepare_nonuniform, run_nonuniform, run_probes, NonuniformParams};
use symplab::field::VectorField;
use symplab::grid::Grid;
use symplab::lagrangian::{eulerian_velocity, geodesic_integrate_with, symplectic_residual, DiffeoMap};
use symplab::snapshot::{write_atomic, write_diffeo_map, write_vector_field};
use symplab::symplectic::apply_p;
use symplab::{random, verify, Error, Norms};

use config::{ConfigError, Issue, RunConfig};

#[derive(Parser)]
#[command(name = "symplab", version, about = "Symplectic Euler laboratory")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random initial data; overrides `initial.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Eulerian equation; writes diagnostics and the final velocity.
    RunEulerian,
    /// Integrate the geodesic equation in Lagrangian form.
    RunLagrangian {
        /// Also run the Eulerian solver and report the H^(s-1) discrepancy.
        #[arg(long)]
        check_equivalence: bool,
        /// Report the final symplectic residual against ||P(u0)||/4; fail if below.
        #[arg(long)]
        expect_residual: bool,
    },
    /// Time-one map of the geodesic flow.
    ExpMap,
    /// Scripted experiments.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
    /// Run the acceptance criteria.
    Verify {
        /// Criterion ids; all when omitted.
        ids: Vec<u32>,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Non-uniform dependence sequence.
    Nonuniform,
    /// Comparison with the vorticity-stream solver (n = 1).
    Oracle2d,
    /// Commutator, disjoint-support and logarithmic probes.
    Probes,
}

enum Failure {
    Config(ConfigError),
    Numerics(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerics(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerics(e) => match e {
                Error::InvalidArgument(_)
                | Error::AxisOutOfRange { .. }
                | Error::GridMismatch
                | Error::Format(_)
                | Error::Io(_) => 2,
                Error::ResolutionGuard(_) => 4,
                Error::DiscretizationFailure { .. }
                | Error::NotContractive { .. }
                | Error::InversionFailed { .. }
                | Error::ProbeFailed(_) => 3,
            },
            Failure::Check(_) => 3,
        }
    }

    fn report(&self) -> serde_json::Value {
        match self {
            Failure::Config(ConfigError::Parse(m)) => json!({"error": "config", "message": m}),
            Failure::Config(ConfigError::Invalid(issues)) => json!({
                "error": "config",
                "message": "invalid configuration",
                "issues": issues,
            }),
            Failure::Numerics(e) => {
                let kind = match e {
                    Error::ResolutionGuard(_) => "resolution_guard",
                    Error::Io(_) => "io",
                    _ if self.code() == 2 => "input",
                    _ => "numerical",
                };
                json!({"error": kind, "message": e.to_string()})
            }
            Failure::Check(m) => json!({"error": "check_failed", "message": m}),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Ctx {
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    quiet: bool,
}

impl Ctx {
    fn load(&self) -> Result<RunConfig, Failure> {
        let path = self.config.as_deref().ok_or_else(|| {
            Failure::Config(ConfigError::Invalid(vec![Issue {
                field: "--config".into(),
                message: "this command needs a configuration file".into(),
            }]))
        })?;
        let mut cfg = RunConfig::load(path)?;
        cfg.apply_overrides(self.seed, self.out.as_deref());
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, value: serde_json::Value) {
        if !self.quiet {
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
        }
    }
}

fn save_field(path: &Path, u: &VectorField) -> symplab::Result<()> {
    write_atomic(path, |w| write_vector_field(w, u))
}

fn save_map(path: &Path, phi: &DiffeoMap) -> symplab::Result<()> {
    write_atomic(path, |w| write_diffeo_map(w, phi))
}

fn run_eulerian(ctx: &Ctx) -> Outcome {
    let cfg = ctx.load()?;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_velocity(&grid)?;
    let dt = cfg.time_step(&u0, cfg.t_final);
    let run = integrate_with(&u0, cfg.t_final, dt, &cfg.solver_options(), &[], |_, _| {})?;
    let diag = cfg.output_path(&cfg.output.diagnostics);
    write_atomic(&diag, |w| write_diagnostics_csv(&run.log, w))?;
    let snap = cfg.output_path(&cfg.output.snapshot);
    save_field(&snap, &run.state.u)?;
    ctx.emit(json!({
        "steps": run.steps,
        "dt": run.dt,
        "initial": run.log.first(),
        "final": run.log.last(),
        "diagnostics": diag,
        "snapshot": snap,
    }));
    Ok(())
}

#[derive(serde::Serialize)]
struct LagrangianRecord {
    t: f64,
    symplectic_residual: f64,
    displacement_lipschitz: f64,
    max_displacement: f64,
}

fn lagrangian_record(t: f64, phi: &DiffeoMap) -> LagrangianRecord {
    LagrangianRecord {
        t,
        symplectic_residual: symplectic_residual(phi),
        displacement_lipschitz: phi.displacement_lipschitz(),
        max_displacement: phi.displacement().max_magnitude(),
    }
}

fn write_records(path: &Path, rows: &[LagrangianRecord]) -> symplab::Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in rows {
            out.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    })
}

fn run_lagrangian(ctx: &Ctx, check_equivalence: bool, expect_residual: bool) -> Outcome {
    let cfg = ctx.load()?;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_velocity(&grid)?;
    let dt = cfg.time_step(&u0, cfg.t_final);
    let opts = cfg.geodesic_options();
    let every = cfg.diag_every;
    let mut rows = vec![lagrangian_record(0.0, &DiffeoMap::identity(&grid))];
    let mut step = 0usize;
    let state = geodesic_integrate_with(&u0, cfg.t_final, dt, &opts, |st| {
        step += 1;
        if step % every == 0 {
            rows.push(lagrangian_record(st.t, &st.phi));
        }
    })?;
    if step % every != 0 {
        rows.push(lagrangian_record(state.t, &state.phi));
    }
    let velocity = eulerian_velocity(&state, &opts)?;
    let diag = cfg.output_path(&cfg.output.diagnostics);
    write_records(&diag, &rows)?;
    let map_path = cfg.output_path(&cfg.output.map);
    save_map(&map_path, &state.phi)?;
    let snap = cfg.output_path(&cfg.output.snapshot);
    save_field(&snap, &velocity)?;
    let last = rows.last().unwrap();
    let mut summary = json!({
        "steps": step,
        "dt": dt,
        "symplectic_residual": last.symplectic_residual,
        "displacement_lipschitz": last.displacement_lipschitz,
        "diagnostics": diag,
        "map": map_path,
        "snapshot": snap,
    });
    if check_equivalence {
        let run = integrate_with(&u0, cfg.t_final, dt, &cfg.solver_options(), &[], |_, _| {})?;
        let err = velocity.sub(&run.state.u)?.sobolev_norm(cfg.s - 1.0)?;
        let scale = u0.sobolev_norm(cfg.s)?;
        summary["equivalence_hsm1"] = json!(err);
        summary["equivalence_relative"] = json!(if scale > 0.0 { err / scale } else { 0.0 });
    }
    let mut check = None;
    if expect_residual {
        let quarter = 0.25 * apply_p(&u0).l2_norm();
        let ok = last.symplectic_residual >= quarter;
        summary["residual_bound"] = json!(quarter);
        summary["residual_ok"] = json!(ok);
        if !ok {
            check = Some(format!(
                "symplectic residual {:.3e} below ||P(u0)||/4 = {quarter:.3e}",
                last.symplectic_residual
            ));
        }
    }
    ctx.emit(summary);
    match check {
        Some(m) => Err(Failure::Check(m)),
        None => Ok(()),
    }
}

fn exp_map_cmd(ctx: &Ctx) -> Outcome {
    let cfg = ctx.load()?;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_velocity(&grid)?;
    let dt = cfg.time_step(&u0, 1.0);
    let state = geodesic_integrate_with(&u0, 1.0, dt, &cfg.geodesic_options(), |_| {})?;
    let path = cfg.output_path(&cfg.output.map);
    save_map(&path, &state.phi)?;
    ctx.emit(json!({
        "dt": dt,
        "symplectic_residual": symplectic_residual(&state.phi),
        "displacement_lipschitz": state.phi.displacement_lipschitz(),
        "map": path,
    }));
    Ok(())
}

fn out_dir(ctx: &Ctx, cfg: Option<&RunConfig>) -> PathBuf {
    match (&ctx.out, cfg) {
        (Some(d), _) => d.clone(),
        (None, Some(c)) => c.output.dir.clone(),
        (None, None) => PathBuf::from("out"),
    }
}

fn nonuniform(ctx: &Ctx) -> Outcome {
    let cfg = match &ctx.config {
        Some(_) => Some(ctx.load()?),
        None => None,
    };
    let params = cfg
        .as_ref()
        .and_then(|c| c.nonuniform.clone())
        .unwrap_or_else(NonuniformParams::default);
    if let Err(e) = params.validate() {
        return Err(Failure::Config(ConfigError::Invalid(vec![Issue {
            field: "nonuniform".into(),
            message: e.to_string(),
        }])));
    }
    let prepared = prepare_nonuniform(&params)?;
    let report = run_nonuniform(&prepared)?;
    let dir = out_dir(ctx, cfg.as_ref());
    let csv_path = dir.join("nonuniform.csv");
    write_atomic(&csv_path, |w| report.write_csv(w))?;
    let json_path = dir.join("nonuniform.json");
    let sidecar = report.sidecar_json();
    write_atomic(&json_path, |w| Ok(w.write_all(sidecar.as_bytes())?))?;
    let mut summary: serde_json::Value = serde_json::from_str(&sidecar).expect("sidecar is JSON");
    summary["passes"] = json!(report.passes());
    summary["csv"] = json!(csv_path);
    ctx.emit(summary);
    Ok(())
}

fn oracle2d(ctx: &Ctx) -> Outcome {
    let (u0, t_final, dt) = match &ctx.config {
        Some(_) => {
            let cfg = ctx.load()?;
            if cfg.n != 1 {
                return Err(Failure::Config(ConfigError::Invalid(vec![Issue {
                    field: "n".into(),
                    message: "the 2D oracle needs n = 1".into(),
                }])));
            }
            let u0 = cfg.initial_velocity(&cfg.grid()?)?;
            let dt = cfg.time_step(&u0, cfg.t_final);
            (u0, cfg.t_final, dt)
        }
        None => {
            let grid = Grid::periodic(1, 128)?;
            let u0 = random::symplectic(&grid, &mut random::seeded(ctx.seed.unwrap_or(50)), 2.0, 16);
            let dt = cfl_time_step(&u0, 1.0, 0.5);
            (u0, 1.0, dt)
        }
    };
    let opts = symplab::eulerian::SolverOptions::default();
    let run = integrate_with(&u0, t_final, dt, &opts, &[], |_, _| {})?;
    let oracle = oracle_2d_solve(&u0, t_final, dt)?;
    let err = run.state.u.sub(&oracle)?.sobolev_norm(0.0)?;
    let scale = u0.sobolev_norm(0.0)?;
    ctx.emit(json!({
        "t_final": t_final,
        "dt": dt,
        "l2_discrepancy": err,
        "relative_l2_discrepancy": if scale > 0.0 { err / scale } else { 0.0 },
    }));
    Ok(())
}

fn probes(ctx: &Ctx) -> Outcome {
    let report = run_probes(ctx.seed.unwrap_or(7))?;
    let text = serde_json::to_string_pretty(&report).expect("report is JSON");
    if let Some(dir) = &ctx.out {
        write_atomic(&dir.join("probes.json"), |w| Ok(w.write_all(text.as_bytes())?))?;
    }
    if !ctx.quiet {
        println!("{text}");
    }
    Ok(())
}

fn verify_cmd(ctx: &Ctx, ids: &[u32]) -> Outcome {
    let results = if ids.is_empty() {
        verify::run_all()
    } else {
        let mut out = Vec::new();
        for &id in ids {
            match verify::run_criterion(id) {
                Some(r) => out.push(r),
                None => {
                    return Err(Failure::Config(ConfigError::Invalid(vec![Issue {
                        field: "ids".into(),
                        message: format!("no criterion {id}"),
                    }])))
                }
            }
        }
        out
    };
    for r in &results {
        if !ctx.quiet {
            println!("{}", r.line());
        }
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("criteria failed: {failed:?}")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    let outcome = match cli.command {
        Command::RunEulerian => run_eulerian(&ctx),
        Command::RunLagrangian {
            check_equivalence,
            expect_residual,
        } => run_lagrangian(&ctx, check_equivalence, expect_residual),
        Command::ExpMap => exp_map_cmd(&ctx),
        Command::Experiment { which } => match which {
            Experiment::Nonuniform => nonuniform(&ctx),
            Experiment::Oracle2d => oracle2d(&ctx),
            Experiment::Probes => probes(&ctx),
        },
        Command::Verify { ids } => verify_cmd(&ctx, &ids),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.report());
            ExitCode::from(f.code())
        }
    }
}
