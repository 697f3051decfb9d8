//! Run configuration, benchmark presets and the adaptive loop
//! solve, estimate, check, mark and refine.

pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dwr::{compute_indicators, interpolate_down, mark_cells, solve_adjoint, weighted_residual, MarkingStrategy, PartitionOfUnity, Weight};
use crate::fem::{Component, DirichletBc, MeshGeometry, MixedSpace};
use crate::goal::{evaluate_displacement_point, evaluate_goal, evaluate_pressure_points, GoalError, GoalSpec};
use crate::mesh::{read_ucd_file, CircleManifold, Mesh, MeshError};
use crate::model::{channel_dirichlet, newton_solve, BoundaryIds, Discretization, FsiParameters, FsiProblem, FsiSystem, ModelError, NewtonSettings};

pub use output::{format_results_table, format_summary, parse_results_table, sci, write_results_table, write_vtk, TableRow, VertexField, RESULTS_HEADER};

/// File name of the per-loop results table.
pub const RESULTS_FILE: &str = "dwr_results.txt";

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("adaptive loop {loop_index}: {source}")]
    Solve { loop_index: usize, source: GoalError },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    /// Stationary FSI-1 channel with elastic beam.
    #[default]
    Fsi1,
    /// Flow around a cylinder, 2D-1, with every cell fluid.
    Flow2d1,
    Custom,
}

/// Curved obstacle boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub boundary_ids: Vec<u32>,
    pub center: [f64; 2],
    pub radius: f64,
}

/// Optional entries default to off when absent from a file; everything
/// else falls back to the FSI-1 preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    /// UCD mesh; relative paths in a config file are taken from the file's directory.
    pub mesh: PathBuf,
    pub initial_refinements: usize,
    #[serde(default)]
    pub obstacle: Option<Obstacle>,
    pub boundary: BoundaryIds,
    pub outflow_ids: Vec<u32>,
    /// Boundaries where the pressure is set to zero.
    pub pressure_dirichlet_ids: Vec<u32>,
    pub inflow_mean: f64,
    pub channel_height: f64,
    pub parameters: FsiParameters,
    pub goal: GoalSpec,
    #[serde(default)]
    pub reference_value: Option<f64>,
    /// Stop once `|eta| <= tol`.
    pub tol: f64,
    pub marking: MarkingStrategy,
    pub alpha: f64,
    pub theta: f64,
    pub max_loops: usize,
    /// No loop is run on a mesh with more primal DoFs than this.
    pub max_dofs: usize,
    pub output: PathBuf,
    pub write_vtk: bool,
    pub geometry_degree: usize,
    /// Velocity/displacement and pressure degrees.
    pub primal_degrees: [usize; 2],
    pub adjoint_degrees: [usize; 2],
    pub newton: NewtonSettings,
    /// Front and back pressure probes.
    pub pressure_points: [[f64; 2]; 2],
    #[serde(default)]
    pub displacement_point: Option<[f64; 2]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::preset(Benchmark::Fsi1)
    }
}

impl RunConfig {
    /// Built-in benchmark settings. Mesh paths are relative to the
    /// repository root.
    pub fn preset(benchmark: Benchmark) -> Self {
        let base = RunConfig {
            benchmark,
            mesh: "meshes/fsi1.inp".into(),
            initial_refinements: 1,
            obstacle: Some(Obstacle {
                boundary_ids: vec![80, 81],
                center: [0.2, 0.2],
                radius: 0.05,
            }),
            boundary: BoundaryIds::default(),
            outflow_ids: vec![1],
            // the solid side of the cylinder, where the back probe sits
            pressure_dirichlet_ids: vec![81],
            inflow_mean: 0.2,
            channel_height: 0.41,
            parameters: FsiParameters::default(),
            goal: GoalSpec::drag(vec![80, 81]),
            reference_value: Some(15.370185576528707),
            tol: 1e-10,
            marking: MarkingStrategy::PuThreshold,
            alpha: 1.0,
            theta: 0.3,
            max_loops: 4,
            max_dofs: 80_000,
            output: "output/fsi1".into(),
            write_vtk: true,
            geometry_degree: 2,
            primal_degrees: [2, 1],
            adjoint_degrees: [4, 2],
            newton: NewtonSettings::default(),
            pressure_points: [[0.15, 0.2], [0.25, 0.2]],
            displacement_point: Some([0.6, 0.2]),
        };
        match benchmark {
            Benchmark::Fsi1 | Benchmark::Custom => base,
            Benchmark::Flow2d1 => RunConfig {
                mesh: "meshes/flow2d1.inp".into(),
                initial_refinements: 0,
                parameters: FsiParameters {
                    rho_f: 1.0,
                    ..FsiParameters::default()
                },
                // drag coefficient 2 F / (rho U^2 D) with U = 0.2, D = 0.1
                goal: GoalSpec {
                    scale: 500.0,
                    ..GoalSpec::drag(vec![80, 81])
                },
                reference_value: Some(5.57953523384),
                pressure_dirichlet_ids: Vec::new(),
                output: "output/flow2d1".into(),
                displacement_point: None,
                ..base
            },
        }
    }

    /// Parses TOML; a relative mesh path is resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, DriverError> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        if cfg.mesh.is_relative() {
            cfg.mesh = base_dir.join(&cfg.mesh);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, DriverError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        let err = |m: String| Err(DriverError::Config(m));
        if self.tol.is_nan() || self.tol <= 0.0 {
            return err(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_loops == 0 {
            return err("max_loops must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return err(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return err(format!("theta must lie in (0, 1], got {}", self.theta));
        }
        if !(self.inflow_mean.is_finite() && self.channel_height > 0.0) {
            return err("inflow_mean must be finite and channel_height positive".into());
        }
        let [kv, kp] = self.primal_degrees;
        let [av, ap] = self.adjoint_degrees;
        if kp == 0 || kv <= kp || ap == 0 || av % kv != 0 || ap % kp != 0 || av <= kv {
            return err(format!("unsupported degree pair {:?} with adjoint {:?}", self.primal_degrees, self.adjoint_degrees));
        }
        if self.geometry_degree == 0 {
            return err("geometry_degree must be at least 1".into());
        }
        let d = self.goal.direction;
        if ((d[0] * d[0] + d[1] * d[1]).sqrt() - 1.0).abs() > 1e-12 {
            return err(format!("goal direction {d:?} is not a unit vector"));
        }
        self.parameters.validate().map_err(DriverError::Config)
    }

    /// Reads the mesh, attaches the obstacle and applies the initial refinements.
    pub fn load_mesh(&self) -> Result<Mesh, DriverError> {
        let mut mesh = read_ucd_file(&self.mesh)?;
        if let Some(o) = &self.obstacle {
            let circle = CircleManifold {
                center: o.center,
                radius: o.radius,
            };
            for &id in &o.boundary_ids {
                mesh.attach_manifold(id, circle);
            }
        }
        self.goal.validate(&mesh).map_err(|e| DriverError::Config(e.to_string()))?;
        Ok(mesh.refine_globally(self.initial_refinements))
    }

    /// Channel conditions plus the pressure conditions.
    pub fn dirichlet(&self) -> Vec<DirichletBc> {
        let mut bcs = channel_dirichlet(&self.boundary, self.inflow_mean, self.channel_height);
        bcs.extend(self.pressure_dirichlet_ids.iter().map(|&id| DirichletBc::zero(id, Component::P)));
        bcs
    }

    fn marking_parameter(&self) -> f64 {
        match self.marking {
            MarkingStrategy::PuThreshold => self.alpha,
            MarkingStrategy::DofFraction => self.theta,
        }
    }
}

/// Point values and forces of one solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub displacement: Option<[f64; 2]>,
    pub p_front: f64,
    pub p_back: f64,
    pub p_diff: f64,
    pub drag: f64,
    pub lift: f64,
}

/// One row of the adaptive history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub loop_index: usize,
    pub dofs: usize,
    pub adjoint_dofs: usize,
    pub active_cells: usize,
    pub goal: f64,
    /// `J_ref - J_h`, signed.
    pub true_error: Option<f64>,
    /// Signed `eta = sum_i eta_i`.
    pub eta: f64,
    /// `|eta|`.
    pub est_err: f64,
    /// `sum_i |eta_i|`.
    pub est_ind: f64,
    pub eff: Option<f64>,
    pub ind: Option<f64>,
    /// The weighted residual assembled without the partition of unity.
    pub weighted_residual: f64,
    pub newton_iterations: usize,
    pub adjoint_iterations: usize,
    pub marked_cells: usize,
    pub wall_time: f64,
    pub summary: Summary,
}

/// Point values and forces of `state`.
pub fn summarize(config: &RunConfig, problem: &FsiProblem, space: &MixedSpace, state: &[f64]) -> Result<Summary, GoalError> {
    let p = evaluate_pressure_points(problem.mesh, problem.geometry, space, state, &config.pressure_points)?;
    let displacement = match config.displacement_point {
        Some(a) => Some(evaluate_displacement_point(problem.mesh, problem.geometry, space, state, a)?),
        None => None,
    };
    let along = |d: [f64; 2]| GoalSpec {
        direction: d,
        ..config.goal.clone()
    };
    Ok(Summary {
        displacement,
        p_front: p[0],
        p_back: p[1],
        p_diff: p[0] - p[1],
        drag: evaluate_goal(problem, space, state, &along([1.0, 0.0]))?,
        lift: evaluate_goal(problem, space, state, &along([0.0, 1.0]))?,
    })
}

/// Runs the adaptive loop. `dwr_results.txt` is rewritten after every loop,
/// so a failure leaves the completed rows on disk.
pub fn run_adaptive(config: &RunConfig) -> Result<Vec<LoopRecord>, DriverError> {
    config.validate()?;
    let mut mesh = config.load_mesh()?;
    std::fs::create_dir_all(&config.output)?;
    let bcs = config.dirichlet();
    let [kv, kp] = config.primal_degrees;
    let [av, ap] = config.adjoint_degrees;
    let mut records: Vec<LoopRecord> = Vec::new();

    for loop_index in 0..config.max_loops {
        let start = Instant::now();
        let fail = |source: GoalError| DriverError::Solve { loop_index, source };
        let model = |e: ModelError| fail(e.into());

        let geometry = MeshGeometry::new(&mesh, config.geometry_degree);
        let disc = Discretization::new(&mesh, &geometry, kv, kp, &bcs);
        let problem = FsiProblem {
            mesh: &mesh,
            geometry: &geometry,
            params: &config.parameters,
            outflow_ids: &config.outflow_ids,
        };
        log::info!("loop {loop_index}: {} cells, {} primal DoFs", mesh.n_active_cells(), disc.n_dofs());
        let system = FsiSystem { problem, disc: &disc };
        let (x, newton) = newton_solve(&system, &vec![0.0; disc.n_dofs()], &config.newton).map_err(model)?;
        let goal = evaluate_goal(&problem, &disc.space, &x, &config.goal).map_err(fail)?;
        let summary = summarize(config, &problem, &disc.space, &x).map_err(fail)?;

        let adisc = Discretization::new(&mesh, &geometry, av, ap, &bcs);
        let (z, adjoint) = solve_adjoint(&problem, &disc.space, &x, &adisc, &config.goal).map_err(fail)?;
        let iz = interpolate_down(&mesh, &adisc.space, &z, &disc.space, &disc.homogeneous);
        let weight = Weight {
            high: &adisc,
            z: &z,
            low: &disc,
            iz: &iz,
        };
        let pu = PartitionOfUnity::new(&mesh, &geometry);
        let estimate = compute_indicators(&problem, &disc.space, &x, &weight, &pu)
            .map_err(model)?
            .with_reference(config.reference_value, goal);
        let global = weighted_residual(&problem, &disc.space, &x, &weight).map_err(model)?;

        if config.write_vtk {
            let path = config.output.join(format!("solution-{loop_index:02}.vtk"));
            write_vtk(
                &mesh,
                &VertexField { space: &disc.space, values: &x },
                Some(&VertexField { space: &adisc.space, values: &z }),
                Some(&estimate.cell_indicators),
                &path,
            )?;
        }

        let stop = estimate.eta.abs() <= config.tol || loop_index + 1 == config.max_loops;
        let marks = if stop {
            Default::default()
        } else {
            mark_cells(&estimate, &mesh, &pu, config.marking, config.marking_parameter())
        };
        let record = LoopRecord {
            loop_index,
            dofs: disc.n_dofs(),
            adjoint_dofs: adisc.n_dofs(),
            active_cells: mesh.n_active_cells(),
            goal,
            true_error: estimate.true_error,
            eta: estimate.eta,
            est_err: estimate.eta.abs(),
            est_ind: estimate.eta_abs,
            eff: estimate.eff,
            ind: estimate.ind,
            weighted_residual: global,
            newton_iterations: newton.iterations,
            adjoint_iterations: adjoint.iterations,
            marked_cells: marks.len(),
            wall_time: start.elapsed().as_secs_f64(),
            summary,
        };
        log::info!(
            "loop {loop_index}: J = {}, eta = {}, sum |eta_i| = {}, {:.1} s",
            sci(goal, 10),
            sci(record.eta, 3),
            sci(record.est_ind, 3),
            record.wall_time
        );
        records.push(record);
        write_results_table(&records, &config.output.join(RESULTS_FILE))?;

        if stop || marks.is_empty() {
            break;
        }
        let next = mesh.refine(&marks);
        let next_dofs = MixedSpace::new(&next, &MeshGeometry::new(&next, config.geometry_degree), kv, kp).n_dofs();
        if next_dofs > config.max_dofs {
            log::info!("stopping: next mesh has {next_dofs} DoFs, above max_dofs = {}", config.max_dofs);
            break;
        }
        mesh = next;
    }
    std::fs::write(config.output.join("summary.txt"), format_summary(&records.last().expect("one loop").summary))?;
    Ok(records)
}
