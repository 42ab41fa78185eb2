//! Block-coordinate descent for weighted magnitude least-squares beampattern
//! matching.
//!
//! The objective `sum w (D - |y|)^2` is lifted with auxiliary phases `psi` to
//! `sum w |D e^{i psi} - y|^2`. Each outer iteration refreshes `psi`, solves
//! the power-constrained least-squares problem in `s`, refreshes `psi` again
//! and sweeps the unit-modulus RIS responses `x` element by element. Every
//! block step is an exact minimization, so the objective never increases.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::desired::DesiredPattern;
use crate::error::{invalid, Error, Result};
use crate::grid::Grids;
use crate::response::LinearModel;
use crate::scene::{DesignVariables, Scene};
use crate::waveform::{Constraint, Factorization};
use crate::C64;

pub use crate::waveform::{WaveformSolver, CG_TOL, DENSE_LIMIT};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub max_outer_iters: usize,
    /// Stop once the relative objective decrease of an outer iteration falls below this.
    pub rel_obj_tol: f64,
    /// Relative gap `1 - ||s||^2 / (N P)` accepted when the power constraint is active.
    pub lambda_bisect_tol: f64,
    pub lambda_bisect_max_iters: usize,
    /// Cyclic sweeps over the RIS elements per outer iteration.
    pub x_inner_sweeps: usize,
    pub seed: u64,
    pub solver: WaveformSolver,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 200,
            rel_obj_tol: 1e-6,
            lambda_bisect_tol: 1e-10,
            lambda_bisect_max_iters: 200,
            x_inner_sweeps: 1,
            seed: 0,
            solver: WaveformSolver::Auto,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 {
            return Err(invalid("max_outer_iters", "must be at least 1"));
        }
        if self.lambda_bisect_max_iters == 0 {
            return Err(invalid("lambda_bisect_max_iters", "must be at least 1"));
        }
        if self.x_inner_sweeps == 0 {
            return Err(invalid("x_inner_sweeps", "must be at least 1"));
        }
        if !(self.rel_obj_tol > 0.0) {
            return Err(invalid("rel_obj_tol", "must be positive"));
        }
        if !(self.lambda_bisect_tol > 0.0) {
            return Err(invalid("lambda_bisect_tol", "must be positive"));
        }
        Ok(())
    }

    pub(crate) fn constraint(&self, budget: f64) -> Constraint {
        Constraint {
            budget,
            tol: self.lambda_bisect_tol,
            max_iters: self.lambda_bisect_max_iters,
        }
    }
}

/// Objective after initialization and after every outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveTrace {
    pub values: Vec<f64>,
    pub final_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ObjectiveTrace {
    /// Largest relative increase between consecutive entries.
    pub fn worst_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Starting point for [`run_bcd`].
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Uniform random RIS phases from `OptimConfig::seed`; `s` is the
    /// unconstrained least-squares fit for those phases scaled into the power ball.
    Random,
    Given(DesignVariables),
}

pub(crate) fn phase_of(z: C64) -> f64 {
    if z == ZERO {
        0.0
    } else {
        z.arg()
    }
}

/// Problem data shared by the RIS and digital designs.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    pub model: LinearModel,
    pub desired: Vec<f64>,
    pub weights: Vec<f64>,
    pub samples: usize,
}

impl Engine {
    pub fn new(model: LinearModel, desired: &DesiredPattern, samples: usize) -> Result<Self> {
        if desired.values.len() != model.points() {
            return Err(Error::DimensionMismatch {
                what: "desired pattern",
                expected: model.points(),
                got: desired.values.len(),
            });
        }
        Ok(Self {
            model,
            desired: desired.values.clone(),
            weights: desired.weights.clone(),
            samples,
        })
    }

    pub fn objective_of(&self, y: &[C64]) -> f64 {
        y.iter()
            .zip(&self.desired)
            .zip(&self.weights)
            .map(|((yv, d), w)| {
                let e = d - yv.norm();
                w * e * e
            })
            .sum()
    }

    pub fn lifted_of(&self, y: &[C64], psi: &[f64]) -> f64 {
        y.iter()
            .zip(self.targets(psi))
            .zip(&self.weights)
            .map(|((yv, t), w)| w * (t - yv).norm_sqr())
            .sum()
    }

    pub fn targets(&self, psi: &[f64]) -> Vec<C64> {
        self.desired
            .iter()
            .zip(psi)
            .map(|(d, p)| C64::from_polar(*d, *p))
            .collect()
    }

    pub fn phases_of(y: &[C64]) -> Vec<f64> {
        y.iter().map(|z| phase_of(*z)).collect()
    }

    pub fn factorize(&self, x: Option<&[C64]>, solver: WaveformSolver) -> Result<Factorization> {
        let blocks = self.model.normal_blocks(x, &self.weights);
        Factorization::new(blocks, &self.model.sampler, solver)
    }

    /// Waveform minimizing the lifted objective for fixed `x` and `psi`.
    pub fn waveform(
        &self,
        fact: &Factorization,
        x: Option<&[C64]>,
        psi: &[f64],
        constraint: &Constraint,
        warm: Option<&[C64]>,
    ) -> Result<Vec<C64>> {
        let rhs = self.model.normal_rhs(x, &self.targets(psi), &self.weights);
        Ok(fact.solve(&self.model.sampler, &rhs, constraint, warm)?.s)
    }

    /// Least-squares fit to the unphased desired amplitudes, scaled into the power ball.
    pub fn initial_waveform(&self, fact: &Factorization, x: Option<&[C64]>, cfg: &OptimConfig, budget: f64) -> Result<Vec<C64>> {
        let psi = vec![0.0; self.desired.len()];
        let free = cfg.constraint(f64::INFINITY);
        let mut s = self.waveform(fact, x, &psi, &free, None)?;
        let norm2: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        if norm2 > budget {
            let scale = (budget / norm2).sqrt();
            s.iter_mut().for_each(|z| *z *= scale);
        }
        Ok(s)
    }

    /// Cyclic unit-modulus updates of `x` against the lifted objective.
    pub fn sweep_phases(&self, s: &[C64], x: &mut [C64], psi: &[f64], sweeps: usize) {
        let drive = self.model.element_drive(s);
        let y = self.model.responses_from_drive(Some(x), &drive);
        let mut resid: Vec<C64> = self.targets(psi).iter().zip(&y).map(|(t, yv)| t - yv).collect();
        for _ in 0..sweeps {
            self.model.for_each_element_row(&drive, |m, b| {
                let xm = x[m];
                let z: C64 = b
                    .iter()
                    .zip(&resid)
                    .zip(&self.weights)
                    .map(|((bv, r), w)| (r + bv * xm) * bv.conj() * *w)
                    .sum();
                if z == ZERO {
                    return;
                }
                let next = z / z.norm();
                let delta = next - xm;
                for (r, bv) in resid.iter_mut().zip(b) {
                    *r -= bv * delta;
                }
                x[m] = next;
            });
        }
    }
}

fn random_phases(m: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| C64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
        .collect()
}

/// Precomputed RIS beampattern-matching problem.
#[derive(Debug, Clone)]
pub struct RisProblem<'a> {
    scene: &'a Scene,
    engine: Engine,
}

impl<'a> RisProblem<'a> {
    pub fn new(scene: &'a Scene, grids: &Grids, desired: &DesiredPattern) -> Result<Self> {
        let model = LinearModel::ris(scene, grids)?;
        Ok(Self {
            scene,
            engine: Engine::new(model, desired, scene.samples())?,
        })
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    /// Complex responses `v^H diag(x) Q s` at every grid point.
    pub fn responses(&self, dv: &DesignVariables) -> Vec<C64> {
        self.engine.model.responses(Some(&dv.x), &dv.s)
    }

    /// `sum_kl w_kl (D_kl - B_kl)^2`
    pub fn objective(&self, dv: &DesignVariables) -> f64 {
        self.engine.objective_of(&self.responses(dv))
    }

    /// `sum_kl w_kl |D_kl e^{i psi_kl} - v^H diag(x) Q s|^2`
    pub fn lifted_objective(&self, dv: &DesignVariables, psi: &[f64]) -> f64 {
        self.engine.lifted_of(&self.responses(dv), psi)
    }

    /// Phases of the current responses (zero where the response vanishes).
    pub fn aux_phases(&self, dv: &DesignVariables) -> Vec<f64> {
        Engine::phases_of(&self.responses(dv))
    }

    /// Minimizer of the lifted objective over `s` with `(1/N)||s||^2 <= power`.
    pub fn solve_waveform(&self, psi: &[f64], x: &[C64], power: f64, cfg: &OptimConfig) -> Result<Vec<C64>> {
        self.check_x(x)?;
        let fact = self.engine.factorize(Some(x), cfg.solver)?;
        let budget = power * self.scene.samples() as f64;
        self.engine.waveform(&fact, Some(x), psi, &cfg.constraint(budget), None)
    }

    /// `sweeps` cyclic passes of exact single-element updates of `x`.
    pub fn update_ris_phases(&self, s: &[C64], x: &[C64], psi: &[f64], sweeps: usize) -> Result<Vec<C64>> {
        self.check_x(x)?;
        let mut next = x.to_vec();
        self.engine.sweep_phases(s, &mut next, psi, sweeps);
        Ok(next)
    }

    fn check_x(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.scene.num_elements() {
            return Err(Error::DimensionMismatch {
                what: "RIS vector x",
                expected: self.scene.num_elements(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Alternates the phase, waveform and RIS blocks until the relative
    /// decrease drops below `rel_obj_tol` or `max_outer_iters` is reached.
    pub fn run(&self, init: Init, power: f64, cfg: &OptimConfig) -> Result<(DesignVariables, ObjectiveTrace)> {
        cfg.validate()?;
        if !(power > 0.0) {
            return Err(invalid("power", "must be positive"));
        }
        let engine = &self.engine;
        let budget = power * self.scene.samples() as f64;
        let constraint = cfg.constraint(budget);
        let mut dv = match init {
            Init::Given(dv) => {
                if dv.s.len() != self.scene.waveform_len() {
                    return Err(Error::DimensionMismatch {
                        what: "waveform vector s",
                        expected: self.scene.waveform_len(),
                        got: dv.s.len(),
                    });
                }
                self.check_x(&dv.x)?;
                dv
            }
            Init::Random => {
                let x = random_phases(self.scene.num_elements(), cfg.seed);
                let fact = engine.factorize(Some(&x), cfg.solver)?;
                let s = engine.initial_waveform(&fact, Some(&x), cfg, budget)?;
                DesignVariables { s, x }
            }
        };

        let mut obj = self.objective(&dv);
        let mut values = vec![obj];
        let mut converged = obj == 0.0;
        let mut iterations = 0;
        while !converged && iterations < cfg.max_outer_iters {
            iterations += 1;

            let y = self.responses(&dv);
            let psi = Engine::phases_of(&y);
            let before = engine.lifted_of(&y, &psi);
            let fact = engine.factorize(Some(&dv.x), cfg.solver)?;
            let s = engine.waveform(&fact, Some(&dv.x), &psi, &constraint, Some(&dv.s))?;
            let y_new = engine.model.responses(Some(&dv.x), &s);
            // keep the old iterate if the multiplier search landed marginally worse
            if engine.lifted_of(&y_new, &psi) <= before {
                dv.s = s;
            }

            let psi = self.aux_phases(&dv);
            engine.sweep_phases(&dv.s, &mut dv.x, &psi, cfg.x_inner_sweeps);

            let next = self.objective(&dv);
            values.push(next);
            converged = next == 0.0 || obj - next <= cfg.rel_obj_tol * obj;
            obj = next;
        }
        let trace = ObjectiveTrace {
            final_objective: obj,
            values,
            iterations,
            converged,
        };
        Ok((dv, trace))
    }
}

/// Weighted matching objective of a design against a desired pattern.
pub fn matching_objective(dv: &DesignVariables, desired: &DesiredPattern, scene: &Scene, grids: &Grids) -> Result<f64> {
    Ok(RisProblem::new(scene, grids, desired)?.objective(dv))
}

/// Auxiliary phases `psi_kl = arg(v^H diag(x) Q s)`.
pub fn update_aux_phases(dv: &DesignVariables, desired: &DesiredPattern, scene: &Scene, grids: &Grids) -> Result<Vec<f64>> {
    Ok(RisProblem::new(scene, grids, desired)?.aux_phases(dv))
}

pub fn solve_waveform(
    psi: &[f64],
    x: &[C64],
    desired: &DesiredPattern,
    scene: &Scene,
    grids: &Grids,
    power: f64,
    cfg: &OptimConfig,
) -> Result<Vec<C64>> {
    RisProblem::new(scene, grids, desired)?.solve_waveform(psi, x, power, cfg)
}

pub fn update_ris_phases(
    dv: &DesignVariables,
    psi: &[f64],
    desired: &DesiredPattern,
    scene: &Scene,
    grids: &Grids,
    sweeps: usize,
) -> Result<Vec<C64>> {
    RisProblem::new(scene, grids, desired)?.update_ris_phases(&dv.s, &dv.x, psi, sweeps)
}

/// Designs `s` and `x` for `desired` under the power budget `power` (watts).
pub fn run_bcd(
    init: Init,
    desired: &DesiredPattern,
    scene: &Scene,
    grids: &Grids,
    power: f64,
    cfg: &OptimConfig,
) -> Result<(DesignVariables, ObjectiveTrace)> {
    RisProblem::new(scene, grids, desired)?.run(init, power, cfg)
}
