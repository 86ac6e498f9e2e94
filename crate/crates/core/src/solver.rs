//! Quasi-static equilibrium solves under scheduled stimulus.
//!
//! Static mode minimizes the elastic energy minus the work of a dead
//! perturbation load, one Newton step at a time: assemble the gradient and
//! banded Hessian on the free degrees of freedom, regularize until the
//! factorization succeeds and the step descends, then backtrack on the
//! energy. Load stepping walks the prescribed peak strain from zero to its
//! target with an adaptive increment, halving on failure and growing after
//! easy steps. Dynamic mode wraps the same machinery in one implicit-Euler
//! update with a lumped diagonal mass matrix.

use alloc::vec::Vec;

use crate::energy::{accumulate, energy_value, EnergyParams, HessianSink};
use crate::linalg::{reverse_cuthill_mckee, BandSystem};
use crate::mesh::{DofVector, Mesh, MeshError, Region};
use crate::stimulus::{thermal_field, StimulusError, StimulusSchedule, ThermalField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    Static,
    /// Implicit-Euler time stepping with time step `dt` (s) and mass
    /// density (tonne/mm^3) for the lumped mass matrix.
    Dynamic { dt: f64, density: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintScheme {
    /// Pin one node fully, a neighbor in two directions, and a third
    /// non-collinear node in one direction, removing exactly the six
    /// rigid-body modes without stressing the body.
    Auto321,
    /// Explicit global DOF indices to freeze at their current values.
    PinnedDofs(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Convergence tolerance on |dX| / |X| per load step.
    pub tol: f64,
    pub max_newton_iters: usize,
    pub constraints: ConstraintScheme,
    pub mode: SolveMode,
    /// Max per-node residual force (N) required at the final state; derived
    /// from `tol` and the material when absent.
    pub force_tol: Option<f64>,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Max step halvings in one line search.
    pub max_line_search: usize,
    /// First Hessian shift, as a fraction of the matrix infinity norm.
    pub regularization_init: f64,
    /// Max regularization escalations (x10 each) per Newton step.
    pub max_regularization: usize,
    /// Load-step growth factor after fast convergence.
    pub step_growth: f64,
    /// Grow the load step when a level converges within this many iterations.
    pub grow_below_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_newton_iters: 60,
            constraints: ConstraintScheme::Auto321,
            mode: SolveMode::Static,
            force_tol: None,
            armijo_c: 1e-4,
            max_line_search: 40,
            regularization_init: 1e-6,
            max_regularization: 14,
            step_growth: 1.5,
            grow_below_iters: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    Mesh(MeshError),
    Stimulus(StimulusError),
    /// Static free-body solves need at least six pinned DOFs.
    TooFewConstraints { count: usize },
    PinOutOfRange { dof: usize },
    /// A non-finite coordinate appeared; the offending load step is named.
    NonFinite { step: usize },
    /// A Newton step failed outside of load stepping (no step to halve).
    Newton(StepFailure),
    /// Dynamic API called without dynamic mode configured.
    NotDynamicMode,
}

impl From<MeshError> for SolverError {
    fn from(e: MeshError) -> Self {
        SolverError::Mesh(e)
    }
}

impl From<StimulusError> for SolverError {
    fn from(e: StimulusError) -> Self {
        SolverError::Stimulus(e)
    }
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverError::Mesh(e) => write!(f, "mesh error: {e}"),
            SolverError::Stimulus(e) => write!(f, "stimulus error: {e}"),
            SolverError::TooFewConstraints { count } => {
                write!(f, "static solve needs >= 6 pinned DOFs, got {count}")
            }
            SolverError::PinOutOfRange { dof } => write!(f, "pinned DOF {dof} out of range"),
            SolverError::NonFinite { step } => {
                write!(f, "non-finite coordinates at load step {step}")
            }
            SolverError::Newton(e) => write!(f, "newton step failed: {e:?}"),
            SolverError::NotDynamicMode => write!(f, "solver is not configured for dynamic mode"),
        }
    }
}

#[cfg(test)]
impl std::error::Error for SolverError {}

/// Why a Newton step could not be completed; the caller halves the load
/// step in response.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure {
    /// Factorization failed or produced an ascent direction even at the
    /// regularization cap.
    SingularSystem,
    LineSearchFailed,
    NonFinite,
    Mesh(MeshError),
}

impl From<MeshError> for StepFailure {
    fn from(e: MeshError) -> Self {
        StepFailure::Mesh(e)
    }
}

/// Result of one damped Newton step.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub x: DofVector,
    /// Accepted line-search fraction of the full Newton step.
    pub alpha: f64,
    /// |alpha * delta| / |x|.
    pub rel_dx: f64,
    /// Hessian shift that was needed (zero when positive definite).
    pub shift: f64,
    /// Max per-node residual force magnitude at the *input* state.
    pub input_max_force: f64,
    /// Merit value (energy minus external work) at the accepted state.
    pub merit: f64,
}

/// Record of one accepted load step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub index: usize,
    pub peak_strain: f64,
    pub perturbation: f64,
    pub newton_iterations: usize,
    pub rel_dx: f64,
    pub max_node_force: f64,
    pub energy: f64,
}

/// Solver trajectory: current coordinates, stimulus level, and the step
/// history. `converged` is false when step halving was exhausted.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: DofVector,
    pub peak_strain: f64,
    pub history: Vec<StepRecord>,
    pub converged: bool,
}

/// Reusable assembly buffers and the constraint-reduced band layout for one
/// (mesh, pin set) pair.
pub struct NewtonWorkspace {
    /// Global DOF -> reduced index, `usize::MAX` for pinned.
    free_of_dof: Vec<usize>,
    dof_of_free: Vec<usize>,
    band: BandSystem,
    grad: Vec<f64>,
    rhs: Vec<f64>,
    trial: Vec<f64>,
}

impl NewtonWorkspace {
    pub fn new(mesh: &Mesh, pins: &[usize]) -> Result<Self, SolverError> {
        let n_dofs = 3 * mesh.node_count();
        let mut pinned = alloc::vec![false; n_dofs];
        for &p in pins {
            if p >= n_dofs {
                return Err(SolverError::PinOutOfRange { dof: p });
            }
            pinned[p] = true;
        }

        let adjacency = node_adjacency(mesh);
        let order = reverse_cuthill_mckee(&adjacency);

        let mut free_of_dof = alloc::vec![usize::MAX; n_dofs];
        let mut dof_of_free = Vec::new();
        for &node in &order {
            for axis in 0..3 {
                let dof = 3 * node + axis;
                if !pinned[dof] {
                    free_of_dof[dof] = dof_of_free.len();
                    dof_of_free.push(dof);
                }
            }
        }

        // node -> (first, last) reduced index among its free DOFs
        let mut span = alloc::vec![None::<(usize, usize)>; mesh.node_count()];
        for (reduced, &dof) in dof_of_free.iter().enumerate() {
            let node = dof / 3;
            span[node] = Some(match span[node] {
                None => (reduced, reduced),
                Some((lo, hi)) => (lo.min(reduced), hi.max(reduced)),
            });
        }
        let mut bandwidth = 0usize;
        let mut pair_width = |a: usize, b: usize| {
            if let (Some((lo_a, hi_a)), Some((lo_b, hi_b))) = (span[a], span[b]) {
                bandwidth = bandwidth
                    .max(hi_a.saturating_sub(lo_b))
                    .max(hi_b.saturating_sub(lo_a));
            }
        };
        for node in 0..mesh.node_count() {
            pair_width(node, node);
        }
        for e in mesh.edges() {
            pair_width(e.nodes[0], e.nodes[1]);
        }
        for h in mesh.hinges() {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    pair_width(h.nodes[i], h.nodes[j]);
                }
            }
        }

        let n_free = dof_of_free.len();
        Ok(Self {
            free_of_dof,
            dof_of_free,
            band: BandSystem::new(n_free, bandwidth.min(n_free.saturating_sub(1))),
            grad: alloc::vec![0.0; n_dofs],
            rhs: alloc::vec![0.0; n_free],
            trial: alloc::vec![0.0; n_dofs],
        })
    }

    pub fn free_count(&self) -> usize {
        self.dof_of_free.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.band.bandwidth()
    }
}

struct BandSink<'a> {
    free_of_dof: &'a [usize],
    band: &'a mut BandSystem,
}

impl HessianSink for BandSink<'_> {
    #[inline]
    fn add(&mut self, p: usize, q: usize, value: f64) {
        // elements emit both (p, q) and (q, p); keep one representative
        if p < q {
            return;
        }
        let rp = self.free_of_dof[p];
        let rq = self.free_of_dof[q];
        if rp == usize::MAX || rq == usize::MAX {
            return;
        }
        let (i, j) = if rp >= rq { (rp, rq) } else { (rq, rp) };
        self.band.add(i, j, value);
    }
}

/// Inertial contribution of an implicit-Euler update.
struct Inertia<'a> {
    /// Per-node lumped mass.
    masses: &'a [f64],
    /// Inertial target `x_k + dt * v_k`, flat 3N.
    x_tilde: &'a [f64],
    inv_dt2: f64,
}

/// One damped, regularized Newton step on the free DOFs.
///
/// Solves `J dx = -(grad E + inertia - f_ext)` with `J` the (shifted)
/// energy Hessian plus the inertial diagonal, then backtracks on the merit
/// `E + inertia - f_ext . x` until the Armijo condition holds. Pinned DOFs
/// are never touched.
///
/// `shift_state` carries the Hessian regularization between iterations
/// (Levenberg-Marquardt style): it escalates until the factorization
/// succeeds with a descent direction, and relaxes back toward zero after
/// full steps, so indefinite stretches of a buckling path are traversed
/// without re-probing from scratch every iteration.
pub fn newton_step(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
    f_ext: &[f64],
    ws: &mut NewtonWorkspace,
    config: &SolverConfig,
    shift_state: &mut f64,
) -> Result<NewtonStep, StepFailure> {
    newton_step_inner(mesh, x, params, field, f_ext, None, ws, config, shift_state)
}

#[allow(clippy::too_many_arguments)]
fn newton_step_inner(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
    f_ext: &[f64],
    inertia: Option<&Inertia<'_>>,
    ws: &mut NewtonWorkspace,
    config: &SolverConfig,
    shift_state: &mut f64,
) -> Result<NewtonStep, StepFailure> {
    let n_dofs = x.len();
    debug_assert_eq!(f_ext.len(), n_dofs);

    ws.grad.fill(0.0);
    ws.band.reset();
    let mut sink = BandSink {
        free_of_dof: &ws.free_of_dof,
        band: &mut ws.band,
    };
    let energy = accumulate(mesh, x, params, field, Some(&mut ws.grad), Some(&mut sink))?;

    // residual of the stationarity condition
    for (dof, g) in ws.grad.iter_mut().enumerate() {
        *g -= f_ext[dof];
    }
    if let Some(inertia) = inertia {
        for node in 0..n_dofs / 3 {
            let m = inertia.masses[node] * inertia.inv_dt2;
            for axis in 0..3 {
                let dof = 3 * node + axis;
                ws.grad[dof] += m * (x.as_slice()[dof] - inertia.x_tilde[dof]);
                let r = ws.free_of_dof[dof];
                if r != usize::MAX {
                    sink_free_diag(&mut ws.band, r, m);
                }
            }
        }
    }

    let input_max_force = max_node_force(&ws.grad, &ws.free_of_dof);
    // merit at the input state, reusing the energy from assembly
    let mut merit0 = energy;
    for (dof, &f) in f_ext.iter().enumerate() {
        merit0 -= f * x.as_slice()[dof];
    }
    if let Some(inertia) = inertia {
        let xs = x.as_slice();
        for node in 0..x.node_count() {
            let w = 0.5 * inertia.masses[node] * inertia.inv_dt2;
            for axis in 0..3 {
                let dof = 3 * node + axis;
                let d = xs[dof] - inertia.x_tilde[dof];
                merit0 += w * d * d;
            }
        }
    }

    // reduced right-hand side
    let mut rhs_inf = 0.0f64;
    for (r, &dof) in ws.dof_of_free.iter().enumerate() {
        ws.rhs[r] = -ws.grad[dof];
        rhs_inf = rhs_inf.max(ws.grad[dof].abs());
    }
    if rhs_inf < 1e-300 {
        // already stationary; nothing to solve
        return Ok(NewtonStep {
            x: x.clone(),
            alpha: 1.0,
            rel_dx: 0.0,
            shift: 0.0,
            input_max_force,
            merit: merit0,
        });
    }

    let norm_scale = ws.band.infinity_norm().max(1e-300);
    let pivot_floor = 1e-14 * norm_scale;
    let shift_init = config.regularization_init * norm_scale;
    let mut shift = *shift_state;
    let mut delta: Option<Vec<f64>> = None;
    for _attempt in 0..=config.max_regularization {
        if ws.band.factor(shift, pivot_floor).is_ok() {
            let mut d = ws.rhs.clone();
            ws.band.solve(&mut d);
            let finite = d.iter().all(|v| v.is_finite());
            // descent requires grad . delta < 0, i.e. rhs . delta > 0
            let along: f64 = d.iter().zip(&ws.rhs).map(|(a, b)| a * b).sum();
            if finite && along > 0.0 {
                delta = Some(d);
                break;
            }
        }
        shift = if shift == 0.0 { shift_init } else { shift * 10.0 };
    }
    let delta = delta.ok_or(StepFailure::SingularSystem)?;

    // directional derivative of the merit along delta
    let dir_deriv: f64 = ws
        .dof_of_free
        .iter()
        .enumerate()
        .map(|(r, &dof)| ws.grad[dof] * delta[r])
        .sum();

    let x_norm = x.norm().max(1e-300);
    let mut alpha = 1.0f64;
    for _ in 0..config.max_line_search {
        ws.trial.copy_from_slice(x.as_slice());
        for (r, &dof) in ws.dof_of_free.iter().enumerate() {
            ws.trial[dof] += alpha * delta[r];
        }
        let trial = DofVector::new(ws.trial.clone());
        if let Ok(trial) = trial {
            if let Ok(m) = merit_with(mesh, &trial, params, field, f_ext, inertia) {
                if m.is_finite() && m <= merit0 + config.armijo_c * alpha * dir_deriv {
                    // relax the shift after clean full steps, harden it
                    // after heavy backtracking
                    *shift_state = if alpha >= 1.0 {
                        let next = shift / 3.0;
                        if next < 0.3 * shift_init {
                            0.0
                        } else {
                            next
                        }
                    } else if alpha >= 0.25 {
                        shift
                    } else {
                        (shift * 4.0).max(shift_init)
                    };
                    let step_norm: f64 =
                        libm::sqrt(delta.iter().map(|d| d * d).sum::<f64>()) * alpha;
                    let mut accepted = trial;
                    let mut merit_acc = m;
                    // A positive shift means the Hessian was indefinite:
                    // the iterate sits near a saddle (e.g. the flat branch
                    // past its buckling load). Walk down the most negative
                    // curvature direction as far as the energy keeps
                    // dropping, otherwise the unstable mode would only
                    // grow geometrically across many iterations.
                    if shift > 0.0 {
                        if let Some((x2, m2)) = descend_negative_mode(
                            mesh, &accepted, merit_acc, params, field, f_ext, inertia, ws,
                            step_norm.max(1e-6 * x_norm),
                        ) {
                            accepted = x2;
                            merit_acc = m2;
                        }
                    }
                    let total_sq: f64 = accepted
                        .as_slice()
                        .iter()
                        .zip(x.as_slice())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    return Ok(NewtonStep {
                        x: accepted,
                        alpha,
                        rel_dx: libm::sqrt(total_sq) / x_norm,
                        shift,
                        input_max_force,
                        merit: merit_acc,
                    });
                }
            }
        }
        alpha *= 0.5;
    }
    *shift_state = (shift * 10.0).max(shift_init);
    Err(StepFailure::LineSearchFailed)
}

/// Estimate the most negative curvature direction by inverse iteration on
/// the last factored (shifted) system, then minimize the merit along it
/// with an expanding then bisecting search. Returns an improved state when
/// the merit strictly decreases.
#[allow(clippy::too_many_arguments)]
fn descend_negative_mode(
    mesh: &Mesh,
    x: &DofVector,
    merit_at_x: f64,
    params: &EnergyParams,
    field: &ThermalField,
    f_ext: &[f64],
    inertia: Option<&Inertia<'_>>,
    ws: &mut NewtonWorkspace,
    initial_scale: f64,
) -> Option<(DofVector, f64)> {
    // inverse iteration, seeded by the residual (which the perturbation
    // load keeps off the symmetric subspace)
    let mut mode = ws.rhs.clone();
    let norm = |v: &[f64]| libm::sqrt(v.iter().map(|a| a * a).sum::<f64>());
    let n0 = norm(&mode);
    if !(n0 > 0.0) || !n0.is_finite() {
        return None;
    }
    for v in mode.iter_mut() {
        *v /= n0;
    }
    for _ in 0..4 {
        ws.band.solve(&mut mode);
        let n = norm(&mode);
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        for v in mode.iter_mut() {
            *v /= n;
        }
    }

    let evaluate = |t: f64, ws_trial: &mut Vec<f64>| -> Option<(DofVector, f64)> {
        ws_trial.copy_from_slice(x.as_slice());
        for (r, &dof) in ws.dof_of_free.iter().enumerate() {
            ws_trial[dof] += t * mode[r];
        }
        let state = DofVector::new(ws_trial.clone()).ok()?;
        let m = merit_with(mesh, &state, params, field, f_ext, inertia).ok()?;
        m.is_finite().then_some((state, m))
    };

    let mut trial_buf = x.as_slice().to_vec();
    let mut best: Option<(DofVector, f64, f64)> = None;
    for sign in [1.0, -1.0] {
        let mut t = sign * initial_scale;
        let mut last_merit = merit_at_x;
        for _ in 0..40 {
            match evaluate(t, &mut trial_buf) {
                Some((state, m)) if m < last_merit => {
                    last_merit = m;
                    if best.as_ref().is_none_or(|b| m < b.1) {
                        best = Some((state, m, t));
                    }
                    t *= 2.0;
                }
                _ => break,
            }
        }
    }
    best.map(|(state, m, _)| (state, m))
}

fn sink_free_diag(band: &mut BandSystem, r: usize, v: f64) {
    band.add(r, r, v);
}

fn merit_with(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
    f_ext: &[f64],
    inertia: Option<&Inertia<'_>>,
) -> Result<f64, StepFailure> {
    let mut m = energy_value(mesh, x, params, field)?;
    for (dof, &f) in f_ext.iter().enumerate() {
        m -= f * x.as_slice()[dof];
    }
    if let Some(inertia) = inertia {
        let xs = x.as_slice();
        for node in 0..x.node_count() {
            let w = 0.5 * inertia.masses[node] * inertia.inv_dt2;
            for axis in 0..3 {
                let dof = 3 * node + axis;
                let d = xs[dof] - inertia.x_tilde[dof];
                m += w * d * d;
            }
        }
    }
    Ok(m)
}

/// Max per-node force magnitude over nodes that have at least one free DOF.
fn max_node_force(grad: &[f64], free_of_dof: &[usize]) -> f64 {
    let mut best = 0.0f64;
    for node in 0..grad.len() / 3 {
        let mut sq = 0.0;
        let mut any_free = false;
        for axis in 0..3 {
            let dof = 3 * node + axis;
            if free_of_dof[dof] != usize::MAX {
                any_free = true;
                sq += grad[dof] * grad[dof];
            }
        }
        if any_free {
            best = best.max(libm::sqrt(sq));
        }
    }
    best
}

/// Outcome of a fixed-load static solve.
#[derive(Debug, Clone)]
pub struct StaticSolve {
    pub x: DofVector,
    pub iterations: usize,
    pub converged: bool,
    pub max_node_force: f64,
    pub energy: f64,
}

/// Newton-iterate a fixed thermal field and external load to equilibrium,
/// starting from `x0` (pinned DOFs stay at their `x0` values).
pub fn solve_static(
    mesh: &Mesh,
    x0: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
    f_ext: &[f64],
    config: &SolverConfig,
) -> Result<StaticSolve, SolverError> {
    let pins = resolve_constraints(mesh, config)?;
    let mut ws = NewtonWorkspace::new(mesh, &pins)?;
    let force_tol = derived_force_tol(mesh, params, config);
    let mut x = x0.clone();
    let mut iterations = 0;
    let mut shift = 0.0;
    while iterations < config.max_newton_iters {
        let step = newton_step(mesh, &x, params, field, f_ext, &mut ws, config, &mut shift)
            .map_err(SolverError::Newton)?;
        iterations += 1;
        x = step.x;
        if !x.is_finite() {
            return Err(SolverError::NonFinite { step: 0 });
        }
        if step.rel_dx < config.tol {
            let force = residual_force(mesh, &x, params, field, f_ext, &mut ws)?;
            if force <= force_tol {
                let energy = energy_value(mesh, &x, params, field).map_err(SolverError::Mesh)?;
                return Ok(StaticSolve {
                    x,
                    iterations,
                    converged: true,
                    max_node_force: force,
                    energy,
                });
            }
        }
    }
    let force = residual_force(mesh, &x, params, field, f_ext, &mut ws)?;
    let energy = energy_value(mesh, &x, params, field).map_err(SolverError::Mesh)?;
    Ok(StaticSolve {
        x,
        iterations,
        converged: false,
        max_node_force: force,
        energy,
    })
}

fn residual_force(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
    f_ext: &[f64],
    ws: &mut NewtonWorkspace,
) -> Result<f64, SolverError> {
    ws.grad.fill(0.0);
    accumulate::<crate::energy::NullSink>(mesh, x, params, field, Some(&mut ws.grad), None)
        .map_err(SolverError::Mesh)?;
    for (dof, g) in ws.grad.iter_mut().enumerate() {
        *g -= f_ext[dof];
    }
    Ok(max_node_force(&ws.grad, &ws.free_of_dof))
}

/// Drive the mesh from its rest state to equilibrium at the scheduled
/// target strain. See [`solve_equilibrium_with`] for the step callback.
pub fn solve_equilibrium(
    mesh: &Mesh,
    params: &EnergyParams,
    schedule: &StimulusSchedule,
    config: &SolverConfig,
) -> Result<SolverState, SolverError> {
    solve_equilibrium_with(mesh, params, schedule, config, |_, _| {})
}

/// Like [`solve_equilibrium`], invoking `on_step` after every accepted load
/// step (snapshot export hook).
pub fn solve_equilibrium_with<F>(
    mesh: &Mesh,
    params: &EnergyParams,
    schedule: &StimulusSchedule,
    config: &SolverConfig,
    mut on_step: F,
) -> Result<SolverState, SolverError>
where
    F: FnMut(&SolverState, &ThermalField),
{
    schedule.validate()?;
    let pins = resolve_constraints(mesh, config)?;
    let mut ws = NewtonWorkspace::new(mesh, &pins)?;
    let force_tol = derived_force_tol(mesh, params, config);

    let mut state = SolverState {
        x: mesh.rest_dofs(),
        peak_strain: 0.0,
        history: Vec::new(),
        converged: false,
    };
    let target = schedule.target_strain;
    let n_dofs = 3 * mesh.node_count();
    let mut f_ext = alloc::vec![0.0; n_dofs];

    let mut level = 0.0f64;
    let mut step_size = schedule.initial_step.min(schedule.max_step).max(schedule.min_step);
    let mut shift = 0.0f64;
    // previous accepted state, for secant extrapolation of the next guess
    let mut previous: Option<(DofVector, f64)> = None;
    loop {
        let next_level = if target == 0.0 {
            0.0
        } else {
            (level - step_size).max(target)
        };
        let is_final = next_level == target;
        let field = if next_level == 0.0 {
            ThermalField::zero(mesh)
        } else {
            thermal_field(mesh, next_level)?
        };
        let perturbation = if is_final {
            0.0
        } else {
            schedule.perturbation_at(next_level)
        };
        f_ext.fill(0.0);
        for node in 0..mesh.node_count() {
            f_ext[3 * node + 2] = perturbation;
        }

        // Newton loop for this level, warm-started by extrapolating the
        // last two accepted states along the continuation parameter
        let mut x = extrapolated_guess(mesh, &state, previous.as_ref(), next_level, params, &field);
        let mut iters = 0;
        let mut rel_dx = f64::INFINITY;
        let mut level_force = f64::INFINITY;
        let converged = loop {
            if iters >= config.max_newton_iters {
                break false;
            }
            match newton_step(mesh, &x, params, &field, &f_ext, &mut ws, config, &mut shift) {
                Ok(step) => {
                    iters += 1;
                    rel_dx = step.rel_dx;
                    x = step.x;
                    if !x.is_finite() {
                        return Err(SolverError::NonFinite {
                            step: state.history.len(),
                        });
                    }
                    if rel_dx < config.tol {
                        level_force = residual_force(mesh, &x, params, &field, &f_ext, &mut ws)?;
                        // intermediate levels settle on displacement alone;
                        // the final state must also be first-order optimal
                        if !is_final || level_force <= force_tol {
                            break true;
                        }
                    }
                }
                Err(StepFailure::NonFinite) => {
                    return Err(SolverError::NonFinite {
                        step: state.history.len(),
                    });
                }
                Err(StepFailure::Mesh(e)) => {
                    if matches!(e, MeshError::DofLengthMismatch { .. }) {
                        return Err(SolverError::Mesh(e));
                    }
                    break false; // degeneracy under too large a step
                }
                Err(_) => break false,
            }
        };

        if converged {
            if level_force.is_infinite() {
                level_force = residual_force(mesh, &x, params, &field, &f_ext, &mut ws)?;
            }
            let energy = energy_value(mesh, &x, params, &field).map_err(SolverError::Mesh)?;
            previous = Some((state.x.clone(), state.peak_strain));
            state.x = x;
            state.peak_strain = next_level;
            state.history.push(StepRecord {
                index: state.history.len(),
                peak_strain: next_level,
                perturbation,
                newton_iterations: iters,
                rel_dx,
                max_node_force: level_force,
                energy,
            });
            on_step(&state, &field);
            level = next_level;
            if is_final {
                state.converged = true;
                return Ok(state);
            }
            if iters <= config.grow_below_iters {
                step_size = (step_size * config.step_growth).min(schedule.max_step);
            }
        } else {
            if step_size <= schedule.min_step * (1.0 + 1e-12) {
                // exhausted: report the diverged trajectory
                return Ok(state);
            }
            step_size = (step_size * 0.5).max(schedule.min_step);
        }
    }
}

/// Secant extrapolation of the continuation path; falls back to the last
/// accepted state if the extrapolated guess is degenerate.
fn extrapolated_guess(
    mesh: &Mesh,
    state: &SolverState,
    previous: Option<&(DofVector, f64)>,
    next_level: f64,
    params: &EnergyParams,
    field: &ThermalField,
) -> DofVector {
    let Some((x_prev, level_prev)) = previous else {
        return state.x.clone();
    };
    let denom = state.peak_strain - level_prev;
    if denom.abs() < 1e-14 {
        return state.x.clone();
    }
    let ratio = ((next_level - state.peak_strain) / denom).clamp(0.0, 1.5);
    if ratio == 0.0 {
        return state.x.clone();
    }
    let mut guess = state.x.clone();
    for (g, (&a, &b)) in guess
        .as_mut_slice()
        .iter_mut()
        .zip(state.x.as_slice().iter().zip(x_prev.as_slice()))
    {
        *g = a + ratio * (a - b);
    }
    if guess.is_finite() && energy_value(mesh, &guess, params, field).is_ok() {
        guess
    } else {
        state.x.clone()
    }
}

/// Scheduled equilibrium via dynamic relaxation: each planned stimulus
/// level is settled by repeated implicit-Euler updates (numerical damping
/// kills the kinetic energy) before moving on. Requires dynamic mode; uses
/// the fixed plan from [`crate::stimulus::plan_steps`].
pub fn solve_equilibrium_dynamic_with<F>(
    mesh: &Mesh,
    params: &EnergyParams,
    schedule: &StimulusSchedule,
    config: &SolverConfig,
    mut on_step: F,
) -> Result<SolverState, SolverError>
where
    F: FnMut(&SolverState, &ThermalField),
{
    let SolveMode::Dynamic { dt: _, density } = config.mode else {
        return Err(SolverError::NotDynamicMode);
    };
    schedule.validate()?;
    let pins = resolve_constraints(mesh, config)?;
    let mut ws = NewtonWorkspace::new(mesh, &pins)?;
    let force_tol = derived_force_tol(mesh, params, config);
    // thickness split only affects the mass scale, which the relaxation
    // limit does not care about; use the substrate value everywhere
    let masses = lumped_masses(mesh, density, 1.0, 1.0);

    let plan = crate::stimulus::plan_steps(schedule)?;
    let n_dofs = 3 * mesh.node_count();
    let mut state = SolverState {
        x: mesh.rest_dofs(),
        peak_strain: 0.0,
        history: Vec::new(),
        converged: false,
    };
    let mut velocity = alloc::vec![0.0; n_dofs];
    let mut f_ext = alloc::vec![0.0; n_dofs];
    let settle_cap = config.max_newton_iters * 20;

    for (k, step) in plan.iter().enumerate() {
        let is_final = k + 1 == plan.len();
        let field = if step.peak_strain == 0.0 {
            ThermalField::zero(mesh)
        } else {
            thermal_field(mesh, step.peak_strain)?
        };
        let perturbation = if is_final { 0.0 } else { step.perturbation };
        f_ext.fill(0.0);
        for node in 0..mesh.node_count() {
            f_ext[3 * node + 2] = perturbation;
        }

        let mut x = state.x.clone();
        let mut settled = false;
        let mut iters = 0;
        let mut rel_dx = f64::INFINITY;
        while iters < settle_cap {
            let (xn, vn) = dynamic_step(
                mesh, &x, &velocity, params, &field, &f_ext, &masses, &mut ws, config,
            )?;
            iters += 1;
            rel_dx = diff_norm(xn.as_slice(), x.as_slice()) / x.norm().max(1e-300);
            x = xn;
            velocity = vn;
            if rel_dx < config.tol {
                let force = residual_force(mesh, &x, params, &field, &f_ext, &mut ws)?;
                if force <= force_tol {
                    settled = true;
                    break;
                }
            }
        }
        let force = residual_force(mesh, &x, params, &field, &f_ext, &mut ws)?;
        let energy = energy_value(mesh, &x, params, &field).map_err(SolverError::Mesh)?;
        state.x = x;
        state.peak_strain = step.peak_strain;
        state.history.push(StepRecord {
            index: state.history.len(),
            peak_strain: step.peak_strain,
            perturbation,
            newton_iterations: iters,
            rel_dx,
            max_node_force: force,
            energy,
        });
        on_step(&state, &field);
        if !settled {
            return Ok(state); // converged stays false
        }
    }
    state.converged = true;
    Ok(state)
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    libm::sqrt(s)
}

/// One implicit-Euler update of positions and velocities under a fixed
/// thermal field and external load.
pub fn dynamic_step(
    mesh: &Mesh,
    x: &DofVector,
    velocity: &[f64],
    params: &EnergyParams,
    field: &ThermalField,
    f_ext: &[f64],
    masses: &[f64],
    ws: &mut NewtonWorkspace,
    config: &SolverConfig,
) -> Result<(DofVector, Vec<f64>), SolverError> {
    let SolveMode::Dynamic { dt, .. } = config.mode else {
        return Err(SolverError::NotDynamicMode);
    };
    let inv_dt2 = 1.0 / (dt * dt);
    let x_tilde: Vec<f64> = x
        .as_slice()
        .iter()
        .zip(velocity)
        .map(|(xi, vi)| xi + dt * vi)
        .collect();
    let inertia = Inertia {
        masses,
        x_tilde: &x_tilde,
        inv_dt2,
    };

    let mut current = x.clone();
    let mut iters = 0;
    let mut shift = 0.0;
    loop {
        let step = newton_step_inner(
            mesh, &current, params, field, f_ext, Some(&inertia), ws, config, &mut shift,
        )
        .map_err(SolverError::Newton)?;
        iters += 1;
        current = step.x;
        if !current.is_finite() {
            return Err(SolverError::NonFinite { step: 0 });
        }
        if step.rel_dx < config.tol || iters >= config.max_newton_iters {
            break;
        }
    }
    let new_velocity: Vec<f64> = current
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(xn, xo)| (xn - xo) / dt)
        .collect();
    Ok((current, new_velocity))
}

/// Diagonal lumped mass per node: density times region thickness times one
/// third of the incident triangle rest areas.
pub fn lumped_masses(
    mesh: &Mesh,
    density: f64,
    substrate_thickness: f64,
    stack_thickness: f64,
) -> Vec<f64> {
    let mut masses = alloc::vec![0.0; mesh.node_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.node(tri[0]);
        let b = mesh.node(tri[1]);
        let c = mesh.node(tri[2]);
        let area = 0.5 * (b - a).cross(c - a).norm();
        let thickness = match mesh.triangle_region(t) {
            Region::Bilayer => stack_thickness,
            Region::SingleLayer => substrate_thickness,
        };
        let share = density * thickness * area / 3.0;
        for &n in tri {
            masses[n] += share;
        }
    }
    masses
}

/// The six DOFs pinned by the 3-2-1 scheme: node nearest the centroid fully
/// pinned, its farthest neighbor pinned transverse to their common axis, and
/// the most non-collinear neighbor pinned along the resulting rotation
/// direction.
pub fn auto_pins(mesh: &Mesh) -> Result<[usize; 6], SolverError> {
    let adjacency = node_adjacency(mesh);
    let mut centroid = crate::math::Vec3::default();
    for n in mesh.nodes() {
        centroid = centroid + *n;
    }
    centroid = centroid.scale(1.0 / mesh.node_count() as f64);

    let mut a = usize::MAX;
    let mut best = f64::INFINITY;
    for (i, n) in mesh.nodes().iter().enumerate() {
        if adjacency[i].is_empty() {
            continue;
        }
        let d = (*n - centroid).norm_sq();
        if d < best {
            best = d;
            a = i;
        }
    }
    if a == usize::MAX {
        return Err(SolverError::Mesh(MeshError::EmptyMesh));
    }

    let pa = mesh.node(a);
    let mut b = usize::MAX;
    let mut best = -1.0;
    for &cand in &adjacency[a] {
        let d = (mesh.node(cand) - pa).norm_sq();
        if d > best {
            best = d;
            b = cand;
        }
    }
    let axis_ab = (mesh.node(b) - pa).normalized().expect("distinct nodes");
    let dominant = dominant_axis(axis_ab);

    let mut c = usize::MAX;
    let mut best = -1.0;
    for &cand in adjacency[a].iter().chain(adjacency[b].iter()) {
        if cand == a || cand == b {
            continue;
        }
        let lever = (mesh.node(cand) - pa).cross(axis_ab).norm_sq();
        if lever > best {
            best = lever;
            c = cand;
        }
    }
    if c == usize::MAX || best <= 0.0 {
        // fall back to a global search for a non-collinear node
        for cand in 0..mesh.node_count() {
            if cand == a || cand == b {
                continue;
            }
            let lever = (mesh.node(cand) - pa).cross(axis_ab).norm_sq();
            if lever > best {
                best = lever;
                c = cand;
            }
        }
    }
    // direction C moves under rotation about the A-B axis
    let swing = axis_ab.cross(mesh.node(c) - pa);
    let axis_c = dominant_axis_vec(swing);

    let (t1, t2) = transverse_axes(dominant);
    Ok([
        3 * a,
        3 * a + 1,
        3 * a + 2,
        3 * b + t1,
        3 * b + t2,
        3 * c + axis_c,
    ])
}

fn dominant_axis(v: crate::math::Vec3) -> usize {
    let a = [v.x.abs(), v.y.abs(), v.z.abs()];
    let mut best = 0;
    for i in 1..3 {
        if a[i] > a[best] {
            best = i;
        }
    }
    best
}

fn dominant_axis_vec(v: crate::math::Vec3) -> usize {
    dominant_axis(v)
}

fn transverse_axes(dominant: usize) -> (usize, usize) {
    match dominant {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn node_adjacency(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut adjacency = alloc::vec![Vec::new(); mesh.node_count()];
    for e in mesh.edges() {
        adjacency[e.nodes[0]].push(e.nodes[1]);
        adjacency[e.nodes[1]].push(e.nodes[0]);
    }
    // opposite vertices of a hinge interact through the bending stencil
    for h in mesh.hinges() {
        adjacency[h.nodes[2]].push(h.nodes[3]);
        adjacency[h.nodes[3]].push(h.nodes[2]);
    }
    for list in adjacency.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    adjacency
}

fn resolve_constraints(mesh: &Mesh, config: &SolverConfig) -> Result<Vec<usize>, SolverError> {
    let mut pins = match &config.constraints {
        ConstraintScheme::Auto321 => auto_pins(mesh)?.to_vec(),
        ConstraintScheme::PinnedDofs(list) => list.clone(),
    };
    pins.sort_unstable();
    pins.dedup();
    for &p in &pins {
        if p >= 3 * mesh.node_count() {
            return Err(SolverError::PinOutOfRange { dof: p });
        }
    }
    if matches!(config.mode, SolveMode::Static) && pins.len() < 6 {
        return Err(SolverError::TooFewConstraints { count: pins.len() });
    }
    Ok(pins)
}

fn derived_force_tol(mesh: &Mesh, params: &EnergyParams, config: &SolverConfig) -> f64 {
    if let Some(ft) = config.force_tol {
        return ft;
    }
    let ks = params
        .material
        .stretching(Region::Bilayer)
        .max(params.material.stretching(Region::SingleLayer));
    10.0 * config.tol * ks / mesh.mean_edge_length()
}
