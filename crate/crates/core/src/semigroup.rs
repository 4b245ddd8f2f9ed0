//! Time evolution `E ẋ = C x` by the Cayley (Crank–Nicolson) transform
//!
//! ```text
//! (E − dt/2·C) x' = (E + dt/2·C) x.
//! ```
//!
//! For a dissipative pencil (`C + Cᵀ ⪯ 0`) the step is a contraction in the
//! energy norm `‖x‖²_X = xᵀEx`, and the decrease per step equals
//! `2·dt·v_midᵀ Bk2 v_mid` exactly, `v_mid` being the midpoint velocity.

use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::{mass_matrix, OperatorPencil, State};
use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::mesh::{Mesh, Point};

/// Relative slack allowed on the per-step contraction check.
pub const CONTRACTION_SLACK: f64 = 1e-10;

/// One Cayley step operator for a fixed `(pencil, dt)`.
#[derive(Clone, Debug)]
pub struct CayleyStepper {
    dt: f64,
    lhs: Lu,
    rhs: DenseMatrix,
}

impl CayleyStepper {
    pub fn new(pencil: &OperatorPencil, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeStep { dt, t_end: f64::NAN });
        }
        let half = pencil.dynamics.scaled(0.5 * dt);
        let lhs = Lu::factor(&pencil.gram.sub(&half))?;
        Ok(Self {
            dt,
            lhs,
            rhs: pencil.gram.add(&half),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, x: &State) -> State {
        let b = self.rhs.matvec(&x.to_vec());
        State::from_vec(&self.lhs.solve(&b))
    }
}

/// A single step; prefer [`CayleyStepper`] when stepping repeatedly.
pub fn cayley_step(pencil: &OperatorPencil, dt: f64, x: &State) -> Result<State> {
    check_state(pencil, x)?;
    Ok(CayleyStepper::new(pencil, dt)?.step(x))
}

/// Mass matrices weighted by the lower-order coefficients `a` and `b`, in
/// full node indexing, ready for [`OperatorPencil::with_perturbation`].
pub fn perturbation_matrices(mesh: &Mesh, coeffs: &CoefficientSet) -> (DenseMatrix, DenseMatrix) {
    (mass_matrix(mesh, &coeffs.a), mass_matrix(mesh, &coeffs.b))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `uᵀKu + vᵀMv`.
    pub energy: Vec<f64>,
    /// `‖x‖_X`.
    pub xnorm: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&State> {
        self.states.last()
    }

    /// `t,energy,xnorm`, one row per recorded time.
    pub fn energy_csv(&self) -> String {
        let mut out = String::from("t,energy,xnorm\n");
        for k in 0..self.len() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", self.times[k], self.energy[k], self.xnorm[k]);
        }
        out
    }

    pub fn write_energy_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_file(path, &self.energy_csv())
    }
}

/// Number of steps of size about `dt` covering `[0, t_end]`; the last step
/// is shortened so the trajectory ends exactly at `t_end`.
fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite() && dt <= t_end * (1.0 + 1e-12)) {
        return Err(Error::InvalidTimeStep { dt, t_end });
    }
    Ok(((t_end / dt) - 1e-9).ceil().max(1.0) as usize)
}

fn check_state(pencil: &OperatorPencil, x: &State) -> Result<()> {
    let n = pencil.n_free();
    for (what, len) in [("u", x.u.len()), ("v", x.v.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what: if what == "u" { "initial displacement" } else { "initial velocity" },
                expected: n,
                got: len,
            });
        }
    }
    Ok(())
}

/// Integrates from `x0` up to `t_end`, recording every step.
///
/// For an unperturbed pencil the contraction property is checked at every
/// step and a violation beyond [`CONTRACTION_SLACK`] is an error.
pub fn simulate(pencil: &OperatorPencil, x0: &State, t_end: f64, dt: f64) -> Result<Trajectory> {
    check_state(pencil, x0)?;
    let steps = step_count(t_end, dt)?;
    let dt_eff = t_end / steps as f64;
    let stepper = CayleyStepper::new(pencil, dt_eff)?;
    let mut traj = Trajectory::default();
    let mut x = x0.clone();
    let record = |traj: &mut Trajectory, t: f64, x: &State| {
        traj.times.push(t);
        traj.energy.push(pencil.energy(x));
        traj.xnorm.push(pencil.norm(x));
        traj.states.push(x.clone());
    };
    record(&mut traj, 0.0, &x);
    for k in 1..=steps {
        let next = stepper.step(&x);
        let (before, after) = (pencil.norm(&x), pencil.norm(&next));
        if !pencil.perturbed && after - before > CONTRACTION_SLACK * before.max(f64::MIN_POSITIVE) {
            return Err(Error::ContractionViolated { step: k, before, after });
        }
        x = next;
        let t = if k == steps { t_end } else { k as f64 * dt_eff };
        record(&mut traj, t, &x);
    }
    Ok(traj)
}

/// `‖x_{n+1}‖² − ‖x_n‖² + 2·dt·v_midᵀ Bk2 v_mid`, which vanishes for an
/// unperturbed pencil.
pub fn energy_balance_defect(pencil: &OperatorPencil, dt: f64, x: &State, next: &State) -> f64 {
    let v_mid: Vec<f64> = x.v.iter().zip(&next.v).map(|(a, b)| 0.5 * (a + b)).collect();
    let nx = pencil.inner(x, x);
    let nn = pencil.inner(next, next);
    nn - nx + 2.0 * dt * pencil.boundary_dissipation(&v_mid)
}

/// Decay of the orbit starting at `x0 = A_Θ⁻¹ y`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayProfile {
    pub times: Vec<f64>,
    /// `‖x(t)‖_X / ‖x0‖_dom`.
    pub normalized: Vec<f64>,
    /// `‖x0‖_dom = sqrt(‖x0‖²_X + ‖y‖²_X)`.
    pub graph_norm: f64,
}

/// Solves `C x0 = E y`, simulates from `x0` and normalizes by the graph norm.
pub fn decay_profile(pencil: &OperatorPencil, y: &State, t_end: f64, dt: f64) -> Result<DecayProfile> {
    check_state(pencil, y)?;
    let lu = Lu::factor(&pencil.dynamics).map_err(Error::SingularGenerator)?;
    let x0 = State::from_vec(&lu.solve(&pencil.gram.matvec(&y.to_vec())));
    let graph_norm = (pencil.inner(&x0, &x0) + pencil.inner(y, y)).max(0.0).sqrt();
    let traj = simulate(pencil, &x0, t_end, dt)?;
    let normalized = if graph_norm == 0.0 {
        vec![0.0; traj.len()]
    } else {
        traj.xnorm.iter().map(|n| n / graph_norm).collect()
    };
    Ok(DecayProfile {
        times: traj.times,
        normalized,
        graph_norm,
    })
}

/// Initial state from nodal interpolants of `w₀` and `w₁`.
///
/// `w₀` must vanish on the Dirichlet nodes (to 1e-12); the velocity `w₁`
/// is stored directly since the state carries `v = x₂/ρ`.
pub fn initial_state(
    mesh: &Mesh,
    pencil: &OperatorPencil,
    w0: impl Fn(Point) -> f64,
    w1: impl Fn(Point) -> f64,
) -> Result<State> {
    for node in mesh.dirichlet_nodes() {
        if w0(mesh.nodes[node]).abs() > 1e-12 {
            return Err(Error::InitialDataNotAdmissible { node });
        }
    }
    let dofs = &pencil.dofs;
    let u = dofs.free_nodes.iter().map(|&i| w0(mesh.nodes[i])).collect();
    let v = dofs.free_nodes.iter().map(|&i| w1(mesh.nodes[i])).collect();
    Ok(State { u, v })
}
