//! Incremental state-space MPC.
//!
//! The discrete lateral model is augmented with the previous steering input so
//! that the decision variables are steering increments. Stacked predictions
//! over `n_p` steps are `Y = F·x̃ + Φ·ΔU` with `ΔU` of length `n_c` and
//! increments frozen at zero past the control horizon. The quadratic cost
//! `(Y_ref − Y)ᵀ Q̄ (Y_ref − Y) + ΔUᵀ R̄ ΔU` is minimized in closed form and the
//! first increment is projected onto the rate and magnitude limits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{speed_command, BodyRates, ControlCommand, ControlError, SteeringLimits};
use crate::lane::LanePoly;
use crate::vehicle::{self, LinearModel, VehicleParams, VehicleState};

/// Augmented model with state `(x, u_prev)` and input `Δu`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalModel {
    pub a_aug: DMatrix<f64>,
    pub b_aug: DVector<f64>,
    pub c_aug: DMatrix<f64>,
}

impl IncrementalModel {
    /// Augments an arbitrary single-input discrete model `(A, B, C)`.
    pub fn from_discrete(a: &DMatrix<f64>, b: &DVector<f64>, c: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        assert!(
            a.is_square() && b.len() == n && c.ncols() == n,
            "inconsistent model shapes"
        );
        let mut a_aug = DMatrix::zeros(n + 1, n + 1);
        a_aug.view_mut((0, 0), (n, n)).copy_from(a);
        a_aug.view_mut((0, n), (n, 1)).copy_from(b);
        a_aug[(n, n)] = 1.0;
        let mut b_aug = DVector::zeros(n + 1);
        b_aug.rows_mut(0, n).copy_from(b);
        b_aug[n] = 1.0;
        let mut c_aug = DMatrix::zeros(c.nrows(), n + 1);
        c_aug.view_mut((0, 0), (c.nrows(), n)).copy_from(c);
        Self { a_aug, b_aug, c_aug }
    }

    pub fn n_states(&self) -> usize {
        self.a_aug.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.c_aug.nrows()
    }
}

/// `A_aug = [[A_d, B_d], [0, 1]]`, `B_aug = [B_d; 1]`, `C_aug = [C_d, 0]`.
pub fn build_incremental(model: &LinearModel) -> IncrementalModel {
    let a = DMatrix::from_column_slice(4, 4, model.a_d.as_slice());
    let b = DVector::from_column_slice(model.b_d.as_slice());
    let c = DMatrix::from_column_slice(2, 4, model.c_d.as_slice());
    IncrementalModel::from_discrete(&a, &b, &c)
}

/// Stacked horizon matrices; block-row `i` predicts the output at step `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrices {
    pub f: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub n_p: usize,
    pub n_c: usize,
    pub n_out: usize,
}

/// Builds `F` and `Φ` from one (possibly distinct) model per prediction step.
pub fn build_prediction(models: &[IncrementalModel], n_c: usize) -> Result<PredictionMatrices, ControlError> {
    let n_p = models.len();
    if n_p == 0 || n_c == 0 || n_c > n_p {
        return Err(ControlError::HorizonMismatch(format!(
            "need 1 <= n_c <= n_p, got n_c = {n_c}, n_p = {n_p}"
        )));
    }
    let n = models[0].n_states();
    let p = models[0].n_outputs();
    if models
        .iter()
        .any(|m| m.n_states() != n || m.n_outputs() != p || m.b_aug.len() != n || m.c_aug.ncols() != n)
    {
        return Err(ControlError::HorizonMismatch("models differ in shape".into()));
    }

    let mut f = DMatrix::zeros(p * n_p, n);
    let mut phi = DMatrix::zeros(p * n_p, n_c);
    let mut free = DMatrix::<f64>::identity(n, n);
    // influence of each increment Δu_j on the current predicted state
    let mut forced: Vec<DVector<f64>> = Vec::with_capacity(n_c);
    for (i, m) in models.iter().enumerate() {
        free = &m.a_aug * &free;
        for g in forced.iter_mut() {
            *g = &m.a_aug * &*g;
        }
        if i < n_c {
            forced.push(m.b_aug.clone());
        }
        f.view_mut((i * p, 0), (p, n)).copy_from(&(&m.c_aug * &free));
        for (j, g) in forced.iter().enumerate() {
            phi.view_mut((i * p, j), (p, 1)).copy_from(&(&m.c_aug * g));
        }
    }
    Ok(PredictionMatrices {
        f,
        phi,
        n_p,
        n_c,
        n_out: p,
    })
}

/// Solves `H x = g` for symmetric positive-definite `H` via `LDLᵀ`.
pub fn ldlt_solve(h: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>, ControlError> {
    let n = h.nrows();
    assert!(h.is_square() && g.len() == n);
    let scale = (0..n)
        .map(|i| h[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = DVector::<f64>::zeros(n);
    for j in 0..n {
        let mut dj = h[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > 1e-12 * scale) {
            return Err(ControlError::SingularHessian(dj));
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut v = h[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    // L z = g, D w = z, Lᵀ x = w
    let mut x = g.clone();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l[(i, k)] * x[k];
        }
    }
    for i in 0..n {
        x[i] /= d[i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= l[(k, i)] * x[k];
        }
    }
    Ok(x)
}

/// Unconstrained minimizer of the weighted cost and its value.
/// `q_diag` holds the diagonal of Q̄ (length `n_out · n_p`).
pub fn solve_unconstrained(
    pm: &PredictionMatrices,
    chi_aug: &DVector<f64>,
    y_ref: &DVector<f64>,
    q_diag: &DVector<f64>,
    r_du: f64,
) -> Result<(DVector<f64>, f64), ControlError> {
    let rows = pm.f.nrows();
    if chi_aug.len() != pm.f.ncols() || y_ref.len() != rows || q_diag.len() != rows {
        return Err(ControlError::HorizonMismatch(format!(
            "chi {} / y_ref {} / q {} vs F {}×{}",
            chi_aug.len(),
            y_ref.len(),
            q_diag.len(),
            rows,
            pm.f.ncols()
        )));
    }
    let err0 = y_ref - &pm.f * chi_aug;
    let qphi = DMatrix::from_fn(rows, pm.n_c, |r, c| q_diag[r] * pm.phi[(r, c)]);
    let mut hess = pm.phi.transpose() * &qphi;
    for i in 0..pm.n_c {
        hess[(i, i)] += r_du;
    }
    let grad = qphi.transpose() * &err0;
    let du = ldlt_solve(&hess, &grad)?;
    Ok((du.clone(), cost(pm, &err0, q_diag, r_du, &du)))
}

fn cost(pm: &PredictionMatrices, err0: &DVector<f64>, q_diag: &DVector<f64>, r_du: f64, du: &DVector<f64>) -> f64 {
    let e = err0 - &pm.phi * du;
    e.iter().zip(q_diag.iter()).map(|(v, q)| q * v * v).sum::<f64>() + r_du * du.norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcConfig {
    pub n_p: usize,
    pub n_c: usize,
    pub q_y: f64,
    pub q_phi: f64,
    pub r_du: f64,
    /// Speed-loop gain (the MPC itself only steers).
    pub kp_v: f64,
    /// Relinearize along the predicted trajectory instead of replicating the
    /// current model across the horizon.
    pub relinearize: bool,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            n_p: 40,
            n_c: 5,
            q_y: 10.0,
            q_phi: 1.0,
            r_du: 100.0,
            kp_v: 0.5,
            relinearize: false,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        if self.n_c < 1 || self.n_c > self.n_p {
            return Err(ControlError::InvalidConfig("need 1 <= n_c <= n_p".into()));
        }
        if [self.q_y, self.q_phi, self.r_du, self.kp_v]
            .iter()
            .any(|w| !(*w >= 0.0))
        {
            return Err(ControlError::InvalidConfig("MPC weights must be >= 0".into()));
        }
        if !(self.q_y > 0.0 || self.q_phi > 0.0) {
            return Err(ControlError::InvalidConfig(
                "at least one output weight must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Diagonal of Q̄: `(q_y, q_phi)` repeated `n_p` times.
    pub fn q_diag(&self) -> DVector<f64> {
        DVector::from_fn(2 * self.n_p, |i, _| if i % 2 == 0 { self.q_y } else { self.q_phi })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    /// Increment actually applied after projection.
    pub delta_u: f64,
    /// Unconstrained optimal increment sequence.
    pub unconstrained: DVector<f64>,
    /// Cost at the unconstrained optimum.
    pub cost: f64,
    pub clamped: bool,
}

/// Solves one receding-horizon step and projects the first increment onto
/// `±ddelta_max`, then the resulting steering onto `±delta_max`.
pub fn solve_mpc(
    pm: &PredictionMatrices,
    chi_aug: &DVector<f64>,
    y_ref: &DVector<f64>,
    cfg: &MpcConfig,
    limits: &SteeringLimits,
    u_prev: f64,
) -> Result<MpcSolution, ControlError> {
    if pm.n_out != 2 || pm.n_p != cfg.n_p || pm.n_c != cfg.n_c {
        return Err(ControlError::HorizonMismatch(format!(
            "prediction matrices ({} outputs, n_p {}, n_c {}) do not match config (2, {}, {})",
            pm.n_out, pm.n_p, pm.n_c, cfg.n_p, cfg.n_c
        )));
    }
    let (du, cost) = solve_unconstrained(pm, chi_aug, y_ref, &cfg.q_diag(), cfg.r_du)?;
    let first = du[0];
    let rate_limited = first.clamp(-limits.ddelta_max, limits.ddelta_max);
    let u = (u_prev + rate_limited).clamp(-limits.delta_max, limits.delta_max);
    let applied = u - u_prev;
    Ok(MpcSolution {
        delta_u: applied,
        unconstrained: du,
        cost,
        clamped: applied != first,
    })
}

/// Stacked `(lateral, heading)` references at stations `i·v_x·T_s`, `i = 1..=n_p`.
pub fn mpc_reference(lane_center: &LanePoly, v_x: f64, t_s: f64, n_p: usize) -> DVector<f64> {
    let mut y = DVector::zeros(2 * n_p);
    for i in 0..n_p {
        let d = (i + 1) as f64 * v_x * t_s;
        y[2 * i] = lane_center.eval(d);
        y[2 * i + 1] = lane_center.slope(d).atan();
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MpcDiagnostics {
    pub cost: f64,
    pub clamped: bool,
    pub delta_u: f64,
}

/// Lane-center MPC step. The controller works in the current vehicle frame,
/// so lateral error and relative heading start at zero.
#[allow(clippy::too_many_arguments)]
pub fn mpc_control(
    lane_center: &LanePoly,
    rates: &BodyRates,
    p: &VehicleParams,
    cfg: &MpcConfig,
    t_s: f64,
    u_prev: f64,
    target_speed: f64,
) -> Result<(ControlCommand, MpcDiagnostics), ControlError> {
    if !lane_center.valid {
        return Err(ControlError::InvalidLane);
    }
    let p_now = VehicleParams { v_x: rates.v_x, ..*p };
    let local = VehicleState {
        v_y: rates.v_y,
        phi_dot: rates.phi_dot,
        ..VehicleState::default()
    };
    let models: Vec<IncrementalModel> = if cfg.relinearize {
        let substeps = (t_s / 0.01).ceil().max(1.0) as usize;
        let h = t_s / substeps as f64;
        let mut s = local;
        let mut out = Vec::with_capacity(cfg.n_p);
        for _ in 0..cfg.n_p {
            out.push(build_incremental(&LinearModel::at(&s, u_prev, &p_now, t_s)?));
            for _ in 0..substeps {
                s = vehicle::rk4(&s, u_prev, &p_now, h);
            }
        }
        out
    } else {
        let m = build_incremental(&LinearModel::at(&local, u_prev, &p_now, t_s)?);
        vec![m; cfg.n_p]
    };
    let pm = build_prediction(&models, cfg.n_c)?;
    let chi = DVector::from_vec(vec![0.0, rates.v_y, 0.0, rates.phi_dot, u_prev]);
    let y_ref = mpc_reference(lane_center, rates.v_x, t_s, cfg.n_p);
    let sol = solve_mpc(&pm, &chi, &y_ref, cfg, &SteeringLimits::from(p), u_prev)?;
    Ok((
        ControlCommand {
            delta_f: u_prev + sol.delta_u,
            accel: speed_command(cfg.kp_v, target_speed, rates.v_x),
        },
        MpcDiagnostics {
            cost: sol.cost,
            clamped: sol.clamped,
            delta_u: sol.delta_u,
        },
    ))
}
