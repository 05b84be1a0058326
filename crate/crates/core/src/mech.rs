//! Planar mechanism models: three-link arm and free planar block.
//!
//! Both systems have three generalized coordinates. The arm's coordinates are
//! joint angles; the block's are planar pose (x, z, rotation phi). All
//! dynamics quantities are generic over [`Scalar`] so parameter and design
//! sensitivities propagate through entire rollouts.
//!
//! Conventions:
//! - gravity acts along -z with magnitude `sys.gravity`,
//! - the contact surface is the half-plane z >= 0 (signed distance of a
//!   contact point is its world z),
//! - equations of motion are `M(q) qdd + b(q, qd) = u + Jc^T lambda`,
//! - integration is semi-implicit Euler.

use crate::contact::{solve_contact_generic, ContactConfig, ContactSet, PointContact};
use crate::error::{Result, SimError};
use crate::linalg::{m3_vec, m3_zero, solve3_spd, v3_add, v3_scale, v3_sub, M3, V3};
use crate::sensitivity::{cst, Dual, Scalar};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    #[serde(rename = "three-link-arm")]
    ThreeLinkArm,
    #[serde(rename = "planar-block")]
    PlanarBlock,
}

impl SystemKind {
    pub fn contact_count(&self) -> usize {
        match self {
            SystemKind::ThreeLinkArm => 1,
            SystemKind::PlanarBlock => 4,
        }
    }

    pub fn param_labels(&self) -> &'static [&'static str] {
        match self {
            SystemKind::ThreeLinkArm => &["I1", "I2", "I3", "l1", "l2", "l3"],
            SystemKind::PlanarBlock => &["m", "h_x", "h_z"],
        }
    }

    pub fn param_dim(&self) -> usize {
        self.param_labels().len()
    }
}

/// Fixed (known) physical description of a system; unknown quantities live in
/// [`ParamVector`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemModel {
    pub kind: SystemKind,
    /// Gravity magnitude, m/s^2, acting along -z.
    pub gravity: f64,
    /// Integration timestep, s.
    pub dt: f64,
    /// Arm base elevation above the surface, m (unused for the block).
    pub base_height: f64,
    /// Known link masses, kg (arm only).
    pub link_masses: [f64; 3],
}

impl SystemModel {
    pub fn new(
        kind: SystemKind,
        gravity: f64,
        dt: f64,
        base_height: f64,
        link_masses: [f64; 3],
    ) -> Result<Self> {
        if dt <= 0.0 {
            return Err(SimError::Config(format!("dt must be positive, got {dt}")));
        }
        if gravity < 0.0 {
            return Err(SimError::Config("gravity magnitude must be nonnegative".into()));
        }
        if link_masses.iter().any(|&m| m <= 0.0) {
            return Err(SimError::Config("link masses must be positive".into()));
        }
        Ok(SystemModel {
            kind,
            gravity,
            dt,
            base_height,
            link_masses,
        })
    }
}

/// Labeled vector of unknown physical parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(SimError::Config("parameter labels/values length mismatch".into()));
        }
        if let Some((l, v)) = labels.iter().zip(&values).find(|(_, v)| **v <= 0.0) {
            return Err(SimError::Domain(format!(
                "parameter {l} must be strictly positive, got {v}"
            )));
        }
        Ok(ParamVector { labels, values })
    }

    pub fn for_system(kind: SystemKind, values: Vec<f64>) -> Result<Self> {
        let labels = kind.param_labels();
        if values.len() != labels.len() {
            return Err(SimError::Config(format!(
                "{:?} takes {} parameters, got {}",
                kind,
                labels.len(),
                values.len()
            )));
        }
        Self::new(labels.iter().map(|s| s.to_string()).collect(), values)
    }

    pub fn arm(inertias: [f64; 3], lengths: [f64; 3]) -> Result<Self> {
        Self::for_system(
            SystemKind::ThreeLinkArm,
            vec![
                inertias[0], inertias[1], inertias[2], lengths[0], lengths[1], lengths[2],
            ],
        )
    }

    pub fn block(mass: f64, hx: f64, hz: f64) -> Result<Self> {
        Self::for_system(SystemKind::PlanarBlock, vec![mass, hx, hz])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.labels.clone(), values)
    }
}

/// Feasible parameter box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamSpace {
    lower: ParamVector,
    upper: ParamVector,
}

impl ParamSpace {
    pub fn new(lower: ParamVector, upper: ParamVector) -> Result<Self> {
        if lower.labels != upper.labels {
            return Err(SimError::Config("parameter space bound labels differ".into()));
        }
        if lower
            .values
            .iter()
            .zip(&upper.values)
            .any(|(l, u)| l >= u)
        {
            return Err(SimError::Config(
                "parameter space requires lower < upper elementwise".into(),
            ));
        }
        Ok(ParamSpace { lower, upper })
    }

    pub fn lower(&self) -> &ParamVector {
        &self.lower
    }

    pub fn upper(&self) -> &ParamVector {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn contains(&self, theta: &ParamVector) -> bool {
        theta.labels == self.lower.labels
            && theta
                .values
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= self.lower.values[i] && *v <= self.upper.values[i])
    }

    pub fn midpoint(&self) -> ParamVector {
        let values = self
            .lower
            .values
            .iter()
            .zip(&self.upper.values)
            .map(|(l, u)| 0.5 * (l + u))
            .collect();
        ParamVector {
            labels: self.lower.labels.clone(),
            values,
        }
    }

    /// Clamp raw values into the box (used by projected descent steps).
    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| v.clamp(self.lower.values[i], self.upper.values[i]))
            .collect()
    }
}

/// Generalized positions and velocities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub q: [f64; 3],
    pub qdot: [f64; 3],
}

impl State {
    pub fn new(q: [f64; 3], qdot: [f64; 3]) -> Self {
        State { q, qdot }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }
}

/// State at an arbitrary scalar type, for sensitivity-carrying rollouts.
#[derive(Clone, Copy, Debug)]
pub struct SimState<S: Scalar> {
    pub q: V3<S>,
    pub qdot: V3<S>,
}

impl<S: Scalar> SimState<S> {
    pub fn lift(x: &State) -> Self {
        SimState {
            q: [cst(x.q[0]), cst(x.q[1]), cst(x.q[2])],
            qdot: [cst(x.qdot[0]), cst(x.qdot[1]), cst(x.qdot[2])],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }

    pub fn value(&self) -> State {
        State {
            q: [self.q[0].value(), self.q[1].value(), self.q[2].value()],
            qdot: [
                self.qdot[0].value(),
                self.qdot[1].value(),
                self.qdot[2].value(),
            ],
        }
    }
}

/// Parameter vector interpreted for one system, at any scalar type.
#[derive(Clone, Copy, Debug)]
pub enum Params<S: Scalar> {
    Arm { inertia: [S; 3], len: [S; 3] },
    Block { m: S, hx: S, hz: S },
}

impl<S: Scalar> Params<S> {
    /// Lift as constants (no tagged directions).
    pub fn constant(theta: &ParamVector, kind: SystemKind) -> Result<Self> {
        let v = theta.values();
        match kind {
            SystemKind::ThreeLinkArm => {
                if v.len() != 6 {
                    return Err(SimError::Config("arm takes 6 parameters".into()));
                }
                Ok(Params::Arm {
                    inertia: [cst(v[0]), cst(v[1]), cst(v[2])],
                    len: [cst(v[3]), cst(v[4]), cst(v[5])],
                })
            }
            SystemKind::PlanarBlock => {
                if v.len() != 3 {
                    return Err(SimError::Config("block takes 3 parameters".into()));
                }
                Ok(Params::Block {
                    m: cst(v[0]),
                    hx: cst(v[1]),
                    hz: cst(v[2]),
                })
            }
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Params<T> {
        match self {
            Params::Arm { inertia, len } => Params::Arm {
                inertia: [f(inertia[0]), f(inertia[1]), f(inertia[2])],
                len: [f(len[0]), f(len[1]), f(len[2])],
            },
            Params::Block { m, hx, hz } => Params::Block {
                m: f(*m),
                hx: f(*hx),
                hz: f(*hz),
            },
        }
    }
}

/// Tag every parameter entry as its own forward-mode direction.
pub fn tagged_params<const D: usize>(
    theta: &ParamVector,
    kind: SystemKind,
) -> Result<Params<Dual<f64, D>>> {
    if theta.dim() != D {
        return Err(SimError::Config(format!(
            "parameter dimension {} does not match direction count {}",
            theta.dim(),
            D
        )));
    }
    let v = theta.values();
    match kind {
        SystemKind::ThreeLinkArm => Ok(Params::Arm {
            inertia: [
                Dual::variable(v[0], 0),
                Dual::variable(v[1], 1),
                Dual::variable(v[2], 2),
            ],
            len: [
                Dual::variable(v[3], 3),
                Dual::variable(v[4], 4),
                Dual::variable(v[5], 5),
            ],
        }),
        SystemKind::PlanarBlock => Ok(Params::Block {
            m: Dual::variable(v[0], 0),
            hx: Dual::variable(v[1], 1),
            hz: Dual::variable(v[2], 2),
        }),
    }
}

/// Time-indexed rollout record at plain floats.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub controls: Vec<[f64; 3]>,
    pub contacts: Vec<ContactSet>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn initial_state(&self) -> &State {
        &self.states[0]
    }
}

// ---------------------------------------------------------------------------
// Arm kinematics
// ---------------------------------------------------------------------------

fn arm_lengths<S: Scalar>(p: &Params<S>) -> [S; 3] {
    match p {
        Params::Arm { len, .. } => *len,
        Params::Block { .. } => unreachable!("arm kinematics on block params"),
    }
}

fn arm_inertias<S: Scalar>(p: &Params<S>) -> [S; 3] {
    match p {
        Params::Arm { inertia, .. } => *inertia,
        Params::Block { .. } => unreachable!("arm dynamics on block params"),
    }
}

/// Cumulative link angles and their sines/cosines.
fn arm_trig<S: Scalar>(q: &V3<S>) -> ([S; 3], [S; 3]) {
    let a0 = q[0];
    let a1 = q[0] + q[1];
    let a2 = q[0] + q[1] + q[2];
    ([a0.sin(), a1.sin(), a2.sin()], [a0.cos(), a1.cos(), a2.cos()])
}

/// 2x3 translational Jacobian of the arm tip.
fn arm_tip_jacobian<S: Scalar>(q: &V3<S>, p: &Params<S>) -> [[S; 3]; 2] {
    let len = arm_lengths(p);
    let (sin_a, cos_a) = arm_trig(q);
    let mut jac = [[S::zero(); 3]; 2];
    for j in 0..3 {
        let mut jx = S::zero();
        let mut jz = S::zero();
        for k in j..3 {
            jx = jx - len[k] * sin_a[k];
            jz = jz + len[k] * cos_a[k];
        }
        jac[0][j] = jx;
        jac[1][j] = jz;
    }
    jac
}

fn arm_tip_position<S: Scalar>(q: &V3<S>, p: &Params<S>, sys: &SystemModel) -> [S; 2] {
    let len = arm_lengths(p);
    let (sin_a, cos_a) = arm_trig(q);
    let mut x = S::zero();
    let mut z = cst(sys.base_height);
    for k in 0..3 {
        x = x + len[k] * cos_a[k];
        z = z + len[k] * sin_a[k];
    }
    [x, z]
}

fn arm_mass_matrix<S: Scalar>(q: &V3<S>, p: &Params<S>, sys: &SystemModel) -> M3<S> {
    let len = arm_lengths(p);
    let inertia = arm_inertias(p);
    let (sin_a, cos_a) = arm_trig(q);
    let half: S = cst(0.5);
    let mut m = m3_zero();
    for i in 0..3 {
        // translational Jacobian columns of link i's center of mass
        let mut cols = [[S::zero(); 2]; 3];
        for j in 0..=i {
            let mut cx = S::zero();
            let mut cz = S::zero();
            for k in j..=i {
                let coef = if k < i { len[k] } else { half * len[i] };
                cx = cx - coef * sin_a[k];
                cz = cz + coef * cos_a[k];
            }
            cols[j] = [cx, cz];
        }
        let mass: S = cst(sys.link_masses[i]);
        for j in 0..=i {
            for k in 0..=i {
                m[j][k] =
                    m[j][k] + mass * (cols[j][0] * cols[k][0] + cols[j][1] * cols[k][1]) + inertia[i];
            }
        }
    }
    m
}

/// Gravitational potential energy.
fn arm_potential<S: Scalar>(q: &V3<S>, p: &Params<S>, sys: &SystemModel) -> S {
    let len = arm_lengths(p);
    let (sin_a, _) = arm_trig(q);
    let half: S = cst(0.5);
    let g: S = cst(sys.gravity);
    let mut v = S::zero();
    let mut joint_z: S = cst(sys.base_height);
    for i in 0..3 {
        let com_z = joint_z + half * len[i] * sin_a[i];
        v = v + cst::<S>(sys.link_masses[i]) * g * com_z;
        joint_z = joint_z + len[i] * sin_a[i];
    }
    v
}

/// Coriolis/centrifugal plus gravity terms via Christoffel symbols; the
/// q-derivatives of M and V come from an internal forward-mode pass.
fn arm_bias<S: Scalar>(q: &V3<S>, qdot: &V3<S>, p: &Params<S>, sys: &SystemModel) -> V3<S> {
    type Lift<S> = Dual<S, 3>;
    let ql: V3<Lift<S>> = [
        Dual::variable(q[0], 0),
        Dual::variable(q[1], 1),
        Dual::variable(q[2], 2),
    ];
    let pl: Params<Lift<S>> = p.map(|s| Dual::new(s, [S::zero(); 3]));
    let m = arm_mass_matrix(&ql, &pl, sys);
    let v = arm_potential(&ql, &pl, sys);
    let mut b = [v.im[0], v.im[1], v.im[2]];
    let half: S = cst(0.5);
    for k in 0..3 {
        let mut acc = S::zero();
        for i in 0..3 {
            for j in 0..3 {
                let dmki_dqj = m[k][i].im[j];
                let dmij_dqk = m[i][j].im[k];
                acc = acc + (dmki_dqj - half * dmij_dqk) * qdot[i] * qdot[j];
            }
        }
        b[k] = b[k] + acc;
    }
    b
}

// ---------------------------------------------------------------------------
// Block kinematics
// ---------------------------------------------------------------------------

fn block_params<S: Scalar>(p: &Params<S>) -> (S, S, S) {
    match p {
        Params::Block { m, hx, hz } => (*m, *hx, *hz),
        Params::Arm { .. } => unreachable!("block dynamics on arm params"),
    }
}

/// Corner offsets in the body frame, fixed order.
fn block_corners<S: Scalar>(hx: S, hz: S) -> [[S; 2]; 4] {
    [[hx, hz], [hx, -hz], [-hx, -hz], [-hx, hz]]
}

fn block_mass_matrix<S: Scalar>(p: &Params<S>) -> M3<S> {
    let (m, hx, hz) = block_params(p);
    // uniform rectangle about its center
    let inertia = m * (hx * hx + hz * hz) * cst::<S>(1.0 / 3.0);
    let mut mm = m3_zero();
    mm[0][0] = m;
    mm[1][1] = m;
    mm[2][2] = inertia;
    mm
}

// ---------------------------------------------------------------------------
// Public dynamics surface
// ---------------------------------------------------------------------------

/// Configuration-dependent inertia matrix, symmetric positive-definite.
pub fn mass_matrix<S: Scalar>(q: &V3<S>, p: &Params<S>, sys: &SystemModel) -> M3<S> {
    match sys.kind {
        SystemKind::ThreeLinkArm => arm_mass_matrix(q, p, sys),
        SystemKind::PlanarBlock => block_mass_matrix(p),
    }
}

/// Velocity-product and gravity generalized forces: `M qdd + b = u + Jc^T lam`.
pub fn bias<S: Scalar>(q: &V3<S>, qdot: &V3<S>, p: &Params<S>, sys: &SystemModel) -> V3<S> {
    match sys.kind {
        SystemKind::ThreeLinkArm => arm_bias(q, qdot, p, sys),
        SystemKind::PlanarBlock => {
            let (m, _, _) = block_params(p);
            [S::zero(), m * cst(sys.gravity), S::zero()]
        }
    }
}

pub fn potential_energy<S: Scalar>(q: &V3<S>, p: &Params<S>, sys: &SystemModel) -> S {
    match sys.kind {
        SystemKind::ThreeLinkArm => arm_potential(q, p, sys),
        SystemKind::PlanarBlock => {
            let (m, _, _) = block_params(p);
            m * cst::<S>(sys.gravity) * q[1]
        }
    }
}

pub fn kinetic_energy<S: Scalar>(
    q: &V3<S>,
    qdot: &V3<S>,
    p: &Params<S>,
    sys: &SystemModel,
) -> S {
    let m = mass_matrix(q, p, sys);
    let mv = m3_vec(&m, qdot);
    cst::<S>(0.5) * (qdot[0] * mv[0] + qdot[1] * mv[1] + qdot[2] * mv[2])
}

pub fn total_energy(x: &State, theta: &ParamVector, sys: &SystemModel) -> Result<f64> {
    let p: Params<f64> = Params::constant(theta, sys.kind)?;
    let s = SimState::<f64>::lift(x);
    Ok(kinetic_energy(&s.q, &s.qdot, &p, sys) + potential_energy(&s.q, &p, sys))
}

/// Per-contact-point world position, signed distance, and 2x3 Jacobian rows
/// (row 0 tangential x, row 1 normal z).
#[derive(Clone, Copy, Debug)]
pub struct ContactPointKin<S: Scalar> {
    pub pos: [S; 2],
    pub dist: S,
    pub jac: [[S; 3]; 2],
}

pub fn contact_kinematics<S: Scalar>(
    q: &V3<S>,
    p: &Params<S>,
    sys: &SystemModel,
) -> Vec<ContactPointKin<S>> {
    match sys.kind {
        SystemKind::ThreeLinkArm => {
            let pos = arm_tip_position(q, p, sys);
            let jac = arm_tip_jacobian(q, p);
            vec![ContactPointKin {
                pos,
                dist: pos[1],
                jac,
            }]
        }
        SystemKind::PlanarBlock => {
            let (_, hx, hz) = block_params(p);
            let (s, c) = (q[2].sin(), q[2].cos());
            block_corners(hx, hz)
                .iter()
                .map(|r| {
                    let rx = c * r[0] - s * r[1];
                    let rz = s * r[0] + c * r[1];
                    // d(R r)/dphi
                    let drx = -s * r[0] - c * r[1];
                    let drz = c * r[0] - s * r[1];
                    let pos = [q[0] + rx, q[1] + rz];
                    ContactPointKin {
                        pos,
                        dist: pos[1],
                        jac: [
                            [S::one(), S::zero(), drx],
                            [S::zero(), S::one(), drz],
                        ],
                    }
                })
                .collect()
        }
    }
}

/// Sensor-frame velocity map `J_g` (2x3) and its time derivative along the
/// current state.
pub fn sensor_jacobian<S: Scalar>(
    q: &V3<S>,
    qdot: &V3<S>,
    p: &Params<S>,
    sys: &SystemModel,
) -> ([[S; 3]; 2], [[S; 3]; 2]) {
    match sys.kind {
        SystemKind::ThreeLinkArm => {
            let jg = arm_tip_jacobian(q, p);
            let len = arm_lengths(p);
            let (sin_a, cos_a) = arm_trig(q);
            let adot = [qdot[0], qdot[0] + qdot[1], qdot[0] + qdot[1] + qdot[2]];
            let mut jdot = [[S::zero(); 3]; 2];
            for j in 0..3 {
                let mut dx = S::zero();
                let mut dz = S::zero();
                for k in j..3 {
                    dx = dx - len[k] * cos_a[k] * adot[k];
                    dz = dz - len[k] * sin_a[k] * adot[k];
                }
                jdot[0][j] = dx;
                jdot[1][j] = dz;
            }
            (jg, jdot)
        }
        SystemKind::PlanarBlock => {
            // sensor at the body center: constant projection
            let jg = [
                [S::one(), S::zero(), S::zero()],
                [S::zero(), S::one(), S::zero()],
            ];
            (jg, [[S::zero(); 3]; 2])
        }
    }
}

/// One semi-implicit Euler step with smoothed contact forces.
pub fn step_generic<S: Scalar>(
    x: &SimState<S>,
    u: &V3<S>,
    p: &Params<S>,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> (SimState<S>, Vec<PointContact<S>>) {
    let contacts = solve_contact_generic(&x.q, &x.qdot, p, sys, cfg);
    let kin = contact_kinematics(&x.q, p, sys);
    // generalized contact force Jc^T lambda
    let mut f_c = [S::zero(); 3];
    for (pt, k) in contacts.iter().zip(kin.iter()) {
        for j in 0..3 {
            f_c[j] = f_c[j] + k.jac[0][j] * pt.tangential + k.jac[1][j] * pt.normal;
        }
    }
    let m = mass_matrix(&x.q, p, sys);
    let b = bias(&x.q, &x.qdot, p, sys);
    let rhs = v3_add(&v3_sub(u, &b), &f_c);
    let qdd = solve3_spd(&m, &rhs);
    let dt: S = cst(sys.dt);
    let qdot_next = v3_add(&x.qdot, &v3_scale(dt, &qdd));
    let q_next = v3_add(&x.q, &v3_scale(dt, &qdot_next));
    (
        SimState {
            q: q_next,
            qdot: qdot_next,
        },
        contacts,
    )
}

/// Generic rollout carrying sensitivities; errors on non-finite states.
pub struct RolloutData<S: Scalar> {
    pub states: Vec<SimState<S>>,
    pub contacts: Vec<Vec<PointContact<S>>>,
}

pub fn rollout_generic<S: Scalar>(
    x0: &SimState<S>,
    controls: &[V3<S>],
    p: &Params<S>,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Result<RolloutData<S>> {
    if controls.is_empty() {
        return Err(SimError::Config("rollout needs at least one control step".into()));
    }
    let mut states = Vec::with_capacity(controls.len() + 1);
    let mut contacts = Vec::with_capacity(controls.len());
    if !x0.is_finite() {
        return Err(SimError::Divergence {
            step: 0,
            msg: "non-finite initial state".into(),
        });
    }
    states.push(*x0);
    let mut x = *x0;
    for (i, u) in controls.iter().enumerate() {
        let (x_next, lam) = step_generic(&x, u, p, sys, cfg);
        if !x_next.is_finite() {
            return Err(SimError::Divergence {
                step: i,
                msg: "non-finite state after integration step".into(),
            });
        }
        states.push(x_next);
        contacts.push(lam);
        x = x_next;
    }
    Ok(RolloutData { states, contacts })
}

/// Plain-float step.
pub fn step(
    x: &State,
    u: &[f64; 3],
    theta: &ParamVector,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Result<(State, ContactSet)> {
    let p: Params<f64> = Params::constant(theta, sys.kind)?;
    let (x_next, lam) = step_generic(&SimState::lift(x), u, &p, sys, cfg);
    if !x_next.is_finite() {
        return Err(SimError::Divergence {
            step: 0,
            msg: "non-finite state after integration step".into(),
        });
    }
    Ok((x_next.value(), ContactSet::from_generic(&lam)))
}

/// Plain-float rollout producing a replayable [`Trajectory`].
pub fn rollout(
    x0: &State,
    controls: &[[f64; 3]],
    theta: &ParamVector,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Result<Trajectory> {
    let p: Params<f64> = Params::constant(theta, sys.kind)?;
    let lifted: Vec<V3<f64>> = controls.to_vec();
    let data = rollout_generic(&SimState::lift(x0), &lifted, &p, sys, cfg)?;
    Ok(Trajectory {
        states: data.states.iter().map(|s| s.value()).collect(),
        controls: controls.to_vec(),
        contacts: data.contacts.iter().map(|c| ContactSet::from_generic(c)).collect(),
    })
}
