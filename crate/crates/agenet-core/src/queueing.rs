//! Per-class temporal analysis: PH/Geo/1 quasi-birth-death construction and
//! matrix-analytic solution for TT traffic, Geo/Geo/1 closed forms for ET
//! traffic, and waiting-time distributions for both.
//!
//! Waiting convention: `WaitingDist` is the queue-wait — the number of slots
//! the packets found ahead of an arriving packet need to depart (0 when the
//! system is found empty). A packet's full time in system adds its own
//! geometric service on top; a packet whose first attempt succeeds has spent
//! 1 slot in system.

use crate::error::QueueError;
use nalgebra::{DMatrix, RowDVector};

/// Discrete PH representation of the deterministic T-slot arrival counter.
#[derive(Debug, Clone, PartialEq)]
pub struct PhCounter {
    /// Initialization row vector ζ = e₁.
    pub init: RowDVector<f64>,
    /// Transient (substochastic) matrix S: the superdiagonal shift.
    pub transient: DMatrix<f64>,
    /// Absorption column s = 1 − S·1.
    pub absorb: nalgebra::DVector<f64>,
}

/// QBD transition blocks for one QoS class.
#[derive(Debug, Clone, PartialEq)]
pub struct QbdModel {
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub departure_prob: f64,
}

impl QbdModel {
    pub fn phases(&self) -> usize {
        self.b.nrows()
    }
}

/// Level-phase steady state of the QBD: boundary rows and the rate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Minimal nonnegative solution of R = A0 + R·A1 + R²·A2.
    pub r: DMatrix<f64>,
    /// Level-0 phase row.
    pub x0: RowDVector<f64>,
    /// Level-1 phase row; higher levels follow x_i = x_{i−1}·R.
    pub x1: RowDVector<f64>,
}

impl SteadyState {
    /// Phase row at level i.
    pub fn level(&self, i: usize) -> RowDVector<f64> {
        match i {
            0 => self.x0.clone(),
            1 => self.x1.clone(),
            _ => {
                let mut x = self.x1.clone();
                for _ in 1..i {
                    x *= &self.r;
                }
                x
            }
        }
    }

    /// Marginal probability of level i.
    pub fn level_mass(&self, i: usize) -> f64 {
        self.level(i).sum()
    }

    /// Idle probability (mass at level 0).
    pub fn idle_prob(&self) -> f64 {
        self.x0.sum()
    }
}

/// Truncated waiting-time pmf over m = 0, 1, 2, … plus the residual mass.
///
/// `mean` is exact: the geometric tail beyond the truncation is summed in
/// closed form rather than dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingDist {
    pub pmf: Vec<f64>,
    pub tail_mass: f64,
    pub mean: f64,
}

impl WaitingDist {
    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum::<f64>()
    }
}

/// Deterministic T-slot counter: phases advance 1 → 2 → … → T, absorption
/// (= packet generation) after phase T.
pub fn build_ph_counter(duty_cycle: u32) -> PhCounter {
    assert!(duty_cycle >= 2, "duty cycle must be >= 2");
    let t = duty_cycle as usize;
    let mut s = DMatrix::zeros(t, t);
    for i in 0..t - 1 {
        s[(i, i + 1)] = 1.0;
    }
    let ones = nalgebra::DVector::from_element(t, 1.0);
    let absorb = &ones - &s * &ones;
    let mut init = RowDVector::zeros(t);
    init[0] = 1.0;
    PhCounter { init, transient: s, absorb }
}

/// QBD blocks for departure probability d: B = S, C = sζ, E = dS,
/// A2 = dS, A0 = (1−d)sζ, A1 = d·sζ + (1−d)S.
pub fn build_qbd(duty_cycle: u32, d: f64) -> QbdModel {
    assert!((0.0..=1.0).contains(&d));
    let ph = build_ph_counter(duty_cycle);
    let sz = &ph.absorb * &ph.init; // rank-1 restart block
    let s = ph.transient;
    QbdModel {
        b: s.clone(),
        c: sz.clone(),
        e: d * &s,
        a0: (1.0 - d) * &sz,
        a1: d * &sz + (1.0 - d) * &s,
        a2: d * &s,
        departure_prob: d,
    }
}

/// TT stability: a class can drain within its cycle iff d ≥ 1/(T−1)
/// (boundary inclusive).
pub fn is_stable_tt(d: f64, duty_cycle: u32) -> bool {
    d >= 1.0 / (duty_cycle as f64 - 1.0)
}

const R_TOL: f64 = 1e-13;
const R_MAX_ITERS: usize = 100_000;
/// Residual bound the solved R must satisfy.
pub const R_RESIDUAL: f64 = 1e-12;

/// Minimal nonnegative solution of R = A0 + R·A1 + R²·A2 by functional
/// iteration from R = 0 (monotone convergent for stable models).
pub fn solve_r(model: &QbdModel, duty_cycle: u32) -> Result<DMatrix<f64>, QueueError> {
    if !is_stable_tt(model.departure_prob, duty_cycle) {
        return Err(QueueError::Unstable {
            d: model.departure_prob,
            threshold: 1.0 / (duty_cycle as f64 - 1.0),
        });
    }
    let t = model.phases();
    let mut r = DMatrix::zeros(t, t);
    for _ in 0..R_MAX_ITERS {
        let next = &model.a0 + &r * &model.a1 + (&r * &r) * &model.a2;
        let delta = (&next - &r).abs().max();
        r = next;
        if delta < R_TOL {
            let residual = (&model.a0 + &r * &model.a1 + (&r * &r) * &model.a2 - &r)
                .abs()
                .max();
            if residual > R_RESIDUAL {
                return Err(QueueError::NoConvergence { iters: R_MAX_ITERS, residual });
            }
            return Ok(r);
        }
    }
    let residual = (&model.a0 + &r * &model.a1 + (&r * &r) * &model.a2 - &r).abs().max();
    Err(QueueError::NoConvergence { iters: R_MAX_ITERS, residual })
}

/// Boundary rows x0, x1 solving
/// [x0 x1] = [x0 x1]·[[B, C], [E, A1 + R·A2]], normalized by
/// x0·1 + x1·(I−R)^{-1}·1 = 1 (least squares on the stacked system).
pub fn solve_boundary(model: &QbdModel, r: &DMatrix<f64>) -> Result<SteadyState, QueueError> {
    let t = model.phases();
    let mut m = DMatrix::zeros(2 * t, 2 * t);
    m.view_mut((0, 0), (t, t)).copy_from(&model.b);
    m.view_mut((0, t), (t, t)).copy_from(&model.c);
    m.view_mut((t, 0), (t, t)).copy_from(&model.e);
    m.view_mut((t, t), (t, t)).copy_from(&(&model.a1 + r * &model.a2));

    // x (M − I) = 0  →  (M − I)^T x^T = 0, plus the normalization row
    let at = (m - DMatrix::identity(2 * t, 2 * t)).transpose();
    let inv_ir = (DMatrix::identity(t, t) - r)
        .try_inverse()
        .ok_or(QueueError::SingularBoundary)?;
    let ones = nalgebra::DVector::from_element(t, 1.0);
    let weights = &inv_ir * &ones;

    let mut a_full = DMatrix::zeros(2 * t + 1, 2 * t);
    a_full.view_mut((0, 0), (2 * t, 2 * t)).copy_from(&at);
    for j in 0..t {
        a_full[(2 * t, j)] = 1.0;
        a_full[(2 * t, t + j)] = weights[j];
    }
    let mut rhs = nalgebra::DVector::zeros(2 * t + 1);
    rhs[2 * t] = 1.0;

    let svd = a_full.clone().svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-13)
        .map_err(|_| QueueError::SingularBoundary)?;
    let residual = (&a_full * &sol - &rhs).abs().max();
    if residual > 1e-10 {
        return Err(QueueError::SingularBoundary);
    }
    let x0 = RowDVector::from_iterator(t, (0..t).map(|i| sol[i]));
    let x1 = RowDVector::from_iterator(t, (0..t).map(|i| sol[t + i]));
    if x0.iter().chain(x1.iter()).any(|&v| v < -1e-12) {
        return Err(QueueError::SingularBoundary);
    }
    Ok(SteadyState { r: r.clone(), x0, x1 })
}

/// Arriving-packet law for the TT queue: probability q_l that an incoming
/// packet finds l packets in system, accounting for a departure coincident
/// with the arrival slot. Renormalized to sum to one.
pub fn arriving_law_tt(state: &SteadyState, model: &QbdModel, tail: f64) -> Vec<f64> {
    let d = model.departure_prob;
    let s = {
        // absorption column of the counter
        let t = model.phases();
        let ones = nalgebra::DVector::from_element(t, 1.0);
        &ones - &model.b * &ones
    };
    let mut q = Vec::with_capacity(64);
    let x1s = (&state.x1 * &s)[(0, 0)];
    q.push((&state.x0 * &s)[(0, 0)] + x1s * d);
    let mut xl = state.x1.clone();
    let mut xls = x1s;
    let cap = 500_000;
    for _ in 1..cap {
        let xn = &xl * &state.r;
        let xns = (&xn * &s)[(0, 0)];
        q.push(xls * (1.0 - d) + xns * d);
        xl = xn;
        xls = xns;
        if xls < tail * 1e-3 {
            break;
        }
    }
    let total: f64 = q.iter().sum();
    for v in &mut q {
        *v /= total;
    }
    q
}

/// Queue-wait pmf from an arriving-packet law and a geometric service:
/// P{W=0} = q₀, and for m ≥ 1
/// P{W=m} = Σ_{v=1}^{m} q_v · C(m−1, v−1) d^v (1−d)^{m−v}
/// (the v packets found ahead need exactly m service slots).
///
/// Evaluated as a drain process — `remain[v]` is the probability that v of
/// the found packets are still present after the current slot — which avoids
/// the underflow of the raw binomial terms at large m.
fn waiting_from_law(q: &[f64], d: f64, tail: f64) -> Result<WaitingDist, QueueError> {
    const MAX_TERMS: usize = 1_000_000;
    // exact mean: the v packets ahead need NB(v, d) slots, mean v/d
    let mean = q
        .iter()
        .enumerate()
        .skip(1)
        .map(|(v, &qv)| qv * v as f64 / d)
        .sum::<f64>();

    let mut pmf = vec![q[0]];
    let mut cum = q[0];
    let mut remain: Vec<f64> = q.to_vec();
    remain[0] = 0.0;
    if remain.len() < 2 {
        remain.push(0.0);
    }
    let mut top = remain.len() - 1;
    let mut m = 0usize;
    while cum < 1.0 - tail {
        m += 1;
        if m >= MAX_TERMS {
            return Err(QueueError::TruncationFailure { target: tail, max_terms: MAX_TERMS });
        }
        // one service slot: head departs with probability d
        let drained = remain[1] * d;
        for v in 1..top {
            remain[v] = remain[v] * (1.0 - d) + remain[v + 1] * d;
        }
        remain[top] *= 1.0 - d;
        while top > 1 && remain[top] < 1e-300 {
            top -= 1;
        }
        pmf.push(drained);
        cum += drained;
    }
    let tail_mass = (1.0 - cum).max(0.0);
    Ok(WaitingDist { pmf, tail_mass, mean })
}

/// Waiting distribution (queue-wait) for a stable TT class.
pub fn waiting_dist_tt(
    state: &SteadyState,
    model: &QbdModel,
    tail: f64,
) -> Result<WaitingDist, QueueError> {
    let q = arriving_law_tt(state, model, tail);
    waiting_from_law(&q, model.departure_prob, tail)
}

/// Geo/Geo/1 steady state for one ET class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtSteadyState {
    pub arrival_prob: f64,
    pub departure_prob: f64,
    /// Idle probability x₀ = (d−α)/d, or 0 when unstable.
    pub idle_prob: f64,
    /// Geometric level ratio R = α(1−d)/((1−α)d).
    pub ratio: f64,
    pub stable: bool,
}

impl EtSteadyState {
    /// Level pmf: x_i = R^i·x₀/(1−d) for i ≥ 1.
    pub fn level_mass(&self, i: usize) -> f64 {
        if !self.stable {
            return 0.0;
        }
        if i == 0 {
            self.idle_prob
        } else {
            self.ratio.powi(i as i32) * self.idle_prob / (1.0 - self.departure_prob)
        }
    }

    /// Mean number in system (infinite when unstable).
    pub fn mean_level(&self) -> f64 {
        if !self.stable {
            return f64::INFINITY;
        }
        let r = self.ratio;
        self.idle_prob / (1.0 - self.departure_prob) * r / ((1.0 - r) * (1.0 - r))
    }
}

/// ET per-class steady state; instability (α ≥ d) is a valid result with
/// idle probability pinned to 0.
pub fn steady_state_et(alpha: f64, d: f64) -> EtSteadyState {
    assert!(alpha > 0.0 && alpha <= 1.0 && d >= 0.0 && d <= 1.0);
    if alpha < d {
        EtSteadyState {
            arrival_prob: alpha,
            departure_prob: d,
            idle_prob: (d - alpha) / d,
            ratio: alpha * (1.0 - d) / ((1.0 - alpha) * d),
            stable: true,
        }
    } else {
        EtSteadyState {
            arrival_prob: alpha,
            departure_prob: d,
            idle_prob: 0.0,
            ratio: 1.0,
            stable: false,
        }
    }
}

/// Waiting distribution (queue-wait) for a stable ET class.
///
/// The arriving-packet law accounts for a departure coincident with the
/// arrival slot: q₀ = x₀ + x₁·d, q_v = x_v(1−d) + x_{v+1}·d. The printed
/// level-pmf form without this correction overstates the mean wait against
/// a slot-level simulation of the same queue.
pub fn waiting_dist_et(alpha: f64, d: f64, tail: f64) -> Result<WaitingDist, QueueError> {
    if alpha >= d {
        return Err(QueueError::Unstable { d, threshold: alpha });
    }
    if d >= 1.0 {
        // deterministic one-slot service: the only occupied level is the
        // packet arriving this slot, which the coincident departure clears
        return waiting_from_law(&[1.0], d, tail);
    }
    let st = steady_state_et(alpha, d);
    let mut q = Vec::with_capacity(64);
    q.push(st.level_mass(0) + st.level_mass(1) * d);
    let mut v = 1usize;
    loop {
        let qv = st.level_mass(v) * (1.0 - d) + st.level_mass(v + 1) * d;
        q.push(qv);
        if st.level_mass(v + 1) < tail * 1e-3 {
            break;
        }
        v += 1;
        if v > 1_000_000 {
            return Err(QueueError::TruncationFailure { target: tail, max_terms: 1_000_000 });
        }
    }
    let total: f64 = q.iter().sum();
    for x in &mut q {
        *x /= total;
    }
    waiting_from_law(&q, d, tail)
}

/// Independent solvers used only to cross-check the production MAM path.
pub mod oracle {
    use super::*;

    /// G-based construction from the minimal nonnegative solution of
    /// G = A2 + A1·G + A0·G², then R = A0·(I − A1 − A0·G)^{-1}.
    pub fn solve_r_via_g(model: &QbdModel) -> Result<DMatrix<f64>, QueueError> {
        let t = model.phases();
        let mut g = DMatrix::zeros(t, t);
        for _ in 0..R_MAX_ITERS {
            let next = &model.a2 + &model.a1 * &g + &model.a0 * (&g * &g);
            let delta = (&next - &g).abs().max();
            g = next;
            if delta < R_TOL {
                break;
            }
        }
        let inner = DMatrix::identity(t, t) - &model.a1 - &model.a0 * &g;
        let inv = inner.try_inverse().ok_or(QueueError::SingularBoundary)?;
        Ok(&model.a0 * inv)
    }

    /// Scalar spectral-radius fixed point: the Perron root of R solves
    /// z = sp(A0 + z·A1 + z²·A2) on the unit interval for these rank-cycled
    /// blocks; used as a sanity bound on sp(R).
    pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
        // power iteration (matrices here are nonnegative)
        let t = m.nrows();
        let mut v = nalgebra::DVector::from_element(t, 1.0 / t as f64);
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let w = m * &v;
            let norm = w.amax();
            if norm == 0.0 {
                return 0.0;
            }
            let next = &w / norm;
            if (&next - &v).abs().max() < 1e-14 {
                lambda = norm;
                break;
            }
            v = next;
            lambda = norm;
        }
        lambda
    }

    /// Brute-force level-phase distribution by power iteration of the DTMC
    /// truncated at `levels`. Returns rows of length T per level.
    pub fn truncated_power_iteration(
        model: &QbdModel,
        levels: usize,
        sweeps: usize,
    ) -> Vec<Vec<f64>> {
        let t = model.phases();
        let dim = (levels + 1) * t;
        let mut p = DMatrix::zeros(dim, dim);
        let put = |p: &mut DMatrix<f64>, bi: usize, bj: usize, blk: &DMatrix<f64>| {
            for i in 0..t {
                for j in 0..t {
                    p[(bi * t + i, bj * t + j)] += blk[(i, j)];
                }
            }
        };
        put(&mut p, 0, 0, &model.b);
        put(&mut p, 0, 1, &model.c);
        put(&mut p, 1, 0, &model.e);
        put(&mut p, 1, 1, &model.a1);
        if levels >= 2 {
            put(&mut p, 1, 2, &model.a0);
        }
        for l in 2..=levels {
            put(&mut p, l, l - 1, &model.a2);
            put(&mut p, l, l, &model.a1);
            if l + 1 <= levels {
                put(&mut p, l, l + 1, &model.a0);
            } else {
                // reflect the final level to keep the chain stochastic
                put(&mut p, l, l, &model.a0);
            }
        }
        // lazy chain: the deterministic phase cycle makes the raw chain
        // periodic, so iterate (P + I)/2 (same stationary vector)
        let mut x = RowDVector::from_element(dim, 1.0 / dim as f64);
        for _ in 0..sweeps {
            let next = 0.5 * (&x * &p) + 0.5 * &x;
            let delta = (&next - &x).abs().max();
            x = next;
            if delta < 1e-16 {
                break;
            }
        }
        let norm: f64 = x.sum();
        (0..=levels)
            .map(|l| (0..t).map(|i| x[l * t + i] / norm).collect())
            .collect()
    }

    /// Slot-level PH/Geo/1 simulation measuring the mean time in system
    /// (arrival at slot start; a first-attempt success counts 1 slot).
    pub fn simulate_tt_queue(duty_cycle: u32, d: f64, slots: usize, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t = duty_cycle as usize;
        let mut queue: std::collections::VecDeque<usize> = Default::default();
        let mut sum = 0u64;
        let mut count = 0u64;
        for slot in 0..slots {
            if slot % t == 0 {
                queue.push_back(slot);
            }
            if !queue.is_empty() && rng.gen::<f64>() < d {
                let gen = queue.pop_front().unwrap();
                sum += (slot - gen + 1) as u64;
                count += 1;
            }
        }
        sum as f64 / count as f64
    }

    /// Slot-level Geo/Geo/1 simulation, same conventions.
    pub fn simulate_et_queue(alpha: f64, d: f64, slots: usize, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut queue: std::collections::VecDeque<usize> = Default::default();
        let mut sum = 0u64;
        let mut count = 0u64;
        for slot in 0..slots {
            if rng.gen::<f64>() < alpha {
                queue.push_back(slot);
            }
            if !queue.is_empty() && rng.gen::<f64>() < d {
                let gen = queue.pop_front().unwrap();
                sum += (slot - gen + 1) as u64;
                count += 1;
            }
        }
        sum as f64 / count as f64
    }
}
