//! Rate matrix of the multilevel master equation `dP/dt = M P`, its
//! stationary state, and a positivity-preserving transient integrator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::Factorization;
use crate::model::{DriveParams, QubitModel, StateIndex, StateLayout};
use crate::rates::{RateEvaluator, RateKernelParams};

/// Relative pivot floor below which the bordered stationary system counts as
/// singular (disconnected state graph).
const SINGULAR_PIVOT: f64 = 1e-13;
/// Relative residual accepted from the direct stationary solve.
const DIRECT_RESIDUAL: f64 = 1e-10;
/// Absolute `||dP/dt||_inf` at which the fallback evolution stops.
const EVOLVE_RESIDUAL: f64 = 1e-12;
/// Doubling steps of the fallback evolution, from `dt = 1/||M||` up to
/// `dt ~ 1e12/||M||`.
const EVOLVE_DOUBLINGS: usize = 41;

/// Generator of the population dynamics. `M[a][b]` (a != b) is the total rate
/// from state `b` into state `a`; each diagonal entry makes its column sum
/// vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    layout: StateLayout,
    data: Vec<f64>,
}

impl RateMatrix {
    pub fn zeros(layout: StateLayout) -> Self {
        let n = layout.len();
        Self {
            layout,
            data: vec![0.0; n * n],
        }
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// Entry `M[to][from]`.
    pub fn get(&self, to: usize, from: usize) -> f64 {
        self.data[to * self.dim() + from]
    }

    fn transfer(&mut self, from: usize, to: usize, rate: f64) {
        let n = self.dim();
        self.data[to * n + from] += rate;
        self.data[from * n + from] -= rate;
    }

    /// Adds a one-way channel `from -> to` (flat indices).
    pub fn add_transfer(&mut self, from: usize, to: usize, rate: f64) -> Result<()> {
        let n = self.dim();
        if from >= n || to >= n {
            return Err(Error::IndexOutOfRange(format!(
                "transfer {from} -> {to} in a {n}-state matrix"
            )));
        }
        if from == to {
            return Err(Error::InvalidArgument("transfer needs two distinct states".into()));
        }
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "rate must be finite and >= 0, got {rate}"
            )));
        }
        self.transfer(from, to, rate);
        Ok(())
    }

    /// Adds the same rate in both directions between `a` and `b`.
    pub fn add_symmetric(&mut self, a: usize, b: usize, rate: f64) -> Result<()> {
        self.add_transfer(a, b, rate)?;
        self.add_transfer(b, a, rate)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|b| (0..n).map(|a| self.get(a, b)).sum()).collect()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.dim())
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `M p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.dim())
            .map(|row| row.iter().zip(p).map(|(m, x)| m * x).sum())
            .collect()
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.data)
    }
}

/// Probabilities over all states of a layout, with well marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVector {
    layout: StateLayout,
    probs: Vec<f64>,
    left: f64,
    right: f64,
    leak: f64,
}

impl PopulationVector {
    pub fn new(probs: Vec<f64>, layout: StateLayout) -> Result<Self> {
        if probs.len() != layout.len() {
            return Err(Error::InvalidArgument(format!(
                "population has {} entries, layout has {} states",
                probs.len(),
                layout.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -1e-12 || *p > 1.0 + 1e-12) {
            return Err(Error::InvalidArgument("populations must lie in [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("populations sum to {total}, not 1")));
        }
        Ok(Self::from_raw(probs, layout))
    }

    /// Clamps tiny negatives, renormalises and fills in the marginals.
    fn from_raw(mut probs: Vec<f64>, layout: StateLayout) -> Self {
        for p in &mut probs {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        let left = probs[..layout.n_left].iter().sum();
        let right = probs[layout.n_left..layout.n_left + layout.n_right].iter().sum();
        let leak = if layout.leak { probs[layout.len() - 1] } else { 0.0 };
        Self {
            layout,
            probs,
            left,
            right,
            leak,
        }
    }

    /// All population in `|0, R>`.
    pub fn ground(layout: StateLayout) -> Self {
        let mut probs = vec![0.0; layout.len()];
        probs[layout.ground_right()] = 1.0;
        Self::from_raw(probs, layout)
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, state: StateIndex) -> Option<f64> {
        self.layout.index_of(state).map(|k| self.probs[k])
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    /// Population of the leak state, counted in neither well.
    pub fn leak(&self) -> f64 {
        self.leak
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateIndex, f64)> + '_ {
        self.layout.states().zip(self.probs.iter().copied())
    }
}

/// Well marginals `(P_L, P_R)`; leak population is excluded from both.
pub fn well_population(p: &PopulationVector) -> (f64, f64) {
    (p.left(), p.right())
}

/// Assembles the rate matrix at global detuning `eps` with a prepared rate
/// evaluator (one per drive amplitude).
pub(crate) fn assemble(model: &QubitModel, eps: f64, rates: &RateEvaluator) -> RateMatrix {
    let layout = model.layout();
    let mut m = RateMatrix::zeros(layout);
    let idx = |s: StateIndex| layout.index_of(s).expect("state within layout");
    let leak = model.leak().copied();

    for (i, j, delta) in model.active_crossings() {
        let d = model.right_offsets()[j] - model.left_offsets()[i];
        let w = rates.rate(delta, eps - d);
        let (l, r) = (idx(StateIndex::left(i)), idx(StateIndex::right(j)));
        match leak {
            Some(cfg) => {
                let l_out = i >= cfg.left_threshold;
                let r_out = j >= cfg.right_threshold;
                let k = idx(StateIndex::LEAK);
                match (l_out, r_out) {
                    (false, false) => {
                        m.transfer(l, r, w);
                        m.transfer(r, l, w);
                    }
                    (false, true) => m.transfer(l, k, w),
                    (true, false) => m.transfer(r, k, w),
                    (true, true) => {}
                }
            }
            None => {
                m.transfer(l, r, w);
                m.transfer(r, l, w);
            }
        }
    }

    for (from, to, rate) in model.relaxation_channels() {
        m.transfer(idx(from), idx(to), rate);
    }

    if let Some(cfg) = leak {
        let k = idx(StateIndex::LEAK);
        m.transfer(k, idx(StateIndex::left(0)), cfg.return_rate);
        m.transfer(k, idx(StateIndex::right(0)), cfg.return_rate);
    }
    m
}

/// Rate matrix at one `(eps, drive)` point: symmetric LZS channels for every
/// active crossing plus the one-way relaxation and leak channels.
pub fn build_rate_matrix(model: &QubitModel, eps: f64, drive: &DriveParams, kernel: &RateKernelParams) -> RateMatrix {
    assemble(model, eps, &RateEvaluator::new(drive, kernel))
}

fn residual(m: &RateMatrix, p: &[f64]) -> f64 {
    m.apply(p).iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Bordered system: row 0 of `M P = 0` is replaced by the normalisation row.
fn direct_stationary(m: &RateMatrix, scale: f64) -> Option<PopulationVector> {
    let n = m.dim();
    let mut a = m.to_dmatrix();
    for c in 0..n {
        a[(0, c)] = scale;
    }
    let mut b = DVector::zeros(n);
    b[0] = scale;
    let x = Factorization::new(a, SINGULAR_PIVOT)?.solve(&b)?;
    let p = PopulationVector::from_raw(x.iter().copied().collect(), m.layout());
    (residual(m, p.probs()) <= DIRECT_RESIDUAL * scale).then_some(p)
}

/// Backward-Euler relaxation from `|0, R>` with geometrically growing steps.
fn relax_from_ground(m: &RateMatrix, scale: f64) -> Result<PopulationVector> {
    let mut p = PopulationVector::ground(m.layout());
    let mut res = residual(m, p.probs());
    if res < EVOLVE_RESIDUAL {
        return Ok(p);
    }
    let mut dt = 1.0 / scale;
    for _ in 0..EVOLVE_DOUBLINGS {
        let step = match implicit_step(m, dt) {
            Ok(step) => step,
            Err(_) if res < EVOLVE_RESIDUAL => return Ok(p),
            Err(e) => return Err(e),
        };
        let next = advance(&step, &p)?;
        let change = next
            .probs()
            .iter()
            .zip(p.probs())
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()));
        p = next;
        res = residual(m, p.probs());
        // keep lengthening the step until the slow modes have settled too
        if res < EVOLVE_RESIDUAL && change < 1e-15 {
            return Ok(p);
        }
        dt *= 2.0;
    }
    if res < EVOLVE_RESIDUAL {
        Ok(p)
    } else {
        Err(Error::NonConvergent { residual: res })
    }
}

/// Stationary populations `M P = 0`, `Σ P = 1`.
///
/// Uses a direct bordered solve; when that system is singular (the state graph
/// has more than one closed class) the result is the long-time limit of the
/// evolution started from `|0, R>`.
pub fn stationary_solve(m: &RateMatrix) -> Result<PopulationVector> {
    let scale = m.norm_inf();
    if scale == 0.0 {
        return Ok(PopulationVector::ground(m.layout()));
    }
    if !scale.is_finite() {
        return Err(Error::NonConvergent { residual: f64::NAN });
    }
    if let Some(p) = direct_stationary(m, scale) {
        return Ok(p);
    }
    relax_from_ground(m, scale)
}

fn implicit_step(m: &RateMatrix, dt: f64) -> Result<Factorization> {
    let n = m.dim();
    let a = DMatrix::identity(n, n) - m.to_dmatrix() * dt;
    Factorization::new(a, 1e-15).ok_or_else(|| Error::StepRejected(format!("singular implicit system at dt = {dt:e}")))
}

fn advance(step: &Factorization, p: &PopulationVector) -> Result<PopulationVector> {
    let b = DVector::from_column_slice(p.probs());
    let x = step
        .solve(&b)
        .ok_or_else(|| Error::StepRejected("implicit solve failed".into()))?;
    Ok(PopulationVector::from_raw(x.iter().copied().collect(), p.layout()))
}

/// Integrates `dP/dt = M P` from `p0` to `t_final` (ns) with backward Euler at
/// step `dt`, renormalising after every step. The final step is shortened to
/// land on `t_final`.
pub fn time_evolve(m: &RateMatrix, p0: &PopulationVector, t_final: f64, dt: f64) -> Result<PopulationVector> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_final must be >= 0, got {t_final}")));
    }
    if p0.layout() != m.layout() {
        return Err(Error::InvalidArgument(
            "initial populations do not match the matrix layout".into(),
        ));
    }
    let full = (t_final / dt).floor();
    let rest = t_final - full * dt;
    let mut p = p0.clone();
    if full > 0.0 {
        let step = implicit_step(m, dt)?;
        for _ in 0..full as u64 {
            p = advance(&step, &p)?;
        }
    }
    if rest > 1e-12 * dt {
        p = advance(&implicit_step(m, rest)?, &p)?;
    }
    Ok(p)
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidArgument("rates must be finite and >= 0".into()));
    }
    if rates.iter().all(|r| *r == 0.0) {
        return Err(Error::DegenerateSystem);
    }
    Ok(())
}

/// Closed-form stationary state of the first-diamond system
/// `{|0R>, |0L>, |1R>}`: LZS pumping `0R <-> 0L` and `0L <-> 1R`, relaxation
/// `1R -> 0R` and `0L -> 0R`. Returns `(P_0R, P_0L, P_1R)`.
///
/// Non-unique cases resolve as the long-time limit from `|0R>`.
pub fn stationary_eq7(w_0r0l: f64, w_0l1r: f64, g_1r0r: f64, g_0l0r: f64) -> Result<(f64, f64, f64)> {
    check_rates(&[w_0r0l, w_0l1r, g_1r0r, g_0l0r])?;
    let (wa, wb, g1, g0) = (w_0r0l, w_0l1r, g_1r0r, g_0l0r);
    if wa == 0.0 {
        return Ok((1.0, 0.0, 0.0));
    }
    let b = wb + g1;
    if b == 0.0 {
        // |1R> is unreachable; two-state balance between 0R and 0L
        let den = 2.0 * wa + g0;
        return Ok(((wa + g0) / den, wa / den, 0.0));
    }
    // spanning-tree weights
    let p0r = (wa + g0) * b + wb * g1;
    let p0l = wa * b;
    let p1r = wa * wb;
    let total = p0r + p0l + p1r;
    Ok((p0r / total, p0l / total, p1r / total))
}

/// Closed-form stationary state of the second-diamond system
/// `{|0R>, |0L>, |1R>, |1L>}`: LZS pumping `0R <-> 1L` and `0L <-> 1R`,
/// relaxation `1R -> 0R`, `0L -> 0R` and `1L -> 0L`.
/// Returns `(P_0R, P_0L, P_1R, P_1L)`.
pub fn stationary_eq8(w_0r1l: f64, w_0l1r: f64, g_1r0r: f64, g_0l0r: f64, g_1l0l: f64) -> Result<(f64, f64, f64, f64)> {
    check_rates(&[w_0r1l, w_0l1r, g_1r0r, g_0l0r, g_1l0l])?;
    let (wc, wb, g1, g0, g2) = (w_0r1l, w_0l1r, g_1r0r, g_0l0r, g_1l0l);
    if wc == 0.0 {
        return Ok((1.0, 0.0, 0.0, 0.0));
    }
    if g2 == 0.0 {
        // 0L and 1R are unreachable from the {0R, 1L} pair
        return Ok((0.5, 0.0, 0.0, 0.5));
    }
    let b = wb + g1;
    if b == 0.0 {
        // 1R unreachable; cycle 0R -> 1L -> 0L -> 0R
        let p0r = g0 * (wc + g2);
        let p1l = wc * g0;
        let p0l = wc * g2;
        let total = p0r + p1l + p0l;
        return Ok((p0r / total, p0l / total, 0.0, p1l / total));
    }
    let a = wc + g2;
    let drain = g0 * b + wb * g1;
    let p0r = a * drain;
    let p0l = b * g2 * wc;
    let p1r = wb * g2 * wc;
    let p1l = wc * drain;
    let total = p0r + p0l + p1r + p1l;
    Ok((p0r / total, p0l / total, p1r / total, p1l / total))
}
