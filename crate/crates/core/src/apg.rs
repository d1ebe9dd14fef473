//! Accelerated proximal gradient with backtracking and estimate sequences,
//! for `min φ = f̃ + h̃` with convex smooth `f̃` and `μ`-strongly convex `h̃`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{dot, norm, norm_sq};
use crate::problem::SmoothFunction;
use crate::scalar::{lit, Scalar};

/// Proximal operator of a strongly convex function `h̃`.
pub trait ProxOperator<T> {
    /// Writes `prox_{step·h̃}(u)` into `out`.
    fn prox(&self, u: &[T], step: T, out: &mut [T]);
    fn strong_convexity(&self) -> T;
}

const DIVERGENCE_LIMIT: f64 = 1e30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ApgConfig<T> {
    /// Initial smoothness guess `L₀`.
    pub l0: T,
    /// Backtracking increase factor `γ_u > 1`.
    pub gamma_u: T,
    /// Between-iteration decrease factor `γ_d ≥ γ_u`.
    pub gamma_d: T,
    /// Target certificate norm `Δ`.
    pub delta: T,
    pub max_iters: usize,
}

impl<T: Scalar> Default for ApgConfig<T> {
    fn default() -> Self {
        Self {
            l0: T::one(),
            gamma_u: lit(3.0),
            gamma_d: lit(5.0),
            delta: lit(1e-6),
            max_iters: 1_000_000,
        }
    }
}

impl<T: Scalar> ApgConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.l0 > T::zero()) || !self.l0.is_finite() {
            return Err(param(format!("L₀ must be positive, got {}", self.l0)));
        }
        if !(self.gamma_u > T::one()) {
            return Err(param(format!("γ_u must exceed 1, got {}", self.gamma_u)));
        }
        if !(self.gamma_d >= self.gamma_u) {
            return Err(param(format!(
                "γ_d must be at least γ_u, got γ_d = {} < γ_u = {}",
                self.gamma_d, self.gamma_u
            )));
        }
        if !(self.delta > T::zero()) {
            return Err(param(format!("Δ must be positive, got {}", self.delta)));
        }
        Ok(())
    }

    /// Sets `max_iters` to ten times the iteration cap for known `(L, μ, D)`.
    pub fn with_cap_from(mut self, lipschitz: T, mu: T, diameter: T) -> Result<Self> {
        let cap = apg_iteration_cap(lipschitz, mu, diameter, self.delta, self.gamma_u)?;
        self.max_iters = cap.saturating_mul(10);
        Ok(self)
    }
}

#[derive(Clone, Debug)]
pub struct ApgState<T> {
    pub t: usize,
    /// `A_t`
    pub a_sum: T,
    pub x: Vec<T>,
    pub v: Vec<T>,
    pub y: Vec<T>,
    /// Current trial smoothness estimate.
    pub l: T,
    /// `s_t = Σ a_i ∇f̃(x^i)`
    pub s: Vec<T>,
    pub x0: Vec<T>,
}

impl<T: Scalar> ApgState<T> {
    pub fn new(x0: &[T], l0: T) -> Self {
        Self {
            t: 0,
            a_sum: T::zero(),
            x: x0.to_vec(),
            v: x0.to_vec(),
            y: x0.to_vec(),
            l: l0,
            s: vec![T::zero(); x0.len()],
            x0: x0.to_vec(),
        }
    }
}

/// Positive root of `a²/(A + a) = γ` with `γ = 2(1 + μA)/L`.
pub fn accel_coefficient<T: Scalar>(a_sum: T, mu: T, l: T) -> T {
    let gamma = lit::<T>(2.0) * (T::one() + mu * a_sum) / l;
    let disc = (gamma * gamma + lit::<T>(4.0) * gamma * a_sum).sqrt();
    lit::<T>(0.5) * (gamma + disc)
}

/// `φ'(M) = L(y − M) + ∇f̃(M) − ∇f̃(y)`
fn certificate_from<T: Scalar>(y: &[T], m: &[T], l: T, grad_m: &[T], grad_y: &[T]) -> Vec<T> {
    (0..y.len())
        .map(|i| l * (y[i] - m[i]) + grad_m[i] - grad_y[i])
        .collect()
}

/// `M_L(y) = prox_{h̃/L}(y − ∇f̃(y)/L)` and `φ'(M_L(y))`.
pub fn gradient_map<T: Scalar>(
    f: &dyn SmoothFunction<T>,
    prox: &dyn ProxOperator<T>,
    y: &[T],
    l: T,
) -> (Vec<T>, Vec<T>) {
    let n = y.len();
    let mut gy = vec![T::zero(); n];
    f.gradient(y, &mut gy);
    let (m, gm) = map_point(f, prox, y, &gy, l);
    let w = certificate_from(y, &m, l, &gm, &gy);
    (m, w)
}

fn map_point<T: Scalar>(
    f: &dyn SmoothFunction<T>,
    prox: &dyn ProxOperator<T>,
    y: &[T],
    grad_y: &[T],
    l: T,
) -> (Vec<T>, Vec<T>) {
    let n = y.len();
    let u: Vec<T> = y.iter().zip(grad_y).map(|(&yi, &gi)| yi - gi / l).collect();
    let mut m = vec![T::zero(); n];
    prox.prox(&u, T::one() / l, &mut m);
    let mut gm = vec![T::zero(); n];
    f.gradient(&m, &mut gm);
    (m, gm)
}

/// `∇f̃(x⁺) − ∇f̃(y) − L(x⁺ − y)`, an element of `∂φ(x⁺)` when `x⁺ = M_L(y)`.
pub fn stationarity_certificate<T: Scalar>(
    f: &dyn SmoothFunction<T>,
    x_next: &[T],
    y: &[T],
    l: T,
) -> Vec<T> {
    let mut gx = vec![T::zero(); x_next.len()];
    let mut gy = vec![T::zero(); y.len()];
    f.gradient(x_next, &mut gx);
    f.gradient(y, &mut gy);
    certificate_from(y, x_next, l, &gx, &gy)
}

/// Accepted backtracking step.
#[derive(Clone, Debug)]
pub struct LineSearchStep<T> {
    /// Accepted `L_{t+1}`.
    pub l: T,
    pub y: Vec<T>,
    pub x_next: Vec<T>,
    pub a: T,
    /// `∇f̃(x^{t+1})`
    pub grad_next: Vec<T>,
    /// `φ'(x^{t+1})`
    pub certificate: Vec<T>,
    pub backtracks: usize,
    pub grad_evals: usize,
}

/// Finds `L` with `⟨φ'(M_L(y)), y − M_L(y)⟩ ≥ ‖φ'(M_L(y))‖²/L`, re-solving
/// `a` and recomputing `y` for every trial.
pub fn line_search_step<T: Scalar>(
    state: &ApgState<T>,
    f: &dyn SmoothFunction<T>,
    prox: &dyn ProxOperator<T>,
    mu: T,
    gamma_u: T,
) -> Result<LineSearchStep<T>> {
    let n = state.x.len();
    let mut l = state.l;
    let mut grad_evals = 0;
    let mut backtracks = 0;
    let limit = lit::<T>(DIVERGENCE_LIMIT);
    let mut gy = vec![T::zero(); n];
    loop {
        if !(l <= limit) {
            return Err(Error::Divergence {
                estimate: l.to_f64_lossy(),
            });
        }
        let a = accel_coefficient(state.a_sum, mu, l);
        let denom = state.a_sum + a;
        let y: Vec<T> = (0..n)
            .map(|i| (state.a_sum * state.x[i] + a * state.v[i]) / denom)
            .collect();
        f.gradient(&y, &mut gy);
        let (m, gm) = map_point(f, prox, &y, &gy, l);
        grad_evals += 2;
        let w = certificate_from(&y, &m, l, &gm, &gy);
        let diff: Vec<T> = y.iter().zip(&m).map(|(&a, &b)| a - b).collect();
        if dot(&w, &diff) >= norm_sq(&w) / l {
            return Ok(LineSearchStep {
                l,
                y,
                x_next: m,
                a,
                grad_next: gm,
                certificate: w,
                backtracks,
                grad_evals,
            });
        }
        l *= gamma_u;
        backtracks += 1;
    }
}

/// `s ← s + a∇f̃(x^{t+1})`, `A ← A + a`, `v = prox_{A·h̃}(x⁰ − s)`.
pub fn estimate_seq_update<T: Scalar>(
    state: &mut ApgState<T>,
    a: T,
    grad_next: &[T],
    prox: &dyn ProxOperator<T>,
) {
    for (si, &gi) in state.s.iter_mut().zip(grad_next) {
        *si += a * gi;
    }
    state.a_sum += a;
    let u: Vec<T> = state.x0.iter().zip(&state.s).map(|(&x, &s)| x - s).collect();
    prox.prox(&u, state.a_sum, &mut state.v);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ApgStats<T> {
    pub iters: usize,
    pub grad_evals: usize,
    pub backtracks: usize,
    /// Last accepted smoothness estimate.
    pub final_l: T,
    /// `‖w‖ ≤ Δ` reached (as opposed to hitting `max_iters`).
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct ApgOutput<T> {
    pub x: Vec<T>,
    pub w: Vec<T>,
    pub stats: ApgStats<T>,
}

/// Per-iteration view passed to observers.
pub struct ApgIterate<'a, T> {
    pub t: usize,
    pub x: &'a [T],
    pub l: T,
    pub a_sum: T,
    pub certificate_norm: T,
}

pub fn apg_minimize<T: Scalar>(
    f: &dyn SmoothFunction<T>,
    prox: &dyn ProxOperator<T>,
    mu: T,
    x0: &[T],
    cfg: &ApgConfig<T>,
) -> Result<ApgOutput<T>> {
    apg_minimize_observed(f, prox, mu, x0, cfg, |_| {})
}

/// As [`apg_minimize`], calling `observe` after every accepted step.
pub fn apg_minimize_observed<T: Scalar, O>(
    f: &dyn SmoothFunction<T>,
    prox: &dyn ProxOperator<T>,
    mu: T,
    x0: &[T],
    cfg: &ApgConfig<T>,
    mut observe: O,
) -> Result<ApgOutput<T>>
where
    O: FnMut(&ApgIterate<'_, T>),
{
    cfg.validate()?;
    if !(mu > T::zero()) {
        return Err(param(format!("strong convexity μ must be positive, got {mu}")));
    }
    let mut state = ApgState::new(x0, cfg.l0);
    let mut stats = ApgStats {
        final_l: cfg.l0,
        ..ApgStats::default()
    };
    let mut w = vec![T::infinity(); x0.len()];
    while stats.iters < cfg.max_iters {
        let step = line_search_step(&state, f, prox, mu, cfg.gamma_u)?;
        stats.iters += 1;
        stats.grad_evals += step.grad_evals;
        stats.backtracks += step.backtracks;
        stats.final_l = step.l;

        estimate_seq_update(&mut state, step.a, &step.grad_next, prox);
        state.x = step.x_next;
        state.y = step.y;
        state.t += 1;
        state.l = step.l / cfg.gamma_d;
        w = step.certificate;

        let wn = norm(&w);
        observe(&ApgIterate {
            t: state.t,
            x: &state.x,
            l: step.l,
            a_sum: state.a_sum,
            certificate_norm: wn,
        });
        if wn <= cfg.delta {
            stats.converged = true;
            break;
        }
    }
    Ok(ApgOutput {
        x: state.x,
        w,
        stats,
    })
}

/// `⌈max{1/ln 2, 2√(γ_u L/(2μ))}·ln(3(1+γ_u)·D·L·√(2γ_u L/μ)/(2Δ))⌉ + 1`, at least 1.
pub fn apg_iteration_cap<T: Scalar>(lipschitz: T, mu: T, diameter: T, delta: T, gamma_u: T) -> Result<usize> {
    let (l, mu, d, delta, g) = (
        lipschitz.to_f64_lossy(),
        mu.to_f64_lossy(),
        diameter.to_f64_lossy(),
        delta.to_f64_lossy(),
        gamma_u.to_f64_lossy(),
    );
    if !(l > 0.0 && mu > 0.0 && delta > 0.0 && g > 0.0) {
        return Err(param("iteration cap needs positive L, μ, Δ and γ_u"));
    }
    let arg = 3.0 * (1.0 + g) * d * l * (2.0 * g * l / mu).sqrt() / (2.0 * delta);
    if !(arg > 0.0) {
        return Err(param(format!("iteration cap log argument must be positive, got {arg}")));
    }
    let lead = (1.0 / std::f64::consts::LN_2).max(2.0 * (g * l / (2.0 * mu)).sqrt());
    let t = (lead * arg.ln()).ceil() + 1.0;
    Ok(if t < 1.0 { 1 } else { t as usize })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{QuadraticFunction, Regularizer};
    use crate::linalg::Mat;
    use crate::prox::ShiftedRegularizer;
    use approx::assert_abs_diff_eq;

    /// `h̃ = δ_box + (μ/2)‖·‖²` with anchor 0.
    fn boxed(reg: &Regularizer<f64>, zero: &[f64], mu: f64) -> ShiftedRegularizer<'static, f64> {
        let reg: &'static Regularizer<f64> = Box::leak(Box::new(reg.clone()));
        let zero: &'static [f64] = Box::leak(zero.to_vec().into_boxed_slice());
        ShiftedRegularizer {
            base: reg,
            anchor: zero,
            weight: mu,
        }
    }

    #[test]
    fn accel_coefficient_examples() {
        assert_abs_diff_eq!(accel_coefficient(0.0, 1.0, 2.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(accel_coefficient(0.0, 1.0, 8.0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(accel_coefficient(1.0, 1.0, 2.0), 1.0 + 3f64.sqrt(), epsilon = 1e-14);
        let (a_sum, mu, l) = (3.7f64, 0.4, 11.0);
        let a = accel_coefficient(a_sum, mu, l);
        let gamma = 2.0 * (1.0 + mu * a_sum) / l;
        assert!((a * a / (a_sum + a) - gamma).abs() <= 1e-12 * gamma);
    }

    #[test]
    fn gradient_map_examples() {
        // φ = ½x², h̃ = 0 (strong convexity lives in f̃ here)
        let f = QuadraticFunction {
            q: Mat::identity(1),
            c: vec![0.0],
        };
        let free = Regularizer::free(1);
        let h = boxed(&free, &[0.0], 0.0);
        let (m, w) = gradient_map(&f, &h, &[1.0], 1.0);
        assert_eq!((m[0], w[0]), (0.0, 0.0));

        // φ = ½(x − 3)² + δ_[0,2]
        let f = QuadraticFunction {
            q: Mat::identity(1),
            c: vec![-3.0],
        };
        let bx = Regularizer::uniform_box(1, 0.0, 2.0);
        let h = boxed(&bx, &[0.0], 0.0);
        let (m, w) = gradient_map(&f, &h, &[0.0], 1.0);
        assert_eq!((m[0], w[0]), (2.0, 0.0));
    }

    #[test]
    fn certificate_examples() {
        let f = QuadraticFunction {
            q: Mat::diag(&[2.5]),
            c: vec![1.0],
        };
        assert_eq!(stationarity_certificate(&f, &[0.7], &[0.7], 3.0), vec![0.0]);
        let w = stationarity_certificate(&f, &[1.0], &[0.2], 4.0);
        assert_abs_diff_eq!(w[0], (2.5 - 4.0) * (1.0 - 0.2), epsilon = 1e-14);
    }

    #[test]
    fn iteration_cap_examples() {
        assert_eq!(apg_iteration_cap(2.0, 1.0, 1.0, 0.1, 2.0).unwrap(), 17);
        assert_eq!(apg_iteration_cap(8.0, 1.0, 1.0, 0.1, 2.0).unwrap(), 45);
        // Δ set so the log argument is exactly 1
        let num = 3.0 * 3.0 * 2.0 * (2.0f64 * 2.0 * 2.0).sqrt();
        assert_eq!(apg_iteration_cap(2.0, 1.0, 1.0, num / 2.0, 2.0).unwrap(), 1);
        assert!(apg_iteration_cap(2.0, 0.0, 1.0, 0.1, 2.0).is_err());
        assert!(apg_iteration_cap(2.0, 1.0, 0.0, 0.1, 2.0).is_err());
    }

    #[test]
    fn clamped_quadratic_converges() {
        // ½(x − 3)² = ½x² − 3x (+ const); μ lives in h̃ = δ_[0,2] + ½x².
        let f = QuadraticFunction {
            q: Mat::zeros(1, 1),
            c: vec![-3.0],
        };
        let bx = Regularizer::uniform_box(1, 0.0, 2.0);
        let h = boxed(&bx, &[0.0], 1.0);
        let cfg = ApgConfig {
            delta: 1e-8,
            ..ApgConfig::default()
        };
        let out = apg_minimize(&f, &h, 1.0, &[0.0], &cfg).unwrap();
        assert!(out.stats.converged);
        assert_abs_diff_eq!(out.x[0], 2.0, epsilon = 1e-6);
        assert!(norm(&out.w) <= 1e-8);
    }

    #[test]
    fn unconstrained_quadratic_monotone_distance() {
        // ½(x − 3)² as linear f̃ plus ½x² in h̃
        let f = QuadraticFunction {
            q: Mat::zeros(1, 1),
            c: vec![-3.0],
        };
        let free = Regularizer::free(1);
        let h = boxed(&free, &[0.0], 1.0);
        let cfg = ApgConfig {
            l0: 1.0,
            delta: 1e-10,
            ..ApgConfig::default()
        };
        let mut dists = Vec::new();
        apg_minimize_observed(&f, &h, 1.0, &[0.0], &cfg, |it| dists.push((it.x[0] - 3.0).abs())).unwrap();
        assert!(dists.windows(2).all(|p| p[1] <= p[0] + 1e-15));
        assert!(*dists.last().unwrap() < 1e-8);
    }

    #[test]
    fn zero_backtracks_from_true_lipschitz() {
        let f = QuadraticFunction {
            q: Mat::diag(&[4.0, 1.0]),
            c: vec![1.0, -1.0],
        };
        let bx = Regularizer::uniform_box(2, -1.0, 1.0);
        let h = boxed(&bx, &[0.0, 0.0], 1.0);
        let state = ApgState::new(&[0.5, 0.5], 4.0);
        let step = line_search_step(&state, &f, &h, 1.0, 2.0).unwrap();
        assert_eq!(step.backtracks, 0);
        let state = ApgState::new(&[0.5, 0.5], 0.5);
        let step = line_search_step(&state, &f, &h, 1.0, 2.0).unwrap();
        assert!(step.backtracks <= 3);
    }

    #[test]
    fn broken_oracle_ends_in_divergence_error() {
        let f = crate::problem::FnSmooth {
            value: |_: &[f64]| 0.0,
            gradient: |_: &[f64], g: &mut [f64]| g[0] = f64::NAN,
        };
        let free = Regularizer::free(1);
        let h = boxed(&free, &[0.0], 1.0);
        let r = apg_minimize(&f, &h, 1.0, &[1.0], &ApgConfig::default());
        assert!(matches!(r, Err(Error::Divergence { .. })), "{r:?}");
    }

    #[test]
    fn estimate_sequence_examples() {
        let free = Regularizer::free(1);
        let h = boxed(&free, &[0.0], 0.0);
        let mut st = ApgState::new(&[1.0], 1.0);
        estimate_seq_update(&mut st, 2.0, &[0.5], &h);
        assert_eq!(st.v, vec![0.0]);
        let bx = Regularizer::uniform_box(1, 0.0, 2.0);
        let h = boxed(&bx, &[0.0], 0.0);
        let mut st = ApgState::new(&[0.0], 1.0);
        estimate_seq_update(&mut st, 1.0, &[-5.0], &h);
        assert_eq!(st.v, vec![2.0]);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = ApgConfig {
            gamma_d: 2.0,
            gamma_u: 3.0,
            ..ApgConfig::<f64>::default()
        };
        assert!(cfg.validate().is_err());
    }
}
