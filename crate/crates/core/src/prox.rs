//! Closed-form proximal operators, Moreau envelopes, and the prox-linear
//! model used to smooth composite objectives.

use serde::{Deserialize, Serialize};

use crate::apg::ProxOperator;
use crate::error::{param, Result};
use crate::linalg::Mat;
use crate::problem::{Objective, ProblemInstance, Regularizer, VectorMap};
use crate::scalar::{clamp, lit, Scalar};

/// Convex outer function of a composite objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Outer {
    /// `‖u‖₁`
    L1,
    /// `|u|` on a scalar argument.
    Abs,
    /// `‖u₁‖₁ + δ_{0}(u₂)` where `u₁` is the first `l1_len` entries.
    L1ZeroIndicator { l1_len: usize },
}

impl Outer {
    pub(crate) fn check_dim(&self, p: usize) -> std::result::Result<(), String> {
        match *self {
            Outer::Abs if p != 1 => Err(format!("abs outer needs a scalar inner map, got p = {p}")),
            Outer::L1ZeroIndicator { l1_len } if l1_len > p => {
                Err(format!("l1 block length {l1_len} exceeds inner dimension {p}"))
            }
            _ => Ok(()),
        }
    }

    /// `l(u)`; `+∞` off the domain of the indicator part.
    pub fn value<T: Scalar>(&self, u: &[T]) -> T {
        match *self {
            Outer::L1 | Outer::Abs => u.iter().map(|v| v.abs()).sum(),
            Outer::L1ZeroIndicator { l1_len } => {
                if u[l1_len..].iter().any(|v| *v != T::zero()) {
                    T::infinity()
                } else {
                    u[..l1_len].iter().map(|v| v.abs()).sum()
                }
            }
        }
    }

    /// `prox_{t·l}(u)`
    pub fn prox<T: Scalar>(&self, u: &[T], t: T, out: &mut [T]) {
        match *self {
            Outer::L1 | Outer::Abs => {
                for (o, &v) in out.iter_mut().zip(u) {
                    *o = soft_threshold(v, t);
                }
            }
            Outer::L1ZeroIndicator { l1_len } => {
                for (i, (o, &v)) in out.iter_mut().zip(u).enumerate() {
                    *o = if i < l1_len { soft_threshold(v, t) } else { T::zero() };
                }
            }
        }
    }

    /// One element of `∂l(u)`: signs on the ℓ1 block, zero elsewhere.
    pub fn subgradient<T: Scalar>(&self, u: &[T], out: &mut [T]) {
        let l1_len = match *self {
            Outer::L1ZeroIndicator { l1_len } => l1_len,
            _ => u.len(),
        };
        for (i, (o, &v)) in out.iter_mut().zip(u).enumerate() {
            *o = if i < l1_len && v != T::zero() { v.signum() } else { T::zero() };
        }
    }

    /// Lipschitz constant of the finite part for a `p`-dimensional argument.
    pub fn lipschitz<T: Scalar>(&self, p: usize) -> T {
        match *self {
            Outer::L1 => T::from_usize_lossy(p).sqrt(),
            Outer::Abs => T::one(),
            Outer::L1ZeroIndicator { l1_len } => T::from_usize_lossy(l1_len).sqrt(),
        }
    }
}

#[inline]
fn soft_threshold<T: Scalar>(v: T, t: T) -> T {
    let m = v.abs() - t;
    if m > T::zero() {
        v.signum() * m
    } else {
        T::zero()
    }
}

/// `prox` of `t·(λ‖·‖₁ + δ_box)`: soft-threshold then clamp, componentwise.
pub fn prox_box_l1<T: Scalar>(u: &[T], t: T, lambda: T, lower: &[T], upper: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); u.len()];
    prox_box_l1_into(u, t, lambda, lower, upper, &mut out);
    out
}

pub(crate) fn prox_box_l1_into<T: Scalar>(
    u: &[T],
    t: T,
    lambda: T,
    lower: &[T],
    upper: &[T],
    out: &mut [T],
) {
    let thr = t * lambda;
    for (i, o) in out.iter_mut().enumerate() {
        let v = if thr > T::zero() {
            soft_threshold(u[i], thr)
        } else {
            u[i]
        };
        *o = clamp(v, lower[i], upper[i]);
    }
}

/// `prox` of `t·(h + (ρ/2)‖· − x̄‖²)`, reduced to a prox of `h` by rescaling.
pub fn prox_shifted<T: Scalar>(u: &[T], t: T, rho: T, anchor: &[T], base: &Regularizer<T>) -> Vec<T> {
    let mut out = vec![T::zero(); u.len()];
    prox_shifted_into(u, t, rho, anchor, base, &mut out);
    out
}

pub(crate) fn prox_shifted_into<T: Scalar>(
    u: &[T],
    t: T,
    rho: T,
    anchor: &[T],
    base: &Regularizer<T>,
    out: &mut [T],
) {
    let denom = T::one() + t * rho;
    let t_eff = t / denom;
    for (o, (&ui, &ai)) in out.iter_mut().zip(u.iter().zip(anchor)) {
        *o = (ui + t * rho * ai) / denom;
    }
    // soft-threshold/clamp in place
    let thr = t_eff * base.lambda;
    for (i, o) in out.iter_mut().enumerate() {
        let v = if thr > T::zero() { soft_threshold(*o, thr) } else { *o };
        *o = clamp(v, base.lower[i], base.upper[i]);
    }
}

/// `h̃(x) = h(x) + (weight/2)‖x − anchor‖²`, the strongly convex prox part of
/// a proximal subproblem.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedRegularizer<'a, T> {
    pub base: &'a Regularizer<T>,
    pub anchor: &'a [T],
    pub weight: T,
}

impl<'a, T: Scalar> ShiftedRegularizer<'a, T> {
    pub fn value(&self, x: &[T]) -> Result<T> {
        let h = self.base.value(x)?;
        let q: T = x
            .iter()
            .zip(self.anchor)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        Ok(h + lit::<T>(0.5) * self.weight * q)
    }
}

impl<'a, T: Scalar> ProxOperator<T> for ShiftedRegularizer<'a, T> {
    fn prox(&self, u: &[T], step: T, out: &mut [T]) {
        prox_shifted_into(u, step, self.weight, self.anchor, self.base, out);
    }

    fn strong_convexity(&self) -> T {
        self.weight
    }
}

/// Huber function `y²/(2ν)` for `|y| ≤ ν`, else `|y| − ν/2`.
#[inline]
pub fn huber<T: Scalar>(y: T, nu: T) -> T {
    let a = y.abs();
    if a <= nu {
        y * y / (lit::<T>(2.0) * nu)
    } else {
        a - lit::<T>(0.5) * nu
    }
}

/// Moreau envelope of `‖·‖₁` with its gradient.
pub fn moreau_l1<T: Scalar>(u: &[T], nu: T) -> (T, Vec<T>) {
    let value = u.iter().map(|&y| huber(y, nu)).sum();
    let grad = u.iter().map(|&y| clamp(y / nu, -T::one(), T::one())).collect();
    (value, grad)
}

/// Moreau envelope of an outer function through the prox identity:
/// `l^ν(u) = l(p) + ‖u − p‖²/(2ν)`, `∇l^ν(u) = (u − p)/ν` with `p = prox_{νl}(u)`.
pub fn moreau<T: Scalar>(outer: Outer, u: &[T], nu: T) -> (T, Vec<T>) {
    if matches!(outer, Outer::L1 | Outer::Abs) {
        return moreau_l1(u, nu);
    }
    let mut p = vec![T::zero(); u.len()];
    outer.prox(u, nu, &mut p);
    let mut sq = T::zero();
    let grad = u
        .iter()
        .zip(&p)
        .map(|(&a, &b)| {
            let d = a - b;
            sq += d * d;
            d / nu
        })
        .collect();
    (outer.value(&p) + sq / (lit::<T>(2.0) * nu), grad)
}

/// Moreau-smoothed outer function `l^ν`.
#[derive(Clone, Copy, Debug)]
pub struct SmoothedOuter<T> {
    pub outer: Outer,
    pub nu: T,
}

impl<T: Scalar> SmoothedOuter<T> {
    pub fn new(outer: Outer, nu: T) -> Result<Self> {
        if !(nu > T::zero()) {
            return Err(param(format!("smoothing parameter must be positive, got {nu}")));
        }
        Ok(Self { outer, nu })
    }

    pub fn value_grad(&self, u: &[T]) -> (T, Vec<T>) {
        moreau(self.outer, u, self.nu)
    }
}

/// Linearization `u(x) = c(x̄) + J_c(x̄)(x − x̄)` of the inner map at an anchor.
#[derive(Clone, Debug)]
pub struct ProxLinearModel<T> {
    pub anchor: Vec<T>,
    pub c_anchor: Vec<T>,
    pub jac_anchor: Mat<T>,
}

impl<T: Scalar> ProxLinearModel<T> {
    pub fn from_map(map: &dyn VectorMap<T>, anchor: &[T]) -> Self {
        let p = map.output_dim();
        let mut c = vec![T::zero(); p];
        let mut j = Mat::zeros(p, anchor.len());
        map.eval(anchor, &mut c, Some(&mut j));
        Self {
            anchor: anchor.to_vec(),
            c_anchor: c,
            jac_anchor: j,
        }
    }

    /// `u(x)`
    pub fn linearized(&self, x: &[T]) -> Vec<T> {
        let dx: Vec<T> = x.iter().zip(&self.anchor).map(|(&a, &b)| a - b).collect();
        let mut u = self.jac_anchor.mul_vec(&dx);
        for (ui, &ci) in u.iter_mut().zip(&self.c_anchor) {
            *ui += ci;
        }
        u
    }

    /// Prox-linear value `f⁰(x; x̄) = l(u(x))`.
    pub fn model_value(&self, outer: Outer, x: &[T]) -> T {
        outer.value(&self.linearized(x))
    }
}

/// Caches `c(x̄)` and `J_c(x̄)` for a composite objective.
pub fn build_prox_linear<T: Scalar>(inst: &ProblemInstance<T>, anchor: &[T]) -> Result<ProxLinearModel<T>> {
    inst.check_dim("prox-linear anchor", anchor)?;
    match &inst.objective {
        Objective::Composite { inner, .. } => Ok(ProxLinearModel::from_map(inner.as_ref(), anchor)),
        other => Err(crate::error::Error::Usage(format!(
            "prox-linear model needs a composite objective, got {}",
            other.name()
        ))),
    }
}

/// `f^ν(x; x̄) = l^ν(u(x))` and its gradient `J_c(x̄)ᵀ∇l^ν(u(x))`.
pub fn smoothed_composite_value_grad<T: Scalar>(
    model: &ProxLinearModel<T>,
    outer: &SmoothedOuter<T>,
    x: &[T],
) -> (T, Vec<T>) {
    let u = model.linearized(x);
    let (v, gu) = outer.value_grad(&u);
    (v, model.jac_anchor.mul_t_vec(&gu))
}
