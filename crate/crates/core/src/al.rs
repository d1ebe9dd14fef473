//! Augmented Lagrangian evaluation, proximal-AL subproblem assembly, dual
//! candidates, and KKT residuals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{norm, norm_sq, Mat};
use crate::problem::{Objective, ProblemInstance, SmoothFunction};
use crate::prox::{smoothed_composite_value_grad, ProxLinearModel, ShiftedRegularizer, SmoothedOuter};
use crate::scalar::{lit, pos, Scalar};

/// Multipliers for `Ax = b` (`y`) and `g(x) ≤ 0` (`z ≥ 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualState<T> {
    pub y: Vec<T>,
    pub z: Vec<T>,
}

impl<T: Scalar> DualState<T> {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            y: vec![T::zero(); n],
            z: vec![T::zero(); m],
        }
    }

    pub fn for_instance(inst: &ProblemInstance<T>) -> Self {
        Self::zeros(inst.affine.len(), inst.ineq.len())
    }

    pub(crate) fn check(&self, inst: &ProblemInstance<T>) -> Result<()> {
        if self.y.len() != inst.affine.len() {
            return Err(Error::Dimension {
                what: "equality multiplier y",
                expected: inst.affine.len(),
                got: self.y.len(),
            });
        }
        if self.z.len() != inst.ineq.len() {
            return Err(Error::Dimension {
                what: "inequality multiplier z",
                expected: inst.ineq.len(),
                got: self.z.len(),
            });
        }
        Ok(())
    }
}

/// Which subproblem model to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Smooth objective, solved by APG.
    I,
    /// Composite objective, smoothed prox-linear model solved by APG.
    II,
    /// General weakly-convex objective, solved by a proximal subgradient loop.
    III,
}

impl Case {
    pub fn for_objective<T>(obj: &Objective<T>) -> Case {
        match obj {
            Objective::Smooth { .. } => Case::I,
            Objective::Composite { .. } => Case::II,
            Objective::General { .. } => Case::III,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
        })
    }
}

impl FromStr for Case {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "I" | "i" | "1" => Ok(Case::I),
            "II" | "ii" | "2" => Ok(Case::II),
            "III" | "iii" | "3" => Ok(Case::III),
            _ => Err(format!("unknown case {s:?}, expected I, II or III")),
        }
    }
}

/// `yᵀr + (β/2)‖r‖² + (β/2)‖[g + z/β]₊‖² − ‖z‖²/(2β)` with `r = Ax − b`,
/// optionally accumulating its gradient `Aᵀ(y + βr) + J_gᵀ[z + βg]₊` into `grad`.
fn constraint_terms<T: Scalar>(
    inst: &ProblemInstance<T>,
    x: &[T],
    dual: &DualState<T>,
    beta: T,
    grad: Option<&mut [T]>,
) -> T {
    let half = lit::<T>(0.5);
    let mut value = T::zero();
    let mut grad = grad;

    if !inst.affine.is_empty() {
        let r = inst.affine.residual(x);
        let mut w = Vec::with_capacity(r.len());
        for (&ri, &yi) in r.iter().zip(&dual.y) {
            value += yi * ri + half * beta * ri * ri;
            w.push(yi + beta * ri);
        }
        if let Some(g) = grad.as_deref_mut() {
            inst.affine.a.mul_t_vec_add(T::one(), &w, g);
        }
    }

    if !inst.ineq.is_empty() {
        let (g, jac) = if grad.is_some() {
            let (g, j) = inst.ineq.values_and_jacobian(x);
            (g, Some(j))
        } else {
            (inst.ineq.values(x), None)
        };
        let mut w = Vec::with_capacity(g.len());
        for (&gi, &zi) in g.iter().zip(&dual.z) {
            let s = pos(gi + zi / beta);
            value += half * beta * s * s - zi * zi / (lit::<T>(2.0) * beta);
            w.push(beta * s);
        }
        if let (Some(out), Some(j)) = (grad, jac) {
            j.mul_t_vec_add(T::one(), &w, out);
        }
    }
    value
}

/// `L_β(x; y, z) = F(x) + yᵀ(Ax − b) + (β/2)‖Ax − b‖² + (β/2)‖[g(x) + z/β]₊‖² − ‖z‖²/(2β)`.
pub fn al_value<T: Scalar>(inst: &ProblemInstance<T>, x: &[T], dual: &DualState<T>, beta: T) -> Result<T> {
    inst.check_dim("al_value point", x)?;
    dual.check(inst)?;
    if !(beta > T::zero()) {
        return Err(param(format!("penalty β must be positive, got {beta}")));
    }
    let f = inst.objective_value(x)?;
    Ok(f + constraint_terms(inst, x, dual, beta, None))
}

/// Gradient of the Case I smooth part `L_β + (ρ/2)‖x − x^k‖² − h`.
pub fn al_grad_smooth_part<T: Scalar>(
    inst: &ProblemInstance<T>,
    x: &[T],
    dual: &DualState<T>,
    beta: T,
    anchor: &[T],
    rho: T,
) -> Result<Vec<T>> {
    let Objective::Smooth { f, .. } = &inst.objective else {
        return Err(Error::Usage(format!(
            "smooth-part gradient needs a smooth objective, got {}",
            inst.objective.name()
        )));
    };
    inst.check_dim("al_grad_smooth_part point", x)?;
    inst.check_dim("al_grad_smooth_part anchor", anchor)?;
    dual.check(inst)?;
    let mut g = vec![T::zero(); x.len()];
    f.gradient(x, &mut g);
    constraint_terms(inst, x, dual, beta, Some(&mut g));
    for ((gi, &xi), &ai) in g.iter_mut().zip(x).zip(anchor) {
        *gi += rho * (xi - ai);
    }
    Ok(g)
}

/// Gradient of `J_c(x)ᵀ`-style objective models carried by the smooth part.
enum ObjectiveModel<T> {
    /// `f` itself (Case I).
    Exact,
    /// `l^ν(c(x^k) + J_c(x^k)(x − x^k))` (Case II).
    Smoothed {
        model: ProxLinearModel<T>,
        outer: SmoothedOuter<T>,
    },
    /// Left to a subgradient oracle (Case III).
    Omitted,
}

/// Smooth part of a proximal-AL subproblem: the objective model, the
/// constraint terms of `L_β`, and `(quad/2)‖x − x^k‖²`.
pub struct SmoothPart<'a, T> {
    inst: &'a ProblemInstance<T>,
    dual: &'a DualState<T>,
    beta: T,
    anchor: &'a [T],
    quad: T,
    model: ObjectiveModel<T>,
}

impl<'a, T: Scalar> SmoothPart<'a, T> {
    fn objective_value_grad(&self, x: &[T], grad: Option<&mut [T]>) -> T {
        match (&self.model, &self.inst.objective) {
            (ObjectiveModel::Exact, Objective::Smooth { f, .. }) => {
                if let Some(g) = grad {
                    f.gradient(x, g);
                }
                f.value(x)
            }
            (ObjectiveModel::Smoothed { model, outer }, _) => {
                let (v, gm) = smoothed_composite_value_grad(model, outer, x);
                if let Some(g) = grad {
                    g.copy_from_slice(&gm);
                }
                v
            }
            _ => {
                if let Some(g) = grad {
                    g.iter_mut().for_each(|v| *v = T::zero());
                }
                T::zero()
            }
        }
    }

    fn quad_term(&self, x: &[T], grad: Option<&mut [T]>) -> T {
        let mut sq = T::zero();
        let mut grad = grad;
        for (i, (&xi, &ai)) in x.iter().zip(self.anchor).enumerate() {
            let d = xi - ai;
            sq += d * d;
            if let Some(g) = grad.as_deref_mut() {
                g[i] += self.quad * d;
            }
        }
        lit::<T>(0.5) * self.quad * sq
    }

    pub fn anchor(&self) -> &[T] {
        self.anchor
    }

    /// `J_c(x)ᵀ∇l^ν(c(x)) − ∇f^ν(x; x^k)`: swaps the model gradient for the
    /// gradient of the smoothed objective at `x` itself. `None` outside Case II.
    pub fn model_gradient_correction(&self, x: &[T]) -> Option<Vec<T>> {
        let ObjectiveModel::Smoothed { model, outer } = &self.model else {
            return None;
        };
        let Objective::Composite { inner, .. } = &self.inst.objective else {
            return None;
        };
        let here = ProxLinearModel::from_map(inner.as_ref(), x);
        let (_, g_true) = smoothed_composite_value_grad(&here, outer, x);
        let (_, g_model) = smoothed_composite_value_grad(model, outer, x);
        Some(g_true.iter().zip(&g_model).map(|(&a, &b)| a - b).collect())
    }
}

impl<'a, T: Scalar> SmoothFunction<T> for SmoothPart<'a, T> {
    fn value(&self, x: &[T]) -> T {
        self.objective_value_grad(x, None)
            + constraint_terms(self.inst, x, self.dual, self.beta, None)
            + self.quad_term(x, None)
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        self.objective_value_grad(x, Some(grad));
        constraint_terms(self.inst, x, self.dual, self.beta, Some(grad));
        self.quad_term(x, Some(grad));
    }
}

/// A proximal-AL subproblem split as smooth part plus strongly convex prox part.
pub struct SubproblemSplit<'a, T> {
    pub case: Case,
    pub smooth: SmoothPart<'a, T>,
    pub prox: ShiftedRegularizer<'a, T>,
    /// Strong-convexity modulus of the prox part.
    pub mu: T,
    /// Estimate of the smooth part's gradient Lipschitz constant.
    pub smoothness: T,
}

impl<'a, T: Scalar> SubproblemSplit<'a, T> {
    /// Total weight `c` of the `(c/2)‖x − x^k‖²` terms across both parts.
    pub fn proximal_modulus(&self) -> T {
        self.smooth.quad + self.mu
    }

    /// Subproblem objective (smooth part plus prox part; Case III excludes `f`).
    pub fn value(&self, x: &[T]) -> Result<T> {
        Ok(self.smooth.value(x) + self.prox.value(x)?)
    }
}

/// `√m·L_g·‖z‖ + β(‖AᵀA‖ + m·B_g(B_g + L_g))`
fn constraint_smoothness<T: Scalar>(inst: &ProblemInstance<T>, dual: &DualState<T>, beta: T) -> T {
    let m = T::from_usize_lossy(inst.ineq.len());
    let lg = inst.ineq.smoothness;
    let bg = inst.ineq.bound;
    m.sqrt() * lg * norm(&dual.z) + beta * (inst.affine.ata_norm + m * bg * (bg + lg))
}

/// Builds the subproblem with the default proximal weight `ρ`.
pub fn assemble_subproblem<'a, T: Scalar>(
    case: Case,
    inst: &'a ProblemInstance<T>,
    dual: &'a DualState<T>,
    beta: T,
    anchor: &'a [T],
    nu: T,
) -> Result<SubproblemSplit<'a, T>> {
    assemble_subproblem_weighted(case, inst, dual, beta, anchor, nu, inst.rho)
}

/// Builds the subproblem for a proximal term `p‖x − x^k‖²` (Cases I/III) or
/// `(p/2)‖x − x^k‖²` (Case II). Cases I/III keep `(ρ/2)‖x − x^k‖²` in the
/// smooth part to convexify `f` and put the rest in the prox part, so the
/// prox part is `(2p − ρ)`-strongly convex; `p = ρ` gives the even split.
pub fn assemble_subproblem_weighted<'a, T: Scalar>(
    case: Case,
    inst: &'a ProblemInstance<T>,
    dual: &'a DualState<T>,
    beta: T,
    anchor: &'a [T],
    nu: T,
    prox_weight: T,
) -> Result<SubproblemSplit<'a, T>> {
    inst.check_dim("subproblem anchor", anchor)?;
    dual.check(inst)?;
    if !(beta > T::zero()) {
        return Err(param(format!("penalty β must be positive, got {beta}")));
    }
    let rho = inst.rho;
    let cons = constraint_smoothness(inst, dual, beta);

    let (model, quad, mu, smoothness) = match (case, &inst.objective) {
        (Case::I, Objective::Smooth { lipschitz, .. }) => {
            let mu = lit::<T>(2.0) * prox_weight - rho;
            (ObjectiveModel::Exact, rho, mu, *lipschitz + rho + cons)
        }
        (Case::I, other) => {
            return Err(Error::Usage(format!("case I needs a smooth objective, got {}", other.name())))
        }
        (Case::II, Objective::Composite { outer, inner, .. }) => {
            if !(nu > T::zero()) {
                return Err(param(format!("smoothing parameter ν must be positive, got {nu}")));
            }
            let model = ProxLinearModel::from_map(inner.as_ref(), anchor);
            let lead = model.jac_anchor.frobenius_norm() / nu;
            let outer = SmoothedOuter::new(*outer, nu)?;
            (ObjectiveModel::Smoothed { model, outer }, T::zero(), prox_weight, lead + cons)
        }
        (Case::II, other) => {
            return Err(Error::Usage(format!(
                "case II needs a composite objective, got {}",
                other.name()
            )))
        }
        (Case::III, _) => {
            let mu = lit::<T>(2.0) * prox_weight - rho;
            (ObjectiveModel::Omitted, rho, mu, rho + cons)
        }
    };
    if !(mu > T::zero()) {
        return Err(param(format!(
            "proximal weight {prox_weight} leaves no strong convexity (needs > ρ/2 = {})",
            lit::<T>(0.5) * rho
        )));
    }
    Ok(SubproblemSplit {
        case,
        smooth: SmoothPart {
            inst,
            dual,
            beta,
            anchor,
            quad,
            model,
        },
        prox: ShiftedRegularizer {
            base: &inst.reg,
            anchor,
            weight: mu,
        },
        mu,
        smoothness,
    })
}

/// One subgradient of the objective `f` at `x`: the gradient for smooth `f`,
/// `J_c(x)ᵀs` with `s ∈ ∂l(c(x))` for composite `f`, or the oracle's output.
pub fn objective_subgradient<T: Scalar>(obj: &Objective<T>, x: &[T], out: &mut [T]) {
    match obj {
        Objective::Smooth { f, .. } => f.gradient(x, out),
        Objective::Composite { outer, inner, .. } => {
            let p = inner.output_dim();
            let mut u = vec![T::zero(); p];
            let mut j = Mat::zeros(p, x.len());
            inner.eval(x, &mut u, Some(&mut j));
            let mut s = vec![T::zero(); p];
            outer.subgradient(&u, &mut s);
            out.iter_mut().for_each(|v| *v = T::zero());
            j.mul_t_vec_add(T::one(), &s, out);
        }
        Objective::General { f, .. } => f.subgradient(x, out),
    }
}

/// `ȳ = y + β(Ax⁺ − b)`, `z̄ = [z + βg(x⁺)]₊` from the residuals at `x⁺`.
pub fn dual_candidates<T: Scalar>(
    dual: &DualState<T>,
    beta: T,
    affine_residual: &[T],
    g: &[T],
) -> (Vec<T>, Vec<T>) {
    let y = dual
        .y
        .iter()
        .zip(affine_residual)
        .map(|(&y, &r)| y + beta * r)
        .collect();
    let z = dual.z.iter().zip(g).map(|(&z, &gi)| pos(z + beta * gi)).collect();
    (y, z)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResidual<T> {
    pub pres: T,
    pub dres: T,
    pub cs: T,
}

impl<T: Scalar> KktResidual<T> {
    pub fn max(&self) -> T {
        self.pres.max(self.dres).max(self.cs)
    }
}

/// Residuals from precomputed pieces: `pres = √(‖r‖² + ‖[g]₊‖²)`,
/// `cs = Σ|z̄ᵢgᵢ|`, `dres = ‖w − 2ρΔx‖`.
pub fn kkt_from_parts<T: Scalar>(
    affine_residual: &[T],
    g: &[T],
    z_bar: &[T],
    w: &[T],
    dx: &[T],
    rho: T,
) -> KktResidual<T> {
    let pres = (norm_sq(affine_residual) + crate::problem::positive_part_sq(g)).sqrt();
    let cs = z_bar.iter().zip(g).fold(T::zero(), |acc, (&z, &gi)| acc + (z * gi).abs());
    let two_rho = lit::<T>(2.0) * rho;
    let dres = w
        .iter()
        .zip(dx)
        .map(|(&wi, &di)| {
            let v = wi - two_rho * di;
            v * v
        })
        .sum::<T>()
        .sqrt();
    KktResidual { pres, dres, cs }
}

/// KKT residuals at `x` for candidate multipliers `(ȳ, z̄)` and the inner
/// solver's certificate `w ∈ ∂_x L̃(x)`.
pub fn kkt_residuals<T: Scalar>(
    inst: &ProblemInstance<T>,
    x: &[T],
    y_bar: &[T],
    z_bar: &[T],
    w: &[T],
    dx: &[T],
    rho: T,
) -> Result<KktResidual<T>> {
    inst.check_dim("kkt point", x)?;
    inst.check_dim("kkt certificate", w)?;
    inst.check_dim("kkt step", dx)?;
    if y_bar.len() != inst.affine.len() || z_bar.len() != inst.ineq.len() {
        return Err(Error::Dimension {
            what: "kkt multipliers",
            expected: inst.affine.len() + inst.ineq.len(),
            got: y_bar.len() + z_bar.len(),
        });
    }
    let r = inst.affine.residual(x);
    let g = inst.ineq.values(x);
    Ok(kkt_from_parts(&r, &g, z_bar, w, dx, rho))
}
