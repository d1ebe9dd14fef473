//! Data model for `min f(x) + h(x)  s.t.  Ax = b, g(x) ≤ 0`.
//!
//! The objective comes in one of three regimes (smooth, convex-outer ∘
//! smooth-inner composite, or a general weakly-convex function with a
//! subgradient oracle). Constraint oracles are trusted to be convex and
//! smooth; `validate_instance` only checks shapes, finiteness, and the
//! optional Slater point.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dot, gram_spectral_norm, norm, Mat};
use crate::prox::Outer;
use crate::scalar::{lit, pos, Scalar};

/// Smooth scalar function with value and gradient oracles.
pub trait SmoothFunction<T>: Send + Sync {
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T], grad: &mut [T]);
}

/// Smooth vector-valued map `ℝ^d → ℝ^p` with a Jacobian oracle.
pub trait VectorMap<T>: Send + Sync {
    fn output_dim(&self) -> usize;
    /// Writes the map value into `values` (length `output_dim`) and, when
    /// requested, the `output_dim × d` Jacobian into `jac`.
    fn eval(&self, x: &[T], values: &mut [T], jac: Option<&mut Mat<T>>);
}

/// Weakly-convex function exposing one subgradient per point.
pub trait SubgradientFunction<T>: Send + Sync {
    fn value(&self, x: &[T]) -> T;
    fn subgradient(&self, x: &[T], out: &mut [T]);
}

/// `½xᵀQx + cᵀx` with symmetric `Q`.
#[derive(Clone, Debug)]
pub struct QuadraticFunction<T> {
    pub q: Mat<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> SmoothFunction<T> for QuadraticFunction<T> {
    fn value(&self, x: &[T]) -> T {
        let qx = self.q.mul_vec(x);
        lit::<T>(0.5) * dot(x, &qx) + dot(&self.c, x)
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        self.q.mul_vec_into(x, grad);
        for (g, &c) in grad.iter_mut().zip(&self.c) {
            *g += c;
        }
    }
}

/// One row `½xᵀQx + cᵀx − offset` of a [`QuadraticMap`].
#[derive(Clone, Debug)]
pub struct QuadraticTerm<T> {
    pub q: Mat<T>,
    pub c: Vec<T>,
    pub offset: T,
}

/// Stack of quadratic functions. Serves both as the QCQP constraint map
/// (`offset = γ_j`) and as the inner map of robust least squares.
#[derive(Clone, Debug)]
pub struct QuadraticMap<T> {
    pub terms: Vec<QuadraticTerm<T>>,
}

impl<T: Scalar> VectorMap<T> for QuadraticMap<T> {
    fn output_dim(&self) -> usize {
        self.terms.len()
    }

    fn eval(&self, x: &[T], values: &mut [T], mut jac: Option<&mut Mat<T>>) {
        let half = lit::<T>(0.5);
        let mut qx = vec![T::zero(); x.len()];
        for (j, term) in self.terms.iter().enumerate() {
            term.q.mul_vec_into(x, &mut qx);
            values[j] = half * dot(x, &qx) + dot(&term.c, x) - term.offset;
            if let Some(jm) = jac.as_deref_mut() {
                for ((r, &a), &b) in jm.row_mut(j).iter_mut().zip(&qx).zip(&term.c) {
                    *r = a + b;
                }
            }
        }
    }
}

/// Affine map `Mx + q`.
#[derive(Clone, Debug)]
pub struct AffineMap<T> {
    pub m: Mat<T>,
    pub q: Vec<T>,
}

impl<T: Scalar> VectorMap<T> for AffineMap<T> {
    fn output_dim(&self) -> usize {
        self.m.rows()
    }

    fn eval(&self, x: &[T], values: &mut [T], jac: Option<&mut Mat<T>>) {
        self.m.mul_vec_into(x, values);
        for (v, &q) in values.iter_mut().zip(&self.q) {
            *v += q;
        }
        if let Some(j) = jac {
            j.as_mut_slice().copy_from_slice(self.m.as_slice());
        }
    }
}

/// `‖Mx − q‖₁`, a convex (hence weakly convex for every ρ > 0) nonsmooth objective.
#[derive(Clone, Debug)]
pub struct L1Residual<T> {
    pub m: Mat<T>,
    pub q: Vec<T>,
}

impl<T: Scalar> SubgradientFunction<T> for L1Residual<T> {
    fn value(&self, x: &[T]) -> T {
        let r = self.m.mul_vec(x);
        r.iter().zip(&self.q).map(|(&a, &b)| (a - b).abs()).sum()
    }

    fn subgradient(&self, x: &[T], out: &mut [T]) {
        let r = self.m.mul_vec(x);
        let s: Vec<T> = r
            .iter()
            .zip(&self.q)
            .map(|(&a, &b)| {
                let d = a - b;
                if d > T::zero() {
                    T::one()
                } else if d < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        out.iter_mut().for_each(|o| *o = T::zero());
        self.m.mul_t_vec_add(T::one(), &s, out);
    }
}

/// Closure-backed smooth function.
pub struct FnSmooth<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<T, V, G> SmoothFunction<T> for FnSmooth<V, G>
where
    V: Fn(&[T]) -> T + Send + Sync,
    G: Fn(&[T], &mut [T]) + Send + Sync,
{
    fn value(&self, x: &[T]) -> T {
        (self.value)(x)
    }
    fn gradient(&self, x: &[T], grad: &mut [T]) {
        (self.gradient)(x, grad)
    }
}

/// Closure-backed vector map; the closure fills values and (optionally) the Jacobian.
pub struct FnMap<F> {
    pub output_dim: usize,
    pub eval: F,
}

impl<T, F> VectorMap<T> for FnMap<F>
where
    F: Fn(&[T], &mut [T], Option<&mut Mat<T>>) + Send + Sync,
{
    fn output_dim(&self) -> usize {
        self.output_dim
    }
    fn eval(&self, x: &[T], values: &mut [T], jac: Option<&mut Mat<T>>) {
        (self.eval)(x, values, jac)
    }
}

/// Closure-backed subgradient oracle.
pub struct FnSubgradient<V, S> {
    pub value: V,
    pub subgradient: S,
}

impl<T, V, S> SubgradientFunction<T> for FnSubgradient<V, S>
where
    V: Fn(&[T]) -> T + Send + Sync,
    S: Fn(&[T], &mut [T]) + Send + Sync,
{
    fn value(&self, x: &[T]) -> T {
        (self.value)(x)
    }
    fn subgradient(&self, x: &[T], out: &mut [T]) {
        (self.subgradient)(x, out)
    }
}

/// Affine equality block `Ax = b` with a cached `‖AᵀA‖`.
#[derive(Clone, Debug)]
pub struct AffineBlock<T> {
    pub a: Mat<T>,
    pub b: Vec<T>,
    pub ata_norm: T,
}

impl<T: Scalar> AffineBlock<T> {
    /// Builds the block and caches `‖AᵀA‖` by power iteration.
    pub fn new(a: Mat<T>, b: Vec<T>) -> Self {
        let tol = if std::mem::size_of::<T>() == 4 {
            lit(1e-6)
        } else {
            lit(1e-13)
        };
        let ata_norm = gram_spectral_norm(&a, tol);
        Self { a, b, ata_norm }
    }

    /// No affine constraints in dimension `d`.
    pub fn empty(d: usize) -> Self {
        Self {
            a: Mat::zeros(0, d),
            b: Vec::new(),
            ata_norm: T::zero(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.b.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `Ax − b`
    pub fn residual(&self, x: &[T]) -> Vec<T> {
        let mut r = self.a.mul_vec(x);
        for (ri, &bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }
}

/// Smooth convex inequality block `g(x) ≤ 0`.
#[derive(Clone)]
pub struct IneqBlock<T> {
    pub map: Option<Arc<dyn VectorMap<T>>>,
    /// Per-component smoothness bound `L_g`.
    pub smoothness: T,
    /// Bound `B_g` on `|g_i|` and `‖∇g_i‖` over the domain.
    pub bound: T,
}

impl<T: Scalar> IneqBlock<T> {
    pub fn empty() -> Self {
        Self {
            map: None,
            smoothness: T::zero(),
            bound: T::zero(),
        }
    }

    pub fn new(map: Arc<dyn VectorMap<T>>, smoothness: T, bound: T) -> Self {
        Self {
            map: Some(map),
            smoothness,
            bound,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.map.as_ref().map_or(0, |m| m.output_dim())
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.len()];
        if let Some(map) = &self.map {
            map.eval(x, &mut g, None);
        }
        g
    }

    pub fn values_and_jacobian(&self, x: &[T]) -> (Vec<T>, Mat<T>) {
        let m = self.len();
        let mut g = vec![T::zero(); m];
        let mut j = Mat::zeros(m, x.len());
        if let Some(map) = &self.map {
            map.eval(x, &mut g, Some(&mut j));
        }
        (g, j)
    }
}

impl<T: fmt::Debug> fmt::Debug for IneqBlock<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IneqBlock")
            .field("m", &self.map.as_ref().map_or(0, |m| m.output_dim()))
            .field("smoothness", &self.smoothness)
            .field("bound", &self.bound)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegularizerKind {
    /// Indicator of the box.
    BoxIndicator,
    /// `λ‖x‖₁` plus the indicator of the box.
    BoxL1,
    /// `h ≡ 0` on all of `ℝ^d` (infinite bounds).
    Free,
}

/// Prox-friendly regularizer `h(x) = λ‖x‖₁ + δ_{[l,u]}(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Regularizer<T> {
    pub lambda: T,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Regularizer<T> {
    pub fn boxed(lower: Vec<T>, upper: Vec<T>) -> Self {
        Self {
            lambda: T::zero(),
            lower,
            upper,
        }
    }

    /// Box `[lo, hi]^d`.
    pub fn uniform_box(d: usize, lo: T, hi: T) -> Self {
        Self::boxed(vec![lo; d], vec![hi; d])
    }

    pub fn box_l1(lambda: T, lower: Vec<T>, upper: Vec<T>) -> Self {
        Self {
            lambda,
            lower,
            upper,
        }
    }

    pub fn free(d: usize) -> Self {
        Self::boxed(vec![T::neg_infinity(); d], vec![T::infinity(); d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn kind(&self) -> RegularizerKind {
        let unbounded = self
            .lower
            .iter()
            .zip(&self.upper)
            .all(|(l, u)| l.is_infinite() && u.is_infinite());
        if self.lambda > T::zero() {
            RegularizerKind::BoxL1
        } else if unbounded {
            RegularizerKind::Free
        } else {
            RegularizerKind::BoxIndicator
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.first_violation(x).is_none()
    }

    pub(crate) fn first_violation(&self, x: &[T]) -> Option<usize> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .position(|(&v, (&l, &u))| !(v >= l && v <= u))
    }

    /// `h(x)`, or a domain error outside the box.
    pub fn value(&self, x: &[T]) -> Result<T> {
        if let Some(index) = self.first_violation(x) {
            return Err(Error::Domain { index });
        }
        if self.lambda > T::zero() {
            Ok(self.lambda * x.iter().map(|v| v.abs()).sum::<T>())
        } else {
            Ok(T::zero())
        }
    }

    /// Euclidean projection onto the box.
    pub fn project(&self, x: &mut [T]) {
        for ((v, &l), &u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = crate::scalar::clamp(*v, l, u);
        }
    }

    /// `r_h = λ√d` when the ℓ1 term is present.
    pub fn subgradient_radius(&self) -> T {
        self.lambda * T::from_usize_lossy(self.dim()).sqrt()
    }

    /// Midpoint of the box, with zero standing in for unbounded coordinates.
    pub fn center(&self) -> Vec<T> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
                (true, true) => lit::<T>(0.5) * (l + u),
                (true, false) => l.max(T::zero()),
                (false, true) => u.min(T::zero()),
                (false, false) => T::zero(),
            })
            .collect()
    }
}

/// `D = √Σ(u_i − l_i)²`
pub fn box_diameter<T: Scalar>(reg: &Regularizer<T>) -> T {
    reg.lower
        .iter()
        .zip(&reg.upper)
        .map(|(&l, &u)| (u - l) * (u - l))
        .sum::<T>()
        .sqrt()
}

/// The three objective regimes.
#[derive(Clone)]
pub enum Objective<T> {
    /// `L_f`-smooth `f`.
    Smooth {
        f: Arc<dyn SmoothFunction<T>>,
        lipschitz: T,
    },
    /// `f = l ∘ c` with convex `M_l`-Lipschitz outer `l` and inner map `c`
    /// whose Jacobian is `L_c`-Lipschitz.
    Composite {
        outer: Outer,
        inner: Arc<dyn VectorMap<T>>,
        outer_lipschitz: T,
        inner_smoothness: T,
    },
    /// General weakly-convex `f` with subgradients bounded by `B̂_f`.
    General {
        f: Arc<dyn SubgradientFunction<T>>,
        subgrad_bound: T,
    },
}

impl<T: Scalar> Objective<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Smooth { .. } => "smooth",
            Objective::Composite { .. } => "composite",
            Objective::General { .. } => "general",
        }
    }

    /// `f(x)`; composite objectives are evaluated through the unsmoothed outer function.
    pub fn value(&self, x: &[T]) -> T {
        match self {
            Objective::Smooth { f, .. } => f.value(x),
            Objective::Composite { outer, inner, .. } => {
                let mut u = vec![T::zero(); inner.output_dim()];
                inner.eval(x, &mut u, None);
                outer.value(&u)
            }
            Objective::General { f, .. } => f.value(x),
        }
    }

    /// `M_l · L_c` for composite objectives.
    pub fn weak_convexity_bound(&self) -> Option<T> {
        match self {
            Objective::Composite {
                outer_lipschitz,
                inner_smoothness,
                ..
            } => Some(*outer_lipschitz * *inner_smoothness),
            _ => None,
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Objective<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Smooth { lipschitz, .. } => {
                f.debug_struct("Smooth").field("lipschitz", lipschitz).finish()
            }
            Objective::Composite {
                outer,
                inner,
                outer_lipschitz,
                inner_smoothness,
            } => f
                .debug_struct("Composite")
                .field("outer", outer)
                .field("p", &inner.output_dim())
                .field("outer_lipschitz", outer_lipschitz)
                .field("inner_smoothness", inner_smoothness)
                .finish(),
            Objective::General { subgrad_bound, .. } => f
                .debug_struct("General")
                .field("subgrad_bound", subgrad_bound)
                .finish(),
        }
    }
}

/// A complete problem instance. Immutable once built.
#[derive(Clone, Debug)]
pub struct ProblemInstance<T> {
    pub dim: usize,
    pub objective: Objective<T>,
    pub affine: AffineBlock<T>,
    pub ineq: IneqBlock<T>,
    pub reg: Regularizer<T>,
    /// Weak-convexity constant.
    pub rho: T,
    /// Optional strictly feasible point, used only for validation.
    pub x_feas: Option<Vec<T>>,
    /// Suggested starting point.
    pub x0: Option<Vec<T>>,
}

impl<T: Scalar> ProblemInstance<T> {
    /// Unconstrained instance over `reg`; add blocks with the `with_*` builders.
    pub fn new(objective: Objective<T>, reg: Regularizer<T>, rho: T) -> Self {
        let dim = reg.dim();
        Self {
            dim,
            objective,
            affine: AffineBlock::empty(dim),
            ineq: IneqBlock::empty(),
            reg,
            rho,
            x_feas: None,
            x0: None,
        }
    }

    pub fn with_affine(mut self, affine: AffineBlock<T>) -> Self {
        self.affine = affine;
        self
    }

    pub fn with_ineq(mut self, ineq: IneqBlock<T>) -> Self {
        self.ineq = ineq;
        self
    }

    pub fn with_feasible_point(mut self, x: Vec<T>) -> Self {
        self.x_feas = Some(x);
        self
    }

    pub fn with_start(mut self, x: Vec<T>) -> Self {
        self.x0 = Some(x);
        self
    }

    /// `F(x) = f(x) + h(x)`.
    pub fn objective_value(&self, x: &[T]) -> Result<T> {
        let h = self.reg.value(x)?;
        Ok(self.objective.value(x) + h)
    }

    pub(crate) fn check_dim(&self, what: &'static str, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                what,
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Starting point: the suggested `x0` if any, else the box center; always
    /// projected onto the box.
    pub fn default_start(&self) -> Vec<T> {
        let mut x = self.x0.clone().unwrap_or_else(|| self.reg.center());
        self.reg.project(&mut x);
        x
    }
}

/// `(g(x), J_g(x))`
pub fn eval_ineq_block<T: Scalar>(inst: &ProblemInstance<T>, x: &[T]) -> Result<(Vec<T>, Mat<T>)> {
    inst.check_dim("eval_ineq_block point", x)?;
    Ok(inst.ineq.values_and_jacobian(x))
}

fn guarded<R>(f: impl FnOnce() -> R) -> Option<R> {
    catch_unwind(AssertUnwindSafe(f)).ok()
}

/// Collects every dimensional and invariant violation; an empty list means
/// the instance is valid. Oracle panics are reported, never propagated.
pub fn validate_instance<T: Scalar>(inst: &ProblemInstance<T>) -> Vec<String> {
    let mut out = Vec::new();
    let d = inst.dim;

    if inst.affine.a.cols() != d {
        out.push(format!(
            "affine width mismatch: A has {} columns, dimension is {d}",
            inst.affine.a.cols()
        ));
    }
    if inst.affine.a.rows() != inst.affine.b.len() {
        out.push(format!(
            "affine height mismatch: A has {} rows, b has length {}",
            inst.affine.a.rows(),
            inst.affine.b.len()
        ));
    }
    if !inst.affine.a.is_finite() || inst.affine.b.iter().any(|v| !v.is_finite()) {
        out.push("affine data not finite".into());
    }
    if !(inst.affine.ata_norm >= T::zero()) || !inst.affine.ata_norm.is_finite() {
        out.push("cached ‖AᵀA‖ must be finite and nonnegative".into());
    }

    let reg = &inst.reg;
    if reg.lower.len() != d || reg.upper.len() != d {
        out.push(format!(
            "regularizer bounds have lengths {}/{}, dimension is {d}",
            reg.lower.len(),
            reg.upper.len()
        ));
    }
    if let Some(i) = reg
        .lower
        .iter()
        .zip(&reg.upper)
        .position(|(l, u)| !(l <= u))
    {
        out.push(format!("box bound inverted at coordinate {i}"));
    }
    if !(reg.lambda >= T::zero()) {
        out.push("regularizer weight λ must be nonnegative".into());
    }
    if !(inst.rho > T::zero()) || !inst.rho.is_finite() {
        out.push("weak-convexity constant rho must be positive and finite".into());
    }

    // Everything below evaluates oracles; bail out if the shapes are already broken.
    let shapes_ok = out.is_empty();
    if !shapes_ok {
        return out;
    }
    let probe = reg.center();

    match &inst.objective {
        Objective::Smooth { f, lipschitz } => {
            if !(*lipschitz > T::zero()) || !lipschitz.is_finite() {
                out.push("smooth objective needs a finite positive L_f".into());
            }
            let r = guarded(|| {
                let mut g = vec![T::zero(); d];
                f.gradient(&probe, &mut g);
                (f.value(&probe), g)
            });
            match r {
                None => out.push("objective oracle panicked".into()),
                Some((v, g)) => {
                    if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
                        out.push("objective oracle returned non-finite output".into());
                    }
                }
            }
        }
        Objective::Composite {
            outer,
            inner,
            outer_lipschitz,
            inner_smoothness,
        } => {
            if !(*outer_lipschitz > T::zero()) || !(*inner_smoothness >= T::zero()) {
                out.push("composite objective needs M_l > 0 and L_c ≥ 0".into());
            }
            let p = inner.output_dim();
            if let Err(e) = outer.check_dim(p) {
                out.push(e);
            }
            let r = guarded(|| {
                let mut u = vec![T::zero(); p];
                let mut j = Mat::zeros(p, d);
                inner.eval(&probe, &mut u, Some(&mut j));
                (u, j)
            });
            match r {
                None => out.push("inner map oracle panicked".into()),
                Some((u, j)) => {
                    if u.iter().any(|v| !v.is_finite()) || !j.is_finite() {
                        out.push("inner map oracle returned non-finite output".into());
                    }
                }
            }
        }
        Objective::General { f, subgrad_bound } => {
            if !(*subgrad_bound > T::zero()) {
                out.push("general objective needs a positive subgradient bound".into());
            }
            let r = guarded(|| {
                let mut s = vec![T::zero(); d];
                f.subgradient(&probe, &mut s);
                (f.value(&probe), s)
            });
            match r {
                None => out.push("subgradient oracle panicked".into()),
                Some((v, s)) => {
                    if !v.is_finite() || s.iter().any(|x| !x.is_finite()) {
                        out.push("subgradient oracle returned non-finite output".into());
                    }
                }
            }
        }
    }

    if inst.ineq.map.is_some() {
        if !(inst.ineq.smoothness >= T::zero()) || !(inst.ineq.bound >= T::zero()) {
            out.push("inequality metadata L_g, B_g must be nonnegative".into());
        }
        match guarded(|| inst.ineq.values_and_jacobian(&probe)) {
            None => out.push("inequality oracle panicked".into()),
            Some((g, j)) => {
                if g.iter().any(|v| !v.is_finite()) || !j.is_finite() {
                    out.push("inequality oracle returned non-finite output".into());
                }
            }
        }
    }

    if let Some(xf) = &inst.x_feas {
        if xf.len() != d {
            out.push(format!("Slater point has length {}, dimension is {d}", xf.len()));
            return out;
        }
        if !reg.contains(xf) {
            out.push("Slater point outside the box".into());
        }
        if !inst.affine.is_empty() {
            let r = norm(&inst.affine.residual(xf));
            if !(r <= lit(1e-10)) {
                out.push(format!("Slater point violates Ax = b (residual {r:e})"));
            }
        }
        match guarded(|| inst.ineq.values(xf)) {
            None => out.push("inequality oracle panicked at Slater point".into()),
            Some(g) => {
                if g.iter().any(|&v| !(v < T::zero())) {
                    out.push("Slater point not strict: some g_i(x_feas) ≥ 0".into());
                }
            }
        }
    }
    out
}

/// `‖[g(x)]₊‖²`
pub(crate) fn positive_part_sq<T: Scalar>(g: &[T]) -> T {
    g.iter().fold(T::zero(), |acc, &v| acc + pos(v) * pos(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_instance() -> ProblemInstance<f64> {
        let f = FnSmooth {
            value: |x: &[f64]| x[0] * x[0],
            gradient: |x: &[f64], g: &mut [f64]| g[0] = 2.0 * x[0],
        };
        ProblemInstance::new(
            Objective::Smooth {
                f: Arc::new(f),
                lipschitz: 2.0,
            },
            Regularizer::uniform_box(1, -5.0, 5.0),
            1.0,
        )
    }

    fn linear_ineq(offset: f64) -> IneqBlock<f64> {
        IneqBlock::new(
            Arc::new(AffineMap {
                m: Mat::from_rows(&[vec![1.0]]),
                q: vec![offset],
            }),
            0.0,
            6.0,
        )
    }

    #[test]
    fn well_formed_instance_is_valid() {
        assert!(validate_instance(&sq_instance()).is_empty());
    }

    #[test]
    fn affine_width_mismatch_is_reported() {
        let mut inst = sq_instance();
        inst.dim = 2;
        inst.reg = Regularizer::uniform_box(2, -5.0, 5.0);
        inst.affine = AffineBlock::new(Mat::from_rows(&[vec![1.0, 1.0, 1.0]]), vec![1.0]);
        let report = validate_instance(&inst);
        assert!(report.iter().any(|r| r.contains("affine width mismatch")), "{report:?}");
    }

    #[test]
    fn non_strict_slater_point_is_reported() {
        // g(x) = x − 1, g(1) = 0
        let inst = sq_instance()
            .with_ineq(linear_ineq(-1.0))
            .with_feasible_point(vec![1.0]);
        let report = validate_instance(&inst);
        assert!(report.iter().any(|r| r.contains("Slater point not strict")), "{report:?}");
        let inst = sq_instance()
            .with_ineq(linear_ineq(-1.0))
            .with_feasible_point(vec![0.0]);
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn panicking_oracle_is_reported_not_propagated() {
        let f = FnSmooth {
            value: |_: &[f64]| -> f64 { panic!("boom") },
            gradient: |_: &[f64], _: &mut [f64]| {},
        };
        let mut inst = sq_instance();
        inst.objective = Objective::Smooth {
            f: Arc::new(f),
            lipschitz: 1.0,
        };
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let report = validate_instance(&inst);
        std::panic::set_hook(prev);
        assert!(report.iter().any(|r| r.contains("panicked")));
    }

    #[test]
    fn ineq_block_examples() {
        let inst = sq_instance().with_ineq(linear_ineq(-1.0));
        let (g, j) = eval_ineq_block(&inst, &[0.0]).unwrap();
        assert_eq!(g, vec![-1.0]);
        assert_eq!(j.as_slice(), &[1.0]);

        let half_sq = QuadraticMap {
            terms: vec![QuadraticTerm {
                q: Mat::identity(1),
                c: vec![0.0],
                offset: 0.5,
            }],
        };
        let inst = sq_instance().with_ineq(IneqBlock::new(Arc::new(half_sq), 1.0, 13.0));
        let (g, j) = eval_ineq_block(&inst, &[1.0]).unwrap();
        assert_eq!(g, vec![0.0]);
        assert_eq!(j.as_slice(), &[1.0]);

        assert!(matches!(
            eval_ineq_block(&inst, &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn qcqp_row_formula() {
        // Q = 2I₂, c = (1, 0), γ = 1 at x = (1, 1): g = 2, J = (3, 2)
        let map = QuadraticMap {
            terms: vec![QuadraticTerm {
                q: Mat::diag(&[2.0, 2.0]),
                c: vec![1.0, 0.0],
                offset: 1.0,
            }],
        };
        let mut g = [0.0];
        let mut j = Mat::zeros(1, 2);
        map.eval(&[1.0, 1.0], &mut g, Some(&mut j));
        assert_eq!(g, [2.0]);
        assert_eq!(j.as_slice(), &[3.0, 2.0]);
    }

    #[test]
    fn box_diameter_examples() {
        assert_eq!(box_diameter(&Regularizer::uniform_box(1, -5.0, 5.0)), 10.0);
        assert_eq!(box_diameter(&Regularizer::uniform_box(100, -5.0, 5.0)), 100.0);
        assert_eq!(box_diameter(&Regularizer::uniform_box(3, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn regularizer_kinds_and_domain() {
        let r = Regularizer::uniform_box(2, -1.0, 1.0);
        assert_eq!(r.kind(), RegularizerKind::BoxIndicator);
        assert!(matches!(r.value(&[0.0, 2.0]), Err(Error::Domain { index: 1 })));
        let r = Regularizer::box_l1(0.5, vec![-1.0; 2], vec![1.0; 2]);
        assert_eq!(r.kind(), RegularizerKind::BoxL1);
        assert_eq!(r.value(&[0.5, -1.0]).unwrap(), 0.75);
        assert_eq!(Regularizer::<f64>::free(3).kind(), RegularizerKind::Free);
    }
}
