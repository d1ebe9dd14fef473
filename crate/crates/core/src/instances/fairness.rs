//! Classification with an ROC-style fairness objective.
//!
//! The samples are split into a reference part `D` and the rest `P ∪ U`
//! (protected / unprotected). A least-squares fit `x_mat` on `D` fixes the
//! threshold `θ` and the loss budget; the instance then minimizes the gap of
//! mean sigmoid scores between `P` and `U` subject to the loss on `P ∪ U`
//! staying within that budget.

use std::collections::BTreeMap;

use super::data::Dataset;
use super::doc::{IneqDoc, InstanceDoc, MapDoc, ObjectiveDoc, RegularizerDoc};
use crate::apg::{apg_minimize, ApgConfig};
use crate::error::{param, Result};
use crate::linalg::{dist, gram_spectral_norm, Mat};
use crate::problem::{ProblemInstance, Regularizer, SmoothFunction, VectorMap};
use crate::prox::ShiftedRegularizer;
use crate::rng::SeededRng;
use crate::scalar::{lit, Scalar};

/// `max |σ''|`, attained at `±ln(2 + √3)`.
const SIGMOID_CURVATURE: f64 = 0.096_225_044_864_937_6;

pub fn sigmoid<T: Scalar>(y: T) -> T {
    if y >= T::zero() {
        T::one() / (T::one() + (-y).exp())
    } else {
        let e = y.exp();
        e / (T::one() + e)
    }
}

fn rows_gram_norm<T: Scalar>(features: &Mat<T>, rows: &[usize]) -> T {
    let sub = Mat::from_rows(&rows.iter().map(|&i| features.row(i).to_vec()).collect::<Vec<_>>());
    gram_spectral_norm(&sub, lit(1e-10))
}

/// `c(x) = mean_{i∈P} σ(a_iᵀx − θ) − mean_{i∈U} σ(a_iᵀx − θ)`.
#[derive(Clone, Debug)]
pub struct SigmoidGap<T> {
    features: Mat<T>,
    protected: Vec<usize>,
    unprotected: Vec<usize>,
    theta: T,
}

impl<T: Scalar> SigmoidGap<T> {
    pub fn new(features: Mat<T>, protected: Vec<usize>, unprotected: Vec<usize>, theta: T) -> Result<Self> {
        if protected.is_empty() || unprotected.is_empty() {
            return Err(param(format!(
                "fairness groups must be nonempty (protected {}, unprotected {})",
                protected.len(),
                unprotected.len()
            )));
        }
        Ok(Self {
            features,
            protected,
            unprotected,
            theta,
        })
    }

    /// Bound on `‖∇²c‖` from `|σ''| ≤ 1/(6√3)`.
    pub fn smoothness(&self) -> T {
        lit::<T>(SIGMOID_CURVATURE)
            * (rows_gram_norm(&self.features, &self.protected) / T::from_usize_lossy(self.protected.len())
                + rows_gram_norm(&self.features, &self.unprotected) / T::from_usize_lossy(self.unprotected.len()))
    }

    /// Group mean of `σ(aᵀx − θ)` and, when asked, of its gradient.
    fn group_mean(&self, x: &[T], rows: &[usize], grad: Option<&mut [T]>) -> T {
        let w = T::one() / T::from_usize_lossy(rows.len());
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
        let mut sum = T::zero();
        for &i in rows {
            let a = self.features.row(i);
            let s = sigmoid(crate::linalg::dot(a, x) - self.theta);
            sum += s;
            if let Some(g) = grad.as_deref_mut() {
                crate::linalg::axpy(w * s * (T::one() - s), a, g);
            }
        }
        w * sum
    }
}

impl<T: Scalar> VectorMap<T> for SigmoidGap<T> {
    fn output_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[T], values: &mut [T], jac: Option<&mut Mat<T>>) {
        match jac {
            Some(j) => {
                let mut gu = vec![T::zero(); x.len()];
                let row = j.row_mut(0);
                let mp = self.group_mean(x, &self.protected, Some(row));
                let mu = self.group_mean(x, &self.unprotected, Some(&mut gu));
                for (r, u) in row.iter_mut().zip(&gu) {
                    *r -= *u;
                }
                values[0] = mp - mu;
            }
            None => values[0] = self.group_mean(x, &self.protected, None) - self.group_mean(x, &self.unprotected, None),
        }
    }
}

/// `(1/2|S|) Σ_{i∈S} (a_iᵀx − b_i)² − offset`.
#[derive(Clone, Debug)]
pub struct SquaredLoss<T> {
    features: Mat<T>,
    labels: Vec<T>,
    rows: Vec<usize>,
    offset: T,
}

impl<T: Scalar> SquaredLoss<T> {
    pub fn new(features: Mat<T>, labels: Vec<T>, rows: Vec<usize>, offset: T) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(param(format!(
                "{} labels for {} samples",
                labels.len(),
                features.rows()
            )));
        }
        if rows.is_empty() {
            return Err(param("squared loss needs at least one sample"));
        }
        Ok(Self {
            features,
            labels,
            rows,
            offset,
        })
    }

    /// `‖A_SᵀA_S‖/|S|`
    pub fn smoothness(&self) -> T {
        rows_gram_norm(&self.features, &self.rows) / T::from_usize_lossy(self.rows.len())
    }

    fn eval_into(&self, x: &[T], grad: Option<&mut [T]>) -> T {
        let inv = T::one() / T::from_usize_lossy(self.rows.len());
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
        let mut sum = T::zero();
        for &i in &self.rows {
            let a = self.features.row(i);
            let r = crate::linalg::dot(a, x) - self.labels[i];
            sum += r * r;
            if let Some(g) = grad.as_deref_mut() {
                crate::linalg::axpy(inv * r, a, g);
            }
        }
        lit::<T>(0.5) * inv * sum - self.offset
    }
}

impl<T: Scalar> SmoothFunction<T> for SquaredLoss<T> {
    fn value(&self, x: &[T]) -> T {
        self.eval_into(x, None)
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        self.eval_into(x, Some(grad));
    }
}

impl<T: Scalar> VectorMap<T> for SquaredLoss<T> {
    fn output_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[T], values: &mut [T], jac: Option<&mut Mat<T>>) {
        values[0] = self.eval_into(x, jac.map(|j| j.row_mut(0)));
    }
}

#[derive(Clone, Debug)]
pub struct FairnessOptions {
    /// Seed for the random reference split.
    pub seed: u64,
    /// Step tolerance of the proximal-point loop computing `x_mat`.
    pub xmat_tol: f64,
    /// Half-width of the `ℓ∞` ball.
    pub radius: f64,
    /// Suggested smoothing parameter for the `|·|` outer function.
    pub nu: f64,
}

impl Default for FairnessOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            xmat_tol: 1e-8,
            radius: 0.1,
            nu: 0.1,
        }
    }
}

/// Minimizes `loss` over the box with proximal-point steps, each solved by APG.
fn minimize_over_box(loss: &SquaredLoss<f64>, reg: &Regularizer<f64>, tol: f64) -> Result<Vec<f64>> {
    let d = reg.dim();
    let weight = loss.smoothness().max(1e-12);
    let cfg = ApgConfig {
        l0: 2.0 * weight,
        delta: 0.1 * tol * weight,
        ..ApgConfig::default()
    };
    let mut x = reg.center();
    for _ in 0..100_000 {
        let prox = ShiftedRegularizer {
            base: reg,
            anchor: &x,
            weight,
        };
        let next = apg_minimize(loss, &prox, weight, &x, &cfg)?.x;
        let step = dist(&next, &x);
        x = next;
        if step <= tol {
            break;
        }
    }
    debug_assert_eq!(x.len(), d);
    Ok(x)
}

/// Builds the fairness instance and records `theta`, the loss budget, and
/// `g(x_mat)` in `meta`. `x_mat` is kept as the feasible point only when
/// it satisfies the constraint strictly.
pub fn build_fairness_doc(ds: &Dataset, opts: &FairnessOptions) -> Result<InstanceDoc> {
    let n = ds.len();
    let d = ds.num_features();
    if n < 3 || d == 0 {
        return Err(param(format!("fairness needs at least 3 samples and 1 feature, got {n}×{d}")));
    }
    if !(opts.radius > 0.0) || !(opts.xmat_tol > 0.0) {
        return Err(param("fairness radius and x_mat tolerance must be positive"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(opts.seed).shuffle(&mut order);
    let n_ref = (n as f64 / 3.0).round() as usize;
    let (reference, rest) = order.split_at(n_ref.max(1));
    let mut reference = reference.to_vec();
    reference.sort_unstable();
    let mut rest = rest.to_vec();
    rest.sort_unstable();
    let (protected, unprotected): (Vec<usize>, Vec<usize>) = rest.iter().partition(|&&i| ds.protected[i]);

    let reg = Regularizer::uniform_box(d, -opts.radius, opts.radius);
    let ref_loss = SquaredLoss::new(ds.features.clone(), ds.labels.clone(), reference.clone(), 0.0)?;
    let x_mat = minimize_over_box(&ref_loss, &reg, opts.xmat_tol)?;
    let ref_value = ref_loss.value(&x_mat);
    let theta = reference
        .iter()
        .map(|&i| crate::linalg::dot(ds.features.row(i), &x_mat))
        .sum::<f64>()
        / reference.len() as f64;
    // budget: min_D loss + γ with γ = 2·L(x_mat; D)
    let offset = 3.0 * ref_value;

    let gap = SigmoidGap::new(ds.features.clone(), protected.clone(), unprotected.clone(), theta)?;
    let constraint = SquaredLoss::new(ds.features.clone(), ds.labels.clone(), rest.clone(), offset)?;
    let lc = gap.smoothness();
    let lg = constraint.smoothness();

    // bounds on |g| and ‖∇g‖ over the box
    let r_max = rest
        .iter()
        .map(|&i| {
            let a = ds.features.row(i);
            opts.radius * a.iter().map(|v| v.abs()).sum::<f64>() + ds.labels[i].abs()
        })
        .fold(0.0, f64::max);
    let a_max = rest
        .iter()
        .map(|&i| crate::linalg::norm(ds.features.row(i)))
        .fold(0.0, f64::max);
    let bg = (0.5 * r_max * r_max + offset).max(r_max * a_max);
    let g_mat = constraint.value(&x_mat);

    let mut x0 = vec![1.0; d];
    reg.project(&mut x0);
    let mut meta = BTreeMap::new();
    meta.insert("theta".into(), theta);
    meta.insert("loss_budget".into(), offset);
    meta.insert("ref_loss".into(), ref_value);
    meta.insert("g_at_x_mat".into(), g_mat);
    meta.insert("nu".into(), opts.nu);
    meta.insert("protected".into(), protected.len() as f64);
    meta.insert("unprotected".into(), unprotected.len() as f64);
    meta.insert("reference".into(), reference.len() as f64);

    let mut params = BTreeMap::new();
    params.insert("n".into(), n as f64);
    params.insert("d".into(), d as f64);
    params.insert("radius".into(), opts.radius);
    params.insert("xmat_tol".into(), opts.xmat_tol);

    Ok(InstanceDoc {
        family: "fairness".into(),
        seed: Some(opts.seed),
        params,
        rho: lc,
        objective: ObjectiveDoc::Composite {
            outer: crate::prox::Outer::Abs,
            inner: MapDoc::SigmoidGap {
                features: ds.features.clone(),
                protected,
                unprotected,
                theta,
            },
            outer_lipschitz: 1.0,
            inner_smoothness: lc,
        },
        affine: None,
        ineq: Some(IneqDoc {
            map: MapDoc::SquaredLoss {
                features: ds.features.clone(),
                labels: ds.labels.clone(),
                rows: rest,
                offset,
            },
            smoothness: lg,
            bound: bg,
        }),
        reg: RegularizerDoc {
            lambda: 0.0,
            lower: vec![-opts.radius; d],
            upper: vec![opts.radius; d],
        },
        x_feas: (g_mat < 0.0).then(|| x_mat.clone()),
        x0: Some(x0),
        meta,
    })
}

pub fn build_fairness(ds: &Dataset, opts: &FairnessOptions) -> Result<ProblemInstance<f64>> {
    build_fairness_doc(ds, opts)?.build()
}
