//! Seeded benchmark generators (LCQP, QCQP, robust NLLS), dataset loaders,
//! the ROC-fairness builder, and the JSON instance format.

mod data;
mod doc;
mod fairness;

use std::collections::BTreeMap;

pub use data::{load_csv, load_libsvm, load_libsvm_with_dim, Dataset};
pub use doc::{AffineDoc, IneqDoc, InstanceDoc, MapDoc, ObjectiveDoc, QuadTermDoc, RegularizerDoc};
pub use fairness::{build_fairness, build_fairness_doc, sigmoid, FairnessOptions, SigmoidGap, SquaredLoss};

pub use crate::rng::SeededRng;

use crate::error::{param, Error, Result};
use crate::linalg::{norm, orthonormal_columns, Mat};
use crate::problem::ProblemInstance;
use crate::prox::Outer;

pub const BOX_HALF_WIDTH: f64 = 5.0;

/// Orthonormal `d × cols` basis from Gram-Schmidt on a standard normal `d × d` matrix.
fn random_orthonormal(rng: &mut SeededRng, d: usize, cols: usize) -> Result<Vec<Vec<f64>>> {
    let g = rng.normal_matrix(d, d);
    let mut basis = orthonormal_columns(&g, 1e-10);
    if basis.len() < cols {
        return Err(Error::Invalid(format!(
            "random basis degenerate: rank {} < {cols}",
            basis.len()
        )));
    }
    basis.truncate(cols);
    Ok(basis)
}

/// `Σ_k e_k u_k u_kᵀ − shift·I`
fn spectral_matrix(basis: &[Vec<f64>], eig: &[f64], shift: f64, d: usize) -> Mat<f64> {
    let mut q = Mat::zeros(d, d);
    for (u, &e) in basis.iter().zip(eig) {
        if e == 0.0 {
            continue;
        }
        for i in 0..d {
            let s = e * u[i];
            if s == 0.0 {
                continue;
            }
            let row = q.row_mut(i);
            for j in 0..d {
                row[j] += s * u[j];
            }
        }
    }
    // symmetrize against rounding
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (q[(i, j)] + q[(j, i)]);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
        q[(i, i)] -= shift;
    }
    q
}

/// `U·diag(max(0, 5ξ))·Uᵀ − shift·I` with its exact spectral norm.
fn shifted_psd(rng: &mut SeededRng, d: usize, shift: f64) -> Result<(Mat<f64>, f64)> {
    let basis = random_orthonormal(rng, d, d)?;
    let eig: Vec<f64> = rng.normals(d).iter().map(|&x| (5.0 * x).max(0.0)).collect();
    let q = spectral_matrix(&basis, &eig, shift, d);
    let spec = eig.iter().map(|&e| (e - shift).abs()).fold(0.0, f64::max);
    Ok((q, spec))
}

/// `A = [G, I_n]` with standard normal `G`, and `b = ξ + 0.1`.
fn affine_data(rng: &mut SeededRng, n: usize, d: usize) -> (Mat<f64>, Vec<f64>) {
    let g = rng.normal_matrix(n, d - n);
    let mut a = Mat::zeros(n, d);
    for i in 0..n {
        a.row_mut(i)[..d - n].copy_from_slice(g.row(i));
        a[(i, d - n + i)] = 1.0;
    }
    let b = rng.normals(n).iter().map(|v| v + 0.1).collect();
    (a, b)
}

/// `[0; b]`, the point satisfying `Ax = b` by construction.
fn affine_feasible(b: &[f64], d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    x[d - b.len()..].copy_from_slice(b);
    x
}

fn uniform_box_doc(d: usize) -> RegularizerDoc {
    RegularizerDoc {
        lambda: 0.0,
        lower: vec![-BOX_HALF_WIDTH; d],
        upper: vec![BOX_HALF_WIDTH; d],
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Linearly constrained QP `min ½xᵀQ₀x + c₀ᵀx s.t. Ax = b, x ∈ [−5, 5]^d`.
///
/// Draw order: `G` (row-major), `b`, the basis matrix, the eigenvalue
/// normals, `c₀`.
pub fn lcqp_doc(n: usize, d: usize, rho_wc: f64, seed: u64) -> Result<InstanceDoc> {
    if n == 0 || n >= d {
        return Err(param(format!("lcqp needs 0 < n < d, got n = {n}, d = {d}")));
    }
    if !(rho_wc > 0.0) {
        return Err(param(format!("weak-convexity constant must be positive, got {rho_wc}")));
    }
    let mut rng = SeededRng::new(seed);
    let (a, b) = affine_data(&mut rng, n, d);
    let (q0, lf) = shifted_psd(&mut rng, d, rho_wc)?;
    let c0 = rng.normals(d);
    let x_feas = affine_feasible(&b, d);
    let inside = x_feas.iter().all(|v| v.abs() <= BOX_HALF_WIDTH);
    Ok(InstanceDoc {
        family: "lcqp".into(),
        seed: Some(seed),
        params: params(&[("n", n as f64), ("d", d as f64), ("rho", rho_wc)]),
        rho: rho_wc,
        objective: ObjectiveDoc::Quadratic {
            q: q0,
            c: c0,
            lipschitz: lf,
        },
        affine: Some(AffineDoc { a, b }),
        ineq: None,
        reg: uniform_box_doc(d),
        x_feas: inside.then(|| x_feas.clone()),
        x0: inside.then_some(x_feas),
        meta: BTreeMap::new(),
    })
}

pub fn gen_lcqp(n: usize, d: usize, rho_wc: f64, seed: u64) -> Result<ProblemInstance<f64>> {
    lcqp_doc(n, d, rho_wc, seed)?.build()
}

/// Nonconvex QCQP with `m` convex quadratic constraints
/// `½xᵀQ_jx + c_jᵀx ≤ γ_j`, strictly feasible at the origin.
///
/// Draw order: `Q₀` (basis, eigenvalues), `c₀`, then per constraint the
/// basis matrix, `d − 5` uniforms, `c_j`, one normal for `γ_j`.
pub fn qcqp_doc(m: usize, d: usize, rho_wc: f64, seed: u64) -> Result<InstanceDoc> {
    if d <= 5 {
        return Err(param(format!("qcqp needs d > 5, got d = {d}")));
    }
    if !(rho_wc > 0.0) {
        return Err(param(format!("weak-convexity constant must be positive, got {rho_wc}")));
    }
    let mut rng = SeededRng::new(seed);
    let (q0, lf) = shifted_psd(&mut rng, d, rho_wc)?;
    let c0 = rng.normals(d);
    let radius = BOX_HALF_WIDTH * (d as f64).sqrt();
    let mut terms = Vec::with_capacity(m);
    let mut lg = 0.0f64;
    let mut bg = 0.0f64;
    for _ in 0..m {
        let basis = random_orthonormal(&mut rng, d, d - 5)?;
        let eig: Vec<f64> = rng.uniforms(d - 5).iter().map(|u| 5.0 * u + 1.0).collect();
        let q = spectral_matrix(&basis, &eig, 0.0, d);
        let c = rng.normals(d);
        let gamma = (2.0 * rng.normal()).max(0.0) + 0.1;
        let lmax = eig.iter().copied().fold(0.0, f64::max);
        let cn = norm(&c);
        lg = lg.max(lmax);
        bg = bg
            .max(0.5 * lmax * radius * radius + cn * radius + gamma)
            .max(lmax * radius + cn);
        terms.push(QuadTermDoc { q, c, offset: gamma });
    }
    let ineq = (m > 0).then_some(IneqDoc {
        map: MapDoc::Quadratic { terms },
        smoothness: lg,
        bound: bg,
    });
    Ok(InstanceDoc {
        family: "qcqp".into(),
        seed: Some(seed),
        params: params(&[("m", m as f64), ("d", d as f64), ("rho", rho_wc)]),
        rho: rho_wc,
        objective: ObjectiveDoc::Quadratic {
            q: q0,
            c: c0,
            lipschitz: lf,
        },
        affine: None,
        ineq,
        reg: uniform_box_doc(d),
        x_feas: Some(vec![0.0; d]),
        x0: Some(vec![0.0; d]),
        meta: BTreeMap::new(),
    })
}

pub fn gen_qcqp(m: usize, d: usize, rho_wc: f64, seed: u64) -> Result<ProblemInstance<f64>> {
    qcqp_doc(m, d, rho_wc, seed)?.build()
}

/// Default eigenvalue shift of the robust least-squares quadratics.
pub const RNLS_Q_SHIFT: f64 = 1.0;

/// Robust nonlinear least squares `min ‖c(x)‖₁ s.t. Ax = b, x ∈ [−5, 5]^d`
/// with `c_i(x) = ½xᵀQ_ix + c_iᵀx`.
///
/// Draw order: `G`, `b`, then per quadratic the basis matrix, eigenvalue
/// normals, `c_i`.
pub fn rnls_doc(m: usize, n: usize, d: usize, q_shift: f64, seed: u64) -> Result<InstanceDoc> {
    if n == 0 || n >= d {
        return Err(param(format!("rnls needs 0 < n < d, got n = {n}, d = {d}")));
    }
    if m == 0 {
        return Err(param("rnls needs at least one residual (m ≥ 1)"));
    }
    let mut rng = SeededRng::new(seed);
    let (a, b) = affine_data(&mut rng, n, d);
    let mut terms = Vec::with_capacity(m);
    let mut lc = 0.0f64;
    for _ in 0..m {
        let (q, spec) = shifted_psd(&mut rng, d, q_shift)?;
        let c = rng.normals(d);
        lc = lc.max(spec);
        terms.push(QuadTermDoc { q, c, offset: 0.0 });
    }
    let ml = (m as f64).sqrt();
    let rho = ml * lc;
    let x_feas = affine_feasible(&b, d);
    let inside = x_feas.iter().all(|v| v.abs() <= BOX_HALF_WIDTH);
    Ok(InstanceDoc {
        family: "rnls".into(),
        seed: Some(seed),
        params: params(&[
            ("m", m as f64),
            ("n", n as f64),
            ("d", d as f64),
            ("q_shift", q_shift),
        ]),
        rho,
        objective: ObjectiveDoc::Composite {
            outer: Outer::L1,
            inner: MapDoc::Quadratic { terms },
            outer_lipschitz: ml,
            inner_smoothness: lc,
        },
        affine: Some(AffineDoc { a, b }),
        ineq: None,
        reg: uniform_box_doc(d),
        x_feas: inside.then(|| x_feas.clone()),
        x0: inside.then_some(x_feas),
        meta: BTreeMap::new(),
    })
}

pub fn gen_rnls(m: usize, n: usize, d: usize, seed: u64) -> Result<ProblemInstance<f64>> {
    rnls_doc(m, n, d, RNLS_Q_SHIFT, seed)?.build()
}
