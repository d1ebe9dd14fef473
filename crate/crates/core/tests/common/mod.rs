#![allow(dead_code)]

use std::sync::Arc;

use dpalm::linalg::Mat;
use dpalm::problem::{
    AffineBlock, IneqBlock, L1Residual, Objective, ProblemInstance, QuadraticFunction, QuadraticMap, QuadraticTerm,
    Regularizer,
};

pub fn quadratic_objective(q: Mat<f64>, c: Vec<f64>, lipschitz: f64) -> Objective<f64> {
    Objective::Smooth {
        f: Arc::new(QuadraticFunction { q, c }),
        lipschitz,
    }
}

/// `min ½‖x‖² − 1ᵀx  s.t.  x₁ + x₂ = 1,  x ∈ [−5, 5]²`
pub fn lcqp_2d() -> ProblemInstance<f64> {
    ProblemInstance::new(
        quadratic_objective(Mat::identity(2), vec![-1.0, -1.0], 1.0),
        Regularizer::uniform_box(2, -5.0, 5.0),
        1.0,
    )
    .with_affine(AffineBlock::new(Mat::from_rows(&[vec![1.0, 1.0]]), vec![1.0]))
    .with_start(vec![0.0, 0.0])
}

/// `min ½x² − 2x  s.t.  ½x² − ½ ≤ 0,  x ∈ [−5, 5]`
pub fn qcqp_1d() -> ProblemInstance<f64> {
    let g = QuadraticMap {
        terms: vec![QuadraticTerm {
            q: Mat::identity(1),
            c: vec![0.0],
            offset: 0.5,
        }],
    };
    ProblemInstance::new(
        quadratic_objective(Mat::identity(1), vec![-2.0], 1.0),
        Regularizer::uniform_box(1, -5.0, 5.0),
        1.0,
    )
    .with_ineq(IneqBlock::new(Arc::new(g), 1.0, 12.0))
    .with_feasible_point(vec![0.0])
    .with_start(vec![0.0])
}

/// `min ‖x‖₁  s.t.  aᵀx = b,  x ∈ [−r, r]^d`
pub fn abs_with_linear(a: Vec<f64>, b: f64, r: f64) -> ProblemInstance<f64> {
    let d = a.len();
    ProblemInstance::new(
        Objective::General {
            f: Arc::new(L1Residual {
                m: Mat::identity(d),
                q: vec![0.0; d],
            }),
            subgrad_bound: (d as f64).sqrt(),
        },
        Regularizer::uniform_box(d, -r, r),
        1.0,
    )
    .with_affine(AffineBlock::new(Mat::from_rows(&[a]), vec![b]))
    .with_start(vec![0.0; d])
}

/// Root of a nondecreasing function on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer of a 1-D function on `[lo, hi]` by grid scan then golden-section refinement.
pub fn scan_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|i| lo + i as f64 * h)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}
