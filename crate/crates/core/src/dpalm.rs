//! Damped proximal augmented Lagrangian outer loop: schedules, damped dual
//! updates, per-case subproblem solves, stopping tests, and the trace.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::al::{
    assemble_subproblem_weighted, dual_candidates, kkt_from_parts, objective_subgradient, Case,
    DualState, KktResidual, SubproblemSplit,
};
use crate::apg::{apg_iteration_cap, apg_minimize, ApgConfig, ProxOperator};
use crate::error::{param, Error, Result};
use crate::linalg::{dist, norm};
use crate::problem::{box_diameter, validate_instance, ProblemInstance, SmoothFunction};
use crate::scalar::{lit, Scalar};

/// `β_k = β₀√(k+1)`
pub fn penalty_schedule<T: Scalar>(k: usize, beta0: T) -> T {
    beta0 * T::from_usize_lossy(k + 1).sqrt()
}

/// `v_k = v₀/(√(k+1)·ln²(k+1))` for `k ≥ 1`, `v₀` at `k = 0`.
pub fn damping_schedule<T: Scalar>(k: usize, v0: T) -> T {
    if k == 0 || v0.is_infinite() {
        return v0;
    }
    let kp = T::from_usize_lossy(k + 1);
    let l = kp.ln();
    v0 / (kp.sqrt() * l * l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleRule {
    /// `β₀√(k+1)` and `v₀/(√(k+1)·ln²(k+1))`.
    SqrtDefault,
    /// `β₀√(k+1)` and `v₀/√(k+1)`.
    SqrtPlain,
    /// `β₀·max{1, (k+1)ln²(k+1)}` and constant `v₀`.
    FullDualAlt,
}

impl fmt::Display for ScheduleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleRule::SqrtDefault => "sqrt-default",
            ScheduleRule::SqrtPlain => "sqrt-plain",
            ScheduleRule::FullDualAlt => "full-dual-alt",
        })
    }
}

impl FromStr for ScheduleRule {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sqrt-default" => Ok(ScheduleRule::SqrtDefault),
            "sqrt-plain" => Ok(ScheduleRule::SqrtPlain),
            "full-dual-alt" => Ok(ScheduleRule::FullDualAlt),
            _ => Err(format!(
                "unknown schedule {s:?}, expected sqrt-default, sqrt-plain or full-dual-alt"
            )),
        }
    }
}

/// Serializes `+∞` as `null` so JSON configs can express the full-step mode.
mod inf_as_null {
    use super::*;

    pub fn serialize<T: Scalar, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(&v.to_f64_lossy())
        }
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> std::result::Result<T, D::Error> {
        let v: Option<f64> = Option::deserialize(d)?;
        Ok(v.map_or(T::infinity(), T::lit))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Schedule<T> {
    pub beta0: T,
    /// `+∞` disables damping.
    #[serde(with = "inf_as_null")]
    pub v0: T,
    pub rule: ScheduleRule,
}

impl<T: Scalar> Default for Schedule<T> {
    fn default() -> Self {
        Self::new(T::one(), lit(200.0))
    }
}

impl<T: Scalar> Schedule<T> {
    pub fn new(beta0: T, v0: T) -> Self {
        Self {
            beta0,
            v0,
            rule: ScheduleRule::SqrtDefault,
        }
    }

    pub fn beta(&self, k: usize) -> T {
        match self.rule {
            ScheduleRule::SqrtDefault | ScheduleRule::SqrtPlain => penalty_schedule(k, self.beta0),
            ScheduleRule::FullDualAlt => {
                let kp = T::from_usize_lossy(k + 1);
                let l = kp.ln();
                self.beta0 * (kp * l * l).max(T::one())
            }
        }
    }

    pub fn v(&self, k: usize) -> T {
        match self.rule {
            ScheduleRule::SqrtDefault => damping_schedule(k, self.v0),
            ScheduleRule::SqrtPlain => self.v0 / T::from_usize_lossy(k + 1).sqrt(),
            ScheduleRule::FullDualAlt => self.v0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta0 > T::zero()) || !self.beta0.is_finite() {
            return Err(param(format!("β₀ must be positive and finite, got {}", self.beta0)));
        }
        if !(self.v0 > T::zero()) {
            return Err(param(format!("v₀ must be positive or +∞, got {}", self.v0)));
        }
        Ok(())
    }
}

/// `α = min{β, v/pres}` with `v/0 = +∞`.
pub fn dual_stepsize<T: Scalar>(beta: T, v: T, pres: T) -> T {
    if pres > T::zero() {
        beta.min(v / pres)
    } else {
        beta
    }
}

/// `y⁺ = y + α(Ax⁺ − b)`, `z⁺ = z + α·max{−z/β, g(x⁺)}`.
pub fn dual_update<T: Scalar>(
    dual: &DualState<T>,
    alpha: T,
    beta: T,
    affine_residual: &[T],
    g: &[T],
) -> Result<DualState<T>> {
    if !(alpha >= T::zero()) || alpha > beta {
        return Err(param(format!("dual stepsize α = {alpha} outside [0, β = {beta}]")));
    }
    let y = dual
        .y
        .iter()
        .zip(affine_residual)
        .map(|(&y, &r)| y + alpha * r)
        .collect();
    let z = dual
        .z
        .iter()
        .zip(g)
        .map(|(&z, &gi)| (z + alpha * (-z / beta).max(gi)).max(T::zero()))
        .collect();
    Ok(DualState { y, z })
}

/// How the inner tolerance `ε_k` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TolerancePolicy<T> {
    /// Case-specific formula; `c4` stands in for the Case II analysis constant.
    Theory { c4: T },
    /// `min{ε̄, √(ρ/(2β_k))}`.
    Fixed { eps_bar: T },
}

pub const DEFAULT_C4: f64 = 1.5;

pub fn subproblem_tolerance<T: Scalar>(
    case: Case,
    k: usize,
    eps: T,
    rho: T,
    beta: T,
    policy: TolerancePolicy<T>,
) -> T {
    let shrink = (rho / (lit::<T>(2.0) * beta)).sqrt();
    match policy {
        TolerancePolicy::Fixed { eps_bar } => eps_bar.min(shrink),
        TolerancePolicy::Theory { c4 } => {
            let base = match case {
                Case::I => eps / lit(8.0),
                Case::II => eps / (lit::<T>(16.0) * c4),
                Case::III => {
                    let kp = T::from_usize_lossy(k + 2);
                    let l = kp.ln();
                    (eps / lit(4.0))
                        .min(rho * eps / lit::<T>(2.0).sqrt())
                        .min(T::one() / (beta * kp * l * l))
                }
            };
            base.min(shrink).min(T::one())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopMetric {
    /// `max{pres, dres, cs} ≤ ε`
    FullKkt,
    /// `max{pres, ρ‖x^k − x^{k−1}‖} ≤ ε`
    NllsMetric,
}

impl FromStr for StopMetric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full-kkt" | "kkt" => Ok(StopMetric::FullKkt),
            "nlls-metric" | "nlls" => Ok(StopMetric::NllsMetric),
            _ => Err(format!("unknown metric {s:?}, expected full-kkt or nlls-metric")),
        }
    }
}

/// Initial `L` for each APG call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothnessPolicy {
    /// Reuse the previous subproblem's final `L`.
    WarmStart,
    /// Start every subproblem from its smoothness estimate `L̃`.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SolverConfig<T> {
    pub eps: T,
    /// Overrides the instance's weak-convexity constant.
    pub rho: Option<T>,
    pub schedule: Schedule<T>,
    /// `None` picks the case from the objective.
    pub case: Option<Case>,
    /// `None` means theory for Cases I/III and `Fixed { ε/8 }` for Case II.
    pub tol_policy: Option<TolerancePolicy<T>>,
    /// Case II smoothing parameter.
    pub nu: T,
    pub apg: ApgConfig<T>,
    pub max_outer: usize,
    pub metric: StopMetric,
    /// Proximal weight; `None` means `ρ`.
    pub prox_weight: Option<T>,
    pub smoothness: SmoothnessPolicy,
    /// Iteration cap of the Case III subgradient loop.
    pub subgradient_max_iters: usize,
    /// Record wall-clock time in the trace.
    pub timing: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            eps: lit(1e-3),
            rho: None,
            schedule: Schedule::new(T::one(), lit(200.0)),
            case: None,
            tol_policy: None,
            nu: lit(1e-3),
            apg: ApgConfig::default(),
            max_outer: 10_000,
            metric: StopMetric::FullKkt,
            prox_weight: None,
            smoothness: SmoothnessPolicy::WarmStart,
            subgradient_max_iters: 1_000_000,
            timing: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero()) {
            return Err(param(format!("ε must be positive, got {}", self.eps)));
        }
        if let Some(r) = self.rho {
            if !(r > T::zero()) {
                return Err(param(format!("ρ must be positive, got {r}")));
            }
        }
        self.schedule.validate()?;
        if let Some(TolerancePolicy::Fixed { eps_bar }) = self.tol_policy {
            if !(eps_bar > T::zero() && eps_bar <= T::one()) {
                return Err(param(format!("fixed ε̄ must lie in (0, 1], got {eps_bar}")));
            }
        }
        if !(self.nu > T::zero()) {
            return Err(param(format!("ν must be positive, got {}", self.nu)));
        }
        self.apg.validate()
    }

    fn policy_for(&self, case: Case) -> TolerancePolicy<T> {
        self.tol_policy.unwrap_or(match case {
            Case::II => TolerancePolicy::Fixed {
                eps_bar: self.eps / lit(8.0),
            },
            _ => TolerancePolicy::Theory { c4: lit(DEFAULT_C4) },
        })
    }
}

/// One trace row. Counters and `wall_ms` are cumulative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub beta: f64,
    pub v: f64,
    pub alpha: f64,
    pub pres: f64,
    pub dres: f64,
    pub cs: f64,
    pub inner_iters: usize,
    pub grad_evals: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    OuterCap,
    InnerError,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::OuterCap => "outer-cap",
            Status::InnerError => "inner-error",
        })
    }
}

/// How `dres` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DresMode {
    /// From the inner solver's stationarity certificate.
    Certificate,
    /// From the Case III gap bound.
    Gap,
}

/// Inner solve result.
#[derive(Clone, Debug)]
pub struct SubproblemOutcome<T> {
    pub x: Vec<T>,
    /// Element of `∂_x L̃` at `x` (Cases I/II).
    pub certificate: Option<Vec<T>>,
    /// Certified optimality-gap bound (Case III).
    pub gap_bound: Option<T>,
    pub iters: usize,
    pub grad_evals: usize,
    pub final_l: T,
    /// Inner target met (`‖w‖ ≤ ε_k`, or gap bound `≤ ε_k²/ρ`).
    pub target_met: bool,
}

/// Solves one proximal-AL subproblem from `x_start`.
#[allow(clippy::too_many_arguments)]
pub fn solve_subproblem<T: Scalar>(
    split: &SubproblemSplit<'_, T>,
    inst: &ProblemInstance<T>,
    x_start: &[T],
    eps_k: T,
    l_start: T,
    cfg: &SolverConfig<T>,
    rho: T,
) -> Result<SubproblemOutcome<T>> {
    match split.case {
        Case::I | Case::II => {
            let mut apg = ApgConfig {
                delta: eps_k,
                l0: l_start,
                ..cfg.apg
            };
            let diameter = box_diameter(&inst.reg);
            if diameter.is_finite() && diameter > T::zero() {
                if let Ok(cap) = apg_iteration_cap(split.smoothness, split.mu, diameter, eps_k, apg.gamma_u) {
                    apg.max_iters = apg.max_iters.min(cap.saturating_mul(10));
                }
            }
            let out = apg_minimize(&split.smooth, &split.prox, split.mu, x_start, &apg)?;
            Ok(SubproblemOutcome {
                x: out.x,
                certificate: Some(out.w),
                gap_bound: None,
                iters: out.stats.iters,
                grad_evals: out.stats.grad_evals,
                final_l: out.stats.final_l,
                target_met: out.stats.converged,
            })
        }
        Case::III => subgradient_loop(split, inst, x_start, eps_k, rho, cfg.subgradient_max_iters),
    }
}

/// Proximal subgradient method on `ψ + h̃` with `ψ = f + constraint terms +
/// (ρ/2)‖x − x^k‖²` and steps `2/(μ(t+2))`. The `(t+1)`-weighted average
/// satisfies the gap bound `2G²/(μ(T+1))`, `G` the largest subgradient norm seen.
fn subgradient_loop<T: Scalar>(
    split: &SubproblemSplit<'_, T>,
    inst: &ProblemInstance<T>,
    x_start: &[T],
    eps_k: T,
    rho: T,
    max_iters: usize,
) -> Result<SubproblemOutcome<T>> {
    let d = x_start.len();
    let mu = split.mu;
    let two = lit::<T>(2.0);
    let target = eps_k * eps_k / rho;
    let value = |x: &[T]| -> T {
        inst.objective.value(x) + split.smooth.value(x) + split.prox.value(x).unwrap_or(T::infinity())
    };

    let mut x = x_start.to_vec();
    let mut s = vec![T::zero(); d];
    let mut gs = vec![T::zero(); d];
    let mut u = vec![T::zero(); d];
    let mut avg = vec![T::zero(); d];
    let mut weight = T::zero();
    let mut g_max = T::zero();
    let mut best = x.clone();
    let mut best_val = value(&x);
    let mut bound = T::infinity();
    let mut t = 0usize;
    while t < max_iters {
        objective_subgradient(&inst.objective, &x, &mut s);
        split.smooth.gradient(&x, &mut gs);
        for (si, &gi) in s.iter_mut().zip(&gs) {
            *si += gi;
        }
        g_max = g_max.max(norm(&s));
        let eta = two / (mu * T::from_usize_lossy(t + 2));
        for i in 0..d {
            u[i] = x[i] - eta * s[i];
        }
        split.prox.prox(&u, eta, &mut x);
        t += 1;

        let w = T::from_usize_lossy(t);
        weight += w;
        for (a, &xi) in avg.iter_mut().zip(&x) {
            *a += (xi - *a) * w / weight;
        }
        let v = value(&x);
        if v < best_val {
            best_val = v;
            best.copy_from_slice(&x);
        }
        bound = two * g_max * g_max / (mu * T::from_usize_lossy(t + 1));
        if bound <= target {
            break;
        }
    }
    let x_out = if value(&avg) <= best_val { avg } else { best };
    Ok(SubproblemOutcome {
        x: x_out,
        certificate: None,
        gap_bound: Some(bound),
        iters: t,
        grad_evals: t,
        final_l: split.smoothness,
        target_met: bound <= target,
    })
}

/// Per-iteration view handed to run observers.
pub struct IterateView<'a, T> {
    pub k: usize,
    /// `x^{k+1}`
    pub x: &'a [T],
    /// `x^k`
    pub anchor: &'a [T],
    /// Multipliers after the damped update.
    pub dual: &'a DualState<T>,
    pub residual: KktResidual<T>,
    pub record: &'a IterationRecord,
    pub inner: &'a SubproblemOutcome<T>,
    pub eps_k: T,
}

#[derive(Clone, Debug)]
pub struct RunResult<T> {
    pub x: Vec<T>,
    /// Multiplier iterate after the last damped update.
    pub dual: DualState<T>,
    /// Candidate multipliers `(ȳ, z̄)` certifying the final residuals.
    pub multipliers: DualState<T>,
    pub residuals: KktResidual<T>,
    pub trace: Vec<IterationRecord>,
    pub status: Status,
    pub case: Case,
    pub dres_mode: DresMode,
    /// Whether each subproblem met its inner target.
    pub inner_target_met: Vec<bool>,
    pub error: Option<String>,
}

impl<T> RunResult<T> {
    pub fn k_final(&self) -> usize {
        self.trace.len()
    }
}

pub fn dpalm_run<T: Scalar>(inst: &ProblemInstance<T>, cfg: &SolverConfig<T>) -> Result<RunResult<T>> {
    dpalm_run_from(inst, cfg, None, None, |_| {})
}

/// As [`dpalm_run`], with an optional starting point and multipliers and a
/// callback after every outer iteration.
pub fn dpalm_run_from<T: Scalar, O>(
    inst: &ProblemInstance<T>,
    cfg: &SolverConfig<T>,
    x0: Option<&[T]>,
    dual0: Option<DualState<T>>,
    mut observe: O,
) -> Result<RunResult<T>>
where
    O: FnMut(&IterateView<'_, T>),
{
    cfg.validate()?;
    let problems = validate_instance(inst);
    if !problems.is_empty() {
        return Err(Error::Invalid(problems.join("; ")));
    }
    let case = cfg.case.unwrap_or_else(|| Case::for_objective(&inst.objective));
    let rho = cfg.rho.unwrap_or(inst.rho);
    let prox_weight = cfg.prox_weight.unwrap_or(rho);
    let policy = cfg.policy_for(case);
    let run_inst;
    let inst = if rho != inst.rho {
        run_inst = ProblemInstance {
            rho,
            ..inst.clone()
        };
        &run_inst
    } else {
        inst
    };

    let mut x = match x0 {
        Some(x0) => {
            inst.check_dim("starting point", x0)?;
            let mut x = x0.to_vec();
            inst.reg.project(&mut x);
            x
        }
        None => inst.default_start(),
    };
    let mut dual = match dual0 {
        Some(d) => {
            d.check(inst)?;
            if d.z.iter().any(|&z| !(z >= T::zero())) {
                return Err(param("initial inequality multipliers must be nonnegative"));
            }
            d
        }
        None => DualState::for_instance(inst),
    };

    let started = Instant::now();
    let mut trace = Vec::new();
    let mut inner_target_met = Vec::new();
    let mut l_warm = cfg.apg.l0;
    let mut grad_total = 0usize;
    let mut inner_total = 0usize;
    let mut residuals = KktResidual::default();
    let mut multipliers = dual.clone();
    let dres_mode = if case == Case::III {
        DresMode::Gap
    } else {
        DresMode::Certificate
    };

    for k in 0..cfg.max_outer {
        let beta = cfg.schedule.beta(k);
        let v = cfg.schedule.v(k);
        let eps_k = subproblem_tolerance(case, k, cfg.eps, rho, beta, policy);

        let outcome = {
            let split = assemble_subproblem_weighted(case, inst, &dual, beta, &x, cfg.nu, prox_weight)?;
            let l_start = match cfg.smoothness {
                SmoothnessPolicy::WarmStart => l_warm,
                SmoothnessPolicy::Fixed => split.smoothness,
            };
            match solve_subproblem(&split, inst, &x, eps_k, l_start, cfg, rho) {
                Ok(out) => {
                    let w = out.certificate.as_ref().map(|w| {
                        let modulus = split.proximal_modulus();
                        let mut r: Vec<T> = w
                            .iter()
                            .zip(out.x.iter().zip(&x))
                            .map(|(&wi, (&a, &b))| wi - modulus * (a - b))
                            .collect();
                        if let Some(c) = split.smooth.model_gradient_correction(&out.x) {
                            for (ri, ci) in r.iter_mut().zip(c) {
                                *ri += ci;
                            }
                        }
                        r
                    });
                    let gap_dres = out.gap_bound.map(|gap| {
                        let modulus = split.proximal_modulus();
                        modulus * (dist(&out.x, &x) + (lit::<T>(2.0) * gap / split.mu).sqrt())
                    });
                    Ok((out, w, gap_dres))
                }
                Err(e) => Err(e),
            }
        };
        let (outcome, stationarity, gap_dres) = match outcome {
            Ok(o) => o,
            Err(e) => {
                return Ok(RunResult {
                    x,
                    dual,
                    multipliers,
                    residuals,
                    trace,
                    status: Status::InnerError,
                    case,
                    dres_mode,
                    inner_target_met,
                    error: Some(e.to_string()),
                });
            }
        };
        l_warm = outcome.final_l;
        grad_total += outcome.grad_evals;
        inner_total += outcome.iters;
        inner_target_met.push(outcome.target_met);

        let x_next = &outcome.x;
        let r = inst.affine.residual(x_next);
        let g = inst.ineq.values(x_next);
        let (y_bar, z_bar) = dual_candidates(&dual, beta, &r, &g);
        let zeros = vec![T::zero(); x.len()];
        let mut kkt = kkt_from_parts(&r, &g, &z_bar, stationarity.as_deref().unwrap_or(&zeros), &zeros, T::zero());
        if let Some(dres) = gap_dres {
            kkt.dres = dres;
        }
        let alpha = dual_stepsize(beta, v, kkt.pres);
        let next_dual = dual_update(&dual, alpha, beta, &r, &g)?;
        let step = dist(x_next, &x);

        let record = IterationRecord {
            k,
            beta: beta.to_f64_lossy(),
            v: v.to_f64_lossy(),
            alpha: alpha.to_f64_lossy(),
            pres: kkt.pres.to_f64_lossy(),
            dres: kkt.dres.to_f64_lossy(),
            cs: kkt.cs.to_f64_lossy(),
            inner_iters: inner_total,
            grad_evals: grad_total,
            wall_ms: if cfg.timing {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        };
        observe(&IterateView {
            k,
            x: x_next,
            anchor: &x,
            dual: &next_dual,
            residual: kkt,
            record: &record,
            inner: &outcome,
            eps_k,
        });
        trace.push(record);

        let done = match cfg.metric {
            StopMetric::FullKkt => kkt.max() <= cfg.eps,
            StopMetric::NllsMetric => kkt.pres.max(rho * step) <= cfg.eps,
        };
        x = outcome.x;
        dual = next_dual;
        multipliers = DualState { y: y_bar, z: z_bar };
        residuals = kkt;
        if done {
            return Ok(RunResult {
                x,
                dual,
                multipliers,
                residuals,
                trace,
                status: Status::Converged,
                case,
                dres_mode,
                inner_target_met,
                error: None,
            });
        }
    }
    Ok(RunResult {
        x,
        dual,
        multipliers,
        residuals,
        trace,
        status: Status::OuterCap,
        case,
        dres_mode,
        inner_target_met,
        error: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn penalty_examples() {
        assert_abs_diff_eq!(penalty_schedule(3, 0.1), 0.2, epsilon = 1e-15);
        assert_eq!(penalty_schedule(0, 1.0), 1.0);
        assert_abs_diff_eq!(penalty_schedule(99, 0.1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn damping_examples() {
        let expect = 1.0 / (2.0 * 4f64.ln().powi(2));
        assert_abs_diff_eq!(damping_schedule(3, 1.0), expect, epsilon = 1e-15);
        assert!(damping_schedule(7, f64::INFINITY).is_infinite());
        assert_eq!(damping_schedule(0, 1.0), 1.0);
    }

    #[test]
    fn stepsize_examples() {
        assert_eq!(dual_stepsize(2.0, 1.0, 0.25), 2.0);
        assert_eq!(dual_stepsize(2.0, 1.0, 2.0), 0.5);
        assert_eq!(dual_stepsize(2.0, 1.0, 0.0), 2.0);
        assert_eq!(dual_stepsize(2.0, f64::INFINITY, 5.0), 2.0);
    }

    #[test]
    fn dual_update_examples() {
        let d = DualState { y: vec![0.0], z: vec![] };
        let n = dual_update(&d, 1.0, 2.0, &[0.3], &[]).unwrap();
        assert_abs_diff_eq!(n.y[0], 0.3, epsilon = 1e-15);
        let d = DualState { y: vec![], z: vec![1.0] };
        assert_eq!(dual_update(&d, 1.0, 2.0, &[], &[1.0]).unwrap().z, vec![2.0]);
        assert_eq!(dual_update(&d, 2.0, 2.0, &[], &[-3.0]).unwrap().z, vec![0.0]);
        assert!(matches!(dual_update(&d, 3.0, 2.0, &[], &[1.0]), Err(Error::Parameter(_))));
    }

    #[test]
    fn tolerance_examples() {
        let theory = TolerancePolicy::Theory { c4: 1.5 };
        assert_abs_diff_eq!(subproblem_tolerance(Case::I, 0, 1e-3, 1.0, 2.0, theory), 1.25e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(subproblem_tolerance(Case::III, 0, 0.1, 1.0, 1.0, theory), 0.025, epsilon = 1e-15);
        let fixed = TolerancePolicy::Fixed { eps_bar: 1e-3 };
        let e = subproblem_tolerance(Case::I, 0, 1e-3, 1.0, 1e8, fixed);
        assert_abs_diff_eq!(e, (0.5e-8f64).sqrt(), epsilon = 1e-18);
        assert_abs_diff_eq!(e, 7.07e-5, epsilon = 1e-7);
        assert_abs_diff_eq!(
            subproblem_tolerance(Case::II, 0, 1e-3, 1.0, 1.0, theory),
            1e-3 / 24.0,
            epsilon = 1e-18
        );
    }

    #[test]
    fn schedule_rules() {
        let mut s = Schedule::new(0.5, 2.0);
        assert_eq!(s.beta(3), 1.0);
        s.rule = ScheduleRule::SqrtPlain;
        assert_eq!(s.v(3), 1.0);
        s.rule = ScheduleRule::FullDualAlt;
        assert_eq!(s.beta(0), 0.5);
        let k = 9usize;
        assert_abs_diff_eq!(s.beta(k), 0.5 * 10.0 * 10f64.ln().powi(2), epsilon = 1e-12);
        assert_eq!(s.v(k), 2.0);
    }

    #[test]
    fn schedule_serializes_infinite_v0_as_null() {
        let s = Schedule::new(1.0, f64::INFINITY);
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"v0\":null"), "{j}");
        let back: Schedule<f64> = serde_json::from_str(&j).unwrap();
        assert!(back.v0.is_infinite());
    }
}
