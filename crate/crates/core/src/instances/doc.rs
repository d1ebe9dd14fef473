//! Serializable instance description. All data is stored as `f64`;
//! [`InstanceDoc::build`] produces a solver instance in any scalar type.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fairness::{SigmoidGap, SquaredLoss};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::problem::{
    AffineBlock, AffineMap, IneqBlock, L1Residual, Objective, ProblemInstance, QuadraticFunction,
    QuadraticMap, QuadraticTerm, Regularizer, VectorMap,
};
use crate::prox::Outer;
use crate::scalar::{lit, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadTermDoc {
    pub q: Mat<f64>,
    pub c: Vec<f64>,
    pub offset: f64,
}

/// Vector-valued maps that can appear as an inner map or a constraint block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MapDoc {
    /// Rows `½xᵀQ_jx + c_jᵀx − offset_j`.
    Quadratic { terms: Vec<QuadTermDoc> },
    /// `Mx + q`
    Affine { m: Mat<f64>, q: Vec<f64> },
    /// `mean_{i∈P} σ(a_iᵀx − θ) − mean_{i∈U} σ(a_iᵀx − θ)`
    SigmoidGap {
        features: Mat<f64>,
        protected: Vec<usize>,
        unprotected: Vec<usize>,
        theta: f64,
    },
    /// `(1/2|S|) Σ_{i∈S} (a_iᵀx − b_i)² − offset`
    SquaredLoss {
        features: Mat<f64>,
        labels: Vec<f64>,
        rows: Vec<usize>,
        offset: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ObjectiveDoc {
    /// `½xᵀQx + cᵀx`
    Quadratic { q: Mat<f64>, c: Vec<f64>, lipschitz: f64 },
    Composite {
        outer: Outer,
        inner: MapDoc,
        outer_lipschitz: f64,
        inner_smoothness: f64,
    },
    /// `‖Mx − q‖₁`
    L1Residual { m: Mat<f64>, q: Vec<f64>, subgrad_bound: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineDoc {
    pub a: Mat<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IneqDoc {
    pub map: MapDoc,
    pub smoothness: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizerDoc {
    pub lambda: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub family: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub rho: f64,
    pub objective: ObjectiveDoc,
    #[serde(default)]
    pub affine: Option<AffineDoc>,
    #[serde(default)]
    pub ineq: Option<IneqDoc>,
    pub reg: RegularizerDoc,
    #[serde(default)]
    pub x_feas: Option<Vec<f64>>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub meta: BTreeMap<String, f64>,
}

fn cast_vec<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| lit(x)).collect()
}

fn check_mat(what: &str, m: &Mat<f64>) -> Result<()> {
    if m.as_slice().len() != m.rows() * m.cols() {
        return Err(Error::Invalid(format!(
            "{what}: {}×{} matrix carries {} entries",
            m.rows(),
            m.cols(),
            m.as_slice().len()
        )));
    }
    Ok(())
}

fn check_rows(what: &str, rows: &[usize], n: usize) -> Result<()> {
    if let Some(&r) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::Invalid(format!("{what}: row index {r} out of range for {n} samples")));
    }
    Ok(())
}

impl MapDoc {
    fn build<T: Scalar>(&self) -> Result<Arc<dyn VectorMap<T>>> {
        Ok(match self {
            MapDoc::Quadratic { terms } => {
                for t in terms {
                    check_mat("quadratic term", &t.q)?;
                }
                Arc::new(QuadraticMap {
                    terms: terms
                        .iter()
                        .map(|t| QuadraticTerm {
                            q: t.q.cast(),
                            c: cast_vec(&t.c),
                            offset: lit(t.offset),
                        })
                        .collect(),
                })
            }
            MapDoc::Affine { m, q } => {
                check_mat("affine map", m)?;
                Arc::new(AffineMap {
                    m: m.cast(),
                    q: cast_vec(q),
                })
            }
            MapDoc::SigmoidGap {
                features,
                protected,
                unprotected,
                theta,
            } => {
                check_mat("sigmoid gap features", features)?;
                check_rows("protected group", protected, features.rows())?;
                check_rows("unprotected group", unprotected, features.rows())?;
                Arc::new(SigmoidGap::new(
                    features.cast(),
                    protected.clone(),
                    unprotected.clone(),
                    lit(*theta),
                )?)
            }
            MapDoc::SquaredLoss {
                features,
                labels,
                rows,
                offset,
            } => {
                check_mat("squared loss features", features)?;
                check_rows("squared loss rows", rows, features.rows())?;
                Arc::new(SquaredLoss::new(
                    features.cast(),
                    cast_vec(labels),
                    rows.clone(),
                    lit(*offset),
                )?)
            }
        })
    }
}

impl InstanceDoc {
    /// Builds the solver instance in scalar type `T`.
    pub fn build<T: Scalar>(&self) -> Result<ProblemInstance<T>> {
        let reg = Regularizer::box_l1(lit(self.reg.lambda), cast_vec(&self.reg.lower), cast_vec(&self.reg.upper));
        let objective = match &self.objective {
            ObjectiveDoc::Quadratic { q, c, lipschitz } => {
                check_mat("objective", q)?;
                Objective::Smooth {
                    f: Arc::new(QuadraticFunction {
                        q: q.cast::<T>(),
                        c: cast_vec(c),
                    }),
                    lipschitz: lit(*lipschitz),
                }
            }
            ObjectiveDoc::Composite {
                outer,
                inner,
                outer_lipschitz,
                inner_smoothness,
            } => Objective::Composite {
                outer: *outer,
                inner: inner.build()?,
                outer_lipschitz: lit(*outer_lipschitz),
                inner_smoothness: lit(*inner_smoothness),
            },
            ObjectiveDoc::L1Residual { m, q, subgrad_bound } => {
                check_mat("objective", m)?;
                Objective::General {
                    f: Arc::new(L1Residual {
                        m: m.cast::<T>(),
                        q: cast_vec(q),
                    }),
                    subgrad_bound: lit(*subgrad_bound),
                }
            }
        };
        let mut inst = ProblemInstance::new(objective, reg, lit(self.rho));
        if let Some(aff) = &self.affine {
            check_mat("affine block", &aff.a)?;
            inst = inst.with_affine(AffineBlock::new(aff.a.cast(), cast_vec(&aff.b)));
        }
        if let Some(ineq) = &self.ineq {
            inst = inst.with_ineq(IneqBlock::new(ineq.map.build()?, lit(ineq.smoothness), lit(ineq.bound)));
        }
        if let Some(x) = &self.x_feas {
            inst = inst.with_feasible_point(cast_vec(x));
        }
        if let Some(x) = &self.x0 {
            inst = inst.with_start(cast_vec(x));
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{lcqp_doc, qcqp_doc, rnls_doc};

    #[test]
    fn json_round_trip_is_exact() {
        for doc in [
            lcqp_doc(2, 8, 1.0, 3).unwrap(),
            qcqp_doc(2, 8, 0.5, 3).unwrap(),
            rnls_doc(2, 2, 8, 1.0, 3).unwrap(),
        ] {
            let s = doc.to_json().unwrap();
            let back = InstanceDoc::from_json(&s).unwrap();
            assert_eq!(back, doc);
            assert_eq!(back.to_json().unwrap(), s);
        }
    }

    #[test]
    fn builds_in_single_precision() {
        let inst = qcqp_doc(2, 8, 0.5, 3).unwrap().build::<f32>().unwrap();
        assert!(crate::problem::validate_instance(&inst).is_empty());
    }

    #[test]
    fn rejects_inconsistent_matrix() {
        let mut doc = lcqp_doc(2, 8, 1.0, 3).unwrap();
        let text = doc.to_json().unwrap().replacen("\"rows\":2", "\"rows\":3", 1);
        doc = InstanceDoc::from_json(&text).unwrap();
        assert!(doc.build::<f64>().is_err());
    }
}
