//! Black-box objective abstraction and analytic test functions with known
//! optima, gradients and conditioning.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::linalg::Matrix;
use crate::{Error, Result};

type EvalFn = dyn Fn(&[f64], u64) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> Matrix + Send + Sync;

/// A deterministic scalar objective over `R^d`.
///
/// `evaluate` is pure: identical `(point, seed)` pairs yield bit-identical
/// results, and deterministic objectives ignore the seed entirely. Handles
/// are immutable after construction and cheap to clone, so they can be
/// shared freely across worker threads.
#[derive(Clone)]
pub struct ObjectiveHandle {
    dimension: usize,
    eval: Arc<EvalFn>,
    gradient: Option<Arc<GradFn>>,
    hessian: Option<Arc<HessFn>>,
    known_optimum: Option<Vec<f64>>,
}

impl fmt::Debug for ObjectiveHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveHandle")
            .field("dimension", &self.dimension)
            .field("has_gradient", &self.gradient.is_some())
            .field("has_hessian", &self.hessian.is_some())
            .field("known_optimum", &self.known_optimum)
            .finish()
    }
}

impl ObjectiveHandle {
    pub fn new<F>(dimension: usize, eval: F) -> Self
    where
        F: Fn(&[f64], u64) -> f64 + Send + Sync + 'static,
    {
        ObjectiveHandle {
            dimension,
            eval: Arc::new(eval),
            gradient: None,
            hessian: None,
            known_optimum: None,
        }
    }

    pub fn with_gradient<F>(mut self, gradient: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_hessian<F>(mut self, hessian: F) -> Self
    where
        F: Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_known_optimum(mut self, optimum: Vec<f64>) -> Self {
        assert_eq!(optimum.len(), self.dimension, "optimum dimension mismatch");
        self.known_optimum = Some(optimum);
        self
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn evaluate(&self, x: &[f64], seed: u64) -> f64 {
        assert_eq!(x.len(), self.dimension, "evaluate: dimension mismatch");
        (self.eval)(x, seed)
    }

    pub fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn analytic_hessian(&self, x: &[f64]) -> Option<Matrix> {
        self.hessian.as_ref().map(|h| h(x))
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn known_optimum(&self) -> Option<&[f64]> {
        self.known_optimum.as_deref()
    }
}

/// Quadratic with intrinsic dimensionality `k`:
/// `f(x) = ||x_:k||^2 + eps * ||x_k:||^2`.
///
/// The Hessian is diagonal with `k` entries equal to 2 and `d - k` entries
/// equal to `2 * eps`, so for `0 < k < d` and `eps > 0` the condition number
/// is exactly `1 / eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticKSpec {
    pub d: usize,
    pub k: usize,
    pub eps: f64,
}

impl QuadraticKSpec {
    pub fn new(d: usize, k: usize, eps: f64) -> Result<Self> {
        let spec = QuadraticKSpec { d, k, eps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("quadratic_k: dimension must be >= 1"));
        }
        if self.k == 0 || self.k > self.d {
            return Err(Error::invalid(format!(
                "quadratic_k: k must satisfy 1 <= k <= d, got k={}, d={}",
                self.k, self.d
            )));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::invalid("quadratic_k: eps must be nonnegative"));
        }
        Ok(())
    }

    /// Closed-form Hessian, `diag(2, ..., 2, 2eps, ..., 2eps)`.
    pub fn hessian(&self) -> Matrix {
        let mut diag = vec![2.0 * self.eps; self.d];
        for v in diag.iter_mut().take(self.k) {
            *v = 2.0;
        }
        Matrix::diag(&diag)
    }

    /// Closed-form condition number of the Hessian. Infinite when `eps == 0`
    /// and `k < d`; exactly 1 when `k == d`.
    pub fn condition_number(&self) -> f64 {
        if self.k == self.d {
            1.0
        } else if self.eps == 0.0 {
            f64::INFINITY
        } else if self.eps <= 1.0 {
            1.0 / self.eps
        } else {
            self.eps
        }
    }
}

/// Evaluates the intrinsic-dimensionality quadratic.
pub fn quadratic_k_eval(x: &[f64], spec: &QuadraticKSpec) -> Result<f64> {
    spec.validate()?;
    if x.len() != spec.d {
        return Err(Error::invalid(format!(
            "quadratic_k_eval: point has dimension {}, spec expects {}",
            x.len(),
            spec.d
        )));
    }
    let head: f64 = x[..spec.k].iter().map(|v| v * v).sum();
    let tail: f64 = x[spec.k..].iter().map(|v| v * v).sum();
    Ok(head + spec.eps * tail)
}

/// Rastrigin's function: `10 d + sum_i [x_i^2 - 10 cos(2 pi x_i)]`.
/// Global minimum 0 at the origin, local minima near every integer lattice
/// point.
pub fn rastrigin_eval(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    10.0 * d
        + x.iter()
            .map(|xi| xi * xi - 10.0 * (2.0 * std::f64::consts::PI * xi).cos())
            .sum::<f64>()
}

// Gaussian mode weights below this squared-distance threshold would reach
// the exp argument cap of 700; beyond it the contribution snaps to exact 0.
const GAUSS_SQ_CUTOFF: f64 = 1400.0;

fn gauss_of_sq(sq: f64) -> f64 {
    if sq >= GAUSS_SQ_CUTOFF {
        0.0
    } else {
        (-0.5 * sq).exp()
    }
}

/// The two mode contributions of the bimodal function: the unit-weight mode
/// at `+1` and the 0.8-weight mode at `-1`. Their sum is [`bimodal_eval`].
pub fn bimodal_terms(x: &[f64]) -> (f64, f64) {
    let sq_pos: f64 = x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum();
    let sq_neg: f64 = x.iter().map(|v| (v + 1.0) * (v + 1.0)).sum();
    (gauss_of_sq(sq_pos), 0.8 * gauss_of_sq(sq_neg))
}

/// Bimodal Gaussian test function
/// `exp(-||x - 1||^2 / 2) + 0.8 exp(-||x + 1||^2 / 2)`.
///
/// Higher is better: the dominant mode sits at the all-ones vector. Unlike
/// the cost-like test functions, this one is visualized and optimized as a
/// reward.
pub fn bimodal_eval(x: &[f64]) -> f64 {
    let (a, b) = bimodal_terms(x);
    a + b
}

/// Which analytic test function to construct.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObjectiveKind {
    QuadraticK(QuadraticKSpec),
    Rastrigin { dimension: usize },
    Bimodal { dimension: usize },
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    /// Parses `quadratic_k(d,k,eps)`, `rastrigin(d)` or `bimodal(d)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) if s.ends_with(')') => {
                (&s[..open], s[open + 1..s.len() - 1].to_string())
            }
            _ => (s, String::new()),
        };
        let parts: Vec<&str> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(str::trim).collect()
        };
        let parse_usize = |p: &str| -> Result<usize> {
            p.parse()
                .map_err(|_| Error::invalid(format!("objective: bad integer `{p}`")))
        };
        match name {
            "quadratic_k" => {
                if parts.len() != 3 {
                    return Err(Error::invalid("quadratic_k expects (d, k, eps)"));
                }
                let d = parse_usize(parts[0])?;
                let k = parse_usize(parts[1])?;
                let eps: f64 = parts[2]
                    .parse()
                    .map_err(|_| Error::invalid("quadratic_k: bad eps"))?;
                Ok(ObjectiveKind::QuadraticK(QuadraticKSpec::new(d, k, eps)?))
            }
            "rastrigin" => {
                if parts.len() != 1 {
                    return Err(Error::invalid("rastrigin expects (d)"));
                }
                Ok(ObjectiveKind::Rastrigin {
                    dimension: parse_usize(parts[0])?,
                })
            }
            "bimodal" => {
                if parts.len() != 1 {
                    return Err(Error::invalid("bimodal expects (d)"));
                }
                Ok(ObjectiveKind::Bimodal {
                    dimension: parse_usize(parts[0])?,
                })
            }
            other => Err(Error::invalid(format!("unknown objective kind `{other}`"))),
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveKind::QuadraticK(spec) => {
                write!(f, "quadratic_k({},{},{})", spec.d, spec.k, spec.eps)
            }
            ObjectiveKind::Rastrigin { dimension } => write!(f, "rastrigin({dimension})"),
            ObjectiveKind::Bimodal { dimension } => write!(f, "bimodal({dimension})"),
        }
    }
}

/// Builds an [`ObjectiveHandle`] for one of the analytic test functions.
///
/// The quadratic handle carries its analytic gradient and Hessian; all three
/// carry a known optimum (origin for the quadratic and Rastrigin, the
/// all-ones dominant mode for the bimodal function).
pub fn make_objective(kind: ObjectiveKind) -> Result<ObjectiveHandle> {
    match kind {
        ObjectiveKind::QuadraticK(spec) => {
            spec.validate()?;
            let handle = ObjectiveHandle::new(spec.d, move |x, _seed| {
                quadratic_k_eval(x, &spec).expect("dimension checked by handle")
            })
            .with_gradient(move |x| {
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| if i < spec.k { 2.0 * v } else { 2.0 * spec.eps * v })
                    .collect()
            })
            .with_hessian(move |_x| spec.hessian())
            .with_known_optimum(vec![0.0; spec.d]);
            Ok(handle)
        }
        ObjectiveKind::Rastrigin { dimension } => {
            if dimension == 0 {
                return Err(Error::invalid("rastrigin: dimension must be >= 1"));
            }
            Ok(ObjectiveHandle::new(dimension, |x, _seed| rastrigin_eval(x))
                .with_known_optimum(vec![0.0; dimension]))
        }
        ObjectiveKind::Bimodal { dimension } => {
            if dimension == 0 {
                return Err(Error::invalid("bimodal: dimension must be >= 1"));
            }
            Ok(ObjectiveHandle::new(dimension, |x, _seed| bimodal_eval(x))
                .with_known_optimum(vec![1.0; dimension]))
        }
    }
}
