//! Graph-regularized sparse NMF.
//!
//! The single-subject problem minimises
//!
//! ```text
//! 1/2 ||U - V W||_F^2 + lambda ||W||_1 + beta/2 Tr(W L W^T),   V, W >= 0
//! ```
//!
//! over `W` with `V` fixed after a multiplicative graph-NMF warm start, using a
//! fixed number `H` of proximal-gradient (ISTA) layers. The joint problem
//! couples `N` subjects through a common map `W*` with the extra term
//! `gamma/2 sum_i ||W_i - W*||_F^2`, alternating `H` layers per subject with a
//! weighted-average update of `W*`.
//!
//! The `1/2` on the graph and consensus terms makes the objective consistent
//! with the gradient used by the ISTA layers.

mod init;
mod ista;
mod joint;
mod objective;
mod shallow;
mod single;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;
use crate::rng::Seed;
use crate::Scalar;

pub use init::{init_gnmf, normalize_building_blocks, FLOOR};
pub use ista::{ista_step, ista_step_state, soft_threshold, IstaParams, IstaState};
pub use joint::{solve_joint, weighted_mean, JointModel};
pub use objective::{
    lipschitz_step, objective_joint, objective_single, smooth_gradient, smooth_objective,
};
pub use shallow::solve_shallow_sparse;
pub use single::{solve_single, SingleFit};

/// Inverse step size of the ISTA layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSize<T> {
    Fixed(T),
    #[serde(with = "auto_str")]
    Auto,
}

mod auto_str {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"auto\", got {s:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    /// Number of building blocks.
    pub k: usize,
    /// Sparsity weight.
    pub lambda: T,
    /// Graph weight.
    pub beta: T,
    /// Consensus weight.
    pub gamma: T,
    /// `c`, the inverse ISTA step size.
    pub step: StepSize<T>,
    /// Number of ISTA layers `H`.
    pub ista_iters: usize,
    /// Multiplicative warm-start updates.
    pub init_iters: usize,
    /// Per-subject weights of the common map; `None` means uniform.
    pub alpha: Option<Vec<T>>,
    /// Alternations between subject layers and the common-map update.
    pub outer_rounds: usize,
    pub seed: Seed,
    /// Stop a subject's layers early once `||W_h - W_{h-1}||_F <= tol ||W_{h-1}||_F`.
    pub tol: Option<T>,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(k: usize) -> Self {
        SolverConfig {
            k,
            lambda: T::zero(),
            beta: T::zero(),
            gamma: T::zero(),
            step: StepSize::Auto,
            ista_iters: 50,
            init_iters: 300,
            alpha: None,
            outer_rounds: 1,
            seed: Seed(0),
            tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        for (name, v) in [("lambda", self.lambda), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        if let StepSize::Fixed(c) = self.step {
            if !c.is_finite() || c <= T::zero() {
                return Err(Error::Config("step constant c must be > 0".into()));
            }
        }
        if self.ista_iters == 0 {
            return Err(Error::Config("ISTA iteration count H must be at least 1".into()));
        }
        if self.outer_rounds == 0 {
            return Err(Error::Config("outer_rounds must be at least 1".into()));
        }
        if let Some(alpha) = &self.alpha {
            if alpha.iter().any(|a| !a.is_finite() || *a <= T::zero()) {
                return Err(Error::Config("alpha weights must be > 0".into()));
            }
        }
        if let Some(tol) = self.tol {
            if !tol.is_finite() || tol < T::zero() {
                return Err(Error::Config("tol must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn ista_params(&self, c: T, coupled: bool) -> IstaParams<T> {
        IstaParams {
            lambda: self.lambda,
            beta: self.beta,
            gamma: if coupled { self.gamma } else { T::zero() },
            c,
        }
    }
}

/// Building blocks `V` (`m x k`) and weighting map `W` (`k x n`).
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair<T: Scalar> {
    pub v: NonNegMatrix<T>,
    pub w: NonNegMatrix<T>,
}

impl<T: Scalar> FactorPair<T> {
    pub fn k(&self) -> usize {
        self.v.cols()
    }

    /// `V W`.
    pub fn reconstruction(&self) -> ndarray::Array2<T> {
        self.v.as_array().dot(self.w.as_array())
    }
}

pub(crate) fn check_shapes<T: Scalar>(
    u: &NonNegMatrix<T>,
    lap: &crate::graph::GraphLaplacian<T>,
) -> Result<()> {
    if lap.size() != u.cols() {
        return Err(Error::Shape(format!(
            "Laplacian of size {} for {} points",
            lap.size(),
            u.cols()
        )));
    }
    Ok(())
}
