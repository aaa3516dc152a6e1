//! Kernel functions and the induced feature-space distance.

use crate::sparse::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// exp(−‖x − z‖² / (2σ²))
    Gaussian { sigma: f64 },
    /// ⟨x, z⟩^degree
    Polynomial { degree: u32 },
}

/// A candidate kernel together with its position `id` in the candidate list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub id: usize,
}

impl KernelSpec {
    pub fn gaussian(id: usize, sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
        Self {
            kind: KernelKind::Gaussian { sigma },
            id,
        }
    }

    pub fn polynomial(id: usize, degree: u32) -> Self {
        assert!(degree > 0, "degree must be positive");
        Self {
            kind: KernelKind::Polynomial { degree },
            id,
        }
    }

    /// One Gaussian per bandwidth, ids assigned in order.
    pub fn gaussian_grid(sigmas: &[f64]) -> Vec<Self> {
        sigmas
            .iter()
            .enumerate()
            .map(|(i, &s)| Self::gaussian(i, s))
            .collect()
    }

    pub fn eval(&self, x: &SparseVec, z: &SparseVec) -> f64 {
        match self.kind {
            KernelKind::Gaussian { sigma } => (-x.sq_distance(z) / (2.0 * sigma * sigma)).exp(),
            KernelKind::Polynomial { degree } => x.dot(z).powi(degree as i32),
        }
    }

    /// κ(x, x). Constant 1 for Gaussians.
    pub fn self_eval(&self, x: &SparseVec) -> f64 {
        match self.kind {
            KernelKind::Gaussian { .. } => 1.0,
            KernelKind::Polynomial { degree } => x.sq_norm().powi(degree as i32),
        }
    }

    /// ‖κ(x,·) − κ(z,·)‖ in the kernel's RKHS.
    pub fn feature_distance(&self, x: &SparseVec, z: &SparseVec) -> f64 {
        (self.self_eval(x) + self.self_eval(z) - 2.0 * self.eval(x, z))
            .max(0.0)
            .sqrt()
    }

    /// Lower bound k1 on κ(u, u) over the unit-bounded domain.
    pub fn min_self_eval(&self) -> f64 {
        match self.kind {
            KernelKind::Gaussian { .. } => 1.0,
            // Zero at the origin; only used by the synthetic generator.
            KernelKind::Polynomial { .. } => 0.0,
        }
    }
}
