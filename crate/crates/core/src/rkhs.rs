//! Minimum-norm Matérn kernel interpolation, the `p = 2` baseline.
//!
//! For `ν = k − d/2` the Matérn RKHS is norm-equivalent to `W^{k,2}(R^d)`.
//! The equivalence constants are not tracked, so RKHS norms reported here
//! are never compared with bump Sobolev norms.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::SobolevParams;
use crate::dataset::{sq_dist, Dataset};
use crate::error::{Error, Result};

/// Diagonal jitter tried in order until the interpolation residual is met.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];
/// Largest accepted `max_i |u(x_i) − y_i|`.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Largest system solved densely.
pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub nu: f64,
    pub lengthscale: f64,
}

impl KernelSpec {
    pub fn new(nu: f64, lengthscale: f64) -> Result<Self> {
        if nu != 0.5 && nu != 1.5 {
            return Err(Error::UnsupportedNu(nu));
        }
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::NonpositiveRadius(lengthscale));
        }
        Ok(Self { nu, lengthscale })
    }

    /// The Matérn kernel matching `W^{k,2}(R^d)`, `ν = k − d/2`.
    pub fn for_params(params: SobolevParams, lengthscale: f64) -> Result<Self> {
        if params.p != 2.0 {
            return Err(Error::InvalidParams(format!(
                "kernel baseline needs p = 2, got {}",
                params.p
            )));
        }
        Self::new(params.k as f64 - params.d as f64 / 2.0, lengthscale)
    }

    /// `k(r)` for `r ≥ 0`.
    pub fn eval(&self, r: f64) -> f64 {
        let t = r / self.lengthscale;
        if self.nu == 0.5 {
            (-t).exp()
        } else {
            let s = 3f64.sqrt() * t;
            (1.0 + s) * (-s).exp()
        }
    }
}

/// `k(r)` for the Matérn kernel with smoothness `nu`.
pub fn kernel_eval(spec: &KernelSpec, r: f64) -> Result<f64> {
    KernelSpec::new(spec.nu, spec.lengthscale)?;
    Ok(spec.eval(r))
}

/// Kernel matrix `K_ij = k(‖x_i − x_j‖)`, symmetric to the bit.
pub fn kernel_matrix(dataset: &Dataset, spec: &KernelSpec) -> DMatrix<f64> {
    let n = dataset.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = spec.eval(0.0);
        for j in 0..i {
            let v = spec.eval(sq_dist(dataset.point(i), dataset.point(j)).sqrt());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelInterpolant {
    dim: usize,
    centers: Vec<f64>,
    coefficients: Vec<f64>,
    spec: KernelSpec,
    jitter: f64,
    norm: f64,
    residual: f64,
}

impl KernelInterpolant {
    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Diagonal jitter of the accepted solve.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `max_i |u(x_i) − y_i|` with the unjittered kernel matrix.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `u(x) = Σ c_i k(‖x − x_i‖)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "query dimension");
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let xi = &self.centers[i * self.dim..(i + 1) * self.dim];
                c * self.spec.eval(sq_dist(x, xi).sqrt())
            })
            .sum()
    }

    /// `u` at every row of `points`, in order.
    pub fn eval_many(&self, points: &[f64]) -> Vec<f64> {
        points.par_chunks(self.dim).map(|x| self.eval(x)).collect()
    }

    /// CSV of the centers and coefficients, header `x_1..x_d,coefficient`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x_{j}")).collect();
        header.push("coefficient".into());
        w.write_record(&header)?;
        for (i, c) in self.coefficients.iter().enumerate() {
            let mut row: Vec<String> = self.centers[i * self.dim..(i + 1) * self.dim]
                .iter()
                .map(f64::to_string)
                .collect();
            row.push(c.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<kernel interpolant>", e))
    }
}

/// Solves `K c = y` by Cholesky, escalating through [`JITTER_LADDER`] until
/// the unjittered residual is at most [`RESIDUAL_TOL`].
pub fn min_norm_interpolant(dataset: &Dataset, spec: &KernelSpec) -> Result<KernelInterpolant> {
    let spec = KernelSpec::new(spec.nu, spec.lengthscale)?;
    let n = dataset.len();
    if n == 0 {
        return Err(Error::TooFewPoints(0));
    }
    if n > MAX_POINTS {
        return Err(Error::InvalidParams(format!(
            "dense kernel solve limited to {MAX_POINTS} points, got {n}"
        )));
    }
    let k = kernel_matrix(dataset, &spec);
    let y = DVector::from_column_slice(dataset.labels());
    for &jitter in &JITTER_LADDER {
        let mut a = k.clone();
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        let Some(chol) = a.cholesky() else { continue };
        let c = chol.solve(&y);
        if c.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let kc = &k * &c;
        let residual = kc
            .iter()
            .zip(y.iter())
            .map(|(u, y)| (u - y).abs())
            .fold(0.0, f64::max);
        if residual <= RESIDUAL_TOL {
            let norm = c.dot(&kc).max(0.0).sqrt();
            return Ok(KernelInterpolant {
                dim: dataset.dim(),
                centers: dataset.coords().to_vec(),
                coefficients: c.iter().copied().collect(),
                spec,
                jitter,
                norm,
                residual,
            });
        }
    }
    Err(Error::SolveFailed {
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

/// `√(cᵀ K c)`, the smallest RKHS norm among interpolants of the data.
pub fn rkhs_norm(interp: &KernelInterpolant) -> f64 {
    interp.norm
}
