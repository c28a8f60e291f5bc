//! Reference moduli `M_α = ∫_{R^d} |D^α ψ_1(x)|^p dx` of the unit bump.
//!
//! Everything else about bump norms is analytic: `∫|D^α ψ_δ|^p` equals
//! `δ^{d − |α|p} M_α`, and the `W^{k,p}` norm of `ψ_δ` is
//! `Σ_{|α| ≤ k} (δ^{d − |α|p} M_α)^{1/p}`.
//!
//! The integrand `|D^α ψ_1|^p` is invariant under every reflection
//! `x_j ↦ −x_j`, so the quadrature runs over `[0, 1]^d` and is multiplied by
//! `2^d`. The zero sets of first partials (`x_j = 0`) then fall on panel
//! edges, where `|·|^p` would otherwise lose smoothness for non-even `p`.

use std::fmt::Write as _;
use std::path::Path;

use super::{bump_partial, MultiIndex, SobolevParams};
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::quadrature::{integrate_adaptive, integrate_box};

/// Relative change between successive panel doublings at which the moduli
/// quadrature is accepted.
pub const MODULI_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModuli {
    params: SobolevParams,
    entries: Vec<(MultiIndex, f64)>,
    /// Panels per axis over `[0, 1]^d` in the accepted estimate.
    pub panels: usize,
    /// Largest relative change at the last refinement.
    pub rel_change: f64,
}

impl ReferenceModuli {
    pub fn params(&self) -> SobolevParams {
        self.params
    }

    pub fn entries(&self) -> &[(MultiIndex, f64)] {
        &self.entries
    }

    pub fn get(&self, alpha: &MultiIndex) -> Result<f64> {
        self.entries
            .iter()
            .find(|(a, _)| a == alpha)
            .map(|(_, m)| *m)
            .ok_or_else(|| Error::UnknownMultiIndex(alpha.0.clone()))
    }

    /// `M_0`, the `L^p` modulus of the unit bump itself.
    pub fn m0(&self) -> f64 {
        self.entries[0].1
    }

    /// `C_M = Σ_α max(M_α^{1/p}, 1)`, for which
    /// `‖ψ_δ‖ ≤ C_M (1 + δ^{(d − kp)/p})` whenever `0 < δ ≤ 1`.
    pub fn bump_constant(&self) -> f64 {
        let p = self.params.p;
        self.entries.iter().map(|(_, m)| m.powf(1.0 / p).max(1.0)).sum()
    }

    /// Constant `C` with `‖Σ y_i ψ_{δ_i/2}‖^p ≤ C Σ_i (1 + |y_i|^p δ_i^{d − kp})`
    /// for disjointly supported bumps whose radii satisfy `δ_i ≤ delta_max`.
    ///
    /// With `N` multi-indices, `(Σ_α a_α)^p ≤ N^{p−1} Σ_α a_α^p` and
    /// `δ^{d − |α|p} ≤ max(1, δ_max)^{(k − |α|)p} δ^{d − kp}` give
    /// `C = N^{p−1} Σ_α 2^{|α|p − d} max(1, δ_max)^{(k − |α|)p} M_α`.
    pub fn min_norm_constant(&self, delta_max: f64) -> f64 {
        let SobolevParams { k, p, d } = self.params;
        let n_alpha = self.entries.len() as f64;
        let top = delta_max.max(1.0);
        let sum: f64 = self
            .entries
            .iter()
            .map(|(a, m)| {
                let order = a.order() as f64;
                2f64.powf(order * p - d as f64) * top.powf((k as f64 - order) * p) * m
            })
            .sum();
        n_alpha.powf(p - 1.0) * sum
    }

    /// Key-value text form with every modulus in hexadecimal float notation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let SobolevParams { k, p, d } = self.params;
        writeln!(out, "# reference moduli M_alpha = integral of |D^alpha psi_1|^p").unwrap();
        writeln!(out, "k = {k}").unwrap();
        writeln!(out, "p = {}", hexfloat::format(p)).unwrap();
        writeln!(out, "d = {d}").unwrap();
        writeln!(out, "panels = {}", self.panels).unwrap();
        writeln!(out, "rel_change = {}", hexfloat::format(self.rel_change)).unwrap();
        for (a, m) in &self.entries {
            let idx: Vec<String> = a.0.iter().map(u32::to_string).collect();
            writeln!(out, "alpha {} = {}", idx.join(","), hexfloat::format(*m)).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut k = None;
        let mut p = None;
        let mut d = None;
        let mut panels = 0;
        let mut rel_change = 0.0;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| bad(format!("expected `key = value`, found {line:?}")))?;
            let hex = |v: &str| hexfloat::parse(v).ok_or_else(|| bad(format!("bad hex float {v:?}")));
            match key {
                "k" => k = Some(value.parse::<u32>().map_err(|e| bad(e.to_string()))?),
                "p" => p = Some(hex(value)?),
                "d" => d = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "panels" => panels = value.parse().map_err(|_| bad("bad panel count".into()))?,
                "rel_change" => rel_change = hex(value)?,
                _ => {
                    let idx = key
                        .strip_prefix("alpha ")
                        .ok_or_else(|| bad(format!("unknown key {key:?}")))?;
                    let alpha = idx
                        .split(',')
                        .map(|s| s.trim().parse::<u32>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| bad(e.to_string()))?;
                    entries.push((MultiIndex(alpha), hex(value)?));
                }
            }
        }
        let missing = |name: &str| Error::Parse {
            line: 0,
            message: format!("missing key {name}"),
        };
        let params = SobolevParams::new(
            k.ok_or_else(|| missing("k"))?,
            p.ok_or_else(|| missing("p"))?,
            d.ok_or_else(|| missing("d"))?,
        )?;
        let expected = MultiIndex::all_up_to(params.d, params.k as usize);
        let listed: Vec<&MultiIndex> = entries.iter().map(|(a, _)| a).collect();
        if listed != expected.iter().collect::<Vec<_>>() {
            return Err(Error::Parse {
                line: 0,
                message: "multi-index table does not cover exactly |alpha| <= k".into(),
            });
        }
        if entries.iter().any(|(_, m)| !(*m > 0.0)) {
            return Err(Error::Parse {
                line: 0,
                message: "moduli must be positive".into(),
            });
        }
        Ok(Self {
            params,
            entries,
            panels,
            rel_change,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn powered_partials(alphas: &[MultiIndex], p: f64, center: &[f64], delta: f64, x: &[f64], out: &mut [f64]) {
    let r2 = crate::dataset::sq_dist(x, center);
    if r2 >= delta * delta {
        out.fill(0.0);
        return;
    }
    for (o, a) in out.iter_mut().zip(alphas) {
        let v = bump_partial(a, center, delta, x).expect("validated multi-index");
        *o = v.abs().powf(p);
    }
}

/// Table of `M_α` for every `|α| ≤ k`, by adaptive tensor Gauss–Legendre
/// quadrature refined until successive estimates agree to [`MODULI_REL_TOL`].
pub fn reference_moduli(params: SobolevParams) -> Result<ReferenceModuli> {
    let SobolevParams { k, p, d } = params;
    let alphas = MultiIndex::all_up_to(d, k as usize);
    let center = vec![0.0; d];
    let lo = vec![0.0; d];
    let hi = vec![1.0; d];
    let res = integrate_adaptive(&lo, &hi, 1, alphas.len(), MODULI_REL_TOL, &|x, out| {
        powered_partials(&alphas, p, &center, 1.0, x, out)
    })?;
    let scale = (1u64 << d) as f64;
    let entries = alphas
        .into_iter()
        .zip(res.values)
        .map(|(a, v)| (a, v * scale))
        .collect();
    Ok(ReferenceModuli {
        params,
        entries,
        panels: res.panels,
        rel_change: res.rel_change,
    })
}

/// `∫|D^α ψ_1|^p` for a single multi-index, without the `kp > d`
/// restriction of a full table.
pub fn single_modulus(alpha: &MultiIndex, p: f64) -> Result<f64> {
    let d = alpha.dim();
    if d == 0 || d > super::MAX_DIM {
        return Err(Error::InvalidParams(format!("d = {d} unsupported")));
    }
    let center = vec![0.0; d];
    let alphas = [alpha.clone()];
    let res = integrate_adaptive(&vec![0.0; d], &vec![1.0; d], 1, 1, MODULI_REL_TOL, &|x, out| {
        powered_partials(&alphas, p, &center, 1.0, x, out)
    })?;
    Ok(res.values[0] * (1u64 << d) as f64)
}

/// Direct quadrature of `∫|D^α ψ_δ|^p` for the bump centred at `center`,
/// over the full box `center ± δ` with a fixed panel count. This route never
/// uses the scaling law and serves as its oracle.
pub fn direct_seminorms(
    alphas: &[MultiIndex],
    p: f64,
    center: &[f64],
    delta: f64,
    panels: usize,
) -> Vec<f64> {
    let lo: Vec<f64> = center.iter().map(|c| c - delta).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + delta).collect();
    integrate_box(&lo, &hi, panels, alphas.len(), &|x, out| {
        powered_partials(alphas, p, center, delta, x, out)
    })
}

/// `∫|D^α ψ_δ|^p = δ^{d − |α|p} M_α`.
pub fn scaled_seminorm(alpha: &MultiIndex, delta: f64, moduli: &ReferenceModuli) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveRadius(delta));
    }
    let m = moduli.get(alpha)?;
    let SobolevParams { p, d, .. } = moduli.params;
    Ok(delta.powf(d as f64 - alpha.order() as f64 * p) * m)
}

/// `‖ψ_δ‖_{W^{k,p}(R^d)} = Σ_{|α| ≤ k} (δ^{d − |α|p} M_α)^{1/p}`.
pub fn bump_norm(delta: f64, moduli: &ReferenceModuli) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveRadius(delta));
    }
    let SobolevParams { p, d, .. } = moduli.params;
    Ok(moduli
        .entries
        .iter()
        .map(|(a, m)| (delta.powf(d as f64 - a.order() as f64 * p) * m).powf(1.0 / p))
        .sum())
}
