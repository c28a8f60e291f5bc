//! Smooth compactly supported bumps and their exact Sobolev norms.
//!
//! The profile `φ` is a `C^∞` step built from `h(s) = exp(−1/s)`:
//!
//! ```text
//! S(s) = h(s) / (h(s) + h(1 − s)),     φ(t) = S((1 − t) / (3/4))
//! ```
//!
//! so `φ = 1` on `[0, 1/4]` and `φ = 0` on `[1, ∞)`. The bump of radius `δ`
//! about `c` is `ψ_δ(x) = φ(‖x − c‖² / δ²)`: it equals 1 on `B(c, δ/2)` and
//! vanishes outside `B(c, δ)`.
//!
//! Partial derivatives `D^α ψ_δ` are computed by nested forward-mode
//! differentiation (see [`crate::dual`]). Integrals `∫|D^α ψ_δ|^p` follow from
//! the unit-radius moduli `M_α` by the change of variables `x = δ u`, which
//! gives `δ^{d − |α|p} M_α`; see [`moduli`].

pub mod moduli;

pub use moduli::{bump_norm, reference_moduli, scaled_seminorm, ReferenceModuli};

use crate::dual::{Dual1, Dual2, Dual3, Real, Seed};
use crate::error::{Error, Result};

/// Highest derivative order supported for bumps and moduli.
pub const MAX_ORDER: usize = 3;
/// Highest dimension supported for bumps and moduli.
pub const MAX_DIM: usize = 3;

/// Sobolev smoothness `k`, integrability `p` and dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SobolevParams {
    pub k: u32,
    pub p: f64,
    pub d: usize,
}

impl SobolevParams {
    /// Validated parameters: `k ≥ 1`, `p ≥ 1`, `d ∈ {1, 2, 3}`, `kp > d`.
    pub fn new(k: u32, p: f64, d: usize) -> Result<Self> {
        if k == 0 || k as usize > MAX_ORDER {
            return Err(Error::InvalidParams(format!("k = {k} must lie in 1..={MAX_ORDER}")));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParams(format!("p = {p} must be finite and >= 1")));
        }
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidParams(format!("d = {d} must lie in 1..={MAX_DIM}")));
        }
        if k as f64 * p <= d as f64 {
            return Err(Error::InvalidParams(format!(
                "need kp > d for pointwise evaluation (k = {k}, p = {p}, d = {d})"
            )));
        }
        Ok(Self { k, p, d })
    }

    /// Whether `k ∈ (d/p, 1.5 d/p)`, the regime of the harmful-overfitting
    /// lower bound.
    pub fn strict_range(&self) -> bool {
        let (lo, hi) = self.range();
        let k = self.k as f64;
        k > lo && k < hi
    }

    pub fn range(&self) -> (f64, f64) {
        let lo = self.d as f64 / self.p;
        (lo, 1.5 * lo)
    }

    /// `kp − d`, positive by construction.
    pub fn excess(&self) -> f64 {
        self.k as f64 * self.p - self.d as f64
    }

    /// Reference decay exponent `−pd/(kp − d)` of risk in `γ`.
    pub fn gamma_exponent(&self) -> f64 {
        -self.p * self.d as f64 / self.excess()
    }

    pub(crate) fn require_strict_range(&self) -> Result<()> {
        if self.strict_range() {
            Ok(())
        } else {
            let (lo, hi) = self.range();
            Err(Error::InvalidRange { k: self.k, lo, hi })
        }
    }
}

/// Multi-index `α = (α_1, …, α_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Axis list with multiplicity, e.g. `(1, 2)` → `[0, 1, 1]`.
    pub fn directions(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(j, &a)| std::iter::repeat_n(j, a as usize))
            .collect()
    }

    /// All multi-indices in `d` variables with `|α| ≤ k`, ordered by total
    /// order and then reverse-lexicographically (`(1,0)` before `(0,1)`).
    pub fn all_up_to(d: usize, k: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=k {
            let mut level = Vec::new();
            compositions(d, order, &mut Vec::with_capacity(d), &mut level);
            out.extend(level);
        }
        out
    }
}

fn compositions(d: usize, rest: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == d {
        prefix.push(rest as u32);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for a in (0..=rest).rev() {
        prefix.push(a as u32);
        compositions(d, rest - a, prefix, out);
        prefix.pop();
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (j, a) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Plateau end of the profile.
pub const PLATEAU_END: f64 = 0.25;
/// Support end of the profile.
pub const SUPPORT_END: f64 = 1.0;

#[inline]
fn smooth_step<T: Real>(s: T) -> T {
    let v = s.value();
    if v <= 0.0 {
        T::cst(0.0)
    } else if v >= 1.0 {
        T::cst(1.0)
    } else {
        let one = T::cst(1.0);
        let a = (-(one / s)).exp();
        let b = (-(one / (one - s))).exp();
        a / (a + b)
    }
}

/// The profile `φ(t)` for any scalar type.
#[inline]
pub fn profile<T: Real>(t: T) -> T {
    smooth_step((T::cst(1.0) - t) / T::cst(1.0 - PLATEAU_END))
}

/// `ψ_δ(x) = φ(‖x − c‖² / δ²)` for any scalar type.
#[inline]
pub fn bump_generic<T: Real>(center: &[f64], delta: f64, x: &[T]) -> T {
    let mut r2 = T::cst(0.0);
    for (xi, ci) in x.iter().zip(center) {
        let t = *xi - T::cst(*ci);
        r2 = r2 + t * t;
    }
    profile(r2 / T::cst(delta * delta))
}

/// `φ^{(j)}(t)` for `t ≥ 0`, `j ≤ 3`.
pub fn profile_eval(t: f64, derivative_order: usize) -> Result<f64> {
    Ok(match derivative_order {
        0 => profile(t),
        1 => profile(Dual1::var(t, &[true])).top(),
        2 => profile(Dual2::var(t, &[true, true])).top(),
        3 => profile(Dual3::var(t, &[true, true, true])).top(),
        j => return Err(Error::UnsupportedOrder(j)),
    })
}

/// `ψ_δ(x)` for the bump centred at `center`.
pub fn bump_eval(center: &[f64], delta: f64, x: &[f64]) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveRadius(delta));
    }
    Ok(bump_generic(center, delta, x))
}

fn partial_with<T: Seed>(dirs: &[usize], center: &[f64], delta: f64, x: &[f64]) -> f64 {
    let mut vars = [T::cst(0.0); MAX_DIM];
    let mut active = [false; MAX_ORDER];
    for (j, &xj) in x.iter().enumerate() {
        for (slot, &dir) in active.iter_mut().zip(dirs) {
            *slot = dir == j;
        }
        vars[j] = T::var(xj, &active[..dirs.len()]);
    }
    bump_generic(center, delta, &vars[..x.len()]).top()
}

/// Exact mixed partial `D^α ψ_δ(x)` by nested forward-mode differentiation.
pub fn bump_partial(alpha: &MultiIndex, center: &[f64], delta: f64, x: &[f64]) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveRadius(delta));
    }
    if alpha.dim() != x.len() || center.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.dim(),
            got: x.len(),
        });
    }
    if x.len() > MAX_DIM {
        return Err(Error::InvalidParams(format!("d = {} exceeds {MAX_DIM}", x.len())));
    }
    let dirs = alpha.directions();
    Ok(match dirs.len() {
        0 => bump_generic(center, delta, x),
        1 => partial_with::<Dual1>(&dirs, center, delta, x),
        2 => partial_with::<Dual2>(&dirs, center, delta, x),
        3 => partial_with::<Dual3>(&dirs, center, delta, x),
        m => return Err(Error::UnsupportedOrder(m)),
    })
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_validation_and_range() {
        assert!(SobolevParams::new(1, 1.0, 1).is_err()); // kp = d
        assert!(SobolevParams::new(0, 2.0, 1).is_err());
        assert!(SobolevParams::new(1, 2.0, 4).is_err());
        let p = SobolevParams::new(1, 1.25, 1).unwrap();
        assert!(p.strict_range());
        assert!((p.gamma_exponent() + 5.0).abs() < 1e-12);
        let p = SobolevParams::new(2, 2.0, 3).unwrap();
        assert!(p.strict_range());
        assert!((p.gamma_exponent() + 6.0).abs() < 1e-12);
        assert!(SobolevParams::new(1, 2.5, 2).unwrap().strict_range());
        assert!(!SobolevParams::new(2, 2.0, 1).unwrap().strict_range());
    }

    #[test]
    fn multi_index_enumeration() {
        let all = MultiIndex::all_up_to(2, 2);
        let got: Vec<Vec<u32>> = all.iter().map(|a| a.0.clone()).collect();
        assert_eq!(
            got,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        assert_eq!(MultiIndex::all_up_to(3, 2).len(), 10);
        assert_eq!(MultiIndex(vec![1, 2]).directions(), vec![0, 1, 1]);
    }

    #[test]
    fn profile_values() {
        assert_eq!(profile_eval(0.0, 0).unwrap(), 1.0);
        assert_eq!(profile_eval(0.25, 0).unwrap(), 1.0);
        assert_eq!(profile_eval(2.0, 0).unwrap(), 0.0);
        assert_eq!(profile_eval(1.0, 0).unwrap(), 0.0);
        let mid = profile_eval(0.5, 0).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
        // S(2/3) with h(s) = exp(-1/s).
        let s: f64 = 2.0 / 3.0;
        let h = |v: f64| (-1.0 / v).exp();
        assert!((mid - h(s) / (h(s) + h(1.0 - s))).abs() < 1e-15);
        for j in 1..=3 {
            assert_eq!(profile_eval(0.1, j).unwrap(), 0.0);
            assert_eq!(profile_eval(1.5, j).unwrap(), 0.0);
        }
        assert!(matches!(profile_eval(0.5, 4), Err(Error::UnsupportedOrder(4))));
        // Monotone decreasing on the transition.
        assert!(profile_eval(0.5, 1).unwrap() < 0.0);
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        for &t in &[0.3, 0.45, 0.6, 0.8, 0.95] {
            for j in 1..=3usize {
                let h = 1e-4;
                let lower = |s: f64| profile_eval(s, j - 1).unwrap();
                let fd = (lower(t - 2.0 * h) - 8.0 * lower(t - h) + 8.0 * lower(t + h)
                    - lower(t + 2.0 * h))
                    / (12.0 * h);
                let ad = profile_eval(t, j).unwrap();
                assert!((fd - ad).abs() <= 1e-6 * ad.abs().max(1.0), "t={t} j={j}: {fd} vs {ad}");
            }
        }
    }

    #[test]
    fn bump_plateau_support_and_range() {
        let c = [0.3, -0.2];
        assert_eq!(bump_eval(&c, 0.5, &c).unwrap(), 1.0);
        assert_eq!(bump_eval(&c, 0.5, &[0.8, -0.2]).unwrap(), 0.0);
        let v = bump_eval(&c, 1.0, &[0.9, -0.2]).unwrap();
        assert!((v - profile_eval(0.36, 0).unwrap()).abs() < 1e-15);
        assert!(v > 0.0 && v < 1.0);
        assert!(matches!(bump_eval(&c, 0.0, &c), Err(Error::NonpositiveRadius(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=3usize {
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let delta = rng.random_range(0.05..2.0);
            for _ in 0..10_000 {
                let x: Vec<f64> = center
                    .iter()
                    .map(|c| c + rng.random_range(-1.5..1.5) * delta)
                    .collect();
                let r = crate::dataset::sq_dist(&x, &center).sqrt();
                let v = bump_eval(&center, delta, &x).unwrap();
                assert!((0.0..=1.0).contains(&v));
                if r <= delta / 2.0 * (1.0 - 1e-12) {
                    assert_eq!(v, 1.0);
                }
                if r >= delta * (1.0 + 1e-12) {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn partials_vanish_on_plateau_and_scale() {
        let alphas = MultiIndex::all_up_to(3, 3);
        let c = [0.1, 0.2, -0.3];
        for a in alphas.iter().filter(|a| a.order() >= 1) {
            assert_eq!(bump_partial(a, &c, 0.7, &c).unwrap(), 0.0);
        }
        // D^α ψ_δ(c + δu) = δ^{-|α|} D^α ψ_1(u)
        let zero = [0.0; 3];
        let probes = [
            [0.6, 0.1, 0.0],
            [0.3, -0.4, 0.2],
            [-0.5, 0.5, 0.3],
            [0.0, 0.0, 0.8],
            [0.45, 0.45, -0.45],
        ];
        for delta in [0.25, 0.5, 3.0] {
            for a in &alphas {
                for u in &probes {
                    let x: Vec<f64> = u.iter().zip(&c).map(|(ui, ci)| ci + delta * ui).collect();
                    let lhs = bump_partial(a, &c, delta, &x).unwrap();
                    let rhs = delta.powi(-(a.order() as i32)) * bump_partial(a, &zero, 1.0, u).unwrap();
                    assert!(
                        (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300) + 1e-300,
                        "{a} δ={delta}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    /// Sixth-order central difference of `g` at 0 with one Richardson step.
    fn fd6<G: Fn(f64) -> f64>(g: &G, h: f64) -> f64 {
        let raw = |h: f64| {
            (-g(-3.0 * h) + 9.0 * g(-2.0 * h) - 45.0 * g(-h) + 45.0 * g(h) - 9.0 * g(2.0 * h)
                + g(3.0 * h))
                / (60.0 * h)
        };
        (64.0 * raw(h / 2.0) - raw(h)) / 63.0
    }

    /// Nested finite differences along `dirs`.
    fn fd_partial(dirs: &[usize], f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
        match dirs.split_first() {
            None => f(x),
            Some((&axis, rest)) => {
                let g = |t: f64| {
                    let mut y = x.to_vec();
                    y[axis] += t;
                    fd_partial(rest, f, &y, h)
                };
                fd6(&g, h)
            }
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for d in 1..=3usize {
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
            let delta = 0.8;
            let f = |x: &[f64]| bump_eval(&center, delta, x).unwrap();
            for _ in 0..20 {
                // Probes inside the transition shell, away from its edges.
                let mut dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let radius = delta * rng.random_range(0.55..0.9);
                dir.iter_mut().for_each(|v| *v *= radius / norm);
                let x: Vec<f64> = center.iter().zip(&dir).map(|(c, v)| c + v).collect();
                for a in MultiIndex::all_up_to(d, 2).iter().filter(|a| a.order() > 0) {
                    let ad = bump_partial(a, &center, delta, &x).unwrap();
                    let fd = fd_partial(&a.directions(), &f, &x, 1e-3);
                    assert!(
                        (ad - fd).abs() <= 1e-6 * ad.abs().max(1.0),
                        "d={d} α={a}: ad {ad} fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn third_order_partials_match_finite_differences() {
        let center = [0.0, 0.0];
        let f = |x: &[f64]| bump_eval(&center, 1.0, x).unwrap();
        for x in [[0.55, 0.3], [-0.4, 0.6], [0.7, -0.1]] {
            for a in MultiIndex::all_up_to(2, 3).iter().filter(|a| a.order() == 3) {
                let ad = bump_partial(a, &center, 1.0, &x).unwrap();
                let fd = fd_partial(&a.directions(), &f, &x, 1e-2);
                assert!((ad - fd).abs() <= 1e-6 * ad.abs().max(1.0), "α={a}: ad {ad} fd {fd}");
            }
        }
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
