//! The bump-sum interpolant `f = Σ y_i ψ_i` with disjoint supports.
//!
//! Point `i` carries a bump of support radius `r_i = s·δ_i/2` (plateau
//! radius `r_i/2`), where `δ_i` is its nearest-neighbor radius and
//! `s ∈ (0, 1]` the shrink factor. Shrinking the bumps keeps interpolation
//! exact but raises the norm, which gives a concrete family of
//! approximately norm-minimizing interpolants.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::{bump_generic, bump_partial, MultiIndex, ReferenceModuli, SobolevParams};
use crate::dataset::{sq_dist, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{check_packing, KdTree, NnRadii};

/// Largest `|f(x_i) − y_i|` accepted as interpolation.
pub const INTERPOLATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BumpInterpolant {
    params: SobolevParams,
    shrink: f64,
    dim: usize,
    centers: Vec<f64>,
    radii: Vec<f64>,
    weights: Vec<f64>,
    r_max: f64,
    index: KdTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub norm_f: f64,
    /// Norm of the `s = 1` interpolant of the same data, an upper bound on
    /// the minimum interpolating norm.
    pub bump_upper_bound_norm: f64,
    /// `norm_f / bump_upper_bound_norm`. The true factor `γ` of `f` is at
    /// least `max(1, gamma_lower_bound)`.
    pub gamma_lower_bound: f64,
}

impl BumpInterpolant {
    /// Builds `Σ y_i ψ_{s δ_i / 2}( · − x_i)`.
    pub fn build(
        dataset: &Dataset,
        radii: &NnRadii,
        shrink: f64,
        params: SobolevParams,
    ) -> Result<Self> {
        if !(shrink > 0.0 && shrink <= 1.0) {
            return Err(Error::InvalidShrink(shrink));
        }
        if radii.len() != dataset.len() {
            return Err(Error::MismatchedLengths {
                expected: dataset.len(),
                got: radii.len(),
            });
        }
        if dataset.dim() != params.d {
            return Err(Error::DimensionMismatch {
                expected: params.d,
                got: dataset.dim(),
            });
        }
        let support: Vec<f64> = radii.as_slice().iter().map(|&r| shrink * r / 2.0).collect();
        if let Some(&r) = support.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::NonpositiveRadius(r));
        }
        let diameters: Vec<f64> = support.iter().map(|r| 2.0 * r).collect();
        if let Some(&(i, j)) = check_packing(dataset, &diameters)?.first() {
            return Err(Error::OverlappingSupports(i, j));
        }
        let r_max = support.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            params,
            shrink,
            dim: dataset.dim(),
            centers: dataset.coords().to_vec(),
            index: KdTree::new(dataset.dim(), dataset.coords().to_vec()),
            radii: support,
            weights: dataset.labels().to_vec(),
            r_max,
        })
    }

    pub fn params(&self) -> SobolevParams {
        self.params
    }

    pub fn shrink(&self) -> f64 {
        self.shrink
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn support_radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices whose open support can contain `x`, in increasing order.
    fn candidates(&self, x: &[f64]) -> Vec<usize> {
        self.index
            .within(x, self.r_max * self.r_max, None)
            .into_iter()
            .filter(|&i| sq_dist(x, self.center(i)) < self.radii[i] * self.radii[i])
            .collect()
    }

    /// `f(x)`. Only bumps whose support can reach `x` are summed; every other
    /// term of the full sum is an exact zero, so the result matches
    /// [`Self::eval_brute`] to the bit.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "query dimension");
        let mut acc = 0.0;
        for i in self.candidates(x) {
            acc += self.weights[i] * bump_generic(self.center(i), self.radii[i], x);
        }
        acc
    }

    /// `f(x)` by summing all `n` bumps.
    pub fn eval_brute(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "query dimension");
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += self.weights[i] * bump_generic(self.center(i), self.radii[i], x);
        }
        acc
    }

    /// `f` at every row of `points` (row-major, `dim` columns), in order.
    pub fn eval_many(&self, points: &[f64]) -> Vec<f64> {
        points.par_chunks(self.dim).map(|x| self.eval(x)).collect()
    }

    /// `D^α f(x)`.
    pub fn partial(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for i in self.candidates(x) {
            acc += self.weights[i] * bump_partial(alpha, self.center(i), self.radii[i], x)?;
        }
        Ok(acc)
    }

    /// Largest `|f(x_i) − y_i|` over a dataset.
    pub fn max_interpolation_error(&self, dataset: &Dataset) -> f64 {
        (0..dataset.len())
            .map(|i| (self.eval(dataset.point(i)) - dataset.label(i)).abs())
            .fold(0.0, f64::max)
    }

    /// `‖f‖_{W^{k,p}} = Σ_α (Σ_i |y_i|^p r_i^{d − |α|p} M_α)^{1/p}`, exact
    /// because the supports are disjoint.
    pub fn sobolev_norm(&self, moduli: &ReferenceModuli) -> Result<f64> {
        if moduli.params() != self.params {
            return Err(Error::ParamsMismatch);
        }
        let SobolevParams { p, d, .. } = self.params;
        let mut norm = 0.0;
        for (alpha, m) in moduli.entries() {
            let e = d as f64 - alpha.order() as f64 * p;
            let sum: f64 = self
                .weights
                .iter()
                .zip(&self.radii)
                .map(|(y, r)| y.abs().powf(p) * r.powf(e))
                .sum();
            norm += (sum * m).powf(1.0 / p);
        }
        Ok(norm)
    }

    /// Certified lower bound on the norm-optimality factor of `self`,
    /// measured against the `s = 1` interpolant of the same data.
    pub fn gamma_report(
        &self,
        dataset: &Dataset,
        radii: &NnRadii,
        moduli: &ReferenceModuli,
    ) -> Result<GammaReport> {
        if dataset.len() != self.len() {
            return Err(Error::MismatchedLengths {
                expected: self.len(),
                got: dataset.len(),
            });
        }
        for i in 0..dataset.len() {
            let error = (self.eval(dataset.point(i)) - dataset.label(i)).abs();
            if !(error <= INTERPOLATION_TOL) {
                return Err(Error::NotInterpolating { index: i, error });
            }
        }
        let norm_f = self.sobolev_norm(moduli)?;
        let reference = Self::build(dataset, radii, 1.0, self.params)?;
        let bump_upper_bound_norm = reference.sobolev_norm(moduli)?;
        Ok(GammaReport {
            norm_f,
            bump_upper_bound_norm,
            gamma_lower_bound: norm_f / bump_upper_bound_norm,
        })
    }

    /// CSV text: a `# k=.. p=.. d=.. shrink=..` line, a header
    /// `c_1,..,c_d,radius,weight`, then one row per bump.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        let SobolevParams { k, p, d } = self.params;
        let mut text = format!("# k={k} p={p} d={d} shrink={}\n", self.shrink);
        let header: Vec<String> = (1..=d).map(|j| format!("c_{j}")).collect();
        writeln!(text, "{},radius,weight", header.join(",")).unwrap();
        for i in 0..self.len() {
            for c in self.center(i) {
                write!(text, "{c},").unwrap();
            }
            writeln!(text, "{},{}", self.radii[i], self.weights[i]).unwrap();
        }
        writer
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<interpolant>", e))
    }

    /// Inverse of [`Self::write_csv`]. Disjointness of the stored supports is
    /// re-checked.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let meta = match lines.next() {
            Some(line) => line.map_err(|e| Error::io("<interpolant>", e))?,
            None => return Err(parse_err(1, "empty input")),
        };
        let (params, shrink) = parse_meta(&meta)?;
        let d = params.d;
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::io("<interpolant>", e))?,
            None => return Err(parse_err(2, "missing header")),
        };
        let mut expected: Vec<String> = (1..=d).map(|j| format!("c_{j}")).collect();
        expected.push("radius".into());
        expected.push("weight".into());
        if header.trim() != expected.join(",") {
            return Err(parse_err(2, "header must be c_1,..,c_d,radius,weight"));
        }
        let (mut centers, mut radii, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for (offset, line) in lines.enumerate() {
            let line_no = offset + 3;
            let line = line.map_err(|e| Error::io("<interpolant>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| parse_err(line_no, &e.to_string()))?;
            if fields.len() != d + 2 {
                return Err(parse_err(line_no, &format!("expected {} fields", d + 2)));
            }
            if !(fields[d] > 0.0) {
                return Err(parse_err(line_no, "radius must be positive"));
            }
            centers.extend_from_slice(&fields[..d]);
            radii.push(fields[d]);
            weights.push(fields[d + 1]);
        }
        let n = weights.len();
        let data = Dataset::new(d, centers.clone(), weights.clone())?;
        let diameters: Vec<f64> = radii.iter().map(|r| 2.0 * r).collect();
        if let Some(&(i, j)) = check_packing(&data, &diameters)?.first() {
            return Err(Error::OverlappingSupports(i, j));
        }
        let r_max = radii.iter().copied().fold(0.0, f64::max);
        debug_assert_eq!(radii.len(), n);
        Ok(Self {
            params,
            shrink,
            dim: d,
            index: KdTree::new(d, centers.clone()),
            centers,
            radii,
            weights,
            r_max,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

fn parse_meta(line: &str) -> Result<(SobolevParams, f64)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(1, "expected `# k=.. p=.. d=.. shrink=..`"))?;
    let (mut k, mut p, mut d, mut s) = (None, None, None, None);
    for item in body.split_whitespace() {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| parse_err(1, &format!("bad item `{item}`")))?;
        let bad = || parse_err(1, &format!("bad value for `{key}`"));
        match key {
            "k" => k = Some(value.parse::<u32>().map_err(|_| bad())?),
            "p" => p = Some(value.parse::<f64>().map_err(|_| bad())?),
            "d" => d = Some(value.parse::<usize>().map_err(|_| bad())?),
            "shrink" => s = Some(value.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(parse_err(1, &format!("unknown key `{key}`"))),
        }
    }
    match (k, p, d, s) {
        (Some(k), Some(p), Some(d), Some(s)) => {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::InvalidShrink(s));
            }
            Ok((SobolevParams::new(k, p, d)?, s))
        }
        _ => Err(parse_err(1, "metadata needs k, p, d and shrink")),
    }
}

/// `C · Σ_i (1 + |y_i|^p δ_i^{d − kp})`, an upper bound on the `p`-th power
/// of the norm of the `s = 1` interpolant. The constant is
/// [`ReferenceModuli::min_norm_constant`] at the largest radius.
pub fn min_norm_upper_bound(
    dataset: &Dataset,
    radii: &NnRadii,
    moduli: &ReferenceModuli,
) -> Result<f64> {
    if radii.len() != dataset.len() {
        return Err(Error::MismatchedLengths {
            expected: dataset.len(),
            got: radii.len(),
        });
    }
    let SobolevParams { k, p, d } = moduli.params();
    let e = d as f64 - k as f64 * p;
    let c = moduli.min_norm_constant(radii.max());
    let sum: f64 = dataset
        .labels()
        .iter()
        .zip(radii.as_slice())
        .map(|(y, delta)| 1.0 + y.abs().powf(p) * delta.powf(e))
        .sum();
    Ok(c * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::{bump_norm, reference_moduli};
    use crate::geometry::nn_radii;
    use crate::quadrature::integrate_box;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(k: u32, p: f64, d: usize) -> SobolevParams {
        SobolevParams::new(k, p, d).unwrap()
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
        let coords: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        Dataset::new(d, coords, labels).unwrap()
    }

    #[test]
    fn small_examples() {
        let data = Dataset::from_line(&[0.0, 10.0], &[1.0, 0.0]).unwrap();
        let radii = nn_radii(&data).unwrap();
        let f = BumpInterpolant::build(&data, &radii, 1.0, params(1, 2.0, 1)).unwrap();
        assert_eq!(f.eval(&[0.0]), 1.0);
        assert_eq!(f.eval(&[5.0]), 0.0);
        assert_eq!(f.eval(&[1e6]), 0.0);

        let data = Dataset::from_line(&[0.0, 1.0], &[2.0, -3.0]).unwrap();
        let radii = nn_radii(&data).unwrap();
        let f = BumpInterpolant::build(&data, &radii, 1.0, params(1, 2.0, 1)).unwrap();
        assert_eq!(f.support_radii(), &[0.5, 0.5]);
        assert_eq!((f.eval(&[0.0]), f.eval(&[1.0]), f.eval(&[0.5])), (2.0, -3.0, 0.0));

        let g = BumpInterpolant::build(&data, &radii, 0.5, params(1, 2.0, 1)).unwrap();
        assert_eq!(g.support_radii(), &[0.25, 0.25]);
        assert_eq!((g.eval(&[0.0]), g.eval(&[1.0])), (2.0, -3.0));
        assert_eq!(g.eval(&[0.3]), 0.0);

        for s in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                BumpInterpolant::build(&data, &radii, s, params(1, 2.0, 1)),
                Err(Error::InvalidShrink(_))
            ));
        }
    }

    #[test]
    fn interpolates_and_index_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..=3 {
            let data = random_dataset(&mut rng, 200, d);
            let radii = nn_radii(&data).unwrap();
            let f = BumpInterpolant::build(&data, &radii, 0.9, params(2, 2.0, d)).unwrap();
            assert!(f.max_interpolation_error(&data) <= 1e-12);
            let probes: Vec<f64> = (0..2000 * d).map(|_| rng.random_range(-1.1..1.1)).collect();
            let many = f.eval_many(&probes);
            for (x, v) in probes.chunks(d).zip(&many) {
                assert_eq!(v.to_bits(), f.eval_brute(x).to_bits());
            }
        }
    }

    #[test]
    fn norm_formula_examples() {
        let m = reference_moduli(params(1, 2.0, 1)).unwrap();
        let data = Dataset::from_line(&[0.0, 2.0], &[1.0, 0.0]).unwrap();
        let radii = nn_radii(&data).unwrap();
        let f = BumpInterpolant::build(&data, &radii, 1.0, params(1, 2.0, 1)).unwrap();
        let got = f.sobolev_norm(&m).unwrap();
        assert!((got - bump_norm(1.0, &m).unwrap()).abs() <= 1e-14 * got);

        let data = Dataset::from_line(&[0.0, 0.7, 2.0], &[1.0, -0.4, 3.0]).unwrap();
        let radii = nn_radii(&data).unwrap();
        let f = BumpInterpolant::build(&data, &radii, 1.0, params(1, 2.0, 1)).unwrap();
        let scaled = data.with_labels(data.labels().iter().map(|y| 2.5 * y).collect()).unwrap();
        let g = BumpInterpolant::build(&scaled, &radii, 1.0, params(1, 2.0, 1)).unwrap();
        let (a, b) = (f.sobolev_norm(&m).unwrap(), g.sobolev_norm(&m).unwrap());
        assert!((b - 2.5 * a).abs() <= 1e-13 * b);

        let other = reference_moduli(params(1, 2.5, 1)).unwrap();
        assert!(matches!(f.sobolev_norm(&other), Err(Error::ParamsMismatch)));
    }

    /// Full quadrature of `Σ_α (∫|D^α f|^p)^{1/p}` over a box covering all
    /// supports, with panel edges on the centers.
    fn quadrature_norm(f: &BumpInterpolant, lo: &[f64], hi: &[f64], panels: usize) -> f64 {
        let SobolevParams { k, p, d } = f.params();
        let alphas = MultiIndex::all_up_to(d, k as usize);
        let sums = integrate_box(lo, hi, panels, alphas.len(), &|x, out| {
            for (o, a) in out.iter_mut().zip(&alphas) {
                *o = f.partial(a, x).unwrap().abs().powf(p);
            }
        });
        sums.iter().map(|s| s.powf(1.0 / p)).sum()
    }

    #[test]
    fn norm_formula_matches_quadrature() {
        let cases: Vec<(SobolevParams, Dataset)> = vec![
            (
                params(1, 2.5, 1),
                Dataset::from_line(&[0.0, 1.0], &[1.5, -0.75]).unwrap(),
            ),
            (
                params(2, 2.0, 1),
                Dataset::from_line(&[0.0, 1.0, 1.5], &[1.0, 2.0, -1.0]).unwrap(),
            ),
            (
                params(1, 2.5, 2),
                Dataset::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0]], &[1.0, -2.0]).unwrap(),
            ),
        ];
        for (prm, data) in cases {
            let m = reference_moduli(prm).unwrap();
            let radii = nn_radii(&data).unwrap();
            let f = BumpInterpolant::build(&data, &radii, 1.0, prm).unwrap();
            let formula = f.sobolev_norm(&m).unwrap();
            let d = prm.d;
            let (lo, hi, panels) = if d == 1 {
                (vec![-1.0], vec![3.0], 512)
            } else {
                (vec![-1.0, -2.0], vec![3.0, 2.0], 96)
            };
            let quad = quadrature_norm(&f, &lo, &hi, panels);
            assert!(
                (formula - quad).abs() <= 1e-6 * formula,
                "{prm:?}: {formula} vs {quad}"
            );
        }
    }

    #[test]
    fn norm_bound_holds_on_random_datasets() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tables: Vec<ReferenceModuli> = [params(1, 2.0, 1), params(2, 1.5, 2), params(1, 2.5, 2)]
            .into_iter()
            .map(|p| reference_moduli(p).unwrap())
            .collect();
        for trial in 0..1000 {
            let m = &tables[trial % tables.len()];
            let prm = m.params();
            let n = rng.random_range(2..40);
            let mut data = random_dataset(&mut rng, n, prm.d);
            if trial % 7 == 0 {
                // Spread some datasets out so radii exceed one.
                let coords: Vec<f64> = data.coords().iter().map(|c| 8.0 * c).collect();
                data = Dataset::new(prm.d, coords, data.labels().to_vec()).unwrap();
            }
            let radii = nn_radii(&data).unwrap();
            let f = BumpInterpolant::build(&data, &radii, 1.0, prm).unwrap();
            let actual = f.sobolev_norm(m).unwrap().powf(prm.p);
            let bound = min_norm_upper_bound(&data, &radii, m).unwrap();
            assert!(actual <= bound, "trial {trial}: {actual} > {bound}");
        }
        let m = &tables[0];
        let zero = Dataset::from_line(&[0.0, 0.3, 1.0], &[0.0; 3]).unwrap();
        let radii = nn_radii(&zero).unwrap();
        let f = BumpInterpolant::build(&zero, &radii, 1.0, m.params()).unwrap();
        assert_eq!(f.sobolev_norm(m).unwrap(), 0.0);
        let c = m.min_norm_constant(radii.max());
        assert_eq!(min_norm_upper_bound(&zero, &radii, m).unwrap(), 3.0 * c);
    }

    #[test]
    fn norm_is_nonincreasing_in_shrink() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for prm in [params(1, 2.0, 1), params(1, 1.25, 1), params(2, 1.5, 2), params(1, 2.5, 2)] {
            let m = reference_moduli(prm).unwrap();
            for _ in 0..20 {
                let data = random_dataset(&mut rng, 30, prm.d);
                let radii = nn_radii(&data).unwrap();
                assert!(radii.max() <= 1.0);
                let mut last = f64::INFINITY;
                for step in 1..=10 {
                    let s = step as f64 / 10.0;
                    let f = BumpInterpolant::build(&data, &radii, s, prm).unwrap();
                    let norm = f.sobolev_norm(&m).unwrap();
                    assert!(norm <= last * (1.0 + 1e-12), "{prm:?} s = {s}");
                    last = norm;
                }
            }
        }
    }

    #[test]
    fn gamma_report_examples() {
        let prm = params(1, 1.25, 1);
        let m = reference_moduli(prm).unwrap();
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 1e-4).collect();
        let ys: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 1.0 } else { -0.5 }).collect();
        let data = Dataset::from_line(&xs, &ys).unwrap();
        let radii = nn_radii(&data).unwrap();

        let full = BumpInterpolant::build(&data, &radii, 1.0, prm).unwrap();
        let rep = full.gamma_report(&data, &radii, &m).unwrap();
        assert_eq!(rep.gamma_lower_bound, 1.0);

        // Every radius is 1e-4, so the top-order term dominates and the
        // ratio is close to s^{(d − kp)/p} = 2^{0.2}.
        let half = BumpInterpolant::build(&data, &radii, 0.5, prm).unwrap();
        let rep = half.gamma_report(&data, &radii, &m).unwrap();
        let expect = 0.5f64.powf((1.0 - 1.25) / 1.25);
        assert!((rep.gamma_lower_bound - expect).abs() <= 1e-3, "{rep:?}");

        let mut doubled = ys.clone();
        doubled[7] *= 2.0;
        let data2 = data.with_labels(doubled).unwrap();
        let f2 = BumpInterpolant::build(&data2, &radii, 0.5, prm).unwrap();
        let rep2 = f2.gamma_report(&data2, &radii, &m).unwrap();
        let f2_norm = f2.sobolev_norm(&m).unwrap();
        assert!(f2_norm > rep.norm_f);
        assert!(rep2.bump_upper_bound_norm >= rep2.norm_f / rep2.gamma_lower_bound * 0.999);

        let wrong = data.with_labels(vec![9.0; 50]).unwrap();
        assert!(matches!(
            half.gamma_report(&wrong, &radii, &m),
            Err(Error::NotInterpolating { index: 0, .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = random_dataset(&mut rng, 40, 2);
        let radii = nn_radii(&data).unwrap();
        let f = BumpInterpolant::build(&data, &radii, 0.7, params(1, 2.5, 2)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# k=1 p=2.5 d=2 shrink=0.7\nc_1,c_2,radius,weight\n"));
        let g = BumpInterpolant::read_csv(buf.as_slice()).unwrap();
        assert_eq!(g.params(), f.params());
        assert_eq!(g.support_radii(), f.support_radii());
        assert_eq!(g.weights(), f.weights());
        assert_eq!(g.centers, f.centers);

        let overlapping = "# k=1 p=2 d=1 shrink=1\nc_1,radius,weight\n0,1,1\n1.5,1,1\n";
        assert!(matches!(
            BumpInterpolant::read_csv(overlapping.as_bytes()),
            Err(Error::OverlappingSupports(0, 1))
        ));
        assert!(BumpInterpolant::read_csv("k=1\n".as_bytes()).is_err());
    }
}
