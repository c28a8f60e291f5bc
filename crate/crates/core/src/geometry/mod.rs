//! Nearest-neighbor radii, the nearest-neighbor graph, packing checks and
//! one-point perturbation stability.
//!
//! For a point set `x_1..x_n` the nearest-neighbor radius of `x_i` is
//! `δ_i = min_{l != i} ‖x_i − x_l‖`. The balls `B(x_i, δ_i/2)` are pairwise
//! disjoint, every node of the nearest-neighbor graph has in-degree at most
//! the kissing number `τ(d)` on tie-free inputs, and moving a single point
//! changes at most `1 + 2τ(d)` radii.

mod kdtree;

pub use kdtree::KdTree;

use crate::dataset::{sq_dist, Dataset};
use crate::error::{Error, Result};

/// Below this size every query is answered by brute force.
pub const BRUTE_FORCE_BELOW: usize = 64;

/// Kissing numbers `τ(d)` for `d ∈ {1, 2, 3}`.
pub fn kissing_number(d: usize) -> Result<usize> {
    match d {
        1 => Ok(2),
        2 => Ok(6),
        3 => Ok(12),
        _ => Err(Error::KissingUnknown(d)),
    }
}

/// Nearest-neighbor radii `δ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NnRadii(pub Vec<f64>);

impl NnRadii {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for NnRadii {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Directed nearest-neighbor graph: `(i, j)` is an edge iff `x_j` is a
/// nearest neighbor of `x_i`. Ties keep every tied edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NnGraph {
    pub n: usize,
    /// Sorted by `(i, j)`.
    pub edges: Vec<(usize, usize)>,
}

impl NnGraph {
    /// Whether some node has more than one nearest neighbor.
    pub fn has_ties(&self) -> bool {
        self.edges.windows(2).any(|w| w[0].0 == w[1].0)
    }
}

fn validate(dataset: &Dataset) -> Result<()> {
    if dataset.len() < 2 {
        return Err(Error::TooFewPoints(dataset.len()));
    }
    Ok(())
}

/// Squared nearest distance and the nearest index for every point, via brute
/// force or the k-d tree depending on size.
fn nearest_sq(dataset: &Dataset) -> Result<Vec<(usize, f64)>> {
    validate(dataset)?;
    let n = dataset.len();
    let out: Vec<(usize, f64)> = if n < BRUTE_FORCE_BELOW {
        brute_nearest_sq(dataset)
    } else {
        let tree = KdTree::new(dataset.dim(), dataset.coords().to_vec());
        (0..n)
            .map(|i| {
                tree.nearest(dataset.point(i), Some(i))
                    .expect("n >= 2 guarantees a neighbor")
            })
            .collect()
    };
    for (i, &(j, d2)) in out.iter().enumerate() {
        if d2 == 0.0 {
            return Err(Error::DuplicatePoints(i.min(j), i.max(j)));
        }
    }
    Ok(out)
}

fn brute_nearest_sq(dataset: &Dataset) -> Vec<(usize, f64)> {
    let n = dataset.len();
    (0..n)
        .map(|i| {
            let xi = dataset.point(i);
            let mut best = (usize::MAX, f64::INFINITY);
            for l in 0..n {
                if l != i {
                    let d2 = sq_dist(xi, dataset.point(l));
                    if d2 < best.1 {
                        best = (l, d2);
                    }
                }
            }
            best
        })
        .collect()
}

/// Exact nearest-neighbor radii.
pub fn nn_radii(dataset: &Dataset) -> Result<NnRadii> {
    Ok(NnRadii(
        nearest_sq(dataset)?
            .into_iter()
            .map(|(_, d2)| d2.sqrt())
            .collect(),
    ))
}

/// O(n²) reference implementation of [`nn_radii`].
pub fn nn_radii_brute_force(dataset: &Dataset) -> Result<NnRadii> {
    validate(dataset)?;
    let nearest = brute_nearest_sq(dataset);
    for (i, &(j, d2)) in nearest.iter().enumerate() {
        if d2 == 0.0 {
            return Err(Error::DuplicatePoints(i.min(j), i.max(j)));
        }
    }
    Ok(NnRadii(nearest.into_iter().map(|(_, d2)| d2.sqrt()).collect()))
}

/// Nearest-neighbor graph including every tied edge.
pub fn nn_graph(dataset: &Dataset) -> Result<NnGraph> {
    let nearest = nearest_sq(dataset)?;
    let n = dataset.len();
    let mut edges = Vec::with_capacity(n);
    if n < BRUTE_FORCE_BELOW {
        for (i, &(_, d2)) in nearest.iter().enumerate() {
            let xi = dataset.point(i);
            edges.extend(
                (0..n)
                    .filter(|&l| l != i && sq_dist(xi, dataset.point(l)) == d2)
                    .map(|l| (i, l)),
            );
        }
    } else {
        let tree = KdTree::new(dataset.dim(), dataset.coords().to_vec());
        for (i, &(_, d2)) in nearest.iter().enumerate() {
            edges.extend(
                tree.within(dataset.point(i), d2, Some(i))
                    .into_iter()
                    .map(|l| (i, l)),
            );
        }
    }
    Ok(NnGraph { n, edges })
}

/// In-degree of every node.
pub fn in_degrees(graph: &NnGraph, n: usize) -> Vec<usize> {
    let mut deg = vec![0; n];
    for &(_, j) in &graph.edges {
        deg[j] += 1;
    }
    deg
}

/// Every pair `(i, j)`, `i < j`, with `‖x_i − x_j‖ < (r_i + r_j)/2`.
///
/// With `radii` the nearest-neighbor radii this is the packing check and the
/// list is always empty. Any other radii (e.g. scaled support diameters)
/// can be checked the same way.
pub fn check_packing(dataset: &Dataset, radii: &[f64]) -> Result<Vec<(usize, usize)>> {
    let n = dataset.len();
    if radii.len() != n {
        return Err(Error::MismatchedLengths {
            expected: n,
            got: radii.len(),
        });
    }
    if n < BRUTE_FORCE_BELOW {
        return check_packing_brute_force(dataset, radii);
    }
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let tree = KdTree::new(dataset.dim(), dataset.coords().to_vec());
    let mut out = Vec::new();
    for i in 0..n {
        let reach = (radii[i] + r_max) / 2.0;
        for j in tree.within(dataset.point(i), reach * reach, Some(i)) {
            if j > i && overlaps(dataset, radii, i, j) {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// O(n²) reference implementation of [`check_packing`].
pub fn check_packing_brute_force(dataset: &Dataset, radii: &[f64]) -> Result<Vec<(usize, usize)>> {
    let n = dataset.len();
    if radii.len() != n {
        return Err(Error::MismatchedLengths {
            expected: n,
            got: radii.len(),
        });
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if overlaps(dataset, radii, i, j) {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

#[inline]
fn overlaps(dataset: &Dataset, radii: &[f64], i: usize, j: usize) -> bool {
    sq_dist(dataset.point(i), dataset.point(j)).sqrt() < (radii[i] + radii[j]) / 2.0
}

/// Number of indices whose nearest-neighbor radius changes when point
/// `index` is replaced by `replacement`.
pub fn perturbation_changed_radii(
    dataset: &Dataset,
    index: usize,
    replacement: &[f64],
) -> Result<usize> {
    let before = nn_radii(dataset)?;
    let moved = dataset.with_point_replaced(index, replacement)?;
    let after = nn_radii(&moved)?;
    Ok(before
        .0
        .iter()
        .zip(&after.0)
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count())
}

/// Largest number of radii a single replacement may change in dimension `d`.
pub fn perturbation_bound(d: usize) -> Result<usize> {
    Ok(1 + 2 * kissing_number(d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::from_line(xs, &vec![0.0; xs.len()]).unwrap()
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
        let coords = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        Dataset::new(d, coords, vec![0.0; n]).unwrap()
    }

    #[test]
    fn radii_small_examples() {
        // Brute-force distances: |0-1| = 1, |1-3| = 2, |0-3| = 3.
        assert_eq!(nn_radii(&line(&[0.0, 1.0, 3.0])).unwrap().0, vec![1.0, 1.0, 2.0]);
        assert_eq!(nn_radii(&line(&[0.0, 1.0])).unwrap().0, vec![1.0, 1.0]);
        let square = Dataset::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            &[0.0; 4],
        )
        .unwrap();
        assert_eq!(nn_radii(&square).unwrap().0, vec![1.0; 4]);
    }

    #[test]
    fn radii_errors() {
        assert!(matches!(nn_radii(&line(&[0.5])), Err(Error::TooFewPoints(1))));
        assert!(matches!(
            nn_radii(&line(&[0.0, 2.0, 0.0])),
            Err(Error::DuplicatePoints(0, 2))
        ));
        let mut xs: Vec<f64> = (0..200).map(|i| i as f64).collect();
        xs[150] = 3.0;
        assert!(matches!(nn_radii(&line(&xs)), Err(Error::DuplicatePoints(3, 150))));
    }

    #[test]
    fn graph_small_examples() {
        // Indices 0,1,2 for points 0,1,3: 0->1, 1->0, 2->1.
        let g = nn_graph(&line(&[0.0, 1.0, 3.0])).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (1, 0), (2, 1)]);
        assert_eq!(in_degrees(&g, 3), vec![1, 2, 0]);

        let g = nn_graph(&line(&[0.0, 1.0])).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (1, 0)]);
        assert_eq!(in_degrees(&g, 2), vec![1, 1]);

        let h = 3f64.sqrt() / 2.0;
        let tri = Dataset::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]],
            &[0.0; 3],
        )
        .unwrap();
        // Side lengths are not all bit-equal in floating point; count edges
        // by the exact tie rule on the computed distances.
        let g = nn_graph(&tri).unwrap();
        for i in 0..3 {
            let d: Vec<f64> = (0..3)
                .filter(|&l| l != i)
                .map(|l| sq_dist(tri.point(i), tri.point(l)))
                .collect();
            let m = d.iter().copied().fold(f64::INFINITY, f64::min);
            let expected = d.iter().filter(|&&v| v == m).count();
            assert_eq!(g.edges.iter().filter(|e| e.0 == i).count(), expected);
        }
        // An exactly representable equilateral configuration: every pair tied.
        let tri = Dataset::from_points(
            &[vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]],
            &[0.0; 3],
        )
        .unwrap();
        assert_eq!(nn_graph(&tri).unwrap().edges.len(), 6);
        assert!(nn_graph(&tri).unwrap().has_ties());
    }

    #[test]
    fn collinear_equispaced_indegree() {
        let g = nn_graph(&line(&[0.0, 1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(in_degrees(&g, 5).into_iter().all(|d| d <= 2));
        assert!(g.edges.iter().all(|&(i, j)| i.abs_diff(j) == 1));
    }

    #[test]
    fn indegree_bounded_by_kissing_number_in_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = random_dataset(&mut rng, 500, 2);
        let g = nn_graph(&ds).unwrap();
        assert!(!g.has_ties());
        // Independent brute-force in-degrees.
        let mut deg = vec![0; 500];
        for i in 0..500 {
            let mut best = (0, f64::INFINITY);
            for l in 0..500 {
                if l != i {
                    let d2 = sq_dist(ds.point(i), ds.point(l));
                    if d2 < best.1 {
                        best = (l, d2);
                    }
                }
            }
            deg[best.0] += 1;
        }
        assert_eq!(in_degrees(&g, 500), deg);
        assert!(deg.into_iter().max().unwrap() <= kissing_number(2).unwrap());
    }

    #[test]
    fn packing_examples() {
        let ds = line(&[0.0, 1.0, 3.0]);
        let r = nn_radii(&ds).unwrap();
        assert!(check_packing(&ds, r.as_slice()).unwrap().is_empty());
        assert!(matches!(
            check_packing(&ds, &[1.0]),
            Err(Error::MismatchedLengths { .. })
        ));
        // Inflated radii do overlap and are reported.
        assert_eq!(check_packing(&ds, &[2.0, 2.0, 2.0]).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn packing_holds_on_random_datasets() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..10_000 {
            let d = 1 + trial % 3;
            let n = 2 + trial % 40;
            let ds = random_dataset(&mut rng, n, d);
            let r = nn_radii(&ds).unwrap();
            assert!(check_packing_brute_force(&ds, r.as_slice()).unwrap().is_empty());
        }
    }

    #[test]
    fn indexed_packing_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..=3 {
            let ds = random_dataset(&mut rng, 400, d);
            let r = nn_radii(&ds).unwrap();
            let inflated: Vec<f64> = r.0.iter().map(|v| 2.5 * v).collect();
            assert_eq!(
                check_packing(&ds, &inflated).unwrap(),
                check_packing_brute_force(&ds, &inflated).unwrap()
            );
            assert!(check_packing(&ds, r.as_slice()).unwrap().is_empty());
        }
    }

    #[test]
    fn perturbation_examples() {
        let ds = line(&[0.0, 1.0, 3.0]);
        assert_eq!(perturbation_changed_radii(&ds, 2, &[10.0]).unwrap(), 1);
        assert_eq!(perturbation_changed_radii(&ds, 1, &[1.0]).unwrap(), 0);
        assert!(matches!(
            perturbation_changed_radii(&ds, 2, &[0.0]),
            Err(Error::DuplicatePoints(..))
        ));
    }

    #[test]
    fn perturbation_bound_in_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let bound = perturbation_bound(2).unwrap();
        assert_eq!(bound, 13);
        for _ in 0..1000 {
            let ds = random_dataset(&mut rng, 40, 2);
            let i = rng.random_range(0..40);
            let to = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let moved = ds.with_point_replaced(i, &to).unwrap();
            let a = nn_radii_brute_force(&ds).unwrap();
            let b = nn_radii_brute_force(&moved).unwrap();
            let brute = a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count();
            let got = perturbation_changed_radii(&ds, i, &to).unwrap();
            assert_eq!(got, brute);
            assert!(got <= bound);
        }
    }

    #[test]
    fn kissing_table() {
        assert_eq!(kissing_number(1).unwrap(), 2);
        assert_eq!(kissing_number(3).unwrap(), 12);
        assert!(matches!(kissing_number(4), Err(Error::KissingUnknown(4))));
    }
}
