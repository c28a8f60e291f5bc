//! Exact k-d tree over an owned, row-major coordinate buffer.
//!
//! Distances are squared Euclidean distances accumulated in coordinate order
//! with [`sq_dist`], the same routine the brute-force paths use, so results
//! agree with brute force to the bit.

use crate::dataset::sq_dist;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    order: Vec<usize>,
    root: Node,
}

impl KdTree {
    pub fn new(dim: usize, coords: Vec<f64>) -> Self {
        let n = coords.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        let root = build(dim, &coords, &mut order, 0, n);
        Self {
            dim,
            coords,
            order,
            root,
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Smallest squared distance from `query` to any indexed point other than
    /// `exclude`, together with the index attaining it (lowest index on ties).
    pub fn nearest(&self, query: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.nearest_in(&self.root, query, exclude, &mut best);
        best
    }

    fn nearest_in(
        &self,
        node: &Node,
        query: &[f64],
        exclude: Option<usize>,
        best: &mut Option<(usize, f64)>,
    ) {
        match node {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let d2 = sq_dist(query, self.point(i));
                    let better = match *best {
                        None => true,
                        Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                    };
                    if better {
                        *best = Some((i, d2));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[*axis] - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.nearest_in(near, query, exclude, best);
                // `<=` keeps equidistant candidates on the far side reachable.
                if best.map_or(true, |(_, bd)| diff * diff <= bd) {
                    self.nearest_in(far, query, exclude, best);
                }
            }
        }
    }

    /// All indices `j != exclude` with `sq_dist(query, x_j) <= radius_sq`,
    /// returned in increasing index order.
    pub fn within(&self, query: &[f64], radius_sq: f64, exclude: Option<usize>) -> Vec<usize> {
        let mut out = Vec::new();
        self.within_in(&self.root, query, radius_sq, exclude, &mut out);
        out.sort_unstable();
        out
    }

    fn within_in(
        &self,
        node: &Node,
        query: &[f64],
        radius_sq: f64,
        exclude: Option<usize>,
        out: &mut Vec<usize>,
    ) {
        match node {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    if Some(i) != exclude && sq_dist(query, self.point(i)) <= radius_sq {
                        out.push(i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[*axis] - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.within_in(near, query, radius_sq, exclude, out);
                if diff * diff <= radius_sq {
                    self.within_in(far, query, radius_sq, exclude, out);
                }
            }
        }
    }
}

fn build(dim: usize, coords: &[f64], order: &mut [usize], start: usize, end: usize) -> Node {
    if end - start <= LEAF_SIZE {
        return Node::Leaf { start, end };
    }
    // Split on the axis of widest spread.
    let slice = &mut order[start..end];
    let mut axis = 0;
    let mut widest = -1.0;
    for a in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in slice.iter() {
            let v = coords[i * dim + a];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > widest {
            widest = hi - lo;
            axis = a;
        }
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        coords[a * dim + axis].total_cmp(&coords[b * dim + axis])
    });
    let value = coords[slice[mid] * dim + axis];
    // Left holds coordinates <= value, right holds >= value; the pruning
    // tests above are valid for either side of the plane.
    let left = build(dim, coords, order, start, start + mid);
    let right = build(dim, coords, order, start + mid, end);
    Node::Split {
        axis,
        value,
        left: Box::new(left),
        right: Box::new(right),
    }
}
