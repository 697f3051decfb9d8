//! Tensor-product Lagrange elements on the reference square `[0,1]^2`.
//!
//! Nodes are equispaced and numbered lexicographically, `i + (k+1) j` for the
//! node at `(i/k, j/k)`.

/// One-dimensional Lagrange basis on equispaced nodes of `[0,1]`.
#[derive(Clone, Debug)]
pub struct Lagrange1d {
    nodes: Vec<f64>,
}

impl Lagrange1d {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "Lagrange degree must be at least 1");
        let nodes = (0..=degree).map(|i| i as f64 / degree as f64).collect();
        Lagrange1d { nodes }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn value(&self, i: usize, x: f64) -> f64 {
        let xi = self.nodes[i];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != i)
            .map(|(_, &xm)| (x - xm) / (xi - xm))
            .product()
    }

    pub fn derivative(&self, i: usize, x: f64) -> f64 {
        let xi = self.nodes[i];
        let mut sum = 0.0;
        for (k, &xk) in self.nodes.iter().enumerate() {
            if k == i {
                continue;
            }
            let mut term = 1.0 / (xi - xk);
            for (m, &xm) in self.nodes.iter().enumerate() {
                if m != i && m != k {
                    term *= (x - xm) / (xi - xm);
                }
            }
            sum += term;
        }
        sum
    }
}

/// Scalar `Q_k` element.
#[derive(Clone, Debug)]
pub struct ScalarElement {
    basis: Lagrange1d,
}

/// Topological position of a local node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeLocation {
    Vertex(usize),
    /// Face index and parameter `s` in `(0,1)` along the face's
    /// counter-clockwise direction.
    Face(usize, f64),
    Interior,
}

impl ScalarElement {
    pub fn new(degree: usize) -> Self {
        ScalarElement {
            basis: Lagrange1d::new(degree),
        }
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn n_nodes(&self) -> usize {
        let n = self.degree() + 1;
        n * n
    }

    pub fn node_ij(&self, a: usize) -> (usize, usize) {
        let n = self.degree() + 1;
        (a % n, a / n)
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i + (self.degree() + 1) * j
    }

    pub fn node_point(&self, a: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(a);
        [self.basis.nodes[i], self.basis.nodes[j]]
    }

    pub fn node_location(&self, a: usize) -> NodeLocation {
        let k = self.degree();
        let (i, j) = self.node_ij(a);
        let kf = k as f64;
        match (i, j) {
            (0, 0) => NodeLocation::Vertex(0),
            (i, 0) if i == k => NodeLocation::Vertex(1),
            (i, j) if i == k && j == k => NodeLocation::Vertex(2),
            (0, j) if j == k => NodeLocation::Vertex(3),
            (i, 0) => NodeLocation::Face(0, i as f64 / kf),
            (i, j) if i == k => NodeLocation::Face(1, j as f64 / kf),
            (i, j) if j == k => NodeLocation::Face(2, (k - i) as f64 / kf),
            (0, j) => NodeLocation::Face(3, (k - j) as f64 / kf),
            _ => NodeLocation::Interior,
        }
    }

    pub fn value(&self, a: usize, p: [f64; 2]) -> f64 {
        let (i, j) = self.node_ij(a);
        self.basis.value(i, p[0]) * self.basis.value(j, p[1])
    }

    pub fn gradient(&self, a: usize, p: [f64; 2]) -> [f64; 2] {
        let (i, j) = self.node_ij(a);
        [
            self.basis.derivative(i, p[0]) * self.basis.value(j, p[1]),
            self.basis.value(i, p[0]) * self.basis.derivative(j, p[1]),
        ]
    }

    /// Values and reference gradients of all basis functions at `points`.
    pub fn tabulate(&self, points: &[[f64; 2]]) -> Tabulation {
        let n = self.n_nodes();
        let mut values = Vec::with_capacity(points.len() * n);
        let mut grads = Vec::with_capacity(points.len() * n);
        for &p in points {
            for a in 0..n {
                values.push(self.value(a, p));
                grads.push(self.gradient(a, p));
            }
        }
        Tabulation {
            n_basis: n,
            values,
            grads,
        }
    }
}

/// Basis values laid out `[point][basis]`.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub n_basis: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn value(&self, q: usize, a: usize) -> f64 {
        self.values[q * self.n_basis + a]
    }

    pub fn grad(&self, q: usize, a: usize) -> [f64; 2] {
        self.grads[q * self.n_basis + a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn partition_of_unity_and_kronecker() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in [1, 2, 4] {
            let e = ScalarElement::new(k);
            for _ in 0..100 {
                let p = [rng.random::<f64>(), rng.random::<f64>()];
                let s: f64 = (0..e.n_nodes()).map(|a| e.value(a, p)).sum();
                assert!((s - 1.0).abs() < 1e-13, "degree {k}: sum {s}");
                let g = (0..e.n_nodes()).fold([0.0, 0.0], |acc, a| {
                    let g = e.gradient(a, p);
                    [acc[0] + g[0], acc[1] + g[1]]
                });
                assert!(g[0].abs() < 1e-11 && g[1].abs() < 1e-11);
            }
            for a in 0..e.n_nodes() {
                for b in 0..e.n_nodes() {
                    let v = e.value(a, e.node_point(b));
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let b = Lagrange1d::new(4);
        for i in 0..=4 {
            let x = 0.37;
            let h = 1e-6;
            let fd = (b.value(i, x + h) - b.value(i, x - h)) / (2.0 * h);
            assert!((fd - b.derivative(i, x)).abs() < 1e-7);
        }
    }

    #[test]
    fn node_locations_follow_face_orientation() {
        let e = ScalarElement::new(2);
        assert_eq!(e.node_location(0), NodeLocation::Vertex(0));
        assert_eq!(e.node_location(1), NodeLocation::Face(0, 0.5));
        assert_eq!(e.node_location(4), NodeLocation::Interior);
        let e4 = ScalarElement::new(4);
        // node (1,4) lies on the top face, a quarter of the way from v2 to v3 reversed
        assert_eq!(e4.node_location(e4.node_index(1, 4)), NodeLocation::Face(2, 0.75));
        assert_eq!(e4.node_location(e4.node_index(0, 1)), NodeLocation::Face(3, 0.75));
    }
}
