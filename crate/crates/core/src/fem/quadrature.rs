//! Gauss-Legendre rules on `[0,1]` and their tensor products on `[0,1]^2`.

#[derive(Clone, Debug)]
pub struct Quadrature1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature1d {
    /// `n`-point Gauss rule, exact for polynomials of degree `2n - 1`.
    pub fn gauss(n: usize) -> Self {
        assert!(n >= 1);
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(z) and P_n'(z)
                let mut p0 = 1.0;
                let mut p1 = 0.0;
                for k in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
                }
                dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            points[i] = 0.5 * (1.0 - z);
            points[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Quadrature1d { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Quadrature2d {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl Quadrature2d {
    pub fn gauss(n: usize) -> Self {
        let q = Quadrature1d::gauss(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push([q.points[i], q.points[j]]);
                weights.push(q.weights[i] * q.weights[j]);
            }
        }
        Quadrature2d { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Reference point on face `f` of the unit square at face parameter `s`
/// (counter-clockwise orientation).
pub fn face_point(face: usize, s: f64) -> [f64; 2] {
    match face {
        0 => [s, 0.0],
        1 => [1.0, s],
        2 => [1.0 - s, 1.0],
        3 => [0.0, 1.0 - s],
        _ => panic!("face index {face} out of range"),
    }
}
