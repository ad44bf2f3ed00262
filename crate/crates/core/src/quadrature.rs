//! Quadrature rules on reference simplices, in barycentric form.

use crate::scalar::Real;

/// Quadrature rule on a `dim`-simplex. Points are barycentric coordinates
/// (`dim + 1` entries), weights are positive and sum to one, so the rule is
/// scaled by the simplex measure when mapped.
#[derive(Clone, Debug)]
pub struct SimplexRule<T> {
    pub dim: usize,
    pub degree: usize,
    pub bary: Vec<[T; 5]>,
    pub weights: Vec<T>,
}

impl<T: Real> SimplexRule<T> {
    /// Returns a rule with positive weights exact for polynomials of total
    /// degree `degree` on a `dim`-simplex (1 <= dim <= 4).
    pub fn new(dim: usize, degree: usize) -> Self {
        assert!((1..=4).contains(&dim), "simplex rule dimension {dim} unsupported");
        match degree {
            0 | 1 => Self::centroid(dim),
            2 if dim <= 3 => Self::degree_two(dim),
            _ => Self::collapsed(dim, degree),
        }
    }

    fn centroid(dim: usize) -> Self {
        let c = T::one() / T::from_usize_lossy(dim + 1);
        let mut b = [T::zero(); 5];
        for v in b.iter_mut().take(dim + 1) {
            *v = c;
        }
        SimplexRule { dim, degree: 1, bary: vec![b], weights: vec![T::one()] }
    }

    fn degree_two(dim: usize) -> Self {
        let (a, b, w): (f64, f64, f64) = match dim {
            // two-point Gauss-Legendre on a segment
            1 => (0.5 + 0.5 / 3f64.sqrt(), 0.5 - 0.5 / 3f64.sqrt(), 0.5),
            2 => (2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0),
            3 => (0.585_410_196_624_968_5, 0.138_196_601_125_010_5, 0.25),
            _ => unreachable!(),
        };
        let mut bary = Vec::with_capacity(dim + 1);
        for i in 0..=dim {
            let mut p = [T::zero(); 5];
            for (j, v) in p.iter_mut().enumerate().take(dim + 1) {
                *v = T::lit(if i == j { a } else { b });
            }
            bary.push(p);
        }
        SimplexRule { dim, degree: 2, weights: vec![T::lit(w); dim + 1], bary }
    }

    /// Collapsed-coordinate (Duffy) product of Gauss-Legendre rules.
    fn collapsed(dim: usize, degree: usize) -> Self {
        let q = (degree + dim + 2) / 2;
        let (nodes, wts) = gauss_legendre_unit(q);
        let mut bary = Vec::new();
        let mut weights = Vec::new();
        let fact: f64 = (1..=dim).map(|i| i as f64).product();
        let mut idx = vec![0usize; dim];
        loop {
            let mut x = [0.0f64; 4];
            let mut remaining = 1.0;
            let mut w = fact;
            for k in 0..dim {
                let s = nodes[idx[k]];
                x[k] = remaining * s;
                // Jacobian factor (1 - s_1)...(1 - s_{k-1})
                w *= wts[idx[k]] * remaining;
                remaining *= 1.0 - s;
            }
            let mut b = [T::zero(); 5];
            let mut sum = 0.0;
            for k in 0..dim {
                b[k + 1] = T::lit(x[k]);
                sum += x[k];
            }
            b[0] = T::lit(1.0 - sum);
            bary.push(b);
            weights.push(T::lit(w));
            // odometer
            let mut k = 0;
            loop {
                if k == dim {
                    return SimplexRule { dim, degree, bary, weights };
                }
                idx[k] += 1;
                if idx[k] < q {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Maps the rule onto a simplex with the given vertices, returning
    /// `(point, barycentric weight)` pairs. Weights still need the measure.
    pub fn map<const N: usize>(&self, vertices: &[[T; N]]) -> impl Iterator<Item = ([T; N], T)> + '_ {
        let verts: Vec<[T; N]> = vertices.to_vec();
        self.bary.iter().zip(&self.weights).map(move |(b, &w)| {
            let mut p = [T::zero(); N];
            for (v, &bi) in verts.iter().zip(b.iter()) {
                for c in 0..N {
                    p[c] += bi * v[c];
                }
            }
            (p, w)
        })
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Two-point Gauss rule on `[a, b]`: `(times, weights)`.
pub fn gauss2<T: Real>(a: T, b: T) -> [(T, T); 2] {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let off = half / T::lit(3.0).sqrt();
    [(mid - off, half), (mid + off, half)]
}
