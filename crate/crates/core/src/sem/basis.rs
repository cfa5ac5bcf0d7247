use crate::error::{Error, Result};

/// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    // derivative from (x² − 1) P_n' = n (x P_n − P_{n−1})
    let d = if (x * x - 1.0).abs() < 1e-300 {
        let s = if x > 0.0 { 1.0 } else if n.is_multiple_of(2) { -1.0 } else { 1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// n-point Gauss–Legendre rule on [−1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Lagrange basis on the Gauss–Lobatto–Legendre nodes of degree r.
#[derive(Debug, Clone)]
pub struct GllBasis {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `deriv[i][j]` = ℓ_j'(ξ_i)
    pub deriv: Vec<Vec<f64>>,
    /// `monomial[j][p]` = coefficient of ξ^p in ℓ_j
    pub monomial: Vec<Vec<f64>>,
    bary: Vec<f64>,
}

pub fn build_basis(r: usize) -> Result<GllBasis> {
    if !(1..=8).contains(&r) {
        return Err(Error::invalid(format!("polynomial degree {r} outside 1..=8")));
    }
    let n = r + 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[r] = 1.0;
    let rr = (r * (r + 1)) as f64;
    for j in 1..r {
        let mut z = -(std::f64::consts::PI * j as f64 / r as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(r, z);
            let d2 = (2.0 * z * dp - rr * p) / (1.0 - z * z);
            let dz = dp / d2;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[j] = z;
    }
    // exact symmetry
    for j in 0..n / 2 {
        let s = 0.5 * (nodes[r - j] - nodes[j]);
        nodes[j] = -s;
        nodes[r - j] = s;
    }
    if n % 2 == 1 {
        nodes[r / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&z| {
            let (p, _) = legendre(r, z);
            2.0 / (rr * p * p)
        })
        .collect();
    let bary: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&m| m != j).map(|m| nodes[j] - nodes[m]).product::<f64>())
        .collect();
    let mut deriv = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                deriv[i][j] = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                diag -= deriv[i][j];
            }
        }
        deriv[i][i] = diag;
    }
    let monomial = (0..n)
        .map(|j| {
            let mut c = vec![1.0];
            for m in (0..n).filter(|&m| m != j) {
                let s = 1.0 / (nodes[j] - nodes[m]);
                let mut next = vec![0.0; c.len() + 1];
                for (p, &v) in c.iter().enumerate() {
                    next[p + 1] += v * s;
                    next[p] -= v * nodes[m] * s;
                }
                c = next;
            }
            c
        })
        .collect();
    Ok(GllBasis { degree: r, nodes, weights, deriv, monomial, bary })
}

impl GllBasis {
    pub fn n(&self) -> usize {
        self.degree + 1
    }

    /// ℓ_j(x) for all j.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let n = self.n();
        if let Some(k) = self.nodes.iter().position(|&z| z == x) {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            return v;
        }
        let l: f64 = self.nodes.iter().map(|z| x - z).product();
        (0..n).map(|j| l * self.bary[j] / (x - self.nodes[j])).collect()
    }

    /// ℓ_j'(x) for all j.
    pub fn eval_deriv(&self, x: f64) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|j| {
                let c = &self.monomial[j];
                let mut d = 0.0;
                for p in (1..c.len()).rev() {
                    d = d * x + p as f64 * c[p];
                }
                d
            })
            .collect()
    }
}
