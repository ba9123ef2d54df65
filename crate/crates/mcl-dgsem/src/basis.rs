//! Legendre-Gauss-Lobatto quadrature and the summation-by-parts operator
//! matrices of the collocated spectral element discretization.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Result, SolverError};

/// Square matrix stored row-major.
#[derive(Clone, Debug)]
pub struct Matrix {
    pub n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// LGL nodes, weights and the SBP matrices for one polynomial degree.
///
/// Immutable after construction; safe to share read-only across threads.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    /// Polynomial degree N (>= 1); matrices are (N+1) x (N+1).
    pub degree: usize,
    /// LGL nodes on [-1, 1], strictly increasing with fixed endpoints.
    pub nodes: Vec<f64>,
    /// Positive quadrature weights summing to 2.
    pub weights: Vec<f64>,
    /// Differentiation matrix D_ij = l'_j(xi_i).
    pub diff: Matrix,
    /// Weak-form derivative matrix Q_ij = w_i l'_j(xi_i).
    pub q: Matrix,
    /// Boundary evaluation matrix B = diag(-1, 0, ..., 0, 1).
    pub b: Matrix,
    /// Skew-symmetric matrix S = Q - Q^T.
    pub s: Matrix,
}

/// Legendre polynomial P_n and its first derivative at x, by recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // (1 - x^2) P_n' = n (P_{n-1} - x P_n)
    let dp = if (1.0 - x * x).abs() > 1e-300 {
        n as f64 * (p_prev - x * p) / (1.0 - x * x)
    } else {
        // At the endpoints: P_n'(+-1) = (+-1)^{n-1} n(n+1)/2
        let sign = if n % 2 == 0 { x.signum() } else { 1.0 };
        sign * n as f64 * (n as f64 + 1.0) / 2.0
    };
    (p, dp)
}

/// Nodes and weights of the (N+1)-point Legendre-Gauss-Lobatto rule.
///
/// Interior nodes are the roots of P_N', found by Newton iteration with
/// Chebyshev-Gauss-Lobatto initial guesses; the endpoints are fixed at
/// +-1. Weights are 2 / (N (N+1) P_N(xi_i)^2).
pub fn compute_lgl(degree: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if degree < 1 {
        return Err(SolverError::Config(
            "polynomial degree must be >= 1 (the subcell scheme needs at least 2 nodes)".into(),
        ));
    }
    let n = degree;
    let n_nodes = n + 1;
    let mut nodes = vec![0.0; n_nodes];
    nodes[0] = -1.0;
    nodes[n] = 1.0;

    for i in 1..n {
        // Chebyshev-Gauss-Lobatto initial guess.
        let mut x = -(std::f64::consts::PI * i as f64 / n as f64).cos();
        for _ in 0..50 {
            // Newton on q(x) = P_N'(x), with
            // q'(x) = P_N'' = (2x P_N' - N(N+1) P_N) / (1 - x^2).
            let (p, dp) = legendre_and_derivative(n, x);
            let ddp = (2.0 * x * dp - (n * (n + 1)) as f64 * p) / (1.0 - x * x);
            let step = dp / ddp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
    }

    // Enforce exact symmetry about the origin.
    for i in 0..n_nodes / 2 {
        let avg = 0.5 * (nodes[i] - nodes[n - i]);
        nodes[i] = avg;
        nodes[n - i] = -avg;
    }
    if n_nodes % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut weights = vec![0.0; n_nodes];
    for i in 0..n_nodes {
        let (p, _) = legendre_and_derivative(n, nodes[i]);
        weights[i] = 2.0 / ((n * (n + 1)) as f64 * p * p);
    }
    Ok((nodes, weights))
}

/// Differentiation matrix via barycentric Lagrange differentiation.
fn differentiation_matrix(nodes: &[f64]) -> Matrix {
    let n = nodes.len();
    let mut bary = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                bary[j] *= nodes[j] - nodes[k];
            }
        }
        bary[j] = 1.0 / bary[j];
    }
    let mut d = Matrix::zeros(n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d.set(i, j, v);
                row_sum += v;
            }
        }
        d.set(i, i, -row_sum);
    }
    d
}

/// Build the full SBP operator set for one polynomial degree.
pub fn build_operators(degree: usize) -> Result<OperatorSet> {
    let (nodes, weights) = compute_lgl(degree)?;
    let n = degree + 1;
    let diff = differentiation_matrix(&nodes);

    let mut q = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            q.set(i, j, weights[i] * diff.get(i, j));
        }
    }
    let mut b = Matrix::zeros(n);
    b.set(0, 0, -1.0);
    b.set(n - 1, n - 1, 1.0);

    let mut s = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, q.get(i, j) - q.get(j, i));
        }
    }

    Ok(OperatorSet {
        degree,
        nodes,
        weights,
        diff,
        q,
        b,
        s,
    })
}

/// Shared cache of operator sets, built once per degree.
pub fn operators(degree: usize) -> Result<Arc<OperatorSet>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<OperatorSet>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(ops) = guard.get(&degree) {
        return Ok(ops.clone());
    }
    let ops = Arc::new(build_operators(degree)?);
    guard.insert(degree, ops.clone());
    Ok(ops)
}
