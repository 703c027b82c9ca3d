#![allow(dead_code)]

use chronos_core::qcore::{DensityMatrix, PureState, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// `ops[n-1] ⊗ … ⊗ ops[0]`, so that `ops[k]` acts on bit `k` of the index.
pub fn kron_qubits(ops: &[CMat]) -> CMat {
    let mut out = identity(1);
    for op in ops.iter().rev() {
        out = out.kronecker(op);
    }
    out
}

/// Single-qubit `op` on qubit `q` of an `n`-qubit register.
pub fn on_qubit(op: &CMat, q: usize, n: usize) -> CMat {
    let ops: Vec<CMat> = (0..n).map(|k| if k == q { op.clone() } else { identity(2) }).collect();
    kron_qubits(&ops)
}

/// `X_a X_b + Y_a Y_b` on `n` qubits.
pub fn exchange_generator(a: usize, b: usize, n: usize) -> CMat {
    on_qubit(&pauli_x(), a, n) * on_qubit(&pauli_x(), b, n) + on_qubit(&pauli_y(), a, n) * on_qubit(&pauli_y(), b, n)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(m: &CMat) -> CMat {
    let norm: f64 = m.iter().map(|x| x.norm()).sum();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * c(scale, 0.0);
    let mut term = identity(m.nrows());
    let mut sum = identity(m.nrows());
    for k in 1..30 {
        term = &term * &a * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp[-i (X_0 X_i + Y_0 Y_i) Δt]` on `n` qubits.
pub fn pair_oracle(delta_t: f64, i: usize, n: usize) -> CMat {
    expm(&(exchange_generator(0, i, n) * c(0.0, -delta_t)))
}

/// `𝒰_{n-1} ⋯ 𝒰_1` (pair 1 acts first).
pub fn step_oracle(delta_t: f64, n: usize) -> CMat {
    let mut u = identity(1 << n);
    for i in 1..n {
        u = pair_oracle(delta_t, i, n) * u;
    }
    u
}

pub fn random_pure(n: usize, r: &mut impl Rng) -> PureState {
    let amps = (0..1usize << n)
        .map(|_| c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
        .collect();
    PureState::normalized(n, amps).unwrap()
}

/// `Σ_k w_k |ψ_k⟩⟨ψ_k|` with random weights and states: full rank in general.
pub fn random_density(n: usize, r: &mut impl Rng) -> DensityMatrix {
    let dim = 1usize << n;
    let mut m = CMat::zeros(dim, dim);
    let mut total = 0.0;
    for _ in 0..dim {
        let w: f64 = r.random();
        let psi = random_pure(n, r);
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        m += (&v * v.adjoint()) * c(w, 0.0);
        total += w;
    }
    DensityMatrix::from_matrix(n, m * c(1.0 / total, 0.0)).unwrap()
}

pub fn random_diagonal(n: usize, r: &mut impl Rng) -> DensityMatrix {
    let mut p: Vec<f64> = (0..1usize << n).map(|_| r.random::<f64>()).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    let s: f64 = p.iter().sum();
    p[0] += 1.0 - s;
    DensityMatrix::from_diagonal(n, p).unwrap()
}

pub fn apply_to_vector(u: &CMat, psi: &PureState) -> Vec<C64> {
    let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
    (u * v).iter().copied().collect()
}

pub fn conjugate(u: &CMat, rho: &DensityMatrix) -> CMat {
    u * rho.to_matrix() * u.adjoint()
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Eigenvalue-based entropy of a dense Hermitian matrix.
pub fn entropy_by_eigen(m: &CMat) -> f64 {
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-300)
        .map(|&l| -l * l.ln())
        .sum()
}

/// `⟨Z_q⟩` of a dense matrix from `Tr[Z_q ρ]`.
pub fn z_expectation(m: &CMat, q: usize, n: usize) -> f64 {
    (on_qubit(&pauli_z(), q, n) * m).trace().re
}
