use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_index, DensityMatrix, Storage, C64};
use crate::{Error, Result};

/// Real eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect()
}

/// Eigenvalues below this (times the dimension and the largest eigenvalue)
/// are round-off and treated as exact zeros before taking square roots.
const ROUNDOFF_EIGENVALUE: f64 = 1e-15;

fn roundoff_floor(eigenvalues: impl Iterator<Item = f64>, dim: usize) -> f64 {
    let max = eigenvalues.fold(0.0f64, |m, l| m.max(l.abs()));
    ROUNDOFF_EIGENVALUE * dim as f64 * max
}

/// Principal square root of a positive semidefinite Hermitian matrix.
fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(m.clone());
    let floor = roundoff_floor(eig.eigenvalues.iter().copied(), m.nrows());
    let roots = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| C64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0)),
    );
    &eig.eigenvectors * roots * eig.eigenvectors.adjoint()
}

fn shannon(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .map(|p| p.max(0.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// `Σ_a P_a ρ P_a`: drops every off-diagonal element.
pub fn dephase_z(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_diagonal_unchecked(rho.n_qubits(), rho.probabilities())
}

/// `-Tr ρ ln ρ` in nats; eigenvalues are clamped at 0 first.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    match rho.storage() {
        Storage::Diagonal(p) => shannon(p.iter().copied()),
        Storage::Full(m) => shannon(hermitian_eigenvalues(m)),
    }
}

/// `Σ_{j∈qubits} ⟨Z_j⟩`. An empty set gives 0.
pub fn subsystem_energy(rho: &DensityMatrix, qubits: &[usize]) -> Result<f64> {
    let n = rho.n_qubits();
    for &q in qubits {
        check_index(q, n)?;
    }
    let probs = rho.probabilities();
    Ok(qubits
        .iter()
        .map(|&q| {
            probs
                .iter()
                .enumerate()
                .map(|(a, p)| if (a >> q) & 1 == 0 { *p } else { -*p })
                .sum::<f64>()
        })
        .sum())
}

fn sorted_unique(keep: &[usize], n_qubits: usize) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("empty qubit set".into()));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    for &q in &keep {
        check_index(q, n_qubits)?;
    }
    Ok(keep)
}

/// Map a full basis index to its index on the kept qubits (kept qubits keep
/// their relative order).
#[inline]
fn compress(index: usize, keep: &[usize]) -> usize {
    keep.iter()
        .enumerate()
        .fold(0, |acc, (k, &q)| acc | (((index >> q) & 1) << k))
}

/// Reduced state on `keep`; kept qubits are renumbered `0..keep.len()` in
/// ascending order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let keep = sorted_unique(keep, n)?;
    let kept_mask: usize = keep.iter().map(|q| 1usize << q).sum();
    let traced_mask = ((1usize << n) - 1) & !kept_mask;
    let small = keep.len();
    match rho.storage() {
        Storage::Diagonal(p) => {
            let mut out = vec![0.0; 1 << small];
            for (a, &pa) in p.iter().enumerate() {
                out[compress(a, &keep)] += pa;
            }
            Ok(DensityMatrix::from_diagonal_unchecked(small, out))
        }
        Storage::Full(m) => {
            let dim = 1usize << n;
            let mut out = DMatrix::<C64>::zeros(1 << small, 1 << small);
            for c in 0..dim {
                let cc = compress(c, &keep);
                for r in 0..dim {
                    if (r ^ c) & traced_mask == 0 {
                        out[(compress(r, &keep), cc)] += m[(r, c)];
                    }
                }
            }
            Ok(DensityMatrix::from_matrix_unchecked(small, out))
        }
    }
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`. Two diagonal states use the closed
/// form `(Σ_a √(p_a q_a))²`.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let f = match (rho.storage(), sigma.storage()) {
        (Storage::Diagonal(p), Storage::Diagonal(q)) => {
            let bc: f64 = p.iter().zip(q).map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt()).sum();
            bc * bc
        }
        _ => {
            let root = psd_sqrt(&rho.to_matrix());
            let inner = &root * sigma.to_matrix() * &root;
            let eigenvalues = hermitian_eigenvalues(&inner);
            let floor = roundoff_floor(eigenvalues.iter().copied(), inner.nrows());
            let tr: f64 = eigenvalues.into_iter().filter(|&l| l > floor).map(f64::sqrt).sum();
            tr * tr
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `S(ρ_A) + S(ρ_B) − S(ρ_AB)` where A is `part_a` and B its complement.
pub fn mutual_information(rho_ab: &DensityMatrix, part_a: &[usize]) -> Result<f64> {
    let n = rho_ab.n_qubits();
    let a = sorted_unique(part_a, n)?;
    let b: Vec<usize> = (0..n).filter(|q| !a.contains(q)).collect();
    if b.is_empty() {
        return Err(Error::InvalidArgument("partition leaves the complement empty".into()));
    }
    let s_a = von_neumann_entropy(&partial_trace(rho_ab, &a)?);
    let s_b = von_neumann_entropy(&partial_trace(rho_ab, &b)?);
    Ok(s_a + s_b - von_neumann_entropy(rho_ab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::PureState;
    use approx::assert_abs_diff_eq;

    fn bell() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let s = PureState::new(2, vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)]).unwrap();
        DensityMatrix::from_pure(&s).unwrap()
    }

    #[test]
    fn entropy_of_pure_and_mixed() {
        let s = PureState::normalized(3, (0..8).map(|k| C64::new(k as f64, 1.0)).collect()).unwrap();
        assert_abs_diff_eq!(
            von_neumann_entropy(&DensityMatrix::from_pure(&s).unwrap()),
            0.0,
            epsilon = 1e-10
        );
        let mixed = DensityMatrix::maximally_mixed(10).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&mixed), 10.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(von_neumann_entropy(&mixed), 6.931472, epsilon = 5e-7);
    }

    #[test]
    fn plus_state_dephases_to_half() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(1, vec![C64::new(h, 0.0); 2]).unwrap();
        let d = dephase_z(&DensityMatrix::from_pure(&plus).unwrap());
        assert!(d.is_diagonal());
        let p = d.probabilities();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        let again = dephase_z(&d);
        assert_eq!(again, d);
    }

    #[test]
    fn energies() {
        let mut p = vec![0.0; 1 << 10];
        p[0] = 1.0;
        let zeros = DensityMatrix::from_diagonal(10, p).unwrap();
        assert_eq!(subsystem_energy(&zeros, &[0]).unwrap(), 1.0);
        let bath: Vec<usize> = (1..10).collect();
        assert_eq!(subsystem_energy(&zeros, &bath).unwrap(), 9.0);
        assert_eq!(subsystem_energy(&zeros, &[]).unwrap(), 0.0);

        let mut p = vec![0.0; 1 << 10];
        p[(1 << 10) - 1] = 1.0;
        let ones = DensityMatrix::from_diagonal(10, p).unwrap();
        assert_eq!(subsystem_energy(&ones, &[0]).unwrap(), -1.0);

        let pure = DensityMatrix::from_pure(&PureState::basis(3, 0b101).unwrap()).unwrap();
        assert_abs_diff_eq!(subsystem_energy(&pure, &[0, 1, 2]).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn bell_marginal_and_mutual_information() {
        let rho = bell();
        let a = partial_trace(&rho, &[0]).unwrap();
        assert_abs_diff_eq!(a.max_off_diagonal(), 0.0, epsilon = 1e-15);
        let p = a.probabilities();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            mutual_information(&rho, &[0]).unwrap(),
            2.0 * 2f64.ln(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn classical_correlation_mutual_information() {
        let rho = DensityMatrix::from_diagonal(2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(mutual_information(&rho, &[1]).unwrap(), 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn partition_errors() {
        let rho = bell();
        assert!(mutual_information(&rho, &[0, 1]).is_err());
        assert!(mutual_information(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
        assert!(subsystem_energy(&rho, &[5]).is_err());
    }

    #[test]
    fn orthogonal_fidelity_and_mismatch() {
        let a = DensityMatrix::from_diagonal(1, vec![1.0, 0.0]).unwrap();
        let b = DensityMatrix::from_diagonal(1, vec![0.0, 1.0]).unwrap();
        assert_eq!(state_fidelity(&a, &b).unwrap(), 0.0);
        assert_abs_diff_eq!(state_fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        let c = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(matches!(state_fidelity(&a, &c), Err(Error::DimensionMismatch { .. })));
    }
}
