use super::{check_index, insert_zero_bits, DensityMatrix, PureState, Storage, C64};
use crate::{Error, Result};

/// Two-qubit unitary on an ordered pair `(A, i)`. The 4×4 matrix is indexed by
/// `2·bit_A + bit_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairUnitary {
    delta_t: f64,
    matrix: [[C64; 4]; 4],
}

impl PairUnitary {
    pub fn identity() -> Self {
        let mut matrix = [[C64::new(0.0, 0.0); 4]; 4];
        for (k, row) in matrix.iter_mut().enumerate() {
            row[k] = C64::new(1.0, 0.0);
        }
        Self { delta_t: 0.0, matrix }
    }

    /// Wrap an arbitrary 4×4 matrix; `delta_t` is informational.
    pub fn from_matrix(delta_t: f64, matrix: [[C64; 4]; 4]) -> Self {
        Self { delta_t, matrix }
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn matrix(&self) -> &[[C64; 4]; 4] {
        &self.matrix
    }

    /// Conjugate transpose. For the exchange unitary this equals the one built
    /// from `-Δt`.
    pub fn adjoint(&self) -> Self {
        let mut matrix = [[C64::new(0.0, 0.0); 4]; 4];
        for (r, row) in matrix.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = self.matrix[c][r].conj();
            }
        }
        Self {
            delta_t: -self.delta_t,
            matrix,
        }
    }

    /// The 2×2 block on `{|01⟩, |10⟩}` when the matrix is the identity on
    /// `|00⟩, |11⟩` and does not mix the two subspaces.
    fn exchange_block(&self) -> Option<[[C64; 2]; 2]> {
        let m = &self.matrix;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let outer = [0usize, 3];
        for &r in &outer {
            for c in 0..4 {
                let expected = if r == c { one } else { zero };
                if m[r][c] != expected || m[c][r] != expected {
                    return None;
                }
            }
        }
        Some([[m[1][1], m[1][2]], [m[2][1], m[2][2]]])
    }

    #[inline]
    fn apply4(&self, v: [C64; 4]) -> [C64; 4] {
        let m = &self.matrix;
        let mut out = [C64::new(0.0, 0.0); 4];
        for r in 0..4 {
            out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
        }
        out
    }

    /// `v ↦ v·M†`, i.e. `out_p = Σ_q v_q conj(M_pq)`.
    #[inline]
    fn apply4_adjoint_right(&self, v: [C64; 4]) -> [C64; 4] {
        let m = &self.matrix;
        let mut out = [C64::new(0.0, 0.0); 4];
        for p in 0..4 {
            out[p] = v[0] * m[p][0].conj() + v[1] * m[p][1].conj() + v[2] * m[p][2].conj() + v[3] * m[p][3].conj();
        }
        out
    }
}

/// `exp[-i (X_A X_i + Y_A Y_i) Δt]`: identity on `|00⟩, |11⟩`, and on
/// `span{|01⟩, |10⟩}` the rotation `[[cos 2Δt, -i sin 2Δt], [-i sin 2Δt, cos 2Δt]]`.
pub fn build_pair_unitary(delta_t: f64) -> Result<PairUnitary> {
    if !delta_t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite Δt {delta_t}")));
    }
    let (s, c) = (2.0 * delta_t).sin_cos();
    let mut u = PairUnitary::identity();
    u.delta_t = delta_t;
    u.matrix[1][1] = C64::new(c, 0.0);
    u.matrix[2][2] = C64::new(c, 0.0);
    u.matrix[1][2] = C64::new(0.0, -s);
    u.matrix[2][1] = C64::new(0.0, -s);
    Ok(u)
}

/// Something a pair unitary can act on.
pub trait QuantumState: Clone {
    fn n_qubits(&self) -> usize;

    fn apply_pair_in_place(&mut self, u: &PairUnitary, qubit_a: usize, qubit_i: usize) -> Result<()>;
}

/// Basis indices of every 4-element block touched by a gate on `(qa, qi)`,
/// ordered by the gate's local index `2·bit_a + bit_i`.
fn blocks(n_qubits: usize, qa: usize, qi: usize) -> impl Iterator<Item = [usize; 4]> {
    let (lo, hi) = if qa < qi { (qa, qi) } else { (qi, qa) };
    let (ba, bi) = (1usize << qa, 1usize << qi);
    (0..(1usize << (n_qubits - 2))).map(move |x| {
        let base = insert_zero_bits(x, lo, hi);
        [base, base | bi, base | ba, base | ba | bi]
    })
}

fn check_pair(n_qubits: usize, qa: usize, qi: usize) -> Result<()> {
    check_index(qa, n_qubits)?;
    check_index(qi, n_qubits)?;
    if qa == qi {
        return Err(Error::EqualIndices(qa));
    }
    Ok(())
}

impl QuantumState for PureState {
    fn n_qubits(&self) -> usize {
        PureState::n_qubits(self)
    }

    fn apply_pair_in_place(&mut self, u: &PairUnitary, qa: usize, qi: usize) -> Result<()> {
        let n = PureState::n_qubits(self);
        check_pair(n, qa, qi)?;
        let amps = self.amplitudes_mut();
        if let Some(b) = u.exchange_block() {
            let zero = C64::new(0.0, 0.0);
            for idx in blocks(n, qa, qi) {
                let (x, y) = (amps[idx[1]], amps[idx[2]]);
                if x == zero && y == zero {
                    continue;
                }
                amps[idx[1]] = b[0][0] * x + b[0][1] * y;
                amps[idx[2]] = b[1][0] * x + b[1][1] * y;
            }
            return Ok(());
        }
        for idx in blocks(n, qa, qi) {
            let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            let out = u.apply4(v);
            for k in 0..4 {
                amps[idx[k]] = out[k];
            }
        }
        Ok(())
    }
}

impl QuantumState for DensityMatrix {
    fn n_qubits(&self) -> usize {
        DensityMatrix::n_qubits(self)
    }

    /// `ρ ↦ U ρ U†`. Diagonal storage is promoted to dense first.
    fn apply_pair_in_place(&mut self, u: &PairUnitary, qa: usize, qi: usize) -> Result<()> {
        let n = DensityMatrix::n_qubits(self);
        check_pair(n, qa, qi)?;
        if self.is_diagonal() {
            let full = self.to_matrix();
            *self.storage_mut() = Storage::Full(full);
        }
        let Storage::Full(m) = self.storage_mut() else {
            unreachable!()
        };
        let dim = 1usize << n;
        let data = m.as_mut_slice(); // column-major: (r, c) at c * dim + r
                                     // left multiplication, column by column
        for c in 0..dim {
            let col = &mut data[c * dim..(c + 1) * dim];
            for idx in blocks(n, qa, qi) {
                let v = [col[idx[0]], col[idx[1]], col[idx[2]], col[idx[3]]];
                let out = u.apply4(v);
                for k in 0..4 {
                    col[idx[k]] = out[k];
                }
            }
        }
        // right multiplication by U†, row by row
        for idx in blocks(n, qa, qi) {
            for r in 0..dim {
                let v = [
                    data[idx[0] * dim + r],
                    data[idx[1] * dim + r],
                    data[idx[2] * dim + r],
                    data[idx[3] * dim + r],
                ];
                let out = u.apply4_adjoint_right(v);
                for k in 0..4 {
                    data[idx[k] * dim + r] = out[k];
                }
            }
        }
        Ok(())
    }
}

/// Apply `u` to qubits `(qubit_a, qubit_i)` of a copy of `state`.
pub fn apply_pair_unitary<S: QuantumState>(state: &S, u: &PairUnitary, qubit_a: usize, qubit_i: usize) -> Result<S> {
    let mut out = state.clone();
    out.apply_pair_in_place(u, qubit_a, qubit_i)?;
    Ok(out)
}

/// One protocol step. Forward applies `𝒰_N ⋯ 𝒰_1` (so `𝒰_1` acts first);
/// reverse applies `𝒰_1† ⋯ 𝒰_N†` (so `𝒰_N†` acts first), the exact inverse.
pub fn apply_step_unitary<S: QuantumState>(state: &S, delta_t: f64, reverse: bool) -> Result<S> {
    let mut out = state.clone();
    step_in_place(&mut out, delta_t, reverse)?;
    Ok(out)
}

pub(crate) fn step_in_place<S: QuantumState>(state: &mut S, delta_t: f64, reverse: bool) -> Result<()> {
    let n = state.n_qubits();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "a protocol step needs at least 2 qubits, got {n}"
        )));
    }
    let u = build_pair_unitary(delta_t)?;
    if reverse {
        let ud = u.adjoint();
        for i in (1..n).rev() {
            state.apply_pair_in_place(&ud, 0, i)?;
        }
    } else {
        for i in 1..n {
            state.apply_pair_in_place(&u, 0, i)?;
        }
    }
    Ok(())
}
