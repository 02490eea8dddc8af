//! Operators on electron qubit x nuclear spins.
//!
//! Basis index = `e * 2^N + sum_j s_j 2^(N-1-j)`: the electron is the
//! slowest index, nucleus 0 the next. `e = 0` is |0>, `e = 1` is |1>, with
//! `sigma_z = |1><1| - |0><0|`; `s_j = 0` is spin up along z.

use nalgebra::{Complex, DMatrix, Vector3};

use crate::spin_model::SpinBath;

pub type C = Complex<f64>;
pub type Mat2 = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

pub const IDENTITY2: Mat2 = [[ONE, ZERO], [ZERO, ONE]];

/// `exp(-i tau b.sigma/2)`.
pub fn precession(b: &Vector3<f64>, tau: f64) -> Mat2 {
    let norm = b.norm();
    if norm == 0.0 {
        return IDENTITY2;
    }
    let half = 0.5 * norm * tau;
    let (s, c) = half.sin_cos();
    let n = b / norm;
    // c I - i s (n.sigma)
    [
        [C::new(c, -s * n.z), C::new(-s * n.y, -s * n.x)],
        [C::new(s * n.y, -s * n.x), C::new(c, s * n.z)],
    ]
}

/// Electron drive rotation `exp(-i (angle/2)(cos(phi) sigma_x + sin(phi) sigma_y))`
/// in the (|0>, |1>) basis, with `angle = Omega dt`.
pub fn drive_rotation(angle: f64, phi: f64) -> Mat2 {
    let (s, c) = (0.5 * angle).sin_cos();
    let (sp, cp) = phi.sin_cos();
    // -i s (cos phi sigma_x + sin phi sigma_y): off-diagonals -i s e^{-i phi}, -i s e^{i phi}
    [
        [C::new(c, 0.0), C::new(-s * sp, -s * cp)],
        [C::new(s * sp, -s * cp), C::new(c, 0.0)],
    ]
}

/// Precession vectors of every nucleus for each electron level: the
/// nuclear Hamiltonian conditioned on level `e` is `sum_j b_j^(e).I_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub n_nuclei: usize,
    pub fields: [Vec<Vector3<f64>>; 2],
}

impl SystemModel {
    pub fn new(bath: &SpinBath) -> Self {
        let mut f0 = Vec::with_capacity(bath.nuclei.len());
        let mut f1 = Vec::with_capacity(bath.nuclei.len());
        for n in &bath.nuclei {
            let omega = Vector3::new(0.0, 0.0, bath.larmor_frequency(n)) - n.hyperfine * 0.5;
            // sigma_z = -1 on |0>, +1 on |1>
            f0.push(omega - n.hyperfine * 0.5);
            f1.push(omega + n.hyperfine * 0.5);
        }
        Self {
            n_nuclei: bath.nuclei.len(),
            fields: [f0, f1],
        }
    }

    /// Model restricted to nucleus `j`.
    pub fn single(&self, j: usize) -> Self {
        Self {
            n_nuclei: 1,
            fields: [vec![self.fields[0][j]], vec![self.fields[1][j]]],
        }
    }

    pub fn half_dim(&self) -> usize {
        1 << self.n_nuclei
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim()
    }

    pub fn free_gates(&self, tau: f64) -> [Vec<Mat2>; 2] {
        [
            self.fields[0].iter().map(|b| precession(b, tau)).collect(),
            self.fields[1].iter().map(|b| precession(b, tau)).collect(),
        ]
    }

    /// Full Hamiltonian with a drive of Rabi frequency `omega` and phase `phi`.
    pub fn hamiltonian(&self, omega: f64, phi: f64) -> DMatrix<C> {
        let d = self.dim();
        let half = self.half_dim();
        let n = self.n_nuclei;
        let mut h = DMatrix::from_element(d, d, ZERO);
        for e in 0..2 {
            for (j, b) in self.fields[e].iter().enumerate() {
                let bit = 1usize << (n - 1 - j);
                for k in 0..half {
                    let up = k & bit == 0;
                    let r = e * half + k;
                    // b.I = (bz/2) sz + (bx/2) sx + (by/2) sy
                    h[(r, r)] += C::new(if up { 0.5 * b.z } else { -0.5 * b.z }, 0.0);
                    let partner = e * half + (k ^ bit);
                    // <up| b.I |down> = (bx - i by)/2 ; <down| b.I |up> = (bx + i by)/2
                    h[(r, partner)] += if up {
                        C::new(0.5 * b.x, -0.5 * b.y)
                    } else {
                        C::new(0.5 * b.x, 0.5 * b.y)
                    };
                }
            }
        }
        if omega != 0.0 {
            let (sp, cp) = phi.sin_cos();
            let up = C::new(0.5 * omega * cp, 0.5 * omega * sp); // <1|H|0>
            for k in 0..half {
                h[(half + k, k)] += up;
                h[(k, half + k)] += up.conj();
            }
        }
        h
    }
}

/// Applies the conditional free precession (per-nucleus gates for each
/// electron level) to every column of `m` from the left.
pub fn apply_free(m: &mut DMatrix<C>, gates: &[Vec<Mat2>; 2]) {
    let d = m.nrows();
    let half = d / 2;
    let n = gates[0].len();
    for col in m.as_mut_slice().chunks_exact_mut(d) {
        for (e, level) in gates.iter().enumerate() {
            let block = &mut col[e * half..(e + 1) * half];
            for (j, g) in level.iter().enumerate() {
                let stride = 1usize << (n - 1 - j);
                let mut base = 0;
                while base < half {
                    for k in base..base + stride {
                        let (a, b) = (block[k], block[k + stride]);
                        block[k] = g[0][0] * a + g[0][1] * b;
                        block[k + stride] = g[1][0] * a + g[1][1] * b;
                    }
                    base += 2 * stride;
                }
            }
        }
    }
}

/// Applies an electron-only gate to every column of `m` from the left.
pub fn apply_electron(m: &mut DMatrix<C>, g: &Mat2) {
    let d = m.nrows();
    let half = d / 2;
    for col in m.as_mut_slice().chunks_exact_mut(d) {
        let (lo, hi) = col.split_at_mut(half);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = g[0][0] * x + g[0][1] * y;
            *b = g[1][0] * x + g[1][1] * y;
        }
    }
}

/// `P U P^dag` with `P = diag(1, e^{i phi})` on the electron.
pub fn rephase(u: &DMatrix<C>, phi: f64) -> DMatrix<C> {
    if phi == 0.0 {
        return u.clone();
    }
    let half = u.nrows() / 2;
    let p = C::from_polar(1.0, phi);
    let mut out = u.clone();
    for c in 0..u.ncols() {
        for r in 0..u.nrows() {
            let (hr, hc) = (r >= half, c >= half);
            if hr && !hc {
                out[(r, c)] *= p;
            } else if !hr && hc {
                out[(r, c)] *= p.conj();
            }
        }
    }
    out
}

/// Exact `exp(-i H dt)` of a Hermitian matrix via its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C>, dt: f64) -> DMatrix<C> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let ph = C::from_polar(1.0, -lam * dt);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= ph;
        }
    }
    scaled * v.adjoint()
}

pub fn identity(d: usize) -> DMatrix<C> {
    DMatrix::identity(d, d)
}

/// Largest entry of `U^dag U - 1`.
pub fn unitarity_error(u: &DMatrix<C>) -> f64 {
    let p = u.adjoint() * u;
    let mut worst = 0.0f64;
    for r in 0..p.nrows() {
        for c in 0..p.ncols() {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((p[(r, c)] - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::NuclearSpin;
    use std::f64::consts::PI;

    fn max_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
        (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    #[test]
    fn free_larmor_spectrum() {
        let bath = SpinBath::new(1.0, vec![NuclearSpin::proton_khz("H", [0.0, 0.0, 0.0])]).unwrap();
        let model = SystemModel::new(&bath);
        let h = model.hamiltonian(0.0, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let wl = 2.0 * PI * 42.577e6;
        for (v, e) in ev.iter().zip([-0.5 * wl, -0.5 * wl, 0.5 * wl, 0.5 * wl]) {
            assert!((v - e).abs() < 1e-6 * wl);
        }
    }

    #[test]
    fn cluster_hamiltonian_is_hermitian_and_dephasing() {
        let model = SystemModel::new(&SpinBath::five_proton_cluster(1.0));
        assert_eq!(model.dim(), 64);
        let h = model.hamiltonian(2.0 * PI * 10e6, 0.7);
        let scale = h.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(max_diff(&h, &h.adjoint()) <= 1e-12 * scale);
        // no drive: commutes with sigma_z
        let h0 = model.hamiltonian(0.0, 0.0);
        let mut sz = DMatrix::from_element(64, 64, ZERO);
        for k in 0..64 {
            sz[(k, k)] = C::new(if k < 32 { -1.0 } else { 1.0 }, 0.0);
        }
        let comm = &h0 * &sz - &sz * &h0;
        assert!(comm.iter().all(|z| z.norm() < 1e-6));
    }

    #[test]
    fn gates_match_matrix_exponential() {
        let model = SystemModel::new(&SpinBath::five_proton_cluster(1.0).subset(&["H1".into(), "H3".into()]).unwrap());
        let tau = 3.1e-9;
        let exact = expm_hermitian(&model.hamiltonian(0.0, 0.0), tau);
        let mut u = identity(model.dim());
        apply_free(&mut u, &model.free_gates(tau));
        assert!(max_diff(&u, &exact) < 1e-10);

        let omega = 2.0 * PI * 20e6;
        let drive_only = {
            let h = model.hamiltonian(omega, 0.4) - model.hamiltonian(0.0, 0.0);
            expm_hermitian(&h, tau)
        };
        let mut u = identity(model.dim());
        apply_electron(&mut u, &drive_rotation(omega * tau, 0.4));
        assert!(max_diff(&u, &drive_only) < 1e-12);
    }

    #[test]
    fn rephasing_rotates_drive_axis() {
        let model = SystemModel::new(&SpinBath::five_proton_cluster(1.0).subset(&["H2".into()]).unwrap());
        let tau = 1.3e-8;
        let omega = 2.0 * PI * 5e6;
        let ux = expm_hermitian(&model.hamiltonian(omega, 0.0), tau);
        let uy = expm_hermitian(&model.hamiltonian(omega, 0.5 * PI), tau);
        assert!(max_diff(&rephase(&ux, 0.5 * PI), &uy) < 1e-10);
        assert!(unitarity_error(&uy) < 1e-12);
    }
}
