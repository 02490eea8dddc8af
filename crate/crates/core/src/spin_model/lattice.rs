//! Random 13C baths on a diamond lattice with point-dipole hyperfine couplings.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NuclearSpin, PhysicalConstants, SpinBath, SpinModelError};

/// Conventional cubic lattice constant of diamond, meters.
pub const DIAMOND_LATTICE_CONSTANT: f64 = 3.567e-10;
/// mu_0 / 4 pi, T m / A.
pub const MU0_OVER_4PI: f64 = 1e-7;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

const BASIS: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
    [0.25, 0.25, 0.25],
    [0.25, 0.75, 0.75],
    [0.75, 0.25, 0.75],
    [0.75, 0.75, 0.25],
];

/// Rotation taking the crystal [111] direction onto z.
fn nv_frame() -> Matrix3<f64> {
    let e3 = Vector3::new(1.0, 1.0, 1.0).normalize();
    let e1 = Vector3::new(1.0, -1.0, 0.0).normalize();
    let e2 = e3.cross(&e1);
    Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()])
}

/// Diamond lattice sites (NV frame, meters) with `min <= |r| <= max`, in a
/// fixed enumeration order. The electron sits on the lattice site at the origin.
pub fn diamond_sites_in_shell(min_distance: f64, max_distance: f64) -> Vec<Vector3<f64>> {
    let a = DIAMOND_LATTICE_CONSTANT;
    let rot = nv_frame();
    let n = (max_distance / a).ceil() as i64 + 1;
    let mut sites = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for b in BASIS.iter() {
                    let r = Vector3::new(i as f64 + b[0], j as f64 + b[1], k as f64 + b[2]) * a;
                    let d = r.norm();
                    if d >= min_distance && d <= max_distance {
                        sites.push(rot * r);
                    }
                }
            }
        }
    }
    sites
}

/// Secular point-dipole hyperfine vector (rad/s) for a nucleus at `position`
/// (meters, NV axis along z).
pub fn point_dipole_hyperfine(
    constants: &PhysicalConstants,
    gyro_n: f64,
    position: &Vector3<f64>,
) -> Vector3<f64> {
    let r = position.norm();
    let rhat = position / r;
    let k = MU0_OVER_4PI * constants.gamma_e * gyro_n * HBAR / (r * r * r);
    (Vector3::z() - rhat * (3.0 * rhat.z)) * k
}

/// Deterministic 13C bath: `count` sites drawn without replacement from the
/// lattice shell `[min_distance, max_distance]` (meters).
pub fn generate_c13_bath(
    seed: u64,
    count: usize,
    min_distance: f64,
    max_distance: f64,
    b_field: f64,
) -> Result<SpinBath, SpinModelError> {
    if count == 0 || !(min_distance > 0.0) || !(max_distance > min_distance) {
        return Err(SpinModelError::InvalidBath(format!(
            "need count >= 1 and 0 < min < max, got count={count}, min={min_distance}, max={max_distance}"
        )));
    }
    let sites = diamond_sites_in_shell(min_distance, max_distance);
    if sites.len() < count {
        return Err(SpinModelError::InsufficientSites {
            min_nm: min_distance * 1e9,
            max_nm: max_distance * 1e9,
            available: sites.len(),
            requested: count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, sites.len(), count).into_vec();
    picked.sort_unstable();

    let constants = PhysicalConstants::NV;
    let gyro = constants.gamma_c13;
    let nuclei = picked
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            NuclearSpin::new(
                format!("C{}", i + 1),
                gyro,
                point_dipole_hyperfine(&constants, gyro, &sites[s]),
            )
        })
        .collect();
    SpinBath::with_constants(constants, b_field, nuclei)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn on_axis_site_couples_longitudinally() {
        let c = PhysicalConstants::NV;
        let r = 1.2e-9;
        let a = point_dipole_hyperfine(&c, c.gamma_c13, &Vector3::new(0.0, 0.0, r));
        let prefactor = MU0_OVER_4PI * c.gamma_e * c.gamma_c13 * HBAR / r.powi(3);
        assert_eq!(a.x, 0.0);
        assert_eq!(a.y, 0.0);
        assert!((a.z.abs() - 2.0 * prefactor.abs()).abs() < 1e-12 * a.z.abs());
        // gamma_e < 0, so the on-axis coupling is positive.
        assert!(a.z > 0.0);
    }

    #[test]
    fn in_plane_site_has_prefactor_coupling() {
        let c = PhysicalConstants::NV;
        let r = 1.0e-9;
        let a = point_dipole_hyperfine(&c, c.gamma_c13, &Vector3::new(r, 0.0, 0.0));
        let prefactor = MU0_OVER_4PI * c.gamma_e * c.gamma_c13 * HBAR / r.powi(3);
        assert!((a.z - prefactor).abs() < 1e-12 * prefactor.abs());
        // ~ 2 pi x 19.9 kHz at 1 nm
        assert!((prefactor.abs() / (2.0 * PI) - 19.9e3).abs() < 0.2e3);
    }

    #[test]
    fn lattice_axis_and_density() {
        let sites = diamond_sites_in_shell(1e-10, 4e-10);
        // nearest neighbour along [111] lands on the z axis at a*sqrt(3)/4
        let nn = DIAMOND_LATTICE_CONSTANT * 3f64.sqrt() / 4.0;
        assert!(sites
            .iter()
            .any(|s| (s.z - nn).abs() < 1e-20 && s.x.abs() < 1e-20 && s.y.abs() < 1e-20));
        // 4 nearest neighbours of a diamond site
        assert_eq!(sites.iter().filter(|s| (s.norm() - nn).abs() < 1e-15).count(), 4);
    }

    #[test]
    fn generator_is_deterministic_and_dipolar() {
        let a = generate_c13_bath(7, 40, 0.5e-9, 2.0e-9, 1.0).unwrap();
        let b = generate_c13_bath(7, 40, 0.5e-9, 2.0e-9, 1.0).unwrap();
        assert_eq!(a, b);
        let c = generate_c13_bath(8, 40, 0.5e-9, 2.0e-9, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn hyperfine_scales_as_inverse_cube() {
        let c = PhysicalConstants::NV;
        let dir = Vector3::new(0.3, -0.5, 0.81).normalize();
        let a1 = point_dipole_hyperfine(&c, c.gamma_c13, &(dir * 1e-9)).norm();
        let a2 = point_dipole_hyperfine(&c, c.gamma_c13, &(dir * 2e-9)).norm();
        assert!((a1 / a2 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn typical_magnitudes_for_150_nuclei() {
        let bath = generate_c13_bath(1, 150, 0.5e-9, 3.0e-9, 1.0).unwrap();
        let khz: Vec<f64> = bath
            .nuclei
            .iter()
            .map(|n| n.hyperfine.norm() / (2.0 * PI * 1e3))
            .collect();
        let max = khz.iter().cloned().fold(0.0, f64::max);
        let min = khz.iter().cloned().fold(f64::INFINITY, f64::min);
        // |A| in [k/r^3, 2k/r^3] with k ~ 19.9 kHz nm^3
        assert!(max <= 2.0 * 19.95 / 0.125 + 1e-9);
        assert!(min >= 19.85 / 27.0 - 1e-9);
        let median = {
            let mut v = khz.clone();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[75]
        };
        assert!(median > 0.5 && median < 100.0, "median {median}");
    }

    #[test]
    fn too_few_sites() {
        let e = generate_c13_bath(1, 1000, 0.5e-9, 0.6e-9, 1.0).unwrap_err();
        assert!(matches!(e, SpinModelError::InsufficientSites { .. }));
    }
}
