//! Pointwise weak-form fluxes of the stationary ALE FSI equations.
//!
//! A state at a point is packed into 15 slots
//!
//! | slots  | content                         |
//! |--------|---------------------------------|
//! | 0..2   | velocity `v`                    |
//! | 2..6   | `grad v`, row-major `dv_i/dx_j` |
//! | 6..8   | displacement `u`                |
//! | 8..12  | `grad u`                        |
//! | 12     | pressure `p`                    |
//! | 13..15 | `grad p`                        |
//!
//! and a flux uses the same layout for the coefficients multiplying the
//! corresponding slots of the test function, so the residual density is
//! `sum_s flux[s] * psi[s]`.

use super::dual::Real;
use super::params::FsiParameters;

pub const NSLOT: usize = 15;

/// Value and gradient slots of each component, ordered vx, vy, ux, uy, p.
pub const COMPONENT_SLOTS: [[usize; 3]; 5] = [[0, 2, 3], [1, 4, 5], [6, 8, 9], [7, 10, 11], [12, 13, 14]];

pub type M2<T> = [[T; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvalidState {
    pub det: f64,
}

#[inline]
fn mul<T: Real>(a: &M2<T>, b: &M2<T>) -> M2<T> {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

#[inline]
fn tr<T: Real>(a: &M2<T>) -> M2<T> {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Deformation gradient pieces shared by all terms.
#[derive(Clone, Copy, Debug)]
pub struct Kinematics<T> {
    pub f: M2<T>,
    pub j: T,
    pub finv: M2<T>,
}

impl<T: Real> Kinematics<T> {
    pub fn new(x: &[T; NSLOT]) -> Result<Self, InvalidState> {
        let f = [[x[8] + 1.0, x[9]], [x[10], x[11] + 1.0]];
        let j = f[0][0] * f[1][1] - f[0][1] * f[1][0];
        if j.val().is_nan() || j.val() <= 0.0 {
            return Err(InvalidState { det: j.val() });
        }
        let finv = [[f[1][1] / j, -f[0][1] / j], [-f[1][0] / j, f[0][0] / j]];
        Ok(Kinematics { f, j, finv })
    }
}

fn grad_v<T: Real>(x: &[T; NSLOT]) -> M2<T> {
    [[x[2], x[3]], [x[4], x[5]]]
}

/// ALE Cauchy stress of the fluid, `-p I + rho nu (grad v F^-1 + F^-T grad v^T)`.
pub fn fluid_cauchy<T: Real>(p: &FsiParameters, x: &[T; NSLOT], k: &Kinematics<T>) -> M2<T> {
    let gvf = mul(&grad_v(x), &k.finv);
    let mu = p.rho_f * p.nu_f;
    let mut s = [[T::cst(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = (gvf[i][j] + gvf[j][i]) * mu;
        }
        s[i][i] = s[i][i] - x[12];
    }
    s
}

pub fn fluid_flux<T: Real>(p: &FsiParameters, x: &[T; NSLOT]) -> Result<[T; NSLOT], InvalidState> {
    let k = Kinematics::new(x)?;
    let z = T::cst(0.0);
    let mut out = [z; NSLOT];
    let gvf = mul(&grad_v(x), &k.finv);
    let rj = k.j * p.rho_f;
    // convection rho J (grad v F^-1 v) minus body force
    for i in 0..2 {
        out[i] = rj * (gvf[i][0] * x[0] + gvf[i][1] * x[1]) - rj * p.force_f[i];
    }
    let sigma = fluid_cauchy(p, x, &k);
    let piola = mul(&sigma, &tr(&k.finv));
    for i in 0..2 {
        for j in 0..2 {
            out[2 + 2 * i + j] = k.j * piola[i][j];
            out[8 + 2 * i + j] = x[8 + 2 * i + j] * p.alpha_mesh;
        }
    }
    out[12] = k.j * (gvf[0][0] + gvf[1][1]);
    Ok(out)
}

/// Second Piola-Kirchhoff stress of the St. Venant-Kirchhoff material.
pub fn stvk_stress<T: Real>(p: &FsiParameters, f: &M2<T>) -> M2<T> {
    let c = mul(&tr(f), f);
    let e = [[(c[0][0] - 1.0) * 0.5, c[0][1] * 0.5], [c[1][0] * 0.5, (c[1][1] - 1.0) * 0.5]];
    let tre = e[0][0] + e[1][1];
    let mut s = [[e[0][0] * (2.0 * p.mu_s), e[0][1] * (2.0 * p.mu_s)], [e[1][0] * (2.0 * p.mu_s), e[1][1] * (2.0 * p.mu_s)]];
    s[0][0] += tre * p.lambda_s;
    s[1][1] += tre * p.lambda_s;
    s
}

pub fn solid_flux<T: Real>(p: &FsiParameters, x: &[T; NSLOT]) -> Result<[T; NSLOT], InvalidState> {
    let k = Kinematics::new(x)?;
    let z = T::cst(0.0);
    let mut out = [z; NSLOT];
    let fs = mul(&k.f, &stvk_stress(p, &k.f));
    for i in 0..2 {
        out[i] = T::cst(-p.rho_s * p.force_s[i]);
        for j in 0..2 {
            out[2 + 2 * i + j] = fs[i][j];
        }
        // stationary kinematic coupling in the solid
        out[6 + i] = x[i];
    }
    out[12] = x[12] * p.alpha_p;
    out[13] = x[13] * p.alpha_p;
    out[14] = x[14] * p.alpha_p;
    Ok(out)
}

/// Do-nothing correction `rho nu J F^-T grad v^T F^-T n` on outflow faces,
/// returned in the velocity value slots. The residual subtracts it.
pub fn do_nothing_correction<T: Real>(p: &FsiParameters, x: &[T; NSLOT], n: [f64; 2]) -> Result<[T; 2], InvalidState> {
    let k = Kinematics::new(x)?;
    let fit = tr(&k.finv);
    let m = mul(&mul(&fit, &tr(&grad_v(x))), &fit);
    let c = k.j * (p.rho_f * p.nu_f);
    Ok([c * (m[0][0] * n[0] + m[0][1] * n[1]), c * (m[1][0] * n[0] + m[1][1] * n[1])])
}

/// Fluid traction `J sigma F^-T n` in reference configuration.
pub fn fluid_traction<T: Real>(p: &FsiParameters, x: &[T; NSLOT], n: [f64; 2]) -> Result<[T; 2], InvalidState> {
    let k = Kinematics::new(x)?;
    let piola = mul(&fluid_cauchy(p, x, &k), &tr(&k.finv));
    Ok([
        k.j * (piola[0][0] * n[0] + piola[0][1] * n[1]),
        k.j * (piola[1][0] * n[0] + piola[1][1] * n[1]),
    ])
}

/// Stored energy density `mu tr(E^2) + lambda/2 tr(E)^2` of the solid.
pub fn stvk_energy(p: &FsiParameters, grad_u: [[f64; 2]; 2]) -> f64 {
    let f = [[1.0 + grad_u[0][0], grad_u[0][1]], [grad_u[1][0], 1.0 + grad_u[1][1]]];
    let c = mul(&tr(&f), &f);
    let e = [[(c[0][0] - 1.0) * 0.5, c[0][1] * 0.5], [c[1][0] * 0.5, (c[1][1] - 1.0) * 0.5]];
    let tre = e[0][0] + e[1][1];
    let tre2 = e[0][0] * e[0][0] + 2.0 * e[0][1] * e[1][0] + e[1][1] * e[1][1];
    p.mu_s * tre2 + 0.5 * p.lambda_s * tre * tre
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dual::Dual;
    use rand::{Rng, SeedableRng};

    fn random_state(rng: &mut impl Rng, scale: f64) -> [f64; NSLOT] {
        std::array::from_fn(|_| rng.random_range(-scale..scale))
    }

    #[test]
    fn rest_state_is_stress_free() {
        let p = FsiParameters::default();
        let x = [0.0; NSLOT];
        assert!(solid_flux(&p, &x).unwrap().iter().all(|&v| v == 0.0));
        assert!(fluid_flux(&p, &x).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inverted_map_is_rejected() {
        let p = FsiParameters::default();
        let mut x = [0.0; NSLOT];
        x[8] = -2.0;
        assert!(fluid_flux(&p, &x).is_err());
        assert!(solid_flux(&p, &x).is_err());
    }

    #[test]
    fn eulerian_limit_of_fluid_flux() {
        // with u = 0 the flux is the Navier-Stokes flux in symmetric-stress form
        let p = FsiParameters::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut x = random_state(&mut rng, 1.0);
        for s in 6..12 {
            x[s] = 0.0;
        }
        let out = fluid_flux(&p, &x).unwrap();
        let g = [[x[2], x[3]], [x[4], x[5]]];
        let mu = p.rho_f * p.nu_f;
        for i in 0..2 {
            let conv = p.rho_f * (g[i][0] * x[0] + g[i][1] * x[1]);
            assert!((out[i] - conv).abs() < 1e-12 * conv.abs().max(1.0));
            for j in 0..2 {
                let s = mu * (g[i][j] + g[j][i]) - if i == j { x[12] } else { 0.0 };
                assert!((out[2 + 2 * i + j] - s).abs() < 1e-12);
            }
        }
        assert!((out[12] - (x[2] + x[5])).abs() < 1e-14);
    }

    #[test]
    fn solid_stress_is_energy_gradient() {
        let p = FsiParameters::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = random_state(&mut rng, 0.1);
            let out = solid_flux(&p, &x).unwrap();
            let gu = [[x[8], x[9]], [x[10], x[11]]];
            for i in 0..2 {
                for j in 0..2 {
                    let h = 1e-7;
                    let mut a = gu;
                    let mut b = gu;
                    a[i][j] += h;
                    b[i][j] -= h;
                    let fd = (stvk_energy(&p, a) - stvk_energy(&p, b)) / (2.0 * h);
                    let exact = out[2 + 2 * i + j];
                    assert!((fd - exact).abs() < 1e-6 * exact.abs().max(p.mu_s * 1e-3));
                }
            }
        }
    }

    #[test]
    fn dual_derivatives_match_finite_differences() {
        let p = FsiParameters::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = random_state(&mut rng, 0.2);
        for solid in [false, true] {
            let xd: [Dual; NSLOT] = std::array::from_fn(|i| Dual::variable(x[i], i));
            let f = |y: &[f64; NSLOT]| if solid { solid_flux(&p, y).unwrap() } else { fluid_flux(&p, y).unwrap() };
            let out = if solid { solid_flux(&p, &xd).unwrap() } else { fluid_flux(&p, &xd).unwrap() };
            for k in 0..NSLOT {
                let h = 1e-6;
                let mut a = x;
                let mut b = x;
                a[k] += h;
                b[k] -= h;
                let (fa, fb) = (f(&a), f(&b));
                for s in 0..NSLOT {
                    let fd = (fa[s] - fb[s]) / (2.0 * h);
                    assert!((fd - out[s].d[k]).abs() < 1e-5 * fd.abs().max(1.0), "slot {s} dir {k}");
                }
            }
        }
    }

    #[test]
    fn do_nothing_reduces_to_transpose_gradient() {
        let p = FsiParameters::default();
        let mut x = [0.0; NSLOT];
        // v = (y, 0)
        x[3] = 1.0;
        let g = do_nothing_correction(&p, &x, [1.0, 0.0]).unwrap();
        let mu = p.rho_f * p.nu_f;
        assert!(g[0].abs() < 1e-15 && (g[1] - mu).abs() < 1e-15);
        assert_eq!(do_nothing_correction(&p, &[0.0; NSLOT], [1.0, 0.0]).unwrap(), [0.0, 0.0]);
    }
}
