//! Manufactured solutions: u, the forcing f = −L u for the constant kernel,
//! and the volume constraint g = u.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    pub name: &'static str,
    pub dim: usize,
    u: fn(&[f64; 3]) -> f64,
    /// Forcing; the second argument is δ.
    f: fn(&[f64; 3], f64) -> f64,
}

impl ManufacturedSolution {
    pub fn u(&self, x: &[f64; 3]) -> f64 {
        (self.u)(x)
    }

    pub fn f(&self, x: &[f64; 3], delta: f64) -> f64 {
        (self.f)(x, delta)
    }

    /// Dirichlet volume data, identical to `u`.
    pub fn g(&self, x: &[f64; 3]) -> f64 {
        (self.u)(x)
    }
}

fn r2(x: &[f64; 3]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
}

// −L u = −Δu for polynomials up to degree three. For u = Σ x_k⁴ the kernel's
// fourth moment adds δ² (2D) or (6/7)δ² (3D) per coordinate.
pub fn solution_catalog() -> Vec<ManufacturedSolution> {
    vec![
        ManufacturedSolution { name: "linear2d", dim: 2, u: |x| 1.0 + x[0] + x[1], f: |_, _| 0.0 },
        ManufacturedSolution { name: "quad2d", dim: 2, u: |x| x[0] * x[0] + x[1] * x[1], f: |_, _| -4.0 },
        ManufacturedSolution {
            name: "cubic2d",
            dim: 2,
            u: |x| x[0].powi(3) + x[1].powi(3),
            f: |x, _| -6.0 * (x[0] + x[1]),
        },
        ManufacturedSolution {
            name: "quartic2d",
            dim: 2,
            u: |x| x[0].powi(4) + x[1].powi(4),
            f: |x, d| -12.0 * r2(x) - 2.0 * d * d,
        },
        ManufacturedSolution { name: "quad3d", dim: 3, u: r2, f: |_, _| -6.0 },
        ManufacturedSolution {
            name: "cubic3d",
            dim: 3,
            u: |x| x[0].powi(3) + x[1].powi(3) + x[2].powi(3),
            f: |x, _| -6.0 * (x[0] + x[1] + x[2]),
        },
        ManufacturedSolution {
            name: "quartic3d",
            dim: 3,
            u: |x| x[0].powi(4) + x[1].powi(4) + x[2].powi(4),
            f: |x, d| -12.0 * r2(x) - 18.0 / 7.0 * d * d,
        },
    ]
}

pub fn find_solution(name: &str) -> Result<ManufacturedSolution> {
    solution_catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Unknown { what: "solution", name: name.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::scaling_c_delta;
    use crate::quadrature::gauss_legendre_1d;

    /// −L u(x) = −2 C_δ ∫_{B_δ} (u(x+z) − u(x)) dz by polar/spherical
    /// quadrature, exact for polynomial u.
    fn minus_lu(s: &ManufacturedSolution, x: &[f64; 3], delta: f64) -> f64 {
        let c = scaling_c_delta(s.dim, delta, 1.0);
        let gl = gauss_legendre_1d(6).unwrap();
        let nphi = 16;
        let mut sum = 0.0;
        for (rp, rw) in gl.ref_points.iter().zip(&gl.weights) {
            let r = 0.5 * delta * (rp[0] + 1.0);
            let wr = 0.5 * delta * rw;
            for k in 0..nphi {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / nphi as f64;
                let wphi = 2.0 * std::f64::consts::PI / nphi as f64;
                if s.dim == 2 {
                    let y = [x[0] + r * phi.cos(), x[1] + r * phi.sin(), 0.0];
                    sum += wr * wphi * r * (s.u(&y) - s.u(x));
                } else {
                    for (tp, tw) in gl.ref_points.iter().zip(&gl.weights) {
                        let ct = tp[0];
                        let st = (1.0 - ct * ct).sqrt();
                        let y = [x[0] + r * st * phi.cos(), x[1] + r * st * phi.sin(), x[2] + r * ct];
                        sum += wr * wphi * tw * r * r * (s.u(&y) - s.u(x));
                    }
                }
            }
        }
        -2.0 * c * sum
    }

    #[test]
    fn catalog_entries() {
        let names: Vec<_> = solution_catalog().iter().map(|s| s.name).collect();
        assert_eq!(names, ["linear2d", "quad2d", "cubic2d", "quartic2d", "quad3d", "cubic3d", "quartic3d"]);
        let lin = find_solution("linear2d").unwrap();
        assert!((lin.u(&[0.1, 0.2, 0.0]) - 1.3).abs() < 1e-15);
        assert_eq!(lin.f(&[0.1, 0.2, 0.0], 0.2), 0.0);
        assert!(find_solution("nope").is_err());
    }

    #[test]
    fn forcing_is_minus_nonlocal_laplacian() {
        let pts = [[0.0, 0.0, 0.0], [0.3, -0.2, 0.1], [-0.55, 0.35, -0.3]];
        for s in solution_catalog() {
            for x in &pts {
                let mut x = *x;
                if s.dim == 2 {
                    x[2] = 0.0;
                }
                for delta in [0.1, 0.2] {
                    let exact = minus_lu(&s, &x, delta);
                    let got = s.f(&x, delta);
                    assert!((exact - got).abs() < 1e-10 * (1.0 + exact.abs()), "{} at {x:?}: {got} vs {exact}", s.name);
                }
            }
        }
    }

    #[test]
    fn quartic_at_origin() {
        let q2 = find_solution("quartic2d").unwrap();
        assert!((q2.f(&[0.0; 3], 0.2) + 0.08).abs() < 1e-15);
        let q3 = find_solution("quartic3d").unwrap();
        assert!((q3.f(&[0.0; 3], 0.2) + 18.0 / 7.0 * 0.04).abs() < 1e-15);
    }
}
