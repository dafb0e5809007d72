//! Krylov solvers on the free-DOF block, Jacobi preconditioned: conjugate
//! gradients for a symmetrized matrix, restarted GMRES otherwise.

use crate::assembly::SparseMatrix;
use crate::error::{Error, Result};
use crate::fe_space::CoefficientVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Krylov {
    Cg,
    /// Restarted GMRES with the given restart length.
    Gmres(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// ‖A_ff w − rhs‖ / ‖rhs‖, recomputed from the returned solution.
    pub final_residual: f64,
    pub converged: bool,
}

/// Default relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// y_f = A_ff x_f for free rows; `x` must vanish on constrained entries.
fn matvec_free(a: &SparseMatrix, free: &[usize], x: &[f64], y: &mut [f64]) {
    for &i in free {
        let (c, v) = a.row(i);
        y[i] = c.iter().zip(v).map(|(&j, a)| a * x[j as usize]).sum();
    }
}

fn dot(free: &[usize], a: &[f64], b: &[f64]) -> f64 {
    free.iter().map(|&i| a[i] * b[i]).sum()
}

/// ‖A_ff w − rhs‖ / ‖rhs‖ over the free entries.
pub fn relative_residual(a: &SparseMatrix, constrained: &[bool], w: &[f64], rhs: &[f64]) -> f64 {
    let free: Vec<usize> = (0..constrained.len()).filter(|&i| !constrained[i]).collect();
    let mut x = w.to_vec();
    for (i, &c) in constrained.iter().enumerate() {
        if c {
            x[i] = 0.0;
        }
    }
    let mut r = vec![0.0; w.len()];
    matvec_free(a, &free, &x, &mut r);
    let num = free.iter().map(|&i| (r[i] - rhs[i]).powi(2)).sum::<f64>().sqrt();
    let den = free.iter().map(|&i| rhs[i] * rhs[i]).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Solves A_ff w = rhs_f and returns u_h = w on free DOFs and `g` on
/// constrained DOFs. Non-convergence is an error carrying the final residual.
pub fn solve(
    a: &SparseMatrix,
    rhs: &[f64],
    constrained: &[bool],
    g: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(CoefficientVector, SolveReport)> {
    let n = constrained.len();
    let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
    let mut w = vec![0.0; n];
    let mut inv_diag = vec![0.0; n];
    for &i in &free {
        let d = a.get(i, i);
        if !(d > 0.0) {
            return Err(Error::IndefiniteMatrix { iteration: 0, curvature: d });
        }
        inv_diag[i] = 1.0 / d;
    }
    let bnorm = dot(&free, rhs, rhs).sqrt();
    let mut iterations = 0;
    let mut final_residual = relative_residual(a, constrained, &w, rhs);
    // Restart from the true residual whenever the recurrence claims
    // convergence but recomputation disagrees.
    while bnorm > 0.0 && final_residual > tol && iterations < max_iter {
        let mut r = vec![0.0; n];
        matvec_free(a, &free, &w, &mut r);
        for &i in &free {
            r[i] = rhs[i] - r[i];
        }
        let mut z: Vec<f64> = (0..n).map(|i| r[i] * inv_diag[i]).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&free, &r, &z);
        while iterations < max_iter && dot(&free, &r, &r).sqrt() > tol * bnorm {
            iterations += 1;
            matvec_free(a, &free, &p, &mut ap);
            let curvature = dot(&free, &p, &ap);
            if !(curvature > 0.0) {
                return Err(Error::IndefiniteMatrix { iteration: iterations, curvature });
            }
            let alpha = rz / curvature;
            for &i in &free {
                w[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&free, &r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for &i in &free {
                p[i] = z[i] + beta * p[i];
            }
        }
        final_residual = relative_residual(a, constrained, &w, rhs);
    }
    let converged = final_residual <= tol;
    if !converged {
        return Err(Error::NotConverged { iterations, residual: final_residual });
    }
    for i in 0..n {
        if constrained[i] {
            w[i] = g[i];
        }
    }
    Ok((w, SolveReport { iterations, final_residual, converged }))
}

/// Right-preconditioned restarted GMRES for A_ff w = rhs_f, for matrices that
/// are not symmetric. Same contract as [`solve`].
pub fn solve_gmres(
    a: &SparseMatrix,
    rhs: &[f64],
    constrained: &[bool],
    g: &[f64],
    tol: f64,
    max_iter: usize,
    restart: usize,
) -> Result<(CoefficientVector, SolveReport)> {
    let n = constrained.len();
    let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
    let nf = free.len();
    let mut inv_diag = vec![0.0; n];
    for &i in &free {
        let d = a.get(i, i);
        if !(d > 0.0) {
            return Err(Error::IndefiniteMatrix { iteration: 0, curvature: d });
        }
        inv_diag[i] = 1.0 / d;
    }
    let m = restart.max(1);
    let bnorm = dot(&free, rhs, rhs).sqrt();
    let mut w = vec![0.0; n];
    let mut iterations = 0;
    let mut final_residual = relative_residual(a, constrained, &w, rhs);
    // Krylov basis stored compactly over free entries.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut full = vec![0.0; n];
    let mut av = vec![0.0; n];
    while bnorm > 0.0 && final_residual > tol && iterations < max_iter {
        matvec_free(a, &free, &w, &mut av);
        let r: Vec<f64> = free.iter().map(|&i| rhs[i] - av[i]).collect();
        let beta = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut e = vec![0.0; m + 1];
        e[0] = beta;
        let mut k = 0;
        while k < m && iterations < max_iter {
            iterations += 1;
            for (f, &i) in free.iter().enumerate() {
                full[i] = basis[k][f] * inv_diag[i];
            }
            matvec_free(a, &free, &full, &mut av);
            let mut v: Vec<f64> = free.iter().map(|&i| av[i]).collect();
            for (j, b) in basis.iter().enumerate() {
                let hj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                hess[j][k] = hj;
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= hj * y);
            }
            let hn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            hess[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let rho = hess[k][k].hypot(hess[k + 1][k]);
            cs[k] = hess[k][k] / rho;
            sn[k] = hess[k + 1][k] / rho;
            hess[k][k] = rho;
            hess[k + 1][k] = 0.0;
            e[k + 1] = -sn[k] * e[k];
            e[k] *= cs[k];
            k += 1;
            if e[k].abs() <= 0.1 * tol * bnorm || hn == 0.0 {
                break;
            }
            basis.push(v.iter().map(|x| x / hn).collect());
        }
        // Back substitution, then w += M⁻¹ V y.
        let mut y = vec![0.0; k];
        for j in (0..k).rev() {
            let s: f64 = ((j + 1)..k).map(|l| hess[j][l] * y[l]).sum();
            y[j] = (e[j] - s) / hess[j][j];
        }
        let mut upd = vec![0.0; nf];
        for (j, yj) in y.iter().enumerate() {
            upd.iter_mut().zip(&basis[j]).for_each(|(u, b)| *u += yj * b);
        }
        for (f, &i) in free.iter().enumerate() {
            w[i] += upd[f] * inv_diag[i];
        }
        final_residual = relative_residual(a, constrained, &w, rhs);
    }
    let converged = final_residual <= tol;
    if !converged {
        return Err(Error::NotConverged { iterations, residual: final_residual });
    }
    for i in 0..n {
        if constrained[i] {
            w[i] = g[i];
        }
    }
    Ok((w, SolveReport { iterations, final_residual, converged }))
}

/// Dispatch on the solver kind.
pub fn solve_with(
    kind: Krylov,
    a: &SparseMatrix,
    rhs: &[f64],
    constrained: &[bool],
    g: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(CoefficientVector, SolveReport)> {
    match kind {
        Krylov::Cg => solve(a, rhs, constrained, g, tol, max_iter),
        Krylov::Gmres(m) => solve_gmres(a, rhs, constrained, g, tol, max_iter, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_system_in_one_step() {
        let a = SparseMatrix::from_dense(3, &[2.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 1.0]);
        let (u, rep) = solve(&a, &[2.0, 8.0, 0.0], &[false, false, true], &[0.0, 0.0, 7.0], 1e-14, 30).unwrap();
        assert!(rep.iterations <= 2);
        assert!((u[0] - 1.0).abs() < 1e-15 && (u[1] - 2.0).abs() < 1e-15);
        assert_eq!(u[2], 7.0);
    }

    #[test]
    fn spd_tridiagonal() {
        let n = 50;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 2.0 + i as f64 * 0.01;
            if i + 1 < n {
                d[i * n + i + 1] = -1.0;
                d[(i + 1) * n + i] = -1.0;
            }
        }
        let a = SparseMatrix::from_dense(n, &d);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x, &mut b);
        let c = vec![false; n];
        let (u, rep) = solve(&a, &b, &c, &vec![0.0; n], 1e-12, 10 * n).unwrap();
        assert!(rep.converged);
        assert!((rep.final_residual - relative_residual(&a, &c, &u, &b)).abs() < 1e-14);
        assert!(u.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn indefinite_is_reported() {
        let a = SparseMatrix::from_dense(2, &[1.0, 2.0, 2.0, 1.0]);
        let r = solve(&a, &[1.0, -1.0], &[false, false], &[0.0, 0.0], 1e-12, 20);
        assert!(matches!(r, Err(Error::IndefiniteMatrix { .. })));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let n = 40;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 2.0;
            if i + 1 < n {
                d[i * n + i + 1] = -1.0;
                d[(i + 1) * n + i] = -1.0;
            }
        }
        let a = SparseMatrix::from_dense(n, &d);
        let r = solve(&a, &vec![1.0; n], &vec![false; n], &vec![0.0; n], 1e-12, 3);
        assert!(matches!(r, Err(Error::NotConverged { iterations: 3, .. })));
    }

    #[test]
    fn gmres_on_nonsymmetric_system() {
        let n = 60;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 3.0;
            if i + 1 < n {
                d[i * n + i + 1] = -1.2;
                d[(i + 1) * n + i] = -0.8;
            }
        }
        let a = SparseMatrix::from_dense(n, &d);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x, &mut b);
        let mut c = vec![false; n];
        c[0] = true;
        b[0] = 0.0;
        // Move the constrained column to the right-hand side.
        for i in 1..n {
            b[i] -= a.get(i, 0) * x[0];
        }
        let mut g = vec![0.0; n];
        g[0] = x[0];
        for restart in [5, 30] {
            let (u, rep) = solve_gmres(&a, &b, &c, &g, 1e-12, 10 * n, restart).unwrap();
            assert!(rep.converged && rep.final_residual <= 1e-12);
            assert!((rep.final_residual - relative_residual(&a, &c, &u, &b)).abs() < 1e-14);
            assert!(u.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-10));
        }
        let r = solve_gmres(&a, &b, &c, &g, 1e-12, 2, 30);
        assert!(matches!(r, Err(Error::NotConverged { iterations: 2, .. })));
    }
}
