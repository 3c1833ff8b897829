//! Closed-form eigen-decomposition of symmetric 3×3 matrices.
//!
//! Eigenvalues come from the trigonometric solution of the characteristic
//! cubic; eigenvectors from cross products of the rows of `A - λI`. The
//! cross-product construction is only reliable away from repeated
//! eigenvalues, which is exactly the regime the LRF stage accepts — nearly
//! degenerate tensors are rejected upstream.

use nalgebra::{Matrix3, Vector3};

/// Eigen-decomposition with eigenvalues sorted descending.
#[derive(Clone, Copy, Debug)]
pub struct SymEigen3 {
    /// Eigenvalues, descending.
    pub values: [f64; 3],
    /// Unit eigenvectors matching `values`; sign is arbitrary.
    pub vectors: [Vector3<f64>; 3],
}

/// Eigenvalues of a symmetric 3×3 matrix, sorted descending.
pub fn sym_eigenvalues3(m: &Matrix3<f64>) -> [f64; 3] {
    let a11 = m[(0, 0)];
    let a22 = m[(1, 1)];
    let a33 = m[(2, 2)];
    let a12 = m[(0, 1)];
    let a13 = m[(0, 2)];
    let a23 = m[(1, 2)];

    let p1 = a12 * a12 + a13 * a13 + a23 * a23;
    if p1 == 0.0 {
        let mut vals = [a11, a22, a33];
        vals.sort_unstable_by(|a, b| b.total_cmp(a));
        return vals;
    }

    let q = (a11 + a22 + a33) / 3.0;
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (m - Matrix3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;

    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

fn eigenvector_for(m: &Matrix3<f64>, lambda: f64) -> Vector3<f64> {
    let shifted = m - Matrix3::identity() * lambda;
    let r0 = Vector3::new(shifted[(0, 0)], shifted[(0, 1)], shifted[(0, 2)]);
    let r1 = Vector3::new(shifted[(1, 0)], shifted[(1, 1)], shifted[(1, 2)]);
    let r2 = Vector3::new(shifted[(2, 0)], shifted[(2, 1)], shifted[(2, 2)]);

    let c01 = r0.cross(&r1);
    let c02 = r0.cross(&r2);
    let c12 = r1.cross(&r2);
    let mut best = c01;
    if c02.norm_squared() > best.norm_squared() {
        best = c02;
    }
    if c12.norm_squared() > best.norm_squared() {
        best = c12;
    }
    let n = best.norm();
    if n > 0.0 {
        best / n
    } else {
        // Rows of A - λI are pairwise parallel (repeated eigenvalue); any
        // vector orthogonal to the largest row works. Callers reject this
        // regime, so the fallback only needs to stay finite.
        let mut row = r0;
        if r1.norm_squared() > row.norm_squared() {
            row = r1;
        }
        if r2.norm_squared() > row.norm_squared() {
            row = r2;
        }
        if row.norm_squared() == 0.0 {
            return Vector3::x();
        }
        let pick = if row.x.abs() < 0.9 * row.norm() {
            Vector3::x()
        } else {
            Vector3::y()
        };
        row.cross(&pick).normalize()
    }
}

/// Full decomposition with eigenvalues descending.
pub fn sym_eigen3(m: &Matrix3<f64>) -> SymEigen3 {
    let values = sym_eigenvalues3(m);
    let v1 = eigenvector_for(m, values[0]);
    let v3 = eigenvector_for(m, values[2]);
    // The middle eigenvector is orthogonal to both extremes.
    let mut v2 = v3.cross(&v1);
    let n = v2.norm();
    if n > 0.0 {
        v2 /= n;
    } else {
        v2 = eigenvector_for(m, values[1]);
    }
    SymEigen3 {
        values,
        vectors: [v1, v2, v3],
    }
}
