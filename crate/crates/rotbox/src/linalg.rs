//! Small dense linear-algebra helpers shared by the solver and the
//! correlation-set modules. Everything here works on `nalgebra` dynamic
//! matrices; complex Hermitian matrices use `Complex64` entries.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_error(m: &CMat) -> f64 {
    let n = m.nrows();
    if n != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * re(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// ascending; the columns of the returned matrix are matching eigenvectors.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eig(m: &CMat) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

pub fn max_eig(m: &CMat) -> f64 {
    eigvalsh(m).last().copied().unwrap_or(0.0)
}

/// Real symmetric eigen-decomposition, eigenvalues ascending.
pub fn sym_eigh(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = RMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn sym_min_eig(m: &RMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Real embedding `[[Re H, -Im H], [Im H, Re H]]` of a complex matrix.
pub fn real_embed(m: &CMat) -> RMat {
    let n = m.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let z = m[(j, k)];
            out[(j, k)] = z.re;
            out[(j + n, k + n)] = z.re;
            out[(j, k + n)] = -z.im;
            out[(j + n, k)] = z.im;
        }
    }
    out
}

/// Inverse of [`real_embed`] that also projects an arbitrary real symmetric
/// `2n x 2n` matrix onto the embedded subspace.
pub fn real_unembed(x: &RMat) -> CMat {
    let n = x.nrows() / 2;
    CMat::from_fn(n, n, |j, k| {
        c(
            0.5 * (x[(j, k)] + x[(j + n, k + n)]),
            0.5 * (x[(j + n, k)] - x[(j, k + n)]),
        )
    })
}

/// `v v^dagger`.
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += a[(j, k)] * b[(k, j)];
        }
    }
    acc
}

/// Largest eigenvalue of a Hermitian matrix together with a unit eigenvector.
pub fn top_eigvec(m: &CMat) -> (f64, CVec) {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    (vals[n - 1], vecs.column(n - 1).into_owned())
}

/// Projector onto the span of eigenvectors with strictly positive eigenvalue.
pub fn positive_projector(m: &CMat) -> CMat {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let mut p = CMat::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        if v > 0.0 {
            let col = vecs.column(i).into_owned();
            p += outer(&col);
        }
    }
    p
}

/// Clip the spectrum of a Hermitian matrix into `[lo, hi]`; returns the
/// clipped matrix and the largest eigenvalue displacement.
pub fn clip_spectrum(m: &CMat, lo: f64, hi: f64) -> (CMat, f64) {
    let (vals, vecs) = eigh(m);
    let mut worst: f64 = 0.0;
    let clipped: Vec<C64> = vals
        .iter()
        .map(|&v| {
            let w = v.clamp(lo, hi);
            worst = worst.max((w - v).abs());
            re(w)
        })
        .collect();
    let d = CMat::from_diagonal(&CVec::from_vec(clipped));
    (&vecs * d * vecs.adjoint(), worst)
}

/// Roots of `sum_m coeffs[m] z^m` by eigenvalues of the companion matrix.
/// Trailing (highest-order) zero coefficients must be stripped by the caller.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    // The shifted QR iteration can stall on highly structured companion
    // matrices (for example exact multiple roots on the unit circle); a
    // rotation of the variable z = w e^{i phi} breaks the symmetry.
    for phi in [0.0, 0.377, 1.131, 2.417] {
        let w = C64::from_polar(1.0, phi);
        let rotated: Vec<C64> = coeffs.iter().enumerate().map(|(k, &a)| a * w.powi(k as i32)).collect();
        if let Some(raw) = companion_eigenvalues(&rotated) {
            let raw: Vec<C64> = raw.into_iter().map(|r| r * w).collect();
            // Newton polishing is only applied to isolated roots: inside a
            // cluster it would break the accurate centroid of the group.
            return raw
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    let isolated = raw
                        .iter()
                        .enumerate()
                        .all(|(j, &o)| i == j || (o - r).norm() > 1e-3 * r.norm().max(1.0));
                    if isolated {
                        polish_root(coeffs, r)
                    } else {
                        r
                    }
                })
                .collect();
        }
    }
    panic!("companion eigenvalue iteration failed for every variable rotation")
}

fn companion_eigenvalues(coeffs: &[C64]) -> Option<Vec<C64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let mut comp = CMat::zeros(deg, deg);
    for j in 1..deg {
        comp[(j, j - 1)] = re(1.0);
    }
    for j in 0..deg {
        comp[(j, deg - 1)] = -coeffs[j] / lead;
    }
    let schur = nalgebra::linalg::Schur::try_new(comp, f64::EPSILON, 1000 * deg)?;
    let (_, t) = schur.unpack();
    Some((0..deg).map(|j| t[(j, j)]).collect())
}

fn poly_eval_with_derivative(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn polish_root(coeffs: &[C64], mut z: C64) -> C64 {
    let (mut best_val, _) = poly_eval_with_derivative(coeffs, z);
    for _ in 0..3 {
        let (p, dp) = poly_eval_with_derivative(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = poly_eval_with_derivative(coeffs, cand);
        if pc.norm() < best_val.norm() {
            z = cand;
            best_val = pc;
        } else {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_roots_of_known_polynomial() {
        // (z - 1)(z - 2i)(z + 0.5) expanded
        let r = [re(1.0), c(0.0, 2.0), re(-0.5)];
        let mut coeffs = vec![re(1.0)];
        for root in r {
            let mut next = vec![re(0.0); coeffs.len() + 1];
            for (k, &a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * root;
            }
            coeffs = next;
        }
        let mut found = poly_roots(&coeffs);
        for want in r {
            let (idx, _) = found
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - want).norm().total_cmp(&(b.1 - want).norm()))
                .unwrap();
            assert!((found[idx] - want).norm() < 1e-12);
            found.remove(idx);
        }
    }

    #[test]
    fn embedding_round_trip_and_spectrum_doubling() {
        let h = CMat::from_row_slice(2, 2, &[re(2.0), c(1.0, -1.0), c(1.0, 1.0), re(-1.0)]);
        let e = real_embed(&h);
        assert!((real_unembed(&e) - &h).norm() < 1e-15);
        let hv = eigvalsh(&h);
        let (ev, _) = sym_eigh(&e);
        assert!((ev[0] - hv[0]).abs() < 1e-12 && (ev[1] - hv[0]).abs() < 1e-12);
        assert!((ev[2] - hv[1]).abs() < 1e-12 && (ev[3] - hv[1]).abs() < 1e-12);
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let h = CMat::from_row_slice(
            3,
            3,
            &[
                re(1.0),
                c(0.0, 1.0),
                re(0.0),
                c(0.0, -1.0),
                re(3.0),
                c(0.5, 0.5),
                re(0.0),
                c(0.5, -0.5),
                re(-2.0),
            ],
        );
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(3, vals.iter().map(|&v| re(v))));
        assert!((&vecs * d * vecs.adjoint() - h).norm() < 1e-12);
    }

    #[test]
    fn positive_projector_is_idempotent() {
        let h = CMat::from_diagonal(&CVec::from_vec(vec![re(2.0), re(-1.0), re(0.5)]));
        let p = positive_projector(&h);
        assert!((&p * &p - &p).norm() < 1e-12);
        assert!((p.trace().re - 2.0).abs() < 1e-12);
    }
}
