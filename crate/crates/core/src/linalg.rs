//! Dense complex linear algebra helpers on top of `faer`.
//!
//! Everything here is sequential: callers parallelize across Floquet
//! exponents instead, which keeps results bit-reproducible.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef, Par};
use num_complex::Complex64 as C64;
use std::sync::Once;

pub type CMat = Mat<C64>;

static SEQUENTIAL: Once = Once::new();

/// Pins faer to sequential kernels. Called by every entry point that
/// factorizes matrices.
pub fn ensure_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn one_norm(a: MatRef<'_, C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn mat_vec(a: &CMat, v: &[C64]) -> Vec<C64> {
    debug_assert_eq!(a.ncols(), v.len());
    let mut out = vec![C64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let vj = v[j];
        if vj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * vj;
        }
    }
    out
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn lin_comb(terms: &[(f64, &CMat)], n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| {
        terms
            .iter()
            .fold(C64::new(0.0, 0.0), |acc, (c, m)| acc + m[(i, j)] * *c)
    })
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(t A)` by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: MatRef<'_, C64>, t: f64) -> CMat {
    ensure_sequential();
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let norm = one_norm(a) * t.abs();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = t / 2f64.powi(squarings);
    let a1: CMat = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let ident = identity(n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = lin_comb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u_tail = lin_comb(
        &[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &ident)],
        n,
    );
    let u_sum = &(&a6 * &u_inner) + &u_tail;
    let u = &a1 * &u_sum;

    let v_inner = lin_comb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v_tail = lin_comb(
        &[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &ident)],
        n,
    );
    let v = &(&a6 * &v_inner) + &v_tail;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Eigenpairs sorted by real part (descending) then imaginary part
/// (ascending); eigenvectors are scaled to unit 2-norm.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<C64>,
    pub vectors: CMat,
}

pub fn eigen_sorted(a: &CMat) -> Option<EigenPairs> {
    ensure_sequential();
    let n = a.nrows();
    let evd = a.eigen().ok()?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<C64> = (0..n).map(|i| s[i]).collect();
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    order.sort_by(|&i, &j| {
        vals[j]
            .re
            .total_cmp(&vals[i].re)
            .then(vals[i].im.total_cmp(&vals[j].im))
    });
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = u.col(src);
        let norm = (0..n).map(|i| col[i].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        for i in 0..n {
            vectors[(i, dst)] = col[i] / norm;
        }
    }
    Some(EigenPairs {
        values: order.iter().map(|&i| vals[i]).collect(),
        vectors,
    })
}

pub fn inverse(a: &CMat) -> CMat {
    ensure_sequential();
    a.partial_piv_lu().inverse()
}

/// Solves `a x = b` for a single right-hand side.
pub fn solve(a: &CMat, b: &[C64]) -> Vec<C64> {
    ensure_sequential();
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = a.partial_piv_lu().solve(&rhs);
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    ensure_sequential();
    a.singular_values()
        .map(|s| s.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// Groups indices of numerically coincident eigenvalues. `values` must be
/// the sorted output of [`eigen_sorted`]; the result preserves that order.
pub fn clusters(values: &[C64], rel_tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = 1.0 + values[i].norm().max(values[j].norm());
            if (values[i] - values[j]).norm() <= rel_tol * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Default relative tolerance used to decide that two eigenvalues coincide.
pub const CLUSTER_TOL: f64 = 1e-9;

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_of_diagonal_is_elementwise() {
        let d = [c(-3.0, 1.0), c(0.5, 0.0), c(-100.0, 20.0)];
        let a = Mat::from_fn(3, 3, |i, j| if i == j { d[i] } else { c(0.0, 0.0) });
        let e = expm(a.as_ref(), 0.7);
        for i in 0..3 {
            let want = (d[i] * 0.7).exp();
            assert!((e[(i, i)] - want).norm() <= 1e-13 * (1.0 + want.norm()));
        }
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_of_nilpotent_is_polynomial() {
        // [[0,1],[0,0]] -> [[1,t],[0,1]]
        let a = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let e = expm(a.as_ref(), 3.0);
        assert!((e[(0, 1)] - c(3.0, 0.0)).norm() < 1e-13);
        assert!((e[(0, 0)] - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn expm_rotation_large_norm() {
        // exp(t [[0,-w],[w,0]]) is a rotation by w t.
        let w = 40.0;
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(-w, 0.0),
            (1, 0) => c(w, 0.0),
            _ => c(0.0, 0.0),
        });
        let t = 1.3;
        let e = expm(a.as_ref(), t);
        assert!((e[(0, 0)].re - (w * t).cos()).abs() < 1e-11);
        assert!((e[(1, 0)].re - (w * t).sin()).abs() < 1e-11);
    }

    #[test]
    fn eigen_sorted_orders_and_normalizes() {
        let a = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                [c(1.0, 2.0), c(5.0, 0.0), c(1.0, -2.0)][i]
            } else if j == i + 1 {
                c(0.3, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let e = eigen_sorted(&a).unwrap();
        assert!((e.values[0] - c(5.0, 0.0)).norm() < 1e-12);
        assert!((e.values[1] - c(1.0, -2.0)).norm() < 1e-12);
        assert!((e.values[2] - c(1.0, 2.0)).norm() < 1e-12);
        for k in 0..3 {
            let col: Vec<C64> = (0..3).map(|i| e.vectors[(i, k)]).collect();
            assert!((vec_norm(&col) - 1.0).abs() < 1e-13);
            let av = mat_vec(&a, &col);
            for i in 0..3 {
                assert!((av[i] - e.values[k] * col[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn clusters_group_coincident_values() {
        let v = [c(0.0, 0.0), c(-1.0, 0.0), c(-1.0, 1e-14), c(-4.0, 0.0)];
        let g = clusters(&v, CLUSTER_TOL);
        assert_eq!(g, vec![vec![0], vec![1, 2], vec![3]]);
    }
}
