//! Small dense linear algebra on fixed-size arrays.
//!
//! Everything here works for any [`Real`] scalar so the moment systems and
//! the noise factorisation stay scalar-generic.

use crate::scalar::{re, Cx, Real};
use num_traits::{One, Zero};

pub type CMat<T, const N: usize> = [[Cx<T>; N]; N];
pub type CVec<T, const N: usize> = [Cx<T>; N];

pub fn identity<T: Real, const N: usize>() -> CMat<T, N> {
    let mut m = [[Cx::zero(); N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Cx::one();
    }
    m
}

pub fn from_real<T: Real, const N: usize>(a: &[[T; N]; N]) -> CMat<T, N> {
    let mut m = [[Cx::zero(); N]; N];
    for i in 0..N {
        for j in 0..N {
            m[i][j] = re(a[i][j]);
        }
    }
    m
}

pub fn matmul<T: Real, const N: usize>(a: &CMat<T, N>, b: &CMat<T, N>) -> CMat<T, N> {
    let mut out = [[Cx::zero(); N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec<T: Real, const N: usize>(a: &CMat<T, N>, v: &CVec<T, N>) -> CVec<T, N> {
    let mut out = [Cx::zero(); N];
    for i in 0..N {
        for j in 0..N {
            out[i] += a[i][j] * v[j];
        }
    }
    out
}

pub fn scale<T: Real, const N: usize>(a: &CMat<T, N>, s: Cx<T>) -> CMat<T, N> {
    let mut out = *a;
    out.iter_mut().flatten().for_each(|x| *x *= s);
    out
}

pub fn add<T: Real, const N: usize>(a: &CMat<T, N>, b: &CMat<T, N>) -> CMat<T, N> {
    let mut out = *a;
    for i in 0..N {
        for j in 0..N {
            out[i][j] += b[i][j];
        }
    }
    out
}

/// Conjugate transpose.
pub fn adjoint<T: Real, const N: usize>(a: &CMat<T, N>) -> CMat<T, N> {
    let mut out = [[Cx::zero(); N]; N];
    for i in 0..N {
        for j in 0..N {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

/// Maximum absolute row sum.
pub fn norm_inf<T: Real, const N: usize>(a: &CMat<T, N>) -> T {
    a.iter().map(|row| row.iter().map(|x| x.norm()).fold(T::zero(), |s, x| s + x)).fold(T::zero(), T::max)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes.
pub fn solve<T: Real, const N: usize>(a: &CMat<T, N>, b: &CVec<T, N>) -> Option<CVec<T, N>> {
    let mut m = *a;
    let mut x = *b;
    let scale = norm_inf(a).max(T::min_positive_value());
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| m[i][col].norm().partial_cmp(&m[j][col].norm()).unwrap()).unwrap();
        if m[piv][col].norm() <= T::epsilon() * scale {
            return None;
        }
        m.swap(col, piv);
        x.swap(col, piv);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            if f.is_zero() {
                continue;
            }
            for k in col..N {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
            let v = x[col];
            x[row] -= f * v;
        }
    }
    for col in (0..N).rev() {
        let mut acc = x[col];
        for k in col + 1..N {
            acc -= m[col][k] * x[k];
        }
        x[col] = acc / m[col][col];
    }
    Some(x)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm<T: Real, const N: usize>(a: &CMat<T, N>) -> CMat<T, N> {
    let norm = norm_inf(a);
    let mut squarings = 0u32;
    if norm > T::lit(0.5) {
        squarings = (norm / T::lit(0.5)).log2().ceil().to_u32().unwrap_or(0);
    }
    let scaled = scale(a, re(T::lit(0.5).powi(squarings as i32)));
    let mut result = identity::<T, N>();
    let mut term = identity::<T, N>();
    for k in 1..=30u32 {
        term = scale(&matmul(&term, &scaled), re(T::one() / T::from_u32(k).unwrap()));
        result = add(&result, &term);
        if norm_inf(&term) <= T::epsilon() * norm_inf(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Eigenvalues of a small complex matrix.
///
/// The 2×2 case is closed form. Larger matrices go through the
/// characteristic polynomial (Faddeev–LeVerrier) and Durand–Kerner
/// root finding with a Newton polish.
pub fn eigenvalues<T: Real, const N: usize>(a: &CMat<T, N>) -> CVec<T, N> {
    let mut out = [Cx::zero(); N];
    match N {
        0 => out,
        1 => {
            out[0] = a[0][0];
            out
        }
        2 => {
            let half = T::lit(0.5);
            let mean = (a[0][0] + a[1][1]) * half;
            let diff = (a[0][0] - a[1][1]) * half;
            let disc = (diff * diff + a[0][1] * a[1][0]).sqrt();
            out[0] = mean + disc;
            out[1] = mean - disc;
            out
        }
        _ => {
            let coeffs = char_poly(a);
            polynomial_roots(&coeffs, &mut out);
            out
        }
    }
}

/// Coefficients `c[0..=N]` of `det(z I - a) = sum c[k] z^k`, with `c[N] = 1`.
fn char_poly<T: Real, const N: usize>(a: &CMat<T, N>) -> Vec<Cx<T>> {
    let mut c = vec![Cx::zero(); N + 1];
    c[N] = Cx::one();
    let mut m = [[Cx::zero(); N]; N];
    for k in 1..=N {
        let mut next = matmul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += c[N + 1 - k];
        }
        m = next;
        let am = matmul(a, &m);
        let tr = (0..N).fold(Cx::zero(), |s, i| s + am[i][i]);
        c[N - k] = -tr / T::from_usize(k).unwrap();
    }
    c
}

fn poly_eval<T: Real>(c: &[Cx<T>], z: Cx<T>) -> (Cx<T>, Cx<T>) {
    let mut p = Cx::zero();
    let mut dp = Cx::zero();
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ck;
    }
    (p, dp)
}

fn polynomial_roots<T: Real, const N: usize>(c: &[Cx<T>], roots: &mut CVec<T, N>) {
    let radius = T::one() + c[..N].iter().map(|x| x.norm()).fold(T::zero(), T::max);
    let seed = Cx::new(T::lit(0.4), T::lit(0.9));
    let mut z = seed;
    for r in roots.iter_mut() {
        *r = z * radius;
        z *= seed;
    }
    for _ in 0..2000 {
        let mut delta = T::zero();
        for i in 0..N {
            let (p, _) = poly_eval(c, roots[i]);
            let mut denom = Cx::one();
            for j in 0..N {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.is_zero() {
                denom = Cx::new(T::epsilon(), T::zero());
            }
            let step = p / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta <= T::epsilon() * radius {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = poly_eval(c, *r);
            if dp.norm() <= T::epsilon() {
                break;
            }
            let step = p / dp;
            if step.norm() > T::lit(1e-3) * radius {
                break;
            }
            *r -= step;
        }
    }
}

/// Cyclic Jacobi eigen-decomposition of a real symmetric matrix.
/// Returns eigenvalues and the orthogonal matrix whose columns are eigenvectors.
pub fn jacobi_symmetric<T: Real, const N: usize>(a: &[[T; N]; N]) -> ([T; N], [[T; N]; N]) {
    let mut m = *a;
    let mut v = [[T::zero(); N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for _sweep in 0..100 {
        let off: T = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let total: T = m.iter().flatten().map(|&x| x * x).sum();
        if off <= T::epsilon() * T::epsilon() * total {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                if m[p][q] == T::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::lit(2.0) * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut w = [T::zero(); N];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = m[i][i];
    }
    (w, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Cx<f64> {
        re(x)
    }

    #[test]
    fn solve_recovers_known_vector() {
        let a = [[c(4.0), c(1.0), c(0.0)], [c(1.0), c(3.0), Cx::new(0.0, 1.0)], [c(0.0), Cx::new(0.0, -1.0), c(2.0)]];
        let x = [c(1.0), Cx::new(-2.0, 0.5), c(3.0)];
        let b = matvec(&a, &x);
        let y = solve(&a, &b).unwrap();
        for i in 0..3 {
            assert!((x[i] - y[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_has_no_solution() {
        let a = [[c(1.0), c(2.0)], [c(2.0), c(4.0)]];
        assert!(solve(&a, &[c(1.0), c(0.0)]).is_none());
    }

    #[test]
    fn expm_of_diagonal_and_rotation() {
        let d = [[c(-0.5), c(0.0)], [c(0.0), c(3.0)]];
        let e = expm(&d);
        assert_relative_eq!(e[0][0].re, (-0.5f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(e[1][1].re, 3.0f64.exp(), max_relative = 1e-13);
        let w = 7.3;
        let r = [[c(0.0), c(-w)], [c(w), c(0.0)]];
        let e = expm(&r);
        assert_relative_eq!(e[0][0].re, w.cos(), epsilon = 1e-12);
        assert_relative_eq!(e[1][0].re, w.sin(), epsilon = 1e-12);
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let a = [
            [c(-1.0), c(2.0), c(0.5), c(1.0)],
            [c(0.0), c(-0.25), c(3.0), c(0.0)],
            [c(0.0), c(0.0), c(2.0), c(1.0)],
            [c(0.0), c(0.0), c(0.0), c(-4.0)],
        ];
        let mut ev: Vec<f64> = eigenvalues(&a).iter().map(|z| z.re).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let want = [-4.0, -1.0, -0.25, 2.0];
        for (x, y) in ev.iter().zip(want) {
            assert!((x - y).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn eigenvalues_with_repeated_root() {
        let a = [[c(-0.2), c(0.0), c(0.0)], [c(0.0), c(-0.2), c(0.0)], [c(0.0), c(0.0), c(-0.2)]];
        for z in eigenvalues(&a) {
            assert!((z - c(-0.2)).norm() < 1e-4);
        }
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = [[0.0, 0.12, 0.08, 0.0], [0.12, 0.0, 0.0, 0.0], [0.08, 0.0, 0.0, 0.12], [0.0, 0.0, 0.12, 0.0]];
        let (w, v) = jacobi_symmetric(&a);
        for i in 0..4 {
            for j in 0..4 {
                let r: f64 = (0..4).map(|k| v[i][k] * w[k] * v[j][k]).sum();
                assert!((r - a[i][j]).abs() < 1e-14);
            }
        }
    }
}
