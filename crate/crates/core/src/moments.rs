//! First- and second-moment dynamics of the two cavity modes.
//!
//! The first moments obey a closed 2×2 system on `(⟨a⟩, ⟨b⟩*)`. The second
//! moments `n_a = ⟨a†a⟩`, `n_b = ⟨b†b⟩` and `m = ⟨ab⟩` obey a closed affine
//! system which is stored as a real 4×4 matrix on `(n_a, n_b, Re m, Im m)`.
//! The real form is exact in both phase modes because the photon-number
//! equations are conjugate-symmetric in `m`.

use crate::coeffs::{threshold_margin, DerivedCoeffs};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::{cx, is_finite_cx, re, Cx, Real};
use num_traits::Zero;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirstMoments<T> {
    pub mean_a: Cx<T>,
    pub mean_b: Cx<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SecondMoments<T> {
    pub n_a: T,
    pub n_b: T,
    /// ⟨ab⟩; ⟨a†b†⟩ is its conjugate.
    pub m: Cx<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentState<T> {
    pub t: T,
    pub first: FirstMoments<T>,
    pub second: SecondMoments<T>,
}

impl<T: Real> FirstMoments<T> {
    pub fn zero() -> Self {
        Self { mean_a: Cx::zero(), mean_b: Cx::zero() }
    }

    fn to_vec(self) -> [Cx<T>; 2] {
        [self.mean_a, self.mean_b.conj()]
    }

    fn from_vec(v: [Cx<T>; 2]) -> Self {
        Self { mean_a: v[0], mean_b: v[1].conj() }
    }
}

impl<T: Real> SecondMoments<T> {
    pub fn zero() -> Self {
        Self { n_a: T::zero(), n_b: T::zero(), m: Cx::zero() }
    }

    pub fn to_vec(self) -> [T; 4] {
        [self.n_a, self.n_b, self.m.re, self.m.im]
    }

    pub fn from_vec(v: [T; 4]) -> Self {
        Self { n_a: v[0], n_b: v[1], m: cx(v[2], v[3]) }
    }

    fn is_finite(&self) -> bool {
        self.n_a.is_finite() && self.n_b.is_finite() && is_finite_cx(self.m)
    }
}

impl<T: Real> MomentState<T> {
    /// Two-mode vacuum at t = 0.
    pub fn vacuum() -> Self {
        Self { t: T::zero(), first: FirstMoments::zero(), second: SecondMoments::zero() }
    }
}

/// Drift of `(⟨a⟩, ⟨b⟩*)`.
pub fn drift_first<T: Real>(c: &DerivedCoeffs<T>) -> CMat<T, 2> {
    [[-c.a_plus, -c.b_plus], [-c.b_minus.conj(), -c.a_minus.conj()]]
}

/// Affine second-moment system `du/dt = M u + s` on `(n_a, n_b, Re m, Im m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondDrift<T> {
    pub matrix: [[T; 4]; 4],
    pub source: [T; 4],
}

impl<T: Real> SecondDrift<T> {
    pub fn apply(&self, u: &[T; 4]) -> [T; 4] {
        let mut out = self.source;
        for (i, o) in out.iter_mut().enumerate() {
            for (j, uj) in u.iter().enumerate() {
                *o += self.matrix[i][j] * *uj;
            }
        }
        out
    }
}

/// Right-hand side of the complex moment equations; `with_source` toggles
/// the vacuum-driven constant terms.
fn second_rhs<T: Real>(
    c: &DerivedCoeffs<T>,
    n_a: Cx<T>,
    n_b: Cx<T>,
    m: Cx<T>,
    m_conj: Cx<T>,
    with_source: bool,
) -> [Cx<T>; 3] {
    let h = c.half_gain();
    let k = re(c.drive);
    let kappa = re(c.kappa);
    let d_sum = c.d_plus + c.d_minus;
    let gain_a = re(T::lit(2.0) * c.c_plus) - d_sum;
    let src = if with_source { re(T::one()) } else { Cx::zero() };

    let dna = (-kappa + gain_a * h) * n_a + (c.e_plus + k) * h * m + (c.e_minus + k) * h * m_conj + gain_a * h * src;
    let dnb = (-kappa - (re(T::lit(2.0) * c.c_minus) + d_sum) * h) * n_b
        - (c.e_minus - k) * h * m
        - (c.e_plus - k) * h * m_conj;
    let dm = (-kappa - (re(c.c_minus - c.c_plus) + d_sum) * h) * m - (c.e_plus - k) * h * n_a
        + (c.e_minus + k) * h * n_b
        - (c.e_plus - k) * h * src;
    [dna, dnb, dm]
}

pub fn drift_second<T: Real>(c: &DerivedCoeffs<T>) -> SecondDrift<T> {
    let one = re(T::one());
    let i = cx(T::zero(), T::one());
    let z = Cx::zero();
    // Columns are the images of the real basis vectors of (n_a, n_b, Re m, Im m).
    let basis = [(one, z, z, z), (z, one, z, z), (z, z, one, one), (z, z, i, -i)];
    let mut matrix = [[T::zero(); 4]; 4];
    for (j, &(na, nb, m, mc)) in basis.iter().enumerate() {
        let [dna, dnb, dm] = second_rhs(c, na, nb, m, mc, false);
        matrix[0][j] = dna.re;
        matrix[1][j] = dnb.re;
        matrix[2][j] = dm.re;
        matrix[3][j] = dm.im;
    }
    let [sa, sb, sm] = second_rhs(c, z, z, z, z, true);
    SecondDrift { matrix, source: [sa.re, sb.re, sm.re, sm.im] }
}

fn check_time_args<T: Real>(t_final: T, dt: T) -> Result<()> {
    if !(t_final.is_finite() && t_final >= T::zero()) {
        return Err(Error::InvalidArgument(format!("t_final must be finite and >= 0, got {t_final}")));
    }
    if !(dt.is_finite() && dt > T::zero()) {
        return Err(Error::InvalidArgument(format!("dt must be finite and > 0, got {dt}")));
    }
    Ok(())
}

fn rk4_step<T: Real>(
    m1: &CMat<T, 2>,
    m2: &SecondDrift<T>,
    first: [Cx<T>; 2],
    second: [T; 4],
    h: T,
) -> ([Cx<T>; 2], [T; 4]) {
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let axpy1 = |x: &[Cx<T>; 2], k: &[Cx<T>; 2], s: T| [x[0] + k[0] * s, x[1] + k[1] * s];
    let axpy2 = |x: &[T; 4], k: &[T; 4], s: T| {
        let mut o = *x;
        o.iter_mut().zip(k).for_each(|(a, b)| *a += *b * s);
        o
    };
    let f1 = |x: &[Cx<T>; 2]| linalg::matvec(m1, x);

    let k1 = f1(&first);
    let k2 = f1(&axpy1(&first, &k1, h * half));
    let k3 = f1(&axpy1(&first, &k2, h * half));
    let k4 = f1(&axpy1(&first, &k3, h));
    let mut f = first;
    for i in 0..2 {
        f[i] += (k1[i] + k2[i] * T::lit(2.0) + k3[i] * T::lit(2.0) + k4[i]) * (h * sixth);
    }

    let l1 = m2.apply(&second);
    let l2 = m2.apply(&axpy2(&second, &l1, h * half));
    let l3 = m2.apply(&axpy2(&second, &l2, h * half));
    let l4 = m2.apply(&axpy2(&second, &l3, h));
    let mut s = second;
    for i in 0..4 {
        s[i] += (l1[i] + T::lit(2.0) * (l2[i] + l3[i]) + l4[i]) * h * sixth;
    }
    (f, s)
}

/// Fixed-step RK4 from `state0`. Returns the initial state followed by one
/// sample per step; the last step is shortened to land on `state0.t + t_final`.
pub fn integrate<T: Real>(
    c: &DerivedCoeffs<T>,
    state0: &MomentState<T>,
    t_final: T,
    dt: T,
) -> Result<Vec<MomentState<T>>> {
    check_time_args(t_final, dt)?;
    let m1 = drift_first(c);
    let m2 = drift_second(c);
    let n_full = (t_final / dt).floor().to_usize().unwrap_or(0);
    let rem = t_final - dt * T::from_usize(n_full).unwrap();
    // Treat a remainder at rounding level as an exact multiple.
    let tiny = dt * T::lit(1e-9);
    let mut steps: Vec<T> = vec![dt; n_full];
    if rem > tiny {
        steps.push(rem);
    } else if let Some(last) = steps.last_mut() {
        *last += rem;
    }

    let mut out = Vec::with_capacity(steps.len() + 1);
    out.push(*state0);
    let mut first = state0.first.to_vec();
    let mut second = state0.second.to_vec();
    let n_steps = steps.len();
    let mut taken = 0usize;
    for h in steps {
        (first, second) = rk4_step(&m1, &m2, first, second, h);
        taken += 1;
        let t = if taken == n_steps { state0.t + t_final } else { state0.t + dt * T::from_usize(taken).unwrap() };
        let st = MomentState { t, first: FirstMoments::from_vec(first), second: SecondMoments::from_vec(second) };
        if !(st.second.is_finite() && is_finite_cx(st.first.mean_a) && is_finite_cx(st.first.mean_b)) {
            return Err(Error::NonFinite { t: t.as_f64() });
        }
        out.push(st);
    }
    Ok(out)
}

/// Exact propagation by matrix exponentials: `e^{M₁t}` for the means and an
/// augmented 5×5 exponential for the affine second-moment system.
pub fn propagate_exact<T: Real>(c: &DerivedCoeffs<T>, state0: &MomentState<T>, t: T) -> MomentState<T> {
    let tc = re(t);
    let p1 = linalg::expm(&linalg::scale(&drift_first(c), tc));
    let first = FirstMoments::from_vec(linalg::matvec(&p1, &state0.first.to_vec()));

    let d = drift_second(c);
    let mut aug = [[T::zero(); 5]; 5];
    for i in 0..4 {
        aug[i][..4].copy_from_slice(&d.matrix[i]);
        aug[i][4] = d.source[i];
    }
    let p2 = linalg::expm(&linalg::scale(&linalg::from_real(&aug), tc));
    let u0 = state0.second.to_vec();
    let mut v = [Cx::zero(); 5];
    for i in 0..4 {
        v[i] = re(u0[i]);
    }
    v[4] = re(T::one());
    let u = linalg::matvec(&p2, &v);
    MomentState { t: state0.t + t, first, second: SecondMoments::from_vec([u[0].re, u[1].re, u[2].re, u[3].re]) }
}

/// Eigenvalues of the homogeneous second-moment matrix.
pub fn second_eigenvalues<T: Real>(c: &DerivedCoeffs<T>) -> [Cx<T>; 4] {
    linalg::eigenvalues(&linalg::from_real(&drift_second(c).matrix))
}

/// Solves `M u + s = 0` below threshold.
pub fn steady_state<T: Real>(c: &DerivedCoeffs<T>) -> Result<SecondMoments<T>> {
    let margin = threshold_margin(c);
    if !(margin > T::zero()) {
        return Err(Error::Unstable(format!("threshold margin {margin} is not positive")));
    }
    if let Some(ev) = second_eigenvalues(c).iter().find(|e| !(e.re < T::zero())) {
        return Err(Error::Unstable(format!("second-moment drift has eigenvalue with non-negative real part: {ev}")));
    }
    let d = drift_second(c);
    let a = linalg::from_real(&d.matrix);
    let rhs = d.source.map(|s| re(-s));
    let u = linalg::solve(&a, &rhs).ok_or_else(|| Error::Unstable("singular second-moment drift".into()))?;
    Ok(SecondMoments::from_vec([u[0].re, u[1].re, u[2].re, u[3].re]))
}
