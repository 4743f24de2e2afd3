//! Couplings, x± kinematics, central elements, representation labels and
//! the boundary reflection map κ.

use crate::error::{QabError, Result};
use crate::scalar::{cabs64, ci, cint, cpow_half, cpowi, csqrt, cx, lift, lower, qnum, rel_diff, Cx, Real};
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Relative tolerance for internal consistency checks that should only trip
/// on genuinely invalid input (not on roundoff).
const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ModelParams<T: Real> {
    pub q: Cx<T>,
    pub g: Cx<T>,
    pub alpha: Cx<T>,
    pub alpha_tilde: Cx<T>,
    pub gamma: Cx<T>,
    pub gamma_bar: Cx<T>,
    pub xi: Cx<T>,
    pub g_tilde: Cx<T>,
}

/// Double-precision snapshot of the free parameters, used for reports and
/// for moving a parameter set between precisions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub q: Complex64,
    pub g: Complex64,
    pub alpha: Complex64,
    pub alpha_tilde: Complex64,
    pub gamma: Complex64,
    pub gamma_bar: Complex64,
}

impl Default for RawParams {
    fn default() -> Self {
        RawParams {
            q: Complex64::new(1.1, 0.0),
            g: Complex64::new(0.4, 0.0),
            alpha: Complex64::new(0.0, 1.0),
            alpha_tilde: Complex64::new(1.0, 0.0),
            gamma: Complex64::new(1.0, 0.0),
            gamma_bar: Complex64::new(1.0, 0.0),
        }
    }
}

/// ξ = −i g̃ (q − q⁻¹) with g̃ = √(g²/(1 − g²(q − q⁻¹)²)) on the principal branch.
pub fn derive_couplings<T: Real>(q: &Cx<T>, g: &Cx<T>) -> Result<(Cx<T>, Cx<T>)> {
    let d = q.clone() - Cx::<T>::one() / q.clone();
    let gd2 = g.clone() * g.clone() * d.clone() * d.clone();
    let den = Cx::<T>::one() - gd2.clone();
    if cabs64(&den) < 1e-12 * 1f64.max(cabs64(&gd2)) {
        return Err(QabError::SingularCoupling(cabs64(&den)));
    }
    let gt = csqrt(&(g.clone() * g.clone() / den));
    let xi = -ci::<T>() * gt.clone() * d;
    Ok((xi, gt))
}

impl<T: Real> ModelParams<T> {
    /// Couplings with the default phases α = i, α̃ = 1 and γ = γ̄ = 1.
    pub fn new(q: Cx<T>, g: Cx<T>) -> Result<Self> {
        let (xi, g_tilde) = derive_couplings(&q, &g)?;
        Ok(ModelParams {
            q,
            g,
            alpha: ci(),
            alpha_tilde: Cx::<T>::one(),
            gamma: Cx::<T>::one(),
            gamma_bar: Cx::<T>::one(),
            xi,
            g_tilde,
        })
    }

    pub fn from_raw(raw: &RawParams) -> Result<Self> {
        Ok(Self::new(lift(raw.q), lift(raw.g))?
            .with_phases(lift(raw.alpha), lift(raw.alpha_tilde))
            .with_normalization(lift(raw.gamma), lift(raw.gamma_bar)))
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            q: lower(&self.q),
            g: lower(&self.g),
            alpha: lower(&self.alpha),
            alpha_tilde: lower(&self.alpha_tilde),
            gamma: lower(&self.gamma),
            gamma_bar: lower(&self.gamma_bar),
        }
    }

    pub fn with_phases(mut self, alpha: Cx<T>, alpha_tilde: Cx<T>) -> Self {
        self.alpha = alpha;
        self.alpha_tilde = alpha_tilde;
        self
    }

    pub fn with_normalization(mut self, gamma: Cx<T>, gamma_bar: Cx<T>) -> Self {
        self.gamma = gamma;
        self.gamma_bar = gamma_bar;
        self
    }

    /// The same couplings with γ and γ̄ interchanged (used for K(−p)).
    pub fn swapped_normalization(&self) -> Self {
        let mut p = self.clone();
        std::mem::swap(&mut p.gamma, &mut p.gamma_bar);
        p
    }

    /// Rejects q that is numerically a root of unity for all orders up to
    /// `4 * m_max`.
    pub fn check_generic_q(&self, m_max: usize) -> Result<()> {
        for n in 1..=(4 * m_max.max(1)) as u32 {
            let r = cabs64(&(cpowi(&self.q, n as i64) - Cx::<T>::one()));
            if r < 1e-10 {
                return Err(QabError::RootOfUnity { n, residual: r });
            }
        }
        Ok(())
    }

    pub fn qnum(&self, n: i64) -> Cx<T> {
        qnum(&self.q, n)
    }

    pub fn qpow(&self, n: i64) -> Cx<T> {
        cpowi(&self.q, n)
    }

    /// `q^(n/2)`.
    pub fn qhalf(&self, n: i64) -> Cx<T> {
        cpow_half(&self.q, n)
    }

    /// The two normalizations fixing the twisted charges, (d_y, d_x).
    pub fn twist_constants(&self) -> (Cx<T>, Cx<T>) {
        let aa = self.alpha.clone() * self.alpha_tilde.clone();
        let dy = self.g_tilde.clone() / (self.g.clone() * aa.clone());
        let dx = -aa * self.g_tilde.clone() / self.g.clone();
        (dy, dx)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Labels<T: Real> {
    pub a: Cx<T>,
    pub b: Cx<T>,
    pub c: Cx<T>,
    pub d: Cx<T>,
}

impl<T: Real> Labels<T> {
    pub fn to_f64(&self) -> Labels<f64> {
        Labels { a: lower(&self.a), b: lower(&self.b), c: lower(&self.c), d: lower(&self.d) }
    }
}

#[derive(Clone, Debug)]
pub struct Kinematics<T: Real> {
    pub m: usize,
    pub x_plus: Cx<T>,
    pub x_minus: Cx<T>,
    pub u: Cx<T>,
    pub v: Cx<T>,
    pub z: Cx<T>,
    /// Basis normalization used for the labels (γ, or γ̄ for a reflected state).
    pub gamma: Cx<T>,
    pub labels: Labels<T>,
    pub affine: Labels<T>,
}

#[derive(Clone, Debug)]
pub struct ShorteningRoots<T: Real> {
    /// Both roots, ordered by decreasing |x⁺|.
    pub roots: [Cx<T>; 2],
    /// Set when the two roots (numerically) coincide.
    pub degenerate: bool,
}

fn shortening_rhs<T: Real>(x_minus: &Cx<T>, m: usize, p: &ModelParams<T>) -> Cx<T> {
    let m = m as i64;
    let qm = p.qpow(m);
    let qmi = p.qpow(-m);
    qm.clone() * (x_minus.clone() + Cx::<T>::one() / x_minus.clone())
        + (qm - qmi) * p.xi.clone()
        + p.qnum(m) * ci() / p.g_tilde.clone()
}

/// Roots x⁺ of the shortening condition for given x⁻. The condition is a
/// quadratic with root product 1: x⁺ + 1/x⁺ = s.
pub fn solve_shortening<T: Real>(x_minus: &Cx<T>, m: usize, p: &ModelParams<T>) -> Result<ShorteningRoots<T>> {
    if m == 0 {
        return Err(QabError::InvalidBoundStateNumber(m));
    }
    if x_minus.is_zero() {
        return Err(QabError::ZeroSpectralParameter);
    }
    let s = p.qpow(m as i64) * shortening_rhs(x_minus, m, p);
    let two = cint::<T>(2);
    let disc = csqrt(&(s.clone() * s.clone() - cint(4)));
    let r1 = (s.clone() + disc.clone()) / two.clone();
    let r2 = (s.clone() - disc.clone()) / two;
    let degenerate = cabs64(&disc) < 1e-6 * 1f64.max(cabs64(&s));
    let roots = if cabs64(&r1) >= cabs64(&r2) { [r1, r2] } else { [r2, r1] };
    Ok(ShorteningRoots { roots, degenerate })
}

/// Relative residual of q⁻ᴹ(x⁺ + 1/x⁺) − qᴹ(x⁻ + 1/x⁻) − (qᴹ − q⁻ᴹ)(ξ + 1/ξ),
/// with the last term written so that it stays finite at q = 1.
pub fn shortening_residual<T: Real>(x_plus: &Cx<T>, x_minus: &Cx<T>, m: usize, p: &ModelParams<T>) -> f64 {
    let lhs = p.qpow(-(m as i64)) * (x_plus.clone() + Cx::<T>::one() / x_plus.clone());
    let rhs = shortening_rhs(x_minus, m, p);
    rel_diff(&lhs, &rhs)
}

/// Rational (q = 1) shortening: x⁺ + 1/x⁺ = x⁻ + 1/x⁻ + iM/g, root of largest modulus.
pub fn rational_x_plus(x_minus: Complex64, m: usize, g: Complex64) -> Complex64 {
    let i = Complex64::i();
    let s = x_minus + 1.0 / x_minus + i * m as f64 / g;
    let disc = (s * s - 4.0).sqrt();
    let (r1, r2) = ((s + disc) / 2.0, (s - disc) / 2.0);
    if r1.norm() >= r2.norm() {
        r1
    } else {
        r2
    }
}

/// ϑ(x) = (1 + ξ² + ξ(x + 1/x))/(1 − ξ²).
pub fn theta<T: Real>(x: &Cx<T>, xi: &Cx<T>) -> Cx<T> {
    let xi2 = xi.clone() * xi.clone();
    (Cx::<T>::one() + xi2.clone() + xi.clone() * (x.clone() + Cx::<T>::one() / x.clone())) / (Cx::<T>::one() - xi2)
}

/// (U², V², z) with all internal consistency relations checked.
pub fn central_elements<T: Real>(
    m: usize,
    x_plus: &Cx<T>,
    x_minus: &Cx<T>,
    p: &ModelParams<T>,
) -> Result<(Cx<T>, Cx<T>, Cx<T>)> {
    let mi = m as i64;
    let (xp, xm, xi) = (x_plus.clone(), x_minus.clone(), p.xi.clone());
    let one = Cx::<T>::one();
    let den_u = xm.clone() + xi.clone();
    let den_v = xi.clone() * xm.clone() + one.clone();
    for (name, d) in [("x^- + xi", &den_u), ("xi x^- + 1", &den_v)] {
        if cabs64(d) < 1e-14 {
            return Err(QabError::Pole(format!("{name} vanishes")));
        }
    }
    let u2 = p.qpow(-mi) * (xp.clone() + xi.clone()) / den_u.clone();
    let u2b = p.qpow(mi) * xp.clone() / xm.clone() * den_v.clone() / (xi.clone() * xp.clone() + one.clone());
    let v2 = p.qpow(-mi) * (xi.clone() * xp.clone() + one.clone()) / den_v;
    let v2b = p.qpow(mi) * xp.clone() / xm.clone() * den_u / (xp.clone() + xi.clone());
    if rel_diff(&u2, &u2b) > CONSISTENCY_TOL {
        return Err(QabError::Inconsistent(format!("U^2 expressions differ by {:e}", rel_diff(&u2, &u2b))));
    }
    if rel_diff(&v2, &v2b) > CONSISTENCY_TOL {
        return Err(QabError::Inconsistent(format!("V^2 expressions differ by {:e}", rel_diff(&v2, &v2b))));
    }
    let z = (one.clone() - u2.clone() * v2.clone()) / (v2.clone() - u2.clone());
    let zp = p.qpow(-mi) * theta(&xp, &xi);
    let zm = p.qpow(mi) * theta(&xm, &xi);
    if rel_diff(&z, &zp) > CONSISTENCY_TOL || rel_diff(&zp, &zm) > CONSISTENCY_TOL {
        return Err(QabError::Inconsistent(format!(
            "spectral parameter expressions differ by {:e}",
            rel_diff(&z, &zp).max(rel_diff(&zp, &zm))
        )));
    }
    Ok((u2, v2, z))
}

/// Labels (a, b, c, d) in the x± parametrization for the given V, γ and α.
pub fn bulk_labels<T: Real>(
    m: usize,
    x_plus: &Cx<T>,
    x_minus: &Cx<T>,
    v: &Cx<T>,
    gamma: &Cx<T>,
    alpha: &Cx<T>,
    p: &ModelParams<T>,
) -> Labels<T> {
    let (xp, xm, xi) = (x_plus.clone(), x_minus.clone(), p.xi.clone());
    let (g, gt) = (p.g.clone(), p.g_tilde.clone());
    let pre = csqrt(&(g.clone() / p.qnum(m as i64)));
    let qh = p.qhalf(m as i64);
    let i = ci::<T>();
    let a = pre.clone() * gamma.clone();
    let b = pre.clone() * alpha.clone() / gamma.clone() * (xm.clone() - xp.clone()) / xm.clone();
    let c = pre.clone() * gamma.clone() / (alpha.clone() * v.clone()) * i.clone() * gt.clone() * qh.clone()
        / (g.clone() * (xp.clone() + xi.clone()));
    let d = pre * gt * qh * v.clone() / (i * g * gamma.clone()) * (xp.clone() - xm) / (xi * xp + Cx::<T>::one());
    Labels { a, b, c, d }
}

/// Affine labels: the bulk formula under V → V⁻¹, x± → 1/x±, γ → iα̃γ/x⁺, α → αα̃².
pub fn affine_labels<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Labels<T> {
    affine_from(kin.m, &kin.x_plus, &kin.x_minus, &kin.v, &kin.gamma, p)
}

fn affine_from<T: Real>(m: usize, xp: &Cx<T>, xm: &Cx<T>, v: &Cx<T>, gamma: &Cx<T>, p: &ModelParams<T>) -> Labels<T> {
    let one = Cx::<T>::one();
    let gam = ci::<T>() * p.alpha_tilde.clone() * gamma.clone() / xp.clone();
    let alpha = p.alpha.clone() * p.alpha_tilde.clone() * p.alpha_tilde.clone();
    bulk_labels(m, &(one.clone() / xp.clone()), &(one.clone() / xm.clone()), &(one / v.clone()), &gam, &alpha, p)
}

impl<T: Real> Kinematics<T> {
    /// Kinematics at (x⁺, x⁻) with U, V the principal roots and γ from `p`.
    pub fn new(m: usize, x_plus: Cx<T>, x_minus: Cx<T>, p: &ModelParams<T>) -> Result<Self> {
        Self::build(m, x_plus, x_minus, p, p.gamma.clone(), None)
    }

    /// Kinematics at x⁻ using the shortening root of largest modulus.
    pub fn from_x_minus(m: usize, x_minus: Cx<T>, p: &ModelParams<T>) -> Result<Self> {
        let roots = solve_shortening(&x_minus, m, p)?;
        Self::new(m, roots.roots[0].clone(), x_minus, p)
    }

    /// `uv` pins (U, V) instead of taking principal roots; they must square
    /// to the x± expressions.
    pub fn build(
        m: usize,
        x_plus: Cx<T>,
        x_minus: Cx<T>,
        p: &ModelParams<T>,
        gamma: Cx<T>,
        uv: Option<(Cx<T>, Cx<T>)>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(QabError::InvalidBoundStateNumber(m));
        }
        if x_minus.is_zero() || x_plus.is_zero() {
            return Err(QabError::ZeroSpectralParameter);
        }
        let (u2, v2, z) = central_elements(m, &x_plus, &x_minus, p)?;
        let (u, v) = match uv {
            Some((u, v)) => {
                if rel_diff(&(u.clone() * u.clone()), &u2) > CONSISTENCY_TOL
                    || rel_diff(&(v.clone() * v.clone()), &v2) > CONSISTENCY_TOL
                {
                    return Err(QabError::Inconsistent("pinned U, V do not match x±".into()));
                }
                (u, v)
            }
            None => (csqrt(&u2), csqrt(&v2)),
        };
        let xi_xp = p.xi.clone() * x_plus.clone() + Cx::<T>::one();
        if cabs64(&xi_xp) < 1e-14 || cabs64(&(x_plus.clone() + p.xi.clone())) < 1e-14 {
            return Err(QabError::Pole("x^+ sits on a label pole".into()));
        }
        let labels = bulk_labels(m, &x_plus, &x_minus, &v, &gamma, &p.alpha, p);
        let affine = affine_from(m, &x_plus, &x_minus, &v, &gamma, p);
        Ok(Kinematics { m, x_plus, x_minus, u, v, z, gamma, labels, affine })
    }

    pub fn shortening_residual(&self, p: &ModelParams<T>) -> f64 {
        shortening_residual(&self.x_plus, &self.x_minus, self.m, p)
    }

    /// Residuals of the four label constraints (ad, bc, ab, cd) for the bulk
    /// labels, followed by the same four for the affine labels.
    pub fn label_constraint_residuals(&self, p: &ModelParams<T>) -> [f64; 8] {
        let one = Cx::<T>::one();
        let bulk = label_constraints(self.m, &self.labels, &self.u, &self.v, &p.alpha, p);
        let aff = label_constraints(
            self.m,
            &self.affine,
            &(one.clone() / self.u.clone()),
            &(one / self.v.clone()),
            &(p.alpha.clone() * p.alpha_tilde.clone() * p.alpha_tilde.clone()),
            p,
        );
        [bulk[0], bulk[1], bulk[2], bulk[3], aff[0], aff[1], aff[2], aff[3]]
    }

    pub fn to_f64(&self) -> Kinematics<f64> {
        Kinematics {
            m: self.m,
            x_plus: lower(&self.x_plus),
            x_minus: lower(&self.x_minus),
            u: lower(&self.u),
            v: lower(&self.v),
            z: lower(&self.z),
            gamma: lower(&self.gamma),
            labels: self.labels.to_f64(),
            affine: self.affine.to_f64(),
        }
    }
}

/// ad, bc, ab, cd against their central-element expressions; the q-number
/// denominators are multiplied through so the check is regular at q = 1.
pub fn label_constraints<T: Real>(
    m: usize,
    l: &Labels<T>,
    u: &Cx<T>,
    v: &Cx<T>,
    alpha: &Cx<T>,
    p: &ModelParams<T>,
) -> [f64; 4] {
    let mi = m as i64;
    let one = Cx::<T>::one();
    let qm_diff = p.qpow(mi) - p.qpow(-mi);
    let (qh, qhi) = (p.qhalf(mi), p.qhalf(-mi));
    let vi = one.clone() / v.clone();
    let (u2, v2) = (u.clone() * u.clone(), v.clone() * v.clone());
    let qn = p.qnum(mi);
    let ad = rel_diff(&(l.a.clone() * l.d.clone() * qm_diff.clone()), &(qh.clone() * v.clone() - qhi.clone() * vi.clone()));
    let bc = rel_diff(&(l.b.clone() * l.c.clone() * qm_diff), &(qhi * v.clone() - qh * vi));
    let ab = rel_diff(
        &(l.a.clone() * l.b.clone() * qn.clone()),
        &(p.g.clone() * alpha.clone() * (one.clone() - u2.clone() * v2.clone())),
    );
    let cd = rel_diff(
        &(l.c.clone() * l.d.clone() * qn),
        &(p.g.clone() / alpha.clone() * (one.clone() / v2 - one / u2)),
    );
    [ad, bc, ab, cd]
}

/// κ: x± ↦ −(x∓ + ξ)/(ξx∓ + 1), U ↦ U⁻¹, V ↦ V; labels rebuilt with γ̄.
pub fn reflect_kinematics<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<Kinematics<T>> {
    let xi = p.xi.clone();
    let one = Cx::<T>::one();
    let map = |x: &Cx<T>| -> Result<Cx<T>> {
        let den = xi.clone() * x.clone() + one.clone();
        if cabs64(&den) < 1e-12 {
            return Err(QabError::Pole("xi x + 1 vanishes under the reflection map".into()));
        }
        Ok(-(x.clone() + xi.clone()) / den)
    };
    let xp = map(&kin.x_minus)?;
    let xm = map(&kin.x_plus)?;
    Kinematics::build(kin.m, xp, xm, p, p.gamma_bar.clone(), Some((one / kin.u.clone(), kin.v.clone())))
}

/// Reflected kinematics built with an explicit normalization (γ for the
/// reflected leg), used when the roles of γ and γ̄ are swapped.
pub fn reflect_with_gamma<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>, gamma: Cx<T>) -> Result<Kinematics<T>> {
    let mut q = p.clone();
    q.gamma_bar = gamma;
    reflect_kinematics(kin, &q)
}

/// Convenience for tests and sampling: generic complex literal.
pub fn c<T: Real>(re: f64, im: f64) -> Cx<T> {
    cx(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::{with_precision, BigFloat};

    fn params() -> ModelParams<f64> {
        ModelParams::<f64>::new(c(1.1, 0.05), c(0.4, 0.1))
            .unwrap()
            .with_phases(c(0.6, 0.5), c(0.7, 0.3))
            .with_normalization(c(1.3, -0.2), c(0.9, 0.4))
    }

    #[test]
    fn couplings_trivial_at_q_one() {
        let (xi, gt) = derive_couplings::<f64>(&c(1.0, 0.0), &c(0.7, 0.0)).unwrap();
        assert_eq!(xi, Cx::zero());
        assert!((gt - c(0.7, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn couplings_match_high_precision() {
        let (xi, gt) = derive_couplings::<f64>(&c(1.2, 0.0), &c(0.5, 0.0)).unwrap();
        let (xi_h, gt_h) =
            with_precision(200, || derive_couplings::<BigFloat>(&c(1.2, 0.0), &c(0.5, 0.0)).unwrap());
        let (xi_h, gt_h) = (lower(&xi_h), lower(&gt_h));
        assert!((xi - xi_h).norm() < 1e-15 && (gt - gt_h).norm() < 1e-15);
        // independent closed form: d = q - 1/q, g~ = g / sqrt(1 - g^2 d^2)
        let d = 1.2 - 1.0 / 1.2;
        let gt_ref = 0.5 / (1.0 - 0.25 * d * d).sqrt();
        assert!((gt.re - gt_ref).abs() < 1e-15 && gt.im.abs() < 1e-15);
        assert!((xi - Complex64::new(0.0, -gt_ref * d)).norm() < 1e-15);
    }

    #[test]
    fn singular_coupling_is_rejected() {
        // g (q - 1/q) = 1 with q = 2: q - 1/q = 1.5
        let err = derive_couplings::<f64>(&c(2.0, 0.0), &c(1.0 / 1.5, 0.0));
        assert!(matches!(err, Err(QabError::SingularCoupling(_))));
    }

    #[test]
    fn shortening_roots_satisfy_condition() {
        let p = ModelParams::<f64>::new(c(1.1, 0.0), c(0.4, 0.0)).unwrap();
        let xm = c(2.0, 1.0);
        let r = solve_shortening(&xm, 1, &p).unwrap();
        assert!(!r.degenerate);
        for x in &r.roots {
            assert!(shortening_residual(x, &xm, 1, &p) < 1e-12);
        }
        // root product is one
        assert!((r.roots[0] * r.roots[1] - 1.0).norm() < 1e-13);
        // high-precision oracle for the quadratic
        let hp = with_precision(256, || {
            let p = ModelParams::<BigFloat>::new(c(1.1, 0.0), c(0.4, 0.0)).unwrap();
            let r = solve_shortening(&c(2.0, 1.0), 1, &p).unwrap();
            [lower(&r.roots[0]), lower(&r.roots[1])]
        });
        assert!((hp[0] - r.roots[0]).norm() < 1e-14 && (hp[1] - r.roots[1]).norm() < 1e-14);
    }

    #[test]
    fn rational_degeneration_of_shortening() {
        // At q = 1 the condition keeps the iM/g shift (it does not collapse to x+ = x-).
        let g = Complex64::new(0.4, 0.1);
        let p = ModelParams::<f64>::new(c(1.0, 0.0), lift(g)).unwrap();
        let xm = c(0.8, 0.9);
        let r = solve_shortening(&xm, 1, &p).unwrap();
        let rat = rational_x_plus(xm, 1, g);
        assert!((r.roots[0] - rat).norm() < 1e-13);
        let lhs = rat + 1.0 / rat - xm - 1.0 / xm;
        assert!((lhs - Complex64::i() / g).norm() < 1e-13);
    }

    #[test]
    fn central_elements_consistent_and_reflect_inverts_z() {
        let p = params();
        for m in 1..=4 {
            let k = Kinematics::from_x_minus(m, c(0.8, 0.9), &p).unwrap();
            let zp = p.qpow(-(m as i64)) * theta(&k.x_plus, &p.xi);
            let zm = p.qpow(m as i64) * theta(&k.x_minus, &p.xi);
            assert!((zp - zm).norm() < 1e-12);
            let r = reflect_kinematics(&k, &p).unwrap();
            assert!((r.z * k.z - 1.0).norm() < 1e-12);
            assert!(r.shortening_residual(&p) < 1e-12);
            let rr = reflect_kinematics(&r, &p).unwrap();
            assert!((rr.x_plus - k.x_plus).norm() < 1e-10 && (rr.x_minus - k.x_minus).norm() < 1e-10);
            assert!((rr.u - k.u).norm() < 1e-12 && (rr.v - k.v).norm() < 1e-12);
        }
    }

    #[test]
    fn central_elements_high_precision_oracle() {
        let m = 2;
        let p = ModelParams::<f64>::new(c(1.05, 0.0), c(0.6, 0.0)).unwrap();
        let k = Kinematics::from_x_minus(m, c(1.3, -0.4), &p).unwrap();
        let h = with_precision(200, || {
            let p = ModelParams::<BigFloat>::new(c(1.05, 0.0), c(0.6, 0.0)).unwrap();
            Kinematics::from_x_minus(m, c(1.3, -0.4), &p).unwrap().to_f64()
        });
        for (a, b) in [(k.u, h.u), (k.v, h.v), (k.z, h.z)] {
            assert!((a - b).norm() < 1e-13 * b.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn labels_satisfy_constraints() {
        let p = params();
        for m in 1..=4 {
            let k = Kinematics::from_x_minus(m, c(-0.5, 1.3), &p).unwrap();
            for r in k.label_constraint_residuals(&p) {
                assert!(r < 1e-12, "M={m}: {r:e}");
            }
        }
    }

    #[test]
    fn labels_match_high_precision_evaluation() {
        let raw = params().raw();
        let k = Kinematics::from_x_minus(2, c(-0.5, 1.3), &params()).unwrap();
        let h = with_precision(200, || {
            let p = ModelParams::<BigFloat>::from_raw(&raw).unwrap();
            Kinematics::from_x_minus(2, c(-0.5, 1.3), &p).unwrap().to_f64()
        });
        let pairs = [
            (k.labels.a, h.labels.a),
            (k.labels.b, h.labels.b),
            (k.labels.c, h.labels.c),
            (k.labels.d, h.labels.d),
            (k.affine.a, h.affine.a),
            (k.affine.b, h.affine.b),
            (k.affine.c, h.affine.c),
            (k.affine.d, h.affine.d),
        ];
        for (a, b) in pairs {
            assert!((a - b).norm() < 1e-13 * b.norm().max(1.0));
        }
    }

    #[test]
    fn ad_minus_bc_is_gamma_independent() {
        let p1 = params();
        let p2 = params().with_normalization(c(-0.4, 2.0), c(1.0, 0.0));
        let k1 = Kinematics::from_x_minus(3, c(0.8, 0.9), &p1).unwrap();
        let k2 = Kinematics::from_x_minus(3, c(0.8, 0.9), &p2).unwrap();
        let f = |k: &Kinematics<f64>| k.labels.a * k.labels.d - k.labels.b * k.labels.c;
        assert!((f(&k1) - f(&k2)).norm() < 1e-13);
    }

    #[test]
    fn label_matrix_identity_under_reflection() {
        let p = params();
        for m in 1..=3 {
            let k = Kinematics::from_x_minus(m, c(0.8, 0.9), &p).unwrap();
            let r = reflect_kinematics(&k, &p).unwrap();
            let (l, lr) = (&k.labels, &r.labels);
            // [a_ b_; c_ d_] diag(γ/γ̄, γ̄/γ) = T [a b; c d] T⁻¹, T = diag(U⁻², −z)
            let (d1, d2) = (p.gamma / p.gamma_bar, p.gamma_bar / p.gamma);
            let (t1, t2) = (1.0 / (k.u * k.u), -k.z);
            let lhs = [lr.a * d1, lr.b * d2, lr.c * d1, lr.d * d2];
            let rhs = [l.a, l.b * t1 / t2, l.c * t2 / t1, l.d];
            for (x, y) in lhs.iter().zip(&rhs) {
                assert!((x - y).norm() < 1e-10 * y.norm().max(1.0));
            }
        }
    }

    #[test]
    fn reflection_map_rational_limit() {
        let p = ModelParams::<f64>::new(c(1.0, 0.0), c(0.4, 0.1)).unwrap();
        let k = Kinematics::from_x_minus(1, c(0.8, 0.9), &p).unwrap();
        let r = reflect_kinematics(&k, &p).unwrap();
        assert!((r.x_plus + k.x_minus).norm() < 1e-15 && (r.x_minus + k.x_plus).norm() < 1e-15);
    }

    #[test]
    fn affine_labels_rational_limit() {
        // q = 1: (ã, b̃, c̃, d̃) = (αα̃ c, αα̃ d, −a/(αα̃), −b/(αα̃))
        let p = ModelParams::<f64>::new(c(1.0, 0.0), c(0.4, 0.1)).unwrap().with_phases(c(0.6, 0.5), c(0.7, 0.3));
        let k = Kinematics::from_x_minus(2, c(0.8, 0.9), &p).unwrap();
        let aa = p.alpha * p.alpha_tilde;
        let l = &k.labels;
        let want = [aa * l.c, aa * l.d, -l.a / aa, -l.b / aa];
        let got = [k.affine.a, k.affine.b, k.affine.c, k.affine.d];
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).norm() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn root_of_unity_rejected() {
        let p = ModelParams::<f64>::new(Complex64::from_polar(1.0, std::f64::consts::PI / 3.0), c(0.3, 0.0)).unwrap();
        assert!(matches!(p.check_generic_q(2), Err(QabError::RootOfUnity { n: 6, .. })));
        assert!(params().check_generic_q(4).is_ok());
    }
}
