//! Boundary reflection matrices K for a singlet boundary.
//!
//! K acts blockwise on the four families of the bound-state module:
//! K|k⟩¹ = A_k|k⟩¹ + D_k|k⟩², K|k⟩² = B_k|k⟩² + E_k|k⟩¹ and
//! K|k⟩^{3,4} = C_k|k⟩^{3,4}. The closed form is checked against an
//! independent null-space solve of KΔ(J) = Δ^ref(J)K, against the reflection
//! equation, unitarity, the C_k (anti)symmetry and the rational limit.

use crate::coalgebra::{
    boundary_generators, coproduct_set, graded_tensor, node_one_charges, reflected_coproduct_set,
    twisted_boundary_charges,
};
use crate::error::{QabError, Result};
use crate::kinematics::{rational_x_plus, reflect_kinematics, solve_shortening, Kinematics, ModelParams};
use crate::matrix::{rel_residual, CMat};
use crate::nullspace::null_space;
use crate::report::VerificationReport;
use crate::representation::{build_basis, build_generators, Generator, GeneratorSet, GradedOperator};
use crate::scalar::{cabs64, ci, cint, lower, Cx, Real};
use crate::smatrix::{commutation_rows, s_at, solve_intertwiner, unknowns, Ansatz, NullDiagnostics};
use num_complex::Complex64;
use num_traits::{One, Zero};

/// Samples with |qᴹ − q^{2n}z| / |qᴹ| below this are treated as C_k poles.
pub const POLE_TOL: f64 = 1e-6;

/// Generators preserved by the boundary: node 2, node 3 and all Cartans.
pub const PRESERVED: [Generator; 8] = [
    Generator::E(2),
    Generator::F(2),
    Generator::E(3),
    Generator::F(3),
    Generator::K(1),
    Generator::K(2),
    Generator::K(3),
    Generator::K(4),
];

#[derive(Clone, Debug)]
pub struct ReflectionMatrix<T: Real> {
    pub m: usize,
    /// A_k, k = 0..=M.
    pub a: Vec<Cx<T>>,
    /// B_k, k = 0..=M; family 2 only has k = 1..M−1, the end entries are 0.
    pub b: Vec<Cx<T>>,
    /// C_k, k = 0..M.
    pub c: Vec<Cx<T>>,
    /// D_k, k = 0..=M (D₀ = D_M = 0).
    pub d: Vec<Cx<T>>,
    /// E_k, k = 0..=M; end entries are 0 as for B.
    pub e: Vec<Cx<T>>,
    pub op: GradedOperator<T>,
    pub gamma: Cx<T>,
    pub gamma_bar: Cx<T>,
    /// Incoming kinematics (absent for the rational-limit matrix).
    pub kin: Option<Kinematics<T>>,
}

impl<T: Real> ReflectionMatrix<T> {
    /// Assemble K from coefficient arrays (A, D of length M+1, C of length M;
    /// B, E of length M+1 with ignored ends).
    pub fn from_coefficients(
        m: usize,
        a: Vec<Cx<T>>,
        mut b: Vec<Cx<T>>,
        c: Vec<Cx<T>>,
        d: Vec<Cx<T>>,
        mut e: Vec<Cx<T>>,
        gamma: Cx<T>,
        gamma_bar: Cx<T>,
        kin: Option<Kinematics<T>>,
    ) -> Result<Self> {
        if a.len() != m + 1 || b.len() != m + 1 || d.len() != m + 1 || e.len() != m + 1 || c.len() != m {
            return Err(QabError::Shape(format!("coefficient arrays do not fit M = {m}")));
        }
        for v in [&mut b, &mut e] {
            v[0] = Cx::zero();
            v[m] = Cx::zero();
        }
        let op = assemble(m, &a, &b, &c, &d, &e)?;
        Ok(ReflectionMatrix { m, a, b, c, d, e, op, gamma, gamma_bar, kin })
    }

    pub fn to_f64(&self) -> ReflectionMatrix<f64> {
        let v = |x: &[Cx<T>]| x.iter().map(lower).collect::<Vec<_>>();
        ReflectionMatrix {
            m: self.m,
            a: v(&self.a),
            b: v(&self.b),
            c: v(&self.c),
            d: v(&self.d),
            e: v(&self.e),
            op: self.op.to_f64(),
            gamma: lower(&self.gamma),
            gamma_bar: lower(&self.gamma_bar),
            kin: self.kin.as_ref().map(Kinematics::to_f64),
        }
    }

    /// Read the five coefficient families off a K of the block form, and
    /// return the largest entry outside that pattern.
    pub fn from_operator(m: usize, op: GradedOperator<T>, gamma: Cx<T>, gamma_bar: Cx<T>) -> Result<(Self, f64)> {
        let space = build_basis(m)?;
        let at = |alpha, k| space.family_state(alpha, k).expect("state in range");
        let z = Cx::<T>::zero;
        let (mut a, mut b, mut c, mut d, mut e) = (vec![], vec![z(); m + 1], vec![], vec![z(); m + 1], vec![z(); m + 1]);
        let mut pattern = CMat::<T>::zeros(op.dim(), op.dim());
        let mut take = |i: usize, j: usize| {
            pattern[(i, j)] = Cx::one();
            op.mat[(i, j)].clone()
        };
        for k in 0..=m {
            let i1 = at(1, k);
            a.push(take(i1, i1));
            if (1..m).contains(&k) {
                let i2 = at(2, k);
                d[k] = take(i2, i1);
                b[k] = take(i2, i2);
                e[k] = take(i1, i2);
            }
        }
        for k in 0..m {
            let (i3, i4) = (at(3, k), at(4, k));
            c.push(take(i3, i3));
            // families 3 and 4 share C_k; the spread is part of the defect
            let _ = take(i4, i4);
        }
        let mut defect = 0.0f64;
        for (i, j, v) in op.mat.nonzeros() {
            if pattern[(i, j)].is_zero() {
                defect = defect.max(cabs64(v));
            }
        }
        for k in 0..m {
            defect = defect.max(cabs64(&(op.mat[(at(4, k), at(4, k))].clone() - c[k].clone())));
        }
        let km = ReflectionMatrix { m, a, b, c, d, e, op, gamma, gamma_bar, kin: None };
        Ok((km, defect))
    }
}

/// Block assembly on the family-major basis.
pub fn assemble<T: Real>(
    m: usize,
    a: &[Cx<T>],
    b: &[Cx<T>],
    c: &[Cx<T>],
    d: &[Cx<T>],
    e: &[Cx<T>],
) -> Result<GradedOperator<T>> {
    let space = build_basis(m)?;
    let at = |alpha, k| space.family_state(alpha, k).expect("state in range");
    let mut k_mat = CMat::<T>::zeros(space.dim(), space.dim());
    for k in 0..=m {
        let i1 = at(1, k);
        k_mat[(i1, i1)] = a[k].clone();
        if (1..m).contains(&k) {
            let i2 = at(2, k);
            k_mat[(i2, i1)] = d[k].clone();
            k_mat[(i2, i2)] = b[k].clone();
            k_mat[(i1, i2)] = e[k].clone();
        }
    }
    for (k, ck) in c.iter().enumerate() {
        for alpha in [3, 4] {
            let i = at(alpha, k);
            k_mat[(i, i)] = ck.clone();
        }
    }
    Ok(GradedOperator::endo(k_mat, 0, space.grading.clone()))
}

/// Smallest |qᴹ − q^{2n}z| / |qᴹ| over n = 1..=M.
pub fn pole_distance<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> f64 {
    let m = kin.m as i64;
    let qm = p.qpow(m);
    (1..=m)
        .map(|n| cabs64(&(qm.clone() - p.qpow(2 * n) * kin.z.clone())) / cabs64(&qm))
        .fold(f64::INFINITY, f64::min)
}

/// C_k = C₀ ∏_{n=1}^{k} (qᴹ − q^{2n}/z)/(qᴹ − q^{2n}z), C₀ = γ̄/γ (A₀ = 1).
pub fn c_coefficients<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<Vec<Cx<T>>> {
    let m = kin.m as i64;
    let qm = p.qpow(m);
    let mut c = vec![p.gamma_bar.clone() / p.gamma.clone()];
    for n in 1..m {
        let q2n = p.qpow(2 * n);
        let den = qm.clone() - q2n.clone() * kin.z.clone();
        if cabs64(&den) < POLE_TOL * cabs64(&qm) {
            return Err(QabError::Pole(format!("q^M = q^(2n) z at n = {n}")));
        }
        let num = qm.clone() - q2n / kin.z.clone();
        let prev = c.last().unwrap().clone();
        c.push(prev * num / den);
    }
    Ok(c)
}

/// A, B, D, E for given C_k from the label form:
/// with N = [k] b̲c̲ + [M−k] a̲d̲,
/// A = (C_{k−1}[k] b̲c + C_k[M−k] a d̲)/N, D = [k][M−k](C_k a c̲ − C_{k−1} a̲ c)/N,
/// B = (C_k[k] b c̲ + C_{k−1}[M−k] a̲ d)/N, E = (C_k b d̲ − C_{k−1} b̲ d)/N.
pub fn kmatrix_with_c<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>, c: Vec<Cx<T>>) -> Result<ReflectionMatrix<T>> {
    let m = kin.m;
    if c.len() != m {
        return Err(QabError::Shape(format!("{} C coefficients for M = {m}", c.len())));
    }
    let kr = reflect_kinematics(kin, p)?;
    let l = &kin.labels;
    let r = &kr.labels;
    let (mut a, mut b, mut d, mut e) = (vec![], vec![], vec![], vec![]);
    for k in 0..=m {
        let ck = if k < m { c[k].clone() } else { Cx::zero() };
        let ckm = if k > 0 { c[k - 1].clone() } else { Cx::zero() };
        let (qk, qmk) = (p.qnum(k as i64), p.qnum((m - k) as i64));
        let n = qk.clone() * r.b.clone() * r.c.clone() + qmk.clone() * r.a.clone() * r.d.clone();
        let scale = cabs64(&(qk.clone() * r.b.clone() * r.c.clone())) + cabs64(&(qmk.clone() * r.a.clone() * r.d.clone()));
        if cabs64(&n) < 1e-13 * scale {
            return Err(QabError::Pole(format!("boundary normalization N vanishes at k = {k}")));
        }
        a.push((ckm.clone() * qk.clone() * r.b.clone() * l.c.clone() + ck.clone() * qmk.clone() * l.a.clone() * r.d.clone()) / n.clone());
        d.push(
            qk.clone() * qmk.clone() * (ck.clone() * l.a.clone() * r.c.clone() - ckm.clone() * r.a.clone() * l.c.clone())
                / n.clone(),
        );
        b.push((ck.clone() * qk * l.b.clone() * r.c.clone() + ckm.clone() * qmk * r.a.clone() * l.d.clone()) / n.clone());
        e.push((ck * l.b.clone() * r.d.clone() - ckm * r.b.clone() * l.d.clone()) / n);
    }
    ReflectionMatrix::from_coefficients(m, a, b, c, d, e, p.gamma.clone(), p.gamma_bar.clone(), Some(kin.clone()))
}

/// The reflection matrix with C_k from the product formula, normalized to A₀ = 1.
pub fn closed_form_kmatrix<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<ReflectionMatrix<T>> {
    kmatrix_with_c(kin, p, c_coefficients(kin, p)?)
}

/// The "trivial" solution C_k = C₀ of the ratio constraint, used as a
/// negative control for the reflection equation.
pub fn trivial_c_kmatrix<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<ReflectionMatrix<T>> {
    let c0 = p.gamma_bar.clone() / p.gamma.clone();
    kmatrix_with_c(kin, p, vec![c0; kin.m])
}

/// The same coefficients written out in x± (independent evaluation path).
pub fn explicit_kmatrix<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<ReflectionMatrix<T>> {
    let m = kin.m;
    let c = c_coefficients(kin, p)?;
    let (q, g, gt, xi) = (p.q.clone(), p.g.clone(), p.g_tilde.clone(), p.xi.clone());
    let (xp, xm, v) = (kin.x_plus.clone(), kin.x_minus.clone(), kin.v.clone());
    let (gam, gb, al) = (p.gamma.clone(), p.gamma_bar.clone(), p.alpha.clone());
    let one = Cx::<T>::one();
    let i = ci::<T>();
    let qh = p.qhalf(m as i64);
    let qmn = p.qnum(m as i64);
    let qm = p.qpow(m as i64);
    let (g2, gt2) = (g.clone() * g.clone(), gt.clone() * gt.clone());
    let xixp = xi.clone() + xp.clone();
    let xpxi = one.clone() + xi.clone() * xp.clone();
    let xmxi = one.clone() + xi.clone() * xm.clone();
    let dx = xm.clone() - xp.clone();
    let (mut a, mut b, mut d, mut e) = (vec![], vec![], vec![], vec![]);
    for k in 0..=m {
        let ck = if k < m { c[k].clone() } else { Cx::zero() };
        let ckm = if k > 0 { c[k - 1].clone() } else { Cx::zero() };
        let (qk, qmk) = (p.qnum(k as i64), p.qnum((m - k) as i64));
        let n = (v.clone() * p.qhalf(m as i64 - 2 * k as i64) - p.qhalf(2 * k as i64 - m as i64) / v.clone())
            / (q.clone() - one.clone() / q.clone());
        if cabs64(&n) < 1e-300 {
            return Err(QabError::Pole(format!("boundary normalization N vanishes at k = {k}")));
        }
        let mix = gt2.clone() * ckm.clone() * xm.clone() + g2.clone() * ck.clone() * xmxi.clone() * xixp.clone();
        a.push(
            gam.clone() * gt.clone() * qh.clone() * dx.clone()
                * (gt2.clone() * qm.clone() * qk.clone() * ckm.clone() - g2.clone() * qmk.clone() * ck.clone() * xixp.clone() * xixp.clone())
                * v.clone()
                / (i.clone() * gb.clone() * g2.clone() * qmn.clone() * xixp.clone() * xixp.clone() * xpxi.clone() * n.clone()),
        );
        b.push(
            i.clone() * gb.clone() / qh.clone() * dx.clone()
                * (gt2.clone() * qmk.clone() * ckm.clone() * xm.clone() * xm.clone()
                    - g2.clone() * qm.clone() * qk.clone() * ck.clone() * xmxi.clone() * xmxi.clone())
                / (gam.clone() * gt.clone() * qmn.clone() * xm.clone() * xm.clone() * xmxi.clone() * v.clone() * n.clone()),
        );
        d.push(
            gam.clone() * gb.clone() * qh.clone() * qk * qmk * mix.clone()
                / (i.clone() * al.clone() * gt.clone() * qmn.clone() * xm.clone() * xixp.clone() * v.clone() * n.clone()),
        );
        e.push(
            i.clone() * al.clone() * gt.clone() * qh.clone() * dx.clone() * dx.clone() * mix * v.clone()
                / (gam.clone() * gb.clone() * g2.clone() * qmn.clone() * xm.clone() * xmxi.clone() * xixp.clone() * xpxi.clone() * n),
        );
    }
    ReflectionMatrix::from_coefficients(m, a, b, c, d, e, gam, gb, Some(kin.clone()))
}

/// M = 1: K = diag(A₀, A₁ | C₀, C₀) with A₀ = (γ/γ̄)C₀ and A₁ = −A₀/(zU²).
pub fn fundamental_kmatrix<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<ReflectionMatrix<T>> {
    if kin.m != 1 {
        return Err(QabError::InvalidBoundStateNumber(kin.m));
    }
    let c0 = p.gamma_bar.clone() / p.gamma.clone();
    let a0 = p.gamma.clone() / p.gamma_bar.clone() * c0.clone();
    let a1 = -a0.clone() / (kin.z.clone() * kin.u.clone() * kin.u.clone());
    let z = Cx::<T>::zero;
    ReflectionMatrix::from_coefficients(
        1,
        vec![a0, a1],
        vec![z(), z()],
        vec![c0],
        vec![z(), z()],
        vec![z(), z()],
        p.gamma.clone(),
        p.gamma_bar.clone(),
        Some(kin.clone()),
    )
}

/// A named boundary charge: its action through Δ on V⊗(singlet) and through
/// Δ^ref on κ(V)⊗(singlet).
pub struct ChargePair<T: Real> {
    pub name: String,
    pub delta: GradedOperator<T>,
    pub reflected: GradedOperator<T>,
}

fn boundary_sets<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<(GeneratorSet<T>, GeneratorSet<T>)> {
    let bnd = boundary_generators::<T>();
    let s1 = build_generators(kin, p, &build_basis(kin.m)?);
    Ok((coproduct_set(&s1, &bnd), reflected_coproduct_set(kin, &bnd, p)?))
}

/// The preserved generators and, optionally, the eight twisted charges.
pub fn boundary_charge_pairs<T: Real>(
    kin: &Kinematics<T>,
    p: &ModelParams<T>,
    twisted: bool,
) -> Result<Vec<ChargePair<T>>> {
    let (delta, refl) = boundary_sets(kin, p)?;
    let mut out: Vec<ChargePair<T>> = PRESERVED
        .iter()
        .map(|&g| ChargePair { name: g.to_string(), delta: delta.get(g).clone(), reflected: refl.get(g).clone() })
        .collect();
    if twisted {
        let (t, tr) = (twisted_boundary_charges(&delta, p), twisted_boundary_charges(&refl, p));
        for ((name, x), (_, xr)) in t.named().zip(tr.named()) {
            out.push(ChargePair { name: format!("~{name}"), delta: x.clone(), reflected: xr.clone() });
        }
    }
    Ok(out)
}

/// ‖KΔ(J) − Δ^ref(J)K‖ (relative) for one pair.
pub fn pair_residual<T: Real>(k: &GradedOperator<T>, pair: &ChargePair<T>) -> f64 {
    rel_residual(&(k * &pair.delta).mat, &(&pair.reflected * k).mat)
}

/// Invariance residuals for all preserved and twisted charges.
pub fn invariance_residual<T: Real>(
    k: &ReflectionMatrix<T>,
    kin: &Kinematics<T>,
    p: &ModelParams<T>,
) -> Result<Vec<(String, f64)>> {
    Ok(boundary_charge_pairs(kin, p, true)?.iter().map(|c| (c.name.clone(), pair_residual(&k.op, c))).collect())
}

/// Residual for the untwisted E₁, which the boundary breaks.
pub fn broken_charge_residual<T: Real>(k: &ReflectionMatrix<T>, kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<f64> {
    let (delta, refl) = boundary_sets(kin, p)?;
    let g = Generator::E(1);
    let pair = ChargePair { name: g.to_string(), delta: delta.get(g).clone(), reflected: refl.get(g).clone() };
    Ok(pair_residual(&k.op, &pair))
}

/// Residuals of the node-one construction of (Ẽ₁, F̃₁).
pub fn node_one_residuals<T: Real>(
    k: &ReflectionMatrix<T>,
    kin: &Kinematics<T>,
    p: &ModelParams<T>,
) -> Result<[f64; 2]> {
    let (delta, refl) = boundary_sets(kin, p)?;
    let (e, f) = node_one_charges(&delta, p);
    let (er, fr) = node_one_charges(&refl, p);
    let r = |x: GradedOperator<T>, xr: GradedOperator<T>| {
        pair_residual(&k.op, &ChargePair { name: String::new(), delta: x, reflected: xr })
    };
    Ok([r(e, er), r(f, fr)])
}

/// A K obtained from the null space of the boundary intertwiner system.
#[derive(Clone, Debug)]
pub struct BoundarySolution {
    pub k: ReflectionMatrix<f64>,
    /// Largest entry outside the five-coefficient block pattern.
    pub pattern_defect: f64,
    pub diagnostics: NullDiagnostics,
}

fn boundary_system(
    kin: &Kinematics<f64>,
    p: &ModelParams<f64>,
    twisted: bool,
) -> Result<(crate::nullspace::NullSpace, Vec<(usize, usize)>, usize)> {
    let space = build_basis(kin.m)?;
    let w: Vec<(i64, i64)> = (0..space.dim()).map(|i| space.weight(i)).collect();
    let (list, index) = unknowns(&w, Ansatz::WeightPreserving);
    let pairs: Vec<(CMat<f64>, CMat<f64>)> =
        boundary_charge_pairs(kin, p, twisted)?.into_iter().map(|c| (c.delta.mat, c.reflected.mat)).collect();
    let ns = null_space(list.len(), commutation_rows(&pairs, space.dim(), &index))?;
    Ok((ns, list, space.dim()))
}

/// Null-space dimension of the boundary system with or without the twisted charges.
pub fn boundary_null_dimension(kin: &Kinematics<f64>, p: &ModelParams<f64>, twisted: bool) -> Result<NullDiagnostics> {
    let (ns, list, _) = boundary_system(kin, p, twisted)?;
    Ok(NullDiagnostics::from(&ns, list.len()))
}

/// K as the unique solution of KΔ(J) = Δ^ref(J)K for the preserved and
/// twisted charges, normalized to A₀ = 1.
pub fn solve_boundary_intertwiner(kin: &Kinematics<f64>, p: &ModelParams<f64>) -> Result<BoundarySolution> {
    let (ns, list, n) = boundary_system(kin, p, true)?;
    if ns.dim() != 1 {
        return Err(QabError::NullDimension { dim: ns.dim(), expected: 1 });
    }
    let mut mat = CMat::<f64>::zeros(n, n);
    for (&(a, b), x) in list.iter().zip(&ns.basis[0]) {
        mat[(a, b)] = *x;
    }
    let a0 = mat[(0, 0)];
    if a0.norm() < 1e-12 * mat.max_abs() {
        return Err(QabError::Inconsistent("boundary solution has A0 = 0".into()));
    }
    let mat = mat.scale(&(1.0 / a0));
    let grading = build_basis(kin.m)?.grading;
    let (mut k, pattern_defect) =
        ReflectionMatrix::from_operator(kin.m, GradedOperator::endo(mat, 0, grading), p.gamma, p.gamma_bar)?;
    k.kin = Some(kin.clone());
    Ok(BoundarySolution { k, pattern_defect, diagnostics: NullDiagnostics::from(&ns, list.len()) })
}

/// Entrywise max |X − sY| / max|Y| with s aligning the |0⟩¹→|0⟩¹ entries.
pub fn aligned_difference(x: &CMat<f64>, y: &CMat<f64>) -> f64 {
    let s = y[(0, 0)] / x[(0, 0)];
    let diff = &x.scale(&s) - y;
    diff.max_abs() / y.max_abs()
}

/// ‖K(−p)K(p) − 1‖, with K(−p) built on κ(kin) with γ and γ̄ interchanged.
pub fn unitarity_residual<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<f64> {
    let (kp, km) = unitarity_pair(kin, p)?;
    let prod = &km.op * &kp.op;
    Ok(rel_residual(&prod.mat, &CMat::identity(prod.dim())))
}

/// (K(p), K(−p)).
pub fn unitarity_pair<T: Real>(
    kin: &Kinematics<T>,
    p: &ModelParams<T>,
) -> Result<(ReflectionMatrix<T>, ReflectionMatrix<T>)> {
    let kp = closed_form_kmatrix(kin, p)?;
    let kr = reflect_kinematics(kin, p)?;
    let km = closed_form_kmatrix(&kr, &p.swapped_normalization())?;
    Ok((kp, km))
}

/// Which C_k enter the K-matrices of a reflection-equation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CChoice {
    ClosedForm,
    /// C_k = C₀ for all k.
    Trivial,
}

/// K₂ Š_{2 1̲} K₁ Š_{12} versus Š_{2̲ 1̲} K₁ Š_{1 2̲} K₂ on V₁⊗V₂ → V₁̲⊗V₂̲,
/// with Š = P·S and each K acting on the right-hand leg.
pub fn boundary_ybe_residual(
    kin1: &Kinematics<f64>,
    kin2: &Kinematics<f64>,
    p: &ModelParams<f64>,
    choice: CChoice,
) -> Result<f64> {
    let build = |k: &Kinematics<f64>| match choice {
        CChoice::ClosedForm => closed_form_kmatrix(k, p),
        CChoice::Trivial => trivial_c_kmatrix(k, p),
    };
    let (k1, k2) = (build(kin1)?.op, build(kin2)?.op);
    let id = |m: usize| -> Result<GradedOperator<f64>> { Ok(GradedOperator::identity(build_basis(m)?.grading)) };
    let on_right = |m: usize, k: &GradedOperator<f64>| -> Result<GradedOperator<f64>> { graded_tensor(&id(m)?, k) };
    let s_12 = solve_intertwiner(kin1, kin2, p)?.braided();
    let s_2r1 = s_at(kin2, kin1, p, false, true)?.braided();
    let s_r2r1 = s_at(kin2, kin1, p, true, true)?.braided();
    let s_1r2 = s_at(kin1, kin2, p, false, true)?.braided();
    let (m1, m2) = (kin1.m, kin2.m);
    let lhs = &(&(&on_right(m1, &k2)? * &s_2r1) * &on_right(m2, &k1)?) * &s_12;
    let rhs = &(&(&s_r2r1 * &on_right(m2, &k1)?) * &s_1r2) * &on_right(m1, &k2)?;
    Ok(rel_residual(&lhs.mat, &rhs.mat))
}

/// Residuals of z^k C_k = ∓ z^{M−k−1} C_{M−k−1}: `expected` uses the sign
/// for the parity of M (+ for even M, i.e. the sum vanishes), `opposite`
/// the other sign as a control.
#[derive(Clone, Copy, Debug)]
pub struct CkSymmetry {
    pub expected: f64,
    pub opposite: f64,
}

pub fn ck_symmetry_residual<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<CkSymmetry> {
    let m = kin.m;
    if m < 2 {
        return Err(QabError::InvalidBoundStateNumber(m));
    }
    let c = c_coefficients(kin, p)?;
    let zc: Vec<Cx<T>> = c.iter().enumerate().map(|(k, ck)| crate::scalar::cpowi(&kin.z, k as i64) * ck.clone()).collect();
    let scale = zc.iter().map(cabs64).fold(0.0, f64::max);
    let res = |sign: i64| {
        (0..m)
            .map(|k| cabs64(&(zc[k].clone() + cint::<T>(sign) * zc[m - k - 1].clone())))
            .fold(0.0, f64::max)
            / scale
    };
    let even = if m % 2 == 0 { 1 } else { -1 };
    Ok(CkSymmetry { expected: res(even), opposite: res(-even) })
}

/// u = x⁺ + 1/x⁺ − iM/(2g) (= x⁻ + 1/x⁻ + iM/(2g) on the rational shell).
pub fn rational_u(x_plus: Complex64, m: usize, g: Complex64) -> Complex64 {
    x_plus + 1.0 / x_plus - Complex64::i() * m as f64 / (2.0 * g)
}

/// (z − 1)/(−2ig(q − 1)), which tends to [`rational_u`] as q → 1.
pub fn numeric_u(kin: &Kinematics<f64>, p: &ModelParams<f64>) -> Complex64 {
    (kin.z - 1.0) / (-2.0 * Complex64::i() * p.g * (p.q - 1.0))
}

/// (V q^{M/2−k} − V⁻¹ q^{k−M/2})/(q − q⁻¹), the normalization of the explicit form.
pub fn q_normalization(kin: &Kinematics<f64>, p: &ModelParams<f64>, k: usize) -> Complex64 {
    let (m, k) = (kin.m as i64, k as i64);
    (kin.v * p.qhalf(m - 2 * k) - p.qhalf(2 * k - m) / kin.v) / (p.q - 1.0 / p.q)
}

/// Rational limit of [`q_normalization`]: (k + (M−k)x⁻x⁺)/(x⁺x⁻ − 1).
pub fn rational_normalization(x_plus: Complex64, x_minus: Complex64, m: usize, k: usize) -> Complex64 {
    (k as f64 + (m - k) as f64 * x_minus * x_plus) / (x_plus * x_minus - 1.0)
}

/// Rational-limit K with N = k + (M−k)x⁻x⁺ and
/// C_k = C_{k−1}(2igu − M + 2k)/(−2igu − M + 2k), C₀ = γ̄/γ.
pub fn rational_limit_kmatrix(
    x_plus: Complex64,
    x_minus: Complex64,
    g: Complex64,
    gamma: Complex64,
    gamma_bar: Complex64,
    alpha: Complex64,
    m: usize,
) -> Result<ReflectionMatrix<f64>> {
    if m == 0 {
        return Err(QabError::InvalidBoundStateNumber(m));
    }
    let i = Complex64::i();
    let u = rational_u(x_plus, m, g);
    let mf = m as f64;
    let mut c = vec![gamma_bar / gamma];
    for k in 1..m {
        let den = -2.0 * i * g * u - mf + 2.0 * k as f64;
        if den.norm() < 1e-12 {
            return Err(QabError::Pole(format!("rational C recursion pole at k = {k}")));
        }
        let prev = c[k - 1];
        c.push(prev * (2.0 * i * g * u - mf + 2.0 * k as f64) / den);
    }
    let (xp, xm) = (x_plus, x_minus);
    let (mut a, mut b, mut d, mut e) = (vec![], vec![], vec![], vec![]);
    for k in 0..=m {
        let ck = if k < m { c[k] } else { Complex64::new(0.0, 0.0) };
        let ckm = if k > 0 { c[k - 1] } else { Complex64::new(0.0, 0.0) };
        let (kf, mk) = (k as f64, (m - k) as f64);
        let n = kf + mk * xm * xp;
        if n.norm() < 1e-12 {
            return Err(QabError::Pole(format!("rational N vanishes at k = {k}")));
        }
        let mix = ck * xp + ckm * xm;
        a.push(gamma / gamma_bar * xm / (xp * n) * (mk * ck * xp * xp - kf * ckm));
        b.push(gamma_bar / gamma * xp / (xm * n) * (mk * ckm * xm * xm - kf * ck));
        d.push(gamma * gamma_bar / alpha * kf * mk * mix / (n * (xp - xm)));
        e.push(alpha / (gamma * gamma_bar) * (xm - xp) / n * mix);
    }
    ReflectionMatrix::from_coefficients(m, a, b, c, d, e, gamma, gamma_bar, None)
}

/// Convergence of the q-deformed K to the rational one along q = 1 + ε,
/// both sides with γ = γ̄ = √(i(x⁻ − x⁺)).
#[derive(Clone, Debug)]
pub struct RationalProbe {
    pub m: usize,
    pub eps: Vec<f64>,
    /// Per ε: errors of (A, B, C, D, E), each max_k |Δ| / max(1, max_k |rational|).
    pub errors: Vec<[f64; 5]>,
    /// Per ε: max_k |N_q − N_rational| for the footnoted normalization.
    pub normalization_errors: Vec<f64>,
    /// Per ε: |numeric u − closed-form u|.
    pub u_errors: Vec<f64>,
    /// Rational A₁/A₀ + x⁻/x⁺ (M = 1 only).
    pub fundamental_ratio_defect: Option<f64>,
}

impl RationalProbe {
    pub fn max_error(&self, i: usize) -> f64 {
        self.errors[i].iter().copied().fold(0.0, f64::max)
    }

    /// log(err_i/err_{i+1}) / log(ε_i/ε_{i+1}) for the worst family.
    pub fn rates(&self) -> Vec<f64> {
        (1..self.eps.len())
            .map(|i| (self.max_error(i - 1) / self.max_error(i)).ln() / (self.eps[i - 1] / self.eps[i]).ln())
            .collect()
    }
}

fn family_error(q: &[Complex64], r: &[Complex64]) -> f64 {
    let scale = r.iter().map(|z| z.norm()).fold(1.0, f64::max);
    q.iter().zip(r).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

pub fn rational_limit_probe(
    x_minus: Complex64,
    m: usize,
    base: &ModelParams<f64>,
    eps: &[f64],
) -> Result<RationalProbe> {
    let g = base.g;
    let xp_r = rational_x_plus(x_minus, m, g);
    let gam_r = (Complex64::i() * (x_minus - xp_r)).sqrt();
    let rat = rational_limit_kmatrix(xp_r, x_minus, g, gam_r, gam_r, base.alpha, m)?;
    let mut probe = RationalProbe {
        m,
        eps: eps.to_vec(),
        errors: vec![],
        normalization_errors: vec![],
        u_errors: vec![],
        fundamental_ratio_defect: (m == 1).then(|| (rat.a[1] / rat.a[0] + x_minus / xp_r).norm()),
    };
    for &e in eps {
        let p0 = ModelParams::new(Complex64::new(1.0 + e, 0.0), g)?.with_phases(base.alpha, base.alpha_tilde);
        let roots = solve_shortening(&x_minus, m, &p0)?.roots;
        let xp = if (roots[0] - xp_r).norm() <= (roots[1] - xp_r).norm() { roots[0] } else { roots[1] };
        let gam = (Complex64::i() * (x_minus - xp)).sqrt();
        let pe = p0.with_normalization(gam, gam);
        let kin = Kinematics::new(m, xp, x_minus, &pe)?;
        let kq = closed_form_kmatrix(&kin, &pe)?;
        let inner = 1..m;
        probe.errors.push([
            family_error(&kq.a, &rat.a),
            family_error(&kq.b[inner.clone()], &rat.b[inner.clone()]),
            family_error(&kq.c, &rat.c),
            family_error(&kq.d, &rat.d),
            family_error(&kq.e[inner.clone()], &rat.e[inner]),
        ]);
        probe.normalization_errors.push(
            (0..=m)
                .map(|k| (q_normalization(&kin, &pe, k) - rational_normalization(xp_r, x_minus, m, k)).norm())
                .fold(0.0, f64::max),
        );
        probe.u_errors.push((numeric_u(&kin, &pe) - rational_u(xp_r, m, g)).norm());
    }
    Ok(probe)
}

/// Every K-matrix identity at one point: closed form vs explicit form,
/// boundary values, invariance (with the E₁ control and the node-one
/// cross-check), unitarity and the C_k symmetry.
pub fn verify_kmatrix<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>, tol: f64) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    if pole_distance(kin, p) < POLE_TOL {
        r.skip("K-matrix", "sample within the C_k pole tolerance");
        return Ok(r);
    }
    let m = kin.m;
    let k = closed_form_kmatrix(kin, p)?;
    let x = explicit_kmatrix(kin, p)?;
    r.check("label form = explicit form", rel_residual(&k.op.mat, &x.op.mat), tol);
    r.check("A0 = 1", cabs64(&(k.a[0].clone() - Cx::one())), tol);
    r.check("D0 = DM = 0", cabs64(&k.d[0]).max(cabs64(&k.d[m])), tol);
    let am = -p.gamma.clone() * k.c[m - 1].clone()
        / (kin.z.clone() * kin.u.clone() * kin.u.clone() * p.gamma_bar.clone());
    r.check("A_M = -gamma C_{M-1}/(z U^2 gamma_bar)", crate::scalar::rel_diff(&k.a[m], &am), tol);
    if m == 1 {
        let f = fundamental_kmatrix(kin, p)?;
        r.check("fundamental diagonal form", rel_residual(&k.op.mat, &f.op.mat), tol);
    }
    let mut worst = 0.0f64;
    for (name, res) in invariance_residual(&k, kin, p)? {
        r.check(format!("invariance {name}"), res, tol);
        worst = worst.max(res);
    }
    r.expect_violation("broken charge E1", broken_charge_residual(&k, kin, p)?, 1e-2);
    let [e1, f1] = node_one_residuals(&k, kin, p)?;
    r.check("node-one ~E1", e1, tol);
    r.check("node-one ~F1", f1, tol);
    r.check("unitarity", unitarity_residual(kin, p)?, tol);
    if m >= 2 {
        let s = ck_symmetry_residual(kin, p)?;
        r.check("C_k (anti)symmetry", s.expected, tol);
    }
    r.tag_ms(&[m]);
    Ok(r)
}
