//! Graded tensor products, the standard / opposite / reflected coproducts,
//! graded adjoint actions and the twisted boundary charges.
//!
//! Koszul signs are realized on the first factor: `(A⊗B)(v⊗w) =
//! (−1)^{|B||v|} (Av)⊗(Bw)`. With this placement the un-signed coproduct
//! formulas are algebra maps.

use crate::error::{QabError, Result};
use crate::kinematics::{reflect_kinematics, Kinematics, ModelParams};
use crate::matrix::{rel_residual, CMat};
use crate::report::VerificationReport;
use crate::representation::{build_basis, build_generators, verify_algebra, Generator, GeneratorSet, GradedOperator, Grading};
use crate::scalar::{cabs64, Cx, Real};
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::sync::Arc;

/// Parity of `i1 * n2 + i2` is `g1[i1] + g2[i2]`.
pub fn tensor_grading(g1: &Grading, g2: &Grading) -> Grading {
    Arc::new(g1.iter().flat_map(|a| g2.iter().map(move |b| (a + b) % 2)).collect())
}

/// Product of two or three graded factors with flat ↔ multi-index maps.
#[derive(Clone, Debug)]
pub struct TensorSpace {
    pub factors: Vec<Grading>,
    pub grading: Grading,
}

impl TensorSpace {
    pub fn new(factors: Vec<Grading>) -> Result<Self> {
        if !(2..=3).contains(&factors.len()) {
            return Err(QabError::Shape(format!("tensor space needs 2 or 3 factors, got {}", factors.len())));
        }
        let mut grading = factors[0].clone();
        for f in &factors[1..] {
            grading = tensor_grading(&grading, f);
        }
        Ok(TensorSpace { factors, grading })
    }

    pub fn dim(&self) -> usize {
        self.grading.len()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = flat % f.len();
            flat /= f.len();
        }
        out
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.factors).fold(0, |acc, (i, f)| acc * f.len() + i)
    }
}

fn sign_diag<T: Real>(g: &Grading) -> CMat<T> {
    CMat::from_diag(g.iter().map(|&p| if p == 1 { -Cx::<T>::one() } else { Cx::<T>::one() }).collect())
}

/// Koszul tensor product `A⊗B`, parity `|A| + |B|`.
pub fn graded_tensor<T: Real>(a: &GradedOperator<T>, b: &GradedOperator<T>) -> Result<GradedOperator<T>> {
    let (pa, pb) = (a.require_parity()?, b.require_parity()?);
    if a.mat.cols() != a.dom.len() || b.mat.cols() != b.dom.len() {
        return Err(QabError::Shape("operator does not match its domain grading".into()));
    }
    let left = if pb == 1 { a.mat.matmul(&sign_diag(&a.dom)) } else { a.mat.clone() };
    Ok(GradedOperator {
        mat: left.kron(&b.mat),
        parity: Some((pa + pb) % 2),
        dom: tensor_grading(&a.dom, &b.dom),
        cod: tensor_grading(&a.cod, &b.cod),
    })
}

/// Graded flip `V₁⊗V₂ → V₂⊗V₁`, `v⊗w ↦ (−1)^{|v||w|} w⊗v`.
pub fn graded_permutation<T: Real>(g1: &Grading, g2: &Grading) -> GradedOperator<T> {
    let (n1, n2) = (g1.len(), g2.len());
    let mut m = CMat::zeros(n1 * n2, n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let s = if g1[i] * g2[j] == 1 { -Cx::<T>::one() } else { Cx::<T>::one() };
            m[(j * n1 + i, i * n2 + j)] = s;
        }
    }
    GradedOperator { mat: m, parity: Some(0), dom: tensor_grading(g1, g2), cod: tensor_grading(g2, g1) }
}

/// U-power attached to the second term of Δ(E_j): U for j = 2, U⁻¹ for j = 4.
fn u_factor<T: Real>(node: u8, u: &Cx<T>) -> Cx<T> {
    match node {
        2 => u.clone(),
        4 => Cx::<T>::one() / u.clone(),
        _ => Cx::<T>::one(),
    }
}

/// Δ(gen) on `V₁⊗V₂`:
/// Δ(E_j) = E_j⊗1 + u_j K_j⁻¹⊗E_j, Δ(F_j) = F_j⊗K_j + u_j⁻¹⊗F_j, Δ(K_j) = K_j⊗K_j,
/// with u₂ = U, u₄ = U⁻¹ of the first leg.
pub fn coproduct<T: Real>(gen: Generator, s1: &GeneratorSet<T>, s2: &GeneratorSet<T>) -> GradedOperator<T> {
    let j = gen.node();
    let uf = u_factor(j, &s1.u);
    let tens = |a: &GradedOperator<T>, b: &GradedOperator<T>| graded_tensor(a, b).expect("generators carry parity");
    match gen {
        Generator::K(_) => tens(s1.get(gen), s2.get(gen)),
        Generator::E(_) => {
            let first = tens(s1.get(gen), &s2.identity());
            let second = tens(&s1.k_inv(j).scale(&uf), s2.get(gen));
            &first + &second
        }
        Generator::F(_) => {
            let first = tens(s1.get(gen), s2.k(j));
            let second = tens(&s1.scalar(Cx::<T>::one() / uf), s2.get(gen));
            &first + &second
        }
    }
}

/// All twelve Δ-images as a generator set; central elements multiply.
pub fn coproduct_set<T: Real>(s1: &GeneratorSet<T>, s2: &GeneratorSet<T>) -> GeneratorSet<T> {
    GeneratorSet {
        ops: Generator::ALL.iter().map(|&g| coproduct(g, s1, s2)).collect(),
        u: s1.u.clone() * s2.u.clone(),
        v: s1.v.clone() * s2.v.clone(),
        grading: tensor_grading(&s1.grading, &s2.grading),
    }
}

/// Δ^op = P₂₁ ∘ Δ(legs swapped) ∘ P₁₂ on `V₁⊗V₂`.
pub fn opposite_coproduct<T: Real>(gen: Generator, s1: &GeneratorSet<T>, s2: &GeneratorSet<T>) -> GradedOperator<T> {
    let p12 = graded_permutation::<T>(&s1.grading, &s2.grading);
    let p21 = graded_permutation::<T>(&s2.grading, &s1.grading);
    let d = coproduct(gen, s2, s1);
    let out = &(&p21 * &d) * &p12;
    GradedOperator { parity: Some(gen.parity()), ..out }
}

pub fn opposite_coproduct_set<T: Real>(s1: &GeneratorSet<T>, s2: &GeneratorSet<T>) -> GeneratorSet<T> {
    GeneratorSet {
        ops: Generator::ALL.iter().map(|&g| opposite_coproduct(g, s1, s2)).collect(),
        u: s1.u.clone() * s2.u.clone(),
        v: s1.v.clone() * s2.v.clone(),
        grading: tensor_grading(&s1.grading, &s2.grading),
    }
}

/// Δ^ref: the coproduct with the first leg in the reflected representation
/// (whose central element is U̲ = U⁻¹, so the second term of Δ^ref(E₂)
/// carries U⁻¹ of the incoming state).
pub fn reflected_coproduct<T: Real>(
    gen: Generator,
    kin1: &Kinematics<T>,
    s2: &GeneratorSet<T>,
    p: &ModelParams<T>,
) -> Result<GradedOperator<T>> {
    let refl = reflected_generators(kin1, p)?;
    Ok(coproduct(gen, &refl, s2))
}

pub fn reflected_coproduct_set<T: Real>(
    kin1: &Kinematics<T>,
    s2: &GeneratorSet<T>,
    p: &ModelParams<T>,
) -> Result<GeneratorSet<T>> {
    let refl = reflected_generators(kin1, p)?;
    Ok(coproduct_set(&refl, s2))
}

/// Generators of the reflected bound state κ(kin).
pub fn reflected_generators<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<GeneratorSet<T>> {
    let r = reflect_kinematics(kin, p)?;
    Ok(build_generators(&r, p, &build_basis(r.m)?))
}

/// The one-dimensional boundary module: E_i, F_i act as 0, K_i, U, V as 1.
pub fn boundary_generators<T: Real>() -> GeneratorSet<T> {
    let grading: Grading = Arc::new(vec![0]);
    let ops = Generator::ALL
        .iter()
        .map(|&g| {
            let v = if matches!(g, Generator::K(_)) { Cx::<T>::one() } else { Cx::<T>::zero() };
            GradedOperator::endo(CMat::from_diag(vec![v]), g.parity(), grading.clone())
        })
        .collect();
    GeneratorSet { ops, u: Cx::<T>::one(), v: Cx::<T>::one(), grading }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn mul3<T: Real>(a: &GradedOperator<T>, b: &GradedOperator<T>, c: &GradedOperator<T>) -> GradedOperator<T> {
    &(a * b) * c
}

/// Graded adjoint action of x ∈ {E_i, F_i, K_i} (x_i, y_i, t_i) on b.
///
/// Left: ad E b = E b − (−1)^{[i][b]} K⁻¹ b K E, ad F b = F b K⁻¹ − (−1)^{[i][b]} b F K⁻¹,
/// ad K b = K⁻¹ b K.
/// Right: ad_r E b = K b E − (−1)^{[i][b]} K E b, ad_r F b = b F − (−1)^{[i][b]} F K⁻¹ b K,
/// ad_r K b = K b K⁻¹.
pub fn adjoint_action<T: Real>(
    side: Side,
    x: Generator,
    b: &GradedOperator<T>,
    set: &GeneratorSet<T>,
) -> Result<GradedOperator<T>> {
    let pb = b.require_parity()?;
    let i = x.node();
    let (k, ki) = (set.k(i), set.k_inv(i));
    let op = set.get(x);
    let sign = x.parity() * pb == 1;
    let combine = |a: GradedOperator<T>, c: GradedOperator<T>| if sign { &a + &c } else { &a - &c };
    let out = match (side, x) {
        (_, Generator::K(_)) => {
            return Ok(match side {
                Side::Left => mul3(&ki, b, k),
                Side::Right => mul3(k, b, &ki),
            })
        }
        (Side::Left, Generator::E(_)) => combine(op * b, &mul3(&ki, b, k) * op),
        (Side::Left, Generator::F(_)) => combine(mul3(op, b, &ki), mul3(b, op, &ki)),
        (Side::Right, Generator::E(_)) => combine(mul3(k, b, op), mul3(k, op, b)),
        (Side::Right, Generator::F(_)) => combine(b * op, &mul3(op, &ki, b) * k),
    };
    Ok(GradedOperator { parity: Some((x.parity() + pb) % 2), ..out })
}

fn adr<T: Real>(x: Generator, b: &GradedOperator<T>, set: &GeneratorSet<T>) -> GradedOperator<T> {
    adjoint_action(Side::Right, x, b, set).expect("twisted charges have definite parity")
}

/// The eight twisted boundary charges.
#[derive(Clone, Debug)]
pub struct TwistedCharges<T: Real> {
    pub e321: GradedOperator<T>,
    pub f321: GradedOperator<T>,
    pub e21: GradedOperator<T>,
    pub f21: GradedOperator<T>,
    pub e1: GradedOperator<T>,
    pub f1: GradedOperator<T>,
    pub c2: GradedOperator<T>,
    pub c3: GradedOperator<T>,
}

impl<T: Real> TwistedCharges<T> {
    pub const NAMES: [&'static str; 8] = ["E321", "F321", "E21", "F21", "E1", "F1", "C2", "C3"];

    /// Charges in the order of [`Self::NAMES`].
    pub fn all(&self) -> [&GradedOperator<T>; 8] {
        [&self.e321, &self.f321, &self.e21, &self.f21, &self.e1, &self.f1, &self.c2, &self.c3]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &GradedOperator<T>)> {
        Self::NAMES.into_iter().zip(self.all())
    }
}

/// ad_r E₃ ad_r E₂ (K₁E₁), the raising piece of Ẽ₃₂₁.
fn theta_f4<T: Real>(set: &GeneratorSet<T>) -> GradedOperator<T> {
    let e1p = set.k(1) * set.e(1);
    adr(Generator::E(3), &adr(Generator::E(2), &e1p, set), set)
}

/// ad_r F₃ ad_r F₂ (F₁), the lowering piece of F̃₃₂₁.
fn theta_e4<T: Real>(set: &GeneratorSet<T>) -> GradedOperator<T> {
    adr(Generator::F(3), &adr(Generator::F(2), set.f(1), set), set)
}

/// Ẽ₃₂₁ = F₄K₄⁻¹ + d_y ad_rE₃ ad_rE₂(E₁′)K₄⁻¹, F̃₃₂₁ = E₄′K₄⁻¹ + d_x ad_rF₃ ad_rF₂(F₁)K₄⁻¹
/// and the charges derived from them by ad_r of E₂, E₃, F₂, F₃.
pub fn twisted_boundary_charges<T: Real>(set: &GeneratorSet<T>, p: &ModelParams<T>) -> TwistedCharges<T> {
    let (dy, dx) = p.twist_constants();
    let k4i = set.k_inv(4);
    let e321 = &(set.f(4) * &k4i) + &(&theta_f4(set) * &k4i).scale(&dy);
    let e4p = set.k(4) * set.e(4);
    let f321 = &(&e4p * &k4i) + &(&theta_e4(set) * &k4i).scale(&dx);
    let e21 = adr(Generator::F(3), &e321, set);
    let e1 = adr(Generator::F(2), &e21, set);
    let c2 = adr(Generator::E(2), &e321, set);
    let f21 = adr(Generator::E(3), &f321, set);
    let f1 = adr(Generator::E(2), &f21, set);
    let c3 = adr(Generator::F(2), &f321, set);
    TwistedCharges { e321, f321, e21, f21, e1, f1, c2, c3 }
}

/// Twisted charges of a single bound state.
pub fn twisted_charges_for<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>) -> Result<TwistedCharges<T>> {
    let set = build_generators(kin, p, &build_basis(kin.m)?);
    Ok(twisted_boundary_charges(&set, p))
}

/// Alternative construction of (Ẽ₁, F̃₁) built directly around node 1:
/// Ẽ₁′ = K₁E₁K₁⁻¹ + d′_x ad_rF₂ ad_rF₃(F₄)K₁⁻¹ and
/// F̃₁′ = F₁K₁⁻¹ + d′_y ad_rE₂ ad_rE₃(K₄E₄)K₁⁻¹, with
/// d′_x = −αα̃ g/g̃ and d′_y = −g/(αα̃ g̃).
pub fn node_one_charges<T: Real>(set: &GeneratorSet<T>, p: &ModelParams<T>) -> (GradedOperator<T>, GradedOperator<T>) {
    let aa = p.alpha.clone() * p.alpha_tilde.clone();
    let dxp = -aa.clone() * p.g.clone() / p.g_tilde.clone();
    let dyp = -p.g.clone() / (aa * p.g_tilde.clone());
    let k1i = set.k_inv(1);
    let lower = adr(Generator::F(2), &adr(Generator::F(3), set.f(4), set), set);
    let e1 = &mul3(set.k(1), set.e(1), &k1i) + &(&lower * &k1i).scale(&dxp);
    let e4p = set.k(4) * set.e(4);
    let raise = adr(Generator::E(2), &adr(Generator::E(3), &e4p, set), set);
    let f1 = &(set.f(1) * &k1i) + &(&raise * &k1i).scale(&dyp);
    (e1, f1)
}

fn tens<T: Real>(a: &GradedOperator<T>, b: &GradedOperator<T>) -> GradedOperator<T> {
    graded_tensor(a, b).expect("operands carry parity")
}

/// Residuals of the two coproduct expansions of Ẽ₃₂₁ and F̃₃₂₁ on V₁⊗V₂
/// (coideal property), plus group-likeness of K₁K₄⁻¹.
pub fn coideal_expansion_check<T: Real>(
    kin1: &Kinematics<T>,
    kin2: &Kinematics<T>,
    p: &ModelParams<T>,
    tol: f64,
) -> Result<VerificationReport> {
    let s1 = build_generators(kin1, p, &build_basis(kin1.m)?);
    let s2 = build_generators(kin2, p, &build_basis(kin2.m)?);
    let mut r = VerificationReport::new();
    let delta = coproduct_set(&s1, &s2);
    let lhs = twisted_boundary_charges(&delta, p);
    let t2 = twisted_boundary_charges(&s2, p);
    let (dy, dx) = p.twist_constants();
    let q = p.q.clone();
    let qq1 = q.clone() * q.clone() - Cx::<T>::one();
    let u = s1.u.clone();
    let ui = Cx::<T>::one() / u.clone();
    let i2 = s2.identity();
    let k4i1 = s1.k_inv(4);
    let k5_2 = &(&(s2.k(1) * s2.k(2)) * s2.k(3)) * &s2.k_inv(4);
    let k1k4i_2 = s2.k(1) * &s2.k_inv(4);

    let e1p_1 = s1.k(1) * s1.e(1);
    let ad_e2_e1p = adr(Generator::E(2), &e1p_1, &s1);
    let e2p_2 = s2.k(2) * s2.e(2);
    let ad_e3_e2p = adr(Generator::E(3), &e2p_2, &s2);
    let mut rhs_e = tens(&(s1.f(4) * &k4i1), &i2);
    rhs_e = &rhs_e + &tens(&k4i1.scale(&u), &t2.e321);
    rhs_e = &rhs_e + &tens(&(&theta_f4(&s1) * &k4i1), &k5_2).scale(&dy);
    let inner = &tens(&(&k4i1 * &ad_e2_e1p).scale(&(Cx::<T>::one() / q.clone())), &(&k5_2 * s2.e(3)))
        - &tens(&(&e1p_1 * &k4i1).scale(&u), &(&k1k4i_2 * &ad_e3_e2p));
    rhs_e = &rhs_e + &inner.scale(&(dy * qq1.clone()));
    r.check("coideal E321", rel_residual(&lhs.e321.mat, &rhs_e.mat), tol);

    let e4p_1 = s1.k(4) * s1.e(4);
    let ad_f2_f1 = adr(Generator::F(2), s1.f(1), &s1);
    let ad_f3_f2 = adr(Generator::F(3), s2.f(2), &s2);
    let mut rhs_f = tens(&(&e4p_1 * &k4i1), &i2);
    rhs_f = &rhs_f + &tens(&k4i1.scale(&ui), &t2.f321);
    rhs_f = &rhs_f + &tens(&(&theta_e4(&s1) * &k4i1), &k5_2).scale(&dx);
    let inner = &tens(&(&k4i1 * &ad_f2_f1), &mul3(&s2.k_inv(3), &k5_2, s2.f(3)))
        - &tens(&(&k4i1 * s1.f(1)).scale(&ui), &(&ad_f3_f2 * &k1k4i_2));
    rhs_f = &rhs_f - &inner.scale(&(dx * qq1));
    r.check("coideal F321", rel_residual(&lhs.f321.mat, &rhs_f.mat), tol);

    let k14 = |s: &GeneratorSet<T>| s.k(1) * &s.k_inv(4);
    let dk = delta.k(1) * &delta.k_inv(4);
    r.check("K1 K4^-1 group-like", rel_residual(&dk.mat, &tens(&k14(&s1), &k14(&s2)).mat), tol);
    r.tag_ms(&[kin1.m, kin2.m]);
    Ok(r)
}

/// Homomorphism checks for Δ, Δ^op and Δ^ref on one pair, the Koszul law,
/// P² = 1 and the coideal expansions.
pub fn verify_coalgebra<T: Real>(
    kin1: &Kinematics<T>,
    kin2: &Kinematics<T>,
    p: &ModelParams<T>,
    tol: f64,
) -> Result<VerificationReport> {
    let s1 = build_generators(kin1, p, &build_basis(kin1.m)?);
    let s2 = build_generators(kin2, p, &build_basis(kin2.m)?);
    let mut r = VerificationReport::new();
    r.append_prefixed("Delta: ", verify_algebra(&coproduct_set(&s1, &s2), p, tol));
    r.append_prefixed("Delta^op: ", verify_algebra(&opposite_coproduct_set(&s1, &s2), p, tol));
    r.append_prefixed("Delta^ref: ", verify_algebra(&reflected_coproduct_set(kin1, &s2, p)?, p, tol));

    let (a, b) = (s1.e(2), s2.f(2));
    let lhs = &tens(&s1.identity(), b) * &tens(a, &s2.identity());
    let rhs = &tens(a, &s2.identity()) * &tens(&s1.identity(), b);
    r.check("Koszul sign law", rel_residual(&lhs.mat, &rhs.scale(&-Cx::<T>::one()).mat), tol);
    let p12 = graded_permutation::<T>(&s1.grading, &s2.grading);
    let p21 = graded_permutation::<T>(&s2.grading, &s1.grading);
    r.check("P21 P12 = 1", rel_residual(&(&p21 * &p12).mat, &CMat::identity(s1.dim() * s2.dim())), tol);
    r.tag_ms(&[kin1.m, kin2.m]);
    r.append(coideal_expansion_check(kin1, kin2, p, tol)?);
    Ok(r)
}

/// Convergence table of the rescaled twisted charges along q = 1 + ε.
#[derive(Clone, Debug)]
pub struct YangianProbe {
    pub eps: Vec<f64>,
    /// Max entrywise change of each rescaled charge between successive ε
    /// (row `i` compares `eps[i]` with `eps[i + 1]`), in [`TwistedCharges::NAMES`] order.
    pub differences: Vec<[f64; 8]>,
    /// Largest entry over all rescaled charges at each ε.
    pub max_entry: Vec<f64>,
    /// Rescaled charges at the smallest ε.
    pub limits: Vec<(&'static str, CMat<f64>)>,
    /// Spread of the diagonal of the rescaled C̃₂ − gα𝔥₂ and C̃₃ + (g/α)𝔥₂
    /// at each ε, with 𝔥₂ = (l − k + n − m)/2 (zero for a scalar).
    pub central_defect: Vec<[f64; 2]>,
    /// Entries grow like 1/(q − 1).
    pub diverging: bool,
}

impl YangianProbe {
    /// Observed order of the successive differences against the step ratio,
    /// one value per consecutive pair of rows (≈ 1 for O(q − 1) convergence).
    pub fn rates(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in 0..self.differences.len().saturating_sub(1) {
            let d0 = self.differences[w].iter().cloned().fold(0.0, f64::max);
            let d1 = self.differences[w + 1].iter().cloned().fold(0.0, f64::max);
            let step = (self.eps[w] / self.eps[w + 1]).ln();
            out.push((d0 / d1).ln() / step);
        }
        out
    }
}

/// Rescale E-type charges and C̃₂ by αα̃/(2ε), F-type and C̃₃ by 1/(2εαα̃),
/// holding x⁻ fixed and re-solving the shortening at each q = 1 + ε.
pub fn yangian_limit_probe(eps: &[f64], m: usize, x_minus: Complex64, base: &ModelParams<f64>) -> Result<YangianProbe> {
    let mut rows: Vec<Vec<CMat<f64>>> = Vec::new();
    let mut max_entry = Vec::new();
    let mut central_defect = Vec::new();
    let space = build_basis(m)?;
    let h2: Vec<f64> = space.states.iter().map(|s| (s[3] - s[2] + s[1] - s[0]) as f64 / 2.0).collect();
    let spread = |d: Vec<Complex64>| {
        let c0 = d[0];
        d.iter().map(|z| (z - c0).norm()).fold(0.0, f64::max)
    };
    for &e in eps {
        let p = ModelParams::new(Complex64::new(1.0 + e, 0.0), base.g)?
            .with_phases(base.alpha, base.alpha_tilde)
            .with_normalization(base.gamma, base.gamma_bar);
        let kin = Kinematics::from_x_minus(m, x_minus, &p)?;
        let t = twisted_charges_for(&kin, &p)?;
        let aa = p.alpha * p.alpha_tilde;
        let scaled: Vec<CMat<f64>> = t
            .named()
            .map(|(n, op)| {
                let s = if n.starts_with('E') || n == "C2" { aa / (2.0 * e) } else { 1.0 / (aa * 2.0 * e) };
                op.mat.scale(&s)
            })
            .collect();
        max_entry.push(scaled.iter().map(|m| m.max_abs()).fold(0.0, f64::max));
        let (ga, gi) = (p.g * p.alpha, p.g / p.alpha);
        central_defect.push([
            spread(scaled[6].diag().iter().zip(&h2).map(|(d, h)| d - ga * h).collect()),
            spread(scaled[7].diag().iter().zip(&h2).map(|(d, h)| d + gi * h).collect()),
        ]);
        rows.push(scaled);
    }
    let differences = rows
        .windows(2)
        .map(|w| {
            let mut d = [0.0; 8];
            for (k, slot) in d.iter_mut().enumerate() {
                *slot = (&w[0][k] - &w[1][k]).max_abs();
            }
            d
        })
        .collect();
    let diverging = max_entry.len() >= 2 && {
        let (first, last) = (max_entry[0], *max_entry.last().unwrap());
        let ratio = eps[0] / eps[eps.len() - 1];
        last > first * ratio.sqrt()
    };
    let limits = TwistedCharges::<f64>::NAMES.into_iter().zip(rows.pop().unwrap_or_default()).collect();
    Ok(YangianProbe { eps: eps.to_vec(), differences, max_entry, limits, central_defect, diverging })
}

/// f_k = d_x [M−k−1] q^{−M/2−k−1} (qᴹ − q^{2k+2} z) V⁻¹, the coefficient of
/// F̃₁ raising k inside families 3 and 4.
pub fn f1_coefficient<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>, k: usize) -> Cx<T> {
    let (m, k) = (kin.m as i64, k as i64);
    let (_, dx) = p.twist_constants();
    dx * p.qnum(m - k - 1) * p.qhalf(-m - 2 * k - 2) * (p.qpow(m) - p.qpow(2 * k + 2) * kin.z.clone())
        / kin.v.clone()
}

/// Largest off-diagonal entry relative to the largest entry.
pub fn off_diagonal_norm<T: Real>(op: &GradedOperator<T>) -> f64 {
    let off = op.mat.nonzeros().filter(|(i, j, _)| i != j).map(|(_, _, v)| cabs64(v)).fold(0.0, f64::max);
    off / 1f64.max(op.mat.max_abs())
}
