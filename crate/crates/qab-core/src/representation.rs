//! The 4M-dimensional q-oscillator bound-state representation and the
//! defining relations of the algebra, checked as matrix identities.

use crate::error::{QabError, Result};
use crate::kinematics::{Kinematics, ModelParams};
use crate::matrix::{rel_residual, CMat};
use crate::report::VerificationReport;
use crate::scalar::{cint, Cx, Real};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Range, Sub};
use std::sync::Arc;

/// Symmetrized Cartan matrix.
pub const DA: [[i64; 4]; 4] = [[2, -1, 0, -1], [-1, 0, 1, 0], [0, 1, -2, 1], [-1, 0, 1, 0]];
/// Diagonal of D.
pub const D_DIAG: [i64; 4] = [1, -1, -1, -1];

/// Per-state parities of a graded basis.
pub type Grading = Arc<Vec<u8>>;

/// Oscillator occupation (m, n, k, l).
pub type State = [i64; 4];

#[derive(Clone, Debug)]
pub struct RepSpace {
    pub m: usize,
    pub states: Vec<State>,
    pub grading: Grading,
    index: HashMap<State, usize>,
}

impl RepSpace {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn parity(&self, i: usize) -> u8 {
        self.grading[i]
    }

    /// Index range of family α ∈ {1, 2, 3, 4}; blocks have sizes
    /// (M+1, M−1, M, M).
    pub fn family_range(&self, alpha: usize) -> Range<usize> {
        let m = self.m;
        let sizes = [m + 1, m - 1, m, m];
        let start: usize = sizes[..alpha - 1].iter().sum();
        start..start + sizes[alpha - 1]
    }

    /// Position of |k⟩^α, if that state exists.
    pub fn family_state(&self, alpha: usize, k: usize) -> Option<usize> {
        let (m, k) = (self.m as i64, k as i64);
        let s = match alpha {
            1 => [0, 0, k, m - k],
            2 => [1, 1, k - 1, m - k - 1],
            3 => [1, 0, k, m - k - 1],
            4 => [0, 1, k, m - k - 1],
            _ => return None,
        };
        self.index_of(&s)
    }

    /// Joint Cartan weight (l − k, n − m), conserved by every K-generator.
    pub fn weight(&self, i: usize) -> (i64, i64) {
        let [m, n, k, l] = self.states[i];
        (l - k, n - m)
    }
}

/// Basis |m,n,k,l⟩ in family-major order: |k⟩¹ = |0,0,k,M−k⟩,
/// |k⟩² = |1,1,k−1,M−k−1⟩, |k⟩³ = |1,0,k,M−k−1⟩, |k⟩⁴ = |0,1,k,M−k−1⟩,
/// each with k ascending.
pub fn build_basis(m: usize) -> Result<RepSpace> {
    if m == 0 {
        return Err(QabError::InvalidBoundStateNumber(m));
    }
    let mi = m as i64;
    let mut states = Vec::with_capacity(4 * m);
    states.extend((0..=mi).map(|k| [0, 0, k, mi - k]));
    states.extend((1..mi).map(|k| [1, 1, k - 1, mi - k - 1]));
    states.extend((0..mi).map(|k| [1, 0, k, mi - k - 1]));
    states.extend((0..mi).map(|k| [0, 1, k, mi - k - 1]));
    let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let grading = Arc::new(states.iter().map(|s| ((s[0] + s[1]) % 2) as u8).collect());
    Ok(RepSpace { m, states, grading, index })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    E(u8),
    F(u8),
    K(u8),
}

impl Generator {
    pub const ALL: [Generator; 12] = [
        Generator::E(1),
        Generator::E(2),
        Generator::E(3),
        Generator::E(4),
        Generator::F(1),
        Generator::F(2),
        Generator::F(3),
        Generator::F(4),
        Generator::K(1),
        Generator::K(2),
        Generator::K(3),
        Generator::K(4),
    ];

    pub fn node(self) -> u8 {
        match self {
            Generator::E(i) | Generator::F(i) | Generator::K(i) => i,
        }
    }

    pub fn index(self) -> usize {
        let base = match self {
            Generator::E(_) => 0,
            Generator::F(_) => 4,
            Generator::K(_) => 8,
        };
        base + self.node() as usize - 1
    }

    /// E₂, F₂, E₄, F₄ are odd; everything else is even.
    pub fn parity(self) -> u8 {
        match self {
            Generator::K(_) => 0,
            _ => (self.node() % 2 == 0) as u8,
        }
    }

    pub fn parse(s: &str) -> Option<Generator> {
        let mut ch = s.chars();
        let kind = ch.next()?;
        let node: u8 = ch.as_str().parse().ok()?;
        if !(1..=4).contains(&node) {
            return None;
        }
        match kind {
            'E' => Some(Generator::E(node)),
            'F' => Some(Generator::F(node)),
            'K' => Some(Generator::K(node)),
            _ => None,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::E(i) => write!(f, "E{i}"),
            Generator::F(i) => write!(f, "F{i}"),
            Generator::K(i) => write!(f, "K{i}"),
        }
    }
}

/// A matrix between graded spaces with a definite parity (or `None` for a
/// sum of mixed-parity pieces).
#[derive(Clone, Debug)]
pub struct GradedOperator<T: Real> {
    pub mat: CMat<T>,
    pub parity: Option<u8>,
    pub dom: Grading,
    pub cod: Grading,
}

impl<T: Real> GradedOperator<T> {
    pub fn endo(mat: CMat<T>, parity: u8, grading: Grading) -> Self {
        GradedOperator { mat, parity: Some(parity), dom: grading.clone(), cod: grading }
    }

    pub fn identity(grading: Grading) -> Self {
        let n = grading.len();
        Self::endo(CMat::identity(n), 0, grading)
    }

    pub fn zero_like(&self) -> Self {
        GradedOperator {
            mat: CMat::zeros(self.mat.rows(), self.mat.cols()),
            parity: self.parity,
            dom: self.dom.clone(),
            cod: self.cod.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn scale(&self, s: &Cx<T>) -> Self {
        GradedOperator { mat: self.mat.scale(s), ..self.clone() }
    }

    /// Inverse of a diagonal (Cartan-type) operator.
    pub fn inv_diag(&self) -> Self {
        GradedOperator { mat: self.mat.inv_diag(), ..self.clone() }
    }

    pub fn require_parity(&self) -> Result<u8> {
        self.parity.ok_or_else(|| QabError::Parity("operator mixes even and odd parts".into()))
    }

    /// Every nonzero entry maps a parity-s state to a parity-(s + p) state.
    pub fn respects_grading(&self) -> bool {
        let Some(p) = self.parity else { return false };
        self.mat.nonzeros().all(|(i, j, _)| self.cod[i] == (self.dom[j] + p) % 2)
    }

    pub fn to_f64(&self) -> GradedOperator<f64> {
        GradedOperator { mat: self.mat.to_f64(), parity: self.parity, dom: self.dom.clone(), cod: self.cod.clone() }
    }
}

impl<'a, T: Real> Mul<&'a GradedOperator<T>> for &'a GradedOperator<T> {
    type Output = GradedOperator<T>;
    fn mul(self, rhs: &'a GradedOperator<T>) -> GradedOperator<T> {
        GradedOperator {
            mat: self.mat.matmul(&rhs.mat),
            parity: match (self.parity, rhs.parity) {
                (Some(a), Some(b)) => Some((a + b) % 2),
                _ => None,
            },
            dom: rhs.dom.clone(),
            cod: self.cod.clone(),
        }
    }
}

fn sum_parity(a: Option<u8>, b: Option<u8>, a_zero: bool, b_zero: bool) -> Option<u8> {
    match (a, b) {
        _ if a_zero => b,
        _ if b_zero => a,
        (Some(x), Some(y)) if x == y => Some(x),
        _ => None,
    }
}

impl<'a, T: Real> Add<&'a GradedOperator<T>> for &'a GradedOperator<T> {
    type Output = GradedOperator<T>;
    fn add(self, rhs: &'a GradedOperator<T>) -> GradedOperator<T> {
        let parity = sum_parity(self.parity, rhs.parity, self.mat.max_abs() == 0.0, rhs.mat.max_abs() == 0.0);
        GradedOperator { mat: &self.mat + &rhs.mat, parity, dom: self.dom.clone(), cod: self.cod.clone() }
    }
}

impl<'a, T: Real> Sub<&'a GradedOperator<T>> for &'a GradedOperator<T> {
    type Output = GradedOperator<T>;
    fn sub(self, rhs: &'a GradedOperator<T>) -> GradedOperator<T> {
        let parity = sum_parity(self.parity, rhs.parity, self.mat.max_abs() == 0.0, rhs.mat.max_abs() == 0.0);
        GradedOperator { mat: &self.mat - &rhs.mat, parity, dom: self.dom.clone(), cod: self.cod.clone() }
    }
}

/// `AB − (−1)^{|A||B|} BA`.
pub fn graded_commutator<T: Real>(a: &GradedOperator<T>, b: &GradedOperator<T>) -> Result<GradedOperator<T>> {
    let (pa, pb) = (a.require_parity()?, b.require_parity()?);
    if a.dim() != b.dim() {
        return Err(QabError::Shape(format!("{} vs {}", a.dim(), b.dim())));
    }
    let ab = a * b;
    let ba = b * a;
    let out = if pa * pb == 1 { &ab + &ba } else { &ab - &ba };
    Ok(GradedOperator { parity: Some((pa + pb) % 2), ..out })
}

/// The twelve Chevalley generators realized on one graded space (a single
/// bound state, a tensor product via the coproduct, or the boundary
/// singlet), together with the scalar values of the central U and V.
#[derive(Clone, Debug)]
pub struct GeneratorSet<T: Real> {
    pub ops: Vec<GradedOperator<T>>,
    pub u: Cx<T>,
    pub v: Cx<T>,
    pub grading: Grading,
}

impl<T: Real> GeneratorSet<T> {
    pub fn get(&self, g: Generator) -> &GradedOperator<T> {
        &self.ops[g.index()]
    }

    pub fn e(&self, i: u8) -> &GradedOperator<T> {
        self.get(Generator::E(i))
    }

    pub fn f(&self, i: u8) -> &GradedOperator<T> {
        self.get(Generator::F(i))
    }

    pub fn k(&self, i: u8) -> &GradedOperator<T> {
        self.get(Generator::K(i))
    }

    pub fn k_inv(&self, i: u8) -> GradedOperator<T> {
        self.k(i).inv_diag()
    }

    pub fn dim(&self) -> usize {
        self.grading.len()
    }

    pub fn identity(&self) -> GradedOperator<T> {
        GradedOperator::identity(self.grading.clone())
    }

    pub fn scalar(&self, s: Cx<T>) -> GradedOperator<T> {
        self.identity().scale(&s)
    }
}

fn supercharge_e<T: Real>(space: &RepSpace, a: &Cx<T>, b: &Cx<T>, p: &ModelParams<T>) -> CMat<T> {
    let n = space.dim();
    let mut e = CMat::zeros(n, n);
    for (j, &[m, nn, k, l]) in space.states.iter().enumerate() {
        if let Some(t) = space.index_of(&[m, nn + 1, k, l - 1]) {
            let sign = if m % 2 == 1 { -Cx::<T>::one() } else { Cx::<T>::one() };
            e[(t, j)] = e[(t, j)].clone() + a.clone() * sign * p.qnum(l);
        }
        if let Some(t) = space.index_of(&[m - 1, nn, k + 1, l]) {
            e[(t, j)] = e[(t, j)].clone() + b.clone();
        }
    }
    e
}

fn supercharge_f<T: Real>(space: &RepSpace, c: &Cx<T>, d: &Cx<T>, p: &ModelParams<T>) -> CMat<T> {
    let n = space.dim();
    let mut f = CMat::zeros(n, n);
    for (j, &[m, nn, k, l]) in space.states.iter().enumerate() {
        if let Some(t) = space.index_of(&[m + 1, nn, k - 1, l]) {
            f[(t, j)] = f[(t, j)].clone() + c.clone() * p.qnum(k);
        }
        if let Some(t) = space.index_of(&[m, nn - 1, k, l + 1]) {
            let sign = if m % 2 == 1 { -Cx::<T>::one() } else { Cx::<T>::one() };
            f[(t, j)] = f[(t, j)].clone() + d.clone() * sign;
        }
    }
    f
}

/// Matrix of one Chevalley generator on the bound-state space.
pub fn generator_matrix<T: Real>(
    gen: Generator,
    kin: &Kinematics<T>,
    p: &ModelParams<T>,
    space: &RepSpace,
) -> GradedOperator<T> {
    let n = space.dim();
    let shift = |dm: i64, dn: i64, dk: i64, dl: i64, coef: &dyn Fn(&State) -> Cx<T>| {
        let mut out = CMat::zeros(n, n);
        for (j, s) in space.states.iter().enumerate() {
            let t = [s[0] + dm, s[1] + dn, s[2] + dk, s[3] + dl];
            if let Some(i) = space.index_of(&t) {
                out[(i, j)] = coef(s);
            }
        }
        out
    };
    let diag = |f: &dyn Fn(&State) -> Cx<T>| CMat::from_diag(space.states.iter().map(f).collect());
    let (l, al) = (&kin.labels, &kin.affine);
    let mat = match gen {
        Generator::E(1) => shift(0, 0, -1, 1, &|s| p.qnum(s[2])),
        Generator::F(1) => shift(0, 0, 1, -1, &|s| p.qnum(s[3])),
        Generator::E(3) => shift(1, -1, 0, 0, &|_| Cx::<T>::one()),
        Generator::F(3) => shift(-1, 1, 0, 0, &|_| Cx::<T>::one()),
        Generator::E(2) => supercharge_e(space, &l.a, &l.b, p),
        Generator::F(2) => supercharge_f(space, &l.c, &l.d, p),
        Generator::E(4) => supercharge_e(space, &al.a, &al.b, p),
        Generator::F(4) => supercharge_f(space, &al.c, &al.d, p),
        Generator::K(1) => diag(&|s| p.qpow(s[3] - s[2])),
        Generator::K(3) => diag(&|s| p.qpow(s[1] - s[0])),
        Generator::K(2) => diag(&|s| p.qhalf(s[2] - s[3] + s[0] - s[1]) / kin.v.clone()),
        Generator::K(4) => diag(&|s| p.qhalf(s[2] - s[3] + s[0] - s[1]) * kin.v.clone()),
        _ => unreachable!("generator nodes are 1..=4"),
    };
    GradedOperator::endo(mat, gen.parity(), space.grading.clone())
}

pub fn build_generators<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>, space: &RepSpace) -> GeneratorSet<T> {
    GeneratorSet {
        ops: Generator::ALL.iter().map(|&g| generator_matrix(g, kin, p, space)).collect(),
        u: kin.u.clone(),
        v: kin.v.clone(),
        grading: space.grading.clone(),
    }
}

/// Nested graded commutator from a word such as `E321` = [E₃,[E₂,E₁}}.
/// A one-letter word is the generator itself.
pub fn composite_charge<T: Real>(word: &str, set: &GeneratorSet<T>) -> Result<GradedOperator<T>> {
    let bad = || QabError::MalformedWord(word.to_string());
    let mut ch = word.chars();
    let kind = ch.next().ok_or_else(bad)?;
    if kind != 'E' && kind != 'F' {
        return Err(bad());
    }
    let nodes: Vec<u8> = ch.map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad)).collect::<Result<_>>()?;
    if nodes.is_empty() || nodes.iter().any(|n| !(1..=4).contains(n)) {
        return Err(bad());
    }
    let gen = |n: u8| if kind == 'E' { set.e(n) } else { set.f(n) };
    let mut acc = gen(*nodes.last().unwrap()).clone();
    for &n in nodes.iter().rev().skip(1) {
        acc = graded_commutator(gen(n), &acc)?;
    }
    Ok(acc)
}

fn q_minus_2<T: Real>(q: &Cx<T>) -> Cx<T> {
    q.clone() - cint::<T>(2) + Cx::<T>::one() / q.clone()
}

/// {[X₁,Xₖ],[X₃,Xₖ]} − (q − 2 + q⁻¹) Xₖ X₁ X₃ Xₖ for X = E or F.
pub fn quartic_serre<T: Real>(set: &GeneratorSet<T>, q: &Cx<T>, raising: bool, k: u8) -> GradedOperator<T> {
    let x = |i: u8| if raising { set.e(i) } else { set.f(i) };
    let c1 = &(x(1) * x(k)) - &(x(k) * x(1));
    let c3 = &(x(3) * x(k)) - &(x(k) * x(3));
    let anti = &(&c1 * &c3) + &(&c3 * &c1);
    let word = &(&(x(k) * x(1)) * x(3)) * x(k);
    let out = &anti - &word.scale(&q_minus_2(q));
    GradedOperator { parity: Some(0), ..out }
}

/// Central charge C₂ (raising) or C₃ (lowering) as written with [X₂,X₁], [X₂,X₃].
pub fn central_charge<T: Real>(set: &GeneratorSet<T>, q: &Cx<T>, raising: bool) -> GradedOperator<T> {
    let x = |i: u8| if raising { set.e(i) } else { set.f(i) };
    let c1 = &(x(2) * x(1)) - &(x(1) * x(2));
    let c3 = &(x(2) * x(3)) - &(x(3) * x(2));
    let anti = &(&c1 * &c3) + &(&c3 * &c1);
    let word = &(&(x(2) * x(1)) * x(3)) * x(2);
    let out = &anti - &word.scale(&q_minus_2(q));
    GradedOperator { parity: Some(0), ..out }
}

/// Scalar values (g α_k (1 − V_k² U_k²), g α_k⁻¹ (V_k⁻² − U_k⁻²)) of the
/// quartic Serre combinations, with (U₂, V₂) = (U, V), (U₄, V₄) = (U⁻¹, V⁻¹),
/// α₂ = α and α₄ = αα̃².
pub fn quartic_serre_values<T: Real>(set: &GeneratorSet<T>, p: &ModelParams<T>, k: u8) -> (Cx<T>, Cx<T>) {
    let one = Cx::<T>::one();
    let (uk, vk, ak) = if k == 2 {
        (set.u.clone(), set.v.clone(), p.alpha.clone())
    } else {
        (
            one.clone() / set.u.clone(),
            one.clone() / set.v.clone(),
            p.alpha.clone() * p.alpha_tilde.clone() * p.alpha_tilde.clone(),
        )
    };
    let (u2, v2) = (uk.clone() * uk, vk.clone() * vk);
    let e = p.g.clone() * ak.clone() * (one.clone() - v2.clone() * u2.clone());
    let f = p.g.clone() / ak * (one.clone() / v2 - one / u2);
    (e, f)
}

fn residual_or_vacuous<T: Real>(r: &mut VerificationReport, name: String, l: &CMat<T>, rhs: &CMat<T>, tol: f64) {
    let res = rel_residual(l, rhs);
    let vac = l.max_abs() < 1e-300 && rhs.max_abs() < 1e-300;
    r.check(name, res, tol).vacuous = vac;
}

/// Right-hand side of [E_i, F_j}.
pub fn cross_relation_rhs<T: Real>(set: &GeneratorSet<T>, p: &ModelParams<T>, i: u8, j: u8) -> GradedOperator<T> {
    let q = &p.q;
    if i == j {
        let k = set.k(i);
        let diff = k - &k.inv_diag();
        let s = cint::<T>(D_DIAG[i as usize - 1]) / (q.clone() - Cx::<T>::one() / q.clone());
        return diff.scale(&s);
    }
    let u2 = set.u.clone() * set.u.clone();
    match (i, j) {
        (2, 4) => {
            let t = set.k(4) - &set.k_inv(2).scale(&u2);
            t.scale(&(-p.g_tilde.clone() / p.alpha_tilde.clone()))
        }
        (4, 2) => {
            let t = set.k(2) - &set.k_inv(4).scale(&(Cx::<T>::one() / u2));
            t.scale(&(p.g_tilde.clone() * p.alpha_tilde.clone()))
        }
        _ => set.identity().scale(&Cx::<T>::zero()),
    }
}

/// Every defining relation of the algebra evaluated on `set`.
pub fn verify_algebra<T: Real>(set: &GeneratorSet<T>, p: &ModelParams<T>, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new();
    let q = &p.q;
    let id = set.identity();

    for g in Generator::ALL {
        r.check_bool(format!("grading {g}"), set.get(g).respects_grading());
    }

    for i in 1..=4u8 {
        let (ki, kinv) = (set.k(i), set.k_inv(i));
        for j in 1..=4u8 {
            let s = crate::scalar::cpowi(q, DA[i as usize - 1][j as usize - 1]);
            let lhs = &(ki * set.e(j)) * &kinv;
            residual_or_vacuous(&mut r, format!("K{i} E{j} K{i}^-1"), &lhs.mat, &set.e(j).scale(&s).mat, tol);
            let lhs = &(ki * set.f(j)) * &kinv;
            let sf = Cx::<T>::one() / s;
            residual_or_vacuous(&mut r, format!("K{i} F{j} K{i}^-1"), &lhs.mat, &set.f(j).scale(&sf).mat, tol);
        }
    }

    for i in 1..=4u8 {
        for j in 1..=4u8 {
            let lhs = graded_commutator(set.e(i), set.f(j)).expect("generators carry parity");
            let rhs = cross_relation_rhs(set, p, i, j);
            residual_or_vacuous(&mut r, format!("[E{i},F{j}}}"), &lhs.mat, &rhs.mat, tol);
        }
    }

    let zero = id.scale(&Cx::<T>::zero());
    for (x, name) in [(true, 'E'), (false, 'F')] {
        let g = |i: u8| if x { set.e(i) } else { set.f(i) };
        for (a, b) in [(2u8, 2u8), (4, 4)] {
            residual_or_vacuous(&mut r, format!("{name}{a}{name}{b}"), &(g(a) * g(b)).mat, &zero.mat, tol);
        }
        let c13 = graded_commutator(g(1), g(3)).unwrap();
        residual_or_vacuous(&mut r, format!("[{name}1,{name}3]"), &c13.mat, &zero.mat, tol);
        let a24 = graded_commutator(g(2), g(4)).unwrap();
        residual_or_vacuous(&mut r, format!("{{{name}2,{name}4}}"), &a24.mat, &zero.mat, tol);
        for j in [1u8, 3] {
            for k in [2u8, 4] {
                let inner = graded_commutator(g(j), g(k)).unwrap();
                let outer = graded_commutator(g(j), &inner).unwrap();
                let word = &(g(j) * g(k)) * g(j);
                let lhs = &outer - &word.scale(&q_minus_2(q));
                residual_or_vacuous(&mut r, format!("cubic serre {name}{j}{k}"), &lhs.mat, &zero.mat, tol);
            }
        }
        for k in [2u8, 4] {
            let lhs = quartic_serre(set, q, x, k);
            let (se, sf) = quartic_serre_values(set, p, k);
            let rhs = id.scale(if x { &se } else { &sf });
            residual_or_vacuous(&mut r, format!("quartic serre {name}{k}"), &lhs.mat, &rhs.mat, tol);
        }
    }

    // Central charges.
    let c1 = &(&(set.k(1) * set.k(2)) * set.k(2)) * set.k(3);
    let c1_val = Cx::<T>::one() / (set.v.clone() * set.v.clone());
    residual_or_vacuous(&mut r, "C1 = V^-2".into(), &c1.mat, &id.scale(&c1_val).mat, tol);
    let c1a = &(&(set.k(1) * set.k(4)) * set.k(4)) * set.k(3);
    let c1a_val = set.v.clone() * set.v.clone();
    residual_or_vacuous(&mut r, "affine C1 = V^2".into(), &c1a.mat, &id.scale(&c1a_val).mat, tol);
    let (s2, s3) = quartic_serre_values(set, p, 2);
    let c2 = central_charge(set, q, true);
    let c3 = central_charge(set, q, false);
    residual_or_vacuous(&mut r, "C2 scalar".into(), &c2.mat, &id.scale(&s2).mat, tol);
    residual_or_vacuous(&mut r, "C3 scalar".into(), &c3.mat, &id.scale(&s3).mat, tol);
    let c2a = quartic_serre(set, q, true, 4);
    let c3a = quartic_serre(set, q, false, 4);
    for (name, c) in [("C1", &c1), ("C2", &c2), ("C3", &c3), ("affine C1", &c1a), ("affine C2", &c2a), ("affine C3", &c3a)] {
        let mut worst: f64 = 0.0;
        for g in Generator::ALL {
            let x = set.get(g);
            worst = worst.max(rel_residual(&(c * x).mat, &(x * c).mat));
        }
        r.check(format!("{name} central"), worst, tol);
    }

    let prod = &(&(set.k(1) * set.k(2)) * set.k(3)) * set.k(4);
    residual_or_vacuous(&mut r, "K1 K2 K3 K4 = 1".into(), &prod.mat, &id.mat, tol);
    r
}

/// Shortening, label constraints and all algebra relations for one bound state.
pub fn verify_representation<T: Real>(kin: &Kinematics<T>, p: &ModelParams<T>, tol: f64) -> Result<VerificationReport> {
    let space = build_basis(kin.m)?;
    let set = build_generators(kin, p, &space);
    let mut r = VerificationReport::new();
    r.check("shortening", kin.shortening_residual(p), tol);
    let names = ["ad", "bc", "ab", "cd", "affine ad", "affine bc", "affine ab", "affine cd"];
    for (n, v) in names.iter().zip(kin.label_constraint_residuals(p)) {
        r.check(format!("label {n}"), v, tol);
    }
    r.append(verify_algebra(&set, p, tol));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::{with_precision, BigFloat};
    use crate::kinematics::{c, RawParams};
    use crate::scalar::{cx, qnum};
    use num_complex::Complex64;

    fn raw() -> RawParams {
        RawParams {
            q: Complex64::new(1.1, 0.05),
            g: Complex64::new(0.4, 0.1),
            alpha: Complex64::new(0.6, 0.5),
            alpha_tilde: Complex64::new(0.7, 0.3),
            gamma: Complex64::new(1.3, -0.2),
            gamma_bar: Complex64::new(0.9, 0.4),
        }
    }

    fn setup(m: usize) -> (ModelParams<f64>, Kinematics<f64>, RepSpace, GeneratorSet<f64>) {
        let p = ModelParams::from_raw(&raw()).unwrap();
        let k = Kinematics::from_x_minus(m, c(0.8, 0.9), &p).unwrap();
        let s = build_basis(m).unwrap();
        let g = build_generators(&k, &p, &s);
        (p, k, s, g)
    }

    #[test]
    fn basis_sizes() {
        for (m, blocks) in [(1, [2, 0, 1, 1]), (2, [3, 1, 2, 2]), (3, [4, 2, 3, 3])] {
            let s = build_basis(m).unwrap();
            assert_eq!(s.dim(), 4 * m);
            for (a, b) in blocks.iter().enumerate() {
                assert_eq!(s.family_range(a + 1).len(), *b);
            }
        }
        assert!(build_basis(0).is_err());
        let s = build_basis(2).unwrap();
        assert_eq!(s.states[s.family_state(2, 1).unwrap()], [1, 1, 0, 0]);
        assert_eq!(s.parity(s.family_state(3, 0).unwrap()), 1);
    }

    #[test]
    fn generator_action_examples() {
        let (p, k, s, g) = setup(3);
        // E1 kills k = 0
        let i = s.index_of(&[1, 0, 0, 2]).unwrap();
        assert!((0..s.dim()).all(|r| g.e(1).mat[(r, i)] == Cx::zero()));
        // K1 eigenvalue q^{l-k}
        let j = s.index_of(&[0, 1, 1, 1]).unwrap();
        assert_eq!(g.k(1).mat[(j, j)], p.qpow(0));
        let j = s.index_of(&[0, 0, 0, 3]).unwrap();
        assert!((g.k(1).mat[(j, j)] - p.qpow(3)).norm() < 1e-15);
        // E2 |1,0,k,l> -> a (-1) [l] |1,1,k,l-1>
        let src = s.index_of(&[1, 0, 1, 1]).unwrap();
        let dst = s.index_of(&[1, 1, 1, 0]).unwrap();
        let want = -k.labels.a * qnum(&p.q, 1);
        assert!((g.e(2).mat[(dst, src)] - want).norm() < 1e-15);
    }

    #[test]
    fn graded_commutator_examples() {
        let (p, _, _, g) = setup(2);
        let sq = graded_commutator(g.e(2), g.e(2)).unwrap();
        assert!(sq.mat.max_abs() < 1e-13);
        let ef = graded_commutator(g.e(1), g.f(1)).unwrap();
        assert!(rel_residual(&ef.mat, &cross_relation_rhs(&g, &p, 1, 1).mat) < 1e-12);
        let ef = graded_commutator(g.e(2), g.f(2)).unwrap();
        let k2 = g.k(2);
        let want = (k2 - &k2.inv_diag()).scale(&(-1.0 / (p.q - 1.0 / p.q)));
        assert!(rel_residual(&ef.mat, &want.mat) < 1e-12);
        let mixed = &g.e(1).clone() + g.e(2);
        assert!(graded_commutator(&mixed, g.e(1)).is_err());
    }

    #[test]
    fn all_relations_hold_double() {
        for m in 1..=4 {
            let (p, k, _, _) = setup(m);
            let r = verify_representation(&k, &p, 1e-10).unwrap();
            let bad: Vec<_> = r.failures().map(|c| (c.name.clone(), c.residual)).collect();
            assert!(bad.is_empty(), "M={m}: {bad:?}");
        }
    }

    #[test]
    fn relations_are_roundoff_limited() {
        // The same relations at 160 bits must be far below double roundoff.
        with_precision(160, || {
            for m in [1usize, 3] {
                let p = ModelParams::<BigFloat>::from_raw(&raw()).unwrap();
                let k = Kinematics::from_x_minus(m, cx(0.8, 0.9), &p).unwrap();
                let r = verify_representation(&k, &p, 1e-30).unwrap();
                let bad: Vec<_> = r.failures().map(|c| (c.name.clone(), c.residual)).collect();
                assert!(bad.is_empty(), "M={m}: {bad:?}");
            }
        });
    }

    #[test]
    fn c2_matches_label_product() {
        let (p, k, _, g) = setup(3);
        let c2 = central_charge(&g, &p.q, true);
        let tr = c2.mat.diag().iter().sum::<Complex64>() / (g.dim() as f64);
        let ab = k.labels.a * k.labels.b * p.qnum(3);
        assert!((tr - ab).norm() < 1e-12);
        let c3 = central_charge(&g, &p.q, false);
        let tr = c3.mat.diag().iter().sum::<Complex64>() / (g.dim() as f64);
        assert!((tr - k.labels.c * k.labels.d * p.qnum(3)).norm() < 1e-12);
    }

    #[test]
    fn composite_words() {
        let (_, _, _, g) = setup(2);
        let e22 = composite_charge("E22", &g).unwrap();
        assert!(e22.mat.max_abs() < 1e-13);
        let e321 = composite_charge("E321", &g).unwrap();
        let inner = graded_commutator(g.e(2), g.e(1)).unwrap();
        let want = graded_commutator(g.e(3), &inner).unwrap();
        assert_eq!(e321.mat, want.mat);
        assert_eq!(e321.parity, Some(1));
        assert!(composite_charge("E5", &g).is_err());
        assert!(composite_charge("X12", &g).is_err());
        assert!(composite_charge("E", &g).is_err());
    }

    #[test]
    fn high_precision_generators_agree_with_double() {
        let (_, _, _, g) = setup(2);
        let gh = with_precision(192, || {
            let p = ModelParams::<BigFloat>::from_raw(&raw()).unwrap();
            let k = Kinematics::from_x_minus(2, cx(0.8, 0.9), &p).unwrap();
            let s = build_basis(2).unwrap();
            build_generators(&k, &p, &s).ops.iter().map(|o| o.to_f64()).collect::<Vec<_>>()
        });
        for (a, b) in g.ops.iter().zip(&gh) {
            assert!(rel_residual(&a.mat, &b.mat) < 1e-14);
        }
    }
}
