//! Bound-state S-matrices as intertwiners of Δ and Δ^op, and the bulk
//! Yang–Baxter equation.
//!
//! Convention: `S` is an endomorphism of V₁⊗V₂ with S Δ(J) = Δ^op(J) S.
//! The braided map V₁⊗V₂ → V₂⊗V₁ is `P·S` with P the graded flip.

use crate::coalgebra::{coproduct, graded_permutation, graded_tensor, opposite_coproduct};
use crate::error::{QabError, Result};
use crate::kinematics::{reflect_kinematics, solve_shortening, Kinematics, ModelParams};
use crate::matrix::{rel_residual, CMat};
use crate::nullspace::{null_space, NullSpace, SparseRow};
use crate::representation::{build_basis, build_generators, Generator, GeneratorSet, GradedOperator, RepSpace};
use num_complex::Complex64;

/// Raising and lowering generators; the Cartan constraints are imposed by
/// restricting the unknowns to weight-preserving entries.
pub const INTERTWINER_GENERATORS: [Generator; 8] = [
    Generator::E(1),
    Generator::E(2),
    Generator::E(3),
    Generator::E(4),
    Generator::F(1),
    Generator::F(2),
    Generator::F(3),
    Generator::F(4),
];

/// Number of x⁻ perturbations tried when a point turns out degenerate.
pub const MAX_RETRIES: usize = 5;

/// Summary of the singular spectrum of an intertwiner system.
#[derive(Clone, Debug)]
pub struct NullDiagnostics {
    pub dim: usize,
    pub unknowns: usize,
    pub rows: usize,
    pub threshold: f64,
    /// The three smallest singular values relative to σ_max (ascending).
    pub smallest: Vec<f64>,
    /// Smallest singular value above the threshold, relative to σ_max.
    pub gap: f64,
}

impl NullDiagnostics {
    pub(crate) fn from(ns: &NullSpace, unknowns: usize) -> Self {
        let smax = ns.singular_values.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        NullDiagnostics {
            dim: ns.dim(),
            unknowns,
            rows: ns.rows,
            threshold: ns.threshold,
            smallest: ns.singular_values.iter().rev().take(3).map(|s| s / smax).collect(),
            gap: ns.relative_gap(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SMatrix {
    pub op: GradedOperator<f64>,
    pub kin1: Kinematics<f64>,
    pub kin2: Kinematics<f64>,
    /// Entry fixed to 1: |0,0,0,M₁⟩⊗|0,0,0,M₂⟩ → itself.
    pub anchor: (usize, usize),
    pub diagnostics: NullDiagnostics,
    /// Number of x⁻ perturbations applied before the solve succeeded.
    pub perturbations: usize,
}

impl SMatrix {
    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// P·S : V₁⊗V₂ → V₂⊗V₁.
    pub fn braided(&self) -> GradedOperator<f64> {
        let g = |m| build_basis(m).expect("m ≥ 1 for a solved S-matrix").grading;
        &graded_permutation::<f64>(&g(self.kin1.m), &g(self.kin2.m)) * &self.op
    }
}

/// Which entries of S are unknowns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ansatz {
    /// Only entries between states of equal joint weight.
    WeightPreserving,
    /// Every entry (used to show that the Cartan constraints alone force
    /// the weight-preserving pattern).
    Full,
}

fn joint_weights(s1: &RepSpace, s2: &RepSpace) -> Vec<(i64, i64)> {
    let mut w = Vec::with_capacity(s1.dim() * s2.dim());
    for i in 0..s1.dim() {
        for j in 0..s2.dim() {
            let (a, b) = (s1.weight(i), s2.weight(j));
            w.push((a.0 + b.0, a.1 + b.1));
        }
    }
    w
}

/// Unknown positions (a, b) of an `n × n` matrix and the inverse map.
pub(crate) fn unknowns(w: &[(i64, i64)], ansatz: Ansatz) -> (Vec<(usize, usize)>, Vec<Option<usize>>) {
    let n = w.len();
    let mut list = Vec::new();
    let mut index = vec![None; n * n];
    for a in 0..n {
        for b in 0..n {
            if ansatz == Ansatz::Full || w[a] == w[b] {
                index[a * n + b] = Some(list.len());
                list.push((a, b));
            }
        }
    }
    (list, index)
}

fn sparse_cols(m: &CMat<f64>) -> Vec<Vec<(usize, Complex64)>> {
    let mut cols = vec![Vec::new(); m.cols()];
    for (i, j, v) in m.nonzeros() {
        cols[j].push((i, *v));
    }
    cols
}

fn sparse_rows(m: &CMat<f64>) -> Vec<Vec<(usize, Complex64)>> {
    let mut rows = vec![Vec::new(); m.rows()];
    for (i, j, v) in m.nonzeros() {
        rows[i].push((j, *v));
    }
    rows
}

/// Rows of X·L − R·X = 0 for the given (L, R) pairs, X restricted to `index`.
pub(crate) fn commutation_rows<'a>(
    pairs: &[(CMat<f64>, CMat<f64>)],
    n: usize,
    index: &'a [Option<usize>],
) -> impl Iterator<Item = SparseRow> + 'a {
    let prepared: Vec<_> = pairs.iter().map(|(l, r)| (sparse_cols(l), sparse_rows(r))).collect();
    (0..prepared.len()).flat_map(move |t| {
        let (lcols, rrows) = &prepared[t];
        let rows: Vec<SparseRow> = (0..n * n)
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                let mut row: SparseRow = Vec::new();
                for &(b, v) in &lcols[j] {
                    if let Some(c) = index[i * n + b] {
                        row.push((c, v));
                    }
                }
                for &(a, v) in &rrows[i] {
                    if let Some(c) = index[a * n + j] {
                        row.push((c, -v));
                    }
                }
                row
            })
            .filter(|r| !r.is_empty())
            .collect();
        rows.into_iter()
    })
}

/// Null space of {S Δ(J) − Δ^op(J) S : J ∈ gens} over the chosen ansatz.
pub fn intertwiner_null_space(
    s1: &GeneratorSet<f64>,
    s2: &GeneratorSet<f64>,
    sp1: &RepSpace,
    sp2: &RepSpace,
    gens: &[Generator],
    ansatz: Ansatz,
) -> Result<(NullSpace, Vec<(usize, usize)>)> {
    let w = joint_weights(sp1, sp2);
    let n = w.len();
    let (list, index) = unknowns(&w, ansatz);
    let pairs: Vec<_> =
        gens.iter().map(|&g| (coproduct(g, s1, s2).mat, opposite_coproduct(g, s1, s2).mat)).collect();
    let ns = null_space(list.len(), commutation_rows(&pairs, n, &index))?;
    Ok((ns, list))
}

fn assemble(n: usize, list: &[(usize, usize)], v: &[Complex64]) -> CMat<f64> {
    let mut m = CMat::zeros(n, n);
    for (&(a, b), x) in list.iter().zip(v) {
        m[(a, b)] = *x;
    }
    m
}

fn sets(kin1: &Kinematics<f64>, kin2: &Kinematics<f64>, p: &ModelParams<f64>) -> Result<[(RepSpace, GeneratorSet<f64>); 2]> {
    let sp1 = build_basis(kin1.m)?;
    let sp2 = build_basis(kin2.m)?;
    let g1 = build_generators(kin1, p, &sp1);
    let g2 = build_generators(kin2, p, &sp2);
    Ok([(sp1, g1), (sp2, g2)])
}

/// Equal bound-state number and spectral parameters (to 1e−10 relative).
pub fn coinciding(kin1: &Kinematics<f64>, kin2: &Kinematics<f64>) -> bool {
    let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-10 * (1.0 + a.norm());
    kin1.m == kin2.m && close(kin1.x_plus, kin2.x_plus) && close(kin1.x_minus, kin2.x_minus)
}

/// Null-space dimension of the intertwiner system for a generator subset.
pub fn null_dimension(
    kin1: &Kinematics<f64>,
    kin2: &Kinematics<f64>,
    p: &ModelParams<f64>,
    gens: &[Generator],
) -> Result<NullDiagnostics> {
    let [(sp1, g1), (sp2, g2)] = sets(kin1, kin2, p)?;
    let (ns, list) = intertwiner_null_space(&g1, &g2, &sp1, &sp2, gens, Ansatz::WeightPreserving)?;
    Ok(NullDiagnostics::from(&ns, list.len()))
}

/// The unique (up to scale) intertwiner, anchored at S[0,0] = 1. Fails with
/// [`QabError::NullDimension`] at degenerate points.
pub fn solve_intertwiner(kin1: &Kinematics<f64>, kin2: &Kinematics<f64>, p: &ModelParams<f64>) -> Result<SMatrix> {
    if coinciding(kin1, kin2) {
        // S is then proportional to the graded flip; the null space stays
        // one-dimensional, so the point has to be caught explicitly.
        return Err(QabError::NonGeneric("coinciding kinematics".into()));
    }
    let [(sp1, g1), (sp2, g2)] = sets(kin1, kin2, p)?;
    let (ns, list) = intertwiner_null_space(&g1, &g2, &sp1, &sp2, &INTERTWINER_GENERATORS, Ansatz::WeightPreserving)?;
    if ns.dim() != 1 {
        return Err(QabError::NullDimension { dim: ns.dim(), expected: 1 });
    }
    let n = sp1.dim() * sp2.dim();
    let mut mat = assemble(n, &list, &ns.basis[0]);
    let anchor = mat[(0, 0)];
    if anchor.norm() < 1e-12 * mat.max_abs() {
        return Err(QabError::Inconsistent("S-matrix anchor element vanishes".into()));
    }
    mat = mat.scale(&(1.0 / anchor));
    let grading = crate::coalgebra::tensor_grading(&sp1.grading, &sp2.grading);
    Ok(SMatrix {
        op: GradedOperator::endo(mat, 0, grading),
        kin1: kin1.clone(),
        kin2: kin2.clone(),
        anchor: (0, 0),
        diagnostics: NullDiagnostics::from(&ns, list.len()),
        perturbations: 0,
    })
}

/// Deterministic x⁻ shift number `attempt` (≥ 1): 10⁻³·e^{iθ} with
/// golden-angle phases. x⁺ follows the shortening root nearest to the old one.
pub fn perturb_kinematics(kin: &Kinematics<f64>, p: &ModelParams<f64>, attempt: usize) -> Result<Kinematics<f64>> {
    let theta = attempt as f64 * std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let xm = kin.x_minus + Complex64::from_polar(1e-3, theta);
    let roots = solve_shortening(&xm, kin.m, p)?.roots;
    let xp = if (roots[0] - kin.x_plus).norm() <= (roots[1] - kin.x_plus).norm() { roots[0] } else { roots[1] };
    Kinematics::new(kin.m, xp, xm, p)
}

/// Run `f` on the kinematics, perturbing x⁻ of every leg on degenerate
/// points (null dimension ≠ 1 or coinciding legs), up to [`MAX_RETRIES`] times. Returns the
/// result and the number of perturbations used.
pub fn with_retry<R>(
    kins: &[Kinematics<f64>],
    p: &ModelParams<f64>,
    f: impl Fn(&[Kinematics<f64>]) -> Result<R>,
) -> Result<(R, usize)> {
    let mut last = None;
    for attempt in 0..=MAX_RETRIES {
        let ks: Vec<Kinematics<f64>> = if attempt == 0 {
            kins.to_vec()
        } else {
            kins.iter().enumerate().map(|(i, k)| perturb_kinematics(k, p, attempt * kins.len() + i)).collect::<Result<_>>()?
        };
        match f(&ks) {
            Ok(r) => return Ok((r, attempt)),
            Err(e @ (QabError::NullDimension { .. } | QabError::NonGeneric(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// [`solve_intertwiner`] with the degeneracy retry policy.
pub fn solve_intertwiner_with_retry(
    kin1: &Kinematics<f64>,
    kin2: &Kinematics<f64>,
    p: &ModelParams<f64>,
) -> Result<SMatrix> {
    let (mut s, n) = with_retry(&[kin1.clone(), kin2.clone()], p, |k| solve_intertwiner(&k[0], &k[1], p))?;
    s.perturbations = n;
    Ok(s)
}

/// S for a pair with either leg optionally sent through the reflection map,
/// e.g. S_{1 2̲} = `s_at(k1, k2, false, true)`.
pub fn s_at(
    kin1: &Kinematics<f64>,
    kin2: &Kinematics<f64>,
    p: &ModelParams<f64>,
    reflect1: bool,
    reflect2: bool,
) -> Result<SMatrix> {
    let leg = |k: &Kinematics<f64>, r: bool| if r { reflect_kinematics(k, p) } else { Ok(k.clone()) };
    solve_intertwiner(&leg(kin1, reflect1)?, &leg(kin2, reflect2)?, p)
}

/// ‖S Δ(J) − Δ^op(J) S‖ (relative) for each of the twelve generators.
pub fn intertwining_residuals(s: &SMatrix, p: &ModelParams<f64>) -> Result<Vec<(Generator, f64)>> {
    let [(_, g1), (_, g2)] = sets(&s.kin1, &s.kin2, p)?;
    Ok(Generator::ALL
        .iter()
        .map(|&g| {
            let l = &s.op * &coproduct(g, &g1, &g2);
            let r = &opposite_coproduct(g, &g1, &g2) * &s.op;
            (g, rel_residual(&l.mat, &r.mat))
        })
        .collect())
}

fn eye(m: usize) -> GradedOperator<f64> {
    GradedOperator::identity(build_basis(m).expect("m ≥ 1").grading)
}

/// S₁₂S₁₃S₂₃ versus S₂₃S₁₃S₁₂ on V₁⊗V₂⊗V₃.
pub fn ybe_residual(kins: [&Kinematics<f64>; 3], p: &ModelParams<f64>) -> Result<f64> {
    let [k1, k2, k3] = kins;
    let s12 = solve_intertwiner(k1, k2, p)?.op;
    let s13 = solve_intertwiner(k1, k3, p)?.op;
    let s23 = solve_intertwiner(k2, k3, p)?.op;
    let (i1, i2, i3) = (eye(k1.m), eye(k2.m), eye(k3.m));
    let a12 = graded_tensor(&s12, &i3)?;
    let a23 = graded_tensor(&i1, &s23)?;
    let p23 = graded_tensor(&i1, &graded_permutation(&i2.dom, &i3.dom))?;
    let p32 = graded_tensor(&i1, &graded_permutation(&i3.dom, &i2.dom))?;
    let a13 = &(&p32 * &graded_tensor(&s13, &i2)?) * &p23;
    let lhs = &(&a12 * &a13) * &a23;
    let rhs = &(&a23 * &a13) * &a12;
    Ok(rel_residual(&lhs.mat, &rhs.mat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{c, reflect_with_gamma, RawParams};

    fn params() -> ModelParams<f64> {
        ModelParams::from_raw(&RawParams {
            q: Complex64::new(1.1, 0.05),
            g: Complex64::new(0.4, 0.1),
            alpha: Complex64::new(0.6, 0.5),
            alpha_tilde: Complex64::new(0.7, 0.3),
            gamma: Complex64::new(1.3, -0.2),
            gamma_bar: Complex64::new(0.9, 0.4),
        })
        .unwrap()
    }

    fn kin(m: usize, xm: Complex64, p: &ModelParams<f64>) -> Kinematics<f64> {
        Kinematics::from_x_minus(m, xm, p).unwrap()
    }

    const X1: (f64, f64) = (0.8, 0.9);
    const X2: (f64, f64) = (-0.5, 1.3);
    const X3: (f64, f64) = (1.4, -0.3);

    #[test]
    fn fundamental_s_matrix_is_unique_intertwiner() {
        let p = params();
        let s = solve_intertwiner(&kin(1, c(X1.0, X1.1), &p), &kin(1, c(X2.0, X2.1), &p), &p).unwrap();
        assert_eq!(s.dim(), 16);
        assert_eq!(s.diagnostics.dim, 1);
        assert_eq!(s.diagnostics.unknowns, 36);
        assert_eq!(s.op.mat[(0, 0)], c(1.0, 0.0));
        for (g, r) in intertwining_residuals(&s, &p).unwrap() {
            assert!(r < 1e-10, "{g}: {r:e}");
        }
    }

    #[test]
    fn unknown_counts_match_weight_sectors() {
        let p = params();
        for ((m1, m2), want) in [((1, 2), 104), ((2, 2), 346)] {
            let d = null_dimension(&kin(m1, c(X1.0, X1.1), &p), &kin(m2, c(X2.0, X2.1), &p), &p, &INTERTWINER_GENERATORS)
                .unwrap();
            assert_eq!(d.unknowns, want);
            assert_eq!(d.dim, 1);
        }
    }

    #[test]
    fn cartan_constraints_force_weight_pattern() {
        let p = params();
        let (k1, k2) = (kin(1, c(X1.0, X1.1), &p), kin(1, c(X2.0, X2.1), &p));
        let [(sp1, g1), (sp2, g2)] = sets(&k1, &k2, &p).unwrap();
        let ks: Vec<Generator> = (1..=4).map(Generator::K).collect();
        let (ns, list) = intertwiner_null_space(&g1, &g2, &sp1, &sp2, &ks, Ansatz::Full).unwrap();
        assert_eq!(list.len(), 256);
        assert_eq!(ns.dim(), 36);
        let w = joint_weights(&sp1, &sp2);
        for v in &ns.basis {
            for (&(a, b), x) in list.iter().zip(v) {
                if w[a] != w[b] {
                    assert!(x.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bound_state_s_matrix_and_affine_ablation() {
        let p = params();
        let (k1, k2) = (kin(2, c(X1.0, X1.1), &p), kin(1, c(X2.0, X2.1), &p));
        let s = solve_intertwiner(&k1, &k2, &p).unwrap();
        assert_eq!(s.dim(), 32);
        for (g, r) in intertwining_residuals(&s, &p).unwrap() {
            assert!(r < 1e-10, "{g}: {r:e}");
        }
        let finite: Vec<Generator> =
            INTERTWINER_GENERATORS.iter().copied().filter(|g| g.node() != 4).collect();
        let (a, b) = (kin(2, c(X1.0, X1.1), &p), kin(2, c(X2.0, X2.1), &p));
        assert_eq!(null_dimension(&a, &b, &p, &finite).unwrap().dim, 2);
    }

    #[test]
    fn yang_baxter() {
        let p = params();
        for ms in [[1, 1, 1], [2, 1, 1]] {
            let ks = [kin(ms[0], c(X1.0, X1.1), &p), kin(ms[1], c(X2.0, X2.1), &p), kin(ms[2], c(X3.0, X3.1), &p)];
            let r = ybe_residual([&ks[0], &ks[1], &ks[2]], &p).unwrap();
            assert!(r < 1e-8, "{ms:?}: {r:e}");
        }
    }

    #[test]
    fn coinciding_kinematics_flagged() {
        let p = params();
        let a = kin(1, c(X1.0, X1.1), &p);
        let b = kin(1, c(X2.0, X2.1), &p);
        let err = ybe_residual([&b, &a, &a], &p).unwrap_err();
        assert!(matches!(err, QabError::NonGeneric(_)), "{err}");
        // the system itself stays non-degenerate there: S ∝ P
        let d = null_dimension(&a, &a, &p, &INTERTWINER_GENERATORS).unwrap();
        assert_eq!(d.dim, 1);
        // the retry policy moves off the degenerate point
        let s = solve_intertwiner_with_retry(&a, &a, &p).unwrap();
        assert!(s.perturbations >= 1);
    }

    #[test]
    fn reflected_variants_and_double_reflection() {
        let p = params();
        let (k1, k2) = (kin(1, c(X1.0, X1.1), &p), kin(2, c(X2.0, X2.1), &p));
        let s = solve_intertwiner(&k1, &k2, &p).unwrap();
        for (r1, r2) in [(false, true), (true, false), (true, true)] {
            let v = s_at(&k1, &k2, &p, r1, r2).unwrap();
            assert_eq!(v.op.mat[(0, 0)], c(1.0, 0.0));
            for (g, r) in intertwining_residuals(&v, &p).unwrap() {
                assert!(r < 1e-10, "{g}: {r:e}");
            }
        }
        let v = s_at(&k1, &k2, &p, false, true).unwrap();
        let z2 = reflect_kinematics(&k2, &p).unwrap().z;
        assert!((z2 * k2.z - 1.0).norm() < 1e-12);
        assert!((v.kin2.z - z2).norm() < 1e-14);
        let back = |k: &Kinematics<f64>| {
            let r = reflect_kinematics(k, &p).unwrap();
            reflect_with_gamma(&r, &p, p.gamma).unwrap()
        };
        let twice = solve_intertwiner(&back(&k1), &back(&k2), &p).unwrap();
        assert!(rel_residual(&twice.op.mat, &s.op.mat) < 1e-10);
    }
}
