//! Free and effective energies, entropies, Bethe functionals.

use crate::complex::{Complex, Field};
use crate::error::{Error, Result};
use crate::hypergraph::{BoundarySplit, Region};
use crate::tensor::{gibbs, inner, Belief, Observable, Tensor, LOG_FLOOR};
use crate::transforms::zeta0;
use nalgebra::{DMatrix, DVector};

/// Largest `‖dq‖∞` accepted as consistent by [`criticality_residual`].
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// `F = −θ⁻¹ ln Σ e^{−θH}`.
pub fn free_energy(h: &Observable, theta: f64) -> Result<f64> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::InvalidInput(format!("temperature parameter {theta} must be positive")));
    }
    let m = h.values().iter().fold(f64::INFINITY, |m, &v| m.min(theta * v));
    let s: f64 = h.values().iter().map(|&v| (m - theta * v).exp()).sum();
    Ok((m - s.ln()) / theta)
}

/// `F^{ba}(H) = −ln Σ^{ba} e^{−H}`.
pub fn effective_energy(h: &Observable, b: &Region) -> Result<Observable> {
    let sub = h.shape().sub(b)?;
    let map = crate::tensor::projection_map(h.shape(), &sub)?;
    Ok(h.neg_log_sum_exp_with(&sub, &map))
}

/// `D(H)_ab = H_b − F^{ba}(H_a)`.
pub fn effective_gradient(cx: &Complex, h: &Field) -> Result<Field> {
    if h.degree() != 0 {
        return Err(Error::Degree("effective gradient acts on degree 0".into()));
    }
    let values = cx.edges().iter().map(|&(a, b)| h.get(b).sub(&cx.effective(h.get(a), a, b))).collect::<Result<_>>()?;
    cx.field(1, values)
}

/// Gibbs state of every member.
pub fn gibbs_field(h: &Field) -> Vec<Belief> {
    h.values().iter().map(gibbs).collect()
}

/// Beliefs as a degree 0 density field.
pub fn belief_field(cx: &Complex, p: &[Belief]) -> Result<Field> {
    cx.field(0, p.iter().map(|b| b.tensor().clone()).collect())
}

/// `‖dq‖∞`: the largest marginal disagreement along a 1-chain.
pub fn consistency_defect(cx: &Complex, p: &[Belief]) -> Result<f64> {
    Ok(cx.differential(&belief_field(cx, p)?)?.max_abs())
}

/// `−ln p` per member, floored.
pub fn neg_log(cx: &Complex, p: &[Belief]) -> Result<Field> {
    cx.field(0, p.iter().map(|b| b.tensor().map(|v| -v.max(LOG_FLOOR).ln())).collect())
}

pub fn shannon_entropy(p: &Belief) -> f64 {
    -p.values().iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// `S(p_a | p_b) = S(p_a) − S(p_b)`.
pub fn conditional_entropy(p: &Belief, b: &Region) -> Result<f64> {
    let pb = p.tensor().partial_sum(b)?;
    let sb = -pb.values().iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>();
    Ok(shannon_entropy(p) - sb)
}

/// `I_a = Σ_{b ⊆ a} (−1)^{|b|+1} S_b`, all marginals taken from `p`.
pub fn mutual_information(p: &Belief) -> Result<f64> {
    let vars = p.region().vars();
    if vars.len() > 4 {
        return Err(Error::Precondition(format!("mutual information is limited to 4 variables, got {}", vars.len())));
    }
    let mut total = 0.0;
    for mask in 1u32..(1 << vars.len()) {
        let sub = Region::new((0..vars.len()).filter(|k| mask & (1 << k) != 0).map(|k| vars[k]));
        let m =
            Belief::new(p.tensor().partial_sum(&sub)?).or_else(|_| Belief::normalize(p.tensor().partial_sum(&sub)?))?;
        let sign = if sub.len() % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * shannon_entropy(&m);
    }
    Ok(total)
}

/// `Š = Σ_b c_b S_b(p_b)`.
pub fn bethe_entropy(cx: &Complex, p: &[Belief]) -> f64 {
    let c = &cx.mobius_numbers().c;
    p.iter().enumerate().map(|(b, q)| c[b] as f64 * shannon_entropy(q)).sum()
}

/// `F_B = Σ_b c_b (⟨p_b, H_b⟩ − S_b(p_b))`.
pub fn bethe_free_energy(cx: &Complex, p: &[Belief], h: &Field) -> Result<f64> {
    let c = &cx.mobius_numbers().c;
    let mut total = 0.0;
    for (b, q) in p.iter().enumerate() {
        if c[b] != 0 {
            total += c[b] as f64 * (inner(q.tensor(), h.get(b), None)? - shannon_entropy(q));
        }
    }
    Ok(total)
}

/// `E[fg] − E[f]E[g]` in the Gibbs state of `h`.
pub fn covariance(h: &Observable, f: &Observable, g: &Observable) -> Result<f64> {
    let p = gibbs(h);
    let ef = inner(f, &Tensor::constant(f.shape(), 1.0), Some(&p))?;
    let eg = inner(g, &Tensor::constant(g.shape(), 1.0), Some(&p))?;
    Ok(inner(f, g, Some(&p))? - ef * eg)
}

/// Dense matrix of a linear field map, column by column on the standard basis.
pub(crate) fn operator_matrix(
    cx: &Complex,
    in_degree: usize,
    op: impl Fn(&Field) -> Result<Field>,
) -> Result<DMatrix<f64>> {
    let mut basis = cx.zeros(in_degree)?;
    let cols = basis.values().iter().map(Tensor::len).sum::<usize>();
    let mut columns = Vec::with_capacity(cols);
    for k in 0..basis.len() {
        for j in 0..basis.get(k).len() {
            basis.get_mut(k).values_mut()[j] = 1.0;
            columns.push(DVector::from_vec(op(&basis)?.flatten()));
            basis.get_mut(k).values_mut()[j] = 0.0;
        }
    }
    if columns.is_empty() {
        let rows = op(&basis)?.flatten().len();
        return Ok(DMatrix::zeros(rows, 0));
    }
    Ok(DMatrix::from_columns(&columns))
}

/// Residual of the best least-squares fit `min_x ‖A x − b‖₂`, by projecting
/// onto the column space from a column-pivoted QR.
pub(crate) fn least_squares_residual(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Ok(b.norm());
    }
    // nalgebra's SVD loses accuracy on some rank-deficient incidence
    // matrices; pivoted QR does not
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let k = r.nrows().min(r.ncols());
    let top = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let rank = (0..k).take_while(|&i| r[(i, i)].abs() > 1e-10 * top.max(1.0)).count();
    let q = qr.q();
    let basis = q.columns(0, rank);
    let proj = basis * (basis.transpose() * b);
    Ok((b - proj).norm())
}

/// Distance from `−ln p − H` to the span of `ζ0(δ′φ)`. Zero exactly at
/// critical points of the Bethe free energy constrained to consistent beliefs.
pub fn criticality_residual(cx: &Complex, p: &[Belief], h: &Field) -> Result<f64> {
    let e = cx
        .hypergraph()
        .empty_index()
        .ok_or_else(|| Error::Precondition("criticality residual needs the empty region as a member".into()))?;
    if h.get(e).max_abs() > 1e-12 {
        return Err(Error::Precondition(format!("H_∅ = {} must vanish", h.get(e).values()[0])));
    }
    let defect = consistency_defect(cx, p)?;
    if defect > CONSISTENCY_TOL {
        return Err(Error::Precondition(format!("beliefs are inconsistent: ‖dq‖∞ = {defect:e}")));
    }
    let split = BoundarySplit::empty_truncation(cx.hypergraph())?;
    let a = operator_matrix(cx, 1, |phi| zeta0(cx, &cx.interior_divergence(phi, &split)?))?;
    let target = neg_log(cx, p)?.sub(h)?;
    least_squares_residual(&a, &DVector::from_vec(target.flatten()))
}
