//! Zeta and Möbius transforms in degrees 0 and 1.

use crate::complex::{Complex, Field};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `U_a = Σ_{b ⊆ a} u_b`.
pub fn zeta0(cx: &Complex, u: &Field) -> Result<Field> {
    expect(u, 0)?;
    let x = cx.hypergraph();
    let values = (0..cx.len())
        .map(|a| {
            let mut t = Tensor::zeros(cx.shape(a));
            for &b in x.cone_members(a) {
                t.add_assign(&cx.extend(u.get(b), b, a))?;
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    cx.field(0, values)
}

/// `u_a = Σ_{b ⊆ a} μ_ab U_b`.
pub fn mobius0(cx: &Complex, big_u: &Field) -> Result<Field> {
    expect(big_u, 0)?;
    let x = cx.hypergraph();
    let mu = cx.mobius();
    let values = (0..cx.len())
        .map(|a| {
            let mut t = Tensor::zeros(cx.shape(a));
            for &b in x.cone_members(a) {
                let m = mu.get(a, b);
                if m != 0 {
                    t.axpy(m as f64, &cx.extend(big_u.get(b), b, a))?;
                }
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    cx.field(0, values)
}

fn expect(f: &Field, p: usize) -> Result<()> {
    if f.degree() != p {
        return Err(Error::Degree(format!("expected a degree {p} field, got degree {}", f.degree())));
    }
    Ok(())
}

fn require_closed(cx: &Complex) -> Result<()> {
    if !cx.hypergraph().is_closed() {
        return Err(Error::NotClosed);
    }
    Ok(())
}

/// Flux from `Λ^a ∖ Λ^b` into `Λ^b`:
/// `ζ(φ)_ab = Σ_{b' ∈ Λ^a ∖ Λ^b} Σ_{c' ∈ Λ^b, c' ⊊ b'} φ_{b'c'}`.
pub fn zeta1(cx: &Complex, phi: &Field) -> Result<Field> {
    expect(phi, 1)?;
    require_closed(cx)?;
    let x = cx.hypergraph();
    let values = cx
        .edges()
        .iter()
        .map(|&(a, b)| {
            let mut t = Tensor::zeros(cx.shape(b));
            for &bp in x.cone_members(a) {
                if x.contains(b, bp) {
                    continue;
                }
                for &cp in x.cone_members(b) {
                    if let Some(k) = cx.edge_index(bp, cp) {
                        t.add_assign(&cx.extend(phi.get(k), cp, b))?;
                    }
                }
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    cx.field(1, values)
}

/// Inverse of [`zeta1`] by the two-stage recursion
/// `μ(Φ)_{a0 a1} = Σ_{b1 ⊆ a1} μ_{a1 b1} Σ_{b0 ∈ Λ^{a0} ∖ Λ^{b1}} μ_{a0 b0} Φ_{b0, b0∩b1}`.
pub fn mobius1(cx: &Complex, big_phi: &Field) -> Result<Field> {
    expect(big_phi, 1)?;
    require_closed(cx)?;
    let x = cx.hypergraph();
    let mu = cx.mobius();
    let n = cx.len();
    // ν_{a0}(Φ)_{b1} depends only on (a0, b1); memoize across edges
    let mut nu: Vec<Option<Tensor>> = vec![None; n * n];
    let mut values = Vec::with_capacity(cx.edges().len());
    for &(a0, a1) in cx.edges() {
        let mut t = Tensor::zeros(cx.shape(a1));
        for &b1 in x.cone_members(a1) {
            let m1 = mu.get(a1, b1);
            if m1 == 0 {
                continue;
            }
            if nu[a0 * n + b1].is_none() {
                let mut s = Tensor::zeros(cx.shape(b1));
                for &b0 in x.cone_members(a0) {
                    let m0 = mu.get(a0, b0);
                    if m0 == 0 || x.contains(b1, b0) {
                        continue;
                    }
                    let c = cx.meet(b0, b1).ok_or(Error::NotClosed)?;
                    let k = cx.edge_index(b0, c).expect("b0 ⊄ b1 makes (b0, b0∩b1) a chain");
                    s.axpy(m0 as f64, &cx.extend(big_phi.get(k), c, b1))?;
                }
                nu[a0 * n + b1] = Some(s);
            }
            let s = nu[a0 * n + b1].as_ref().unwrap();
            t.axpy(m1 as f64, &cx.extend(s, b1, a1))?;
        }
        values.push(t);
    }
    cx.field(1, values)
}

/// Degree-dispatching zeta transform.
pub fn zeta(cx: &Complex, f: &Field) -> Result<Field> {
    match f.degree() {
        0 => zeta0(cx, f),
        1 => zeta1(cx, f),
        p => Err(Error::Degree(format!("no zeta transform in degree {p}"))),
    }
}

/// Degree-dispatching Möbius transform.
pub fn mobius(cx: &Complex, f: &Field) -> Result<Field> {
    match f.degree() {
        0 => mobius0(cx, f),
        1 => mobius1(cx, f),
        p => Err(Error::Degree(format!("no Möbius transform in degree {p}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conjugation {
    /// `T^ζ = ζ ∘ T ∘ μ`
    Zeta,
    /// `T^μ = μ ∘ T ∘ ζ`
    Mobius,
}

/// Conjugates a field operator by the zeta or Möbius transform.
pub fn conjugate<'a, T>(cx: &'a Complex, op: T, kind: Conjugation) -> impl Fn(&Field) -> Result<Field> + 'a
where
    T: Fn(&Field) -> Result<Field> + 'a,
{
    move |f| match kind {
        Conjugation::Zeta => zeta(cx, &op(&mobius(cx, f)?)?),
        Conjugation::Mobius => mobius(cx, &op(&zeta(cx, f)?)?),
    }
}
