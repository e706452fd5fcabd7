//! Interaction decomposition through discrete Fourier characters.
//!
//! A wave vector `k` on `E_a ≅ ∏ Z/N_j` belongs to the member closing its
//! support. Projections keep the modes of one group.

use crate::complex::{Complex, Field};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Allowed imaginary residue after an inverse transform.
const REAL_RESIDUE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterPartition {
    /// Member index of the region being decomposed.
    pub region: usize,
    /// `(b, wave vectors)` for each `b ∈ Λ^a`, in member order. Wave vectors
    /// are flat indices into `E_a`.
    pub groups: Vec<(usize, Vec<usize>)>,
}

impl CharacterPartition {
    pub fn group(&self, b: usize) -> Option<&[usize]> {
        self.groups.iter().find(|(m, _)| *m == b).map(|(_, g)| g.as_slice())
    }
}

pub fn character_partition(cx: &Complex, a: usize) -> Result<CharacterPartition> {
    let x = cx.hypergraph();
    if !x.is_closed() {
        return Err(Error::NotClosed);
    }
    let shape = cx.shape(a);
    let vars = shape.region().vars();
    let mut groups: Vec<(usize, Vec<usize>)> = x.cone_members(a).iter().map(|&b| (b, Vec::new())).collect();
    for k in 0..shape.size() {
        let idx = shape.unravel(k);
        let support = crate::hypergraph::Region::new(idx.iter().zip(vars).filter(|(&i, _)| i != 0).map(|(_, &v)| v));
        let b = x.closure_index(&support).map_err(|_| Error::DecompositionUnavailable(support.clone()))?;
        match groups.iter_mut().find(|(m, _)| *m == b) {
            Some((_, g)) => g.push(k),
            None => return Err(Error::DecompositionUnavailable(support)),
        }
    }
    Ok(CharacterPartition { region: a, groups })
}

/// In-place multidimensional DFT with `e^{sign·2πi k·x/N}` kernels.
fn dft(data: &mut [Complex64], cards: &[usize], sign: f64) {
    let mut inner = 1;
    for k in (0..cards.len()).rev() {
        let n = cards[k];
        if n > 1 {
            let roots: Vec<Complex64> =
                (0..n).map(|j| Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / n as f64)).collect();
            let block = n * inner;
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for start in (0..data.len()).step_by(block) {
                for off in 0..inner {
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = data[start + off + j * inner];
                    }
                    for f in 0..n {
                        let mut s = Complex64::new(0.0, 0.0);
                        for (j, l) in line.iter().enumerate() {
                            s += l * roots[(f * j) % n];
                        }
                        data[start + off + f * inner] = s;
                    }
                }
            }
        }
        inner *= n;
    }
}

/// Component of `u` (on member `a`) in the interaction subspace of `b`,
/// as an observable on `a`.
pub fn project_interaction(cx: &Complex, u: &Tensor, a: usize, b: usize) -> Result<Tensor> {
    let part = character_partition(cx, a)?;
    project_with(&part, cx, u, b)
}

fn project_with(part: &CharacterPartition, cx: &Complex, u: &Tensor, b: usize) -> Result<Tensor> {
    let a = part.region;
    if u.shape() != cx.shape(a) {
        return Err(Error::ShapeMismatch(format!("table on {} projected inside {}", u.region(), cx.region(a))));
    }
    let group = part.group(b).ok_or_else(|| Error::NotSubset(cx.region(b).clone(), cx.region(a).clone()))?;
    let cards = cx.shape(a).cards();
    let mut data: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft(&mut data, cards, -1.0);
    let mut kept = vec![Complex64::new(0.0, 0.0); data.len()];
    for &k in group {
        kept[k] = data[k];
    }
    dft(&mut kept, cards, 1.0);
    let n = data.len() as f64;
    let scale = u.max_abs().max(1.0);
    let mut out = Vec::with_capacity(kept.len());
    for z in kept {
        if z.im.abs() / n > REAL_RESIDUE * scale {
            return Err(Error::Numeric(format!("interaction projection left an imaginary residue {}", z.im / n)));
        }
        out.push(z.re / n);
    }
    Tensor::new(cx.shape(a).clone(), out)
}

/// The projection `P : A_0(X) → Z_0(X)`, `P(u)_b = Σ_{a ⊇ b} P^{ba}(u_a)`,
/// each component stored on `b`.
pub fn interaction_projection(cx: &Complex, u: &Field) -> Result<Field> {
    if u.degree() != 0 {
        return Err(Error::Degree("interaction projection acts on degree 0".into()));
    }
    let x = cx.hypergraph();
    let mut out = cx.zeros(0)?;
    for a in 0..cx.len() {
        let part = character_partition(cx, a)?;
        for &b in x.cone_members(a) {
            let p = project_with(&part, cx, u.get(a), b)?;
            let fibre = (cx.shape(a).size() / cx.shape(b).size()) as f64;
            out.get_mut(b).axpy(1.0 / fibre, &cx.marginal(&p, a, b))?;
        }
    }
    Ok(out)
}

/// `Σ_a u_a` as an observable on `Ω`.
pub fn global_sum(cx: &Complex, u: &Field) -> Result<Tensor> {
    if u.degree() != 0 {
        return Err(Error::Degree("global sum acts on degree 0".into()));
    }
    let omega = cx.domain().shape(cx.hypergraph().omega())?;
    let mut h = Tensor::zeros(&omega);
    for t in u.values() {
        h.add_assign(&t.extend(&omega)?)?;
    }
    Ok(h)
}

/// Two potentials are homologous when their global sums agree.
pub fn homologous(cx: &Complex, u: &Field, v: &Field, tol: f64) -> Result<bool> {
    Ok(global_sum(cx, u)?.max_abs_diff(&global_sum(cx, v)?)? < tol)
}

/// The homotopy `η(u)_ab = c_a u_b`, satisfying `δη = 1 − C` in degree 0.
pub fn homotopy(cx: &Complex, u: &Field) -> Result<Field> {
    if u.degree() != 0 {
        return Err(Error::Degree("homotopy acts on degree 0".into()));
    }
    let c = &cx.mobius_numbers().c;
    let values = cx.edges().iter().map(|&(a, b)| u.get(b).scale(c[a] as f64)).collect();
    cx.field(1, values)
}

/// `C(u)_a = c_a Σ_{b ⊆ a} u_b`.
pub fn homotopy_defect(cx: &Complex, u: &Field) -> Result<Field> {
    let z = crate::transforms::zeta0(cx, u)?;
    let c = &cx.mobius_numbers().c;
    let values = z.values().iter().enumerate().map(|(a, t)| t.scale(c[a] as f64)).collect();
    cx.field(0, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{Hypergraph, Region};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cx(regions: &[&[usize]], close: bool, empty: bool, card: usize) -> Complex {
        let rs: Vec<Region> = regions.iter().map(|r| Region::from(*r)).collect();
        Complex::uniform(Hypergraph::build(&rs, close, empty).unwrap(), card).unwrap()
    }

    fn sizes(p: &CharacterPartition, c: &Complex) -> Vec<(Region, usize)> {
        p.groups.iter().map(|(b, g)| (c.region(*b).clone(), g.len())).collect()
    }

    #[test]
    fn partition_full_power_set() {
        let c = cx(&[&[0], &[1]], true, true, 2);
        let top = Hypergraph::build(&[Region::from([0, 1]), Region::from([0]), Region::from([1])], true, true).unwrap();
        let c2 = Complex::uniform(top, 2).unwrap();
        let p = character_partition(&c2, 0).unwrap();
        assert!(sizes(&p, &c2).iter().all(|(_, n)| *n == 1));
        let e = c.hypergraph().empty_index().unwrap();
        let pe = character_partition(&c, e).unwrap();
        assert_eq!(pe.groups, vec![(e, vec![0])]);
    }

    #[test]
    fn partition_without_singleton() {
        let c = cx(&[&[0, 1], &[1]], true, true, 2);
        let p = character_partition(&c, 0).unwrap();
        assert_eq!(sizes(&p, &c), vec![(Region::from([0, 1]), 2), (Region::from([1]), 1), (Region::empty(), 1)]);
    }

    #[test]
    fn trivial_character_without_empty_region() {
        let c = cx(&[&[0, 1], &[1]], true, false, 2);
        let p = character_partition(&c, 0).unwrap();
        assert_eq!(sizes(&p, &c), vec![(Region::from([0, 1]), 2), (Region::from([1]), 2)]);
        let open = cx(&[&[0, 1], &[1, 2], &[0]], false, false, 2);
        assert!(matches!(character_partition(&open, 0), Err(Error::NotClosed)));
    }

    #[test]
    fn projections_complete_and_anova() {
        let top = Hypergraph::build(&[Region::from([0, 1]), Region::from([0]), Region::from([1])], true, true).unwrap();
        let c = Complex::uniform(top, 2).unwrap();
        let u = Tensor::new(c.shape(0).clone(), vec![1.0, 4.0, -2.0, 0.5]).unwrap();
        let mut total = Tensor::zeros(c.shape(0));
        for &b in c.hypergraph().cone_members(0) {
            total.add_assign(&project_interaction(&c, &u, 0, b).unwrap()).unwrap();
        }
        assert!(total.max_abs_diff(&u).unwrap() < 1e-12);
        // two-way interaction: u − row means − column means + grand mean
        let v = u.values();
        let grand = v.iter().sum::<f64>() / 4.0;
        let row = [(v[0] + v[1]) / 2.0, (v[2] + v[3]) / 2.0];
        let col = [(v[0] + v[2]) / 2.0, (v[1] + v[3]) / 2.0];
        let expect: Vec<f64> = (0..4).map(|k| v[k] - row[k / 2] - col[k % 2] + grand).collect();
        let p = project_interaction(&c, &u, 0, 0).unwrap();
        for (a, b) in p.values().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let k = Tensor::constant(c.shape(0), 2.5);
        let e = c.hypergraph().empty_index().unwrap();
        assert!(project_interaction(&c, &k, 0, e).unwrap().max_abs_diff(&k).unwrap() < 1e-12);
        assert!(project_interaction(&c, &k, 0, 0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn ternary_projection_is_real() {
        let c = cx(&[&[0, 1], &[1, 2]], true, true, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = c.random(0, &mut rng, 1.0).unwrap();
        let p = interaction_projection(&c, &u).unwrap();
        let pp = interaction_projection(&c, &p).unwrap();
        assert!(p.max_abs_diff(&pp).unwrap() < 1e-10);
    }

    #[test]
    fn projection_kills_boundaries() {
        let c = cx(&[&[0, 1], &[1, 2], &[0, 2]], true, true, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = c.random(1, &mut rng, 1.0).unwrap();
        let d = c.boundary(&phi).unwrap();
        assert!(interaction_projection(&c, &d).unwrap().max_abs() < 1e-10);
        let u = c.random(0, &mut rng, 1.0).unwrap();
        let v = u.add(&d).unwrap();
        assert!(homologous(&c, &u, &v, 1e-9).unwrap());
        assert!(homologous(&c, &u, &u, 1e-9).unwrap());
    }

    #[test]
    fn homotopy_identity() {
        let c = cx(&[&[0, 1], &[1, 2], &[0, 2]], true, true, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = c.random(0, &mut rng, 1.0).unwrap();
        let lhs = c.boundary(&homotopy(&c, &u).unwrap()).unwrap();
        let rhs = u.sub(&homotopy_defect(&c, &u).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn global_sum_by_hand() {
        let c = cx(&[&[0, 1], &[1]], false, false, 2);
        let u = c
            .field(
                0,
                vec![
                    Tensor::new(c.shape(0).clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
                    Tensor::new(c.shape(1).clone(), vec![10.0, 20.0]).unwrap(),
                ],
            )
            .unwrap();
        assert_eq!(global_sum(&c, &u).unwrap().values(), &[11.0, 22.0, 13.0, 24.0]);
    }
}
