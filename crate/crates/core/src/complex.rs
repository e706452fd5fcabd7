//! Fields on the nerve, the boundary `δ`, the differential `d`, the Gibbs
//! gradient `∇`, and interior divergence.
//!
//! A field of degree `p` holds one tensor per non-degenerate `p`-chain, living
//! on the chain's terminal region. Chains are indexed in nerve order.

use crate::error::{Error, Result};
use crate::hypergraph::{BoundarySplit, Chain, Hypergraph, IncidenceFn, MobiusNumbers, Region};
use crate::tensor::{conditional_expectation_with, projection_map, Belief, Domain, Shape, Tensor};
use rand::Rng;
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    degree: usize,
    values: Vec<Tensor>,
}

/// Densities share the storage of observables.
pub type DensityField = Field;

impl Field {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[Tensor] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Tensor] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Tensor> {
        self.values
    }

    pub fn get(&self, i: usize) -> &Tensor {
        &self.values[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Tensor {
        &mut self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_same(&self, other: &Field) -> Result<()> {
        if self.degree != other.degree || self.values.len() != other.values.len() {
            return Err(Error::Degree(format!(
                "fields of degree {} ({} chains) and {} ({} chains)",
                self.degree,
                self.values.len(),
                other.degree,
                other.values.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(Field { degree: self.degree, values })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        Ok(Field { degree: self.degree, values })
    }

    pub fn axpy(&mut self, alpha: f64, other: &Field) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a.axpy(alpha, b)?;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Field {
        Field { degree: self.degree, values: self.values.iter().map(|t| t.scale(s)).collect() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> Field {
        Field { degree: self.degree, values: self.values.iter().map(|t| t.map(f)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, t| m.max(t.max_abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.check_same(other)?;
        let mut m: f64 = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            m = m.max(a.max_abs_diff(b)?);
        }
        Ok(m)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(Tensor::is_finite)
    }

    /// All entries in one vector, chain after chain.
    pub fn flatten(&self) -> Vec<f64> {
        self.values.iter().flat_map(|t| t.values().iter().copied()).collect()
    }

    /// Squared counting norm.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().flat_map(|t| t.values()).map(|v| v * v).sum()
    }
}

/// A hypergraph together with variable cardinalities and the index data
/// needed by field operators.
#[derive(Clone, Debug)]
pub struct Complex {
    x: Hypergraph,
    domain: Domain,
    shapes: Vec<Shape>,
    edges: Vec<(usize, usize)>,
    edge_index: HashMap<(usize, usize), usize>,
    triples: Vec<[usize; 3]>,
    triple_index: HashMap<[usize; 3], usize>,
    /// `proj[a * n + b]`: projection from `E_a` to `E_b` for `a ⊇ b`.
    proj: Vec<Option<Vec<usize>>>,
    mu: IncidenceFn,
    numbers: MobiusNumbers,
    /// `meet[a * n + b]`: member index of `a ∩ b` when it is a member.
    meet: Vec<Option<usize>>,
}

impl Complex {
    pub fn new(x: Hypergraph, domain: Domain) -> Result<Self> {
        let shapes = x.regions().iter().map(|r| domain.shape(r)).collect::<Result<Vec<_>>>()?;
        let edges: Vec<(usize, usize)> = x.nerve(1).iter().map(|c| (c.0[0], c.0[1])).collect();
        let edge_index = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let triples: Vec<[usize; 3]> = x.nerve(2).iter().map(|c| [c.0[0], c.0[1], c.0[2]]).collect();
        let triple_index = triples.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let n = x.len();
        let mut proj = vec![None; n * n];
        for a in 0..n {
            for &b in x.cone_members(a) {
                proj[a * n + b] = Some(projection_map(&shapes[a], &shapes[b])?);
            }
        }
        let mu = x.mobius();
        let numbers = x.mobius_numbers();
        let mut meet = vec![None; n * n];
        for a in 0..n {
            for b in 0..n {
                meet[a * n + b] = x.index_of(&x.region(a).intersection(x.region(b)));
            }
        }
        Ok(Complex { x, domain, shapes, edges, edge_index, triples, triple_index, proj, mu, numbers, meet })
    }

    /// Every variable of `x` with the same cardinality.
    pub fn uniform(x: Hypergraph, card: usize) -> Result<Self> {
        let domain = Domain::uniform(x.omega(), card);
        Complex::new(x, domain)
    }

    pub fn hypergraph(&self) -> &Hypergraph {
        &self.x
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn region(&self, a: usize) -> &Region {
        self.x.region(a)
    }

    pub fn shape(&self, a: usize) -> &Shape {
        &self.shapes[a]
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn mobius(&self) -> &IncidenceFn {
        &self.mu
    }

    pub fn mobius_numbers(&self) -> &MobiusNumbers {
        &self.numbers
    }

    /// Member index of `a ∩ b`, if it is a member.
    pub fn meet(&self, a: usize, b: usize) -> Option<usize> {
        self.meet[a * self.len() + b]
    }

    /// Non-degenerate 1-chains `(a, b)`, `a ⊋ b`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a, b)).copied()
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    pub fn triple_index(&self, t: [usize; 3]) -> Option<usize> {
        self.triple_index.get(&t).copied()
    }

    /// The chains of degree `p` (members, edges, triples) as `Chain`s.
    pub fn chains(&self, p: usize) -> Vec<Chain> {
        match p {
            0 => (0..self.len()).map(|a| Chain(vec![a])).collect(),
            1 => self.edges.iter().map(|&(a, b)| Chain(vec![a, b])).collect(),
            2 => self.triples.iter().map(|t| Chain(t.to_vec())).collect(),
            _ => self.x.nerve(p),
        }
    }

    fn terminals(&self, p: usize) -> Result<Vec<usize>> {
        match p {
            0 => Ok((0..self.len()).collect()),
            1 => Ok(self.edges.iter().map(|e| e.1).collect()),
            2 => Ok(self.triples.iter().map(|t| t[2]).collect()),
            _ => Err(Error::Degree(format!("fields of degree {p} are not supported"))),
        }
    }

    pub(crate) fn proj(&self, a: usize, b: usize) -> &[usize] {
        self.proj[a * self.len() + b]
            .as_deref()
            .unwrap_or_else(|| panic!("no projection from member {a} to member {b}"))
    }

    /// Extension of a tensor on member `b` to member `a ⊇ b`.
    pub fn extend(&self, t: &Tensor, b: usize, a: usize) -> Tensor {
        t.extend_with(&self.shapes[a], self.proj(a, b))
    }

    /// Partial sum of a tensor on member `a` down to member `b ⊆ a`.
    pub fn marginal(&self, t: &Tensor, a: usize, b: usize) -> Tensor {
        t.partial_sum_with(&self.shapes[b], self.proj(a, b))
    }

    /// Effective energy `F^{ba}(H) = −ln Σ^{ba} e^{−H}` between members.
    pub fn effective(&self, h: &Tensor, a: usize, b: usize) -> Tensor {
        h.neg_log_sum_exp_with(&self.shapes[b], self.proj(a, b))
    }

    /// Conditional expectation `E^{ba}[f]` in the Gibbs state of `h`.
    pub fn expectation(&self, h: &Tensor, f: &Tensor, a: usize, b: usize) -> Tensor {
        conditional_expectation_with(h, f, &self.shapes[b], self.proj(a, b))
    }

    pub fn zeros(&self, p: usize) -> Result<Field> {
        let values = self.terminals(p)?.into_iter().map(|b| Tensor::zeros(&self.shapes[b])).collect();
        Ok(Field { degree: p, values })
    }

    /// Builds a field, checking every value against its chain's terminal shape.
    pub fn field(&self, p: usize, values: Vec<Tensor>) -> Result<Field> {
        let terms = self.terminals(p)?;
        if terms.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "degree {p} field needs {} values, got {}",
                terms.len(),
                values.len()
            )));
        }
        for (k, (b, v)) in terms.iter().zip(&values).enumerate() {
            if v.shape() != &self.shapes[*b] {
                return Err(Error::ShapeMismatch(format!(
                    "chain {k} expects a table on {}, got one on {}",
                    self.region(*b),
                    v.region()
                )));
            }
        }
        Ok(Field { degree: p, values })
    }

    /// A field with independent uniform entries in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(&self, p: usize, rng: &mut R, scale: f64) -> Result<Field> {
        let mut f = self.zeros(p)?;
        for t in f.values_mut() {
            for v in t.values_mut() {
                *v = rng.gen_range(-scale..=scale);
            }
        }
        Ok(f)
    }

    /// Field that is the constant `c[a]` on each member.
    pub fn constants(&self, c: &[f64]) -> Result<Field> {
        self.field(0, (0..self.len()).map(|a| Tensor::constant(&self.shapes[a], c[a])).collect())
    }

    fn expect_degree(f: &Field, p: usize) -> Result<()> {
        if f.degree != p {
            return Err(Error::Degree(format!("expected a degree {p} field, got degree {}", f.degree)));
        }
        Ok(())
    }

    /// The boundary `δ`, lowering degree by one.
    pub fn boundary(&self, f: &Field) -> Result<Field> {
        match f.degree {
            1 => self.boundary1(f),
            2 => self.boundary2(f),
            0 => Err(Error::Degree("the boundary of a degree 0 field is undefined".into())),
            p => Err(Error::Degree(format!("fields of degree {p} are not supported"))),
        }
    }

    /// `(δφ)_b = Σ_{a⊋b} φ_ab − Σ_{b⊋c} φ_bc`, the second sum extended to `b`.
    pub fn boundary1(&self, phi: &Field) -> Result<Field> {
        Self::expect_degree(phi, 1)?;
        let mut out = self.zeros(0)?;
        for (&(a, b), v) in self.edges.iter().zip(&phi.values) {
            out.values[b].add_assign(v)?;
            let e = self.extend(v, b, a);
            out.values[a].axpy(-1.0, &e)?;
        }
        Ok(out)
    }

    pub fn boundary2(&self, psi: &Field) -> Result<Field> {
        Self::expect_degree(psi, 2)?;
        let mut out = self.zeros(1)?;
        for (&[a0, a1, a2], v) in self.triples.iter().zip(&psi.values) {
            out.values[self.edge_index[&(a1, a2)]].add_assign(v)?;
            out.values[self.edge_index[&(a0, a2)]].axpy(-1.0, v)?;
            let e = self.extend(v, a2, a1);
            out.values[self.edge_index[&(a0, a1)]].add_assign(&e)?;
        }
        Ok(out)
    }

    /// The differential `d`, dual to `δ` under the counting pairing.
    pub fn differential(&self, q: &Field) -> Result<Field> {
        match q.degree {
            0 => {
                let values = self
                    .edges
                    .iter()
                    .map(|&(a, b)| q.values[b].sub(&self.marginal(&q.values[a], a, b)))
                    .collect::<Result<_>>()?;
                Ok(Field { degree: 1, values })
            }
            1 => {
                let values = self
                    .triples
                    .iter()
                    .map(|&[a0, a1, a2]| {
                        let mut t = q.values[self.edge_index[&(a1, a2)]].sub(&q.values[self.edge_index[&(a0, a2)]])?;
                        t.add_assign(&self.marginal(&q.values[self.edge_index[&(a0, a1)]], a1, a2))?;
                        Ok(t)
                    })
                    .collect::<Result<_>>()?;
                Ok(Field { degree: 2, values })
            }
            p => Err(Error::Degree(format!("differential of degree {p} is not supported"))),
        }
    }

    /// `∇(f)_ab = f_b − E^{ba}[f_a]`, expectations in the Gibbs state of `H_a`.
    pub fn nabla(&self, h: &Field, f: &Field) -> Result<Field> {
        Self::expect_degree(h, 0)?;
        Self::expect_degree(f, 0)?;
        let values = self
            .edges
            .iter()
            .map(|&(a, b)| f.values[b].sub(&self.expectation(&h.values[a], &f.values[a], a, b)))
            .collect::<Result<_>>()?;
        Ok(Field { degree: 1, values })
    }

    /// `δφ` with every boundary member zeroed.
    pub fn interior_divergence(&self, phi: &Field, split: &BoundarySplit) -> Result<Field> {
        let mut d = self.boundary1(phi)?;
        for &b in &split.boundary {
            for v in d.values[b].values_mut() {
                *v = 0.0;
            }
        }
        Ok(d)
    }

    /// Splits `φ` into interior chains and outbound chains (terminal on the boundary).
    pub fn flux_split(&self, phi: &Field, split: &BoundarySplit) -> Result<(Field, Field)> {
        Self::expect_degree(phi, 1)?;
        let mut int = phi.clone();
        let mut out = phi.clone();
        for (k, &(_, b)) in self.edges.iter().enumerate() {
            let kill = if split.is_boundary[b] { &mut int } else { &mut out };
            for v in kill.values[k].values_mut() {
                *v = 0.0;
            }
        }
        Ok((int, out))
    }

    /// Both sides of the Gauss formula on the cone of member `a`, as
    /// observables on `a`.
    pub fn gauss_cone(&self, phi: &Field, a: usize) -> Result<(Tensor, Tensor)> {
        let d = self.boundary1(phi)?;
        let mut lhs = Tensor::zeros(&self.shapes[a]);
        for &b in self.x.cone_members(a) {
            lhs.add_assign(&self.extend(&d.values[b], b, a))?;
        }
        let mut rhs = Tensor::zeros(&self.shapes[a]);
        for (ap, bp) in self.x.coboundary_of(a) {
            let k = self.edge_index[&(ap, bp)];
            rhs.add_assign(&self.extend(&phi.values[k], bp, a))?;
        }
        Ok((lhs, rhs))
    }

    /// Counting pairing between fields of the same degree, or the `p`-metric
    /// when beliefs per member are given (degree 1 uses the terminal belief).
    pub fn pairing(&self, f: &Field, g: &Field, p: Option<&[Belief]>) -> Result<f64> {
        f.check_same(g)?;
        let terms = self.terminals(f.degree)?;
        let mut s = 0.0;
        for (k, (u, v)) in f.values.iter().zip(&g.values).enumerate() {
            s += crate::tensor::inner(u, v, p.map(|p| &p[terms[k]]))?;
        }
        Ok(s)
    }

    /// The sub-complex on the cone `Λ^a`, with its index map into `self`.
    pub fn cone(&self, a: usize) -> Result<(Complex, Vec<usize>)> {
        let (sub, map) = self.x.restrict(self.x.cone_members(a));
        Ok((Complex::new(sub, self.domain.clone())?, map))
    }

    /// Restriction of a degree 0 or 1 field to a sub-complex given by its
    /// member map.
    pub fn restrict_field(&self, f: &Field, sub: &Complex, map: &[usize]) -> Result<Field> {
        let values = match f.degree {
            0 => map.iter().map(|&a| f.values[a].clone()).collect(),
            1 => sub
                .edges
                .iter()
                .map(|&(a, b)| {
                    self.edge_index(map[a], map[b])
                        .map(|k| f.values[k].clone())
                        .ok_or_else(|| Error::InvalidInput("sub-complex edge missing from ambient complex".into()))
                })
                .collect::<Result<_>>()?,
            p => return Err(Error::Degree(format!("cannot restrict a degree {p} field"))),
        };
        sub.field(f.degree, values)
    }
}
