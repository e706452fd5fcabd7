//! Dense real tensors over finite configuration spaces.
//!
//! Storage is row-major over the region's variables sorted ascending, the
//! smallest id varying slowest. The empty region has a single configuration.

use crate::error::{Error, Result};
use crate::hypergraph::Region;
use std::collections::BTreeMap;

/// Entries below this are treated as zero inside logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

/// Per-variable cardinalities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Domain {
    cards: BTreeMap<usize, usize>,
}

impl Domain {
    pub fn new<I: IntoIterator<Item = (usize, usize)>>(cards: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, c) in cards {
            if c == 0 || c > 1 << 16 {
                return Err(Error::InvalidInput(format!("variable {v} has cardinality {c}")));
            }
            if map.insert(v, c).is_some() {
                return Err(Error::InvalidInput(format!("variable {v} declared twice")));
            }
        }
        Ok(Domain { cards: map })
    }

    /// Every variable of `region` with the same cardinality.
    pub fn uniform(region: &Region, card: usize) -> Self {
        Domain { cards: region.vars().iter().map(|&v| (v, card)).collect() }
    }

    pub fn card(&self, var: usize) -> Option<usize> {
        self.cards.get(&var).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cards.iter().map(|(&v, &c)| (v, c))
    }

    pub fn shape(&self, region: &Region) -> Result<Shape> {
        let cards = region
            .vars()
            .iter()
            .map(|v| {
                self.card(*v).ok_or_else(|| Error::InvalidInput(format!("variable {v} has no declared cardinality")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Shape { vars: region.clone(), cards })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    vars: Region,
    cards: Vec<usize>,
}

impl Shape {
    pub fn new(vars: Region, cards: Vec<usize>) -> Result<Self> {
        if vars.len() != cards.len() || cards.contains(&0) {
            return Err(Error::ShapeMismatch(format!("{vars} with cardinalities {cards:?}")));
        }
        Ok(Shape { vars, cards })
    }

    pub fn scalar() -> Self {
        Shape { vars: Region::empty(), cards: Vec::new() }
    }

    pub fn region(&self) -> &Region {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn size(&self) -> usize {
        self.cards.iter().product()
    }

    pub fn card_of(&self, var: usize) -> Option<usize> {
        self.vars.vars().iter().position(|&v| v == var).map(|k| self.cards[k])
    }

    /// Restriction of the shape to a subregion.
    pub fn sub(&self, b: &Region) -> Result<Shape> {
        if !b.is_subset(&self.vars) {
            return Err(Error::NotSubset(b.clone(), self.vars.clone()));
        }
        let cards = b.vars().iter().map(|v| self.card_of(*v).unwrap()).collect();
        Ok(Shape { vars: b.clone(), cards })
    }

    /// Multi-index of a flat position.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.cards.len()];
        for k in (0..self.cards.len()).rev() {
            idx[k] = flat % self.cards[k];
            flat /= self.cards[k];
        }
        idx
    }
}

/// For each configuration of `from`, the flat index of its restriction to
/// `to`. Requires `to ⊆ from` with matching cardinalities.
pub fn projection_map(from: &Shape, to: &Shape) -> Result<Vec<usize>> {
    if !to.vars.is_subset(&from.vars) {
        return Err(Error::NotSubset(to.vars.clone(), from.vars.clone()));
    }
    let mut to_strides = vec![0usize; to.cards.len()];
    let mut s = 1;
    for k in (0..to.cards.len()).rev() {
        to_strides[k] = s;
        s *= to.cards[k];
    }
    let mut strides = Vec::with_capacity(from.cards.len());
    for (k, &v) in from.vars.vars().iter().enumerate() {
        match to.vars.vars().iter().position(|&w| w == v) {
            Some(j) => {
                if to.cards[j] != from.cards[k] {
                    return Err(Error::ShapeMismatch(format!(
                        "variable {v} has cardinality {} vs {}",
                        from.cards[k], to.cards[j]
                    )));
                }
                strides.push(to_strides[j]);
            }
            None => strides.push(0),
        }
    }
    let n = from.size();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; from.cards.len()];
    let mut cur = 0usize;
    for _ in 0..n {
        out.push(cur);
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            cur += strides[k];
            if idx[k] < from.cards[k] {
                break;
            }
            cur -= strides[k] * idx[k];
            idx[k] = 0;
        }
    }
    Ok(out)
}

/// A real function on a configuration space. Observables and densities
/// share this storage; the pairing between them is the counting sum.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Shape,
    values: Vec<f64>,
}

pub type Observable = Tensor;
pub type Density = Tensor;

impl Tensor {
    pub fn new(shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.size() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a table of size {} on {}",
                values.len(),
                shape.size(),
                shape.vars
            )));
        }
        Ok(Tensor { shape, values })
    }

    pub fn zeros(shape: &Shape) -> Self {
        Tensor { values: vec![0.0; shape.size()], shape: shape.clone() }
    }

    pub fn constant(shape: &Shape, c: f64) -> Self {
        Tensor { values: vec![c; shape.size()], shape: shape.clone() }
    }

    pub fn scalar(c: f64) -> Self {
        Tensor { shape: Shape::scalar(), values: vec![c] }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn region(&self) -> &Region {
        &self.shape.vars
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { shape: self.shape.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    fn check_same(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("{} vs {}", self.shape.vars, other.shape.vars)));
        }
        Ok(())
    }

    pub fn zip(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.check_same(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, |a, b| a - b)
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn axpy(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Tensor {
        self.map(|v| v * s)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Spread `max − min`; zero exactly for constant tensors.
    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Cylindrical extension `j_{ab}` of an observable on `b` to `a ⊇ b`.
    pub fn extend(&self, a: &Shape) -> Result<Tensor> {
        let map = projection_map(a, &self.shape)?;
        Ok(self.extend_with(a, &map))
    }

    pub(crate) fn extend_with(&self, a: &Shape, map: &[usize]) -> Tensor {
        Tensor { shape: a.clone(), values: map.iter().map(|&j| self.values[j]).collect() }
    }

    /// Partial summation `Σ^{ba}` onto a subregion `b`.
    pub fn partial_sum(&self, b: &Region) -> Result<Tensor> {
        let sub = self.shape.sub(b)?;
        let map = projection_map(&self.shape, &sub)?;
        Ok(self.partial_sum_with(&sub, &map))
    }

    pub(crate) fn partial_sum_with(&self, b: &Shape, map: &[usize]) -> Tensor {
        let mut out = vec![0.0; b.size()];
        for (v, &j) in self.values.iter().zip(map) {
            out[j] += v;
        }
        Tensor { shape: b.clone(), values: out }
    }

    /// Max-shifted `−ln Σ^{ba} e^{−H}` onto `b`.
    pub(crate) fn neg_log_sum_exp_with(&self, b: &Shape, map: &[usize]) -> Tensor {
        let mut lo = vec![f64::INFINITY; b.size()];
        for (v, &j) in self.values.iter().zip(map) {
            if *v < lo[j] {
                lo[j] = *v;
            }
        }
        let mut acc = vec![0.0; b.size()];
        for (v, &j) in self.values.iter().zip(map) {
            acc[j] += (lo[j] - v).exp();
        }
        let values = lo.iter().zip(&acc).map(|(m, s)| m - s.ln()).collect();
        Tensor { shape: b.clone(), values }
    }
}

/// A strictly positive density summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief(Tensor);

impl Belief {
    pub fn new(t: Tensor) -> Result<Self> {
        if t.values.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::Numeric(format!("belief on {} has a non-positive entry", t.region())));
        }
        let s = t.sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Numeric(format!("belief on {} sums to {s}", t.region())));
        }
        Ok(Belief(t))
    }

    /// Rescales a positive density to unit mass.
    pub fn normalize(t: Tensor) -> Result<Self> {
        let s = t.sum();
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::Numeric(format!("cannot normalize a density of mass {s}")));
        }
        Belief::new(t.scale(1.0 / s))
    }

    pub fn uniform(shape: &Shape) -> Self {
        Belief(Tensor::constant(shape, 1.0 / shape.size() as f64))
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn region(&self) -> &Region {
        self.0.region()
    }
}

/// Gibbs state `e^{−H} / Σ e^{−H}`, max-shifted.
pub fn gibbs(h: &Observable) -> Belief {
    let m = h.min();
    let w = h.map(|v| (m - v).exp());
    let s = w.sum();
    let mut t = w.scale(1.0 / s);
    for v in t.values_mut() {
        if *v <= 0.0 {
            *v = f64::MIN_POSITIVE;
        }
    }
    Belief(t)
}

/// Gibbs-weighted conditional expectation `E^{ba}[f]` onto `b`.
pub fn conditional_expectation(h: &Observable, f: &Observable, b: &Region) -> Result<Observable> {
    if h.shape() != f.shape() {
        return Err(Error::ShapeMismatch(format!("{} vs {}", h.region(), f.region())));
    }
    let sub = h.shape().sub(b)?;
    let map = projection_map(h.shape(), &sub)?;
    Ok(conditional_expectation_with(h, f, &sub, &map))
}

pub(crate) fn conditional_expectation_with(h: &Observable, f: &Observable, b: &Shape, map: &[usize]) -> Observable {
    // shift per output cell so every fibre has a weight-one entry
    let mut lo = vec![f64::INFINITY; b.size()];
    for (v, &j) in h.values().iter().zip(map) {
        lo[j] = lo[j].min(*v);
    }
    let mut num = vec![0.0; b.size()];
    let mut den = vec![0.0; b.size()];
    for ((hv, fv), &j) in h.values().iter().zip(f.values()).zip(map) {
        let w = (lo[j] - hv).exp();
        num[j] += w * fv;
        den[j] += w;
    }
    let values = num.iter().zip(&den).map(|(n, d)| n / d).collect();
    Tensor { shape: b.clone(), values }
}

/// Counting inner product `Σ u·v`, or `E_p[u·v]` when a weight is given.
pub fn inner(u: &Observable, v: &Observable, weight: Option<&Belief>) -> Result<f64> {
    u.check_same(v)?;
    match weight {
        None => Ok(u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum()),
        Some(p) => {
            u.check_same(p.tensor())?;
            Ok(u.values.iter().zip(&v.values).zip(p.values()).map(|((a, b), w)| a * b * w).sum())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(vars: &[usize], card: usize) -> Shape {
        Shape::new(Region::from(vars), vec![card; vars.len()]).unwrap()
    }

    fn t(vars: &[usize], values: &[f64]) -> Tensor {
        Tensor::new(shape(vars, 2), values.to_vec()).unwrap()
    }

    #[test]
    fn extend_slowest_first() {
        let u = t(&[1], &[1.0, 2.0]);
        let e = u.extend(&shape(&[0, 1], 2)).unwrap();
        assert_eq!(e.values(), &[1.0, 2.0, 1.0, 2.0]);
        let w = t(&[0], &[1.0, 2.0]).extend(&shape(&[0, 1], 2)).unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn extend_scalar_is_constant() {
        let e = Tensor::scalar(3.5).extend(&shape(&[0, 2], 3)).unwrap();
        assert!(e.values().iter().all(|&v| v == 3.5));
        assert_eq!(e.len(), 9);
    }

    #[test]
    fn extend_is_functorial() {
        let u = t(&[1], &[0.3, -1.2]);
        let mid = u.extend(&shape(&[0, 1], 2)).unwrap();
        let top = shape(&[0, 1, 2], 2);
        assert_eq!(mid.extend(&top).unwrap(), u.extend(&top).unwrap());
    }

    #[test]
    fn extend_rejects_non_subset_and_bad_cards() {
        let u = t(&[3], &[1.0, 2.0]);
        assert!(matches!(u.extend(&shape(&[0, 1], 2)), Err(Error::NotSubset(..))));
        assert!(matches!(u.extend(&shape(&[3], 3)), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn partial_sum_columns() {
        let w = t(&[0, 1], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(w.partial_sum(&Region::from([1])).unwrap().values(), &[4.0, 6.0]);
        assert_eq!(w.partial_sum(&Region::from([0])).unwrap().values(), &[3.0, 7.0]);
        assert_eq!(w.partial_sum(&Region::from([0, 1])).unwrap(), w);
        assert_eq!(w.partial_sum(&Region::empty()).unwrap().values(), &[10.0]);
    }

    #[test]
    fn gibbs_closed_forms() {
        let p = gibbs(&t(&[0], &[0.0, 3f64.ln()]));
        assert!((p.values()[0] - 0.75).abs() < 1e-15);
        assert!((p.values()[1] - 0.25).abs() < 1e-15);
        let u = gibbs(&Tensor::constant(&shape(&[0, 1], 3), 4.2));
        assert!(u.values().iter().all(|&v| (v - 1.0 / 9.0).abs() < 1e-15));
        let big = gibbs(&t(&[0], &[0.0, 700.0]));
        assert!((big.values()[0] - 1.0).abs() < 1e-15);
        assert!((big.values()[1] - (-700f64).exp()).abs() < 1e-310);
    }

    #[test]
    fn conditional_expectation_cases() {
        let zero = Tensor::zeros(&shape(&[0, 1], 2));
        let f = t(&[0, 1], &[1.0, 2.0, 3.0, 4.0]);
        let e = conditional_expectation(&zero, &f, &Region::from([1])).unwrap();
        assert_eq!(e.values(), &[2.0, 3.0]);
        let g = t(&[1], &[5.0, -1.0]);
        let h = t(&[0, 1], &[0.1, 0.7, -0.4, 1.3]);
        let ge = g.extend(h.shape()).unwrap();
        let back = conditional_expectation(&h, &ge, &Region::from([1])).unwrap();
        assert!(back.max_abs_diff(&g).unwrap() < 1e-15);
        let same = conditional_expectation(&h, &f, &Region::from([0, 1])).unwrap();
        assert!(same.max_abs_diff(&f).unwrap() < 1e-15);
    }

    #[test]
    fn inner_products() {
        let one = t(&[0], &[1.0, 1.0]);
        assert_eq!(inner(&one, &one, None).unwrap(), 2.0);
        let pm = t(&[0], &[1.0, -1.0]);
        let uni = Belief::uniform(pm.shape());
        assert!((inner(&pm, &pm, Some(&uni)).unwrap() - 1.0).abs() < 1e-15);
        assert!(inner(&one, &t(&[1], &[1.0, 1.0]), None).is_err());
    }

    #[test]
    fn belief_validation() {
        assert!(Belief::new(t(&[0], &[0.5, 0.5])).is_ok());
        assert!(Belief::new(t(&[0], &[1.0, 0.0])).is_err());
        assert!(Belief::new(t(&[0], &[0.6, 0.6])).is_err());
        assert!(Belief::normalize(t(&[0], &[2.0, 6.0])).is_ok());
    }
}
