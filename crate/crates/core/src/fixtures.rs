//! Small hypergraphs used by tests, benches and the `check` command.

use crate::complex::{Complex, Field};
use crate::error::Result;
use crate::hypergraph::{Hypergraph, Region};
use rand::seq::SliceRandom;
use rand::Rng;

fn closed(regions: &[&[usize]]) -> Hypergraph {
    let rs: Vec<Region> = regions.iter().map(|r| Region::from(*r)).collect();
    Hypergraph::build(&rs, true, true).expect("fixture regions are valid")
}

/// The cone `{{0,1},{0},{1},∅}`.
pub fn c1() -> Hypergraph {
    closed(&[&[0, 1], &[0], &[1]])
}

/// The chain `{{0,1},{1,2},{1},∅}`.
pub fn t1() -> Hypergraph {
    closed(&[&[0, 1], &[1, 2]])
}

/// Three pairwise edges with their vertices and `∅`.
pub fn triangle() -> Hypergraph {
    closed(&[&[0, 1], &[1, 2], &[0, 2]])
}

/// The chain `0 – 1 – 2` adapted to the boundary `{2}`.
pub fn clamp_chain() -> Hypergraph {
    closed(&[&[0, 1], &[1, 2], &[2]])
}

/// An intersection-closed cover of `n` variables by random regions of size
/// 2 or 3, with `∅`.
pub fn random_closed<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Hypergraph {
    let mut regions: Vec<Region> = Vec::new();
    let mut covered = Region::empty();
    while covered.len() < n || regions.len() < 3 {
        let k = rng.gen_range(2..=3.min(n));
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(rng);
        let r = Region::new(vars[..k].iter().copied());
        if !regions.contains(&r) {
            covered = covered.union(&r);
            regions.push(r);
        }
    }
    Hypergraph::build(&regions, true, true).expect("distinct regions")
}

/// Edges of a random tree on `n` variables, closed under intersection.
pub fn random_tree_cover<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Hypergraph {
    let regions: Vec<Region> = (1..n).map(|i| Region::from([rng.gen_range(0..i), i])).collect();
    Hypergraph::build(&regions, true, true).expect("tree edges are distinct")
}

/// Potentials with entries uniform in `[-scale, scale]` on nonempty members
/// and zero on `∅`.
pub fn random_potentials<R: Rng + ?Sized>(cx: &Complex, rng: &mut R, scale: f64) -> Result<Field> {
    let mut h = cx.random(0, rng, scale)?;
    if let Some(e) = cx.hypergraph().empty_index() {
        h.get_mut(e).values_mut()[0] = 0.0;
    }
    Ok(h)
}

/// Pairwise couplings `J x_i x_j` with spins `±1` on edges and fields on
/// vertices, the other members left at zero.
pub fn ising<R: Rng + ?Sized>(cx: &Complex, rng: &mut R, coupling: f64, field: f64) -> Result<Field> {
    let mut h = cx.zeros(0)?;
    for a in 0..cx.len() {
        let vars = cx.region(a).vars().to_vec();
        let shape = cx.shape(a).clone();
        let t = h.get_mut(a);
        match vars.len() {
            1 => {
                let b = rng.gen_range(-field..=field);
                for (k, v) in t.values_mut().iter_mut().enumerate() {
                    *v = b * spin(k, shape.cards()[0]);
                }
            }
            2 => {
                let j = rng.gen_range(-coupling..=coupling);
                for (k, v) in t.values_mut().iter_mut().enumerate() {
                    let idx = shape.unravel(k);
                    *v = j * spin(idx[0], shape.cards()[0]) * spin(idx[1], shape.cards()[1]);
                }
            }
            _ => {}
        }
    }
    Ok(h)
}

fn spin(x: usize, card: usize) -> f64 {
    if card == 1 {
        return 0.0;
    }
    2.0 * x as f64 / (card - 1) as f64 - 1.0
}
