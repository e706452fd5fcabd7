#![allow(dead_code)]

use kikuchi::fixtures;
use kikuchi::model::Model;
use kikuchi::{Belief, Complex, Field, Hypergraph, Tensor};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.json"))
}

pub fn load(name: &str) -> Model {
    Model::load(&fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn binary(x: Hypergraph) -> Complex {
    Complex::uniform(x, 2).unwrap()
}

/// C1, T1, the triangle and one random closed cover of 5 variables.
pub fn algebra_fixtures() -> Vec<(&'static str, Complex)> {
    vec![
        ("C1", binary(fixtures::c1())),
        ("T1", binary(fixtures::t1())),
        ("triangle", binary(fixtures::triangle())),
        ("random5", binary(fixtures::random_closed(&mut rng(5), 5))),
    ]
}

pub fn tv(p: &Belief, q: &Belief) -> f64 {
    0.5 * p.values().iter().zip(q.values()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn max_tv(p: &[Belief], q: &[Belief]) -> f64 {
    p.iter().zip(q).map(|(a, b)| tv(a, b)).fold(0.0, f64::max)
}

/// Zeroes every component of a degree 1 or 2 field whose head is not
/// contained in member `a`.
pub fn support_in_cone(cx: &Complex, f: &mut Field, a: usize) {
    let heads: Vec<usize> = match f.degree() {
        1 => cx.edges().iter().map(|e| e.0).collect(),
        2 => cx.triples().iter().map(|t| t[0]).collect(),
        d => panic!("degree {d}"),
    };
    for (k, head) in heads.into_iter().enumerate() {
        if !cx.hypergraph().contains(a, head) {
            f.get_mut(k).values_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Matrix of a linear map of degree 0 fields built column by column.
pub fn matrix_of(cx: &Complex, in_degree: usize, op: impl Fn(&Field) -> Field) -> DMatrix<f64> {
    let mut basis = cx.zeros(in_degree).unwrap();
    let mut cols = Vec::new();
    for k in 0..basis.len() {
        for j in 0..basis.get(k).len() {
            basis.get_mut(k).values_mut()[j] = 1.0;
            cols.push(DVector::from_vec(op(&basis).flatten()));
            basis.get_mut(k).values_mut()[j] = 0.0;
        }
    }
    DMatrix::from_columns(&cols)
}

/// `min ‖A x − b‖₂`.
pub fn residual(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    complement(a, b).norm()
}

/// Component of `b` orthogonal to the columns of `a`, through an
/// orthonormal basis built with twice-iterated modified Gram–Schmidt.
pub fn complement(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let scale = a.abs().max().max(1.0);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v -= q * c;
            }
        }
        let n = v.norm();
        if n > 1e-9 * scale {
            basis.push(v / n);
        }
    }
    let mut r = b.clone();
    for _ in 0..2 {
        for q in &basis {
            let c = q.dot(&r);
            r -= q * c;
        }
    }
    r
}

/// Unflattens a vector into a field with the layout of `like`.
pub fn unflatten(like: &Field, v: &[f64]) -> Field {
    let mut out = like.clone();
    let mut i = 0;
    for t in out.values_mut() {
        let n = t.len();
        t.values_mut().copy_from_slice(&v[i..i + n]);
        i += n;
    }
    out
}

/// `S(a|b) = Σ_{x_b} p_b(x_b) S(p_{a|x_b})` by direct conditioning.
pub fn conditional_entropy_direct(p: &Belief, b: &kikuchi::Region) -> f64 {
    let pb: Tensor = p.tensor().partial_sum(b).unwrap();
    let shape = p.tensor().shape();
    let sub = shape.sub(b).unwrap();
    let map = kikuchi::tensor::projection_map(shape, &sub).unwrap();
    let mut s = 0.0;
    for (k, &v) in p.values().iter().enumerate() {
        let m = pb.values()[map[k]];
        if v > 0.0 {
            s -= v * (v / m).ln();
        }
    }
    s
}
