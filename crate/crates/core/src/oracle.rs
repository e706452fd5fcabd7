//! Brute-force inference on the global configuration space.

use crate::complex::{Complex, Field};
use crate::energy::{free_energy, shannon_entropy};
use crate::error::{Error, Result};
use crate::interaction::global_sum;
use crate::tensor::{gibbs, inner, Belief, Shape, Tensor};
use crate::transforms::mobius0;
use rand::Rng;

/// Largest global state space the oracle will enumerate.
pub const GLOBAL_LIMIT: u128 = 1 << 22;

#[derive(Clone, Debug)]
pub struct GlobalModel {
    h: Tensor,
}

/// Size of `E_Ω`, refused above [`GLOBAL_LIMIT`].
pub fn guard(cx: &Complex) -> Result<Shape> {
    let omega = cx.domain().shape(cx.hypergraph().omega())?;
    let size: u128 = omega.cards().iter().map(|&c| c as u128).product();
    if size > GLOBAL_LIMIT {
        return Err(Error::SizeGuard { size, limit: GLOBAL_LIMIT });
    }
    Ok(omega)
}

impl GlobalModel {
    pub fn new(h: Tensor) -> Result<Self> {
        let size = h.len() as u128;
        if size > GLOBAL_LIMIT {
            return Err(Error::SizeGuard { size, limit: GLOBAL_LIMIT });
        }
        Ok(GlobalModel { h })
    }

    pub fn hamiltonian(&self) -> &Tensor {
        &self.h
    }

    pub fn gibbs(&self) -> Belief {
        gibbs(&self.h)
    }

    /// `F^Ω(H_Ω)`.
    pub fn free_energy(&self) -> f64 {
        free_energy(&self.h, 1.0).expect("unit temperature")
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.gibbs())
    }

    /// `⟨p, H_Ω⟩ − S(p)` for any density on `Ω`.
    pub fn variational_free_energy(&self, p: &Belief) -> Result<f64> {
        Ok(inner(p.tensor(), &self.h, None)? - shannon_entropy(p))
    }
}

/// `H_Ω = Σ_a h_a`.
pub fn globalize(cx: &Complex, h: &Field) -> Result<GlobalModel> {
    guard(cx)?;
    GlobalModel::new(global_sum(cx, h)?)
}

/// Marginals of the global Gibbs state on every member.
pub fn exact_marginals(m: &GlobalModel, cx: &Complex) -> Result<Vec<Belief>> {
    let p = m.gibbs();
    (0..cx.len())
        .map(|a| {
            let t = p.tensor().partial_sum(cx.region(a))?;
            Belief::new(t.clone()).or_else(|_| Belief::normalize(t))
        })
        .collect()
}

/// `U*_a = F^{aΩ}(H_Ω)` and `u* = μ·U*`.
pub fn global_pass(m: &GlobalModel, cx: &Complex) -> Result<(Field, Field)> {
    let values = (0..cx.len()).map(|a| crate::energy::effective_energy(&m.h, cx.region(a))).collect::<Result<_>>()?;
    let big_u = cx.field(0, values)?;
    let u = mobius0(cx, &big_u)?;
    Ok((big_u, u))
}

#[derive(Clone, Debug)]
pub struct VariationalReport {
    /// Smallest `F_G(p) − F^Ω` over the random densities; nonnegative when
    /// the Gibbs state is the minimizer.
    pub min_gap: f64,
    /// `|F_G(gibbs) − F^Ω|`.
    pub gibbs_gap: f64,
    /// `E_θ[H_Ω]` over the temperature grid.
    pub energies: Vec<(f64, f64)>,
    pub monotone: bool,
}

impl VariationalReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.min_gap >= -tol && self.gibbs_gap < tol && self.monotone
    }
}

/// Checks the Gibbs variational principle on random densities and the
/// monotonicity of the mean energy along inverse temperatures.
pub fn variational_check<R: Rng + ?Sized>(
    m: &GlobalModel,
    samples: usize,
    thetas: &[f64],
    rng: &mut R,
) -> Result<VariationalReport> {
    let f = m.free_energy();
    let mut min_gap = f64::INFINITY;
    for _ in 0..samples {
        let w: Vec<f64> = (0..m.h.len()).map(|_| rng.gen_range(1e-3..1.0)).collect();
        let p = Belief::normalize(Tensor::new(m.h.shape().clone(), w)?)?;
        min_gap = min_gap.min(m.variational_free_energy(&p)? - f);
    }
    let gibbs_gap = (m.variational_free_energy(&m.gibbs())? - f).abs();
    let mut energies = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let p = gibbs(&m.h.scale(theta));
        energies.push((theta, inner(p.tensor(), &m.h, None)?));
    }
    let mut sorted = energies.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    Ok(VariationalReport { min_gap, gibbs_gap, energies, monotone })
}
