//! Invariant suite run against one model: algebraic identities on random
//! fields, oracle comparisons when the global space is small enough, and
//! short diffusion runs.

use crate::complex::{Complex, Field};
use crate::diffusion::{run, DivergenceMode, FluxKind, RunConfig};
use crate::energy::{bethe_entropy, consistency_defect, effective_energy, effective_gradient};
use crate::error::{Error, Result};
use crate::hypergraph::IncidenceFn;
use crate::interaction::{character_partition, homotopy, homotopy_defect, interaction_projection};
use crate::oracle::{exact_marginals, global_pass, globalize, variational_check};
use crate::tensor::{gibbs, Belief};
use crate::transforms::{mobius0, mobius1, zeta0, zeta1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Measured error; absent when skipped.
    pub value: Option<f64>,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    fn record(&mut self, name: &'static str, tol: f64, r: Result<f64>) {
        let (status, value, note) = match r {
            Ok(v) if v <= tol => (CheckStatus::Pass, Some(v), None),
            Ok(v) => (CheckStatus::Fail, Some(v), None),
            Err(
                e @ (Error::NotClosed
                | Error::SizeGuard { .. }
                | Error::DecompositionUnavailable(_)
                | Error::Precondition(_)),
            ) => (CheckStatus::Skip, None, Some(e.to_string())),
            Err(e) => (CheckStatus::Fail, None, Some(e.to_string())),
        };
        self.checks.push(CheckOutcome { name, status, value, tol, note });
    }
}

/// Random fields drawn per identity.
const SAMPLES: usize = 5;

/// Runs every check on `(cx, h)`; `seed` fixes the random fields.
pub fn check_model(cx: &Complex, h: &Field, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CheckReport::default();
    let x = cx.hypergraph();

    rep.record(
        "mobius_inversion",
        0.0,
        Ok({
            let mu = x.mobius();
            let prod = mu.convolve(&IncidenceFn::zeta(x), x);
            let unit = IncidenceFn::unit(x.len());
            let mut worst = 0i64;
            for a in 0..x.len() {
                for b in 0..x.len() {
                    worst = worst.max((prod.get(a, b) - unit.get(a, b)).abs());
                }
            }
            worst as f64
        }),
    );
    rep.record(
        "mobius_numbers",
        0.0,
        Ok({
            let c = &cx.mobius_numbers().c;
            (0..x.len()).map(|b| (x.upper_members(b).iter().map(|&a| c[a]).sum::<i64>() - 1).abs()).max().unwrap_or(0)
                as f64
        }),
    );

    let mut worst = |f: &mut dyn FnMut(&mut ChaCha8Rng) -> Result<f64>| -> Result<f64> {
        let mut w: f64 = 0.0;
        for _ in 0..SAMPLES {
            w = w.max(f(&mut rng)?);
        }
        Ok(w)
    };
    rep.record(
        "boundary_squared",
        1e-12,
        worst(&mut |r| {
            let psi = cx.random(2, r, 1.0)?;
            Ok(cx.boundary(&cx.boundary(&psi)?)?.max_abs())
        }),
    );
    rep.record(
        "differential_squared",
        1e-12,
        worst(&mut |r| {
            let q = cx.random(0, r, 1.0)?;
            Ok(cx.differential(&cx.differential(&q)?)?.max_abs())
        }),
    );
    rep.record(
        "adjointness",
        1e-12,
        worst(&mut |r| {
            let q = cx.random(0, r, 1.0)?;
            let phi = cx.random(1, r, 1.0)?;
            Ok((cx.pairing(&cx.differential(&q)?, &phi, None)? - cx.pairing(&q, &cx.boundary(&phi)?, None)?).abs())
        }),
    );
    rep.record(
        "gauss_cone",
        1e-12,
        worst(&mut |r| {
            let phi = cx.random(1, r, 1.0)?;
            let mut w: f64 = 0.0;
            for a in 0..cx.len() {
                let (lhs, rhs) = cx.gauss_cone(&phi, a)?;
                w = w.max(lhs.max_abs_diff(&rhs)?);
            }
            Ok(w)
        }),
    );
    rep.record(
        "zeta_mobius_0",
        1e-10,
        worst(&mut |r| {
            let u = cx.random(0, r, 1.0)?;
            mobius0(cx, &zeta0(cx, &u)?)?.max_abs_diff(&u)
        }),
    );
    rep.record(
        "zeta_mobius_1",
        1e-10,
        worst(&mut |r| {
            let phi = cx.random(1, r, 1.0)?;
            mobius1(cx, &zeta1(cx, &phi)?)?.max_abs_diff(&phi)
        }),
    );
    rep.record(
        "character_partition",
        0.0,
        (|| {
            let mut w = 0usize;
            for a in 0..cx.len() {
                let n: usize = character_partition(cx, a)?.groups.iter().map(|(_, g)| g.len()).sum();
                w = w.max(n.abs_diff(cx.shape(a).size()));
            }
            Ok(w as f64)
        })(),
    );
    rep.record(
        "projection_idempotent",
        1e-10,
        worst(&mut |r| {
            let p = interaction_projection(cx, &cx.random(0, r, 1.0)?)?;
            interaction_projection(cx, &p)?.max_abs_diff(&p)
        }),
    );
    rep.record(
        "projection_of_boundary",
        1e-10,
        worst(&mut |r| {
            let d = cx.boundary(&cx.random(1, r, 1.0)?)?;
            Ok(interaction_projection(cx, &d)?.max_abs())
        }),
    );
    rep.record(
        "homotopy",
        1e-12,
        worst(&mut |r| {
            let u = cx.random(0, r, 1.0)?;
            let lhs = cx.boundary(&homotopy(cx, &u)?)?;
            lhs.max_abs_diff(&u.sub(&homotopy_defect(cx, &u)?)?)
        }),
    );
    rep.record(
        "effective_energy_tower",
        1e-10,
        worst(&mut |r| {
            let big_h = cx.random(0, r, 2.0)?;
            let mut w: f64 = 0.0;
            for &[a, b, c] in cx.triples() {
                let two = effective_energy(&effective_energy(big_h.get(a), cx.region(b))?, cx.region(c))?;
                w = w.max(two.max_abs_diff(&effective_energy(big_h.get(a), cx.region(c))?)?);
            }
            Ok(w)
        }),
    );
    rep.record(
        "bethe_entropy_uniform",
        1e-12,
        (|| {
            if !x.is_closed() {
                return Err(Error::NotClosed);
            }
            let p: Vec<Belief> = cx.shapes().iter().map(Belief::uniform).collect();
            let expect: f64 = x.omega().vars().iter().map(|&v| (cx.domain().card(v).unwrap_or(1) as f64).ln()).sum();
            Ok((bethe_entropy(cx, &p) - expect).abs())
        })(),
    );

    oracle_checks(cx, h, &mut rng, &mut rep);
    diffusion_checks(cx, h, &mut rep);
    rep
}

fn oracle_checks(cx: &Complex, h: &Field, rng: &mut ChaCha8Rng, rep: &mut CheckReport) {
    let m = match globalize(cx, h) {
        Ok(m) => m,
        Err(e) => {
            let msg = e.to_string();
            for name in ["exact_consistency", "global_pass_gradient", "global_pass_gibbs", "variational"] {
                rep.checks.push(CheckOutcome {
                    name,
                    status: CheckStatus::Skip,
                    value: None,
                    tol: 0.0,
                    note: Some(msg.clone()),
                });
            }
            return;
        }
    };
    let p = exact_marginals(&m, cx);
    rep.record("exact_consistency", 1e-12, p.as_ref().map_err(clone_err).and_then(|p| consistency_defect(cx, p)));
    let pass = global_pass(&m, cx);
    rep.record(
        "global_pass_gradient",
        1e-10,
        pass.as_ref().map_err(clone_err).and_then(|(u, _)| Ok(effective_gradient(cx, u)?.max_abs())),
    );
    rep.record(
        "global_pass_gibbs",
        1e-12,
        (|| {
            let (big_u, _) = pass.as_ref().map_err(clone_err)?;
            let p = p.as_ref().map_err(clone_err)?;
            let mut w: f64 = 0.0;
            for (a, pa) in p.iter().enumerate() {
                w = w.max(gibbs(big_u.get(a)).tensor().max_abs_diff(pa.tensor())?);
            }
            Ok(w)
        })(),
    );
    let thetas: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
    rep.record(
        "variational",
        1e-10,
        variational_check(&m, 100, &thetas, rng).map(|r| {
            if r.monotone {
                (-r.min_gap).max(r.gibbs_gap).max(0.0)
            } else {
                f64::INFINITY
            }
        }),
    );
}

fn clone_err(e: &Error) -> Error {
    Error::Numeric(e.to_string())
}

fn diffusion_checks(cx: &Complex, h: &Field, rep: &mut CheckReport) {
    let x = cx.hypergraph();
    let full = RunConfig {
        step: 0.5,
        max_iters: 200,
        mode: DivergenceMode::Full,
        normalize_each_step: false,
        ..RunConfig::default()
    };
    rep.record(
        "conservation_global_sum",
        1e-10,
        (|| {
            let (_, trace) = run(cx, h, FluxKind::Canonical, &full)?;
            trace
                .entries
                .iter()
                .map(|e| {
                    e.global_sum_drift.ok_or_else(|| Error::Precondition("global space too large to monitor".into()))
                })
                .try_fold(0.0f64, |w, d| Ok(w.max(d?)))
        })(),
    );

    let normalized = RunConfig { step: 0.5, max_iters: 500, ..RunConfig::default() };
    let standard = run(cx, h, FluxKind::Standard, &normalized);
    rep.record(
        "conservation_log_beliefs",
        1e-9,
        standard.as_ref().map_err(clone_err).and_then(|(_, trace)| {
            trace
                .entries
                .iter()
                .map(|e| {
                    e.log_belief_drift.ok_or_else(|| Error::Precondition("global space too large to monitor".into()))
                })
                .try_fold(0.0f64, |w, d| Ok(w.max(d?)))
        }),
    );
    rep.record(
        "equilibrium_consistency",
        1e-8,
        standard.as_ref().map_err(clone_err).and_then(|(eq, _)| {
            if !eq.converged() {
                return Err(Error::Precondition(format!(
                    "standard run ended {:?} at residual {:e}",
                    eq.status, eq.residual
                )));
            }
            Ok(eq.consistency)
        }),
    );

    rep.record(
        "retractable_exactness",
        1e-8,
        (|| {
            let retraction = x.is_retractable();
            if !retraction.retractable {
                return Err(Error::Precondition("hypergraph is not retractable".into()));
            }
            let bound = x.diameter().value + 1;
            let cfg = RunConfig { step: 1.0, max_iters: bound, ..full.clone() };
            let (eq, _) = run(cx, h, FluxKind::Canonical, &cfg)?;
            if !eq.converged() {
                return Ok(f64::INFINITY);
            }
            let p = exact_marginals(&globalize(cx, h)?, cx)?;
            let mut w: f64 = 0.0;
            for (q, p) in eq.q.iter().zip(&p) {
                w = w.max(0.5 * q.tensor().sub(p.tensor())?.values().iter().map(|v| v.abs()).sum::<f64>());
            }
            Ok(w)
        })(),
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixtures_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for x in [fixtures::c1(), fixtures::t1(), fixtures::triangle()] {
            let cx = Complex::uniform(x, 2).unwrap();
            let h = fixtures::random_potentials(&cx, &mut rng, 1.0).unwrap();
            let rep = check_model(&cx, &h, 0);
            let bad: Vec<_> = rep.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect();
            assert!(bad.is_empty(), "{bad:#?}");
        }
    }

    #[test]
    fn non_closed_skips_transform_checks() {
        let x = crate::hypergraph::Hypergraph::build(
            &[crate::Region::from([0, 1]), crate::Region::from([1, 2]), crate::Region::from([0, 2])],
            false,
            true,
        )
        .unwrap();
        let cx = Complex::uniform(x, 2).unwrap();
        let rep = check_model(&cx, &cx.zeros(0).unwrap(), 0);
        let z = rep.checks.iter().find(|c| c.name == "zeta_mobius_1").unwrap();
        assert_eq!(z.status, CheckStatus::Skip);
    }
}
