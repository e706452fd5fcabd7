//! Diffusion fluxes and their Euler integrators.
//!
//! Potentials `u` evolve by `u ← u + λ Δ(flux(u))` where `Δ` is the boundary
//! `δ`, its truncation at `∅`, or the interior divergence. With the standard
//! flux at `λ = 1` this is generalized belief propagation.

use crate::complex::{Complex, Field};
use crate::energy::{consistency_defect, effective_gradient, gibbs_field};
use crate::error::{Error, Result};
use crate::hypergraph::{BoundarySplit, Region};
use crate::interaction::global_sum;
use crate::oracle::GLOBAL_LIMIT;
use crate::tensor::{Belief, Tensor, LOG_FLOOR};
use crate::transforms::{mobius0, mobius1, zeta0};
use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Residuals above this count as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxKind {
    Standard,
    Normalized,
    Canonical,
}

impl std::str::FromStr for FluxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(FluxKind::Standard),
            "normalized" => Ok(FluxKind::Normalized),
            "canonical" => Ok(FluxKind::Canonical),
            _ => Err(Error::InvalidInput(format!("unknown flux kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceMode {
    /// Full boundary `δ`.
    Full,
    /// `δ′`: the component on `∅` dropped.
    Truncated,
    /// `δ̊` with potentials on boundary members held fixed.
    Interior { boundary: Region },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub step: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub mode: DivergenceMode,
    pub normalize_each_step: bool,
    pub record_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            step: 1.0,
            tol: 1e-10,
            max_iters: 1000,
            mode: DivergenceMode::Truncated,
            normalize_each_step: true,
            record_trace: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidInput(format!("step {} outside (0, 1]", self.step)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidInput(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }

    fn split(&self, cx: &Complex) -> Result<Option<BoundarySplit>> {
        match &self.mode {
            DivergenceMode::Full => Ok(None),
            DivergenceMode::Truncated => BoundarySplit::empty_truncation(cx.hypergraph()).map(Some),
            DivergenceMode::Interior { boundary } => cx.hypergraph().boundary_split(boundary).map(Some),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// `‖Δ flux(u)‖∞` before the step.
    pub residual: f64,
    /// `‖Σ_a u_a − Σ_a h_a‖∞`, when the global space is small enough.
    pub global_sum_drift: Option<f64>,
    /// Drift of `Σ_a c_a ln q_a` after removing its mean over `E_Ω`.
    pub log_belief_drift: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).map_err(|e| Error::Numeric(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub u: Field,
    pub q: Vec<Belief>,
    pub status: RunStatus,
    /// Euler steps taken.
    pub iterations: usize,
    pub residual: f64,
    /// `‖dq‖∞`.
    pub consistency: f64,
}

impl Equilibrium {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// The flux of the given kind at potentials `u`.
pub fn flux(cx: &Complex, u: &Field, kind: FluxKind) -> Result<Field> {
    let big_u = zeta0(cx, u)?;
    let phi = effective_gradient(cx, &big_u)?.scale(-1.0);
    match kind {
        FluxKind::Standard => Ok(phi),
        FluxKind::Normalized => {
            let e = cx
                .hypergraph()
                .empty_index()
                .ok_or_else(|| Error::Precondition("normalized flux needs the empty region as a member".into()))?;
            let mu = cx.mobius();
            let mut out = phi.clone();
            for a in 0..cx.len() {
                let Some(k) = cx.edge_index(a, e) else { continue };
                let mut t = Tensor::zeros(cx.shape(e));
                for &b in cx.hypergraph().cone_members(a) {
                    if let Some(kb) = cx.edge_index(b, e) {
                        t.axpy(mu.get(a, b) as f64, phi.get(kb))?;
                    }
                }
                *out.get_mut(k) = t;
            }
            Ok(out)
        }
        FluxKind::Canonical => mobius1(cx, &phi),
    }
}

fn divergence(cx: &Complex, phi: &Field, split: Option<&BoundarySplit>) -> Result<Field> {
    match split {
        None => cx.boundary1(phi),
        Some(s) => cx.interior_divergence(phi, s),
    }
}

/// Gibbs beliefs of `ζ0 u`.
pub fn beliefs(cx: &Complex, u: &Field) -> Result<Vec<Belief>> {
    Ok(gibbs_field(&zeta0(cx, u)?))
}

/// Shifts `u` along constants so that every `F^a(U_a)` vanishes, leaving
/// boundary members untouched.
fn normalize(cx: &Complex, u: &mut Field, split: Option<&BoundarySplit>) -> Result<()> {
    let big_u = zeta0(cx, u)?;
    let f: Vec<f64> = (0..cx.len()).map(|a| crate::energy::free_energy(big_u.get(a), 1.0)).collect::<Result<_>>()?;
    let shift = mobius0(cx, &cx.constants(&f)?)?;
    for a in 0..cx.len() {
        if split.is_some_and(|s| s.is_boundary[a] && !s.boundary_vars.is_empty()) {
            continue;
        }
        u.get_mut(a).axpy(-1.0, shift.get(a))?;
    }
    Ok(())
}

/// One Euler step `u + λ Δ(flux(u))`.
pub fn euler_step(cx: &Complex, u: &Field, kind: FluxKind, config: &RunConfig) -> Result<Field> {
    config.validate()?;
    let split = config.split(cx)?;
    step_with(cx, u, kind, config, split.as_ref()).map(|(u, _)| u)
}

fn step_with(
    cx: &Complex,
    u: &Field,
    kind: FluxKind,
    config: &RunConfig,
    split: Option<&BoundarySplit>,
) -> Result<(Field, f64)> {
    let d = divergence(cx, &flux(cx, u, kind)?, split)?;
    let residual = d.max_abs();
    let mut next = u.clone();
    next.axpy(config.step, &d)?;
    if config.normalize_each_step {
        normalize(cx, &mut next, split)?;
    }
    if !next.is_finite() {
        return Err(Error::Divergence { iteration: 0, residual });
    }
    Ok((next, residual))
}

/// `Σ_a c_a ln q_a` on `Ω`, centered.
fn centered_log_beliefs(cx: &Complex, q: &[Belief], omega: &crate::tensor::Shape) -> Result<Tensor> {
    let c = &cx.mobius_numbers().c;
    let mut t = Tensor::zeros(omega);
    for (a, p) in q.iter().enumerate() {
        if c[a] != 0 {
            let l = p.tensor().map(|v| v.max(LOG_FLOOR).ln());
            t.axpy(c[a] as f64, &l.extend(omega)?)?;
        }
    }
    let mean = t.sum() / t.len() as f64;
    Ok(t.map(|v| v - mean))
}

struct Monitor {
    omega: crate::tensor::Shape,
    sum0: Tensor,
    log0: Tensor,
}

impl Monitor {
    fn new(cx: &Complex, u: &Field) -> Result<Option<Self>> {
        let omega = cx.domain().shape(cx.hypergraph().omega())?;
        if omega.size() as u128 > GLOBAL_LIMIT {
            return Ok(None);
        }
        let sum0 = global_sum(cx, u)?;
        let log0 = centered_log_beliefs(cx, &beliefs(cx, u)?, &omega)?;
        Ok(Some(Monitor { omega, sum0, log0 }))
    }

    fn drifts(&self, cx: &Complex, u: &Field) -> Result<(f64, f64)> {
        let s = global_sum(cx, u)?.max_abs_diff(&self.sum0)?;
        let l = centered_log_beliefs(cx, &beliefs(cx, u)?, &self.omega)?.max_abs_diff(&self.log0)?;
        Ok((s, l))
    }
}

/// Integrates from `u(0) = h` until the residual drops to `tol`.
pub fn run(cx: &Complex, h: &Field, kind: FluxKind, config: &RunConfig) -> Result<(Equilibrium, Trace)> {
    config.validate()?;
    if h.degree() != 0 || !h.is_finite() {
        return Err(Error::InvalidInput("initial potentials must be a finite degree 0 field".into()));
    }
    let split = config.split(cx)?;
    let monitor = if config.record_trace { Monitor::new(cx, h)? } else { None };
    let mut trace = Trace::default();
    let mut u = h.clone();
    let mut status = RunStatus::MaxIterations;
    let mut residual;
    let mut iterations = 0;
    loop {
        let d = divergence(cx, &flux(cx, &u, kind)?, split.as_ref())?;
        residual = if d.is_finite() { d.max_abs() } else { f64::NAN };
        if config.record_trace {
            let (s, l) = match &monitor {
                Some(m) => m.drifts(cx, &u).map(|(s, l)| (Some(s), Some(l)))?,
                None => (None, None),
            };
            trace.entries.push(TraceEntry {
                iteration: iterations,
                residual,
                global_sum_drift: s,
                log_belief_drift: l,
            });
        }
        if residual.is_nan() || residual > DIVERGENCE_THRESHOLD {
            status = RunStatus::Diverged;
            break;
        }
        if residual <= config.tol {
            status = RunStatus::Converged;
            break;
        }
        if iterations >= config.max_iters {
            break;
        }
        u.axpy(config.step, &d)?;
        if config.normalize_each_step {
            normalize(cx, &mut u, split.as_ref())?;
        }
        iterations += 1;
        if !u.is_finite() {
            status = RunStatus::Diverged;
            residual = f64::NAN;
            break;
        }
    }
    let q = if u.is_finite() { beliefs(cx, &u)? } else { Vec::new() };
    let consistency = if q.is_empty() { f64::NAN } else { consistency_defect(cx, &q)? };
    Ok((Equilibrium { u, q, status, iterations, residual, consistency }, trace))
}

/// Pins the potentials of boundary members to `values`.
pub fn clamp_boundary(cx: &Complex, u: &Field, boundary: &Region, values: &Field) -> Result<Field> {
    let split = cx.hypergraph().boundary_split(boundary)?;
    let mut out = u.clone();
    for &b in &split.boundary {
        if values.get(b).shape() != cx.shape(b) {
            return Err(Error::ShapeMismatch(format!("clamp table for {}", cx.region(b))));
        }
        *out.get_mut(b) = values.get(b).clone();
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub global_sum_drift: f64,
    pub log_belief_drift: f64,
}

pub fn conservation_check(trace: &Trace) -> ConservationReport {
    let mut r = ConservationReport { global_sum_drift: 0.0, log_belief_drift: 0.0 };
    for e in &trace.entries {
        r.global_sum_drift = r.global_sum_drift.max(e.global_sum_drift.unwrap_or(0.0));
        r.log_belief_drift = r.log_belief_drift.max(e.log_belief_drift.unwrap_or(0.0));
    }
    r
}

/// `(‖δ flux(u)‖∞, ‖D(ζ0 u)‖∞)`.
pub fn faithfulness_probe(cx: &Complex, u: &Field, kind: FluxKind) -> Result<(f64, f64)> {
    let d = cx.boundary1(&flux(cx, u, kind)?)?.max_abs();
    let g = effective_gradient(cx, &zeta0(cx, u)?)?.max_abs();
    Ok((d, g))
}

/// Multiplicative GBP. Factors `f` per member, messages per 1-chain on the
/// terminal region. Returns beliefs and final messages.
pub fn bp_messages(cx: &Complex, f: &[Tensor], m0: &Field, step: f64, iters: usize) -> Result<(Vec<Belief>, Field)> {
    if f.len() != cx.len() || m0.degree() != 1 {
        return Err(Error::ShapeMismatch("factors per member and degree 1 messages expected".into()));
    }
    let positive = |t: &Tensor| t.values().iter().all(|&v| v > 0.0 && v.is_finite());
    if !f.iter().all(positive) || !m0.values().iter().all(positive) {
        return Err(Error::Numeric("factors and messages must be strictly positive".into()));
    }
    let x = cx.hypergraph();
    let cobound: Vec<Vec<(usize, usize)>> = (0..cx.len()).map(|a| x.coboundary_of(a)).collect();
    let beliefs_of = |m: &Field| -> Result<Vec<Belief>> {
        (0..cx.len())
            .map(|a| {
                let mut t = Tensor::constant(cx.shape(a), 1.0);
                for &b in x.cone_members(a) {
                    t = t.zip(&cx.extend(&f[b], b, a), |p, q| p * q)?;
                }
                for &(ap, bp) in &cobound[a] {
                    let k = cx.edge_index(ap, bp).unwrap();
                    t = t.zip(&cx.extend(m.get(k), bp, a), |p, q| p * q)?;
                }
                Belief::normalize(t)
            })
            .collect()
    };
    let mut m = m0.clone();
    for _ in 0..iters {
        let q = beliefs_of(&m)?;
        let mut next = m.clone();
        for (k, &(a, b)) in cx.edges().iter().enumerate() {
            let marg = cx.marginal(q[a].tensor(), a, b);
            let ratio = marg.zip(q[b].tensor(), |s, t| (s / t).powf(step))?;
            *next.get_mut(k) = m.get(k).zip(&ratio, |p, r| p * r)?;
            if !positive(next.get(k)) {
                return Err(Error::Numeric(format!("message on {} → {} lost positivity", cx.region(a), cx.region(b))));
            }
        }
        m = next;
    }
    Ok((beliefs_of(&m)?, m))
}

/// Matrix of `v ↦ δ μ₁ ∇_p ζ0 v`, `p` the beliefs of `u*`. The canonical
/// flow linearizes to minus this operator.
pub fn twisted_laplacian(cx: &Complex, u_star: &Field) -> Result<DMatrix<f64>> {
    let h = zeta0(cx, u_star)?;
    crate::energy::operator_matrix(cx, 0, |v| {
        let g = cx.nabla(&h, &zeta0(cx, v)?)?;
        cx.boundary1(&mobius1(cx, &g)?)
    })
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// `‖Lv − λv‖₂` for a unit eigenvector of each eigenvalue.
    pub residuals: Vec<f64>,
}

/// Eigenvalues by Schur decomposition, each refined by shifted inverse
/// iteration and paired with the residual of its eigenvector. Sorted by real
/// then imaginary part.
pub fn spectrum(l: &DMatrix<f64>) -> Result<Spectrum> {
    let n = l.nrows();
    if n != l.ncols() {
        return Err(Error::ShapeMismatch("spectrum of a non-square matrix".into()));
    }
    if n == 0 {
        return Ok(Spectrum { eigenvalues: Vec::new(), residuals: Vec::new() });
    }
    // deflation is relative to neighbouring diagonal entries, which stalls
    // next to exact zeros; residuals below certify whatever tolerance worked
    let schur = [1e-14, 1e-12, 1e-10]
        .iter()
        .find_map(|&eps| Schur::try_new(l.clone(), eps, 50 * n))
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let eigenvalues: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    let lc: DMatrix<Complex64> = l.map(|v| Complex64::new(v, 0.0));
    let scale = l.norm().max(1.0);
    let mut pairs: Vec<(Complex64, f64)> = eigenvalues.iter().map(|&lam| eigen_pair(&lc, lam, scale)).collect();
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let (eigenvalues, residuals) = pairs.into_iter().unzip();
    Ok(Spectrum { eigenvalues, residuals })
}

/// Refines `lam` to the Rayleigh quotient of an inverse-iteration vector and
/// returns it with `‖Lv − λv‖₂`.
fn eigen_pair(l: &DMatrix<Complex64>, lam: Complex64, scale: f64) -> (Complex64, f64) {
    let n = l.nrows();
    let mut best = (lam, f64::INFINITY);
    for attempt in 0..4 {
        let shift = lam + Complex64::new(scale * 1e-13 * (attempt as f64 + 1.0), 0.0);
        let lu = (l - DMatrix::<Complex64>::identity(n, n) * shift).lu();
        let mut v =
            DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.37).sin(), 0.1 * i as f64));
        v.unscale_mut(v.norm());
        for _ in 0..6 {
            match lu.solve(&v) {
                Some(w) if w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) && w.norm() > 0.0 => {
                    v = w.unscale(w.norm());
                }
                _ => break,
            }
        }
        let lv = l * &v;
        for mu in [lam, v.dotc(&lv)] {
            let r = (&lv - &v * mu).norm();
            if r < best.1 {
                best = (mu, r);
            }
        }
        if best.1 < 1e-12 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Hypergraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cone_c1() -> Complex {
        let x = Hypergraph::build(&[Region::from([0, 1]), Region::from([0]), Region::from([1])], true, true).unwrap();
        Complex::uniform(x, 2).unwrap()
    }

    #[test]
    fn zero_flux_at_zero_potential() {
        let cx = cone_c1();
        let phi = flux(&cx, &cx.zeros(0).unwrap(), FluxKind::Standard).unwrap();
        for (k, &(a, b)) in cx.edges().iter().enumerate() {
            let expect = (cx.shape(b).size() as f64).ln() - (cx.shape(a).size() as f64).ln();
            assert!(phi.get(k).values().iter().all(|v| (v - expect).abs() < 1e-14));
        }
    }

    #[test]
    fn euler_with_zero_flux_is_identity() {
        let cx = cone_c1();
        // u = μ·ln|E| has U = ln|E|, whose flux vanishes
        let logs: Vec<f64> = (0..cx.len()).map(|a| (cx.shape(a).size() as f64).ln()).collect();
        let u = mobius0(&cx, &cx.constants(&logs).unwrap()).unwrap();
        let cfg = RunConfig { mode: DivergenceMode::Full, normalize_each_step: false, ..RunConfig::default() };
        for kind in [FluxKind::Standard, FluxKind::Normalized, FluxKind::Canonical] {
            let next = euler_step(&cx, &u, kind, &cfg).unwrap();
            assert!(next.max_abs_diff(&u).unwrap() < 1e-14);
        }
    }

    #[test]
    fn one_canonical_step_on_a_cone() {
        let cx = cone_c1();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = cx.random(0, &mut rng, 2.0).unwrap();
        let cfg = RunConfig { mode: DivergenceMode::Full, normalize_each_step: false, ..RunConfig::default() };
        let u = euler_step(&cx, &h, FluxKind::Canonical, &cfg).unwrap();
        let d = effective_gradient(&cx, &zeta0(&cx, &u).unwrap()).unwrap();
        assert!(d.max_abs() < 1e-10, "{}", d.max_abs());
    }

    #[test]
    fn step_matches_messages() {
        let x =
            Hypergraph::build(&[Region::from([0, 1]), Region::from([1, 2]), Region::from([0, 2])], true, true).unwrap();
        let cx = Complex::uniform(x, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = cx.random(0, &mut rng, 1.0).unwrap();
        let f: Vec<Tensor> = h.values().iter().map(|t| t.map(|v| (-v).exp())).collect();
        let ones = cx.zeros(1).unwrap().map(|_| 1.0);
        let cfg = RunConfig { mode: DivergenceMode::Full, normalize_each_step: false, ..RunConfig::default() };
        let mut u = h.clone();
        for n in 1..4 {
            u = euler_step(&cx, &u, FluxKind::Standard, &cfg).unwrap();
            let (q, _) = bp_messages(&cx, &f, &ones, 1.0, n).unwrap();
            let qe = beliefs(&cx, &u).unwrap();
            for a in 0..cx.len() {
                assert!(q[a].tensor().max_abs_diff(qe[a].tensor()).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn trace_json_lines() {
        let cx = cone_c1();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = cx.random(0, &mut rng, 1.0).unwrap();
        let (eq, trace) = run(&cx, &h, FluxKind::Standard, &RunConfig::default()).unwrap();
        assert!(eq.converged());
        let text = trace.to_json_lines().unwrap();
        assert_eq!(text.lines().count(), eq.iterations + 1);
        let first: TraceEntry = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first.iteration, 0);
    }

    #[test]
    fn config_validation() {
        let bad = RunConfig { step: 1.5, ..RunConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RunConfig { tol: 0.0, ..RunConfig::default() };
        assert!(bad.validate().is_err());
        assert!("canonical".parse::<FluxKind>().is_ok());
        assert!("other".parse::<FluxKind>().is_err());
    }

    #[test]
    fn spectrum_of_a_known_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let s = spectrum(&m).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        assert!(s.residuals.iter().all(|&r| r < 1e-10));
        assert!(s.eigenvalues.iter().any(|z| (z.im - 1.0).abs() < 1e-12));
    }
}
