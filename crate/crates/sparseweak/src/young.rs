//! Young functions: evaluation, convex conjugation, conjugate inversion in
//! the log2 domain, and the series constant
//! `c_phi = sum_{k>=1} 1 / psi^{-1}(2^(2^k))`,
//! where `psi(s) = sup_{t>0} (s t - phi(t))` is the complementary function.
//!
//! The arguments 2^(2^k) overflow any direct representation long before the
//! series settles, so conjugate inversion never materializes y: callers pass
//! log2(y) and all comparisons run on log2(psi). The catalog:
//!
//!   power  p   : phi(t) = t^p, p > 1
//!   loglog d   : phi(t) = t * ln(e + t)^delta, delta > 0
//!   linear     : phi(t) = t (degenerate: psi jumps from 0 to infinity at 1,
//!                deliberate divergence witness for c_phi)
//!   table      : convex piecewise-linear interpolant through (t_i, phi_i)

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect_increasing, golden_max};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum YoungKind {
    Power { p: f64 },
    LogLog { delta: f64 },
    Linear,
    Table { knots: Vec<(f64, f64)> },
}

/// Result of the c_phi partial-sum scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CPhi {
    Converged { value: f64, terms: u32 },
    Divergent { terms: u32, last_term: f64 },
}

impl CPhi {
    pub fn value(&self) -> Option<f64> {
        match self {
            CPhi::Converged { value, .. } => Some(*value),
            CPhi::Divergent { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, CPhi::Divergent { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    kind: YoungKind,
    /// Largest argument for direct evaluation before phi overflows f64;
    /// internal asymptotics take over beyond it (log2 domain).
    domain_cap: f64,
    /// phi^{-1}(1), cached for Luxemburg bracket guards.
    inv_at_one: f64,
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::domain(format!(
                "power kind requires p > 1 (superlinearity), got p = {p}"
            )));
        }
        let cap = ((1023.0 / p).min(1023.0)).exp2();
        Self::finish(YoungKind::Power { p }, cap)
    }

    pub fn loglog(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::domain(format!(
                "loglog kind requires delta > 0, got delta = {delta}"
            )));
        }
        // phi(t) = t * ln(e+t)^delta <= t * 710^delta for t below 2^1000
        let cap = (1000.0 - delta * 9.5).max(64.0).exp2();
        Self::finish(YoungKind::LogLog { delta }, cap)
    }

    pub fn linear() -> Self {
        YoungFunction {
            kind: YoungKind::Linear,
            domain_cap: f64::MAX,
            inv_at_one: 1.0,
        }
    }

    /// Convex piecewise-linear table through the given knots. The first knot
    /// must be (0, 0); abscissas strictly increase; slopes must be
    /// nondecreasing (convexity) and nonnegative. Extended past the last knot
    /// with the final slope.
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::domain("table kind requires at least two knots"));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::domain("table must start at (0, 0)"));
        }
        let mut prev_slope = 0.0f64;
        for w in knots.windows(2) {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            if !(t1.is_finite() && v1.is_finite()) {
                return Err(Error::domain("table knots must be finite"));
            }
            if t1 <= t0 {
                return Err(Error::domain("table abscissas must strictly increase"));
            }
            let slope = (v1 - v0) / (t1 - t0);
            if slope < 0.0 {
                return Err(Error::domain("table values must be nondecreasing"));
            }
            if slope + 1e-12 * (1.0 + slope.abs()) < prev_slope {
                return Err(Error::domain(
                    "table is not convex: slopes must be nondecreasing",
                ));
            }
            prev_slope = slope.max(prev_slope);
        }
        if prev_slope <= 0.0 {
            return Err(Error::domain(
                "table must eventually increase: last slope must be positive",
            ));
        }
        Self::finish(YoungKind::Table { knots }, f64::MAX)
    }

    pub fn from_kind(kind: YoungKind) -> Result<Self> {
        match kind {
            YoungKind::Power { p } => Self::power(p),
            YoungKind::LogLog { delta } => Self::loglog(delta),
            YoungKind::Linear => Ok(Self::linear()),
            YoungKind::Table { knots } => Self::table(knots),
        }
    }

    fn finish(kind: YoungKind, domain_cap: f64) -> Result<Self> {
        let mut me = YoungFunction {
            kind,
            domain_cap,
            inv_at_one: 1.0,
        };
        me.sample_check()?;
        me.inv_at_one = me.solve_phi_inverse(1.0);
        Ok(me)
    }

    pub fn kind(&self) -> &YoungKind {
        &self.kind
    }

    pub fn domain_cap(&self) -> f64 {
        self.domain_cap
    }

    /// phi^{-1}(1); used by Luxemburg-norm bracket guards.
    pub fn inv_at_one(&self) -> f64 {
        self.inv_at_one
    }

    /// Degenerate kinds grow at most linearly, so the complementary function
    /// is not finite valued.
    pub fn is_degenerate(&self) -> bool {
        matches!(self.kind, YoungKind::Linear)
    }

    /// phi(t) for t >= 0. Exact for catalog kinds.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::domain(format!(
                "phi argument must be finite and nonnegative, got {t}"
            )));
        }
        Ok(self.phi_raw(t))
    }

    pub(crate) fn phi_raw(&self, t: f64) -> f64 {
        match &self.kind {
            YoungKind::Power { p } => {
                if p.fract() == 0.0 && *p <= 64.0 {
                    t.powi(*p as i32)
                } else {
                    t.powf(*p)
                }
            }
            YoungKind::LogLog { delta } => {
                if t == 0.0 {
                    0.0
                } else {
                    t * (std::f64::consts::E + t).ln().powf(*delta)
                }
            }
            YoungKind::Linear => t,
            YoungKind::Table { knots } => {
                let n = knots.len();
                if t >= knots[n - 1].0 {
                    let (t0, v0) = knots[n - 2];
                    let (t1, v1) = knots[n - 1];
                    let slope = (v1 - v0) / (t1 - t0);
                    return v1 + slope * (t - t1);
                }
                let i = knots.partition_point(|&(tk, _)| tk <= t).max(1);
                let (t0, v0) = knots[i - 1];
                let (t1, v1) = knots[i];
                v0 + (v1 - v0) / (t1 - t0) * (t - t0)
            }
        }
    }

    /// Complementary function psi(s) = sup_{t>0} (s t - phi(t)), computed by
    /// maximizing the concave map t -> s t - phi(t): the upper bracket doubles
    /// until the objective decreases across the bracket end, then
    /// golden-section search resolves the peak.
    pub fn conjugate(&self, s: f64) -> Result<f64> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::domain(format!(
                "conjugate argument must be finite and positive, got {s}"
            )));
        }
        match &self.kind {
            YoungKind::Linear => {
                if s <= 1.0 {
                    // s t - t <= 0 for all t > 0; sup attained as t -> 0
                    Ok(0.0)
                } else {
                    Err(Error::InfiniteConjugate { s })
                }
            }
            YoungKind::Table { knots } => {
                let sup_slope = self.table_max_slope();
                if s > sup_slope {
                    return Err(Error::InfiniteConjugate { s });
                }
                // piecewise-linear phi: the sup is attained at a knot
                let best = knots
                    .iter()
                    .map(|&(t, v)| s * t - v)
                    .fold(0.0f64, f64::max);
                Ok(best)
            }
            _ => self.conjugate_numeric(s),
        }
    }

    fn conjugate_numeric(&self, s: f64) -> Result<f64> {
        let g = |t: f64| s * t - self.phi_raw(t);
        let mut hi = 1.0f64;
        while g(hi) > g(0.5 * hi) {
            hi *= 2.0;
            if hi > self.domain_cap {
                return Err(Error::InfiniteConjugate { s });
            }
        }
        let (_, val) = golden_max(g, 0.0, hi, 200);
        Ok(val.max(0.0))
    }

    fn table_max_slope(&self) -> f64 {
        match &self.kind {
            YoungKind::Table { knots } => {
                let n = knots.len();
                let (t0, v0) = knots[n - 2];
                let (t1, v1) = knots[n - 1];
                (v1 - v0) / (t1 - t0)
            }
            _ => unreachable!(),
        }
    }

    /// psi^{-1}(y) for y supplied as log2(y) (y = 2^(2^k) overflows direct
    /// representation long before the c_phi series settles). Bisection on the
    /// nondecreasing psi with all comparisons in the log2 domain.
    pub fn conjugate_inverse(&self, log2_y: f64) -> Result<f64> {
        Ok(self.log2_conjugate_inverse(log2_y)?.exp2())
    }

    /// log2(psi^{-1}(y)) given log2(y) > 0. Relative accuracy ~1e-9 on the
    /// inverse itself.
    pub fn log2_conjugate_inverse(&self, log2_y: f64) -> Result<f64> {
        if !(log2_y.is_finite() && log2_y > 0.0) {
            return Err(Error::domain(format!(
                "conjugate-inverse argument log2(y) must be positive, got {log2_y}"
            )));
        }
        match &self.kind {
            YoungKind::Linear => Err(Error::BoundedConjugateRange { sup: 1.0 }),
            YoungKind::Power { p } => {
                // log2 psi(s) = p' log2 s - log2(p' p^(p'/p)) is linear; a
                // two-step bracket plus bisection resolves it.
                let pp = p / (p - 1.0);
                let log2_c = pp.log2() + (pp / p) * p.log2();
                let center = (log2_y + log2_c) / pp;
                let f = |l2s: f64| pp * l2s - log2_c;
                Ok(bisect_increasing(
                    f,
                    log2_y,
                    center - 2.0,
                    center + 2.0,
                    1e-12,
                    200,
                ))
            }
            YoungKind::LogLog { delta } => {
                // Parametrize by the inner maximizer t = 2^lambda: at
                // x = phi'(t) the conjugate has the cancellation-free form
                //   psi(x) = t phi'(t) - phi(t) = delta t L^(delta-1) t/(e+t),
                // and both x and psi increase along the curve. One bisection
                // in lambda inverts psi; x = phi'(t*) is read off the curve.
                let delta = *delta;
                let f = |lambda: f64| Self::log2_psi_at_maximizer(lambda, delta);
                let mut lo = 0.0f64;
                while f(lo) >= log2_y {
                    lo -= 16.0;
                    if lo < -1060.0 {
                        break;
                    }
                }
                let mut hi = log2_y.max(4.0) + 4.0;
                while f(hi) < log2_y {
                    hi = hi * 2.0 + 8.0;
                    if hi > 1e300 {
                        break;
                    }
                }
                let lambda = bisect_increasing(f, log2_y, lo, hi, 1e-13, 300);
                Ok(Self::log2_dphi_loglog(lambda, delta))
            }
            YoungKind::Table { .. } => {
                let sup = self.table_max_slope();
                let log2_psi_sup = self.log2_psi_table(sup.log2());
                if log2_y > log2_psi_sup {
                    return Err(Error::BoundedConjugateRange { sup });
                }
                let mut lo = sup.log2() - 1.0;
                while self.log2_psi_table(lo) >= log2_y {
                    lo -= 8.0;
                    if lo < -1060.0 {
                        break;
                    }
                }
                Ok(bisect_increasing(
                    |l2x| self.log2_psi_table(l2x),
                    log2_y,
                    lo,
                    sup.log2(),
                    1e-12,
                    200,
                ))
            }
        }
    }

    /// ln(e + 2^lambda), stable for any lambda.
    fn log_e_plus(lambda: f64) -> f64 {
        if lambda <= 512.0 {
            (std::f64::consts::E + lambda.exp2()).ln()
        } else {
            lambda * LN_2 + (std::f64::consts::E * (-lambda).exp2()).ln_1p()
        }
    }

    /// t / (e + t) at t = 2^lambda.
    fn ratio_e_plus(lambda: f64) -> f64 {
        if lambda <= 512.0 {
            let t = lambda.exp2();
            t / (std::f64::consts::E + t)
        } else {
            1.0 / (1.0 + std::f64::consts::E * (-lambda).exp2())
        }
    }

    /// log2 of phi'(2^lambda) for the loglog kind:
    /// phi'(t) = L^(delta-1) * (L + delta * t/(e+t)) with L = ln(e+t).
    fn log2_dphi_loglog(lambda: f64, delta: f64) -> f64 {
        let l = Self::log_e_plus(lambda);
        let r = Self::ratio_e_plus(lambda);
        ((delta - 1.0) * l.ln() + (l + delta * r).ln()) / LN_2
    }

    /// log2 of psi(phi'(t)) at t = 2^lambda via the exact identity
    /// t phi'(t) - phi(t) = delta t L^(delta-1) t/(e+t) with L = ln(e+t);
    /// ln(t/(e+t)) = lambda ln2 - L keeps the tail stable as t -> 0.
    fn log2_psi_at_maximizer(lambda: f64, delta: f64) -> f64 {
        let l = Self::log_e_plus(lambda);
        lambda + ((delta - 1.0) * l.ln() + delta.ln() + (lambda * LN_2 - l)) / LN_2
    }

    /// log2 psi(x) at x = 2^(l2x) for the table kind (sup attained at knots;
    /// finite only for x up to the last slope, checked by the caller).
    fn log2_psi_table(&self, l2x: f64) -> f64 {
        let knots = match &self.kind {
            YoungKind::Table { knots } => knots,
            _ => unreachable!(),
        };
        let x = l2x.exp2();
        let best = knots
            .iter()
            .map(|&(t, v)| x * t - v)
            .fold(0.0f64, f64::max);
        best.log2()
    }

    /// Partial sums of sum_k 1/psi^{-1}(2^(2^k)) until the running term drops
    /// below tol * sum, or k = 64. Divergence is declared when the terms have
    /// not fallen below 1e-3 by k = 64 (the linear kind short-circuits: its
    /// psi^{-1} is at most 1 wherever finite, so every term is >= 1).
    pub fn c_phi(&self, tol: f64) -> Result<CPhi> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::domain(format!("c_phi tolerance must be > 0, got {tol}")));
        }
        if self.is_degenerate() {
            return Ok(CPhi::Divergent {
                terms: 0,
                last_term: 1.0,
            });
        }
        const DIVERGENCE_FLOOR: f64 = 1e-3;
        const K_MAX: u32 = 64;
        let mut sum = 0.0f64;
        let mut last = f64::INFINITY;
        for k in 1..=K_MAX {
            let log2_y = (k as f64).exp2(); // log2(2^(2^k)) = 2^k, exact
            let term = match self.log2_conjugate_inverse(log2_y) {
                Ok(l2t) => (-l2t).exp2(),
                // psi jumped past y: the generalized inverse clamps at the
                // jump point, so the terms stop decreasing
                Err(Error::BoundedConjugateRange { sup }) => 1.0 / sup,
                Err(e) => return Err(e),
            };
            sum += term;
            last = term;
            if term < tol * sum {
                return Ok(CPhi::Converged {
                    value: sum,
                    terms: k,
                });
            }
        }
        if last >= DIVERGENCE_FLOOR {
            Ok(CPhi::Divergent {
                terms: K_MAX,
                last_term: last,
            })
        } else {
            Ok(CPhi::Converged {
                value: sum,
                terms: K_MAX,
            })
        }
    }

    /// phi^{-1}(y) by bisection on the increasing phi (positive y).
    fn solve_phi_inverse(&self, y: f64) -> f64 {
        let mut hi = 1.0f64;
        while self.phi_raw(hi) < y && hi < 1e300 {
            hi *= 2.0;
        }
        bisect_increasing(|t| self.phi_raw(t), y, 0.0, hi, 1e-14, 200)
    }

    /// Constructor-time invariant check on a 1000-point sample: phi(0) = 0,
    /// nondecreasing, midpoint-convex.
    fn sample_check(&self) -> Result<()> {
        if self.phi_raw(0.0) != 0.0 {
            return Err(Error::domain("young function must satisfy phi(0) = 0"));
        }
        let n = 1000usize;
        let cap = self.domain_cap.min(1e6);
        let mut prev_t = 0.0f64;
        let mut prev_v = 0.0f64;
        for i in 1..=n {
            // log-spaced sample from 1e-6 up to the (clamped) cap
            let t = 1e-6 * (cap / 1e-6).powf(i as f64 / n as f64);
            let v = self.phi_raw(t);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!(
                    "young function sample invalid at t = {t}"
                )));
            }
            if v + 1e-12 * (1.0 + v.abs()) < prev_v {
                return Err(Error::domain(format!(
                    "young function not nondecreasing near t = {t}"
                )));
            }
            let mid = 0.5 * (prev_t + t);
            let vm = self.phi_raw(mid);
            if vm > 0.5 * (prev_v + v) + 1e-9 * (1.0 + v.abs()) {
                return Err(Error::domain(format!(
                    "young function not convex near t = {mid}"
                )));
            }
            prev_t = t;
            prev_v = v;
        }
        Ok(())
    }
}
