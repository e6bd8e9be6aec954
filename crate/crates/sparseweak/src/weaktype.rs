//! Weak-type machinery: the exact L^{1,infty}(w) quasinorm for
//! piecewise-constant functions, the exceptional set, the per-k lemma ledger
//! (layer part, bottom part, inferred constant), the end-to-end weak-type
//! experiment, and the sanity suites around it.

use rayon::prelude::*;

use crate::config::{derived_seed, trial_seed, ExperimentConfig, RemovalMode};
use crate::error::{Error, Result};
use crate::grid::{frac_scale, CellSet, Grid, GridFunction};
use crate::maximal::{dyadic_frac_maximal, iterated_bound_weight, OperatorParams};
use crate::numeric::NeumaierSum;
use crate::sparse::{sparse_operator, LayerDecomposition, SparseFamily};
use crate::young::{CPhi, YoungFunction};

/// Exact weak-L1 quasinorm sup_{lambda>0} lambda * w({g > lambda}) for a
/// piecewise-constant g: the sup is attained as lambda increases to one of
/// the distinct positive values v of g, where it equals v * w({g >= v}).
/// Computed by sorting cells by g descending and sweeping a cumulative
/// w-measure; the accumulation is compensated, so regrouped summation orders
/// agree to well below 1e-15 relative.
pub fn weak_norm(g: &GridFunction, w: &GridFunction) -> Result<f64> {
    g.same_grid(w)?;
    let vol = g.grid().cell_volume();
    let mut order: Vec<u32> = (0..g.grid().cell_count() as u32).collect();
    order.sort_by(|&a, &b| {
        g.value(b)
            .partial_cmp(&g.value(a))
            .expect("grid values are finite")
            .then(a.cmp(&b))
    });
    let mut best = 0.0f64;
    let mut cum = NeumaierSum::new();
    let mut i = 0usize;
    while i < order.len() {
        let v = g.value(order[i]);
        if v <= 0.0 {
            break;
        }
        // absorb the whole block of cells with value v
        while i < order.len() && g.value(order[i]) == v {
            cum.add(w.value(order[i]) * vol);
            i += 1;
        }
        best = best.max(v * cum.value());
    }
    Ok(best)
}

/// w-measure of a dyadic band decomposition of {g > lambda1}: the sets
/// {lambda1 2^j < g <= lambda1 2^(j+1)} for j = 0, 1, ... These partition
/// {g > lambda1}, so their measures sum to w({g > lambda1}).
pub fn band_measures(g: &GridFunction, w: &GridFunction, lambda1: f64) -> Result<Vec<f64>> {
    g.same_grid(w)?;
    let max = g.values().iter().cloned().fold(0.0f64, f64::max);
    let mut out = Vec::new();
    let mut lo = lambda1;
    while lo < max {
        let hi = 2.0 * lo;
        let cells: CellSet = (0..g.grid().cell_count() as u32)
            .filter(|&c| {
                let v = g.value(c);
                v > lo && v <= hi
            })
            .collect();
        out.push(w.measure(&cells)?);
        lo = hi;
    }
    Ok(out)
}

/// The exceptional set
///
///   eps = { Lambda1 < A^S_{alpha,nu} f <= 2 Lambda1 } \ { M f > Lambda1^{-1} },
///
/// with the removal maximal function M = M_alpha by default (the plain M is
/// available for comparison). The parameter conditions of the layer argument
/// are preconditions and each failure is named.
#[derive(Debug, Clone)]
pub struct ExceptionalSet {
    pub cells: CellSet,
    pub lambda1: f64,
    /// The band (lambda1, 2*lambda1] that the set selects from.
    pub band: (f64, f64),
}

/// Named checks of the parameter conditions: Lambda1 > 2, the geometric-sum
/// condition (1/Lambda1) sum_k 2^k / Lambda1^k < 1 (equivalently
/// 2 / (Lambda1 (Lambda1 - 2)) < 1), and Lambda1 * lambda0^(1 - alpha/d) < 1.
pub fn check_parameter_conditions(
    lambda1: f64,
    lambda0: f64,
    alpha: f64,
    d: usize,
) -> Result<()> {
    if !(lambda1 > 2.0) {
        return Err(Error::precondition(format!(
            "lambda1 must exceed 2, got {lambda1}"
        )));
    }
    let geo = 2.0 / (lambda1 * (lambda1 - 2.0));
    if !(geo < 1.0) {
        return Err(Error::precondition(format!(
            "(1/lambda1) * sum_k 2^k/lambda1^k = {geo} must be < 1 (lambda1 = {lambda1})"
        )));
    }
    let shrink = lambda1 * lambda0.powf(1.0 - alpha / d as f64);
    if !(shrink < 1.0) {
        return Err(Error::precondition(format!(
            "lambda1 * lambda0^(1 - alpha/d) = {shrink} must be < 1 \
             (lambda1 = {lambda1}, lambda0 = {lambda0}, alpha = {alpha}, d = {d})"
        )));
    }
    Ok(())
}

pub fn exceptional_set(
    f: &GridFunction,
    family: &SparseFamily,
    alpha: f64,
    nu: f64,
    lambda1: f64,
    removal: RemovalMode,
) -> Result<ExceptionalSet> {
    check_parameter_conditions(lambda1, family.lambda0(), alpha, family.grid().dim())?;
    let a = sparse_operator(f, family, alpha, nu)?;
    let removal_alpha = match removal {
        RemovalMode::FracMaximal => alpha,
        RemovalMode::PlainMaximal => 0.0,
    };
    let m = dyadic_frac_maximal(f, removal_alpha)?;
    Ok(exceptional_set_from(&a, &m, lambda1))
}

/// Carve the set out of precomputed operator outputs.
pub fn exceptional_set_from(
    a: &GridFunction,
    m_removal: &GridFunction,
    lambda1: f64,
) -> ExceptionalSet {
    let inv = 1.0 / lambda1;
    let cells: CellSet = (0..a.grid().cell_count() as u32)
        .filter(|&c| {
            let av = a.value(c);
            av > lambda1 && av <= 2.0 * lambda1 && !(m_removal.value(c) > inv)
        })
        .collect();
    ExceptionalSet {
        cells,
        lambda1,
        band: (lambda1, 2.0 * lambda1),
    }
}

/// One row of the lemma ledger for level set S_k.
#[derive(Debug, Clone)]
pub struct LemmaLedgerEntry {
    pub k: u32,
    /// integral over eps of A^{S_k} f * w.
    pub lhs_k: f64,
    /// (2^k / Lambda1^k) * w(eps).
    pub layer_bound: f64,
    /// Inferred constant: (lhs_k - layer_bound)_+ * psi^{-1}(2^(2^k)) / rhs.
    pub c_k: f64,
    /// Layer part: sum over Q in S_{k,v}, layers l = 0..u-1, Q' in the
    /// (v+l)-layer inside Q of <f>_{alpha,Q} * w(eps ∩ E_{Q'}).
    pub layer_sum: f64,
    /// Bottom part: sum over Q of <f>_{alpha,Q} * w(eps ∩ Q_u).
    pub bottom_sum: f64,
    /// sum over Q in S_k of <f>_{alpha,Q} * w(eps ∩ Q), the Chebyshev bound
    /// on lhs_k valid for nu >= 1.
    pub chebyshev_sum: f64,
    /// layer_sum <= Lambda1^{-k} u * sum_Q w(eps ∩ E_Q) <= layer_bound.
    pub layer_part_ok: bool,
    /// Bottom average bound with factor (1 - Lambda1 lambda0^(1 - alpha/d))
    /// on every Q in the decomposition.
    pub bottom_part_ok: bool,
    /// Worst margin of the bottom bound (negative means a violation beyond
    /// tolerance).
    pub bottom_margin: f64,
}

impl LemmaLedgerEntry {
    fn trivial(k: u32) -> Self {
        LemmaLedgerEntry {
            k,
            lhs_k: 0.0,
            layer_bound: 0.0,
            c_k: 0.0,
            layer_sum: 0.0,
            bottom_sum: 0.0,
            chebyshev_sum: 0.0,
            layer_part_ok: true,
            bottom_part_ok: true,
            bottom_margin: 0.0,
        }
    }
}

/// The generalized inverse psi^{-1}(2^(2^k)) in the log2 domain; degenerate
/// kinds clamp at the jump point of psi.
fn psi_inverse_log2(phi: &YoungFunction, k: u32) -> Result<f64> {
    let log2_y = (k as f64).exp2();
    match phi.log2_conjugate_inverse(log2_y) {
        Ok(l2) => Ok(l2),
        Err(Error::BoundedConjugateRange { sup }) => Ok(sup.log2()),
        Err(e) => Err(e),
    }
}

/// Evaluate the lemma for one k against an already-built stratification.
#[allow(clippy::too_many_arguments)]
pub fn lemma_check_with(
    decomp: &LayerDecomposition,
    eps: &ExceptionalSet,
    k: u32,
    f: &GridFunction,
    w: &GridFunction,
    family: &SparseFamily,
    phi: &YoungFunction,
    alpha: f64,
    nu: f64,
    rhs_integral: f64,
) -> Result<LemmaLedgerEntry> {
    if !(nu >= 1.0) {
        return Err(Error::precondition(format!(
            "lemma requires nu >= 1 (the l^nu <= l^1 comparison), got {nu}"
        )));
    }
    let grid = family.grid();
    let kd = match decomp.per_k.get(&k) {
        Some(kd) => kd,
        None => return Ok(LemmaLedgerEntry::trivial(k)),
    };
    let lambda1 = decomp.lambda1;

    // lhs = \int_eps A^{S_k} f w
    let sub = family.restrict(&kd.members)?;
    let a_k = sparse_operator(f, &sub, alpha, nu)?;
    let vol = grid.cell_volume();
    let mut lhs_acc = NeumaierSum::new();
    for c in eps.cells.iter() {
        lhs_acc.add(a_k.value(c) * w.value(c) * vol);
    }
    let lhs_k = lhs_acc.value();

    let w_eps = w.measure(&eps.cells)?;
    let layer_bound = (2.0 / lambda1).powi(k as i32) * w_eps;

    // Chebyshev comparison sum over all of S_k
    let mut cheb = NeumaierSum::new();
    for &id in &kd.members {
        let q_cells = grid.cells_of(&family.cubes()[id]);
        cheb.add(kd.averages[&id] * w.measure(&eps.cells.intersect(&q_cells))?);
    }
    let chebyshev_sum = cheb.value();

    // layer part: pairs (Q at layer v, Q' at layer v+l inside Q), l < u
    let mut layer_acc = NeumaierSum::new();
    let mut e_meas_total = NeumaierSum::new();
    for (v, layer) in kd.layers.iter().enumerate() {
        for &q in layer {
            let avg_q = kd.averages[&q];
            let max_l = (kd.u).min((kd.layers.len() - v) as u64);
            for l in 0..max_l {
                for &qp in &kd.layers[v + l as usize] {
                    if family.cubes()[q].contains(&family.cubes()[qp]) {
                        let e = kd.e_set(qp)?;
                        layer_acc.add(avg_q * w.measure(&eps.cells.intersect(e))?);
                    }
                }
            }
            let e_q = kd.e_set(q)?;
            e_meas_total.add(w.measure(&eps.cells.intersect(e_q))?);
        }
    }
    let layer_sum = layer_acc.value();
    // Lambda1^{-k} * u with u = 2^k is (2/Lambda1)^k; this form never
    // overflows even where the layer-indexing u saturates
    let layer_mid_bound = (2.0 / lambda1).powi(k as i32) * e_meas_total.value();
    let tol = |scale: f64| 1e-12 * (1.0 + scale.abs());
    let layer_part_ok = layer_sum <= layer_mid_bound + tol(layer_mid_bound)
        && layer_mid_bound <= layer_bound + tol(layer_bound);

    // bottom part: sum over Q of <f>_Q w(eps ∩ Q_u), plus the per-cube
    // average lower bound with factor (1 - Lambda1 lambda0^(1 - alpha/d))
    let d = grid.dim();
    let factor = 1.0 - lambda1 * family.lambda0().powf(1.0 - alpha / d as f64);
    let mut bottom_acc = NeumaierSum::new();
    let mut bottom_ok = true;
    let mut bottom_margin = f64::INFINITY;
    for &id in &kd.members {
        let q = &family.cubes()[id];
        let q_u = kd.bottom_set(family, id)?;
        bottom_acc.add(kd.averages[&id] * w.measure(&eps.cells.intersect(&q_u))?);
        // <f chi_{E_Q}>_{alpha,Q} >= factor * <f>_{alpha,Q} - tol
        let e_q = kd.e_set(id)?;
        let e_avg = frac_scale(q.level(), d, alpha) * f.measure(e_q)?;
        let margin = e_avg - factor * kd.averages[&id];
        bottom_margin = bottom_margin.min(margin);
        if margin < -tol(kd.averages[&id]) {
            bottom_ok = false;
        }
    }
    let bottom_sum = bottom_acc.value();
    if kd.members.is_empty() {
        bottom_margin = 0.0;
    }

    // inferred constant, assembled in log2 to survive huge psi^{-1}
    let remainder = lhs_k - layer_bound;
    let c_k = if remainder <= 0.0 || rhs_integral <= 0.0 {
        0.0
    } else {
        let l2inv = psi_inverse_log2(phi, k)?;
        (remainder.log2() + l2inv - rhs_integral.log2()).exp2()
    };

    Ok(LemmaLedgerEntry {
        k,
        lhs_k,
        layer_bound,
        c_k,
        layer_sum,
        bottom_sum,
        chebyshev_sum,
        layer_part_ok,
        bottom_part_ok: bottom_ok,
        bottom_margin,
    })
}

/// Convenience wrapper building the stratification and exceptional set.
#[allow(clippy::too_many_arguments)]
pub fn lemma_check(
    k: u32,
    f: &GridFunction,
    w: &GridFunction,
    family: &SparseFamily,
    phi: &YoungFunction,
    alpha: f64,
    nu: f64,
    lambda1: f64,
    removal: RemovalMode,
) -> Result<LemmaLedgerEntry> {
    let decomp = LayerDecomposition::build(family, f, alpha, lambda1)?;
    let eps = exceptional_set(f, family, alpha, nu, lambda1, removal)?;
    let rhs = l1_against_weight(f, &iterated_bound_weight(w, phi, alpha)?)?;
    lemma_check_with(&decomp, &eps, k, f, w, family, phi, alpha, nu, rhs)
}

/// ||f||_{L^1(weight)} = sum over cells of f * weight * cell volume, exact
/// cell sum (no quadrature error enters reported ratios).
pub fn l1_against_weight(f: &GridFunction, weight: &GridFunction) -> Result<f64> {
    f.same_grid(weight)?;
    let vol = f.grid().cell_volume();
    let mut acc = NeumaierSum::new();
    for (a, b) in f.values().iter().zip(weight.values()) {
        acc.add(a * b * vol);
    }
    Ok(acc.value())
}

/// One experiment trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub w_eps: f64,
    pub ledger: Vec<LemmaLedgerEntry>,
    /// w(eps) <= (1/Lambda1) sum_k (layer_sum_k + bottom_sum_k), the
    /// assembled chain of the proof (holds under the parameter conditions).
    pub assembly_ok: bool,
    /// Dyadic band measures above Lambda1 sum to w({A f > Lambda1}).
    pub band_sum_ok: bool,
    /// lhs_k <= chebyshev_sum_k for every k (the nu >= 1 comparison).
    pub chebyshev_ok: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Aggregate {
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub p95_ratio: f64,
    pub c_phi: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub aggregate: Aggregate,
}

/// Build a thread pool honoring SPARSEWEAK_THREADS (0 or unset = rayon
/// default). Trials are merged in trial order, so results do not depend on
/// the scheduling.
fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = std::env::var("SPARSEWEAK_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))
}

/// Run the end-to-end weak-type experiment: per trial, build f, w and S,
/// compute lhs = weak_norm(A^S f, w), rhs = c_phi * ||f||_{L^1(M_alpha(M_phi w))},
/// the ratio, and the per-k lemma ledger. Refuses configurations whose c_phi
/// series diverges (the hypothesis of the estimate fails).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let grid = config.grid()?;
    if !(config.nu >= 1.0) {
        return Err(Error::precondition(format!(
            "experiment requires nu >= 1, got {}",
            config.nu
        )));
    }
    let phi = config.young.build()?;
    OperatorParams {
        alpha: config.alpha,
        nu: config.nu,
        phi: phi.clone(),
    }
    .validate(grid.dim())?;
    if let Some(lambda0) = config.sparse.lambda0() {
        check_parameter_conditions(config.lambda1, lambda0, config.alpha, grid.dim())?;
    }
    let c_phi = match phi.c_phi(1e-9)? {
        CPhi::Converged { value, .. } => value,
        CPhi::Divergent { .. } => return Err(Error::DivergentCPhi),
    };

    let pool = thread_pool()?;
    let trials: Result<Vec<TrialResult>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, grid, &phi, c_phi, t))
            .collect()
    });
    let trials = trials?;

    let aggregate = aggregate(&trials, c_phi);
    Ok(ExperimentReport {
        config: config.clone(),
        trials,
        aggregate,
    })
}

fn run_trial(
    config: &ExperimentConfig,
    grid: Grid,
    phi: &YoungFunction,
    c_phi: f64,
    t: usize,
) -> Result<TrialResult> {
    let seed = trial_seed(config.seed, t);
    let f = config.f_spec.materialize(grid, derived_seed(seed, 1))?;
    let w = config.w_spec.materialize(grid, derived_seed(seed, 2))?;
    let family = config.sparse.materialize(grid, derived_seed(seed, 3))?;

    let a = sparse_operator(&f, &family, config.alpha, config.nu)?;
    let itw = iterated_bound_weight(&w, phi, config.alpha)?;
    let lhs = weak_norm(&a, &w)?;
    let integral = l1_against_weight(&f, &itw)?;
    let rhs = c_phi * integral;
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };

    let decomp = LayerDecomposition::build(&family, &f, config.alpha, config.lambda1)?;
    let removal_alpha = match config.removal {
        RemovalMode::FracMaximal => config.alpha,
        RemovalMode::PlainMaximal => 0.0,
    };
    check_parameter_conditions(
        config.lambda1,
        family.lambda0(),
        config.alpha,
        grid.dim(),
    )?;
    let m = dyadic_frac_maximal(&f, removal_alpha)?;
    let eps = exceptional_set_from(&a, &m, config.lambda1);
    let w_eps = w.measure(&eps.cells)?;

    let mut ledger = Vec::new();
    let mut chain = NeumaierSum::new();
    let mut chebyshev_ok = true;
    let ks: Vec<u32> = decomp.per_k.keys().copied().collect();
    for k in ks {
        let entry = lemma_check_with(
            &decomp,
            &eps,
            k,
            &f,
            &w,
            &family,
            phi,
            config.alpha,
            config.nu,
            integral,
        )?;
        chain.add(entry.layer_sum + entry.bottom_sum);
        if entry.lhs_k > entry.chebyshev_sum + 1e-12 * (1.0 + entry.chebyshev_sum.abs()) {
            chebyshev_ok = false;
        }
        ledger.push(entry);
    }
    let assembled = chain.value() / config.lambda1;
    let assembly_ok = w_eps <= assembled + 1e-12 * (1.0 + assembled.abs());

    let bands = band_measures(&a, &w, config.lambda1)?;
    let band_total: f64 = bands.iter().sum();
    let above: CellSet = (0..grid.cell_count() as u32)
        .filter(|&c| a.value(c) > config.lambda1)
        .collect();
    let w_above = w.measure(&above)?;
    let band_sum_ok = (band_total - w_above).abs() <= 1e-12 * (1.0 + w_above.abs());

    Ok(TrialResult {
        trial: t,
        seed,
        lhs,
        rhs,
        ratio,
        w_eps,
        ledger,
        assembly_ok,
        band_sum_ok,
        chebyshev_ok,
    })
}

fn aggregate(trials: &[TrialResult], c_phi: f64) -> Aggregate {
    if trials.is_empty() {
        return Aggregate {
            c_phi,
            ..Default::default()
        };
    }
    let mut ratios: Vec<f64> = trials.iter().map(|t| t.ratio).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let n = ratios.len();
    let max_ratio = ratios[n - 1];
    let mean_ratio = ratios.iter().sum::<f64>() / n as f64;
    let idx = ((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1;
    Aggregate {
        max_ratio,
        mean_ratio,
        p95_ratio: ratios[idx],
        c_phi,
    }
}

/// Sanity-suite configuration (Fefferman-Stein ratios, composed-weight
/// monotonicity, adversarial single-maximal trend).
#[derive(Debug, Clone)]
pub struct SanityConfig {
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    /// delta of the loglog weight used in the monotonicity check.
    pub delta: f64,
    pub alpha: f64,
    /// Resolutions for the adversarial trend table.
    pub levels: Vec<u32>,
    pub climb_steps: usize,
}

impl Default for SanityConfig {
    fn default() -> Self {
        SanityConfig {
            d: 1,
            trials: 100,
            seed: 0,
            delta: 1.0,
            alpha: 0.5,
            levels: vec![6, 8, 10],
            climb_steps: 48,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrendRow {
    pub level: u32,
    pub cell: u32,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct SanityReport {
    pub config: SanityConfig,
    pub fs_max_ratio: f64,
    pub fs_trials: usize,
    pub mono_violations: usize,
    pub mono_trials: usize,
    pub adversarial: Vec<TrendRow>,
}

/// (a) Fefferman-Stein ratios weak_norm(Mf, w) / ||f||_{L^1(Mw)} over random
/// trials; (b) pointwise monotonicity of the composed weights
/// M_alpha(M_{loglog delta} w) >= M_alpha(M w), exact; (c) hill-climbing over
/// spike placements in w maximizing weak_norm(A^S f, w) / ||f||_{L^1(M_alpha w)}
/// across resolutions. This produces a trend table only, no boundedness assertion (that
/// direction fails in general).
pub fn sanity_suite(config: &SanityConfig) -> Result<SanityReport> {
    let grid = Grid::new(config.d, 8.min(24 / config.d as u32))?;

    // (a) Fefferman-Stein
    let mut fs_max: f64 = 0.0;
    for t in 0..config.trials {
        let seed = trial_seed(config.seed, t);
        let f = GridFunction::random_uniform(grid, derived_seed(seed, 1), 0.0, 1.0)?;
        let w = GridFunction::random_uniform(grid, derived_seed(seed, 2), 0.0, 1.0)?;
        let mf = dyadic_frac_maximal(&f, 0.0)?;
        let mw = dyadic_frac_maximal(&w, 0.0)?;
        let num = weak_norm(&mf, &w)?;
        let den = l1_against_weight(&f, &mw)?;
        if den > 0.0 {
            fs_max = fs_max.max(num / den);
        }
    }

    // (b) composed-weight monotonicity, exact pointwise comparison
    let phi_ll = YoungFunction::loglog(config.delta)?;
    let phi_lin = YoungFunction::linear();
    let mut violations = 0usize;
    for t in 0..config.trials {
        let seed = trial_seed(config.seed ^ 0x6d6f6e6f, t);
        let w = GridFunction::random_uniform(grid, seed, 0.0, 1.0)?;
        let hi = iterated_bound_weight(&w, &phi_ll, config.alpha)?;
        let lo = iterated_bound_weight(&w, &phi_lin, config.alpha)?;
        violations += hi
            .values()
            .iter()
            .zip(lo.values())
            .filter(|(a, b)| a < b)
            .count();
    }

    // (c) adversarial spike search, deterministic in the seed
    let mut adversarial = Vec::new();
    for &level in &config.levels {
        let lgrid = Grid::new(config.d, level)?;
        let fseed = derived_seed(config.seed, 0xF0 + level as u64);
        let f = GridFunction::random_uniform(lgrid, fseed, 0.0, 1.0)?;
        let family = crate::sparse::generate_sparse(&crate::sparse::GenerateParams {
            seed: derived_seed(config.seed, 0x5A + level as u64),
            d: config.d,
            level,
            lambda0: 0.25,
            n_regular: 2,
            level_gap: 2,
            target_size: 40,
        })?
        .family;
        let a = sparse_operator(&f, &family, config.alpha, 1.0)?;
        let m_alpha_w_ratio = |cell: u32| -> Result<f64> {
            let w = GridFunction::spike(lgrid, cell, 1.0, 0.0)?;
            let num = weak_norm(&a, &w)?;
            let den = l1_against_weight(&f, &dyadic_frac_maximal(&w, config.alpha)?)?;
            Ok(if den > 0.0 { num / den } else { 0.0 })
        };
        let cells = lgrid.cell_count() as u64;
        let mut state = derived_seed(config.seed, 0xC1 + level as u64);
        let mut next = || {
            state = crate::numeric::splitmix64(state);
            state
        };
        let mut best_cell = (next() % cells) as u32;
        let mut best = m_alpha_w_ratio(best_cell)?;
        for step in 0..config.climb_steps {
            let proposal = if step % 2 == 0 {
                // local move
                let delta = (next() % 3) as i64 - 1;
                ((best_cell as i64 + delta).rem_euclid(cells as i64)) as u32
            } else {
                (next() % cells) as u32
            };
            let r = m_alpha_w_ratio(proposal)?;
            if r > best {
                best = r;
                best_cell = proposal;
            }
        }
        adversarial.push(TrendRow {
            level,
            cell: best_cell,
            ratio: best,
        });
    }

    Ok(SanityReport {
        config: config.clone(),
        fs_max_ratio: fs_max,
        fs_trials: config.trials,
        mono_violations: violations,
        mono_trials: config.trials,
        adversarial,
    })
}
