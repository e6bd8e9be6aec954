//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (visible under `--nocapture`). Regression anchors
//! were pinned from the first-build oracle run on this machine and must
//! reproduce exactly for identical seeds.

// pinned anchors carry all 17 digits
#![allow(clippy::excessive_precision)]

use std::sync::OnceLock;

use sparseweak::config::{ExperimentConfig, GridFnSpec, RemovalMode, SparseSpec, YoungSpec};
use sparseweak::grid::{frac_average, CellSet, DyadicCube, Grid, GridFunction};
use sparseweak::maximal::{dyadic_frac_maximal, luxemburg_norm, orlicz_maximal};
use sparseweak::report::sanity_json;
use sparseweak::sparse::{
    generate_sparse, GenerateParams, LayerDecomposition, SparseFamily, VerifyMode,
};
use sparseweak::weaktype::{
    lemma_check, run_experiment, sanity_suite, ExperimentReport, SanityConfig,
};
use sparseweak::young::{CPhi, YoungFunction};

// ---- first-build regression anchors -------------------------------------

/// Criterion 7 suite (d=1, L=10, nu=1, alpha=1/2, N=2, loglog delta=1,
/// lambda0=1/32, gap 6, master seed 7001, 200 trials): max ratio.
const C7_MAX_RATIO: f64 = 6.388_864_975_564_874_1e-1;

/// Criterion 8: max C_k over the criterion 7 suite (the exceptional set is
/// empty at these parameters, so the inferred constants all vanish).
const C8_SUITE_MAX_CK: f64 = 0.0;

/// Criterion 8 chain anchor (depth-11 chain, f = 1/3, Lambda1 = 3, nu = 1):
/// inferred constant C_1; lhs and the bounds have closed forms asserted below.
const C8_CHAIN_C1: f64 = 3.740_818_419_118_754_9e-2;

/// alpha = 0 companion suite (seed 7, lambda0 = 1/8, gap 4): max ratio.
const A0_MAX_RATIO: f64 = 5.701_123_829_870_733_4e-1;

/// Criterion 9: Fefferman-Stein max ratio over 100 trials at seed 90.
const C9_FS_MAX_RATIO: f64 = 7.872_889_463_082_805_0e-1;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0f64).max(a.abs().max(b.abs()))
}

/// Closed-form conjugate of t^p.
fn power_conjugate(p: f64, s: f64) -> f64 {
    let pp = p / (p - 1.0);
    s.powf(pp) / (pp * p.powf(pp / p))
}

fn criterion7_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_shell();
    cfg.d = 1;
    cfg.level = 10;
    cfg.alpha = 0.5;
    cfg.nu = 1.0;
    cfg.lambda1 = 4.0;
    cfg.trials = 200;
    cfg.seed = seed;
    cfg.young = YoungSpec {
        kind: "loglog".into(),
        p: None,
        delta: Some(1.0),
        table: None,
    };
    cfg.sparse = SparseSpec::Generate {
        seed: None,
        lambda0: 1.0 / 32.0,
        n_regular: 2,
        level_gap: 6,
        target_size: 3,
    };
    cfg
}

fn base_suite() -> &'static ExperimentReport {
    static SUITE: OnceLock<ExperimentReport> = OnceLock::new();
    SUITE.get_or_init(|| run_experiment(&criterion7_config(7001)).expect("suite runs"))
}

// ---- criteria ------------------------------------------------------------

#[test]
fn criterion_1_young_engine_closed_forms() {
    let p2 = YoungFunction::power(2.0).unwrap();
    let c = match p2.c_phi(1e-9).unwrap() {
        CPhi::Converged { value, .. } => value,
        other => panic!("c_phi(t^2) must converge, got {other:?}"),
    };
    assert!(
        (c - 0.4082108).abs() < 1e-6,
        "c_phi(t^2) = {c}, want 0.4082108 +- 1e-6"
    );
    for &p in &[1.5, 2.0, 3.0] {
        let phi = YoungFunction::power(p).unwrap();
        for i in 0..60 {
            let s = 1e-3 * (1e6f64).powf(i as f64 / 59.0);
            let got = phi.conjugate(s).unwrap();
            let want = power_conjugate(p, s);
            assert!(
                rel_close(got, want, 1e-9),
                "conjugate mismatch p={p} s={s}: {got} vs {want}"
            );
        }
    }
    println!("[criterion 1] PASS - c_phi(t^2) = {c:.7}; conjugates match closed form at 1e-9 across p in {{1.5,2,3}} x 60 points");
}

#[test]
fn criterion_2_divergence_classifier() {
    assert!(
        YoungFunction::linear().c_phi(1e-9).unwrap().is_divergent(),
        "phi(t) = t must be classified divergent"
    );
    let mut values = Vec::new();
    for &delta in &[0.25, 0.5, 1.0, 2.0] {
        let phi = YoungFunction::loglog(delta).unwrap();
        match phi.c_phi(1e-9).unwrap() {
            CPhi::Converged { value, terms } => {
                assert!(value.is_finite() && value > 0.0);
                values.push((delta, value, terms));
            }
            CPhi::Divergent { .. } => panic!("loglog delta={delta} must converge"),
        }
    }
    println!("[criterion 2] PASS - linear diverges; loglog converges: {values:?}");
}

#[test]
fn criterion_3_orlicz_reduction() {
    let grid = Grid::new(1, 8).unwrap();
    let lin = YoungFunction::linear();
    for seed in 0..100u64 {
        let w = GridFunction::random_uniform(grid, seed, 0.0, 1.0).unwrap();
        let orl = orlicz_maximal(&w, &lin).unwrap();
        let hl = dyadic_frac_maximal(&w, 0.0).unwrap();
        for (cell, (a, b)) in orl.values().iter().zip(hl.values()).enumerate() {
            assert!(
                (a - b).abs() <= 1e-12 * (1.0 + b.abs()),
                "seed {seed} cell {cell}: {a} vs {b}"
            );
        }
    }
    println!("[criterion 3] PASS - orlicz_maximal(phi=t) equals dyadic maximal within 1e-12 on 100 seeded weights (d=1, L=8)");
}

#[test]
fn criterion_4_maximal_oracle() {
    // 50 seeded functions across d <= 2, L <= 6; naive all-cubes enumeration
    // via per-cube fractional averages.
    let cases: [(usize, u32, u64); 3] = [(1, 6, 25), (2, 4, 15), (2, 5, 10)];
    let mut checked = 0usize;
    for (d, level, n) in cases {
        let grid = Grid::new(d, level).unwrap();
        for seed in 0..n {
            let f = GridFunction::random_uniform(grid, seed ^ 0xacce97, 0.0, 1.0).unwrap();
            for &alpha in &[0.0, 0.5] {
                let fast = dyadic_frac_maximal(&f, alpha).unwrap();
                for cell in 0..grid.cell_count() as u32 {
                    let mut best = f64::NEG_INFINITY;
                    for lvl in 0..=level {
                        let q = grid.cell_ancestor(cell, lvl);
                        best = best.max(frac_average(&f, &q, alpha).unwrap());
                    }
                    let got = fast.value(cell);
                    assert!(
                        (got - best).abs() <= 1e-15 * (1.0f64).max(best.abs()),
                        "d={d} L={level} seed={seed} alpha={alpha} cell={cell}: {got} vs {best}"
                    );
                }
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 50);
    println!("[criterion 4] PASS - tree sweep equals naive enumeration (<=1e-15 rel) on 50 seeded functions, d<=2, L<=6");
}

#[test]
fn criterion_5_generator_soundness() {
    // 1000 seeded generations across a parameter sweep; all must pass both
    // verifiers.
    let combos = [
        (1usize, 10u32, 0.5f64, 2u32, 2u32, 50usize),
        (1, 12, 0.125, 2, 4, 16),
        (2, 6, 0.25, 3, 2, 30),
        (1, 10, 0.03125, 2, 6, 3),
        (2, 5, 0.25, 4, 2, 20),
    ];
    for seed in 0..1000u64 {
        let (d, level, lambda0, n, gap, target) = combos[(seed % 5) as usize];
        let generated = generate_sparse(&GenerateParams {
            seed,
            d,
            level,
            lambda0,
            n_regular: n,
            level_gap: gap,
            target_size: target,
        })
        .unwrap();
        let fam = &generated.family;
        let sparse_rep = fam.verify_sparse(VerifyMode::CarlesonSum);
        assert!(
            sparse_rep.pass,
            "seed {seed}: carleson ratio {} > {}",
            sparse_rep.worst_ratio, sparse_rep.bound
        );
        assert!(
            fam.verify_n_regular(n).unwrap().pass,
            "seed {seed}: regularity violated"
        );
    }
    println!("[criterion 5] PASS - 1000 seeded families pass verify_sparse and verify_n_regular");
}

#[test]
fn criterion_6_decomposition_invariants() {
    let lambda1 = 4.0;
    let lambda0 = 0.125;
    let grid = Grid::new(1, 12).unwrap();
    let mut nontrivial_bottom = 0usize;
    for seed in 0..30u64 {
        let fam = generate_sparse(&GenerateParams {
            seed,
            d: 1,
            level: 12,
            lambda0,
            n_regular: 2,
            level_gap: 4,
            target_size: 12,
        })
        .unwrap()
        .family;
        let f = GridFunction::random_uniform(grid, seed ^ 0xdec0, 0.0, 0.4).unwrap();
        for &alpha in &[0.0, 0.5] {
            let dec = LayerDecomposition::build(&fam, &f, alpha, lambda1).unwrap();
            let factor = 1.0 - lambda1 * lambda0.powf(1.0 - alpha);
            for kd in dec.per_k.values() {
                // layers partition S_k
                let total: usize = kd.layers.iter().map(|l| l.len()).sum();
                assert_eq!(total, kd.members.len(), "seed {seed} k {}", kd.k);
                // E_Q pairwise disjoint across all of S_k
                for (i, &a) in kd.members.iter().enumerate() {
                    for &b in &kd.members[i + 1..] {
                        assert!(
                            kd.e_set(a).unwrap().is_disjoint(kd.e_set(b).unwrap()),
                            "seed {seed} k {}: E sets intersect",
                            kd.k
                        );
                    }
                }
                for &id in &kd.members {
                    let q = &fam.cubes()[id];
                    let v = kd.layer_of[&id];
                    // coverage: cells(Q) = union of E-layers l = 0..u-1 inside
                    // Q, plus Q_u (so eps ∩ Q is covered cellwise for any eps)
                    let mut covered = kd.bottom_set(&fam, id).unwrap();
                    let max_l = kd.u.min((kd.layers.len() - v) as u64);
                    for l in 0..max_l {
                        for &qp in &kd.layers[v + l as usize] {
                            if q.contains(&fam.cubes()[qp]) {
                                covered = covered.union(kd.e_set(qp).unwrap());
                            }
                        }
                    }
                    assert_eq!(
                        covered,
                        grid.cells_of(q),
                        "seed {seed} k {} coverage fails",
                        kd.k
                    );
                    // bottom-average lower bound
                    let avg = kd.averages[&id];
                    let e_avg = sparseweak::grid::frac_scale(q.level(), 1, alpha)
                        * f.measure(kd.e_set(id).unwrap()).unwrap();
                    assert!(
                        e_avg >= factor * avg - 1e-12 * (1.0 + avg),
                        "seed {seed} k {} alpha {alpha}: bottom bound {e_avg} < {}",
                        kd.k,
                        factor * avg
                    );
                    if e_avg < avg {
                        nontrivial_bottom += 1;
                    }
                }
            }
        }
    }
    assert!(nontrivial_bottom > 0, "suite never exercised a nontrivial E_Q");
    println!("[criterion 6] PASS - partition, E-disjointness, coverage and bottom bound hold on 30 seeded families x alpha in {{0, 1/2}} ({nontrivial_bottom} nontrivial E_Q rows)");
}

#[test]
fn criterion_7_weak_type_desk_scale() {
    let base = base_suite();
    assert_eq!(base.trials.len(), 200);
    for t in &base.trials {
        assert!(t.ratio.is_finite(), "trial {} ratio not finite", t.trial);
        assert!(t.rhs > 0.0 || t.lhs == 0.0, "trial {}", t.trial);
    }
    let max = base.aggregate.max_ratio;
    assert_eq!(
        max.to_bits(),
        C7_MAX_RATIO.to_bits(),
        "pinned max ratio not reproduced: got {max:e}, pinned {C7_MAX_RATIO:e}"
    );
    // five fresh seed batches stay within a factor 2 of the pin
    for s in 1..=5u64 {
        let r = run_experiment(&criterion7_config(7001 + s)).unwrap();
        let m = r.aggregate.max_ratio;
        assert!(
            (0.5 * C7_MAX_RATIO..=2.0 * C7_MAX_RATIO).contains(&m),
            "seed batch {s}: max ratio {m} outside [{}, {}]",
            0.5 * C7_MAX_RATIO,
            2.0 * C7_MAX_RATIO
        );
    }
    println!(
        "[criterion 7] PASS - 200 trials finite; max ratio {max:.12} reproduces the pin exactly; 5 fresh batches within 2x"
    );
}

#[test]
fn criterion_8_lemma_ledger() {
    // (a) pinned constant over the criterion 7 suite: every ledger row obeys
    // lhs_k <= layer_bound + (C / psi^{-1}(2^(2^k))) rhs with C = max C_k
    // from the first build, and the internal layer/bottom estimates hold.
    let phi = YoungFunction::loglog(1.0).unwrap();
    let base = base_suite();
    let mut rows = 0usize;
    for t in &base.trials {
        assert!(t.assembly_ok, "trial {}: assembled chain fails", t.trial);
        assert!(t.band_sum_ok, "trial {}: band sums inconsistent", t.trial);
        assert!(t.chebyshev_ok, "trial {}: nu >= 1 comparison fails", t.trial);
        let rhs = t.rhs / base.aggregate.c_phi;
        for e in &t.ledger {
            assert!(e.c_k <= C8_SUITE_MAX_CK, "trial {} k {}", t.trial, e.k);
            assert!(e.layer_part_ok && e.bottom_part_ok, "trial {} k {}", t.trial, e.k);
            let psi_inv = phi.conjugate_inverse((e.k as f64).exp2()).unwrap();
            let budget = e.layer_bound + C8_SUITE_MAX_CK / psi_inv * rhs;
            assert!(
                e.lhs_k <= budget + 1e-12 * (1.0 + budget),
                "trial {} k {}: {} > {budget}",
                t.trial,
                e.k,
                e.lhs_k
            );
            rows += 1;
        }
    }

    // (b) chain anchor with a nonempty exceptional set: closed forms.
    let grid = Grid::new(1, 10).unwrap();
    let cubes: Vec<DyadicCube> = (0..=10)
        .map(|l| DyadicCube::new(l, vec![0]).unwrap())
        .collect();
    let fam = SparseFamily::new(grid, cubes, 0.25, Some(1)).unwrap();
    let f = GridFunction::constant(grid, 1.0 / 3.0).unwrap();
    let w = GridFunction::constant(grid, 1.0).unwrap();
    let entry = lemma_check(
        1,
        &f,
        &w,
        &fam,
        &phi,
        0.0,
        1.0,
        3.0,
        RemovalMode::FracMaximal,
    )
    .unwrap();
    // every chain cube has average exactly 1/3, eps = [0, 2^-9):
    // lhs = (11 + 10)/3 * 2^-10 = 21/3072, layer bound = (2/3) 2^-9,
    // bottom = lhs - layer bound (nu = 1 makes Chebyshev an identity)
    assert!(rel_close(entry.lhs_k, 21.0 / 3072.0, 1e-13));
    assert!(rel_close(entry.layer_bound, 2.0 / 3.0 / 512.0, 1e-13));
    assert!(rel_close(entry.layer_sum, entry.layer_bound, 1e-12));
    assert!(rel_close(entry.bottom_sum, entry.lhs_k - entry.layer_bound, 1e-12));
    assert!(rel_close(entry.chebyshev_sum, entry.lhs_k, 1e-13));
    assert!(entry.layer_part_ok && entry.bottom_part_ok);
    assert!(
        rel_close(entry.c_k, C8_CHAIN_C1, 1e-9),
        "chain C_1 = {} vs pinned {C8_CHAIN_C1}",
        entry.c_k
    );
    println!(
        "[criterion 8] PASS - {rows} suite ledger rows within the pinned budget (C = {C8_SUITE_MAX_CK}); chain anchor C_1 = {:.12} matches closed-form lhs/layer/bottom",
        entry.c_k
    );
}

#[test]
fn criterion_9_sanity_suite() {
    let cfg = SanityConfig {
        seed: 90,
        ..Default::default()
    };
    let report = sanity_suite(&cfg).unwrap();
    assert!(
        report.fs_max_ratio <= C9_FS_MAX_RATIO * (1.0 + 1e-12),
        "FS ratio {} exceeds pinned {C9_FS_MAX_RATIO}",
        report.fs_max_ratio
    );
    assert_eq!(report.mono_violations, 0, "composed-weight monotonicity violated");
    // byte-deterministic trend table
    let again = sanity_suite(&cfg).unwrap();
    assert_eq!(sanity_json(&report), sanity_json(&again));
    assert_eq!(report.adversarial.len(), 3);
    println!(
        "[criterion 9] PASS - FS max {:.12} <= pin; 0/{} monotonicity violations; trend table byte-deterministic",
        report.fs_max_ratio, report.mono_trials
    );
}

// ---- supplementary regression anchors ------------------------------------

/// alpha = 0 companion suite (richer three-level families): ledger rows all
/// carry finite constants and the aggregate reproduces its pin.
#[test]
fn companion_alpha0_suite_reproduces_pin() {
    let mut cfg = ExperimentConfig::default_shell();
    cfg.d = 1;
    cfg.level = 10;
    cfg.alpha = 0.0;
    cfg.nu = 1.0;
    cfg.lambda1 = 4.0;
    cfg.trials = 200;
    cfg.seed = 7;
    cfg.young = YoungSpec {
        kind: "loglog".into(),
        p: None,
        delta: Some(1.0),
        table: None,
    };
    cfg.sparse = SparseSpec::Generate {
        seed: None,
        lambda0: 0.125,
        n_regular: 2,
        level_gap: 4,
        target_size: 7,
    };
    cfg.f_spec = GridFnSpec::Generator {
        kind: "random-uniform".into(),
        seed: None,
        lo: 0.0,
        hi: 0.4,
        cell: None,
        height: 1.0,
        floor: 0.0,
        value: 1.0,
    };
    let report = run_experiment(&cfg).unwrap();
    let mut max_ck: f64 = 0.0;
    for t in &report.trials {
        for e in &t.ledger {
            assert!(e.c_k.is_finite());
            max_ck = max_ck.max(e.c_k);
        }
    }
    assert_eq!(report.aggregate.max_ratio.to_bits(), A0_MAX_RATIO.to_bits());
    assert_eq!(max_ck, 0.0);
}

/// The Luxemburg-norm ordering behind the criterion 9 monotonicity check,
/// asserted per cube on a small grid for the record.
#[test]
fn luxemburg_ordering_per_cube() {
    let grid = Grid::new(1, 6).unwrap();
    let ll = YoungFunction::loglog(1.0).unwrap();
    let lin = YoungFunction::linear();
    let w = GridFunction::random_uniform(grid, 99, 0.0, 2.0).unwrap();
    for level in 0..=6u32 {
        for linear in 0..grid.level_size(level) {
            let q = grid.cube_at(level, linear);
            assert!(luxemburg_norm(&w, &q, &ll).unwrap() >= luxemburg_norm(&w, &q, &lin).unwrap());
        }
    }
}

/// Band-partition identity on the sparse operator output (the reduction that
/// turns the single-band estimate into the full weak-type bound).
#[test]
fn band_partition_identity() {
    let grid = Grid::new(1, 10).unwrap();
    let fam = generate_sparse(&GenerateParams {
        seed: 3,
        d: 1,
        level: 10,
        lambda0: 0.25,
        n_regular: 2,
        level_gap: 2,
        target_size: 40,
    })
    .unwrap()
    .family;
    let f = GridFunction::random_uniform(grid, 5, 0.0, 4.0).unwrap();
    let w = GridFunction::random_uniform(grid, 6, 0.0, 1.0).unwrap();
    let a = sparseweak::sparse::sparse_operator(&f, &fam, 0.0, 1.0).unwrap();
    let lambda1 = 0.5;
    let bands = sparseweak::weaktype::band_measures(&a, &w, lambda1).unwrap();
    let total: f64 = bands.iter().sum();
    let above: CellSet = (0..grid.cell_count() as u32)
        .filter(|&c| a.value(c) > lambda1)
        .collect();
    let want = w.measure(&above).unwrap();
    assert!(rel_close(total, want, 1e-12));
}
