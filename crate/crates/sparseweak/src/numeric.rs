//! Small numeric kernels shared across modules: exact powers of two,
//! compensated summation, golden-section maximization, and monotone bisection.

/// 2^e, exact, for |e| <= 1022 (constructed from the exponent bits).
pub fn pow2(e: i32) -> f64 {
    assert!((-1022..=1023).contains(&e), "pow2 exponent out of range: {e}");
    f64::from_bits(((1023 + e) as u64) << 52)
}

/// Neumaier compensated sum. Order-sensitivity drops to O(n * eps^2), so
/// differently grouped accumulations of the same terms agree to well below
/// 1e-15 relative at desk scale.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns (argmax, max). Runs until the bracket collapses to floating-point
/// resolution or `max_iters` evaluational steps.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, max_iters: u32) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iters {
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection for `f(x) = target` with `f` nondecreasing and a valid bracket
/// (`f(lo) <= target <= f(hi)`). Stops at combined absolute/relative width
/// `tol` or after `max_iters`.
pub fn bisect_increasing(
    f: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iters: u32,
) -> f64 {
    for _ in 0..max_iters {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * mid.abs().max(1.0) {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// SplitMix64 step, used to derive independent per-trial seeds from a master
/// seed without any sequential RNG state.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
