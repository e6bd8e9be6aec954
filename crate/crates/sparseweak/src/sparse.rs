//! Sparse families of dyadic cubes: verification (Carleson packing and
//! N-regularity), a seeded generator, the fractional sparse operator
//! A^S_{alpha,nu}, and the stratification used by the weak-type proof:
//! level sets S_k, layer decomposition S_{k,v}, the pairwise-disjoint sets
//! E_Q, and the depth-u bottom sets Q_u.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{check_alpha, frac_average, CellSet, DyadicCube, Grid, GridFunction};

/// Which reading of the sparseness condition `verify_sparse` checks.
///
/// The packing sum over all family subcubes of Q bounded by (1/lambda0)|Q|
/// is the default; the literal union-volume reading is vacuous for subcubes
/// of Q (their union never exceeds |Q|) and is kept only for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VerifyMode {
    #[default]
    CarlesonSum,
    UnionVolume,
}

/// A finite set of dyadic cubes within one grid, with its sparseness
/// parameter lambda0 in (0,1) and optional regularity bound N.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFamily {
    grid: Grid,
    cubes: Vec<DyadicCube>,
    lambda0: f64,
    n_regular: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct SparseReport {
    pub pass: bool,
    pub worst_ratio: f64,
    pub worst_cube: Option<DyadicCube>,
    pub bound: f64,
    pub mode: VerifyMode,
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub pass: bool,
    pub worst_count: usize,
    pub worst_cube: Option<DyadicCube>,
    pub bound: u32,
}

impl SparseFamily {
    /// Canonical construction: cubes are sorted by (level, index) and must be
    /// distinct, valid for the grid.
    pub fn new(
        grid: Grid,
        mut cubes: Vec<DyadicCube>,
        lambda0: f64,
        n_regular: Option<u32>,
    ) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0 < 1.0) {
            return Err(Error::domain(format!(
                "lambda0 must lie in (0,1), got {lambda0}"
            )));
        }
        if cubes.is_empty() {
            return Err(Error::domain("sparse family must contain at least one cube"));
        }
        for q in &cubes {
            grid.validate_cube(q)?;
        }
        cubes.sort_by(|a, b| a.level().cmp(&b.level()).then_with(|| a.index().cmp(b.index())));
        if cubes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("sparse family contains duplicate cubes"));
        }
        Ok(SparseFamily {
            grid,
            cubes,
            lambda0,
            n_regular,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn n_regular(&self) -> Option<u32> {
        self.n_regular
    }

    /// Restriction to a subset of cube ids, keeping the parameters.
    pub fn restrict(&self, ids: &[usize]) -> Result<SparseFamily> {
        let cubes = ids.iter().map(|&i| self.cubes[i].clone()).collect();
        SparseFamily::new(self.grid, cubes, self.lambda0, self.n_regular)
    }

    /// Children in the family: for each cube, the maximal elements of its
    /// strict family subcubes. Computed via nearest strict ancestors (the
    /// ancestors of a dyadic cube form a chain, so "nearest" is unique).
    pub fn family_children(&self) -> Vec<Vec<usize>> {
        let parents = self.nearest_ancestors();
        let mut children = vec![Vec::new(); self.cubes.len()];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        children
    }

    /// For each cube, the nearest strict ancestor within the family.
    pub fn nearest_ancestors(&self) -> Vec<Option<usize>> {
        let index: HashMap<&DyadicCube, usize> =
            self.cubes.iter().enumerate().map(|(i, q)| (q, i)).collect();
        self.cubes
            .iter()
            .map(|q| {
                let mut level = q.level();
                while level > 0 {
                    level -= 1;
                    let anc = q.ancestor_at(level);
                    if let Some(&i) = index.get(&anc) {
                        return Some(i);
                    }
                }
                None
            })
            .collect()
    }

    /// Carleson packing check: for every Q in the family, the volumes of all
    /// family subcubes of Q (Q included) must sum to at most (1/lambda0)|Q|.
    /// Reports the worst ratio and cube. The union-volume mode measures the
    /// union of the family subcubes instead (vacuous by construction).
    pub fn verify_sparse(&self, mode: VerifyMode) -> SparseReport {
        let bound = 1.0 / self.lambda0;
        let mut worst_ratio = f64::NEG_INFINITY;
        let mut worst_cube = None;
        for q in &self.cubes {
            let ratio = match mode {
                VerifyMode::CarlesonSum => {
                    let sum: f64 = self
                        .cubes
                        .iter()
                        .filter(|p| q.contains(p))
                        .map(|p| p.volume())
                        .sum();
                    sum / q.volume()
                }
                VerifyMode::UnionVolume => {
                    // among nested-or-disjoint cubes the union volume is the
                    // volume sum of the maximal elements
                    let subs: Vec<&DyadicCube> =
                        self.cubes.iter().filter(|p| q.contains(p)).collect();
                    let union: f64 = subs
                        .iter()
                        .filter(|p| !subs.iter().any(|r| r.strictly_contains(p)))
                        .map(|p| p.volume())
                        .sum();
                    union / q.volume()
                }
            };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_cube = Some(q.clone());
            }
        }
        SparseReport {
            pass: worst_ratio <= bound * (1.0 + 1e-12),
            worst_ratio,
            worst_cube,
            bound,
            mode,
        }
    }

    /// N-regularity check: every cube has at most N family children.
    pub fn verify_n_regular(&self, n: u32) -> Result<RegularityReport> {
        if n == 0 {
            return Err(Error::domain("regularity bound N must be >= 1"));
        }
        let children = self.family_children();
        let mut worst_count = 0usize;
        let mut worst_cube = None;
        for (i, ch) in children.iter().enumerate() {
            if ch.len() > worst_count {
                worst_count = ch.len();
                worst_cube = Some(self.cubes[i].clone());
            }
        }
        Ok(RegularityReport {
            pass: worst_count <= n as usize,
            worst_count,
            worst_cube,
            bound: n,
        })
    }

    /// Serialize: header `d L lambda0 N` (N = 0 when unset), then one cube
    /// per line as `level i_1 ... i_d`.
    pub fn to_writer(&self, out: &mut impl Write) -> Result<()> {
        writeln!(
            out,
            "{} {} {} {}",
            self.grid.dim(),
            self.grid.finest_level(),
            crate::report::fmt_f64(self.lambda0),
            self.n_regular.unwrap_or(0)
        )?;
        for q in &self.cubes {
            let idx: Vec<String> = q.index().iter().map(|i| i.to_string()).collect();
            writeln!(out, "{} {}", q.level(), idx.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.to_writer(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("family text is utf-8")
    }

    pub fn from_reader(input: &mut impl BufRead) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("missing sparse-family header"))?;
        let mut toks = header.split_whitespace();
        let d: usize = parse_tok(&mut toks, "d")?;
        let level: u32 = parse_tok(&mut toks, "L")?;
        let lambda0: f64 = parse_tok(&mut toks, "lambda0")?;
        let n: u32 = parse_tok(&mut toks, "N")?;
        let grid = Grid::new(d, level)?;
        let mut cubes = Vec::new();
        for line in lines {
            let mut toks = line.split_whitespace();
            let lvl: u32 = parse_tok(&mut toks, "cube level")?;
            let idx: Vec<u64> = toks
                .map(|t| {
                    t.parse()
                        .map_err(|e| Error::parse(format!("bad cube index {t:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if idx.len() != d {
                return Err(Error::parse(format!(
                    "cube line has {} indices, expected {d}",
                    idx.len()
                )));
            }
            cubes.push(DyadicCube::new(lvl, idx)?);
        }
        SparseFamily::new(grid, cubes, lambda0, if n == 0 { None } else { Some(n) })
    }
}

fn parse_tok<T: std::str::FromStr>(
    toks: &mut std::str::SplitWhitespace<'_>,
    what: &str,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    toks.next()
        .ok_or_else(|| Error::parse(format!("missing {what}")))?
        .parse()
        .map_err(|e| Error::parse(format!("bad {what}: {e}")))
}

/// Parameters for the seeded family generator.
#[derive(Debug, Clone, Copy)]
pub struct GenerateParams {
    pub seed: u64,
    pub d: usize,
    pub level: u32,
    pub lambda0: f64,
    pub n_regular: u32,
    pub level_gap: u32,
    pub target_size: usize,
}

#[derive(Debug, Clone)]
pub struct GeneratedFamily {
    pub family: SparseFamily,
    /// False when the budget or the grid depth ran out before target_size.
    pub reached_target: bool,
}

/// Deterministic-in-seed top-down generator. Starting from the root, each
/// accepted cube spawns at most N uniformly chosen descendants `level_gap`
/// levels down. A candidate is pruned when it would push the running Carleson
/// sum of any accepted ancestor past (1/lambda0)|ancestor|, and the spawn
/// count per cube is capped so the spawned volume fraction stays at most
/// lambda0: that keeps the union of strict family subcubes of every Q within
/// lambda0 |Q|, which is what the layer estimates of the weak-type proof
/// consume.
pub fn generate_sparse(params: &GenerateParams) -> Result<GeneratedFamily> {
    let GenerateParams {
        seed,
        d,
        level,
        lambda0,
        n_regular,
        level_gap,
        target_size,
    } = *params;
    if n_regular == 0 {
        return Err(Error::precondition("generator requires N >= 1"));
    }
    if level_gap == 0 {
        return Err(Error::precondition("generator requires level_gap >= 1"));
    }
    if target_size == 0 {
        return Err(Error::precondition("generator requires target_size >= 1"));
    }
    if !(lambda0 > 0.0 && lambda0 < 1.0) {
        return Err(Error::domain(format!(
            "lambda0 must lie in (0,1), got {lambda0}"
        )));
    }
    let grid = Grid::new(d, level)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut accepted: Vec<DyadicCube> = vec![grid.root()];
    let mut packing: Vec<f64> = vec![grid.root().volume()];
    let mut by_cube: HashMap<DyadicCube, usize> = HashMap::new();
    by_cube.insert(grid.root(), 0);

    // volume-fraction cap: n_spawn * 2^(-gap*d) <= lambda0
    let gap_cells = (level_gap as u64 * d as u64).min(62);
    let per_child = 1.0 / (1u64 << gap_cells) as f64;
    let frac_cap = (lambda0 / per_child * (1.0 + 1e-12)).floor() as u64;
    let spawn_cap = (n_regular as u64).min(frac_cap) as usize;

    let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    queue.push_back(0);
    let budget = 1.0 / lambda0;

    'outer: while let Some(qi) = queue.pop_front() {
        if accepted.len() >= target_size {
            break;
        }
        let parent = accepted[qi].clone();
        if parent.level() + level_gap > level || spawn_cap == 0 {
            continue;
        }
        let n_candidates = 1usize << (level_gap as usize * d);
        let n_spawn = spawn_cap.min(n_candidates);
        let mut picks = rand::seq::index::sample(&mut rng, n_candidates, n_spawn).into_vec();
        picks.sort_unstable();
        for pick in picks {
            if accepted.len() >= target_size {
                break 'outer;
            }
            let mut offsets = vec![0u64; d];
            let mut rest = pick;
            let side = 1usize << level_gap;
            for j in (0..d).rev() {
                offsets[j] = (rest % side) as u64;
                rest /= side;
            }
            let cand = parent.descendant(level_gap, &offsets)?;
            let cand_vol = cand.volume();
            // check the running Carleson budget at every accepted ancestor
            let mut ok = true;
            for anc_level in 0..cand.level() {
                let anc = cand.ancestor_at(anc_level);
                if let Some(&ai) = by_cube.get(&anc) {
                    if packing[ai] + cand_vol > budget * accepted[ai].volume() * (1.0 + 1e-12) {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            for anc_level in 0..cand.level() {
                let anc = cand.ancestor_at(anc_level);
                if let Some(&ai) = by_cube.get(&anc) {
                    packing[ai] += cand_vol;
                }
            }
            let id = accepted.len();
            accepted.push(cand.clone());
            packing.push(cand_vol);
            by_cube.insert(cand, id);
            queue.push_back(id);
        }
    }

    let reached_target = accepted.len() >= target_size;
    let family = SparseFamily::new(grid, accepted, lambda0, Some(n_regular))?;
    Ok(GeneratedFamily {
        family,
        reached_target,
    })
}

/// The fractional sparse operator
///
///   A^S_{alpha,nu} f = ( sum_{Q in S} <f>_{alpha,Q}^nu chi_Q )^{1/nu},
///
/// accumulated cube by cube in canonical family order. The nu = 1 path skips
/// the power round-trips entirely, so it equals the direct sum exactly.
pub fn sparse_operator(
    f: &GridFunction,
    family: &SparseFamily,
    alpha: f64,
    nu: f64,
) -> Result<GridFunction> {
    let grid = f.grid();
    if grid != family.grid() {
        return Err(Error::GridMismatch {
            expected_d: grid.dim(),
            expected_level: grid.finest_level(),
            got_d: family.grid().dim(),
            got_level: family.grid().finest_level(),
        });
    }
    check_alpha(alpha, grid.dim())?;
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::domain(format!("nu must be positive, got {nu}")));
    }
    let mut acc = vec![0.0f64; grid.cell_count()];
    for q in family.cubes() {
        let avg = frac_average(f, q, alpha)?;
        if avg == 0.0 {
            continue;
        }
        let term = if nu == 1.0 { avg } else { avg.powf(nu) };
        grid.for_each_cell(q, |cell| acc[cell as usize] += term);
    }
    if nu != 1.0 {
        for v in acc.iter_mut() {
            if *v > 0.0 {
                *v = v.powf(1.0 / nu);
            }
        }
    }
    GridFunction::new(grid, acc)
}

/// Level sets of the proof: S_k = { Q in S : Lambda1^{-k-1} < <f>_{alpha,Q}
/// <= Lambda1^{-k} }, with cubes of zero average discarded and cubes with
/// average exceeding 1/Lambda1 excluded up front (they sit inside the removed
/// set {M_alpha f > Lambda1^{-1}}). Ties at Lambda1^{-k} land in bucket k.
pub fn level_sets(
    family: &SparseFamily,
    f: &GridFunction,
    alpha: f64,
    lambda1: f64,
) -> Result<BTreeMap<u32, Vec<usize>>> {
    if !(lambda1 > 2.0) {
        return Err(Error::precondition(format!(
            "lambda1 must exceed 2, got {lambda1}"
        )));
    }
    let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, q) in family.cubes().iter().enumerate() {
        let avg = frac_average(f, q, alpha)?;
        if avg == 0.0 {
            continue;
        }
        if avg > lambda1.powi(-1) {
            continue;
        }
        let mut k = (-avg.ln() / lambda1.ln()).floor() as i64;
        k = k.max(1);
        // settle the half-open convention exactly against powi
        while avg <= lambda1.powi(-(k as i32) - 1) {
            k += 1;
        }
        while k > 1 && avg > lambda1.powi(-(k as i32)) {
            k -= 1;
        }
        out.entry(k as u32).or_default().push(i);
    }
    Ok(out)
}

/// Iterative peeling of maximal elements: layer v consists of the maximal
/// cubes once layers 0..v are removed. Equivalently (and provably the same,
/// since family ancestors of a cube form a chain), a cube's layer is its
/// depth in the nearest-ancestor forest restricted to the given set. Returns
/// positions into `cubes`.
pub fn layer_decompose(cubes: &[DyadicCube]) -> Vec<Vec<usize>> {
    let n = cubes.len();
    let mut depth = vec![0usize; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| cubes[i].level());
    let mut max_depth = 0usize;
    for (pos, &i) in order.iter().enumerate() {
        // nearest strict ancestor among the already-placed (coarser) cubes
        let mut best: Option<usize> = None;
        let mut best_level = 0u32;
        for &j in &order[..pos] {
            if cubes[j].strictly_contains(&cubes[i])
                && (best.is_none() || cubes[j].level() >= best_level)
            {
                best = Some(j);
                best_level = cubes[j].level();
            }
        }
        depth[i] = best.map_or(0, |j| depth[j] + 1);
        max_depth = max_depth.max(depth[i]);
    }
    let mut layers = vec![Vec::new(); if n == 0 { 0 } else { max_depth + 1 }];
    for i in 0..n {
        layers[depth[i]].push(i);
    }
    layers
}

/// One level set S_k with its layer structure and the derived sets.
#[derive(Debug, Clone)]
pub struct KDecomposition {
    pub k: u32,
    /// u = 2^k, saturating (layers deeper than the family are simply empty).
    pub u: u64,
    /// Family ids in S_k.
    pub members: Vec<usize>,
    /// layers[v] = family ids of S_{k,v}.
    pub layers: Vec<Vec<usize>>,
    /// family id -> layer v.
    pub layer_of: HashMap<usize, usize>,
    /// family id -> E_Q = Q minus its next-layer subcubes.
    pub e_sets: HashMap<usize, CellSet>,
    /// family id -> <f>_{alpha,Q}.
    pub averages: HashMap<usize, f64>,
}

impl KDecomposition {
    /// Q_u for a member: the cells of its layer v+u subcubes, u = 2^k.
    pub fn bottom_set(&self, family: &SparseFamily, id: usize) -> Result<CellSet> {
        let &v = self
            .layer_of
            .get(&id)
            .ok_or(Error::CubeNotInDecomposition)?;
        let target = (v as u64).saturating_add(self.u);
        if target >= self.layers.len() as u64 {
            return Ok(CellSet::empty());
        }
        let grid = family.grid();
        let q = &family.cubes()[id];
        let mut out = CellSet::empty();
        for &j in &self.layers[target as usize] {
            if q.contains(&family.cubes()[j]) {
                out = out.union(&grid.cells_of(&family.cubes()[j]));
            }
        }
        Ok(out)
    }

    pub fn e_set(&self, id: usize) -> Result<&CellSet> {
        self.e_sets.get(&id).ok_or(Error::CubeNotInDecomposition)
    }
}

/// The full stratification of a family against a function: one
/// KDecomposition per nonempty k.
#[derive(Debug, Clone)]
pub struct LayerDecomposition {
    pub lambda1: f64,
    pub alpha: f64,
    pub per_k: BTreeMap<u32, KDecomposition>,
}

impl LayerDecomposition {
    pub fn build(
        family: &SparseFamily,
        f: &GridFunction,
        alpha: f64,
        lambda1: f64,
    ) -> Result<Self> {
        let grid = family.grid();
        let sets = level_sets(family, f, alpha, lambda1)?;
        let mut per_k = BTreeMap::new();
        for (k, members) in sets {
            let cubes: Vec<DyadicCube> =
                members.iter().map(|&i| family.cubes()[i].clone()).collect();
            let local_layers = layer_decompose(&cubes);
            let layers: Vec<Vec<usize>> = local_layers
                .iter()
                .map(|layer| layer.iter().map(|&p| members[p]).collect())
                .collect();
            let mut layer_of = HashMap::new();
            for (v, layer) in layers.iter().enumerate() {
                for &id in layer {
                    layer_of.insert(id, v);
                }
            }
            let mut e_sets = HashMap::new();
            for (v, layer) in layers.iter().enumerate() {
                for &id in layer {
                    let q = &family.cubes()[id];
                    let mut e = grid.cells_of(q);
                    if v + 1 < layers.len() {
                        for &j in &layers[v + 1] {
                            if q.contains(&family.cubes()[j]) {
                                e = e.difference(&grid.cells_of(&family.cubes()[j]));
                            }
                        }
                    }
                    e_sets.insert(id, e);
                }
            }
            let mut averages = HashMap::new();
            for &id in &members {
                averages.insert(id, frac_average(f, &family.cubes()[id], alpha)?);
            }
            let u = if k >= 63 { u64::MAX } else { 1u64 << k };
            per_k.insert(
                k,
                KDecomposition {
                    k,
                    u,
                    members,
                    layers,
                    layer_of,
                    e_sets,
                    averages,
                },
            );
        }
        Ok(LayerDecomposition {
            lambda1,
            alpha,
            per_k,
        })
    }

    /// (E_Q, Q_u) for a family cube id inside level set k.
    pub fn decomposition_sets(
        &self,
        family: &SparseFamily,
        id: usize,
        k: u32,
    ) -> Result<(CellSet, CellSet)> {
        let kd = self.per_k.get(&k).ok_or(Error::CubeNotInDecomposition)?;
        let e = kd.e_set(id)?.clone();
        let q_u = kd.bottom_set(family, id)?;
        Ok((e, q_u))
    }
}
