//! Module generators: the two-vine annulus and seeded random modules.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{Field, PrimeField};
use crate::interval::{frac, int, Rat, VineId};
use crate::matrix::Matrix;
use crate::module::{trivial_module, ModuleError, VineyardModuleRep};
use crate::morphism::MorphismMatrix;
use crate::vineyard::{Direction, TimeGrid, Vineyard};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerateError {
    #[error("no generic compliant vineyard found after {0} attempts")]
    CannotSatisfyGenericity(usize),
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error("twist at pair {pair}, entry ({row},{col}) is not admissible")]
    InadmissibleTwist { pair: usize, row: usize, col: usize },
    #[error(transparent)]
    Module(#[from] ModuleError),
}

/// The annulus vineyard on the integer seed grid `0..=10` (not refined).
pub fn annulus_seed_vineyard() -> Vineyard {
    let times: Vec<Rat> = (0..=10).map(int).collect();
    let path = |g: fn(i64) -> i64| (0..=10).map(|t| int(g(t))).collect::<Vec<_>>();
    let parts =
        vec![(0, path(|t| 14 - t), path(|t| (15 + t).min(21 - t))), (0, path(|t| t), path(|t| (15 + t).max(21 - t)))];
    Vineyard::from_parts(TimeGrid::new(times).expect("increasing"), parts).expect("well formed")
}

/// The annulus vineyard on its refined, compliant grid.
pub fn annulus_vineyard() -> Vineyard {
    annulus_seed_vineyard().refined().expect("annulus refines")
}

/// The annulus module over GF(2). Twisted: the pair ending at `t = 3` carries
/// `E(1→0; 1)` in both families.
pub fn generate_annulus(twisted: bool) -> VineyardModuleRep<PrimeField> {
    let f = PrimeField::gf2();
    let v = annulus_vineyard();
    let m = trivial_module(&f, &v).expect("annulus is compliant");
    if !twisted {
        return m;
    }
    let pair = v.grid().index_of(&int(3)).expect("3 is a grid point") - 1;
    twist(&m, pair, 1, 0, &1).expect("annulus twist is admissible")
}

/// Adds `μ` at `(row, col)` of `alpha[pair]` and `-μ` at the same entry of
/// `beta[pair]`. Fails unless the result is a valid module.
pub fn twist<F: Field>(
    m: &VineyardModuleRep<F>,
    pair: usize,
    row: usize,
    col: usize,
    mu: &F::Elem,
) -> Result<VineyardModuleRep<F>, GenerateError> {
    let f = m.field();
    let n = m.num_vines();
    if pair >= m.num_pairs() || row >= n || col >= n || row == col {
        return Err(GenerateError::BadParams(format!("no twist site ({row},{col}) at pair {pair}")));
    }
    let bump = |mm: &MorphismMatrix<F>, v: F::Elem| {
        let mut mat = mm.matrix.clone();
        mat.set(row, col, f.add(mat.get(row, col), &v));
        MorphismMatrix { matrix: mat, ..mm.clone() }
    };
    let mut alpha = m.alpha().to_vec();
    let mut beta = m.beta().to_vec();
    alpha[pair] = bump(&alpha[pair], mu.clone());
    beta[pair] = bump(&beta[pair], f.neg(mu));
    let out = VineyardModuleRep::from_parts(f.clone(), m.vineyard().clone(), alpha, beta);
    if out.validate_pair(pair).is_empty() {
        Ok(out)
    } else {
        Err(GenerateError::InadmissibleTwist { pair, row, col })
    }
}

/// Where to inject a twist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TwistSite {
    /// `μ = value` at `(row, col)` of the given pair.
    Explicit { pair: usize, row: usize, col: usize, value: i64 },
    /// A random admissible site with a random nonzero value.
    Random,
    /// A random admissible site on the pair just below a backwards-incompatible
    /// time, preferring times where the relation holds only at that instant.
    Stuck,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomParams {
    pub seed: u64,
    pub n_vines: usize,
    /// Points of the coarse integer seed grid `0, 1, …`.
    pub n_times: usize,
    pub obfuscate: bool,
    pub twists: Vec<TwistSite>,
    /// Make the last vine start and end in the interior of the time range.
    pub interior_vine: bool,
    /// Crop the refined grid to at most this many points around a critical time.
    pub window: Option<usize>,
    /// Make vines 0 and 1 touch at one interior integer time without crossing,
    /// in either their birth or their death paths.
    pub bounce: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            seed: 0,
            n_vines: 3,
            n_times: 6,
            obfuscate: false,
            twists: Vec::new(),
            interior_vine: false,
            window: None,
            bounce: false,
        }
    }
}

const ATTEMPTS: usize = 400;
const MAX_REFINED: usize = 4000;

/// Heights are multiples of 1/32. Vines supported everywhere sit on half-integers.
/// The interior vine is centered a quarter off that lattice, so near its support
/// boundaries it keeps away from every other height.
const UNIT: i64 = 32;
const HALF: i64 = UNIT / 2;

fn height(n: i64) -> Rat {
    frac(n, UNIT)
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize, start: i64, steps: &[i64]) -> Vec<i64> {
    let mut xs = vec![start];
    for _ in 1..n {
        let last = *xs.last().expect("non-empty");
        xs.push(last + steps.choose(rng).expect("non-empty"));
    }
    xs
}

type IntPath = (usize, Vec<i64>, Vec<i64>);

/// One attempt at a random vineyard on the integer grid `0..n_times`.
fn random_parts(rng: &mut ChaCha8Rng, p: &RandomParams) -> Vec<(usize, Vec<Rat>, Vec<Rat>)> {
    let n = p.n_times;
    let spread = 12 * p.n_vines as i64 + 4;
    let unit_steps = [-2 * HALF, -HALF, 0, HALF, 2 * HALF];
    let mut parts: Vec<IntPath> = Vec::new();
    for v in 0..p.n_vines {
        if p.interior_vine && v + 1 == p.n_vines {
            let lo = rng.gen_range(1..=(n - 3) / 2);
            let hi = rng.gen_range(lo + 2..=n - 2);
            let len = hi - lo + 1;
            // Center moves by at most 1/2 and half-length by 1/2 per unit time.
            let start = rng.gen_range(0..spread) * HALF + HALF / 2;
            let centre = random_walk(rng, len, start, &[-HALF, 0, HALF]);
            let mut births = Vec::new();
            let mut deaths = Vec::new();
            for (j, c) in centre.iter().enumerate() {
                let from_edge = j.min(len - 1 - j) as i64;
                let half = 1 + HALF * from_edge.min(6);
                births.push(c - half);
                deaths.push(c + half);
            }
            parts.push((lo, births, deaths));
            continue;
        }
        let start = rng.gen_range(0..spread) * HALF;
        let b = random_walk(rng, n, start, &unit_steps);
        let mut d = Vec::with_capacity(n);
        let mut len = rng.gen_range(4..20) * HALF;
        for &bi in &b {
            d.push(bi + len);
            len = (len + unit_steps.choose(rng).expect("non-empty")).max(4 * HALF);
        }
        // Keep the death path 1-Lipschitz after the length jitter.
        for i in 1..n {
            d[i] = d[i].clamp(d[i - 1] - UNIT, d[i - 1] + UNIT).max(b[i] + 4 * HALF);
        }
        if d.windows(2).any(|w| (w[1] - w[0]).abs() > UNIT) {
            return Vec::new();
        }
        parts.push((0, b, d));
    }
    let full = parts.iter().filter(|p| p.0 == 0 && p.1.len() == n).count();
    if p.bounce && full >= 2 && n >= 3 && !bounce(rng, &mut parts) {
        return Vec::new();
    }
    parts
        .into_iter()
        .map(|(lo, b, d)| (lo, b.into_iter().map(height).collect(), d.into_iter().map(height).collect()))
        .collect()
}

/// Shifts vine 1 so one of its paths meets the same path of vine 0 at an interior
/// time, then sorts the two paths pointwise so they touch there without crossing.
/// Pointwise min and max of 1-Lipschitz samples are 1-Lipschitz.
fn bounce(rng: &mut ChaCha8Rng, parts: &mut [IntPath]) -> bool {
    let n = parts[0].1.len();
    let i0 = rng.gen_range(1..n - 1);
    let deaths = rng.gen_bool(0.5);
    let pick = |p: &IntPath| if deaths { p.2[i0] } else { p.1[i0] };
    let shift = pick(&parts[0]) - pick(&parts[1]);
    for x in parts[1].1.iter_mut().chain(parts[1].2.iter_mut()) {
        *x += shift;
    }
    let (first, rest) = parts.split_at_mut(1);
    let (a, b) = (&mut first[0], &mut rest[0]);
    let (xa, xb) = if deaths { (&mut a.2, &mut b.2) } else { (&mut a.1, &mut b.1) };
    for i in 0..n {
        if xb[i] < xa[i] {
            std::mem::swap(&mut xa[i], &mut xb[i]);
        }
    }
    (0..n).all(|i| a.1[i] < a.2[i] && b.1[i] < b.2[i])
}

/// A seeded compliant vineyard (refined, optionally cropped).
pub fn random_vineyard(p: &RandomParams) -> Result<Vineyard, GenerateError> {
    if p.n_times < 2 || (p.interior_vine && p.n_times < 5) {
        return Err(GenerateError::BadParams("too few time points".into()));
    }
    if p.interior_vine && p.n_vines == 0 {
        return Err(GenerateError::BadParams("an interior vine needs at least one vine".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for _ in 0..ATTEMPTS {
        let parts = random_parts(&mut rng, p);
        if parts.len() != p.n_vines {
            continue;
        }
        let times = (0..p.n_times as i64).map(int).collect();
        let Ok(coarse) = Vineyard::from_parts(TimeGrid::new(times).expect("increasing"), parts) else {
            continue;
        };
        let Ok(v) = coarse.refined() else {
            continue;
        };
        if v.grid().len() > MAX_REFINED {
            continue;
        }
        match p.window {
            None => return Ok(v),
            Some(w) => {
                if let Some(c) = crop_around_event(&mut rng, &v, w) {
                    return Ok(c);
                }
            }
        }
    }
    Err(GenerateError::CannotSatisfyGenericity(ATTEMPTS))
}

/// A compliant window of at most `w` points containing an incompatible time,
/// preferring a time where a relation holds only at that instant.
fn crop_around_event(rng: &mut ChaCha8Rng, v: &Vineyard, w: usize) -> Option<Vineyard> {
    let len = v.grid().len();
    let isolated = |i: usize| {
        let b = v.incompatibility(i, Direction::Backward);
        b.is_some() && b == v.incompatibility(i, Direction::Forward)
    };
    let mut sites: Vec<usize> = (0..len).filter(|&i| isolated(i)).collect();
    if sites.is_empty() {
        sites = (0..len)
            .filter(|&i| {
                v.incompatibility(i, Direction::Forward).is_some()
                    || v.incompatibility(i, Direction::Backward).is_some()
            })
            .collect();
    }
    sites.shuffle(rng);
    for e in sites {
        let size = rng.gen_range(3..=w.max(3)).min(len);
        let before = rng.gen_range(0..size);
        let lo = e.saturating_sub(before).min(len - size);
        let hi = lo + size - 1;
        let Ok((c, _)) = v.crop(lo, hi) else { continue };
        if c.num_vines() >= 2 && c.is_compliant() {
            return Some(c);
        }
    }
    None
}

fn random_unit<F: Field>(rng: &mut ChaCha8Rng, f: &F) -> F::Elem {
    loop {
        let x = f.from_i64(rng.gen_range(-3..=3));
        if !f.is_zero(&x) {
            return x;
        }
    }
}

/// A random basis transformation at grid index `i`: random units on the supported
/// diagonal, random entries at half of the staircase positions.
pub fn random_transform<F: Field>(rng: &mut ChaCha8Rng, m: &VineyardModuleRep<F>, i: usize) -> Matrix<F> {
    let f = m.field();
    let at = m.barcode(i);
    let mut t = Matrix::identity(f, m.num_vines());
    for (j, a) in at.present() {
        t.set(j, j, random_unit(rng, f));
        for (k, b) in at.present() {
            if j != k && a.leq(b) && rng.gen_bool(0.5) {
                t.set(j, k, f.from_i64(rng.gen_range(-3..=3)));
            }
        }
    }
    t
}

/// Off-diagonal `(pair, row, col)` sites where a twist keeps the module valid.
pub fn twist_sites<F: Field>(m: &VineyardModuleRep<F>) -> Vec<(usize, usize, usize)> {
    let f = m.field();
    let mut out = Vec::new();
    for pair in 0..m.num_pairs() {
        for row in 0..m.num_vines() {
            for col in (0..m.num_vines()).filter(|&c| c != row) {
                if twist(m, pair, row, col, &f.one()).is_ok() {
                    out.push((pair, row, col));
                }
            }
        }
    }
    out
}

fn apply_twists<F: Field>(
    rng: &mut ChaCha8Rng,
    m: VineyardModuleRep<F>,
    sites: &[TwistSite],
) -> Result<VineyardModuleRep<F>, GenerateError> {
    let f = m.field().clone();
    let mut m = m;
    if sites.iter().all(|s| matches!(s, TwistSite::Explicit { .. })) {
        for site in sites {
            if let TwistSite::Explicit { pair, row, col, value } = site {
                m = twist(&m, *pair, *row, *col, &f.from_i64(*value))?;
            }
        }
        return Ok(m);
    }
    let base = twist_sites(&m);
    let v = m.vineyard();
    let stuck_at = |isolated: bool| -> Vec<_> {
        v.backward_incompatible_indices()
            .into_iter()
            .filter(|&(i, kl)| !isolated || v.incompatibility(i, Direction::Forward) == Some(kl))
            .filter_map(|(i, (k, l))| base.contains(&(i - 1, l, k)).then_some((i - 1, l, k)))
            .collect()
    };
    let mut stuck = stuck_at(true);
    if stuck.is_empty() {
        stuck = stuck_at(false);
    }
    for site in sites {
        match site {
            TwistSite::Explicit { pair, row, col, value } => m = twist(&m, *pair, *row, *col, &f.from_i64(*value))?,
            TwistSite::Random | TwistSite::Stuck => {
                let pool = if *site == TwistSite::Stuck { &stuck } else { &base };
                let Some(&(p, r, c)) = pool.choose(rng) else { continue };
                // Sites were found on the untwisted module; skip one that an earlier twist spoiled.
                if let Ok(next) = twist(&m, p, r, c, &random_unit(rng, &f)) {
                    m = next;
                }
            }
        }
    }
    Ok(m)
}

/// Seeded random module: a random compliant vineyard, the trivial module on it,
/// the requested twists, then (optionally) a random change of basis at every index.
pub fn generate_random<F: Field>(field: &F, p: &RandomParams) -> Result<VineyardModuleRep<F>, GenerateError> {
    let v = random_vineyard(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut m = trivial_module(field, &v)?;
    m = apply_twists(&mut rng, m, &p.twists)?;
    if p.obfuscate {
        let ts: Vec<_> = (0..v.grid().len()).map(|i| random_transform(&mut rng, &m, i)).collect();
        m = m.conjugate(&ts)?;
    }
    debug_assert!(m.is_valid());
    Ok(m)
}

/// Vine ids in random order, for shuffling tests.
pub fn random_permutation(seed: u64, n: usize) -> Vec<VineId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<VineId> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm
}
