//! Single-stream precoder design for uncorrelated fading.
//!
//! Every ordered pair contributes `A = β_r Σ_l |s v_l − ŝ v̂_l|² B_l` with
//! `B_l = Σ_{n∈A_l} g_n g_n^H` built from the rows of `G`, so the objective
//! depends on `W` only through the `L` traces `Tr(B_l W)`. The relaxed problem
//! over `{W ⪰ 0, Tr W = 1}` is solved by Frank–Wolfe with an extremal
//! eigenvector oracle and exact line search.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::QBoundSpec;
use crate::channels::{complex_normal, StaticChannels};
use crate::error::{Error, Result};
use crate::linalg::{argmax, argmin, hermitian_eigen, hermitize, trace_product_re};
use crate::modulation::Alphabet;
use crate::scalar::{cx, CMatrix, CVector, Real};

/// Per-pair data of the pairwise matrix set.
#[derive(Clone, Debug)]
pub struct PairTerm<T: Real> {
    pub source: usize,
    pub detected: usize,
    /// `β_r |s v_l − ŝ v̂_l|²` for each sub-surface.
    pub coeffs: Vec<T>,
    /// `β_d |s − ŝ|²`.
    pub direct: T,
    /// Error bits `e`.
    pub weight: u32,
}

/// All ordered pairs with `(ŝ, v̂) ≠ (s, v)` and the shared `B_l`.
#[derive(Clone, Debug)]
pub struct PairwiseMatrixSet<T: Real> {
    pub blocks: Vec<CMatrix<T>>,
    pub pairs: Vec<PairTerm<T>>,
    /// `1/(rS)`.
    pub normalization: T,
    pub n_t: usize,
}

impl<T: Real> PairwiseMatrixSet<T> {
    pub fn build(alphabet: &Alphabet<T>, g: &CMatrix<T>, beta_d: T, beta_r: T) -> Result<Self> {
        let cfg = &alphabet.config;
        if cfg.n_s != 1 {
            return Err(Error::Unsupported(format!("precoder optimization needs n_s = 1, got {}", cfg.n_s)));
        }
        if g.shape() != (cfg.n, cfg.n_t) {
            return Err(Error::InvalidDimension("G does not match the configuration".into()));
        }
        let gs = cfg.group_size();
        let blocks = (0..cfg.l)
            .map(|l| {
                let rows = g.rows(l * gs, gs);
                hermitize(&(rows.adjoint() * rows))
            })
            .collect();
        let c = alphabet.codebook.len();
        let s = alphabet.size();
        let mut pairs = Vec::with_capacity(s * (s - 1));
        for src in 0..s {
            let x = alphabet.symbol_vector(src / c)[0];
            let v = &alphabet.codebook.codewords[src % c];
            for dst in 0..s {
                if dst == src {
                    continue;
                }
                let xh = alphabet.symbol_vector(dst / c)[0];
                let vh = &alphabet.codebook.codewords[dst % c];
                let coeffs = v.iter().zip(vh).map(|(a, b)| beta_r * (x * a - xh * b).norm_sqr()).collect();
                pairs.push(PairTerm {
                    source: src,
                    detected: dst,
                    coeffs,
                    direct: beta_d * (x - xh).norm_sqr(),
                    weight: alphabet.error_bits(src, dst),
                });
            }
        }
        let normalization = T::one() / T::lit((alphabet.rate_bits() * s) as f64);
        Ok(Self { blocks, pairs, normalization, n_t: cfg.n_t })
    }

    pub fn from_statics(alphabet: &Alphabet<T>, statics: &StaticChannels<T>) -> Result<Self> {
        Self::build(alphabet, &statics.g, statics.beta_d, statics.beta_r)
    }

    /// `A_k = Σ_l c_{k,l} B_l`.
    pub fn matrix(&self, k: usize) -> CMatrix<T> {
        let mut a = CMatrix::zeros(self.n_t, self.n_t);
        for (c, b) in self.pairs[k].coeffs.iter().zip(&self.blocks) {
            a += b.map(|z| z * *c);
        }
        hermitize(&a)
    }

    /// `Tr(B_l W)` for each block.
    pub fn traces(&self, w: &CMatrix<T>) -> Vec<T> {
        self.blocks.iter().map(|b| trace_product_re(b, w)).collect()
    }

    /// `u^H B_l u` for each block.
    pub fn traces_vec(&self, u: &CVector<T>) -> Vec<T> {
        self.blocks.iter().map(|b| u.dotc(&(b * u)).re).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.pairs.iter().all(|p| p.coeffs.iter().all(|c| *c == T::zero()))
            || self.blocks.iter().all(|b| b.norm() == T::zero())
    }
}

/// Objective weighting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Union-bound ABER with exponential Q-bound coefficients.
    Aber(QBoundSpec),
    /// Inner sum of the capacity expression; minimizing it maximizes capacity.
    Capacity,
}

impl Default for Weighting {
    fn default() -> Self {
        Self::Aber(QBoundSpec::default())
    }
}

/// Objective as a function of the block traces.
struct Objective<'a, T: Real> {
    set: &'a PairwiseMatrixSet<T>,
    /// `(a_i, b_i·P/(2σ²))`.
    terms: Vec<(T, T)>,
    n_r: i32,
    aber: bool,
}

impl<'a, T: Real> Objective<'a, T> {
    fn new(set: &'a PairwiseMatrixSet<T>, p: T, sigma2: T, n_r: usize, weighting: &Weighting) -> Self {
        let rho = p / (sigma2 * T::lit(2.0));
        let (terms, aber) = match weighting {
            Weighting::Aber(q) => (q.terms().into_iter().map(|(a, b)| (T::lit(a), T::lit(b) * rho)).collect(), true),
            Weighting::Capacity => (vec![(T::one(), rho)], false),
        };
        Self { set, terms, n_r: n_r as i32, aber }
    }

    fn pair_weight(&self, k: usize) -> T {
        if self.aber {
            T::lit(f64::from(self.set.pairs[k].weight)) * self.set.normalization
        } else {
            T::one()
        }
    }

    fn value(&self, t: &[T]) -> T {
        let mut acc = T::zero();
        for (k, pair) in self.set.pairs.iter().enumerate() {
            let wk = self.pair_weight(k);
            if wk == T::zero() {
                continue;
            }
            let x = pair.coeffs.iter().zip(t).fold(pair.direct, |a, (c, ti)| a + *c * *ti);
            for &(a, b) in &self.terms {
                acc += wk * a * (T::one() + b * x).powi(-self.n_r);
            }
        }
        acc
    }

    /// `∂f/∂t_l`.
    fn partials(&self, t: &[T]) -> Vec<T> {
        let mut grad = vec![T::zero(); t.len()];
        let nr = T::lit(f64::from(self.n_r));
        for (k, pair) in self.set.pairs.iter().enumerate() {
            let wk = self.pair_weight(k);
            if wk == T::zero() {
                continue;
            }
            let x = pair.coeffs.iter().zip(t).fold(pair.direct, |a, (c, ti)| a + *c * *ti);
            let mut dx = T::zero();
            for &(a, b) in &self.terms {
                dx -= wk * a * nr * b * (T::one() + b * x).powi(-self.n_r - 1);
            }
            for (g, c) in grad.iter_mut().zip(&pair.coeffs) {
                *g += dx * *c;
            }
        }
        grad
    }

    fn gradient_matrix(&self, t: &[T]) -> CMatrix<T> {
        let partials = self.partials(t);
        let mut g = CMatrix::zeros(self.set.n_t, self.set.n_t);
        for (d, b) in partials.iter().zip(&self.set.blocks) {
            g += b.map(|z| z * *d);
        }
        hermitize(&g)
    }
}

/// Objective at a (Hermitian, unit-trace) `W`.
pub fn precoding_objective<T: Real>(
    w: &CMatrix<T>,
    set: &PairwiseMatrixSet<T>,
    p: T,
    sigma2: T,
    n_r: usize,
    weighting: &Weighting,
) -> T {
    Objective::new(set, p, sigma2, n_r, weighting).value(&set.traces(w))
}

/// Objective at the rank-one point `w w^H`.
pub fn precoding_objective_vec<T: Real>(
    w: &CVector<T>,
    set: &PairwiseMatrixSet<T>,
    p: T,
    sigma2: T,
    n_r: usize,
    weighting: &Weighting,
) -> T {
    Objective::new(set, p, sigma2, n_r, weighting).value(&set.traces_vec(w))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdrParams {
    pub max_iterations: usize,
    pub rel_decrease_tol: f64,
    pub rel_gap_tol: f64,
    pub line_search_tol: f64,
}

impl Default for SdrParams {
    fn default() -> Self {
        Self { max_iterations: 5000, rel_decrease_tol: 1e-8, rel_gap_tol: 1e-7, line_search_tol: 1e-10 }
    }
}

impl SdrParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("sdr.max_iterations must be at least 1".into()));
        }
        for (name, v) in [
            ("rel_decrease_tol", self.rel_decrease_tol),
            ("rel_gap_tol", self.rel_gap_tol),
            ("line_search_tol", self.line_search_tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("sdr.{name} must be finite and nonnegative")));
            }
        }
        if self.line_search_tol == 0.0 {
            return Err(Error::Config("sdr.line_search_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SdrSolution<T: Real> {
    /// Relaxed solution, Hermitian PSD with unit trace.
    pub w_matrix: CMatrix<T>,
    /// Unit-norm rank-one precoder.
    pub w: CVector<T>,
    /// Objective at `w w^H`.
    pub objective: T,
    /// Objective at `w_matrix`.
    pub relaxed_objective: T,
    /// Best certified lower bound on the relaxed optimum.
    pub lower_bound: T,
    /// Final duality gap.
    pub gap: T,
    /// Largest eigenvalue of `w_matrix` over its trace.
    pub rank_one_ratio: T,
    pub iterations: usize,
    pub converged: bool,
    /// Set when every pair term is independent of `W`.
    pub objective_constant: bool,
}

fn min_eigvec<T: Real>(m: &CMatrix<T>) -> (T, CVector<T>) {
    let (vals, vecs) = hermitian_eigen(m);
    let (i, v) = argmin(&vals);
    (v, vecs.column(i).into_owned())
}

fn max_eigvec<T: Real>(m: &CMatrix<T>) -> (T, CVector<T>) {
    let (vals, vecs) = hermitian_eigen(m);
    let (i, v) = argmax(&vals);
    (v, vecs.column(i).into_owned())
}

/// Fixes the global phase so the largest-magnitude entry is real positive.
fn canonical_phase<T: Real>(w: CVector<T>) -> CVector<T> {
    let (mut best, mut mag) = (0, T::zero());
    for (i, z) in w.iter().enumerate() {
        if z.norm_sqr().sqrt() > mag {
            best = i;
            mag = z.norm_sqr().sqrt();
        }
    }
    if mag == T::zero() {
        return w;
    }
    let rot = w[best].conj() / mag;
    w.map(|z| z * rot)
}

/// Frank–Wolfe on the spectrahedron followed by rank-one extraction.
pub fn solve_sdr<T: Real>(
    set: &PairwiseMatrixSet<T>,
    p: T,
    sigma2: T,
    n_r: usize,
    weighting: &Weighting,
    params: &SdrParams,
) -> SdrSolution<T> {
    let n_t = set.n_t;
    let obj = Objective::new(set, p, sigma2, n_r, weighting);
    if set.is_constant() || obj.terms.iter().all(|(_, b)| *b == T::zero()) {
        let mut w = CVector::zeros(n_t);
        w[0] = cx(T::one(), T::zero());
        let w_matrix = &w * w.adjoint();
        let f = obj.value(&set.traces(&w_matrix));
        return SdrSolution {
            w_matrix,
            w,
            objective: f,
            relaxed_objective: f,
            lower_bound: f,
            gap: T::zero(),
            rank_one_ratio: T::one(),
            iterations: 0,
            converged: true,
            objective_constant: true,
        };
    }

    // Start from the oracle atom at the isotropic point.
    let iso = CMatrix::<T>::identity(n_t, n_t).map(|z| z / T::lit(n_t as f64));
    let (_, u0) = min_eigvec(&obj.gradient_matrix(&set.traces(&iso)));
    let mut w_mat = &u0 * u0.adjoint();
    let mut t = set.traces_vec(&u0);
    let mut f = obj.value(&t);
    let mut lower = T::min_value().unwrap();
    let mut gap = T::max_value().unwrap();
    let mut iterations = 0;
    let mut converged = false;
    let tol = T::lit(params.line_search_tol);

    while iterations < params.max_iterations {
        iterations += 1;
        let grad = obj.gradient_matrix(&t);
        let (lmin, u) = min_eigvec(&grad);
        gap = trace_product_re(&grad, &w_mat) - lmin;
        let lb = f - gap;
        if lb > lower {
            lower = lb;
        }
        if gap <= T::lit(params.rel_gap_tol) * f.abs() {
            converged = true;
            break;
        }
        let ts = set.traces_vec(&u);
        let dir: Vec<T> = ts.iter().zip(&t).map(|(a, b)| *a - *b).collect();
        let at = |g: T| -> Vec<T> { t.iter().zip(&dir).map(|(ti, di)| *ti + g * *di).collect() };
        let slope = |g: T| -> T { obj.partials(&at(g)).iter().zip(&dir).fold(T::zero(), |acc, (a, d)| acc + *a * *d) };
        let mut gamma = if slope(T::one()) <= T::zero() {
            T::one()
        } else {
            let (mut lo, mut hi) = (T::zero(), T::one());
            while hi - lo > tol {
                let mid = (lo + hi) / T::lit(2.0);
                if slope(mid) > T::zero() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (lo + hi) / T::lit(2.0)
        };
        let mut t_new = at(gamma);
        let mut f_new = obj.value(&t_new);
        if !(f_new <= f) {
            gamma = T::lit(2.0) / T::lit(iterations as f64 + 2.0);
            t_new = at(gamma);
            f_new = obj.value(&t_new);
            if !(f_new <= f) {
                converged = true;
                break;
            }
        }
        let atom = &u * u.adjoint();
        w_mat = w_mat.map(|z| z * (T::one() - gamma)) + atom.map(|z| z * gamma);
        let decrease = f - f_new;
        t = t_new;
        f = f_new;
        if decrease <= T::lit(params.rel_decrease_tol) * f.abs() {
            converged = true;
            break;
        }
    }
    let w_mat = hermitize(&w_mat);
    let trace = w_mat.trace().re;
    let (lmax, lead) = max_eigvec(&w_mat);

    // Rank-one extraction: leading eigenvector, refined by repeated oracle
    // steps from the rank-one point while they improve the objective.
    let mut w = lead;
    let mut best = obj.value(&set.traces_vec(&w));
    for _ in 0..200 {
        let rank_one = &w * w.adjoint();
        let (_, cand) = min_eigvec(&obj.gradient_matrix(&set.traces(&rank_one)));
        let val = obj.value(&set.traces_vec(&cand));
        if val < best * (T::one() - T::lit(1e-14)) {
            best = val;
            w = cand;
        } else {
            break;
        }
    }
    let w = canonical_phase(w.normalize());
    SdrSolution {
        w_matrix: w_mat,
        w,
        objective: best,
        relaxed_objective: f,
        lower_bound: lower.min(f),
        gap,
        rank_one_ratio: lmax / trace,
        iterations,
        converged,
        objective_constant: false,
    }
}

/// `b/‖b‖`, the optimum for a rank-one `G = β a b^H`.
pub fn keyhole_closed_form<T: Real>(b: &CVector<T>) -> Result<CVector<T>> {
    let n = b.norm();
    if !(n > T::zero()) {
        return Err(Error::Degenerate("steering vector has zero norm".into()));
    }
    Ok(b.map(|z| z / n))
}

/// How the harness chooses `W`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderPolicy {
    /// Random orthonormal columns scaled by `1/√N_s`.
    #[default]
    Random,
    /// First `N_s` columns of the identity scaled by `1/√N_s`.
    Identity,
    /// SDR optimum (single stream).
    Optimized,
    /// Normalized transmit steering vector of the strongest path.
    Keyhole,
}

/// Random `N_t × N_s` precoder with orthonormal columns and unit total power.
pub fn random_precoder<T: Real, R: Rng + ?Sized>(n_t: usize, n_s: usize, rng: &mut R) -> CMatrix<T> {
    let raw = CMatrix::from_fn(n_t, n_s, |_, _| complex_normal::<T, _>(rng));
    let q = raw.qr().q();
    let scale = T::one() / T::lit(n_s as f64).sqrt();
    q.map(|z| z * scale)
}

pub fn identity_precoder<T: Real>(n_t: usize, n_s: usize) -> CMatrix<T> {
    let scale = T::one() / T::lit(n_s as f64).sqrt();
    CMatrix::from_fn(n_t, n_s, |i, j| if i == j { cx(scale, T::zero()) } else { cx(T::zero(), T::zero()) })
}

/// Transmit steering vector of the strongest path of `G`.
pub fn strongest_path_steering<T: Real>(statics: &StaticChannels<T>) -> Result<CVector<T>> {
    let path = statics
        .paths
        .iter()
        .max_by(|a, b| a.gain.norm_sqr().partial_cmp(&b.gain.norm_sqr()).unwrap())
        .ok_or_else(|| Error::Degenerate("static channel has no paths".into()))?;
    crate::channels::steering_vector(statics.n_t(), path.aod, statics.d_over_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{los_channel_from_paths, steering_vector, ChannelSpec, LosPath, LosSpec};
    use crate::modulation::SystemConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rng(s: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(s)
    }

    fn random_set(cfg: &SystemConfig, seed: u64) -> (Alphabet<f64>, PairwiseMatrixSet<f64>) {
        let a = Alphabet::new(cfg).unwrap();
        let statics = StaticChannels::draw(cfg, &ChannelSpec::default(), &mut rng(seed)).unwrap();
        let set = PairwiseMatrixSet::from_statics(&a, &statics).unwrap();
        (a, set)
    }

    fn small() -> SystemConfig {
        SystemConfig { n: 32, n_t: 4, ..SystemConfig::default() }
    }

    fn random_unit(n: usize, r: &mut ChaCha8Rng) -> CVector<f64> {
        CVector::from_fn(n, |_, _| complex_normal::<f64, _>(r)).normalize()
    }

    #[test]
    fn multi_stream_unsupported() {
        let cfg = SystemConfig { n_s: 2, ..small() };
        let a = Alphabet::<f64>::new(&cfg).unwrap();
        let g = CMatrix::zeros(32, 4);
        assert!(matches!(PairwiseMatrixSet::build(&a, &g, 1.0, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn phase_flip_scaling() {
        let cfg = SystemConfig { l: 1, delta_theta: Some(PI), ..small() };
        let a = Alphabet::<f64>::new(&cfg).unwrap();
        let statics = StaticChannels::draw(&cfg, &ChannelSpec::default(), &mut rng(0)).unwrap();
        let set = PairwiseMatrixSet::build(&a, &statics.g, 1.0, 0.7).unwrap();
        // s = ŝ = +1, k = 0 → k̂ = 1: codewords 0 and 1 of symbol 0.
        let k = set.pairs.iter().position(|p| p.source == 0 && p.detected == 1).unwrap();
        assert_eq!(set.pairs[k].direct, 0.0);
        let expect = (statics.g.adjoint() * &statics.g).map(|z| z * 4.0 * 0.7);
        assert!((set.matrix(k) - expect).norm() < 1e-10 * set.matrix(k).norm());
    }

    #[test]
    fn pairwise_matrices_are_psd() {
        let (_, set) = random_set(&SystemConfig { k: 2, l: 4, ..small() }, 1);
        for k in 0..set.pairs.len() {
            let (vals, _) = hermitian_eigen(&set.matrix(k));
            assert!(vals.iter().all(|v| *v >= -1e-10));
        }
    }

    #[test]
    fn matrix_objective_matches_vector_form() {
        let (_, set) = random_set(&small(), 2);
        let mut r = rng(3);
        let weighting = Weighting::Aber(QBoundSpec::uniform(2));
        for _ in 0..20 {
            let w = random_unit(4, &mut r);
            let a = precoding_objective(&(&w * w.adjoint()), &set, 3.0, 1.0, 4, &weighting);
            // Direct vector form with explicit w^H A w.
            let mut direct = 0.0;
            for (k, pair) in set.pairs.iter().enumerate() {
                let quad = w.dotc(&(set.matrix(k) * &w)).re;
                for (ai, bi) in QBoundSpec::uniform(2).terms() {
                    direct += f64::from(pair.weight)
                        * set.normalization
                        * ai
                        * (1.0 + 3.0 * bi / 2.0 * (pair.direct + quad)).powi(-4);
                }
            }
            assert!((a - direct).abs() < 1e-12 * direct);
            let phased = w.map(|z| z * cx(0.6, 0.8));
            let b = precoding_objective_vec(&phased, &set, 3.0, 1.0, 4, &weighting);
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn zero_power_counts_pairs() {
        let (a, set) = random_set(&small(), 4);
        let w = identity_precoder::<f64>(4, 1);
        let w = &w * w.adjoint();
        let cap = precoding_objective(&w, &set, 0.0, 1.0, 4, &Weighting::Capacity);
        assert_eq!(cap, (a.size() * (a.size() - 1)) as f64);
        let aber = precoding_objective(&w, &set, 0.0, 1.0, 4, &Weighting::Aber(QBoundSpec::uniform(1)));
        let bits: u32 = set.pairs.iter().map(|p| p.weight).sum();
        assert!((aber - 0.5 * f64::from(bits) * set.normalization).abs() < 1e-14);
    }

    #[test]
    fn objective_is_convex_along_segments() {
        let (_, set) = random_set(&small(), 5);
        let mut r = rng(6);
        for weighting in [Weighting::Capacity, Weighting::Aber(QBoundSpec::uniform(1))] {
            for _ in 0..50 {
                let u = random_unit(4, &mut r);
                let v = random_unit(4, &mut r);
                let (w1, w2) = (&u * u.adjoint(), &v * v.adjoint());
                let t: f64 = r.random();
                let mix = w1.map(|z| z * t) + w2.map(|z| z * (1.0 - t));
                let f = |w: &CMatrix<f64>| precoding_objective(w, &set, 2.0, 1.0, 4, &weighting);
                assert!(f(&mix) <= t * f(&w1) + (1.0 - t) * f(&w2) + 1e-12);
            }
        }
    }

    #[test]
    fn sdr_is_feasible_tight_and_beats_random() {
        let mut r = rng(7);
        for seed in 0..10 {
            let (_, set) = random_set(&small(), 100 + seed);
            let weighting = Weighting::default();
            let sol = solve_sdr(&set, 1.0, 1.0, 4, &weighting, &SdrParams::default());
            assert!((sol.w_matrix.trace().re - 1.0).abs() < 1e-8);
            let (vals, _) = hermitian_eigen(&sol.w_matrix);
            assert!(vals.iter().all(|v| *v >= -1e-10));
            assert!((sol.w.norm() - 1.0).abs() < 1e-12);
            assert!(sol.rank_one_ratio >= 0.99, "ratio {}", sol.rank_one_ratio);
            assert!(sol.objective <= sol.lower_bound * 1.01);
            for _ in 0..30 {
                let u = random_unit(4, &mut r);
                assert!(sol.objective <= precoding_objective_vec(&u, &set, 1.0, 1.0, 4, &weighting) + 1e-15);
            }
        }
    }

    #[test]
    fn single_dominant_pair_aligns_with_its_direction() {
        let b = CVector::from_vec(vec![cx(1.0, 0.0), cx(0.0, 2.0), cx(-1.0, 1.0)]);
        let set = PairwiseMatrixSet {
            blocks: vec![&b * b.adjoint()],
            pairs: vec![PairTerm { source: 0, detected: 1, coeffs: vec![1.0], direct: 0.0, weight: 1 }],
            normalization: 1.0,
            n_t: 3,
        };
        let sol = solve_sdr(&set, 10.0, 1.0, 2, &Weighting::default(), &SdrParams::default());
        assert!(sol.w.dotc(&b).norm() / b.norm() > 0.999);
    }

    #[test]
    fn keyhole_matches_closed_form() {
        let cfg = SystemConfig { n: 32, n_t: 4, ..SystemConfig::default() };
        let a = Alphabet::<f64>::new(&cfg).unwrap();
        let aod = 0.4;
        let paths = vec![LosPath { aoa: -0.2, aod, gain: cx(0.8, 0.3) }];
        let g = los_channel_from_paths(&paths, 32, 4, 0.5).unwrap();
        let set = PairwiseMatrixSet::build(&a, &g, 1.0, 1.0).unwrap();
        let sol = solve_sdr(&set, 1.0, 1.0, 4, &Weighting::default(), &SdrParams::default());
        let b = steering_vector(4, aod, 0.5).unwrap();
        let closed = keyhole_closed_form(&b).unwrap();
        assert!(sol.w.dotc(&closed).norm() > 0.999);
    }

    #[test]
    fn keyhole_closed_form_examples() {
        let b = CVector::from_element(4, cx(1.0, 0.0));
        let w = keyhole_closed_form(&b).unwrap();
        assert!(w.iter().all(|z| (z - cx(0.5, 0.0)).norm() < 1e-15));
        assert!(matches!(keyhole_closed_form(&CVector::<f64>::zeros(3)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn constant_objective_is_flagged() {
        let a = Alphabet::<f64>::new(&small()).unwrap();
        let set = PairwiseMatrixSet::build(&a, &CMatrix::zeros(32, 4), 1.0, 1.0).unwrap();
        let sol = solve_sdr(&set, 1.0, 1.0, 4, &Weighting::default(), &SdrParams::default());
        assert!(sol.objective_constant);
        assert_eq!(sol.w[0], cx(1.0, 0.0));
    }

    #[test]
    fn precoders_have_unit_power() {
        let w = random_precoder::<f64, _>(8, 3, &mut rng(9));
        assert!((w.norm_squared() - 1.0).abs() < 1e-12);
        let gram = w.adjoint() * &w;
        assert!((gram - CMatrix::identity(3, 3).map(|z| z / 3.0)).norm() < 1e-12);
        assert!((identity_precoder::<f64>(8, 2).norm_squared() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strongest_path_of_keyhole() {
        let cfg = SystemConfig { n: 16, n_t: 4, ..SystemConfig::default() };
        let spec = ChannelSpec { los: LosSpec::keyhole(0.1, -0.3), ..ChannelSpec::default() };
        let statics = StaticChannels::<f64>::draw(&cfg, &spec, &mut rng(0)).unwrap();
        let b = strongest_path_steering(&statics).unwrap();
        assert!((b - steering_vector(4, -0.3, 0.5).unwrap()).norm() < 1e-12);
    }
}
