//! Detectors over the equivalent channel `y = √P H x + z`, `x = v̄ ⊗ s`.
//!
//! [`ml_detect`] searches the full joint alphabet, [`sd_layered_detect`] is a
//! two-layer depth-first sphere decoder (BS symbols first, then the RIS
//! sub-surfaces from the last to the first) and [`linear_detect`] provides
//! ZF/MMSE baselines with per-block hard decisions.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::{Alphabet, CodebookKind, SymbolPair};
use crate::scalar::{cx, czero, CMatrix, CVector, Cx, Real};

/// Default cap on the ML search size.
pub const DEFAULT_ML_CAP: usize = 1 << 24;

#[derive(Clone, Debug)]
pub struct DetectionResult<T: Real> {
    pub pair: SymbolPair,
    /// Flat alphabet index of `pair`.
    pub index: usize,
    /// `‖y − √P H x‖²`.
    pub metric: T,
    pub visited_nodes: u64,
    pub wall_time: Duration,
}

fn residual<T: Real>(y: &CVector<T>, h: &CMatrix<T>, x: &CVector<T>, sqrt_p: T) -> T {
    (y - h * x * cx(sqrt_p, T::zero())).norm_squared()
}

fn check_shapes<T: Real>(y: &CVector<T>, h: &CMatrix<T>, alphabet: &Alphabet<T>) -> Result<()> {
    let cols = (alphabet.config.l + 1) * alphabet.config.n_s;
    if h.ncols() != cols || h.nrows() != y.len() {
        return Err(Error::InvalidDimension(format!(
            "equivalent channel {}x{} does not match y of length {} and {} columns",
            h.nrows(),
            h.ncols(),
            y.len(),
            cols
        )));
    }
    if y.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Domain("received vector is not finite".into()));
    }
    Ok(())
}

/// Exhaustive search `argmin ‖y − √P H x‖²`; ties go to the smaller label.
pub fn ml_detect<T: Real>(
    y: &CVector<T>,
    h: &CMatrix<T>,
    alphabet: &Alphabet<T>,
    p: T,
    cap: usize,
) -> Result<DetectionResult<T>> {
    let start = Instant::now();
    check_shapes(y, h, alphabet)?;
    let size = alphabet.size();
    if size > cap {
        return Err(Error::Complexity { size: size as u128, cap: cap as u128 });
    }
    let (l, ns, nr) = (alphabet.config.l, alphabet.config.n_s, y.len());
    let sqrt_p = cx(p.sqrt(), T::zero());
    let n_cw = alphabet.codebook.len();
    let mut best = (T::max_value().unwrap(), 0usize);
    let mut block_terms: Vec<CVector<T>> = vec![CVector::zeros(nr); l + 1];
    for sym in 0..alphabet.symbol_count() {
        let s = alphabet.symbol_vector(sym);
        for (b, term) in block_terms.iter_mut().enumerate() {
            *term = h.columns(b * ns, ns) * s * sqrt_p;
        }
        let base = y - &block_terms[l];
        for ris in 0..n_cw {
            let v = &alphabet.codebook.codewords[ris];
            let mut metric = T::zero();
            for i in 0..nr {
                let mut z = base[i];
                for (b, vb) in v.iter().enumerate() {
                    z -= block_terms[b][i] * vb;
                }
                metric += z.norm_sqr();
            }
            let idx = sym * n_cw + ris;
            if metric < best.0 || (metric == best.0 && alphabet.tie_key(idx) < alphabet.tie_key(best.1)) {
                best = (metric, idx);
            }
        }
    }
    Ok(DetectionResult {
        pair: alphabet.pair_at(best.1),
        index: best.1,
        metric: best.0,
        visited_nodes: size as u64,
        wall_time: start.elapsed(),
    })
}

/// `H = Q_1 R` with `Q_1^H y` and the out-of-span residual energy.
#[derive(Clone, Debug)]
pub struct QrReduction<T: Real> {
    pub r: CMatrix<T>,
    pub q1: CMatrix<T>,
    pub y_bar: CVector<T>,
    /// `‖Q_2^H y‖² = ‖y‖² − ‖Q_1^H y‖²`.
    pub offset: T,
}

impl<T: Real> QrReduction<T> {
    /// `‖ȳ − √P R x‖² + offset`, equal to `‖y − √P H x‖²`.
    pub fn metric(&self, x: &CVector<T>, p: T) -> T {
        residual(&self.y_bar, &self.r, x, p.sqrt()) + self.offset
    }
}

/// Thin QR of a strictly tall equivalent channel.
pub fn qr_reduce<T: Real>(h: &CMatrix<T>, y: &CVector<T>) -> Result<QrReduction<T>> {
    if h.nrows() <= h.ncols() {
        return Err(Error::NotTall { rows: h.nrows(), cols: h.ncols() });
    }
    let qr = h.clone().qr();
    let q1 = qr.q();
    let r = qr.r();
    let y_bar = q1.adjoint() * y;
    let offset = (y.norm_squared() - y_bar.norm_squared()).max(T::zero());
    Ok(QrReduction { r, q1, y_bar, offset })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialRadius {
    Infinite,
    /// Residual of the MMSE hard decision times `inflation`.
    BabaiResidual {
        inflation: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pruning {
    Fixed,
    #[default]
    ShrinkOnLeaf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChildOrder {
    /// Ascending partial metric.
    #[default]
    Metric,
    /// Shuffled per node from a seeded stream.
    Random { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdParams {
    pub initial_radius: InitialRadius,
    pub max_restarts: usize,
    pub pruning: Pruning,
    pub child_order: ChildOrder,
}

impl Default for SdParams {
    fn default() -> Self {
        Self {
            initial_radius: InitialRadius::BabaiResidual { inflation: 1.2 },
            max_restarts: 8,
            pruning: Pruning::ShrinkOnLeaf,
            child_order: ChildOrder::Metric,
        }
    }
}

impl SdParams {
    /// Infinite radius with leaf shrinking: reproduces ML exactly.
    pub fn exact() -> Self {
        Self { initial_radius: InitialRadius::Infinite, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let InitialRadius::BabaiResidual { inflation } = self.initial_radius {
            if !(inflation > 1.0 && inflation.is_finite()) {
                return Err(Error::Config(format!("sd inflation {inflation} must exceed 1")));
            }
        }
        if self.max_restarts == 0 {
            return Err(Error::Config("sd max_restarts must be at least 1".into()));
        }
        Ok(())
    }
}

struct Search<'a, T: Real> {
    alphabet: &'a Alphabet<T>,
    r: &'a CMatrix<T>,
    y_bar: &'a CVector<T>,
    sqrt_p: T,
    radius: T,
    shrink: bool,
    rng: Option<ChaCha8Rng>,
    x: CVector<T>,
    syms: Vec<usize>,
    letters: Vec<usize>,
    best: Option<(T, usize)>,
    visited: u64,
}

impl<T: Real> Search<'_, T> {
    /// Residual contribution of rows `rows` given `x` fixed from `rows.start` on.
    fn rows_cost(&self, rows: std::ops::Range<usize>) -> T {
        let n = self.x.len();
        let mut cost = T::zero();
        for i in rows {
            let mut acc = czero();
            for j in i..n {
                acc += self.r[(i, j)] * self.x[j];
            }
            cost += (self.y_bar[i] - acc * self.sqrt_p).norm_sqr();
        }
        cost
    }

    fn order(&mut self, mut children: Vec<(T, usize)>) -> Vec<(T, usize)> {
        match &mut self.rng {
            None => children.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))),
            Some(rng) => children.shuffle(rng),
        }
        children
    }

    /// Layer 1: stream `m` of `s`, counting down.
    fn symbol_level(&mut self, m: usize, partial: T) {
        let (l, ns) = (self.alphabet.config.l, self.alphabet.config.n_s);
        let row = l * ns + m;
        let points = self.alphabet.constellation.points.len();
        let children: Vec<(T, usize)> = (0..points)
            .map(|c| {
                self.x[row] = self.alphabet.constellation.points[c];
                (partial + self.rows_cost(row..row + 1), c)
            })
            .collect();
        let sorted = self.rng.is_none();
        for (cost, c) in self.order(children) {
            if cost > self.radius {
                if sorted {
                    break;
                }
                continue;
            }
            self.visited += 1;
            self.x[row] = self.alphabet.constellation.points[c];
            self.syms[m] = c;
            if m > 0 {
                self.symbol_level(m - 1, cost);
            } else if l > 0 {
                self.ris_level(l - 1, cost);
            } else {
                self.leaf(cost);
            }
        }
    }

    fn set_block(&mut self, block: usize, letter: Cx<T>) {
        let (l, ns) = (self.alphabet.config.l, self.alphabet.config.n_s);
        for m in 0..ns {
            self.x[block * ns + m] = letter * self.x[l * ns + m];
        }
    }

    /// Layer 2: sub-surface `block`, counting down.
    fn ris_level(&mut self, block: usize, partial: T) {
        let ns = self.alphabet.config.n_s;
        let rows = block * ns..(block + 1) * ns;
        let q = self.alphabet.codebook.letters.len();
        let children: Vec<(T, usize)> = (0..q)
            .map(|d| {
                self.set_block(block, self.alphabet.codebook.letters[d]);
                (partial + self.rows_cost(rows.clone()), d)
            })
            .collect();
        let sorted = self.rng.is_none();
        for (cost, d) in self.order(children) {
            if cost > self.radius {
                if sorted {
                    break;
                }
                continue;
            }
            self.visited += 1;
            self.set_block(block, self.alphabet.codebook.letters[d]);
            self.letters[block] = d;
            if block > 0 {
                self.ris_level(block - 1, cost);
            } else {
                self.leaf(cost);
            }
        }
    }

    fn leaf(&mut self, cost: T) {
        let sym = self.syms.iter().fold(0, |acc, &d| acc * self.alphabet.config.m + d);
        let idx = sym * self.alphabet.codebook.len() + self.alphabet.codebook.codeword_of_letters(&self.letters);
        let better = match self.best {
            None => true,
            Some((b, bi)) => cost < b || (cost == b && self.alphabet.tie_key(idx) < self.alphabet.tie_key(bi)),
        };
        if better {
            self.best = Some((cost, idx));
            if self.shrink && cost < self.radius {
                self.radius = cost;
            }
        }
    }
}

/// Two-layer sphere decoder. Falls back to [`ml_detect`] when the channel is
/// not strictly tall or the RIS codebook is not a per-sub-surface product.
pub fn sd_layered_detect<T: Real>(
    y: &CVector<T>,
    h: &CMatrix<T>,
    alphabet: &Alphabet<T>,
    p: T,
    sigma2: T,
    params: &SdParams,
) -> Result<DetectionResult<T>> {
    let start = Instant::now();
    check_shapes(y, h, alphabet)?;
    params.validate()?;
    if alphabet.codebook.kind != CodebookKind::Product {
        return ml_detect(y, h, alphabet, p, DEFAULT_ML_CAP);
    }
    let qr = match qr_reduce(h, y) {
        Ok(qr) => qr,
        Err(Error::NotTall { rows, cols }) => {
            log::warn!("equivalent channel {rows}x{cols} is not tall; using ML detection");
            return ml_detect(y, h, alphabet, p, DEFAULT_ML_CAP);
        }
        Err(e) => return Err(e),
    };
    let mut radius = match params.initial_radius {
        InitialRadius::Infinite => T::max_value().unwrap(),
        InitialRadius::BabaiResidual { inflation } => {
            let babai = linear_detect(y, h, alphabet, p, sigma2, LinearKind::Mmse)?;
            let x = alphabet.equivalent_symbol_at(babai.index);
            let reduced = residual(&qr.y_bar, &qr.r, &x, p.sqrt());
            reduced * T::lit(inflation) + T::lit(1e-12) * (qr.y_bar.norm_squared() + T::one())
        }
    };
    let (l, ns) = (alphabet.config.l, alphabet.config.n_s);
    let mut visited = 0;
    for attempt in 0..=params.max_restarts {
        let mut search = Search {
            alphabet,
            r: &qr.r,
            y_bar: &qr.y_bar,
            sqrt_p: p.sqrt(),
            radius,
            shrink: params.pruning == Pruning::ShrinkOnLeaf,
            rng: match params.child_order {
                ChildOrder::Metric => None,
                ChildOrder::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            },
            x: CVector::from_element((l + 1) * ns, czero()),
            syms: vec![0; ns],
            letters: vec![0; l],
            best: None,
            visited: 0,
        };
        search.symbol_level(ns - 1, T::zero());
        visited += search.visited;
        if let Some((cost, idx)) = search.best {
            return Ok(DetectionResult {
                pair: alphabet.pair_at(idx),
                index: idx,
                metric: cost + qr.offset,
                visited_nodes: visited,
                wall_time: start.elapsed(),
            });
        }
        if attempt < params.max_restarts {
            radius = radius * T::lit(2.0);
        }
    }
    Err(Error::RadiusExhausted { restarts: params.max_restarts })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Zf,
    Mmse,
}

/// Soft estimate of `x` scaled back by `1/√P`.
pub fn linear_soft<T: Real>(y: &CVector<T>, h: &CMatrix<T>, p: T, sigma2: T, kind: LinearKind) -> Result<CVector<T>> {
    let cols = h.ncols();
    let hh = h.adjoint() * h;
    match kind {
        LinearKind::Zf => {
            if h.nrows() < cols {
                return Err(Error::Singular(format!("ZF needs full column rank, H is {}x{cols}", h.nrows())));
            }
            let sv = h.clone().singular_values();
            let smax = sv.max();
            if !(smax > T::zero()) || sv.min() <= T::lit(1e-10) * smax {
                return Err(Error::Singular("equivalent channel is rank deficient".into()));
            }
            if !(p > T::zero()) {
                return Err(Error::Singular("ZF undefined at zero transmit power".into()));
            }
            let chol = hh.cholesky().ok_or_else(|| Error::Singular("H^H H is not positive definite".into()))?;
            Ok(chol.solve(&(h.adjoint() * y)) * cx(p.sqrt().recip(), T::zero()))
        }
        LinearKind::Mmse => {
            // (P H^H H + σ² I)^{-1} √P H^H y  ==  (H^H H + σ²/P I)^{-1} H^H y / √P.
            let a = hh * cx(p, T::zero()) + CMatrix::identity(cols, cols) * cx(sigma2, T::zero());
            let rhs = h.adjoint() * y * cx(p.sqrt(), T::zero());
            if !(p > T::zero()) {
                return Ok(CVector::zeros(cols));
            }
            let chol = a.cholesky().ok_or_else(|| Error::Singular("MMSE system is not positive definite".into()))?;
            Ok(chol.solve(&rhs))
        }
    }
}

/// Linear equalization followed by per-block hard decisions.
pub fn linear_detect<T: Real>(
    y: &CVector<T>,
    h: &CMatrix<T>,
    alphabet: &Alphabet<T>,
    p: T,
    sigma2: T,
    kind: LinearKind,
) -> Result<DetectionResult<T>> {
    let start = Instant::now();
    check_shapes(y, h, alphabet)?;
    let x = linear_soft(y, h, p, sigma2, kind)?;
    let (l, ns) = (alphabet.config.l, alphabet.config.n_s);
    let symbols: Vec<usize> = (0..ns).map(|m| alphabet.constellation.nearest(x[l * ns + m])).collect();
    let soft: Vec<Cx<T>> = (0..l)
        .map(|b| {
            let mut acc = czero();
            for (m, &sm) in symbols.iter().enumerate() {
                acc += x[b * ns + m] / alphabet.constellation.points[sm];
            }
            acc / T::lit(ns as f64)
        })
        .collect();
    let ris = alphabet.codebook.nearest(&soft);
    let pair = SymbolPair { symbols, ris };
    let index = alphabet.pair_index(&pair);
    let metric = residual(y, h, &alphabet.equivalent_symbol_at(index), p.sqrt());
    Ok(DetectionResult { pair, index, metric, visited_nodes: 1, wall_time: start.elapsed() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{complex_normal, sample_channel_set, ChannelSpec};
    use crate::modulation::{Scheme, SystemConfig};
    use rand::Rng;

    fn setup(cfg: &SystemConfig, seed: u64) -> (Alphabet<f64>, CMatrix<f64>, ChaCha8Rng) {
        let a = Alphabet::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = sample_channel_set::<f64, _>(cfg, &ChannelSpec::default(), &mut rng).unwrap();
        let mut w = CMatrix::zeros(cfg.n_t, cfg.n_s);
        for i in 0..cfg.n_s {
            w[(i, i)] = cx((1.0 / cfg.n_s as f64).sqrt(), 0.0);
        }
        let h = a.assemble_equivalent_channel(&set, &w);
        (a, h, rng)
    }

    fn received(
        a: &Alphabet<f64>,
        h: &CMatrix<f64>,
        idx: usize,
        p: f64,
        sigma2: f64,
        rng: &mut ChaCha8Rng,
    ) -> CVector<f64> {
        let mut y = h * a.equivalent_symbol_at(idx) * cx(p.sqrt(), 0.0);
        for z in y.iter_mut() {
            *z += complex_normal::<f64, _>(rng) * sigma2.sqrt();
        }
        y
    }

    fn small() -> SystemConfig {
        SystemConfig { n: 16, n_t: 4, ..SystemConfig::default() }
    }

    #[test]
    fn ml_recovers_noiseless() {
        let (a, h, _) = setup(&small(), 1);
        for idx in 0..a.size() {
            let y = received(&a, &h, idx, 1.0, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
            let d = ml_detect(&y, &h, &a, 1.0, DEFAULT_ML_CAP).unwrap();
            assert_eq!(d.index, idx);
            assert!(d.metric < 1e-20);
        }
    }

    #[test]
    fn ml_matches_naive_double_loop() {
        let (a, h, mut rng) = setup(&small(), 2);
        for _ in 0..1000 {
            let idx = rng.random_range(0..a.size());
            let y = received(&a, &h, idx, 0.3, 1.0, &mut rng);
            let d = ml_detect(&y, &h, &a, 0.3, DEFAULT_ML_CAP).unwrap();
            let mut naive = (f64::INFINITY, 0);
            for sym in 0..a.symbol_count() {
                for ris in 0..a.codebook.len() {
                    let pair = SymbolPair { symbols: vec![sym], ris };
                    let m = (&y - &h * a.equivalent_symbol(&pair) * cx(0.3f64.sqrt(), 0.0)).norm_squared();
                    if m < naive.0 {
                        naive = (m, a.pair_index(&pair));
                    }
                }
            }
            assert_eq!(d.index, naive.1);
            assert!((d.metric - naive.0).abs() < 1e-10 * naive.0.max(1.0));
        }
    }

    #[test]
    fn ml_refuses_oversized_alphabet() {
        let (a, h, _) = setup(&small(), 3);
        let y = CVector::zeros(4);
        assert!(matches!(ml_detect(&y, &h, &a, 1.0, 4), Err(Error::Complexity { size: 18, cap: 4 })));
    }

    #[test]
    fn qr_identities() {
        let (_, h, mut rng) = setup(&small(), 4);
        let y = CVector::from_fn(4, |_, _| complex_normal::<f64, _>(&mut rng));
        let qr = qr_reduce(&h, &y).unwrap();
        assert!((&qr.q1 * &qr.r - &h).norm() < 1e-10 * h.norm());
        for i in 0..qr.r.nrows() {
            for j in 0..i {
                assert_eq!(qr.r[(i, j)], czero());
            }
        }
        for _ in 0..100 {
            let x = CVector::from_fn(3, |_, _| complex_normal::<f64, _>(&mut rng));
            let direct = residual(&y, &h, &x, 2.0);
            assert!((qr.metric(&x, 4.0) - direct).abs() < 1e-10 * direct.max(1.0));
        }
    }

    #[test]
    fn qr_of_orthonormal_columns() {
        let h = CMatrix::<f64>::from_fn(4, 2, |i, j| if i == j { cx(1.0, 0.0) } else { czero() });
        let y = CVector::from_vec(vec![cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0), cx(4.0, 0.0)]);
        let qr = qr_reduce(&h, &y).unwrap();
        for i in 0..2 {
            assert!((qr.r[(i, i)].norm() - 1.0).abs() < 1e-12);
        }
        assert!((qr.offset - 25.0).abs() < 1e-12);
    }

    #[test]
    fn qr_rejects_wide() {
        let h = CMatrix::<f64>::zeros(3, 3);
        let y = CVector::zeros(3);
        assert!(matches!(qr_reduce(&h, &y), Err(Error::NotTall { rows: 3, cols: 3 })));
    }

    #[test]
    fn sd_exact_matches_ml() {
        for (cfg, seed) in [
            (small(), 5),
            (SystemConfig { m: 4, n_s: 2, n_r: 8, l: 2, ..small() }, 6),
            (SystemConfig { k: 2, l: 3, n: 24, n_r: 6, m: 4, ..small() }, 7),
        ] {
            let (a, h, mut rng) = setup(&cfg, seed);
            for snr in [0.25, 1.0, 4.0] {
                for _ in 0..300 {
                    let idx = rng.random_range(0..a.size());
                    let y = received(&a, &h, idx, snr, 1.0, &mut rng);
                    let ml = ml_detect(&y, &h, &a, snr, DEFAULT_ML_CAP).unwrap();
                    let sd = sd_layered_detect(&y, &h, &a, snr, 1.0, &SdParams::exact()).unwrap();
                    assert_eq!(sd.index, ml.index);
                    assert!((sd.metric - ml.metric).abs() < 1e-10 * ml.metric.max(1.0));
                    assert!(sd.visited_nodes as usize <= a.size() * 2);
                }
            }
        }
    }

    #[test]
    fn sd_noiseless_visits_each_level() {
        let (a, h, _) = setup(&small(), 8);
        for idx in 0..a.size() {
            let y = received(&a, &h, idx, 1.0, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
            for params in [SdParams::exact(), SdParams::default()] {
                let d = sd_layered_detect(&y, &h, &a, 1.0, 1.0, &params).unwrap();
                assert_eq!(d.index, idx);
                assert!(d.visited_nodes >= 3);
            }
        }
    }

    #[test]
    fn shrinking_never_visits_more() {
        let (a, h, mut rng) = setup(&small(), 9);
        for _ in 0..500 {
            let idx = rng.random_range(0..a.size());
            let y = received(&a, &h, idx, 0.5, 1.0, &mut rng);
            let shrink = sd_layered_detect(&y, &h, &a, 0.5, 1.0, &SdParams::default()).unwrap();
            let fixed = SdParams { pruning: Pruning::Fixed, ..SdParams::default() };
            let fixed = sd_layered_detect(&y, &h, &a, 0.5, 1.0, &fixed).unwrap();
            assert!(shrink.visited_nodes <= fixed.visited_nodes);
            assert_eq!(shrink.index, fixed.index);
        }
    }

    #[test]
    fn random_child_order_reaches_ml() {
        let (a, h, mut rng) = setup(&small(), 10);
        let params = SdParams { child_order: ChildOrder::Random { seed: 3 }, ..SdParams::exact() };
        for _ in 0..300 {
            let idx = rng.random_range(0..a.size());
            let y = received(&a, &h, idx, 0.5, 1.0, &mut rng);
            let ml = ml_detect(&y, &h, &a, 0.5, DEFAULT_ML_CAP).unwrap();
            assert_eq!(sd_layered_detect(&y, &h, &a, 0.5, 1.0, &params).unwrap().index, ml.index);
        }
    }

    #[test]
    fn sd_falls_back_for_patterns() {
        let cfg = SystemConfig { scheme: Scheme::Rpm(1), l: 4, n_r: 8, ..small() };
        let (a, h, mut rng) = setup(&cfg, 11);
        let y = received(&a, &h, 3, 1.0, 0.1, &mut rng);
        let sd = sd_layered_detect(&y, &h, &a, 1.0, 0.1, &SdParams::default()).unwrap();
        assert_eq!(sd.visited_nodes as usize, a.size());
    }

    #[test]
    fn linear_noiseless_recovery() {
        let (a, h, _) = setup(&small(), 12);
        for kind in [LinearKind::Zf, LinearKind::Mmse] {
            for idx in 0..a.size() {
                let y = received(&a, &h, idx, 1e4, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
                let sigma2 = if kind == LinearKind::Mmse { 1e-9 } else { 0.0 };
                assert_eq!(linear_detect(&y, &h, &a, 1e4, sigma2, kind).unwrap().index, idx);
            }
        }
    }

    #[test]
    fn mmse_vanishes_under_huge_noise() {
        let (_, h, mut rng) = setup(&small(), 13);
        let y = CVector::from_fn(4, |_, _| complex_normal::<f64, _>(&mut rng));
        let x = linear_soft(&y, &h, 1.0, 1e12, LinearKind::Mmse).unwrap();
        assert!(x.norm() < 1e-9);
    }

    #[test]
    fn zf_rejects_rank_deficiency() {
        let (a, mut h, _) = setup(&small(), 14);
        let col = h.column(0).clone_owned();
        h.set_column(1, &col);
        let y = CVector::from_element(4, cx(1.0, 0.0));
        assert!(matches!(linear_detect(&y, &h, &a, 1.0, 1.0, LinearKind::Zf), Err(Error::Singular(_))));
    }
}
