//! Analytical ABER and capacity.
//!
//! For a transmitted pair `(s, v)` detected as `(ŝ, v̂)` the difference
//! `δ = H_d u + H_r q` with `u = W(s − ŝ)` and
//! `q_n = e^{jθ_n}(v_l (GWs)_n − v̂_l (GWŝ)_n)` is zero-mean Gaussian with
//! covariance `(β_d u^H R_b u + β_r q^H R_r q)·R_u` under the Kronecker model.
//! Every pairwise quantity therefore reduces to one effective variance and the
//! eigenvalues of `R_u`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::StaticChannels;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, tree_sum};
use crate::modulation::Alphabet;
use crate::scalar::{cis, czero, CMatrix, CVector, Cx, Real};

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `(1/12)e^{−x²/2} + (1/4)e^{−2x²/3}`.
pub fn q_two_term(x: f64) -> f64 {
    QBoundSpec::TwoTermApprox.evaluate(x)
}

pub fn q_exp_bound(x: f64, spec: &QBoundSpec) -> f64 {
    spec.evaluate(x)
}

/// Exponential-sum model `Q(x) ≈ Σ a_i e^{−b_i x²}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QBoundSpec {
    TwoTermApprox,
    /// Partition `0 < θ_1 ≤ … ≤ θ_Q = π/2` of the Craig integral.
    ExponentialUpperBound {
        angles: Vec<f64>,
    },
}

impl Default for QBoundSpec {
    fn default() -> Self {
        Self::uniform(1)
    }
}

impl QBoundSpec {
    /// Uniform partition of `[0, π/2]` into `q` pieces.
    pub fn uniform(q: usize) -> Self {
        let q = q.max(1);
        Self::ExponentialUpperBound { angles: (1..=q).map(|i| FRAC_PI_2 * i as f64 / q as f64).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::ExponentialUpperBound { angles } = self {
            let Some(&last) = angles.last() else {
                return Err(Error::Config("exponential bound needs at least one angle".into()));
            };
            if (last - FRAC_PI_2).abs() > 1e-12 {
                return Err(Error::Config("last bound angle must be π/2".into()));
            }
            let mut prev = 0.0;
            for &a in angles {
                if !(a >= prev) || a <= 0.0 {
                    return Err(Error::Config("bound angles must be positive and nondecreasing".into()));
                }
                prev = a;
            }
        }
        Ok(())
    }

    /// Coefficients `(a_i, b_i)`.
    pub fn terms(&self) -> Vec<(f64, f64)> {
        match self {
            Self::TwoTermApprox => vec![(1.0 / 12.0, 0.5), (0.25, 2.0 / 3.0)],
            Self::ExponentialUpperBound { angles } => {
                let mut prev = 0.0;
                angles
                    .iter()
                    .map(|&t| {
                        let a = (t - prev) / PI;
                        prev = t;
                        (a, 0.5 / (t.sin() * t.sin()))
                    })
                    .collect()
            }
        }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.terms().iter().map(|(a, b)| a * (-b * x * x).exp()).sum()
    }
}

/// `(1 − σ² t)^{−N_r}`.
pub fn mgf_uncorrelated<T: Real>(sigma_d2: T, n_r: usize, t: T) -> Result<T> {
    let base = T::one() - sigma_d2 * t;
    if !(base > T::zero()) {
        return Err(Error::Domain(format!("MGF diverges at t = {}", t.as_f64())));
    }
    Ok(base.powi(-(n_r as i32)))
}

/// `∏ (1 − λ_i t)^{−1}`.
pub fn mgf_from_eigenvalues<T: Real>(eigenvalues: &[T], t: T) -> Result<T> {
    let mut acc = T::one();
    for &l in eigenvalues {
        let base = T::one() - l * t;
        if !(base > T::zero()) {
            return Err(Error::Domain(format!("MGF diverges at t = {}", t.as_f64())));
        }
        acc /= base;
    }
    Ok(acc)
}

/// Exact conditional pairwise error probability `Q(√(Pλ/2σ²))`.
pub fn cpep(lambda: f64, p: f64, sigma2: f64) -> f64 {
    q_function((p * lambda.max(0.0) / (2.0 * sigma2)).sqrt())
}

/// Pairwise statistics of one ordered pair.
#[derive(Clone, Debug)]
pub struct PairwiseContext<T: Real> {
    pub source: usize,
    pub detected: usize,
    /// Covariance of `δ`.
    pub covariance: CMatrix<T>,
    /// Eigenvalues of the covariance, clamped at zero.
    pub eigenvalues: Vec<T>,
    /// Effective variance `β_d u^H R_b u + β_r q^H R_r q`; equals `σ_d²` for
    /// identity correlation.
    pub sigma_d2: T,
    pub error_bits: u32,
    pub uncorrelated: bool,
}

/// `M_λ(t)`, using the closed form when the covariance is scaled identity.
pub fn mgf_lambda<T: Real>(ctx: &PairwiseContext<T>, t: T) -> Result<T> {
    if ctx.uncorrelated {
        mgf_uncorrelated(ctx.sigma_d2, ctx.eigenvalues.len(), t)
    } else {
        mgf_from_eigenvalues(&ctx.eigenvalues, t)
    }
}

/// `Σ a_i M_λ(−b_i P/(2σ²))`.
pub fn apep<T: Real>(ctx: &PairwiseContext<T>, p: T, sigma2: T, qspec: &QBoundSpec) -> Result<T> {
    let snr = p / (sigma2 * T::lit(2.0));
    let mut acc = T::zero();
    for (a, b) in qspec.terms() {
        acc += T::lit(a) * mgf_lambda(ctx, -(T::lit(b) * snr))?;
    }
    Ok(acc)
}

/// Hard caps on exhaustive pair enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairLimits {
    /// Ordered pairs enumerated exhaustively up to this count.
    pub pair_cap: usize,
    /// Pairs sampled beyond it.
    pub samples: usize,
    pub seed: u64,
}

impl Default for PairLimits {
    fn default() -> Self {
        Self { pair_cap: 1 << 20, samples: 1 << 18, seed: 0x5eed }
    }
}

/// Precomputed Gram data for all pairwise variances of one static channel and
/// precoder.
pub struct PairwiseEngine<'a, T: Real> {
    alphabet: &'a Alphabet<T>,
    beta_d: T,
    beta_r: T,
    /// `D[a][b] = (W s_a)^H R_b (W s_b)`.
    direct: CMatrix<T>,
    /// `Γ[(l,a),(l',b)] = z_{l,a}^H R_r z_{l',b}`, row index `l·M^{N_s} + a`.
    cascade: CMatrix<T>,
    ris_diagonal: bool,
    ru_eigen: Vec<T>,
    ru_identity: bool,
    r_u: CMatrix<T>,
}

impl<'a, T: Real> PairwiseEngine<'a, T> {
    pub fn new(alphabet: &'a Alphabet<T>, statics: &StaticChannels<T>, w: &CMatrix<T>) -> Result<Self> {
        alphabet.check_precoder(w)?;
        let cfg = &alphabet.config;
        if statics.n() != cfg.n || statics.n_t() != cfg.n_t || statics.n_r() != cfg.n_r {
            return Err(Error::InvalidDimension("static channels do not match the configuration".into()));
        }
        let ns_sym = alphabet.symbol_count();
        let ps: Vec<CVector<T>> = alphabet.symbol_vectors().iter().map(|s| w * s).collect();
        let rb_ps: Vec<CVector<T>> = ps.iter().map(|p| &statics.r_b * p).collect();
        let direct = CMatrix::from_fn(ns_sym, ns_sym, |a, b| ps[a].dotc(&rb_ps[b]));

        let gw = &statics.g * w;
        let (l, g) = (cfg.l, cfg.group_size());
        let rot: Vec<Cx<T>> = statics.base_phases.iter().map(|&t| cis(t)).collect();
        let dim = l * ns_sym;
        let mut z = CMatrix::from_element(cfg.n, dim, czero());
        for a in 0..ns_sym {
            let gws = &gw * alphabet.symbol_vector(a);
            for n in 0..cfg.n {
                z[(n, (n / g) * ns_sym + a)] = rot[n] * gws[n];
            }
        }
        let ris_diagonal = statics.correlation.ris.is_identity();
        let cascade = if ris_diagonal { z.adjoint() * &z } else { z.adjoint() * &statics.r_r * &z };
        let (mut ru_eigen, _) = hermitian_eigen(&statics.r_u);
        for e in ru_eigen.iter_mut() {
            *e = e.max(T::zero());
        }
        Ok(Self {
            alphabet,
            beta_d: statics.beta_d,
            beta_r: statics.beta_r,
            direct,
            cascade,
            ris_diagonal,
            ru_eigen,
            ru_identity: statics.correlation.user.is_identity(),
            r_u: statics.r_u.clone(),
        })
    }

    pub fn alphabet(&self) -> &Alphabet<T> {
        self.alphabet
    }

    pub fn n_r(&self) -> usize {
        self.ru_eigen.len()
    }

    /// Effective variance of the ordered pair `(src, dst)`.
    pub fn effective_variance(&self, src: usize, dst: usize) -> T {
        if src == dst {
            return T::zero();
        }
        let c = self.alphabet.codebook.len();
        let (a, b) = (src / c, dst / c);
        let v = &self.alphabet.codebook.codewords[src % c];
        let vh = &self.alphabet.codebook.codewords[dst % c];
        let d = self.direct[(a, a)].re + self.direct[(b, b)].re - T::lit(2.0) * self.direct[(a, b)].re;
        let ms = self.alphabet.symbol_count();
        let l = self.alphabet.config.l;
        let gamma = |la: usize, x: usize, lb: usize, y: usize| self.cascade[(la * ms + x, lb * ms + y)];
        let mut q = czero::<T>();
        for l1 in 0..l {
            let range: Box<dyn Iterator<Item = usize>> =
                if self.ris_diagonal { Box::new(std::iter::once(l1)) } else { Box::new(0..l) };
            for l2 in range {
                q += v[l1].conj() * v[l2] * gamma(l1, a, l2, a);
                q -= v[l1].conj() * vh[l2] * gamma(l1, a, l2, b);
                q -= vh[l1].conj() * v[l2] * gamma(l1, b, l2, a);
                q += vh[l1].conj() * vh[l2] * gamma(l1, b, l2, b);
            }
        }
        (self.beta_d * d + self.beta_r * q.re).max(T::zero())
    }

    /// Full pairwise context including the covariance matrix.
    pub fn delta_covariance(&self, src: usize, dst: usize) -> PairwiseContext<T> {
        let sigma = self.effective_variance(src, dst);
        let covariance = self.r_u.map(|z| z * sigma);
        PairwiseContext {
            source: src,
            detected: dst,
            covariance,
            eigenvalues: self.ru_eigen.iter().map(|&e| e * sigma).collect(),
            sigma_d2: sigma,
            error_bits: self.alphabet.error_bits(src, dst),
            uncorrelated: self.ru_identity,
        }
    }

    /// `M_λ(t)` of the pair with effective variance `sigma`.
    fn mgf(&self, sigma: T, t: T) -> T {
        if self.ru_identity {
            (T::one() - sigma * t).powi(-(self.n_r() as i32))
        } else {
            self.ru_eigen.iter().fold(T::one(), |acc, &e| acc / (T::one() - e * sigma * t))
        }
    }

    fn apep_sigma(&self, sigma: T, snr: T, terms: &[(T, T)]) -> T {
        terms.iter().fold(T::zero(), |acc, &(a, b)| acc + a * self.mgf(sigma, -(b * snr)))
    }

    /// Streams `f(src, dst)` over every ordered pair with `src ≠ dst`, or a
    /// uniform sample of them; returns `(mean, stderr, count, sampled)`.
    fn pair_mean<F>(&self, limits: &PairLimits, f: F) -> (T, T, usize, bool)
    where
        F: Fn(usize, usize) -> T + Sync,
    {
        let s = self.alphabet.size();
        let pairs = s * (s - 1);
        if pairs == 0 {
            return (T::zero(), T::zero(), 0, false);
        }
        if pairs <= limits.pair_cap {
            let partial: Vec<T> = (0..s)
                .into_par_iter()
                .map(|src| {
                    let row: Vec<T> = (0..s).filter(|&d| d != src).map(|dst| f(src, dst)).collect();
                    tree_sum(&row)
                })
                .collect();
            (tree_sum(&partial) / T::lit(pairs as f64), T::zero(), pairs, false)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(limits.seed);
            let draws: Vec<(usize, usize)> = (0..limits.samples.max(2))
                .map(|_| {
                    let src = rng.random_range(0..s);
                    let mut dst = rng.random_range(0..s - 1);
                    if dst >= src {
                        dst += 1;
                    }
                    (src, dst)
                })
                .collect();
            let vals: Vec<T> = draws.par_iter().map(|&(a, b)| f(a, b)).collect();
            let n = T::lit(vals.len() as f64);
            let mean = tree_sum(&vals) / n;
            let sq: Vec<T> = vals.iter().map(|&v| (v - mean) * (v - mean)).collect();
            let var = tree_sum(&sq) / (n - T::one());
            (mean, (var / n).sqrt(), vals.len(), true)
        }
    }

    /// Union bound `(1/(rS)) Σ e·APEP` over ordered pairs.
    pub fn aber_union_bound(&self, p: T, sigma2: T, qspec: &QBoundSpec, limits: &PairLimits) -> UnionBound {
        let snr = p / (sigma2 * T::lit(2.0));
        let terms: Vec<(T, T)> = qspec.terms().into_iter().map(|(a, b)| (T::lit(a), T::lit(b))).collect();
        let (mean, se, count, sampled) = self.pair_mean(limits, |src, dst| {
            let e = self.alphabet.error_bits(src, dst);
            if e == 0 {
                return T::zero();
            }
            T::lit(f64::from(e)) * self.apep_sigma(self.effective_variance(src, dst), snr, &terms)
        });
        let s = self.alphabet.size() as f64;
        let scale = (s - 1.0) / self.alphabet.rate_bits() as f64;
        let value = mean.as_f64() * scale;
        UnionBound { value, clamped: value.clamp(0.0, 0.5), std_error: se.as_f64() * scale, pairs: count, sampled }
    }

    /// `2 log2 S − log2(S + Σ_{(ŝ,v̂)≠(s,v)} M_λ(−P/2σ²))`, clamped to `[0, log2 S]`.
    pub fn dcmc_capacity(&self, p: T, sigma2: T, limits: &PairLimits) -> f64 {
        let t = -(p / (sigma2 * T::lit(2.0)));
        let (mean, _, _, _) = self.pair_mean(limits, |src, dst| self.mgf(self.effective_variance(src, dst), t));
        let s = self.alphabet.size() as f64;
        let total = s + mean.as_f64() * s * (s - 1.0);
        (2.0 * s.log2() - total.log2()).clamp(0.0, s.log2())
    }
}

/// Union-bound evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnionBound {
    pub value: f64,
    /// `value` clipped to `[0, 0.5]`.
    pub clamped: f64,
    /// Standard error when pairs were sampled, zero otherwise.
    pub std_error: f64,
    pub pairs: usize,
    pub sampled: bool,
}

/// Convenience wrapper building a [`PairwiseEngine`].
pub fn aber_union_bound<T: Real>(
    alphabet: &Alphabet<T>,
    statics: &StaticChannels<T>,
    w: &CMatrix<T>,
    p: T,
    sigma2: T,
    qspec: &QBoundSpec,
    limits: &PairLimits,
) -> Result<UnionBound> {
    Ok(PairwiseEngine::new(alphabet, statics, w)?.aber_union_bound(p, sigma2, qspec, limits))
}

pub fn dcmc_capacity<T: Real>(
    alphabet: &Alphabet<T>,
    statics: &StaticChannels<T>,
    w: &CMatrix<T>,
    p: T,
    sigma2: T,
    limits: &PairLimits,
) -> Result<f64> {
    Ok(PairwiseEngine::new(alphabet, statics, w)?.dcmc_capacity(p, sigma2, limits))
}

/// Least-squares slope of `log10(ABER)` against SNR in dB, reported in decades
/// per 10 dB, over the points whose ABER lies in `window`.
pub fn diversity_slope(curve: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(_, a)| *a >= window.0 && *a <= window.1 && a.is_finite())
        .map(|&(x, a)| (x, a.log10()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} points inside the ABER window [{:e}, {:e}]",
            pts.len(),
            window.0,
            window.1
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all window points share one SNR".into()));
    }
    Ok(-10.0 * sxy / sxx)
}

/// SNR (dB) at which a decreasing curve first crosses `target`, by linear
/// interpolation in `log10` of the metric.
pub fn snr_at(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 >= target && y1 <= target && y0 > 0.0 && y1 > 0.0 {
            let (l0, l1, lt) = (y0.log10(), y1.log10(), target.log10());
            if l0 == l1 {
                Some(x0)
            } else {
                Some(x0 + (x1 - x0) * (l0 - lt) / (l0 - l1))
            }
        } else {
            None
        }
    })
}
