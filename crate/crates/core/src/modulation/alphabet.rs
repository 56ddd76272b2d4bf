use rand::Rng;

use super::codebook::{RisCodebook, MAX_CODEWORDS};
use super::constellation::Constellation;
use super::SystemConfig;
use crate::channels::{complex_normal, ChannelSet};
use crate::error::{Error, Result};
use crate::scalar::{cx, czero, CMatrix, CVector, Cx, Real};

/// One transmitted message: constellation indices of `s` and the RIS codeword.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolPair {
    pub symbols: Vec<usize>,
    pub ris: usize,
}

/// Full joint alphabet of (BS symbol vector, RIS codeword).
#[derive(Clone, Debug)]
pub struct Alphabet<T: Real> {
    pub config: SystemConfig,
    pub constellation: Constellation<T>,
    pub codebook: RisCodebook<T>,
    sym_vectors: Vec<CVector<T>>,
    sym_labels: Vec<u64>,
}

impl<T: Real> Alphabet<T> {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let constellation = Constellation::new(config.modulation, config.m)?;
        let codebook = RisCodebook::new(config)?;
        let sym_count = (config.m as u128).checked_pow(config.n_s as u32).unwrap_or(u128::MAX);
        if sym_count > MAX_CODEWORDS as u128 {
            return Err(Error::Complexity { size: sym_count, cap: MAX_CODEWORDS as u128 });
        }
        let sym_count = sym_count as usize;
        let mut sym_vectors = Vec::with_capacity(sym_count);
        let mut sym_labels = Vec::with_capacity(sym_count);
        for idx in 0..sym_count {
            let digits = stream_digits(idx, config.m, config.n_s);
            sym_vectors.push(CVector::from_fn(config.n_s, |i, _| constellation.points[digits[i]]));
            sym_labels.push(digits.iter().fold(0u64, |acc, &d| (acc << constellation.bits) | constellation.labels[d]));
        }
        Ok(Self { config: config.clone(), constellation, codebook, sym_vectors, sym_labels })
    }

    /// `M^{N_s}`.
    pub fn symbol_count(&self) -> usize {
        self.sym_vectors.len()
    }

    /// `S`: every (symbol vector, codeword) combination.
    pub fn size(&self) -> usize {
        self.symbol_count() * self.codebook.len()
    }

    /// Bits per channel use.
    pub fn rate_bits(&self) -> usize {
        self.config.n_s * self.constellation.bits + self.codebook.bits
    }

    pub fn symbol_vector(&self, sym: usize) -> &CVector<T> {
        &self.sym_vectors[sym]
    }

    pub fn symbol_vectors(&self) -> &[CVector<T>] {
        &self.sym_vectors
    }

    /// Index of the symbol vector of `pair`.
    pub fn symbol_index(&self, pair: &SymbolPair) -> usize {
        pair.symbols.iter().fold(0, |acc, &d| acc * self.config.m + d)
    }

    /// Flat index `sym·|codebook| + ris`.
    pub fn pair_index(&self, pair: &SymbolPair) -> usize {
        self.symbol_index(pair) * self.codebook.len() + pair.ris
    }

    pub fn pair_at(&self, idx: usize) -> SymbolPair {
        let c = self.codebook.len();
        SymbolPair { symbols: stream_digits(idx / c, self.config.m, self.config.n_s), ris: idx % c }
    }

    /// Bit label of a flat index: symbol bits first, then RIS bits.
    pub fn label_at(&self, idx: usize) -> u64 {
        let c = self.codebook.len();
        (self.sym_labels[idx / c] << self.codebook.bits) | self.codebook.labels[idx % c]
    }

    pub fn label(&self, pair: &SymbolPair) -> u64 {
        self.label_at(self.pair_index(pair))
    }

    /// Ordering used to break metric ties: label first, then codeword index.
    pub fn tie_key(&self, idx: usize) -> (u64, usize) {
        (self.label_at(idx), idx % self.codebook.len())
    }

    /// Hamming distance between the labels of two flat indices.
    pub fn error_bits(&self, a: usize, b: usize) -> u32 {
        (self.label_at(a) ^ self.label_at(b)).count_ones()
    }

    /// Maps `rate_bits()` bits (values 0/1, first bit most significant) to a pair.
    pub fn map_bits_to_symbols(&self, bits: &[u8]) -> Result<SymbolPair> {
        let r = self.rate_bits();
        if bits.len() != r {
            return Err(Error::Framing(format!("expected {r} bits, got {}", bits.len())));
        }
        let mut label = 0u64;
        for &b in bits {
            if b > 1 {
                return Err(Error::Framing(format!("bit value {b} is not 0 or 1")));
            }
            label = (label << 1) | u64::from(b);
        }
        Ok(self.pair_from_label(label))
    }

    /// Pair carrying a `rate_bits()`-bit label.
    pub fn pair_from_label(&self, label: u64) -> SymbolPair {
        let rb = self.codebook.bits;
        let ris = self.codebook.index_of_label(label & ((1u64 << rb) - 1));
        let mut sym_label = label >> rb;
        let cb = self.constellation.bits;
        let mut symbols = vec![0; self.config.n_s];
        for s in symbols.iter_mut().rev() {
            *s = self.constellation.index_of_label(sym_label & ((1u64 << cb) - 1));
            sym_label >>= cb;
        }
        SymbolPair { symbols, ris }
    }

    /// Inverse of [`map_bits_to_symbols`](Self::map_bits_to_symbols).
    pub fn bits_of(&self, pair: &SymbolPair) -> Vec<u8> {
        let r = self.rate_bits();
        let label = self.label(pair);
        (0..r).map(|i| ((label >> (r - 1 - i)) & 1) as u8).collect()
    }

    /// Uniformly random message from the bit-addressable subset.
    pub fn random_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (u64, SymbolPair) {
        let r = self.rate_bits();
        let label = rng.random::<u64>() & ((1u64 << r) - 1);
        (label, self.pair_from_label(label))
    }

    /// Diagonal of `Ξ` for codeword `ris`.
    pub fn phase_diagonal(&self, ris: usize) -> Vec<Cx<T>> {
        let g = self.config.group_size();
        self.codebook.codewords[ris].iter().flat_map(|&v| std::iter::repeat_n(v, g)).collect()
    }

    /// `Ξ = diag{v} ⊗ I_{N/L}`.
    pub fn phase_matrix(&self, ris: usize) -> CMatrix<T> {
        let d = self.phase_diagonal(ris);
        CMatrix::from_diagonal(&CVector::from_vec(d))
    }

    /// Reflection matrix selected by the RIS pattern bits of a baseline scheme.
    pub fn baseline_phase_matrix(&self, pattern_bits: &[u8]) -> Result<CMatrix<T>> {
        if pattern_bits.len() != self.codebook.bits {
            return Err(Error::Framing(format!(
                "expected {} pattern bits, got {}",
                self.codebook.bits,
                pattern_bits.len()
            )));
        }
        let mut label = 0u64;
        for &b in pattern_bits {
            if b > 1 {
                return Err(Error::Framing(format!("bit value {b} is not 0 or 1")));
            }
            label = (label << 1) | u64::from(b);
        }
        Ok(self.phase_matrix(self.codebook.index_of_label(label)))
    }

    /// Equivalent symbol `x = v̄ ⊗ s` with `v̄ = [v_1..v_L, 1]`.
    pub fn equivalent_symbol(&self, pair: &SymbolPair) -> CVector<T> {
        self.equivalent_symbol_at(self.pair_index(pair))
    }

    pub fn equivalent_symbol_at(&self, idx: usize) -> CVector<T> {
        let c = self.codebook.len();
        let s = &self.sym_vectors[idx / c];
        let v = &self.codebook.codewords[idx % c];
        let ns = self.config.n_s;
        let one = cx(T::one(), T::zero());
        CVector::from_fn((self.config.l + 1) * ns, |i, _| {
            let block = i / ns;
            let factor = if block < self.config.l { v[block] } else { one };
            factor * s[i % ns]
        })
    }

    /// Checks `Tr(W W^H) = 1` within `1e-9`.
    pub fn check_precoder(&self, w: &CMatrix<T>) -> Result<()> {
        if w.shape() != (self.config.n_t, self.config.n_s) {
            return Err(Error::InvalidDimension(format!(
                "precoder is {}x{}, expected {}x{}",
                w.nrows(),
                w.ncols(),
                self.config.n_t,
                self.config.n_s
            )));
        }
        let power = w.norm_squared();
        if (power - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::Invariant(format!("precoder power Tr(WW^H) = {} differs from 1", power.as_f64())));
        }
        Ok(())
    }

    /// `(H_d + H_r Θ^b Ξ G) W s` computed directly.
    pub fn noiseless_signal(&self, pair: &SymbolPair, channels: &ChannelSet<T>, w: &CMatrix<T>) -> CVector<T> {
        let s = &self.sym_vectors[self.symbol_index(pair)];
        let ws = w * s;
        let gws = channels.g() * &ws;
        let xi = self.phase_diagonal(pair.ris);
        let theta = channels.base_phases();
        let reflected = CVector::from_fn(gws.len(), |n, _| gws[n] * xi[n] * Cx::new(theta[n].cos(), theta[n].sin()));
        &channels.h_d * ws + &channels.h_r * reflected
    }

    /// `y = √P (H_d + H_r Θ^b Ξ G) W s + z` with `z ~ CN(0, σ² I)`.
    pub fn synthesize_received<R: Rng + ?Sized>(
        &self,
        pair: &SymbolPair,
        channels: &ChannelSet<T>,
        w: &CMatrix<T>,
        p: T,
        sigma2: T,
        rng: &mut R,
    ) -> Result<CVector<T>> {
        self.check_precoder(w)?;
        let mut y = self.noiseless_signal(pair, channels, w) * Cx::new(p.sqrt(), T::zero());
        add_noise(&mut y, sigma2, rng);
        Ok(y)
    }

    /// `H = [c_1 .. c_L | H_d W]` with block `l` gathering the cascaded terms
    /// of sub-surface `l`.
    pub fn assemble_equivalent_channel(&self, channels: &ChannelSet<T>, w: &CMatrix<T>) -> CMatrix<T> {
        let gw = channels.g() * w;
        self.assemble_with_gw(channels, w, &gw)
    }

    /// As [`assemble_equivalent_channel`](Self::assemble_equivalent_channel)
    /// with `G W` precomputed.
    pub fn assemble_with_gw(&self, channels: &ChannelSet<T>, w: &CMatrix<T>, gw: &CMatrix<T>) -> CMatrix<T> {
        let (nr, ns, l) = (self.config.n_r, self.config.n_s, self.config.l);
        let g = self.config.group_size();
        let theta = channels.base_phases();
        let rot: Vec<Cx<T>> = theta.iter().map(|t| Cx::new(t.cos(), t.sin())).collect();
        let mut h = CMatrix::from_element(nr, (l + 1) * ns, czero());
        for i in 0..nr {
            for n in 0..self.config.n {
                let a = channels.h_r[(i, n)] * rot[n];
                let block = n / g;
                for m in 0..ns {
                    h[(i, block * ns + m)] += a * gw[(n, m)];
                }
            }
        }
        let direct = &channels.h_d * w;
        h.view_mut((0, l * ns), (nr, ns)).copy_from(&direct);
        h
    }
}

pub(crate) fn add_noise<T: Real, R: Rng + ?Sized>(y: &mut CVector<T>, sigma2: T, rng: &mut R) {
    if sigma2 > T::zero() {
        let sd = sigma2.sqrt();
        for z in y.iter_mut() {
            *z += complex_normal::<T, _>(rng) * sd;
        }
    }
}

fn stream_digits(mut idx: usize, m: usize, n_s: usize) -> Vec<usize> {
    let mut d = vec![0; n_s];
    for x in d.iter_mut().rev() {
        *x = idx % m;
        idx /= m;
    }
    d
}
