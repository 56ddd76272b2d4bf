use super::constellation::{gray, gray_inverse};
use super::{Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::scalar::{cis, cx, czero, Cx, Real};

/// Upper bound on the number of RIS codewords kept in memory.
pub const MAX_CODEWORDS: usize = 1 << 24;

fn floor_log2(x: u128) -> usize {
    if x == 0 {
        0
    } else {
        127 - x.leading_zeros() as usize
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Bits carried by the RIS per channel use.
pub(crate) fn ris_bits(config: &SystemConfig) -> usize {
    match config.scheme {
        Scheme::Srpm => config.l * floor_log2((2 * config.k + 1) as u128),
        Scheme::Pbf => 0,
        Scheme::Pbit => config.l,
        Scheme::Rpm(p) | Scheme::Qrm(p) => floor_log2(binomial(config.l, p)),
    }
}

/// How codewords are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodebookKind {
    /// Every sub-surface independently picks a letter from one shared set.
    Product,
    /// Codewords are index combinations across sub-surfaces.
    Pattern,
}

/// RIS reflection codebook: each codeword is the vector `v` of per-sub-surface
/// factors that `Ξ = diag{v} ⊗ I_{N/L}` applies.
#[derive(Clone, Debug)]
pub struct RisCodebook<T: Real> {
    pub kind: CodebookKind,
    pub l: usize,
    /// Shared letters of a product codebook, in label order.
    pub letters: Vec<Cx<T>>,
    /// Integer offset `k` of each SRPM letter.
    pub letter_offsets: Vec<i64>,
    pub letter_labels: Vec<u64>,
    pub bits_per_letter: usize,
    pub codewords: Vec<Vec<Cx<T>>>,
    pub labels: Vec<u64>,
    pub bits: usize,
    by_label: Vec<usize>,
}

impl<T: Real> RisCodebook<T> {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        let l = config.l;
        match config.scheme {
            Scheme::Srpm => {
                let k = config.k as i64;
                let dt = T::lit(config.delta_theta());
                let offsets: Vec<i64> = (0..2 * k + 1)
                    .map(|j| {
                        if j == 0 {
                            0
                        } else if j % 2 == 1 {
                            (j + 1) / 2
                        } else {
                            -j / 2
                        }
                    })
                    .collect();
                let b = floor_log2((2 * k + 1) as u128);
                let addressable = 1i64 << b;
                let labels = offsets
                    .iter()
                    .enumerate()
                    .map(|(j, &o)| {
                        if (j as i64) < addressable {
                            gray(j as u64)
                        } else {
                            gray((o + k).rem_euclid(addressable) as u64)
                        }
                    })
                    .collect();
                let letters = offsets.iter().map(|&o| cis(dt * T::lit(o as f64))).collect();
                Self::product(l, letters, offsets, labels, b)
            }
            Scheme::Pbf => Self::product(l, vec![cx(T::one(), T::zero())], vec![0], vec![0], 0),
            Scheme::Pbit => Self::product(l, vec![czero(), cx(T::one(), T::zero())], vec![0, 0], vec![0, 1], 1),
            Scheme::Rpm(p) => Self::pattern(l, p, czero()),
            Scheme::Qrm(p) => Self::pattern(l, p, cx(T::zero(), T::one())),
        }
    }

    fn product(
        l: usize,
        letters: Vec<Cx<T>>,
        letter_offsets: Vec<i64>,
        letter_labels: Vec<u64>,
        bits_per_letter: usize,
    ) -> Result<Self> {
        let q = letters.len();
        let size = (q as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
        if size > MAX_CODEWORDS as u128 {
            return Err(Error::Complexity { size, cap: MAX_CODEWORDS as u128 });
        }
        let size = size as usize;
        let mut codewords = Vec::with_capacity(size);
        let mut labels = Vec::with_capacity(size);
        for idx in 0..size {
            let digits = mixed_radix(idx, q, l);
            codewords.push(digits.iter().map(|&d| letters[d]).collect());
            labels.push(digits.iter().fold(0u64, |acc, &d| (acc << bits_per_letter) | letter_labels[d]));
        }
        let bits = l * bits_per_letter;
        let by_label = (0..1usize << bits)
            .map(|label| {
                let mut idx = 0;
                for pos in 0..l {
                    let shift = (l - 1 - pos) * bits_per_letter;
                    let chunk = (label >> shift) & ((1 << bits_per_letter) - 1);
                    idx = idx * q + gray_inverse(chunk as u64) as usize;
                }
                idx
            })
            .collect();
        Ok(Self {
            kind: CodebookKind::Product,
            l,
            letters,
            letter_offsets,
            letter_labels,
            bits_per_letter,
            codewords,
            labels,
            bits,
            by_label,
        })
    }

    /// Lexicographic `p`-subsets of the sub-surfaces; chosen ones take `marked`,
    /// the rest `1`.
    fn pattern(l: usize, p: usize, marked: Cx<T>) -> Result<Self> {
        let size = binomial(l, p);
        if size > MAX_CODEWORDS as u128 {
            return Err(Error::Complexity { size, cap: MAX_CODEWORDS as u128 });
        }
        let bits = floor_log2(size);
        let mask = (1u64 << bits) - 1;
        let mut codewords = Vec::with_capacity(size as usize);
        let mut labels = Vec::with_capacity(size as usize);
        let mut combo: Vec<usize> = (0..p).collect();
        let mut idx = 0u64;
        loop {
            let mut cw = vec![cx(T::one(), T::zero()); l];
            for &c in &combo {
                cw[c] = marked;
            }
            codewords.push(cw);
            labels.push(gray(idx & mask));
            idx += 1;
            // Advance to the next combination in lexicographic order.
            let mut i = p;
            while i > 0 && combo[i - 1] == l - p + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..p {
                combo[j] = combo[j - 1] + 1;
            }
        }
        let by_label = (0..1u64 << bits).map(|lab| gray_inverse(lab) as usize).collect();
        Ok(Self {
            kind: CodebookKind::Pattern,
            l,
            letters: Vec::new(),
            letter_offsets: Vec::new(),
            letter_labels: Vec::new(),
            bits_per_letter: 0,
            codewords,
            labels,
            bits,
            by_label,
        })
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// Codewords reachable from bit labels.
    pub fn addressable_count(&self) -> usize {
        self.by_label.len()
    }

    /// Codeword carrying `label`.
    pub fn index_of_label(&self, label: u64) -> usize {
        self.by_label[label as usize]
    }

    /// Per-sub-surface letter indices of a product codeword, sub-surface 1 first.
    pub fn letter_indices(&self, idx: usize) -> Vec<usize> {
        debug_assert_eq!(self.kind, CodebookKind::Product);
        mixed_radix(idx, self.letters.len(), self.l)
    }

    /// Inverse of [`letter_indices`](Self::letter_indices).
    pub fn codeword_of_letters(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.letters.len() + d)
    }

    /// Integer offsets `k_1..k_L` of an SRPM codeword.
    pub fn offsets(&self, idx: usize) -> Option<Vec<i64>> {
        if self.kind != CodebookKind::Product || self.letter_offsets.is_empty() {
            return None;
        }
        Some(self.letter_indices(idx).into_iter().map(|d| self.letter_offsets[d]).collect())
    }

    /// Nearest codeword to per-sub-surface soft estimates.
    pub fn nearest(&self, soft: &[Cx<T>]) -> usize {
        match self.kind {
            CodebookKind::Product => {
                let digits: Vec<usize> = soft
                    .iter()
                    .map(|z| {
                        let mut best = 0;
                        let mut best_d = (*z - self.letters[0]).norm_sqr();
                        for (j, c) in self.letters.iter().enumerate().skip(1) {
                            let d = (*z - c).norm_sqr();
                            if d < best_d {
                                best = j;
                                best_d = d;
                            }
                        }
                        best
                    })
                    .collect();
                self.codeword_of_letters(&digits)
            }
            CodebookKind::Pattern => {
                let mut best = 0;
                let mut best_d = T::max_value().unwrap();
                for (i, cw) in self.codewords.iter().enumerate() {
                    let d = cw.iter().zip(soft).fold(T::zero(), |acc, (c, z)| acc + (*z - c).norm_sqr());
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                best
            }
        }
    }
}

fn mixed_radix(mut idx: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for d in digits.iter_mut().rev() {
        *d = idx % radix;
        idx /= radix;
    }
    digits
}
