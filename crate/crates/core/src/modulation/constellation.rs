use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cis, cx, Cx, Real};

/// Binary-reflected Gray code.
pub fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

pub fn gray_inverse(mut g: u64) -> u64 {
    let mut i = g;
    while g > 1 {
        g >>= 1;
        i ^= g;
    }
    i
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstellationKind {
    Psk,
    /// Rectangular QAM.
    #[default]
    Qam,
}

/// Unit mean power constellation with Gray labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation<T: Real> {
    pub kind: ConstellationKind,
    pub points: Vec<Cx<T>>,
    /// `labels[i]` is the bit label of `points[i]`.
    pub labels: Vec<u64>,
    /// `by_label[b]` is the point index carrying label `b`.
    by_label: Vec<usize>,
    pub bits: usize,
}

impl<T: Real> Constellation<T> {
    pub fn new(kind: ConstellationKind, m: usize) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::Config(format!("constellation order {m} is not a power of two >= 2")));
        }
        let bits = m.trailing_zeros() as usize;
        let (points, labels): (Vec<Cx<T>>, Vec<u64>) = if m == 2 {
            (vec![cx(T::one(), T::zero()), cx(-T::one(), T::zero())], vec![0, 1])
        } else {
            match kind {
                ConstellationKind::Psk => {
                    let step = T::two_pi() / T::lit(m as f64);
                    let offset = T::pi() / T::lit(m as f64);
                    (0..m).map(|i| (cis(offset + step * T::lit(i as f64)), gray(i as u64))).unzip()
                }
                ConstellationKind::Qam => qam_grid(bits),
            }
        };
        let mut by_label = vec![usize::MAX; m];
        for (i, &b) in labels.iter().enumerate() {
            by_label[b as usize] = i;
        }
        Ok(Self { kind, points, labels, by_label, bits })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of_label(&self, label: u64) -> usize {
        self.by_label[label as usize]
    }

    /// Nearest point in Euclidean distance; ties go to the smaller label.
    pub fn nearest(&self, z: Cx<T>) -> usize {
        let mut best = 0;
        let mut best_d = (z - self.points[0]).norm_sqr();
        for (i, p) in self.points.iter().enumerate().skip(1) {
            let d = (z - p).norm_sqr();
            if d < best_d || (d == best_d && self.labels[i] < self.labels[best]) {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn mean_power(&self) -> T {
        let total = self.points.iter().fold(T::zero(), |acc, p| acc + p.norm_sqr());
        total / T::lit(self.points.len() as f64)
    }
}

/// `2^⌈b/2⌉ × 2^⌊b/2⌋` grid on odd integers, Gray-coded per axis with the
/// in-phase bits most significant.
fn qam_grid<T: Real>(bits: usize) -> (Vec<Cx<T>>, Vec<u64>) {
    let bi = bits.div_ceil(2);
    let bq = bits / 2;
    let (ni, nq) = (1usize << bi, 1usize << bq);
    let level = |i: usize, n: usize| (2 * i) as f64 - (n - 1) as f64;
    let mut raw = Vec::with_capacity(ni * nq);
    let mut labels = Vec::with_capacity(ni * nq);
    for i in 0..ni {
        for q in 0..nq {
            raw.push((level(i, ni), level(q, nq)));
            labels.push((gray(i as u64) << bq) | gray(q as u64));
        }
    }
    let power = raw.iter().map(|(a, b)| a * a + b * b).sum::<f64>() / raw.len() as f64;
    let scale = power.sqrt().recip();
    let points = raw.into_iter().map(|(a, b)| cx(T::lit(a * scale), T::lit(b * scale))).collect();
    (points, labels)
}
