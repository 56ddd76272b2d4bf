//! Channel generation.
//!
//! The BS–user (`H_d`) and RIS–user (`H_r`) links are Kronecker-correlated
//! Rayleigh fading redrawn for every realization. The BS–RIS link `G` is a
//! static multipath line-of-sight channel drawn once per experiment together
//! with the RIS base phases; both live in [`StaticChannels`] and are shared by
//! every [`ChannelSet`] through an `Arc`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_hermitian, exponential_correlation, hermitian_sqrt};
use crate::modulation::SystemConfig;
use crate::scalar::{cis, cx, czero, CMatrix, CVector, Cx, Real};

/// Spatial correlation model for one side of a link.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    #[default]
    Identity,
    /// Exponential model, entry `(i, j)` equals `rho^|i-j|`.
    Exponential(f64),
}

impl CorrelationModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CorrelationModel::Identity => Ok(()),
            CorrelationModel::Exponential(rho) if (0.0..1.0).contains(&rho) => Ok(()),
            CorrelationModel::Exponential(rho) => {
                Err(Error::Config(format!("exponential correlation coefficient {rho} outside [0, 1)")))
            }
        }
    }

    pub fn matrix<T: Real>(&self, n: usize) -> CMatrix<T> {
        match *self {
            CorrelationModel::Identity => CMatrix::identity(n, n),
            CorrelationModel::Exponential(rho) => exponential_correlation(n, T::lit(rho)),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CorrelationModel::Identity | CorrelationModel::Exponential(0.0))
    }
}

/// Correlation at the BS (`R_b`), RIS (`R_r`) and user (`R_u`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationSpec {
    pub bs: CorrelationModel,
    pub ris: CorrelationModel,
    pub user: CorrelationModel,
}

impl CorrelationSpec {
    pub fn uniform(model: CorrelationModel) -> Self {
        Self { bs: model, ris: model, user: model }
    }

    pub fn is_identity(&self) -> bool {
        self.bs.is_identity() && self.ris.is_identity() && self.user.is_identity()
    }
}

/// Multipath line-of-sight description of the BS–RIS channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LosSpec {
    /// Number of paths.
    pub n_p: usize,
    /// Optional fixed `(aoa_at_ris, aod_at_bs)` pairs in radians. Drawn
    /// uniformly in `[-π/2, π/2)` when absent.
    pub angles: Option<Vec<(f64, f64)>>,
    /// Optional fixed complex path gains `(re, im)`. Drawn from
    /// `CN(0, 10^{-κ/10})` when absent.
    pub gains: Option<Vec<(f64, f64)>>,
    /// Path-loss coefficient in dB.
    pub kappa: f64,
    /// Antenna spacing over wavelength.
    pub d_over_lambda: f64,
}

impl Default for LosSpec {
    fn default() -> Self {
        Self { n_p: 3, angles: None, gains: None, kappa: 0.0, d_over_lambda: 0.5 }
    }
}

impl LosSpec {
    /// Single path with the given angles and unit gain.
    pub fn keyhole(aoa: f64, aod: f64) -> Self {
        Self { n_p: 1, angles: Some(vec![(aoa, aod)]), gains: Some(vec![(1.0, 0.0)]), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_p == 0 {
            return Err(Error::Config("los.n_p must be at least 1".into()));
        }
        if let Some(a) = &self.angles {
            if a.len() != self.n_p {
                return Err(Error::Config(format!("los.angles has {} entries, expected n_p = {}", a.len(), self.n_p)));
            }
        }
        if let Some(g) = &self.gains {
            if g.len() != self.n_p {
                return Err(Error::Config(format!("los.gains has {} entries, expected n_p = {}", g.len(), self.n_p)));
            }
        }
        if !(self.d_over_lambda > 0.0) {
            return Err(Error::Config("los.d_over_lambda must be positive".into()));
        }
        Ok(())
    }
}

/// One resolved propagation path of `G`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LosPath<T> {
    pub aoa: T,
    pub aod: T,
    pub gain: Cx<T>,
}

/// How the RIS base phases `θ^b` are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasePhasePolicy {
    Zero,
    #[default]
    UniformRandom,
    /// Co-phase every cascaded path with the direct path at receive antenna 0,
    /// recomputed per fading realization.
    PbfAligned,
}

/// Everything needed to generate channel realizations for one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    pub correlation: CorrelationSpec,
    pub los: LosSpec,
    pub base_phases: BasePhasePolicy,
    pub beta_d: f64,
    pub beta_r: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            correlation: CorrelationSpec::default(),
            los: LosSpec::default(),
            base_phases: BasePhasePolicy::default(),
            beta_d: 1.0,
            beta_r: 1.0,
        }
    }
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        self.correlation.bs.validate()?;
        self.correlation.ris.validate()?;
        self.correlation.user.validate()?;
        self.los.validate()?;
        if !(self.beta_d >= 0.0 && self.beta_r >= 0.0) {
            return Err(Error::Config("path losses beta_d, beta_r must be nonnegative".into()));
        }
        Ok(())
    }
}

pub(crate) fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Cx<T> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    cx(T::lit(re * s), T::lit(im * s))
}

/// ULA steering vector with unit-modulus entries
/// `exp(j·2π·(d/λ)·m·sin(angle))`, `m = 0..size`.
pub fn steering_vector<T: Real>(size: usize, angle: T, d_over_lambda: T) -> Result<CVector<T>> {
    if size == 0 {
        return Err(Error::InvalidDimension("steering vector size must be positive".into()));
    }
    let step = T::two_pi() * d_over_lambda * angle.sin();
    Ok(CVector::from_fn(size, |m, _| cis(step * T::lit(m as f64))))
}

/// Resolves path angles and gains, drawing whatever the plan leaves unset.
/// Per path the draw order is `(aoa, aod, gain)`.
pub fn resolve_paths<T: Real, R: Rng + ?Sized>(spec: &LosSpec, rng: &mut R) -> Result<Vec<LosPath<T>>> {
    spec.validate()?;
    let gain_std = 10f64.powf(-0.1 * spec.kappa).sqrt();
    let mut paths = Vec::with_capacity(spec.n_p);
    for i in 0..spec.n_p {
        let (aoa, aod) = match &spec.angles {
            Some(a) => a[i],
            None => (rng.random_range(-PI / 2.0..PI / 2.0), rng.random_range(-PI / 2.0..PI / 2.0)),
        };
        let gain = match &spec.gains {
            Some(g) => cx(T::lit(g[i].0), T::lit(g[i].1)),
            None => complex_normal::<T, _>(rng) * T::lit(gain_std),
        };
        paths.push(LosPath { aoa: T::lit(aoa), aod: T::lit(aod), gain });
    }
    Ok(paths)
}

/// Assembles `G = sqrt(N·N_t/N_p) Σ_i β_i â_N(φ_r,i) â_{N_t}(φ_t,i)^H` from
/// resolved paths, with `â` the unit-norm steering vectors.
pub fn los_channel_from_paths<T: Real>(
    paths: &[LosPath<T>],
    n: usize,
    n_t: usize,
    d_over_lambda: T,
) -> Result<CMatrix<T>> {
    if paths.is_empty() {
        return Err(Error::InvalidDimension("at least one path required".into()));
    }
    let mut g = CMatrix::zeros(n, n_t);
    let ra = T::lit(n as f64).sqrt();
    let ta = T::lit(n_t as f64).sqrt();
    for p in paths {
        let a = steering_vector(n, p.aoa, d_over_lambda)?.map(|z| z / ra);
        let b = steering_vector(n_t, p.aod, d_over_lambda)?.map(|z| z / ta);
        g += (a * b.adjoint()).map(|z| z * p.gain);
    }
    let scale = (T::lit((n * n_t) as f64) / T::lit(paths.len() as f64)).sqrt();
    Ok(g.map(|z| z * scale))
}

/// Draws the static BS–RIS channel.
pub fn build_los_channel<T: Real, R: Rng + ?Sized>(
    spec: &LosSpec,
    n: usize,
    n_t: usize,
    rng: &mut R,
) -> Result<CMatrix<T>> {
    if n == 0 || n_t == 0 {
        return Err(Error::InvalidDimension("G must have positive dimensions".into()));
    }
    let paths = resolve_paths(spec, rng)?;
    los_channel_from_paths(&paths, n, n_t, T::lit(spec.d_over_lambda))
}

/// Kronecker-correlated Rayleigh sampler with precomputed matrix square roots.
#[derive(Clone, Debug)]
pub struct KroneckerSampler<T: Real> {
    rows: usize,
    cols: usize,
    /// `None` stands for the identity.
    row_sqrt: Option<CMatrix<T>>,
    col_sqrt: Option<CMatrix<T>>,
    amplitude: T,
}

impl<T: Real> KroneckerSampler<T> {
    pub fn new(r_row: &CMatrix<T>, r_col: &CMatrix<T>, beta: T) -> Result<Self> {
        let tol = T::lit(1e-10);
        ensure_hermitian(r_row, tol, "row correlation")?;
        ensure_hermitian(r_col, tol, "column correlation")?;
        if beta < T::zero() {
            return Err(Error::InvalidDimension("path loss must be nonnegative".into()));
        }
        let root = |r: &CMatrix<T>| {
            let id = CMatrix::<T>::identity(r.nrows(), r.ncols());
            if (r - &id).norm() == T::zero() {
                None
            } else {
                Some(hermitian_sqrt(r))
            }
        };
        Ok(Self {
            rows: r_row.nrows(),
            cols: r_col.nrows(),
            row_sqrt: root(r_row),
            col_sqrt: root(r_col),
            amplitude: beta.sqrt(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix<T> {
        // Column-major fill keeps the draw order fixed for a given shape.
        let mut h = DMatrix::from_fn(self.rows, self.cols, |_, _| czero());
        for j in 0..self.cols {
            for i in 0..self.rows {
                h[(i, j)] = complex_normal::<T, _>(rng) * self.amplitude;
            }
        }
        if let Some(r) = &self.row_sqrt {
            h = r * h;
        }
        if let Some(c) = &self.col_sqrt {
            h *= c;
        }
        h
    }
}

/// Draws `sqrt(β)·R_row^{1/2}·H_ω·R_col^{1/2}` with i.i.d. `CN(0,1)` `H_ω`.
pub fn sample_kronecker_rayleigh<T: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    r_row: &CMatrix<T>,
    r_col: &CMatrix<T>,
    beta: T,
    rng: &mut R,
) -> Result<CMatrix<T>> {
    if r_row.nrows() != rows || r_col.nrows() != cols {
        return Err(Error::InvalidDimension(format!(
            "correlation sizes {}x{} / {}x{} do not match {rows}x{cols}",
            r_row.nrows(),
            r_row.ncols(),
            r_col.nrows(),
            r_col.ncols()
        )));
    }
    Ok(KroneckerSampler::new(r_row, r_col, beta)?.sample(rng))
}

/// Per-experiment channel state: held fixed across fading realizations.
#[derive(Clone, Debug)]
pub struct StaticChannels<T: Real> {
    pub g: CMatrix<T>,
    pub paths: Vec<LosPath<T>>,
    /// Base phases `θ_n^b` in `[0, 2π)`.
    pub base_phases: Vec<T>,
    pub policy: BasePhasePolicy,
    pub r_b: CMatrix<T>,
    pub r_r: CMatrix<T>,
    pub r_u: CMatrix<T>,
    pub beta_d: T,
    pub beta_r: T,
    pub correlation: CorrelationSpec,
    pub d_over_lambda: T,
    direct: KroneckerSampler<T>,
    cascade: KroneckerSampler<T>,
}

impl<T: Real> StaticChannels<T> {
    /// Draws `G` (paths first) and then the base phases.
    pub fn draw<R: Rng + ?Sized>(config: &SystemConfig, spec: &ChannelSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let paths = resolve_paths(&spec.los, rng)?;
        let g = los_channel_from_paths(&paths, config.n, config.n_t, T::lit(spec.los.d_over_lambda))?;
        let base_phases = match spec.base_phases {
            BasePhasePolicy::Zero | BasePhasePolicy::PbfAligned => vec![T::zero(); config.n],
            BasePhasePolicy::UniformRandom => (0..config.n).map(|_| T::lit(rng.random_range(0.0..2.0 * PI))).collect(),
        };
        Self::from_parts(config, spec, g, paths, base_phases)
    }

    /// Builds the static state around a given `G` and base phases.
    pub fn from_parts(
        config: &SystemConfig,
        spec: &ChannelSpec,
        g: CMatrix<T>,
        paths: Vec<LosPath<T>>,
        base_phases: Vec<T>,
    ) -> Result<Self> {
        if g.nrows() != config.n || g.ncols() != config.n_t {
            return Err(Error::InvalidDimension(format!(
                "G is {}x{}, expected {}x{}",
                g.nrows(),
                g.ncols(),
                config.n,
                config.n_t
            )));
        }
        if base_phases.len() != config.n {
            return Err(Error::InvalidDimension("one base phase per RIS element required".into()));
        }
        let r_b = spec.correlation.bs.matrix::<T>(config.n_t);
        let r_r = spec.correlation.ris.matrix::<T>(config.n);
        let r_u = spec.correlation.user.matrix::<T>(config.n_r);
        let beta_d = T::lit(spec.beta_d);
        let beta_r = T::lit(spec.beta_r);
        let direct = KroneckerSampler::new(&r_u, &r_b, beta_d)?;
        let cascade = KroneckerSampler::new(&r_u, &r_r, beta_r)?;
        Ok(Self {
            g,
            paths,
            base_phases,
            policy: spec.base_phases,
            r_b,
            r_r,
            r_u,
            beta_d,
            beta_r,
            correlation: spec.correlation,
            d_over_lambda: T::lit(spec.los.d_over_lambda),
            direct,
            cascade,
        })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.g.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.r_u.nrows()
    }
}

/// One fading realization together with the shared static part.
#[derive(Clone, Debug)]
pub struct ChannelSet<T: Real> {
    pub h_d: CMatrix<T>,
    pub h_r: CMatrix<T>,
    statics: Arc<StaticChannels<T>>,
    aligned_phases: Option<Vec<T>>,
}

impl<T: Real> ChannelSet<T> {
    /// Draws fresh `H_d` then `H_r`.
    pub fn draw<R: Rng + ?Sized>(statics: &Arc<StaticChannels<T>>, rng: &mut R) -> Self {
        let h_d = statics.direct.sample(rng);
        let h_r = statics.cascade.sample(rng);
        Self { h_d, h_r, statics: Arc::clone(statics), aligned_phases: None }
    }

    /// Wraps explicit fading matrices.
    pub fn from_fading(statics: &Arc<StaticChannels<T>>, h_d: CMatrix<T>, h_r: CMatrix<T>) -> Result<Self> {
        if h_d.shape() != (statics.n_r(), statics.n_t()) || h_r.shape() != (statics.n_r(), statics.n()) {
            return Err(Error::InvalidDimension("fading matrices do not match static channel".into()));
        }
        Ok(Self { h_d, h_r, statics: Arc::clone(statics), aligned_phases: None })
    }

    pub fn g(&self) -> &CMatrix<T> {
        &self.statics.g
    }

    pub fn statics(&self) -> &Arc<StaticChannels<T>> {
        &self.statics
    }

    pub fn base_phases(&self) -> &[T] {
        self.aligned_phases.as_deref().unwrap_or(&self.statics.base_phases)
    }

    pub fn beta_d(&self) -> T {
        self.statics.beta_d
    }

    pub fn beta_r(&self) -> T {
        self.statics.beta_r
    }

    /// Overrides the base phases for this realization so that every cascaded
    /// term at receive antenna 0 adds in phase with the direct term, for the
    /// first precoder column.
    pub fn align_base_phases(&mut self, w: &CMatrix<T>) {
        let col = w.column(0);
        let gw = &self.statics.g * col;
        let direct = (self.h_d.row(0) * col)[(0, 0)];
        let target = direct.im.atan2(direct.re);
        let two_pi = T::two_pi();
        let phases = (0..self.h_r.ncols())
            .map(|n| {
                let c = self.h_r[(0, n)] * gw[n];
                let mut ph = target - c.im.atan2(c.re);
                while ph < T::zero() {
                    ph += two_pi;
                }
                while ph >= two_pi {
                    ph -= two_pi;
                }
                ph
            })
            .collect();
        self.aligned_phases = Some(phases);
    }
}

/// Draws a complete channel set: static part first, then one fading draw.
pub fn sample_channel_set<T: Real, R: Rng + ?Sized>(
    config: &SystemConfig,
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<ChannelSet<T>> {
    let statics = Arc::new(StaticChannels::draw(config, spec, rng)?);
    Ok(ChannelSet::draw(&statics, rng))
}

const MATRIX_MAGIC: [u8; 8] = *b"SRPMCMAT";

/// Writes a complex matrix as a 16-byte header (8-byte magic, `u32` rows,
/// `u32` cols, little endian) followed by row-major interleaved `f64`
/// real/imaginary parts.
pub fn write_matrix<T: Real, W: Write>(out: &mut W, m: &CMatrix<T>) -> std::io::Result<()> {
    out.write_all(&MATRIX_MAGIC)?;
    out.write_all(&(m.nrows() as u32).to_le_bytes())?;
    out.write_all(&(m.ncols() as u32).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.write_all(&m[(i, j)].re.as_f64().to_le_bytes())?;
            out.write_all(&m[(i, j)].im.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix<T: Real, R: Read>(input: &mut R) -> Result<CMatrix<T>> {
    let io = |e: std::io::Error| Error::Parse(format!("matrix dump: {e}"));
    let mut header = [0u8; 16];
    input.read_exact(&mut header).map_err(io)?;
    if header[..8] != MATRIX_MAGIC {
        return Err(Error::Parse("matrix dump: bad magic".into()));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut m = CMatrix::zeros(rows, cols);
    let mut buf = [0u8; 16];
    for i in 0..rows {
        for j in 0..cols {
            input.read_exact(&mut buf).map_err(io)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            m[(i, j)] = cx(T::lit(re), T::lit(im));
        }
    }
    Ok(m)
}

/// Dumps `H_d`, `H_r`, `G` and the base phases (as an `N×1` matrix of real
/// angles) in that order.
pub fn write_channel_set<T: Real, W: Write>(out: &mut W, set: &ChannelSet<T>) -> std::io::Result<()> {
    write_matrix(out, &set.h_d)?;
    write_matrix(out, &set.h_r)?;
    write_matrix(out, set.g())?;
    let phases = CMatrix::from_fn(set.base_phases().len(), 1, |i, _| cx(set.base_phases()[i], T::zero()));
    write_matrix(out, &phases)
}

/// Matrices of a channel dump, in file order.
#[derive(Clone, Debug)]
pub struct ChannelDump<T: Real> {
    pub h_d: CMatrix<T>,
    pub h_r: CMatrix<T>,
    pub g: CMatrix<T>,
    pub base_phases: Vec<T>,
}

pub fn read_channel_set<T: Real, R: Read>(input: &mut R) -> Result<ChannelDump<T>> {
    let h_d = read_matrix(input)?;
    let h_r = read_matrix(input)?;
    let g = read_matrix(input)?;
    let phases: CMatrix<T> = read_matrix(input)?;
    Ok(ChannelDump { h_d, h_r, g, base_phases: phases.iter().map(|z| z.re).collect() })
}
