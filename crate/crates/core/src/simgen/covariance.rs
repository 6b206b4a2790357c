use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SpikeError};

/// Largest Ω block that is materialized densely (for its Cholesky factor).
pub const MAX_DENSE_BLOCK: usize = 4096;

/// Distribution of the sphered coordinates fed through the covariance factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Gaussian,
    /// `(g² − 1)/√2` with `g` standard normal.
    ChiSquare,
}

impl Noise {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        match self {
            Noise::Gaussian => g,
            Noise::ChiSquare => (g * g - 1.0) / std::f64::consts::SQRT_2,
        }
    }
}

/// `c · B R B` with `R_ij = ρ^{|i−j|^{1/3}}` and `B_rr = (0.5 + r/(t+1))^{1/2}`.
#[derive(Debug, Clone)]
pub struct OmegaBlock {
    size: usize,
    rho: f64,
    scale: f64,
    b: Vec<f64>,
    decay: Vec<f64>,
    dense: Arc<OnceLock<DMatrix<f64>>>,
    chol: Arc<OnceLock<std::result::Result<DMatrix<f64>, String>>>,
}

impl OmegaBlock {
    fn new(size: usize, rho: f64, scale: f64) -> Self {
        let b = (1..=size)
            .map(|r| (0.5 + r as f64 / (size as f64 + 1.0)).sqrt())
            .collect();
        let decay = (0..size)
            .map(|d| if d == 0 { 1.0 } else { rho.powf((d as f64).cbrt()) })
            .collect();
        Self {
            size,
            rho,
            scale,
            b,
            decay,
            dense: Arc::new(OnceLock::new()),
            chol: Arc::new(OnceLock::new()),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.scale * self.b[i] * self.b[j] * self.decay[i.abs_diff(j)]
    }

    fn dense(&self) -> Result<&DMatrix<f64>> {
        if self.size > MAX_DENSE_BLOCK {
            return Err(SpikeError::Configuration(format!(
                "Ω block of size {} exceeds the dense limit {MAX_DENSE_BLOCK}",
                self.size
            )));
        }
        Ok(self
            .dense
            .get_or_init(|| DMatrix::from_fn(self.size, self.size, |i, j| self.entry(i, j))))
    }

    fn cholesky(&self) -> Result<&DMatrix<f64>> {
        let dense = self.dense()?;
        self.chol
            .get_or_init(|| {
                dense
                    .clone()
                    .cholesky()
                    .map(|c| c.unpack())
                    .ok_or_else(|| "Ω block is not positive definite".to_string())
            })
            .as_ref()
            .map_err(|e| SpikeError::Numeric(e.clone()))
    }

    /// Gershgorin bound on the largest eigenvalue.
    fn eig_bound(&self) -> f64 {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.entry(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// One diagonal block of a structured covariance.
#[derive(Debug, Clone)]
pub enum Block {
    /// `Γ_t = (I_t + 1 1ᵀ)/2`.
    Intraclass {
        size: usize,
    },
    Omega(OmegaBlock),
    Diagonal(Vec<f64>),
}

impl Block {
    pub fn intraclass(t: usize) -> Self {
        Block::Intraclass { size: t }
    }

    pub fn omega(t: usize, rho: f64, scale: f64) -> Self {
        Block::Omega(OmegaBlock::new(t, rho, scale))
    }

    pub fn size(&self) -> usize {
        match self {
            Block::Intraclass { size } => *size,
            Block::Omega(o) => o.size,
            Block::Diagonal(v) => v.len(),
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Block::Intraclass { .. } => {
                if i == j {
                    1.0
                } else {
                    0.5
                }
            }
            Block::Omega(o) => o.entry(i, j),
            Block::Diagonal(v) => {
                if i == j {
                    v[i]
                } else {
                    0.0
                }
            }
        }
    }

    fn trace(&self) -> f64 {
        match self {
            Block::Intraclass { size } => *size as f64,
            Block::Omega(o) => (0..o.size).map(|i| o.entry(i, i)).sum(),
            Block::Diagonal(v) => v.iter().sum(),
        }
    }

    fn matvec_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Block::Intraclass { .. } => {
                let s: f64 = v.iter().sum();
                for (o, x) in out.iter_mut().zip(v) {
                    *o = 0.5 * (x + s);
                }
            }
            Block::Omega(o) => {
                let d = o.dense()?;
                for (i, oi) in out.iter_mut().enumerate() {
                    *oi = d.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
                }
            }
            Block::Diagonal(d) => {
                for ((o, x), w) in out.iter_mut().zip(v).zip(d) {
                    *o = w * x;
                }
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        match self {
            Block::Intraclass { size } if *size == 0 => {
                Err(SpikeError::Configuration("empty intraclass block".into()))
            }
            Block::Omega(o)
                if o.size == 0
                    || o.rho.is_nan()
                    || o.rho.abs() >= 1.0
                    || o.scale.is_nan()
                    || o.scale <= 0.0 =>
            {
                Err(SpikeError::Configuration(format!(
                    "Ω block needs size ≥ 1, |ρ| < 1 and positive scale (size {}, ρ {}, scale {})",
                    o.size, o.rho, o.scale
                )))
            }
            Block::Diagonal(v) if v.is_empty() || v.iter().any(|x| x.is_nan() || *x < 0.0) => Err(
                SpikeError::Configuration("diagonal block needs nonnegative entries".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Eigenpairs of one block, top first, with a bound on anything not listed.
struct BlockEigen {
    pairs: Vec<(f64, DVector<f64>)>,
    rest_bound: Option<f64>,
}

fn dense_block_eigen(dense: DMatrix<f64>) -> Result<Vec<(f64, DVector<f64>)>> {
    let eig = SymmetricEigen::try_new(dense, f64::EPSILON, 10_000)
        .ok_or_else(|| SpikeError::Numeric("block eigendecomposition did not converge".into()))?;
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&l, v)| (l, v.into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(pairs)
}

impl Block {
    fn analytic_eigen(&self, k: usize) -> BlockEigen {
        match self {
            Block::Intraclass { size } => {
                let t = *size;
                let v = DVector::from_element(t, 1.0 / (t as f64).sqrt());
                BlockEigen {
                    pairs: vec![((t as f64 + 1.0) / 2.0, v)],
                    rest_bound: (t > 1).then_some(0.5),
                }
            }
            Block::Omega(o) => BlockEigen {
                pairs: Vec::new(),
                rest_bound: Some(o.eig_bound()),
            },
            Block::Diagonal(d) => {
                let mut idx: Vec<usize> = (0..d.len()).collect();
                idx.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
                let rest_bound = idx.get(k).map(|&i| d[i]);
                BlockEigen {
                    pairs: idx
                        .into_iter()
                        .take(k)
                        .map(|i| {
                            let mut e = DVector::zeros(d.len());
                            e[i] = 1.0;
                            (d[i], e)
                        })
                        .collect(),
                    rest_bound,
                }
            }
        }
    }

    fn full_eigen(&self) -> Result<BlockEigen> {
        let dense = match self {
            Block::Omega(o) => o.dense()?.clone(),
            _ => {
                let n = self.size();
                if n > MAX_DENSE_BLOCK {
                    return Err(SpikeError::Configuration(format!(
                        "block of size {n} exceeds the dense limit {MAX_DENSE_BLOCK}"
                    )));
                }
                DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
            }
        };
        Ok(BlockEigen {
            pairs: dense_block_eigen(dense)?,
            rest_bound: None,
        })
    }
}

/// Block-diagonal covariance plus an optional symmetric low-rank term `U C Uᵀ`.
///
/// Blocks are laid out contiguously along the diagonal and cover all `p`
/// coordinates. Traces, traces of products, quadratic forms and matrix-vector
/// products never form the `p × p` matrix.
#[derive(Debug, Clone)]
pub struct StructuredCov {
    p: usize,
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    lr_u: DMatrix<f64>,
    lr_c: DMatrix<f64>,
}

impl StructuredCov {
    pub fn block_diagonal(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(SpikeError::Configuration(
                "covariance needs at least one block".into(),
            ));
        }
        for b in &blocks {
            b.validate()?;
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut p = 0;
        for b in &blocks {
            offsets.push(p);
            p += b.size();
        }
        Ok(Self {
            p,
            blocks,
            offsets,
            lr_u: DMatrix::zeros(p, 0),
            lr_c: DMatrix::zeros(0, 0),
        })
    }

    pub fn intraclass(t: usize) -> Result<Self> {
        Self::block_diagonal(vec![Block::intraclass(t)])
    }

    pub fn omega(t: usize, rho: f64) -> Result<Self> {
        Self::block_diagonal(vec![Block::omega(t, rho, 1.0)])
    }

    pub fn diagonal(values: Vec<f64>) -> Result<Self> {
        Self::block_diagonal(vec![Block::Diagonal(values)])
    }

    /// Adds `U C Uᵀ` (`C` symmetric) to the low-rank part.
    pub fn with_low_rank(mut self, u: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        if u.nrows() != self.p || c.nrows() != u.ncols() || c.ncols() != u.ncols() {
            return Err(SpikeError::DimensionMismatch {
                expected: self.p,
                found: u.nrows(),
            });
        }
        let m0 = self.lr_u.ncols();
        let m = m0 + u.ncols();
        let mut new_u = DMatrix::zeros(self.p, m);
        new_u.columns_mut(0, m0).copy_from(&self.lr_u);
        new_u.columns_mut(m0, u.ncols()).copy_from(&u);
        let mut new_c = DMatrix::zeros(m, m);
        new_c.view_mut((0, 0), (m0, m0)).copy_from(&self.lr_c);
        new_c.view_mut((m0, m0), (u.ncols(), u.ncols())).copy_from(&c);
        self.lr_u = new_u;
        self.lr_c = new_c;
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn has_low_rank(&self) -> bool {
        self.lr_u.ncols() > 0
    }

    fn locate(&self, i: usize) -> (usize, usize) {
        let b = self.offsets.partition_point(|&o| o <= i) - 1;
        (b, i - self.offsets[b])
    }

    fn block_entry(&self, i: usize, j: usize) -> f64 {
        let (bi, li) = self.locate(i);
        let (bj, lj) = self.locate(j);
        if bi == bj {
            self.blocks[bi].entry(li, lj)
        } else {
            0.0
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let mut v = self.block_entry(i, j);
        if self.has_low_rank() {
            let ui = self.lr_u.row(i);
            let uj = self.lr_u.row(j);
            v += (ui * &self.lr_c).dot(&uj);
        }
        v
    }

    /// Dense copy; intended for small `p` (tests, diagnostics).
    pub fn dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| self.entry(i, j))
    }

    pub fn matvec(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.p {
            return Err(SpikeError::DimensionMismatch {
                expected: self.p,
                found: v.len(),
            });
        }
        Ok(self.block_matvec(v)? + self.low_rank_matvec(v))
    }

    fn block_matvec(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.p);
        let src = v.as_slice();
        let dst = out.as_mut_slice();
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            let n = b.size();
            b.matvec_into(&src[off..off + n], &mut dst[off..off + n])?;
        }
        Ok(out)
    }

    fn low_rank_matvec(&self, v: &DVector<f64>) -> DVector<f64> {
        if !self.has_low_rank() {
            return DVector::zeros(self.p);
        }
        &self.lr_u * (&self.lr_c * self.lr_u.tr_mul(v))
    }

    pub fn mul_mat(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.p, m.ncols());
        for (j, col) in m.column_iter().enumerate() {
            out.set_column(j, &self.matvec(&col.into_owned())?);
        }
        Ok(out)
    }

    pub fn trace(&self) -> f64 {
        let blocks: f64 = self.blocks.iter().map(Block::trace).sum();
        if self.has_low_rank() {
            blocks + (&self.lr_c * self.lr_u.tr_mul(&self.lr_u)).trace()
        } else {
            blocks
        }
    }

    pub fn quad_form(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(v.dot(&self.matvec(v)?))
    }

    pub fn bilinear(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        Ok(u.dot(&self.matvec(v)?))
    }

    pub fn trace_sq(&self) -> Result<f64> {
        self.cross_trace(self)
    }

    /// `tr(Σ Σ')` for two covariances of the same dimension.
    pub fn cross_trace(&self, other: &StructuredCov) -> Result<f64> {
        if other.p != self.p {
            return Err(SpikeError::DimensionMismatch {
                expected: self.p,
                found: other.p,
            });
        }
        let mut t = block_cross_trace(self, other);
        // tr(Ca Uaᵀ Bb Ua) + tr(Cb Ubᵀ Ba Ub) + tr(Ca Uaᵀ Ub Cb Ubᵀ Ua)
        if self.has_low_rank() {
            let bu = other.block_mat(&self.lr_u)?;
            t += (&self.lr_c * self.lr_u.tr_mul(&bu)).trace();
        }
        if other.has_low_rank() {
            let bu = self.block_mat(&other.lr_u)?;
            t += (&other.lr_c * other.lr_u.tr_mul(&bu)).trace();
        }
        if self.has_low_rank() && other.has_low_rank() {
            let g = self.lr_u.tr_mul(&other.lr_u);
            t += (&self.lr_c * &g * &other.lr_c * g.transpose()).trace();
        }
        Ok(t)
    }

    fn block_mat(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.p, m.ncols());
        for (j, col) in m.column_iter().enumerate() {
            out.set_column(j, &self.block_matvec(&col.into_owned())?);
        }
        Ok(out)
    }

    /// Leading `k` eigenpairs, largest first, with unit vectors whose largest
    /// absolute entry is positive.
    pub fn top_eigenpairs(&self, k: usize) -> Result<Vec<(f64, DVector<f64>)>> {
        if k > self.p {
            return Err(SpikeError::Configuration(format!(
                "asked for {k} eigenpairs of a {}-dimensional covariance",
                self.p
            )));
        }
        let mut pairs = if self.has_low_rank() {
            subspace_iteration(self, k)?
        } else {
            self.block_eigenpairs(k)?
        };
        for (_, v) in pairs.iter_mut() {
            orient(v);
        }
        Ok(pairs)
    }

    fn block_eigenpairs(&self, k: usize) -> Result<Vec<(f64, DVector<f64>)>> {
        let mut eig: Vec<BlockEigen> = self.blocks.iter().map(|b| b.analytic_eigen(k)).collect();
        loop {
            let mut vals: Vec<f64> = eig.iter().flat_map(|e| e.pairs.iter().map(|p| p.0)).collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            let kth = if vals.len() >= k && k > 0 {
                vals[k - 1]
            } else {
                f64::NEG_INFINITY
            };
            let pending = eig
                .iter()
                .position(|e| matches!(e.rest_bound, Some(b) if b > kth));
            match pending {
                Some(i) => eig[i] = self.blocks[i].full_eigen()?,
                None => break,
            }
        }
        let mut all: Vec<(f64, usize, DVector<f64>)> = Vec::new();
        for (b, e) in eig.into_iter().enumerate() {
            for (l, v) in e.pairs {
                all.push((l, b, v));
            }
        }
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(all
            .into_iter()
            .take(k)
            .map(|(l, b, v)| {
                let mut full = DVector::zeros(self.p);
                full.rows_mut(self.offsets[b], v.len()).copy_from(&v);
                (l, full)
            })
            .collect())
    }

    /// Draws `n` columns of `L z` where `L Lᵀ` is the block part and the
    /// sphered coordinates `z` follow `noise`. The low-rank part is not
    /// sampled; callers that need it add it themselves.
    pub fn sample_columns<R: Rng + ?Sized>(
        &self,
        n: usize,
        noise: Noise,
        rng: &mut R,
    ) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.p, n);
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            let size = b.size();
            match b {
                Block::Intraclass { .. } => {
                    for j in 0..n {
                        let z0 = noise.draw(rng);
                        for r in 0..size {
                            out[(off + r, j)] = (noise.draw(rng) + z0) / std::f64::consts::SQRT_2;
                        }
                    }
                }
                Block::Diagonal(d) => {
                    for j in 0..n {
                        for r in 0..size {
                            out[(off + r, j)] = d[r].sqrt() * noise.draw(rng);
                        }
                    }
                }
                Block::Omega(o) => {
                    let l = o.cholesky()?;
                    let z = DMatrix::from_fn(size, n, |_, _| noise.draw(rng));
                    out.rows_mut(off, size).copy_from(&(l * z));
                }
            }
        }
        Ok(out)
    }
}

fn block_cross_trace(a: &StructuredCov, b: &StructuredCov) -> f64 {
    let mut total = 0.0;
    let (mut ia, mut ib) = (0, 0);
    while ia < a.blocks.len() && ib < b.blocks.len() {
        let (sa, ea) = (a.offsets[ia], a.offsets[ia] + a.blocks[ia].size());
        let (sb, eb) = (b.offsets[ib], b.offsets[ib] + b.blocks[ib].size());
        let (lo, hi) = (sa.max(sb), ea.min(eb));
        if lo < hi {
            let (ba, bb) = (&a.blocks[ia], &b.blocks[ib]);
            let diag_only = matches!(ba, Block::Diagonal(_)) || matches!(bb, Block::Diagonal(_));
            for i in lo..hi {
                if diag_only {
                    total += ba.entry(i - sa, i - sa) * bb.entry(i - sb, i - sb);
                    continue;
                }
                for j in lo..hi {
                    total += ba.entry(i - sa, j - sa) * bb.entry(i - sb, j - sb);
                }
            }
        }
        if ea <= eb {
            ia += 1;
        }
        if eb <= ea {
            ib += 1;
        }
    }
    total
}

/// Flips `v` so its largest absolute entry is positive.
pub(crate) fn orient(v: &mut DVector<f64>) {
    if v.is_empty() {
        return;
    }
    if v[v.iamax()] < 0.0 {
        v.neg_mut();
    }
}

/// Orthogonal iteration with Rayleigh-Ritz on a block of `k + 8` vectors.
fn subspace_iteration(cov: &StructuredCov, k: usize) -> Result<Vec<(f64, DVector<f64>)>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let p = cov.p;
    let b = (k + 8).min(p);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start = DMatrix::from_fn(p, b, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = start.qr().q();
    for _ in 0..5000 {
        let y = cov.mul_mat(&q)?;
        let t = q.tr_mul(&y);
        let t = (&t + t.transpose()) * 0.5;
        let mut ritz = dense_block_eigen(t)?;
        ritz.truncate(b);
        let w = DMatrix::from_columns(&ritz.iter().map(|r| r.1.clone()).collect::<Vec<_>>());
        let v = &q * &w;
        let yv = &y * &w;
        let top = ritz[0].0.abs().max(f64::MIN_POSITIVE);
        let converged = (0..k).all(|r| {
            let res = yv.column(r) - v.column(r) * ritz[r].0;
            res.norm() <= 1e-11 * top
        });
        if converged {
            return Ok((0..k).map(|r| (ritz[r].0, v.column(r).into_owned())).collect());
        }
        q = yv.qr().q();
    }
    Err(SpikeError::Numeric(
        "subspace iteration for leading eigenpairs did not converge".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_entries() {
        let c = StructuredCov::omega(4, 0.3).unwrap();
        assert!((c.entry(0, 0) - 0.7).abs() < 1e-15);
        assert!((c.entry(3, 3) - 1.3).abs() < 1e-15);
        let expected = (0.7f64 * 0.9).sqrt() * 0.3;
        assert!((c.entry(0, 1) - expected).abs() < 1e-15);
        let z = StructuredCov::omega(5, 0.0).unwrap();
        assert_eq!(z.entry(1, 2), 0.0);
    }

    #[test]
    fn intraclass_single() {
        let c = StructuredCov::intraclass(1).unwrap();
        assert_eq!(c.dense(), DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn block_layout_is_contiguous() {
        let c = StructuredCov::block_diagonal(vec![
            Block::intraclass(2),
            Block::Diagonal(vec![3.0]),
            Block::omega(2, 0.5, 2.0),
        ])
        .unwrap();
        assert_eq!(c.p(), 5);
        assert_eq!(c.entry(0, 1), 0.5);
        assert_eq!(c.entry(1, 2), 0.0);
        assert_eq!(c.entry(2, 2), 3.0);
        assert!(c.entry(3, 4) > 0.0);
        assert_eq!(c.entry(2, 4), 0.0);
    }

    #[test]
    fn invalid_blocks_rejected() {
        assert!(StructuredCov::omega(3, 1.0).is_err());
        assert!(StructuredCov::intraclass(0).is_err());
        assert!(StructuredCov::diagonal(vec![1.0, -1.0]).is_err());
    }
}
