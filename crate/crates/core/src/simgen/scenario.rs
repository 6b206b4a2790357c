use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::asymptotic_error;
use super::covariance::{Block, Noise, StructuredCov};
use crate::classifiers::OracleBasis;
use crate::error::{Result, SpikeError};
use crate::spectra::ClassSample;

/// Smallest dimension accepted by [`make_scenario`].
pub const MIN_SCENARIO_P: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::S1,
        ScenarioId::S2,
        ScenarioId::S3,
        ScenarioId::S4,
        ScenarioId::S5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::S1 => "s1",
            ScenarioId::S2 => "s2",
            ScenarioId::S3 => "s3",
            ScenarioId::S4 => "s4",
            ScenarioId::S5 => "s5",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = SpikeError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SpikeError::Configuration(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub p: usize,
    pub seed: u64,
    pub replications: usize,
}

/// Variance quantities of the distance rule and its oracle-transformed
/// version, indexed by the class of the test point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleDeltas {
    pub delta_oi: [f64; 2],
    pub delta_i: [f64; 2],
    pub delta_oi_a: [f64; 2],
    pub delta_i_a: [f64; 2],
    /// `Φ(−Δ/(2δ_i))`.
    pub edot: [f64; 2],
    /// `Φ(−Δ_A/(2δ_{i,A}))`.
    pub edot_a: [f64; 2],
}

/// Population-level description of a two-class problem.
#[derive(Debug, Clone)]
pub struct PopulationTruth {
    pub mu: [DVector<f64>; 2],
    pub sigma: [StructuredCov; 2],
    /// Leading eigenvalues `λ_i(r)`, `r ≤ k_i`.
    pub lambdas: [Vec<f64>; 2],
    /// Leading unit eigenvectors `h_i(r)`.
    pub dirs: [Vec<DVector<f64>>; 2],
    pub k: [usize; 2],
    /// `Δ = ‖μ₁ − μ₂‖²`.
    pub delta: f64,
    /// `Δ_A = ‖A₁μ₁ − A₂μ₂‖²`.
    pub delta_a: f64,
}

fn project_out(h: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut out = v.clone();
    for d in h {
        out.axpy(-d.dot(v), d, 1.0);
    }
    out
}

fn columns(v: &[DVector<f64>], p: usize) -> DMatrix<f64> {
    if v.is_empty() {
        DMatrix::zeros(p, 0)
    } else {
        DMatrix::from_columns(v)
    }
}

impl PopulationTruth {
    /// Builds the truth from means and covariances, taking the leading `k_i`
    /// eigenpairs of each `Σ_i` as the spikes.
    pub fn new(mu: [DVector<f64>; 2], sigma: [StructuredCov; 2], k: [usize; 2]) -> Result<Self> {
        let p = mu[0].len();
        for (m, s) in mu.iter().zip(&sigma) {
            if m.len() != p || s.p() != p {
                return Err(SpikeError::DimensionMismatch {
                    expected: p,
                    found: if m.len() != p { m.len() } else { s.p() },
                });
            }
        }
        let e1 = sigma[0].top_eigenpairs(k[0])?;
        let e2 = sigma[1].top_eigenpairs(k[1])?;
        let split = |e: Vec<(f64, DVector<f64>)>| -> (Vec<f64>, Vec<DVector<f64>>) { e.into_iter().unzip() };
        let (l1, h1) = split(e1);
        let (l2, h2) = split(e2);
        let delta = (&mu[0] - &mu[1]).norm_squared();
        let mu_a = project_out(&h1, &mu[0]) - project_out(&h2, &mu[1]);
        Ok(Self {
            delta,
            delta_a: mu_a.norm_squared(),
            mu,
            sigma,
            lambdas: [l1, l2],
            dirs: [h1, h2],
            k,
        })
    }

    pub fn p(&self) -> usize {
        self.mu[0].len()
    }

    pub fn basis(&self) -> OracleBasis {
        OracleBasis { h: self.dirs.clone() }
    }

    /// `μ_A = A₁μ₁ − A₂μ₂`.
    pub fn mu_a(&self) -> DVector<f64> {
        project_out(&self.dirs[0], &self.mu[0]) - project_out(&self.dirs[1], &self.mu[1])
    }

    /// `Σ_{i,A} = A_iΣ_iA_i = Σ_i − Σ_r λ_i(r) h_i(r)h_i(r)ᵀ`.
    pub fn sigma_a(&self, i: usize) -> Result<StructuredCov> {
        let u = columns(&self.dirs[i], self.p());
        let c = DMatrix::from_diagonal(&DVector::from_iterator(
            self.lambdas[i].len(),
            self.lambdas[i].iter().map(|l| -l),
        ));
        self.sigma[i].clone().with_low_rank(u, c)
    }

    /// `Σ_{i,A*} = A_*Σ_iA_*` with `A_* = I − P`, `P = G G ᵀ/2`, `G = [H₁ H₂]`:
    /// `Σ − PΣ − ΣP + PΣP = Σ + V C Vᵀ` over `V = [G, ΣG]`.
    pub fn sigma_a_star(&self, i: usize) -> Result<StructuredCov> {
        let p = self.p();
        let all: Vec<DVector<f64>> = self.dirs.iter().flatten().cloned().collect();
        let m = all.len();
        if m == 0 {
            return Ok(self.sigma[i].clone());
        }
        let g = columns(&all, p);
        let sg = self.sigma[i].mul_mat(&g)?;
        let gsg = g.tr_mul(&sg);
        let mut v = DMatrix::zeros(p, 2 * m);
        v.columns_mut(0, m).copy_from(&g);
        v.columns_mut(m, m).copy_from(&sg);
        let mut c = DMatrix::zeros(2 * m, 2 * m);
        c.view_mut((0, 0), (m, m)).copy_from(&(gsg * 0.25));
        for r in 0..m {
            c[(r, m + r)] = -0.5;
            c[(m + r, r)] = -0.5;
        }
        self.sigma[i].clone().with_low_rank(v, c)
    }

    /// `A_{1,2}v = (A₁ − A₂)v`.
    pub fn a12(&self, v: &DVector<f64>) -> DVector<f64> {
        project_out(&self.dirs[0], v) - project_out(&self.dirs[1], v)
    }

    /// Variance quantities for training sizes `n₁`, `n₂`.
    pub fn oracle_deltas(&self, n1: usize, n2: usize) -> Result<OracleDeltas> {
        if n1 < 2 || n2 < 2 {
            return Err(SpikeError::Configuration(
                "variance quantities need n₁, n₂ ≥ 2".into(),
            ));
        }
        let n = [n1 as f64, n2 as f64];
        let mu = &self.mu[0] - &self.mu[1];
        let mu_a = self.mu_a();
        let s = &self.sigma;
        let sa = [self.sigma_a(0)?, self.sigma_a(1)?];
        let sq = [s[0].trace_sq()?, s[1].trace_sq()?];
        let sq_a = [sa[0].trace_sq()?, sa[1].trace_sq()?];
        let cross = s[0].cross_trace(&s[1])?;
        let tail = |t: [f64; 2]| (0..2).map(|l| t[l] / (2.0 * n[l] * (n[l] - 1.0))).sum::<f64>();
        let tail_raw = tail(sq);
        let tail_a = tail(sq_a);

        let mut out = OracleDeltas {
            delta_oi: [0.0; 2],
            delta_i: [0.0; 2],
            delta_oi_a: [0.0; 2],
            delta_i_a: [0.0; 2],
            edot: [0.0; 2],
            edot_a: [0.0; 2],
        };
        for i in 0..2 {
            let o = 1 - i;
            let do2 = sq[i] / n[i] + cross / n[o] + tail_raw;
            let d2 = do2 + s[i].quad_form(&mu)? + s[o].quad_form(&mu)? / n[o];

            let star = self.sigma_a_star(i)?;
            let doa2 = star.cross_trace(&sa[i])? / n[i] + star.cross_trace(&sa[o])? / n[o] + tail_a;
            let a12mu = self.a12(&self.mu[i]);
            let w = &mu_a - &a12mu * 0.5;
            let da2 = doa2
                + star.quad_form(&mu_a)?
                + sa[i].quad_form(&a12mu)? / (4.0 * n[i])
                + sa[o].quad_form(&w)? / n[o];

            out.delta_oi[i] = do2.sqrt();
            out.delta_i[i] = d2.sqrt();
            out.delta_oi_a[i] = doa2.sqrt();
            out.delta_i_a[i] = da2.sqrt();
            out.edot[i] = asymptotic_error(self.delta, out.delta_i[i]);
            out.edot_a[i] = asymptotic_error(self.delta_a, out.delta_i_a[i]);
        }
        Ok(out)
    }
}

/// `⌈p^a⌉`, snapping values within rounding error of an integer.
pub(crate) fn ceil_pow(p: usize, a: f64) -> usize {
    let x = (p as f64).powf(a);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Block(Noise),
    /// Component means per class, already recentred so the mixture mean is 0.
    Mixture([[DVector<f64>; 3]; 2]),
}

/// Draws training samples and test points for one scenario.
///
/// Stateless apart from shared read-only factors, so clones can run on
/// separate threads with their own generators.
#[derive(Debug, Clone)]
pub struct Sampler {
    mu: [DVector<f64>; 2],
    noise_cov: [StructuredCov; 2],
    kind: SamplerKind,
}

impl Sampler {
    pub fn gaussian(mu: [DVector<f64>; 2], cov: [StructuredCov; 2]) -> Result<Self> {
        Self::with_noise(mu, cov, Noise::Gaussian)
    }

    pub fn with_noise(mu: [DVector<f64>; 2], cov: [StructuredCov; 2], noise: Noise) -> Result<Self> {
        if cov.iter().any(StructuredCov::has_low_rank) {
            return Err(SpikeError::Configuration(
                "block sampler cannot draw a low-rank covariance term".into(),
            ));
        }
        Ok(Self {
            mu,
            noise_cov: cov,
            kind: SamplerKind::Block(noise),
        })
    }

    pub fn p(&self) -> usize {
        self.mu[0].len()
    }

    /// `n` observations from class `class` (1 or 2) as the columns of a matrix.
    pub fn sample<R: Rng + ?Sized>(&self, class: usize, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        if !(1..=2).contains(&class) {
            return Err(SpikeError::Configuration(format!(
                "class must be 1 or 2, got {class}"
            )));
        }
        let i = class - 1;
        let mut x = match &self.kind {
            SamplerKind::Block(noise) => self.noise_cov[i].sample_columns(n, *noise, rng)?,
            SamplerKind::Mixture(means) => {
                let comps: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
                let mut x = self.noise_cov[i].sample_columns(n, Noise::Gaussian, rng)?;
                for (j, &l) in comps.iter().enumerate() {
                    let mut col = x.column_mut(j);
                    col += &means[i][l];
                }
                x
            }
        };
        for mut col in x.column_iter_mut() {
            col += &self.mu[i];
        }
        Ok(x)
    }

    pub fn sample_class<R: Rng + ?Sized>(&self, class: usize, n: usize, rng: &mut R) -> Result<ClassSample> {
        ClassSample::new(self.sample(class, n, rng)?)
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, class: usize, rng: &mut R) -> Result<DVector<f64>> {
        Ok(self.sample(class, 1, rng)?.column(0).into_owned())
    }
}

/// A built scenario: truth, sampling sizes and a sampler.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub n: [usize; 2],
    pub truth: PopulationTruth,
    pub deltas: OracleDeltas,
    pub sampler: Sampler,
}

fn mean_shift(p: usize, id: ScenarioId) -> DVector<f64> {
    let mut mu2 = DVector::zeros(p);
    if id == ScenarioId::S1 {
        let m = ceil_pow(p, 0.5).min(p);
        for v in mu2.rows_mut(p - m, m).iter_mut() {
            *v = 1.0;
        }
    } else {
        let half = (ceil_pow(p, 0.6) as f64 / 2.0).ceil() as usize;
        let half = half.min(p / 2);
        for r in 0..half {
            mu2[p - 2 * half + r] = 1.0;
            mu2[p - half + r] = -1.0;
        }
    }
    mu2
}

fn block_sizes(p: usize, t1: usize, t2: usize) -> Result<usize> {
    if t1 + t2 >= p {
        return Err(SpikeError::Configuration(format!(
            "p = {p} is too small for blocks of sizes {t1} and {t2}"
        )));
    }
    Ok(p - t1 - t2)
}

fn mixture_means(p: usize, q1: usize, q2: usize) -> Result<[DVector<f64>; 3]> {
    if q1 + q2 > p {
        return Err(SpikeError::Configuration(format!(
            "p = {p} is too small for mixture blocks of sizes {q1} and {q2}"
        )));
    }
    let s3 = 3f64.sqrt();
    let mut m1 = DVector::zeros(p);
    let mut m2 = DVector::zeros(p);
    m1.rows_mut(0, q1).fill(s3);
    m2.rows_mut(q1, q2).fill(s3);
    Ok([m1, m2, DVector::zeros(p)])
}

/// Builds truth, variance quantities and a sampler for a scenario.
pub fn make_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    let p = spec.p;
    if p < MIN_SCENARIO_P {
        return Err(SpikeError::Configuration(format!(
            "scenarios need p ≥ {MIN_SCENARIO_P}, got {p}"
        )));
    }
    let mu = [DVector::zeros(p), mean_shift(p, spec.id)];
    let (n1, truth, sampler) = match spec.id {
        ScenarioId::S1 => {
            let mut d = vec![1.0; p];
            d[0] = (p as f64).powf(2.0 / 3.0);
            d[1] = (p as f64).sqrt();
            let d2: Vec<f64> = d.iter().map(|v| 2.0 * v).collect();
            let cov = [StructuredCov::diagonal(d)?, StructuredCov::diagonal(d2)?];
            let truth = PopulationTruth::new(mu.clone(), cov.clone(), [2, 2])?;
            (ceil_pow(p, 0.4), truth, Sampler::gaussian(mu, cov)?)
        }
        ScenarioId::S2 | ScenarioId::S3 => {
            let (a, b) = if spec.id == ScenarioId::S2 {
                (ceil_pow(p, 2.0 / 3.0), ceil_pow(p, 0.5))
            } else {
                (p.div_ceil(3), p.div_ceil(9))
            };
            let build = |scale: usize, c: f64| -> Result<StructuredCov> {
                let (t1, t2) = (scale * a, scale * b);
                let t3 = block_sizes(p, t1, t2)?;
                StructuredCov::block_diagonal(vec![
                    Block::intraclass(t1),
                    Block::intraclass(t2),
                    Block::omega(t3, 0.3, c),
                ])
            };
            let cov = [build(1, 1.0)?, build(2, 1.3)?];
            let noise = if spec.id == ScenarioId::S2 {
                Noise::Gaussian
            } else {
                Noise::ChiSquare
            };
            let truth = PopulationTruth::new(mu.clone(), cov.clone(), [2, 2])?;
            (ceil_pow(p, 0.5), truth, Sampler::with_noise(mu, cov, noise)?)
        }
        ScenarioId::S4 | ScenarioId::S5 => {
            let q23 = ceil_pow(p, 2.0 / 3.0);
            let q12 = ceil_pow(p, 0.5);
            let comps = [mixture_means(p, q23, 2 * q12)?, mixture_means(p, 2 * q23, q12)?];
            let omega = [
                StructuredCov::block_diagonal(vec![Block::omega(p, 0.3, 1.0)])?,
                StructuredCov::block_diagonal(vec![Block::omega(p, 0.5, 1.0)])?,
            ];
            let mut sigma = Vec::with_capacity(2);
            let mut centred = Vec::with_capacity(2);
            for i in 0..2 {
                let m = &comps[i];
                let diffs = [&m[0] - &m[1], &m[0] - &m[2], &m[1] - &m[2]];
                let u = DMatrix::from_columns(&diffs);
                let c = DMatrix::identity(3, 3) / 9.0;
                sigma.push(omega[i].clone().with_low_rank(u, c)?);
                let centre = (&m[0] + &m[1] + &m[2]) / 3.0;
                centred.push([&m[0] - &centre, &m[1] - &centre, &m[2] - &centre]);
            }
            let sigma: [StructuredCov; 2] = [sigma[0].clone(), sigma[1].clone()];
            let truth = PopulationTruth::new(mu.clone(), sigma, [2, 2])?;
            let n1 = if spec.id == ScenarioId::S4 {
                ceil_pow(p, 0.4)
            } else {
                ceil_pow(p, 0.6)
            };
            let sampler = Sampler {
                mu,
                noise_cov: omega,
                kind: SamplerKind::Mixture([centred[0].clone(), centred[1].clone()]),
            };
            (n1, truth, sampler)
        }
    };
    let n = [n1, 2 * n1];
    let deltas = truth.oracle_deltas(n[0], n[1])?;
    Ok(Scenario {
        spec: *spec,
        n,
        truth,
        deltas,
        sampler,
    })
}
