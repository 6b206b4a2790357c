use nalgebra::{DMatrix, DVector};

use super::{ClassSample, DualSpectrum, RELATIVE_ZERO};
use crate::error::{Result, SpikeError};

/// Noise-reduced spectral estimates for the leading components of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct NrSpectrum {
    /// `λ̃_(r)` for `r = 1..n−2`.
    pub nr_eigvals: Vec<f64>,
    /// `λ̂_(r)` for the components that have directions.
    pub raw_eigvals: Vec<f64>,
    /// `h̃_(r)` for `r = 1..r_max`; `‖h̃_(r)‖² = λ̂_(r)/λ̃_(r)`.
    pub nr_dirs: Vec<DVector<f64>>,
    /// Unit sample eigenvectors `ĥ_(r)` for `r = 1..r_max`.
    pub raw_dirs: Vec<DVector<f64>>,
    /// Dual eigenvectors `û_(r)` oriented consistently with `nr_dirs`.
    pub dual_dirs: Vec<DVector<f64>>,
    /// Noise term subtracted at `r = r_max`: `(tr(S_D) − Σ_{s≤r_max} λ̂_(s))/(n − 1 − r_max)`.
    pub kappa_hat: f64,
}

impl NrSpectrum {
    /// Number of components with directions.
    pub fn components(&self) -> usize {
        self.nr_dirs.len()
    }

    /// Keeps only the first `k` components.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.components());
        Self {
            nr_eigvals: self.nr_eigvals.clone(),
            raw_eigvals: self.raw_eigvals[..k].to_vec(),
            nr_dirs: self.nr_dirs[..k].to_vec(),
            raw_dirs: self.raw_dirs[..k].to_vec(),
            dual_dirs: self.dual_dirs[..k].to_vec(),
            kappa_hat: self.kappa_hat,
        }
    }
}

fn tail_term(spec: &DualSpectrum, r: usize) -> f64 {
    let n = spec.n();
    let head: f64 = spec.eigvals[..r].iter().sum();
    (spec.trace_sd - head) / (n - 1 - r) as f64
}

/// `λ̃_(r) = λ̂_(r) − (tr(S_D) − Σ_{s≤r} λ̂_(s))/(n − 1 − r)` for `r = 1..n−2`.
///
/// Rounding can push the result a hair outside `[0, λ̂_(r)]`; it is clamped back.
pub fn nr_eigenvalues(spec: &DualSpectrum) -> Vec<f64> {
    let n = spec.n();
    (1..n.saturating_sub(1))
        .map(|r| {
            let raw = spec.eigvals[r - 1];
            (raw - tail_term(spec, r)).clamp(0.0, raw)
        })
        .collect()
}

/// Number of leading components (at most `k`) whose noise-reduced eigenvalue
/// is above the degeneracy threshold.
pub fn usable_components(spec: &DualSpectrum, nr_eigvals: &[f64], k: usize) -> usize {
    let lead = spec.eigvals.first().copied().unwrap_or(0.0);
    let cutoff = RELATIVE_ZERO * lead;
    nr_eigvals
        .iter()
        .take(k)
        .take_while(|&&v| v > cutoff && lead > 0.0)
        .count()
}

/// Noise-reduced and raw direction vectors for `r = 1..r_max`.
///
/// `h̃_(r) = {(n−1)λ̃_(r)}^{-1/2}(X − X̄)û_(r)` and
/// `ĥ_(r) = {(n−1)λ̂_(r)}^{-1/2}(X − X̄)û_(r)`. Each component is oriented so the
/// entry of largest magnitude in `h̃_(r)` is positive (first index on ties);
/// `û_(r)` is flipped along with it.
pub fn nr_directions(
    sample: &ClassSample,
    spec: &DualSpectrum,
    nr_eigvals: &[f64],
    r_max: usize,
) -> Result<NrSpectrum> {
    let xc = sample.centered();
    nr_directions_centered(&xc, spec, nr_eigvals, r_max)
}

pub(crate) fn nr_directions_centered(
    xc: &DMatrix<f64>,
    spec: &DualSpectrum,
    nr_eigvals: &[f64],
    r_max: usize,
) -> Result<NrSpectrum> {
    let n = spec.n();
    if xc.ncols() != n {
        return Err(SpikeError::DimensionMismatch {
            expected: n,
            found: xc.ncols(),
        });
    }
    if r_max > n.saturating_sub(2) || r_max > nr_eigvals.len() {
        return Err(SpikeError::Configuration(format!(
            "requested {r_max} components but at most {} are available for n = {n}",
            n.saturating_sub(2)
        )));
    }
    let usable = usable_components(spec, nr_eigvals, r_max);
    if usable < r_max {
        return Err(SpikeError::DegenerateSpike {
            component: usable + 1,
            value: nr_eigvals[usable],
        });
    }

    let nm1 = n as f64 - 1.0;
    let mut nr_dirs = Vec::with_capacity(r_max);
    let mut raw_dirs = Vec::with_capacity(r_max);
    let mut dual_dirs = Vec::with_capacity(r_max);
    let leading = spec
        .eigvecs_dual
        .iter()
        .zip(nr_eigvals)
        .zip(&spec.eigvals)
        .take(r_max);
    for ((u, &nr_val), &raw_val) in leading {
        let mut u = u.clone();
        let mut v = xc * &u;
        if leading_entry_is_negative(&v) {
            v.neg_mut();
            u.neg_mut();
        }
        nr_dirs.push(&v / (nm1 * nr_val).sqrt());
        raw_dirs.push(&v / (nm1 * raw_val).sqrt());
        dual_dirs.push(u);
    }
    Ok(NrSpectrum {
        nr_eigvals: nr_eigvals.to_vec(),
        raw_eigvals: spec.eigvals[..r_max].to_vec(),
        nr_dirs,
        raw_dirs,
        dual_dirs,
        kappa_hat: tail_term(spec, r_max),
    })
}

fn leading_entry_is_negative(v: &DVector<f64>) -> bool {
    let mut best = 0.0_f64;
    let mut sign_negative = false;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign_negative = x < 0.0;
        }
    }
    sign_negative
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{dual_covariance, eigen_dual};

    fn spectrum(vals: &[f64], n: usize) -> DualSpectrum {
        DualSpectrum {
            eigvals: vals.to_vec(),
            eigvecs_dual: (0..vals.len())
                .map(|r| DVector::from_fn(n, |i, _| (i == r) as u8 as f64))
                .collect(),
            trace_sd: vals.iter().sum(),
        }
    }

    #[test]
    fn hand_computed_nr_values() {
        let s = spectrum(&[10.0, 2.0, 1.0], 4);
        assert_eq!(nr_eigenvalues(&s), vec![8.5, 1.0]);
    }

    #[test]
    fn flat_spectrum_reduces_to_zero() {
        let c = 3.7;
        let s = spectrum(&[c, c, c], 4);
        let nr = nr_eigenvalues(&s);
        assert!(nr.iter().all(|&v| v.abs() < 1e-15), "{nr:?}");
        assert_eq!(usable_components(&s, &nr, 2), 0);
    }

    #[test]
    fn rank_one_sample_direction_follows_the_line() {
        let dir = DVector::from_vec(vec![3.0, -1.0, 2.0, 0.5, 4.0]);
        let base = DVector::from_vec(vec![1.0, 1.0, -2.0, 0.0, 3.0]);
        let ts = [-1.5, 0.2, 0.7, 2.3, -0.4, 1.1];
        let cols: Vec<_> = ts.iter().map(|&t| &base + &dir * t).collect();
        let x = ClassSample::from_columns(&cols).unwrap();
        let spec = eigen_dual(&dual_covariance(&x)).unwrap();
        let nr = nr_eigenvalues(&spec);
        let out = nr_directions(&x, &spec, &nr, 1).unwrap();
        let h = &out.nr_dirs[0];
        let cos = h.dot(&dir) / (h.norm() * dir.norm());
        assert!((cos - 1.0).abs() < 1e-8, "cosine {cos}");
        // Largest entry of the direction is positive.
        assert!(h[4] > 0.0);
        assert!((out.raw_dirs[0].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_component_is_reported() {
        let col = DVector::from_vec(vec![1.0, 2.0]);
        let x = ClassSample::from_columns(&[col.clone(), col.clone(), col.clone(), col]).unwrap();
        let spec = eigen_dual(&dual_covariance(&x)).unwrap();
        let nr = nr_eigenvalues(&spec);
        let err = nr_directions(&x, &spec, &nr, 1).unwrap_err();
        assert!(matches!(err, SpikeError::DegenerateSpike { component: 1, .. }));
    }

    #[test]
    fn too_many_components_is_a_configuration_error() {
        let x = ClassSample::new(DMatrix::from_fn(3, 4, |i, j| (i as f64 + 1.0) * (j as f64).sin())).unwrap();
        let spec = eigen_dual(&dual_covariance(&x)).unwrap();
        let nr = nr_eigenvalues(&spec);
        assert!(matches!(
            nr_directions(&x, &spec, &nr, 3),
            Err(SpikeError::Configuration(_))
        ));
    }
}
