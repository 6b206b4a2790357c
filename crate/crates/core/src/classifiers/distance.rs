use nalgebra::DVector;

/// `v − Σ_r h_r (h_rᵀv)`, i.e. `(I − Σ h hᵀ) v` for orthonormal `h_r`.
pub(crate) fn project_out(basis: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut out = v.clone();
    for h in basis {
        out.axpy(-h.dot(v), h, 1.0);
    }
    out
}

/// A rule of the form `x₀ᵀw + b`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinearRule {
    pub weight: DVector<f64>,
    pub offset: f64,
}

impl LinearRule {
    /// Projected-distance rule
    /// `(A_*x₀ − (A₁x̄₁ + A₂x̄₂)/2)ᵀ(A₂x̄₂ − A₁x̄₁) − t₁/(2n₁) + t₂/(2n₂)`
    /// with `A_i = I − Σ h hᵀ` over `bases[i]`, `A_* = (A₁ + A₂)/2` and
    /// `t_i = tr(A_i S_i)`. Empty bases give the plain distance rule.
    pub fn projected_distance(
        bases: [&[DVector<f64>]; 2],
        means: [&DVector<f64>; 2],
        projected_traces: [f64; 2],
        sizes: [usize; 2],
    ) -> Self {
        let a1m1 = project_out(bases[0], means[0]);
        let a2m2 = project_out(bases[1], means[1]);
        let d = &a2m2 - &a1m1;
        let weight = (project_out(bases[0], &d) + project_out(bases[1], &d)) * 0.5;
        let mid = (&a1m1 + &a2m2) * 0.5;
        let offset = -mid.dot(&d) - projected_traces[0] / (2.0 * sizes[0] as f64)
            + projected_traces[1] / (2.0 * sizes[1] as f64);
        Self { weight, offset }
    }

    pub fn score(&self, x0: &DVector<f64>) -> f64 {
        x0.dot(&self.weight) + self.offset
    }
}
