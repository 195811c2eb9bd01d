//! Unscented Kalman filter on manifolds.
//!
//! Sigma points are formed by boxplus-ing the scaled columns of a covariance
//! square root onto the mean, and all residuals are taken with boxminus. The
//! engine itself is stateless; a [`GaussianBelief`] is passed in and a new one
//! returned.

use nalgebra::{DMatrix, DMatrixView, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::UkfError;
use crate::manifold::Manifold;

/// Iteration cap of the manifold weighted mean.
pub const MEAN_MAX_ITERS: usize = 20;
/// Convergence threshold on the mean correction norm.
pub const MEAN_TOL: f64 = 1e-10;

const JITTER_START: f64 = 1e-12;
const JITTER_CAP: f64 = 1e-6;

/// Scaled unscented transform parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UtParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UtParams {
    fn default() -> Self {
        UtParams {
            alpha: 1e-2,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
    /// `sqrt(n + λ)`.
    pub spread: f64,
}

impl UtParams {
    pub fn weights(&self, n: usize) -> Weights {
        let nf = n as f64;
        let lambda = self.alpha * self.alpha * (nf + self.kappa) - nf;
        let c = nf + lambda;
        let wi = 0.5 / c;
        let mut mean = vec![wi; 2 * n + 1];
        let mut cov = mean.clone();
        mean[0] = lambda / c;
        cov[0] = lambda / c + (1.0 - self.alpha * self.alpha + self.beta);
        Weights {
            mean,
            cov,
            spread: c.sqrt(),
        }
    }
}

/// Mean on the manifold plus tangent-space covariance at the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBelief<S> {
    pub mean: S,
    pub cov: DMatrix<f64>,
}

impl<S: Manifold> GaussianBelief<S> {
    pub fn new(mean: S, cov: DMatrix<f64>) -> Self {
        assert_eq!(cov.nrows(), S::DIM);
        assert_eq!(cov.ncols(), S::DIM);
        GaussianBelief { mean, cov }
    }

    /// Marginal standard deviation of tangent component `i`.
    pub fn sigma(&self, i: usize) -> f64 {
        self.cov[(i, i)].max(0.0).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct SigmaPointSet<S> {
    pub points: Vec<S>,
    /// Column `i` is `points[i] ⊟ mean`.
    pub deltas: DMatrix<f64>,
    pub weights: Weights,
}

impl<S> SigmaPointSet<S> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Innovation gate: reject when the squared Mahalanobis distance exceeds the
/// chi-square quantile at `confidence`. `None` disables gating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub confidence: Option<f64>,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            confidence: Some(0.99),
        }
    }
}

impl GateConfig {
    pub fn disabled() -> Self {
        GateConfig { confidence: None }
    }

    pub fn with_confidence(c: f64) -> Self {
        GateConfig {
            confidence: Some(c),
        }
    }

    pub fn threshold(&self, dof: usize) -> f64 {
        match self.confidence {
            Some(c) => gate_threshold(dof, c),
            None => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateReport {
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    /// Squared Mahalanobis distance of the innovation.
    pub mahalanobis_sq: f64,
    pub threshold: f64,
    pub accepted: bool,
}

impl UpdateReport {
    pub fn mahalanobis(&self) -> f64 {
        self.mahalanobis_sq.sqrt()
    }
}

/// Chi-square inverse CDF.
pub fn gate_threshold(dof: usize, confidence: f64) -> f64 {
    assert!(dof >= 1, "gate needs at least one degree of freedom");
    assert!(
        confidence > 0.0 && confidence < 1.0,
        "confidence must lie in (0, 1)"
    );
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    chi.inverse_cdf(confidence)
}

/// In-place lower Cholesky factor of a symmetric matrix, reading only the
/// lower triangle.
///
/// Zero pivots whose remaining column is exactly zero are accepted (exactly
/// singular PSD blocks, e.g. states carried with zero variance). Returns
/// `false` on a negative pivot.
fn cholesky_lower(a: &mut DMatrix<f64>) -> bool {
    let n = a.nrows();
    let data = a.as_mut_slice();
    for j in 0..n {
        // left-looking: column j -= Σ_k L[j,k]·L[:,k] over finished columns
        let (done, rest) = data.split_at_mut(j * n);
        let col = &mut rest[..n];
        for k in 0..j {
            let lk = &done[k * n..(k + 1) * n];
            let ljk = lk[j];
            if ljk != 0.0 {
                for (c, l) in col[j..].iter_mut().zip(&lk[j..]) {
                    *c -= ljk * l;
                }
            }
        }
        let d = col[j];
        if d > 0.0 {
            let djj = d.sqrt();
            col[j] = djj;
            col[j + 1..].iter_mut().for_each(|c| *c /= djj);
        } else {
            if d < 0.0 || col[j + 1..].iter().any(|c| *c != 0.0) {
                return false;
            }
            col[j..].iter_mut().for_each(|c| *c = 0.0);
        }
        col[..j].iter_mut().for_each(|c| *c = 0.0);
    }
    true
}

fn is_symmetric(c: &DMatrix<f64>) -> bool {
    let n = c.nrows();
    let d = c.as_slice();
    (0..n).all(|j| (j + 1..n).all(|i| d[j * n + i] == d[i * n + j]))
}

/// Symmetrizes in place: `C ← (C + Cᵀ) / 2`.
pub fn symmetrize(c: &mut DMatrix<f64>) {
    let n = c.nrows();
    let d = c.as_mut_slice();
    for j in 0..n {
        for i in j + 1..n {
            let v = 0.5 * (d[j * n + i] + d[i * n + j]);
            d[j * n + i] = v;
            d[i * n + j] = v;
        }
    }
}

/// Lower square root of a covariance with jitter repair.
///
/// Starts with the symmetrized matrix; on failure adds `1e-12·trace/n` to the
/// diagonal and doubles it up to `1e-6·trace/n`.
pub fn sqrt_psd(cov: &DMatrix<f64>) -> Result<DMatrix<f64>, UkfError> {
    let n = cov.nrows();
    let symmetric = is_symmetric(cov);
    let mut l = cov.clone();
    if !symmetric {
        symmetrize(&mut l);
    }
    if cholesky_lower(&mut l) {
        return Ok(l);
    }
    let mut base = cov.clone();
    if !symmetric {
        symmetrize(&mut base);
    }
    let scale = base.trace() / n as f64;
    if !(scale > 0.0) {
        return Err(UkfError::CovarianceNotPsd { jitter: 0.0 });
    }
    let mut jitter = JITTER_START * scale;
    while jitter <= JITTER_CAP * scale * (1.0 + 1e-12) {
        l.copy_from(&base);
        for i in 0..n {
            l[(i, i)] += jitter;
        }
        if cholesky_lower(&mut l) {
            return Ok(l);
        }
        jitter *= 2.0;
    }
    Err(UkfError::CovarianceNotPsd { jitter })
}

/// Stateless unscented transform engine.
#[derive(Clone, Debug, Default)]
pub struct Ukf {
    pub ut: UtParams,
}

impl Ukf {
    pub fn new(ut: UtParams) -> Self {
        Ukf { ut }
    }

    pub fn generate_sigma_points<S: Manifold>(
        &self,
        belief: &GaussianBelief<S>,
    ) -> Result<SigmaPointSet<S>, UkfError> {
        let n = S::DIM;
        let weights = self.ut.weights(n);
        let l = sqrt_psd(&belief.cov)?;
        let np = 2 * n + 1;
        let mut deltas = DMatrix::zeros(n, np);
        let mut points = Vec::with_capacity(np);
        points.push(belief.mean.clone());
        for sign in [1.0, -1.0] {
            for j in 0..n {
                let c = if sign > 0.0 { 1 + j } else { 1 + n + j };
                let col = &mut deltas.as_mut_slice()[c * n..(c + 1) * n];
                for (d, v) in col.iter_mut().zip(&l.as_slice()[j * n..(j + 1) * n]) {
                    *d = sign * weights.spread * v;
                }
                points.push(belief.mean.boxplus(col));
            }
        }
        Ok(SigmaPointSet {
            points,
            deltas,
            weights,
        })
    }

    /// Propagates the belief through `process` and adds `q`.
    pub fn predict<S, F>(
        &self,
        belief: &GaussianBelief<S>,
        mut process: F,
        q: &DMatrix<f64>,
    ) -> Result<GaussianBelief<S>, UkfError>
    where
        S: Manifold,
        F: FnMut(&S) -> S,
    {
        let sp = self.generate_sigma_points(belief)?;
        let propagated: Vec<S> = sp.points.iter().map(&mut process).collect();
        let (mean, residuals) = weighted_mean(&propagated, &sp.weights.mean);
        let mut cov = weighted_outer(&residuals, &sp.weights.cov);
        for (c, qv) in cov.as_mut_slice().iter_mut().zip(q.as_slice()) {
            *c += qv;
        }
        symmetrize(&mut cov);
        Ok(GaussianBelief { mean, cov })
    }

    /// Unscented measurement update with innovation gating.
    ///
    /// `h` writes the predicted measurement of a state into its output slice,
    /// which has the length of `z`. A gated-out measurement returns the input
    /// belief unchanged.
    pub fn update<S, H>(
        &self,
        belief: &GaussianBelief<S>,
        h: H,
        z: &DVector<f64>,
        r: &DMatrix<f64>,
        gate: &GateConfig,
    ) -> Result<(GaussianBelief<S>, UpdateReport), UkfError>
    where
        S: Manifold,
        H: FnMut(&S, &mut [f64]),
    {
        self.update_with_threshold(belief, h, z, r, gate.threshold(z.len()))
    }

    /// [`Ukf::update`] with a precomputed gate threshold (`∞` disables).
    pub fn update_with_threshold<S, H>(
        &self,
        belief: &GaussianBelief<S>,
        mut h: H,
        z: &DVector<f64>,
        r: &DMatrix<f64>,
        threshold: f64,
    ) -> Result<(GaussianBelief<S>, UpdateReport), UkfError>
    where
        S: Manifold,
        H: FnMut(&S, &mut [f64]),
    {
        let m = z.len();
        if r.nrows() != m || r.ncols() != m {
            return Err(UkfError::DimensionMismatch {
                expected: m,
                got: r.nrows(),
            });
        }
        let sp = self.generate_sigma_points(belief)?;
        let np = sp.len();
        let mut zs = DMatrix::zeros(m, np);
        for (i, p) in sp.points.iter().enumerate() {
            h(p, zs.column_mut(i).as_mut_slice());
        }
        let mut zbar = DVector::zeros(m);
        for i in 0..np {
            zbar.axpy(sp.weights.mean[i], &zs.column(i), 1.0);
        }
        for i in 0..np {
            let mut c = zs.column_mut(i);
            c -= &zbar;
        }
        let mut pzz = weighted_outer(&zs, &sp.weights.cov);
        pzz += r;
        symmetrize(&mut pzz);
        let mut zw = zs.clone();
        for (i, w) in sp.weights.cov.iter().enumerate() {
            zw.column_mut(i).scale_mut(*w);
        }
        let pxz = &sp.deltas * zw.transpose();

        let innovation = z - &zbar;
        let chol = pzz
            .clone()
            .cholesky()
            .ok_or(UkfError::InnovationCovarianceSingular)?;
        let solved = chol.solve(&innovation);
        let mahalanobis_sq = innovation.dot(&solved).max(0.0);
        if !(mahalanobis_sq <= threshold) {
            let report = UpdateReport {
                innovation,
                innovation_cov: pzz,
                mahalanobis_sq,
                threshold,
                accepted: false,
            };
            return Ok((belief.clone(), report));
        }
        // K = Pxz Pzz⁻¹  ⇔  Kᵀ = Pzz⁻¹ Pxzᵀ
        let kt = chol.solve(&pxz.transpose());
        let gain = kt.transpose();
        let correction = &gain * &innovation;
        let mean = belief.mean.boxplus(correction.as_slice());
        let mut cov = belief.cov.clone();
        cov.gemm(-1.0, &gain, &pxz.transpose(), 1.0);
        symmetrize(&mut cov);
        let report = UpdateReport {
            innovation,
            innovation_cov: pzz,
            mahalanobis_sq,
            threshold,
            accepted: true,
        };
        Ok((GaussianBelief { mean, cov }, report))
    }
}

/// Iterative weighted mean on the manifold. Returns the mean and the matrix
/// whose columns are `points[i] ⊟ mean`.
pub fn weighted_mean<S: Manifold>(points: &[S], weights: &[f64]) -> (S, DMatrix<f64>) {
    let n = S::DIM;
    let mut mean = points[0].clone();
    let mut residuals = DMatrix::zeros(n, points.len());
    let mut step = vec![0.0; n];
    let mut prev_norm = f64::INFINITY;
    for _ in 0..MEAN_MAX_ITERS {
        step.iter_mut().for_each(|x| *x = 0.0);
        for (i, p) in points.iter().enumerate() {
            let col = &mut residuals.as_mut_slice()[i * n..(i + 1) * n];
            p.boxminus_into(&mean, col);
            let w = weights[i];
            for (s, c) in step.iter_mut().zip(col.iter()) {
                *s += w * c;
            }
        }
        let norm = step.iter().map(|x| x * x).sum::<f64>().sqrt();
        // With a strongly negative central weight, rounding in the residuals
        // sets a floor on the step; stop once it no longer shrinks.
        if norm < MEAN_TOL || norm >= prev_norm {
            break;
        }
        prev_norm = norm;
        mean = mean.boxplus(&step);
    }
    (mean, residuals)
}

/// `Σ w_i r_i r_iᵀ` over the columns of `r`; exactly symmetric.
pub fn weighted_outer(r: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let (n, np) = r.shape();
    let mut rw = r.clone();
    for (col, wk) in rw.as_mut_slice().chunks_exact_mut(n).zip(w) {
        col.iter_mut().for_each(|x| *x *= wk);
    }
    // rᵀ as a strided view, no copy
    let rt = DMatrixView::<f64, Dyn, Dyn>::from_slice_with_strides(r.as_slice(), np, n, n, 1);
    let mut out = rw * rt;
    symmetrize(&mut out);
    out
}
