use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Arm, JointSpectrum};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtResult {
    /// Schmidt weights λ_k, descending, summing to one.
    pub coefficients: Vec<f64>,
    /// `Σ λ_k²`.
    pub purity: f64,
    /// `K = 1 / Σ λ_k²`.
    pub schmidt_number: f64,
}

/// Rows and columns whose amplitude stays below this fraction of the peak
/// are dropped before the decomposition.
const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Singular-value decomposition of the discretised JSA.
pub fn schmidt_decompose(js: &JointSpectrum) -> Result<SchmidtResult> {
    let a = support(&js.amplitude) * Complex64::from(js.cell_area().sqrt());
    let svd = a
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD of the joint spectrum did not converge".into()))?;
    let mut weights: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("joint spectrum has zero singular values".into()));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    weights.sort_by(|a, b| b.total_cmp(a));
    let purity: f64 = weights.iter().map(|w| w * w).sum();
    Ok(SchmidtResult {
        coefficients: weights,
        purity,
        schmidt_number: 1.0 / purity,
    })
}

fn support(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let peak = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = SUPPORT_THRESHOLD * peak;
    let rows: Vec<usize> = (0..m.nrows()).filter(|&r| m.row(r).iter().any(|c| c.norm() > cut)).collect();
    let cols: Vec<usize> = (0..m.ncols()).filter(|&c| m.column(c).iter().any(|v| v.norm() > cut)).collect();
    DMatrix::from_fn(rows.len().max(1), cols.len().max(1), |r, c| match (rows.get(r), cols.get(c)) {
        (Some(&r), Some(&c)) => m[(r, c)],
        _ => Complex64::new(0.0, 0.0),
    })
}

/// Reduced density matrix of one arm on its own grid, unit trace:
/// `ρ_jk = Σ_m a_mj a*_mk` (idler) with `a = f √(Δω_s Δω_i)`.
pub fn reduced_density_matrix(js: &JointSpectrum, arm: Arm) -> DMatrix<Complex64> {
    let a = &js.amplitude * Complex64::from(js.cell_area().sqrt());
    match arm {
        Arm::Signal => &a * a.adjoint(),
        Arm::Idler => a.transpose() * a.conjugate(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::SellmeierModel;
    use crate::phasematch::{solve_phase_matching, WaveguideSpec};
    use crate::spectrum::{
        apply_filter_set, build_jsa, FilterSet, FrequencyGrid, GridConfig, PumpEnvelope,
    };
    use crate::units::wavelength_to_omega;

    /// Purity as Tr(ρ²) accumulated directly from the amplitudes, with no
    /// linear-algebra library involved.
    fn purity_by_trace(js: &JointSpectrum) -> f64 {
        let (ns, ni) = (js.signal.len, js.idler.len);
        let da = js.cell_area();
        let mut rho = vec![Complex64::new(0.0, 0.0); ni * ni];
        for j in 0..ni {
            for k in 0..ni {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..ns {
                    acc += js.amplitude[(m, j)] * js.amplitude[(m, k)].conj();
                }
                rho[j * ni + k] = acc * da;
            }
        }
        let mut tr = 0.0;
        for j in 0..ni {
            for k in 0..ni {
                tr += (rho[j * ni + k] * rho[k * ni + j]).re;
            }
        }
        tr
    }

    fn grid(center: f64, n: usize) -> FrequencyGrid {
        FrequencyGrid::centered(center, 1.2e13, n).unwrap()
    }

    #[test]
    fn separable_state_is_pure() {
        let (cs, ci) = (wavelength_to_omega(730e-9), wavelength_to_omega(830e-9));
        let js = JointSpectrum::from_fn(grid(cs, 96), grid(ci, 80), |a, b| {
            let x = (a - cs) / 2e12;
            let y = (b - ci) / 3e12;
            Complex64::from_polar((-x * x - y * y).exp(), 0.3 * x + 0.1 * y * y)
        })
        .unwrap();
        let r = schmidt_decompose(&js).unwrap();
        assert!((r.purity - 1.0).abs() < 1e-10);
        assert!((r.schmidt_number - 1.0).abs() < 1e-10);
        assert!((r.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlated_gaussian_matches_closed_form() {
        // f ∝ exp(−(u² + v²)/2 − c·u·v): a bivariate Gaussian with purity
        // √(1 − c²) in the continuum limit.
        let c = 0.6;
        let (cs, ci) = (wavelength_to_omega(730e-9), wavelength_to_omega(830e-9));
        let scale = 1e12;
        let js = JointSpectrum::from_fn(grid(cs, 160), grid(ci, 160), |a, b| {
            let u = (a - cs) / scale;
            let v = (b - ci) / scale;
            Complex64::from((-(u * u + v * v) - 2.0 * c * u * v).exp())
        })
        .unwrap();
        let r = schmidt_decompose(&js).unwrap();
        let expected = (1.0 - c * c).sqrt();
        assert!((r.purity - expected).abs() < 1e-6, "{} vs {expected}", r.purity);
        assert!((purity_by_trace(&js) - r.purity).abs() < 1e-9);
    }

    #[test]
    fn reduced_density_matrices_are_hermitian_unit_trace() {
        let (cs, ci) = (wavelength_to_omega(730e-9), wavelength_to_omega(830e-9));
        let js = JointSpectrum::from_fn(grid(cs, 48), grid(ci, 40), |a, b| {
            let u = (a - cs) / 3e12;
            let v = (b - ci) / 3e12;
            Complex64::from_polar((-(u + v).powi(2) - 0.2 * (u - v).powi(2)).exp(), u)
        })
        .unwrap();
        for arm in [Arm::Signal, Arm::Idler] {
            let rho = reduced_density_matrix(&js, arm);
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!((&rho - rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max) < 1e-14);
        }
        let ps = (reduced_density_matrix(&js, Arm::Signal).map(|c| c) * reduced_density_matrix(&js, Arm::Signal)).trace().re;
        let pi = (reduced_density_matrix(&js, Arm::Idler) * reduced_density_matrix(&js, Arm::Idler)).trace().re;
        assert!((ps - pi).abs() < 1e-12);
        assert!((schmidt_decompose(&js).unwrap().purity - pi).abs() < 1e-10);
    }

    #[test]
    fn waveguide_purity_and_filtering() {
        let model = SellmeierModel::fused_silica();
        let spec = WaveguideSpec::default();
        let pump = PumpEnvelope::default();
        let js = build_jsa(&model, &spec, &pump, &GridConfig::default()).unwrap();
        let raw = schmidt_decompose(&js).unwrap();
        assert!((raw.purity - purity_by_trace(&js)).abs() < 1e-9);
        assert!(raw.purity > 0.2 && raw.purity < 0.6, "{}", raw.purity);

        let sol = solve_phase_matching(&model, &spec).unwrap();
        let narrow = apply_filter_set(&js, &FilterSet::hom(spec.pump_wavelength, &sol).unwrap()).unwrap();
        let filtered = schmidt_decompose(&narrow).unwrap();
        assert!(filtered.purity > 0.99, "{}", filtered.purity);
        assert!(filtered.purity > raw.purity);
    }

    #[test]
    fn filtered_purity_is_grid_converged() {
        let model = SellmeierModel::fused_silica();
        let spec = WaveguideSpec::default();
        let pump = PumpEnvelope::default();
        let sol = solve_phase_matching(&model, &spec).unwrap();
        let set = FilterSet::hom(spec.pump_wavelength, &sol).unwrap();
        let p = |n| {
            let js = build_jsa(&model, &spec, &pump, &GridConfig::square(n)).unwrap();
            schmidt_decompose(&apply_filter_set(&js, &set).unwrap()).unwrap().purity
        };
        let (coarse, fine) = (p(256), p(512));
        assert!((coarse - fine).abs() < 0.01, "{coarse} vs {fine}");
    }
}
