//! Martingale moment-condition tests and the distributional checks used by
//! the proofs: normality, log-normality, Bernstein independence, symmetry.
//!
//! The conditional expectation `E(X_t - X_s | F_s) = 0` is probed through
//! the unconditional moments `E[(X_t - X_s) phi(W_s)] = 0` for a fixed
//! dictionary of instruments `phi`. Only `W_s` is conditioned on, which is
//! enough for processes that are functions of the current Brownian value.

mod dist;
mod fit;
mod martingale;

pub use dist::{
    bernstein_check, lognormality_check, normality_check, symmetry_check, DistReport, DistTest, MIN_SAMPLES,
    MOMENT_SIGMAS, NORMALITY_KS_BAND, SYMMETRY_KS_BAND,
};
pub use fit::{fit_linear, fit_linear_with, LinearFit};
pub use martingale::{
    increment_identity_defect, test_martingale, CellStat, Instrument, InstrumentSet, MartingaleVerdict,
    TailDiagnostics, MIN_PATHS,
};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::error::Error;
    use crate::functions::{linspace, FunctionSpec};
    use crate::simulate::{generate, generate_pair, standard_normal_samples, Label, SimConfig};
    use crate::transforms::{build, TransformKind};

    fn w_ensemble(seed: u64, n: usize, grid: Vec<f64>) -> Arc<crate::simulate::PathEnsemble> {
        Arc::new(generate(&SimConfig::new(seed, n, grid), Label::W).unwrap())
    }

    fn verdict(spec: FunctionSpec, seed: u64) -> MartingaleVerdict {
        let e = w_ensemble(seed, 200_000, vec![0.5, 1.0]);
        let p = build(TransformKind::FofW, &spec.into(), e).unwrap();
        test_martingale(&p, &InstrumentSet::default(), 0.01).unwrap()
    }

    #[test]
    fn linear_passes() {
        let v = verdict(FunctionSpec::linear(2.5), 1);
        assert!(v.pass, "{v:?}");
        assert_eq!(v.pairs.len(), 5);
        assert_eq!(v.seeds, vec![1]);
    }

    #[test]
    fn quadratic_drift_is_detected() {
        let v = verdict(FunctionSpec::quadratic(1.0), 2);
        assert!(!v.pass);
        let c = v.cell(0.5, 1.0, Instrument::Const1).unwrap();
        assert!((c.mean - 0.5).abs() < 0.02, "{c:?}");
        assert!(c.z.abs() > 5.0);
    }

    #[test]
    fn cubic_conditional_drift_is_detected() {
        let v = verdict(FunctionSpec::cubic(), 3);
        assert!(!v.pass);
        let c = v.cell(0.5, 1.0, Instrument::Linear).unwrap();
        assert!((c.mean - 0.75).abs() < 0.05, "{c:?}");
        assert!(c.z.abs() > 5.0);
    }

    #[test]
    fn verdicts_are_bit_stable() {
        let a = verdict(FunctionSpec::cubic(), 4);
        let b = verdict(FunctionSpec::cubic(), 4);
        for (x, y) in a.pairs.iter().zip(&b.pairs) {
            assert_eq!(x.z.to_bits(), y.z.to_bits());
        }
    }

    #[test]
    fn martingale_preconditions() {
        let small = w_ensemble(1, 100, vec![0.5, 1.0]);
        let p = build(TransformKind::FofW, &FunctionSpec::linear(1.0).into(), small).unwrap();
        assert!(matches!(
            test_martingale(&p, &InstrumentSet::default(), 0.01),
            Err(Error::InsufficientSamples(_))
        ));
        let one_time = w_ensemble(1, 10_000, vec![1.0]);
        let p = build(TransformKind::FofW, &FunctionSpec::linear(1.0).into(), one_time).unwrap();
        assert!(test_martingale(&p, &InstrumentSet::default(), 0.01).is_err());
        let e = w_ensemble(1, 10_000, vec![0.5, 1.0]);
        let p = build(TransformKind::LogFofW, &FunctionSpec::linear(1.0).into(), e).unwrap();
        assert!(matches!(
            test_martingale(&p, &InstrumentSet::default(), 0.01),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn zero_candidate_has_zero_scores() {
        let v = verdict(FunctionSpec::zero(), 5);
        assert!(v.pass);
        assert!(v.pairs.iter().all(|c| c.z == 0.0 && c.p == 1.0));
    }

    #[test]
    fn increment_identity() {
        let e = w_ensemble(6, 1000, vec![0.25, 0.5, 1.0]);
        let defect = |kind, spec: FunctionSpec| {
            increment_identity_defect(&build(kind, &spec.into(), e.clone()).unwrap()).unwrap()
        };
        assert!(defect(TransformKind::FofW, FunctionSpec::linear(1.5)) < 1e-12);
        assert!(defect(TransformKind::LogFofW, FunctionSpec::exponential(-2.0)) < 1e-12);
        assert!(defect(TransformKind::FofExpW, FunctionSpec::logarithmic(3.0)) < 1e-12);
        assert!(defect(TransformKind::LogFofExpW, FunctionSpec::power(0.5)) < 1e-12);
        let q = defect(TransformKind::FofW, FunctionSpec::quadratic(1.0));
        // W_t^2 - W_s^2 - (W_t - W_s)^2 = 2 W_s (W_t - W_s)
        let mut expected = 0.0f64;
        for i in 0..e.n_paths() {
            for si in 0..3 {
                for ti in si + 1..3 {
                    let (ws, wt) = (e.value(i, si), e.value(i, ti));
                    expected = expected.max((2.0 * ws * (wt - ws)).abs());
                }
            }
        }
        assert!(q > 0.0);
        assert!((q - expected).abs() < 1e-12 * (1.0 + expected));
    }

    #[test]
    fn bernstein_linear_passes_cubic_fails() {
        let (w, b) = generate_pair(&SimConfig::new(8, 200_000, vec![1.0])).unwrap();
        let (x, y) = (w.column(0), b.column(0));
        let lin = bernstein_check(&x, &y, 0.01).unwrap();
        assert!(lin.pass, "{lin:?}");
        let cube = |v: &[f64]| v.iter().map(|a| a * a * a).collect::<Vec<_>>();
        let cub = bernstein_check(&cube(&x), &cube(&y), 0.01).unwrap();
        assert!(!cub.pass);
        assert!(cub.stat("zscore_z2_v2") > 5.0);
    }

    #[test]
    fn bernstein_rejects_constant_and_mismatched() {
        let c = vec![1.0; 20_000];
        assert!(matches!(
            bernstein_check(&c, &c, 0.01),
            Err(Error::InsufficientSamples(_))
        ));
        assert!(bernstein_check(&c[..10], &c[..11], 0.01).is_err());
    }

    #[test]
    fn normality_examples() {
        let w = w_ensemble(9, 100_000, vec![1.0]).column(0);
        let doubled: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
        assert!(normality_check(&doubled).unwrap().pass);
        let squares: Vec<f64> = w.iter().map(|x| x * x).collect();
        let sq = normality_check(&squares).unwrap();
        assert!(!sq.pass);
        assert!((sq.stat("skewness") - 8f64.sqrt()).abs() < 0.25, "{sq:?}");
        let lognormal: Vec<f64> = w.iter().map(|x| x.exp()).collect();
        assert!(!normality_check(&lognormal).unwrap().pass);
        assert!(lognormality_check(&lognormal).unwrap().pass);
        assert!(lognormality_check(&w).is_err());
        assert!(normality_check(&w[..100]).is_err());
    }

    #[test]
    fn symmetry_examples() {
        let e = w_ensemble(10, 100_000, vec![0.5, 1.0]);
        let inc: Vec<f64> = e.column(1).iter().zip(e.column(0)).map(|(t, s)| t - s).collect();
        let odd: Vec<f64> = inc.iter().map(|d| 3.0 * d).collect();
        assert!(symmetry_check(&odd).unwrap().pass);
        let sq: Vec<f64> = inc.iter().map(|d| d * d).collect();
        let rep = symmetry_check(&sq).unwrap();
        assert!(!rep.pass);
        assert!((rep.stat("mean") - 0.5).abs() < 0.01);
        assert!(symmetry_check(&vec![0.0; 10_000]).unwrap().pass);
    }

    #[test]
    fn standard_normals_are_normal() {
        assert!(normality_check(&standard_normal_samples(3, 50_000)).unwrap().pass);
    }

    #[test]
    fn linear_fits() {
        let grid = linspace(-5.0, 5.0, 41);
        let f = fit_linear(&FunctionSpec::linear(2.5), &grid).unwrap();
        assert!((f.a - 2.5).abs() < 1e-14 && f.b.abs() < 1e-14 && f.max_deviation < 1e-13);
        let f = fit_linear(&FunctionSpec::affine(1.0, 3.0), &grid).unwrap();
        assert!((f.a - 1.0).abs() < 1e-14 && (f.b - 3.0).abs() < 1e-14 && f.max_deviation < 1e-13);
        assert!(fit_linear(&FunctionSpec::linear(1.0), &[1.0, 1.0, 2.0]).is_err());
        assert!(fit_linear(&FunctionSpec::logarithmic(1.0), &grid).is_err());
    }
}
