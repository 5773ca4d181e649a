mod common;

use common::props;
use common::*;
use projtest::error::Error;
use projtest::estimators::Dataset;
use projtest::kernels::{KernelOrder, KernelSpec};
use projtest::matrix::Mask;
use projtest::projection::{orthogonality_defect, projection_matrix, QuadratureBudget};

#[test]
fn matches_direct_formula() {
    for (k, (q, p, order)) in shapes().into_iter().enumerate() {
        let inst = random_instance(300 + k as u64, 10, q, p, order);
        let core = inst.core();
        for i in 0..inst.n() {
            for j in 0..inst.n() {
                let ind = if leq(&inst.z[i], &inst.z[j]) { 1.0 } else { 0.0 };
                let want = if core.delta[i] < core.guards.delta_floor {
                    ind
                } else {
                    ind - core.fw[i] * core.gmat.get(i, j) / core.delta[i]
                };
                assert!((core.projmat.get(i, j) - want).abs() < 1e-12);
                if core.delta[i] >= core.guards.delta_floor {
                    let bound = 1.0 + (core.fw[i] * core.gmat.get(i, j) / core.delta[i]).abs();
                    assert!(core.projmat.get(i, j).abs() <= bound);
                }
            }
        }
    }
}

#[test]
fn expanded_projection_agrees() {
    let inst = random_instance(11, 9, 1, 1, KernelOrder::Second);
    let core = inst.core();
    let o = Oracle::new(&inst);
    for i in 0..inst.n() {
        for j in 0..inst.n() {
            assert!((core.projmat.get(i, j) - o.proj(i, j, 1e-12)).abs() < 1e-10);
        }
    }
}

#[test]
fn orthogonality_defect_vanishes() {
    let (p1, p2) = props::orthogonality();
    p1.assert();
    p2.assert();
}

#[test]
fn zero_density_keeps_indicators() {
    let inst = random_instance(2, 8, 1, 1, KernelOrder::Second);
    let core = inst.core();
    let zind = Mask::orthant(&inst.dataset().z().clone());
    let (pm, hits) = projection_matrix(&core.gmat, &vec![0.0; 8], &core.delta, &zind, 1e-12);
    assert_eq!(hits, 0);
    for i in 0..8 {
        for j in 0..8 {
            assert_eq!(pm.get(i, j), if zind.get(i, j) { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn degenerate_row_is_refused() {
    // row 3 has no neighbours in X, so its Δ̂ is zero
    let data = Dataset::from_columns(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.1, 0.2, 9.0], vec![0.3, 0.1, 0.2, 0.0])
        .unwrap();
    let pl = plan(4, KernelOrder::Second, 0.5, 0.5, vec![], vec![]);
    let core = projtest::estimators::build_core(&data, &pl, KernelSpec::second(), Default::default());
    assert_eq!(core.delta[3], 0.0);
    assert_eq!(core.diagnostics.delta_floor_hits, 1);
    for j in 0..4 {
        let want = if core.zind.get(3, j) { 1.0 } else { 0.0 };
        assert_eq!(core.projmat.get(3, j), want);
    }
    let err = orthogonality_defect(&core, 3, 0, QuadratureBudget::default()).unwrap_err();
    assert!(matches!(err, Error::Degenerate(3)));
    assert!(orthogonality_defect(&core, 0, 0, QuadratureBudget::default()).unwrap().abs() < 1e-8);
}
