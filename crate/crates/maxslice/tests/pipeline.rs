//! End-to-end closure of the deformation pipeline at smoke-test resolution:
//! tilt a maximal base into small-trace data, evolve it, solve for the
//! maximal graph, and verify the graph diagnostics and trace reduction.
//! (Full conserved-quantity closure runs in the acceptance suite at the
//! production resolution.)

use maxslice::datasets::{make_schwarzschild_stuffed, make_tilted, TiltProfile};
use maxslice::evolution::{build_cauchy_data, evolve, EvolveConfig};
use maxslice::fields::{Grid3, SphereRule};
use maxslice::maximal::{ift_solve, induced_data, SolverConfig};
use maxslice::physics::{adm_mass, sup_outside, trace_field};
use std::sync::Arc;

#[test]
fn tilted_schwarzschild_round_trip() {
    let grid = Arc::new(Grid3::cube(48, 18.0, 2).unwrap());
    let base = make_schwarzschild_stuffed(grid.clone(), 1.0, 1.0).unwrap();
    let tilt = TiltProfile { amplitude: 1e-2, width: 2.5, center: [0.0, 0.0, 4.0] };
    let ecfg = EvolveConfig { steps: 2, diagnostics: false, ..Default::default() };

    let tilted = make_tilted(&base, &tilt, &ecfg, 0.2, 1e-8).unwrap();
    // Trace gate region: outside the stuffing ball and its causal margin.
    let tr_in = trace_field(&tilted.data);
    let tr_in_sup = sup_outside(&tr_in, 4.0);
    assert!(
        tr_in_sup > 1e-5 && tr_in_sup < 0.05,
        "tilted trace out of expected band: {tr_in_sup}"
    );

    // The tilted slice of the same spacetime must carry the same mass.
    let radii = [6.0, 7.5, 9.0];
    let m_base = adm_mass(&base, &radii, SphereRule::default()).unwrap();
    let m_tilt = adm_mass(&tilted.data, &radii, SphereRule::default()).unwrap();
    assert!(
        (m_base.extrapolated - 1.0).abs() < 0.01,
        "stuffed mass {} should stay 1",
        m_base.extrapolated
    );
    assert!(
        (m_base.extrapolated - m_tilt.extrapolated).abs() < 0.01 * m_base.extrapolated.abs(),
        "tilt changed the mass: {} vs {}",
        m_base.extrapolated,
        m_tilt.extrapolated
    );

    // Forward pipeline: evolve the tilted data and slice it maximally.
    let cd = build_cauchy_data(&tilted.data).unwrap();
    let run = evolve(&cd, &ecfg).unwrap();
    let cfg = SolverConfig { residual_taper: Some((2.5, 4.0)), ..Default::default() };
    let (u, log) = ift_solve(&run.slab, &tilted.data, &cfg).unwrap();
    println!("ift log: {log:?}");
    assert!(log.converged);
    for step in &log.steps {
        if let Some(r) = step.contraction_ratio {
            assert!(r <= 0.5, "contraction ratio {r}");
        }
        assert!(step.kernel_overlap < 1e-8, "kernel overlap {}", step.kernel_overlap);
    }

    let (out, q) = induced_data(&run.slab, &u, cfg.kappa).unwrap();
    let tr_out = trace_field(&out);
    let tr_out_sup = sup_outside(&tr_out, 4.0);
    assert!(
        tr_out_sup < tr_in_sup / 100.0,
        "trace reduction only {} -> {}",
        tr_in_sup,
        tr_out_sup
    );
    assert!(q.normal_check < 1e-10);
    assert!(q.inverse_check < 1e-11);
}
