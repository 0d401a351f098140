use std::f64::consts::FRAC_PI_4;

use ssh_transfer::dynamics::{
    check_convergence, edge_state, evolve, DriveProtocol, EdgeSite, EvolveOptions, Schedule,
};
use ssh_transfer::lattice::{LatticeSpec, NnnPlacement, NnnSites};
use ssh_transfer::sweep::{run_sweep, SweepPlan};

#[test]
fn nnn_ramp_moves_left_edge_to_second_site() {
    let spec = LatticeSpec::new(10).unwrap();
    let init = edge_state(&spec, EdgeSite::L);
    let target = edge_state(&spec, EdgeSite::Lp);
    let options = EvolveOptions::default();
    let mut fidelities = vec![];
    for rate in [1e-2, 1e-3, 1e-4] {
        let protocol = DriveProtocol::new(
            Schedule::NnnRamp {
                theta: FRAC_PI_4,
                rate,
                final_strength: 6.0,
            },
            NnnPlacement::odd(0.0).unwrap(),
        )
        .unwrap();
        let tr = evolve(&spec, &protocol, &init, &target, 2, &options).unwrap();
        let check = check_convergence(&spec, &protocol, &init, &target, &tr, &options).unwrap();
        assert!(check.passed, "rate {rate}: delta {}", check.delta);
        assert!(tr.max_norm_drift() < 1e-8);
        fidelities.push(tr.final_fidelity);
    }
    assert!(fidelities.windows(2).all(|w| w[1] > w[0]), "{fidelities:?}");
    // Step-halved reference run at Ω = 1e-3.
    assert!(
        (fidelities[1] - 0.884_049_12).abs() < 1e-4,
        "{fidelities:?}"
    );
    assert!(fidelities[2] > 0.89);
}

#[test]
fn fast_ramp_falls_well_below_slow_ramp() {
    let plan = SweepPlan {
        omega_grid: vec![1e-3, 2e-2],
        t_grid: vec![0.2],
        check_convergence: true,
        ..SweepPlan::photonic_default()
    };
    let result = run_sweep(&plan, 2).unwrap();
    let slow = result.get(1e-3, 0.2).unwrap();
    let fast = result.get(2e-2, 0.2).unwrap();
    assert!(slow.fidelity >= 0.95, "{}", slow.fidelity);
    // Converged runs give 0.983 and 0.332.
    assert!(
        slow.fidelity - fast.fidelity > 0.5,
        "{} vs {}",
        slow.fidelity,
        fast.fidelity
    );
    assert!(result.rows.iter().all(|r| r.converged.as_str() == "true"));
}

#[test]
fn t_zero_column_improves_as_ramp_slows() {
    let plan = SweepPlan {
        t_grid: vec![0.0],
        ..SweepPlan::photonic_default()
    };
    let result = run_sweep(&plan, 2).unwrap();
    assert_eq!(result.rows.len(), 16);
    // Rows are ordered by increasing Ω.
    for w in result.rows.windows(2) {
        assert!(
            w[0].fidelity >= w[1].fidelity - 1e-3,
            "Ω {} → {}: {} vs {}",
            w[0].omega,
            w[1].omega,
            w[0].fidelity,
            w[1].fidelity
        );
    }
}

#[test]
fn even_sites_admit_a_good_rate_at_large_t() {
    let plan = SweepPlan {
        t_grid: vec![6.0],
        ..SweepPlan::even_sites_default()
    };
    assert_eq!(plan.placement, NnnSites::Even);
    let result = run_sweep(&plan, 2).unwrap();
    let best = result.rows.iter().map(|r| r.fidelity).fold(0.0, f64::max);
    assert!(best >= 0.9, "best fidelity {best}");
}

#[test]
fn transferred_weight_lands_on_the_far_edge() {
    let spec = LatticeSpec::new(10).unwrap();
    let protocol = DriveProtocol::theta_ramp(1e-3, NnnPlacement::none()).unwrap();
    let tr = evolve(
        &spec,
        &protocol,
        &edge_state(&spec, EdgeSite::L),
        &edge_state(&spec, EdgeSite::R),
        5,
        &EvolveOptions::default(),
    )
    .unwrap();
    let last = tr.populations.last().unwrap();
    assert!(last[20] >= tr.final_fidelity - 1e-3);
    assert!(tr.final_fidelity > 0.999);
}
