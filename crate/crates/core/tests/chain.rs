use smoothopt_core::cohesive::{bisect_jump, ChainModel, ChainObjective, LoadSchedule, ZoneMap};
use smoothopt_core::Objective;

fn reference_objective(zones: usize) -> ChainObjective {
    ChainObjective::new(ChainModel::reference(), ZoneMap { zones }).unwrap()
}

fn softening_work(steps: usize) -> f64 {
    let mut m = ChainModel::reference();
    m.load = LoadSchedule { final_displacement: 1.5e-3, steps };
    m.simulate().unwrap().mechanical_work()
}

#[test]
fn softening_history_converges_at_second_order() {
    let peak = softening_peak_displacement();
    assert!(peak < 1.5e-3);
    let w: Vec<f64> = [50, 100, 200].iter().map(|&n| softening_work(n)).collect();
    let order = ((w[0] - w[1]) / (w[1] - w[2])).abs().log2();
    assert!(order >= 1.9, "observed order {order}");
}

fn softening_peak_displacement() -> f64 {
    let mut m = ChainModel::reference();
    m.load = LoadSchedule { final_displacement: 1.5e-3, steps: 150 };
    let h = m.simulate().unwrap();
    let peak = h.steps.iter().max_by(|a, b| a.force.total_cmp(&b.force)).unwrap();
    assert!(h.steps.last().unwrap().force < 0.9 * peak.force);
    peak.displacement
}

#[test]
fn reference_slice_has_a_jump() {
    let obj = reference_objective(2);
    let bracket = bisect_jump(&obj, &[0.5, 0.5], 1, 0.58, 0.60, 1e-6).unwrap();
    assert!(bracket.gap() <= 1e-6);
    assert!(bracket.relative_jump() >= 0.05, "jump {}", bracket.relative_jump());
}

#[test]
fn reference_chain_solves_across_the_design_box() {
    let obj = reference_objective(2);
    for i in 0..6 {
        for j in 0..6 {
            let x = [0.5 + 0.3 * i as f64, 0.5 + 0.3 * j as f64];
            let w = obj.evaluate(&x).unwrap();
            assert!(w.is_finite() && w < 0.0, "{x:?} -> {w}");
        }
    }
}

#[test]
fn fully_peeled_states_converge() {
    let mut model = ChainModel::reference();
    model.load = LoadSchedule { final_displacement: 0.1, steps: 100 };
    let obj = ChainObjective::new(model, ZoneMap { zones: 2 }).unwrap();
    let h = obj.history(&[0.5, 1.0]).unwrap();
    assert_eq!(h.steps.len(), 101);
    assert!(h.steps.last().unwrap().force.abs() < 1e-9);
}

#[test]
fn stronger_interface_does_more_work_on_average() {
    let obj = reference_objective(1);
    let weak = obj.evaluate(&[0.5]).unwrap();
    let strong = obj.evaluate(&[2.0]).unwrap();
    assert!(strong < weak);
}

#[test]
fn bisection_rejects_bad_slices() {
    let obj = reference_objective(2);
    assert!(bisect_jump(&obj, &[1.0, 1.0], 2, 0.5, 1.0, 1e-3).is_err());
    assert!(bisect_jump(&obj, &[1.0, 1.0], 0, 1.0, 0.5, 1e-3).is_err());
    assert!(bisect_jump(&obj, &[1.0, 1.0], 0, 0.5, 1.0, 0.0).is_err());
}
