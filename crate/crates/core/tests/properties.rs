use gelsolve::characteristics::{h_inverse, phi};
use gelsolve::oracle::{integrate, Flavor, OracleState};
use gelsolve::series::concentrations;
use gelsolve::{ArmMeasure, InitialData, MassMeasure, Model, Solver, SolverConfig};
use proptest::prelude::*;

fn lattice() -> impl Strategy<Value = MassMeasure> {
    prop::collection::vec(0.0f64..1.0, 1..6).prop_filter_map("empty", |w| {
        let atoms: Vec<(f64, f64)> =
            w.iter().enumerate().filter(|(_, &v)| v > 1e-3).map(|(i, &v)| ((i + 1) as f64, v)).collect();
        MassMeasure::discrete(atoms).ok()
    })
}

fn arms() -> impl Strategy<Value = ArmMeasure> {
    // μ on {0, 1, 3, 4} with a mass on at least three arms so gelation happens
    (0.05f64..1.0, 0.0f64..1.0, 0.05f64..1.0, 0.0f64..0.5).prop_map(|(a, b, c, d)| {
        let s = a + b + c + d;
        ArmMeasure::monodisperse(&[a / s, b / s, 0.0, c / s, d / s]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_nonincreasing_and_flory_below(m in lattice(), dt in 0.05f64..1.0) {
        let s = Solver::classic(Model::Smoluchowski, m.clone()).unwrap();
        let f = Solver::classic(Model::Flory, m.clone()).unwrap();
        let m0 = m.moments().mass;
        let mut prev = (m0, m0);
        for i in 1..12 {
            let t = dt * i as f64;
            let (ms, mf) = (s.mass(t).unwrap(), f.mass(t).unwrap());
            prop_assert!(ms <= prev.0 * (1.0 + 1e-12) + 1e-14);
            prop_assert!(mf <= prev.1 * (1.0 + 1e-12) + 1e-14);
            prop_assert!(mf <= ms + 1e-12);
            prev = (ms, mf);
        }
    }

    #[test]
    fn characteristic_round_trip(m in lattice(), t in 0.0f64..6.0, x in 0.0f64..=1.0) {
        let cfg = SolverConfig::default();
        let init = InitialData::Mass(m.clone());
        for model in [Model::Smoluchowski, Model::Flory] {
            let st = Solver::classic(model, m.clone()).unwrap().state(t).unwrap();
            let h = h_inverse(model, &init, &st, x, 1.0, &cfg).unwrap();
            prop_assert!(h >= 0.0 && h <= st.ell + 1e-12);
            let back = phi(model, &init, &st, h, 1.0).unwrap();
            prop_assert!((back - x).abs() <= 10.0 * cfg.root_tol);
        }
    }

    #[test]
    fn arms_count_bounded(a in arms(), t in 0.0f64..10.0) {
        for model in [Model::SmoluchowskiArms, Model::FloryArms] {
            let s = Solver::arms(model, a.clone()).unwrap();
            let st = s.state(t).unwrap();
            prop_assert!(st.arms >= 0.0);
            prop_assert!(st.arms <= a.a0() / (1.0 + a.a0() * t) + 1e-9);
        }
    }

    #[test]
    fn series_concentrations_nonnegative(m in lattice(), t in 0.0f64..4.0) {
        let cfg = SolverConfig::default();
        for model in [Model::Smoluchowski, Model::Flory] {
            for c in concentrations(model, t, &m, 24, &cfg).unwrap() {
                prop_assert!(c >= -1e-12);
            }
        }
    }
}

#[test]
fn ell_decreases_after_gelation() {
    let s = Solver::classic(Model::Smoluchowski, MassMeasure::Exponential).unwrap();
    let tg = s.gel_time();
    let times: Vec<f64> = [1.0, 1.5, 2.0, 4.0, 8.0].iter().map(|k| k * tg).collect();
    let ells: Vec<f64> = s.states(&times).unwrap().iter().map(|st| st.ell).collect();
    assert!((ells[0] - 1.0).abs() < 1e-9);
    assert!(ells.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn oracle_mass_nonincreasing_in_gel_flavour() {
    let init = OracleState::classic(&MassMeasure::Monodisperse, 60).unwrap();
    let times: Vec<f64> = (0..=20).map(|i| 0.15 * i as f64).collect();
    for model in [Model::Smoluchowski, Model::Flory] {
        let traj = integrate(model, Flavor::GelInteracting, &init, &times, 5e-3).unwrap();
        for w in traj.windows(2) {
            assert!(w[1].mass() <= w[0].mass() + 1e-12);
            assert!((w[1].mass() + w[1].gel_mass - 1.0).abs() < 1e-10);
        }
        assert!(traj.iter().all(|s| s.c.iter().all(|&v| v >= 0.0)));
    }
}
