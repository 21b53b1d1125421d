//! Randomized physical properties of the equations of motion.

use nlrl_core::{
    evolve, make_params, mean_displacement, norm_rate_residual, InitialStateSpec, LatticeState,
    ModelKind, SimConfig, Sublattice,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn run(kind: ModelKind, delta_g: f64, gamma: f64, u: f64, cfg: &SimConfig) -> LatticeState {
    let p = make_params(kind, delta_g, gamma, u, false).unwrap();
    evolve(&p, cfg).unwrap().final_state
}

fn model() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(ModelKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Reflecting the lattice through the central neutral site swaps the
    /// intracell and intercell bonds, so D at delta_g mirrors C at -delta_g
    /// and B mirrors A, with every decay cell m sent to 1 - m.
    #[test]
    fn reflection_maps_intracell_models_onto_intercell_ones(
        delta_g in -0.45f64..0.45,
        u in 0.0f64..5.0,
        gamma in 0.2f64..2.0,
    ) {
        let cfg = SimConfig::new(30, 1e-2, 5.0, InitialStateSpec::default()).unwrap();
        for (intra, inter) in [(ModelKind::D, ModelKind::C), (ModelKind::B, ModelKind::A)] {
            let s = run(intra, delta_g, gamma, u, &cfg);
            let r = run(inter, -delta_g, gamma, u, &cfg);
            for m in -29..=29i64 {
                let i = (m + 30) as usize;
                let j = (1 - m + 30) as usize;
                prop_assert!((s.decay[i] - r.decay[j]).abs() < 1e-12);
                prop_assert!((s.b[i].norm_sqr() - r.b[(30 - m) as usize].norm_sqr()).abs() < 1e-12);
            }
            let ds = nlrl_core::observables::displacement_of_state(&s);
            let dr = nlrl_core::observables::displacement_of_state(&r);
            prop_assert!((ds - (r.total_decay() - dr)).abs() < 1e-10);
        }
    }

    #[test]
    fn norm_plus_decay_is_conserved(
        kind in model(),
        delta_g in -0.5f64..0.5,
        u in 0.0f64..5.0,
        gamma in 0.0f64..3.0,
        m0 in -3i64..=3,
        on_a in any::<bool>(),
    ) {
        let u = if kind == ModelKind::Linear { 0.0 } else { u };
        let sublattice = if on_a { Sublattice::A } else { Sublattice::B };
        let cfg = SimConfig::new(20, 5e-3, 6.0, InitialStateSpec::SingleSite { m: m0, sublattice }).unwrap();
        let s = run(kind, delta_g, gamma, u, &cfg);
        prop_assert!((s.norm() + s.total_decay() - 1.0).abs() < 1e-6);
        prop_assert!(s.decay.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn custom_superpositions_are_normalized_and_conserved(
        kind in model(),
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        u in 0.0f64..3.0,
    ) {
        prop_assume!(amps.iter().map(|(r, i)| r * r + i * i).sum::<f64>() > 1e-3);
        let u = if kind == ModelKind::Linear { 0.0 } else { u };
        let sites = [(0, Sublattice::B), (0, Sublattice::A), (1, Sublattice::A), (-1, Sublattice::B)];
        let initial = InitialStateSpec::Custom(
            sites.iter().zip(&amps).map(|(&(m, s), &(r, i))| (m, s, Complex64::new(r, i))).collect(),
        );
        let cfg = SimConfig::new(15, 5e-3, 4.0, initial).unwrap();
        let p = make_params(kind, 0.1, 1.0, u, false).unwrap();
        let traj = evolve(&p, &cfg).unwrap();
        prop_assert!((traj.samples[0].norm() - 1.0).abs() < 1e-12);
        let f = &traj.final_state;
        prop_assert!((f.norm() + f.total_decay() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn norm_rate_law_holds_on_random_states(
        kind in model(),
        delta_g in -0.5f64..0.5,
        u in 0.0f64..5.0,
        gamma in 0.0f64..3.0,
        re in prop::collection::vec(-1.0f64..1.0, 22),
        im in prop::collection::vec(-1.0f64..1.0, 22),
    ) {
        let u = if kind == ModelKind::Linear { 0.0 } else { u };
        let p = make_params(kind, delta_g, gamma, u, true).unwrap();
        let mut s = LatticeState::zeros(5);
        for k in 0..11 {
            s.a[k] = Complex64::new(re[k], im[k]);
            s.b[k] = Complex64::new(re[11 + k], im[11 + k]);
        }
        prop_assert!(norm_rate_residual(&p, &s).unwrap() < 1e-12);
    }

    /// Lossless evolution conserves the norm whatever the nonlinearity.
    #[test]
    fn lossless_runs_keep_unit_norm(kind in model(), delta_g in -0.5f64..0.5, u in 0.0f64..5.0) {
        let u = if kind == ModelKind::Linear { 0.0 } else { u };
        let cfg = SimConfig::new(20, 1e-3, 5.0, InitialStateSpec::default()).unwrap();
        let s = run(kind, delta_g, 0.0, u, &cfg);
        prop_assert!((s.norm() - 1.0).abs() < 1e-8);
        prop_assert!(s.decay.iter().all(|&d| d == 0.0));
    }
}

#[test]
fn linear_mean_displacement_is_insensitive_to_sign_flip() {
    // Flipping both couplings is a gauge transformation of the linear lattice.
    let cfg = SimConfig::new(60, 1e-3, 25.0, InitialStateSpec::default()).unwrap();
    for delta_g in [-0.3, 0.1, 0.3] {
        let plain = make_params(ModelKind::Linear, delta_g, 2.0, 0.0, false).unwrap();
        let flipped = make_params(ModelKind::Linear, delta_g, 2.0, 0.0, true).unwrap();
        let a = mean_displacement(&evolve(&plain, &cfg).unwrap()).value;
        let b = mean_displacement(&evolve(&flipped, &cfg).unwrap()).value;
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
