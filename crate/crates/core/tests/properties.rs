use ensemble_eev::ensemble::{mean_of, mixing_length, sample_uniform_viscosity, EnsembleState, ViscosityEnsemble};
use ensemble_eev::fem::{FieldCoefficients, FieldRole, TaylorHoodSpace};
use ensemble_eev::linalg::Factorization;
use ensemble_eev::mesh::{cavity_mesh, refine, step_channel_mesh, unit_square_mesh, BoundaryMarker};
use ensemble_eev::scheme::{
    assemble_operator, convective_form, divergence_pairing, velocity_at_points, weak_trilinear, Assembler,
    EnsembleStepper, FlowProblem, SchemeDescriptor, StepParams, SystemLayout,
};
use ensemble_eev::stochastics::{
    perturbation_coeffs, smolyak_grid, KlViscosity, PerturbationMode, PerturbationSpec,
};
use ensemble_eev::verification::{error_norm_2_1, h1_error_sq, kinetic_energy, ManufacturedProblem, ManufacturedSolution, NormKind};
use proptest::prelude::*;

fn space(n: usize) -> TaylorHoodSpace {
    TaylorHoodSpace::new(unit_square_mesh(n).unwrap()).unwrap()
}

/// Smooth velocity from six coefficients.
fn field(space: &TaylorHoodSpace, c: &[f64]) -> Vec<f64> {
    space
        .interpolate_velocity(|x| {
            [
                c[0] + c[1] * x[1] + c[2] * (3.0 * x[0]).sin() * x[1],
                c[3] * x[0] * x[0] + c[4] * (2.0 * x[1]).cos() + c[5] * x[0] * x[1],
            ]
        })
        .values
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 6)
}

fn random_state(space: &TaylorHoodSpace, seeds: &[Vec<f64>], levels: usize) -> EnsembleState {
    let nj = seeds.len();
    let p = vec![FieldCoefficients::zeros(space, FieldRole::Pressure); nj];
    let old: Vec<_> = seeds.iter().map(|c| FieldCoefficients::velocity(field(space, &c.iter().map(|v| 0.5 * v).collect::<Vec<_>>()))).collect();
    let new: Vec<_> = seeds.iter().map(|c| FieldCoefficients::velocity(field(space, c))).collect();
    let mut s = EnsembleState::new(if levels > 1 { old } else { new.clone() }, p.clone(), 0.0).unwrap();
    if levels > 1 {
        s.push_level(new, p, 0.01, levels);
    }
    s
}

struct Quiet {
    n: usize,
}

impl FlowProblem for Quiet {
    fn n_realizations(&self) -> usize {
        self.n
    }
    fn forcing(&self, _j: usize, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn boundary_value(&self, _j: usize, _m: BoundaryMarker, _x: [f64; 2], _t: f64) -> Option<[f64; 2]> {
        Some([0.0; 2])
    }
    fn initial_velocity(&self, _j: usize, _x: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
}

fn manufactured(k: Vec<f64>, nu: Vec<f64>) -> (ManufacturedProblem, ViscosityEnsemble) {
    let v = ViscosityEnsemble::from_constants(nu.clone()).unwrap();
    (ManufacturedProblem::new(k, 1e-2, nu).unwrap(), v)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trilinear_vanishes_on_repeated_argument(a in coeffs(), b in coeffs()) {
        let s = space(3);
        let u = field(&s, &a);
        let v = field(&s, &b);
        let scale = 1.0 + a.iter().chain(&b).map(|x| x.abs()).sum::<f64>().powi(3);
        prop_assert!(weak_trilinear(&s, &u, &v, &v).abs() <= 1e-12 * scale);
    }

    #[test]
    fn trilinear_identity_with_vanishing_trace(a in coeffs(), b in coeffs(), c in coeffs()) {
        let s = space(3);
        let u = field(&s, &a);
        let v = field(&s, &b);
        let mut w = field(&s, &c);
        for &d in s.dirichlet_dofs() {
            w[d] = 0.0;
        }
        let lhs = weak_trilinear(&s, &u, &v, &w);
        let rhs = convective_form(&s, &u, &v, &w) + divergence_pairing(&s, &u, &v, &w);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn bdf2_identity(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64) {
        let lhs = 0.5 * (3.0 * a - 4.0 * b + c) * a;
        let rhs = 0.25 * (a * a + (2.0 * a - b).powi(2)) - 0.25 * (b * b + (2.0 * b - c).powi(2))
            + 0.25 * (a - 2.0 * b + c).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * (a * a + b * b + c * c).max(1.0));
    }

    #[test]
    fn manufactured_velocity_is_solenoidal(x in 0.0..1.0f64, y in 0.0..1.0f64, t in 0.0..2.0f64) {
        prop_assert!(ManufacturedSolution.divergence([x, y], t).abs() <= 1e-13);
    }

    #[test]
    fn convection_block_is_skew(a in coeffs(), c in coeffs()) {
        let s = space(3);
        let layout = SystemLayout::new(&s).unwrap();
        let conv = velocity_at_points(&s, &field(&s, &a));
        let zero = vec![0.0; conv.len()];
        let m = assemble_operator(&s, &layout, &conv, &zero, 0.0, 0.0);
        let mut chi = vec![0.0; s.n_total()];
        chi[..s.n_velocity()].copy_from_slice(&field(&s, &c));
        for &d in s.dirichlet_dofs() {
            chi[d] = 0.0;
        }
        let q: f64 = chi.iter().zip(m.matvec(&chi)).map(|(x, y)| x * y).sum();
        prop_assert!(q.abs() <= 1e-10 * (1.0 + chi.iter().map(|v| v * v).sum::<f64>()));
    }

    #[test]
    fn per_realization_matrices_match_shared(seeds in prop::collection::vec(coeffs(), 3), bdf2 in any::<bool>()) {
        let s = space(2);
        let (problem, visc) = manufactured(vec![-0.7, 0.1, 0.9], vec![1e-2, 2e-2, 1.5e-2]);
        let d = if bdf2 { SchemeDescriptor::bdf2_eev() } else { SchemeDescriptor::be_eev() };
        let params = StepParams::new(0.01, 5.0, 1.0, 1.0).unwrap();
        let state = random_state(&s, &seeds, d.history_depth);
        let asm = Assembler::new(&s, &problem, &visc).unwrap();
        let shared = asm.assemble_step_system(&state, &d, &params).unwrap();
        for j in 0..3 {
            // rebuild realization j's operator from the ensemble statistics
            let extrap: Vec<_> = (0..3).map(|i| state.extrapolation(i, &d).unwrap()).collect();
            let mean = mean_of(&extrap);
            let ml = mixing_length(&s, &state.fluctuations(&d).unwrap(), params.mu, params.dt);
            let conv = velocity_at_points(&s, &mean.values);
            let nu: Vec<f64> = ml.nu_t.iter().enumerate().map(|(q, nt)| visc.nu_bar(q) + 2.0 * nt).collect();
            let mut a = assemble_operator(&s, &asm.layout, &conv, &nu, d.beta / params.dt, params.gamma);
            let _ = asm.constraints(j, state.time + params.dt).unwrap();
            a.constrain_identity(asm.layout.constrained());
            prop_assert_eq!(&a.values, &shared.matrix.values);
        }
    }

    #[test]
    fn solves_are_linear(a in -3.0..3.0f64, c in -3.0..3.0f64, seeds in prop::collection::vec(coeffs(), 2)) {
        let s = space(2);
        let (problem, visc) = manufactured(vec![-1.0, 1.0], vec![1e-2, 3e-2]);
        let d = SchemeDescriptor::be_eev();
        let params = StepParams::new(0.05, 10.0, 1.0, 1.0).unwrap();
        let state = random_state(&s, &seeds, 1);
        let sys = Assembler::new(&s, &problem, &visc).unwrap().assemble_step_system(&state, &d, &params).unwrap();
        let f = Factorization::new(&sys.matrix).unwrap();
        let (b1, b2) = (&sys.rhs.columns[0], &sys.rhs.columns[1]);
        let combo: Vec<f64> = b1.iter().zip(b2).map(|(x, y)| a * x + c * y).collect();
        let x = f.solve(&combo).unwrap();
        let (x1, x2) = (f.solve(b1).unwrap(), f.solve(b2).unwrap());
        let want: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + c * q).collect();
        let scale = want.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let err = x.iter().zip(&want).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-9 * scale);
    }

    #[test]
    fn mixing_length_is_label_invariant(seeds in prop::collection::vec(coeffs(), 4), mu in 0.1..3.0f64) {
        let s = space(2);
        let f: Vec<_> = seeds.iter().map(|c| FieldCoefficients::velocity(field(&s, c))).collect();
        let mut g = f.clone();
        g.reverse();
        g.swap(0, 2);
        let a = mixing_length(&s, &f, mu, 0.1);
        let b = mixing_length(&s, &g, mu, 0.1);
        for q in 0..a.length.len() {
            prop_assert!((a.length[q] - b.length[q]).abs() <= 1e-12 * (1.0 + a.length[q]));
            prop_assert_eq!(a.nu_t[q], mu * 0.1 * a.length[q] * a.length[q]);
        }
    }

    #[test]
    fn viscosity_statistics(seed in any::<u64>(), n in 2usize..30) {
        let v = sample_uniform_viscosity(1e-3, 0.2, n, seed).unwrap();
        let nu = v.constants().unwrap();
        let bar = nu.iter().sum::<f64>() / n as f64;
        prop_assert!((bar - v.nu_bar(0)).abs() <= 1e-15);
        for j in 0..n {
            prop_assert!(v.alpha(j) <= v.nu_bar_min());
        }
        let flat = ViscosityEnsemble::from_constants(vec![2f64.powi(-9); n]).unwrap();
        prop_assert!((0..n).all(|j| flat.alpha(j) == flat.nu_bar_min()));
    }

    #[test]
    fn mean_energy_is_label_invariant(seeds in prop::collection::vec(coeffs(), 5)) {
        let s = space(2);
        let f: Vec<_> = seeds.iter().map(|c| FieldCoefficients::velocity(field(&s, c))).collect();
        let mut g = f.clone();
        g.rotate_left(2);
        let a = kinetic_energy(&s, &mean_of(&f).values);
        let b = kinetic_energy(&s, &mean_of(&g).values);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn error_norm_triangle_inequality(a in coeffs(), b in coeffs(), dt in 0.01..1.0f64) {
        let s = space(2);
        let u = field(&s, &a);
        let v = field(&s, &b);
        let sum: Vec<f64> = u.iter().zip(&v).map(|(p, q)| p + q).collect();
        let zero = |_x: [f64; 2]| ([0.0; 2], [[0.0; 2]; 2]);
        let e = |w: &[f64]| error_norm_2_1(&[h1_error_sq(&s, w, zero, NormKind::Full)], dt);
        prop_assert!(e(&sum) <= e(&u) + e(&v) + 1e-12);
        prop_assert_eq!(e(&vec![0.0; u.len()]), 0.0);
    }

    #[test]
    fn kl_viscosity_affine(y in prop::collection::vec(-1.7..1.7f64, 5), a in -1.0..1.0f64, x in 0.0..1.0f64) {
        let kl = KlViscosity::new(1e3, 0.01).unwrap();
        let p = [x, 1.0 - x];
        let zero = kl.eval(p, &[0.0; 5]).unwrap();
        let ay: Vec<f64> = y.iter().map(|v| a * v).collect();
        let lhs = kl.eval(p, &ay).unwrap() - zero;
        let rhs = a * (kl.eval(p, &y).unwrap() - zero);
        prop_assert!((lhs - rhs).abs() <= 1e-15);
    }

    #[test]
    fn deterministic_coefficients_balance(half in 1usize..40, eps in 1e-4..1e-1f64) {
        let k = perturbation_coeffs(&PerturbationSpec { epsilon: eps, mode: PerturbationMode::Deterministic, n: 2 * half, seed: 0 }).unwrap();
        prop_assert!(k.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn biquadratic_interpolation_is_exact(c in prop::collection::vec(-2.0..2.0f64, 9), px in 0.0..1.0f64, py in 0.0..1.0f64) {
        let s = space(3);
        let f = |x: [f64; 2]| {
            let (a, b) = (x[0], x[1]);
            [c[0] + c[1] * a + c[2] * b + c[3] * a * b + c[4] * a * a * b * b, c[5] * a * a + c[6] * b * b + c[7] * a * a * b + c[8] * a * b * b]
        };
        let u = s.interpolate_velocity(f);
        let (cell, q) = s.quadrature().points().enumerate().find(|(_, q)| (q.x[0] - px).abs() < 0.2 && (q.x[1] - py).abs() < 0.2).map(|(i, q)| (i / s.quadrature().n_qp, q.clone())).unwrap();
        let (val, _) = s.eval_velocity(&u.values, cell, &q);
        let want = f(q.x);
        prop_assert!((val[0] - want[0]).abs() < 1e-12 && (val[1] - want[1]).abs() < 1e-12);
    }
}

#[test]
fn permuting_realizations_permutes_the_step() {
    let s = space(3);
    let k = vec![-1.0, -0.3, 0.4, 1.0];
    let nu = vec![1e-2, 1.4e-2, 0.8e-2, 1.1e-2];
    let perm = [2, 0, 3, 1];
    let d = SchemeDescriptor::bdf2_eev();
    let params = StepParams::new(0.02, 20.0, 1.0, 0.06).unwrap();
    let run = |k: Vec<f64>, nu: Vec<f64>| {
        let (problem, visc) = manufactured(k, nu);
        let mut st = EnsembleStepper::new(&s, &problem, &visc, d.clone(), params).unwrap();
        let mut state = st.initial_state().unwrap();
        st.bootstrap(&mut state, ensemble_eev::scheme::Bootstrap::BackwardEuler).unwrap();
        while state.step < params.n_steps() {
            st.advance(&mut state).unwrap();
        }
        state
    };
    let a = run(k.clone(), nu.clone());
    let b = run(perm.iter().map(|&i| k[i]).collect(), perm.iter().map(|&i| nu[i]).collect());
    for (jb, &ja) in perm.iter().enumerate() {
        let (x, y) = (&a.current(ja).values, &b.current(jb).values);
        assert!(max_diff(x, y) <= 1e-10 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        assert!(max_diff(&a.pressures[ja].values, &b.pressures[jb].values) <= 1e-8);
    }
}

#[test]
fn single_realization_collapses_to_standard_scheme() {
    let s = space(4);
    for d in [SchemeDescriptor::be_eev(), SchemeDescriptor::bdf2_eev()] {
        let (problem, visc) = manufactured(vec![0.6], vec![2e-2]);
        let params = StepParams::new(0.05, 3.0, 1.0, 1.0).unwrap();
        let mut st = EnsembleStepper::new(&s, &problem, &visc, d.clone(), params).unwrap();
        let mut state = st.initial_state().unwrap();
        st.bootstrap(&mut state, ensemble_eev::scheme::Bootstrap::BackwardEuler).unwrap();
        let (a, b) = st.assembler.assemble_standard_system(&state, 0, &d, &params).unwrap();
        let x = Factorization::new(&a).unwrap().solve(&b).unwrap();
        st.advance(&mut state).unwrap();
        let u = &state.current(0).values;
        assert!(max_diff(u, &x[..s.n_velocity()]) <= 1e-11, "{}", d.name);
    }
}

#[test]
fn quiescent_ensemble_stays_at_rest() {
    let s = space(3);
    let visc = sample_uniform_viscosity(1e-3, 0.3, 5, 9).unwrap();
    let problem = Quiet { n: 5 };
    let params = StepParams::new(0.1, 100.0, 1.0, 0.5).unwrap();
    let mut st = EnsembleStepper::new(&s, &problem, &visc, SchemeDescriptor::bdf2_eev(), params).unwrap();
    let mut state = st.initial_state().unwrap();
    st.bootstrap(&mut state, ensemble_eev::scheme::Bootstrap::BackwardEuler).unwrap();
    while state.step < params.n_steps() {
        st.advance(&mut state).unwrap();
    }
    for j in 0..5 {
        assert!(state.current(j).values.iter().all(|&v| v == 0.0));
        assert!(state.pressures[j].values.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn meshes_cover_their_domains() {
    for (m, area) in [
        (unit_square_mesh(5).unwrap(), 1.0),
        (step_channel_mesh(1).unwrap(), 299.0),
        (cavity_mesh(6).unwrap(), 4.0),
    ] {
        assert!((m.area() - area).abs() <= 1e-12 * area);
        let r = refine(&m);
        r.validate().unwrap();
        assert!((r.area() - area).abs() <= 1e-12 * area);
        assert_eq!(r.n_cells(), 4 * m.n_cells());
        for p in &m.nodes {
            assert!(r.nodes.iter().any(|q| q == p));
        }
        for marker in BoundaryMarker::ALL {
            assert_eq!(r.count_marked(marker), 2 * m.count_marked(marker));
        }
        let s = TaylorHoodSpace::new(m).unwrap();
        assert!((s.integrate(|_| 1.0) - area).abs() <= 1e-12 * area);
    }
}

#[test]
fn sparse_grid_is_sign_symmetric_and_nested() {
    for level in 0..=2 {
        let g = smolyak_grid(3, level).unwrap();
        assert_eq!(g.len(), [1, 7, 25][level]);
        assert!(g.nodes.iter().any(|n| n.iter().all(|&v| v == 0.0)));
        for (node, w) in g.nodes.iter().zip(&g.weights) {
            for axis in 0..3 {
                let mut flipped = node.clone();
                flipped[axis] = -flipped[axis];
                let i = g.nodes.iter().position(|n| n.iter().zip(&flipped).all(|(a, b)| (a - b).abs() < 1e-14)).unwrap();
                assert!((g.weights[i] - w).abs() < 1e-14);
            }
        }
    }
}
