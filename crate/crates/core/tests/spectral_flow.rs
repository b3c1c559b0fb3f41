mod common;

use common::{random_state, uniform};
use toda_core::experiment::rng::CounterRng;
use toda_core::integrator::{advance, verlet_step};
use toda_core::lattice::{
    energy_forced, energy_free, energy_open, from_flaschka, to_flaschka, Boundary,
};
use toda_core::spectral::{
    char_poly_derivative, eig_tridiag, exact_core_toda, jacobi_from_spectral, moser_flow,
    JacobiMatrix, SpectralData,
};
use toda_core::{LatticeState, System};

/// Neumaier-compensated sum, the oracle for direct energy evaluation.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn oracle_open(s: &LatticeState) -> Vec<f64> {
    let n = s.len();
    s.p.iter().map(|p| 0.5 * p * p).chain((0..n - 1).map(|i| (s.q[i] - s.q[i + 1]).exp())).collect()
}

#[test]
fn energies_match_compensated_oracle() {
    let s = random_state(5, 11);
    let e = energy_open(&s).unwrap();
    let o = compensated_sum(oracle_open(&s));
    assert!(((e - o) / o).abs() < 1e-15, "{e} vs {o}");

    let s = random_state(6, 12);
    let mut terms = oracle_open(&s);
    terms.push(s.q[0] - s.q[5]);
    let o = compensated_sum(terms);
    let e = energy_forced(&s, 1.0).unwrap();
    assert!(((e - o) / o).abs() < 1e-15, "{e} vs {o}");

    let s = random_state(5, 13);
    let c = 0.7;
    let o = compensated_sum(s.p.iter().map(|p| 0.5 * p * p).chain([c * (s.q[0] - s.q[4])]));
    assert!((energy_free(&s, c).unwrap() - o).abs() < 1e-15 * o.abs().max(1.0));
}

#[test]
fn flaschka_round_trip() {
    for seed in 0..20 {
        let s = random_state(6, seed);
        let vars = to_flaschka(&s, Boundary::Open).unwrap();
        let back = from_flaschka(&vars, s.q_sum()).unwrap();
        let scale = s.q.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        assert!(back.max_abs_diff(&s) < 1e-14 * scale, "seed {seed}");
    }
}

fn random_jacobi(m: usize, rng: &mut CounterRng) -> JacobiMatrix {
    let diag = (0..m).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let off = (0..m - 1).map(|_| uniform(rng, 0.1, 1.0)).collect();
    JacobiMatrix::new(diag, off).unwrap()
}

#[test]
fn spectral_map_round_trip() {
    let mut rng = CounterRng::new(5);
    for _ in 0..20 {
        let j = random_jacobi(8, &mut rng);
        let s = eig_tridiag(&j).unwrap();
        let norm: f64 = s.first_components.iter().map(|u| u * u).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let back = jacobi_from_spectral(&s).unwrap();
        assert!(back.max_abs_diff(&j) < 1e-10, "{}", back.max_abs_diff(&j));
    }
    for m in [16, 30] {
        let j = random_jacobi(m, &mut rng);
        let s = eig_tridiag(&j).unwrap();
        let gap = s.lambdas.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        assert!(gap >= 1e-3);
        let back = jacobi_from_spectral(&s).unwrap();
        assert!(back.max_abs_diff(&j) < 1e-10, "M={m}");
    }
}

#[test]
fn spectral_to_jacobi_and_back() {
    let mut rng = CounterRng::new(9);
    for _ in 0..10 {
        let mut lambdas: Vec<f64> = (0..6).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let raw: Vec<f64> = (0..6).map(|_| uniform(&mut rng, 0.1, 1.0)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = SpectralData::new(lambdas, raw.iter().map(|x| x / norm).collect()).unwrap();
        let again = eig_tridiag(&jacobi_from_spectral(&s).unwrap()).unwrap();
        for k in 0..6 {
            assert!((again.lambdas[k] - s.lambdas[k]).abs() < 1e-10);
            assert!((again.first_components[k] - s.first_components[k]).abs() < 1e-10);
        }
    }
}

#[test]
fn moser_flow_group_law_and_normalization() {
    let mut rng = CounterRng::new(21);
    let s = eig_tridiag(&random_jacobi(6, &mut rng)).unwrap();
    let a = moser_flow(&moser_flow(&s, 0.3), 0.9);
    let b = moser_flow(&s, 1.2);
    for k in 0..6 {
        assert!((a.first_components[k] - b.first_components[k]).abs() < 1e-13);
    }
    for t in [-50.0, -10.0, 3.0, 50.0] {
        let f = moser_flow(&s, t);
        let norm: f64 = f.first_components.iter().map(|u| u * u).sum();
        assert!((norm - 1.0).abs() < 1e-13);
        assert!(f.first_components.iter().all(|u| *u >= 0.0));
        assert_eq!(f.lambdas, s.lambdas);
    }
}

/// Determinant of `J - λ` by the three-term recurrence, independent of the
/// eigensolver.
fn det_shifted(j: &JacobiMatrix, lambda: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, j.diag[0] - lambda);
    for i in 1..j.dim() {
        let next = (j.diag[i] - lambda) * cur - j.offdiag[i - 1].powi(2) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[test]
fn char_poly_derivative_matches_finite_difference() {
    let mut rng = CounterRng::new(31);
    let j = random_jacobi(5, &mut rng);
    let s = eig_tridiag(&j).unwrap();
    let h = 1e-5;
    for k in 0..5 {
        let l = s.lambdas[k];
        let fd = (det_shifted(&j, l + h) - det_shifted(&j, l - h)) / (2.0 * h);
        let exact = char_poly_derivative(&s, k);
        assert!(((fd - exact) / exact).abs() < 1e-8, "k={k}: {fd} vs {exact}");
    }
}

#[test]
fn exact_core_matches_verlet_two_particles() {
    let s = LatticeState::new(vec![0.0, 0.0], vec![1.0, -1.0]).unwrap();
    let exact = exact_core_toda(&s, 3.0).unwrap();
    let dt = 1e-5;
    let verlet = advance(&s, &System::Open, dt, 300_000).unwrap();
    assert!(exact.max_abs_diff(&verlet) < 1e-8, "{}", exact.max_abs_diff(&verlet));
}

#[test]
fn exact_core_matches_verlet_five_particles() {
    let s = random_state(5, 3);
    let exact = exact_core_toda(&s, 5.0).unwrap();
    let verlet = advance(&s, &System::Open, 1e-4, 50_000).unwrap();
    assert!(exact.max_abs_diff(&verlet) < 1e-6, "{}", exact.max_abs_diff(&verlet));
}

#[test]
fn exact_core_conserves_energy_spectrum_and_momentum() {
    let s = random_state(6, 4);
    let h0 = energy_open(&s).unwrap();
    let spec0 = eig_tridiag(&JacobiMatrix::from_state(&s).unwrap()).unwrap();
    let mut residual: f64 = 0.0;
    for k in 0..=20 {
        let t = 0.5 * k as f64;
        let st = exact_core_toda(&s, t).unwrap();
        assert!((energy_open(&st).unwrap() - h0).abs() < 1e-12 * h0.abs().max(1.0));
        let spec = eig_tridiag(&JacobiMatrix::from_state(&st).unwrap()).unwrap();
        for (a, b) in spec.lambdas.iter().zip(&spec0.lambdas) {
            assert!((a - b).abs() < 1e-12);
        }
        residual = residual.max((st.q_sum() - s.q_sum() - t * s.p_sum()).abs());
    }
    assert!(residual < 1e-12, "{residual}");
}

#[test]
fn verlet_second_order_convergence() {
    let s = LatticeState::new(vec![0.0, 0.3], vec![0.8, -0.4]).unwrap();
    let reference = advance(&s, &System::Open, 0.01 / 8.0, 800).unwrap();
    let coarse = advance(&s, &System::Open, 0.01, 100).unwrap();
    let fine = advance(&s, &System::Open, 0.005, 200).unwrap();
    let ratio = coarse.max_abs_diff(&reference) / fine.max_abs_diff(&reference);
    // The dt/8 reference carries 1/64 of the coarse error, which biases the ratio
    // slightly above 4.
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn verlet_step_is_area_preserving() {
    let s = LatticeState::new(vec![0.2, -0.1], vec![0.5, 0.3]).unwrap();
    let h = 1e-6;
    let dt = 0.05;
    let x0 = s.to_phase_vec();
    let mut jac = nalgebra::DMatrix::zeros(4, 4);
    for k in 0..4 {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[k] += h;
        xm[k] -= h;
        let fp =
            verlet_step(&LatticeState::from_phase_vec(&xp).unwrap(), &System::Open, dt).unwrap();
        let fm =
            verlet_step(&LatticeState::from_phase_vec(&xm).unwrap(), &System::Open, dt).unwrap();
        for (r, (a, b)) in fp.to_phase_vec().iter().zip(fm.to_phase_vec()).enumerate() {
            jac[(r, k)] = (a - b) / (2.0 * h);
        }
    }
    assert!((jac.determinant() - 1.0).abs() < 1e-6);
}
