use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use scarkit::fockstate::{average_project, coherent, eigen_residual, expectation, inner, FockState};
use scarkit::freqarith::exact::{q_frac, q_int, Q};
use scarkit::freqarith::{conductor, decompose, rational_span, FrequencySpec, GeneratorBasis, HarmonicDecomposition};
use scarkit::phasespace::{
    compose_flow, multi_flow, orbit_average, sigma_membership, torus_mean, PhasePoint, Symbol,
};
use scarkit::spectral::{
    component_eigenvalue, eigenvalue, select_target, FockIndex, TargetEigenvalue,
};

fn sqrt_spec(rows: &[Vec<(i64, i64)>]) -> FrequencySpec {
    let basis = GeneratorBasis::unit_and_roots(&[2, 3]);
    let coords = rows
        .iter()
        .map(|r| r.iter().map(|&(p, q)| q_frac(p, q)).collect())
        .collect();
    FrequencySpec::new(basis, coords).unwrap()
}

/// Rows over `(1, √2, √3)` with nonnegative coefficients and a positive
/// constant term, so every frequency is positive.
fn rows_strategy() -> impl Strategy<Value = Vec<Vec<(i64, i64)>>> {
    prop::collection::vec(
        (1i64..6, 1i64..4, 0i64..4, 1i64..4, 0i64..3, 1i64..3)
            .prop_map(|(a, b, c, d, e, f)| vec![(a, b), (c, d), (e, f)]),
        1..5,
    )
}

fn sqrt2() -> HarmonicDecomposition {
    decompose(
        &FrequencySpec::new(
            GeneratorBasis::unit_and_roots(&[2]),
            vec![vec![q_int(1), q_int(0)], vec![q_int(0), q_int(1)]],
        )
        .unwrap(),
    )
    .unwrap()
}

fn ones_sqrt2() -> HarmonicDecomposition {
    decompose(
        &FrequencySpec::new(
            GeneratorBasis::unit_and_roots(&[2]),
            vec![
                vec![q_int(1), q_int(0)],
                vec![q_int(1), q_int(0)],
                vec![q_int(0), q_int(1)],
            ],
        )
        .unwrap(),
    )
    .unwrap()
}

/// Is `n` a nonnegative combination of `k`? Bounded brute force.
fn representable(k: &[i64], n: i64, budget: i64) -> bool {
    fn rec(k: &[i64], rest: i64, used: i64, budget: i64) -> bool {
        if k.is_empty() {
            return rest == 0;
        }
        let mut c = 0;
        while used + c <= budget {
            if rec(&k[1..], rest - c * k[0], used + c, budget) {
                return true;
            }
            if k[0] > 0 && rest - c * k[0] < 0 && k[1..].iter().all(|&x| x >= 0) {
                break;
            }
            c += 1;
        }
        false
    }
    rec(k, n, 0, budget)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction_is_exact(rows in rows_strategy()) {
        let spec = sqrt_spec(&rows);
        let dec = decompose(&spec).unwrap();
        for j in 0..spec.dim() {
            prop_assert_eq!(dec.reconstruct(j), spec.coords()[j].clone());
        }
        for c in dec.components() {
            prop_assert!(c.period > 0.0);
            let g = c.k.iter().filter(|&&x| x != 0).fold(0i64, |g, &x| num_integer::gcd(g, x));
            prop_assert_eq!(g, 1);
        }
    }

    #[test]
    fn span_dimension_is_invariant(rows in rows_strategy(), p in 1i64..7, q in 1i64..7, rot in 0usize..4) {
        let spec = sqrt_spec(&rows);
        let (d_omega, _) = rational_span(&spec);
        let mut permuted = rows.clone();
        let len = permuted.len();
        permuted.rotate_left(rot % len);
        let scaled: Vec<Vec<Q>> = permuted
            .iter()
            .map(|r| r.iter().map(|&(a, b)| q_frac(a, b) * q_frac(p, q)).collect())
            .collect();
        let other = FrequencySpec::new(GeneratorBasis::unit_and_roots(&[2, 3]), scaled).unwrap();
        prop_assert_eq!(rational_span(&other).0, d_omega);
    }

    #[test]
    fn conductor_is_sharp(k in prop::collection::vec(1i64..12, 2..4)) {
        prop_assume!(k.iter().fold(0, |g, &x| num_integer::gcd(g, x)) == 1);
        let c = conductor(&k, 1).unwrap() as i64;
        for n in c..=c + 50 {
            prop_assert!(representable(&k, n, n), "{} not representable", n);
        }
        if c > 0 {
            prop_assert!(!representable(&k, c - 1, c));
        }
        let negated: Vec<i64> = k.iter().map(|x| -x).collect();
        prop_assert_eq!(conductor(&negated, -1).unwrap() as i64, c);
    }

    #[test]
    fn mixed_sign_conductor_is_zero(a in 1i64..9, b in 1i64..9) {
        prop_assume!(num_integer::gcd(a, b) == 1);
        let k = [a, -b];
        prop_assert_eq!(conductor(&k, 1).unwrap(), 0);
        for n in 0..=20 {
            prop_assert!(representable(&k, n, 10 * a.max(b) * (n + 1)));
        }
    }

    #[test]
    fn spectrum_scales_and_splits(k1 in 0u32..40, k2 in 0u32..40, hbar in 0.001f64..1.0) {
        let dec = sqrt2();
        let k = FockIndex(vec![k1, k2]);
        let total = eigenvalue(&dec, &k, hbar);
        prop_assert!((total - hbar * eigenvalue(&dec, &k, 1.0)).abs() <= 1e-12 * total);
        let parts: f64 = (0..2).map(|n| component_eigenvalue(&dec, &k, n, hbar).unwrap()).sum();
        prop_assert!((parts - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn targets_respect_the_bound(t in 0.0f64..1.0, hbar in 0.002f64..0.2) {
        let dec = sqrt2();
        let energy = [t, 1.0 - t];
        let target = select_target(&dec, &energy, hbar).unwrap();
        prop_assert!(target.within_bound(&dec));
        let bound: f64 = dec.components().iter().map(|c| 2.0 * PI * hbar / c.period).sum();
        prop_assert!((target.lambda_total - 1.0).abs() <= bound);
        prop_assert!(target.contains(&dec, &target.witness.0));
    }

    #[test]
    fn flow_preserves_mode_energies(
        x in prop::collection::vec(-2.0f64..2.0, 3),
        xi in prop::collection::vec(-2.0f64..2.0, 3),
        tau in prop::collection::vec(-50.0f64..50.0, 2),
    ) {
        let dec = ones_sqrt2();
        let z = PhasePoint::new(x, xi).unwrap();
        let w = multi_flow(&dec, &z, &tau);
        for j in 0..3 {
            let h = z.mode_energy(j);
            prop_assert!((w.mode_energy(j) - h).abs() <= 1e-12 * (1.0 + h));
        }
    }

    #[test]
    fn orbit_average_is_invariant(
        x in prop::collection::vec(-1.5f64..1.5, 3),
        xi in prop::collection::vec(-1.5f64..1.5, 3),
        tau in prop::collection::vec(-10.0f64..10.0, 2),
        t in -10.0f64..10.0,
    ) {
        let dec = ones_sqrt2();
        let z = PhasePoint::new(x, xi).unwrap();
        let moved = multi_flow(&dec, &z, &tau);
        for text in ["x1*x2 + xi1*xi2", "x1^2*x3^2 + xi2", "char(0.4, -0.3, 0.2, 0.1, 0.5, -0.6)"] {
            let a = Symbol::parse(text, 3).unwrap();
            let base = orbit_average(&dec, &a, &z).unwrap();
            prop_assert!((orbit_average(&dec, &a, &moved).unwrap() - base).norm() <= 1e-10);
            for n in 0..2 {
                let composed = compose_flow(&dec, &a, n, t);
                prop_assert!((orbit_average(&dec, &composed, &z).unwrap() - base).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn polynomial_quadrature_is_converged(
        x in prop::collection::vec(-1.5f64..1.5, 2),
        xi in prop::collection::vec(-1.5f64..1.5, 2),
    ) {
        let dec = decompose(&FrequencySpec::rational(&[q_int(2), q_int(3)]).unwrap()).unwrap();
        let z = PhasePoint::new(x, xi).unwrap();
        let a = Symbol::parse("x1^4*xi2^2 + x1*x2^3 - 2*xi1^2*xi2^2", 2).unwrap();
        let base = orbit_average(&dec, &a, &z).unwrap();
        let points = 2 * 6 * 3 + 16;
        let doubled = torus_mean(&dec, &a, &z, 2 * points).unwrap();
        prop_assert!((base - doubled).norm() < 1e-12);
    }

    #[test]
    fn projection_is_orthogonal(
        x in prop::collection::vec(-1.0f64..1.0, 3),
        xi in prop::collection::vec(-1.0f64..1.0, 3),
        t in 0.05f64..0.95,
    ) {
        let dec = ones_sqrt2();
        let hbar = 0.05;
        let target = select_target(&dec, &[t, 1.0 - t], hbar).unwrap();
        let psi = coherent(&PhasePoint::new(x, xi).unwrap(), hbar, 1e-14).unwrap();
        match average_project(&dec, &psi, &target) {
            Ok(p) => {
                prop_assert!(p.norm() <= psi.norm() + 1e-15);
                let rest = psi.axpy(Complex64::new(-1.0, 0.0), &p).unwrap();
                prop_assert!(inner(&rest, &p).unwrap().norm() <= 1e-12);
                prop_assert_eq!(&average_project(&dec, &p, &target).unwrap(), &p);
                for n in 0..2 {
                    let r = eigen_residual(&dec, &p, n, target.lambda[n]).unwrap();
                    prop_assert!(r <= 1e-10 * (1.0 + target.lambda[n].abs()));
                }
            }
            Err(scarkit::Error::EmptyProjection(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn coherent_norm_within_tail(
        x in prop::collection::vec(-2.0f64..2.0, 2),
        xi in prop::collection::vec(-2.0f64..2.0, 2),
        hbar in 0.005f64..0.5,
        tol in 1e-14f64..1e-4,
    ) {
        let psi = coherent(&PhasePoint::new(x, xi).unwrap(), hbar, tol).unwrap();
        prop_assert!(psi.tail_bound() < tol);
        prop_assert!((psi.norm_sqr() - 1.0).abs() <= tol + 1e-13);
    }

    #[test]
    fn sigma_witness_lies_on_level_set(t in 0.0f64..1.0) {
        let dec = ones_sqrt2();
        let energy = [t, 1.0 - t];
        let w = sigma_membership(&dec, &energy).unwrap();
        let e = scarkit::phasespace::component_energies(&dec, &w.z0());
        for n in 0..2 {
            prop_assert!((e[n] - energy[n]).abs() <= 1e-12);
        }
    }
}

#[test]
fn evolution_rotates_clockwise() {
    // Evolving by e^{−itOp(H_j)/ħ} multiplies c_k by e^{−it(k_j + 1/2)}; the
    // mean position must follow z_j ↦ e^{−it} z_j, so d⟨x_j⟩/dt = ξ_j.
    let hbar = 0.02;
    let z = PhasePoint::new(vec![0.6, -0.4], vec![0.35, 0.8]).unwrap();
    let psi = coherent(&z, hbar, 1e-15).unwrap();
    let entries = psi.entries().unwrap();
    let evolve = |t: f64| {
        let map: BTreeMap<FockIndex, Complex64> = entries
            .iter()
            .map(|(k, c)| {
                let phase: f64 = k.0.iter().map(|&kj| -t * (f64::from(kj) + 0.5)).sum();
                (k.clone(), c * Complex64::from_polar(1.0, phase))
            })
            .collect();
        FockState::from_sparse(2, hbar, map, 0.0)
    };
    let dt = 1e-5;
    for j in 0..2 {
        let a = Symbol::x(2, j);
        let plus = expectation(&evolve(dt), &evolve(dt), &a).unwrap().re;
        let minus = expectation(&evolve(-dt), &evolve(-dt), &a).unwrap().re;
        let derivative = (plus - minus) / (2.0 * dt);
        assert!((derivative - z.xi[j]).abs() < 1e-8, "{derivative} vs {}", z.xi[j]);
    }
}

#[test]
fn product_and_sparse_expectations_agree() {
    let hbar = 0.05;
    let z = PhasePoint::new(vec![0.5, -0.2], vec![0.1, 0.6]).unwrap();
    let product = coherent(&z, hbar, 1e-15).unwrap();
    let sparse = FockState::from_sparse(2, hbar, product.entries().unwrap(), 0.0);
    for text in ["x1^3*xi2 + H2", "char(0.7, -0.2, 1.1, 0.4)", "x1 + 0.5*char(0.1, 0.2, 0.3, 0.4)"] {
        let a = Symbol::parse(text, 2).unwrap();
        let pp = expectation(&product, &product, &a).unwrap();
        let ss = expectation(&sparse, &sparse, &a).unwrap();
        let ps = expectation(&product, &sparse, &a).unwrap();
        let sp = expectation(&sparse, &product, &a).unwrap();
        for v in [ss, ps, sp] {
            assert!((v - pp).norm() < 1e-11, "{text}: {v} vs {pp}");
        }
        // Coherent-state Weyl expectations of a character are e^{iσ(z,w)} e^{−ħ|w|²/4}.
        if let Symbol::Character(c) = &a {
            let want = c.eval(&z) * (-hbar * c.norm_sqr() / 4.0).exp();
            assert!((pp - want).norm() < 1e-12);
        }
    }
}

#[test]
fn target_of_index_is_its_own_eigenspace() {
    let dec = ones_sqrt2();
    let k = FockIndex(vec![3, 5, 2]);
    let t = TargetEigenvalue::of_index(&dec, &k, 0.1);
    assert!(t.contains(&dec, &[8, 0, 2]));
    assert!(!t.contains(&dec, &[8, 0, 3]));
}
