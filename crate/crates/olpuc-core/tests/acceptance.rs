//! Acceptance gate. Each test covers one numbered criterion and prints a
//! single PASS/FAIL line with the measured residuals before asserting.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use olpuc_core::cd_kernel::{associated_for_cd, cd_formula, kernel_abc, kernel_sum, project};
use olpuc_core::cmv_operator::{
    band_residual, interior_margin, inverse_op_from_s1, jacobi_from_s1,
};
use olpuc_core::factorization::{
    biorthogonality_residual, factorize, phi1_determinantal, phi2_determinantal, szego_oracle_p1,
    szego_oracle_p2, Factorization,
};
use olpuc_core::linalg::CMatrix;
use olpuc_core::measure::{LaurentPoly, Measure};
use olpuc_core::moments::moment_matrix;
use olpuc_core::ordering::OrderingSpec;
use olpuc_core::second_kind::{second_kind, summation_partial_sum, Method, Which};
use olpuc_core::tau::{
    bilinear_residual, tau, tau_poly_residual, tau_second_kind_residual, wave_bilinear_residual,
};
use olpuc_core::toda::{
    darboux_flip_residual, discrete_step, discrete_two_path_residual, integrate_flow,
    lax_residual, refactorize_at_time, zs_residual, DeformationTimes, FlowVar, StepKind,
};

const QUAD: usize = 4096;
const PIVOT: f64 = 1e-13;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn weights() -> Vec<(&'static str, Measure)> {
    vec![
        ("lebesgue", Measure::lebesgue()),
        ("trig_poly", Measure::trig_poly(0.5).unwrap()),
        ("exp_cos", Measure::exp_cos()),
    ]
}

fn orderings() -> Vec<OrderingSpec> {
    vec![
        OrderingSpec::new(1, 1).unwrap(),
        OrderingSpec::new(2, 1).unwrap(),
        OrderingSpec::new(3, 2).unwrap(),
    ]
}

fn setup(m: &Measure, ord: OrderingSpec, l: usize) -> (CMatrix, Factorization) {
    let size = l + interior_margin(ord) + 2;
    let g = moment_matrix(m, ord, size).unwrap();
    let f = factorize(&g, ord, PIVOT).unwrap();
    (g, f)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn rel_poly(p: &LaurentPoly, q: &LaurentPoly) -> f64 {
    p.sup_diff(q) / p.norm_inf().max(q.norm_inf()).max(1.0)
}

fn sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    Complex64::from_polar(
        rng.random_range(lo..hi),
        rng.random_range(0.0..std::f64::consts::TAU),
    )
}

/// Prints the criterion line, then asserts every part is under tolerance.
fn verdict(n: usize, name: &str, parts: &[(&str, f64, f64)]) {
    let ok = parts.iter().all(|(_, r, t)| r.is_finite() && r < t);
    let detail: Vec<String> = parts
        .iter()
        .map(|(what, r, t)| format!("{what} {r:.2e} (tol {t:.0e})"))
        .collect();
    println!(
        "criterion {n} ({name}): {} [{}]",
        if ok { "PASS" } else { "FAIL" },
        detail.join("; ")
    );
    assert!(ok, "criterion {n} ({name}): {}", detail.join("; "));
}

#[test]
fn criterion_01_biorthogonality() {
    let mut worst = 0.0_f64;
    for (_, m) in weights() {
        for ord in orderings() {
            let (_, f) = setup(&m, ord, 16);
            worst = worst.max(biorthogonality_residual(&f, &m, 16, QUAD));
        }
    }
    verdict(1, "biorthogonality", &[("pairing residual", worst, 1e-9)]);
}

#[test]
fn criterion_02_determinantal_lu() {
    let mut worst = 0.0_f64;
    for (_, m) in weights() {
        for ord in orderings() {
            let (g, f) = setup(&m, ord, 8);
            for l in 0..=8 {
                worst = worst.max(rel_poly(&f.phi1(l), &phi1_determinantal(&g, ord, l)));
                worst = worst.max(rel_poly(&f.phi2(l), &phi2_determinantal(&g, ord, l)));
            }
        }
    }
    verdict(2, "determinantal vs lu", &[("coefficient residual", worst, 1e-9)]);
}

#[test]
fn criterion_03_szego_identification() {
    let mut worst = 0.0_f64;
    for (_, m) in weights() {
        for ord in orderings() {
            let (_, f) = setup(&m, ord, 12);
            for l in 0..=12 {
                let p1 = szego_oracle_p1(&m, l).unwrap();
                let p2 = szego_oracle_p2(&m, l).unwrap();
                worst = worst.max(rel_poly(&f.szego_p1(l), &p1));
                worst = worst.max(rel_poly(&f.szego_p2(l), &p2));
            }
        }
    }
    verdict(3, "szego identification", &[("both branches", worst, 1e-9)]);
}

#[test]
fn criterion_04_rho_identity() {
    let mut worst = 0.0_f64;
    for (_, m) in weights() {
        for ord in orderings() {
            let (_, f) = setup(&m, ord, 12);
            let v = f.verblunsky(13).unwrap();
            worst = worst.max(v.rho_identity_residual());
        }
    }
    verdict(4, "rho identity", &[("k = 1..12", worst, 1e-10)]);
}

#[test]
fn criterion_05_cd_triple() {
    let m = Measure::exp_cos();
    let mut triple = 0.0_f64;
    let mut repro = 0.0_f64;
    for ord in orderings() {
        let (g, f) = setup(&m, ord, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pairs = Vec::with_capacity(100);
        while pairs.len() < 100 {
            let z = sample(&mut rng, 0.5, 1.8);
            let zp = sample(&mut rng, 0.5, 1.8);
            if (c(1.0, 0.0) - zp * z.conj()).norm() > 0.05 {
                pairs.push((z, zp));
            }
        }
        for l in 1..=12 {
            // Below one full block the opposite class has no member yet and
            // the formula's associated objects do not exist.
            let Ok(assoc) = associated_for_cd(&g, ord, l) else {
                assert!(l < ord.block_len());
                continue;
            };
            for &(z, zp) in &pairs {
                let s = kernel_sum(&f, l, z, zp);
                let a = kernel_abc(&g, ord, l, z, zp).unwrap();
                let cd = cd_formula(&assoc, z, zp).unwrap();
                let scale = s.norm().max(a.norm()).max(1.0);
                triple = triple.max((s - a).norm() / scale);
                triple = triple.max((s - cd).norm() / scale);
            }
        }
        // Pairing the degree-12 kernel with itself over the measure must
        // reproduce it.
        let quad = m.quadrature(512);
        for _ in 0..3 {
            let z = sample(&mut rng, 0.6, 0.9);
            let zp = sample(&mut rng, 0.6, 0.9);
            let direct = kernel_sum(&f, 12, z, zp);
            let mut s = c(0.0, 0.0);
            for &(u, w) in &quad {
                s += kernel_sum(&f, 12, z, u) * kernel_sum(&f, 12, u, zp) * w;
            }
            repro = repro.max((s - direct).norm() / direct.norm().max(1.0));
        }
    }
    verdict(
        5,
        "christoffel-darboux",
        &[("triple equality", triple, 1e-9), ("reproducing", repro, 1e-8)],
    );
}

#[test]
fn criterion_06_projection_window() {
    let m = Measure::trig_poly(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut outside = 0.0_f64;
    let mut idem = 0.0_f64;
    for (p, q) in [(1usize, 1usize), (2, 3), (3, 2)] {
        let ord = OrderingSpec::new(q + 1, p).unwrap();
        let l = ord.block_len();
        let (_, f) = setup(&m, ord, l);
        let lo = -(p as i64);
        let hi = q as i64;
        // The first block of basis exponents is exactly the window.
        let mut got: Vec<i64> = (0..l).map(|j| ord.index_exponent(j)).collect();
        got.sort_unstable();
        assert_eq!(got, (lo..=hi).collect::<Vec<i64>>());

        let target = LaurentPoly::from_pairs((lo - 2..=hi + 2).map(|e| {
            (
                e,
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        }));
        let pr = project(&f, &m, l, &target, QUAD);
        for (e, v) in pr.iter() {
            if e < lo || e > hi {
                outside = outside.max(v.norm());
            }
        }
        let twice = project(&f, &m, l, &pr, QUAD);
        idem = idem.max(rel_poly(&twice, &pr));
    }
    verdict(
        6,
        "projection window",
        &[("outside coefficients", outside, 1e-12), ("idempotent", idem, 1e-9)],
    );
}

#[test]
fn criterion_07_second_kind() {
    let m = Measure::exp_cos();
    let ord = OrderingSpec::cmv();
    let (_, f) = setup(&m, ord, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut routes = 0.0_f64;
    for region in 0..2 {
        for _ in 0..20 {
            let z = if region == 0 {
                sample(&mut rng, 1.3, 2.8)
            } else {
                sample(&mut rng, 0.35, 0.75)
            };
            for which in [Which::C1, Which::C2] {
                for l in 0..=6 {
                    let s = second_kind(&f, &m, l, which, z, Method::Series, 0).unwrap();
                    let q = second_kind(&f, &m, l, which, z, Method::Cauchy, QUAD).unwrap();
                    let d = second_kind(&f, &m, l, which, z, Method::GammaDet, 0).unwrap();
                    routes = routes.max(rel(s, q)).max(rel(s, d));
                }
            }
        }
    }

    let mut split = 0.0_f64;
    for z in [sample(&mut rng, 1.4, 2.2), sample(&mut rng, 0.4, 0.7)] {
        for l in 0..=5 {
            let c11 = second_kind(&f, &m, l, Which::C11, z, Method::Series, 0).unwrap();
            let c12 = second_kind(&f, &m, l, Which::C12, z, Method::Series, 0).unwrap();
            let c1 = second_kind(&f, &m, l, Which::C1, z, Method::Series, 0).unwrap();
            let c21 = second_kind(&f, &m, l, Which::C21, z, Method::Series, 0).unwrap();
            let c22 = second_kind(&f, &m, l, Which::C22, z, Method::Series, 0).unwrap();
            let c2 = second_kind(&f, &m, l, Which::C2, z, Method::Series, 0).unwrap();
            split = split.max(rel(c11 + c12, c1)).max(rel(c21 + c22, c2));
        }
    }

    let z = Complex64::from_polar(3.0, 0.3);
    let zp = Complex64::from_polar(0.3, -0.7);
    let target = c(1.0, 0.0) / (z - zp);
    let mut tail_ratio = 0.0_f64;
    let mut final_err = 0.0_f64;
    for a in [1u8, 2u8] {
        let errs: Vec<f64> = [4usize, 8, 12]
            .iter()
            .map(|&cap| {
                (summation_partial_sum(&f, &m, a, 1, 1, z, zp, cap).unwrap() - target).norm()
            })
            .collect();
        for w in errs.windows(2) {
            tail_ratio = tail_ratio.max(w[1] / w[0]);
        }
        final_err = final_err.max(*errs.last().unwrap());
    }

    verdict(
        7,
        "second kind",
        &[
            ("route agreement", routes, 1e-7),
            ("partition", split, 1e-8),
            ("summation at L=12", final_err, 1e-4),
            ("summation tail ratio", tail_ratio, 1.0),
        ],
    );
}

#[test]
fn criterion_08_toeplitz_lattice() {
    let ord = OrderingSpec::cmv();
    let t11 = c(0.1, 0.0);

    let mut ode = 0.0_f64;
    let mut schur = 0.0_f64;
    for m in [Measure::trig_poly(0.5).unwrap(), Measure::exp_cos()] {
        let (_, f) = setup(&m, ord, 16);
        let size = 16 + interior_margin(ord) + 2;
        let v0 = f.verblunsky(f.trusted_len()).unwrap();
        let st = integrate_flow(&v0, t11, c(0.0, 0.0), 100).unwrap();
        let ft = refactorize_at_time(&m, ord, &DeformationTimes::first(t11, c(0.0, 0.0)), size)
            .unwrap();
        let vt = ft.verblunsky(st.trusted_len.min(ft.trusted_len())).unwrap();
        for k in 0..st.trusted_len.min(vt.len()).min(9) {
            ode = ode.max((st.alpha1[k] - vt.alpha1[k]).norm());
            ode = ode.max((st.alpha2_bar[k] - vt.alpha2[k].conj()).norm());
        }
        // Reduced direction t21 = -conj(t11) keeps real data real.
        let sc = integrate_flow(&v0, t11, -t11.conj(), 100).unwrap();
        for k in 0..sc.trusted_len {
            schur = schur.max(sc.alpha1[k].im.abs()).max(sc.alpha2_bar[k].im.abs());
        }
    }

    // Flat data is stationary for the first family only: the second family
    // couples to the pinned index 0 and moves as (-t)^k / k!. The exact
    // statements are that the first family stays at zero and that
    // integration agrees with refactorization to roundoff.
    let m = Measure::lebesgue();
    let (_, f) = setup(&m, ord, 16);
    let size = 16 + interior_margin(ord) + 2;
    let v0 = f.verblunsky(f.trusted_len()).unwrap();
    let st = integrate_flow(&v0, t11, c(0.0, 0.0), 100).unwrap();
    let ft =
        refactorize_at_time(&m, ord, &DeformationTimes::first(t11, c(0.0, 0.0)), size).unwrap();
    let vt = ft.verblunsky(st.trusted_len.min(ft.trusted_len())).unwrap();
    let mut flat = 0.0_f64;
    for k in 0..st.trusted_len.min(vt.len()).min(9) {
        flat = flat.max((st.alpha1[k] - vt.alpha1[k]).norm());
        flat = flat.max((st.alpha2_bar[k] - vt.alpha2[k].conj()).norm());
        if k >= 1 {
            flat = flat.max(st.alpha1[k].norm()).max(vt.alpha1[k].norm());
        }
    }

    verdict(
        8,
        "toeplitz lattice",
        &[
            ("ode vs refactorization", ode, 1e-6),
            ("flat-data first family", flat, 1e-12),
            ("schur reality", schur, 1e-8),
        ],
    );
}

#[test]
fn criterion_09_lax_zero_curvature() {
    let mut worst = 0.0_f64;
    for m in [Measure::trig_poly(0.5).unwrap(), Measure::exp_cos()] {
        for ord in orderings() {
            for var in [FlowVar::T11, FlowVar::T21] {
                for which in [1u8, 2u8] {
                    worst = worst.max(lax_residual(&m, ord, 12, var, which).unwrap());
                }
            }
            worst = worst.max(zs_residual(&m, ord, 12).unwrap());
        }
    }
    verdict(9, "lax and zero curvature", &[("fd residual", worst, 1e-4)]);
}

#[test]
fn criterion_10_discrete_flows() {
    // Off the real axis: weights with real coefficients put polynomial
    // zeros near that axis, which degrades the unpivoted split of the
    // shifted operator.
    let lambda = c(0.3, 0.2);
    let mut two_path = 0.0_f64;
    let mut flip = 0.0_f64;
    let mut pos = 0.0_f64;
    for m in [Measure::trig_poly(0.5).unwrap(), Measure::exp_cos()] {
        for ord in orderings() {
            let size = 10.max(ord.block_len() + 4);
            two_path = two_path
                .max(discrete_two_path_residual(&m, ord, size, lambda, StepKind::D1).unwrap())
                .max(discrete_two_path_residual(&m, ord, size, lambda, StepKind::D2).unwrap());
            flip = flip.max(darboux_flip_residual(&m, ord, size, lambda).unwrap());

            let (shifted, _) = discrete_step(&m, ord, size, lambda, StepKind::ConjPair).unwrap();
            let fs = factorize(&moment_matrix(&shifted, ord, size).unwrap(), ord, PIVOT).unwrap();
            for l in 0..fs.trusted_len() {
                let h = fs.h(l);
                pos = pos.max(h.im.abs().max((-h.re).max(0.0)) / h.norm());
            }
        }
    }
    verdict(
        10,
        "discrete flows",
        &[
            ("two-path", two_path, 1e-8),
            ("darboux flip", flip, 1e-8),
            ("conjugate-pair positivity", pos, 1e-9),
        ],
    );
}

#[test]
fn criterion_11_tau_suite() {
    let m = Measure::exp_cos();
    let ord = OrderingSpec::cmv();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let times_list = [
        DeformationTimes::zero(),
        DeformationTimes::first(c(0.05, 0.0), c(0.02, 0.0)),
    ];

    let mut pivots = 0.0_f64;
    let mut rep = 0.0_f64;
    let mut sk = 0.0_f64;
    for times in &times_list {
        let size = 10 + interior_margin(ord) + 2;
        let fh = refactorize_at_time(&m, ord, times, size).unwrap();
        let mut prod = c(1.0, 0.0);
        for l in 1..=10 {
            prod *= fh.h(l - 1);
            pivots = pivots.max(rel(tau(&m, ord, times, l).unwrap(), prod));
        }
        for i in 0..10 {
            let z = if i % 2 == 0 {
                sample(&mut rng, 1.25, 2.2)
            } else {
                sample(&mut rng, 0.4, 0.8)
            };
            rep = rep.max(tau_poly_residual(&m, ord, times, 8, z).unwrap());
        }
        for z in [sample(&mut rng, 1.3, 1.9), sample(&mut rng, 0.45, 0.75)] {
            sk = sk.max(tau_second_kind_residual(&m, ord, times, 4, z).unwrap());
        }
    }

    let zero = DeformationTimes::zero();
    let t = DeformationTimes::first(c(0.08, 0.0), c(0.03, 0.0));
    let tp = DeformationTimes::first(c(0.02, 0.0), c(0.05, 0.0));
    let mut bil = 0.0_f64;
    for (k, l) in [(1usize, 1usize), (2, 2), (3, 3)] {
        bil = bil.max(bilinear_residual(&m, ord, &zero, &zero, k, l, 0.5, 2.0, 2048).unwrap());
    }
    for (k, l) in [(2usize, 1usize), (2, 2), (3, 2)] {
        bil = bil.max(bilinear_residual(&m, ord, &t, &tp, k, l, 0.5, 2.0, 2048).unwrap());
    }
    bil = bil.max(wave_bilinear_residual(&m, ord, &t, &tp, 2, 1, 0.5, 512).unwrap());

    verdict(
        11,
        "tau suite",
        &[
            ("pivot product", pivots, 1e-9),
            ("representations", rep, 1e-8),
            ("second kind", sk, 1e-6),
            ("bilinear", bil, 1e-6),
        ],
    );
}

#[test]
fn criterion_12_band_structure() {
    let mut worst = 0.0_f64;
    for (_, m) in weights() {
        for ord in orderings() {
            let (_, f) = setup(&m, ord, 12);
            let margin = interior_margin(ord);
            let j = jacobi_from_s1(&f);
            let ji = inverse_op_from_s1(&f);
            let sup = ord.n_minus() + 1;
            let sub = ord.n_plus() + 1;
            worst = worst
                .max(band_residual(&j, sup, sub, margin))
                .max(band_residual(&ji, sub, sup, margin));
        }
    }
    verdict(12, "band structure", &[("off-band mass", worst, 1e-11)]);
}
