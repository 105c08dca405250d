use lrin::gauges::{truncated_gauge, Gauge, MagnitudeProfile, NormFlavor, NormSpec, ScaledNorm};
use lrin::oracle::{certify_prox, perturbation_probe};
use lrin::rng;
use lrin::vec_prox::{
    binary_solve_bound, enumerate_solve_bound, project_kyfan_l1_ball, project_truncated_l2_ball,
    prox_vec, SearchMode,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
struct Case {
    z: Vec<f64>,
    f: ScaledNorm,
}

fn entry() -> impl Strategy<Value = f64> {
    prop_oneof![
        6 => -100.0..100.0f64,
        1 => Just(0.0),
        1 => prop::sample::select(vec![-3.0, 3.0, 0.5]),
    ]
}

fn case(max_q: usize) -> impl Strategy<Value = Case> {
    (1..=max_q).prop_flat_map(|q| {
        (
            prop::collection::vec(entry(), q),
            1..=q,
            any::<bool>(),
            any::<bool>(),
            -3.0..3.0f64,
        )
            .prop_map(|(z, r, spectral, squared, lg)| {
                let flavor = if spectral {
                    NormFlavor::SpectralR
                } else {
                    NormFlavor::FrobeniusR
                };
                let spec = NormSpec::new(flavor, r).unwrap();
                Case {
                    z,
                    f: ScaledNorm::new(spec, 10f64.powf(lg), squared).unwrap(),
                }
            })
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn prox(z: &[f64], f: &ScaledNorm) -> Vec<f64> {
    prox_vec(z, f, SearchMode::BinarySearch).unwrap().x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    #[test]
    fn modes_agree_and_respect_solve_bounds(c in case(50)) {
        let b = prox_vec(&c.z, &c.f, SearchMode::BinarySearch).unwrap();
        let e = prox_vec(&c.z, &c.f, SearchMode::Enumerate).unwrap();
        for (x, y) in b.x.iter().zip(&e.x) {
            prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
        }
        let (q, r) = (c.z.len(), c.f.spec.r);
        prop_assert!(b.candidate_solves as f64 <= binary_solve_bound(q, r));
        prop_assert!(e.candidate_solves <= enumerate_solve_bound(q, r));
        prop_assert!(!b.fallback);
    }

    #[test]
    fn output_is_certified(c in case(50)) {
        let x = prox(&c.z, &c.f);
        let cert = certify_prox(&c.z, &x, &c.f).unwrap();
        prop_assert!(cert.pass, "{:?}", cert);
    }

    #[test]
    fn no_displacement_improves_the_objective(c in case(12), seed in any::<u64>()) {
        let x = prox(&c.z, &c.f);
        let radius = 1e-3 * norm2(&c.z).max(1.0);
        prop_assert!(perturbation_probe(&c.z, &x, &c.f, 50, radius, seed).unwrap());
    }

    #[test]
    fn moreau_decomposition(c in case(50)) {
        let f = ScaledNorm { squared: false, ..c.f };
        let x = prox(&c.z, &f);
        let w = match f.spec.flavor {
            NormFlavor::FrobeniusR => project_truncated_l2_ball(&c.z, f.spec.r, f.gamma, SearchMode::BinarySearch),
            NormFlavor::SpectralR => project_kyfan_l1_ball(&c.z, f.spec.r, f.gamma, SearchMode::BinarySearch),
        }.unwrap().w;
        let scale = norm2(&c.z).max(1.0);
        for ((xi, wi), zi) in x.iter().zip(&w).zip(&c.z) {
            prop_assert!((xi + wi - zi).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn projection_lands_in_ball(c in case(50), radius in 0.0..50.0f64) {
        let r = c.f.spec.r;
        for (gauge, out) in [
            (Gauge::L2, project_truncated_l2_ball(&c.z, r, radius, SearchMode::BinarySearch).unwrap()),
            (Gauge::L1, project_kyfan_l1_ball(&c.z, r, radius, SearchMode::BinarySearch).unwrap()),
        ] {
            let g = truncated_gauge(&MagnitudeProfile::new(&out.w).unwrap(), gauge, r).unwrap();
            prop_assert!(g <= radius + 1e-12 * norm2(&c.z).max(1.0), "{:?}: {} > {}", gauge, g, radius);
            let inside = truncated_gauge(&MagnitudeProfile::new(&c.z).unwrap(), gauge, r).unwrap() <= radius;
            if inside {
                prop_assert_eq!(&out.w, &c.z);
            }
        }
    }

    #[test]
    fn firmly_nonexpansive(c in case(30), seed in any::<u64>()) {
        let mut g = rng::stream(seed, "firm");
        let b: Vec<f64> = c.z.iter().map(|v| v + 10.0 * g.sample::<f64, _>(StandardNormal)).collect();
        let pa = prox(&c.z, &c.f);
        let pb = prox(&b, &c.f);
        let dp: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
        let lhs: f64 = dp.iter().map(|v| v * v).sum();
        let rhs: f64 = dp.iter().zip(c.z.iter().zip(&b)).map(|(d, (x, y))| d * (x - y)).sum();
        prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "{} > {}", lhs, rhs);
    }

    #[test]
    fn commutes_with_signed_permutations(c in case(30), seed in any::<u64>()) {
        let q = c.z.len();
        let mut g = rng::stream(seed, "signed_perm");
        let mut perm: Vec<usize> = (0..q).collect();
        perm.shuffle(&mut g);
        let signs: Vec<f64> = (0..q).map(|_| if g.random_bool(0.5) { -1.0 } else { 1.0 }).collect();
        let apply = |v: &[f64]| -> Vec<f64> { (0..q).map(|i| signs[i] * v[perm[i]]).collect() };
        let lhs = prox(&apply(&c.z), &c.f);
        let rhs = apply(&prox(&c.z, &c.f));
        let scale = norm2(&c.z).max(1.0);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn sorted_nonnegative_input_stays_sorted_nonnegative(c in case(50)) {
        let mut z: Vec<f64> = c.z.iter().map(|v| v.abs()).collect();
        z.sort_by(|a, b| b.total_cmp(a));
        let x = prox(&z, &c.f);
        prop_assert!(x.iter().all(|&v| v >= 0.0));
        prop_assert!(x.windows(2).all(|w| w[0] >= w[1]), "{:?}", x);
    }

    #[test]
    fn scaling_covariance(c in case(30), alpha in 0.01..100.0f64) {
        // gamma N is 1-homogeneous: prox_{gN}(a z) = a prox_{(g/a)N}(z).
        // (g/2) N^2 is 2-homogeneous: prox(a z) = a prox(z).
        let scaled: Vec<f64> = c.z.iter().map(|v| alpha * v).collect();
        let inner = if c.f.squared { c.f } else { ScaledNorm::new(c.f.spec, c.f.gamma / alpha, false).unwrap() };
        let lhs = prox(&scaled, &c.f);
        let rhs: Vec<f64> = prox(&c.z, &inner).iter().map(|v| alpha * v).collect();
        let scale = norm2(&scaled).max(1.0);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-11 * scale, "{} vs {}", a, b);
        }
    }
}

/// Perturbing a certified prox by at least 1e-3 is caught by the certificate.
#[test]
fn certificate_rejects_perturbed_outputs() {
    let mut g = rng::stream(5, "negatives");
    let trials = 10_000;
    let mut rejected = 0;
    for _ in 0..trials {
        let q = g.random_range(1..=20);
        let r = g.random_range(1..=q);
        let flavor = if g.random_bool(0.5) {
            NormFlavor::FrobeniusR
        } else {
            NormFlavor::SpectralR
        };
        let f = ScaledNorm::new(
            NormSpec::new(flavor, r).unwrap(),
            10f64.powf(g.random_range(-1.0..1.0)),
            g.random_bool(0.5),
        )
        .unwrap();
        let z: Vec<f64> = (0..q)
            .map(|_| 5.0 * g.sample::<f64, _>(StandardNormal))
            .collect();
        let mut x = prox(&z, &f);
        let noise: Vec<f64> = (0..q).map(|_| g.sample::<f64, _>(StandardNormal)).collect();
        let n = norm2(&noise);
        let size = 10f64.powf(g.random_range(-3.0..0.0));
        for (xi, ni) in x.iter_mut().zip(&noise) {
            *xi += size * ni / n;
        }
        if !certify_prox(&z, &x, &f).unwrap().pass {
            rejected += 1;
        }
    }
    assert!(
        rejected as f64 >= 0.99 * trials as f64,
        "rejected only {rejected}/{trials}"
    );
}
