use lrin::gauges::{
    dual_norm_of, ksupport_split, norm_of, norm_value, MagnitudeProfile, NormFlavor, NormSpec,
};
use lrin::rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn spec(flavor: NormFlavor, r: usize) -> NormSpec {
    NormSpec::new(flavor, r).unwrap()
}

fn flavor() -> impl Strategy<Value = NormFlavor> {
    prop_oneof![Just(NormFlavor::FrobeniusR), Just(NormFlavor::SpectralR)]
}

/// A vector with random length, entries from a mix of continuous values,
/// repeats and zeros, and a valid rank.
fn vector_and_rank(max_q: usize) -> impl Strategy<Value = (Vec<f64>, usize)> {
    (1..=max_q).prop_flat_map(|q| {
        let entry = prop_oneof![
            4 => -100.0..100.0f64,
            1 => Just(0.0),
            1 => prop::sample::select(vec![-2.5, 2.5, 1.0]),
        ];
        (prop::collection::vec(entry, q), 1..=q)
    })
}

fn l1(z: &[f64]) -> f64 {
    z.iter().map(|v| v.abs()).sum()
}

fn l2(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn linf(z: &[f64]) -> f64 {
    z.iter().fold(0.0, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn homogeneity((z, r) in vector_and_rank(30), fl in flavor(), alpha in 0.0..50.0f64) {
        let s = spec(fl, r);
        let scaled: Vec<f64> = z.iter().map(|v| alpha * v).collect();
        let lhs = norm_of(&scaled, &s).unwrap();
        let rhs = alpha * norm_of(&z, &s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn triangle_inequality((x, r) in vector_and_rank(30), seed in any::<u64>(), fl in flavor()) {
        let mut g = rng::stream(seed, "triangle");
        let y: Vec<f64> = x.iter().map(|_| 50.0 * g.sample::<f64, _>(StandardNormal)).collect();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let s = spec(fl, r);
        prop_assert!(norm_of(&sum, &s).unwrap() <= norm_of(&x, &s).unwrap() + norm_of(&y, &s).unwrap() + 1e-12);
    }

    #[test]
    fn rank_one_is_l1((z, _r) in vector_and_rank(30), fl in flavor()) {
        let v = norm_of(&z, &spec(fl, 1)).unwrap();
        prop_assert!((v - l1(&z)).abs() <= 1e-12 * l1(&z).max(1.0));
    }

    #[test]
    fn full_rank_is_l2_or_linf((z, _r) in vector_and_rank(30)) {
        let q = z.len();
        let fro = norm_of(&z, &spec(NormFlavor::FrobeniusR, q)).unwrap();
        let sp = norm_of(&z, &spec(NormFlavor::SpectralR, q)).unwrap();
        prop_assert!((fro - l2(&z)).abs() <= 1e-12 * l2(&z).max(1.0));
        prop_assert_eq!(sp, linf(&z));
    }

    #[test]
    fn dual_pairing_bound((z, r) in vector_and_rank(20), seed in any::<u64>(), fl in flavor()) {
        // <z, w> <= N(z) G(w) for every w.
        let s = spec(fl, r);
        let mut g = rng::stream(seed, "pairing");
        let w: Vec<f64> = z.iter().map(|_| g.sample::<f64, _>(StandardNormal)).collect();
        let pairing: f64 = z.iter().zip(&w).map(|(a, b)| a * b).sum();
        let bound = norm_of(&z, &s).unwrap() * dual_norm_of(&w, &s).unwrap();
        prop_assert!(pairing <= bound * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn split_window_holds_for_exactly_one_s((z, r) in vector_and_rank(30)) {
        let p = MagnitudeProfile::new(&z).unwrap();
        let q = p.len();
        let hits: Vec<usize> = (0..r)
            .filter(|&s| {
                let head = r - s - 1;
                let level = (p.s1(q) - p.s1(head)) / (s + 1) as f64;
                p.a(head) > level && level >= p.a(head + 1)
            })
            .collect();
        let s = ksupport_split(&p, r);
        if p.max_abs() == 0.0 {
            prop_assert_eq!(s, r - 1);
        } else {
            prop_assert!(hits.len() <= 1, "several splits {:?}", hits);
            if let Some(&h) = hits.first() {
                prop_assert_eq!(s, h);
            }
        }
    }

    #[test]
    fn profile_round_trip((z, _r) in vector_and_rank(30)) {
        let p = MagnitudeProfile::new(&z).unwrap();
        prop_assert_eq!(p.reconstruct(), z.clone());
        prop_assert!(p.magnitudes().windows(2).all(|w| w[0] >= w[1]));
        // Stable order: equal magnitudes keep their original index order.
        for w in p.perm().windows(2) {
            if z[w[0]].abs() == z[w[1]].abs() {
                prop_assert!(w[0] < w[1]);
            }
        }
    }
}

/// The norm is the support function of the dual unit ball: random points of
/// the ball never exceed it, and the best of many samples comes close. Half
/// of the samples are Gaussian directions, half are perturbed signed
/// indicator vectors, which land near the vertices of the polyhedral ball.
#[test]
fn norm_is_support_function_of_dual_ball() {
    let mut g = rng::stream(11, "support_function");
    for case in 0..24 {
        let q = 1 + case % 4;
        let r = 1 + (case / 4) % q;
        let fl = if case % 2 == 0 {
            NormFlavor::FrobeniusR
        } else {
            NormFlavor::SpectralR
        };
        let s = spec(fl, r);
        let z: Vec<f64> = (0..q).map(|_| g.sample::<f64, _>(StandardNormal)).collect();
        let n = norm_of(&z, &s).unwrap();
        let mut best = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let w: Vec<f64> = if g.random_bool(0.5) {
                (0..q).map(|_| g.sample::<f64, _>(StandardNormal)).collect()
            } else {
                (0..q)
                    .map(|_| {
                        let on = if g.random_bool(0.5) { 1.0 } else { 0.0 };
                        let sign = if g.random_bool(0.5) { 1.0 } else { -1.0 };
                        sign * (on + 0.05 * g.sample::<f64, _>(StandardNormal))
                    })
                    .collect()
            };
            let d = dual_norm_of(&w, &s).unwrap();
            let pairing: f64 = z.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / d;
            assert!(
                pairing <= n * (1.0 + 1e-12),
                "sample {pairing} above norm {n}"
            );
            best = best.max(pairing);
        }
        assert!(best >= 0.98 * n, "q={q} r={r} {fl}: best {best}, norm {n}");
    }
}

#[test]
fn zero_vector_conventions() {
    for r in 1..=4 {
        let p = MagnitudeProfile::new(&[0.0; 4]).unwrap();
        assert_eq!(ksupport_split(&p, r), r - 1);
        for fl in [NormFlavor::FrobeniusR, NormFlavor::SpectralR] {
            assert_eq!(norm_value(&p, &spec(fl, r)).unwrap(), 0.0);
            assert_eq!(dual_norm_of(&[0.0; 4], &spec(fl, r)).unwrap(), 0.0);
        }
    }
}
