use num_bigint::BigInt;
use num_rational::Ratio;
use proptest::prelude::*;

use descent_core::padic::PadicNumber;
use descent_core::padic_series::{
    digits_to_int, isolate_zeros_outcome, newton_polygon, separation_modulus, Chart, PadicSeries, ResidueDisk,
    SeparationStatus,
};

/// Coefficients of `prod (z - a)` over the integers, constant term first.
fn from_roots(roots: &[i64]) -> Vec<BigInt> {
    let mut c = vec![BigInt::from(1)];
    for &a in roots {
        let mut next = vec![BigInt::from(0); c.len() + 1];
        for (i, x) in c.iter().enumerate() {
            next[i + 1] += x;
            next[i] -= x * BigInt::from(a);
        }
        c = next;
    }
    c
}

fn pow(p: u64, k: u32) -> BigInt {
    BigInt::from(p).pow(k)
}

fn in_disk(p: u64, a: i64, digits: &[u64]) -> bool {
    let m = pow(p, digits.len() as u32);
    ((BigInt::from(a) - digits_to_int(p, digits)) % &m) == BigInt::from(0)
}

fn roots_strategy() -> impl Strategy<Value = (u64, Vec<i64>)> {
    prop::sample::select(vec![2u64, 3, 5, 7])
        .prop_flat_map(|p| (Just(p), prop::collection::vec(-300i64..300, 1..=5)))
}

fn single_chart(p: u64, coeffs: &[BigInt], prec: u32) -> Chart {
    let series = PadicSeries::from_int_poly(p, coeffs, prec).unwrap();
    Chart { chart_id: "c".into(), p, disks: vec![ResidueDisk { center_label: "0".into(), series }] }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subdivision_accounts_for_every_root((p, roots) in roots_strategy()) {
        let f = PadicSeries::from_int_poly(p, &from_roots(&roots), 24).unwrap();
        let out = isolate_zeros_outcome(&f, "c", "0", 12);
        prop_assert_eq!(out.disk_zero_count, Some(roots.len() as u32));
        let emitted: u32 = out.disks.iter().map(|d| d.zero_count).sum();
        let unresolved: u32 = out.failures.iter().map(|f| f.zero_count.unwrap_or(0)).sum();
        prop_assert_eq!(emitted + unresolved, roots.len() as u32);
        for d in &out.disks {
            let inside = roots.iter().filter(|&&a| in_disk(p, a, &d.center_digits)).count();
            prop_assert_eq!(inside, 1, "disk {:?}", d.center_digits);
        }
        for fail in &out.failures {
            let inside = roots.iter().filter(|&&a| in_disk(p, a, &fail.center_digits)).count() as u32;
            prop_assert_eq!(Some(inside), fail.zero_count);
        }
    }

    #[test]
    fn hensel_certificates_verify((p, roots) in roots_strategy()) {
        let f = PadicSeries::from_int_poly(p, &from_roots(&roots), 24).unwrap();
        for d in isolate_zeros_outcome(&f, "c", "0", 12).disks {
            prop_assert!(!d.multiplicity_flag);
            let cert = d.certificate.as_ref().unwrap();
            prop_assert!(cert.verify(&f));
            let root = roots.iter().find(|&&a| in_disk(p, a, &d.center_digits)).unwrap();
            // The certified point is within the Hensel radius of the actual root.
            let diff = BigInt::from(*root) - &cert.point;
            let radius = pow(p, (cert.derivative_valuation + 1) as u32);
            prop_assert_eq!(diff % radius, BigInt::from(0));
        }
    }

    #[test]
    fn lowering_precision_only_degrades((p, roots) in roots_strategy(), low in 1u32..16) {
        let coeffs = from_roots(&roots);
        let full = separation_modulus(&[single_chart(p, &coeffs, 24)], 12);
        let reduced = separation_modulus(&[single_chart(p, &coeffs, low)], 12);
        if full.status == SeparationStatus::Separated && reduced.status == SeparationStatus::Separated {
            prop_assert_eq!(reduced.m, full.m);
            let shape = |r: &descent_core::padic_series::SeparationReport| {
                r.disks.iter().map(|d| (d.center_digits.clone(), d.zero_count)).collect::<Vec<_>>()
            };
            prop_assert_eq!(shape(&reduced), shape(&full));
        }
    }

    #[test]
    fn newton_polygon_is_the_lower_hull(
        p in prop::sample::select(vec![2u64, 3, 5]),
        raw in prop::collection::vec((0i64..6, 1i64..50), 1..10),
    ) {
        let coeffs: Vec<PadicNumber> = raw
            .iter()
            .map(|&(v, u)| PadicNumber::from_int(p, &(BigInt::from(u) * pow(p, v as u32)), 8))
            .collect();
        let degree = coeffs.len() - 1;
        let f = PadicSeries::new(p, coeffs.clone(), degree).unwrap();
        let poly = newton_polygon(&f).unwrap();
        prop_assert!(poly.vertices.windows(2).all(|w| w[0].0 < w[1].0));
        let slopes: Vec<Ratio<i64>> = poly.segments().iter().map(|s| s.slope).collect();
        prop_assert!(slopes.windows(2).all(|w| w[0] < w[1]));
        for (i, c) in coeffs.iter().enumerate() {
            let v = c.valuation().unwrap();
            if let Some(h) = poly.height_at(i) {
                prop_assert!(Ratio::from_integer(v) >= h, "point {} lies below the hull", i);
            }
        }
        let span: usize = poly.segments().iter().map(|s| s.length()).sum();
        prop_assert_eq!(poly.roots_at_origin() + span, poly.vertices.last().unwrap().0);
    }
}
