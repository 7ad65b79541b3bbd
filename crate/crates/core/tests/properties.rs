use num_complex::Complex64;
use proptest::prelude::*;

use qnoise::estimator::{added_noise_spectrum, normalize_estimator, snr_degradation};
use qnoise::netlist::parse_netlist;
use qnoise::network::{InputMode, SpectrumTable};

proptest! {
    #[test]
    fn snr_is_monotone_and_bounded(
        theta_a in 1e-3f64..1e3,
        theta_b in 0.0f64..1e3,
        extra in 0.0f64..1e3,
        g in 1.0f64..1e4,
        dg in 0.0f64..1e4,
    ) {
        let r = snr_degradation(theta_a, theta_b, g).unwrap();
        prop_assert!(r > 0.0 && r <= 1.0);
        prop_assert!(snr_degradation(theta_a, theta_b + extra, g).unwrap() <= r);
        prop_assert!(snr_degradation(theta_a, theta_b, g + dg).unwrap() <= r);
    }

    #[test]
    fn budget_terms_add_up(
        coeffs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, 0.5f64..1e4), 1..8),
        drop in 0usize..8,
    ) {
        let labels: Vec<String> = (0..coeffs.len()).map(|i| format!("x{i}")).collect();
        let row: Vec<_> = coeffs
            .iter()
            .zip(&labels)
            .map(|((re, im, _), l)| (InputMode::normal(l.clone()), Complex64::new(*re, *im)))
            .collect();
        let table = SpectrumTable::diagonal(
            labels.iter().cloned().zip(coeffs.iter().map(|c| c.2)),
        )
        .unwrap();
        let est = normalize_estimator(&row, Complex64::new(1.0, 0.0), "u").unwrap();
        let again = normalize_estimator(&est.terms, est.signal, "u").unwrap();
        prop_assert_eq!(&again, &est);

        let b = added_noise_spectrum(&est, &table).unwrap();
        let sum: f64 = b.terms.iter().map(|t| t.value).sum();
        prop_assert!(b.terms.iter().all(|t| t.value >= 0.0));
        prop_assert!((b.total - sum).abs() <= 1e-12 * b.total.max(1e-300));

        let removed = &labels[drop % labels.len()];
        let rest = b.without(removed);
        let expected = b.total - b.term(removed).unwrap();
        prop_assert!((rest.total - expected).abs() <= 1e-12 * b.total.max(1e-300));
    }

    #[test]
    fn canonical_form_round_trips(
        r in 1e-3f64..1e9,
        t in 0.0f64..1e3,
        cap in 1e-15f64..1e-3,
        gre in 1.0f64..1e3,
        gim in -1e3f64..1e3,
        f_min in 1e-3f64..1e6,
        span in 1.0f64..1e3,
        n in 1usize..500,
        log in any::<bool>(),
    ) {
        let n = if span == 1.0 { 1 } else { n.max(2) };
        let text = format!(
            "line a R={r:e} T={t:e}\nline b R={r:e} T=0\nline s R=50 T={t:e}\n\
             cap c C={cap:e} ports=(a,b)\ngain g in=s G={gre}{gim:+}i T_b={t:e}\n\
             sweep {f_min:e} {:e} {n} {}\nmeasure b as e signal=a\n",
            f_min * span,
            if log { "log" } else { "lin" },
        );
        let doc = parse_netlist(&text).unwrap();
        let printed = doc.to_string();
        let again = parse_netlist(&printed).unwrap();
        prop_assert_eq!(&again, &doc);
        prop_assert_eq!(again.to_string(), printed);
    }
}
