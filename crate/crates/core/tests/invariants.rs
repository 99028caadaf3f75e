use proptest::prelude::*;
use radial_entanglement::reduction::{reduce_mode_kept, Kept, ModeOmega};
use radial_entanglement::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectra_are_valid_and_complementary(
        dim in 1.3f64..4.9,
        mass in 0.0f64..2.0,
        sites in 4usize..24,
        frac in 0.1f64..0.9,
        l in 0usize..60,
    ) {
        let n = ((sites as f64 * frac) as usize).clamp(1, sites - 1);
        let params = ModelParams::new(dim, mass, sites);
        let mode = ModeOmega::new(&params, l).unwrap();
        let part = Partition::new(n, sites).unwrap();
        let outer = reduce_mode_kept(&mode, part, Kept::Outer).unwrap();
        let inner = reduce_mode_kept(&mode, part, Kept::Inner).unwrap();
        for &x in outer.xi.iter().chain(&inner.xi) {
            prop_assert!((0.0..1.0).contains(&x));
        }
        prop_assert!(outer.xi.windows(2).all(|w| w[0] >= w[1]));
        let (so, eo) = entanglement::spectrum_sums(&outer.xi).unwrap();
        let (si, ei) = entanglement::spectrum_sums(&inner.xi).unwrap();
        prop_assert!((so - si).abs() <= 1e-8 * so.max(1e-30) + 1e-13, "{} vs {}", so, si);
        prop_assert!((eo - ei).abs() <= 1e-8 * eo.max(1e-30) + 1e-13);
        prop_assert!(eo <= so + 1e-15);
    }

    #[test]
    fn coupling_sign_is_irrelevant(dim in 1.5f64..4.5, sites in 4usize..16, l in 0usize..30) {
        let params = ModelParams::new(dim, 0.0, sites);
        let k = build_coupling_matrix(&params, l);
        let part = Partition::new(sites / 2, sites).unwrap();
        let a = reduce_mode(&ModeOmega::from_coupling(&k).unwrap(), part).unwrap();
        let b = reduce_mode(&ModeOmega::from_coupling(&k.with_flipped_couplings()).unwrap(), part).unwrap();
        for (x, y) in a.xi.iter().zip(&b.xi) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropy_is_monotone_in_xi(a in 0.0f64..0.999, b in 0.0f64..0.999) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(mode_entropy(lo).unwrap() <= mode_entropy(hi).unwrap() + 1e-15);
        prop_assert!(mode_single_copy(lo).unwrap() <= mode_single_copy(hi).unwrap() + 1e-15);
        prop_assert!(mode_single_copy(hi).unwrap() <= mode_entropy(hi).unwrap() + 1e-15);
    }

    #[test]
    fn product_spectrum_majorizes_itself(xis in prop::collection::vec(0.0f64..0.8, 1..5), k in 1usize..40) {
        let p = top_k_product_spectrum(&xis, k).unwrap();
        prop_assert!(majorizes(&p, &p, k).holds);
        prop_assert!(p.probs.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(p.mass <= 1.0 + 1e-12);
    }

    #[test]
    fn largest_probability_is_single_copy(xis in prop::collection::vec(0.0f64..0.9, 1..6)) {
        let p = top_k_product_spectrum(&xis, 1).unwrap();
        let e1: f64 = xis.iter().map(|&x| mode_single_copy(x).unwrap()).sum();
        prop_assert!((-p.probs[0].ln() - e1).abs() <= 1e-12);
    }

    #[test]
    fn factorwise_majorization_lifts_to_products(
        pairs in prop::collection::vec((0.0f64..0.8, 0.0f64..1.0), 1..5),
        k in 1usize..60,
    ) {
        // ξ′ ≤ ξ mode by mode, so every factor of the primed state is majorized.
        let xi: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let xi_primed: Vec<f64> = pairs.iter().map(|p| p.0 * p.1).collect();
        let p = top_k_product_spectrum(&xi, k).unwrap();
        let q = top_k_product_spectrum(&xi_primed, k).unwrap();
        let report = majorizes(&q, &p, k);
        prop_assert!(report.holds, "{:?}", report.first_violation);
    }

    #[test]
    fn heavier_field_has_smaller_modes(mass in 0.0f64..2.0, extra in 0.05f64..2.0, l in 0usize..20) {
        let light = ModelParams::new(3.0, mass, 16);
        let heavy = light.with_mass(mass + extra);
        let part = Partition::new(8, 16).unwrap();
        let a = reduce_mode(&ModeOmega::new(&light, l).unwrap(), part).unwrap();
        let b = reduce_mode(&ModeOmega::new(&heavy, l).unwrap(), part).unwrap();
        // Entries below a few ulps of ξ₁ are rounding noise.
        let floor = 64.0 * f64::EPSILON * a.largest();
        for (x, y) in a.xi.iter().zip(&b.xi) {
            prop_assert!(*y <= *x * (1.0 + 1e-9) + floor, "{} > {}", y, x);
        }
    }
}

#[test]
fn geometric_entropy_converges_from_below() {
    let xis = [0.3, 0.1, 0.05];
    let exact: f64 = xis.iter().map(|&x| mode_entropy(x).unwrap()).sum();
    let mut previous = 0.0;
    for k in [5, 20, 100, 1000] {
        let p = top_k_product_spectrum(&xis, k).unwrap();
        let partial = p.partial_entropy();
        assert!(partial >= previous - 1e-15);
        assert!(partial <= exact + 1e-12);
        previous = partial;
    }
    assert!(exact - previous < 1e-3, "{previous} vs {exact}");
}
