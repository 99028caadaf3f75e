macro_rules! example {
    ($name:ident, $file:literal) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $name() {
            $name::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(area_law, "area_law.rs");
example!(single_copy, "single_copy.rs");
example!(dimension_ratio, "dimension_ratio.rs");
example!(rg_flow, "rg_flow.rs");
example!(majorization, "majorization.rs");
example!(perturbative_tail, "perturbative_tail.rs");
example!(zeta_tail, "zeta_tail.rs");
example!(mode_cache, "mode_cache.rs");
