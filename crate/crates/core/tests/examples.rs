macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $name {
            include!($file);
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(special_functions, "../examples/special_functions.rs");
example!(composite_pdf, "../examples/composite_pdf.rs");
example!(water_filling, "../examples/water_filling.rs");
example!(joint_allocation, "../examples/joint_allocation.rs");
example!(energy_efficiency, "../examples/energy_efficiency.rs");
example!(validate, "../examples/validate.rs");
