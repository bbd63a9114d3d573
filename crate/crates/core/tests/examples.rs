//! Every crate example runs to completion.

macro_rules! example {
    ($name:ident, $path:literal) => {
        #[path = $path]
        mod $name;

        #[test]
        fn $name() {
            $name::main().unwrap();
        }
    };
}

example!(domain_and_fields, "../examples/domain_and_fields.rs");
example!(kernel_tables, "../examples/kernel_tables.rs");
example!(convolution, "../examples/convolution.rs");
example!(gamma_limits, "../examples/gamma_limits.rs");
example!(operators_and_certificates, "../examples/operators_and_certificates.rs");
example!(flows, "../examples/flows.rs");
example!(counterexample, "../examples/counterexample.rs");
example!(fourier_identity, "../examples/fourier_identity.rs");
example!(experiment_harness, "../examples/experiment_harness.rs");
