macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }
    };
}

example!(theorem_certificate);
example!(family_membership);
example!(order_swap);
example!(classify_violations);
example!(tomography);
example!(approximate_not);
example!(scenario_report);

#[test]
fn examples_run() {
    theorem_certificate::run().unwrap();
    family_membership::run().unwrap();
    order_swap::run().unwrap();
    classify_violations::run().unwrap();
    tomography::run().unwrap();
    approximate_not::run().unwrap();
}

#[test]
fn scenario_example_runs_shipped_files() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in ["case_one_vs_two.toml", "nonlinear_reset.toml"] {
        assert_eq!(scenario_report::run_file(&dir.join(name)).unwrap(), 0);
    }
}
