use adi_core::gamma::OperatorKind;
use adi_core::harness::{run_suite, run_suite_with, Category, Selection, SuiteOptions};

#[test]
fn every_category_passes_a_short_run() {
    let r = run_suite(Selection::All, 25, 7);
    assert!(r.passed(), "{}", r.to_json());
    for c in Category::ALL {
        let cat = r.category(c).unwrap();
        assert!(cat.properties_defined >= c.required(), "{c}");
        assert!(cat.properties.iter().all(|p| p.cases_run == 25), "{c}");
    }
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let sel = || Selection::Category(Category::GraphTopology);
    assert_eq!(run_suite(sel(), 40, 3), run_suite(sel(), 40, 3));
}

#[test]
fn selections_parse() {
    assert!(matches!("all".parse::<Selection>(), Ok(Selection::All)));
    assert!(matches!(
        "scope_algebra".parse::<Selection>(),
        Ok(Selection::Category(Category::ScopeAlgebra))
    ));
    assert!(matches!(
        "fuzz_scope_mutation".parse::<Selection>(),
        Ok(Selection::Property(_))
    ));
    assert!("nonsense".parse::<Selection>().is_err());
}

#[test]
fn weaker_operators_are_caught() {
    for op in [OperatorKind::Mean, OperatorKind::Max, OperatorKind::Product] {
        let opts = SuiteOptions {
            operator: op,
            ..SuiteOptions::new(Selection::Category(Category::REffCalculator), 300, 11)
        };
        let r = run_suite_with(&opts);
        assert!(!r.passed(), "{} slipped through", op.name());
    }
}
