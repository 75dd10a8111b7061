use uamm_core::oracle::{property_suite, CrossingMutant, OracleConfig, RemoveMutant, Uamm};
use uamm_core::state::SlippageMode;

fn small() -> OracleConfig {
    OracleConfig::default().with_cases(300)
}

fn failures(report: &uamm_core::oracle::Report) -> Vec<String> {
    report
        .failed()
        .map(|p| format!("{}: {:?}", p.name, p.first_counterexample))
        .collect()
}

#[test]
fn correct_engine_passes_in_output_only_mode() {
    let report = property_suite(&small(), &Uamm);
    assert!(report.passed, "{:#?}", failures(&report));
    assert!(report.get("additivity_divergence").is_none());
}

#[test]
fn correct_engine_passes_in_input_mode_when_divergence_is_expected() {
    let mut config = small().with_mode(SlippageMode::InputAndOutput);
    config.expect_additivity_failure = true;
    let report = property_suite(&config, &Uamm);
    assert!(report.passed, "{:#?}", failures(&report));
    assert!(!report.get("price_ordering").unwrap().applicable);
    assert!(report.get("additivity_divergence").unwrap().cases > 0);
}

#[test]
fn input_mode_without_expectation_reports_additivity_failure() {
    let config = small().with_mode(SlippageMode::InputAndOutput);
    let report = property_suite(&config, &Uamm);
    let names: Vec<_> = report.failed().map(|p| p.name.clone()).collect();
    assert_eq!(names, ["swap_additivity"]);
}

#[test]
fn expecting_divergence_in_output_only_mode_fails() {
    let mut config = small();
    config.expect_additivity_failure = true;
    let report = property_suite(&config, &Uamm);
    let names: Vec<_> = report.failed().map(|p| p.name.clone()).collect();
    assert_eq!(names, ["additivity_divergence"]);
}

#[test]
fn crossing_mutant_breaks_additivity() {
    let report = property_suite(&small(), &CrossingMutant);
    let additivity = report.get("swap_additivity").unwrap();
    assert!(additivity.failures > 0);
    assert!(additivity.first_counterexample.is_some());
    assert!(report.get("liquidity_reversibility").unwrap().passed());
}

#[test]
fn remove_mutant_breaks_reversibility() {
    let report = property_suite(&small(), &RemoveMutant);
    let rev = report.get("liquidity_reversibility").unwrap();
    assert!(rev.failures > 0);
    assert!(rev.first_counterexample.as_deref().unwrap().contains("remove(add(b))"));
    assert!(report.get("swap_additivity").unwrap().passed());
}

#[test]
fn seed_changes_cases_not_outcomes() {
    let a = property_suite(&small().with_seed(1), &Uamm);
    let b = property_suite(&small().with_seed(2), &Uamm);
    assert!(a.passed && b.passed);
    let again = property_suite(&small().with_seed(1), &Uamm);
    assert_eq!(a.to_json(), again.to_json());
}
