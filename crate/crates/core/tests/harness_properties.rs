use misdc_core::harness::{self, observed_order, Format, Mode, StudyConfig};
use misdc_core::Execution;
use proptest::prelude::*;

fn small_study() -> StudyConfig {
    StudyConfig {
        n_ladder: vec![40, 80, 160, 320],
        t_final: 0.1,
        sweeps: 3,
        record_wall_time: false,
        resolution: (12, 9),
        dx_sequence: vec![1e-1, 1e-2],
        ..StudyConfig::default()
    }
}

fn render(mode: Mode, config: &StudyConfig, format: Format, exec: Execution) -> Vec<u8> {
    let mut buf = Vec::new();
    let outcome = harness::run_study(mode, config, format, exec, &mut buf).unwrap();
    assert!(outcome.solver_failure.is_none());
    buf
}

const MODES: [Mode; 4] = [Mode::OrderStudy, Mode::RegionScan, Mode::LimitCheck, Mode::SingleRun];

#[test]
fn reports_are_bit_identical_across_runs_and_executors() {
    let config = small_study();
    for mode in MODES {
        for format in [Format::Csv, Format::Json] {
            let first = render(mode, &config, format, Execution::Parallel);
            assert_eq!(
                first,
                render(mode, &config, format, Execution::Parallel),
                "{mode} {format:?}"
            );
            assert_eq!(
                first,
                render(mode, &config, format, Execution::Sequential),
                "{mode} {format:?}"
            );
        }
    }
}

#[test]
fn csv_headers_match_schemas() {
    let config = small_study();
    let expected = [
        (Mode::OrderStudy, "n,dt,l1_error,rate,wall_seconds"),
        (Mode::RegionScan, "method,d_dt,r_dt,theta,converged"),
        (Mode::LimitCheck, "dx,alpha,beta,gamma,delta,theta"),
    ];
    for (mode, header) in expected {
        let text = String::from_utf8(render(mode, &config, Format::Csv, Execution::Sequential)).unwrap();
        assert_eq!(text.lines().next(), Some(header));
    }
    let text = String::from_utf8(render(Mode::RegionScan, &config, Format::Csv, Execution::Sequential)).unwrap();
    // Two methods on a 12 x 9 grid.
    assert_eq!(text.lines().count(), 1 + 2 * 12 * 9);
}

#[test]
fn emitted_rates_follow_from_emitted_errors() {
    let config = small_study();
    let text = String::from_utf8(render(Mode::OrderStudy, &config, Format::Csv, Execution::Parallel)).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), config.n_ladder.len());
    let errors: Vec<Option<f64>> = rows.iter().map(|r| r[2].parse().ok()).collect();
    for i in 1..rows.len() {
        match (errors[i - 1], errors[i]) {
            (Some(prev), Some(cur)) => {
                let rate: f64 = rows[i][3].parse().unwrap();
                assert_eq!(rate, observed_order(prev, cur));
            }
            _ => assert!(rows[i][3].is_empty()),
        }
    }
    assert!(rows[0][3].is_empty());
    assert!(rows.last().unwrap()[2].is_empty());
}

#[test]
fn json_reports_parse() {
    let config = small_study();
    for mode in MODES {
        let bytes = render(mode, &config, Format::Json, Execution::Sequential);
        let value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert!(value.is_object() || value.is_array(), "{mode}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l1_error_is_a_mean_absolute_difference(
        coarse in prop::collection::vec(-10.0..10.0f64, 1..50),
        shift in -3.0..3.0f64,
    ) {
        use misdc_core::harness::{l1_error, Coarsening};
        let fine: Vec<f64> = coarse.iter().flat_map(|c| [c + 7.0, c + shift]).collect();
        let e = l1_error(&coarse, &fine, Coarsening::Injection).unwrap();
        prop_assert!((e - shift.abs()).abs() <= 1e-12 * (1.0 + shift.abs()) + 1e-14 * 10.0);
        let fine: Vec<f64> = coarse.iter().flat_map(|c| [c - shift, c + shift]).collect();
        prop_assert!(l1_error(&coarse, &fine, Coarsening::Averaging).unwrap() <= 1e-13);
    }

    #[test]
    fn observed_order_inverts_power_laws(e in 1e-12..1.0f64, p in 0.5..6.0f64) {
        prop_assert!((observed_order(e * 2f64.powf(p), e) - p).abs() <= 1e-9);
    }
}
