use chronos_cli::csvio::{format_number, learning_curve_table, thermo_table, Table};
use chronos_cli::svg::{render_svg, PlotSpec, Series};
use chronos_core::thermo::ThermoSeries;
use chronos_learn::classifier::LearningCurve;
use proptest::prelude::*;

#[test]
fn fifteen_significant_digits() {
    let cases = [
        (0.0, "0"),
        (1.0, "1"),
        (-2.5, "-2.5"),
        (100.0, "100"),
        (0.1, "0.1"),
        (1.0 / 3.0, "0.333333333333333"),
        (2.0 / 3.0, "0.666666666666667"),
        (-1f64.tanh(), "-0.761594155955765"),
        (123456.789, "123456.789"),
        (1e-5, "0.00001"),
        (1.5e-7, "1.5e-7"),
        (1e15, "1e15"),
        (123456789012345678.0, "1.23456789012346e17"),
        (12345678901234.5, "12345678901234.5"),
        (99999999999999.99, "100000000000000"),
        (999999999999999.9, "1e15"),
        (f64::NAN, "NaN"),
        (f64::INFINITY, "inf"),
        (f64::NEG_INFINITY, "-inf"),
    ];
    for (x, want) in cases {
        assert_eq!(format_number(x), want, "{x:e}");
    }
}

proptest! {
    #[test]
    fn formatted_numbers_parse_back_within_precision(m in -1.0f64..1.0, e in -30i32..30) {
        let x = m * 10f64.powi(e);
        let s = format_number(x);
        let digits = s.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        prop_assert!(digits.trim_start_matches('0').trim_end_matches('0').len() <= 15, "{}", s);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-15 * x.abs(), "{} -> {}", x, s);
    }

    #[test]
    fn table_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 0..20)) {
        let mut t = Table::new(["a", "b", "c"]);
        for r in &rows {
            // values that survive the 15-digit text form exactly
            t.push(r.iter().map(|v| format_number(*v).parse().unwrap()).collect()).unwrap();
        }
        let back = Table::parse(&t.to_bytes()).unwrap();
        prop_assert_eq!(back, t);
    }
}

#[test]
fn empty_tables_are_header_only() {
    let t = Table::new(["epoch", "loss"]);
    assert_eq!(t.to_bytes(), b"epoch,loss\n");
    assert!(Table::parse(&t.to_bytes()).unwrap().rows().is_empty());
    let curve = learning_curve_table(&LearningCurve::default());
    assert_eq!(curve.to_bytes(), b"epoch,train_loss,test_loss,test_accuracy\n");
}

#[test]
fn rows_must_match_the_columns() {
    let mut t = Table::new(["a", "b"]);
    assert!(t.push(vec![1.0]).is_err());
    assert!(t.push(vec![1.0, 2.0, 3.0]).is_err());
    assert!(Table::parse(b"a,b\n1,2,3\n").is_err());
    assert!(Table::parse(b"a,b\n1,x\n").is_err());
}

#[test]
fn thermo_rows_follow_the_schema() {
    let series = ThermoSeries {
        steps: vec![0, 1, 2],
        electron_energy: vec![-0.5, 0.0, 0.25],
        bath_mean_energy: vec![0.7, 0.6, 0.55],
        bath_energy_stddev_of_mean: vec![0.01, 0.02, 0.03],
        entropy: vec![3.5, 4.0, 4.2],
        sample_count: 10,
        n_bath: 9,
    };
    let t = thermo_table(&series);
    assert_eq!(t.columns().len(), 5);
    assert_eq!(t.rows().len(), 3);
    assert!(t.rows().iter().all(|r| r.len() == 5));
    let text = String::from_utf8(t.to_bytes()).unwrap();
    assert_eq!(text.lines().nth(2).unwrap(), "1,0,0.6,0.02,4");
    assert_eq!(Table::parse(text.as_bytes()).unwrap(), t);
}

fn count(svg: &str, needle: &str) -> usize {
    svg.matches(needle).count()
}

fn spec(series: Vec<Series>) -> PlotSpec {
    PlotSpec {
        title: "T".into(),
        x_label: "x".into(),
        y_label: "y".into(),
        series,
    }
}

#[test]
fn single_point_series_renders() {
    let svg = render_svg(&spec(vec![Series::line("one", vec![(2.0, 3.0)])])).unwrap();
    assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(count(&svg, "<circle"), 1);
    assert!(!svg.contains("NaN") && !svg.contains("inf"));
}

#[test]
fn error_bar_series_has_two_n_plus_one_primitives() {
    let n = 7;
    let pts: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, (i as f64).sin())).collect();
    let s = Series::line("e", pts).with_errors(vec![0.1; n]);
    let svg = render_svg(&spec(vec![s])).unwrap();
    let group = svg
        .split("<g class=\"series\"")
        .nth(1)
        .unwrap()
        .split("</g>")
        .next()
        .unwrap();
    let primitives = count(group, "<polyline") + count(group, "<line") + count(group, "<circle");
    assert_eq!(primitives, 2 * n + 1);
    assert_eq!(count(group, "class=\"error-bar\""), n);
}

#[test]
fn plots_have_axes_ticks_and_legend() {
    let svg = render_svg(&spec(vec![
        Series::line("a", vec![(0.0, 0.0), (1.0, 1.0)]),
        Series::line("b & c", vec![(0.0, 1.0), (1.0, 0.0)]).markers(),
    ]))
    .unwrap();
    assert!(svg.contains("class=\"axes\""));
    assert!(svg.contains("class=\"legend\""));
    assert!(svg.contains(">b &amp; c</text>"));
    assert_eq!(count(&svg, "<polyline"), 1);
    let axes = svg
        .split("class=\"axes\"")
        .nth(1)
        .unwrap()
        .split("</g>")
        .next()
        .unwrap();
    assert!(count(axes, "<text") >= 4);
}

#[test]
fn rendering_is_deterministic() {
    let make = || {
        spec(vec![
            Series::line("a", vec![(0.0, 0.1), (1.0, 0.7), (2.0, 0.75)]).with_errors(vec![0.01, 0.02, 0.03])
        ])
    };
    assert_eq!(render_svg(&make()).unwrap(), render_svg(&make()).unwrap());
}

#[test]
fn invalid_plots_are_rejected() {
    assert!(render_svg(&spec(vec![])).is_err());
    assert!(render_svg(&spec(vec![Series::line("empty", vec![])])).is_err());
    assert!(render_svg(&spec(vec![Series::line("nan", vec![(0.0, f64::NAN)])])).is_err());
    assert!(render_svg(&spec(vec![Series::line("e", vec![(0.0, 1.0)]).with_errors(vec![])])).is_err());
}
