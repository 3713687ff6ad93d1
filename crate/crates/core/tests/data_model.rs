mod common;

use copula_impute::data::{read_csv_from, Column, MissingTokens, Schema};
use copula_impute::kernels::{standard_normal, substream};
use copula_impute::simulation::{generate_panel, SimulationConfig, VARIABLES};
use copula_impute::{add_lags, compute_ranks, read_csv, ColumnKind, DataTable};
use proptest::prelude::*;
use rand::Rng;

fn fixture(n: usize, seed: u64) -> DataTable {
    let mut rng = substream(seed, 0);
    let mut cont = Vec::new();
    let mut ord = Vec::new();
    let mut bin = Vec::new();
    for i in 0..n {
        let miss = rng.random::<f64>() < 0.15;
        cont.push((!miss).then(|| 1e3 * standard_normal(&mut rng)));
        ord.push((i % 7 != 3).then_some((i % 5) as f64));
        bin.push((i % 11 != 0).then_some((i % 2) as f64));
    }
    DataTable::new(vec![
        Column::label("id", ColumnKind::UnitId, (0..n).map(|i| format!("u{i}")).collect()),
        Column::numeric("c", ColumnKind::Continuous, cont),
        Column::numeric("o", ColumnKind::Ordinal(0), ord),
        Column::numeric("b", ColumnKind::Binary, bin),
    ])
    .unwrap()
}

/// Plain comma splitting; the fixture never needs quoting.
fn naive_parse(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn csv_round_trip_matches_line_parser() {
    let table = fixture(100, 1);
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let (header, rows) = naive_parse(&text);
    assert_eq!(header, ["id", "c", "o", "b"]);
    assert_eq!(rows.len(), 100);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], format!("u{i}"));
        for (j, cell) in row.iter().enumerate().skip(1) {
            match table.value(i, j) {
                None => assert_eq!(cell, "NA"),
                Some(v) => assert_eq!(cell.parse::<f64>().unwrap(), v),
            }
        }
    }
    let schema = Schema::of(&table);
    let back = read_csv_from(buf.as_slice(), &schema, &MissingTokens::default()).unwrap();
    assert_eq!(back, table);
}

#[test]
fn csv_file_round_trip_with_custom_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("in.csv");
    std::fs::write(&path, "a,b\n1,x\n.,2\n3,4\n").unwrap();
    let schema = Schema::from_json_str(r#"{"a":"continuous","b":"ordinal"}"#).unwrap();
    let tokens = MissingTokens(vec![".".into(), "x".into()]);
    let t = read_csv(&path, &schema, &tokens).unwrap();
    assert_eq!(t.values(0), &[Some(1.0), None, Some(3.0)]);
    assert_eq!(t.values(1), &[None, Some(2.0), Some(4.0)]);
    assert_eq!(t.missing_count(), 2);
}

#[test]
fn schema_errors_are_config_errors() {
    use copula_impute::ErrorClass;
    let schema = Schema::from_json_str(r#"{"a":"continuous"}"#).unwrap();
    let err = read_csv_from("a,b\n1,2\n3,4\n".as_bytes(), &schema, &MissingTokens::default()).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Config);
    let err = read_csv_from("a\n1\nfoo\n".as_bytes(), &schema, &MissingTokens::default()).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Data);
    assert!(Schema::from_json_str(r#"{"a":"nominal"}"#).is_err());
}

#[test]
fn lags_follow_units_and_never_cross() {
    // Three units with unequal, unsorted periods; unit "b" skips period 3.
    let spec: [(&str, i64, f64); 10] = [
        ("a", 2, 12.0),
        ("b", 1, 21.0),
        ("a", 1, 11.0),
        ("c", 5, 35.0),
        ("b", 2, 22.0),
        ("a", 3, 13.0),
        ("b", 4, 24.0),
        ("c", 6, 36.0),
        ("c", 7, 37.0),
        ("a", 4, 14.0),
    ];
    let table = DataTable::new(vec![
        Column::label("unit", ColumnKind::UnitId, spec.iter().map(|s| s.0.to_string()).collect()),
        Column::label("time", ColumnKind::TimeId, spec.iter().map(|s| s.1.to_string()).collect()),
        Column::numeric("x", ColumnKind::Continuous, spec.iter().map(|s| Some(s.2)).collect()),
    ])
    .unwrap();
    let lagged = add_lags(&table, 2, &[]).unwrap();
    for lag in 1..=2 {
        let j = lagged.index_of(&format!("x_lag{lag}")).unwrap();
        for (i, &(u, t, _)) in spec.iter().enumerate() {
            let expected = spec.iter().find(|s| s.0 == u && s.1 == t - lag).map(|s| s.2);
            assert_eq!(lagged.value(i, j), expected, "row {i} lag {lag}");
        }
    }
}

#[test]
fn lag_expansion_of_simulated_panel() {
    let cfg = SimulationConfig::default();
    let table = generate_panel(&cfg, &mut substream(3, 0)).unwrap();
    let lagged = add_lags(&table, 4, &[]).unwrap();
    assert_eq!(lagged.data_columns().len(), VARIABLES.len() * 5);
    for v in VARIABLES {
        let j = lagged.index_of(&format!("{v}_lag4")).unwrap();
        let missing = lagged.values(j).iter().filter(|x| x.is_none()).count();
        assert_eq!(missing, cfg.units * 4);
        assert_eq!(lagged.kind(j), table.kind(table.index_of(v).unwrap()));
    }
    let partial = add_lags(&table, 1, &["V5"]).unwrap();
    assert!(partial.index_of("V5_lag1").is_none());
    assert!(partial.index_of("V4_lag1").is_some());
}

#[test]
fn missing_mask_matches_values() {
    let table = fixture(60, 4);
    let mask = table.mask();
    assert_eq!(mask.shape(), (60, 4));
    for i in 0..60 {
        for j in 0..4 {
            let missing = table.column(j).values().is_some_and(|v| v[i].is_none());
            assert_eq!(mask.is_missing(i, j), missing);
        }
    }
    assert_eq!(mask.count(), table.missing_count());
}

proptest! {
    #[test]
    fn ranks_are_invariant_under_exp(xs in prop::collection::vec(prop::option::weighted(0.8, -5.0..5.0f64), 3..60)) {
        let distinct = {
            let mut d: Vec<f64> = xs.iter().flatten().copied().collect();
            d.sort_by(f64::total_cmp);
            d.dedup();
            d.len()
        };
        prop_assume!(distinct >= 2);
        let t = DataTable::new(vec![Column::numeric("x", ColumnKind::Continuous, xs.clone())]).unwrap();
        let e = t.map_column(0, f64::exp).unwrap();
        let (r1, r2) = (compute_ranks(&t, 0).unwrap(), compute_ranks(&e, 0).unwrap());
        prop_assert_eq!(&r1.levels, &r2.levels);
        prop_assert_eq!(r1.level_count(), distinct);
        for (i, x) in xs.iter().enumerate() {
            if let (Some(x), Some(l)) = (x, r1.levels[i]) {
                prop_assert_eq!(r1.support[l], *x);
            }
        }
    }
}
