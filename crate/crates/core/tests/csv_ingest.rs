use std::fmt::Write as _;

use pmu_recovery::harness::pmu_corpus;
use pmu_recovery::series::{
    read_csv, read_csv_from, write_csv, ChannelKind, ColumnSpec, CsvSchema,
};
use pmu_recovery::Error;

#[test]
fn long_file_round_trips() {
    let corpus = pmu_corpus(4, 54_000, 30.0, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pmu.csv");
    write_csv(&path, &corpus.synthetic.truth).unwrap();
    let back = read_csv(&path, &CsvSchema::default()).unwrap();
    assert_eq!(back.len(), 54_000);
    assert_eq!(back.channel_count(), 12);
    assert!((back.rate_fps() - 30.0).abs() < 1e-9);
    for (a, b) in corpus
        .synthetic
        .truth
        .channels()
        .iter()
        .zip(back.channels())
    {
        assert_eq!(a.id, b.id);
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn gaps_and_nan_literals_are_missing() {
    let mut text = String::from("t,a,b\n");
    for i in 0..10 {
        let a = match i {
            3 => String::new(),
            5 => "NaN".into(),
            _ => format!("{}", i as f64),
        };
        writeln!(text, "{},{a},{}", i as f64 / 30.0, 2 * i).unwrap();
    }
    let d = read_csv_from(text.as_bytes(), &CsvSchema::default()).unwrap();
    let a = d.channel("a").unwrap();
    assert_eq!(a.missing_count(), 2);
    assert!(!a.mask()[3] && !a.mask()[5]);
    assert!(a.values()[3].is_nan());
    assert_eq!(d.channel("b").unwrap().missing_count(), 0);
}

#[test]
fn schema_selects_and_orders_columns() {
    let text = "time,x,y,z\n0,1,2,3\n0.5,4,5,6\n1,7,8,9\n";
    let schema = CsvSchema {
        time_column: Some("time".into()),
        channels: vec![
            ColumnSpec::new("z", ChannelKind::Frequency),
            ColumnSpec::new("x", ChannelKind::VoltageMagnitude),
        ],
    };
    let d = read_csv_from(text.as_bytes(), &schema).unwrap();
    assert_eq!(d.channel_ids(), vec!["z", "x"]);
    assert_eq!(d.channels()[0].values(), &[3.0, 6.0, 9.0]);
    assert!((d.rate_fps() - 2.0).abs() < 1e-12);
}

#[test]
fn malformed_files_are_rejected() {
    let ragged = "t,a\n0,1\n1,2,3\n";
    match read_csv_from(ragged.as_bytes(), &CsvSchema::default()) {
        Err(Error::RaggedRow { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let uneven = "t,a\n0,1\n1,2\n3,3\n";
    assert!(matches!(
        read_csv_from(uneven.as_bytes(), &CsvSchema::default()),
        Err(Error::NonUniformTimestamps { line: 4, .. })
    ));
    let empty = "t,a\n0,\n1,\n";
    assert!(matches!(
        read_csv_from(empty.as_bytes(), &CsvSchema::default()),
        Err(Error::AllMissingChannel(_))
    ));
    let junk = "t,a\n0,abc\n";
    assert!(matches!(
        read_csv_from(junk.as_bytes(), &CsvSchema::default()),
        Err(Error::Csv { .. })
    ));
    let missing = CsvSchema::with_channels(vec![ColumnSpec::new("q", ChannelKind::Generic)]);
    assert!(matches!(
        read_csv_from("t,a\n0,1\n".as_bytes(), &missing),
        Err(Error::Config(_))
    ));
}
