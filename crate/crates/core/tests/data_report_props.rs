use proptest::prelude::*;
use tgd::data::{describe, embedded, FreqTable, DOCTOR_VISIT, NTG};
use tgd::report::{compare, ModelSet};
use tgd::TgdError;

#[test]
fn embedded_listings_are_locked() {
    // frequencies as printed with the data, a bare value meaning count 1
    let ntg: Vec<(u64, u64)> = vec![
        (0, 16), (1, 13), (2, 14), (3, 9), (4, 11), (5, 13), (6, 8), (7, 4), (8, 9),
        (9, 6), (10, 3), (11, 4), (12, 6), (15, 4), (16, 1), (20, 1), (43, 1),
    ];
    let dv: Vec<(u64, u64)> = vec![(0, 4141), (1, 782), (2, 174), (3, 30), (4, 24), (5, 39)];
    assert_eq!(NTG, ntg.as_slice());
    assert_eq!(DOCTOR_VISIT, dv.as_slice());
    let ntg = embedded("ntg").unwrap().table;
    assert_eq!((ntg.n(), ntg.sum() as u64), (123, 664));
    let dv = embedded("doctor_visit").unwrap().table;
    assert_eq!((dv.n(), dv.sum() as u64), (5190, 1511));
}

#[test]
fn descriptives_of_embedded_data() {
    let d = describe(&embedded("ntg").unwrap().table);
    assert!((d.mean - 5.398).abs() < 0.002);
    assert!((d.variance - 30.045).abs() < 0.002);
    let d = describe(&embedded("doctor_visit").unwrap().table);
    assert!((d.index_of_dispersion - 1.765).abs() < 0.002);
}

#[test]
fn csv_accepts_header_crlf_and_blank_lines() {
    let t = FreqTable::read_csv("value,count\r\n0,3\r\n\r\n2,1\r\n".as_bytes()).unwrap();
    assert_eq!(t.entries(), &[(0, 3), (2, 1)]);
    let t = FreqTable::read_csv("1,2\n1,3\n".as_bytes()).unwrap();
    assert_eq!(t.entries(), &[(1, 5)]);
}

#[test]
fn csv_rejects_bad_rows() {
    assert!(matches!(
        FreqTable::read_csv("0,1\n-1,2\n".as_bytes()),
        Err(TgdError::NegativeValue { line: 2 })
    ));
    assert!(matches!(
        FreqTable::read_csv("0,1\nx,2\n".as_bytes()),
        Err(TgdError::Parse { line: 2, .. })
    ));
    assert!(matches!(
        FreqTable::read_csv("0,1,2\n".as_bytes()),
        Err(TgdError::Parse { .. })
    ));
    assert!(matches!(FreqTable::read_csv("value,count\n".as_bytes()), Err(TgdError::EmptyData)));
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ntg.csv");
    let t = embedded("ntg").unwrap().table;
    t.save_csv(&path).unwrap();
    assert_eq!(FreqTable::load_csv(&path).unwrap(), t);
}

#[test]
fn report_aic_matches_loglik() {
    for name in ["ntg", "doctor_visit"] {
        let data = embedded(name).unwrap().table;
        let r = compare(name, &data, &ModelSet::all()).unwrap();
        for m in &r.models {
            if let (Some(ll), Some(aic)) = (m.loglik, m.aic) {
                assert!((aic - (-2.0 * ll + 2.0 * m.free_params as f64)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn report_json_is_byte_identical_across_runs() {
    let data = embedded("doctor_visit").unwrap().table;
    let a = compare("doctor_visit", &data, &ModelSet::all()).unwrap().to_json().unwrap();
    let b = compare("doctor_visit", &data, &ModelSet::all()).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["dataset"], "doctor_visit");
}

proptest! {
    #[test]
    fn csv_round_trip(pairs in prop::collection::vec((0u64..10_000, 1u64..1_000_000), 1..40)) {
        let t = FreqTable::from_counts(pairs).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        prop_assert_eq!(FreqTable::read_csv(buf.as_slice()).unwrap(), t);
    }
}
