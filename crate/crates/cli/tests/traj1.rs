use std::fs;

use chronos_cli::raw;
use chronos_cli::traj1::{decode, encode, read_traj1, write_traj1, Traj1Error};
use chronos_core::protocol::{Direction, Label, RawStepRecord, TrajectoryRecord};
use chronos_core::qcore::Bitstring;
use proptest::prelude::*;

fn record(n_qubits: usize, bits: &[u8], label: Label) -> TrajectoryRecord {
    TrajectoryRecord::from_flat(n_qubits, bits, label).unwrap()
}

fn header(q: usize, s: usize, label: &str, c: usize) -> String {
    format!("#TRAJ v1 qubits={q} steps={s} label={label} count={c}\n")
}

fn label_strategy() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Forward), Just(Label::Backward), Just(Label::Unlabeled)]
}

fn dataset_strategy() -> impl Strategy<Value = Vec<TrajectoryRecord>> {
    (1usize..=12, 0usize..6, label_strategy(), 0usize..25).prop_flat_map(|(q, s, label, count)| {
        prop::collection::vec(prop::collection::vec(0u8..=1, (s + 1) * q), count)
            .prop_map(move |rows| rows.iter().map(|b| record(q, b, label)).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn round_trip_is_lossless(data in dataset_strategy()) {
        let bytes = encode(&data).unwrap();
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(&back, &data);
        prop_assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn body_lines_are_step_major(q in 1usize..8, s in 0usize..4, seed in prop::collection::vec(0u8..=1, 40)) {
        let n = (s + 1) * q;
        let bits: Vec<u8> = seed.iter().cycle().take(n).copied().collect();
        let text = String::from_utf8(encode(&[record(q, &bits, Label::Forward)]).unwrap()).unwrap();
        let line = text.lines().nth(1).unwrap();
        for step in 0..=s {
            for qubit in 0..q {
                let c = line.as_bytes()[step * q + qubit];
                prop_assert_eq!(c - b'0', bits[step * q + qubit]);
            }
        }
    }
}

#[test]
fn exact_bytes() {
    let r = record(3, &[1, 0, 0, 0, 1, 1], Label::Backward);
    let bytes = encode(&[r.clone(), r]).unwrap();
    assert_eq!(
        String::from_utf8(bytes).unwrap(),
        format!("{}100011\n100011\n", header(3, 1, "backward", 2))
    );
}

#[test]
fn empty_dataset_is_header_only() {
    let bytes = encode(&[]).unwrap();
    assert_eq!(bytes, header(0, 0, "none", 0).into_bytes());
    assert!(decode(&bytes).unwrap().is_empty());
    // a declared shape with no records is also empty
    assert!(decode(header(10, 4, "forward", 0).as_bytes()).unwrap().is_empty());
}

#[test]
fn missing_final_newline_is_accepted() {
    let text = format!("{}0110", header(2, 1, "forward", 1));
    assert_eq!(decode(text.as_bytes()).unwrap().len(), 1);
}

#[test]
fn truncated_body_reports_count_mismatch() {
    let text = format!("{}0110\n1001\n", header(2, 1, "forward", 3));
    match decode(text.as_bytes()) {
        Err(Traj1Error::CountMismatch { line, expected, found }) => {
            assert_eq!((line, expected, found), (4, 3, 2));
        }
        other => panic!("{other:?}"),
    }
    let msg = decode(text.as_bytes()).unwrap_err().to_string();
    assert!(msg.contains("3") && msg.contains("2"), "{msg}");
}

#[test]
fn surplus_body_reports_count_mismatch() {
    let text = format!("{}0110\n1001\n", header(2, 1, "forward", 1));
    match decode(text.as_bytes()) {
        Err(Traj1Error::CountMismatch { line, expected, found }) => {
            assert_eq!((line, expected, found), (3, 1, 2));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_character_reports_line_and_column() {
    for (body, column, found) in [
        ("01x0", 3, b'x'),
        ("0110\r", 5, b'\r'),
        ("01 0", 3, b' '),
        ("2110", 1, b'2'),
    ] {
        let text = format!("{}1111\n{body}\n", header(2, 1, "none", 2));
        match decode(text.as_bytes()) {
            Err(Traj1Error::BadCharacter {
                line,
                column: c,
                found: f,
            }) => {
                assert_eq!((line, c, f), (3, column, found), "{body:?}");
            }
            other => panic!("{body:?}: {other:?}"),
        }
    }
    let text = format!("{}01\u{e9}0\n", header(2, 1, "none", 1));
    assert!(matches!(
        decode(text.as_bytes()),
        Err(Traj1Error::BadCharacter { line: 2, column: 3, .. })
    ));
}

#[test]
fn wrong_row_length_is_reported() {
    for body in ["011", "01101", ""] {
        let text = format!("{}{body}\n", header(2, 1, "forward", 1));
        match decode(text.as_bytes()) {
            Err(Traj1Error::RowLength { line, expected, found }) => {
                assert_eq!((line, expected, found), (2, 4, body.len()));
            }
            other => panic!("{body:?}: {other:?}"),
        }
    }
}

#[test]
fn malformed_headers() {
    let cases = [
        "",
        "#TRAJ v2 qubits=2 steps=1 label=forward count=0",
        "#TRAJ v1 qubits=2 steps=1 label=forward",
        "#TRAJ v1 qubits=2 steps=1 label=forward count=1 extra=1",
        "#TRAJ v1 steps=1 qubits=2 label=forward count=0",
        "#TRAJ v1 qubits=two steps=1 label=forward count=0",
        "#TRAJ v1 qubits=2 steps=-1 label=forward count=0",
        "#TRAJ v1 qubits=2 steps=1 label=sideways count=0",
        "#TRAJ v1 qubits=2 steps=1 label=forward count=+1",
        "#TRAJ v1 qubits=0 steps=1 label=forward count=1",
        "#TRAJ v1 qubits=21 steps=1 label=forward count=1",
        "#TRAJ v1  qubits=2 steps=1 label=forward count=0",
        "#TRAJ v1 qubits=2 steps=1 label=forward count=0\r",
        "#TRAJ v1 qubits=2 steps=99999999999999999999 label=forward count=1",
    ];
    for h in cases {
        let text = format!("{h}\n0110\n");
        match decode(text.as_bytes()) {
            Err(Traj1Error::Header { line: 1, .. }) => {}
            other => panic!("{h:?}: {other:?}"),
        }
    }
}

#[test]
fn error_kinds_are_distinct_and_name_the_line() {
    let header_err = decode(b"#TRAJ v9\n").unwrap_err().to_string();
    let char_err = decode(format!("{}0x10\n", header(2, 1, "none", 1)).as_bytes())
        .unwrap_err()
        .to_string();
    let count_err = decode(header(2, 1, "none", 1).as_bytes()).unwrap_err().to_string();
    let len_err = decode(format!("{}010\n", header(2, 1, "none", 1)).as_bytes())
        .unwrap_err()
        .to_string();
    let all = [&header_err, &char_err, &count_err, &len_err];
    for (i, a) in all.iter().enumerate() {
        assert!(a.starts_with("line "), "{a}");
        for b in &all[i + 1..] {
            assert_ne!(a, b);
        }
    }
}

#[test]
fn mixed_datasets_cannot_share_a_file() {
    let a = record(2, &[0, 1, 1, 0], Label::Forward);
    let b = record(2, &[0, 1, 1, 0], Label::Backward);
    assert!(matches!(encode(&[a.clone(), b]), Err(Traj1Error::Inconsistent(_))));
    let c = record(2, &[0, 1, 1, 0, 1, 1], Label::Forward);
    assert!(matches!(encode(&[a, c]), Err(Traj1Error::Inconsistent(_))));
}

#[test]
fn file_writes_replace_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.traj");
    let first = vec![record(2, &[1, 1, 0, 0], Label::Forward); 3];
    write_traj1(&path, &first).unwrap();
    assert_eq!(read_traj1(&path).unwrap(), first);
    let second = vec![record(3, &[1, 0, 1], Label::Backward)];
    write_traj1(&path, &second).unwrap();
    assert_eq!(read_traj1(&path).unwrap(), second);
    let names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 1, "{names:?}");

    // a failing write leaves nothing behind and names the path
    let missing = dir.path().join("no/such/dir/d.traj");
    let err = write_traj1(&missing, &first).unwrap_err();
    assert!(matches!(err, Traj1Error::Io { .. }));
    assert!(err.to_string().contains("d.traj"));
    assert!(matches!(read_traj1(&missing), Err(Traj1Error::Io { .. })));
}

fn run(initial: u64, outcome: u64, direction: Direction) -> RawStepRecord {
    RawStepRecord {
        initial: Bitstring::new(4, initial).unwrap(),
        outcome: Bitstring::new(4, outcome).unwrap(),
        direction,
    }
}

#[test]
fn raw_runs_round_trip() {
    let runs = vec![
        run(0b0001, 0b0010, Direction::Reverse),
        run(0b1111, 0b1111, Direction::Reverse),
    ];
    let bytes = raw::encode(&runs).unwrap();
    assert_eq!(
        String::from_utf8(bytes.clone()).unwrap(),
        "#RAW v1 qubits=4 direction=reverse count=2\n1000 0100\n1111 1111\n"
    );
    assert_eq!(raw::decode(&bytes).unwrap(), runs);
    assert!(raw::decode(&raw::encode(&[]).unwrap()).unwrap().is_empty());
}

#[test]
fn raw_errors() {
    let h = "#RAW v1 qubits=4 direction=forward count=2\n";
    assert!(matches!(
        raw::decode(format!("{h}1000 0100\n").as_bytes()),
        Err(Traj1Error::CountMismatch {
            expected: 2,
            found: 1,
            ..
        })
    ));
    assert!(matches!(
        raw::decode(format!("{h}1000 0100\n1000_0100\n").as_bytes()),
        Err(Traj1Error::BadCharacter { line: 3, column: 5, .. })
    ));
    assert!(matches!(
        raw::decode(format!("{h}1000 0100\n1000 01a0\n").as_bytes()),
        Err(Traj1Error::BadCharacter { line: 3, column: 8, .. })
    ));
    assert!(matches!(
        raw::decode(format!("{h}1000 0100\n100 0100\n").as_bytes()),
        Err(Traj1Error::RowLength { line: 3, .. })
    ));
    assert!(matches!(
        raw::decode(b"#RAW v1 qubits=4 direction=backward count=0\n"),
        Err(Traj1Error::Header { line: 1, .. })
    ));
    let mixed = [run(0, 0, Direction::Forward), run(0, 0, Direction::Reverse)];
    assert!(matches!(raw::encode(&mixed), Err(Traj1Error::Inconsistent(_))));
}
