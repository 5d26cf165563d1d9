use bgate_core::audit_trace::{verify_bytes, Trace, TraceKind, TraceRecord, Verification};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

fn random_trace(rng: &mut StdRng) -> Vec<TraceRecord> {
    let mut t = Trace::in_memory();
    let n = rng.gen_range(5..30);
    for i in 0..n {
        let kind = TraceKind::ALL[rng.gen_range(0..TraceKind::ALL.len())];
        let payload = json!({"step": i, "note": format!("n{}", rng.gen::<u32>()), "ok": rng.gen_bool(0.5)});
        t.append(1_700_000_000_000 + i * 17, &format!("s{}", rng.gen_range(0..3)), kind, payload).unwrap();
    }
    t.records().to_vec()
}

fn lines(records: &[TraceRecord]) -> Vec<String> {
    records.iter().map(|r| r.to_line()).collect()
}

fn bytes(lines: &[String]) -> Vec<u8> {
    lines.iter().flat_map(|l| format!("{l}\n").into_bytes()).collect()
}

fn bad_index(b: &[u8]) -> u64 {
    match verify_bytes(b) {
        Verification::FirstBadIndex(i) => i,
        Verification::Ok(_) => panic!("tampering not detected"),
    }
}

#[test]
fn every_mutation_reports_the_first_bad_record() {
    let mut rng = StdRng::seed_from_u64(0x7a4e);
    let mut counts = [0usize; 5];
    for round in 0..100 {
        let records = random_trace(&mut rng);
        let original = lines(&records);
        assert!(matches!(verify_bytes(&bytes(&original)), Verification::Ok(r) if r == records));
        let n = records.len();
        let mutation = round % 5;
        counts[mutation] += 1;
        let (mutated, expected) = match mutation {
            0 => {
                // flip one byte of one record
                let k = rng.gen_range(0..n);
                let mut line = original[k].clone().into_bytes();
                let at = rng.gen_range(0..line.len());
                line[at] ^= 1 << rng.gen_range(0..6);
                let mut out = original.clone();
                out[k] = String::from_utf8(line).unwrap();
                (out, k)
            }
            1 => {
                // delete a record other than the last
                let k = rng.gen_range(0..n - 1);
                let mut out = original.clone();
                out.remove(k);
                (out, k)
            }
            2 => {
                // delete and renumber the rest, recomputing their hashes
                let k = rng.gen_range(0..n - 1);
                let mut kept = records.clone();
                kept.remove(k);
                for (i, r) in kept.iter_mut().enumerate().skip(k) {
                    r.seq = i as u64;
                    r.hash = r.compute_hash();
                }
                (lines(&kept), k)
            }
            3 => {
                // delete and renumber without touching hashes
                let k = rng.gen_range(0..n - 1);
                let mut kept = records.clone();
                kept.remove(k);
                for (i, r) in kept.iter_mut().enumerate().skip(k) {
                    r.seq = i as u64;
                }
                (lines(&kept), k)
            }
            _ => {
                // swap two adjacent records
                let k = rng.gen_range(0..n - 1);
                let mut out = original.clone();
                out.swap(k, k + 1);
                (out, k)
            }
        };
        assert_eq!(bad_index(&bytes(&mutated)), expected as u64, "round {round} mutation {mutation}");
    }
    assert!(counts.iter().all(|c| *c == 20));
}

#[test]
fn payload_edit_with_rehash_breaks_the_next_link() {
    let mut rng = StdRng::seed_from_u64(5);
    let mut records = random_trace(&mut rng);
    records[2].payload = json!({"step": 2, "note": "forged"});
    records[2].hash = records[2].compute_hash();
    assert_eq!(bad_index(&bytes(&lines(&records))), 3);
}
