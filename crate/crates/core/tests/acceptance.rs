//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use molproof_core::circuit::{analyze, eval_circuit, Component};
use molproof_core::data_processor::ThresholdProfile;
use molproof_core::pipeline::{
    bench, security_suite, AttackScenario, BenchOptions, Keys, SecurityConfig, SecurityCorpus,
    SecurityReport, SyntheticCorpus,
};
use molproof_core::snark::{prove, verify};
use molproof_core::{
    commitment, compute_witness, eval_native, nullifier, FieldElement, MetricVector, ProofBundle,
    TaskType, ThresholdSet, SCALE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

// Tolerances and sizes.
const COMPLETENESS_RECORDS: usize = 50;
const INVALID_SMILES_RECORDS: usize = 30;
const THRESHOLD_FAILING_RECORDS: usize = 30;
const FORGED_WITNESSES: usize = 20;
const REPLAY_TRIALS: usize = 20;
const ORACLE_RANDOM_VECTORS: usize = 10_000;
const MIN_CONSTRAINTS: usize = 500;
const MAX_CONSTRAINTS: usize = 20_000;
const MIN_HASH_SHARE: f64 = 0.40;
const MAX_DEPTH: usize = 32;
const BENCH_SIZES: [usize; 3] = [10, 50, 100];
const BENCH_REPEATS: usize = 3;
const MAX_PER_MOLECULE_RATIO: f64 = 2.0;
const HIDING_SALTS: usize = 10_000;
const BIT_FREQ_BAND: (f64, f64) = (0.48, 0.52);
const OVERFLOW_TRIALS: usize = 10;
const FIELD_BITS: usize = 254;

type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Threshold table written out as exact fractions, compared by
/// cross-multiplication on the scaled integers.
fn table_checker(v: &MetricVector, task: TaskType) -> bool {
    #[derive(Clone, Copy)]
    enum Op {
        AtLeast,
        AtMost,
        Exactly,
    }
    let s = SCALE as u128;
    let safety_rule = match task {
        TaskType::Binary => (v.safe, Op::Exactly, 1u128, 1u128),
        TaskType::Regression => (v.safe, Op::AtLeast, 1, 2),
    };
    let rules = [
        safety_rule,
        (v.qed, Op::AtLeast, 1, 2),
        (v.sas, Op::AtMost, 6, 1),
        (v.lip, Op::AtMost, 1, 1),
        (v.sim, Op::AtLeast, 2, 5),
    ];
    v.valid == 1
        && rules.iter().all(|&(value, op, num, den)| {
            let lhs = value as u128 * den;
            let rhs = num * s;
            match op {
                Op::AtLeast => lhs >= rhs,
                Op::AtMost => lhs <= rhs,
                Op::Exactly => lhs == rhs,
            }
        })
}

fn security(keys: &Keys) -> SecurityReport {
    let mut corpus = SyntheticCorpus::new(2024);
    let passing = corpus.passing(COMPLETENESS_RECORDS);
    let mut failing = corpus.invalid_smiles(INVALID_SMILES_RECORDS);
    failing.extend(corpus.failing_thresholds(THRESHOLD_FAILING_RECORDS));
    let cfg = SecurityConfig {
        forged_witnesses: FORGED_WITNESSES,
        replay_trials: REPLAY_TRIALS,
        seed: 2025,
        ..SecurityConfig::default()
    };
    security_suite(
        &SecurityCorpus { passing, failing },
        keys,
        &ThresholdProfile::default(),
        &cfg,
    )
    .expect("security suite runs")
}

fn completeness(r: &SecurityReport) -> Outcome {
    let c = r.completeness;
    outcome(
        c.total == COMPLETENESS_RECORDS && c.passed == c.total,
        format!("{}/{} passing records accepted", c.passed, c.total),
    )
}

fn soundness(r: &SecurityReport) -> Outcome {
    let s = &r.soundness;
    let want = INVALID_SMILES_RECORDS + THRESHOLD_FAILING_RECORDS;
    outcome(
        s.total == want
            && s.rejected == s.total
            && s.forged_total == FORGED_WITNESSES
            && s.forged_rejected == s.forged_total,
        format!(
            "{}/{} invalid inputs rejected, {}/{} forged witnesses refused",
            s.rejected, s.total, s.forged_rejected, s.forged_total
        ),
    )
}

fn replay(r: &SecurityReport) -> Outcome {
    match r.attack(AttackScenario::Replay) {
        Some(a) => outcome(a.passed && a.trials == REPLAY_TRIALS, a.detail.clone()),
        None => outcome(false, "replay scenario missing"),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut checked = 0usize;
    let mut mismatches = Vec::new();
    let mut check = |v: &MetricVector, task: TaskType, rng: &mut ChaCha20Rng| {
        let theta = ThresholdSet::defaults(task);
        let w = compute_witness(v, FieldElement::random(rng), &theta, task).expect("in range");
        let native = eval_native(v, &theta, task);
        checked += 1;
        if eval_circuit().is_satisfied(&w).is_err()
            || w.passed() != native
            || native != table_checker(v, task)
        {
            mismatches.push(format!("{task} {v:?}"));
        }
    };

    for _ in 0..ORACLE_RANDOM_VECTORS {
        let task = if rng.gen() {
            TaskType::Binary
        } else {
            TaskType::Regression
        };
        let safe = match task {
            TaskType::Binary if rng.gen() => [0, SCALE][rng.gen_range(0..2)],
            _ => rng.gen_range(0..=SCALE),
        };
        let v = MetricVector {
            valid: rng.gen_range(0..2),
            safe,
            qed: rng.gen_range(0..=SCALE),
            sas: rng.gen_range(SCALE..=10 * SCALE),
            lip: rng.gen_range(0..=5) * SCALE,
            sim: rng.gen_range(0..=SCALE),
        };
        check(&v, task, &mut rng);
    }

    // Every threshold at -1, 0, +1 in every combination.
    for task in [TaskType::Binary, TaskType::Regression] {
        let th = ThresholdSet::defaults(task).to_array();
        for valid in 0..2 {
            for code in 0..3usize.pow(5) {
                let mut vals = [0u64; 5];
                let mut c = code;
                for (slot, value) in vals.iter_mut().enumerate() {
                    *value = th[slot] + (c % 3) as u64 - 1;
                    c /= 3;
                }
                let v = MetricVector {
                    valid,
                    safe: vals[0],
                    qed: vals[1],
                    sas: vals[2],
                    lip: vals[3],
                    sim: vals[4],
                };
                check(&v, task, &mut rng);
            }
        }
    }
    let grid = 2 * 2 * 3usize.pow(5);
    outcome(
        mismatches.is_empty() && checked == ORACLE_RANDOM_VECTORS + grid,
        format!(
            "{}/{checked} agree ({ORACLE_RANDOM_VECTORS} random + {grid} boundary grid){}",
            checked - mismatches.len(),
            mismatches
                .first()
                .map(|m| format!("; first mismatch {m}"))
                .unwrap_or_default()
        ),
    )
}

fn circuit_shape() -> Outcome {
    let r = analyze(eval_circuit());
    let total_ok = (MIN_CONSTRAINTS..=MAX_CONSTRAINTS).contains(&r.total_constraints);
    let share = r.share(Component::Hash);
    let share_ok = share >= MIN_HASH_SHARE;
    let depth_ok = r.multiplicative_depth <= MAX_DEPTH;
    let arity_ok = (r.public_inputs, r.private_inputs, r.public_outputs) == (6, 7, 3);
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };
    outcome(
        total_ok && share_ok && depth_ok && arity_ok,
        format!(
            "constraints {} in [{MIN_CONSTRAINTS}, {MAX_CONSTRAINTS}] {}; hash share {:.1}% >= {:.0}% {}; \
             multiplicative depth {} <= {MAX_DEPTH} {}; arity {}/{}/{} {}",
            r.total_constraints,
            mark(total_ok),
            100.0 * share,
            100.0 * MIN_HASH_SHARE,
            mark(share_ok),
            r.multiplicative_depth,
            mark(depth_ok),
            r.public_inputs,
            r.private_inputs,
            r.public_outputs,
            mark(arity_ok),
        ),
    )
}

fn interface_arity(keys: &Keys) -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let task = TaskType::Regression;
    let theta = ThresholdSet::defaults(task);
    let v = MetricVector {
        valid: 1,
        safe: 700_000,
        qed: 800_000,
        sas: 3 * SCALE,
        lip: 0,
        sim: 600_000,
    };
    let salt = FieldElement::random(&mut rng);
    let w = compute_witness(&v, salt, &theta, task).unwrap();
    let proof = prove(&keys.pk, &w, &mut rng).unwrap();
    let bundle = ProofBundle::new("arity", "ld50", w.public_values(), proof);
    let parsed: ProofBundle =
        serde_json::from_str(&serde_json::to_string(&bundle).unwrap()).unwrap();

    let c = commitment(&v, salt);
    let mut expected: Vec<FieldElement> = vec![task.encoding().into()];
    expected.extend(theta.to_array().map(FieldElement::from_u64));
    expected.extend([FieldElement::one(), c, nullifier(c, task)]);
    let order_ok = parsed.public_values == expected;

    let honest = verify(&keys.vk, &parsed.public_values, &parsed.proof).unwrap();
    let rejected = (0..9)
        .filter(|&slot| {
            let mut p = parsed.public_values.clone();
            p[slot] += FieldElement::one();
            !verify(&keys.vk, &p, &parsed.proof).unwrap()
        })
        .count();
    outcome(
        order_ok && honest && parsed.public_values.len() == 9 && rejected == 9,
        format!(
            "{} public values, normative order {}, {rejected}/9 perturbed slots rejected",
            parsed.public_values.len(),
            if order_ok { "ok" } else { "wrong" }
        ),
    )
}

fn performance(keys: &Keys) -> Outcome {
    let opts = BenchOptions {
        sizes: BENCH_SIZES.to_vec(),
        repeats: BENCH_REPEATS,
        workers: 1,
        seed: 7,
    };
    let r = bench(keys, &ThresholdProfile::default(), &opts);
    let (Some(small), Some(large)) = (r.row(BENCH_SIZES[0]), r.row(BENCH_SIZES[2])) else {
        return outcome(false, "bench rows missing");
    };
    let ratio = large.seconds_per_molecule_mean / small.seconds_per_molecule_mean;
    let scaling_ok = (1.0 / MAX_PER_MOLECULE_RATIO..=MAX_PER_MOLECULE_RATIO).contains(&ratio);
    let success_ok = r.rows.iter().all(|row| row.success_rate_mean == 1.0);
    let runs_ok = r.runs.len() == BENCH_SIZES.len() * BENCH_REPEATS;
    outcome(
        scaling_ok && success_ok && runs_ok,
        format!(
            "{} runs; per-molecule {:.4}s at {} vs {:.4}s at {} (ratio {ratio:.2}); throughput {:.2} mol/s; success {}",
            r.runs.len(),
            large.seconds_per_molecule_mean,
            large.size,
            small.seconds_per_molecule_mean,
            small.size,
            large.throughput_mean,
            r.rows.iter().map(|row| format!("{:.0}%", 100.0 * row.success_rate_mean)).collect::<Vec<_>>().join("/")
        ),
    )
}

fn hiding() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let v = MetricVector {
        valid: 1,
        safe: SCALE,
        qed: 900_000,
        sas: 2 * SCALE,
        lip: 0,
        sim: 700_000,
    };
    let commitments: Vec<FieldElement> = (0..HIDING_SALTS)
        .map(|_| commitment(&v, FieldElement::random(&mut rng)))
        .collect();
    let distinct = commitments.iter().collect::<HashSet<_>>().len();
    let freq: Vec<f64> = (0..FIELD_BITS)
        .map(|i| commitments.iter().filter(|c| c.bit(i)).count() as f64 / HIDING_SALTS as f64)
        .collect();
    let in_band = |f: &f64| (BIT_FREQ_BAND.0..=BIT_FREQ_BAND.1).contains(f);
    let outside: Vec<String> = freq
        .iter()
        .enumerate()
        .filter(|(_, f)| !in_band(f))
        .map(|(i, f)| format!("bit {i} at {f:.4}"))
        .collect();
    let low_bits_ok = freq[..FIELD_BITS - 2].iter().all(in_band);
    outcome(
        distinct == HIDING_SALTS && outside.is_empty(),
        format!(
            "{distinct}/{HIDING_SALTS} distinct; {}/{FIELD_BITS} bits in [{}, {}] (bits 0..{} {}){}",
            FIELD_BITS - outside.len(),
            BIT_FREQ_BAND.0,
            BIT_FREQ_BAND.1,
            FIELD_BITS - 3,
            if low_bits_ok { "all in band" } else { "not all in band" },
            if outside.is_empty() { String::new() } else { format!("; outside: {}", outside.join(", ")) }
        ),
    )
}

fn overflow() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let task = TaskType::Binary;
    let theta = ThresholdSet::defaults(task);
    let refused = (0..OVERFLOW_TRIALS)
        .filter(|i| {
            let mut a = MetricVector {
                valid: 1,
                safe: SCALE,
                qed: SCALE,
                sas: SCALE,
                lip: 0,
                sim: SCALE,
            }
            .to_array();
            a[i % 6] = rng.gen_range(1u64 << 32..1u64 << 48);
            compute_witness(
                &MetricVector::from_array(a),
                FieldElement::one(),
                &theta,
                task,
            )
            .is_err()
        })
        .count();
    outcome(
        refused == OVERFLOW_TRIALS,
        format!("{refused}/{OVERFLOW_TRIALS} out-of-range metrics refused by witness generation"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let keys = Keys::generate(&mut ChaCha20Rng::seed_from_u64(1)).expect("setup");
    let report = security(&keys);

    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("completeness", Box::new(|| completeness(&report))),
        ("soundness", Box::new(|| soundness(&report))),
        ("replay resistance", Box::new(|| replay(&report))),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("circuit shape", Box::new(circuit_shape)),
        ("interface arity", Box::new(|| interface_arity(&keys))),
        ("performance sanity", Box::new(|| performance(&keys))),
        ("hiding", Box::new(hiding)),
        ("overflow injection", Box::new(overflow)),
    ];

    println!("acceptance suite");
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "{} {}. {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of 9 criteria passed in {:.1}s",
        9 - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
