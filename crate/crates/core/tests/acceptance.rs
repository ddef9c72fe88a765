//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unit_index::arith::{primes_in_range, SquarefreeD};
use unit_index::construction::{
    alpha_solution_with, beta_solution, find_decomposition, LegendreConfig,
};
use unit_index::criterion::{
    classify, e_totally_real, key_symbol, q_value, q_value_via_construction,
    q_value_via_governing,
};
use unit_index::experiment::{run_scan, write_csv, write_json, ScanConfig, ScanResult};
use unit_index::gaussian::{quartic_symbol, split_primary, GaussInt, QuarticValue};
use unit_index::qfclassgroup::narrow_class_group;
use unit_index::quadfield::pell_negative_unit;
use unit_index::redei::{build_b0, build_generalized_b, redei_matrix, redei_rank4};
use unit_index::symbols::{fpr_composite, hilbert_product};

type Outcome = Result<String, String>;

fn sf(d: u64) -> SquarefreeD {
    SquarefreeD::new(d).unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1() -> Outcome {
    let d = sf(65);
    let v = classify(&d, 37);
    ensure(v.m == 0 && v.in_p, format!("classification {v:?}"))?;
    let symbols = [fpr_composite(65, 37), fpr_composite(185, 13), fpr_composite(481, 5)]
        .map(|r| r.unwrap());
    ensure(symbols == [-1, 1, 1], format!("symbols {symbols:?}"))?;
    let direct = q_value(&d, 37).map_err(|e| e.to_string())?;
    let governing = q_value_via_governing(&d, 37).map_err(|e| e.to_string())?;
    let dec = find_decomposition(&d, 37).map_err(|e| e.to_string())?;
    let sol = beta_solution(&d, 37, &dec, &LegendreConfig::default()).map_err(|e| e.to_string())?;
    let unit = pell_negative_unit(37).map_err(|e| e.to_string())?;
    let (x, v) = (sol.x.to_string(), unit.v.to_string());
    ensure(x == "-3" && v == "-1", format!("x = {x}, v = {v}"))?;
    let construction = q_value_via_construction(&d, 37, &LegendreConfig::default())
        .map_err(|e| e.to_string())?;
    ensure(
        direct == 2 && governing == 2 && construction == Some(2),
        format!("Q: symbols {direct}, governing {governing}, construction {construction:?}"),
    )?;
    Ok(format!(
        "(65, 37): m = 0, member, product {:?} = -1, x = {x}, v = {v}, Q = 2 on all three paths",
        symbols
    ))
}

fn criterion_2() -> Outcome {
    let d = sf(65);
    let mut parts = Vec::new();
    for (p, want, disc) in [(17u64, 1u8, 1105u64), (53, 2, 3445)] {
        let v = classify(&d, p);
        ensure(v.in_p && v.m == 1, format!("p = {p}: {v:?}"))?;
        let rank = redei_matrix(disc).map_err(|e| e.to_string())?.rank();
        ensure(rank == 2, format!("Rédei rank for {disc} is {rank}"))?;
        let q = q_value(&d, p).map_err(|e| e.to_string())?;
        let g = q_value_via_governing(&d, p).map_err(|e| e.to_string())?;
        ensure(q == want && g == want, format!("p = {p}: Q = {q}/{g}, expected {want}"))?;
        parts.push(format!("(65, {p}) → Q = {q} [Rédei rank {rank} at {disc}]"));
    }
    ensure(!e_totally_real(&d, 17).unwrap() && e_totally_real(&d, 53).unwrap(), "E reality")?;
    Ok(parts.join(", "))
}

fn criterion_3(res: &ScanResult, elapsed: Duration) -> Outcome {
    let mut parts = Vec::new();
    for m in [0usize, 1] {
        let row = res.summary.row(m).ok_or(format!("no row for m = {m}"))?;
        let f = row.freq_q2.ok_or(format!("no members with m = {m}"))?;
        ensure((f - 0.5).abs() < 0.05, format!("m = {m}: freq_Q2 = {f:.4}"))?;
        parts.push(format!("m = {m}: {f:.4} over {} primes", row.n_in_p));
    }
    ensure(res.summary.alarms == 0, format!("{} alarms", res.summary.alarms))?;
    ensure(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("d = 65, X = 10^6: {} ({:.1} s)", parts.join(", "), elapsed.as_secs_f64()))
}

fn criterion_4(res: &ScanResult) -> Outcome {
    let mut parts = Vec::new();
    for m in [0usize, 1, 2] {
        let row = res.summary.row(m).ok_or(format!("no row for m = {m}"))?;
        let want = 0.5f64.powi(m as i32);
        // P_{d,m} can be empty (for d = 1105 and m = 0 the Rédei matrix of dp
        // always has rank 2); then the frequency over all primes is used
        let (f, over) = match row.freq_e_real {
            Some(f) => (f, format!("{} members", row.n_in_p)),
            None => (
                row.freq_e_real_all.ok_or(format!("no primes with m = {m}"))?,
                format!("{} primes, no members", row.n_total),
            ),
        };
        ensure((f - want).abs() < 0.05, format!("m = {m}: freq_E_real = {f:.4} vs {want}"))?;
        if let (Some(q2), Some(e)) = (row.freq_q2, row.freq_e_real) {
            ensure(q2 <= e + 1e-12, format!("m = {m}: Q2 frequency exceeds E frequency"))?;
        }
        parts.push(format!("m = {m}: {f:.4} vs {want} ({over})"));
    }
    ensure(res.summary.alarms == 0, format!("{} alarms", res.summary.alarms))?;
    Ok(format!("d = 1105, X = 10^6: {}", parts.join(", ")))
}

fn criterion_5() -> Outcome {
    let mut n = 0;
    for d in 2..=10_000u64 {
        let Ok(sd) = SquarefreeD::new(d) else { continue };
        let r = redei_rank4(sd.d).map_err(|e| e.to_string())?;
        let g = narrow_class_group(d).map_err(|e| format!("{d}: {e}"))?;
        ensure(r == g.rk4, format!("D = {d}: Rédei {r}, forms {}", g.rk4))?;
        n += 1;
    }
    Ok(format!("{n} squarefree D <= 10^4, zero mismatches"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut primes: Vec<GaussInt> = Vec::new();
    for p in primes_in_range(3, 100_000) {
        if p % 4 == 1 {
            let pi = split_primary(p).unwrap();
            primes.push(pi);
            primes.push(pi.conj());
        } else if p * p < 100_000 {
            primes.push(GaussInt::new(-(p as i64), 0));
        }
    }
    let mut pairs = 0;
    while pairs < 10_000 {
        let (a, b) = (*primes.choose(&mut rng).unwrap(), *primes.choose(&mut rng).unwrap());
        if a == b {
            continue;
        }
        let lhs = quartic_symbol(a, b).map_err(|e| e.to_string())?;
        let rhs = quartic_symbol(b, a).map_err(|e| e.to_string())?;
        let e = ((a.norm() - 1) / 4) * ((b.norm() - 1) / 4);
        let sign = if e % 2 == 0 { QuarticValue::ONE } else { QuarticValue::MINUS_ONE };
        ensure(lhs == rhs * sign, format!("reciprocity fails for {a}, {b}"))?;
        pairs += 1;
    }
    let mut hil = 0;
    while hil < 10_000 {
        let a: i64 = rng.gen_range(-1_000_000..=1_000_000);
        let b: i64 = rng.gen_range(-1_000_000..=1_000_000);
        if a == 0 || b == 0 {
            continue;
        }
        let s = hilbert_product(a, b).map_err(|e| e.to_string())?;
        ensure(s == 1, format!("Hilbert product {s} for ({a}, {b})"))?;
        hil += 1;
    }
    Ok(format!("{pairs} quartic pairs (norms < 10^5), {hil} Hilbert pairs, zero violations"))
}

fn criterion_7(scans: &[(u64, &ScanResult)]) -> Outcome {
    let cfg = LegendreConfig { height: 12, descent: true };
    let mut parts = Vec::new();
    for &(dd, res) in scans {
        let d = sf(dd);
        let (mut checked, mut skipped) = (0, 0);
        for v in res.records.iter().filter(|v| v.in_p) {
            let (b0, of) = build_b0(&d, v.p).map_err(|e| e.to_string())?;
            if b0.rank() != of.m {
                skipped += 1;
                continue;
            }
            let alphas = of
                .split()
                .iter()
                .map(|&q| alpha_solution_with(v.p, q, &cfg).map(|(_, a)| a))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("p = {}: {e}", v.p))?;
            let g = build_generalized_b(&d, v.p, &alphas).map_err(|e| format!("p = {}: {e}", v.p))?;
            ensure(g.reduced == g.closed_form(), format!("p = {}: reduced form mismatch", v.p))?;
            ensure(
                g.kernel_dim() == of.t() - of.m,
                format!("p = {}: dim ker = {}, t - m = {}", v.p, g.kernel_dim(), of.t() - of.m),
            )?;
            checked += 1;
        }
        ensure(checked > 0, format!("d = {dd}: nothing checked"))?;
        parts.push(format!("d = {dd}: {checked} primes ({skipped} with rank B0 < m)"));
    }
    Ok(parts.join(", "))
}

fn criterion_8(scans: &[(u64, &ScanResult)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = LegendreConfig { height: 20, descent: true };
    let mut parts = Vec::new();
    let mut total = 0;
    for &(dd, res) in scans {
        let d = sf(dd);
        let mut pool: Vec<u64> = res
            .records
            .iter()
            .filter(|v| v.in_p && v.m + 2 == v.t)
            .map(|v| v.p)
            .collect();
        pool.shuffle(&mut rng);
        let (mut agree, mut unsolved) = (0, 0);
        for &p in pool.iter().take(100) {
            let dec = find_decomposition(&d, p).map_err(|e| format!("p = {p}: {e}"))?;
            let Ok(sol) = beta_solution(&d, p, &dec, &cfg) else {
                unsolved += 1;
                continue;
            };
            let unit = pell_negative_unit(p).map_err(|e| e.to_string())?;
            let xv_positive = sol.x.is_positive() == unit.v.is_positive();
            let sym = key_symbol(p, &dec).map_err(|e| e.to_string())?;
            ensure(xv_positive == (sym == -1), format!("d = {dd}, p = {p}: sign and symbols differ"))?;
            agree += 1;
        }
        total += agree;
        parts.push(format!("d = {dd}: {agree}/{agree} ({unsolved} unsolved)"));
    }
    ensure(total >= 200, format!("only {total} samples"))?;
    Ok(format!("{total} samples, 100% agreement: {}", parts.join(", ")))
}

fn bytes(res: &ScanResult) -> (Vec<u8>, Vec<u8>) {
    let (mut c, mut j) = (Vec::new(), Vec::new());
    write_csv(&res.records, &mut c).unwrap();
    write_json(res, &mut j).unwrap();
    (c, j)
}

fn criterion_9() -> Outcome {
    let mut cfg = ScanConfig::new(1105, 200_000);
    cfg.chunk = 10_000;
    cfg.construction_rate = 0.05;
    let reference = bytes(&run_scan(&cfg).map_err(|e| e.to_string())?);
    for workers in [2usize, 4, 8] {
        let mut c = cfg.clone();
        c.workers = workers;
        let got = bytes(&run_scan(&c).map_err(|e| e.to_string())?);
        ensure(got == reference, format!("output differs with {workers} workers"))?;
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (i, stop) in [1usize, 5, 13].into_iter().enumerate() {
        let path = dir.path().join(format!("run{i}.ckpt"));
        let mut c = cfg.clone();
        c.checkpoint = Some(path.clone());
        c.max_chunks = Some(stop);
        run_scan(&c).map_err(|e| e.to_string())?;
        if i == 2 {
            let len = std::fs::metadata(&path).unwrap().len();
            std::fs::OpenOptions::new().write(true).open(&path).unwrap().set_len(len - 3).unwrap();
        }
        c.max_chunks = None;
        c.workers = 1 + i;
        let got = bytes(&run_scan(&c).map_err(|e| e.to_string())?);
        ensure(got == reference, format!("resume after {stop} chunks differs"))?;
    }
    Ok(format!(
        "d = 1105, X = 2·10^5: identical CSV ({} bytes) and JSON for 1/2/4/8 workers and 3 resumed runs",
        reference.0.len()
    ))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(msg) => {
            println!("PASS {name}: {msg} [{secs:.1}s]");
            true
        }
        Err(msg) => {
            println!("FAIL {name}: {msg} [{secs:.1}s]");
            false
        }
    }
}

fn scan(d: u64, x: u64) -> (ScanResult, Duration) {
    let start = Instant::now();
    let res = run_scan(&ScanConfig::new(d, x)).expect("scan");
    (res, start.elapsed())
}

fn main() {
    let (s65, t65) = scan(65, 1_000_000);
    let (s1105, _) = scan(1105, 1_000_000);
    let (s85, _) = scan(85, 200_000);

    let results = [
        run("criterion 1 (worked example, three paths)", criterion_1),
        run("criterion 2 (m = t-1 examples)", criterion_2),
        run("criterion 3 (Q = 2 density, t = 2)", || criterion_3(&s65, t65)),
        run("criterion 4 (E reality density, t = 3)", || criterion_4(&s1105)),
        run("criterion 5 (Rédei vs forms, D <= 10^4)", criterion_5),
        run("criterion 6 (reciprocity suites)", criterion_6),
        run("criterion 7 (generalized Rédei kernel)", || {
            criterion_7(&[(65, &s65), (1105, &s1105)])
        }),
        run("criterion 8 (sign of xv vs symbols)", || {
            criterion_8(&[(65, &s65), (85, &s85), (1105, &s1105)])
        }),
        run("criterion 9 (determinism)", criterion_9),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
