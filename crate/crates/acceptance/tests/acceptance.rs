//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use clap::Parser;
use statrs::function::erf::erfc;

use airate::channel::{awgn_capacity, NoiseSpec, SnrPoint};
use airate::cli::{self, Cli, DEFAULT_SEED};
use airate::datadriven::{estimate_noise_variance, mi_from_data};
use airate::metrics::pre_fec_ber;
use airate::montecarlo::mi_mc;
use airate::predictor::{
    predict_post_fec, CalibrationTable, MetricKind, NormalizedMetric, Prediction, Verdict,
};
use airate::quadrature::{gmi_quadrature, mi_quadrature, QuadratureSpec};
use airate::records::synthesize_records;
use airate::standard::{
    bpsk, polarization_multiplexed, qpsk_anti_gray, qpsk_gray, square_qam_gray,
};
use airate::LabeledConstellation;
use airate_acceptance::{bpsk_mi_by_integration, Checks, Scorecard};

const SAMPLES: usize = 10_000;

fn noise_at(c: &LabeledConstellation, db: f64) -> NoiseSpec {
    NoiseSpec::for_snr(c.energy(), SnrPoint::from_db(db).unwrap(), c.dims()).unwrap()
}

fn capacity_curve(checks: &mut Checks) {
    let start = Instant::now();
    let pm_qpsk = polarization_multiplexed(&qpsk_gray())
        .normalize_energy(1.0)
        .unwrap();
    let qam16 = square_qam_gray(16);
    for (name, c) in [("PM-QPSK", &pm_qpsk), ("16QAM", &qam16)] {
        let log_m = c.log2_order();
        let mut below = true;
        let mut worst_gap = f64::INFINITY;
        for db in (0..=30).map(f64::from) {
            let noise = noise_at(c, db);
            let mi = mi_mc(c, &noise, SAMPLES, DEFAULT_SEED).unwrap();
            let cap = awgn_capacity(SnrPoint::from_db(db).unwrap(), c.dims());
            if db <= 25.0 {
                below &= mi.value < cap;
                worst_gap = worst_gap.min(cap - mi.value);
            }
            if db == 30.0 {
                checks.check(
                    mi.value >= log_m - 1e-3,
                    format!(
                        "{name}: MI at 30 dB = {:.9} >= log2M - 1e-3 = {}",
                        mi.value,
                        log_m - 1e-3
                    ),
                );
            }
        }
        checks.check(
            below,
            format!("{name}: MI below capacity at 0..25 dB (smallest gap {worst_gap:.4e} bits)"),
        );
    }
    let elapsed = start.elapsed();
    checks.check(
        elapsed < Duration::from_secs(300),
        format!("runtime {:.1} s < 300 s", elapsed.as_secs_f64()),
    );
}

fn oracle_equivalence(checks: &mut Checks) {
    for (name, c) in [
        ("BPSK", bpsk()),
        ("Gray QPSK", qpsk_gray()),
        ("Gray 16QAM", square_qam_gray(16)),
    ] {
        for db in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let noise = noise_at(&c, db);
            let quad = mi_quadrature(&QuadratureSpec::new(&c, noise).with_nodes(20)).unwrap();
            let mc = mi_mc(&c, &noise, SAMPLES, DEFAULT_SEED).unwrap();
            let se = mc.std_error.unwrap();
            let gap = (mc.value - quad.value).abs();
            checks.check(
                gap <= 3.0 * se,
                format!(
                    "{name} {db:>4} dB: |mc - quad| = {gap:.3e}, 3 se = {:.3e} (mc {:.12}, quad {:.12})",
                    3.0 * se,
                    mc.value,
                    quad.value
                ),
            );
        }
    }
}

fn pinned_values(checks: &mut Checks) {
    let oracle = bpsk_mi_by_integration(0.5);
    let quad = mi_quadrature(&QuadratureSpec::new(
        &bpsk(),
        NoiseSpec::new(1.0, 1).unwrap(),
    ))
    .unwrap()
    .value;
    checks.check(
        (quad - oracle).abs() <= 5e-5,
        format!("BPSK MI at noise variance 1: quadrature {quad:.8}, integration {oracle:.8}"),
    );
    checks.check(
        (oracle - 0.72).abs() < 0.005,
        format!("integration value {oracle:.5} is about 0.72 bits"),
    );
    for sigma2 in [2.0, 1.0, 0.5, 0.2, 0.1, 0.05] {
        let q = mi_quadrature(&QuadratureSpec::new(
            &qpsk_gray(),
            NoiseSpec::new(sigma2, 1).unwrap(),
        ))
        .unwrap()
        .value;
        // QPSK axes carry 1/√2 amplitude, so BPSK at twice the variance matches
        let b = mi_quadrature(&QuadratureSpec::new(
            &bpsk(),
            NoiseSpec::new(2.0 * sigma2, 1).unwrap(),
        ))
        .unwrap()
        .value;
        checks.check(
            (q - 2.0 * b).abs() <= 1e-8,
            format!("QPSK at {sigma2}: {q:.12} vs 2 x BPSK {:.12}", 2.0 * b),
        );
    }
}

fn gmi_ordering(checks: &mut Checks) {
    for (name, c) in [
        ("Gray QPSK", qpsk_gray()),
        ("Gray 16QAM", square_qam_gray(16)),
        ("anti-Gray QPSK", qpsk_anti_gray()),
    ] {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_equality: f64 = 0.0;
        for db in (0..=20).map(f64::from) {
            let spec = QuadratureSpec::new(&c, noise_at(&c, db));
            let mi = mi_quadrature(&spec).unwrap().value;
            let gmi = gmi_quadrature(&spec).unwrap().value;
            worst = worst.max(gmi - mi);
            worst_equality = worst_equality.max((gmi - mi).abs());
        }
        checks.check(
            worst <= 1e-9,
            format!("{name}: max(GMI - MI) over 0..20 dB = {worst:.3e}"),
        );
        if name == "Gray QPSK" {
            checks.check(
                worst_equality <= 1e-9,
                format!("{name}: max |GMI - MI| = {worst_equality:.3e}"),
            );
        }
    }
}

fn data_driven_closure(checks: &mut Checks) {
    let start = Instant::now();
    let c = square_qam_gray(16);
    let noise = NoiseSpec::new(0.5, 1).unwrap();
    let records = synthesize_records(&c, &noise, SAMPLES, DEFAULT_SEED);
    let est = estimate_noise_variance(&c, &records).unwrap();
    checks.check(
        (est.total_variance / 0.5 - 1.0).abs() <= 0.05,
        format!("estimated variance {:.6} vs 0.5", est.total_variance),
    );
    let data = mi_from_data(&c, &records).unwrap();
    let synthetic = mi_mc(&c, &noise, SAMPLES, DEFAULT_SEED + 1).unwrap();
    let combined = data.std_error.unwrap().hypot(synthetic.std_error.unwrap());
    checks.check(
        (data.value - synthetic.value).abs() <= 3.0 * combined,
        format!(
            "data-driven {:.6} vs Monte Carlo {:.6}, 3 combined se = {:.3e}",
            data.value,
            synthetic.value,
            3.0 * combined
        ),
    );
    let elapsed = start.elapsed();
    checks.check(
        elapsed < Duration::from_secs(60),
        format!("runtime {:.1} s < 60 s", elapsed.as_secs_f64()),
    );
}

fn ber_oracle(checks: &mut Checks) {
    let c = qpsk_gray();
    let t = 1_000_000;
    let noise = NoiseSpec::for_snr(1.0, SnrPoint::from_linear(4.0).unwrap(), 1).unwrap();
    let records = synthesize_records(&c, &noise, t / c.order(), DEFAULT_SEED);
    let ber = pre_fec_ber(&c, &records).unwrap();
    let p = 0.5 * erfc(2.0 / 2f64.sqrt());
    let se = (p * (1.0 - p) / (2.0 * records.len() as f64)).sqrt();
    checks.check(
        (ber - p).abs() <= 3.0 * se,
        format!("BER {ber:.6} vs Q(2) = {p:.6}, 3 se = {:.2e}", 3.0 * se),
    );
}

fn predictor_contract(checks: &mut Checks) {
    let points = vec![(0.80, 1e-2), (0.90, 1e-4)];
    let table = CalibrationTable::new(MetricKind::NormalizedMi, 0.8, points.clone()).unwrap();
    let query = |value| {
        predict_post_fec(
            &table,
            NormalizedMetric {
                kind: MetricKind::NormalizedMi,
                value,
            },
        )
        .unwrap()
    };
    for (m, r) in points {
        checks.check(
            query(m) == Prediction::Rate(r),
            format!("knot ({m}, {r}) recovered exactly"),
        );
    }
    match query(0.85) {
        Prediction::Rate(r) => checks.check(
            ((r - 1e-3) / 1e-3).abs() <= 1e-12,
            format!("midpoint 0.85 -> {r:e}"),
        ),
        other => checks.check(false, format!("midpoint 0.85 -> {other:?}")),
    }
    let below = query(0.79);
    checks.check(
        below == Prediction::AboveWorstCalibrated { bound: 1e-2 }
            && below.verdict(1e-3) == Verdict::Fail,
        format!("0.79 -> {}", cli::render_prediction(&below, 1e-3)),
    );
    let above = query(0.95);
    checks.check(
        above == Prediction::BelowBestCalibrated { bound: 1e-4 },
        format!("0.95 -> {}", cli::render_prediction(&above, 1e-3)),
    );
    let wrong_kind = predict_post_fec(
        &table,
        NormalizedMetric {
            kind: MetricKind::NormalizedGmi,
            value: 0.85,
        },
    );
    checks.check(
        wrong_kind.is_err(),
        "GMI value against an MI table is rejected",
    );
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let cli = Cli::try_parse_from(args).unwrap();
    cli::validate(&cli).unwrap();
    cli::run(&cli).unwrap();
    let out = args
        .iter()
        .position(|a| *a == "--output")
        .map(|i| args[i + 1])
        .unwrap();
    std::fs::read(out).unwrap()
}

fn determinism(checks: &mut Checks) {
    let dir = tempfile::tempdir().unwrap();
    let constellation = dir.path().join("qam16.txt");
    std::fs::write(&constellation, square_qam_gray(16).to_text()).unwrap();
    let constellation = constellation.to_str().unwrap();
    for sub in ["mi-sweep", "gmi-sweep"] {
        for mode in ["independent", "shared"] {
            let outputs: Vec<Vec<u8>> = (0..2)
                .map(|run| {
                    let path = dir.path().join(format!("{sub}-{mode}-{run}.csv"));
                    run_cli(&[
                        "airate",
                        sub,
                        "--constellation",
                        constellation,
                        "--snr-db",
                        "0:2.5:20",
                        "--method",
                        "monte-carlo",
                        "--samples",
                        "2000",
                        "--seed",
                        "7",
                        "--noise-mode",
                        mode,
                        "--output",
                        path.to_str().unwrap(),
                    ])
                })
                .collect();
            checks.check(
                outputs[0] == outputs[1] && !outputs[0].is_empty(),
                format!(
                    "{sub} ({mode} noise): {} bytes, identical across runs",
                    outputs[0].len()
                ),
            );
        }
    }
}

fn main() {
    let mut card = Scorecard::default();
    card.run(1, "MI sweep below capacity and saturating", capacity_curve);
    card.run(
        2,
        "Monte Carlo agrees with quadrature within 3 standard errors",
        oracle_equivalence,
    );
    card.run(3, "pinned BPSK value and QPSK = 2 x BPSK", pinned_values);
    card.run(
        4,
        "GMI never exceeds MI; equality for Gray QPSK",
        gmi_ordering,
    );
    card.run(5, "data-driven pipeline closure", data_driven_closure);
    card.run(6, "pre-FEC BER matches Q(2)", ber_oracle);
    card.run(7, "predictor contract", predictor_contract);
    card.run(
        8,
        "Monte Carlo CSV is byte-identical across runs",
        determinism,
    );
    println!("{}", card.summary());
    if !card.all_passed() {
        std::process::exit(1);
    }
}
