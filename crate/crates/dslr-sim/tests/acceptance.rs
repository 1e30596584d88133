//! Acceptance suite: every published target the model must reproduce, one
//! pass/fail line per criterion. Run with `--nocapture` to see the lines.

use dslr_sim::baseline::baseline_cycles;
use dslr_sim::config::{BaselineConfig, HwProfile, LayerConfig, TileConfig};
use dslr_sim::dyadic::Dyadic;
use dslr_sim::online::{OnlineAdder, OnlineMultiplier, DELTA_ADD, DELTA_MULT};
use dslr_sim::perf::{build_report, dslr_cycles, duration_ms, ReportParams};
use dslr_sim::sd::{DigitStream, Fixed};
use dslr_sim::sim::{
    measured_sop_first_digit_step, reference_conv, run_layer, sop_first_digit_step,
};
use dslr_sim::tensor::TensorFx;
use dslr_sim::zoo::builtin;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn within(actual: f64, target: f64, tol: f64) -> bool {
    (actual / target - 1.0).abs() <= tol
}

fn verdict(criterion: &str, ok: bool, detail: String) -> bool {
    println!(
        "criterion {criterion}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn report_for(name: &str) -> dslr_sim::perf::PerfReport {
    let net = builtin(name).unwrap();
    build_report(&net, &ReportParams::default(), true).unwrap()
}

#[test]
fn criterion_01_alexnet_dslr_total_duration() {
    let report = report_for("alexnet");
    let cycles = report.dslr.aggregate.total_cycles;
    let total_ms = report.dslr.aggregate.total_duration_ms;
    let ok = cycles == 471_744 && within(total_ms, 0.94, 0.01);
    assert!(verdict(
        "1 (alexnet total duration)",
        ok,
        format!("{cycles} cycles, {total_ms:.6} ms vs 0.94 ms +-1%"),
    ));
}

#[test]
fn criterion_02_baseline_durations() {
    let alex = report_for("alexnet");
    let vgg = report_for("vgg16");
    let resnet = report_for("resnet18");
    let alex_total = alex.baseline.as_ref().unwrap().aggregate.total_duration_ms;
    let vgg_mean = vgg.baseline.as_ref().unwrap().aggregate.mean_duration_ms;
    let resnet_mean = resnet.baseline.as_ref().unwrap().aggregate.mean_duration_ms;
    let ok = within(alex_total, 1.54, 0.01)
        && within(vgg_mean, 2.40, 0.01)
        && within(resnet_mean, 0.23, 0.10);
    assert!(verdict(
        "2 (baseline durations)",
        ok,
        format!(
            "alexnet total {alex_total:.6} ms vs 1.54 +-1%, vgg16 mean {vgg_mean:.6} vs 2.40 +-1%, resnet18 mean {resnet_mean:.6} vs 0.23 +-10%"
        ),
    ));
}

#[test]
fn criterion_03_dslr_mean_durations() {
    let vgg = report_for("vgg16");
    let resnet = report_for("resnet18");
    let vgg_total = vgg.dslr.aggregate.total_duration_ms;
    let vgg_mean = vgg.dslr.aggregate.mean_duration_ms;
    let resnet_mean = resnet.dslr.aggregate.mean_duration_ms;
    let ok = within(vgg_mean, 1.44, 0.01)
        && within(vgg_total, 18.72, 0.01)
        && within(resnet_mean, 0.13, 0.10);
    assert!(verdict(
        "3 (dslr mean durations)",
        ok,
        format!(
            "vgg16 mean {vgg_mean:.6} ms vs 1.44 +-1% (total {vgg_total:.6}), resnet18 mean {resnet_mean:.6} vs 0.13 +-10%"
        ),
    ));
}

#[test]
fn criterion_04_peak_performance() {
    let alex = report_for("alexnet");
    let vgg = report_for("vgg16");
    let resnet = report_for("resnet18");
    let a = alex.dslr.aggregate.peak_gops;
    let v = vgg.dslr.aggregate.peak_gops;
    let r = resnet.dslr.aggregate.peak_gops;
    let ab = alex.baseline.as_ref().unwrap().aggregate.peak_gops;
    let vb = vgg.baseline.as_ref().unwrap().aggregate.peak_gops;
    let rb = resnet.baseline.as_ref().unwrap().aggregate.peak_gops;
    let ok = within(v, 1750.0, 0.01)
        && within(r, 1750.0, 0.01)
        && within(a, 4470.0, 0.05)
        && within(ab, 2730.0, 0.01)
        && within(vb, 1050.0, 0.01)
        && within(rb, 1050.0, 0.01);
    assert!(verdict(
        "4 (peak performance)",
        ok,
        format!(
            "dslr peaks {a:.1}/{v:.1}/{r:.1} GOPS vs 4470 +-5% / 1750 +-1% / 1750 +-1%; baseline {ab:.1}/{vb:.1}/{rb:.1} vs 2730/1050/1050 +-1%"
        ),
    ));
}

#[test]
fn criterion_05_efficiency() {
    let alex = report_for("alexnet");
    let vgg = report_for("vgg16");
    let a = &alex.dslr.aggregate;
    let v = &vgg.dslr.aggregate;
    let ab = &alex.baseline.as_ref().unwrap().aggregate;
    let vb = &vgg.baseline.as_ref().unwrap().aggregate;
    let ok = within(a.peak_tops_per_w, 3.58, 0.05)
        && within(a.peak_gops_per_mm2, 53.18, 0.05)
        && within(v.peak_tops_per_w, 1.40, 0.02)
        && within(v.peak_gops_per_mm2, 20.82, 0.02)
        && within(ab.peak_tops_per_w, 3.43, 0.02)
        && within(ab.peak_gops_per_mm2, 50.39, 0.02)
        && within(vb.peak_tops_per_w, 1.32, 0.02)
        && within(vb.peak_gops_per_mm2, 19.37, 0.02);
    assert!(verdict(
        "5 (efficiency)",
        ok,
        format!(
            "dslr alexnet {:.4} TOPS/W, {:.2} GOPS/mm2; vgg {:.4}, {:.2}; baseline alexnet {:.4}, {:.2}; vgg {:.4}, {:.2}",
            a.peak_tops_per_w,
            a.peak_gops_per_mm2,
            v.peak_tops_per_w,
            v.peak_gops_per_mm2,
            ab.peak_tops_per_w,
            ab.peak_gops_per_mm2,
            vb.peak_tops_per_w,
            vb.peak_gops_per_mm2,
        ),
    ));
}

#[test]
fn criterion_06_aggregate_speedups() {
    let speed = |name: &str, target: f64| {
        let report = report_for(name);
        let s = report.speedup.as_ref().unwrap().aggregate;
        (s, within(s, target, 0.05))
    };
    let (sa, oka) = speed("alexnet", 1.58);
    let (sv, okv) = speed("vgg16", 1.67);
    let (sr, okr) = speed("resnet18", 1.65);
    let ok = oka && okv && okr;
    assert!(verdict(
        "6 (aggregate speedups)",
        ok,
        format!("{sa:.4}x / {sv:.4}x / {sr:.4}x vs 1.58 / 1.67 / 1.65 +-5%"),
    ));
}

/// Drives one multiplication while checking the prefix-error bound
/// `|X*Y - P[j]| <= (7/8) * 2^(scale - j)` at every emitted digit.
fn checked_multiply(x: Fixed, y: &DigitStream) -> bool {
    let mut unit = OnlineMultiplier::new(x);
    let product = x.value() * y.value();
    let mut out = DigitStream::new(Vec::new(), y.scale_exp());
    let total = 2 * y.len() + x.width() as usize + 4;
    let seven_eighths = Dyadic::from_scaled(7, 3);
    for s in 1..=total {
        match unit.step(y.digit_or_zero(s)).unwrap() {
            Some(p) => {
                if out.is_empty() && s != (DELTA_MULT + 1) as usize {
                    return false;
                }
                out.push(p);
                let j = out.len() as i32;
                let err = (product - out.value()).abs();
                let bound = seven_eighths.mul_pow2(y.scale_exp() - j);
                if err > bound {
                    return false;
                }
            }
            None => {
                if s > DELTA_MULT as usize {
                    return false;
                }
            }
        }
    }
    unit.residual().is_zero() && out.value() == product
}

#[test]
fn criterion_07_multiplier_exactness_and_prefix_bound() {
    // exhaustive width-6 sweep: integer-oracle product and bound per step
    let mut exhaustive_ok = true;
    for rx in -32i64..32 {
        for ry in -32i64..32 {
            let x = Fixed::new(rx, 6).unwrap();
            let y = Fixed::new(ry, 6).unwrap();
            let stream = y.to_serial_stream();
            let oracle = Dyadic::from_scaled((rx * ry) as i128, 10);
            let mut unit = OnlineMultiplier::new(x);
            let mut out = DigitStream::new(Vec::new(), stream.scale_exp());
            for s in 1..=18usize {
                if let Some(p) = unit.step(stream.digit_or_zero(s)).unwrap() {
                    out.push(p);
                }
            }
            exhaustive_ok &= out.value() == oracle;
            exhaustive_ok &= checked_multiply(x, &stream);
        }
    }
    // randomized width-16 sweep
    let mut rng = ChaCha8Rng::seed_from_u64(0xD5);
    let mut random_ok = true;
    for _ in 0..100_000 {
        let x = Fixed::new(rng.gen_range(-32768..32768), 16).unwrap();
        let y = Fixed::new(rng.gen_range(-32768..32768), 16).unwrap();
        random_ok &= checked_multiply(x, &y.to_serial_stream());
        if !random_ok {
            break;
        }
    }
    let ok = exhaustive_ok && random_ok;
    assert!(verdict(
        "7 (multiplier exactness + prefix bound)",
        ok,
        format!("width-6 exhaustive 4096/4096 {exhaustive_ok}, width-16 random 100000 {random_ok}"),
    ));
}

fn checked_add(a: &DigitStream, b: &DigitStream) -> bool {
    let len = a.len().max(b.len());
    let mut adder = OnlineAdder::new();
    let mut out = DigitStream::new(Vec::new(), a.scale_exp().max(b.scale_exp()) + 1);
    let mut first = None;
    for s in 1..=len + 3 {
        if let Some(z) = adder.step(a.digit_or_zero(s), b.digit_or_zero(s)) {
            first.get_or_insert(s);
            out.push(z);
        }
    }
    first == Some((DELTA_ADD + 1) as usize) && out.value() == a.value() + b.value()
}

#[test]
fn criterion_08_adder_exactness_and_delay() {
    // exhaustive over all 3-digit signed-digit stream pairs
    let digits = [-1i8, 0, 1];
    let mut exhaustive_ok = true;
    let mut count = 0;
    for a1 in digits {
        for a2 in digits {
            for a3 in digits {
                for b1 in digits {
                    for b2 in digits {
                        for b3 in digits {
                            let a = DigitStream::from_values(&[a1, a2, a3], 0).unwrap();
                            let b = DigitStream::from_values(&[b1, b2, b3], 0).unwrap();
                            exhaustive_ok &= checked_add(&a, &b);
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    // randomized width-16 pairs
    let mut rng = ChaCha8Rng::seed_from_u64(0xADD);
    let mut random_ok = true;
    for _ in 0..100_000 {
        let a: Vec<i8> = (0..16).map(|_| rng.gen_range(-1..=1)).collect();
        let b: Vec<i8> = (0..16).map(|_| rng.gen_range(-1..=1)).collect();
        random_ok &= checked_add(
            &DigitStream::from_values(&a, 0).unwrap(),
            &DigitStream::from_values(&b, 0).unwrap(),
        );
        if !random_ok {
            break;
        }
    }
    let ok = exhaustive_ok && count == 729 && random_ok;
    assert!(verdict(
        "8 (adder exactness + delay)",
        ok,
        format!("3-digit exhaustive {count}/729 {exhaustive_ok}, width-16 random 100000 {random_ok}, first digit on step 3"),
    ));
}

#[test]
fn criterion_09_simulator_oracle_equivalence() {
    let tile = TileConfig {
        t_n: 4,
        t_m: 2,
        t_r: 2,
        t_c: 2,
        pe_window: 9,
        pe_spatial: 4,
        p_i: 8,
        ..TileConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x51);
    let mut ran = 0;
    let mut ok = true;
    while ran < 50 {
        let k = *[1usize, 3].get(rng.gen_range(0..2)).unwrap();
        let layer = LayerConfig::new(
            &format!("rand{ran}"),
            rng.gen_range(1..=6),
            rng.gen_range(1..=4),
            rng.gen_range(1..=5),
            rng.gen_range(1..=5),
            k,
        )
        .with_geometry(rng.gen_range(1..=2), if k == 1 { 0 } else { rng.gen_range(0..=1) });
        let (h, w) = layer.input_size();
        let inputs = TensorFx::random(&[layer.n, h, w], tile.p_i, &mut rng);
        let weights = TensorFx::random(&[layer.m, layer.n, layer.k, layer.k], tile.p_i, &mut rng);
        let sim = run_layer(&layer, &tile, &inputs, &weights).unwrap();
        let golden = reference_conv(&layer, &tile, &inputs, &weights).unwrap();
        let predicted = dslr_cycles(&layer, &tile);
        ok &= sim.outputs == golden && sim.measured_cycles == predicted;
        if !ok {
            eprintln!("layer {:?} diverged", layer);
            break;
        }
        ran += 1;
    }
    assert!(verdict(
        "9 (simulator/oracle equivalence)",
        ok,
        format!("{ran} randomized layers bit-identical with matching cycle counts"),
    ));
}

#[test]
fn criterion_10_sop_pipeline_latency() {
    let cases = [
        (3usize, 16usize),
        (3, 4),
        (1, 16),
        (5, 16),
        (7, 8),
        (1, 1),
        (11, 16),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (k, t_n) in cases {
        let k2 = k * k;
        let dw = (k2 as u64).next_power_of_two().trailing_zeros();
        let dc = (t_n as u64).next_power_of_two().trailing_zeros();
        let formula = DELTA_MULT + DELTA_ADD * (dw + dc) + 1;
        let measured = measured_sop_first_digit_step(k2, t_n, 8, 0xBEEF);
        ok &= measured == formula && sop_first_digit_step(k2, t_n) == formula;
        lines.push(format!("k={k},t_n={t_n}:{measured}"));
    }
    assert!(verdict(
        "10 (sum-of-products pipeline latency)",
        ok,
        format!(
            "first output digit at delta_mult + delta_add*(log2(k^2)+log2(t_n)) + 1 — {}",
            lines.join(" ")
        ),
    ));
}

// Cross-checks that pin the derived constants the criteria rely on.
#[test]
fn derived_totals_pinned() {
    let tile = TileConfig::default();
    let alex = builtin("alexnet").unwrap();
    let cycles: Vec<u64> = alex.layers.iter().map(|l| dslr_cycles(l, &tile)).collect();
    assert_eq!(cycles, [29_376, 103_680, 96_768, 145_152, 96_768]);
    let cfg = BaselineConfig::table_reading(tile.p_i);
    let base: u64 = alex
        .layers
        .iter()
        .map(|l| baseline_cycles(l, &tile, &cfg))
        .sum();
    assert_eq!(base, 770_112);
    assert_eq!(duration_ms(base, 500.0), 1.540224);
    let vgg = builtin("vgg16").unwrap();
    let vgg_total: u64 = vgg.layers.iter().map(|l| dslr_cycles(l, &tile)).sum();
    assert_eq!(vgg_total, 9_359_616);
    let resnet = builtin("resnet18").unwrap();
    let resnet_total: u64 = resnet.layers.iter().map(|l| dslr_cycles(l, &tile)).sum();
    assert_eq!(resnet_total, 1_185_408);
    // the published synthesis constants the efficiencies divide by
    let p = HwProfile::dslr_default();
    assert_eq!(p.power_mw, 1249.42);
    assert_eq!(p.area_um2, 84_046_898.0);
    let b = HwProfile::baseline_default();
    assert_eq!(b.power_mw, 795.21);
    assert_eq!(b.area_um2, 54_206_087.0);
}
