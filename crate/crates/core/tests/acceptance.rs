//! Acceptance run: each criterion is evaluated at its stated tolerance and
//! reported on one line. The process exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::brute_force_ml;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddle_llr::cgf::{saddle_seed_low_snr, solve, GaussianCgf};
use saddle_llr::correction::{
    alpha_gauss_moment_pdf, alpha_gmi, alpha_high_snr, alpha_low_snr, alpha_saddlepoint,
    alpha_saddlepoint_channel, alpha_wlsf, MixturePdf,
};
use saddle_llr::experiments::ber::run_ber_with_table;
use saddle_llr::experiments::{BerConfig, BerRow, GmiTable, InterferenceModel, LlrMode};
use saddle_llr::fec::{conv_encode, viterbi_soft, ConvCodeSpec};
use saddle_llr::llr::{sample_llrs, BitConvention, ChannelParams, LValueKind};
use saddle_llr::pep::{
    alpha_grid_2sm, alpha_grid_bhattacharyya, pep_bhattacharyya_2sm, pep_exact_2sm, pep_mc_oracle,
    pep_spa_2sm, two_state_cgfs, PepEstimate, PepQuery,
};

const MC_TRIALS: usize = 10_000_000;
const MC_SEED: u64 = 20_240_601;
const BER_SEED: u64 = 6;

/// (d1, d2, α, SNR dB, SIR dB)
const PEP_CASES: [(usize, usize, f64, f64, f64); 12] = [
    (1, 1, 0.6, 0.0, 6.0),
    (2, 2, 0.6, 0.0, 6.0),
    (4, 4, 0.6, -3.0, 6.0),
    (4, 4, 0.6, 0.0, 6.0),
    (2, 1, 0.5, 3.0, 6.0),
    (1, 2, 0.5, 3.0, 3.0),
    (3, 3, 0.8, 0.0, 10.0),
    (2, 2, 0.3, 3.0, 3.0),
    (1, 1, 1.0, 5.0, 3.0),
    (4, 4, 0.5, -2.0, 3.0),
    (2, 3, 0.7, 2.0, 12.0),
    (3, 1, 0.4, 4.0, 6.0),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Results later criteria reuse.
#[derive(Default)]
struct Shared {
    mc: Vec<PepEstimate>,
    ber: Vec<BerRow>,
}

fn channel(snr_db: f64, sir_db: f64) -> ChannelParams {
    ChannelParams::from_snr_sir_db(1.0, snr_db, sir_db).unwrap()
}

fn grid_20x20() -> Vec<ChannelParams> {
    (0..400)
        .map(|k| {
            channel(
                -5.0 + 30.0 * (k / 20) as f64 / 19.0,
                1.0 + 19.0 * (k % 20) as f64 / 19.0,
            )
        })
        .collect()
}

/// `(γ, γ̃)` with γ log-uniform on [0.05, 20] and `γ/γ̃` uniform on [0.1, 1.9],
/// inside the GMI search interval.
fn random_gamma_pairs(seed: u64, n: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let gamma = 10f64.powf(rng.gen_range(-1.3..1.3));
            (gamma, gamma / rng.gen_range(0.1..1.9))
        })
        .collect()
}

fn closed_form_identities(_: &mut Shared) -> Outcome {
    let mut worst_s = 0.0f64;
    for gamma in [0.05, 0.3, 1.0, 4.0, 20.0] {
        let s = solve(&GaussianCgf::matched_bpsk(gamma).unwrap())
            .unwrap()
            .s_hat;
        worst_s = worst_s.max((s - 0.5).abs());
    }
    let mut worst_a = 0.0f64;
    for (g, gt) in random_gamma_pairs(1, 10) {
        let a = alpha_saddlepoint(&GaussianCgf::mismatched_bpsk(g, gt).unwrap())
            .unwrap()
            .alpha;
        worst_a = worst_a.max((a - g / gt).abs());
    }
    outcome(
        worst_s <= 1e-10 && worst_a <= 1e-9,
        format!("max |ŝ - 1/2| = {worst_s:.1e}, max |α̂ - γ/γ̃| = {worst_a:.1e} over 10 pairs"),
    )
}

fn asymptotes(_: &mut Shared) -> Outcome {
    let mut worst_hi = 0.0f64;
    let mut worst_lo = 0.0f64;
    for sir in [3.0, 6.0, 10.0, 12.0] {
        let p = channel(40.0, sir);
        let inf = 1.0 - 10f64.powf(-sir / 20.0);
        assert_eq!(inf, alpha_high_snr(&p).unwrap().alpha);
        worst_hi = worst_hi.max((alpha_saddlepoint_channel(&p).unwrap().alpha - inf).abs() / inf);
        let p = channel(-20.0, sir);
        let zero = saddle_seed_low_snr(&p) * p.sigma2_z() / p.h();
        worst_lo = worst_lo.max((alpha_saddlepoint_channel(&p).unwrap().alpha - zero).abs() / zero);
    }
    let a30 = alpha_saddlepoint_channel(&channel(30.0, 6.0))
        .unwrap()
        .alpha;
    outcome(
        worst_hi < 0.01 && worst_lo < 0.01 && (a30 - 0.5).abs() <= 0.01,
        format!("rel. gap at 40 dB {worst_hi:.2e}, at -20 dB {worst_lo:.2e}; α̂(30 dB, SIR 6 dB) = {a30:.4}"),
    )
}

fn gaussian_coincidence(_: &mut Shared) -> Outcome {
    let mut worst = 0.0f64;
    for p in grid_20x20() {
        let exact = p.sigma2_z() / (p.sigma2_z() + p.g() * p.g());
        let gauss = alpha_gauss_moment_pdf(&MixturePdf::interference(&p))
            .unwrap()
            .alpha;
        let low = alpha_low_snr(&p).alpha;
        worst = worst
            .max((gauss - exact).abs() / exact)
            .max((low - exact).abs() / exact);
    }
    outcome(
        worst <= 1e-12,
        format!("max relative gap {worst:.1e} on 400 points (round-off bound 1e-12)"),
    )
}

fn method_agreement(_: &mut Shared) -> Outcome {
    let mut worst = 0.0f64;
    for (g, gt) in random_gamma_pairs(4, 10) {
        let want = g / gt;
        let pdf = MixturePdf::gaussian(-4.0 * gt, 8.0 * gt * gt / g).unwrap();
        let got = [
            alpha_saddlepoint(&GaussianCgf::mismatched_bpsk(g, gt).unwrap())
                .unwrap()
                .alpha,
            alpha_gmi(&pdf, 64).unwrap().alpha,
            alpha_wlsf(&pdf).unwrap().alpha,
            alpha_gauss_moment_pdf(&pdf).unwrap().alpha,
        ];
        for a in got {
            worst = worst.max((a - want).abs());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max |α - γ/γ̃| = {worst:.1e} over 4 methods and 10 pairs"),
    )
}

fn pep_oracle_agreement(shared: &mut Shared) -> Outcome {
    let mut pass = true;
    let (mut worst_z, mut worst_ratio, mut min_pep) = (0.0f64, 1.0f64, 1.0f64);
    let mut notes = Vec::new();
    for (i, &(d1, d2, a, snr, sir)) in PEP_CASES.iter().enumerate() {
        let p = channel(snr, sir);
        let q = PepQuery::new(d1, d2, a).unwrap();
        let exact = pep_exact_2sm(&q, &p).unwrap().value;
        let ub = pep_bhattacharyya_2sm(&q, &p).unwrap().value;
        let spa = pep_spa_2sm(&q, &p).unwrap().value;
        let mc = pep_mc_oracle(&q, &p, MC_TRIALS, MC_SEED + i as u64).unwrap();
        let z = (exact - mc.value).abs() / mc.stderr.unwrap();
        let ratio = (spa / mc.value).max(mc.value / spa);
        worst_z = worst_z.max(z);
        worst_ratio = worst_ratio.max(ratio);
        min_pep = min_pep.min(mc.value);
        let ok = z <= 3.0 && ub >= mc.value && ratio < 2.0 && mc.value >= 1e-5;
        if !ok {
            notes.push(format!(
                "case {i} ({d1},{d2},{a},{snr},{sir}): z {z:.2}, ub {ub:.3e}, mc {:.3e}",
                mc.value
            ));
        }
        pass &= ok;
        shared.mc.push(mc);
    }
    let mut detail =
        format!("max |exact-mc|/se = {worst_z:.2}, max SPA ratio = {worst_ratio:.3}, min PEP = {min_pep:.2e}");
    if !notes.is_empty() {
        detail.push_str(&format!("; {}", notes.join("; ")));
    }
    outcome(pass, detail)
}

fn bhattacharyya_argmin(_: &mut Shared) -> Outcome {
    let mut worst = 0.0f64;
    for (snr, sir) in [(0.0, 3.0), (5.0, 6.0), (10.0, 12.0)] {
        let p = channel(snr, sir);
        let (mis, exact) = two_state_cgfs(&p);
        let target = solve(&mis).unwrap().s_hat / solve(&exact).unwrap().s_hat;
        for d1 in [2, 4, 8] {
            for d2 in [2, 4, 8] {
                let a = alpha_grid_bhattacharyya(&p, d1, d2, 1e-3).unwrap().alpha;
                worst = worst.max((a - target).abs());
            }
        }
    }
    outcome(
        worst <= 1e-3,
        format!("max |α_grid - ŝ_L̃/ŝ_L| = {worst:.1e} over 27 cases"),
    )
}

fn two_state_optimum(_: &mut Shared) -> Outcome {
    let mut worst = (0.0f64, String::new());
    for snr in [5.0, 10.0, 15.0] {
        for sir in [3.0, 6.0, 10.0, 12.0] {
            let p = channel(snr, sir);
            let sp = alpha_saddlepoint_channel(&p).unwrap().alpha;
            for d1 in 2..=8 {
                for d2 in 2..=8 {
                    let a = alpha_grid_2sm(&p, d1, d2, 1e-3).unwrap().alpha;
                    let rel = (a - sp).abs() / sp;
                    if rel > worst.0 {
                        worst = (rel, format!("SNR {snr} dB, SIR {sir} dB, d = ({d1},{d2})"));
                    }
                }
            }
        }
    }
    outcome(
        worst.0 < 0.10,
        format!("max relative gap {:.2}% at {}", 100.0 * worst.0, worst.1),
    )
}

fn viterbi_exactness(_: &mut Shared) -> Outcome {
    let spec = ConvCodeSpec::standard_15_17();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut mismatches, mut scale_changes) = (0, 0);
    for _ in 0..100 {
        let msg: Vec<u8> = (0..20).map(|_| rng.gen_range(0..2)).collect();
        let llrs: Vec<f64> = conv_encode(&msg, &spec, true)
            .iter()
            .map(|&c| {
                2.0 * (2.0 * c as f64 - 1.0 + rng.sample::<f64, _>(rand_distr::StandardNormal))
            })
            .collect();
        let (ml, _) = brute_force_ml(&llrs, &spec, 20);
        let path = viterbi_soft(&llrs, &spec).unwrap();
        let ml_metric = BitConvention.metric(&llrs, &conv_encode(&ml, &spec, true));
        if path.bits != ml || (path.metric - ml_metric).abs() > 1e-12 * ml_metric.abs().max(1.0) {
            mismatches += 1;
        }
        for lambda in [0.01, 100.0] {
            let scaled: Vec<f64> = llrs.iter().map(|l| lambda * l).collect();
            if viterbi_soft(&scaled, &spec).unwrap().bits != path.bits {
                scale_changes += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && scale_changes == 0,
        format!("{mismatches} ML mismatches, {scale_changes} decisions changed by scaling, 100 messages"),
    )
}

fn ber_config(mode: LlrMode, grid: Vec<f64>) -> BerConfig {
    let mut cfg = BerConfig::new(6.0, grid, mode, BER_SEED);
    cfg.interference = InterferenceModel::Fixed;
    cfg.min_errors = 200;
    cfg.max_blocks = 10_000_000;
    cfg
}

fn run_all_modes(grid: Vec<f64>, table: &GmiTable) -> Vec<BerRow> {
    LlrMode::ALL
        .iter()
        .flat_map(|&mode| {
            run_ber_with_table(&ber_config(mode, grid.clone()), Some(table))
                .unwrap()
                .rows
        })
        .collect()
}

fn ber_ordering(shared: &mut Shared) -> Outcome {
    let grid: Vec<f64> = (10..=20).map(f64::from).collect();
    let table =
        GmiTable::build(&ber_config(LlrMode::GmiTable, grid.clone()).gmi_table_spec()).unwrap();
    shared.ber = run_all_modes(grid.clone(), &table);
    let row = |mode: LlrMode, snr: f64| {
        shared
            .ber
            .iter()
            .find(|r| r.mode == mode && r.snr_db == snr)
            .unwrap()
    };
    let mut pass = true;
    let mut notes = Vec::new();
    for r in &shared.ber {
        if r.bit_errors < 200 {
            pass = false;
            notes.push(format!(
                "{} at {} dB stopped at {} errors",
                r.mode, r.snr_db, r.bit_errors
            ));
        }
    }
    for &snr in &grid[grid.len() - 2..] {
        let (t, s, u) = (
            row(LlrMode::True, snr),
            row(LlrMode::Saddlepoint, snr),
            row(LlrMode::Uncorrected, snr),
        );
        let sep = (u.ber - t.ber) / (u.stderr.powi(2) + t.stderr.powi(2)).sqrt();
        let ordered = t.ber <= s.ber && s.ber <= u.ber && sep >= 3.0;
        pass &= ordered;
        notes.push(format!(
            "{snr} dB: true {:.2e} <= sp {:.2e} <= unc {:.2e} ({sep:.1} sigma)",
            t.ber, s.ber, u.ber
        ));
    }
    let mut worst_gmi = 0.0f64;
    for &snr in &grid {
        let (s, g) = (row(LlrMode::Saddlepoint, snr), row(LlrMode::GmiTable, snr));
        worst_gmi =
            worst_gmi.max((g.ber - s.ber).abs() / (g.stderr.powi(2) + s.stderr.powi(2)).sqrt());
    }
    pass &= worst_gmi <= 2.0;
    notes.push(format!(
        "max |gmi_table - saddlepoint| = {worst_gmi:.2} combined se"
    ));
    outcome(pass, notes.join("; "))
}

fn csv_lines<T>(rows: &[T], f: impl Fn(&T) -> Vec<String>) -> Vec<String> {
    rows.iter().map(|r| f(r).join(",")).collect()
}

fn pep_record(e: &PepEstimate) -> Vec<String> {
    vec![
        e.value.to_bits().to_string(),
        e.stderr.unwrap().to_bits().to_string(),
    ]
}

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}

fn determinism(shared: &mut Shared) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let first = csv_lines(&shared.mc, pep_record);
    for threads in [1, 3] {
        let again: Vec<PepEstimate> = with_threads(threads, || {
            PEP_CASES
                .iter()
                .enumerate()
                .map(|(i, &(d1, d2, a, snr, sir))| {
                    let q = PepQuery::new(d1, d2, a).unwrap();
                    pep_mc_oracle(&q, &channel(snr, sir), MC_TRIALS, MC_SEED + i as u64).unwrap()
                })
                .collect()
        });
        let same = csv_lines(&again, pep_record) == first;
        pass &= same;
        notes.push(format!(
            "PEP oracles with {threads} worker(s): {}",
            if same { "identical" } else { "DIFFER" }
        ));
    }

    // the first three grid points rerun with the same seeds
    let prefix: Vec<f64> = vec![10.0, 11.0, 12.0];
    let table =
        GmiTable::build(&ber_config(LlrMode::GmiTable, prefix.clone()).gmi_table_spec()).unwrap();
    let want: Vec<String> = csv_lines(
        &shared
            .ber
            .iter()
            .filter(|r| prefix.contains(&r.snr_db))
            .cloned()
            .collect::<Vec<_>>(),
        BerRow::to_record,
    );
    for threads in [1, 3] {
        let got = csv_lines(
            &with_threads(threads, || run_all_modes(prefix.clone(), &table)),
            BerRow::to_record,
        );
        let same = got == want;
        pass &= same;
        notes.push(format!(
            "BER prefix with {threads} worker(s): {}",
            if same { "identical" } else { "DIFFER" }
        ));
    }

    let p = channel(5.0, 6.0);
    let draws: Vec<Vec<u64>> = [1, 2, 4]
        .iter()
        .map(|&t| {
            with_threads(t, || {
                sample_llrs(&p, LValueKind::Matched, 100_000, 12).unwrap()
            })
            .samples
            .iter()
            .map(|x| x.to_bits())
            .collect()
        })
        .collect();
    let same = draws.windows(2).all(|w| w[0] == w[1]);
    pass &= same;
    notes.push(format!(
        "L-value sampler with 1/2/4 workers: {}",
        if same { "identical" } else { "DIFFER" }
    ));
    outcome(pass, notes.join("; "))
}

fn main() {
    type Check = fn(&mut Shared) -> Outcome;
    let criteria: [(&str, Check); 10] = [
        ("closed-form saddlepoint identities", closed_form_identities),
        ("asymptote convergence", asymptotes),
        (
            "Gaussian-moment and low-SNR coincidence",
            gaussian_coincidence,
        ),
        ("method agreement on scaled Gaussians", method_agreement),
        ("PEP formulas against Monte Carlo", pep_oracle_agreement),
        (
            "Bhattacharyya argmin equals saddlepoint ratio",
            bhattacharyya_argmin,
        ),
        (
            "two-state PEP optimum near saddlepoint factor",
            two_state_optimum,
        ),
        ("Viterbi equals exhaustive ML", viterbi_exactness),
        ("coded BER ordering", ber_ordering),
        ("determinism", determinism),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| check(&mut shared)))
            .unwrap_or_else(|_| outcome(false, "aborted by a panic".into()));
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict}: {name} ({}) [{:.1} s]",
            i + 1,
            out.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!out.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
