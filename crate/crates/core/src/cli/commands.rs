use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::output::OutputDir;
use super::{
    AnalyzeSwitchArgs, BudgetArgs, Cli, Command, DmBenchArgs, DmCommand, DmRateLossArgs,
    DmRoundtripArgs, OptimizeArgs, Outcome, ShapeCommand, ShapeDecodeArgs, ShapeEncodeArgs,
    SimulateArgs,
};
use crate::budget::{loss_budget, optimized_curve_around_rate};
use crate::constellation::{Constellation, ShapingProfile, SymbolDistribution};
use crate::enumdm::{
    binary_entropy, dm_complexity_bound, rate_loss, weight_for, DmCode, Index,
};
use crate::error::{Error, Result};
use crate::midist::{optimize_profile, rate_loss_to_db, snr_db, GridOptions};
use crate::shaper::{analyze_switch, BlockFile, Shaper, ShaperConfig, ShaperMode, SwitchAnalysis};
use crate::simulate::{run as run_simulation, sweep, sweep_to_csv, SimConfig};

pub(super) fn dispatch(cli: &Cli) -> Result<Outcome> {
    let mut out = OutputDir::new(&cli.out_dir);
    let stdout = match &cli.command {
        Command::Optimize(a) => optimize(cli, a, &mut out)?,
        Command::Dm { command } => match command {
            DmCommand::Roundtrip(a) => dm_roundtrip(cli, a, &mut out)?,
            DmCommand::RateLoss(a) => dm_rate_loss(cli, a, &mut out)?,
            DmCommand::Bench(a) => dm_bench(cli, a, &mut out)?,
        },
        Command::Shape { command } => match command {
            ShapeCommand::Encode(a) => shape_encode(cli, a, &mut out)?,
            ShapeCommand::Decode(a) => shape_decode(a, &mut out)?,
            ShapeCommand::AnalyzeSwitch(a) => analyze(cli, a, &mut out)?,
        },
        Command::Simulate(a) => simulate(cli, a, &mut out)?,
        Command::Budget(a) => budget(cli, a, &mut out)?,
    };
    Ok(Outcome { stdout, outputs: out.written })
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_table(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut text = format!("{header}\n");
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    text
}

fn bits_to_text(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>() + "\n"
}

fn parse_bits(text: &str) -> Result<Vec<bool>> {
    text.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Integrity(format!("unexpected character {other:?} in bit file"))),
        })
        .collect()
}

fn optimize(cli: &Cli, a: &OptimizeArgs, out: &mut OutputDir) -> Result<String> {
    ShapingProfile::uniform(a.m, a.num_distinct)?;
    let options = GridOptions {
        coarse_step: a.coarse_step,
        final_step: a.final_step,
        refinements: a.refinements,
        strategy: a.strategy.map(Into::into),
        ..GridOptions::default()
    };
    let mut snrs = if a.snr.is_empty() {
        let energy = SymbolDistribution::uniform(&Constellation::build_ask(a.m)?).average_energy();
        a.sigma
            .iter()
            .map(|&s| {
                if s > 0.0 {
                    Ok(snr_db(energy, s))
                } else {
                    Err(Error::Parameter(format!("sigma {s} must be positive")))
                }
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        a.snr.clone()
    };
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();

    let results = snrs
        .iter()
        .map(|&snr| optimize_profile(a.m, a.num_distinct, snr, &options))
        .collect::<Result<Vec<_>>>()?;
    out.write_json("optimize.json", &results)?;
    let curve_csv = csv_table("snr_db,mi_bpcu", results.iter().map(|r| format!("{},{}", r.snr_db, r.mi_bpcu)));
    out.write("mi_curve.csv", &curve_csv)?;
    if cli.csv {
        Ok(curve_csv)
    } else {
        json(&results)
    }
}

#[derive(Serialize)]
struct RoundtripReport {
    n: usize,
    weights: Vec<usize>,
    exhaustive: bool,
    checked: u64,
    failures: u64,
    pass: bool,
}

fn exhaustive_failures(code: &DmCode) -> Result<(u64, u64)> {
    let total = u64::try_from(code.num_words())
        .map_err(|_| Error::Parameter("codebook too large for an exhaustive check".into()))?;
    let mut failures = 0;
    for i in 0..total {
        let index = Index::from(i);
        let word = code.unrank(&index)?;
        let mut ok = word.weight() == code.w() && code.rank(&word)? == index;
        if ok && i >> code.k().min(63) == 0 {
            let bits = code.decode(&word)?;
            ok = code.encode(&bits)? == word && Index::from_bits(&bits) == index;
        }
        failures += u64::from(!ok);
    }
    Ok((total, failures))
}

fn sampled_failures(code: &DmCode, trials: usize, rng: &mut ChaCha8Rng) -> Result<(u64, u64)> {
    let mut failures = 0;
    for _ in 0..trials {
        let info: Vec<bool> = (0..code.k()).map(|_| rng.random()).collect();
        let word = code.encode(&info)?;
        let ok = word.weight() == code.w() && code.decode(&word)? == info;
        failures += u64::from(!ok);
    }
    Ok((trials as u64, failures))
}

fn dm_roundtrip(cli: &Cli, a: &DmRoundtripArgs, out: &mut OutputDir) -> Result<String> {
    const MAX_EXHAUSTIVE_N: usize = 24;
    let weights: Vec<usize> = match (a.w, a.p) {
        (Some(w), _) => vec![w],
        (None, Some(p)) if (0.0..=1.0).contains(&p) => vec![weight_for(a.n, p)],
        (None, Some(p)) => return Err(Error::Parameter(format!("p = {p} outside [0, 1]"))),
        (None, None) if a.exhaustive => (0..=a.n).collect(),
        (None, None) => return Err(Error::Parameter("sampled round trip needs --w or --p".into())),
    };
    if a.exhaustive && a.n > MAX_EXHAUSTIVE_N {
        return Err(Error::Parameter(format!("exhaustive check is limited to n <= {MAX_EXHAUSTIVE_N}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let (mut checked, mut failures) = (0, 0);
    for &w in &weights {
        let code = DmCode::new(a.n, w)?;
        let (c, f) = if a.exhaustive {
            exhaustive_failures(&code)?
        } else {
            sampled_failures(&code, a.trials, &mut rng)?
        };
        checked += c;
        failures += f;
    }
    let report = RoundtripReport {
        n: a.n,
        weights,
        exhaustive: a.exhaustive,
        checked,
        failures,
        pass: failures == 0,
    };
    out.write_json("dm_roundtrip.json", &report)?;
    if failures > 0 {
        return Err(Error::Integrity(format!("{failures} of {checked} round trips failed")));
    }
    json(&report)
}

#[derive(Serialize)]
struct RateLossRow {
    n: usize,
    p: f64,
    w: usize,
    k: usize,
    entropy: f64,
    dm_rate: f64,
    rate_loss_bpcu: f64,
    loss_db: f64,
}

#[derive(Serialize)]
struct RateLossReport {
    reference_curve: String,
    operating_rate: f64,
    slope_bpcu_per_db: f64,
    rows: Vec<RateLossRow>,
}

fn dm_rate_loss(cli: &Cli, a: &DmRateLossArgs, out: &mut OutputDir) -> Result<String> {
    let mut rows = a
        .n
        .iter()
        .map(|&n| {
            let loss = rate_loss(n, a.p)?;
            let code = DmCode::new(n, weight_for(n, a.p))?;
            Ok(RateLossRow {
                n,
                p: a.p,
                w: code.w(),
                k: code.k(),
                entropy: binary_entropy(a.p),
                dm_rate: code.rate(),
                rate_loss_bpcu: loss,
                loss_db: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = optimized_curve_around_rate(a.m, a.num_distinct, a.rate, &GridOptions::default())?;
    for row in &mut rows {
        row.loss_db = rate_loss_to_db(row.rate_loss_bpcu, &curve, a.rate)?;
    }
    let table = csv_table(
        "n,p,w,k,entropy,dm_rate,rate_loss_bpcu,loss_db",
        rows.iter().map(|r| {
            format!("{},{},{},{},{},{},{},{}", r.n, r.p, r.w, r.k, r.entropy, r.dm_rate, r.rate_loss_bpcu, r.loss_db)
        }),
    );
    let report = RateLossReport {
        reference_curve: curve.label.clone(),
        operating_rate: a.rate,
        slope_bpcu_per_db: curve.slope_at_rate(a.rate)?,
        rows,
    };
    out.write("dm_rate_loss.csv", &table)?;
    out.write_json("dm_rate_loss.json", &report)?;
    out.write("reference_curve.csv", &curve.to_csv())?;
    if cli.csv {
        Ok(table)
    } else {
        json(&report)
    }
}

#[derive(Serialize)]
struct BenchReport {
    n: usize,
    p: f64,
    w: usize,
    k: usize,
    trials: usize,
    mean_steps: f64,
    max_steps: usize,
    mean_comparisons: f64,
    max_comparisons: usize,
    /// Worst observed comparisons per output bit.
    max_comparisons_per_bit: f64,
    /// `p log2 n` comparisons per output bit.
    bound_per_bit: f64,
    table_bytes: usize,
}

fn dm_bench(cli: &Cli, a: &DmBenchArgs, out: &mut OutputDir) -> Result<String> {
    if !(0.0..=1.0).contains(&a.p) || a.n == 0 {
        return Err(Error::Parameter("need n >= 1 and p in [0, 1]".into()));
    }
    let code = DmCode::new(a.n, weight_for(a.n, a.p))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let (mut steps, mut comparisons, mut max_steps, mut max_comparisons) = (0usize, 0usize, 0usize, 0usize);
    if code.w() > 0 {
        for _ in 0..a.trials {
            let bits: Vec<bool> = (0..code.k()).map(|_| rng.random()).collect();
            let (_, stats) = code.unrank_counted(&Index::from_bits(&bits))?;
            steps += stats.steps;
            comparisons += stats.comparisons;
            max_steps = max_steps.max(stats.steps);
            max_comparisons = max_comparisons.max(stats.comparisons);
        }
    }
    let trials = a.trials.max(1) as f64;
    let report = BenchReport {
        n: a.n,
        p: a.p,
        w: code.w(),
        k: code.k(),
        trials: a.trials,
        mean_steps: steps as f64 / trials,
        max_steps,
        mean_comparisons: comparisons as f64 / trials,
        max_comparisons,
        max_comparisons_per_bit: max_comparisons as f64 / a.n as f64,
        bound_per_bit: dm_complexity_bound(a.n, a.p),
        table_bytes: code.table_bytes(),
    };
    out.write_json("dm_bench.json", &report)?;
    json(&report)
}

#[derive(Serialize)]
struct EncodeSummary {
    blocks: usize,
    n: usize,
    mode: ShaperMode,
    info_bits_per_block: usize,
    overflow_counts: Vec<usize>,
}

fn shape_encode(cli: &Cli, a: &ShapeEncodeArgs, out: &mut OutputDir) -> Result<String> {
    let config = ShaperConfig::new(a.profile.resolve()?, a.n, cli.seed, a.mode)?;
    let shaper = Shaper::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut overflow_counts = Vec::with_capacity(a.blocks);
    for b in 0..a.blocks {
        let block = match a.mode {
            ShaperMode::IdealSources => shaper.encode_block_ideal(&mut rng, b as u64)?,
            ShaperMode::BlockDm => {
                let info: Vec<bool> = (0..shaper.info_len()).map(|_| rng.random()).collect();
                out.write(&format!("info-{b:04}.txt"), &bits_to_text(&info))?;
                shaper.encode_block_dm(&info)?
            }
        };
        overflow_counts.push(block.overflow_count);
        out.write(&format!("block-{b:04}.json"), &BlockFile::new(&config, &block).to_json()?)?;
    }
    let summary = EncodeSummary {
        blocks: a.blocks,
        n: a.n,
        mode: a.mode,
        info_bits_per_block: match a.mode {
            ShaperMode::IdealSources => 0,
            ShaperMode::BlockDm => shaper.info_len(),
        },
        overflow_counts,
    };
    json(&summary)
}

#[derive(Serialize)]
struct DecodeReport {
    block: String,
    info_bits: usize,
    matches_expected: Option<bool>,
}

fn shape_decode(a: &ShapeDecodeArgs, out: &mut OutputDir) -> Result<String> {
    let file = BlockFile::from_json(&std::fs::read_to_string(&a.block)?)?;
    let config = file.config().map_err(|e| match e {
        Error::Parameter(msg) => Error::Integrity(format!("block header: {msg}")),
        other => other,
    })?;
    if file.symbols.len() != config.n {
        return Err(Error::Integrity(format!(
            "block holds {} symbols, header says {}",
            file.symbols.len(),
            config.n
        )));
    }
    let bits = Shaper::new(config)?.decode_block(&file.symbols)?;
    out.write("decoded.txt", &bits_to_text(&bits))?;
    let matches_expected = match &a.expect {
        Some(path) => Some(parse_bits(&std::fs::read_to_string(path)?)? == bits),
        None => None,
    };
    if matches_expected == Some(false) {
        return Err(Error::Integrity("decoded bits differ from the expected info bits".into()));
    }
    json(&DecodeReport { block: a.block.display().to_string(), info_bits: bits.len(), matches_expected })
}

fn analyze(cli: &Cli, a: &AnalyzeSwitchArgs, out: &mut OutputDir) -> Result<String> {
    let mut rows: Vec<SwitchAnalysis> = Vec::new();
    for &m in &a.m {
        let profile = ShapingProfile::new(m, vec![a.p1, a.p2])?;
        for &n in &a.n {
            rows.push(analyze_switch(&profile, n)?);
        }
    }
    let table = csv_table(
        "m,n,p1,p2,epsilon,p1_eff,p2_eff,delta_db",
        rows.iter().map(|r| {
            format!("{},{},{},{},{},{},{},{}", r.m, r.n, r.p1, r.p2, r.epsilon, r.p_eff.0, r.p_eff.1, r.delta_db)
        }),
    );
    out.write("switch_analysis.csv", &table)?;
    out.write_json("switch_analysis.json", &rows)?;
    if cli.csv {
        Ok(table)
    } else {
        json(&rows)
    }
}

fn simulate(cli: &Cli, a: &SimulateArgs, out: &mut OutputDir) -> Result<String> {
    let shaper = ShaperConfig::new(a.profile.resolve()?, a.n, cli.seed, a.mode)?;
    let base = SimConfig {
        shaper,
        noise_std: a.sigma.unwrap_or(1.0),
        num_blocks: a.blocks,
        rng_seed: cli.seed,
    };
    if a.snr.is_empty() {
        let report = run_simulation(&base)?;
        out.write_json("sim_report.json", &report)?;
        return json(&report);
    }
    let points = sweep(&base, &a.snr)?;
    let table = sweep_to_csv(&points);
    out.write("sweep.csv", &table)?;
    out.write_json("sweep.json", &points)?;
    if cli.csv {
        Ok(table)
    } else {
        json(&points)
    }
}

fn budget(cli: &Cli, a: &BudgetArgs, out: &mut OutputDir) -> Result<String> {
    if a.num_distinct != 2 {
        return Err(Error::Parameter(format!("budget needs P = 2, got {}", a.num_distinct)));
    }
    let n = if a.asymptotic { None } else { a.n };
    let b = loss_budget(a.m, a.p1, a.p2, n, a.snr)?;
    out.write_json("budget.json", &b)?;
    if cli.csv {
        Ok(csv_table(
            "component,db",
            [
                ("quantization", b.quantization_db),
                ("dm", b.dm_db),
                ("switch", b.switch_db),
                ("total", b.total_db),
            ]
            .iter()
            .map(|(name, v)| format!("{name},{v}")),
        ))
    } else {
        json(&b)
    }
}
