//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs the shipped presets at full size through the
//! binary, so it takes a few minutes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use contagion_core::balsheet::{synthesize, BalanceSheet, SystemParams};
use contagion_core::cascade::{brute_force_fixed_point, run_cascade};
use contagion_core::ensemble::{sample_network, ExperimentConfig};
use contagion_core::netgen::{build_layered, BankClass, Layer, Topology, WeightedNetwork};
use contagion_core::seeds;
use contagion_core::shocks::{
    calibrate_amplitude, sample_portfolio, standalone_failure_probability, CalibrationTarget, Portfolio, PriceShock,
};
use contagion_core::TopologyKind;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

struct Row {
    x: f64,
    f: f64,
    shadow: f64,
    regulated: f64,
    baseline_b: Option<f64>,
    baseline_c: Option<f64>,
}

fn parse_csv(text: &str) -> Vec<Row> {
    text.lines()
        .skip(1)
        .map(|line| {
            let v: Vec<&str> = line.split(',').collect();
            let num = |s: &str| s.parse::<f64>().unwrap();
            let opt = |s: &str| (!s.is_empty()).then(|| num(s));
            Row {
                x: num(v[0]),
                f: num(v[1]),
                shadow: num(v[2]),
                regulated: num(v[3]),
                baseline_b: opt(v[4]),
                baseline_c: opt(v[5]),
            }
        })
        .collect()
}

struct Runner {
    root: tempfile::TempDir,
}

impl Runner {
    /// Runs a preset and returns the CSV path.
    fn preset(&self, preset: &str, workers: &str) -> Result<PathBuf, String> {
        let out_dir = self.root.path().join(format!("{preset}-w{workers}"));
        let out = Command::new(env!("CARGO_BIN_EXE_contagion"))
            .args(["run", "--preset", preset, "--workers", workers, "--out-dir"])
            .arg(&out_dir)
            .env("CONTAGION_CACHE_DIR", self.root.path().join("cache"))
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        Ok(PathBuf::from(String::from_utf8_lossy(&out.stdout).trim()))
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn read(path: &Path) -> Vec<Row> {
    parse_csv(&fs::read_to_string(path).unwrap())
}

fn fig6_anchor(rows: &[Row]) -> Verdict {
    let zero = rows.iter().find(|r| r.x == 0.0).expect("q = 0 row");
    let fractions = [
        ("shadow", zero.shadow / 500.0, 0.94),
        ("regulated", zero.regulated / 500.0, 0.25),
        ("total", zero.f / 1000.0, 0.59),
    ];
    let pass = fractions.iter().all(|(_, got, want)| (got - want).abs() <= 0.10);
    let detail = fractions
        .iter()
        .map(|(name, got, want)| format!("{name} {got:.3} (target {want} ± 0.10)"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(pass, detail)
}

fn fig4_claim(rows: &[Row]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for f in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let r = rows.iter().find(|r| (r.x - f).abs() < 1e-9).expect("grid point");
        let c = r.baseline_c.expect("baseline c");
        pass &= r.f > c;
        parts.push(format!("f={f}: F={} vs F(0)+fN={c}", r.f));
    }
    verdict(pass, parts.join("; "))
}

fn fig5_claim(rows: &[Row]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for i in 2..=8 {
        let f = i as f64 / 10.0;
        let r = rows.iter().find(|r| (r.x - f).abs() < 1e-9).expect("grid point");
        let b = r.baseline_b.expect("baseline b");
        pass &= r.f > b;
        parts.push(format!("f={f}: (a)={} (b)={b}", r.f));
    }
    verdict(pass, parts.join("; "))
}

fn fig6_claims(rows: &[Row]) -> Verdict {
    let zero = rows.iter().find(|r| r.x == 0.0).expect("q = 0 row");
    let at = rows.iter().find(|r| (r.x - 0.05).abs() < 1e-9).expect("q = 0.05 row");
    let ratio = (zero.f > 0.0).then(|| (at.f - zero.f) / zero.f);
    let min_shadow = rows.iter().map(|r| r.shadow / 500.0).fold(f64::INFINITY, f64::min);
    let pass = ratio.is_some_and(|r| r > 0.0) && min_shadow >= 0.90;
    let ratio = ratio.map_or("undefined".to_string(), |r| format!("{r:.4}"));
    verdict(pass, format!("R(0.05) = {ratio} (> 0), min shadow fraction {min_shadow:.3} (≥ 0.90)"))
}

fn calibration() -> Verdict {
    let cal = match calibrate_amplitude(&CalibrationTarget::default()) {
        Ok(c) => c,
        Err(e) => return verdict(false, e.to_string()),
    };
    let p = standalone_failure_probability(cal.scale, 2, 0.07, 1.5, 10_000_000, 0xACCE).unwrap();
    let single = calibrate_amplitude(&CalibrationTarget {
        n_assets: 1,
        ..CalibrationTarget::default()
    })
    .unwrap();
    let closed = 0.07 / StudentsT::new(0.0, 1.0, 1.5).unwrap().inverse_cdf(0.999);
    let rel = (single.scale - closed).abs() / closed;
    verdict(
        (0.5e-3..=2e-3).contains(&p) && rel <= 0.05,
        format!(
            "M=2 s={:.6}, fresh p={p:.6} (in [0.0005, 0.002]); M=1 s={:.6} vs closed form {closed:.6}, rel err {rel:.4} (≤ 0.05)",
            cal.scale, single.scale
        ),
    )
}

struct Instance {
    sheets: Vec<BalanceSheet>,
    network: WeightedNetwork,
    portfolio: Portfolio,
    shock: PriceShock,
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = seeds::rng_from(seed);
    let n = rng.random_range(2..=8usize);
    let p_edge = rng.random_range(0.15..0.8);
    let mut edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|c| (0..n).map(move |d| (c, d)))
        .filter(|&(c, d)| c != d)
        .filter(|_| rng.random_bool(p_edge))
        .collect();
    if edges.is_empty() {
        edges.push((0, 1));
    }
    let classes = (0..n)
        .map(|_| if rng.random_bool(0.5) { BankClass::Shadow } else { BankClass::Regulated })
        .collect();
    let topology = Topology::from_edges(n, edges).unwrap().with_classes(classes).unwrap();
    let weights = (0..topology.n_edges()).map(|_| rng.random_range(0.05..1.0)).collect();
    let network = WeightedNetwork::from_weights(topology, weights).unwrap();
    let params = SystemParams::new(
        rng.random_range(0.1..0.6),
        rng.random_range(0.02..0.1),
        rng.random_range(0.05..0.2),
    )
    .unwrap();
    let sheets = synthesize(&network, &params).unwrap();
    let m = rng.random_range(1..=3usize);
    let portfolio = sample_portfolio(n, m, rng.random()).unwrap();
    let shock = PriceShock {
        relative_change: (0..m).map(|_| rng.random_range(-0.6..0.2)).collect(),
        scale: 1.0,
        dof: 1.5,
    };
    Instance {
        sheets,
        network,
        portfolio,
        shock,
    }
}

fn oracle_equivalence() -> Verdict {
    let mut mismatches = 0;
    let mut propagated = 0;
    for seed in 0..200 {
        let x = random_instance(0xC0DE_0000 + seed);
        let fast = run_cascade(&x.sheets, &x.network, &x.portfolio, &x.shock).unwrap();
        let slow = brute_force_fixed_point(&x.sheets, &x.network, &x.portfolio, &x.shock).unwrap();
        if fast != slow {
            mismatches += 1;
        }
        if fast.rounds > 0 {
            propagated += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("{mismatches} mismatches on 200 instances ({propagated} with interbank propagation)"),
    )
}

fn structural_invariants() -> Verdict {
    let mut failures = Vec::new();
    let mut worst_identity = 0.0f64;
    let mut rho_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut degree_range = (f64::INFINITY, f64::NEG_INFINITY);
    for kind in [TopologyKind::RandomMixing, TopologyKind::AssetCorrelated, TopologyKind::Layered] {
        let config = ExperimentConfig {
            shadow_fraction: 0.5,
            ..ExperimentConfig::standard(kind, 0.0)
        };
        for i in 0..10 {
            let net = sample_network(&config, i).unwrap();
            let sheets = synthesize(&net, &config.system).unwrap();
            for s in &sheets {
                let assets = (s.assets - s.interbank_loans - s.external_assets).abs();
                let claims = (s.assets - s.equity - s.interbank_borrowings - s.deposits).abs();
                worst_identity = worst_identity.max(assets.max(claims) / s.assets.max(f64::MIN_POSITIVE));
            }
            let rho = net.realized_concentration();
            rho_range = (rho_range.0.min(rho), rho_range.1.max(rho));
            if kind != TopologyKind::Layered {
                let d = net.topology().mean_out_degree();
                degree_range = (degree_range.0.min(d), degree_range.1.max(d));
            }
        }
    }
    if worst_identity > 1e-9 {
        failures.push("balance-sheet identity");
    }
    if rho_range.0 < 0.23 || rho_range.1 > 0.27 {
        failures.push("concentration");
    }
    let expected = 0.05 * 499.0;
    if (degree_range.0 - expected).abs() > 0.1 * expected || (degree_range.1 - expected).abs() > 0.1 * expected {
        failures.push("mean degree");
    }

    let mut worst_row = 0.0f64;
    for m in 1..=4 {
        let p = sample_portfolio(500, m, 0xF00 + m as u64).unwrap();
        for row in p.rows() {
            worst_row = worst_row.max((row.iter().sum::<f64>() - 1.0).abs());
        }
    }
    if worst_row > 1e-12 {
        failures.push("portfolio rows");
    }

    // q = 0: crash only the shadow layer's asset; nothing may fail across.
    let net = build_layered(500, 0.05, 0.0, 0.25, 0.02, 0xACE).unwrap();
    let sheets = synthesize(&net, &SystemParams::new(0.3, 0.06, 0.1).unwrap()).unwrap();
    let rows: Vec<Vec<f64>> = net
        .topology()
        .layers()
        .iter()
        .map(|&l| if l == Layer::ShadowLayer { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
        .collect();
    let portfolio = Portfolio::from_rows(&rows).unwrap();
    let shock = PriceShock {
        relative_change: vec![-0.6, 0.0],
        scale: 1.0,
        dof: 1.5,
    };
    let out = run_cascade(&sheets, &net, &portfolio, &shock).unwrap();
    let contained = net.topology().cross_layer_edges() == 0 && out.shadow > 0 && out.regulated == 0;
    if !contained {
        failures.push("layer containment");
    }

    verdict(
        failures.is_empty(),
        format!(
            "identity residual {worst_identity:.2e} (≤ 1e-9), row-sum error {worst_row:.2e} (≤ 1e-12), \
             ρ in [{:.4}, {:.4}] (0.25 ± 0.02), mean out-degree in [{:.3}, {:.3}] ({expected} ± 10%), \
             q=0 containment {}{}",
            rho_range.0,
            rho_range.1,
            degree_range.0,
            degree_range.1,
            if contained { "exact" } else { "broken" },
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    )
}

fn main() -> ExitCode {
    let runner = Runner {
        root: tempfile::tempdir().unwrap(),
    };
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut csvs = Vec::new();
    for preset in ["fig6", "fig4", "fig5"] {
        csvs.push((preset, runner.preset(preset, "0")));
    }
    let rows = |preset: &str| match &csvs.iter().find(|(p, _)| *p == preset).unwrap().1 {
        Ok(path) => Ok(read(path)),
        Err(e) => Err(verdict(false, format!("run failed: {e}"))),
    };
    let check = |preset: &str, f: fn(&[Row]) -> Verdict| rows(preset).map_or_else(|e| e, |r| f(&r));

    results.push((1, "layered q=0 crisis fractions", check("fig6", fig6_anchor)));
    results.push((2, "random mixing exceeds F(0) + fN", check("fig4", fig4_claim)));
    results.push((3, "asset-correlated (a) above (b)", check("fig5", fig5_claim)));
    results.push((4, "coupling raises failures, shadow layer collapses", check("fig6", fig6_claims)));
    results.push((5, "shock calibration", calibration()));
    results.push((6, "cascade equals exhaustive oracle", oracle_equivalence()));
    results.push((7, "structural invariants", structural_invariants()));

    let mut identical = Vec::new();
    let mut same = true;
    for (preset, first) in &csvs {
        let again = runner.preset(preset, "1");
        let equal = match (first, &again) {
            (Ok(a), Ok(b)) => fs::read(a).ok() == fs::read(b).ok(),
            _ => false,
        };
        same &= equal;
        identical.push(format!("{preset} {}", if equal { "identical" } else { "differs" }));
    }
    results.push((8, "byte-identical CSV across --workers", verdict(same, identical.join(", "))));

    let mut failed = 0;
    for (id, name, v) in &results {
        println!("{} criterion {id} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
