//! Implementations behind the `madkit` subcommands.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde_json::json;

use crate::detector::{decide, Hypothesis, WhitenedReceiver};
use crate::error::{io_err, Error, Result};
use crate::harness::config::ScenarioConfig;
use crate::harness::experiment::{run_roc_experiment, run_selection_experiment};
use crate::harness::output::{fmt_f64, OutputDir};
use crate::harness::scenarios::scale_to_snr;
use crate::mobf::{mobf_polynomial, orthonormality_error, sample_basis, BasisKind};
use crate::order_selection::{average_critical_alpha, criterion_critical_alpha, select_from_energies, CriterionSpec};
use crate::performance::{critical_alpha, optimal_order_map, roc_for, threshold_for_pfa, ZoneParams};

/// Options shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: PathBuf,
}

impl CommonArgs {
    fn scenario(&self) -> Result<ScenarioConfig> {
        match &self.config {
            Some(p) => ScenarioConfig::load(p),
            None => Ok(ScenarioConfig::default()),
        }
    }

    fn required_scenario(&self, command: &str) -> Result<ScenarioConfig> {
        match &self.config {
            Some(p) => ScenarioConfig::load(p),
            None => Err(Error::Config(format!("`{command}` needs --config <file>"))),
        }
    }
}

fn f(v: f64) -> String {
    fmt_f64(v)
}

/// Sampled bases, coefficient tables and orthonormality errors.
pub fn basis(args: &CommonArgs, orders: &[usize]) -> Result<PathBuf> {
    let scenario = args.scenario()?;
    let geom = scenario.geometry()?;
    let mut out = OutputDir::create(&args.out)?;
    let mut coeffs = Vec::new();
    let mut manifest = Vec::new();
    let mut errors = Vec::new();
    for &order in orders {
        for n in 0..=2 * order {
            let p = mobf_polynomial(order, n)?;
            let (num, den) = p.c_squared();
            let mut row = vec![order.to_string(), n.to_string(), f(p.c())];
            row.extend(p.coefficients().iter().map(|v| f(*v)));
            row.resize(3 + 2 * crate::mobf::MAX_ORDER + 1, String::new());
            coeffs.push(row);
            manifest.push(json!({
                "N": order,
                "n": n,
                "c_squared": format!("{num}/({den}*pi)"),
                "integer_monomials": p.integer_monomials().iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            }));
        }
        for kind in [BasisKind::Mobf, BasisKind::Raw, BasisKind::RawOrthonormalized, BasisKind::MobfReorthonormalized] {
            let b = sample_basis(order, &geom, kind)?;
            errors.push(vec![order.to_string(), kind.label().to_string(), f(orthonormality_error(b.rows()))]);
            if kind == BasisKind::Mobf {
                let rows = (0..b.rows().nrows()).map(|i| {
                    std::iter::once(i.to_string()).chain(b.rows().row(i).iter().map(|v| f(*v))).collect::<Vec<_>>()
                });
                let mut header = vec!["n".to_string()];
                header.extend(geom.grid().iter().map(|u| f(*u)));
                let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
                out.write_csv(&format!("basis_G{order}.csv"), &hdr, rows)?;
            }
        }
    }
    let mut header = vec!["N".to_string(), "n".into(), "c".into()];
    header.extend((0..=2 * crate::mobf::MAX_ORDER).map(|k| format!("p{k}")));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("coefficients.csv", &hdr, coeffs)?;
    out.write_csv("orthonormality.csv", &["N", "kind", "epsilon"], errors)?;
    out.write_json("coefficients.json", &manifest)?;
    out.finish("basis", &json!({ "orders": orders, "K": geom.samples(), "R": geom.window() }))
}

/// Monte Carlo and analytic ROC curves.
pub fn simulate(args: &CommonArgs) -> Result<PathBuf> {
    let scenario = args.required_scenario("simulate")?;
    let cfg = scenario.experiment_config(args.seed, args.trials)?;
    let result = run_roc_experiment(&cfg)?;
    let mut out = OutputDir::create(&args.out)?;
    let mut summary = Vec::new();
    for c in &result.curves {
        let name = format!("roc_M{}_{}_snr{}.csv", c.receiver.order, c.receiver.kind.label(), f(c.snr_db));
        let rows = c.analytic.points.iter().zip(&c.empirical).map(|(a, e)| {
            vec![f(a.pfa), f(a.pd), f(e.pfa), f(e.pd)]
        });
        out.write_csv(&name, &["pfa", "pd_analytic", "pfa_empirical", "pd_empirical"], rows)?;
        summary.push(vec![
            c.receiver.order.to_string(),
            c.receiver.kind.label().to_string(),
            f(c.snr_db),
            c.nu.to_string(),
            f(c.lambda),
            f(c.analytic.auc),
            f(c.auc_empirical),
        ]);
    }
    out.write_csv("summary.csv", &["order", "basis", "snr_db", "nu", "lambda", "auc_analytic", "auc_empirical"], summary)?;
    out.finish(
        "simulate",
        &json!({ "scenario": scenario, "seed": cfg.seed, "trials": cfg.trials, "pfa_grid": cfg.pfa_grid }),
    )
}

/// Reads a `d x K` observation matrix (no header).
pub fn read_observation(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), message };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(format!("row {}: {s:?}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let k = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(parse_err("observation must be a non-empty rectangular matrix".into()));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), k, rows.into_iter().flatten()))
}

/// Energy statistic and decision for each observation file.
pub fn detect(args: &CommonArgs, observations: &[PathBuf]) -> Result<PathBuf> {
    if observations.is_empty() {
        return Err(Error::Config("`detect` needs at least one --observation file".into()));
    }
    let scenario = args.scenario()?;
    let geom = scenario.geometry()?;
    let noise = scenario.noise_model(geom.samples())?;
    let factor = scenario.factorization()?;
    let rx_cfg = scenario.receiver();
    let receivers = scenario
        .receiver_specs()?
        .into_iter()
        .map(|s| WhitenedReceiver::new(&sample_basis(s.order, &geom, s.kind)?, &noise, geom.sensor_dim(), factor))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for path in observations {
        let x = read_observation(path)?;
        for rx in &receivers {
            let stat = rx.statistic(&x)?;
            let theta = match rx_cfg.threshold {
                Some(t) => t,
                None => threshold_for_pfa(rx.dof(), rx_cfg.pfa)?,
            };
            let decision = match decide(stat, theta) {
                Hypothesis::H0 => "H0",
                Hypothesis::H1 => "H1",
            };
            rows.push(vec![
                path.display().to_string(),
                rx.order().to_string(),
                rx.kind().label().to_string(),
                f(stat),
                f(theta),
                decision.to_string(),
            ]);
        }
    }
    let mut out = OutputDir::create(&args.out)?;
    out.write_csv("detections.csv", &["observation", "order", "basis", "statistic", "threshold", "decision"], rows)?;
    out.finish("detect", &json!({ "scenario": scenario, "observations": observations }))
}

/// Analytic ROC curves for the configured signal, receivers and SNRs.
pub fn roc(args: &CommonArgs) -> Result<PathBuf> {
    let scenario = args.required_scenario("roc")?;
    let cfg = scenario.experiment_config(args.seed, args.trials)?;
    let noise_power = crate::harness::experiment::noise_power(&cfg.noise);
    let geom = cfg.signal.geometry().clone();
    let d = geom.sensor_dim();
    let mut out = OutputDir::create(&args.out)?;
    let mut summary = Vec::new();
    for spec in &cfg.receivers {
        let rx = WhitenedReceiver::new(&sample_basis(spec.order, &geom, spec.kind)?, &cfg.noise, d, cfg.factorization)?;
        for &snr in &cfg.snr_db {
            let s = scale_to_snr(&cfg.signal, snr, noise_power)?;
            let lambda = rx.statistic(s.values())?;
            let curve = roc_for(rx.dof(), lambda, &cfg.pfa_grid)?;
            let rows = curve.points.iter().map(|p| vec![f(p.pfa), f(p.pd), f(p.theta)]);
            out.write_csv(&format!("roc_M{}_{}_snr{}.csv", spec.order, spec.kind.label(), f(snr)), &["pfa", "pd", "theta"], rows)?;
            summary.push(vec![spec.order.to_string(), spec.kind.label().into(), f(snr), rx.dof().to_string(), f(lambda), f(curve.auc)]);
        }
    }
    out.write_csv("summary.csv", &["order", "basis", "snr_db", "nu", "lambda", "auc"], summary)?;
    out.finish("roc", &json!({ "scenario": scenario, "pfa_grid": cfg.pfa_grid }))
}

/// Parameters of the `critical-alpha` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalAlphaArgs {
    pub order: usize,
    pub pfa: f64,
    pub snr_min: f64,
    pub snr_max: f64,
    pub snr_step: f64,
}

/// `alpha_c` against SNR, with the criterion counterparts.
pub fn critical_alpha_sweep(args: &CommonArgs, p: &CriticalAlphaArgs) -> Result<PathBuf> {
    if !(p.snr_step > 0.0) || p.snr_max < p.snr_min {
        return Err(Error::Config("SNR sweep needs snr_min <= snr_max and a positive step".into()));
    }
    let geom = args.scenario()?.geometry()?;
    let (d, k) = (geom.sensor_dim(), geom.samples());
    let aic = CriterionSpec::aic(d, p.order);
    let bic = CriterionSpec::bic(d, k, p.order);
    let steps = ((p.snr_max - p.snr_min) / p.snr_step + 1e-9).floor() as usize;
    let mut rows = Vec::new();
    for i in 0..=steps {
        let snr = p.snr_min + i as f64 * p.snr_step;
        let lambda = (d * k) as f64 * 10f64.powf(snr / 10.0);
        let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
        rows.push(vec![
            f(snr),
            f(lambda),
            f(critical_alpha(p.order, d, p.pfa, lambda)?),
            opt(criterion_critical_alpha(p.order, d, lambda, &aic)?),
            opt(criterion_critical_alpha(p.order, d, lambda, &bic)?),
            f(average_critical_alpha(p.order, d, lambda, &aic)?),
            f(average_critical_alpha(p.order, d, lambda, &bic)?),
        ]);
    }
    let mut out = OutputDir::create(&args.out)?;
    out.write_csv(
        "critical_alpha.csv",
        &["snr_db", "lambda", "alpha_c", "alpha_c_aic", "alpha_c_bic", "alpha_bar_aic", "alpha_bar_bic"],
        rows,
    )?;
    out.write_json("critical_alpha.json", &json!({ "N": p.order, "pfa": p.pfa, "d": d, "K": k }))?;
    out.finish("critical-alpha", &json!({ "N": p.order, "pfa": p.pfa, "snr_min": p.snr_min, "snr_max": p.snr_max, "snr_step": p.snr_step }))
}

/// Optimal receiver order over the `(alpha', alpha - alpha')` plane.
pub fn zones(args: &CommonArgs, pfa: f64, snr_db: f64, resolution: usize) -> Result<PathBuf> {
    let geom = args.scenario()?.geometry()?;
    let (d, k) = (geom.sensor_dim(), geom.samples());
    let lambda3 = (d * k) as f64 * 10f64.powf(snr_db / 10.0);
    let map = optimal_order_map(&ZoneParams { pfa, lambda3, d, resolution })?;
    let mut header = vec!["alpha_prime".to_string()];
    header.extend(map.axis.iter().map(|v| f(*v)));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = map.axis.iter().zip(&map.cells).map(|(a, row)| {
        std::iter::once(f(*a)).chain(row.iter().map(|c| c.map(|o| o.to_string()).unwrap_or_default())).collect::<Vec<_>>()
    });
    let mut out = OutputDir::create(&args.out)?;
    out.write_csv("zones.csv", &hdr, rows)?;
    let params = json!({ "pfa": pfa, "snr_db": snr_db, "lambda3": lambda3, "d": d, "resolution": resolution,
        "area": { "1": map.area(1), "2": map.area(2), "3": map.area(3) } });
    out.write_json("zones.json", &params)?;
    out.finish("zones", &params)
}

/// Order selection, either on observation files or by simulation.
pub fn select(args: &CommonArgs, observations: &[PathBuf], variance: f64) -> Result<PathBuf> {
    let mut out = OutputDir::create(&args.out)?;
    if !observations.is_empty() {
        let scenario = args.scenario()?;
        let geom = scenario.geometry()?;
        let criteria = scenario.criteria()?;
        let max = criteria.iter().map(|c| c.max_order).max().unwrap_or(1);
        let kind = scenario.receiver_specs()?[0].kind;
        let noise = crate::detector::NoiseModel::white(variance)?;
        let receivers = (1..=max)
            .map(|m| WhitenedReceiver::new(&sample_basis(m, &geom, kind)?, &noise, geom.sensor_dim(), Default::default()))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for path in observations {
            let x = read_observation(path)?;
            let energies = receivers.iter().map(|r| r.statistic(&x)).collect::<Result<Vec<_>>>()?;
            for c in &criteria {
                rows.push(vec![path.display().to_string(), c.name.clone(), select_from_energies(&energies, c, 1.0).to_string()]);
            }
        }
        out.write_csv("selections.csv", &["observation", "criterion", "order"], rows)?;
        return out.finish("select", &json!({ "scenario": scenario, "variance": variance, "observations": observations }));
    }
    let scenario = args.required_scenario("select")?;
    let cfg = scenario.selection_config(args.seed, args.trials)?;
    let outcome = run_selection_experiment(&cfg)?;
    let mut header = vec!["trial".to_string()];
    for c in &outcome.criteria {
        header.push(format!("{c}_H0"));
        header.push(format!("{c}_H1"));
    }
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = outcome.selected.iter().enumerate().map(|(t, row)| {
        std::iter::once(t.to_string()).chain(row.iter().map(|o| o.to_string())).collect::<Vec<_>>()
    });
    out.write_csv("selections.csv", &hdr, rows)?;
    let hist = outcome.histogram.iter().map(|h| {
        vec![h.order.to_string(), format!("H{}", h.hypothesis), h.criterion.clone(), h.count.to_string(), f(h.frequency)]
    });
    out.write_csv("histogram.csv", &["order", "hypothesis", "criterion", "count", "frequency"], hist)?;
    out.finish("select", &json!({ "scenario": scenario, "seed": cfg.seed, "trials": cfg.trials, "snr_db": cfg.snr_db }))
}
