use std::cell::Cell;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};
use telemeander::kac::{kac_sweep, KacScale, SweepConfig, DECREASE_FACTOR};
use telemeander::meander::{
    cond_meander_cdf, cond_meander_law, meander_atom, meander_cdf, meander_endpoint_law, positivity_prob_given_n,
};
use telemeander::quad;
use telemeander::sim::{fold_paths, ks_statistic, KsResult, McConfig, Moments, SimMode};
use telemeander::suites::{run_suite, Suite, SuiteOptions};
use telemeander::telegraph::{cond_density_given_n, min_law, nonneg_min_prob, telegraph_law};
use telemeander::{InitialVelocity, MixedLaw, ModelParams, Velocity};

use crate::output::{num, sink, write_json};
use crate::{Failure, Format, KacArgs, LawArgs, Mode, SimulateArgs, VerifyArgs, What, V0};

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

fn initial(v0: Option<V0>, default: InitialVelocity) -> InitialVelocity {
    match v0 {
        None => default,
        Some(V0::Plus) => Velocity::Plus.into(),
        Some(V0::Minus) => Velocity::Minus.into(),
        Some(V0::Symmetric) => InitialVelocity::Symmetric,
    }
}

fn fixed(v0: Option<V0>, what: &str) -> Result<Velocity, Failure> {
    match initial(v0, Velocity::Plus.into()) {
        InitialVelocity::Fixed(v) => Ok(v),
        InitialVelocity::Symmetric => Err(input(format!("{what} needs --v0 plus or minus"))),
    }
}

/// Parses `lo:hi:count`.
fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || input(format!("grid must look like lo:hi:count, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn build_law(params: &ModelParams, a: &LawArgs) -> Result<MixedLaw, Failure> {
    Ok(match a.what {
        What::Telegraph => telegraph_law(params, initial(a.v0, InitialVelocity::Symmetric)),
        What::Meander => meander_endpoint_law(params),
        What::Cond => {
            let n = a.n.ok_or_else(|| input("--what cond needs --n"))?;
            cond_meander_law(params, n)
        }
        What::Min => min_law(params, fixed(a.v0, "--what min")?),
    })
}

#[derive(Serialize)]
struct LawRow {
    x: f64,
    density: f64,
    cdf: f64,
}

pub fn law(a: &LawArgs) -> Result<(), Failure> {
    let params = a.common.params()?;
    let law = build_law(&params, a)?;
    let (lo, hi) = law.support();
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => parse_grid(&format!("{lo}:{hi}:101"))?,
    };
    let rows: Vec<LawRow> = grid
        .iter()
        .map(|&x| LawRow {
            x,
            density: law.density(x),
            cdf: law.cdf(x),
        })
        .collect();
    let mut w = sink(a.common.out.as_deref())?;
    match a.common.format {
        Format::Csv => {
            writeln!(w, "x,density,cdf")?;
            for r in &rows {
                writeln!(w, "{},{},{}", num(r.x), num(r.density), num(r.cdf))?;
            }
            for atom in law.atoms() {
                writeln!(w, "#atom,{},{}", num(atom.location), num(atom.mass))?;
            }
        }
        Format::Json => write_json(
            &mut *w,
            &json!({
                "params": params,
                "rows": rows,
                "atoms": law.atoms().iter().map(|a| json!({"x": a.location, "mass": a.mass})).collect::<Vec<_>>(),
            }),
        )?,
    }
    w.flush()?;
    Ok(())
}

#[derive(Default)]
struct Tally {
    moments: Moments,
    atoms: u64,
    continuous: Vec<f64>,
    dump: Vec<(f64, usize, f64)>,
}

#[derive(Serialize)]
struct Summary {
    mode: String,
    params: ModelParams,
    seed: u64,
    attempts: u64,
    accepted: u64,
    acceptance_rate: f64,
    acceptance_std_error: f64,
    expected_acceptance_rate: f64,
    atom_frequency: f64,
    expected_atom_frequency: f64,
    endpoint_mean: f64,
    endpoint_mean_std_error: f64,
    endpoint_variance: f64,
    ks: Option<KsResult>,
}

/// CDF evaluated at increasing points by accumulating quadrature between them.
fn running_cdf<F: Fn(f64) -> f64>(density: F, from: f64, mass: f64) -> impl Fn(f64) -> f64 {
    let state = Cell::new((from, 0.0));
    move |x| {
        let (x0, acc) = state.get();
        let acc = acc + quad::integrate(&density, x0, x, 1e-12);
        state.set((x, acc));
        acc / mass
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let params = a.common.params()?;
    let ct = params.ct();
    let (mode, label) = match a.mode {
        Mode::Free => (SimMode::Free(initial(a.v0, InitialVelocity::Symmetric)), "free"),
        Mode::Meander => (SimMode::Meander, "meander"),
        Mode::GivenN => {
            let n = a.n.ok_or_else(|| input("--mode given-n needs --n"))?;
            let v0 = fixed(a.v0, "--mode given-n")?;
            (
                SimMode::GivenN {
                    n,
                    v0,
                    conditioned: a.conditioned,
                },
                "given-n",
            )
        }
    };
    let mut cfg = McConfig::new(a.paths, a.common.seed).workers(a.common.workers());
    cfg.min_accepted = a.min_accepted;
    let keep_dump = a.dump.is_some();
    let (mut tally, stats) = fold_paths(
        &params,
        &mode,
        &cfg,
        Tally::default,
        |acc, path| {
            acc.moments.push(path.endpoint);
            if path.n_switches() == 0 {
                acc.atoms += 1;
            } else {
                acc.continuous.push(path.endpoint);
            }
            if keep_dump {
                acc.dump.push((path.endpoint, path.n_switches(), path.minimum));
            }
        },
        |x, y| {
            x.moments.merge(y.moments);
            x.atoms += y.atoms;
            x.continuous.extend(y.continuous);
            x.dump.extend(y.dump);
        },
    )?;

    let (expected_rate, expected_atom) = match mode {
        SimMode::Free(_) => (1.0, (-params.lt()).exp()),
        SimMode::Meander => (nonneg_min_prob(&params), meander_atom(&params)),
        SimMode::GivenN { n, conditioned, .. } => (
            if conditioned { positivity_prob_given_n(n) } else { 1.0 },
            if n == 0 { 1.0 } else { 0.0 },
        ),
    };
    tally.continuous.sort_by(|x, y| x.total_cmp(y));
    let sample = &tally.continuous;
    let ks = if sample.is_empty() {
        None
    } else {
        Some(match mode {
            SimMode::Free(init) => {
                let law = telegraph_law(&params, init);
                let mass = law.continuous_mass();
                ks_statistic(sample, running_cdf(|x| law.density(x), -ct, mass))?
            }
            SimMode::Meander => {
                let atom = meander_atom(&params);
                ks_statistic(sample, |x| meander_cdf(&params, x) / (1.0 - atom))?
            }
            SimMode::GivenN { n, conditioned: true, .. } => ks_statistic(sample, |x| cond_meander_cdf(&params, n, x))?,
            SimMode::GivenN { n, v0, .. } => ks_statistic(
                sample,
                running_cdf(|x| cond_density_given_n(&params, v0, n, x).value(), -ct, 1.0),
            )?,
        })
    };
    let accepted = stats.accepted as f64;
    let summary = Summary {
        mode: label.to_string(),
        params,
        seed: cfg.seed,
        attempts: stats.attempts,
        accepted: stats.accepted,
        acceptance_rate: stats.acceptance_rate(),
        acceptance_std_error: stats.acceptance_std_error(),
        expected_acceptance_rate: expected_rate,
        atom_frequency: tally.atoms as f64 / accepted,
        expected_atom_frequency: expected_atom,
        endpoint_mean: tally.moments.mean,
        endpoint_mean_std_error: tally.moments.std_error(),
        endpoint_variance: tally.moments.variance(),
        ks,
    };

    if let Some(path) = &a.dump {
        let mut d = sink(Some(path))?;
        writeln!(d, "endpoint,n_switches,minimum")?;
        for (x, n, m) in &tally.dump {
            writeln!(d, "{},{n},{}", num(*x), num(*m))?;
        }
        d.flush()?;
    }
    let mut w = sink(a.common.out.as_deref())?;
    match a.common.format {
        Format::Json => write_json(&mut *w, &summary)?,
        Format::Csv => {
            writeln!(w, "field,value")?;
            let value = serde_json::to_value(&summary).map_err(|e| Failure::Io(e.into()))?;
            write_flat(&mut *w, "", &value)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_flat(w: &mut dyn Write, prefix: &str, v: &Value) -> Result<(), Failure> {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                write_flat(w, &key, v)?;
            }
        }
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_u64() && !n.is_i64() => writeln!(w, "{prefix},{}", num(x))?,
            _ => writeln!(w, "{prefix},{n}")?,
        },
        Value::Null => writeln!(w, "{prefix},")?,
        Value::String(s) => writeln!(w, "{prefix},{s}")?,
        other => writeln!(w, "{prefix},{other}")?,
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let suite: Suite = a.suite.parse()?;
    if a.mc_paths == 0 {
        return Err(input("--mc-paths must be >= 1"));
    }
    let opts = SuiteOptions {
        seed: a.common.seed,
        workers: a.common.workers(),
        mc_paths: a.mc_paths,
        ..SuiteOptions::default()
    };
    let reports = run_suite(suite, &opts)?;
    for r in &reports {
        eprintln!("{}", r.line());
    }
    let mut w = sink(a.common.out.as_deref())?;
    match a.common.format {
        Format::Json => write_json(&mut *w, &reports)?,
        Format::Csv => {
            writeln!(w, "check,status,metric,tolerance,wall_time_s")?;
            for r in &reports {
                let status = if r.passed() { "pass" } else { "fail" };
                writeln!(
                    w,
                    "\"{}\",{status},{},{},{}",
                    r.check.replace('"', "\"\""),
                    num(r.metric),
                    num(r.tolerance),
                    num(r.wall_time_s)
                )?;
            }
        }
    }
    w.flush()?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.check.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{} check(s) failed: {}", failed.len(), failed.join("; "))))
    }
}

pub fn kac(a: &KacArgs) -> Result<(), Failure> {
    if a.alphas.is_empty() {
        return Err(input("--alphas is empty"));
    }
    for &alpha in &a.alphas {
        KacScale::new(alpha)?;
    }
    let t = a.common.t;
    if !(t > 0.0) || !t.is_finite() {
        return Err(input(format!("t must be finite and > 0, got {t}")));
    }
    let base = SweepConfig::default();
    // Brownian scaling of the default queries to the horizon t
    let config = SweepConfig {
        t,
        x_max: base.x_max * t.sqrt(),
        fdd_times: base.fdd_times.iter().map(|s| s * t).collect(),
        fdd_points: base.fdd_points.iter().map(|x| x * t.sqrt()).collect(),
        ..base
    };
    let sweep = kac_sweep(&a.alphas, &config)?;
    let monotone = sweep.monotone();
    let trends = sweep.trends().map(|ts| {
        ts.iter()
            .map(|(name, strict, ratio)| (name.to_string(), json!({"strictly_decreasing": strict, "last_over_first": ratio})))
            .collect::<serde_json::Map<_, _>>()
    });
    let trailer = json!({
        "monotone": monotone,
        "trends": trends,
        "decrease_factor": DECREASE_FACTOR,
        "note": "the decrease factor is a chosen threshold, not part of the limit theorem",
    });
    let mut w = sink(a.common.out.as_deref())?;
    match a.common.format {
        Format::Csv => {
            writeln!(w, "alpha,endpoint_gap,fdd_gap,moment_gap_p1,moment_gap_p2")?;
            for r in &sweep.rows {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    num(r.alpha),
                    num(r.endpoint_gap),
                    num(r.fdd_gap),
                    num(r.moment_gap_p1),
                    num(r.moment_gap_p2)
                )?;
            }
            writeln!(w, "# {trailer}")?;
        }
        Format::Json => write_json(&mut *w, &json!({"rows": sweep.rows, "summary": trailer}))?,
    }
    w.flush()?;
    match monotone {
        Some(false) => Err(Failure::Verification("gaps are not strictly decreasing along the sweep".into())),
        _ => Ok(()),
    }
}
