//! Experiment runners behind `fracdiff run`.

use std::path::Path;

use anyhow::{Context, Result};
use fracdiff::dispersion::{
    cumulant_rates, find_dispersion, CharPolynomial, ClosedForm, DispersionRelation, SymbolTerm,
};
use fracdiff::evolution::perturbative::DEFAULT_EPSILON_GUARD;
use fracdiff::evolution::{
    caputo_exact_spectral, caputo_l1_evolve, exact_variance, heat_dispersion, perturbative_evolve,
    perturbative_variance, spectral_propagate, EvolutionResult,
};
use fracdiff::fractional_ops::{caputo_derivative, convergence_study, rl_derivative, FracOrder, Scheme, TimeSignal};
use fracdiff::grid::{make_gaussian, DensityField, SpatialGrid};
use fracdiff::io;
use fracdiff::moments::{
    cumulant_series, cumulants, fit_power_law, polynomial_degree_check, variance_series, MomentSeries, MomentSpec,
};
use num_complex::Complex;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, Format, RunConfig, SpectralDispersion};

/// Artifacts written by one run, for the manifest.
pub struct Outcome {
    pub artifacts: Vec<String>,
    pub summary: Value,
}

struct Writer<'a> {
    dir: &'a Path,
    formats: &'a [Format],
    artifacts: Vec<String>,
}

impl Writer<'_> {
    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn json<S: Serialize + ?Sized>(&mut self, name: &str, value: &S) -> Result<()> {
        io::write_json(&self.dir.join(name), value)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn series(&mut self, stem: &str, series: &MomentSeries<f64>) -> Result<()> {
        if self.wants(Format::Csv) {
            let name = format!("{stem}.csv");
            io::write_series_csv(&self.dir.join(&name), series)?;
            self.artifacts.push(name);
        }
        if self.wants(Format::Json) {
            let value = json!({
                "kind": series.kind,
                "t": series.times,
                "value_re": series.values.iter().map(|v| v.re).collect::<Vec<_>>(),
                "value_im": series.values.iter().map(|v| v.im).collect::<Vec<_>>(),
                "divergent": series.divergent,
            });
            self.json(&format!("{stem}.json"), &value)?;
        }
        Ok(())
    }

    fn signal(&mut self, stem: &str, sig: &TimeSignal<f64>) -> Result<()> {
        if self.wants(Format::Csv) {
            let name = format!("{stem}.csv");
            io::write_time_signal_csv(&self.dir.join(&name), sig)?;
            self.artifacts.push(name);
        }
        if self.wants(Format::Json) {
            let value = json!({
                "t": sig.times(),
                "re": sig.samples().iter().map(|v| v.re).collect::<Vec<_>>(),
                "im": sig.samples().iter().map(|v| v.im).collect::<Vec<_>>(),
            });
            self.json(&format!("{stem}.json"), &value)?;
        }
        Ok(())
    }
}

pub fn run(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut w = Writer {
        dir,
        formats: &cfg.output.formats,
        artifacts: Vec::new(),
    };
    let summary = match cfg.experiment {
        Experiment::DerivativeTest => derivative_test(cfg, &mut w)?,
        Experiment::DispersionScan => dispersion_scan(cfg, &mut w)?,
        _ => evolution_experiment(cfg, &mut w)?,
    };
    Ok(Outcome {
        artifacts: w.artifacts,
        summary,
    })
}

fn initial(cfg: &RunConfig, grid: &SpatialGrid<f64>) -> Result<DensityField<f64>> {
    Ok(make_gaussian(grid, &cfg.mean(), cfg.initial.sigma)?)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn spectral_relation(cfg: &RunConfig) -> Result<DispersionRelation<f64>> {
    let ev = &cfg.evolution;
    Ok(match cfg.experiment {
        Experiment::Weyl => DispersionRelation::Closed(ClosedForm::WeylFractional {
            order: FracOrder::new(ev.beta.unwrap_or(1.0))?,
        }),
        _ => match &ev.dispersion {
            None | Some(SpectralDispersion::Heat) => heat_dispersion(),
            Some(SpectralDispersion::DriftDiffusion {
                drift,
                diffusivity,
                cubic,
            }) => DispersionRelation::Closed(ClosedForm::DriftDiffusion {
                drift: drift.clone(),
                diffusivity: *diffusivity,
                cubic: *cubic,
            }),
            Some(SpectralDispersion::Power { coefficient, exponent }) => {
                DispersionRelation::Closed(ClosedForm::Power {
                    coefficient: *coefficient,
                    exponent: *exponent,
                })
            }
        },
    })
}

fn evolve(cfg: &RunConfig, psi0: &DensityField<f64>) -> Result<EvolutionResult<f64>> {
    let ev = &cfg.evolution;
    let exact_times = || linspace(ev.t_min, ev.t_max, ev.snapshots);
    match cfg.experiment {
        Experiment::Spectral | Experiment::Weyl => {
            let e = spectral_relation(cfg)?;
            spectral_propagate(psi0, &e, &exact_times()).context("evolution: spectral_propagate")
        }
        Experiment::CaputoExact => {
            let order = FracOrder::new(ev.beta.unwrap_or(1.0))?;
            caputo_exact_spectral(psi0, &order, &exact_times()).context("evolution: caputo_exact_spectral")
        }
        Experiment::CaputoL1 => {
            let order = FracOrder::memory_order(ev.beta.unwrap_or(0.5))?;
            let (dt, steps) = cfg.stepping()?;
            caputo_l1_evolve(psi0, &order, dt, steps, ev.snapshot_stride).context("evolution: caputo_l1_evolve")
        }
        Experiment::Perturbative => {
            let (dt, steps) = cfg.stepping()?;
            let eps = ev.epsilon.unwrap_or(0.0);
            perturbative_evolve(psi0, eps, dt, steps, ev.snapshot_stride, DEFAULT_EPSILON_GUARD)
                .map(|r| r.total)
                .context("evolution: perturbative_evolve")
        }
        Experiment::DerivativeTest | Experiment::DispersionScan => unreachable!("not an evolution experiment"),
    }
}

/// Closed-form variance laws the run can be compared against.
fn theory(cfg: &RunConfig, times: &[f64], var0: f64) -> Result<Option<Value>> {
    let dim = cfg.grid.dim;
    let ev = &cfg.evolution;
    let (beta, eps) = match cfg.experiment {
        Experiment::CaputoExact | Experiment::CaputoL1 => (ev.beta.unwrap_or(1.0), None),
        Experiment::Perturbative => {
            let eps = ev.epsilon.unwrap_or(0.0);
            (1.0 - eps, Some(eps))
        }
        _ => return Ok(None),
    };
    let exact = times
        .iter()
        .map(|&t| exact_variance(t, dim, beta, var0))
        .collect::<fracdiff::Result<Vec<_>>>()?;
    let mut v = json!({ "t": times, "exact_variance": exact, "beta": beta });
    if let Some(eps) = eps {
        let pert = times
            .iter()
            .map(|&t| perturbative_variance(t, dim, eps, var0))
            .collect::<fracdiff::Result<Vec<_>>>()?;
        v["perturbative_variance"] = json!(pert);
    }
    Ok(Some(v))
}

fn evolution_experiment(cfg: &RunConfig, w: &mut Writer<'_>) -> Result<Value> {
    let grid = cfg.grid()?;
    let psi0 = initial(cfg, &grid)?;
    let run = evolve(cfg, &psi0)?;
    let companion = if cfg.analysis.box_check {
        let doubled = grid.doubled()?;
        Some(evolve(cfg, &initial(cfg, &doubled)?)?)
    } else {
        None
    };
    let var0 = cumulants(&psi0, 2).context("moments: cumulants of the initial density")?.variance.re;
    let var = variance_series(&run, companion.as_ref()).context("moments: variance_series")?;
    w.series("variance", &var)?;

    let window = cfg.analysis.fit_window.map(|[a, b]| (a, b));
    let fit = match fit_power_law(&var, var0, window) {
        Ok(fit) => {
            w.json("fit.json", &fit)?;
            json!(fit)
        }
        Err(e) => json!({ "error": e.to_string() }),
    };

    let mut moments = Vec::new();
    for alpha in &cfg.analysis.moment_orders {
        let spec = MomentSpec::new(alpha.clone())?;
        let series = cumulant_series(&run, &spec, companion.as_ref()).context("moments: cumulant_series")?;
        let stem = format!(
            "cumulant_{}",
            alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("_")
        );
        w.series(&stem, &series)?;
        let degree = polynomial_degree_check(&series, 1)
            .map(|d| json!(d))
            .unwrap_or_else(|e| json!({ "error": e.to_string() }));
        moments.push(json!({ "alpha": alpha, "series": stem, "linear_in_time": degree }));
    }

    if let Some(t) = theory(cfg, run.times(), var0)? {
        w.json("variance_theory.json", &t)?;
    }
    if cfg.output.snapshots {
        let sub = w.dir.join("run");
        let manifest = io::write_evolution(&sub, &run)?;
        w.artifacts.extend(manifest.snapshots.iter().map(|s| format!("run/{s}")));
        w.artifacts.push("run/manifest.json".to_string());
    }
    let divergent = var.divergent.iter().filter(|d| **d).count();
    Ok(json!({
        "provenance": run.provenance(),
        "snapshots": run.len(),
        "variance_initial": var0,
        "variance_final": var.values.last().map(|v| v.re),
        "divergent_points": divergent,
        "fit": fit,
        "moments": moments,
    }))
}

fn derivative_test(cfg: &RunConfig, w: &mut Writer<'_>) -> Result<Value> {
    let ev = &cfg.evolution;
    let order = FracOrder::memory_order(ev.beta.unwrap_or(0.5))?;
    let (dt, steps) = cfg.stepping()?;
    let sig = TimeSignal::sample_real(0.0, dt, steps + 1, |t| t * t)?;
    let caputo = caputo_derivative(&sig, &order, 0.0).context("fractional_ops: caputo_derivative")?;
    let rl = rl_derivative(&sig, &order, 0.0).context("fractional_ops: rl_derivative")?;
    w.signal("signal", &sig)?;
    w.signal("caputo", &caputo)?;
    w.signal("riemann_liouville", &rl)?;
    let step_sizes = [dt, dt / 2.0, dt / 4.0];
    let l1 = convergence_study(Scheme::L1, &order, ev.t_max, &step_sizes).context("fractional_ops: L1 convergence")?;
    let gl = convergence_study(Scheme::GrunwaldLetnikov, &order, ev.t_max, &step_sizes)
        .context("fractional_ops: Grünwald-Letnikov convergence")?;
    let report = json!({ "l1": l1, "grunwald_letnikov": gl });
    w.json("convergence.json", &report)?;
    Ok(json!({
        "beta": order.beta(),
        "l1_order": l1.order,
        "l1_expected": 2.0 - order.beta(),
        "grunwald_letnikov_order": gl.order,
    }))
}

fn dispersion_scan(cfg: &RunConfig, w: &mut Writer<'_>) -> Result<Value> {
    let d = cfg.dispersion.as_ref().context("dispersion section missing")?;
    let terms = d
        .terms
        .iter()
        .map(|t| SymbolTerm {
            coefficient: Complex::new(t.coefficient[0], t.coefficient[1]),
            s_power: t.s_power,
            k_powers: t.k_powers.clone(),
        })
        .collect();
    let poly = CharPolynomial::from_terms(terms)?;
    let dim = d.terms[0].k_powers.len();
    let axis = linspace(d.k_min, d.k_max, d.points);
    let k_set: Vec<Vec<f64>> = if dim == 1 {
        axis.iter().map(|&k| vec![k]).collect()
    } else {
        axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect()
    };
    let relation = find_dispersion(&poly, &k_set).context("dispersion: find_dispersion")?;
    let DispersionRelation::PolyRoot(ref roots) = relation else {
        unreachable!("find_dispersion returns a root-tracked relation")
    };
    if w.wants(Format::Csv) {
        io::write_dispersion_csv(&w.dir.join("dispersion.csv"), &roots.samples)?;
        w.artifacts.push("dispersion.csv".to_string());
    }
    if w.wants(Format::Json) {
        let rows: Vec<Value> = roots
            .samples
            .iter()
            .map(|s| {
                json!({
                    "k": s.k,
                    "re_e": s.e.map(|e| e.re),
                    "im_e": s.e.map(|e| e.im),
                    "status": s.status,
                    "on_imaginary_axis": s.on_imaginary_axis,
                })
            })
            .collect();
        w.json("dispersion.json", &rows)?;
    }
    let rates = cumulant_rates(&relation, dim, d.max_cumulant_order, d.rate_step)
        .context("dispersion: cumulant_rates near k = 0")?;
    let rates_json: Vec<Value> = rates
        .iter()
        .map(|r| {
            json!({
                "alpha": r.alpha,
                "kind": format!("{:?}", r.kind).to_lowercase(),
                "rate_re": r.rate.map(|c| c.re),
                "rate_im": r.rate.map(|c| c.im),
            })
        })
        .collect();
    w.json("cumulant_rates.json", &rates_json)?;
    let mut statuses = std::collections::BTreeMap::<String, usize>::new();
    for s in &roots.samples {
        *statuses.entry(s.status.to_string()).or_default() += 1;
    }
    Ok(json!({
        "samples": roots.samples.len(),
        "status_counts": statuses,
        "max_scaled_residual": roots.max_scaled_residual()?,
    }))
}
