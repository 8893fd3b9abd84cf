use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};
use std::path::Path;

use qwalk_core::dispersion::law_dispersion;
use qwalk_core::{
    entanglement_entropy, evolve, exact_dispersion, k_grid, max_group_speed, law_group_velocity,
    probability_distribution, recurrence_residual, reduced_coin_density, spread_bound, CoinAngle, CoinSchedule,
    Distribution, InitialCoinState, PositionProfile, RecurrenceFamily, SpeedKind, Walk, WalkerState,
};
use rayon::prelude::*;

use crate::config::{AnalysisSpec, ResolvedRun, ScheduleKind, SweepConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Allowed drift of emitted probability columns from 1.
pub const NORM_TOL: f64 = 1e-12;

/// Fixed angle pairs for figures whose angles are not given in closed form.
pub const PRESET_PAIRS: [(f64, f64); 2] = [(FRAC_PI_4, FRAC_PI_3), (FRAC_PI_3, PI / 12.0)];

pub const SUMMARY_HEADER: [&str; 7] = ["step", "total", "mean", "sigma", "quantile_radius", "support_radius", "entropy"];

fn summary_cells(state: &WalkerState, d: &Distribution, a: &AnalysisSpec) -> Vec<Cell> {
    let s = d.summary(a.mass, a.eps);
    let entropy = if a.entropy {
        entanglement_entropy(&reduced_coin_density(state))
    } else {
        f64::NAN
    };
    vec![
        Cell::U(d.step()),
        Cell::F(d.total()),
        Cell::F(s.mean),
        Cell::F(s.sigma),
        Cell::U(s.quantile_radius),
        Cell::U(s.support_radius),
        Cell::F(entropy),
    ]
}

fn check_norm(total: f64, what: &str) -> Result<(), CliError> {
    if (total - 1.0).abs() > NORM_TOL {
        return Err(CliError::Invariant(format!(
            "{what}: total probability {total:.17} drifted from 1 by more than {NORM_TOL:e}"
        )));
    }
    Ok(())
}

/// Distribution rows per recorded step over the reachable window, plus one
/// summary row per recorded step.
pub fn walk(run: &ResolvedRun) -> Result<Vec<Table>, CliError> {
    let tr = evolve(run.coin, run.profile, &run.schedule, run.steps, &run.record_at)?;
    let mut header = vec!["step", "x", "p"];
    if run.analysis.amplitudes {
        header.extend(["down_re", "down_im", "up_re", "up_im"]);
    }
    let mut dist = Table::new("walk", &header);
    let mut summary = Table::new("walk_summary", &SUMMARY_HEADER);
    for st in tr.snapshots() {
        let d = probability_distribution(st);
        let mut emitted = 0.0;
        for x in st.window().shrink(1).sites() {
            let p = d.at(x);
            emitted += p;
            let mut row = vec![Cell::U(st.step_count()), Cell::I(x), Cell::F(p)];
            if run.analysis.amplitudes {
                let (dn, up) = (st.down(x), st.up(x));
                row.extend([dn.re, dn.im, up.re, up.im].map(Cell::F));
            }
            dist.push(row);
        }
        check_norm(emitted, &format!("step {}", st.step_count()))?;
        summary.push(summary_cells(st, &d, &run.analysis));
    }
    Ok(vec![dist, summary])
}

pub const SWEEP_HEADER: [&str; 11] = [
    "theta1",
    "theta2",
    "step",
    "total",
    "mean",
    "sigma",
    "quantile_radius",
    "support_radius",
    "entropy",
    "spread_bound",
    "max_group_speed",
];

/// One row per grid point in θ₁-major order; rows land in pre-indexed slots
/// so the output is independent of the worker count.
pub fn sweep(cfg: &SweepConfig, pool: &rayon::ThreadPool) -> Result<Table, CliError> {
    let base = &cfg.base;
    let kind = base.schedule.kind;
    if kind == ScheduleKind::Explicit {
        return Err(CliError::Config("sweeps need a parametric schedule, not an explicit one".into()));
    }
    if kind == ScheduleKind::Homogeneous && cfg.theta2.is_some() {
        return Err(CliError::Config("theta2 grid given for a homogeneous schedule".into()));
    }
    let axis = |grid: &Option<crate::config::Grid>, fixed: Option<crate::config::Angle>, name: &str| match grid {
        Some(g) => g.validate(name).map(|_| g.values()),
        None => fixed
            .map(|a| vec![a.0])
            .ok_or_else(|| CliError::Config(format!("{name}: neither a grid nor a fixed angle was given"))),
    };
    let t1 = axis(&cfg.theta1, base.schedule.theta1, "theta1")?;
    let t2 = if kind == ScheduleKind::Homogeneous {
        vec![f64::NAN]
    } else {
        axis(&cfg.theta2, base.schedule.theta2, "theta2")?
    };
    let points: Vec<(f64, f64)> = t1.iter().flat_map(|&a| t2.iter().map(move |&b| (a, b))).collect();
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|&(a, b)| {
                let mut run_cfg = base.clone();
                run_cfg.schedule = base.schedule.with_angles(a, if b.is_nan() { a } else { b });
                run_cfg.record_at.clear();
                let run = run_cfg.resolve()?;
                let tr = evolve(run.coin, run.profile, &run.schedule, run.steps, &[])?;
                let st = tr.last();
                let d = probability_distribution(st);
                check_norm(d.total(), &format!("grid point ({a}, {b})"))?;
                let (k, x, y) = SpeedKind::for_schedule(&run.schedule).expect("parametric schedule");
                let bound = spread_bound(k, x, y, run.steps)?;
                let speed = max_group_speed(&run.schedule)?.per_step;
                let theta2 = if b.is_nan() { a } else { b };
                let mut row = vec![Cell::F(a), Cell::F(theta2)];
                row.extend(summary_cells(st, &d, &run.analysis));
                row.extend([Cell::F(bound), Cell::F(speed)]);
                Ok(row)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut table = Table::new("sweep", &SWEEP_HEADER);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

fn trace<F: Fn(&WalkerState) -> f64>(schedule: &CoinSchedule, t: u64, f: F) -> Result<Vec<f64>, CliError> {
    let mut walk = Walk::new(InitialCoinState::SYMMETRIC, PositionProfile::point(0), schedule.clone(), t)?;
    let mut out = Vec::with_capacity(t as usize + 1);
    out.push(f(walk.state()));
    for _ in 0..t {
        out.push(f(walk.advance()?));
    }
    Ok(out)
}

fn sigma_of(st: &WalkerState) -> f64 {
    probability_distribution(st).standard_deviation()
}

fn entropy_of(st: &WalkerState) -> f64 {
    entanglement_entropy(&reduced_coin_density(st))
}

fn final_dist(schedule: &CoinSchedule, t: u64) -> Result<Distribution, CliError> {
    let tr = evolve(InitialCoinState::SYMMETRIC, PositionProfile::point(0), schedule, t, &[])?;
    let d = probability_distribution(tr.last());
    check_norm(d.total(), schedule.kind_name())?;
    Ok(d)
}

/// Named curves sampled on a shared axis.
fn columns_table(name: String, axis: &str, xs: &[Cell], cols: &[(String, Vec<f64>)]) -> Table {
    let mut header: Vec<&str> = vec![axis];
    header.extend(cols.iter().map(|(n, _)| n.as_str()));
    let mut t = Table::new(name, &header);
    for (i, x) in xs.iter().enumerate() {
        let mut row = vec![x.clone()];
        row.extend(cols.iter().map(|(_, v)| Cell::F(v[i])));
        t.push(row);
    }
    t
}

fn distributions_table(name: String, t: u64, runs: &[(String, CoinSchedule)], pool: &rayon::ThreadPool) -> Result<Table, CliError> {
    let dists = pool.install(|| runs.par_iter().map(|(_, s)| final_dist(s, t)).collect::<Result<Vec<_>, _>>())?;
    let xs: Vec<i64> = (-(t as i64)..=t as i64).collect();
    let cols: Vec<(String, Vec<f64>)> = runs
        .iter()
        .zip(&dists)
        .map(|((n, _), d)| (format!("p_{n}"), xs.iter().map(|&x| d.at(x)).collect()))
        .collect();
    let cells: Vec<Cell> = xs.into_iter().map(Cell::I).collect();
    Ok(columns_table(name, "x", &cells, &cols))
}

fn traces_table<F>(name: String, prefix: &str, t: u64, runs: &[(String, CoinSchedule)], f: F, pool: &rayon::ThreadPool) -> Result<Table, CliError>
where
    F: Fn(&WalkerState) -> f64 + Sync,
{
    let curves = pool.install(|| runs.par_iter().map(|(_, s)| trace(s, t, &f)).collect::<Result<Vec<_>, _>>())?;
    let cols: Vec<(String, Vec<f64>)> = runs.iter().zip(curves).map(|((n, _), c)| (format!("{prefix}_{n}"), c)).collect();
    let steps: Vec<Cell> = (0..=t).map(Cell::U).collect();
    Ok(columns_table(name, "step", &steps, &cols))
}

fn surface<F>(name: String, n: usize, lo: f64, hi: f64, header: &[&str], f: F, pool: &rayon::ThreadPool) -> Result<Table, CliError>
where
    F: Fn(f64, f64) -> Result<Vec<Cell>, CliError> + Sync,
{
    let axis: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let points: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect();
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|&(a, b)| {
                let mut row = vec![Cell::F(a), Cell::F(b)];
                row.extend(f(a, b)?);
                Ok(row)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut full = vec!["theta1", "theta2"];
    full.extend_from_slice(header);
    let mut t = Table::new(name, &full);
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

fn n_period(n: u32, a: f64, b: f64) -> CoinSchedule {
    CoinSchedule::n_period(n, a, b).expect("preset periods are at least 2")
}

/// Default step count of each figure preset.
pub fn figure_default_steps(id: u8) -> u64 {
    match id {
        2 | 7 => 100,
        3 => 25,
        6 => 45,
        4 => 0,
        _ => 200,
    }
}

/// Plot-ready data for figure presets 1 to 9. All walks start from the
/// symmetric coin state at the origin.
pub fn figure(id: u8, steps: Option<u64>, pool: &rayon::ThreadPool) -> Result<Vec<Table>, CliError> {
    let t = steps.unwrap_or_else(|| figure_default_steps(id));
    let name = |suffix: &str| format!("figure{id}_{suffix}");
    let grid_n = 51;
    let mut tables = Vec::new();
    match id {
        1 | 5 => {
            let n = if id == 1 { 2 } else { 3 };
            for (i, &(a, b)) in PRESET_PAIRS.iter().enumerate() {
                let runs = vec![
                    ("theta1".to_string(), CoinSchedule::homogeneous(a)),
                    ("theta2".to_string(), CoinSchedule::homogeneous(b)),
                    (format!("period{n}"), n_period(n, a, b)),
                ];
                tables.push(distributions_table(name(&format!("pair{}_distribution", i + 1)), t, &runs, pool)?);
                tables.push(traces_table(name(&format!("pair{}_sigma", i + 1)), "sigma", t, &runs, sigma_of, pool)?);
            }
        }
        2 => {
            let thetas2 = [PI / 12.0, FRAC_PI_4, FRAC_PI_3];
            let axis: Vec<f64> = (0..=180).map(|i| PI * i as f64 / 180.0).collect();
            let cols = pool.install(|| {
                thetas2
                    .par_iter()
                    .map(|&b| {
                        axis.iter()
                            .map(|&a| final_dist(&n_period(2, a, b), t).map(|d| d.standard_deviation()))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, CliError>>()
            })?;
            let cols: Vec<(String, Vec<f64>)> = thetas2
                .iter()
                .zip(cols)
                .map(|(b, c)| (format!("sigma_theta2_{b:.6}"), c))
                .collect();
            let xs: Vec<Cell> = axis.into_iter().map(Cell::F).collect();
            tables.push(columns_table(name("sigma"), "theta1", &xs, &cols));
        }
        3 | 6 => {
            let n = if id == 3 { 2 } else { 3 };
            tables.push(surface(
                name("sigma"),
                grid_n,
                0.0,
                FRAC_PI_2,
                &["sigma"],
                |a, b| Ok(vec![Cell::F(final_dist(&n_period(n, a, b), t)?.standard_deviation())]),
                pool,
            )?);
        }
        4 => tables.push(surface(
            name("group_velocity"),
            grid_n,
            0.0,
            FRAC_PI_2,
            &["v_law", "v_exact"],
            |a, b| {
                let law_v = a.cos() * b.cos();
                let exact = max_group_speed(&n_period(2, a, b))?.per_step;
                Ok(vec![Cell::F(law_v), Cell::F(exact)])
            },
            pool,
        )?),
        7 => tables.push(surface(
            name("bound"),
            grid_n,
            0.0,
            FRAC_PI_2,
            &["bound", "support_radius", "quantile_radius"],
            |a, b| {
                let bound = spread_bound(SpeedKind::Three, CoinAngle(a), CoinAngle(b), t)?;
                let d = final_dist(&n_period(3, a, b), t)?;
                Ok(vec![
                    Cell::F(bound),
                    Cell::U(d.support_radius(qwalk_core::analysis::DEFAULT_SUPPORT_EPS)),
                    Cell::U(d.quantile_radius(qwalk_core::analysis::DEFAULT_QUANTILE_MASS)),
                ])
            },
            pool,
        )?),
        8 => {
            let (a, b) = PRESET_PAIRS[0];
            let periods = [3u32, 4, 50];
            let runs: Vec<(String, CoinSchedule)> = periods.iter().map(|&n| (format!("n{n}"), n_period(n, a, b))).collect();
            tables.push(distributions_table(name("distribution"), t, &runs, pool)?);
            tables.push(traces_table(name("sigma"), "sigma", t, &runs, sigma_of, pool)?);
            let mut bounds = Table::new(name("bounds"), &["n", "bound", "support_radius", "quantile_radius"]);
            for (&n, (_, s)) in periods.iter().zip(&runs) {
                let d = final_dist(s, t)?;
                bounds.push(vec![
                    Cell::U(u64::from(n)),
                    Cell::F(spread_bound(SpeedKind::N(n), CoinAngle(a), CoinAngle(b), t)?),
                    Cell::U(d.support_radius(qwalk_core::analysis::DEFAULT_SUPPORT_EPS)),
                    Cell::U(d.quantile_radius(qwalk_core::analysis::DEFAULT_QUANTILE_MASS)),
                ]);
            }
            tables.push(bounds);
        }
        9 => {
            for (i, &(a, b)) in PRESET_PAIRS.iter().enumerate() {
                let runs = vec![
                    ("theta1".to_string(), CoinSchedule::homogeneous(a)),
                    ("theta2".to_string(), CoinSchedule::homogeneous(b)),
                    ("period2".to_string(), n_period(2, a, b)),
                    ("period3".to_string(), n_period(3, a, b)),
                    ("period50".to_string(), n_period(50, a, b)),
                ];
                tables.push(traces_table(name(&format!("pair{}_entropy", i + 1)), "entropy", t, &runs, entropy_of, pool)?);
            }
        }
        _ => return Err(CliError::Config(format!("figure id must be in 1..=9, got {id}"))),
    }
    Ok(tables)
}

pub const DISPERSION_HEADER: [&str; 9] = [
    "k",
    "omega_plus",
    "omega_minus",
    "v_plus",
    "v_minus",
    "omega_law_plus",
    "omega_law_minus",
    "v_law",
    "band_touching",
];

/// Exact bands next to the continuum-limit law. Eigenphases are per
/// effective step; velocities are per walk step.
pub fn dispersion(schedule: &CoinSchedule, k_count: usize) -> Result<Table, CliError> {
    if k_count < 2 {
        return Err(CliError::Config("--k-count must be at least 2".into()));
    }
    let curve = exact_dispersion(schedule, &k_grid(k_count))?;
    let per = f64::from(curve.period_steps);
    let law = SpeedKind::for_schedule(schedule);
    let v_law = match law {
        Some((k, a, b)) => law_group_velocity(k, a, b)?.max_abs(),
        None => f64::NAN,
    };
    let mut t = Table::new("dispersion", &DISPERSION_HEADER);
    for s in &curve.samples {
        let law_w = law.and_then(|(kind, a, b)| law_dispersion(kind, a, b, s.k));
        let (pp, pm) = law_w.map_or((f64::NAN, f64::NAN), |w| (w[0].re, w[1].re));
        t.push(vec![
            Cell::F(s.k),
            Cell::F(s.omega_plus),
            Cell::F(s.omega_minus),
            Cell::F(s.v_plus / per),
            Cell::F(s.v_minus / per),
            Cell::F(pp),
            Cell::F(pm),
            Cell::F(v_law),
            Cell::B(s.band_touching),
        ]);
    }
    Ok(t)
}

pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    /// `true` when the value must stay below the tolerance, `false` when it
    /// must exceed it.
    pub below: bool,
}

impl Check {
    pub fn passed(&self) -> bool {
        if self.below {
            self.value <= self.tolerance
        } else {
            self.value > self.tolerance
        }
    }
}

/// Quick invariant suite over fixed schedules.
pub fn selfcheck() -> Result<Vec<Check>, CliError> {
    let (a, b) = PRESET_PAIRS[0];
    let coin = InitialCoinState::new(0.3, 0.7);
    let all = |t: u64| (0..=t).collect::<Vec<_>>();
    let run = |s: &CoinSchedule, t: u64| evolve(coin, PositionProfile::point(0), s, t, &all(t));

    let mut norm = 0.0f64;
    for s in [
        CoinSchedule::homogeneous(a),
        n_period(2, a, b),
        n_period(5, 1.1, -0.4),
        CoinSchedule::split_step(a, b),
    ] {
        for st in run(&s, 200)?.snapshots() {
            norm = norm.max((st.norm_sqr() - 1.0).abs());
        }
    }

    let ss = run(&CoinSchedule::split_step(a, b), 50)?;
    let tp = run(&n_period(2, a, b), 100)?;
    let mut equiv = 0.0f64;
    for st in ss.snapshots() {
        let other = tp.at(2 * st.step_count()).expect("every step recorded");
        for x in st.window().sites() {
            equiv = equiv
                .max((st.down(x) - other.down(2 * x)).norm())
                .max((st.up(x) - other.up(2 * x)).norm());
        }
    }

    let (ca, cb) = (CoinAngle(a), CoinAngle(b));
    let one = run(&CoinSchedule::homogeneous(a), 100)?;
    let coarse = tp.coarse_grain_two_period()?;
    let mut exact = 0.0f64;
    let mut mismatch = f64::INFINITY;
    for (tr, good, bad) in [
        (&one, RecurrenceFamily::OnePeriod { theta: ca }, RecurrenceFamily::OnePeriod { theta: cb }),
        (
            &tp,
            RecurrenceFamily::TwoPeriodPairStep { theta1: ca, theta2: cb },
            RecurrenceFamily::TwoPeriodPairStep { theta1: cb, theta2: ca },
        ),
        (
            &coarse,
            RecurrenceFamily::CombinedStep { theta1: ca, theta2: cb },
            RecurrenceFamily::CombinedStep { theta1: cb, theta2: ca },
        ),
        (
            &ss,
            RecurrenceFamily::SplitStep { theta1: ca, theta2: cb },
            RecurrenceFamily::SplitStep { theta1: cb, theta2: ca },
        ),
    ] {
        exact = exact.max(recurrence_residual(tr, good)?.max_abs);
        mismatch = mismatch.min(recurrence_residual(tr, bad)?.max_abs);
    }

    let mut unitarity = 0.0f64;
    for s in [CoinSchedule::homogeneous(a), n_period(3, a, b), CoinSchedule::split_step(a, b)] {
        for &k in &k_grid(65) {
            let m = qwalk_core::bloch_matrix(&s, k)?.matrix;
            let e = (m.adjoint() * m - qwalk_core::Mat2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            unitarity = unitarity.max(e);
        }
    }

    let free = trace(&CoinSchedule::homogeneous(0.0), 20, entropy_of)?;
    let entropy = free[1..].iter().map(|e| (e - 1.0).abs()).fold(0.0, f64::max);

    Ok(vec![
        Check { name: "norm conservation", value: norm, tolerance: 1e-12, below: true },
        Check { name: "split-step / two-period amplitudes", value: equiv, tolerance: 1e-13, below: true },
        Check { name: "exact recurrence residuals", value: exact, tolerance: 1e-13, below: true },
        Check { name: "mismatched recurrence residuals", value: mismatch, tolerance: 0.05, below: false },
        Check { name: "Bloch matrix unitarity", value: unitarity, tolerance: 1e-13, below: true },
        Check { name: "free-walk entropy |E - 1|", value: entropy, tolerance: 1e-10, below: true },
    ])
}

/// Probability rows of the last step in a distribution CSV, keyed by site.
fn read_last_step(path: &Path) -> Result<(u64, BTreeMap<i64, f64>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let headers = r
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    let col = |n: &str| {
        headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| CliError::Config(format!("{}: missing column {n:?}", path.display())))
    };
    let (cs, cx, cp) = (col("step")?, col("x")?, col("p")?);
    let mut by_step: BTreeMap<u64, BTreeMap<i64, f64>> = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let parse_err = |c: &str| CliError::Config(format!("{}: row {}: bad {c}", path.display(), line + 2));
        let s: u64 = rec[cs].parse().map_err(|_| parse_err("step"))?;
        let x: i64 = rec[cx].parse().map_err(|_| parse_err("x"))?;
        let p: f64 = rec[cp].parse().map_err(|_| parse_err("p"))?;
        by_step.entry(s).or_default().insert(x, p);
    }
    by_step
        .pop_last()
        .ok_or_else(|| CliError::Config(format!("{}: no rows", path.display())))
}

pub struct Comparison {
    pub split_step: u64,
    pub two_period_step: u64,
    pub max_abs_diff: f64,
    pub odd_site_mass: f64,
}

/// Compares the last step of a split-step distribution file with a two-period
/// one under `x → 2x`, `t → 2t`.
pub fn compare(split: &Path, two_period: &Path) -> Result<Comparison, CliError> {
    let (ts, ps) = read_last_step(split)?;
    let (tp, pp) = read_last_step(two_period)?;
    if tp != 2 * ts {
        return Err(CliError::Config(format!(
            "two-period file ends at step {tp}, expected twice the split-step {ts}"
        )));
    }
    let mut max_abs_diff = 0.0f64;
    for (&x, &p) in &ps {
        max_abs_diff = max_abs_diff.max((p - pp.get(&(2 * x)).copied().unwrap_or(0.0)).abs());
    }
    for (&x, &p) in &pp {
        if x.rem_euclid(2) == 0 && !ps.contains_key(&(x / 2)) {
            max_abs_diff = max_abs_diff.max(p);
        }
    }
    let odd_site_mass = pp.iter().filter(|(x, _)| x.rem_euclid(2) == 1).map(|(_, p)| p).sum();
    Ok(Comparison {
        split_step: ts,
        two_period_step: tp,
        max_abs_diff,
        odd_site_mass,
    })
}
