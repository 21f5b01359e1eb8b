//! Source-power sweeps over random network instances.
//!
//! Every sweep point reuses the same gain realizations (instance `i` is drawn
//! from a stream keyed by the config seed and `i`), so curves across `P_s`
//! are directly comparable and a fixed seed reproduces the CSV byte for byte.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{ascend_from, optimize, Budget, Method, Objective};
use crate::topology::ChainNetwork;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 9] = [
    "ps_db",
    "exact_mean",
    "zeroth_mean",
    "ub_mean",
    "lb_mean",
    "gap_ub_lb",
    "gap_zeroth_exact",
    "instances",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n: usize,
    pub k: usize,
}

/// Distribution of each real edge gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainDistribution {
    #[default]
    StandardNormal,
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    /// Nonnegative gains with Rayleigh-distributed magnitude.
    Rayleigh { scale: f64 },
}

impl GainDistribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GainDistribution::StandardNormal => true,
            GainDistribution::Normal { mean, std } => mean.is_finite() && std.is_finite() && std > 0.0,
            GainDistribution::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            GainDistribution::Rayleigh { scale } => scale.is_finite() && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid gain distribution parameters: {self:?}")))
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            GainDistribution::StandardNormal => rng.sample(rand_distr::StandardNormal),
            GainDistribution::Normal { mean, std } => Normal::new(mean, std).expect("validated").sample(rng),
            GainDistribution::Uniform { low, high } => Uniform::new(low, high).sample(rng),
            GainDistribution::Rayleigh { scale } => {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                scale * (-2.0 * u.ln()).sqrt()
            }
        }
    }

    fn describe(&self) -> String {
        match *self {
            GainDistribution::StandardNormal => "standard_normal".into(),
            GainDistribution::Normal { mean, std } => format!("normal(mean={mean},std={std})"),
            GainDistribution::Uniform { low, high } => format!("uniform(low={low},high={high})"),
            GainDistribution::Rayleigh { scale } => format!("rayleigh(scale={scale})"),
        }
    }
}

/// How relay budgets follow the source power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum RelayPowerRule {
    /// `P_i = P_s`.
    #[default]
    MatchSource,
    /// `P_i = watts` regardless of `P_s`.
    Fixed { watts: f64 },
    /// `P_i = P_s · 10^(db/10)`.
    OffsetDb { db: f64 },
}

impl RelayPowerRule {
    fn relay_power(&self, source_power: f64) -> f64 {
        match *self {
            RelayPowerRule::MatchSource => source_power,
            RelayPowerRule::Fixed { watts } => watts,
            RelayPowerRule::OffsetDb { db } => source_power * 10f64.powf(db / 10.0),
        }
    }

    fn describe(&self) -> String {
        match *self {
            RelayPowerRule::MatchSource => "match_source".into(),
            RelayPowerRule::Fixed { watts } => format!("fixed({watts} W)"),
            RelayPowerRule::OffsetDb { db } => format!("offset({db} dB)"),
        }
    }
}

/// Inclusive `P_s` sweep in dB, `10 log10(P_s / σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn points(&self) -> Vec<f64> {
        let valid = self.step > 0.0 && self.start <= self.stop;
        if !valid {
            return Vec::new();
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Grid { resolution: usize },
    /// Random starts are seeded per instance and objective from the config seed.
    MultistartAscent { starts: usize },
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    #[serde(flatten)]
    pub method: MethodSpec,
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: usize,
    #[serde(default = "default_quadrature_tol")]
    pub quadrature_tol: f64,
}

fn default_max_evaluations() -> usize {
    Budget::default().max_evaluations
}

fn default_quadrature_tol() -> f64 {
    Budget::default().quadrature_tol
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self {
            method: MethodSpec::MultistartAscent { starts: 8 },
            max_evaluations: default_max_evaluations(),
            quadrature_tol: default_quadrature_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub title: Option<String>,
}

/// A full sweep description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainSpec,
    #[serde(default)]
    pub gain_distribution: GainDistribution,
    /// Draw one gain per transmitting node and use it on all its outgoing edges.
    #[serde(default)]
    pub equal_outgoing_gains: bool,
    #[serde(default = "default_noise_var")]
    pub noise_var: f64,
    #[serde(default)]
    pub relay_power: RelayPowerRule,
    pub ps_db: SweepSpec,
    pub instances: usize,
    pub seed: u64,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<Objective>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_noise_var() -> f64 {
    1.0
}

fn default_objectives() -> Vec<Objective> {
    Objective::ALL.to_vec()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let ChainSpec { n, k } = self.chain;
        if n == 0 || k == 0 || k > n + 1 {
            return Err(Error::InvalidTopology { n_relays: n, reach: k });
        }
        if self.ps_db.points().is_empty() {
            return Err(Error::Config("power sweep is empty".into()));
        }
        if self.instances == 0 {
            return Err(Error::Config("need at least one instance per point".into()));
        }
        if self.objectives.is_empty() {
            return Err(Error::Config("no objectives selected".into()));
        }
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(Error::NonPositive { what: "noise variance", value: self.noise_var });
        }
        self.gain_distribution.validate()?;
        match self.optimizer.method {
            MethodSpec::Grid { resolution: 0 } => {
                return Err(Error::Config("grid resolution must be at least 1".into()))
            }
            MethodSpec::Sequential
                if (!self.equal_outgoing_gains || self.objectives.iter().any(|&o| o != Objective::Zeroth)) => {
                    return Err(Error::Config(
                        "sequential method needs equal_outgoing_gains and only the zeroth objective".into(),
                    ));
                }
            _ => {}
        }
        Ok(())
    }

    fn method_for(&self, instance: usize, objective: Objective) -> Method {
        match self.optimizer.method {
            MethodSpec::Grid { resolution } => Method::Grid { resolution },
            MethodSpec::MultistartAscent { starts } => Method::MultistartAscent {
                starts,
                seed: mix(self.seed, &[instance as u64, objective as u64 + 1]),
            },
            MethodSpec::Sequential => Method::Sequential,
        }
    }

    fn budget(&self) -> Budget {
        Budget {
            max_evaluations: self.optimizer.max_evaluations,
            quadrature_tol: self.optimizer.quadrature_tol,
        }
    }

    /// Gains of instance `index`, as a function of `(from, to)`.
    pub fn instance_gains(&self, index: usize) -> Vec<(usize, usize, f64)> {
        let ChainSpec { n, k } = self.chain;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, &[index as u64]));
        let mut out = Vec::new();
        for j in 0..=n {
            let shared = self.gain_distribution.sample(&mut rng);
            for i in j + 1..=(j + k).min(n + 1) {
                let g = if self.equal_outgoing_gains || i == j + 1 {
                    shared
                } else {
                    self.gain_distribution.sample(&mut rng)
                };
                out.push((j, i, g));
            }
        }
        out
    }

    /// Network of instance `index` at source power `ps_db`.
    pub fn instance(&self, index: usize, ps_db: f64) -> Result<ChainNetwork> {
        let ChainSpec { n, k } = self.chain;
        let ps = self.noise_var * 10f64.powf(ps_db / 10.0);
        let gains = self.instance_gains(index);
        let mut it = gains.iter();
        ChainNetwork::from_gain_fn(n, k, self.noise_var, ps, vec![self.relay_power.relay_power(ps); n], |_, _| {
            it.next().expect("one gain per edge").2
        })
    }
}

/// SplitMix64-style mixing of a base seed with stream indices.
fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Optimized values of one instance at one sweep point, indexed like [`Objective::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InstanceValues(pub [Option<f64>; 4]);

impl InstanceValues {
    pub fn get(&self, o: Objective) -> Option<f64> {
        self.0[o as usize]
    }
}

/// Per-point aggregates, one CSV row each.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub ps_db: f64,
    pub exact_mean: Option<f64>,
    pub zeroth_mean: Option<f64>,
    pub ub_mean: Option<f64>,
    pub lb_mean: Option<f64>,
    pub gap_ub_lb: Option<f64>,
    pub gap_zeroth_exact: Option<f64>,
    pub instances: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `values[point][instance]`.
    pub values: Vec<Vec<InstanceValues>>,
}

fn mean_of(values: &[InstanceValues], f: impl Fn(&InstanceValues) -> Option<f64>) -> Option<f64> {
    let xs: Option<Vec<f64>> = values.iter().map(f).collect();
    xs.map(|xs| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Runs every instance at every sweep point and aggregates.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    config.validate()?;
    let budget = config.budget();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for ps_db in config.ps_db.points() {
        let point: Vec<InstanceValues> = (0..config.instances)
            .into_par_iter()
            .map(|idx| -> Result<InstanceValues> {
                let net = config.instance(idx, ps_db)?;
                let first: Vec<_> = config
                    .objectives
                    .iter()
                    .map(|&o| optimize(&net, o, &config.method_for(idx, o), budget))
                    .collect::<Result<_>>()?;
                // Second pass: ascend each objective from every other objective's optimum,
                // so that pointwise orderings between objectives carry over to the optima.
                let mut out = InstanceValues::default();
                for r in &first {
                    let starts: Vec<_> = first.iter().map(|o| o.theta_star.clone()).collect();
                    let mut value = r.value;
                    if first.len() > 1 {
                        value = value.max(ascend_from(&net, r.objective, &starts, budget)?.value);
                    }
                    out.0[r.objective as usize] = Some(value);
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let pick = |o: Objective| move |v: &InstanceValues| v.get(o);
        let exact_mean = mean_of(&point, pick(Objective::Exact));
        let zeroth_mean = mean_of(&point, pick(Objective::Zeroth));
        let ub_mean = mean_of(&point, pick(Objective::Upper));
        let lb_mean = mean_of(&point, pick(Objective::Lower));
        let gap_ub_lb = mean_of(&point, |v| Some(v.get(Objective::Upper)? - v.get(Objective::Lower)?));
        let gap_zeroth_exact =
            mean_of(&point, |v| Some((v.get(Objective::Zeroth)? - v.get(Objective::Exact)?).abs()));
        rows.push(SweepRow {
            ps_db,
            exact_mean,
            zeroth_mean,
            ub_mean,
            lb_mean,
            gap_ub_lb,
            gap_zeroth_exact,
            instances: config.instances,
            seed: config.seed,
        });
        values.push(point);
    }
    Ok(SweepTable { rows, values })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn metadata(config: &ExperimentConfig) -> Vec<String> {
    let method = match config.optimizer.method {
        MethodSpec::Grid { resolution } => format!("grid(resolution={resolution})"),
        MethodSpec::MultistartAscent { starts } => format!("multistart_ascent(starts={starts})"),
        MethodSpec::Sequential => "sequential".into(),
    };
    vec![
        format!("chain=({},{})", config.chain.n, config.chain.k),
        format!("gain_distribution={}", config.gain_distribution.describe()),
        format!("equal_outgoing_gains={}", config.equal_outgoing_gains),
        format!("noise_var={}", config.noise_var),
        format!("relay_power={}", config.relay_power.describe()),
        "ps_db=10*log10(P_s/noise_var)".into(),
        format!("optimizer={method}+cross_seeded"),
        format!("quadrature_tol={:e}", config.optimizer.quadrature_tol),
        "units=bits/channel use".into(),
    ]
}

/// Writes the table as CSV. Metadata lines start with `#` and precede the header.
pub fn write_csv(table: &SweepTable, config: &ExperimentConfig, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_owned(), source };
    let mut file = File::create(path).map_err(io_err)?;
    for line in metadata(config) {
        writeln!(file, "# {line}").map_err(io_err)?;
    }
    let csv_err = |source| Error::Csv { path: path.to_owned(), source };
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.ps_db.to_string(),
            cell(r.exact_mean),
            cell(r.zeroth_mean),
            cell(r.ub_mean),
            cell(r.lb_mean),
            cell(r.gap_ub_lb),
            cell(r.gap_zeroth_exact),
            r.instances.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Line chart of the per-point means against `P_s` in dB.
pub fn render_svg(table: &SweepTable, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD_L: f64 = 60.0;
    const PAD_R: f64 = 130.0;
    const PAD_T: f64 = 40.0;
    const PAD_B: f64 = 50.0;

    type Getter = fn(&SweepRow) -> Option<f64>;
    let series: [(&str, &str, Getter); 4] = [
        ("exact", "#1f77b4", |r| r.exact_mean),
        ("zeroth", "#2ca02c", |r| r.zeroth_mean),
        ("upper", "#d62728", |r| r.ub_mean),
        ("lower", "#9467bd", |r| r.lb_mean),
    ];
    let xs: Vec<f64> = table.rows.iter().map(|r| r.ps_db).collect();
    let ys: Vec<f64> = table
        .rows
        .iter()
        .flat_map(|r| series.iter().filter_map(move |s| (s.2)(r)))
        .collect();
    let (x0, x1) = (xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(1.0));
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
    let y0 = 0.0;
    let y1 = ys.iter().copied().fold(0.0f64, f64::max).max(1e-3) * 1.05;
    let px = |x: f64| PAD_L + (x - x0) / (x1 - x0) * (W - PAD_L - PAD_R);
    let py = |y: f64| H - PAD_B - (y - y0) / (y1 - y0) * (H - PAD_T - PAD_B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (bx, by) = (px(x0), py(y0));
    let _ = writeln!(
        s,
        r#"<path d="M{bx:.2},{:.2} L{bx:.2},{by:.2} L{:.2},{by:.2}" fill="none" stroke="black"/>"#,
        py(y1),
        px(x1)
    );
    for &x in &xs {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            px(x),
            by + 18.0
        );
    }
    for t in 0..=5 {
        let y = y0 + (y1 - y0) * t as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.2}</text>"#, bx - 6.0, py(y) + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">P_s (dB)</text>"#,
        (bx + px(x1)) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">rate (bits/channel use)</text>"#,
        (PAD_T + by) / 2.0,
        (PAD_T + by) / 2.0
    );
    for (idx, (name, color, get)) in series.iter().enumerate() {
        let pts: Vec<String> = table
            .rows
            .iter()
            .filter_map(|r| get(r).map(|v| format!("{:.2},{:.2}", px(r.ps_db), py(v))))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let ly = PAD_T + 18.0 * idx as f64;
        let lx = W - PAD_R + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"/><text x="{}" y="{}">{name}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes whichever outputs the config names and returns their paths.
pub fn emit_outputs(table: &SweepTable, config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(path) = &config.output.csv {
        write_csv(table, config, path)?;
        written.push(path.clone());
    }
    if let Some(path) = &config.output.svg {
        let title = config
            .output
            .title
            .clone()
            .unwrap_or_else(|| format!("({},{}) nonlinear chain", config.chain.n, config.chain.k));
        std::fs::write(path, render_svg(table, &title)).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path.clone());
    }
    Ok(written)
}
