use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use crate::closedloop::CurvePoint;
use crate::envs::{EnvKind, Policy};
use crate::rng::derive_seed;
use crate::{NldtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    StateScatter,
    ActionVsTime,
    TrainingCurve,
}

impl FromStr for PlotKind {
    type Err = NldtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state_scatter" => Ok(PlotKind::StateScatter),
            "action_vs_time" => Ok(PlotKind::ActionVsTime),
            "training_curve" => Ok(PlotKind::TrainingCurve),
            other => Err(NldtError::UnknownPlotKind(other.to_string())),
        }
    }
}

/// Consecutive closed-loop states and the actions taken in them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub state_names: Vec<String>,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
}

pub enum PlotSource<'a> {
    Trace(&'a Trace),
    Curve(&'a [CurvePoint]),
}

/// Records `n_steps` closed-loop steps of `policy`, starting a new seeded
/// episode whenever one ends.
pub fn collect_trace(policy: &dyn Policy, kind: EnvKind, n_steps: usize, seed: u64) -> Result<Trace> {
    let mut env = kind.build();
    let mut trace =
        Trace { state_names: env.state_names().iter().map(|s| s.to_string()).collect(), ..Default::default() };
    let mut episode = 0;
    while trace.actions.len() < n_steps {
        let mut state = env.reset(derive_seed(seed, episode));
        episode += 1;
        while trace.actions.len() < n_steps {
            let a = policy.act(&state)?;
            let step = env.step(a)?;
            trace.states.push(std::mem::replace(&mut state, step.state));
            trace.actions.push(a);
            if step.done {
                break;
            }
        }
    }
    Ok(trace)
}

/// Writes plot data as CSV:
/// `state_scatter` has the state columns then `action`,
/// `action_vs_time` has `t,action`,
/// `training_curve` has `generation,best,mean`.
pub fn emit_plot_data<W: Write>(kind: PlotKind, source: &PlotSource<'_>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match (kind, source) {
        (PlotKind::StateScatter, PlotSource::Trace(t)) => {
            let mut header = t.state_names.clone();
            header.push("action".into());
            w.write_record(&header)?;
            for (s, a) in t.states.iter().zip(&t.actions) {
                let mut rec: Vec<String> = s.iter().map(f64::to_string).collect();
                rec.push(a.to_string());
                w.write_record(&rec)?;
            }
        }
        (PlotKind::ActionVsTime, PlotSource::Trace(t)) => {
            w.write_record(["t", "action"])?;
            for (i, a) in t.actions.iter().enumerate() {
                w.write_record([i.to_string(), a.to_string()])?;
            }
        }
        (PlotKind::TrainingCurve, PlotSource::Curve(c)) => {
            w.write_record(["generation", "best", "mean"])?;
            for p in c.iter() {
                w.write_record([p.generation.to_string(), p.best.to_string(), p.mean.to_string()])?;
            }
        }
        _ => return Err(NldtError::Config(format!("{kind:?} plots need a different source"))),
    }
    w.flush()?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Frame { x: span(&mut xs.clone()), y: span(&mut ys.clone()) }
    }

    fn px(&self, v: f64) -> f64 {
        PAD + (v - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, v: f64) -> f64 {
        H - PAD - (v - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }
}

fn svg_open(s: &mut String, f: &Frame, xl: &str, yl: &str) {
    let _ = write!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12"><rect width="100%" height="100%" fill="white"/><rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = write!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{xl}</text><text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{yl}</text>"#,
        W / 2.0,
        H - 12.0,
        H / 2.0,
        H / 2.0
    );
    let _ = write!(
        s,
        r#"<text x="{PAD}" y="{}">{:.3}</text><text x="{}" y="{}" text-anchor="end">{:.3}</text><text x="{}" y="{}" text-anchor="end">{:.3}</text><text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        H - PAD + 16.0,
        f.x.0,
        W - PAD,
        H - PAD + 16.0,
        f.x.1,
        PAD - 4.0,
        H - PAD,
        f.y.0,
        PAD - 4.0,
        PAD + 10.0,
        f.y.1
    );
}

/// Minimal SVG rendering of the same data `emit_plot_data` writes.
pub fn render_svg(kind: PlotKind, source: &PlotSource<'_>) -> Result<String> {
    let mut s = String::new();
    match (kind, source) {
        (PlotKind::StateScatter, PlotSource::Trace(t)) => {
            let xs = t.states.iter().map(|r| r.first().copied().unwrap_or(0.0));
            let ys = t.states.iter().map(|r| r.get(1).copied().unwrap_or(0.0));
            let f = Frame::fit(xs.clone(), ys.clone());
            let name = |i: usize| t.state_names.get(i).cloned().unwrap_or_default();
            svg_open(&mut s, &f, &name(0), &name(1));
            for ((x, y), a) in xs.zip(ys).zip(&t.actions) {
                let _ = write!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="1.5" fill="{}"/>"#,
                    f.px(x),
                    f.py(y),
                    PALETTE[a % PALETTE.len()]
                );
            }
        }
        (PlotKind::ActionVsTime, PlotSource::Trace(t)) => {
            let f = Frame::fit((0..t.actions.len()).map(|i| i as f64), t.actions.iter().map(|&a| a as f64));
            svg_open(&mut s, &f, "t", "action");
            polyline(&mut s, &f, t.actions.iter().enumerate().map(|(i, &a)| (i as f64, a as f64)), PALETTE[0]);
        }
        (PlotKind::TrainingCurve, PlotSource::Curve(c)) => {
            let ys = c.iter().flat_map(|p| [p.best, p.mean]);
            let f = Frame::fit(c.iter().map(|p| p.generation as f64), ys);
            svg_open(&mut s, &f, "generation", "fitness");
            polyline(&mut s, &f, c.iter().map(|p| (p.generation as f64, p.best)), PALETTE[0]);
            polyline(&mut s, &f, c.iter().map(|p| (p.generation as f64, p.mean)), PALETTE[1]);
        }
        _ => return Err(NldtError::Config(format!("{kind:?} plots need a different source"))),
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn polyline(s: &mut String, f: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
    let pts: Vec<String> = pts.map(|(x, y)| format!("{:.1},{:.1}", f.px(x), f.py(y))).collect();
    let _ = write!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
}
