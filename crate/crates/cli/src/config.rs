//! JSON experiment configuration. Every field is optional and unknown
//! fields are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wscs_rdf::mc::McConfig;
use wscs_rdf::rdf::TailWindow;
use wscs_rdf::{CtVarianceProfile, PulseParams, SymbolicFraction};

use crate::eps::parse_eps;
use crate::error::CliError;

const DEFAULT_PERIOD: f64 = 5e-6;
const RATIO_DENOMINATOR_CAP: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileConfig {
    Pulse {
        #[serde(default = "pulse_base")]
        base: f64,
        #[serde(default = "pulse_amplitude")]
        amplitude: f64,
        #[serde(default = "pulse_t_dc")]
        t_dc: f64,
        #[serde(default = "pulse_t_rf")]
        t_rf: f64,
        #[serde(default = "period")]
        period: f64,
        #[serde(default)]
        phi: f64,
    },
    Sine {
        #[serde(default = "sine_mean")]
        mean: f64,
        #[serde(default = "sine_amplitude")]
        amplitude: f64,
        #[serde(default = "period")]
        period: f64,
        #[serde(default)]
        phi: f64,
    },
}

fn pulse_base() -> f64 {
    0.2
}
fn pulse_amplitude() -> f64 {
    4.8
}
fn pulse_t_dc() -> f64 {
    0.75
}
fn pulse_t_rf() -> f64 {
    0.01
}
fn period() -> f64 {
    DEFAULT_PERIOD
}
fn sine_mean() -> f64 {
    2.0
}
fn sine_amplitude() -> f64 {
    0.5
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::Pulse {
            base: pulse_base(),
            amplitude: pulse_amplitude(),
            t_dc: pulse_t_dc(),
            t_rf: pulse_t_rf(),
            period: period(),
            phi: 0.0,
        }
    }
}

impl ProfileConfig {
    pub fn build(&self) -> Result<CtVarianceProfile, CliError> {
        let prof = match *self {
            ProfileConfig::Pulse { base, amplitude, t_dc, t_rf, period, phi } => {
                CtVarianceProfile::pulse(base, amplitude, PulseParams::new(t_dc, t_rf)?, period, phi)?
            }
            ProfileConfig::Sine { mean, amplitude, period, phi } => {
                CtVarianceProfile::sine(mean, amplitude, period, phi)?
            }
        };
        Ok(prof)
    }

    pub fn period(&self) -> f64 {
        match *self {
            ProfileConfig::Pulse { period, .. } | ProfileConfig::Sine { period, .. } => period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub p: u64,
    pub eps: String,
    /// Absolute sampling offset in seconds.
    pub offset_abs: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { p: 2, eps: "5*pi/32".into(), offset_abs: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum DistortionConfig {
    Value(f64),
    List(Vec<f64>),
    Grid { start: f64, stop: f64, step: f64 },
}

impl DistortionConfig {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            DistortionConfig::Value(d) => Ok(vec![*d]),
            DistortionConfig::List(v) if v.is_empty() => Err(CliError::Config("distortion list is empty".into())),
            DistortionConfig::List(v) => Ok(v.clone()),
            DistortionConfig::Grid { start, stop, step } => Ok(wscs_rdf::rdf::ratio_grid(*start, *stop, *step)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Point,
    N,
    Ratio,
    Distortion,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub lo: u64,
    pub hi: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioGridConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for RatioGridConfig {
    fn default() -> Self {
        RatioGridConfig { start: 2.01, stop: 3.99, step: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McParams {
    pub k: u64,
    pub trials: usize,
    pub plimsup_ks: Vec<u64>,
    pub plimsup_trials: usize,
    pub delta: f64,
    pub ui_ks: Vec<u64>,
    pub ui_trials: usize,
}

impl Default for McParams {
    fn default() -> Self {
        let c = McConfig::default();
        McParams {
            k: c.k,
            trials: c.trials,
            plimsup_ks: c.plimsup_ks,
            plimsup_trials: c.plimsup_trials,
            delta: c.delta,
            ui_ks: c.ui_ks,
            ui_trials: c.ui_trials,
        }
    }
}

impl McParams {
    pub fn to_config(&self, seed: u64) -> McConfig {
        McConfig {
            k: self.k,
            trials: self.trials,
            seed,
            plimsup_ks: self.plimsup_ks.clone(),
            plimsup_trials: self.plimsup_trials,
            delta: self.delta,
            ui_ks: self.ui_ks.clone(),
            ui_trials: self.ui_trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Optional; when present it must match the subcommand.
    pub kind: Option<SweepKind>,
    pub n_max: u64,
    pub tail_window: Option<TailConfig>,
    /// Largest denominator treated as synchronous. Defaults to 10 for the
    /// ratio sweep and 10^6 elsewhere.
    pub denominator_cap: Option<u64>,
    pub ratio: RatioGridConfig,
    pub eps_list: Vec<String>,
    pub mc: McParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            kind: None,
            n_max: 500,
            tail_window: None,
            denominator_cap: None,
            ratio: RatioGridConfig::default(),
            eps_list: vec!["5*pi/32".into(), "1/2".into()],
            mc: McParams::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub profile: ProfileConfig,
    pub sampling: SamplingConfig,
    pub distortion: Option<DistortionConfig>,
    pub sweep: SweepConfig,
    pub seed: u64,
    /// Explicit DT variance period; bypasses the profile for `rdf-point`
    /// and `mc`.
    pub variances: Option<Vec<f64>>,
    pub output: OutputConfig,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Distortion D; a comma-separated list for sweep-distortion.
    #[arg(long = "D", value_delimiter = ',', allow_hyphen_values = true)]
    pub d: Option<Vec<f64>>,
    /// Fractional part of T_ps/T_s, e.g. 1/2, 0.6, pi/7, 5*pi/32.
    #[arg(long)]
    pub eps: Option<String>,
    /// Pulse duty cycle.
    #[arg(long)]
    pub tdc: Option<f64>,
    /// Profile phase in periods.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Integer part of T_ps/T_s.
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub tail_lo: Option<u64>,
    #[arg(long)]
    pub tail_hi: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(d) = &o.d {
            self.distortion = Some(match d.as_slice() {
                [x] => DistortionConfig::Value(*x),
                xs => DistortionConfig::List(xs.to_vec()),
            });
        }
        if let Some(e) = &o.eps {
            self.sampling.eps = e.clone();
        }
        if let Some(t) = o.tdc {
            match &mut self.profile {
                ProfileConfig::Pulse { t_dc, .. } => *t_dc = t,
                ProfileConfig::Sine { .. } => {
                    return Err(CliError::Config("--tdc applies to pulse profiles only".into()))
                }
            }
        }
        if let Some(v) = o.phi {
            match &mut self.profile {
                ProfileConfig::Pulse { phi, .. } | ProfileConfig::Sine { phi, .. } => *phi = v,
            }
        }
        if let Some(p) = o.p {
            self.sampling.p = p;
        }
        if let Some(n) = o.n_max {
            self.sweep.n_max = n;
        }
        if o.tail_lo.is_some() || o.tail_hi.is_some() {
            let cur = self.sweep.tail_window.unwrap_or(TailConfig { lo: 230, hi: 500 });
            self.sweep.tail_window =
                Some(TailConfig { lo: o.tail_lo.unwrap_or(cur.lo), hi: o.tail_hi.unwrap_or(cur.hi) });
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.out_csv {
            self.output.csv = Some(p.clone());
        }
        if let Some(p) = &o.out_json {
            self.output.json = Some(p.clone());
        }
        if let Some(p) = &o.out_svg {
            self.output.svg = Some(p.clone());
        }
        Ok(())
    }

    pub fn eps(&self) -> Result<SymbolicFraction, CliError> {
        parse_eps(&self.sampling.eps).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn eps_list(&self) -> Result<Vec<SymbolicFraction>, CliError> {
        if self.sweep.eps_list.is_empty() {
            return Err(CliError::Config("sweep.eps_list is empty".into()));
        }
        self.sweep
            .eps_list
            .iter()
            .map(|s| parse_eps(s).map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    /// Single distortion value; `0.18` when none is configured.
    pub fn single_distortion(&self) -> Result<f64, CliError> {
        match &self.distortion {
            None => Ok(0.18),
            Some(DistortionConfig::Value(d)) => Ok(*d),
            Some(other) => match other.values()?.as_slice() {
                [d] => Ok(*d),
                _ => Err(CliError::Config("this subcommand takes a single distortion value".into())),
            },
        }
    }

    /// Distortion grid; `0.02, 0.04, ..., 2.0` when none is configured.
    pub fn distortion_grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.distortion {
            None => Ok(wscs_rdf::rdf::ratio_grid(0.02, 2.0, 0.02)?),
            Some(d) => d.values(),
        }
    }

    pub fn tail(&self) -> Result<TailWindow, CliError> {
        let t = self.sweep.tail_window.unwrap_or(TailConfig { lo: 230, hi: 500 });
        Ok(TailWindow::new(t.lo, t.hi)?)
    }

    /// Tail window for an `n`-sweep. Without an explicit window, a run
    /// shorter than the default tail uses its last 54% instead.
    pub fn tail_for_series(&self) -> Result<TailWindow, CliError> {
        let n = self.sweep.n_max;
        if n == 0 {
            return Err(CliError::Config("n_max must be positive".into()));
        }
        match self.sweep.tail_window {
            Some(t) if t.hi > n => Err(CliError::Config(format!(
                "tail window [{}, {}] extends past n_max = {n}",
                t.lo, t.hi
            ))),
            Some(t) => Ok(TailWindow::new(t.lo, t.hi)?),
            None if n >= 500 => Ok(TailWindow::new(230, 500)?),
            None => Ok(TailWindow::new((n * 23 / 50).max(1), n)?),
        }
    }

    pub fn denominator_cap(&self, kind: SweepKind) -> u64 {
        self.sweep.denominator_cap.unwrap_or(match kind {
            SweepKind::Ratio => RATIO_DENOMINATOR_CAP,
            _ => wscs_rdf::fraction::DEFAULT_DENOMINATOR_CAP,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.sampling.eps, "5*pi/32");
        assert_eq!(c.single_distortion().unwrap(), 0.18);
        assert_eq!(c.distortion_grid().unwrap().len(), 100);
    }

    #[test]
    fn rejects_unknown_fields() {
        for text in [
            r#"{"distorsion": 0.2}"#,
            r#"{"sampling": {"epsilon": "1/2"}}"#,
            r#"{"profile": {"shape": "pulse", "duty": 0.5}}"#,
            r#"{"profile": {"shape": "triangle"}}"#,
            r#"{"sweep": {"mc": {"kk": 3}}}"#,
            r#"{"output": {"png": "a.png"}}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn parses_full_config() {
        let c = ExperimentConfig::from_json(
            r#"{
                "profile": {"shape": "sine", "mean": 2, "amplitude": 0.5, "period": 1, "phi": 0.25},
                "sampling": {"p": 3, "eps": "1/2", "offset_abs": 0},
                "distortion": {"start": 0.1, "stop": 0.3, "step": 0.1},
                "sweep": {"kind": "distortion", "tail_window": {"lo": 10, "hi": 20}, "eps_list": ["pi/7"]},
                "seed": 7,
                "variances": [1, 4],
                "output": {"csv": "out.csv"}
            }"#,
        )
        .unwrap();
        assert_eq!(c.distortion_grid().unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(c.tail().unwrap(), TailWindow::new(10, 20).unwrap());
        assert_eq!(c.sweep.kind, Some(SweepKind::Distortion));
        assert!(c.profile.build().is_ok());
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = ExperimentConfig::default();
        let o = Overrides {
            d: Some(vec![0.5]),
            eps: Some("1/2".into()),
            tdc: Some(0.45),
            phi: Some(0.0625),
            tail_hi: Some(300),
            ..Default::default()
        };
        c.apply(&o).unwrap();
        assert_eq!(c.single_distortion().unwrap(), 0.5);
        assert_eq!(c.sampling.eps, "1/2");
        assert_eq!(c.tail().unwrap(), TailWindow::new(230, 300).unwrap());
        match c.profile {
            ProfileConfig::Pulse { t_dc, phi, .. } => assert_eq!((t_dc, phi), (0.45, 0.0625)),
            _ => unreachable!(),
        }
        let mut s = ExperimentConfig::from_json(r#"{"profile": {"shape": "sine"}}"#).unwrap();
        assert!(s.apply(&Overrides { tdc: Some(0.5), ..Default::default() }).is_err());
    }

    #[test]
    fn short_series_shrinks_default_tail() {
        let mut c = ExperimentConfig::default();
        c.sweep.n_max = 100;
        assert_eq!(c.tail_for_series().unwrap(), TailWindow::new(46, 100).unwrap());
        c.sweep.tail_window = Some(TailConfig { lo: 10, hi: 200 });
        assert!(c.tail_for_series().is_err());
    }
}
