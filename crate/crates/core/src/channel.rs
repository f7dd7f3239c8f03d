//! Network descriptions for the single-relay and two-relay diamond networks.
//!
//! A [`ChannelConfig`] is the static description of one network: which
//! topology, the complex gain vectors on every link, the per-node power
//! budgets, the noise spectral density and what the transmitters know about
//! channel phases. Everything downstream works with powers divided by the
//! noise spectral density; [`ChannelConfig::power`] returns that normalized
//! value.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension of the source antenna array in both networks.
pub const SOURCE_ANTENNAS: usize = 2;

/// An ordered list of complex link gains, one per transmit antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    entries: Vec<Complex64>,
}

impl ChannelVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::validation("entries", "channel vector must be non-empty"));
        }
        if let Some(i) = entries.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::validation(format!("entries[{i}]"), "gain is not finite"));
        }
        Ok(Self { entries })
    }

    /// Real-valued gains. Panics on non-finite input; intended for literals.
    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect()).expect("finite real gains")
    }

    pub fn scalar(gain: Complex64) -> Result<Self> {
        Self::new(vec![gain])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Per-antenna squared magnitudes `|c_k|^2`.
    pub fn magnitudes_sqr(&self) -> Vec<f64> {
        self.entries.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `self^H other`.
    pub fn inner(&self, other: &ChannelVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scaled(&self, factor: Complex64) -> ChannelVector {
        ChannelVector {
            entries: self.entries.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// Unit vector in the same direction.
    pub fn normalized(&self) -> Result<ChannelVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector("cannot normalize a zero vector"));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    /// Full complex gains known everywhere; coherent combining is possible.
    Synchronous,
    /// Only gain magnitudes known at transmitters; phases vary ergodically.
    PhaseFading,
}

impl CsiMode {
    pub fn name(self) -> &'static str {
        match self {
            CsiMode::Synchronous => "synchronous",
            CsiMode::PhaseFading => "phase_fading",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Two-antenna source, one relay, one destination.
    SingleRelay,
    /// Two-antenna source, two single-antenna relays, one destination.
    TwoRelayDiamond,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::SingleRelay => "single_relay",
            Topology::TwoRelayDiamond => "two_relay_diamond",
        }
    }

    /// Gain names and their required dimensions.
    pub fn gain_layout(self) -> &'static [(&'static str, usize)] {
        match self {
            Topology::SingleRelay => &[("c21", SOURCE_ANTENNAS), ("c31", SOURCE_ANTENNAS), ("c32", 1)],
            Topology::TwoRelayDiamond => &[
                ("c21", SOURCE_ANTENNAS),
                ("c31", SOURCE_ANTENNAS),
                ("c42", 1),
                ("c43", 1),
            ],
        }
    }

    pub fn power_nodes(self) -> &'static [&'static str] {
        match self {
            Topology::SingleRelay => &["P1", "P2"],
            Topology::TwoRelayDiamond => &["P1", "P2", "P3"],
        }
    }
}

/// Angle between two gain vectors, `arccos(|c2^H c3| / (|c2| |c3|))`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AngleAlpha(f64);

impl AngleAlpha {
    pub fn radians(self) -> f64 {
        self.0
    }
}

impl fmt::Display for AngleAlpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

pub fn angle_between(c2: &ChannelVector, c3: &ChannelVector) -> Result<AngleAlpha> {
    if c2.is_zero() || c3.is_zero() {
        return Err(Error::ZeroVector("angle is undefined for a zero gain vector"));
    }
    let cosine = c2.inner(c3)?.norm() / (c2.norm() * c3.norm());
    Ok(AngleAlpha(cosine.clamp(0.0, 1.0).acos().clamp(0.0, FRAC_PI_2)))
}

/// Variance of the extra noise a stronger relay injects so its observation
/// matches the destination's direct-link statistics: `1 - |c31|^2 / |c21|^2`.
pub fn degradation_noise_variance(c21: Complex64, c31: Complex64) -> Result<f64> {
    let (g21, g31) = (c21.norm_sqr(), c31.norm_sqr());
    if g31 == 0.0 {
        return Err(Error::Precondition("direct-link gain must be nonzero".into()));
    }
    if g21 < g31 {
        return Err(Error::Precondition(format!(
            "relay gain |c21|^2 = {g21} is below direct gain |c31|^2 = {g31}; relay is not the stronger receiver"
        )));
    }
    Ok(1.0 - g31 / g21)
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    topology: Topology,
    csi: CsiMode,
    #[serde(default = "default_noise_psd")]
    noise_psd: f64,
    powers: BTreeMap<String, f64>,
    gains: BTreeMap<String, Vec<[f64; 2]>>,
}

fn default_noise_psd() -> f64 {
    1.0
}

/// Validated, immutable network description.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    topology: Topology,
    csi: CsiMode,
    noise_psd: f64,
    powers: BTreeMap<String, f64>,
    gains: BTreeMap<String, ChannelVector>,
}

impl ChannelConfig {
    pub fn new(
        topology: Topology,
        csi: CsiMode,
        noise_psd: f64,
        powers: BTreeMap<String, f64>,
        gains: BTreeMap<String, ChannelVector>,
    ) -> Result<Self> {
        if !(noise_psd.is_finite() && noise_psd > 0.0) {
            return Err(Error::validation("noise_psd", "must be finite and > 0"));
        }
        for (node, &p) in &powers {
            if !topology.power_nodes().contains(&node.as_str()) {
                return Err(Error::validation(
                    format!("powers.{node}"),
                    format!("unknown node for topology {}", topology.name()),
                ));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::validation(
                    format!("powers.{node}"),
                    format!("power must be finite and >= 0, got {p}"),
                ));
            }
        }
        for node in topology.power_nodes() {
            if !powers.contains_key(*node) {
                return Err(Error::validation(format!("powers.{node}"), "missing"));
            }
        }
        for name in gains.keys() {
            if !topology.gain_layout().iter().any(|(n, _)| n == name) {
                return Err(Error::validation(
                    format!("gains.{name}"),
                    format!("unknown link for topology {}", topology.name()),
                ));
            }
        }
        for (name, dim) in topology.gain_layout() {
            match gains.get(*name) {
                None => return Err(Error::validation(format!("gains.{name}"), "missing")),
                Some(v) if v.dim() != *dim => {
                    return Err(Error::validation(
                        format!("gains.{name}"),
                        format!("expected dimension {dim}, got {}", v.dim()),
                    ))
                }
                Some(_) => {}
            }
        }
        Ok(Self {
            topology,
            csi,
            noise_psd,
            powers,
            gains,
        })
    }

    /// Single-relay network with unit noise spectral density.
    pub fn single_relay(
        c21: ChannelVector,
        c31: ChannelVector,
        c32: Complex64,
        p1: f64,
        p2: f64,
        csi: CsiMode,
    ) -> Result<Self> {
        let powers = [("P1".to_string(), p1), ("P2".to_string(), p2)].into();
        let gains = [
            ("c21".to_string(), c21),
            ("c31".to_string(), c31),
            ("c32".to_string(), ChannelVector::scalar(c32)?),
        ]
        .into();
        Self::new(Topology::SingleRelay, csi, 1.0, powers, gains)
    }

    /// Two-relay diamond network with unit noise spectral density.
    #[allow(clippy::too_many_arguments)]
    pub fn diamond(
        c21: ChannelVector,
        c31: ChannelVector,
        c42: Complex64,
        c43: Complex64,
        p1: f64,
        p2: f64,
        p3: f64,
        csi: CsiMode,
    ) -> Result<Self> {
        let powers = [("P1".to_string(), p1), ("P2".to_string(), p2), ("P3".to_string(), p3)].into();
        let gains = [
            ("c21".to_string(), c21),
            ("c31".to_string(), c31),
            ("c42".to_string(), ChannelVector::scalar(c42)?),
            ("c43".to_string(), ChannelVector::scalar(c43)?),
        ]
        .into();
        Self::new(Topology::TwoRelayDiamond, csi, 1.0, powers, gains)
    }

    pub fn with_noise_psd(mut self, noise_psd: f64) -> Result<Self> {
        if !(noise_psd.is_finite() && noise_psd > 0.0) {
            return Err(Error::validation("noise_psd", "must be finite and > 0"));
        }
        self.noise_psd = noise_psd;
        Ok(self)
    }

    pub fn with_csi(mut self, csi: CsiMode) -> Self {
        self.csi = csi;
        self
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn csi(&self) -> CsiMode {
        self.csi
    }

    pub fn noise_psd(&self) -> f64 {
        self.noise_psd
    }

    /// Power budget of `node` in Watts, as configured.
    pub fn raw_power(&self, node: &str) -> Option<f64> {
        self.powers.get(node).copied()
    }

    /// Power budget of `node` divided by the noise spectral density.
    ///
    /// Panics if the node does not exist for this topology; validated
    /// configs always carry every node of their topology.
    pub fn power(&self, node: &str) -> f64 {
        self.powers[node] / self.noise_psd
    }

    pub fn gain(&self, name: &str) -> &ChannelVector {
        &self.gains[name]
    }

    /// Scalar link gain (relay-to-destination links).
    pub fn scalar_gain(&self, name: &str) -> Complex64 {
        self.gains[name].entries()[0]
    }

    pub fn gains(&self) -> impl Iterator<Item = (&str, &ChannelVector)> {
        self.gains.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub(crate) fn require(&self, topology: Topology, csi: Option<CsiMode>) -> Result<()> {
        if self.topology != topology {
            return Err(Error::WrongTopology {
                expected: topology.name(),
                actual: self.topology.name(),
            });
        }
        if let Some(csi) = csi {
            if self.csi != csi {
                return Err(Error::WrongCsi {
                    expected: csi.name(),
                    actual: self.csi.name(),
                });
            }
        }
        Ok(())
    }

    /// Scales every power budget by `factor`.
    pub fn scale_powers(&self, factor: f64) -> Result<Self> {
        let powers = self.powers.iter().map(|(k, v)| (k.clone(), v * factor)).collect();
        Self::new(self.topology, self.csi, self.noise_psd, powers, self.gains.clone())
    }

    pub fn to_json(&self) -> String {
        let raw = RawConfig {
            topology: self.topology,
            csi: self.csi,
            noise_psd: self.noise_psd,
            powers: self.powers.clone(),
            gains: self
                .gains
                .iter()
                .map(|(k, v)| (k.clone(), v.entries().iter().map(|c| [c.re, c.im]).collect()))
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("config serializes")
    }
}

/// Parses and validates a JSON network description.
pub fn load_config(text: &str) -> Result<ChannelConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut gains = BTreeMap::new();
    for (name, pairs) in raw.gains {
        let entries = pairs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        let v = ChannelVector::new(entries).map_err(|e| match e {
            Error::Validation { field, reason } => Error::validation(format!("gains.{name}.{field}"), reason),
            other => other,
        })?;
        gains.insert(name, v);
    }
    ChannelConfig::new(raw.topology, raw.csi, raw.noise_psd, raw.powers, gains)
}
