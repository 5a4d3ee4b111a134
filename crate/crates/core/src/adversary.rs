//! Models of the untrusted party's behaviour: channel attacks on states in
//! transit, wholesale state substitution at preparation, and classical
//! tampering with reported outcomes.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{apply_channel, DensityOperator, KrausChannel, C64};
use crate::metrology::{encode, PhaseEncoding};
use crate::pauli::PauliString;

/// Protocol stage an attack kind acts on.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AttackStage {
    /// CPTP map applied to the encrypted state in transit.
    Channel,
    /// Replaces the requested state at preparation time.
    Preparation,
    /// Deterministic classical edit of the reported measurement record.
    Reporting,
}

/// Deterministic bit flips applied to the reported outcome record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TamperRule {
    flips: Vec<usize>,
}

impl TamperRule {
    pub fn new(mut flips: Vec<usize>) -> Self {
        flips.sort_unstable();
        flips.dedup();
        Self { flips }
    }

    pub fn flips(&self) -> &[usize] {
        &self.flips
    }

    /// XORs the rule into an outcome index of `m` bits.
    pub fn apply(&self, outcome: usize, m: usize) -> Result<usize> {
        let mut out = outcome;
        for &p in &self.flips {
            if p >= m {
                return Err(Error::IndexOutOfRange {
                    index: p,
                    num_qubits: m,
                });
            }
            out ^= 1 << (m - 1 - p);
        }
        Ok(out)
    }
}

/// Eve's behaviour. `Honest` is the identity channel plus faithful
/// preparation and reporting, and is accepted wherever any stage fits.
#[derive(Clone, Debug)]
pub enum AttackModel {
    Honest,
    FixedPauli(PauliString),
    PauliMixture(Vec<(PauliString, f64)>),
    Kraus(KrausChannel),
    StateSubstitution(DensityOperator),
    OutcomeTamper(TamperRule),
}

impl AttackModel {
    /// Validated Pauli mixture: nonnegative weights summing to 1, equal
    /// string lengths.
    pub fn pauli_mixture(components: Vec<(PauliString, f64)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let m = first.0.num_qubits();
        let mut sum = 0.0;
        for (p, w) in &components {
            if p.num_qubits() != m {
                return Err(Error::LengthMismatch {
                    left: p.num_qubits(),
                    right: m,
                });
            }
            if *w < 0.0 {
                return Err(Error::InvalidDistribution(format!("negative weight {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "mixture weights sum to {sum}"
            )));
        }
        Ok(Self::PauliMixture(components))
    }

    /// Stage this attack acts on; `None` for honest (fits anywhere).
    pub fn stage(&self) -> Option<AttackStage> {
        match self {
            AttackModel::Honest => None,
            AttackModel::FixedPauli(_) | AttackModel::PauliMixture(_) | AttackModel::Kraus(_) => {
                Some(AttackStage::Channel)
            }
            AttackModel::StateSubstitution(_) => Some(AttackStage::Preparation),
            AttackModel::OutcomeTamper(_) => Some(AttackStage::Reporting),
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, AttackModel::Honest)
    }

    /// Short text label for transcripts and CSV rows.
    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Parses the textual attack grammar. `substitute:<name>` resolves the
    /// state through the supplied loader so the core stays free of file IO.
    pub fn parse_with_loader(
        spec: &str,
        load_state: &dyn Fn(&str) -> Result<DensityOperator>,
    ) -> Result<Self> {
        let spec = spec.trim();
        if spec == "honest" {
            return Ok(AttackModel::Honest);
        }
        if let Some(rest) = spec.strip_prefix("pauli:") {
            return Ok(AttackModel::FixedPauli(rest.parse()?));
        }
        if let Some(rest) = spec.strip_prefix("mixture:") {
            let mut components = Vec::new();
            for part in rest.split(';') {
                let part = part.trim();
                let inner = part
                    .strip_prefix('(')
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!("bad mixture component '{part}'"))
                    })?;
                let (pauli, weight) = inner.split_once(',').ok_or_else(|| {
                    Error::InvalidArgument(format!("bad mixture component '{part}'"))
                })?;
                let w: f64 = weight.trim().parse().map_err(|e| {
                    Error::InvalidArgument(format!("bad mixture weight '{weight}': {e}"))
                })?;
                components.push((pauli.trim().parse()?, w));
            }
            return Self::pauli_mixture(components);
        }
        if let Some(rest) = spec.strip_prefix("substitute:") {
            return Ok(AttackModel::StateSubstitution(load_state(rest.trim())?));
        }
        if let Some(rest) = spec.strip_prefix("tamper:") {
            let inner = rest
                .trim()
                .strip_prefix("flip[")
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| Error::InvalidArgument(format!("bad tamper spec '{rest}'")))?;
            let flips = inner
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::InvalidArgument(format!("bad flip index: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(AttackModel::OutcomeTamper(TamperRule::new(flips)));
        }
        Err(Error::InvalidArgument(format!("unknown attack spec '{spec}'")))
    }
}

impl std::str::FromStr for AttackModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackModel::parse_with_loader(s, &|name| {
            Err(Error::InvalidArgument(format!(
                "substitute state '{name}' must be loaded by the caller"
            )))
        })
    }
}

impl fmt::Display for AttackModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackModel::Honest => write!(f, "honest"),
            AttackModel::FixedPauli(p) => write!(f, "pauli:{p}"),
            AttackModel::PauliMixture(parts) => {
                write!(f, "mixture:")?;
                for (k, (p, w)) in parts.iter().enumerate() {
                    if k > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "({p},{w})")?;
                }
                Ok(())
            }
            AttackModel::Kraus(ch) => {
                write!(f, "kraus:{}ops@{}q", ch.operators().len(), ch.num_qubits())
            }
            AttackModel::StateSubstitution(rho) => {
                write!(f, "substitute:{}q", rho.num_qubits())
            }
            AttackModel::OutcomeTamper(rule) => {
                write!(f, "tamper:flip[")?;
                for (k, p) in rule.flips().iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Applies a channel-stage attack to a state.
pub fn apply_attack(attack: &AttackModel, rho: &DensityOperator) -> Result<DensityOperator> {
    match attack {
        AttackModel::Honest => Ok(rho.clone()),
        AttackModel::FixedPauli(p) => p.conjugate_state(rho),
        AttackModel::PauliMixture(parts) => {
            let dim = rho.dim();
            let mut acc = nalgebra::DMatrix::<C64>::zeros(dim, dim);
            for (p, w) in parts {
                acc += p.conjugate_state(rho)?.matrix() * C64::new(*w, 0.0);
            }
            DensityOperator::from_hermitian_unchecked(acc)
        }
        AttackModel::Kraus(ch) => apply_channel(ch, rho),
        other => Err(Error::AttackScope(format!(
            "{other} is not a channel-stage attack"
        ))),
    }
}

/// Resolves the state Eve hands over when asked for `requested`.
pub fn substitute_state(
    attack: &AttackModel,
    requested: &DensityOperator,
) -> Result<DensityOperator> {
    match attack {
        AttackModel::Honest => Ok(requested.clone()),
        AttackModel::StateSubstitution(rho) => {
            if rho.dim() != requested.dim() {
                return Err(Error::DimensionMismatch {
                    left: rho.dim(),
                    right: requested.dim(),
                });
            }
            Ok(rho.clone())
        }
        other => Err(Error::AttackScope(format!(
            "{other} is not a preparation-stage attack"
        ))),
    }
}

/// The restricted encoding adversary: with probability p the encoding is
/// skipped, rho -> (1-p) U rho U† + p rho.
pub fn mixed_encoding_channel(
    p: f64,
    enc: &PhaseEncoding,
    rho: &DensityOperator,
) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "mixing probability {p} outside [0,1]"
        )));
    }
    let encoded = encode(enc, rho)?;
    let mixed = encoded.matrix() * C64::new(1.0 - p, 0.0) + rho.matrix() * C64::new(p, 0.0);
    DensityOperator::from_hermitian_unchecked(mixed)
}
