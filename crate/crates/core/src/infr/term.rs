//! Multilinear monomials of the gauged system on the frequency lattice.
//!
//! Slot frequencies are *native*: a conjugated slot at frequency `eta` reads
//! `conj(^V(eta))` and contributes `-eta` to the output frequency. With this
//! convention the phase of a monomial is `omega(xi) - sum_j s_j omega(xi_j)`
//! with `s_j = -1` on conjugated slots, since `omega` is odd.

use num_complex::Complex64;
use serde::Serialize;

use crate::spectral::{omega, Region};
use crate::{Error, Result};

const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub conj: bool,
    /// Restriction on the native frequency of the slot.
    pub region: Region,
}

impl Slot {
    pub fn plain(region: Region) -> Self {
        Self { conj: false, region }
    }

    pub fn conjugated(region: Region) -> Self {
        Self { conj: true, region }
    }

    /// `+1`, or `-1` for a conjugated slot.
    pub fn sign(&self) -> f64 {
        if self.conj {
            -1.0
        } else {
            1.0
        }
    }
}

/// Restriction `sum_{j in slots} s_j xi_j in region` on a partial sum of
/// the slot frequencies (a projection applied to an inner product).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InnerConstraint {
    pub slots: Vec<usize>,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Multiplier {
    Constant(#[serde(serialize_with = "ser_c64")] Complex64),
    /// `c xi xi_slot`
    OutputTimesSlot {
        #[serde(serialize_with = "ser_c64")]
        c: Complex64,
        slot: usize,
    },
    /// `c xi_slot^2`
    SlotSquared {
        #[serde(serialize_with = "ser_c64")]
        c: Complex64,
        slot: usize,
    },
    /// `c eta xi_slot` with `eta` the inner frequency.
    InnerTimesSlot {
        #[serde(serialize_with = "ser_c64")]
        c: Complex64,
        slot: usize,
    },
}

fn ser_c64<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl Multiplier {
    pub fn eval(&self, xi: f64, slots: &[f64], inner: f64) -> Complex64 {
        match *self {
            Multiplier::Constant(c) => c,
            Multiplier::OutputTimesSlot { c, slot } => c * (xi * slots[slot]),
            Multiplier::SlotSquared { c, slot } => c * slots[slot].powi(2),
            Multiplier::InnerTimesSlot { c, slot } => c * (inner * slots[slot]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonlinearTerm {
    pub name: String,
    pub output: Region,
    pub slots: Vec<Slot>,
    pub inner: Option<InnerConstraint>,
    pub multiplier: Multiplier,
}

impl NonlinearTerm {
    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    /// Output frequency `sum_j s_j xi_j`.
    pub fn output_frequency(&self, slot_xis: &[f64]) -> f64 {
        self.slots.iter().zip(slot_xis).map(|(s, x)| s.sign() * x).sum()
    }

    pub fn inner_frequency(&self, slot_xis: &[f64]) -> f64 {
        self.inner.as_ref().map_or(0.0, |c| {
            c.slots.iter().map(|&j| self.slots[j].sign() * slot_xis[j]).sum()
        })
    }

    /// Whether `(xi; slot_xis)` lies in the support of the monomial. The
    /// convolution constraint is assumed.
    pub fn admits(&self, xi: f64, slot_xis: &[f64]) -> bool {
        self.output.contains(xi)
            && self.slots.iter().zip(slot_xis).all(|(s, &x)| s.region.contains(x))
            && self
                .inner
                .as_ref()
                .map_or(true, |c| c.region.contains(self.inner_frequency(slot_xis)))
    }

    /// Multiplier value, zero outside the support.
    pub fn kernel(&self, xi: f64, slot_xis: &[f64]) -> Complex64 {
        if !self.admits(xi, slot_xis) {
            return Complex64::new(0.0, 0.0);
        }
        self.multiplier.eval(xi, slot_xis, self.inner_frequency(slot_xis))
    }

    /// Phase `omega(xi) - sum_j s_j omega(xi_j)` without constraint check.
    pub fn phase_unchecked(&self, xi: f64, slot_xis: &[f64]) -> f64 {
        omega(xi)
            - self
                .slots
                .iter()
                .zip(slot_xis)
                .map(|(s, &x)| s.sign() * omega(x))
                .sum::<f64>()
    }
}

/// Phase of `term` at `(xi; slot_xis)`; the slot frequencies must satisfy the
/// convolution constraint of the term.
pub fn phase(term: &NonlinearTerm, xi: f64, slot_xis: &[f64]) -> Result<f64> {
    if slot_xis.len() != term.arity() {
        return Err(Error::LengthMismatch {
            expected: term.arity(),
            got: slot_xis.len(),
        });
    }
    let out = term.output_frequency(slot_xis);
    if (out - xi).abs() > CONSTRAINT_TOL * (1.0 + xi.abs()) {
        return Err(Error::InvalidArgument(format!(
            "slot frequencies {slot_xis:?} give output {out}, not {xi}, for {}",
            term.name
        )));
    }
    Ok(term.phase_unchecked(xi, slot_xis))
}

/// `omega(xi) - omega(xi1) + omega(xi2) - omega(xi3)` evaluated literally.
pub fn cubic_phase_formula(xi: f64, xi1: f64, xi2: f64, xi3: f64) -> f64 {
    omega(xi) - omega(xi1) + omega(xi2) - omega(xi3)
}

/// `xi^2 - xi1^2 + xi2^2`, the quadratic phase on `xi1 > xi > 1`, `xi2 < 0`.
pub fn quadratic_phase_formula(xi: f64, xi1: f64, xi2: f64) -> f64 {
    xi * xi - xi1 * xi1 + xi2 * xi2
}

/// A right-hand side of the gauged system: `Q_+`, `Q_-`, `C_+`, `C_-` or the
/// periodic correction, as a sum of monomials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhsFamily {
    pub name: String,
    pub monomials: Vec<NonlinearTerm>,
}

const TWO_I: Complex64 = Complex64::new(0.0, 2.0);

/// `2i xi xi1 V(xi1) conj V(xi2)` on `xi < 0`: the piece `-2i P_-(conj V V_x)_x`.
pub fn quad_conj_term(output: Region) -> NonlinearTerm {
    NonlinearTerm {
        name: format!("Q{}:a", sign_label(output)),
        output,
        slots: vec![Slot::plain(Region::All), Slot::conjugated(Region::All)],
        inner: None,
        multiplier: Multiplier::OutputTimesSlot { c: TWO_I, slot: 0 },
    }
}

/// `2i xi2^2 V(xi1) V(xi2)`, `xi2 < 0`: the piece `-2i V P_- V_xx`.
pub fn quad_plain_term(output: Region) -> NonlinearTerm {
    NonlinearTerm {
        name: format!("Q{}:b", sign_label(output)),
        output,
        slots: vec![Slot::plain(Region::All), Slot::plain(Region::Minus)],
        inner: None,
        multiplier: Multiplier::SlotSquared { c: TWO_I, slot: 1 },
    }
}

/// `2i eta xi3 V(xi1) conj V(xi2) V(xi3)`, `eta = xi3 - xi2 < 0`: the cubic
/// part `-2i V P_-(conj V V_x)_x`.
pub fn cubic_term(output: Region) -> NonlinearTerm {
    NonlinearTerm {
        name: format!("C{}", sign_label(output)),
        output,
        slots: vec![
            Slot::plain(Region::All),
            Slot::conjugated(Region::All),
            Slot::plain(Region::All),
        ],
        inner: Some(InnerConstraint {
            slots: vec![1, 2],
            region: Region::Minus,
        }),
        multiplier: Multiplier::InnerTimesSlot { c: TWO_I, slot: 2 },
    }
}

/// `i mu V` on the high bands (the periodic correction restricted to `|xi| > 1`).
pub fn periodization_monomial(mu: f64) -> NonlinearTerm {
    NonlinearTerm {
        name: "P".into(),
        output: Region::Hi,
        slots: vec![Slot::plain(Region::All)],
        inner: None,
        multiplier: Multiplier::Constant(Complex64::new(0.0, mu)),
    }
}

fn sign_label(r: Region) -> &'static str {
    match r {
        Region::PlusHi | Region::Plus | Region::PlusLo => "+",
        Region::MinusHi | Region::Minus | Region::MinusLo => "-",
        _ => "",
    }
}

/// The terms of the gauged system driving `V_+` and `V_-`. `mu` is the
/// periodic correction constant `||u||^2 / (8L)`; `None` leaves it out.
pub fn gauged_system(mu: Option<f64>) -> Vec<RhsFamily> {
    let mut fams = vec![
        RhsFamily {
            name: "Q+".into(),
            monomials: vec![quad_plain_term(Region::PlusHi)],
        },
        RhsFamily {
            name: "Q-".into(),
            monomials: vec![quad_conj_term(Region::MinusHi), quad_plain_term(Region::MinusHi)],
        },
        RhsFamily {
            name: "C+".into(),
            monomials: vec![cubic_term(Region::PlusHi)],
        },
        RhsFamily {
            name: "C-".into(),
            monomials: vec![cubic_term(Region::MinusHi)],
        },
    ];
    if let Some(mu) = mu {
        fams.push(RhsFamily {
            name: "P".into(),
            monomials: vec![periodization_monomial(mu)],
        });
    }
    fams
}

/// Looks up a family of [`gauged_system`] by name (`Q+`, `Q-`, `C+`, `C-`).
pub fn family(name: &str) -> Result<RhsFamily> {
    gauged_system(None)
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown term '{name}'")))
}
