use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::japanese;

const LOW_BAND_EDGE: f64 = 1.0;
const EDGE_TOL: f64 = 1e-12;

/// Frequency regions used by the projections. `Lo` is `|xi| <= 1` (the
/// endpoints belong to the low band), `Hi` its complement, `Plus`/`Minus`
/// the strict half lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    All,
    Plus,
    Minus,
    Lo,
    Hi,
    PlusHi,
    MinusHi,
    PlusLo,
    MinusLo,
}

impl Region {
    pub fn contains(self, xi: f64) -> bool {
        let lo = xi.abs() <= LOW_BAND_EDGE + EDGE_TOL;
        match self {
            Region::All => true,
            Region::Plus => xi > 0.0,
            Region::Minus => xi < 0.0,
            Region::Lo => lo,
            Region::Hi => !lo,
            Region::PlusHi => xi > 0.0 && !lo,
            Region::MinusHi => xi < 0.0 && !lo,
            Region::PlusLo => xi > 0.0 && lo,
            Region::MinusLo => xi < 0.0 && lo,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::All => "all",
            Region::Plus => "+",
            Region::Minus => "-",
            Region::Lo => "lo",
            Region::Hi => "hi",
            Region::PlusHi => "+hi",
            Region::MinusHi => "-hi",
            Region::PlusLo => "+lo",
            Region::MinusLo => "-lo",
        }
    }

    /// Region seen through complex conjugation `f -> conj(f)`, which reflects
    /// frequencies.
    pub fn reflected(self) -> Self {
        match self {
            Region::Plus => Region::Minus,
            Region::Minus => Region::Plus,
            Region::PlusHi => Region::MinusHi,
            Region::MinusHi => Region::PlusHi,
            Region::PlusLo => Region::MinusLo,
            Region::MinusLo => Region::PlusLo,
            r => r,
        }
    }
}

impl std::str::FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "all" => Region::All,
            "+" => Region::Plus,
            "-" => Region::Minus,
            "lo" => Region::Lo,
            "hi" => Region::Hi,
            "+hi" => Region::PlusHi,
            "-hi" => Region::MinusHi,
            "+lo" => Region::PlusLo,
            "-lo" => Region::MinusLo,
            other => return Err(format!("unknown region '{other}'")),
        })
    }
}

/// Fourier multipliers acting on the frequency lattice.
#[derive(Clone, Debug, PartialEq)]
pub enum Symbol {
    /// `-i sgn(xi)`
    Hilbert,
    /// `i xi`
    Derivative,
    /// `1/(i xi)` off the origin, `0` at the origin.
    Antiderivative,
    /// `<xi>^s`
    JapanesePower(f64),
    /// Solution propagator `exp(-i t |xi| xi)` of the linear flow.
    Propagator(f64),
    Indicator(Region),
    /// Values tabulated on a specific lattice, in lattice order.
    Table(Vec<Complex64>),
}

impl Symbol {
    pub fn eval(&self, xi: f64) -> Complex64 {
        match self {
            Symbol::Hilbert => {
                if xi == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -xi.signum())
                }
            }
            Symbol::Derivative => Complex64::new(0.0, xi),
            Symbol::Antiderivative => {
                if xi == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -1.0 / xi)
                }
            }
            Symbol::JapanesePower(s) => Complex64::new(japanese(xi).powf(*s), 0.0),
            Symbol::Propagator(t) => Complex64::from_polar(1.0, -t * omega(xi)),
            Symbol::Indicator(r) => {
                if r.contains(xi) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Symbol::Table(_) => panic!("tabulated symbols are evaluated by index"),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Symbol::Hilbert => "hilbert".into(),
            Symbol::Derivative => "derivative".into(),
            Symbol::Antiderivative => "antiderivative".into(),
            Symbol::JapanesePower(s) => format!("japanese-power({s})"),
            Symbol::Propagator(t) => format!("propagator({t})"),
            Symbol::Indicator(r) => format!("indicator({})", r.label()),
            Symbol::Table(_) => "table".into(),
        }
    }
}

/// Benjamin-Ono dispersion relation `|xi| xi`.
pub fn omega(xi: f64) -> f64 {
    xi.abs() * xi
}
