//! Named drift, diffusion and force kernels.
//!
//! Each built-in is selected by a string such as `"ou(1)"` or
//! `"smoothed-coulomb(0.1)"`. Parameters in parentheses are optional where a
//! default is listed. Vector arguments are handled componentwise.
//!
//! | name                     | closed form                                |
//! |--------------------------|--------------------------------------------|
//! | drift `zero`             | `b(x, y) = 0`                              |
//! | drift `ou(θ = 1)`        | `b(x, y) = −θ x`                           |
//! | drift `linear-attraction(κ = 1)` | `b(x, y) = κ (y − x)`              |
//! | drift `tanh-attraction(κ = 1)`   | `b(x, y) = κ tanh(y − x)`          |
//! | diffusion `zero`         | `σ(x, y) = 0`                              |
//! | diffusion `constant(s)`  | `σ(x, y) = s`                              |
//! | diffusion `soft(s)`      | `σ(x, y) = s / (1 + ‖x − y‖²)`             |
//! | force `zero`             | `F(r) = 0`                                 |
//! | force `tanh-attraction(κ = 1)` | `F(r) = −κ tanh(r)`                  |
//! | force `smoothed-coulomb(ε)`    | `F(r) = r / (‖r‖² + ε²)^{3/2}`       |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Drift {
    Zero,
    Ou(f64),
    LinearAttraction(f64),
    TanhAttraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Diffusion {
    Zero,
    Constant(f64),
    Soft(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Force {
    Zero,
    TanhAttraction(f64),
    SmoothedCoulomb(f64),
}

/// Splits `"name(arg)"` into the name and an optional parsed argument.
fn split_call(s: &str) -> Result<(&str, Option<f64>), Error> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s, None));
    };
    let Some(inner) = s[open + 1..].strip_suffix(')') else {
        return Err(Error::Config(format!("unbalanced parentheses in {s:?}")));
    };
    let arg: f64 = inner
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad numeric parameter {inner:?} in {s:?}")))?;
    if !arg.is_finite() {
        return Err(Error::Config(format!("parameter in {s:?} is not finite")));
    }
    Ok((s[..open].trim(), Some(arg)))
}

fn required(name: &str, arg: Option<f64>) -> Result<f64, Error> {
    arg.ok_or_else(|| Error::Config(format!("{name} needs a parameter, e.g. {name}(1)")))
}

fn no_arg(name: &str, arg: Option<f64>) -> Result<(), Error> {
    match arg {
        Some(_) => Err(Error::Config(format!("{name} takes no parameter"))),
        None => Ok(()),
    }
}

impl Drift {
    /// `b(x, y)` for one coordinate.
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::Ou(theta) => -theta * x,
            Drift::LinearAttraction(k) => k * (y - x),
            Drift::TanhAttraction(k) => k * (y - x).tanh(),
        }
    }

    /// Writes `b(x, ·) = a + c·y` as `(a, c)` when the drift is affine in
    /// `y`, so the mean-field sum reduces to the empirical mean.
    pub fn affine_in_y(&self, x: f64) -> Option<(f64, f64)> {
        match *self {
            Drift::Zero => Some((0.0, 0.0)),
            Drift::Ou(theta) => Some((-theta * x, 0.0)),
            Drift::LinearAttraction(k) => Some((-k * x, k)),
            Drift::TanhAttraction(_) => None,
        }
    }
}

impl Diffusion {
    /// `σ(x, y)` for coordinate vectors.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Diffusion::Zero => 0.0,
            Diffusion::Constant(s) => s,
            Diffusion::Soft(s) => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                s / (1.0 + r2)
            }
        }
    }

    /// Upper bound on `|σ|`.
    pub fn sup(&self) -> f64 {
        match *self {
            Diffusion::Zero => 0.0,
            Diffusion::Constant(s) | Diffusion::Soft(s) => s.abs(),
        }
    }
}

impl Force {
    /// Writes `F(r)` into `out`.
    #[inline]
    pub fn eval(&self, r: &[f64], out: &mut [f64]) {
        match *self {
            Force::Zero => out.fill(0.0),
            Force::TanhAttraction(k) => {
                for (o, x) in out.iter_mut().zip(r) {
                    *o = -k * x.tanh();
                }
            }
            Force::SmoothedCoulomb(eps) => {
                let r2: f64 = r.iter().map(|x| x * x).sum();
                let s = (r2 + eps * eps).powf(-1.5);
                for (o, x) in out.iter_mut().zip(r) {
                    *o = x * s;
                }
            }
        }
    }
}

impl FromStr for Drift {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let (name, arg) = split_call(s)?;
        match name {
            "zero" => no_arg(name, arg).map(|_| Drift::Zero),
            "ou" => Ok(Drift::Ou(arg.unwrap_or(1.0))),
            "linear-attraction" => Ok(Drift::LinearAttraction(arg.unwrap_or(1.0))),
            "tanh-attraction" => Ok(Drift::TanhAttraction(arg.unwrap_or(1.0))),
            _ => Err(Error::Config(format!(
                "unknown drift {name:?} (expected zero, ou, linear-attraction, tanh-attraction)"
            ))),
        }
    }
}

impl FromStr for Diffusion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let (name, arg) = split_call(s)?;
        match name {
            "zero" => no_arg(name, arg).map(|_| Diffusion::Zero),
            "constant" => required(name, arg).map(Diffusion::Constant),
            "soft" => required(name, arg).map(Diffusion::Soft),
            _ => Err(Error::Config(format!("unknown diffusion {name:?} (expected zero, constant, soft)"))),
        }
    }
}

impl FromStr for Force {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let (name, arg) = split_call(s)?;
        match name {
            "zero" => no_arg(name, arg).map(|_| Force::Zero),
            "tanh-attraction" => Ok(Force::TanhAttraction(arg.unwrap_or(1.0))),
            "smoothed-coulomb" => {
                let eps = required(name, arg)?;
                if eps <= 0.0 {
                    return Err(Error::Config("smoothed-coulomb needs ε > 0".into()));
                }
                Ok(Force::SmoothedCoulomb(eps))
            }
            _ => Err(Error::Config(format!(
                "unknown force {name:?} (expected zero, tanh-attraction, smoothed-coulomb)"
            ))),
        }
    }
}

impl fmt::Display for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => write!(f, "zero"),
            Drift::Ou(t) => write!(f, "ou({t:?})"),
            Drift::LinearAttraction(k) => write!(f, "linear-attraction({k:?})"),
            Drift::TanhAttraction(k) => write!(f, "tanh-attraction({k:?})"),
        }
    }
}

impl fmt::Display for Diffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffusion::Zero => write!(f, "zero"),
            Diffusion::Constant(s) => write!(f, "constant({s:?})"),
            Diffusion::Soft(s) => write!(f, "soft({s:?})"),
        }
    }
}

impl fmt::Display for Force {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Force::Zero => write!(f, "zero"),
            Force::TanhAttraction(k) => write!(f, "tanh-attraction({k:?})"),
            Force::SmoothedCoulomb(e) => write!(f, "smoothed-coulomb({e:?})"),
        }
    }
}

macro_rules! string_conversions {
    ($($t:ty),*) => {$(
        impl TryFrom<String> for $t {
            type Error = Error;
            fn try_from(s: String) -> Result<Self, Error> {
                s.parse()
            }
        }
        impl From<$t> for String {
            fn from(k: $t) -> String {
                k.to_string()
            }
        }
    )*};
}
string_conversions!(Drift, Diffusion, Force);
