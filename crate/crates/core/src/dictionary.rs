//! Fixed dictionary of bounded-Lipschitz test functions.
//!
//! Sixteen functions on the real line, each with `sup|g| + Lip(g) <= 1`, so
//! every member lies in the unit ball of the bounded-Lipschitz norm. They
//! act on a point through its leading coordinate (see
//! [`TestFunction::eval_point`]), which is a 1-Lipschitz projection.

use serde::{Deserialize, Serialize};

use crate::point::Point;

pub const DICTIONARY_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// `clamp(slope·(x − center), −bound, bound)`
    ClippedLinear { center: f64, slope: f64, bound: f64 },
    /// `height·exp(−(x − center)²/(2·width²))`
    GaussianBump { center: f64, width: f64, height: f64 },
    /// `amp·sin(freq·clamp(x, −window, window))`
    WindowedSine { freq: f64, amp: f64, window: f64 },
    /// `amp·cos(freq·clamp(x, −window, window))`
    WindowedCosine { freq: f64, amp: f64, window: f64 },
    /// `value` everywhere; not part of the dictionary.
    Constant(f64),
}

const SINE_WINDOW: f64 = 4.0;

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::ClippedLinear { center, slope, bound } => {
                (slope * (x - center)).clamp(-bound, bound)
            }
            TestFunction::GaussianBump { center, width, height } => {
                let z = (x - center) / width;
                height * (-0.5 * z * z).exp()
            }
            TestFunction::WindowedSine { freq, amp, window } => {
                amp * (freq * x.clamp(-window, window)).sin()
            }
            TestFunction::WindowedCosine { freq, amp, window } => {
                amp * (freq * x.clamp(-window, window)).cos()
            }
            TestFunction::Constant(c) => c,
        }
    }

    /// Applies the function to a point's leading coordinate (symbol index
    /// for symbols).
    pub fn eval_point(&self, p: &Point) -> f64 {
        self.eval(p.lead())
    }

    /// `(sup|g|, Lip(g))` in closed form.
    pub fn bl_parts(&self) -> (f64, f64) {
        match *self {
            TestFunction::ClippedLinear { slope, bound, .. } => (bound, slope.abs()),
            TestFunction::GaussianBump { width, height, .. } => {
                (height.abs(), height.abs() / (width * std::f64::consts::E.sqrt()))
            }
            TestFunction::WindowedSine { freq, amp, .. }
            | TestFunction::WindowedCosine { freq, amp, .. } => (amp.abs(), (amp * freq).abs()),
            TestFunction::Constant(c) => (c.abs(), 0.0),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            TestFunction::ClippedLinear { center, .. } => format!("clipped-linear({center})"),
            TestFunction::GaussianBump { center, .. } => format!("gaussian-bump({center})"),
            TestFunction::WindowedSine { freq, .. } => format!("windowed-sine({freq})"),
            TestFunction::WindowedCosine { freq, .. } => format!("windowed-cosine({freq})"),
            TestFunction::Constant(c) => format!("constant({c})"),
        }
    }
}

/// The sixteen dictionary functions in a fixed order.
pub fn dictionary() -> [TestFunction; DICTIONARY_SIZE] {
    let bump_height = 1.0 / (1.0 + (-0.5f64).exp());
    let lin = |center| TestFunction::ClippedLinear { center, slope: 0.5, bound: 0.5 };
    let bump = |center| TestFunction::GaussianBump { center, width: 1.0, height: bump_height };
    let sine = |freq: f64| TestFunction::WindowedSine { freq, amp: 1.0 / (1.0 + freq), window: SINE_WINDOW };
    let cosine =
        |freq: f64| TestFunction::WindowedCosine { freq, amp: 1.0 / (1.0 + freq), window: SINE_WINDOW };
    [
        lin(-2.0),
        lin(-1.0),
        lin(0.0),
        lin(1.0),
        lin(2.0),
        bump(-2.5),
        bump(-1.5),
        bump(-0.5),
        bump(0.5),
        bump(1.5),
        bump(2.5),
        sine(0.5),
        sine(1.0),
        sine(2.0),
        cosine(0.5),
        cosine(1.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_lies_in_unit_bl_ball() {
        for g in dictionary() {
            let (sup, lip) = g.bl_parts();
            assert!(sup + lip <= 1.0 + 1e-12, "{} has BL norm {}", g.name(), sup + lip);
        }
    }

    #[test]
    fn closed_form_bounds_hold_on_a_grid() {
        for g in dictionary() {
            let (sup, lip) = g.bl_parts();
            let h = 1e-3;
            let mut x = -8.0;
            while x < 8.0 {
                let a = g.eval(x);
                let b = g.eval(x + h);
                assert!(a.abs() <= sup + 1e-12);
                assert!((b - a).abs() <= lip * h * (1.0 + 1e-9) + 1e-15);
                x += h;
            }
        }
    }
}
