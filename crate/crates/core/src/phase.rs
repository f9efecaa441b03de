//! Result record shared by the closed-form and quadrature engines.

use std::fmt;

/// How a [`PhaseResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    Quadrature,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Phase coefficients at one evaluation time.
///
/// `quartic_coefficient` is `Φ` with the `(-i/ħ)(4!/3)(β/m)(a†a)⁴(λ⁴/30)` prefactor
/// factored out for pulse trains, or the raw simplex integral otherwise.
/// `quadratic_coefficient` is `F(t)` where one is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult<T> {
    pub quadratic_coefficient: Option<T>,
    pub quartic_coefficient: T,
    pub evaluation_time: T,
    pub method: Method,
    pub error_estimate: Option<T>,
}
